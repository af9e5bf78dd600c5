package shop;

import shop.util.Log;

public class Checkout {
    private final Cart cart;

    public Checkout(Cart cart) {
        this.cart = cart;
    }

    public int pay() {
        int amount = cart.total();
        Log.info("paid " + amount);
        return amount;
    }

    static class Receipt {
        int amount;

        String render() {
            return Log.format(amount);
        }
    }
}
