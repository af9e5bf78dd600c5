package shop;

import java.util.ArrayList;
import java.util.List;

public class Cart implements Priced {
    private List<Item> items = new ArrayList<>();
    private Discount discount;

    public void add(Item item) {
        items.add(item);
    }

    public int total() {
        int sum = 0;
        for (Item item : items) {
            sum += item.getPrice();
        }
        return discount.apply(sum);
    }

    public int size() {
        return items.size();
    }
}
