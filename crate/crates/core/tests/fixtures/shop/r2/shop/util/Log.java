package shop.util;

public final class Log {
    private Log() {
    }

    public static void info(String message) {
        System.out.println(message);
    }

    public static String format(int amount) {
        return "$" + amount;
    }
}
