package a.b;

public final class c {
    private static String a;
    private final int b = 7;

    /* JADX WARNING: Removed duplicated region for block: B:12:0x0031 */
    public static String a(String str) {
        int i = 0;
        StringBuilder sb = new StringBuilder();
        while (true) {
            if (i >= str.length()) {
                return sb.toString();
            }
            sb.append((char) (str.charAt(i) ^ 23));
            i++;
        }
    }

    public static void a(int i, int i2) {
        label_0:
        for (int i3 = 0; i3 < i; i3++) {
            if (i3 == i2) {
                break label_0;
            }
        }
    }

    private int b() {
        return this.b;
    }

    static void c$d(Object obj) {
        synchronized (obj) {
            obj.notify();
        }
    }
}
