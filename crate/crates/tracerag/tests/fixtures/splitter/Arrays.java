package demo.arrays;

public class Arrays {
    int[] data = {1, 2, 3};
    String[][] grid = new String[][] { {"a"}, {"b"} };

    int[] copy(int[] src, int len) {
        int[] out = new int[] {0, 0};
        System.arraycopy(src, 0, out, 0, len);
        return out;
    }

    public static void main(String args[]) {
        char[] cs = {'{', '}'};
    }

    byte[][] matrix(byte[]... rows) { return rows; }
}
