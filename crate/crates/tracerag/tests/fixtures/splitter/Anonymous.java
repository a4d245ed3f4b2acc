package demo.anon;

import java.util.Comparator;

public class Anonymous {
    private final Runnable field = new Runnable() {
        @Override
        public void run() { System.out.println("field"); }
    };

    private final Comparator<String> byLength = (a, b) -> {
        return Integer.compare(a.length(), b.length());
    };

    void spawn() {
        new Thread(new Runnable() {
            @Override
            public void run() { work(); }
        }).start();
    }

    void local() {
        class Helper {
            int help() { return 1; }
        }
        new Helper().help();
    }

    void work() { }
}
