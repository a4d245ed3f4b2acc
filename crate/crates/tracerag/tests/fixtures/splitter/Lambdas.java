package demo.lambda;

import java.util.List;
import java.util.function.Supplier;

public class Lambdas {
    static final Supplier<String> S = () -> {
        return "s";
    };

    void each(List<String> xs) {
        xs.forEach(x -> {
            if (x.isEmpty()) { return; }
            System.out.println(x);
        });
        Runnable r = () -> { };
        r.run();
    }

    Supplier<Integer> make(int base) {
        return () -> base + 1;
    }
}
