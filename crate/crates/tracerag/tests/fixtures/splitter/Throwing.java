package demo.thr;

import java.io.IOException;

public class Throwing<E extends Exception> {
    public void a() throws IOException { }

    public <X extends Throwable> void b(java.util.function.Supplier<? extends X> s) throws X, E {
        throw s.get();
    }

    public synchronized final strictfp void c(final int... nums) throws java.lang.Exception {
        for (int n : nums) { if (n < 0) throw new Exception(); }
    }
}
