package demo.init;

import java.util.HashMap;
import java.util.Map;

public abstract class Initializers {
    static final Map<String, Integer> TABLE = new HashMap<>();

    static {
        TABLE.put("a", 1);
    }

    {
        TABLE.put("b", 2);
    }

    abstract void hook(int a);

    native long nativeCall(byte[] data);

    protected void concrete() {
        hook(TABLE.size());
    }
}
