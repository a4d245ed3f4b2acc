package demo.enums;

public enum EnumBodies {
    ALPHA {
        @Override
        int weight() { return 1; }
    },
    BETA(5) {
        @Override
        int weight() { return base * 2; }
    },
    GAMMA(9);

    protected final int base;

    EnumBodies() { this(0); }

    EnumBodies(int base) { this.base = base; }

    int weight() { return base; }

    static EnumBodies parse(String s) {
        return valueOf(s.toUpperCase());
    }
}
