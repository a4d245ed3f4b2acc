package demo.strings;

public class Strings {
    static final String OPEN = "{";
    static final char CLOSE = '}';

    String braces() {
        return "{ not a block } " + '{' + "\"}\"";
    }

    String block() {
        return """
            class Fake {
                void notAMethod() { }
            }
            """;
    }

    // void commented() { }
    /* void alsoCommented() { } */
    int real() { return '}' + 1; }
}
