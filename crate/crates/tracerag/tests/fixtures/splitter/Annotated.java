package demo.annotated;

import android.annotation.SuppressLint;

public class Annotated extends android.app.Activity {
    @Deprecated
    private String legacy;

    @Override
    protected void onCreate(android.os.Bundle state) {
        super.onCreate(state);
    }

    @SuppressLint({"HardwareIds", "MissingPermission"})
    @SuppressWarnings(value = {"unchecked"})
    public String deviceId(@Deprecated final android.content.Context ctx) {
        return "id";
    }

    @Target(value = {ElementType.METHOD})
    int annotatedWithArray() { return 1; }
}
