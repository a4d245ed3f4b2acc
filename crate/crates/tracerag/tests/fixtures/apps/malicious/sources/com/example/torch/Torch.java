package com.example.torch;

import android.content.Context;
import android.hardware.camera2.CameraAccessException;
import android.hardware.camera2.CameraManager;

public final class Torch {
    private Torch() {
    }

    public static void set(Context context, boolean enabled) {
        CameraManager cm = (CameraManager) context.getSystemService(Context.CAMERA_SERVICE);
        try {
            String id = cm.getCameraIdList()[0];
            cm.setTorchMode(id, enabled);
        } catch (CameraAccessException e) {
            e.printStackTrace();
        }
    }
}
