/* actreach-plan v1
 * intent Lcom/acme/notes/SdCardExportActivity;
 * launch true
 */
Java.perform(function () {
    function launchTarget() {
        var ActivityThread = Java.use('android.app.ActivityThread');
        var Intent = Java.use('android.content.Intent');
        var context = ActivityThread.currentApplication().getApplicationContext();
        var intent = Intent.$new();
        intent.setClassName(context, 'com.acme.notes.SdCardExportActivity');
        intent.addFlags(0x10000000);
        context.startActivity(intent);
    }
    Java.scheduleOnMainThread(launchTarget);
});
