/* actreach-plan v1
 * hook Lcom/acme/notes/ExportBaseActivity; checkSdCardMissing()Z false
 * intent Lcom/acme/notes/SdCardExportActivity;
 * launch true
 */
Java.perform(function () {
    var C0 = Java.use('com.acme.notes.ExportBaseActivity');
    C0['checkSdCardMissing'].overload().implementation = function () {
        return false;
    };
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
