/* actreach-plan v1
 * intent Lcom/acme/notes/NoteDetailActivity;
 * extra note_id int 1
 * launch true
 */
Java.perform(function () {
    function launchTarget() {
        var ActivityThread = Java.use('android.app.ActivityThread');
        var Intent = Java.use('android.content.Intent');
        var context = ActivityThread.currentApplication().getApplicationContext();
        var intent = Intent.$new();
        intent.setClassName(context, 'com.acme.notes.NoteDetailActivity');
        intent.addFlags(0x10000000);
        intent.putExtra.overload('java.lang.String', 'int').call(intent, 'note_id', 1);
        context.startActivity(intent);
    }
    Java.scheduleOnMainThread(launchTarget);
});
