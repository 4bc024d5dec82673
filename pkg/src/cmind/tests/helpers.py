"""Helpers shared by the test modules."""
import io
import tarfile
import zipfile


def write_tree(root, files):
    """Write ``{relative path: text}`` below `root` and return its str path."""
    for rel, text in files.items():
        target = root.joinpath(*rel.split('/'))
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    return str(root)


def zip_bytes(files):
    """Return a zip archive of ``{name: text}`` as bytes."""
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, 'w') as zf:
        for name, text in files.items():
            zf.writestr(name, text)
    return buffer.getvalue()


def tar_bytes(files, mode='w:gz'):
    """Return a tar (or tar.gz) archive of ``{name: text}`` as bytes."""
    buffer = io.BytesIO()
    with tarfile.open(fileobj=buffer, mode=mode) as tf:
        for name, text in files.items():
            data = text.encode('utf-8')
            info = tarfile.TarInfo(name)
            info.size = len(data)
            tf.addfile(info, io.BytesIO(data))
    return buffer.getvalue()
