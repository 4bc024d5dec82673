"""Collection of utilities for reading source archives.

Archives are recognised by their leading bytes rather than by their file
extension, since uploaded snapshots frequently arrive with generic names.

"""
import os
import posixpath
import tarfile
import zipfile

# bounds on what a single source snapshot may contain
MAX_ARCHIVE_BYTES = 256 * 1024 * 1024
MAX_FILES = 50000


class UnsupportedArchive(ValueError):
    """Input file is neither a directory nor a zip/tar/tar.gz archive."""


class ArchiveTraversal(ValueError):
    """An archive entry would be placed outside of the extraction root."""


class ArchiveTooLarge(ValueError):
    """An archive exceeds the configured size or file-count limits."""


def sniff_archive(head):
    """Return the archive format of a file given its leading bytes.

    Parameters
    ----------
    head : bytes
        At least the first 262 bytes of the file (fewer is allowed for
        short files).

    Returns
    -------
    str or None
        One of ``'zip'``, ``'tar.gz'``, ``'tar'``; ``None`` if the bytes
        match no supported format.

    """
    if head[:4] in (b'PK\x03\x04', b'PK\x05\x06'):
        return 'zip'
    if head[:2] == b'\x1f\x8b':
        return 'tar.gz'
    if head[257:262] == b'ustar':
        return 'tar'
    return None


def normalize_member(name):
    """Return the normalized relative path of an archive entry.

    Raises :exc:`ArchiveTraversal` for absolute names and for names that
    climb out of the root after normalization.
    """
    cleaned = name.replace('\\', '/')
    if cleaned.startswith('/') or (len(cleaned) > 1 and cleaned[1] == ':'):
        raise ArchiveTraversal("archive entry {!r} is an absolute path".format(name))
    normalized = posixpath.normpath(cleaned)
    if normalized == '..' or normalized.startswith('../'):
        raise ArchiveTraversal("archive entry {!r} escapes the archive root".format(name))
    if normalized == '.':
        return ''
    return normalized


def _check_limits(count, total, max_files, max_bytes, label):
    if count > max_files:
        raise ArchiveTooLarge("{} holds more than {} files".format(label, max_files))
    if total > max_bytes:
        raise ArchiveTooLarge("{} expands to more than {} bytes".format(label, max_bytes))


def _read_zip(filename, max_files, max_bytes):
    with zipfile.ZipFile(filename) as zf:
        infos = zf.infolist()
        regular = []
        for info in infos:
            member = normalize_member(info.filename)
            if info.is_dir() or not member:
                continue
            # symbolic links are stored with S_IFLNK in the upper attribute bits
            if (info.external_attr >> 16) & 0o170000 == 0o120000:
                continue
            regular.append((member, info))
        _check_limits(len(regular), sum(i.file_size for _, i in regular),
                      max_files, max_bytes, filename)
        return [(member, zf.read(info)) for member, info in regular]


def _read_tar(filename, max_files, max_bytes, mode):
    with tarfile.open(filename, mode) as tf:
        members = tf.getmembers()
        regular = []
        for info in members:
            member = normalize_member(info.name)
            if info.isfile() and member:
                regular.append((member, info))
        _check_limits(len(regular), sum(i.size for _, i in regular),
                      max_files, max_bytes, filename)
        entries = []
        for member, info in regular:
            stream = tf.extractfile(info)
            entries.append((member, stream.read() if stream is not None else b''))
        return entries


def read_archive(filename, max_files=MAX_FILES, max_bytes=MAX_ARCHIVE_BYTES):
    """Return the regular files of an archive as ``(path, bytes)`` pairs.

    Supports zip, tar and gzip-compressed tar archives, detected by magic
    bytes. Directory entries and links are skipped. Any entry escaping the
    archive root rejects the whole archive.

    Parameters
    ----------
    filename : str
        Path to the archive.
    max_files : int
        Maximum number of regular files.
    max_bytes : int
        Maximum archive size, and maximum total uncompressed size.

    Returns
    -------
    list of (str, bytes)
        Normalized relative paths with raw file contents.

    """
    if os.path.getsize(filename) > max_bytes:
        raise ArchiveTooLarge("{} is larger than {} bytes".format(filename, max_bytes))

    with open(filename, 'rb') as f:
        head = f.read(512)

    # reader for each type of archive
    readers = {'zip': lambda: _read_zip(filename, max_files, max_bytes),
               'tar': lambda: _read_tar(filename, max_files, max_bytes, 'r:'),
               'tar.gz': lambda: _read_tar(filename, max_files, max_bytes, 'r:gz')}

    kind = sniff_archive(head)
    if kind is None:
        raise UnsupportedArchive("{} is not a zip, tar or tar.gz archive".format(filename))

    try:
        return readers[kind]()
    except (tarfile.TarError, zipfile.BadZipFile, EOFError, OSError) as ex:
        raise UnsupportedArchive("cannot read {} as {}: {}".format(filename, kind, ex))
