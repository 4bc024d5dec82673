"""Loading of C source trees and extraction of function definitions.

Extraction is lexical-structural rather than a full C grammar: comments,
literals and preprocessor lines are masked, ``name(params) {`` heads are
recognised at brace depth 0 and the definition is captured through the
matching closing brace. Both branches of preprocessor conditionals are
scanned as plain text.

"""
import os
import re
import posixpath
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType

import pandas as pd

from .lexer import (mask_source, line_of, matching_close, matching_open,
                    CONTROL_KEYWORDS, MACRO_RE)
from .util import read_archive, MAX_FILES, MAX_ARCHIVE_BYTES, ArchiveTooLarge

logger = logging.getLogger("cmind.parsing.source")

LANGUAGE_TAGS = {'.c': 'c_source', '.h': 'c_header', '.hpp': 'c_header'}

_TRAILER_RE = re.compile(r'(?:\s*\b(?:const|noexcept|override|final|volatile)\b)+\s*$')
_DECLARATOR_RE = re.compile(r'((?:[A-Za-z_]\w*\s*::\s*)*~?[A-Za-z_]\w*)\s*$')
_TRANSPARENT_RE = re.compile(r'(?:\bextern\s*"[^"\n]*"|\bnamespace\b[\w\s:]*)\s*$')
_ATTRIBUTE_RE = re.compile(r'\b__attribute__\s*$')


class PathNotFound(FileNotFoundError):
    """The source path handed to :func:`load_source_tree` does not exist."""


class AmbiguousBasename(LookupError):
    """A basename lookup matched more than one file of the tree."""


def language_tag(path):
    """Return ``'c_source'``, ``'c_header'`` or ``'other'`` for a file path."""
    return LANGUAGE_TAGS.get(posixpath.splitext(path)[1], 'other')


def decode_lossy(data):
    """Decode raw bytes as UTF-8, replacing malformed sequences."""
    return data.decode('utf-8', errors='replace')


@dataclass(frozen=True)
class SourceFile:
    """A single file of a source tree."""

    path: str
    content: str
    language_tag: str

    @property
    def lines(self):
        return self.content.split('\n')


@dataclass(frozen=True)
class SourceTree:
    """An immutable, path-ordered collection of :class:`SourceFile`."""

    root_label: str
    files: tuple

    def __post_init__(self):
        paths = [f.path for f in self.files]
        if paths != sorted(set(paths)):
            raise ValueError("source tree paths must be unique and sorted")
        for path in paths:
            if (path.startswith('/') or path in ('', '.')
                    or '..' in path.split('/') or posixpath.normpath(path) != path):
                raise ValueError("source tree path {!r} is not normalized".format(path))

    def __iter__(self):
        return iter(self.files)

    def __len__(self):
        return len(self.files)

    @property
    def paths(self):
        return [f.path for f in self.files]

    def get(self, path):
        """Return the file with exactly this relative path, or ``None``."""
        for source_file in self.files:
            if source_file.path == path:
                return source_file
        return None


@dataclass(frozen=True)
class FunctionDef:
    """A function definition extracted verbatim from a source file.

    `body` holds the complete lines ``start_line..end_line``; `text` and
    `masked` hold the exact definition span (from the first token of the
    declaration to the closing brace), the latter with comments, literals
    and directives blanked.
    """

    name: str
    qualified_name: str
    file_path: str
    start_line: int
    end_line: int
    body: str
    text: str = field(repr=False)
    masked: str = field(repr=False)
    brace_offset: int = field(repr=False)

    def line_at(self, offset):
        """Return the file line number of an offset into `text`."""
        return self.start_line + self.text.count('\n', 0, offset)

    def source_line(self, lineno):
        """Return the verbatim file line `lineno` (must lie in the span)."""
        return self.body.split('\n')[lineno - self.start_line]

    @property
    def parameters(self):
        """Names of the declared parameters, in order."""
        head = _strip_trailer(self.masked[:self.brace_offset])
        close = head.rfind(')')
        if close < 0:
            return []
        open_ = matching_open(head, close)
        names = []
        for chunk in head[open_ + 1:close].split(','):
            chunk = re.sub(r'\[[^\]]*\]', '', chunk).strip()
            idents = re.findall(r'[A-Za-z_]\w*', chunk)
            if not idents or idents == ['void'] or chunk == '...':
                continue
            # function pointer parameter: int (*cb)(int)
            pointer = re.search(r'\(\s*\*\s*([A-Za-z_]\w*)\s*\)', chunk)
            names.append(pointer.group(1) if pointer else idents[-1])
        return names


def _def_key(fd):
    return (fd.file_path, fd.start_line, fd.qualified_name)


class FunctionIndex(object):
    """Searchable, immutable index of the functions of a :class:`SourceTree`.

    Parameters
    ----------
    tree : SourceTree
        Tree the functions were extracted from.
    functions : iterable of FunctionDef
        Extracted definitions.
    warnings : iterable of str
        Extraction warnings, ``path:line: message``.

    Attributes
    ----------
    by_name : mapping
        Name (and qualified name, where different) to tuple of FunctionDef.
    by_file : mapping
        Relative path to tuple of FunctionDef, in file order.

    """

    def __init__(self, tree, functions, warnings=()):
        self.tree = tree
        self.functions = tuple(sorted(functions, key=_def_key))
        self.warnings = tuple(warnings)

        by_name = defaultdict(list)
        by_file = defaultdict(list)
        for fd in self.functions:
            by_file[fd.file_path].append(fd)
            by_name[fd.name].append(fd)
            if fd.qualified_name != fd.name:
                by_name[fd.qualified_name].append(fd)

        self.by_name = MappingProxyType({k: tuple(v) for k, v in by_name.items()})
        self.by_file = MappingProxyType({k: tuple(v) for k, v in by_file.items()})

    def __eq__(self, other):
        if not isinstance(other, FunctionIndex):
            return NotImplemented
        return (self.tree == other.tree and self.functions == other.functions
                and self.warnings == other.warnings)

    def __len__(self):
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def to_frame(self):
        """Return the index as a DataFrame, one row per definition."""
        return pd.DataFrame(
            [(fd.qualified_name, fd.name, fd.file_path, fd.start_line, fd.end_line)
             for fd in self.functions],
            columns=['qualified_name', 'name', 'file_path', 'start_line', 'end_line'])


def _walk_directory(root, max_files, max_bytes):
    entries = []
    total = 0
    for dirpath, dirnames, filenames in os.walk(root, followlinks=False):
        dirnames.sort()
        for filename in sorted(filenames):
            full = os.path.join(dirpath, filename)
            if os.path.islink(full) or not os.path.isfile(full):
                continue
            rel = os.path.relpath(full, root).replace(os.sep, '/')
            with open(full, 'rb') as f:
                data = f.read()
            total += len(data)
            entries.append((rel, data))
            if len(entries) > max_files or total > max_bytes:
                raise ArchiveTooLarge("{} exceeds {} files or {} bytes".format(
                    root, max_files, max_bytes))
    return entries


def _strip_common_root(entries):
    """Drop a single top-level directory shared by every entry."""
    tops = {path.split('/', 1)[0] for path, _ in entries}
    if len(tops) != 1 or any('/' not in path for path, _ in entries):
        return None, entries
    top = tops.pop()
    return top, [(path.split('/', 1)[1], data) for path, data in entries]


def load_source_tree(path, max_files=MAX_FILES, max_bytes=MAX_ARCHIVE_BYTES):
    """Load a C source tree from a directory or an archive file.

    Parameters
    ----------
    path : str
        Directory, or zip/tar/tar.gz archive (detected by magic bytes).
    max_files : int
        Maximum number of regular files accepted.
    max_bytes : int
        Maximum archive (or total directory) size in bytes.

    Returns
    -------
    tree : SourceTree
        Every regular file below the root, ordered by relative path.

    Raises
    ------
    PathNotFound
        `path` does not exist.
    UnsupportedArchive
        `path` is a file but not a supported archive.
    ArchiveTraversal
        An archive entry escapes the root; the whole archive is rejected.

    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise PathNotFound("no such file or directory: {}".format(path))

    if os.path.isdir(path):
        label = os.path.basename(os.path.abspath(path))
        entries = _walk_directory(path, max_files, max_bytes)
    else:
        top, entries = _strip_common_root(read_archive(path, max_files, max_bytes))
        label = top or os.path.basename(path)

    files = {}
    for rel, data in entries:
        if rel in files:
            logger.warning("duplicate entry %s in %s; keeping the first", rel, path)
            continue
        files[rel] = SourceFile(rel, decode_lossy(data), language_tag(rel))

    return SourceTree(label, tuple(files[rel] for rel in sorted(files)))


def _strip_trailer(head):
    """Drop qualifiers and ``__attribute__((...))`` groups after the parameter list."""
    core = head.rstrip()
    while True:
        trailer = _TRAILER_RE.search(core)
        if trailer:
            core = core[:trailer.start()].rstrip()
        if not core.endswith(')'):
            return core
        open_ = matching_open(core, len(core) - 1)
        attribute = _ATTRIBUTE_RE.search(core, 0, open_) if open_ >= 0 else None
        if attribute is None:
            return core
        core = core[:attribute.start()].rstrip()


def _function_head(head):
    """Return ``(qualified_name, name)`` if masked `head` ends a function declarator."""
    core = _strip_trailer(head)
    if not core.endswith(')'):
        return None
    open_ = matching_open(core, len(core) - 1)
    if open_ < 0:
        return None
    before = core[:open_]
    declarator = _DECLARATOR_RE.search(before)
    if not declarator:
        return None
    qualified = re.sub(r'\s+', '', declarator.group(1))
    name = qualified.rsplit('::', 1)[-1]
    if name in CONTROL_KEYWORDS or '=' in before:
        return None
    return qualified, name


def _extract_file(source_file):
    text = source_file.content
    masked = mask_source(text)
    path = source_file.path
    functions = []
    warnings = ["{}:{}: function-like macro {} not indexed".format(
        path, line_of(text, m.start()), m.group(1)) for m in MACRO_RE.finditer(text)]

    lines = text.split('\n')
    head_start = 0
    transparent = 0
    i = 0
    n = len(masked)
    while i < n:
        c = masked[i]
        if c == ';':
            head_start = i + 1
        elif c == '}':
            if transparent:
                transparent -= 1
            else:
                warnings.append("{}:{}: unmatched closing brace".format(path, line_of(text, i)))
            head_start = i + 1
        elif c == '{':
            head = masked[head_start:i]
            if _TRANSPARENT_RE.search(head):
                transparent += 1
                head_start = i + 1
                i += 1
                continue
            end = matching_close(masked, i)
            if end < 0:
                warnings.append("{}:{}: unbalanced braces, rest of file skipped".format(
                    path, line_of(text, i)))
                break
            found = _function_head(head)
            if found:
                start = head_start + (len(head) - len(head.lstrip()))
                start_line = line_of(text, start)
                end_line = line_of(text, end)
                functions.append(FunctionDef(
                    name=found[1],
                    qualified_name=found[0],
                    file_path=path,
                    start_line=start_line,
                    end_line=end_line,
                    body='\n'.join(lines[start_line - 1:end_line]),
                    text=text[start:end + 1],
                    masked=masked[start:end + 1],
                    brace_offset=i - start))
            elif not head.strip():
                warnings.append("{}:{}: block without a function head not indexed "
                                "(K&R-style definition?)".format(path, line_of(text, i)))
            head_start = end + 1
            i = end + 1
            continue
        i += 1
    return functions, warnings


def extract_functions(tree):
    """Return the :class:`FunctionIndex` of every top-level function definition.

    Only ``c_source`` and ``c_header`` files are scanned. Files that cannot
    be fully extracted contribute warnings, never errors.

    Parameters
    ----------
    tree : SourceTree
        Tree to index.

    Returns
    -------
    index : FunctionIndex
        Definitions searchable by name and by file.

    """
    functions = []
    warnings = []
    for source_file in tree:
        if source_file.language_tag == 'other':
            continue
        found, problems = _extract_file(source_file)
        functions.extend(found)
        warnings.extend(problems)

    for problem in warnings:
        logger.debug(problem)
    logger.info("indexed %i functions in %i files of %s", len(functions),
                len(tree), tree.root_label)
    return FunctionIndex(tree, functions, warnings)


def lookup_function(index, name):
    """Return the definitions matching `name`.

    Exact name (or qualified name) matches win; otherwise qualified names
    ending in ``::name`` are returned, so ``Init`` finds
    ``ApplicationAudioCaptureToolbar::Init``.

    Parameters
    ----------
    index : FunctionIndex
        Index to search.
    name : str
        Function name; a trailing ``()`` is ignored.

    Returns
    -------
    list of FunctionDef
        Ordered by file path, then start line. Empty if nothing matches.

    """
    name = name.strip()
    if name.endswith('()'):
        name = name[:-2].rstrip()
    found = index.by_name.get(name, ())
    if not found:
        suffix = '::' + name
        found = [fd for fd in index.functions if fd.qualified_name.endswith(suffix)]
    return sorted(set(found), key=_def_key)


def lookup_file(tree, path):
    """Return the file at relative `path`, falling back to a unique basename.

    Parameters
    ----------
    tree : SourceTree
        Tree to search.
    path : str
        Relative path as given by a user or a model.

    Returns
    -------
    SourceFile or None

    Raises
    ------
    AmbiguousBasename
        The basename fallback matched more than one file.

    """
    cleaned = path.strip().replace('\\', '/')
    while cleaned.startswith('./'):
        cleaned = cleaned[2:]
    exact = tree.get(cleaned)
    if exact is not None:
        return exact

    base = posixpath.basename(cleaned)
    candidates = [f for f in tree if posixpath.basename(f.path) == base]
    if len(candidates) > 1:
        raise AmbiguousBasename("{} matches {}".format(
            path, ', '.join(f.path for f in candidates)))
    return candidates[0] if candidates else None
