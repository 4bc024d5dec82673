"""Lexical helpers shared by function extraction and the analyses.

Everything here works on *masked* source: a copy of the text of the same
length in which comments, the interior of string and character literals, and
preprocessor lines are replaced by spaces. Newlines are kept, so offsets and
line numbers in masked text are valid in the original text.

"""
import re

# heads that look like calls but never are
CONTROL_KEYWORDS = frozenset([
    'if', 'while', 'for', 'switch', 'sizeof', 'return', 'do', 'else', 'case',
    'goto', 'typeof', '__typeof__', 'alignof', '_Alignof', '__alignof__',
    'offsetof', '_Generic', '_Static_assert', 'static_assert', 'defined',
    '__attribute__', '__declspec', '__asm__', 'asm', 'decltype', 'alignas',
    'noexcept', 'catch', 'new', 'delete', 'throw',
])

CALL_RE = re.compile(r'(?<!\w)((?:[A-Za-z_]\w*::)*(?:(?<=::)~)?[A-Za-z_]\w*)\s*\(')
MACRO_RE = re.compile(r'^[ \t]*#[ \t]*define[ \t]+([A-Za-z_]\w*)\(', re.MULTILINE)


def _blank(out, text, start, end):
    for k in range(start, end):
        if text[k] != '\n':
            out[k] = ' '


def _preprocessor_end(text, start):
    """Return the offset of the newline ending a (possibly continued) directive."""
    n = len(text)
    pos = start
    while True:
        end = text.find('\n', pos)
        if end < 0:
            return n
        if text[pos:end].rstrip('\r').endswith('\\'):
            pos = end + 1
            continue
        return end


def mask_source(text):
    """Blank comments, literal contents and preprocessor lines.

    Parameters
    ----------
    text : str
        C source text.

    Returns
    -------
    str
        Text of identical length with only code characters and newlines
        left in place. Quote characters of literals are kept so that
        literals stay visible as ``" "`` tokens.

    """
    out = list(text)
    n = len(text)
    i = 0
    line_start = True
    while i < n:
        c = text[i]
        if c == '\n':
            line_start = True
            i += 1
            continue
        if c in ' \t\r\f\v':
            i += 1
            continue
        if line_start and c == '#':
            end = _preprocessor_end(text, i)
            _blank(out, text, i, end)
            i = end
            continue
        line_start = False
        nxt = text[i + 1] if i + 1 < n else ''
        if c == '/' and nxt == '*':
            end = text.find('*/', i + 2)
            end = n if end < 0 else end + 2
            _blank(out, text, i, end)
            i = end
        elif c == '/' and nxt == '/':
            end = text.find('\n', i)
            end = n if end < 0 else end
            _blank(out, text, i, end)
            i = end
        elif c in '"\'':
            j = i + 1
            while j < n and text[j] != c and text[j] != '\n':
                j += 2 if text[j] == '\\' else 1
            j = min(j, n)
            _blank(out, text, i + 1, j)
            i = j + 1 if j < n and text[j] == c else j
        else:
            i += 1
    return ''.join(out)


def line_of(text, offset):
    """Return the 1-based line number of `offset` in `text`."""
    return text.count('\n', 0, offset) + 1


def matching_close(masked, open_at, opener='{', closer='}'):
    """Return the offset of the bracket closing the one at `open_at`, or -1."""
    depth = 0
    for k in range(open_at, len(masked)):
        ch = masked[k]
        if ch == opener:
            depth += 1
        elif ch == closer:
            depth -= 1
            if depth == 0:
                return k
    return -1


def matching_open(masked, close_at, opener='(', closer=')'):
    """Return the offset of the bracket opening the one at `close_at`, or -1."""
    depth = 0
    for k in range(close_at, -1, -1):
        ch = masked[k]
        if ch == closer:
            depth += 1
        elif ch == opener:
            depth -= 1
            if depth == 0:
                return k
    return -1


def call_sites(masked):
    """Yield ``(offset, identifier)`` for every call-shaped ``name(`` in masked text.

    Control keywords are skipped; qualified names keep their ``::``.
    """
    for match in CALL_RE.finditer(masked):
        name = match.group(1)
        if name.rsplit('::', 1)[-1] in CONTROL_KEYWORDS:
            continue
        yield match.start(1), name
