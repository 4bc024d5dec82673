"""Verbatim code blocks for prompts.

Every block text is cut from the loaded source tree, never produced by a
model; :func:`verify_verbatim` re-checks this before a prompt is sent.

"""
import re
import logging
from dataclasses import dataclass

from ..parsing.source import lookup_function, lookup_file, AmbiguousBasename

logger = logging.getLogger("cmind.analysis.codeblocks")

DEFAULT_CODE_BUDGET = 24000
TRUNCATION_MARKER = '[truncated]'

_PATH_LIKE_RE = re.compile(r'(/|\.[A-Za-z0-9_+-]+$)')


class LeashViolation(AssertionError):
    """A code block is not a verbatim substring of its source file."""


@dataclass(frozen=True)
class CodeBlock:
    label: str
    text: str
    file_path: str
    start_line: int
    end_line: int
    truncated: bool = False

    def render(self):
        return '[{}] {}:{}-{}\n```c\n{}\n```'.format(
            self.label, self.file_path, self.start_line, self.end_line, self.text)


@dataclass(frozen=True)
class CodeBlockSet:
    """Ordered, deduplicated code blocks bounded by a character budget.

    Attributes
    ----------
    blocks : tuple of CodeBlock
        Blocks in request order.
    absent : tuple of str
        Requested names or paths that matched nothing.
    truncated : bool
        True when the budget cut a block short or dropped trailing blocks.

    """

    blocks: tuple = ()
    absent: tuple = ()
    truncated: bool = False

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self):
        return len(self.blocks)

    @property
    def labels(self):
        return [block.label for block in self.blocks]

    @property
    def size(self):
        return sum(len(block.text) for block in self.blocks)

    def render(self):
        """Render as labelled fenced sections; the marker line is not source text."""
        parts = [block.render() for block in self.blocks]
        if self.truncated:
            parts.append(TRUNCATION_MARKER)
        return '\n\n'.join(parts)


def _is_path(item):
    return '::' not in item and _PATH_LIKE_RE.search(item) is not None


def _candidates(index, item):
    if _is_path(item):
        try:
            source_file = lookup_file(index.tree, item)
        except AmbiguousBasename as ex:
            logger.warning("ambiguous file request %s: %s", item, ex)
            return []
        if source_file is None:
            return []
        content = source_file.content
        last = content.count('\n') + (0 if content.endswith('\n') else 1)
        return [CodeBlock(source_file.path, content, source_file.path, 1, max(last, 1))]
    return [CodeBlock(fd.qualified_name, fd.body, fd.file_path, fd.start_line, fd.end_line)
            for fd in lookup_function(index, item)]


def _cut_at_line(text, limit):
    kept = []
    used = 0
    for line in text.split('\n'):
        cost = len(line) + (1 if kept else 0)
        if used + cost > limit:
            break
        kept.append(line)
        used += cost
    return '\n'.join(kept), len(kept)


def collect_code_blocks(index, names_or_paths, budget=DEFAULT_CODE_BUDGET):
    """Collect verbatim code for function names and file paths.

    Parameters
    ----------
    index : FunctionIndex
        Index (and, through ``index.tree``, the source tree) to read from.
    names_or_paths : list of str
        Function names add every matching definition; path-like items add
        the whole file.
    budget : int
        Maximum total characters of block text.

    Returns
    -------
    blocks : CodeBlockSet
        Deduplicated by label and span; tail blocks are cut at a line
        boundary or dropped once the budget is spent.

    """
    pending = []
    seen = set()
    absent = []
    for item in names_or_paths:
        found = _candidates(index, item)
        if not found:
            absent.append(item)
        for block in found:
            key = (block.label, block.file_path, block.start_line, block.end_line)
            if key not in seen:
                seen.add(key)
                pending.append(block)

    kept = []
    remaining = budget
    truncated = False
    for block in pending:
        if len(block.text) <= remaining:
            kept.append(block)
            remaining -= len(block.text)
            continue
        truncated = True
        text, nlines = _cut_at_line(block.text, remaining)
        if nlines and text.strip():
            kept.append(CodeBlock(block.label, text, block.file_path, block.start_line,
                                  block.start_line + nlines - 1, truncated=True))
        break

    if truncated:
        logger.info("code blocks truncated at %i characters", budget)
    return CodeBlockSet(tuple(kept), tuple(absent), truncated)


def verify_verbatim(blocks, tree):
    """Check that every block text is a substring of its source file.

    Raises
    ------
    LeashViolation
        Naming every offending block.

    """
    offending = []
    for block in blocks:
        source_file = tree.get(block.file_path)
        if source_file is None or block.text not in source_file.content:
            offending.append(block.label)
    if offending:
        raise LeashViolation("code not found verbatim in the source tree: {}".format(
            ', '.join(offending)))
    return True
