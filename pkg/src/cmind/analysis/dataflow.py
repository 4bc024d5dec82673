"""Intraprocedural def-use tracing from a source function to a sink call.

Within the body of the source function, parameters and variables assigned
from a call are seeds. Assignments propagate the seed to their left-hand
side; a plain re-assignment kills it. A path is reported when a seeded
variable reaches an argument of a call to the sink, or, when the sink is the
source function itself, when it is dereferenced or indexed.

"""
import re
import logging
from dataclasses import dataclass

from ..parsing.lexer import CALL_RE, CONTROL_KEYWORDS, matching_close
from ..parsing.source import lookup_function

logger = logging.getLogger("cmind.analysis.dataflow")

DEFAULT_MAX_PATHS = 10

_ASSIGN_RE = re.compile(
    r'(?<![\w.])(?<!->)([A-Za-z_]\w*)\s*(?:\[[^\]=]*\]\s*)*(?:<<|>>|[-+*/%&|^])?=(?!=)')
_WORD_RE = re.compile(r'(?<![\w.])(?<!->)[A-Za-z_]\w*')


class SourceNotFound(KeyError):
    """The dataflow source function is not in the index."""


@dataclass(frozen=True)
class Hop:
    """One step of a dataflow path."""

    file_path: str
    line: int
    code: str
    note: str

    def render(self):
        return '{}:{}: {}'.format(self.file_path, self.line, self.code.strip())


@dataclass(frozen=True)
class DataflowPath:
    """Ordered hops from a seed definition in `source_fn` to a use at `sink_fn`."""

    source_fn: str
    sink_fn: str
    steps: tuple

    def render(self):
        """Render as one ``file:line: code`` line per hop."""
        lines = ['{} -> {}'.format(self.source_fn, self.sink_fn)]
        lines.extend('  ' + hop.render() for hop in self.steps)
        return '\n'.join(lines)


def _statements(fd):
    """Yield ``(offset, masked statement)`` pieces of the function body."""
    code = fd.masked
    start = fd.brace_offset + 1
    for k in range(start, len(code)):
        if code[k] in ';{}':
            piece = code[start:k]
            if piece.strip():
                lead = len(piece) - len(piece.lstrip())
                yield start + lead, piece[lead:]
            start = k + 1


def _top_level_pieces(statement):
    """Split at commas outside parentheses and brackets: declarators, comma expressions."""
    depth = 0
    start = 0
    for k, char in enumerate(statement):
        if char in '([':
            depth += 1
        elif char in ')]':
            depth -= 1
        elif char == ',' and depth == 0:
            yield statement[start:k]
            start = k + 1
    yield statement[start:]


def _call_arguments(statement, sink_names):
    """Yield the argument text of each call to one of `sink_names`."""
    for match in CALL_RE.finditer(statement):
        name = match.group(1)
        if name not in sink_names and name.rsplit('::', 1)[-1] not in sink_names:
            continue
        open_ = statement.find('(', match.end(1))
        close = matching_close(statement, open_, '(', ')')
        yield statement[open_ + 1:close if close > 0 else len(statement)]


def _has_call(expression):
    return any(m.group(1).rsplit('::', 1)[-1] not in CONTROL_KEYWORDS
               for m in CALL_RE.finditer(expression))


def _dereferenced(statement, var):
    pattern = r'(?<![\w.>])(?:{0}\s*(?:->|\[)|\*\s*{0}\b)'.format(re.escape(var))
    return re.search(pattern, statement) is not None


def _trace(fd, sink_fn, max_paths):
    sink_names = {sink_fn, sink_fn.rsplit('::', 1)[-1]}
    self_sink = fd.qualified_name == sink_fn or fd.name == sink_fn
    head_line = fd.start_line

    def hop(offset, note):
        line = fd.line_at(offset)
        return Hop(fd.file_path, line, fd.source_line(line), note)

    provenance = {}
    for param in fd.parameters:
        provenance[param] = (Hop(fd.file_path, head_line, fd.source_line(head_line),
                                 'seed: parameter {}'.format(param)),)

    paths = []
    seen = set()

    def emit(var, steps):
        key = tuple((s.line, s.note) for s in steps)
        if key in seen or len(paths) >= max_paths:
            return
        seen.add(key)
        paths.append(DataflowPath(fd.qualified_name, sink_fn, tuple(steps)))

    for offset, statement in _statements(fd):
        if provenance:
            tainted = [v for v in sorted(provenance) if v in set(_WORD_RE.findall(statement))]
            for args in _call_arguments(statement, sink_names):
                used = set(_WORD_RE.findall(args))
                for var in tainted:
                    if var in used:
                        emit(var, provenance[var] + (hop(offset, 'sink: {} receives {}'.format(
                            sink_fn, var)),))
            if self_sink:
                for var in tainted:
                    if _dereferenced(statement, var):
                        emit(var, provenance[var] + (hop(offset, 'use: {} dereferenced'.format(
                            var)),))

        for piece in _top_level_pieces(statement):
            assign = _ASSIGN_RE.search(piece)
            if not assign:
                continue
            target = assign.group(1)
            rhs = piece[assign.end():]
            sources = [v for v in sorted(provenance) if v in set(_WORD_RE.findall(rhs))]
            if sources:
                provenance[target] = provenance[sources[0]] + (hop(
                    offset, 'assign: {} from {}'.format(target, sources[0])),)
            elif _has_call(rhs):
                provenance[target] = (hop(offset, 'seed: {} assigned from a call'.format(
                    target)),)
            else:
                provenance.pop(target, None)

    return paths


def dataflow_paths(index, graph, source_fn, sink_fn, max_paths=DEFAULT_MAX_PATHS):
    """Trace intraprocedural def-use paths from `source_fn` to `sink_fn`.

    Parameters
    ----------
    index : FunctionIndex
        Index holding the source function.
    graph : CallGraph
        Callgraph of the index; paths are only searched in definitions of
        the source that call the sink (or are the sink).
    source_fn : str
        Function whose body is traced (resolved with ``lookup_function``).
    sink_fn : str
        Called function receiving the value, or `source_fn` itself.
    max_paths : int
        Maximum number of paths returned.

    Returns
    -------
    list of DataflowPath
        Ordered by definition, then by line; empty when nothing flows.

    Raises
    ------
    SourceNotFound
        `source_fn` names no indexed function.

    """
    definitions = lookup_function(index, source_fn)
    if not definitions:
        raise SourceNotFound(source_fn)

    paths = []
    for fd in definitions:
        calls_sink = any(callee == sink_fn or callee.rsplit('::', 1)[-1] == sink_fn
                         for callee in graph.callees(fd.qualified_name))
        calls_sink = calls_sink or any(
            ident == sink_fn or ident.rsplit('::', 1)[-1] == sink_fn
            for caller, ident in graph.unresolved_calls if caller == fd.qualified_name)
        is_sink = fd.qualified_name == sink_fn or fd.name == sink_fn
        if not (calls_sink or is_sink):
            continue
        paths.extend(_trace(fd, sink_fn, max_paths - len(paths)))
        if len(paths) >= max_paths:
            break

    logger.info("dataflow %s -> %s: %i paths", source_fn, sink_fn, len(paths))
    return paths
