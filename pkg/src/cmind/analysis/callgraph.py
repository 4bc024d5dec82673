"""Name-based callgraph construction.

An edge ``(A, B)`` exists when the body of ``A`` contains a call-shaped
``B(`` outside comments and literals and ``B`` names an indexed function.
There is no pointer or indirect-call analysis.

"""
import logging
from dataclasses import dataclass, field

import networkx as nx
import pandas as pd

from ..parsing.lexer import call_sites

logger = logging.getLogger("cmind.analysis.callgraph")


@dataclass(frozen=True)
class CallGraph:
    """Caller/callee relation between the functions of an index.

    Nodes are qualified function names. `unresolved_calls` holds
    ``(caller, identifier)`` pairs for call-shaped heads that name no
    indexed function (library calls, macros, member function pointers).
    """

    nodes: frozenset = frozenset()
    edges: frozenset = frozenset()
    unresolved_calls: frozenset = frozenset()
    _digraph: object = field(default=None, repr=False, compare=False)

    @property
    def digraph(self):
        """The graph as a :class:`networkx.DiGraph` (built once)."""
        if self._digraph is None:
            graph = nx.DiGraph()
            graph.add_nodes_from(sorted(self.nodes))
            graph.add_edges_from(sorted(self.edges))
            object.__setattr__(self, '_digraph', graph)
        return self._digraph

    def callees(self, name):
        return sorted(self.digraph.successors(name)) if name in self.nodes else []

    def callers(self, name):
        return sorted(self.digraph.predecessors(name)) if name in self.nodes else []

    def to_frame(self):
        """Return the edge list as a DataFrame with ``caller``/``callee`` columns."""
        return pd.DataFrame(sorted(self.edges), columns=['caller', 'callee'])

    def render_edges(self):
        """Return the edge list as text, one ``caller -> callee`` per line."""
        return '\n'.join('{} -> {}'.format(a, b) for a, b in sorted(self.edges))


def resolve_callee(index, identifier):
    """Return the qualified names an identifier in call position may refer to."""
    targets = index.by_name.get(identifier, ())
    return sorted({fd.qualified_name for fd in targets})


def build_callgraph(index):
    """Build the callgraph of every function in an index.

    Parameters
    ----------
    index : FunctionIndex
        Extracted functions; their bodies are scanned after the opening brace.

    Returns
    -------
    graph : CallGraph

    """
    nodes = set()
    edges = set()
    unresolved = set()
    for fd in index:
        nodes.add(fd.qualified_name)
        code = fd.masked[fd.brace_offset:]
        for _, identifier in call_sites(code):
            targets = resolve_callee(index, identifier)
            if not targets:
                unresolved.add((fd.qualified_name, identifier))
            for target in targets:
                edges.add((fd.qualified_name, target))

    logger.info("callgraph: %i nodes, %i edges, %i unresolved calls",
                len(nodes), len(edges), len(unresolved))
    return CallGraph(frozenset(nodes), frozenset(edges), frozenset(unresolved))
