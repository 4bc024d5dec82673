"""Call chains: bounded enumeration, arrow rendering and parsing.

Forward chains follow caller -> callee edges and render as ``a -> b -> c``;
backward chains follow callee <- caller edges and render as ``d <- c <- a``.

"""
import re
import logging
from dataclasses import dataclass

logger = logging.getLogger("cmind.analysis.chains")

FORWARD = 'forward'
BACKWARD = 'backward'
ARROWS = {FORWARD: ' -> ', BACKWARD: ' <- '}

DEFAULT_MAX_DEPTH = 8
DEFAULT_MAX_CHAINS = 100

_SPLIT_RE = re.compile(r'\s*(->|<-)\s*')


class UnknownRoot(KeyError):
    """A chain root is not a function of the callgraph."""


class MalformedChain(ValueError):
    """Chain text mixes arrow directions or has empty segments."""


@dataclass(frozen=True)
class CallChain:
    """A simple path through the callgraph.

    A single-node chain carries no direction and is always ``forward``.
    """

    functions: tuple
    direction: str = FORWARD

    def __post_init__(self):
        if not self.functions:
            raise ValueError("a call chain holds at least one function")
        if self.direction not in ARROWS:
            raise ValueError("unknown chain direction {!r}".format(self.direction))
        object.__setattr__(self, 'functions', tuple(self.functions))
        if len(self.functions) == 1:
            object.__setattr__(self, 'direction', FORWARD)

    def __len__(self):
        return len(self.functions)

    def contains(self, other):
        """True if `other` equals this chain or is a contiguous piece of it."""
        if other.direction != self.direction and len(other) > 1:
            return False
        size = len(other)
        return any(self.functions[k:k + size] == other.functions
                   for k in range(len(self.functions) - size + 1))


class CallChains(list):
    """List of :class:`CallChain` that remembers whether it was capped."""

    def __init__(self, chains=(), truncated=False):
        super(CallChains, self).__init__(chains)
        self.truncated = truncated


def enumerate_call_chains(graph, roots, direction=FORWARD, max_depth=DEFAULT_MAX_DEPTH,
                          max_chains=DEFAULT_MAX_CHAINS):
    """Enumerate all simple paths from each root, up to `max_depth` functions.

    Parameters
    ----------
    graph : CallGraph
        Graph to walk.
    roots : list of str
        Starting functions (qualified names).
    direction : {'forward', 'backward'}
        Follow callees (forward) or callers (backward).
    max_depth : int
        Maximum number of functions in a chain; at least 1.
    max_chains : int
        Result cap; the returned list has ``truncated=True`` when hit.

    Returns
    -------
    chains : CallChains
        In lexicographic order of the function-name sequences.

    Raises
    ------
    UnknownRoot
        A root is neither a node nor a caller of an unresolved call.

    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    if direction not in ARROWS:
        raise ValueError("unknown chain direction {!r}".format(direction))

    callers = {caller for caller, _ in graph.unresolved_calls}
    for root in roots:
        if root not in graph.nodes and root not in callers:
            raise UnknownRoot(root)

    step = graph.callees if direction == FORWARD else graph.callers
    chains = CallChains()

    # depth-first with sorted neighbours yields lexicographic order directly
    def walk(path):
        if len(chains) > max_chains:
            return
        chains.append(CallChain(tuple(path), direction))
        if len(path) == max_depth:
            return
        for nxt in step(path[-1]):
            if nxt not in path:
                path.append(nxt)
                walk(path)
                path.pop()

    for root in sorted(set(roots)):
        walk([root])

    if len(chains) > max_chains:
        del chains[max_chains:]
        chains.truncated = True
        logger.warning("call chain enumeration capped at %i chains", max_chains)
    return chains


def render_call_chain(chain):
    """Render a chain with ``->`` (forward) or ``<-`` (backward) separators."""
    return ARROWS[chain.direction].join(chain.functions)


def _clean_segment(segment):
    segment = segment.strip().strip('`').strip()
    while segment.endswith('()'):
        segment = segment[:-2].rstrip()
    return segment


def parse_call_chain(text):
    """Parse arrow-separated chain text back into a :class:`CallChain`.

    Spacing around arrows is free and a ``()`` suffix on names is stripped.

    Raises
    ------
    MalformedChain
        Mixed arrow directions, or an empty segment.

    """
    parts = _SPLIT_RE.split(text.strip())
    names = [_clean_segment(p) for p in parts[0::2]]
    arrows = set(parts[1::2])
    if len(arrows) > 1:
        raise MalformedChain("mixed arrows in chain {!r}".format(text))
    if any(not name or ' ' in name for name in names):
        raise MalformedChain("empty or invalid segment in chain {!r}".format(text))
    direction = BACKWARD if arrows == {'<-'} else FORWARD
    return CallChain(tuple(names), direction)
