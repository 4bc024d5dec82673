"""Parsers for the reply formats the prompts ask for.

Leniency is limited to what models actually vary: labels are matched
case-insensitively with free whitespace and optional square brackets around
values. Anything else is a :class:`ResponseFormatError`.

"""
import re
import logging
from dataclasses import dataclass

from ..analysis.chains import parse_call_chain, MalformedChain

logger = logging.getLogger("cmind.prompts.grammar")

MAX_ENTRY_POINTS = 3

FORWARD_REASONING = 'forward_reasoning'
BACKWARD_REASONING = 'backward_reasoning'
CODE_COMPREHENSION = 'code_comprehension'
STRATEGIES = (FORWARD_REASONING, BACKWARD_REASONING, CODE_COMPREHENSION)

_NONE_VALUES = frozenset(['none', 'n/a', 'na', 'nothing', 'null', '-', ''])

_ENTRY_RE = re.compile(
    r'\b(METHOD|FILE)\s*:\s*(\d+)\s*\.\s*'
    r'(\[[^\]\n]*\]|(?:(?!(?:METHOD|FILE)\s*:)[^\s\[\],;])+)',
    re.IGNORECASE)
_DATAFLOW_RE = re.compile(
    r'data\s*flow\s*analysis\s*:?\s*source\s*:\s*\[?\s*([^\[\]\s,;]+)\s*\]?[\s,;]*'
    r'sink\s*:\s*\[?\s*([^\[\]\s,;]+)\s*\]?',
    re.IGNORECASE)
_CALLGRAPH_RE = re.compile(r'call\s*graph', re.IGNORECASE)
_PATH_ITEM_RE = re.compile(r'\bpath\s*:\s*\d+\s*\.', re.IGNORECASE)
_REASONER_LABEL_RE = re.compile(
    r'(?:(?P<strategy>REASONING\s+METHODS?)|(?P<steps>REASONING\s+STEPS?)'
    r'|(?P<missing>METHODS?\s+MISSING)|(?P<hypothesis>HYPOTHESIS))\s*\**\s*:',
    re.IGNORECASE)
_STRATEGY_RE = re.compile(r'\b(forward|backward|comprehension)\b', re.IGNORECASE)
_NAME_RE = re.compile(r'^~?[A-Za-z_][\w:~]*$')
_PAREN_NOTE_RE = re.compile(r'\([^()]*[^()\s][^()]*\)')


class ResponseFormatError(ValueError):
    """A model reply does not follow the requested format."""


class NoEntryPoints(ResponseFormatError):
    """The entry reply names no method and no file."""


class UnparseableChoice(ResponseFormatError):
    """The analysis-choice reply names neither analysis."""


class UnparseableReasoning(ResponseFormatError):
    """The reasoner reply has neither a hypothesis nor a missing-method request."""


@dataclass(frozen=True)
class BugReport:
    text: str

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("empty bug report")

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class EntryPoints:
    methods: tuple = ()
    files: tuple = ()

    def to_dict(self):
        return {'methods': list(self.methods), 'files': list(self.files)}


@dataclass(frozen=True)
class AnalysisChoice:
    kind: str
    source: str = None
    sink: str = None

    def __post_init__(self):
        if self.kind not in ('callgraph', 'dataflow'):
            raise ValueError("unknown analysis kind {!r}".format(self.kind))
        if self.kind == 'dataflow' and not (self.source and self.sink):
            raise ValueError("dataflow needs a source and a sink")


@dataclass(frozen=True)
class ReasonerOutput:
    strategy: str
    steps: str
    hypothesis: str
    missing_methods: tuple = ()


def _unbracket(value):
    value = value.strip().strip('*').strip()
    if value.startswith('[') and value.endswith(']'):
        value = value[1:-1].strip()
    return value


def _clean_name(value):
    value = _unbracket(value).rstrip('.,;:').strip('`\'"').rstrip('.,;:')
    while value.endswith('()'):
        value = value[:-2].rstrip()
    return value


def parse_entry_response(text):
    """Parse ``METHOD:n.value`` and ``FILE:n.value`` tokens.

    Parameters
    ----------
    text : str
        Model reply; prose and newlines around the tokens are ignored.

    Returns
    -------
    EntryPoints
        At most three methods and three files, in index order, without
        ``NONE`` values or ``()`` suffixes.

    Raises
    ------
    NoEntryPoints
        Neither list holds a value.

    """
    found = {'method': [], 'file': []}
    for match in _ENTRY_RE.finditer(text):
        key, number, value = match.group(1).lower(), int(match.group(2)), match.group(3)
        if not 1 <= number <= MAX_ENTRY_POINTS:
            continue
        value = _clean_name(value) if key == 'method' else _unbracket(value).rstrip('.,;:')
        if value.lower() in _NONE_VALUES:
            continue
        found[key].append((number, value))

    def ordered(pairs):
        names = []
        for _, value in sorted(pairs, key=lambda pair: pair[0]):
            if value not in names:
                names.append(value)
        return tuple(names[:MAX_ENTRY_POINTS])

    entry = EntryPoints(ordered(found['method']), ordered(found['file']))
    if not entry.methods and not entry.files:
        raise NoEntryPoints("no METHOD or FILE value in reply")
    return entry


def parse_analysis_choice(text):
    """Parse the analysis choice.

    Returns
    -------
    AnalysisChoice
        ``dataflow`` with source and sink when the reply follows
        ``data flow analysis: source:[X] sink:[Y]``, else ``callgraph`` when it
        mentions a call graph.

    Raises
    ------
    UnparseableChoice

    """
    match = _DATAFLOW_RE.search(text)
    if match:
        source, sink = _clean_name(match.group(1)), _clean_name(match.group(2))
        if source and sink:
            return AnalysisChoice('dataflow', source, sink)
    if _CALLGRAPH_RE.search(text):
        return AnalysisChoice('callgraph')
    raise UnparseableChoice("reply names neither data flow nor call graph analysis")


def parse_chain_selection(text, offered, warnings=None):
    """Parse ``path: n.<chain>`` items and keep the offered ones.

    A selection is kept when it equals an offered chain or is a contiguous
    piece of one. Others are dropped with a warning; when nothing is left the
    first offered chain is returned.

    Parameters
    ----------
    text : str
        Model reply.
    offered : list of CallChain
        Chains shown in the prompt; must not be empty.
    warnings : list, optional
        Receives one message per dropped selection.

    Returns
    -------
    list of CallChain

    """
    if not offered:
        raise ValueError("no chains offered")
    if warnings is None:
        warnings = []
    first_new = len(warnings)

    markers = list(_PATH_ITEM_RE.finditer(text))
    selected = []
    for k, marker in enumerate(markers):
        end = markers[k + 1].start() if k + 1 < len(markers) else len(text)
        item = text[marker.end():end].strip().split('\n', 1)[0]
        item = _unbracket(item).rstrip('.,;')
        try:
            chain = parse_call_chain(item)
        except MalformedChain as ex:
            warnings.append("dropped malformed chain selection: {}".format(ex))
            continue
        if not any(candidate.contains(chain) for candidate in offered):
            warnings.append("dropped chain not offered: {}".format(item))
            continue
        if chain not in selected:
            selected.append(chain)

    if not selected:
        warnings.append("no valid chain selected; using the first offered chain")
        selected = [offered[0]]
    for message in warnings[first_new:]:
        logger.warning(message)
    return selected


def _labelled_fields(text):
    matches = list(_REASONER_LABEL_RE.finditer(text))
    fields = {}
    for k, match in enumerate(matches):
        label = match.lastgroup
        if label in fields:
            continue
        end = matches[k + 1].start() if k + 1 < len(matches) else len(text)
        fields[label] = _unbracket(text[match.end():end])
    return fields


def normalize_strategy(value):
    """Map free text to one of :data:`STRATEGIES` by keyword, or None."""
    match = _STRATEGY_RE.search(value or '')
    if match is None:
        return None
    return {'forward': FORWARD_REASONING, 'backward': BACKWARD_REASONING,
            'comprehension': CODE_COMPREHENSION}[match.group(1).lower()]


def split_missing_methods(value):
    """Split a METHOD MISSING value into deduplicated function names."""
    if value is None or value.strip().strip('.').lower() in _NONE_VALUES:
        return ()
    if value.strip().lower().startswith('none'):
        return ()
    value = _PAREN_NOTE_RE.sub(' ', value)
    names = []
    for token in re.split(r'[,\s;]+', value):
        name = _clean_name(token)
        if name and _NAME_RE.match(name) and name.lower() not in _NONE_VALUES \
                and name.lower() != 'and' and name not in names:
            names.append(name)
    return tuple(names)


def parse_reasoner_response(text):
    """Parse the four labelled reasoner fields.

    Returns
    -------
    ReasonerOutput
        `strategy` is None when the REASONING METHODS value names no known
        strategy; `missing_methods` is empty when the field is absent.

    Raises
    ------
    UnparseableReasoning
        No hypothesis and no requested method.

    """
    fields = _labelled_fields(text)
    if 'hypothesis' not in fields and 'missing' not in fields:
        raise UnparseableReasoning("reply has neither Hypothesis nor METHOD MISSING")
    missing = split_missing_methods(fields.get('missing'))
    hypothesis = fields.get('hypothesis', '')
    if not missing and not hypothesis:
        raise UnparseableReasoning("reply has an empty hypothesis and requests nothing")
    return ReasonerOutput(normalize_strategy(fields.get('strategy')),
                          fields.get('steps', ''), hypothesis, missing)
