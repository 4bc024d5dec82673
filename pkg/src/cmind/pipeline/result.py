"""Run state, audit trace and result types of the localization pipeline."""
import json
import hashlib
from dataclasses import dataclass, field, asdict, is_dataclass

from ..llm.gateway import LlmConfig
from ..analysis.chains import CallChain, render_call_chain, DEFAULT_MAX_CHAINS
from ..analysis.codeblocks import CodeBlockSet, DEFAULT_CODE_BUDGET
from ..prompts.grammar import EntryPoints, MAX_ENTRY_POINTS

COMPLETED = 'completed'
INCONCLUSIVE = 'inconclusive'
FAILED = 'failed'
STATUSES = (COMPLETED, INCONCLUSIVE, FAILED)


def digest(value):
    """Short sha256 of the JSON form of `value`."""
    text = json.dumps(_plain(value), sort_keys=True, default=str)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:16]


def _plain(value):
    if isinstance(value, CallChain):
        return render_call_chain(value)
    if isinstance(value, CodeBlockSet):
        return [[b.label, b.file_path, b.start_line, b.end_line] for b in value.blocks]
    if is_dataclass(value) and not isinstance(value, type):
        return asdict(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass(frozen=True)
class TraceExchange:
    stage: str
    prompt: str
    response: str
    parsed: object = field(default=None, compare=False)
    summary: str = ''


@dataclass(frozen=True)
class ToolEvent:
    tool: str
    inputs_digest: str
    outputs_digest: str


class ReasoningTrace(object):
    """Append-only record of every model exchange and tool call of a run."""

    def __init__(self):
        self._exchanges = []
        self._tool_events = []

    @property
    def exchanges(self):
        return tuple(self._exchanges)

    @property
    def tool_events(self):
        return tuple(self._tool_events)

    def add_exchange(self, stage, prompt, response, parsed=None):
        if isinstance(parsed, str) or parsed is None:
            summary = parsed or ''
        else:
            summary = json.dumps(_plain(parsed), sort_keys=True)
        exchange = TraceExchange(stage, prompt, response, parsed, summary)
        self._exchanges.append(exchange)
        return exchange

    def add_tool_event(self, tool, inputs, outputs):
        event = ToolEvent(tool, digest(inputs), digest(outputs))
        self._tool_events.append(event)
        return event

    def prompts(self, stage=None):
        return [e.prompt for e in self._exchanges if stage is None or e.stage == stage]

    def to_list(self):
        return [{'stage': e.stage, 'prompt': e.prompt, 'response': e.response,
                 'parsed': e.summary} for e in self._exchanges]


@dataclass
class PipelineConfig:
    """Bounds of one pipeline run.

    Parameters
    ----------
    max_iterations : int
        Maximum reasoner calls.
    max_chain_depth : int
        Maximum functions per enumerated call chain.
    code_budget : int
        Character budget of each code block set placed in a prompt.
    max_entry_points : int
        Fixed at 3.
    max_chains : int
        Maximum chains offered for selection.
    max_reasks : int
        Re-asks per stage after an unparseable reply.
    llm : LlmConfig

    """

    max_iterations: int = 5
    max_chain_depth: int = 8
    code_budget: int = DEFAULT_CODE_BUDGET
    max_entry_points: int = MAX_ENTRY_POINTS
    max_chains: int = DEFAULT_MAX_CHAINS
    max_reasks: int = 2
    llm: LlmConfig = field(default_factory=LlmConfig)

    def validate(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.max_entry_points != MAX_ENTRY_POINTS:
            raise ValueError("max_entry_points is fixed at {}".format(MAX_ENTRY_POINTS))
        for name in ('max_chain_depth', 'code_budget'):
            if getattr(self, name) < 1:
                raise ValueError("{} must be at least 1".format(name))
        if self.max_reasks < 0:
            raise ValueError("max_reasks must not be negative")
        return self


@dataclass
class AgentState:
    """Mutable state threaded through the stages of one run."""

    report: object
    tree: object
    index: object
    entry: EntryPoints = None
    entry_functions: list = field(default_factory=list)
    block_requests: list = field(default_factory=list)
    known_blocks: CodeBlockSet = field(default_factory=CodeBlockSet)
    choice: object = None
    graph: object = None
    chains: list = field(default_factory=list)
    dataflow: list = field(default_factory=list)
    callmethods: object = field(default_factory=CodeBlockSet)
    callmethod_names: list = field(default_factory=list)
    path_to_explore: str = ''
    iteration: int = 0
    fulfilled_requests: set = field(default_factory=set)
    status: str = COMPLETED
    warnings: list = field(default_factory=list)
    trace: ReasoningTrace = field(default_factory=ReasoningTrace)

    def warn(self, message, logger=None):
        self.warnings.append(message)
        if logger is not None:
            logger.warning(message)


@dataclass
class LocalizationResult:
    status: str
    hypothesis: str = ''
    strategy: str = None
    reasoning_steps: str = ''
    summary: str = ''
    entry: EntryPoints = None
    analysis_kind: str = None
    selected_chains: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    failure_reason: str = None
    trace: ReasoningTrace = field(default_factory=ReasoningTrace)
    id: str = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError("unknown status {!r}".format(self.status))
        if self.status == COMPLETED and not (self.hypothesis and self.summary):
            raise ValueError("a completed result needs a hypothesis and a summary")

    def to_dict(self):
        data = {
            'status': self.status,
            'hypothesis': self.hypothesis,
            'strategy': self.strategy,
            'reasoning_steps': self.reasoning_steps,
            'summary': self.summary,
            'entry_points': self.entry.to_dict() if self.entry else None,
            'analysis_kind': self.analysis_kind,
            'selected_chains': list(self.selected_chains),
            'warnings': list(self.warnings),
            'failure_reason': self.failure_reason,
            'trace': self.trace.to_list(),
            'tool_events': [asdict(e) for e in self.trace.tool_events],
        }
        if self.id is not None:
            data['id'] = self.id
        return data

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)
