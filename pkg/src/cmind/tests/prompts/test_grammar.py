"""Tests for the reply parsers: accepted variations, rejections and fuzzing.

"""
import pytest
from hypothesis import given, settings, strategies as st

from cmind.analysis import CallChain
from cmind.analysis.chains import BACKWARD
from cmind.prompts import (BugReport, AnalysisChoice, ResponseFormatError, NoEntryPoints,
                           UnparseableChoice, UnparseableReasoning, parse_entry_response,
                           parse_analysis_choice, parse_chain_selection,
                           parse_reasoner_response)
from cmind.prompts.grammar import (FORWARD_REASONING, BACKWARD_REASONING, CODE_COMPREHENSION,
                                   normalize_strategy, split_missing_methods)

STANDARD_REASONER = (
    "REASONING METHODS: [forward reasoning]\n"
    "REASONING STEPS: [1. foo calls bar with NULL. 2. bar dereferences it.]\n"
    "Hypothesis: [The bug is in foo.]\n"
    "METHOD MISSING: [none]")


@pytest.mark.parametrize('reply,methods,files', [
    ('METHOD:1.foo FILE:1.a.c', ('foo',), ('a.c',)),
    ('METHOD:1.[foo()] FILE:1.[src/a.c]', ('foo',), ('src/a.c',)),
    ('method: 2. bar\nmethod:1.foo', ('foo', 'bar'), ()),
    ('METHOD:1.foo METHOD:2.foo METHOD:3.baz METHOD:4.qux', ('foo', 'baz'), ()),
    ('Sure! METHOD:1.NONE FILE:1.obs-module.c.', (), ('obs-module.c',)),
    ('METHOD:1.`Foo::Init`, METHOD:2.bar;', ('Foo::Init', 'bar'), ()),
    ('METHOD : 1 . foo', ('foo',), ()),
    ('METHOD:1.foo,METHOD:2.bar FILE:1.a.c', ('foo', 'bar'), ('a.c',)),
    ('METHOD:1.foo;FILE:1.src/a.c;FILE:2.NONE', ('foo',), ('src/a.c',)),
    ('METHOD:1.[ApplicationAudioCaptureToolbar::Init] FILE:1.[NONE]',
     ('ApplicationAudioCaptureToolbar::Init',), ()),
])
def test_entry_leniency(reply, methods, files):
    entry = parse_entry_response(reply)
    assert entry.methods == methods
    assert entry.files == files


@pytest.mark.parametrize('reply,expected', [
    ('data flow analysis: source:[A] sink:[B]', AnalysisChoice('dataflow', 'A', 'B')),
    ('Data Flow Analysis: Source: [ApplicationAudioCaptureToolbar::Init], '
     'Sink: [obs_module_get_locale_text]',
     AnalysisChoice('dataflow', 'ApplicationAudioCaptureToolbar::Init',
                    'obs_module_get_locale_text')),
    ('dataflow analysis source:foo sink:bar()', AnalysisChoice('dataflow', 'foo', 'bar')),
    ('I would use call graph analysis.', AnalysisChoice('callgraph')),
    ('callgraph analysis', AnalysisChoice('callgraph')),
])
def test_analysis_choice_leniency(reply, expected):
    assert parse_analysis_choice(reply) == expected


@pytest.mark.parametrize('reply,strategy,missing', [
    (STANDARD_REASONER, FORWARD_REASONING, ()),
    ('**REASONING METHOD**: backward\n**REASONING  STEPS**: 1. x\n**Hypothesis**: bug in x',
     BACKWARD_REASONING, ()),
    ('REASONING METHODS: [code comprehension]\nREASONING STEPS: [1. x]\nHypothesis: []\n'
     'METHOD MISSING: [obs_get_module(), ctx::load (from the header)]',
     CODE_COMPREHENSION, ('obs_get_module', 'ctx::load')),
    ('Hypothesis: [bug in foo] METHOD MISSING: N/A', None, ()),
    ('reasoning methods: forward\nhypothesis: foo leaks\nmethod missing: [bar, baz, bar]',
     FORWARD_REASONING, ('bar', 'baz')),
    ('REASONING METHODS: [Forward Reasoning]\nHypothesis: x\nMETHODS MISSING: None needed.',
     FORWARD_REASONING, ()),
])
def test_reasoner_leniency(reply, strategy, missing):
    output = parse_reasoner_response(reply)
    assert output.strategy == strategy
    assert output.missing_methods == missing


def test_reasoner_fields():
    output = parse_reasoner_response(STANDARD_REASONER)
    assert output.steps == '1. foo calls bar with NULL. 2. bar dereferences it.'
    assert output.hypothesis == 'The bug is in foo.'


def test_reasoner_first_label_wins():
    output = parse_reasoner_response('Hypothesis: first\nHypothesis: second')
    assert output.hypothesis == 'first'


@pytest.mark.parametrize('parse,reply,error', [
    (parse_entry_response, '', NoEntryPoints),
    (parse_entry_response, 'I would look at the module loader.', NoEntryPoints),
    (parse_entry_response, 'METHOD:1.NONE FILE:1.NONE', NoEntryPoints),
    (parse_entry_response, 'METHOD:4.foo FILE:7.bar.c', NoEntryPoints),
    (parse_entry_response, 'METHOD:1.[] FILE:1.[]', NoEntryPoints),
    (parse_analysis_choice, 'I am not sure.', UnparseableChoice),
    (parse_analysis_choice, 'data flow', UnparseableChoice),
    (parse_analysis_choice, 'use the graph of calls', UnparseableChoice),
    (parse_reasoner_response, 'The bug is somewhere.', UnparseableReasoning),
    (parse_reasoner_response, 'REASONING METHODS: forward\nREASONING STEPS: 1. x',
     UnparseableReasoning),
    (parse_reasoner_response, 'Hypothesis: []\nMETHOD MISSING: none', UnparseableReasoning),
    (parse_reasoner_response, '', UnparseableReasoning),
])
def test_rejections(parse, reply, error):
    with pytest.raises(error):
        parse(reply)
    assert issubclass(error, ResponseFormatError)


def test_chain_selection():
    offered = [CallChain(('a', 'b', 'c')), CallChain(('c', 'b'), BACKWARD)]
    chains = parse_chain_selection('path: 1.[a -> b]\npath: 2. b -> c.\npath: 3.c <- b',
                                   offered)
    assert [c.functions for c in chains] == [('a', 'b'), ('b', 'c'), ('c', 'b')]


def test_chain_selection_drops_and_falls_back():
    offered = [CallChain(('a', 'b', 'c'))]
    warnings = ['earlier']
    chains = parse_chain_selection('path: 1.a -> x\npath: 2.a -> b <- c', offered, warnings)
    assert chains == [offered[0]]
    assert warnings[0] == 'earlier'
    assert len(warnings) == 4
    with pytest.raises(ValueError):
        parse_chain_selection('path: 1.a', [])


@pytest.mark.parametrize('value,names', [
    ('none', ()),
    ('None, the code above suffices', ()),
    ('foo, bar and baz', ('foo', 'bar', 'baz')),
    ('`Foo::Init()`; ~Foo', ('Foo::Init', '~Foo')),
    (None, ()),
])
def test_split_missing_methods(value, names):
    assert split_missing_methods(value) == names


def test_normalize_strategy():
    assert normalize_strategy('I used backward reasoning') == BACKWARD_REASONING
    assert normalize_strategy('forwarding') is None
    assert normalize_strategy(None) is None


def test_bug_report():
    assert str(BugReport('crash')) == 'crash'
    with pytest.raises(ValueError):
        BugReport(' \n')


_TOKEN = st.tuples(st.sampled_from(['METHOD', 'FILE', 'method']), st.integers(0, 6),
                   st.sampled_from(['foo', 'bar()', 'NONE', '[baz]', 'Qux::init', 'a/b.c',
                                    'x.c', '[n/a]']))


def _expected(tokens, kind):
    values = []
    for key, number, value in sorted(((k, n, v) for k, n, v in tokens
                                      if k.lower() == kind and 1 <= n <= 3),
                                     key=lambda t: t[1]):
        value = value.strip('[]')
        if kind == 'method' and value.endswith('()'):
            value = value[:-2]
        if value.lower() not in ('none', 'n/a') and value not in values:
            values.append(value)
    return tuple(values[:3])


@settings(max_examples=500)
@given(st.lists(_TOKEN, max_size=10), st.sampled_from([' ', '\n', ', ', ',', ';']))
def test_entry_fuzz(tokens, sep):
    reply = sep.join('{}:{}.{}'.format(k, n, v) for k, n, v in tokens)
    methods, files = _expected(tokens, 'method'), _expected(tokens, 'file')
    if not methods and not files:
        with pytest.raises(NoEntryPoints):
            parse_entry_response(reply)
        return
    entry = parse_entry_response(reply)
    assert entry.methods == methods
    assert entry.files == files


@settings(max_examples=500)
@given(st.text(max_size=300))
def test_parsers_only_raise_format_errors(text):
    for parse in (parse_entry_response, parse_analysis_choice, parse_reasoner_response):
        try:
            parse(text)
        except ResponseFormatError:
            pass


_FUNCTION = st.sampled_from(['foo', 'obs_get_module', 'Foo::Init', 'ctx_load', '~Widget'])
_CASE = st.sampled_from([str.upper, str.lower, str.title, lambda s: s])


def _bracketed(draw, value):
    if draw(st.booleans()):
        return '[{}]'.format(value)
    return value


@st.composite
def _dataflow_replies(draw):
    source, sink = draw(_FUNCTION), draw(_FUNCTION)
    case = draw(_CASE)
    head = case(draw(st.sampled_from(['data flow analysis', 'dataflow analysis',
                                      'data  flow analysis'])))
    colon = draw(st.sampled_from([':', ' :', '']))
    between = draw(st.sampled_from([' ', ', ', '; ', '\n', ',']))
    call = draw(st.sampled_from(['', '()']))
    prefix = draw(st.sampled_from(['', 'I choose ', 'Answer:\n']))
    reply = '{}{}{} {}: {}{}{}: {}'.format(
        prefix, head, colon, case('source'), _bracketed(draw, source + call), between,
        case('sink'), _bracketed(draw, sink + call))
    return reply, AnalysisChoice('dataflow', source, sink)


@settings(max_examples=300)
@given(_dataflow_replies())
def test_analysis_choice_dataflow_variants(case):
    reply, expected = case
    assert parse_analysis_choice(reply) == expected


@settings(max_examples=200)
@given(_CASE, st.sampled_from(['call graph', 'callgraph', 'call  graph']),
       st.sampled_from(['', 'I would use ', 'Use the ']),
       st.sampled_from(['', ' analysis', ' analysis.', ' analysis, it fits best']))
def test_analysis_choice_callgraph_variants(case, name, prefix, suffix):
    assert parse_analysis_choice(prefix + case(name) + suffix) == AnalysisChoice('callgraph')


_LABELS = {
    'strategy': ['REASONING METHODS', 'REASONING METHOD'],
    'steps': ['REASONING STEPS', 'REASONING STEP'],
    'hypothesis': ['Hypothesis', 'HYPOTHESIS'],
    'missing': ['METHOD MISSING', 'METHODS MISSING'],
}
_STRATEGY_TEXT = {FORWARD_REASONING: 'forward reasoning',
                  BACKWARD_REASONING: 'Backward Reasoning',
                  CODE_COMPREHENSION: 'code comprehension'}
_NO_METHODS = st.sampled_from(['none', 'None', 'NONE', 'n/a', 'N/A', 'None needed.',
                               'none, the code above is enough'])


@st.composite
def _reasoner_replies(draw):
    strategy = draw(st.sampled_from(sorted(_STRATEGY_TEXT)))
    hypothesis = draw(st.sampled_from(['foo dereferences a NULL ctx.',
                                       'The module pointer is never checked.']))
    requested = draw(st.one_of(st.none(), st.just(()),
                               st.lists(_FUNCTION, min_size=1, max_size=3, unique=True)))
    values = {'strategy': _STRATEGY_TEXT[strategy], 'steps': '1. foo calls bar. 2. bar fails.',
              'hypothesis': hypothesis}
    if requested is not None:
        values['missing'] = ', '.join(requested) if requested else draw(_NO_METHODS)

    lines = []
    for field in draw(st.permutations(sorted(values))):
        label = draw(_CASE)(draw(st.sampled_from(_LABELS[field])))
        if draw(st.booleans()):
            label = '**{}**'.format(label)
        lines.append('{}: {}'.format(label, _bracketed(draw, values[field])))
    return '\n'.join(lines), strategy, hypothesis, tuple(requested or ())


@settings(max_examples=500)
@given(_reasoner_replies())
def test_reasoner_variants(case):
    reply, strategy, hypothesis, missing = case
    output = parse_reasoner_response(reply)
    assert output.strategy == strategy
    assert output.hypothesis == hypothesis
    assert output.steps == '1. foo calls bar. 2. bar fails.'
    assert output.missing_methods == missing
