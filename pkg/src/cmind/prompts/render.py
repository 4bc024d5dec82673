"""Template loading and placeholder substitution.

Templates live next to this module in ``templates/`` as UTF-8 text with
``{placeholder}`` markers. Substitution is a single pass over the template,
so placeholder-like text inside a bug report or code block is never
expanded a second time.

"""
import os
import re
import hashlib
import logging

from ..analysis.chains import CallChain, render_call_chain

logger = logging.getLogger("cmind.prompts.render")

TEMPLATE_DIR = os.path.join(os.path.dirname(__file__), 'templates')

#: sha256 of each stored template file
TEMPLATE_CHECKSUMS = {
    'entry': '31019cb178c5d24f47f17ccc68c11153b523bf89bd2af05947690efa50b66a7f',
    'analysis_choice': '2c9c583b4885d7c826954ec70ab743696230a06a7be911f68b667840ac027894',
    'chain_selection': '5f3723cac1537f37736807e6be68b15fef3a6a4d1f1f9e954610fa08b1baacfb',
    'reasoner': '1cd6af2723ff87353b070d6af9a0e499c9ddced0eb58a1f23dfc07e72a922d9a',
    'summary': '6077d3f44a24fc31a505887d64a3b9a296c6ae53d4f6716242d957b4de637752',
}

#: placeholders each template is rendered with
PLACEHOLDERS = {
    'entry': ('bug_report', 'filename'),
    'analysis_choice': ('bug_report', 'codeblocks', 'function_name'),
    'chain_selection': ('callpaths', 'bug_report', 'codeblocks'),
    'reasoner': ('codeblocks', 'callmethods', 'path_to_explore', 'bug_report'),
    'summary': ('bug_report', 'path_to_explore', 'reasoning_steps', 'hypothesis'),
}

#: one-line correction appended to a prompt whose reply could not be parsed
CORRECTIONS = {
    'entry_collector': "Your previous answer did not follow the format. Please answer only "
                       "with METHOD:1.[METHOD] FILE:1.[FILE].",
    'analysis_selector': "Your previous answer did not follow the format. Please answer only "
                         "with data flow analysis: source:[SOURCE] sink:[SINK] or "
                         "call graph analysis.",
    'chain_selector': "Your previous answer did not follow the format. Please answer only "
                      "with path: 1.[CALL PATH].",
    'reasoner': "Your previous answer did not follow the format. Please answer only with "
                "REASONING METHODS: [METHOD] REASONING STEPS: [STEPS] Hypothesis: [HYPOTHESIS] "
                "METHOD MISSING: [METHOD MISSING].",
}

_cache = {}


def template_path(name):
    return os.path.join(TEMPLATE_DIR, name + '.txt')


def load_template(name, verify=True):
    """Return the text of a stored template without its final newline.

    Parameters
    ----------
    name : str
        One of the keys of :data:`TEMPLATE_CHECKSUMS`.
    verify : bool
        Compare the file against its recorded checksum.

    Raises
    ------
    ValueError
        The template file was edited without updating its checksum.

    """
    if name not in _cache:
        with open(template_path(name), 'rb') as f:
            raw = f.read()
        digest = hashlib.sha256(raw).hexdigest()
        if verify and digest != TEMPLATE_CHECKSUMS[name]:
            raise ValueError("template {} does not match its checksum".format(name))
        _cache[name] = raw.decode('utf-8').rstrip('\n')
    return _cache[name]


def substitute(template, values):
    """Replace each ``{key}`` of `values` in one pass; other text is untouched."""
    pattern = re.compile('|'.join(r'\{%s\}' % re.escape(key) for key in values))
    return pattern.sub(lambda m: values[m.group(0)[1:-1]], template)


def render_template(name, **values):
    missing = set(PLACEHOLDERS[name]) - set(values)
    if missing:
        raise KeyError("missing placeholders for {}: {}".format(name, sorted(missing)))
    return substitute(load_template(name), {key: str(values[key]) for key in PLACEHOLDERS[name]})


def _report_text(report):
    return getattr(report, 'text', report)


def _codeblock_text(codeblocks):
    return codeblocks.render() if hasattr(codeblocks, 'render') else str(codeblocks)


def render_chain_list(chains):
    """Number chains one per line: ``1. a -> b``."""
    return '\n'.join('{}. {}'.format(k, render_call_chain(c) if isinstance(c, CallChain) else c)
                     for k, c in enumerate(chains, start=1))


def render_entry_prompt(report, filenames):
    """Fill the entry-point prompt with a report and the tree's file listing."""
    return render_template('entry', bug_report=_report_text(report),
                           filename='\n'.join(filenames))


def render_analysis_choice_prompt(report, codeblocks, function_names):
    return render_template('analysis_choice', bug_report=_report_text(report),
                           codeblocks=_codeblock_text(codeblocks),
                           function_name=', '.join(function_names))


def render_chain_selection_prompt(callpaths, report, codeblocks):
    if not callpaths:
        raise ValueError("no call paths to offer")
    return render_template('chain_selection', callpaths=render_chain_list(callpaths),
                           bug_report=_report_text(report),
                           codeblocks=_codeblock_text(codeblocks))


def render_callmethods(callmethods, notes=()):
    """Render the call-graph methods slot.

    `callmethods` is a code block set, or a list of dataflow paths rendered as
    ``file:line: code`` hop lines. `notes` (such as ``NOT FOUND: name``) are
    appended one per line.
    """
    if hasattr(callmethods, 'render'):
        text = callmethods.render()
    else:
        text = '\n\n'.join(path.render() for path in callmethods)
    lines = [text] if text else []
    lines.extend(notes)
    return '\n'.join(lines)


def render_reasoner_prompt(codeblocks, callmethods, chains, report, notes=()):
    """Fill the reasoner prompt.

    Parameters
    ----------
    codeblocks : CodeBlockSet
        Entry-point code.
    callmethods : CodeBlockSet or list of DataflowPath
        Code of the chain functions, or dataflow hops in dataflow mode.
    chains : list of CallChain, or str
        Chains to explore; a string (``source -> sink``) in dataflow mode.
    report : BugReport or str
    notes : sequence of str
        Extra lines for the methods slot.

    """
    path = chains if isinstance(chains, str) else render_chain_list(chains)
    return render_template('reasoner', codeblocks=_codeblock_text(codeblocks),
                           callmethods=render_callmethods(callmethods, notes),
                           path_to_explore=path, bug_report=_report_text(report))


def render_summary_prompt(trace, report='', path_to_explore=''):
    """Ask for a numbered bug-chain summary of the last hypothesis in `trace`.

    Raises
    ------
    ValueError
        The trace holds no reasoner output with a hypothesis.

    """
    final = None
    for exchange in trace.exchanges:
        parsed = exchange.parsed
        if exchange.stage == 'reasoner' and getattr(parsed, 'hypothesis', None):
            final = parsed
    if final is None:
        raise ValueError("no hypothesis to summarize")
    return render_template('summary', bug_report=_report_text(report),
                           path_to_explore=path_to_explore,
                           reasoning_steps=final.steps, hypothesis=final.hypothesis)


def with_correction(prompt, stage_label):
    """Append the stage's format correction line to a prompt."""
    return prompt + '\n' + CORRECTIONS[stage_label]
