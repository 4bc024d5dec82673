"""End-to-end bug localization run.

Stages, each with its own model session:

1. ``collect_entry_points``: ask for up to three methods/files named by the
   report and collect their code.
2. ``run_static_analysis``: ask for call graph or data flow analysis, run it
   with the analysis tools and let the model pick the call chains to follow.
3. ``reason_loop``: ask for a hypothesis, serving requested methods until
   the model stops asking or the iteration bound is reached.
4. ``summarize``: ask for a numbered summary of the final hypothesis.

"""
import re
import logging
import posixpath

from ..llm.gateway import Gateway, TransportError
from ..parsing.source import extract_functions, lookup_function, lookup_file, AmbiguousBasename
from ..analysis.callgraph import build_callgraph
from ..analysis.chains import enumerate_call_chains, render_call_chain, FORWARD, BACKWARD
from ..analysis.dataflow import dataflow_paths, SourceNotFound
from ..analysis.codeblocks import collect_code_blocks, verify_verbatim
from ..prompts import render as prompts
from ..prompts.grammar import (BugReport, EntryPoints, AnalysisChoice, ResponseFormatError,
                               NoEntryPoints, parse_entry_response, parse_analysis_choice,
                               parse_chain_selection, parse_reasoner_response)
from .result import (AgentState, PipelineConfig, LocalizationResult,
                     COMPLETED, INCONCLUSIVE, FAILED)

logger = logging.getLogger("cmind.pipeline.agent")

NOT_FOUND = 'NOT FOUND: {}'


def _ask(state, gateway, stage, prompt, parse, max_reasks):
    """Send a prompt and parse the reply, re-asking with a correction line."""
    text = prompt
    for attempt in range(max_reasks + 1):
        response = gateway.complete(stage, text)
        try:
            parsed = parse(response)
        except ResponseFormatError as ex:
            state.trace.add_exchange(stage, text, response, 'error: {}'.format(type(ex).__name__))
            if attempt == max_reasks:
                raise
            logger.info("%s: unparseable reply (%s); asking again", stage, ex)
            text = prompts.with_correction(prompt, stage)
            continue
        state.trace.add_exchange(stage, text, response, parsed)
        return parsed


def _leash(state, *blocksets):
    for blocks in blocksets:
        if hasattr(blocks, 'blocks'):
            verify_verbatim(blocks, state.tree)
            state.trace.add_tool_event('verify_verbatim', blocks, True)


def _collect(state, names, budget):
    blocks = collect_code_blocks(state.index, names, budget)
    state.trace.add_tool_event('collect_code_blocks', list(names), blocks)
    if blocks.truncated:
        state.warn("code blocks truncated at {} characters".format(budget), logger)
    return blocks


def _collect_callmethods(state, config):
    """Collect chain code within what the entry blocks leave of the budget."""
    known = set(state.known_blocks.labels)
    names = [name for name in state.callmethod_names if name not in known]
    left = max(config.code_budget - state.known_blocks.size, 0)
    state.callmethods = _collect(state, names, left)
    return state.callmethods


def _files_in_report(state):
    text = state.report.text
    found = []
    for path in state.tree.paths:
        if path in text or re.search(r'(?<![\w.-]){}\b'.format(
                re.escape(posixpath.basename(path))), text):
            found.append(path)
    return found


def collect_entry_points(state, gateway, config=None):
    """Ask for entry points and collect their code into ``state.known_blocks``.

    Methods resolve through the function index, files through the tree
    listing. Files outside the listing and unresolvable methods are dropped
    with a warning. When nothing resolves, files the report mentions are used.

    Raises
    ------
    NoEntryPoints
        The reply names nothing, or nothing at all can be resolved.

    """
    config = config or PipelineConfig()
    prompt = prompts.render_entry_prompt(state.report, state.tree.paths)
    entry = _ask(state, gateway, 'entry_collector', prompt, parse_entry_response,
                 config.max_reasks)

    methods = []
    for name in entry.methods:
        definitions = lookup_function(state.index, name)
        if not definitions:
            state.warn("entry method not found in the source tree: {}".format(name), logger)
            continue
        methods.append(name)
        for fd in definitions:
            if fd.qualified_name not in state.entry_functions:
                state.entry_functions.append(fd.qualified_name)

    files = []
    for path in entry.files:
        try:
            source_file = lookup_file(state.tree, path)
        except AmbiguousBasename as ex:
            source_file = None
            state.warn("ambiguous entry file {}: {}".format(path, ex), logger)
        if source_file is None:
            state.warn("entry file not in the source listing: {}".format(path), logger)
        elif source_file.path not in files:
            files.append(source_file.path)

    if not methods and not files:
        files = _files_in_report(state)[:config.max_entry_points]
        if not files:
            raise NoEntryPoints("no entry point resolves in the source tree")
        state.warn("no entry point resolved; using files named in the report: {}".format(
            ', '.join(files)), logger)

    state.entry = EntryPoints(tuple(entry.methods), tuple(files))
    state.block_requests = methods + files
    state.known_blocks = _collect(state, state.block_requests, config.code_budget)
    if not state.known_blocks.blocks:
        raise NoEntryPoints("entry points hold no code within the budget")
    return state


def _offered_chains(state, config):
    roots = list(state.entry_functions)
    if not roots:
        for path in state.entry.files:
            roots.extend(fd.qualified_name for fd in state.index.by_file.get(path, ()))
    if not roots:
        return []

    offered = []
    truncated = False
    for direction in (FORWARD, BACKWARD):
        chains = enumerate_call_chains(state.graph, roots, direction, config.max_chain_depth,
                                       config.max_chains)
        truncated = truncated or chains.truncated
        # longest chains only; their pieces stay selectable
        for chain in chains:
            if len(chain) == 1 and direction == BACKWARD:
                continue
            if not any(other is not chain and len(other) > len(chain) and other.contains(chain)
                       for other in chains):
                offered.append(chain)
    if truncated:
        state.warn("call chain enumeration capped at {} chains".format(config.max_chains),
                   logger)
    state.trace.add_tool_event('enumerate_call_chains', sorted(roots), offered)
    return offered[:config.max_chains]


def _run_callgraph(state, gateway, config):
    state.choice = AnalysisChoice('callgraph')
    offered = _offered_chains(state, config)
    if not offered:
        state.warn("no call chains start at the entry points", logger)
        state.chains = []
        state.callmethod_names = []
        state.callmethods = _collect(state, [], config.code_budget)
        return state

    _leash(state, state.known_blocks)
    prompt = prompts.render_chain_selection_prompt(offered, state.report, state.known_blocks)
    response = gateway.complete('chain_selector', prompt)
    warnings = []
    state.chains = parse_chain_selection(response, offered, warnings)
    state.warnings.extend(warnings)
    state.trace.add_exchange('chain_selector', prompt, response, state.chains)

    names = []
    for chain in state.chains:
        for name in chain.functions:
            if name not in names:
                names.append(name)
    state.callmethod_names = names
    _collect_callmethods(state, config)
    state.path_to_explore = prompts.render_chain_list(state.chains)
    return state


def _run_dataflow(state, choice):
    allowed = set(state.entry.methods) | set(state.entry_functions)
    allowed |= {name.rsplit('::', 1)[-1] for name in state.entry_functions}
    if choice.source not in allowed:
        state.warn("dataflow source {} is not an entry method".format(choice.source), logger)
        return False
    try:
        paths = dataflow_paths(state.index, state.graph, choice.source, choice.sink)
    except SourceNotFound:
        state.warn("dataflow source {} not found".format(choice.source), logger)
        return False
    state.trace.add_tool_event('dataflow_paths', [choice.source, choice.sink],
                               [p.render() for p in paths])
    if not paths:
        return False
    state.choice = choice
    state.dataflow = paths
    state.callmethods = paths
    state.path_to_explore = '{} -> {}'.format(choice.source, choice.sink)
    return True


def run_static_analysis(state, gateway, config=None):
    """Ask for an analysis kind and run it over the whole index.

    A data flow choice whose source is not an entry method, or which yields
    no path, falls back to call graph analysis.

    Raises
    ------
    UnparseableChoice
        After the re-asks are spent.

    """
    config = config or PipelineConfig()
    _leash(state, state.known_blocks)
    function_names = state.entry_functions or list(state.entry.methods)
    prompt = prompts.render_analysis_choice_prompt(state.report, state.known_blocks,
                                                   function_names)
    choice = _ask(state, gateway, 'analysis_selector', prompt, parse_analysis_choice,
                  config.max_reasks)

    state.graph = build_callgraph(state.index)
    state.trace.add_tool_event('build_callgraph', len(state.index), sorted(state.graph.edges))

    if choice.kind == 'dataflow':
        if _run_dataflow(state, choice):
            return state
        state.warn("data flow analysis gave no path; falling back to call graph analysis",
                   logger)
        state.trace.add_tool_event('fallback', [choice.source, choice.sink], 'callgraph')
    return _run_callgraph(state, gateway, config)


def _fulfill(state, missing, config):
    notes = []
    added = []
    for name in missing:
        if name in state.fulfilled_requests:
            notes.append(NOT_FOUND.format(name))
            continue
        state.fulfilled_requests.add(name)
        if lookup_function(state.index, name):
            added.append(name)
        else:
            state.warn("requested method not found: {}".format(name), logger)
            notes.append(NOT_FOUND.format(name))
    if added:
        state.block_requests.extend(added)
        state.known_blocks = _collect(state, state.block_requests, config.code_budget)
        if not state.dataflow:
            _collect_callmethods(state, config)
    return notes


def reason_loop(state, gateway, config=None):
    """Ask the reasoner until it stops requesting methods.

    Returns
    -------
    ReasonerOutput
        The final reply; ``state.status`` becomes ``inconclusive`` when the
        iteration bound is reached while methods are still requested.

    Raises
    ------
    UnparseableReasoning
        After the re-asks are spent.

    """
    config = config or PipelineConfig()
    notes = []
    previous = None
    latest_hypothesis = None
    while True:
        _leash(state, state.known_blocks, state.callmethods)
        path = state.path_to_explore
        prompt = prompts.render_reasoner_prompt(state.known_blocks, state.callmethods, path,
                                                state.report, notes)
        output = _ask(state, gateway, 'reasoner', prompt, parse_reasoner_response,
                      config.max_reasks)
        state.iteration += 1

        if output.strategy is None:
            state.warn("reasoner reply names no known strategy", logger)
        elif previous is not None and output.strategy != previous:
            state.warn("reasoning strategy changed from {} to {}".format(
                previous, output.strategy), logger)
        if output.strategy is not None:
            previous = output.strategy
        if output.hypothesis:
            latest_hypothesis = output

        if not output.missing_methods:
            return output
        if state.iteration >= config.max_iterations:
            state.status = INCONCLUSIVE
            state.warn("reasoner still requests methods after {} iterations".format(
                state.iteration), logger)
            return latest_hypothesis or output
        notes = _fulfill(state, output.missing_methods, config)


def summarize(state, final_output, gateway, config=None):
    """Ask for a summary and assemble the result.

    A failed summary call leaves the hypothesis as the summary.
    """
    summary = final_output.hypothesis
    if final_output.hypothesis:
        try:
            prompt = prompts.render_summary_prompt(state.trace, state.report,
                                                   state.path_to_explore)
            response = gateway.complete('summarizer', prompt)
            state.trace.add_exchange('summarizer', prompt, response, None)
            if response.strip():
                summary = response.strip()
        except (IOError, LookupError, ValueError) as ex:
            state.warn("summary unavailable ({}); using the hypothesis".format(
                type(ex).__name__), logger)
    status = state.status
    if not final_output.hypothesis:
        status = INCONCLUSIVE
    return _result(state, status, final_output, summary)


def _result(state, status, final_output=None, summary='', failure_reason=None):
    return LocalizationResult(
        status=status,
        hypothesis=final_output.hypothesis if final_output else '',
        strategy=final_output.strategy if final_output else None,
        reasoning_steps=final_output.steps if final_output else '',
        summary=summary,
        entry=state.entry,
        analysis_kind=state.choice.kind if state.choice else None,
        selected_chains=[render_call_chain(c) for c in state.chains],
        warnings=list(state.warnings),
        failure_reason=failure_reason,
        trace=state.trace,
    )


def _failure_reason(ex):
    reason = type(ex).__name__
    if isinstance(ex, TransportError):
        reason = '{}: {}'.format(reason, ex)
    return reason


def run(report, tree, config=None, gateway=None, index=None):
    """Localize the bug described by `report` in `tree`.

    Parameters
    ----------
    report : BugReport or str
        Stack trace, sanitizer output or reproduction steps.
    tree : SourceTree
        Ingested sources.
    config : PipelineConfig, optional
    gateway : Gateway, optional
        Built from ``config.llm`` when not given.
    index : FunctionIndex, optional
        Extracted from `tree` when not given.

    Returns
    -------
    LocalizationResult
        Stage errors become ``status='failed'`` with the trace so far.

    """
    config = (config or PipelineConfig()).validate()
    if not isinstance(report, BugReport):
        report = BugReport(report)
    state = AgentState(report, tree, index)
    try:
        if state.index is None:
            state.index = extract_functions(tree)
            state.trace.add_tool_event('extract_functions', tree.paths, len(state.index))
        gateway = gateway if gateway is not None else Gateway(config.llm)
        collect_entry_points(state, gateway, config)
        run_static_analysis(state, gateway, config)
        final = reason_loop(state, gateway, config)
        result = summarize(state, final, gateway, config)
    except Exception as ex:
        logger.warning("localization failed: %s: %s", type(ex).__name__, ex)
        return _result(state, FAILED, failure_reason=_failure_reason(ex))
    logger.info("localization %s after %i reasoner calls", result.status, state.iteration)
    return result
