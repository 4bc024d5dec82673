"""
The :mod:`cmind.analysis` module is the static-analysis tool layer: callgraph
construction, call-chain enumeration, intraprocedural dataflow and verbatim
code collection. All functions are pure over immutable inputs.
"""

from .callgraph import CallGraph, build_callgraph
from .chains import (CallChain, CallChains, UnknownRoot, MalformedChain,
                     enumerate_call_chains, render_call_chain, parse_call_chain)
from .dataflow import Hop, DataflowPath, SourceNotFound, dataflow_paths
from .codeblocks import (CodeBlock, CodeBlockSet, LeashViolation,
                         collect_code_blocks, verify_verbatim)

__all__ = [
    'CallGraph',
    'build_callgraph',
    'CallChain',
    'CallChains',
    'UnknownRoot',
    'MalformedChain',
    'enumerate_call_chains',
    'render_call_chain',
    'parse_call_chain',
    'Hop',
    'DataflowPath',
    'SourceNotFound',
    'dataflow_paths',
    'CodeBlock',
    'CodeBlockSet',
    'LeashViolation',
    'collect_code_blocks',
    'verify_verbatim',
]
