"""
The :mod:`cmind.parsing` module turns a C source tree (directory or archive)
into the immutable :class:`~cmind.parsing.source.SourceTree` and
:class:`~cmind.parsing.source.FunctionIndex` used by every later stage.
"""

from .source import (SourceTree, SourceFile, FunctionDef, FunctionIndex,
                     load_source_tree, extract_functions, lookup_function,
                     lookup_file)

__all__ = [
    'SourceTree',
    'SourceFile',
    'FunctionDef',
    'FunctionIndex',
    'load_source_tree',
    'extract_functions',
    'lookup_function',
    'lookup_file',
]
