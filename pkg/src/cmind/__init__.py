"""cmind: a leashed LLM agent for localizing memory bugs in C programs."""

__version__ = '0.1.0'
