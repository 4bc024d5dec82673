"""
The :mod:`cmind.pipeline` module runs the localization stages end to end and
defines the result it returns.
"""

from .agent import run, collect_entry_points, run_static_analysis, reason_loop, summarize
from .result import (AgentState, ReasoningTrace, LocalizationResult, PipelineConfig,
                     COMPLETED, INCONCLUSIVE, FAILED)
