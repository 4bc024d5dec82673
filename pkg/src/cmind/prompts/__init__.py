"""
The :mod:`cmind.prompts` module holds the stored prompt templates, their
renderers, and the parsers for the reply formats they request.
"""

from .render import (TEMPLATE_CHECKSUMS, load_template, render_entry_prompt,
                     render_analysis_choice_prompt, render_chain_selection_prompt,
                     render_reasoner_prompt, render_summary_prompt, with_correction)
from .grammar import (BugReport, EntryPoints, AnalysisChoice, ReasonerOutput, STRATEGIES,
                      ResponseFormatError, NoEntryPoints, UnparseableChoice,
                      UnparseableReasoning, parse_entry_response, parse_analysis_choice,
                      parse_chain_selection, parse_reasoner_response)
