"""
The :mod:`cmind.evaluation` module runs a corpus of bug reports with known
locations and counts correct and incorrect localizations per model.
"""

from .harness import (EvalCase, EvalReport, CaseVerdict, ManifestInvalid, load_manifest,
                      judge, run_case, run_corpus, render_table, review_text)
