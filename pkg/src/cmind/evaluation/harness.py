"""Corpus evaluation with correct/incorrect accounting per model.

A corpus directory holds ``manifest.jsonl``, one case per line::

    {"case_id": "obs-1", "report": "obs/report.txt", "source": "obs/src",
     "transcript": "obs/transcript.jsonl", "ground_truth": ["ApplicationAudioCaptureToolbar::Init"]}

Paths are relative to the corpus directory; ``transcript`` is optional.

"""
import os
import re
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import pandas as pd

from ..llm.gateway import Gateway, LlmConfig
from ..parsing.source import load_source_tree
from ..pipeline.agent import run
from ..pipeline.result import PipelineConfig, COMPLETED, FAILED

logger = logging.getLogger("cmind.evaluation.harness")

MANIFEST = 'manifest.jsonl'
REPORT_JSON = 'eval_report.json'
REPORT_TABLE = 'eval_table.txt'

TABLE_COLUMNS = ['Models', 'Number of reports', 'Correct', 'Incorrect']


class ManifestInvalid(ValueError):
    """The corpus manifest is missing, empty or malformed."""


@dataclass(frozen=True)
class EvalCase:
    case_id: str
    report_path: str
    source_path: str
    ground_truth: tuple
    transcript_path: str = None


@dataclass(frozen=True)
class CaseVerdict:
    case_id: str
    verdict: str
    matched_name: str = None
    status: str = None
    hypothesis: str = ''
    summary: str = ''
    failure_reason: str = None


@dataclass
class EvalReport:
    model_label: str
    total: int = 0
    correct: int = 0
    incorrect: int = 0
    per_case: list = field(default_factory=list)

    @property
    def accuracy(self):
        return self.correct / self.total if self.total else 0.0

    def to_dict(self):
        data = asdict(self)
        data['accuracy'] = self.accuracy
        return data


def load_manifest(corpus_dir):
    """Read and check ``manifest.jsonl`` of a corpus.

    Returns
    -------
    list of EvalCase
        With absolute paths.

    Raises
    ------
    ManifestInvalid

    """
    filename = os.path.join(corpus_dir, MANIFEST)
    if not os.path.isfile(filename):
        raise ManifestInvalid("no {} in {}".format(MANIFEST, corpus_dir))

    cases = []
    with open(filename, encoding='utf-8') as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                case = EvalCase(str(record['case_id']),
                                os.path.join(corpus_dir, record['report']),
                                os.path.join(corpus_dir, record['source']),
                                tuple(record['ground_truth']),
                                os.path.join(corpus_dir, record['transcript'])
                                if record.get('transcript') else None)
            except (ValueError, KeyError, TypeError) as ex:
                raise ManifestInvalid("{}:{}: {}".format(filename, lineno, ex))
            if not case.ground_truth:
                raise ManifestInvalid("{}:{}: empty ground_truth".format(filename, lineno))
            for path in (case.report_path, case.source_path, case.transcript_path):
                if path is not None and not os.path.exists(path):
                    raise ManifestInvalid("{}:{}: no such file {}".format(filename, lineno, path))
            cases.append(case)

    if not cases:
        raise ManifestInvalid("{} lists no cases".format(filename))
    ids = [case.case_id for case in cases]
    if len(set(ids)) != len(ids):
        raise ManifestInvalid("duplicate case_id in {}".format(filename))
    return cases


def _token_re(name):
    return re.compile(r'(?<![\w:]){}(?![\w:])'.format(re.escape(name)))


def judge(result, truth):
    """Decide whether a result names a ground-truth location.

    Parameters
    ----------
    result : LocalizationResult or dict
        Terminal result (or its serialized form).
    truth : list of str
        Acceptable function names or file paths.

    Returns
    -------
    (verdict, matched_name) : (str, str or None)
        ``'correct'`` when a truth name occurs as a whole identifier token
        (case-sensitive) in the hypothesis or summary of a completed result.

    """
    if isinstance(result, dict):
        status, texts = result.get('status'), (result.get('hypothesis'), result.get('summary'))
    else:
        status, texts = result.status, (result.hypothesis, result.summary)
    if status != COMPLETED:
        return 'incorrect', None
    text = '\n'.join(t for t in texts if t)
    for name in truth:
        if _token_re(name).search(text):
            return 'correct', name
    return 'incorrect', None


def _gateway_for(case, config, gateway_factory):
    if case.transcript_path:
        return Gateway(LlmConfig(backend='scripted', transcript_path=case.transcript_path))
    if gateway_factory is not None:
        return gateway_factory(case)
    return Gateway(config.llm)


def run_case(case, config=None, gateway_factory=None):
    """Run the pipeline on one case and judge it."""
    config = config or PipelineConfig()
    try:
        with open(case.report_path, encoding='utf-8', errors='replace') as f:
            report = f.read()
        tree = load_source_tree(case.source_path)
        result = run(report, tree, config, _gateway_for(case, config, gateway_factory))
    except (OSError, ValueError) as ex:
        reason = '{}: {}'.format(type(ex).__name__, ex)
        logger.warning("case %s not run: %s", case.case_id, reason)
        return CaseVerdict(case.case_id, 'incorrect', None, FAILED, failure_reason=reason)
    verdict, matched = judge(result, case.ground_truth)
    logger.info("case %s: %s (%s)", case.case_id, verdict, result.status)
    return CaseVerdict(case.case_id, verdict, matched, result.status, result.hypothesis,
                       result.summary, result.failure_reason)


def run_corpus(corpus_dir, config=None, model_label=None, gateway_factory=None, workers=1,
               out_dir=None):
    """Evaluate every case of a corpus.

    Parameters
    ----------
    corpus_dir : str
        Directory holding ``manifest.jsonl``.
    config : PipelineConfig, optional
    model_label : str, optional
        Row label; the configured model name by default.
    gateway_factory : callable, optional
        ``case -> Gateway`` for cases without a transcript.
    workers : int
        Cases run concurrently.
    out_dir : str, optional
        Where ``eval_report.json`` and ``eval_table.txt`` are written;
        `corpus_dir` by default. Nothing is written when False.

    Returns
    -------
    EvalReport

    """
    config = config or PipelineConfig()
    cases = load_manifest(corpus_dir)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        verdicts = list(pool.map(lambda case: run_case(case, config, gateway_factory), cases))

    correct = sum(1 for v in verdicts if v.verdict == 'correct')
    report = EvalReport(model_label or config.llm.model_name, len(verdicts), correct,
                        len(verdicts) - correct, verdicts)

    if out_dir is not False:
        write_report(report, out_dir or corpus_dir)
    return report


def write_report(report, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, REPORT_JSON), 'w', encoding='utf-8') as f:
        json.dump(report.to_dict(), f, sort_keys=True, indent=2)
    with open(os.path.join(out_dir, REPORT_TABLE), 'w', encoding='utf-8') as f:
        f.write(render_table([report]).to_string(index=False) + '\n')


def render_table(reports, accuracy=False):
    """Tabulate reports, one row per model.

    Parameters
    ----------
    reports : list of EvalReport
    accuracy : bool
        Add an ``Accuracy`` column (fraction correct).

    Returns
    -------
    pandas.DataFrame
        Columns ``Models | Number of reports | Correct | Incorrect``.

    """
    rows = [[r.model_label, r.total, r.correct, r.incorrect] for r in reports]
    df = pd.DataFrame(rows, columns=TABLE_COLUMNS)
    if accuracy:
        df['Accuracy'] = [r.accuracy for r in reports]
    return df


def review_text(report):
    """Per-case verdicts and hypotheses for manual adjudication."""
    blocks = []
    for case in report.per_case:
        blocks.append('\n'.join([
            '== {} [{}; status {}]'.format(case.case_id, case.verdict, case.status),
            'matched: {}'.format(case.matched_name or '-'),
            'hypothesis: {}'.format(case.hypothesis or '-'),
        ]))
    return '\n\n'.join(blocks)
