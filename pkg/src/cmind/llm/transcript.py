"""Line-delimited JSON transcripts of model exchanges.

A transcript file starts with an optional header record
``{"header": {...}}`` followed by one record per exchange::

    {"stage": "reasoner", "fingerprint": "<sha256>", "prompt": "...", "response": "..."}

``fingerprint`` and ``prompt`` may be omitted in hand-written transcripts;
such entries match any prompt of their stage.

"""
import json
import hashlib
import logging
import threading
from dataclasses import dataclass

logger = logging.getLogger("cmind.llm.transcript")


class TranscriptExhausted(LookupError):
    """Every transcript entry has been consumed."""


class TranscriptStageMismatch(LookupError):
    """Entries remain, but none for the requested stage."""


class TranscriptInvalid(ValueError):
    """A transcript line is not a JSON record with a stage and a response."""


def fingerprint(prompt):
    """Stable hash of a prompt with all whitespace runs collapsed to one space."""
    normalized = ' '.join(prompt.split())
    return hashlib.sha256(normalized.encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class TranscriptEntry:
    stage: str
    response: str
    fingerprint: str = None
    prompt: str = None

    def to_record(self):
        return {'stage': self.stage, 'fingerprint': self.fingerprint,
                'prompt': self.prompt, 'response': self.response}


def load_transcript(filename):
    """Read a transcript file.

    Parameters
    ----------
    filename : str
        Path to a line-delimited JSON transcript.

    Returns
    -------
    header : dict
        Header record (empty if the file has none).
    entries : list of TranscriptEntry
        Exchange records in file order.

    """
    header = {}
    entries = []
    with open(filename, encoding='utf-8') as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except ValueError as ex:
                raise TranscriptInvalid("{}:{}: {}".format(filename, lineno, ex))
            if not isinstance(record, dict):
                raise TranscriptInvalid("{}:{}: not a JSON object".format(filename, lineno))
            if 'header' in record:
                header = record['header']
                continue
            try:
                entries.append(TranscriptEntry(record['stage'], record['response'],
                                               record.get('fingerprint'), record.get('prompt')))
            except KeyError as ex:
                raise TranscriptInvalid("{}:{}: transcript record lacks {}".format(
                    filename, lineno, ex))
    logger.info("loaded %i transcript entries from %s", len(entries), filename)
    return header, entries


class TranscriptWriter(object):
    """Append exchange records to a transcript file, one writer at a time."""

    def __init__(self, filename, header=None):
        self.filename = filename
        self._lock = threading.Lock()
        with open(filename, 'w', encoding='utf-8') as f:
            f.write(json.dumps({'header': header or {}}, sort_keys=True) + '\n')

    def append(self, stage, prompt, response):
        entry = TranscriptEntry(stage, response, fingerprint(prompt), prompt)
        with self._lock:
            with open(self.filename, 'a', encoding='utf-8') as f:
                f.write(json.dumps(entry.to_record(), sort_keys=True) + '\n')
        return entry


class ScriptedBackend(object):
    """Replay responses from transcript entries.

    For each call, the first unconsumed entry of the stage whose fingerprint
    equals the prompt's is returned; otherwise the first unconsumed entry of
    the stage, with a warning unless that entry carries no fingerprint.

    Parameters
    ----------
    entries : list of TranscriptEntry
        Entries in replay order.

    Attributes
    ----------
    mismatches : list of (str, str)
        ``(stage, prompt fingerprint)`` of every call served by fallback.

    """

    def __init__(self, entries):
        self.entries = list(entries)
        self.mismatches = []
        self._consumed = [False] * len(self.entries)
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, filename):
        _, entries = load_transcript(filename)
        return cls(entries)

    @classmethod
    def from_responses(cls, pairs):
        """Build from ``(stage, response)`` pairs."""
        return cls([TranscriptEntry(stage, response) for stage, response in pairs])

    @property
    def remaining(self):
        return self._consumed.count(False)

    def complete(self, stage, prompt):
        key = fingerprint(prompt)
        with self._lock:
            candidates = [k for k, entry in enumerate(self.entries)
                          if not self._consumed[k] and entry.stage == stage]
            if not candidates:
                if self.remaining:
                    raise TranscriptStageMismatch(
                        "no transcript entry left for stage {}".format(stage))
                raise TranscriptExhausted("transcript exhausted at stage {}".format(stage))

            exact = [k for k in candidates if self.entries[k].fingerprint == key]
            chosen = exact[0] if exact else candidates[0]
            if not exact and self.entries[chosen].fingerprint is not None:
                logger.warning("fingerprint mismatch at stage %s; replaying next entry", stage)
                self.mismatches.append((stage, key))
            self._consumed[chosen] = True
            return self.entries[chosen].response, None
