"""Chat-completion access with one session per pipeline stage.

Every call sends one self-contained user message; session histories are an
audit record and are never resent.

"""
import os
import time
import logging
from dataclasses import dataclass, field

import requests

from .transcript import ScriptedBackend, TranscriptWriter

logger = logging.getLogger("cmind.llm.gateway")

STAGES = ('entry_collector', 'analysis_selector', 'chain_selector', 'reasoner', 'summarizer')
BACKENDS = ('live', 'scripted', 'recording')

DEFAULT_MODEL = 'o4-mini'
DEFAULT_ENDPOINT = 'https://api.openai.com/v1/chat/completions'
DEFAULT_API_KEY_REF = 'OPENAI_API_KEY'

#: HTTP statuses worth retrying
TRANSIENT_STATUS = frozenset([408, 429, 500, 502, 503, 504])


class ConfigInvalid(ValueError):
    """The model configuration cannot be used."""


class TransportError(IOError):
    """The model endpoint failed after all retries."""


@dataclass
class LlmConfig:
    """Model access settings.

    Parameters
    ----------
    backend : {'live', 'scripted', 'recording'}
        ``scripted`` replays `transcript_path`; ``recording`` calls the live
        endpoint and writes `transcript_path`.
    model_name : str
        Model identifier sent with every request.
    endpoint : str
        Chat-completion URL.
    api_key_ref : str
        Name of the environment variable holding the API key.
    max_retries : int
        Retries after the first attempt on transient transport errors.
    request_timeout : float
        Seconds per HTTP request.
    retry_backoff : float
        Base delay in seconds; retry ``k`` (from 1) waits ``retry_backoff * 2**(k-1)``.
    temperature : float or None
        Sampling temperature; None leaves the provider default.
    transcript_path : str or None
        Transcript file for the scripted and recording backends.

    """

    backend: str = 'live'
    model_name: str = DEFAULT_MODEL
    endpoint: str = DEFAULT_ENDPOINT
    api_key_ref: str = DEFAULT_API_KEY_REF
    max_retries: int = 3
    request_timeout: float = 120.0
    retry_backoff: float = 1.0
    temperature: float = None
    transcript_path: str = None

    def validate(self):
        if self.backend not in BACKENDS:
            raise ConfigInvalid("unknown backend {!r}".format(self.backend))
        if self.max_retries < 0:
            raise ConfigInvalid("max_retries must be >= 0")
        if self.backend in ('live', 'recording'):
            if not self.endpoint:
                raise ConfigInvalid("the {} backend needs an endpoint".format(self.backend))
            if not self.api_key_ref:
                raise ConfigInvalid("the {} backend needs api_key_ref".format(self.backend))
        if self.backend in ('scripted', 'recording') and not self.transcript_path:
            raise ConfigInvalid("the {} backend needs a transcript path".format(self.backend))
        return self


@dataclass(frozen=True)
class LlmExchange:
    prompt: str
    response: str
    latency_ms: float
    token_counts: tuple = None


@dataclass
class Session:
    """Conversation context of one pipeline stage; `history` only grows."""

    stage_label: str
    backend: object = field(repr=False)
    history: list = field(default_factory=list)

    def __post_init__(self):
        if self.stage_label not in STAGES:
            raise ValueError("unknown stage {!r}".format(self.stage_label))


class LiveBackend(object):
    """HTTP JSON chat-completion client with exponential backoff.

    Parameters
    ----------
    config : LlmConfig
    http : requests.Session, optional
        Object with a requests-style ``post``; a new session by default.
    sleep : callable, optional
        Delay function, :func:`time.sleep` by default.

    """

    def __init__(self, config, http=None, sleep=time.sleep):
        self.config = config
        self.http = http if http is not None else requests.Session()
        self.sleep = sleep
        self.attempts = 0

    def _headers(self):
        key = os.environ.get(self.config.api_key_ref)
        if not key:
            raise ConfigInvalid("environment variable {} holds no API key".format(
                self.config.api_key_ref))
        return {'Authorization': 'Bearer ' + key, 'Content-Type': 'application/json'}

    def _payload(self, prompt):
        payload = {'model': self.config.model_name,
                   'messages': [{'role': 'user', 'content': prompt}]}
        if self.config.temperature is not None:
            payload['temperature'] = self.config.temperature
        return payload

    def complete(self, stage, prompt):
        headers = self._headers()
        payload = self._payload(prompt)
        error = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self.sleep(self.config.retry_backoff * 2 ** (attempt - 1))
            self.attempts += 1
            try:
                resp = self.http.post(self.config.endpoint, headers=headers, json=payload,
                                      timeout=self.config.request_timeout)
            except (requests.ConnectionError, requests.Timeout) as ex:
                error = ex
                logger.warning("%s: attempt %i failed: %s", stage, attempt + 1, ex)
                continue
            if resp.status_code in TRANSIENT_STATUS:
                error = TransportError("HTTP {}".format(resp.status_code))
                logger.warning("%s: attempt %i got HTTP %i", stage, attempt + 1,
                               resp.status_code)
                continue
            if resp.status_code >= 400:
                raise TransportError("HTTP {}: {}".format(resp.status_code, resp.text[:200]))
            return self._parse(resp)
        raise TransportError("giving up after {} attempts: {}".format(
            self.config.max_retries + 1, error))

    @staticmethod
    def _parse(resp):
        try:
            body = resp.json()
            text = body['choices'][0]['message']['content']
        except (ValueError, KeyError, IndexError, TypeError) as ex:
            raise TransportError("malformed completion response: {}".format(ex))
        usage = body.get('usage') or {}
        counts = None
        if 'prompt_tokens' in usage:
            counts = (usage['prompt_tokens'], usage.get('completion_tokens'))
        return text or '', counts


class RecordingBackend(object):
    """Delegate to a live backend and append every exchange to a transcript."""

    def __init__(self, config, live=None):
        self.live = live if live is not None else LiveBackend(config)
        header = {'model_name': config.model_name, 'endpoint': config.endpoint,
                  'temperature': config.temperature}
        self.writer = TranscriptWriter(config.transcript_path, header)

    def complete(self, stage, prompt):
        text, counts = self.live.complete(stage, prompt)
        self.writer.append(stage, prompt, text)
        return text, counts


def make_backend(config):
    """Build the backend named by ``config.backend``."""
    config.validate()
    if config.backend == 'scripted':
        return ScriptedBackend.from_file(config.transcript_path)
    if config.backend == 'recording':
        return RecordingBackend(config)
    return LiveBackend(config)


def new_session(stage_label, config=None, backend=None):
    """Open an independent session for one stage.

    Parameters
    ----------
    stage_label : str
        One of :data:`STAGES`.
    config : LlmConfig, optional
        Used to build a backend when `backend` is not given.
    backend : object, optional
        Shared backend (a scripted replay cursor, for instance).

    Raises
    ------
    ConfigInvalid

    """
    if backend is None:
        backend = make_backend(config if config is not None else LlmConfig())
    return Session(stage_label, backend)


def complete(session, prompt):
    """Send `prompt` as one user message and record the exchange.

    Returns
    -------
    str
        Assistant text.

    Raises
    ------
    TransportError, TranscriptExhausted, TranscriptStageMismatch

    """
    if not prompt or not prompt.strip():
        raise ValueError("empty prompt")
    start = time.monotonic()
    text, counts = session.backend.complete(session.stage_label, prompt)
    latency = (time.monotonic() - start) * 1000.0
    session.history.append(LlmExchange(prompt, text, latency, counts))
    logger.debug("%s: %i prompt chars, %i response chars, %.0f ms",
                 session.stage_label, len(prompt), len(text), latency)
    return text


class Gateway(object):
    """One backend and one session per stage for a single pipeline run."""

    def __init__(self, config=None, backend=None):
        self.config = config if config is not None else LlmConfig()
        self.backend = backend if backend is not None else make_backend(self.config)
        self.sessions = {}

    def session(self, stage_label):
        if stage_label not in self.sessions:
            self.sessions[stage_label] = new_session(stage_label, backend=self.backend)
        return self.sessions[stage_label]

    def complete(self, stage_label, prompt):
        return complete(self.session(stage_label), prompt)
