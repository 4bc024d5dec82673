"""
The :mod:`cmind.llm` module gives per-stage access to a chat-completion model,
live over HTTP or replayed from a recorded transcript.
"""

from .gateway import (STAGES, LlmConfig, LlmExchange, Session, Gateway, LiveBackend,
                      RecordingBackend, ConfigInvalid, TransportError, make_backend,
                      new_session, complete)
from .transcript import (TranscriptEntry, ScriptedBackend, TranscriptExhausted,
                         TranscriptStageMismatch, TranscriptInvalid, fingerprint, load_transcript)
