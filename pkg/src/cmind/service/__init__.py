"""
The :mod:`cmind.service` module accepts bug reports with source archives over
HTTP, runs localizations in the background and serves their results by job ID.
"""

from .store import JobStore, JobRecord, InvalidReport, UnknownJob, NotReady, InvalidTransition
from .jobs import JobService, ServiceConfig, ArchiveRejected
from .server import make_server, parse_multipart
