"""Asynchronous localization jobs on a bounded worker pool."""
import os
import logging
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass

from ..llm.gateway import Gateway, ConfigInvalid
from ..parsing.source import load_source_tree
from ..parsing.util import (sniff_archive, UnsupportedArchive, ArchiveTraversal,
                            ArchiveTooLarge, MAX_ARCHIVE_BYTES)
from ..pipeline.agent import run
from ..pipeline.result import PipelineConfig, LocalizationResult, FAILED as RESULT_FAILED
from .store import JobStore, InvalidReport, RUNNING, COMPLETED, FAILED

logger = logging.getLogger("cmind.service.jobs")

ARCHIVE_SUFFIXES = {'zip': '.zip', 'tar.gz': '.tar.gz', 'tar': '.tar'}


class ArchiveRejected(ValueError):
    """The uploaded source archive is unreadable, too large or unsafe."""


@dataclass
class ServiceConfig:
    """Job service settings.

    Parameters
    ----------
    data_root : str
        Directory holding job data.
    listen : str
        ``host:port`` the HTTP server binds.
    workers : int
        Concurrent pipeline runs.
    max_archive_bytes : int
        Upload size limit.

    """

    data_root: str = 'cmind-data'
    listen: str = '127.0.0.1:8080'
    workers: int = 2
    max_archive_bytes: int = MAX_ARCHIVE_BYTES

    @property
    def address(self):
        host, _, port = self.listen.rpartition(':')
        try:
            number = int(port)
        except ValueError:
            number = -1
        if not 0 <= number <= 65535:
            raise ConfigInvalid("listen must be host:port, not {!r}".format(self.listen))
        return host or '127.0.0.1', number


def _failed_document(reason):
    return LocalizationResult(RESULT_FAILED, failure_reason=reason).to_dict()


class JobService(object):
    """Submit, track and fetch localization jobs.

    Parameters
    ----------
    store : JobStore
    pipeline_config : PipelineConfig, optional
    gateway_factory : callable, optional
        ``job_id -> Gateway`` called once per run; by default a gateway over
        ``pipeline_config.llm``.
    workers : int
        Size of the worker pool.

    """

    def __init__(self, store, pipeline_config=None, gateway_factory=None, workers=2,
                 max_archive_bytes=MAX_ARCHIVE_BYTES):
        self.store = store
        self.pipeline_config = pipeline_config or PipelineConfig()
        self.gateway_factory = gateway_factory or (
            lambda job_id: Gateway(self.pipeline_config.llm))
        self.max_archive_bytes = max_archive_bytes
        self.executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix='cmind-job')
        self.futures = {}
        self._lock = threading.Lock()

    @classmethod
    def from_config(cls, config, pipeline_config=None, gateway_factory=None):
        return cls(JobStore(config.data_root), pipeline_config, gateway_factory,
                   config.workers, config.max_archive_bytes)

    def start(self):
        """Recover jobs of a previous process and enqueue the queued ones."""
        for job_id in self.store.recover(lambda job_id: _failed_document('interrupted')):
            self._enqueue(job_id)
        return self

    def _check_archive(self, archive_bytes):
        if len(archive_bytes) > self.max_archive_bytes:
            raise ArchiveRejected("archive exceeds {} bytes".format(self.max_archive_bytes))
        kind = sniff_archive(archive_bytes[:512])
        if kind is None:
            raise ArchiveRejected("not a zip, tar or tar.gz archive")
        with tempfile.TemporaryDirectory(dir=self.store.data_root) as tmp:
            filename = os.path.join(tmp, 'upload' + ARCHIVE_SUFFIXES[kind])
            with open(filename, 'wb') as f:
                f.write(archive_bytes)
            try:
                load_source_tree(filename, max_bytes=self.max_archive_bytes)
            except (UnsupportedArchive, ArchiveTraversal, ArchiveTooLarge) as ex:
                raise ArchiveRejected("{}: {}".format(type(ex).__name__, ex))
        return 'source' + ARCHIVE_SUFFIXES[kind]

    def submit_job(self, report_text, archive_bytes):
        """Persist a job and enqueue its run.

        Returns
        -------
        str
            The job ID.

        Raises
        ------
        InvalidReport, ArchiveRejected

        """
        if not report_text or not report_text.strip():
            raise InvalidReport("empty bug report")
        stored_name = self._check_archive(archive_bytes)
        record = self.store.create(report_text, archive_bytes, stored_name)
        self._enqueue(record.id)
        return record.id

    def _enqueue(self, job_id):
        future = self.executor.submit(self._run, job_id)
        with self._lock:
            self.futures[job_id] = future
        future.add_done_callback(lambda done: self._forget(job_id, done))

    def _forget(self, job_id, future):
        with self._lock:
            if self.futures.get(job_id) is future:
                del self.futures[job_id]

    def _run(self, job_id):
        self.store.transition(job_id, RUNNING)
        try:
            tree = load_source_tree(self.store.archive_path(job_id),
                                    max_bytes=self.max_archive_bytes)
            gateway = self.gateway_factory(job_id)
            result = run(self.store.report(job_id), tree, self.pipeline_config, gateway)
        except Exception as ex:
            logger.exception("job %s crashed", job_id)
            self.store.transition(job_id, FAILED, _failed_document(type(ex).__name__),
                                  type(ex).__name__)
            return FAILED
        result.id = job_id
        status = FAILED if result.status == RESULT_FAILED else COMPLETED
        self.store.transition(job_id, status, result.to_dict(), result.failure_reason)
        return status

    def job_status(self, job_id):
        return self.store.get(job_id).status

    def job_record(self, job_id):
        return self.store.get(job_id)

    def fetch_result(self, job_id):
        return self.store.result(job_id)

    def wait(self, timeout=None):
        """Block until every enqueued job has finished."""
        with self._lock:
            pending = list(self.futures.values())
        wait(pending, timeout=timeout)

    def shutdown(self, wait=True):
        self.executor.shutdown(wait=wait)
