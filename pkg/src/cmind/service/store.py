"""On-disk job records.

One directory per job under ``<data_root>/jobs/<id>/`` holding
``report.txt``, the uploaded archive, ``status.json`` and, once the job is
terminal, ``result.json``. Files are replaced atomically; all status changes
go through one lock.

"""
import os
import re
import json
import time
import shutil
import hashlib
import logging
import secrets
import tempfile
import threading
from dataclasses import dataclass, asdict

logger = logging.getLogger("cmind.service.store")

QUEUED = 'queued'
RUNNING = 'running'
COMPLETED = 'completed'
FAILED = 'failed'
TERMINAL = frozenset([COMPLETED, FAILED])

TRANSITIONS = {
    QUEUED: frozenset([RUNNING]),
    RUNNING: frozenset([COMPLETED, FAILED]),
    COMPLETED: frozenset(),
    FAILED: frozenset(),
}

JOB_ID_RE = re.compile(r'^[0-9a-f]{16}$')


class InvalidReport(ValueError):
    """The submitted bug report is empty."""


class UnknownJob(KeyError):
    """No job has this ID."""


class NotReady(RuntimeError):
    """The job has no result yet."""


class InvalidTransition(RuntimeError):
    """The status change breaks queued -> running -> completed|failed."""


@dataclass(frozen=True)
class JobRecord:
    id: str
    status: str
    submitted_at: float
    updated_at: float
    archive_name: str
    archive_digest: str
    failure_reason: str = None

    def to_dict(self):
        return asdict(self)


def new_job_id():
    """16 lowercase hex characters from a cryptographic source."""
    return secrets.token_hex(8)


def _atomic_write(filename, data):
    if isinstance(data, str):
        data = data.encode('utf-8')
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(filename), prefix='.tmp-')
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp, filename)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class JobStore(object):
    """Thread-safe job persistence under a data root.

    Parameters
    ----------
    data_root : str
        Directory owning all job data; created if missing.

    """

    def __init__(self, data_root):
        self.data_root = os.path.abspath(data_root)
        self.jobs_dir = os.path.join(self.data_root, 'jobs')
        os.makedirs(self.jobs_dir, exist_ok=True)
        self._lock = threading.RLock()

    def _dir(self, job_id):
        if not isinstance(job_id, str) or not JOB_ID_RE.match(job_id):
            raise UnknownJob(job_id)
        return os.path.join(self.jobs_dir, job_id)

    def _status_file(self, job_id):
        return os.path.join(self._dir(job_id), 'status.json')

    def _write_record(self, record):
        _atomic_write(self._status_file(record.id), json.dumps(record.to_dict(), sort_keys=True))

    def create(self, report_text, archive_bytes, archive_name='source'):
        """Persist a new queued job and return its record.

        Raises
        ------
        InvalidReport
            `report_text` is empty after trimming.

        """
        if not report_text or not report_text.strip():
            raise InvalidReport("empty bug report")
        archive_name = os.path.basename(archive_name or 'source') or 'source'
        if archive_name in ('report.txt', 'status.json', 'result.json'):
            archive_name = 'source-' + archive_name
        with self._lock:
            while True:
                job_id = new_job_id()
                job_dir = self._dir(job_id)
                try:
                    os.mkdir(job_dir)
                    break
                except FileExistsError:
                    logger.warning("job id collision %s; drawing again", job_id)
            now = time.time()
            _atomic_write(os.path.join(job_dir, 'report.txt'), report_text)
            _atomic_write(os.path.join(job_dir, archive_name), archive_bytes)
            record = JobRecord(job_id, QUEUED, now, now, archive_name,
                               hashlib.sha256(archive_bytes).hexdigest())
            self._write_record(record)
        logger.info("job %s queued", job_id)
        return record

    def discard(self, job_id):
        with self._lock:
            shutil.rmtree(self._dir(job_id), ignore_errors=True)

    def get(self, job_id):
        """Return the :class:`JobRecord` of `job_id`.

        Raises
        ------
        UnknownJob

        """
        try:
            with open(self._status_file(job_id), encoding='utf-8') as f:
                return JobRecord(**json.load(f))
        except FileNotFoundError:
            raise UnknownJob(job_id)

    def ids(self):
        return sorted(name for name in os.listdir(self.jobs_dir) if JOB_ID_RE.match(name)
                      and os.path.exists(os.path.join(self.jobs_dir, name, 'status.json')))

    def report(self, job_id):
        with open(os.path.join(self._dir(job_id), 'report.txt'), encoding='utf-8') as f:
            return f.read()

    def archive_path(self, job_id):
        return os.path.join(self._dir(job_id), self.get(job_id).archive_name)

    def transition(self, job_id, status, result=None, failure_reason=None):
        """Move a job to `status`; terminal states store `result` first.

        Raises
        ------
        UnknownJob, InvalidTransition

        """
        with self._lock:
            record = self.get(job_id)
            if status not in TRANSITIONS[record.status]:
                raise InvalidTransition("{}: {} -> {}".format(job_id, record.status, status))
            if status in TERMINAL:
                if result is None:
                    raise InvalidTransition("{}: terminal status without a result".format(job_id))
                _atomic_write(os.path.join(self._dir(job_id), 'result.json'),
                              json.dumps(result, sort_keys=True, indent=2))
            record = JobRecord(record.id, status, record.submitted_at, time.time(),
                               record.archive_name, record.archive_digest, failure_reason)
            self._write_record(record)
        logger.info("job %s %s", job_id, status)
        return record

    def result(self, job_id):
        """Return the stored result document of a terminal job.

        Raises
        ------
        UnknownJob, NotReady

        """
        record = self.get(job_id)
        if record.status not in TERMINAL:
            raise NotReady("job {} is {}".format(job_id, record.status))
        with open(os.path.join(self._dir(job_id), 'result.json'), encoding='utf-8') as f:
            return json.load(f)

    def recover(self, interrupted_result):
        """Fail jobs left running by a previous process.

        Parameters
        ----------
        interrupted_result : callable
            ``job_id -> result dict`` stored for each interrupted job.

        Returns
        -------
        list of str
            IDs still queued, to be enqueued again.

        """
        queued = []
        with self._lock:
            for job_id in self.ids():
                record = self.get(job_id)
                if record.status == RUNNING:
                    logger.warning("job %s was interrupted", job_id)
                    self.transition(job_id, FAILED, interrupted_result(job_id), 'interrupted')
                elif record.status == QUEUED:
                    queued.append(job_id)
        return queued

    def purge(self, older_than, now=None):
        """Delete terminal jobs not updated for `older_than` seconds.

        Returns
        -------
        list of str
            Removed job IDs.

        """
        now = time.time() if now is None else now
        removed = []
        with self._lock:
            for job_id in self.ids():
                record = self.get(job_id)
                if record.status in TERMINAL and now - record.updated_at > older_than:
                    shutil.rmtree(self._dir(job_id))
                    removed.append(job_id)
        logger.info("purged %i jobs", len(removed))
        return removed
