"""HTTP front end of the job service.

Routes (JSON bodies)::

    POST /jobs                multipart: report (text), source (archive) -> 202 {"id"}
    GET  /jobs/<id>           -> 200 {"id", "status", "submitted_at"}
    GET  /jobs/<id>/result    -> 200 result | 409 not ready
    GET  /healthz             -> 200

"""
import re
import json
import logging
import email.policy
from email.parser import BytesParser
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .. import __version__
from .store import InvalidReport, UnknownJob, NotReady
from .jobs import ArchiveRejected

logger = logging.getLogger("cmind.service.server")

_JOB_RE = re.compile(r'^/jobs/([^/]+)(/result)?/?$')

#: multipart overhead allowed beyond the archive limit
FORM_OVERHEAD = 1024 * 1024


def parse_multipart(content_type, body):
    """Return ``{field name: bytes}`` of a multipart/form-data body."""
    head = 'Content-Type: {}\r\nMIME-Version: 1.0\r\n\r\n'.format(content_type)
    message = BytesParser(policy=email.policy.default).parsebytes(head.encode('latin-1') + body)
    if not message.is_multipart():
        raise ValueError("expected multipart/form-data")
    fields = {}
    for part in message.iter_parts():
        name = part.get_param('name', header='content-disposition')
        if name and name not in fields:
            fields[name] = part.get_payload(decode=True) or b''
    return fields


class JobRequestHandler(BaseHTTPRequestHandler):
    server_version = 'cmind/' + __version__
    protocol_version = 'HTTP/1.1'

    @property
    def service(self):
        return self.server.service

    def log_message(self, fmt, *args):
        logger.info("%s " + fmt, self.address_string(), *args)

    def _send_json(self, status, document):
        body = json.dumps(document, sort_keys=True).encode('utf-8')
        self.send_response(status)
        self.send_header('Content-Type', 'application/json')
        self.send_header('Content-Length', str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status, message):
        self._send_json(status, {'error': message})

    def do_GET(self):
        path = self.path.split('?', 1)[0]
        if path == '/healthz':
            return self._send_json(200, {'status': 'ok'})
        match = _JOB_RE.match(path)
        if not match:
            return self._error(404, 'no such route')
        job_id = match.group(1)
        try:
            if match.group(2):
                return self._send_json(200, self.service.fetch_result(job_id))
            record = self.service.job_record(job_id)
        except UnknownJob:
            return self._error(404, 'unknown job {}'.format(job_id))
        except NotReady as ex:
            return self._error(409, str(ex))
        self._send_json(200, {'id': record.id, 'status': record.status,
                              'submitted_at': record.submitted_at})

    def do_POST(self):
        if self.path.split('?', 1)[0].rstrip('/') != '/jobs':
            return self._error(404, 'no such route')
        try:
            length = int(self.headers.get('Content-Length', ''))
        except ValueError:
            return self._error(411, 'Content-Length required')
        if length > self.service.max_archive_bytes + FORM_OVERHEAD:
            return self._error(413, 'upload too large')
        body = self.rfile.read(length)
        try:
            fields = parse_multipart(self.headers.get('Content-Type', ''), body)
        except ValueError as ex:
            return self._error(400, str(ex))
        if 'source' not in fields:
            return self._error(400, 'missing form field: source')
        report = fields.get('report', b'').decode('utf-8', errors='replace')
        try:
            job_id = self.service.submit_job(report, fields['source'])
        except (InvalidReport, ArchiveRejected) as ex:
            return self._error(400, '{}: {}'.format(type(ex).__name__, ex))
        self._send_json(202, {'id': job_id})


def make_server(service, address):
    """Bind a threading HTTP server for `service` at ``(host, port)``."""
    server = ThreadingHTTPServer(address, JobRequestHandler)
    server.service = service
    server.daemon_threads = True
    logger.info("listening on %s:%i", *server.server_address[:2])
    return server
