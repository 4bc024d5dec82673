"""Tests for the HTTP front end, over a real socket.

"""
import threading
import time

import pytest
import requests

from cmind.llm import Gateway, LlmConfig
from cmind.service import JobService, JobStore, make_server, parse_multipart

from ..helpers import zip_bytes


@pytest.fixture
def gate():
    return threading.Event()


@pytest.fixture
def base_url(tmp_path, obs_dataset, gate):
    def factory(job_id):
        gate.wait(timeout=60)
        return Gateway(LlmConfig(backend='scripted',
                                 transcript_path=obs_dataset['data']['transcript']))

    service = JobService(JobStore(str(tmp_path / 'data')), gateway_factory=factory)
    server = make_server(service, ('127.0.0.1', 0))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield 'http://127.0.0.1:{}'.format(server.server_address[1])
    gate.set()
    server.shutdown()
    server.server_close()
    service.shutdown()


@pytest.fixture(scope='module')
def obs_archive(obs_tree):
    return zip_bytes({'obs/' + f.path: f.content for f in obs_tree})


def _poll(url, status, timeout=60):
    deadline = time.time() + timeout
    while time.time() < deadline:
        document = requests.get(url).json()
        if document['status'] == status:
            return document
        time.sleep(0.05)
    raise AssertionError("job never reached {}".format(status))


def test_healthz(base_url):
    resp = requests.get(base_url + '/healthz')
    assert resp.status_code == 200
    assert resp.json() == {'status': 'ok'}


def test_job_round_trip(base_url, gate, obs_archive, obs_report, obs_dataset):
    resp = requests.post(base_url + '/jobs', data={'report': obs_report},
                         files={'source': ('obs.zip', obs_archive, 'application/zip')})
    assert resp.status_code == 202
    job_id = resp.json()['id']

    resp = requests.get('{}/jobs/{}/result'.format(base_url, job_id))
    assert resp.status_code == 409

    gate.set()
    document = _poll('{}/jobs/{}'.format(base_url, job_id), 'completed')
    assert document['id'] == job_id

    result = requests.get('{}/jobs/{}/result'.format(base_url, job_id)).json()
    assert result['status'] == 'completed'
    assert obs_dataset['ground_truth'][0] in result['hypothesis']


@pytest.mark.parametrize('path', ['/jobs/0123456789abcdef', '/jobs/0123456789abcdef/result',
                                  '/jobs/..%2F..%2Fetc', '/nowhere'])
def test_not_found(base_url, path):
    assert requests.get(base_url + path).status_code == 404


def test_bad_submissions(base_url, obs_archive, obs_report):
    url = base_url + '/jobs'
    resp = requests.post(url, data={'report': obs_report})
    assert resp.status_code == 400
    assert 'source' in resp.json()['error']

    resp = requests.post(url, data={'report': '  '},
                         files={'source': ('obs.zip', obs_archive)})
    assert resp.status_code == 400
    assert resp.json()['error'].startswith('InvalidReport')

    resp = requests.post(url, data={'report': obs_report},
                         files={'source': ('obs.zip', b'not an archive')})
    assert resp.status_code == 400
    assert resp.json()['error'].startswith('ArchiveRejected')

    resp = requests.post(url, data=b'plain body', headers={'Content-Type': 'text/plain'})
    assert resp.status_code == 400


def test_parse_multipart():
    body = (b'--XyZ\r\n'
            b'Content-Disposition: form-data; name="report"\r\n\r\n'
            b'crash\r\n'
            b'--XyZ\r\n'
            b'Content-Disposition: form-data; name="source"; filename="a.zip"\r\n'
            b'Content-Type: application/octet-stream\r\n\r\n'
            b'PK\x03\x04\x00\xff\r\n\x01\r\n'
            b'--XyZ--\r\n')
    fields = parse_multipart('multipart/form-data; boundary=XyZ', body)
    assert fields == {'report': b'crash', 'source': b'PK\x03\x04\x00\xff\r\n\x01'}
