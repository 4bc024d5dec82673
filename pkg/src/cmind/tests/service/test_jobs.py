"""Tests for the asynchronous job service.

"""
import pytest

from cmind.llm import Gateway, LlmConfig, ScriptedBackend, ConfigInvalid
from cmind.service import JobService, JobStore, ServiceConfig, InvalidReport, ArchiveRejected
from cmind.service.store import RUNNING, COMPLETED, FAILED

from ..helpers import zip_bytes, tar_bytes


@pytest.fixture(scope='module')
def obs_archive(obs_tree):
    return zip_bytes({'obs/' + f.path: f.content for f in obs_tree})


@pytest.fixture
def replay_factory(obs_dataset):
    def factory(job_id):
        return Gateway(LlmConfig(backend='scripted',
                                 transcript_path=obs_dataset['data']['transcript']))
    return factory


@pytest.fixture
def service(tmp_path, replay_factory):
    service = JobService(JobStore(str(tmp_path / 'data')), gateway_factory=replay_factory)
    yield service
    service.shutdown()


def test_submit_and_fetch(service, obs_archive, obs_report, obs_dataset):
    job_id = service.submit_job(obs_report, obs_archive)
    service.wait(timeout=60)

    assert service.job_status(job_id) == COMPLETED
    result = service.fetch_result(job_id)
    assert result['id'] == job_id
    assert result['status'] == 'completed'
    assert obs_dataset['ground_truth'][0] in result['hypothesis']
    assert service.job_record(job_id).archive_name == 'source.zip'


def test_submit_tar_gz(service, obs_tree, obs_report):
    archive = tar_bytes({'obs/' + f.path: f.content for f in obs_tree})
    job_id = service.submit_job(obs_report, archive)
    service.wait(timeout=60)

    assert service.job_record(job_id).archive_name == 'source.tar.gz'
    assert service.job_status(job_id) == COMPLETED


def test_concurrent_jobs(service, obs_archive, obs_report):
    ids = [service.submit_job(obs_report, obs_archive) for _ in range(4)]
    service.wait(timeout=120)

    assert len(set(ids)) == 4
    assert [service.job_status(job_id) for job_id in ids] == [COMPLETED] * 4


def test_finished_jobs_are_forgotten(service, obs_archive, obs_report):
    ids = [service.submit_job(obs_report, obs_archive) for _ in range(3)]
    service.wait(timeout=120)
    service.shutdown()

    assert service.futures == {}
    assert [service.job_status(job_id) for job_id in ids] == [COMPLETED] * 3


@pytest.mark.parametrize('report', ['', '  \n'])
def test_empty_report(service, obs_archive, report):
    with pytest.raises(InvalidReport):
        service.submit_job(report, obs_archive)
    assert service.store.ids() == []


@pytest.mark.parametrize('archive', [
    b'int main(void) { return 0; }\n',
    zip_bytes({'../escape.c': 'int x;\n'}),
    tar_bytes({'a.c': 'int a;\n' * 50})[:40],
])
def test_rejected_archive(service, obs_report, archive):
    with pytest.raises(ArchiveRejected):
        service.submit_job(obs_report, archive)
    assert service.store.ids() == []


def test_archive_size_limit(tmp_path, obs_archive, obs_report, replay_factory):
    service = JobService(JobStore(str(tmp_path / 'data')), gateway_factory=replay_factory,
                         max_archive_bytes=len(obs_archive) - 1)
    try:
        with pytest.raises(ArchiveRejected):
            service.submit_job(obs_report, obs_archive)
    finally:
        service.shutdown()


def test_failed_run(tmp_path, obs_archive, obs_report):
    service = JobService(JobStore(str(tmp_path / 'data')),
                         gateway_factory=lambda job_id: Gateway(
                             backend=ScriptedBackend.from_responses([])))
    job_id = service.submit_job(obs_report, obs_archive)
    service.wait(timeout=60)
    service.shutdown()

    assert service.job_status(job_id) == FAILED
    assert service.job_record(job_id).failure_reason == 'TranscriptExhausted'
    assert service.fetch_result(job_id)['status'] == 'failed'


def test_crashed_run(tmp_path, obs_archive, obs_report):
    def broken(job_id):
        raise RuntimeError("no gateway")

    service = JobService(JobStore(str(tmp_path / 'data')), gateway_factory=broken)
    job_id = service.submit_job(obs_report, obs_archive)
    service.wait(timeout=60)
    service.shutdown()

    assert service.job_status(job_id) == FAILED
    assert service.fetch_result(job_id)['failure_reason'] == 'RuntimeError'


def test_restart_recovery(tmp_path, obs_archive, obs_report, replay_factory):
    store = JobStore(str(tmp_path / 'data'))
    interrupted = store.create(obs_report, obs_archive, 'source.zip').id
    store.transition(interrupted, RUNNING)
    queued = store.create(obs_report, obs_archive, 'source.zip').id

    service = JobService(JobStore(str(tmp_path / 'data')), gateway_factory=replay_factory)
    service.start()
    service.wait(timeout=60)
    service.shutdown()

    assert service.job_status(interrupted) == FAILED
    assert service.fetch_result(interrupted)['failure_reason'] == 'interrupted'
    assert service.job_status(queued) == COMPLETED


@pytest.mark.parametrize('listen,address', [
    ('127.0.0.1:8080', ('127.0.0.1', 8080)),
    ('0.0.0.0:9000', ('0.0.0.0', 9000)),
    (':7000', ('127.0.0.1', 7000)),
])
def test_service_config_address(listen, address):
    assert ServiceConfig(listen=listen).address == address


@pytest.mark.parametrize('listen', ['localhost', 'localhost:http', '127.0.0.1:70000', ''])
def test_service_config_rejects_bad_listen(listen):
    with pytest.raises(ConfigInvalid, match='host:port'):
        ServiceConfig(listen=listen).address
