"""Tests for the command-line interface and its exit codes.

"""
import json
import socket

import pytest

from cmind.cli import main, EX_OK, EX_FAILED, EX_INCONCLUSIVE, EX_USAGE, EX_DATAERR, EX_IOERR, \
    EX_ADDRINUSE
from cmind.config import ENVIRONMENT
from cmind.service import JobStore
from cmind.service.store import RUNNING, COMPLETED

REQUEST = ('REASONING METHODS: [forward reasoning]\nREASONING STEPS: [1. x]\n'
           'Hypothesis: [ApplicationAudioCaptureToolbar::Init may pass NULL.]\n'
           'METHOD MISSING: [obs_get_module]')


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    monkeypatch.setenv('CMIND_CONFIG', str(tmp_path / 'absent.cfg'))
    for variable in ENVIRONMENT.values():
        monkeypatch.delenv(variable, raising=False)


def _transcript(path, pairs):
    with open(str(path), 'w') as f:
        for stage, response in pairs:
            f.write(json.dumps({'stage': stage, 'response': response}) + '\n')
    return str(path)


def _localize(obs_dataset, *extra):
    return ['localize', '--src', obs_dataset['data']['source'],
            '--report', obs_dataset['data']['report']] + list(extra)


def test_localize_completed(tmp_path, capsys, obs_dataset):
    out = str(tmp_path / 'result.json')
    code = main(_localize(obs_dataset, '--transcript', obs_dataset['data']['transcript'],
                          '--out', out))

    assert code == EX_OK
    assert capsys.readouterr().out.startswith('Summary of the bug chain:')
    with open(out) as f:
        result = json.load(f)
    assert result['status'] == 'completed'
    assert result['selected_chains'] == [
        'ApplicationAudioCaptureToolbar::Init -> obs_module_get_locale_text']


def test_localize_inconclusive(tmp_path, capsys, obs_dataset):
    transcript = _transcript(tmp_path / 't.jsonl', [
        ('entry_collector', 'METHOD:1.ApplicationAudioCaptureToolbar::Init '
                            'METHOD:2.obs_module_get_locale_text FILE:1.NONE'),
        ('analysis_selector', 'call graph analysis'),
        ('chain_selector', 'path: 1.ApplicationAudioCaptureToolbar::Init -> '
                           'obs_module_get_locale_text'),
        ('reasoner', REQUEST),
        ('summarizer', 'Hypothesis: maybe a NULL module.')])
    code = main(_localize(obs_dataset, '--transcript', transcript, '--max-iterations', '1'))

    assert code == EX_INCONCLUSIVE
    assert 'maybe a NULL module' in capsys.readouterr().out


def test_localize_failed(tmp_path, capsys, obs_dataset):
    transcript = _transcript(tmp_path / 'empty.jsonl', [])
    assert main(_localize(obs_dataset, '--transcript', transcript)) == EX_FAILED
    assert 'TranscriptExhausted' in capsys.readouterr().err


def test_localize_io_errors(tmp_path, obs_dataset):
    assert main(['localize', '--src', str(tmp_path / 'missing'),
                 '--report', obs_dataset['data']['report']]) == EX_IOERR
    assert main(_localize(obs_dataset, '--config', str(tmp_path / 'missing.cfg'))) == EX_IOERR


def test_localize_data_error(tmp_path, obs_dataset):
    src = tmp_path / 'src.txt'
    src.write_text('not a source tree\n')
    code = main(['localize', '--src', str(src), '--report', obs_dataset['data']['report'],
                 '--transcript', obs_dataset['data']['transcript']])
    assert code == EX_DATAERR


def test_localize_usage_errors(tmp_path, obs_dataset):
    report = tmp_path / 'empty.txt'
    report.write_text('  \n')
    assert main(['localize', '--src', obs_dataset['data']['source'],
                 '--report', str(report)]) == EX_USAGE

    with pytest.raises(SystemExit) as ex:
        main(_localize(obs_dataset, '--transcript', 'a', '--record', 'b'))
    assert ex.value.code == EX_USAGE
    with pytest.raises(SystemExit) as ex:
        main(['triage'])
    assert ex.value.code == EX_USAGE


def test_localize_rejects_bad_transcripts(tmp_path, obs_dataset):
    garbled = tmp_path / 'garbled.jsonl'
    garbled.write_text('{"stage": "entry_collector", "response": "METHOD:1.x"}\nnot json\n')
    assert main(_localize(obs_dataset, '--transcript', str(garbled))) == EX_DATAERR

    partial = tmp_path / 'partial.jsonl'
    partial.write_text('{"stage": "entry_collector"}\n')
    assert main(_localize(obs_dataset, '--transcript', str(partial))) == EX_DATAERR


def test_localize_rejects_bad_bounds(obs_dataset):
    assert main(_localize(obs_dataset, '--transcript', obs_dataset['data']['transcript'],
                          '--max-iterations', '0')) == EX_USAGE


def test_analyze_edges(capsys, obs_dataset):
    assert main(['analyze', obs_dataset['data']['source']]) == EX_OK
    lines = capsys.readouterr().out.strip().split('\n')
    assert len(lines) == 15
    assert 'obs_module_get_locale_text -> obs_module_get_locale_string' in lines


def test_analyze_functions(capsys, obs_dataset):
    assert main(['analyze', obs_dataset['data']['source'], '--functions']) == EX_OK
    out = capsys.readouterr().out
    assert 'ApplicationAudioCaptureToolbar::Init' in out
    assert len(out.strip().split('\n')) == 11


def test_analyze_chains(capsys, obs_dataset):
    src = obs_dataset['data']['source']
    assert main(['analyze', src, '--chains', '--root', 'obs_module_get_locale_string',
                 '--backward', '--depth', '2']) == EX_OK
    assert capsys.readouterr().out.split('\n')[:2] == [
        'obs_module_get_locale_string',
        'obs_module_get_locale_string <- obs_module_get_locale_text']

    assert main(['analyze', src, '--chains']) == EX_USAGE
    assert main(['analyze', src, '--chains', '--root', 'no_such_function']) == EX_DATAERR
    assert main(['analyze', src, '--chains', '--root', 'obs_get_module',
                 '--depth', '0']) == EX_USAGE


def test_eval(tmp_path, capsys, obs_dataset):
    corpus = tmp_path / 'corpus'
    corpus.mkdir()
    (corpus / 'manifest.jsonl').write_text(json.dumps({
        'case_id': 'obs', 'report': obs_dataset['data']['report'],
        'source': obs_dataset['data']['source'],
        'transcript': obs_dataset['data']['transcript'],
        'ground_truth': obs_dataset['ground_truth']}) + '\n')
    plot = str(tmp_path / 'accuracy.png')

    code = main(['eval', str(corpus), '--label', 'replay', '--accuracy', '--review',
                 '--plot', plot])
    out = capsys.readouterr().out
    assert code == EX_OK
    assert out.split('\n')[1].split() == ['replay', '1', '1', '0', '1.0']
    assert '== obs [correct; status completed]' in out
    assert (tmp_path / 'accuracy.png').stat().st_size > 0
    assert (corpus / 'eval_report.json').exists()


def test_eval_empty_manifest(tmp_path):
    (tmp_path / 'manifest.jsonl').write_text('')
    assert main(['eval', str(tmp_path)]) == EX_DATAERR


def test_purge(tmp_path, capsys):
    store = JobStore(str(tmp_path / 'data'))
    done = store.create('crash', b'data').id
    store.transition(done, RUNNING)
    store.transition(done, COMPLETED, {'status': 'completed'})
    store.create('crash', b'data')

    assert main(['purge', '--data-root', str(tmp_path / 'data'), '--older-than', '0']) == EX_OK
    assert capsys.readouterr().out.split() == [done]
    assert main(['purge', '--data-root', str(tmp_path / 'data'),
                 '--older-than', '-1']) == EX_USAGE


def test_serve_address_in_use(tmp_path):
    sock = socket.socket()
    try:
        sock.bind(('127.0.0.1', 0))
        sock.listen(1)
        port = sock.getsockname()[1]
        code = main(['serve', '--listen', '127.0.0.1:{}'.format(port),
                     '--data-root', str(tmp_path / 'data')])
    finally:
        sock.close()
    assert code == EX_ADDRINUSE


def test_serve_rejects_bad_listen(tmp_path):
    assert main(['serve', '--listen', 'localhost', '--data-root',
                 str(tmp_path / 'data')]) == EX_USAGE
