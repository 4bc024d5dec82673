"""Bundled example data.

Loaders return a dict with ``data`` (paths of the dataset files) and
``DESCR`` (a description of the dataset in reStructuredText).

"""
from os.path import dirname, join

DATA_DIR = join(dirname(__file__), 'data')


def load_obs_toolbar():
    """Load the OBS-style context bar crash.

    Returns
    -------
    dataset : dict
        ``data`` maps ``source`` (source directory), ``report`` (bug report
        file) and ``transcript`` (scripted replies) to paths;
        ``ground_truth`` lists the faulty function; ``DESCR`` describes the
        dataset.

    """
    module_path = join(DATA_DIR, 'obs_toolbar')

    data = {'source': join(module_path, 'source'),
            'report': join(module_path, 'report.txt'),
            'transcript': join(module_path, 'transcript.jsonl')}

    with open(join(module_path, 'descr.rst')) as rst_file:
        fdescr = rst_file.read()

    return {'data': data,
            'ground_truth': ['ApplicationAudioCaptureToolbar::Init'],
            'DESCR': fdescr}
