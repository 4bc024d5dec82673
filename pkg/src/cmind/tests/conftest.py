import pytest

from cmind.datasets import load_obs_toolbar
from cmind.parsing import load_source_tree, extract_functions
from cmind.analysis import build_callgraph


@pytest.fixture(scope='session')
def obs_dataset():
    return load_obs_toolbar()


@pytest.fixture(scope='session')
def obs_tree(obs_dataset):
    return load_source_tree(obs_dataset['data']['source'])


@pytest.fixture(scope='session')
def obs_index(obs_tree):
    return extract_functions(obs_tree)


@pytest.fixture(scope='session')
def obs_graph(obs_index):
    return build_callgraph(obs_index)


@pytest.fixture(scope='session')
def obs_report(obs_dataset):
    with open(obs_dataset['data']['report']) as f:
        return f.read()
