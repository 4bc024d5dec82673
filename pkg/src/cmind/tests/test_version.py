import re

import cmind
from cmind.cli import main


def test_version():
    try:
        version = cmind.__version__
    except AttributeError:
        raise AssertionError("cmind does not have __version__")

    assert re.match(r'^\d+\.\d+\.\d+', version)


def test_version_flag(capsys):
    try:
        main(['--version'])
    except SystemExit as ex:
        assert ex.code == 0
    assert cmind.__version__ in capsys.readouterr().out
