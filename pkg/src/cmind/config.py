"""Layered settings: command-line flags > environment > INI file.

The INI file (``--config``, else ``$CMIND_CONFIG``, else
``~/.config/cmind/cmind.cfg``; a missing file is fine) uses the
``setup.cfg`` format::

    [llm]
    model_name = o4-mini
    max_retries = 3

    [pipeline]
    max_iterations = 5

    [service]
    data_root = /var/lib/cmind
    listen = 127.0.0.1:8080

"""
import os
import logging
import configparser
from dataclasses import dataclass, field, fields

from .llm.gateway import LlmConfig, ConfigInvalid
from .pipeline.result import PipelineConfig
from .service.jobs import ServiceConfig

logger = logging.getLogger("cmind.config")

DEFAULT_CONFIG_PATH = os.path.join('~', '.config', 'cmind', 'cmind.cfg')

SECTION_KEYS = {
    'llm': ('backend', 'model_name', 'endpoint', 'api_key_ref', 'max_retries',
            'request_timeout', 'temperature'),
    'pipeline': ('max_iterations', 'max_chain_depth', 'code_budget'),
    'service': ('data_root', 'listen', 'workers'),
}

ENVIRONMENT = {
    ('llm', 'model_name'): 'CMIND_MODEL',
    ('llm', 'endpoint'): 'CMIND_ENDPOINT',
    ('llm', 'api_key_ref'): 'CMIND_API_KEY_ENV',
    ('service', 'data_root'): 'CMIND_DATA_ROOT',
    ('service', 'listen'): 'CMIND_LISTEN',
    ('service', 'workers'): 'CMIND_WORKERS',
}

_TYPES = {
    'max_retries': int, 'max_iterations': int, 'max_chain_depth': int, 'code_budget': int,
    'workers': int, 'request_timeout': float, 'temperature': float,
}


@dataclass
class Settings:
    llm: LlmConfig = field(default_factory=LlmConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)


def config_path(explicit=None, environ=None):
    environ = os.environ if environ is None else environ
    return os.path.expanduser(explicit or environ.get('CMIND_CONFIG') or DEFAULT_CONFIG_PATH)


def _convert(key, value):
    try:
        return _TYPES.get(key, str)(value)
    except ValueError:
        raise ConfigInvalid("invalid value for {}: {!r}".format(key, value))


def read_config(path=None, environ=None, overrides=None):
    """Build :class:`Settings` from file, environment and flag values.

    Parameters
    ----------
    path : str, optional
        Explicit config file; see :func:`config_path` for the fallbacks.
    environ : mapping, optional
        Environment, :data:`os.environ` by default.
    overrides : dict, optional
        ``{(section, key): value}`` from command-line flags; None values are
        ignored.

    Returns
    -------
    Settings

    """
    environ = os.environ if environ is None else environ
    values = {}

    filename = config_path(path, environ)
    parser = configparser.ConfigParser()
    if parser.read(filename, encoding='utf-8'):
        logger.info("read configuration from %s", filename)
        for section, keys in SECTION_KEYS.items():
            if parser.has_section(section):
                for key in keys:
                    if parser.has_option(section, key):
                        values[section, key] = parser.get(section, key)
    elif path:
        raise FileNotFoundError("no such config file: {}".format(filename))

    for target, variable in ENVIRONMENT.items():
        if environ.get(variable):
            values[target] = environ[variable]

    for target, value in (overrides or {}).items():
        if value is not None:
            values[target] = value

    settings = Settings()
    for (section, key), value in values.items():
        setattr(getattr(settings, section), key, _convert(key, value))
    settings.pipeline.llm = settings.llm
    try:
        settings.pipeline.validate()
    except ValueError as ex:
        raise ConfigInvalid(str(ex))
    return settings


def describe(settings):
    """Return the settings as ``{section: {key: value}}`` for display."""
    return {name: {f.name: getattr(getattr(settings, name), f.name)
                   for f in fields(getattr(settings, name)) if f.name != 'llm'}
            for name in SECTION_KEYS}
