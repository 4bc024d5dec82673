"""Command-line interface: ``cmind localize|serve|eval|analyze|purge``.

Results go to standard output, diagnostics to standard error. Exit codes:
0 completed, 1 failed, 2 inconclusive, 64 usage error, 65 data error,
74 I/O error, 75 listen address in use.

"""
import os
import sys
import errno
import signal
import logging
import argparse
import threading

from . import __version__
from .config import read_config, describe
from .llm.gateway import Gateway, ConfigInvalid
from .llm.transcript import TranscriptInvalid
from .parsing.source import load_source_tree, extract_functions
from .parsing.util import UnsupportedArchive, ArchiveTraversal, ArchiveTooLarge
from .analysis.callgraph import build_callgraph
from .analysis.chains import (enumerate_call_chains, render_call_chain, UnknownRoot,
                              FORWARD, BACKWARD)
from .pipeline.agent import run
from .pipeline.result import COMPLETED, INCONCLUSIVE
from .service.jobs import JobService, ArchiveRejected
from .service.store import JobStore
from .service.server import make_server
from .evaluation.harness import run_corpus, render_table, review_text, ManifestInvalid

logger = logging.getLogger("cmind.cli")

EX_OK = 0
EX_FAILED = 1
EX_INCONCLUSIVE = 2
EX_USAGE = 64
EX_DATAERR = 65
EX_IOERR = 74
EX_ADDRINUSE = 75

DATA_ERRORS = (UnknownRoot, UnsupportedArchive, ArchiveTraversal, ArchiveTooLarge,
               ArchiveRejected, ManifestInvalid, TranscriptInvalid)


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser exiting with status 64 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, '{}: error: {}\n'.format(self.prog, message))


def _settings(args):
    overrides = {
        ('llm', 'model_name'): getattr(args, 'model', None),
        ('llm', 'endpoint'): getattr(args, 'endpoint', None),
        ('llm', 'api_key_ref'): getattr(args, 'api_key_env', None),
        ('pipeline', 'max_iterations'): getattr(args, 'max_iterations', None),
        ('service', 'data_root'): getattr(args, 'data_root', None),
        ('service', 'listen'): getattr(args, 'listen', None),
        ('service', 'workers'): getattr(args, 'workers', None),
    }
    settings = read_config(args.config, overrides=overrides)
    transcript = getattr(args, 'transcript', None)
    record = getattr(args, 'record', None)
    if transcript and record:
        raise UsageError("--transcript and --record are exclusive")
    if transcript:
        settings.llm.backend, settings.llm.transcript_path = 'scripted', transcript
    elif record:
        settings.llm.backend, settings.llm.transcript_path = 'recording', record
    logger.debug("settings: %s", describe(settings))
    return settings


def cmd_localize(args):
    for path in (args.src, args.report):
        if not os.path.exists(path):
            raise FileNotFoundError("no such file or directory: {}".format(path))
    settings = _settings(args)
    with open(args.report, encoding='utf-8', errors='replace') as f:
        report = f.read()
    if not report.strip():
        raise UsageError("the bug report file is empty")
    tree = load_source_tree(args.src)
    gateway = Gateway(settings.llm)
    result = run(report, tree, settings.pipeline, gateway)

    if args.out:
        with open(args.out, 'w', encoding='utf-8') as f:
            f.write(result.to_json(indent=2) + '\n')
    if result.status == COMPLETED:
        print(result.summary)
        return EX_OK
    if result.status == INCONCLUSIVE:
        print(result.summary or result.hypothesis)
        return EX_INCONCLUSIVE
    print("localization failed: {}".format(result.failure_reason), file=sys.stderr)
    return EX_FAILED


def _raise_interrupt(signum, frame):
    raise KeyboardInterrupt


def cmd_serve(args):
    settings = _settings(args)
    address = settings.service.address
    service = JobService.from_config(settings.service, settings.pipeline)
    try:
        server = make_server(service, address)
    except OSError as ex:
        service.shutdown(wait=False)
        if ex.errno == errno.EADDRINUSE:
            print("address in use: {}".format(settings.service.listen), file=sys.stderr)
            return EX_ADDRINUSE
        raise
    service.start()
    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGTERM, _raise_interrupt)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        logger.info("shutting down")
    finally:
        server.server_close()
        service.shutdown(wait=True)
    return EX_OK


def cmd_eval(args):
    settings = _settings(args)
    reports = [run_corpus(args.corpus, settings.pipeline, model_label=args.label,
                          workers=args.workers or 1, out_dir=args.out_dir)]
    print(render_table(reports, accuracy=args.accuracy).to_string(index=False))
    if args.review:
        print()
        print(review_text(reports[0]))
    if args.plot:
        from .visualisation import plot_localization_accuracy
        ax = plot_localization_accuracy(reports)
        ax.figure.savefig(args.plot, bbox_inches='tight')
    return EX_OK


def cmd_analyze(args):
    if args.depth < 1:
        raise UsageError("--depth must be at least 1")
    tree = load_source_tree(args.src)
    index = extract_functions(tree)
    if args.functions:
        print(index.to_frame().to_string(index=False))
        return EX_OK
    graph = build_callgraph(index)
    if not args.chains:
        print(graph.render_edges())
        return EX_OK
    if not args.root:
        raise UsageError("--chains needs at least one --root")
    chains = enumerate_call_chains(graph, args.root, BACKWARD if args.backward else FORWARD,
                                   args.depth)
    for chain in chains:
        print(render_call_chain(chain))
    if chains.truncated:
        logger.warning("output capped at %i chains", len(chains))
    return EX_OK


def cmd_purge(args):
    if args.older_than < 0:
        raise UsageError("--older-than must not be negative")
    settings = _settings(args)
    store = JobStore(settings.service.data_root)
    for job_id in store.purge(args.older_than * 86400.0):
        print(job_id)
    return EX_OK


def _add_llm_options(parser):
    group = parser.add_argument_group('model')
    group.add_argument('--model', help="model name (env CMIND_MODEL)")
    group.add_argument('--endpoint', help="chat-completion URL (env CMIND_ENDPOINT)")
    group.add_argument('--api-key-env', dest='api_key_env',
                       help="variable holding the API key (env CMIND_API_KEY_ENV)")
    group.add_argument('--max-iterations', dest='max_iterations', type=int,
                       help="reasoner call bound")
    return group


def build_parser():
    parser = ArgumentParser(prog='cmind', description="Localize bugs in C sources from a "
                            "bug report with a model kept to verbatim code and tool output.")
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help="-v for progress, -vv for debugging output")
    parser.add_argument('--config', help="INI configuration file")
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('localize', help="localize the bug of one report")
    p.add_argument('--src', required=True, help="source directory or archive")
    p.add_argument('--report', required=True, help="bug report text file")
    p.add_argument('--out', help="write the result JSON here")
    group = _add_llm_options(p)
    replay = group.add_mutually_exclusive_group()
    replay.add_argument('--transcript', help="replay model replies from this transcript")
    replay.add_argument('--record', help="record model replies to this transcript")
    p.set_defaults(handler=cmd_localize)

    p = sub.add_parser('serve', help="run the HTTP job service")
    p.add_argument('--listen', help="host:port (env CMIND_LISTEN)")
    p.add_argument('--data-root', dest='data_root', help="job data directory (env CMIND_DATA_ROOT)")
    p.add_argument('--workers', type=int, help="concurrent runs (env CMIND_WORKERS)")
    _add_llm_options(p)
    p.set_defaults(handler=cmd_serve)

    p = sub.add_parser('eval', help="evaluate a corpus of reports")
    p.add_argument('corpus', help="directory holding manifest.jsonl")
    p.add_argument('--label', help="model label of the table row")
    p.add_argument('--out-dir', dest='out_dir', help="where to write eval_report.json")
    p.add_argument('--workers', type=int, help="concurrent cases")
    p.add_argument('--accuracy', action='store_true', help="add an accuracy column")
    p.add_argument('--review', action='store_true', help="print every case's hypothesis")
    p.add_argument('--plot', help="save an accuracy bar chart to this file")
    _add_llm_options(p)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser('analyze', help="print the callgraph, call chains or functions")
    p.add_argument('src', help="source directory or archive")
    p.add_argument('--functions', action='store_true', help="list extracted functions")
    p.add_argument('--chains', action='store_true', help="print call chains")
    p.add_argument('--root', action='append', help="chain root (repeatable)")
    p.add_argument('--depth', type=int, default=8, help="maximum functions per chain")
    p.add_argument('--backward', action='store_true', help="follow callers instead of callees")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser('purge', help="delete finished jobs")
    p.add_argument('--data-root', dest='data_root', help="job data directory")
    p.add_argument('--older-than', dest='older_than', type=float, required=True,
                   metavar='DAYS', help="age in days since the last status change")
    p.set_defaults(handler=cmd_purge)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level={0: logging.WARNING, 1: logging.INFO}.get(args.verbose,
                                                                         logging.DEBUG),
                        stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.handler(args)
    except UsageError as ex:
        print("cmind: {}".format(ex), file=sys.stderr)
        return EX_USAGE
    except ConfigInvalid as ex:
        print("cmind: invalid configuration: {}".format(ex), file=sys.stderr)
        return EX_USAGE
    except DATA_ERRORS as ex:
        print("cmind: {}: {}".format(type(ex).__name__, ex), file=sys.stderr)
        return EX_DATAERR
    except ValueError as ex:
        logger.debug("unexpected value error", exc_info=True)
        print("cmind: {}: {}".format(type(ex).__name__, ex), file=sys.stderr)
        return EX_DATAERR
    except OSError as ex:
        print("cmind: {}".format(ex), file=sys.stderr)
        return EX_IOERR


if __name__ == '__main__':
    sys.exit(main())
