"""
Command line entry point: corpus generation, training, evaluation, table
benchmarks, sweeps and plot data export.

    python -m asrshrink.cli gen-corpus --out corpus/manifest.jsonl
    python -m asrshrink.cli train --config run.yaml --corpus corpus/manifest.jsonl --out model.npz
    python -m asrshrink.cli bench --config run.yaml --out out/
"""
import logging
from argparse import ArgumentParser
from os import makedirs as os_makedirs, path as os_path

parser = ArgumentParser(prog='asrshrink')
parser.add_argument('command', choices=['gen-corpus', 'train', 'eval', 'bench', 'sweep', 'export-plot'])
parser.add_argument('--config', help='Run configuration file (.json / .yaml)', default=None)
parser.add_argument('--corpus', help='Corpus manifest', default=None)
parser.add_argument('--checkpoint', help='Model checkpoint to evaluate', default=None)
parser.add_argument('--report', help='Report CSV to export plot data from', default=None)
parser.add_argument('--format', help='Report format(s) to emit', nargs='*', default=None)

# Configuration overrides
parser.add_argument('--seed', help='Corpus and training seed', type=int, default=None)
parser.add_argument('--out', help='Output path (file or directory depending on the command)', default=None)
parser.add_argument('--n', help='Utterances to synthesize', type=int, default=None)
parser.add_argument('--audio', help='Audio storage for gen-corpus: inline, wav or f64', default=None)
parser.add_argument('--epochs', help='Training epochs', type=int, default=None)
parser.add_argument('--repeats', help='Timed passes per evaluation', type=int, default=None)
parser.add_argument('--workers', help='Concurrent sweep cells', type=int, default=None)
parser.add_argument('--serial', help='Run sweep cells one at a time', action='store_true', default=None)
parser.add_argument('--precision', help='float64 or float32', default=None)
parser.add_argument('--log-level', help='log level', default='INFO')


# Mapping of argument names to (section, key) configuration overrides
CONFIG_OVERRIDE_MAPPING = {
    'seed': [('corpus', 'seed'), ('train', 'seed')],
    'n': [('corpus', 'n')],
    'audio': [('corpus', 'audio')],
    'epochs': [('train', 'epochs')],
    'repeats': [('bench', 'repeats')],
    'workers': [('bench', 'workers')],
    'serial': [('bench', 'serial')],
    'precision': [('bench', 'precision')],
}

log = logging.getLogger('asrshrink')


def load_config(args):
    from asrshrink.bench import RunConfig

    if args.config:
        config = RunConfig.from_file(args.config)
    elif os_path.exists('config.json'):
        config = RunConfig.from_file('config.json')
    elif os_path.exists('config.yaml'):
        config = RunConfig.from_file('config.yaml')
    else:
        config = RunConfig()

    for arg_key, targets in CONFIG_OVERRIDE_MAPPING.items():
        value = getattr(args, arg_key)
        if value is None:
            continue
        for section, key in targets:
            values = dict(getattr(config, section) or {})
            values[key] = value
            setattr(config, section, values)

    return config


def load_or_generate(config, manifest=None):
    from asrshrink.corpus import gen_corpus, load_corpus

    corpus_cfg = config.corpus_config()
    manifest = manifest or corpus_cfg.manifest
    if manifest:
        return load_corpus(manifest)
    return gen_corpus(corpus_cfg.n, corpus_cfg.seed, corpus_cfg.lexicon, corpus_cfg.splits, corpus_cfg.min_words,
                      corpus_cfg.max_words, corpus_cfg.synth_config())


def _out_dir(args, config):
    out = args.out or config.bench_config().out_dir
    os_makedirs(out, exist_ok=True)
    return out


def _emit_all(report, out, formats=None):
    from asrshrink.bench import ReportFormat, emit
    from asrshrink.util.serializer import Serializer

    for fmt in formats or [ReportFormat.CSV, ReportFormat.MARKDOWN, ReportFormat.PLOTDATA, ReportFormat.MACS]:
        path = emit(report, fmt, os_path.join(out, ReportFormat.FILENAMES[fmt]))
        log.info('Wrote %s', path)

    with open(os_path.join(out, 'report.json'), 'w', encoding='utf-8') as f:
        f.write(Serializer.dumps('json', report.meta))


def cmd_gen_corpus(args, config):
    from asrshrink.corpus import write_manifest

    corpus_cfg = config.corpus_config()
    corpus = load_or_generate(config)
    out = args.out or 'corpus/manifest.jsonl'
    os_makedirs(os_path.dirname(os_path.abspath(out)), exist_ok=True)
    write_manifest(out, corpus.all(), audio=corpus_cfg.audio)
    log.info('Wrote %d utterances (%d/%d/%d) to %s', len(corpus), len(corpus.train), len(corpus.dev),
             len(corpus.test), out)


def cmd_train(args, config):
    from asrshrink.bench import build_model
    from asrshrink.trainer import finetune

    cfg = config.shrink_config()
    corpus = load_or_generate(config, args.corpus)
    model = build_model(config, cfg)

    train = config.train_config().update(cfg.train_overrides())
    train.update({'strategy': cfg.to_dict(), 'checkpoint_path': args.out or 'model.npz'})
    finetune(model, corpus.train, corpus.dev, train)
    log.info('Saved %s to %s', model, train.checkpoint_path)


def cmd_eval(args, config):
    from asrshrink.bench import BenchReport, environment, run_eval, train_language_model
    from asrshrink.encoder import load_checkpoint

    if not args.checkpoint:
        parser.error('eval needs --checkpoint')

    model, _ = load_checkpoint(args.checkpoint)
    corpus = load_or_generate(config, args.corpus)
    cfg = config.shrink_config()
    lm = train_language_model(config, corpus)
    row = run_eval(model, corpus.test, cfg, lm, repeats=config.bench_config().repeats, beam=config.beam,
                   corpus='test')

    report = BenchReport([row], environment(config.corpus_config().seed))
    _emit_all(report.fill_reductions(), _out_dir(args, config), args.format)


def cmd_bench(args, config):
    from asrshrink.bench import Harness

    corpus = load_or_generate(config, args.corpus)
    report = Harness(config).sweep(config.grid(), [('default', corpus)])
    _emit_all(report, _out_dir(args, config), args.format)


def cmd_sweep(args, config):
    from asrshrink.bench import Harness

    corpus = load_or_generate(config, args.corpus)
    corpora = [('large', corpus)]
    if config.bench_config().small_data:
        corpora.append(('small', corpus.subset(config.corpus_config().small_train)))

    report = Harness(config).sweep(config.grid(), corpora)
    _emit_all(report, _out_dir(args, config), args.format)


def cmd_export_plot(args, config):
    from asrshrink.bench import ReportFormat, read_report

    report = read_report(args.report or os_path.join(config.bench_config().out_dir, 'report.csv'))
    _emit_all(report, _out_dir(args, config), args.format or [ReportFormat.PLOTDATA, ReportFormat.MACS])


COMMANDS = {
    'gen-corpus': cmd_gen_corpus,
    'train': cmd_train,
    'eval': cmd_eval,
    'bench': cmd_bench,
    'sweep': cmd_sweep,
    'export-plot': cmd_export_plot,
}


def asrshrink_main(argv=None):
    """
    Parses the command line and runs the requested command. Returns the
    process exit status (2 when the command fails on bad input).
    """
    from asrshrink.numkit import set_precision
    from asrshrink.util.logging import setup_logging

    args = parser.parse_args(argv)
    setup_logging(level=getattr(logging, args.log_level.upper()))

    try:
        config = load_config(args)
        set_precision(config.bench_config().precision)
        COMMANDS[args.command](args, config)
    except (ValueError, OSError) as e:
        log.error('%s failed: %s', args.command, e)
        return 2
    return 0


if __name__ == '__main__':
    raise SystemExit(asrshrink_main())
