from dataclasses import dataclass, field, fields
from platform import machine as platform_machine, platform as platform_platform, \
    processor as platform_processor, python_version as platform_python_version
from time import perf_counter
from typing import List, Optional

from gevent.pool import Pool as GeventPool

from asrshrink import VERSION
from asrshrink.bench.config import Decode, RunConfig, ShrinkConfig, Strategy
from asrshrink.corpus import CharVocab, cer, wer
from asrshrink.ctc import beam_decode, greedy_decode
from asrshrink.encoder import SpeechEncoder, remove_layers
from asrshrink.exitpolicy import ExitRecord, mean_exit, monotonicity_violations
from asrshrink.lm import read_arpa, train_ngram
from asrshrink.numkit import MacCounter, precision_name
from asrshrink.trainer import finetune
from asrshrink.util.functional import median
from asrshrink.util.logging import LoggingClass


class StrategyMismatchError(ValueError):
    pass


@dataclass
class BenchRow:
    """
    One report row. Times are seconds summed over the test set (median of
    the timed passes); `wall_seconds` covers adapter, encoder and greedy
    decoding, `wall_seconds_lm` the same pipeline with LM-fused decoding.
    """
    label: str
    corpus: Optional[str] = None
    strategy: Optional[str] = None
    wer: Optional[float] = None
    wer_lm: Optional[float] = None
    cer: Optional[float] = None
    wall_seconds: Optional[float] = None
    wall_seconds_lm: Optional[float] = None
    encoder_seconds: Optional[float] = None
    decode_seconds: Optional[float] = None
    decode_seconds_lm: Optional[float] = None
    macs: Optional[int] = None
    macs_encoder: Optional[int] = None
    mean_exit: Optional[float] = None
    time_reduction: Optional[float] = None
    error: Optional[str] = None
    exits: List[ExitRecord] = field(default_factory=list, repr=False, compare=False)

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls) if f.name != 'exits']

    def to_dict(self):
        return {name: getattr(self, name) for name in self.columns()}


@dataclass
class BenchReport:
    rows: List[BenchRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    def add(self, row):
        self.rows.append(row)
        return row

    def baseline(self, row):
        """
        The full-model row evaluated on the same corpus as `row`.
        """
        for candidate in self.rows:
            if candidate.strategy == Strategy.FULL and candidate.corpus == row.corpus and candidate.error is None:
                return candidate
        return None

    def time_proportion(self, row):
        base = self.baseline(row)
        if base is None or not base.wall_seconds or row.wall_seconds is None:
            return None
        return row.wall_seconds / base.wall_seconds

    def fill_reductions(self):
        for row in self.rows:
            proportion = self.time_proportion(row)
            row.time_reduction = None if proportion is None else 1.0 - proportion
        return self


def environment(seed=None):
    return {
        'hardware': platform_processor() or platform_machine(),
        'platform': platform_platform(),
        'python': platform_python_version(),
        'precision': precision_name(),
        'seed': seed,
        'version': VERSION,
    }


def check_compatible(model, cfg):
    """
    Rejects evaluating `model` under a strategy it was not built for.
    """
    spec = cfg.downsample_spec()
    if model.downsample.method != spec.method or model.downsample.factor != spec.factor:
        raise StrategyMismatchError('model downsamples with {}, the configuration asks for {}'.format(
            model.downsample.label(), spec.label()))
    if model.config.double_output != spec.doubles_head():
        raise StrategyMismatchError('factor {} needs double_output={}, the model has {}'.format(
            spec.factor, spec.doubles_head(), model.config.double_output))

    if cfg.strategy == Strategy.REMOVAL and cfg.keep_n > model.num_layers:
        raise StrategyMismatchError('cannot keep {} of {} layers'.format(cfg.keep_n, model.num_layers))

    if cfg.strategy == Strategy.EARLY_EXIT:
        first = cfg.first_exit or model.config.exit_start()
        missing = [i for i in range(first, model.num_layers) if i not in model.decoders]
        if missing:
            raise StrategyMismatchError('early exit needs decoders at layers {}, the model lacks them'.format(missing))


def run_eval(model, test_set, cfg, lm=None, vocab=None, repeats=3, beam=None, corpus=None):
    """
    Decodes every utterance of `test_set` under `cfg` and measures WER (greedy
    and LM-fused), CER, MACs, timings (median of `repeats` passes) and, for
    early exit, the mean exit layer.
    """
    cfg = ShrinkConfig(cfg).validate()
    vocab = vocab or CharVocab()
    check_compatible(model, cfg)
    if not test_set:
        raise StrategyMismatchError('nothing to evaluate: the test set is empty')

    use_lm = cfg.decode == Decode.LM and lm is not None
    bp = cfg.beam_params(beam)
    refs = [u.transcript for u in test_set]

    timings = []
    first = None
    for _ in range(max(1, repeats)):
        ctx = MacCounter()
        hyps, hyps_lm, exits = [], [], []
        encoder_time = decode_time = decode_lm_time = 0.0

        for index, u in enumerate(test_set):
            started = perf_counter()
            result = model.run(u.wave, cfg.mode(index), ctx)
            encoded = perf_counter()
            hyps.append(greedy_decode(result.probs, vocab))
            decoded = perf_counter()

            encoder_time += encoded - started
            decode_time += decoded - encoded
            if use_lm:
                hyps_lm.append(beam_decode(result.probs, vocab, lm, bp))
                decode_lm_time += perf_counter() - decoded

            if cfg.strategy == Strategy.EARLY_EXIT:
                exits.append(ExitRecord(u.id, result.exit_layer, result.value, result.trace))

        timings.append((encoder_time, decode_time, decode_lm_time))
        if first is None:
            first = (ctx, hyps, hyps_lm, exits)

    ctx, hyps, hyps_lm, exits = first
    encoder_time = median([t[0] for t in timings])
    decode_time = median([t[1] for t in timings])
    decode_lm_time = median([t[2] for t in timings])

    return BenchRow(
        label=cfg.name(),
        corpus=corpus,
        strategy=cfg.strategy,
        wer=wer(refs, hyps),
        wer_lm=wer(refs, hyps_lm) if use_lm else None,
        cer=cer(refs, hyps),
        wall_seconds=median([t[0] + t[1] for t in timings]),
        wall_seconds_lm=median([t[0] + t[2] for t in timings]) if use_lm else None,
        encoder_seconds=encoder_time,
        decode_seconds=decode_time,
        decode_seconds_lm=decode_lm_time if use_lm else None,
        macs=ctx.total,
        macs_encoder=ctx.stage_total('layer'),
        mean_exit=mean_exit(exits) if exits else None,
        exits=exits,
    )


def build_model(run, cfg):
    """
    An untrained model shaped for strategy `cfg`: adapter and head doubling
    for downsampling, truncated layer stack for removal.
    """
    run = RunConfig(run)
    spec = cfg.downsample_spec()
    encoder = run.encoder_config().copy(double_output=spec.doubles_head())
    if cfg.first_exit is not None:
        encoder.first_exit = cfg.first_exit
    model = SpeechEncoder(encoder, run.frontend_params(), spec)
    if cfg.strategy == Strategy.REMOVAL:
        model = remove_layers(model, cfg.keep_n)
    return model


def train_language_model(run, corpus):
    lm_cfg = RunConfig(run).lm_config()
    if lm_cfg.arpa:
        return read_arpa(lm_cfg.arpa)
    return train_ngram(corpus.transcripts('train'), lm_cfg.order, lm_cfg.smoothing, lm_cfg.sentence_markers)


class Harness(LoggingClass):
    """
    Runs a grid of strategies over named corpora. Models are trained once per
    (training key, corpus) and shared by the configurations that only differ
    at inference time.
    """
    def __init__(self, run=None, vocab=None):
        self.run = RunConfig(run)
        self.bench = self.run.bench_config()
        self.vocab = vocab or CharVocab()
        self._models = {}
        self._lms = {}

    def model(self, cfg, name, corpus):
        key = (cfg.training_key(), name)
        if key not in self._models:
            model = build_model(self.run, cfg)
            train = self.run.train_config().update(cfg.train_overrides())
            train.update({'strategy': cfg.to_dict(), 'log_path': None, 'checkpoint_path': None})
            self.log.info('Training %s on %s', cfg.name(), name)
            finetune(model, corpus.train, corpus.dev, train, self.vocab)
            self._models[key] = model
        return self._models[key]

    def language_model(self, name, corpus):
        if name not in self._lms:
            self._lms[name] = train_language_model(self.run, corpus)
        return self._lms[name]

    def cell(self, cfg, name, corpus):
        try:
            model = self.model(cfg, name, corpus)
            lm = self.language_model(name, corpus) if cfg.decode == Decode.LM else None
            return run_eval(model, corpus.test, cfg, lm, self.vocab, self.bench.repeats, self.run.beam, name)
        except Exception as e:
            self.log.exception('Sweep cell %s on %s failed', cfg.name(), name)
            return BenchRow(label=cfg.name(), corpus=name, strategy=cfg.strategy,
                            error='{}: {}'.format(e.__class__.__name__, e))

    def sweep(self, grid, corpora):
        """
        Evaluates every configuration of `grid` on every (name, corpus) pair
        of `corpora`. Failed cells are recorded and do not stop the sweep.
        """
        grid = [ShrinkConfig(cfg).validate() for cfg in grid]
        corpora = list(corpora)
        cells = [(cfg, name, corpus) for name, corpus in corpora for cfg in grid]

        # models of a corpus are trained before any of its cells runs concurrently
        for cfg, name, corpus in cells:
            try:
                self.model(cfg, name, corpus)
            except Exception:
                self.log.exception('Training %s on %s failed', cfg.name(), name)

        report = BenchReport(meta=environment(self.run.corpus_config().seed))
        pool = GeventPool(1 if self.bench.serial else max(1, self.bench.workers))
        for row in pool.imap(lambda cell: self.cell(*cell), cells):
            report.add(row)

        report.fill_reductions()
        report.meta['violations'] = self.check_monotonicity(grid, report)
        report.meta['trends'] = self.check_trends(grid, report)
        return report

    def check_monotonicity(self, grid, report):
        groups = {}
        for cfg, row in zip(grid * (len(report.rows) // max(len(grid), 1)), report.rows):
            if cfg.strategy != Strategy.EARLY_EXIT or row.mean_exit is None:
                continue
            groups.setdefault((row.corpus, cfg.heuristic, cfg.two_step), []).append((cfg.threshold, row.mean_exit))

        found = []
        for (corpus, heuristic, two_step), points in sorted(groups.items(), key=lambda kv: str(kv[0])):
            for before, after in monotonicity_violations(points, heuristic):
                self.log.error('Mean exit layer is not monotone in the %s threshold on %s: %s then %s',
                               heuristic, corpus, before, after)
                found.append({'corpus': corpus, 'heuristic': heuristic, 'two_step': two_step,
                              'before': list(before), 'after': list(after)})
        return found

    def check_trends(self, grid, report):
        """
        Shrinking harder should not lower WER: downsampling by 4 against 2
        with the same method, and removal to half depth against the full
        model. Each inversion is logged and returned.
        """
        half = max(1, self.run.encoder_config().L // 2)
        cells = {}
        for cfg, row in zip(grid * (len(report.rows) // max(len(grid), 1)), report.rows):
            if row.error is not None or row.wer is None:
                continue
            if cfg.strategy == Strategy.FULL:
                key = 'full'
            elif cfg.strategy == Strategy.REMOVAL and cfg.keep_n == half:
                key = 'removal'
            elif cfg.strategy == Strategy.DOWNSAMPLE and cfg.factor in (2, 4):
                key = (cfg.method, cfg.factor)
            else:
                continue
            cells.setdefault(row.corpus, {}).setdefault(key, row)

        found = []
        for corpus, rows in sorted(cells.items(), key=lambda kv: str(kv[0])):
            pairs = [('removal', 'full')]
            methods = sorted({key[0] for key in rows if isinstance(key, tuple)})
            pairs.extend(((method, 4), (method, 2)) for method in methods)
            for worse, better in pairs:
                if worse not in rows or better not in rows:
                    continue
                if rows[worse].wer < rows[better].wer:
                    self.log.warning('%s beat %s on %s: WER %s against %s', rows[worse].label,
                                     rows[better].label, corpus, rows[worse].wer, rows[better].wer)
                    found.append({'corpus': corpus, 'expected_worse': rows[worse].label,
                                  'baseline': rows[better].label, 'wer': rows[worse].wer,
                                  'baseline_wer': rows[better].wer})
        return found


def sweep(grid, corpora, run=None, vocab=None):
    return Harness(run, vocab).sweep(grid, corpora)
