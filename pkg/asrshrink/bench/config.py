from asrshrink.adapters import DownsampleMethod, DownsampleSpec, FrontendParams
from asrshrink.corpus import SynthConfig
from asrshrink.ctc import BeamParams
from asrshrink.encoder import EncoderConfig, ForwardMode
from asrshrink.exitpolicy import ExitPolicy, Heuristic
from asrshrink.lm import Smoothing
from asrshrink.trainer import TrainConfig
from asrshrink.util.config import Config, ConfigError

TRAINING_LAYERDROP = 0.5


class Strategy:
    FULL = 'full'
    REMOVAL = 'removal'
    LAYERDROP = 'layerdrop'
    EARLY_EXIT = 'early_exit'
    DOWNSAMPLE = 'downsample'

    ALL = {FULL, REMOVAL, LAYERDROP, EARLY_EXIT, DOWNSAMPLE}


class Decode:
    GREEDY = 'greedy'
    LM = 'lm'

    ALL = {GREEDY, LM}


class ShrinkConfig(Config):
    """
    One strategy under test.

    Attributes
    ----------
    strategy : str
        One of `Strategy.ALL`.
    keep_n : Optional[int]
        Kept layers (removal).
    p : Optional[float]
        Inference-time layer drop probability (layerdrop).
    q : float
        Training-time layer drop probability (layerdrop).
    heuristic : str
        Exit heuristic (early_exit).
    threshold : Optional[float]
        Exit threshold (early_exit).
    first_exit : Optional[int]
        First tapped layer (early_exit), defaults to the encoder's.
    two_step : bool
        Train exit decoders on a frozen encoder (early_exit).
    method : Optional[str]
        Downsampling method (downsample).
    factor : int
        Downsampling factor (downsample).
    anti_alias : bool
        Anti-alias filter before decimation (downsample).
    decode : str
        'greedy' or 'lm' (greedy plus LM-fused beam search).
    beam : dict
        Beam parameter overrides.
    seed : int
        Seed of the inference-time layer drop draws.
    label : Optional[str]
        Row label, derived from the parameters when unset.
    """
    strategy = Strategy.FULL
    keep_n = None
    p = None
    q = TRAINING_LAYERDROP
    heuristic = Heuristic.ENTROPY
    threshold = None
    first_exit = None
    two_step = False
    method = None
    factor = 1
    anti_alias = True
    decode = Decode.LM
    beam = {}
    seed = 0
    label = None

    def validate(self):
        self.require('strategy', lambda v: v in Strategy.ALL, 'unknown strategy')
        self.require('decode', lambda v: v in Decode.ALL, 'unknown decoding')
        if self.strategy == Strategy.REMOVAL:
            self.require('keep_n', lambda v: isinstance(v, int) and v >= 1, 'removal needs keep_n >= 1')
        elif self.strategy == Strategy.LAYERDROP:
            self.require('p', lambda v: v is not None and 0.0 <= v <= 1.0, 'layerdrop needs p in [0, 1]')
            self.require('q', lambda v: 0.0 <= v < 1.0, 'training layerdrop must lie in [0, 1)')
        elif self.strategy == Strategy.EARLY_EXIT:
            self.require('threshold', lambda v: v is not None, 'early exit needs a threshold')
            self.exit_policy()
        elif self.strategy == Strategy.DOWNSAMPLE:
            self.require('method', lambda v: v in DownsampleMethod.ALL - {DownsampleMethod.NONE},
                         'downsampling needs a method')
            self.downsample_spec()
        BeamParams(self.beam).validate()
        return self

    def name(self):
        if self.label:
            return self.label
        if self.strategy == Strategy.REMOVAL:
            return 'removal keep={}'.format(self.keep_n)
        if self.strategy == Strategy.LAYERDROP:
            return 'layerdrop p={}'.format(self.p)
        if self.strategy == Strategy.EARLY_EXIT:
            return 'early_exit {} {}{}'.format(self.heuristic, self.threshold, ' two-step' if self.two_step else '')
        if self.strategy == Strategy.DOWNSAMPLE:
            return 'downsample {} k={}'.format(self.method, self.factor)
        return self.strategy

    def downsample_spec(self):
        try:
            if self.strategy != Strategy.DOWNSAMPLE:
                return DownsampleSpec().validate()
            return DownsampleSpec({
                'method': self.method, 'factor': self.factor, 'anti_alias': self.anti_alias, 'seed': self.seed,
            }).validate()
        except ConfigError as e:
            raise ConfigError(self, e.key, str(e))

    def exit_policy(self):
        try:
            return ExitPolicy({
                'heuristic': self.heuristic, 'threshold': self.threshold, 'first_exit': self.first_exit,
                'two_step': self.two_step,
            }).validate()
        except ConfigError as e:
            raise ConfigError(self, e.key, str(e))

    def beam_params(self, defaults=None):
        return BeamParams(defaults or {}).update(self.beam or {}).validate()

    def mode(self, index=0):
        """
        Forward mode for the `index`-th test utterance.
        """
        if self.strategy == Strategy.REMOVAL:
            return ForwardMode.removal(self.keep_n)
        if self.strategy == Strategy.LAYERDROP:
            return ForwardMode.layerdrop(self.p, seed=self.seed * 1000003 + index)
        if self.strategy == Strategy.EARLY_EXIT:
            return ForwardMode.early_exit(self.exit_policy())
        return ForwardMode.full()

    def train_overrides(self):
        if self.strategy == Strategy.LAYERDROP:
            return {'layerdrop': self.q}
        if self.strategy == Strategy.EARLY_EXIT:
            return {'multi_exit': not self.two_step, 'two_step': self.two_step}
        return {}

    def training_key(self):
        """
        Configurations sharing this key can share one trained model.
        """
        if self.strategy == Strategy.REMOVAL:
            return (self.strategy, self.keep_n)
        if self.strategy == Strategy.LAYERDROP:
            return (self.strategy, self.q)
        if self.strategy == Strategy.EARLY_EXIT:
            return (self.strategy, self.first_exit, self.two_step)
        if self.strategy == Strategy.DOWNSAMPLE:
            return (self.strategy, self.method, self.factor, self.anti_alias)
        return (self.strategy,)


class CorpusConfig(Config):
    """
    Attributes
    ----------
    n : int
        Utterances to synthesize.
    seed : int
        Corpus seed.
    splits : list[float]
        Train / dev / test fractions.
    small_train : int
        Training utterances kept by the small-data condition.
    manifest : Optional[str]
        Existing manifest to load instead of synthesizing.
    lexicon : Optional[list[str]]
        Words transcripts are sampled from.
    min_words : int
    max_words : int
    audio : str
        How gen-corpus stores audio: inline, wav or f64.
    synth : dict
        `SynthConfig` overrides.
    """
    n = 400
    seed = 0
    splits = [0.75, 0.125, 0.125]
    small_train = 60
    manifest = None
    lexicon = None
    min_words = 1
    max_words = 3
    audio = 'inline'
    synth = {}

    def synth_config(self):
        return SynthConfig(self.synth).validate()


class LMConfig(Config):
    """
    Attributes
    ----------
    order : int
    smoothing : str
    sentence_markers : bool
    arpa : Optional[str]
        ARPA file to load instead of training on the training transcripts.
    """
    order = 4
    smoothing = Smoothing.WITTEN_BELL
    sentence_markers = True
    arpa = None


class BenchConfig(Config):
    """
    Attributes
    ----------
    repeats : int
        Timed passes over the test set; the median is reported.
    workers : int
        Sweep cells run concurrently.
    serial : bool
        Run sweep cells one at a time.
    out_dir : str
        Where reports are written.
    precision : str
        float64 or float32.
    grid : Optional[list[dict]]
        `ShrinkConfig` entries, the default grid when unset.
    small_data : bool
        Add the small-data corpus condition to sweeps.
    """
    repeats = 3
    workers = 4
    serial = False
    out_dir = 'out'
    precision = 'float64'
    grid = None
    small_data = True


class RunConfig(Config):
    """
    The run-config document: one section per component. The `downsample`
    section holds adapter options (method, factor, anti_alias, seed) shared
    by every downsampling strategy; keys set on a strategy entry win.
    """
    encoder = {}
    frontend = {}
    downsample = {}
    strategy = {}
    train = {}
    beam = {}
    lm = {}
    corpus = {}
    bench = {}

    def encoder_config(self):
        return self.section('encoder', EncoderConfig).validate()

    def frontend_params(self):
        return self.section('frontend', FrontendParams).validate()

    def strategy_config(self, entry):
        entry = entry.to_dict() if isinstance(entry, Config) else dict(entry or {})
        if entry.get('strategy') == Strategy.DOWNSAMPLE:
            entry = dict(self.section('downsample').to_dict(), **entry)
        return ShrinkConfig(entry).validate()

    def shrink_config(self):
        return self.strategy_config(self.section('strategy').to_dict())

    def train_config(self):
        return self.section('train', TrainConfig).validate()

    def beam_params(self):
        return self.section('beam', BeamParams).validate()

    def lm_config(self):
        return self.section('lm', LMConfig)

    def corpus_config(self):
        return self.section('corpus', CorpusConfig)

    def bench_config(self):
        return self.section('bench', BenchConfig)

    def grid(self):
        entries = self.bench_config().grid
        if entries is None:
            return default_grid(self.encoder_config(), self.section('downsample').to_dict())
        return [self.strategy_config(entry) for entry in entries]


def default_grid(encoder=None, downsample=None):
    """
    Rows mirroring the benchmark table: the full model, layer drop and
    removal at half and three quarters depth, entropy and similarity early
    exits, and the downsampling methods. `downsample` options fill the keys
    the downsampling rows leave unset.
    """
    encoder = EncoderConfig(encoder)
    layers = encoder.L
    rows = [{'strategy': Strategy.FULL}]
    for keep in sorted({max(1, layers // 2), max(1, 3 * layers // 4)}):
        rows.append({'strategy': Strategy.REMOVAL, 'keep_n': keep})
    for p in (0.25, 0.5):
        rows.append({'strategy': Strategy.LAYERDROP, 'p': p})
    for threshold in (0.01, 0.03, 0.06):
        rows.append({'strategy': Strategy.EARLY_EXIT, 'heuristic': Heuristic.ENTROPY, 'threshold': threshold})
    rows.append({'strategy': Strategy.EARLY_EXIT, 'heuristic': Heuristic.ENTROPY, 'threshold': 0.03,
                 'two_step': True})
    rows.append({'strategy': Strategy.EARLY_EXIT, 'heuristic': Heuristic.SIMILARITY, 'threshold': 0.99})
    for method in (DownsampleMethod.DECIMATE, DownsampleMethod.AVERAGE, DownsampleMethod.LEARNED_CONV):
        rows.append({'strategy': Strategy.DOWNSAMPLE, 'method': method, 'factor': 2})
    for factor in (3, 4):
        rows.append({'strategy': Strategy.DOWNSAMPLE, 'method': DownsampleMethod.AVERAGE, 'factor': factor})

    downsample = downsample or {}
    return [
        ShrinkConfig(dict(downsample, **row) if row['strategy'] == Strategy.DOWNSAMPLE else row).validate()
        for row in rows
    ]
