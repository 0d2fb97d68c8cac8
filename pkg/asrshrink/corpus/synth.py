"""
Desk-scale stand-in for recorded speech: every character is rendered as a
tone of a character-specific frequency, followed by seeded Gaussian noise.
Frequencies are multiples of 50 Hz, so a 320-sample frame at 16 kHz holds a
whole number of cycles of any character tone.
"""
import numpy as np

from asrshrink.corpus.vocab import CharVocab, CorpusError
from asrshrink.util.config import Config
from asrshrink.util.rng import generator


class SynthConfig(Config):
    """
    Attributes
    ----------
    rate_hz : int
        Sampling rate of the generated waveforms.
    char_samples : int
        Samples per character (D). 640 = two frames at a 320-sample stride.
    noise : float
        Standard deviation (sigma) of the additive Gaussian noise.
    amplitude : float
        Peak amplitude of the character tones.
    base_hz : float
        Frequency of the first character of the inventory.
    step_hz : float
        Frequency increment between consecutive characters.
    """
    rate_hz = 16000
    char_samples = 640
    noise = 0.05
    amplitude = 0.8
    base_hz = 200.0
    step_hz = 50.0

    def validate(self):
        self.require('rate_hz', lambda v: int(v) > 0, 'must be positive')
        self.require('char_samples', lambda v: int(v) > 0, 'must be positive')
        self.require('noise', lambda v: v >= 0, 'must be non-negative')
        return self


class Waveform:
    """
    Mono sample sequence with its sampling rate.
    """
    __slots__ = ('samples', 'rate_hz')

    def __init__(self, samples, rate_hz=16000):
        samples = np.asarray(samples, dtype=np.float64).reshape(-1)
        if samples.size == 0:
            raise CorpusError('a waveform needs at least one sample')
        if int(rate_hz) <= 0:
            raise CorpusError('sampling rate must be positive, got {}'.format(rate_hz))

        self.samples = samples
        self.rate_hz = int(rate_hz)

    def __repr__(self):
        return '<Waveform samples={} rate_hz={}>'.format(len(self.samples), self.rate_hz)

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        return (isinstance(other, Waveform) and self.rate_hz == other.rate_hz
                and np.array_equal(self.samples, other.samples))

    @property
    def duration(self):
        return len(self.samples) / float(self.rate_hz)


def char_frequency(char, vocab=None, cfg=None):
    vocab = vocab or CharVocab()
    cfg = cfg or SynthConfig()
    return cfg.base_hz + cfg.step_hz * (vocab.index(char) - 1)


def tone(frequency, cfg):
    t = np.arange(cfg.char_samples) / float(cfg.rate_hz)
    return cfg.amplitude * np.sin(2.0 * np.pi * frequency * t)


def synth(text, cfg=None, seed=0, vocab=None):
    """
    Renders `text` as a waveform of len(text) * D samples. Deterministic in
    (text, cfg, seed).
    """
    cfg = (cfg or SynthConfig()).validate()
    vocab = vocab or CharVocab()
    if not text:
        raise CorpusError('cannot synthesize an empty transcript')

    vocab.validate(text)
    tones = {c: tone(char_frequency(c, vocab, cfg), cfg) for c in set(text)}
    samples = np.concatenate([tones[c] for c in text])

    if cfg.noise > 0:
        samples = samples + generator(seed, 'synth').normal(0.0, cfg.noise, size=samples.shape)

    peak = np.abs(samples).max()
    if peak > 1.0:
        samples = samples / peak

    return Waveform(samples, cfg.rate_hz)
