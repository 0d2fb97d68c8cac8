"""
Integer-factor downsampling of the raw waveform ahead of the front-end. Every
method emits exactly floor(T / k) samples; windowed methods read zeros past
the right edge of the signal.
"""
import numpy as np
from scipy.signal import firwin

from asrshrink.corpus.synth import Waveform
from asrshrink.numkit import Module, Tensor, as_tensor, get_dtype, matmul, parameter, reshape, stage, unfold
from asrshrink.util.config import Config
from asrshrink.util.rng import generator

FIR_TAPS = 63
FIR_CUTOFF = 0.9
AVERAGE_WINDOW = 16
CONV_KERNEL = 160
CONV_INIT_NOISE = 1e-4


class AdapterError(ValueError):
    pass


class DownsampleMethod:
    NONE = 'none'
    DECIMATE = 'decimate'
    AVERAGE = 'average'
    LEARNED_CONV = 'learned_conv'

    ALL = {NONE, DECIMATE, AVERAGE, LEARNED_CONV}


class DownsampleSpec(Config):
    """
    Attributes
    ----------
    method : str
        One of `DownsampleMethod.ALL`.
    factor : int
        Downsampling factor k, 2 to 4 (1 for 'none').
    anti_alias : bool
        Low-pass filter before decimation (decimate only).
    seed : int
        Seed of the learned kernel initialization.
    """
    method = DownsampleMethod.NONE
    factor = 1
    anti_alias = True
    seed = 0

    def validate(self):
        self.require('method', lambda v: v in DownsampleMethod.ALL, 'unknown downsampling method')
        if self.method == DownsampleMethod.NONE:
            self.require('factor', lambda v: v == 1, 'method none implies factor 1')
        else:
            self.require('factor', lambda v: v in (2, 3, 4), 'factor must be 2, 3 or 4')
        return self

    def doubles_head(self):
        """
        Factors 3 and 4 leave too few frames for CTC, so the decoder emits two
        characters per frame.
        """
        return self.factor >= 3

    def label(self):
        if self.method == DownsampleMethod.NONE:
            return 'none'
        return '{}x{}'.format(self.method, self.factor)


def output_length(length, k):
    return length // k


def _check_length(length, k):
    if k < 1:
        raise AdapterError('downsampling factor must be positive, got {}'.format(k))
    if length < k:
        raise AdapterError('signal of {} samples is shorter than the factor {}'.format(length, k))


def anti_alias_filter(k, taps=FIR_TAPS):
    """
    Windowed-sinc low-pass with unit DC gain and cutoff 0.9 * pi / k.
    """
    return firwin(taps, FIR_CUTOFF / k)


def _as_signal(x):
    if isinstance(x, Waveform):
        return as_tensor(x.samples.astype(get_dtype())), x.rate_hz
    return as_tensor(x), None


def _wrap(out, rate_hz, k):
    if rate_hz is None:
        return out
    return Waveform(out.data, max(1, int(round(rate_hz / float(k)))))


def _filter(signal, kernel, k, pad_left, mode, ctx):
    kernel = as_tensor(kernel)
    length = output_length(signal.shape[0], k)
    windows = unfold(signal, kernel.shape[0], k, length, pad_left=pad_left, mode=mode)
    column = reshape(kernel, (-1, 1))
    return reshape(matmul(windows, column, ctx), (length,))


def decimate_signal(signal, k, anti_alias=True, ctx=None):
    signal = as_tensor(signal)
    _check_length(signal.shape[0], k)
    if k == 1:
        return signal

    if not anti_alias:
        picked = signal.data[0:output_length(signal.shape[0], k) * k:k]
        return Tensor(picked)

    # centred taps, edge samples repeated so constants pass unchanged
    return _filter(signal, anti_alias_filter(k), k, FIR_TAPS // 2, 'edge', ctx)


def average_signal(signal, k, ctx=None, window=AVERAGE_WINDOW):
    signal = as_tensor(signal)
    _check_length(signal.shape[0], k)
    return _filter(signal, np.full(window, 1.0 / window), k, 0, 'zero', ctx)


def conv_signal(signal, k, theta, ctx=None):
    signal = as_tensor(signal)
    _check_length(signal.shape[0], k)
    theta = as_tensor(theta)
    if theta.ndim != 1:
        raise AdapterError('the learned kernel must be one-dimensional, got shape {}'.format(theta.shape))
    return _filter(signal, theta, k, 0, 'zero', ctx)


def decimate(x, k, anti_alias=True, ctx=None):
    """
    Keeps every k-th sample, after an optional anti-alias low-pass (63 MACs
    per output sample when enabled).
    """
    signal, rate = _as_signal(x)
    if k == 1:
        _check_length(signal.shape[0], k)
        return x
    return _wrap(decimate_signal(signal, k, anti_alias, ctx), rate, k)


def avg_downsample(x, k, ctx=None):
    signal, rate = _as_signal(x)
    return _wrap(average_signal(signal, k, ctx), rate, k)


def conv_downsample(x, k, theta, ctx=None):
    signal, rate = _as_signal(x)
    return _wrap(conv_signal(signal, k, theta, ctx), rate, k)


def init_conv_kernel(seed, size=CONV_KERNEL, noise=CONV_INIT_NOISE):
    rng = generator(seed, 'adapter')
    return np.full(size, 1.0 / size) + rng.normal(0.0, noise, size=size)


def adapter_macs(spec, length):
    """
    MACs spent by the adapter on a `length`-sample input.
    """
    out = output_length(length, spec.factor)
    if spec.method == DownsampleMethod.DECIMATE:
        return out * FIR_TAPS if spec.anti_alias else 0
    if spec.method == DownsampleMethod.AVERAGE:
        return out * AVERAGE_WINDOW
    if spec.method == DownsampleMethod.LEARNED_CONV:
        return out * CONV_KERNEL
    return 0


class Downsampler(Module):
    """
    The adapter stage of the encoder. Only the learned convolution owns a
    parameter (`kernel`), trained together with the transformer.
    """
    def __init__(self, spec=None):
        self.spec = DownsampleSpec(spec).validate()
        self.kernel = None
        if self.spec.method == DownsampleMethod.LEARNED_CONV:
            self.kernel = parameter(init_conv_kernel(self.spec.seed), name='adapter.kernel')

    def __repr__(self):
        return '<Downsampler {}>'.format(self.spec.label())

    @property
    def factor(self):
        return self.spec.factor

    @property
    def trainable(self):
        return self.kernel is not None and not self.kernel.frozen

    def __call__(self, signal, ctx=None):
        method, k = self.spec.method, self.spec.factor
        with stage(ctx, 'adapter'):
            if method == DownsampleMethod.NONE:
                return as_tensor(signal)
            if method == DownsampleMethod.DECIMATE:
                return decimate_signal(signal, k, self.spec.anti_alias, ctx)
            if method == DownsampleMethod.AVERAGE:
                return average_signal(signal, k, ctx)
            return conv_signal(signal, k, self.kernel, ctx)
