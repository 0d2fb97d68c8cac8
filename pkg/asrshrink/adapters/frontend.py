"""
Frozen convolutional front-end: a stack of strided 1D convolutions turning
T samples into floor(T / S) frame vectors of dimension A.
"""
import numpy as np

from asrshrink.adapters.downsample import AdapterError
from asrshrink.numkit import Module, as_tensor, gelu, init_normal, layer_norm, linear, parameter, stage, unfold
from asrshrink.util.config import Config
from asrshrink.util.rng import generator


class FrontendParams(Config):
    """
    Attributes
    ----------
    kernels : list[int]
        Kernel size of every convolution.
    strides : list[int]
        Stride of every convolution; their product is the total stride S.
    channels : list[int]
        Output channels of every convolution but the last.
    dim : int
        Frame vector dimension A (output channels of the last convolution).
    seed : int
        Seed of the (frozen) weights.
    """
    kernels = [10, 8, 4]
    strides = [10, 8, 4]
    channels = [32, 32]
    dim = 64
    seed = 0

    def validate(self):
        self.require('kernels', lambda v: len(v) >= 1 and all(int(k) >= 1 for k in v), 'need at least one kernel')
        self.require('strides', lambda v: len(v) == len(self.kernels) and all(int(s) >= 1 for s in v),
                     'one positive stride per kernel')
        self.require('channels', lambda v: len(v) == len(self.kernels) - 1, 'one channel count per inner layer')
        self.require('dim', lambda v: int(v) >= 1, 'must be positive')
        return self

    def stride(self):
        return int(np.prod(self.strides))

    def shapes(self):
        """
        (kernel, stride, in_channels, out_channels) of every convolution.
        """
        ins = [1] + list(self.channels)
        outs = list(self.channels) + [self.dim]
        return list(zip(self.kernels, self.strides, ins, outs))

    def layer_lengths(self, length):
        lengths = []
        for kernel, stride in zip(self.kernels, self.strides):
            length = (length - kernel) // stride + 1 if length >= kernel else 0
            lengths.append(length)
        return lengths

    def frames(self, length):
        """
        Frame count for a `length`-sample input; floor(T / S) when every
        kernel equals its stride.
        """
        return self.layer_lengths(length)[-1]

    def macs(self, length):
        return sum(
            n * kernel * c_in * c_out
            for n, (kernel, _, c_in, c_out) in zip(self.layer_lengths(length), self.shapes())
        )


class Frontend(Module):
    def __init__(self, params=None):
        self.params = FrontendParams(params).validate()
        rng = generator(self.params.seed, 'frontend')

        self.weights = []
        self.biases = []
        for i, (kernel, _, c_in, c_out) in enumerate(self.params.shapes()):
            self.weights.append(init_normal(rng, (kernel * c_in, c_out), 1.0 / np.sqrt(kernel * c_in)))
            self.biases.append(parameter(np.zeros(c_out)))

        self.freeze()

    @property
    def dim(self):
        return self.params.dim

    def __call__(self, signal, ctx=None):
        signal = as_tensor(signal)
        length = signal.shape[0]
        n_frames = self.params.frames(length)
        if n_frames < 1:
            raise AdapterError('input of {} samples yields no frame (total stride {})'.format(
                length, self.params.stride()))

        x = signal
        with stage(ctx, 'frontend'):
            for (kernel, stride, _, _), n, w, b in zip(
                    self.params.shapes(), self.params.layer_lengths(length), self.weights, self.biases):
                x = gelu(linear(unfold(x, kernel, stride, n), w, b, ctx))

        return layer_norm(x)


def frontend(x, params=None, ctx=None):
    """
    Runs the front-end described by `params` over a waveform (or sample array).
    """
    samples = getattr(x, 'samples', x)
    return Frontend(params)(samples, ctx)
