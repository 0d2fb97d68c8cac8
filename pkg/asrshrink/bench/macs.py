"""
Closed-form MAC estimates. Per utterance of N frames:

    front-end        sum over convolutions of n_out * kernel * c_in * c_out
    layer (each)     c_lin * N + c_att * N^2,  c_lin = 4 A^2 + 2 A F,  c_att = 2 A
    decoder (each)   (A^2 + A * P_out) * N

The estimate equals the instrumented count exactly for full, removal and
downsample runs; for layerdrop and early exit it does given the realized
executed layers and decoders.
"""
from dataclasses import dataclass, field
from typing import List

from asrshrink.adapters import DownsampleSpec, FrontendParams, adapter_macs
from asrshrink.encoder import EncoderConfig

# Shapes of the 24-layer WavLM Large encoder and its convolutional front-end
WAVLM_LARGE_ENCODER = EncoderConfig({'L': 24, 'A': 1024, 'H': 16, 'F': 4096, 'P': 31, 'first_exit': 12})
WAVLM_LARGE_FRONTEND = FrontendParams({
    'kernels': [10, 3, 3, 3, 3, 2, 2],
    'strides': [5, 2, 2, 2, 2, 2, 2],
    'channels': [512] * 6,
    'dim': 1024,
})


def linear_cost(encoder):
    encoder = EncoderConfig(encoder)
    return 4 * encoder.A ** 2 + 2 * encoder.A * encoder.ff_dim()


def attention_cost(encoder):
    return 2 * EncoderConfig(encoder).A


def layer_macs(encoder, frames, count_scores=True):
    cost = linear_cost(encoder) * frames
    if count_scores:
        cost += attention_cost(encoder) * frames ** 2
    return cost


def decoder_macs(encoder, frames):
    encoder = EncoderConfig(encoder)
    return (encoder.A ** 2 + encoder.A * encoder.output_width()) * frames


@dataclass
class MacEstimate:
    adapter: int = 0
    frontend: int = 0
    linear: int = 0
    attention: int = 0
    decoders: int = 0
    frames: List[int] = field(default_factory=list)

    @property
    def layers(self):
        return self.linear + self.attention

    @property
    def total(self):
        return self.adapter + self.frontend + self.layers + self.decoders

    def to_dict(self):
        return {
            'adapter': self.adapter,
            'frontend': self.frontend,
            'linear': self.linear,
            'attention': self.attention,
            'decoders': self.decoders,
            'total': self.total,
        }


def _per_utterance(value, count, default):
    if value is None:
        return [default] * count
    if isinstance(value, int):
        return [value] * count
    value = list(value)
    if len(value) != count:
        raise ValueError('expected {} per-utterance values, got {}'.format(count, len(value)))
    return value


def mac_estimate(encoder, frontend=None, lengths=None, samples=None, keep_n=None, downsample=None, layers=None,
                 decoders=None, count_scores=True):
    """
    Estimates the MACs of evaluating a set of utterances.

    Parameters
    ----------
    encoder : EncoderConfig
    frontend : FrontendParams
        Needed when `samples` is given.
    lengths : list[int]
        Frame counts N per utterance (front-end and adapter cost omitted).
    samples : list[int]
        Sample counts T per utterance; frames follow from the adapter and
        the front-end.
    keep_n : Optional[int]
        Layers kept by removal.
    downsample : Optional[DownsampleSpec]
    layers : int or list[int]
        Executed layers per utterance (layerdrop, early exit).
    decoders : int or list[int]
        Executed decoders per utterance (1 unless early exit).
    count_scores : bool
        Include the attention score / context term.
    """
    encoder = EncoderConfig(encoder).validate()
    spec = DownsampleSpec(downsample).validate()
    estimate = MacEstimate()

    if samples is not None:
        frontend = FrontendParams(frontend).validate()
        frames = []
        for length in samples:
            reduced = length // spec.factor
            estimate.adapter += adapter_macs(spec, length)
            estimate.frontend += frontend.macs(reduced)
            frames.append(frontend.frames(reduced))
    elif lengths is not None:
        frames = [int(n) for n in lengths]
    else:
        raise ValueError('mac_estimate needs frame lengths or sample counts')

    executed = _per_utterance(layers, len(frames), keep_n or encoder.L)
    run_decoders = _per_utterance(decoders, len(frames), 1)

    for n, n_layers, n_decoders in zip(frames, executed, run_decoders):
        estimate.linear += n_layers * linear_cost(encoder) * n
        if count_scores:
            estimate.attention += n_layers * attention_cost(encoder) * n ** 2
        estimate.decoders += n_decoders * decoder_macs(encoder, n)

    estimate.frames = frames
    return estimate
