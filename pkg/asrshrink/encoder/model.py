from copy import deepcopy
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from asrshrink.adapters import Downsampler, Frontend
from asrshrink.encoder.config import EncoderConfig, ForwardMode, ModeError
from asrshrink.encoder.layers import ExitDecoder, TransformerLayer, positional_encoding
from asrshrink.exitpolicy import Action, decide
from asrshrink.numkit import Module, ShapeError, Tensor, as_tensor, stage
from asrshrink.util.logging import LoggingClass
from asrshrink.util.rng import generator


@dataclass
class ForwardResult:
    """
    Attributes
    ----------
    probs : Tensor
        Character distributions of the decoder that produced the output,
        [N x P] or [2N x P] with a doubled head.
    exit_layer : int
        Layer whose representation was decoded.
    layer_outputs : list[Tensor]
        R_1..R_j for every layer walked (skipped layers repeat their input).
    executed_layers : list[int]
        Layers actually computed.
    decoders_run : list[int]
        Layers whose decoder was evaluated.
    trace : list[(int, float)]
        Heuristic value observed at every tapped layer (early exit only).
    """
    probs: Tensor
    exit_layer: int
    layer_outputs: List[Tensor] = field(default_factory=list)
    executed_layers: List[int] = field(default_factory=list)
    decoders_run: List[int] = field(default_factory=list)
    trace: List[Tuple[int, Optional[float]]] = field(default_factory=list)
    value: Optional[float] = None


def layerdrop_schedule(num_layers, p, seed, *stream):
    """
    Boolean mask of the layers kept by one layerdrop draw; each layer is
    skipped independently with probability `p`.
    """
    return generator(seed, 'layerdrop', *stream).random(num_layers) >= p


def decode_head(ri, decoder, ctx=None):
    return decoder(ri, ctx)


class SpeechEncoder(LoggingClass, Module):
    """
    Adapter, frozen front-end, transformer stack and per-layer decoders.
    Layers are numbered 1..L; `decoders` maps a layer number to its decoder.
    """
    def __init__(self, config=None, frontend=None, downsample=None):
        self.config = EncoderConfig(config).validate()
        self.adapter = Downsampler(downsample)
        self.frontend = Frontend(frontend)
        if self.frontend.dim != self.config.A:
            raise ShapeError('front-end emits {}-dim frames, the encoder expects A={}'.format(
                self.frontend.dim, self.config.A))

        cfg = self.config
        rng = generator(cfg.seed, 'encoder')
        self.layers = [TransformerLayer(rng, cfg.A, cfg.H, cfg.ff_dim()) for _ in range(cfg.L)]
        self.decoders = {
            layer: ExitDecoder(rng, cfg.A, cfg.P, cfg.double_output)
            for layer in cfg.exit_layers()
        }

    def __repr__(self):
        return '<SpeechEncoder L={} A={} adapter={} exits={}>'.format(
            self.num_layers, self.config.A, self.adapter.spec.label(), sorted(self.decoders))

    @property
    def num_layers(self):
        return len(self.layers)

    @property
    def frontend_params(self):
        return self.frontend.params

    @property
    def downsample(self):
        return self.adapter.spec

    def exit_decoders(self):
        return {layer: d for layer, d in self.decoders.items() if layer != self.num_layers}

    def embed(self, signal, ctx=None):
        """
        Adapter then front-end: samples to an [N x A] frame sequence.
        """
        return self.frontend(self.adapter(getattr(signal, 'samples', signal), ctx), ctx)

    def _position(self, frames):
        frames = as_tensor(frames)
        if frames.ndim != 2 or frames.shape[1] != self.config.A:
            raise ShapeError('expected [N x {}] frames, got {}'.format(self.config.A, frames.shape))
        return frames + Tensor(positional_encoding(frames.shape[0], self.config.A))

    def _layer(self, index, x, ctx):
        with stage(ctx, 'layer{}'.format(index)):
            return self.layers[index - 1](x, ctx)

    def decode_head(self, ri, layer=None, ctx=None):
        layer = layer or self.num_layers
        if layer not in self.decoders:
            raise ModeError('no decoder at layer {} (decoders at {})'.format(layer, sorted(self.decoders)))
        with stage(ctx, 'decoder{}'.format(layer)):
            return decode_head(ri, self.decoders[layer], ctx)

    def walk(self, frames, depth=None, kept=None, ctx=None):
        """
        Runs layers 1..depth (default L), skipping those masked out in
        `kept`. Returns R_0..R_depth and the executed layer numbers.
        """
        depth = depth or self.num_layers
        outputs = [self._position(frames)]
        executed = []
        for i in range(1, depth + 1):
            if kept is not None and not kept[i - 1]:
                outputs.append(outputs[-1])
                continue
            outputs.append(self._layer(i, outputs[-1], ctx))
            executed.append(i)
        return outputs, executed

    def forward(self, frames, mode=None, ctx=None):
        mode = (mode or ForwardMode.full()).validate(self.num_layers)
        if mode.kind == ForwardMode.EARLY_EXIT:
            return self._early_exit(frames, mode.policy, ctx)

        depth, kept = self.num_layers, None
        if mode.kind == ForwardMode.REMOVAL:
            depth = int(mode.keep_n)
        elif mode.kind == ForwardMode.LAYERDROP:
            kept = layerdrop_schedule(self.num_layers, float(mode.p), mode.seed)

        outputs, executed = self.walk(frames, depth, kept, ctx)
        # truncated stacks still read out through the final decoder
        probs = self.decode_head(outputs[-1], self.num_layers, ctx)
        return ForwardResult(probs, depth, outputs[1:], executed, [self.num_layers])

    def _early_exit(self, frames, policy, ctx):
        last = self.num_layers
        policy = policy.copy(first_exit=policy.first_exit or min(self.config.exit_start(), last))
        first = int(policy.first_exit)
        if first > last:
            raise ModeError('first exit layer {} exceeds the {} layers of the model'.format(first, last))

        missing = [i for i in range(first, last) if i not in self.decoders]
        if missing:
            raise ModeError('early exit needs decoders at layers {}'.format(missing))

        outputs = [self._position(frames)]
        trace, decoders_run = [], []
        for i in range(1, last + 1):
            r = self._layer(i, outputs[-1], ctx)
            outputs.append(r)
            if i < first:
                continue

            probs = None
            if policy.needs_probs or i == last:
                probs = self.decode_head(r, i, ctx)
                decoders_run.append(i)

            decision = decide(policy, i, r, outputs[-2], probs, last_layer=last)
            trace.append((i, decision.value))
            if decision.action == Action.EXIT:
                if probs is None:
                    probs = self.decode_head(r, i, ctx)
                    decoders_run.append(i)
                return ForwardResult(probs, i, outputs[1:], list(range(1, i + 1)), decoders_run, trace,
                                     decision.value)

        raise ModeError('early exit walked past the last layer')

    def exit_log_probs(self, frames, layers=None, kept=None, ctx=None):
        """
        Log character distributions at every requested decoder layer after a
        single walk through the stack (used for multi-exit training).
        """
        layers = sorted(layers or self.decoders)
        depth = max(layers)
        outputs, _ = self.walk(frames, depth, kept, ctx)
        result = {}
        for layer in layers:
            with stage(ctx, 'decoder{}'.format(layer)):
                result[layer] = self.decoders[layer].log_probs(outputs[layer], ctx)
        return result

    def run(self, signal, mode=None, ctx=None):
        return self.forward(self.embed(signal, ctx), mode, ctx)

    def output_rows(self, length):
        """
        Decoder rows produced for a `length`-sample input.
        """
        n = self.frontend_params.frames(length // self.adapter.factor)
        return 2 * n if self.config.double_output else n


def remove_layers(model, keep_n):
    """
    Returns a copy of `model` keeping layers 1..keep_n. The final decoder now
    reads layer keep_n; exit decoders above it are dropped.
    """
    if not isinstance(keep_n, (int, np.integer)) or not 1 <= keep_n <= model.num_layers:
        raise ModeError('keep_n must lie in 1..{}, got {!r}'.format(model.num_layers, keep_n))

    pruned = deepcopy(model)
    if keep_n == model.num_layers:
        return pruned

    final = pruned.decoders[model.num_layers]
    pruned.layers = pruned.layers[:keep_n]
    pruned.decoders = {layer: d for layer, d in pruned.decoders.items() if layer < keep_n}
    pruned.decoders[keep_n] = final
    pruned.config.update({'L': keep_n, 'first_exit': min(model.config.exit_start(), keep_n)})
    return pruned
