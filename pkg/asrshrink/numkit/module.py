from contextlib import nullcontext

import numpy as np

from asrshrink.numkit.tensor import ShapeError, Tensor, get_dtype


def parameter(values, name=None):
    return Tensor(values, requires_grad=True, name=name)


def init_normal(rng, shape, std, name=None):
    return parameter(rng.normal(0.0, std, size=shape).astype(get_dtype()), name=name)


def stage(ctx, label):
    """
    Opens a MAC counter stage when a counter is given.
    """
    return ctx.stage(label) if ctx is not None else nullcontext()


class Module:
    """
    Container of named parameter tensors. Parameters are discovered through
    the public attributes of the instance: tensors, sub-modules, and lists or
    dicts of either.
    """
    def named_parameters(self, prefix=''):
        for name, value in vars(self).items():
            if name.startswith('_'):
                continue
            yield from _walk(value, prefix + name)

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def trainable_parameters(self):
        return [p for p in self.parameters() if p.tracks]

    def num_parameters(self):
        return sum(p.size for p in self.parameters())

    def freeze(self):
        for p in self.parameters():
            p.freeze()
        return self

    def unfreeze(self):
        for p in self.parameters():
            p.unfreeze()
        return self

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self):
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state, strict=True):
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if strict and (missing or unexpected):
            raise ShapeError('state mismatch, missing={} unexpected={}'.format(missing, unexpected))

        for name, values in state.items():
            if name in own:
                own[name].assign(np.asarray(values))

    def checksum(self, frozen_only=False):
        """
        Order-independent digest of parameter values, used to check that
        frozen parameters stay bit-identical.
        """
        digest = {}
        for name, p in self.named_parameters():
            if frozen_only and not p.frozen:
                continue
            digest[name] = p.data.tobytes()
        return digest


def _walk(value, prefix):
    if isinstance(value, Tensor):
        if value.requires_grad:
            value.name = prefix
            yield prefix, value
    elif isinstance(value, Module):
        yield from value.named_parameters(prefix + '.')
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from _walk(item, '{}.{}'.format(prefix, i))
    elif isinstance(value, dict):
        for key in sorted(value):
            yield from _walk(value[key], '{}.{}'.format(prefix, key))
