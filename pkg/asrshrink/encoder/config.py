from math import ceil

from asrshrink.exitpolicy import ExitPolicy
from asrshrink.util.config import Config


class ModeError(ValueError):
    pass


class EncoderConfig(Config):
    """
    Attributes
    ----------
    L : int
        Number of transformer layers.
    A : int
        Model dimension.
    H : int
        Attention heads; must divide A.
    F : Optional[int]
        Feed-forward dimension, 4 * A when unset.
    first_exit : Optional[int]
        First layer with an exit decoder, ceil(L / 2) when unset.
    P : int
        Output symbols including the CTC blank.
    double_output : bool
        Decoders emit two character distributions per frame.
    exits : bool
        Build exit decoders for layers first_exit..L-1.
    seed : int
        Initialization seed.
    """
    L = 8
    A = 64
    H = 4
    F = None
    first_exit = None
    P = 28
    double_output = False
    exits = True
    seed = 0

    def validate(self):
        self.require('L', lambda v: int(v) >= 1, 'need at least one layer')
        self.require('A', lambda v: int(v) >= 1, 'must be positive')
        self.require('H', lambda v: int(v) >= 1 and self.A % int(v) == 0, 'heads must divide A')
        self.require('F', lambda v: v is None or int(v) >= 1, 'must be positive')
        self.require('P', lambda v: int(v) >= 2, 'need the blank and at least one character')
        self.require('first_exit', lambda v: v is None or 1 <= int(v) <= self.L, 'must lie in 1..L')
        return self

    def ff_dim(self):
        return self.F or 4 * self.A

    def exit_start(self):
        return self.first_exit or int(ceil(self.L / 2.0))

    def exit_layers(self):
        """
        Layers carrying a decoder: the tapped ones (when exits are on) and L.
        """
        taps = list(range(self.exit_start(), self.L)) if self.exits else []
        return taps + [self.L]

    def output_width(self):
        return 2 * self.P if self.double_output else self.P


class ForwardMode:
    """
    How a forward pass walks the layer stack.
    """
    FULL = 'full'
    REMOVAL = 'removal'
    LAYERDROP = 'layerdrop'
    EARLY_EXIT = 'early_exit'

    ALL = {FULL, REMOVAL, LAYERDROP, EARLY_EXIT}

    def __init__(self, kind=FULL, keep_n=None, p=None, seed=0, policy=None):
        if kind not in self.ALL:
            raise ModeError('unknown forward mode {!r}'.format(kind))

        self.kind = kind
        self.keep_n = keep_n
        self.p = p
        self.seed = seed
        self.policy = ExitPolicy(policy).validate() if policy is not None else None

    def __repr__(self):
        return '<ForwardMode {}>'.format(self.label())

    @classmethod
    def full(cls):
        return cls(cls.FULL)

    @classmethod
    def removal(cls, keep_n):
        return cls(cls.REMOVAL, keep_n=keep_n)

    @classmethod
    def layerdrop(cls, p, seed=0):
        return cls(cls.LAYERDROP, p=p, seed=seed)

    @classmethod
    def early_exit(cls, policy):
        return cls(cls.EARLY_EXIT, policy=policy)

    def label(self):
        if self.kind == self.REMOVAL:
            return 'removal({})'.format(self.keep_n)
        if self.kind == self.LAYERDROP:
            return 'layerdrop({}, seed={})'.format(self.p, self.seed)
        if self.kind == self.EARLY_EXIT:
            return 'early_exit({})'.format(self.policy.label())
        return self.kind

    def validate(self, num_layers):
        if self.kind == self.REMOVAL:
            if self.keep_n is None or not 1 <= int(self.keep_n) <= num_layers:
                raise ModeError('keep_n must lie in 1..{}, got {!r}'.format(num_layers, self.keep_n))
        elif self.kind == self.LAYERDROP:
            if self.p is None or not 0.0 <= float(self.p) <= 1.0:
                raise ModeError('layerdrop probability must lie in [0, 1], got {!r}'.format(self.p))
        elif self.kind == self.EARLY_EXIT and self.policy is None:
            raise ModeError('early exit needs an exit policy')
        return self
