import numpy as np

from asrshrink.numkit import (
    Module, ShapeError, as_tensor, gelu, init_normal, layer_norm, linear, log_softmax, matmul, parameter, reshape,
    softmax, transpose,
)


class Linear(Module):
    def __init__(self, rng, n_in, n_out):
        self.weight = init_normal(rng, (n_in, n_out), 1.0 / np.sqrt(n_in))
        self.bias = parameter(np.zeros(n_out))

    @property
    def n_in(self):
        return self.weight.shape[0]

    def __call__(self, x, ctx=None):
        return linear(x, self.weight, self.bias, ctx)


class LayerNorm(Module):
    def __init__(self, dim):
        self.gamma = parameter(np.ones(dim))
        self.beta = parameter(np.zeros(dim))

    def __call__(self, x):
        return layer_norm(x, self.gamma, self.beta)


def positional_encoding(n, dim):
    """
    Sinusoidal position table [n x dim].
    """
    positions = np.arange(n)[:, None]
    rates = np.exp(-np.log(10000.0) * (np.arange(0, dim, 2) / float(dim)))
    table = np.zeros((n, dim))
    table[:, 0::2] = np.sin(positions * rates)
    table[:, 1::2] = np.cos(positions * rates[:dim // 2])
    return table


class TransformerLayer(Module):
    """
    Pre-norm transformer block: x + MHA(LN(x)), then x + FF(LN(x)).
    Per frame it costs 4*A^2 projection MACs, 2*A*F feed-forward MACs and
    2*N*A attention score and context MACs.
    """
    def __init__(self, rng, dim, heads, ff_dim):
        self.heads = heads
        self.norm_attention = LayerNorm(dim)
        self.query = Linear(rng, dim, dim)
        self.key = Linear(rng, dim, dim)
        self.value = Linear(rng, dim, dim)
        self.output = Linear(rng, dim, dim)
        self.norm_ff = LayerNorm(dim)
        self.ff_in = Linear(rng, dim, ff_dim)
        self.ff_out = Linear(rng, ff_dim, dim)

    def _split(self, x, n, dim):
        return transpose(reshape(x, (n, self.heads, dim // self.heads)), (1, 0, 2))

    def attention(self, x, ctx=None):
        n, dim = x.shape
        q = self._split(self.query(x, ctx), n, dim)
        k = self._split(self.key(x, ctx), n, dim)
        v = self._split(self.value(x, ctx), n, dim)

        scores = matmul(q, transpose(k, (0, 2, 1)), ctx) * (1.0 / np.sqrt(dim // self.heads))
        context = matmul(softmax(scores), v, ctx)
        merged = reshape(transpose(context, (1, 0, 2)), (n, dim))
        return self.output(merged, ctx)

    def __call__(self, x, ctx=None):
        x = x + self.attention(self.norm_attention(x), ctx)
        return x + self.ff_out(gelu(self.ff_in(self.norm_ff(x), ctx)), ctx)


class ExitDecoder(Module):
    """
    Two affine layers mapping frames to per-frame character logits. With
    `double_output` the N x 2P logits are read as 2N x P, two characters per
    frame.
    """
    def __init__(self, rng, dim, symbols, double_output=False):
        self.symbols = symbols
        self.double_output = double_output
        self.hidden = Linear(rng, dim, dim)
        self.out = Linear(rng, dim, 2 * symbols if double_output else symbols)

    def logits(self, frames, ctx=None):
        frames = as_tensor(frames)
        if frames.ndim != 2 or frames.shape[1] != self.hidden.n_in:
            raise ShapeError('decoder expects [N x {}] frames, got {}'.format(self.hidden.n_in, frames.shape))

        out = self.out(gelu(self.hidden(frames, ctx)), ctx)
        if self.double_output:
            out = reshape(out, (2 * frames.shape[0], self.symbols))
        return out

    def log_probs(self, frames, ctx=None):
        return log_softmax(self.logits(frames, ctx))

    def __call__(self, frames, ctx=None):
        return softmax(self.logits(frames, ctx))
