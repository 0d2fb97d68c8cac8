"""
Dense kernels over `Tensor`. Every kernel records its backward rule; the ones
that multiply-accumulate (`matmul`, and everything built on it) add their
closed-form MAC count to the optional `MacCounter` they are given.
"""
from logging import getLogger
from numbers import Number

import numpy as np

from asrshrink.numkit.macs import count
from asrshrink.numkit.tensor import NumericError, ShapeError, Tensor, as_tensor

logger = getLogger(__name__)

GELU_C = np.sqrt(2.0 / np.pi)


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)

    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)

    return grad


def add(a, b):
    if isinstance(b, Number):
        a = as_tensor(a)
        return Tensor.from_op(a.data + b, (a,), lambda g: (g,))
    if isinstance(a, Number):
        return add(b, a)

    a, b = as_tensor(a), as_tensor(b)

    def _backward(g):
        return (
            _unbroadcast(g, a.shape) if a.tracks else None,
            _unbroadcast(g, b.shape) if b.tracks else None,
        )

    return Tensor.from_op(a.data + b.data, (a, b), _backward)


def sub(a, b):
    if isinstance(b, Number):
        return add(a, -b)
    if isinstance(a, Number):
        return add(mul(b, -1.0), a)
    return add(a, mul(b, -1.0))


def mul(a, b):
    if isinstance(b, Number):
        a = as_tensor(a)
        return Tensor.from_op(a.data * b, (a,), lambda g: (g * b,))
    if isinstance(a, Number):
        return mul(b, a)

    a, b = as_tensor(a), as_tensor(b)

    def _backward(g):
        return (
            _unbroadcast(g * b.data, a.shape) if a.tracks else None,
            _unbroadcast(g * a.data, b.shape) if b.tracks else None,
        )

    return Tensor.from_op(a.data * b.data, (a, b), _backward)


def matmul(a, b, ctx=None):
    """
    Matrix product of `a` [n x m] and `b` [m x p] (or a batch of them sharing
    the leading dimension). Adds exactly batch * n * m * p MACs to `ctx`.
    """
    a, b = as_tensor(a), as_tensor(b)

    if a.ndim == 2 and b.ndim == 2:
        batch = 1
    elif a.ndim == 3 and b.ndim == 3 and a.shape[0] == b.shape[0]:
        batch = a.shape[0]
    else:
        raise ShapeError('matmul cannot combine shapes {} and {}'.format(a.shape, b.shape))

    n, m = a.shape[-2:]
    m2, p = b.shape[-2:]
    if m != m2:
        raise ShapeError('matmul inner dimensions differ: {} x {}'.format(a.shape, b.shape))

    count(ctx, batch * n * m * p)

    def _backward(g):
        return (
            g @ np.swapaxes(b.data, -1, -2) if a.tracks else None,
            np.swapaxes(a.data, -1, -2) @ g if b.tracks else None,
        )

    return Tensor.from_op(a.data @ b.data, (a, b), _backward)


def linear(x, weight, bias=None, ctx=None):
    out = matmul(x, weight, ctx)
    if bias is not None:
        out = add(out, bias)
    return out


def reshape(a, shape):
    a = as_tensor(a)
    original = a.shape
    return Tensor.from_op(a.data.reshape(shape), (a,), lambda g: (g.reshape(original),))


def transpose(a, axes=None):
    a = as_tensor(a)
    axes = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return Tensor.from_op(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def sum_all(a):
    a = as_tensor(a)
    shape = a.shape
    return Tensor.from_op(a.data.sum(), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def add_all(tensors):
    """
    Sums a list of equally shaped tensors.
    """
    tensors = list(tensors)
    if not tensors:
        raise ShapeError('add_all needs at least one tensor')

    out = tensors[0]
    for t in tensors[1:]:
        out = add(out, t)
    return out


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.data)
    return Tensor.from_op(out, (a,), lambda g: (g * out,))


def log(a):
    a = as_tensor(a)
    with np.errstate(divide='ignore'):
        out = np.log(a.data)
    return Tensor.from_op(out, (a,), lambda g: (g / a.data,))


def gelu(a):
    a = as_tensor(a)
    x = a.data
    inner = GELU_C * (x + 0.044715 * x ** 3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def _backward(g):
        d_inner = GELU_C * (1.0 + 3.0 * 0.044715 * x ** 2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * d_inner),)

    return Tensor.from_op(out, (a,), _backward)


def _check_finite(x, op):
    if np.isnan(x).any():
        raise NumericError('{} received NaN input'.format(op))


def _softmax_array(x):
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax(v):
    """
    Normalizes every slice along the last axis into a probability
    distribution. The row maximum is subtracted first, so the result is
    invariant to adding a constant to a row.
    """
    v = as_tensor(v)
    _check_finite(v.data, 'softmax')
    out = _softmax_array(v.data)

    def _backward(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return Tensor.from_op(out, (v,), _backward)


def log_softmax(v):
    v = as_tensor(v)
    _check_finite(v.data, 'log_softmax')
    shifted = v.data - v.data.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))

    def _backward(g):
        return (g - np.exp(out) * g.sum(axis=-1, keepdims=True),)

    return Tensor.from_op(out, (v,), _backward)


def layer_norm(a, gamma=None, beta=None, eps=1e-5):
    a = as_tensor(a)
    x = a.data
    width = x.shape[-1]
    mu = x.mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(x.var(axis=-1, keepdims=True) + eps)
    xhat = (x - mu) * inv

    out = xhat
    if gamma is not None:
        out = out * gamma.data
    if beta is not None:
        out = out + beta.data

    parents = tuple(t for t in (a, gamma, beta) if t is not None)

    def _backward(g):
        dxhat = g * gamma.data if gamma is not None else g
        grads = []
        if a.tracks:
            grads.append(inv / width * (
                width * dxhat
                - dxhat.sum(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
            ))
        else:
            grads.append(None)
        if gamma is not None:
            grads.append(_unbroadcast(g * xhat, gamma.shape) if gamma.tracks else None)
        if beta is not None:
            grads.append(_unbroadcast(g, beta.shape) if beta.tracks else None)
        return tuple(grads)

    return Tensor.from_op(out, parents, _backward)


def unfold(a, kernel, stride, length, pad_left=0, mode='zero'):
    """
    Gathers `length` windows of `kernel` consecutive rows, `stride` rows
    apart, from `a` [T x C] (or [T]) into a [length x kernel*C] matrix.
    Positions outside the signal read zero (`mode='zero'`) or the nearest
    edge sample (`mode='edge'`).
    """
    a = as_tensor(a)
    x = a.data if a.ndim == 2 else a.data.reshape(-1, 1)
    total, channels = x.shape

    positions = (np.arange(length)[:, None] * stride + np.arange(kernel)[None, :]) - pad_left
    inside = (positions >= 0) & (positions < total)
    clipped = np.clip(positions, 0, total - 1)

    windows = x[clipped]
    if mode == 'zero':
        windows = windows * inside[:, :, None]
    elif mode != 'edge':
        raise ValueError('Unknown unfold padding mode {!r}'.format(mode))

    source_shape = a.shape

    def _backward(g):
        g = g.reshape(length, kernel, channels)
        if mode == 'zero':
            g = g * inside[:, :, None]
        gx = np.zeros((total, channels), dtype=g.dtype)
        np.add.at(gx, clipped.reshape(-1), g.reshape(-1, channels))
        return (gx.reshape(source_shape),)

    return Tensor.from_op(windows.reshape(length, kernel * channels), (a,), _backward)


def cosine_sim(ra, rb):
    """
    Mean over frames of the per-frame cosine similarity between two [N x A]
    frame sequences. A frame with zero norm in either input contributes 0.
    """
    ra = ra.data if isinstance(ra, Tensor) else np.asarray(ra, dtype=float)
    rb = rb.data if isinstance(rb, Tensor) else np.asarray(rb, dtype=float)
    if ra.shape != rb.shape or ra.ndim != 2:
        raise ShapeError('cosine_sim needs equal [N x A] shapes, got {} and {}'.format(ra.shape, rb.shape))

    dots = (ra * rb).sum(axis=1)
    norms = np.linalg.norm(ra, axis=1) * np.linalg.norm(rb, axis=1)
    zero = norms == 0
    if zero.any():
        logger.warning('cosine_sim: %d of %d frames have zero norm, scored as 0', int(zero.sum()), len(norms))

    sims = np.where(zero, 0.0, dots / np.where(zero, 1.0, norms))
    return float(sims.mean())
