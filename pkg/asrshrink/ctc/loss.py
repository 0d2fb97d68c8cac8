"""
CTC negative log-likelihood by forward-backward in log space.

The core op takes per-frame log-probabilities; its gradient with respect to
log y[t, k] is minus the posterior occupancy of symbol k at frame t.
"""
import numpy as np

from asrshrink.numkit import NumericError, ShapeError, Tensor, as_tensor, log

BLANK = 0


class InfeasibleTargetError(ValueError):
    pass


def repeats(target):
    return sum(1 for a, b in zip(target, target[1:]) if a == b)


def min_frames(target):
    """
    Fewest frames able to emit `target`: one per symbol plus one blank
    between every pair of equal neighbours.
    """
    return len(target) + repeats(target)


def is_feasible(frames, target):
    return frames >= min_frames(target)


def _encode(target, vocab):
    if isinstance(target, str):
        if vocab is None:
            raise ValueError('a text target needs a vocabulary')
        return vocab.encode(target)
    return [int(k) for k in target]


def _extend(target, blank):
    ext = [blank]
    for k in target:
        ext.extend((k, blank))
    return np.asarray(ext)


def _shift(row, by):
    out = np.full_like(row, -np.inf)
    out[by:] = row[:-by]
    return out


def _unshift(row, by):
    out = np.full_like(row, -np.inf)
    out[:-by] = row[by:]
    return out


def _lattice(lp, ext, blank):
    n, size = lp.shape[0], len(ext)
    emit = lp[:, ext]
    skip = np.zeros(size, dtype=bool)
    skip[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])

    alpha = np.full((n, size), -np.inf)
    alpha[0, 0] = emit[0, 0]
    if size > 1:
        alpha[0, 1] = emit[0, 1]
    for t in range(1, n):
        a = alpha[t - 1]
        if size > 1:
            hop = np.where(skip, _shift(a, 2), -np.inf) if size > 2 else np.full(size, -np.inf)
            a = np.logaddexp(np.logaddexp(a, _shift(a, 1)), hop)
        alpha[t] = a + emit[t]

    beta = np.full((n, size), -np.inf)
    beta[n - 1, size - 1] = emit[n - 1, size - 1]
    if size > 1:
        beta[n - 1, size - 2] = emit[n - 1, size - 2]
    skip_ahead = np.zeros(size, dtype=bool)
    skip_ahead[:-2] = skip[2:]
    for t in range(n - 2, -1, -1):
        b = beta[t + 1]
        if size > 1:
            hop = np.where(skip_ahead, _unshift(b, 2), -np.inf) if size > 2 else np.full(size, -np.inf)
            b = np.logaddexp(np.logaddexp(b, _unshift(b, 1)), hop)
        beta[t] = b + emit[t]

    return emit, alpha, beta


def ctc_nll(log_probs, target, blank=BLANK):
    """
    -ln p(target | log_probs) for an [N x P] matrix of per-frame log
    probabilities and a sequence of symbol indices (blank excluded).
    """
    log_probs = as_tensor(log_probs)
    if log_probs.ndim != 2:
        raise ShapeError('CTC expects [N x P] log probabilities, got shape {}'.format(log_probs.shape))

    target = [int(k) for k in target]
    n, symbols = log_probs.shape
    if any(k == blank or not 0 <= k < symbols for k in target):
        raise ShapeError('target indices must be non-blank symbols below {}, got {}'.format(symbols, target))
    if not is_feasible(n, target):
        raise InfeasibleTargetError('target of length {} needs at least {} frames, got {}'.format(
            len(target), min_frames(target), n))

    lp = np.asarray(log_probs.data, dtype=np.float64)
    ext = _extend(target, blank)
    with np.errstate(invalid='ignore', divide='ignore'):
        emit, alpha, beta = _lattice(lp, ext, blank)

    tail = alpha[n - 1, -1] if len(ext) == 1 else np.logaddexp(alpha[n - 1, -1], alpha[n - 1, -2])
    if not np.isfinite(tail):
        raise NumericError('total alignment probability underflowed for a feasible target')

    dtype = log_probs.data.dtype

    def _backward(g):
        with np.errstate(invalid='ignore'):
            joint = np.where(np.isneginf(alpha) | np.isneginf(beta), -np.inf, alpha + beta - emit)
        occupancy = np.zeros((n, symbols))
        np.add.at(occupancy, (slice(None), ext), np.exp(joint - tail))
        return ((-g * occupancy).astype(dtype),)

    return Tensor.from_op(np.asarray(-tail, dtype=dtype), (log_probs,), _backward)


def ctc_loss(probs, target, vocab=None, blank=BLANK):
    """
    CTC loss over an [N x P] matrix of per-frame probabilities. `target` is a
    string (encoded through `vocab`) or a list of symbol indices.
    """
    return ctc_nll(log(as_tensor(probs)), _encode(target, vocab), blank)
