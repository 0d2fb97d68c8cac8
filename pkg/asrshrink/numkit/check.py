import numpy as np

from asrshrink.numkit.tensor import backward
from asrshrink.util.rng import generator


def _evaluate(loss_fn):
    return float(loss_fn().data)


def gradcheck(loss_fn, params, eps=1e-5, samples=None, seed=0):
    """
    Compares the analytic gradients of ``loss_fn()`` with respect to `params`
    against central finite differences.

    Parameters
    ----------
    loss_fn : callable
        Rebuilds the graph and returns a scalar `Tensor`.
    params : list[Tensor]
        Leaves to check.
    eps : float
        Finite difference step.
    samples : Optional[int]
        If set, only this many (seeded) entries per parameter are perturbed.

    Returns
    -------
    dict(str, float)
        Relative error ||analytic - numeric|| / (||analytic|| + ||numeric||)
        per parameter name (or index).
    """
    for p in params:
        p.zero_grad()
    backward(loss_fn())

    rng = generator(seed, 'gradcheck')
    errors = {}
    for index, p in enumerate(params):
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        flat = np.arange(p.size)
        if samples is not None and samples < p.size:
            flat = np.sort(rng.choice(p.size, size=samples, replace=False))

        numeric = np.empty(len(flat))
        original = p.data.copy()
        for i, position in enumerate(flat):
            shifted = original.copy()
            shifted.flat[position] += eps
            p.data = shifted
            plus = _evaluate(loss_fn)

            shifted = original.copy()
            shifted.flat[position] -= eps
            p.data = shifted
            minus = _evaluate(loss_fn)

            numeric[i] = (plus - minus) / (2.0 * eps)
        p.data = original

        picked = analytic.reshape(-1)[flat]
        scale = np.linalg.norm(picked) + np.linalg.norm(numeric)
        error = np.linalg.norm(picked - numeric) / scale if scale > 0 else 0.0
        errors[p.name or str(index)] = float(error)

    return errors
