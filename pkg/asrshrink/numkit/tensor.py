from contextlib import contextmanager

import numpy as np


PRECISIONS = {
    'float64': np.float64,
    'float32': np.float32,
}

_precision = {'dtype': np.float64}


class ShapeError(ValueError):
    pass


class NumericError(ValueError):
    pass


def set_precision(name):
    """
    Selects the floating point type new tensors are created with. 64-bit is
    the default; 32-bit is offered for speed experiments.
    """
    if name not in PRECISIONS:
        raise ValueError('Unknown precision {!r}, expected one of {}'.format(name, sorted(PRECISIONS)))
    _precision['dtype'] = PRECISIONS[name]


def get_dtype():
    return _precision['dtype']


def precision_name():
    return np.dtype(get_dtype()).name


@contextmanager
def precision(name):
    previous = _precision['dtype']
    set_precision(name)
    try:
        yield
    finally:
        _precision['dtype'] = previous


class Tensor:
    """
    A dense array that records the operation which produced it, so that
    `backward` can propagate gradients to the leaves it depends on.

    Attributes
    ----------
    data : numpy.ndarray
        The values. Arrays produced by operations are read-only.
    grad : Optional[numpy.ndarray]
        Accumulated gradient (leaves only), same shape as `data`.
    requires_grad : bool
        Whether gradients should be computed for this tensor.
    frozen : bool
        Frozen leaves never receive gradients, even when `requires_grad` is set.
    name : Optional[str]
        Parameter name, used by checkpoints and optimizers.
    """
    __slots__ = ('data', 'grad', 'requires_grad', 'frozen', 'name', '_parents', '_backward')

    def __init__(self, data, requires_grad=False, frozen=False, name=None, dtype=None):
        data = np.array(data, dtype=dtype or get_dtype())
        if any(d <= 0 for d in data.shape):
            raise ShapeError('tensor dimensions must be positive, got shape {}'.format(data.shape))

        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self.frozen = frozen
        self.name = name
        self._parents = ()
        self._backward = None

    @classmethod
    def from_op(cls, data, parents, backward):
        """
        Wraps the result of an operation. `backward` maps the output gradient
        to a tuple with one gradient (or None) per parent.
        """
        inst = cls.__new__(cls)
        data = np.asarray(data)
        data.setflags(write=False)
        inst.data = data
        inst.grad = None
        inst.frozen = False
        inst.name = None
        inst.requires_grad = any(p.tracks for p in parents)
        inst._parents = tuple(parents) if inst.requires_grad else ()
        inst._backward = backward if inst.requires_grad else None
        return inst

    def __repr__(self):
        return '<Tensor shape={} dtype={}{}{}>'.format(
            self.shape, self.data.dtype,
            ' name={}'.format(self.name) if self.name else '',
            ' frozen' if self.frozen else '',
        )

    @property
    def tracks(self):
        return self.requires_grad and not self.frozen

    @property
    def is_leaf(self):
        return self._backward is None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def freeze(self):
        self.frozen = True
        self.grad = None
        return self

    def unfreeze(self):
        self.frozen = False
        return self

    def assign(self, values):
        """
        Replaces the values of a leaf (used by optimizers and checkpoint loading).
        """
        values = np.asarray(values, dtype=self.data.dtype)
        if values.shape != self.data.shape:
            raise ShapeError('cannot assign shape {} to tensor {} of shape {}'.format(
                values.shape, self.name, self.data.shape))
        self.data = values.copy()

    def __add__(self, other):
        from asrshrink.numkit.ops import add
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from asrshrink.numkit.ops import sub
        return sub(self, other)

    def __rsub__(self, other):
        from asrshrink.numkit.ops import sub
        return sub(other, self)

    def __mul__(self, other):
        from asrshrink.numkit.ops import mul
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from asrshrink.numkit.ops import mul
        return mul(self, -1.0)

    def __truediv__(self, other):
        from asrshrink.numkit.ops import mul
        if isinstance(other, Tensor):
            raise TypeError('division by a tensor is not supported')
        return mul(self, 1.0 / other)

    def __matmul__(self, other):
        from asrshrink.numkit.ops import matmul
        return matmul(self, other)


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _topological(root):
    order = []
    seen = set()
    stack = [(root, False)]

    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue

        if id(node) in seen:
            continue
        seen.add(id(node))

        stack.append((node, True))
        for parent in node._parents:
            if parent.tracks and id(parent) not in seen:
                stack.append((parent, False))

    return order


def backward(loss):
    """
    Reverse-mode differentiation from a scalar `loss`. Gradients accumulate
    into the `grad` of every reachable leaf that requires them and is not
    frozen.
    """
    if not isinstance(loss, Tensor) or loss.data.shape != ():
        raise ShapeError('backward expects a scalar loss, got shape {}'.format(
            getattr(loss, 'shape', type(loss).__name__)))

    if not loss.tracks:
        return

    grads = {id(loss): np.ones((), dtype=loss.data.dtype)}
    for node in reversed(_topological(loss)):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue

        if node.is_leaf:
            node.grad = grad.copy() if node.grad is None else node.grad + grad
            continue

        for parent, parent_grad in zip(node._parents, node._backward(grad)):
            if parent_grad is None or not parent.tracks:
                continue

            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + parent_grad
            else:
                grads[key] = parent_grad
