import numpy as np


class Adam:
    """
    Adaptive moment estimation over a fixed list of parameter tensors.
    Parameters without a gradient (or frozen) are left untouched.
    """
    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.steps = 0
        self._moments = {}

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.steps += 1
        correction1 = 1.0 - self.beta1 ** self.steps
        correction2 = 1.0 - self.beta2 ** self.steps

        for p in self.params:
            if p.grad is None or p.frozen:
                continue

            m, v = self._moments.get(id(p), (np.zeros_like(p.data), np.zeros_like(p.data)))
            m = self.beta1 * m + (1.0 - self.beta1) * p.grad
            v = self.beta2 * v + (1.0 - self.beta2) * p.grad ** 2
            self._moments[id(p)] = (m, v)

            update = self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            p.assign(p.data - update)
