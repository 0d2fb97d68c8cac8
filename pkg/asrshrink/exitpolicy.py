"""
Early-exit heuristics. After every tapped layer the encoder asks `decide`
whether to stop: on low entropy of that layer's decoder output, or on high
cosine similarity between the layer's output and its input.
"""
from collections import namedtuple
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from asrshrink.numkit import Tensor, cosine_sim
from asrshrink.util.config import Config
from asrshrink.util.serializer import dump_records, load_records

ROW_TOLERANCE = 1e-6


class PolicyError(ValueError):
    pass


class Heuristic:
    ENTROPY = 'entropy'
    SIMILARITY = 'similarity'

    ALL = {ENTROPY, SIMILARITY}


class Action:
    EXIT = 'exit'
    CONTINUE = 'continue'


Decision = namedtuple('Decision', ('action', 'value'))


class ExitPolicy(Config):
    """
    Attributes
    ----------
    heuristic : str
        'entropy' (exit when E_i < threshold) or 'similarity' (exit when
        cos(R_i, R_{i-1}) >= threshold).
    threshold : float
        tau_e or tau_s.
    first_exit : Optional[int]
        First tapped layer; None defers to the encoder configuration.
    two_step : bool
        Exit decoders are trained on a frozen, already fine-tuned encoder.
    """
    heuristic = Heuristic.ENTROPY
    threshold = 0.05
    first_exit = None
    two_step = False

    def validate(self):
        self.require('heuristic', lambda v: v in Heuristic.ALL, 'unknown exit heuristic')
        if self.heuristic == Heuristic.ENTROPY:
            # 0 is accepted as the never-exit-early degenerate threshold
            self.require('threshold', lambda v: v >= 0, 'entropy threshold must be non-negative')
        else:
            self.require('threshold', lambda v: -1.0 < v <= 1.0, 'similarity threshold must lie in (-1, 1]')
        self.require('first_exit', lambda v: v is None or int(v) >= 1, 'must be a positive layer index')
        return self

    @property
    def needs_probs(self):
        return self.heuristic == Heuristic.ENTROPY

    def label(self):
        return '{}<{}'.format(self.heuristic, self.threshold) if self.heuristic == Heuristic.ENTROPY \
            else '{}>={}'.format(self.heuristic, self.threshold)


@dataclass
class ExitRecord:
    id: str
    exit_layer: int
    value: Optional[float] = None
    trace: List[Tuple[int, float]] = field(default_factory=list)

    def to_dict(self):
        return {
            'id': self.id,
            'exit_layer': self.exit_layer,
            'value': self.value,
            'trace': [[layer, value] for layer, value in self.trace],
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            id=obj['id'],
            exit_layer=int(obj['exit_layer']),
            value=obj.get('value'),
            trace=[(int(layer), value) for layer, value in obj.get('trace', [])],
        )


def _array(probs):
    return probs.data if isinstance(probs, Tensor) else np.asarray(probs, dtype=np.float64)


def entropy(probs):
    """
    Mean per-symbol entropy of N probability rows over P symbols:
    -1/(N*P) * sum p * ln p, with 0 * ln 0 taken as 0.
    """
    p = _array(probs)
    if p.ndim != 2:
        raise PolicyError('entropy expects an [N x P] matrix, got shape {}'.format(p.shape))

    sums = p.sum(axis=1)
    worst = np.abs(sums - 1.0).max()
    if worst > ROW_TOLERANCE or (p < 0).any():
        raise PolicyError('rows are not probability distributions (max |sum - 1| = {:.3g})'.format(worst))

    positive = p > 0
    terms = np.zeros_like(p)
    terms[positive] = p[positive] * np.log(p[positive])
    return float(-terms.sum() / p.size)


def heuristic_value(policy, ri=None, r_prev=None, probs=None):
    if policy.heuristic == Heuristic.ENTROPY:
        if probs is None:
            raise PolicyError('the entropy heuristic needs the decoder output of the layer')
        return entropy(probs)

    if ri is None or r_prev is None:
        raise PolicyError('the similarity heuristic needs the layer output and its input')
    return cosine_sim(ri, r_prev)


def decide(policy, layer, ri=None, r_prev=None, probs=None, last_layer=None):
    """
    Returns a `Decision` for tapped layer `layer`. The last layer always
    exits; its heuristic value is still reported when the inputs allow it.
    """
    first = policy.first_exit or 1
    if layer < first:
        raise PolicyError('layer {} is below the first exit layer {}'.format(layer, first))

    if last_layer is not None and layer >= last_layer:
        try:
            value = heuristic_value(policy, ri, r_prev, probs)
        except PolicyError:
            value = None
        return Decision(Action.EXIT, value)

    value = heuristic_value(policy, ri, r_prev, probs)
    if policy.heuristic == Heuristic.ENTROPY:
        confident = value < policy.threshold
    else:
        confident = value >= policy.threshold
    return Decision(Action.EXIT if confident else Action.CONTINUE, value)


def mean_exit(records):
    records = list(records)
    if not records:
        raise PolicyError('mean exit layer of an empty record list')
    return float(np.mean([r.exit_layer if isinstance(r, ExitRecord) else int(r) for r in records]))


def monotonicity_violations(points, heuristic=Heuristic.ENTROPY):
    """
    Given (threshold, mean exit layer) pairs, returns the adjacent pairs
    (sorted by threshold) that break the expected ordering: mean exit is
    non-increasing in the entropy threshold and non-decreasing in the
    similarity threshold.
    """
    ordered = sorted(points)
    violations = []
    for (t0, m0), (t1, m1) in zip(ordered, ordered[1:]):
        broken = m1 > m0 if heuristic == Heuristic.ENTROPY else m1 < m0
        if broken:
            violations.append(((t0, m0), (t1, m1)))
    return violations


def dump_trace(path, records):
    dump_records(path, (r.to_dict() for r in records))


def load_trace(path):
    return [ExitRecord.from_dict(obj) for obj in load_records(path)]
