from contextlib import contextmanager


class MacCounter:
    """
    Counts multiply-accumulate operations for one evaluation context.

    Attributes
    ----------
    total : int
        Sum of every count recorded so far.
    per_stage : dict(str, int)
        Counts broken down by the stage label active when they were recorded.
    """
    DEFAULT_STAGE = 'other'

    def __init__(self):
        self.total = 0
        self.per_stage = {}
        self._stages = [self.DEFAULT_STAGE]

    def __repr__(self):
        return '<MacCounter total={} stages={}>'.format(self.total, len(self.per_stage))

    @property
    def current_stage(self):
        return self._stages[-1]

    def add(self, count, stage=None):
        count = int(count)
        if count < 0:
            raise ValueError('MAC counts are non-negative, got {}'.format(count))

        label = stage or self.current_stage
        self.per_stage[label] = self.per_stage.get(label, 0) + count
        self.total += count
        return count

    @contextmanager
    def stage(self, label):
        self._stages.append(label)
        try:
            yield self
        finally:
            self._stages.pop()

    def stage_total(self, prefix):
        """
        Sum over every stage whose label starts with `prefix`.
        """
        return sum(v for k, v in self.per_stage.items() if k.startswith(prefix))

    def merge(self, other):
        for label, count in other.per_stage.items():
            self.add(count, stage=label)
        return self


def count(ctx, macs):
    if ctx is not None:
        ctx.add(macs)
    return macs
