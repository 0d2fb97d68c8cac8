"""
Seeded random streams. Every consumer derives its own Philox (counter-based)
generator from a root seed and a stream key, so the same (seed, key) always
yields the same draws regardless of what other streams consumed.
"""
from zlib import crc32 as zlib_crc32

from numpy.random import Generator, Philox, SeedSequence


def _key_part(part):
    if isinstance(part, int):
        if part < 0:
            raise ValueError('stream keys must be non-negative, got {}'.format(part))
        return part
    return zlib_crc32(str(part).encode('utf-8'))


def generator(seed, *stream):
    """
    Returns a `numpy.random.Generator` backed by Philox for `seed` and the
    (optional) stream key, e.g. ``generator(7, 'layerdrop', utterance_index)``.
    """
    if seed is None or int(seed) < 0:
        raise ValueError('seed must be a non-negative integer, got {!r}'.format(seed))

    sequence = SeedSequence(int(seed), spawn_key=tuple(_key_part(p) for p in stream))
    return Generator(Philox(sequence))
