"""
Checkpoint container: a numpy ``.npz`` archive holding every named parameter
as a little-endian float64 array, plus a ``__meta__`` entry with the UTF-8
JSON header (format version, encoder / front-end / adapter configuration and
free-form run metadata).
"""
from logging import getLogger

import numpy as np

from asrshrink.encoder.model import SpeechEncoder
from asrshrink.util.serializer import Serializer

log = getLogger(__name__)

CHECKPOINT_VERSION = 1
META_KEY = '__meta__'


class CheckpointError(ValueError):
    pass


def save_checkpoint(model, path, **meta):
    _, dumps = Serializer.json()
    header = {
        'version': CHECKPOINT_VERSION,
        'encoder': model.config.to_dict(),
        'frontend': model.frontend_params.to_dict(),
        'downsample': model.downsample.to_dict(),
        'meta': meta,
    }

    arrays = {name: np.ascontiguousarray(values, dtype='<f8') for name, values in model.state_dict().items()}
    arrays[META_KEY] = np.frombuffer(dumps(header).encode('utf-8'), dtype=np.uint8)

    with open(path, 'wb') as f:
        np.savez(f, **arrays)

    log.debug('Saved %d parameters to %s', len(arrays) - 1, path)


def read_header(archive):
    if META_KEY not in archive.files:
        raise CheckpointError('checkpoint has no {} entry'.format(META_KEY))

    loads, _ = Serializer.json()
    header = loads(archive[META_KEY].tobytes().decode('utf-8'))
    if header.get('version') != CHECKPOINT_VERSION:
        raise CheckpointError('unsupported checkpoint version {!r}'.format(header.get('version')))
    return header


def load_checkpoint(path):
    """
    Rebuilds the model stored at `path`. Returns (model, meta).
    """
    with np.load(path, allow_pickle=False) as archive:
        header = read_header(archive)
        model = SpeechEncoder(header['encoder'], header['frontend'], header['downsample'])
        state = {name: archive[name] for name in archive.files if name != META_KEY}

    model.load_state_dict(state)
    return model, header.get('meta', {})
