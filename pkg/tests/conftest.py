import numpy as np
import pytest

from asrshrink.corpus import CharVocab, gen_corpus
from asrshrink.encoder import SpeechEncoder
from asrshrink.util.rng import generator

# Small shapes keep every forward pass in the millisecond range.
TINY_FRONTEND = {'kernels': [10, 8, 4], 'strides': [10, 8, 4], 'channels': [8, 8], 'dim': 8, 'seed': 0}
TINY_ENCODER = {'L': 4, 'A': 8, 'H': 2, 'F': 16, 'P': 28, 'first_exit': 2, 'seed': 0}

# Wide enough that projection and feed-forward MACs dominate attention at toy N.
WIDE_FRONTEND = dict(TINY_FRONTEND, dim=64)
WIDE_ENCODER = {'L': 2, 'A': 64, 'H': 4, 'F': 256, 'P': 28, 'seed': 0}


def tiny_model(downsample=None, **overrides):
    return SpeechEncoder(dict(TINY_ENCODER, **overrides), TINY_FRONTEND, downsample)


def random_frames(n, dim, seed=0):
    return generator(seed, 'frames').normal(0.0, 1.0, size=(n, dim))


def dirichlet_rows(rng, n, p):
    return rng.dirichlet(np.ones(p), size=n)


@pytest.fixture(scope='session')
def vocab():
    return CharVocab()


@pytest.fixture(scope='session')
def corpus():
    return gen_corpus(24, seed=3, max_words=2)


@pytest.fixture
def model():
    return tiny_model()


@pytest.fixture
def run_config():
    return {
        'encoder': TINY_ENCODER,
        'frontend': TINY_FRONTEND,
        'train': {'epochs': 0, 'batch_size': 4},
        'lm': {'order': 2},
        'bench': {'repeats': 1, 'serial': True},
    }
