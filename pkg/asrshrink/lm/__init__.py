from asrshrink.lm.arpa import ArpaFormatError, dumps_arpa, loads_arpa, read_arpa, write_arpa  # noqa: F401
from asrshrink.lm.ngram import (  # noqa: F401
    BOS, EOS, LOG10_FLOOR, LOG_FLOOR, UNK, NGramModel, Smoothing, context_mass, count_ngrams, train_ngram,
)


def logprob(model, tokens, bos=None, eos=None):
    return model.logprob(tokens, bos, eos)
