"""
Word-level back-off n-gram model.

Probabilities are stored as natural logarithms keyed by the full n-gram
tuple; back-off weights are keyed by the context tuple. A query for an unseen
n-gram backs off recursively: log P(w | h) = bow(h) + log P(w | h[1:]).
"""
from collections import Counter, defaultdict
from math import exp, log

import numpy as np

from asrshrink.util.logging import LoggingClass

UNK = '<unk>'
BOS = '<s>'
EOS = '</s>'

# log10 value standard tooling writes for impossible events
LOG10_FLOOR = -99.0
LOG_FLOOR = LOG10_FLOOR * log(10.0)


class Smoothing:
    WITTEN_BELL = 'witten_bell'
    NONE = 'none'

    ALL = {WITTEN_BELL, NONE}


class NGramModel(LoggingClass):
    """
    Attributes
    ----------
    order : int
        Longest n-gram length.
    probs : dict(tuple, float)
        log P(w | h) for every stored n-gram h + (w,).
    backoffs : dict(tuple, float)
        log back-off weight of every context with stored continuations.
    sentence_markers : bool
        Sentences are scored between <s> and </s>.
    """
    def __init__(self, order, probs, backoffs=None, sentence_markers=True):
        if order < 1:
            raise ValueError('n-gram order must be at least 1, got {}'.format(order))

        self.order = order
        self.probs = dict(probs)
        self.backoffs = dict(backoffs or {})
        self.sentence_markers = sentence_markers
        self.vocab = {g[0] for g in self.probs if len(g) == 1}
        self._cache = {}

    def __repr__(self):
        return '<NGramModel order={} ngrams={} vocab={}>'.format(self.order, self.counts(), len(self.vocab))

    def counts(self):
        """
        Stored n-gram count per order, 1..order.
        """
        totals = Counter(len(g) for g in self.probs)
        return [totals.get(m, 0) for m in range(1, self.order + 1)]

    def normalize(self, word):
        return word if word in self.vocab else UNK

    def _lookup(self, context, word):
        ngram = context + (word,)
        if ngram in self.probs:
            return self.probs[ngram]
        if not context:
            return self.probs.get((UNK,), LOG_FLOOR) if word != UNK else LOG_FLOOR
        return self.backoffs.get(context, 0.0) + self._lookup(context[1:], word)

    def conditional(self, history, word):
        """
        log P(word | history), natural log; only the last order-1 history
        words are used, unknown words map to <unk>.
        """
        context = tuple(self.normalize(w) for w in history)[-(self.order - 1):] if self.order > 1 else ()
        key = (context, self.normalize(word))
        if key not in self._cache:
            self._cache[key] = self._lookup(*key)
        return self._cache[key]

    def initial_state(self):
        return (BOS,) if self.sentence_markers and self.order > 1 else ()

    def _advance(self, state, word):
        if self.order == 1:
            return ()
        return (state + (self.normalize(word),))[-(self.order - 1):]

    def score_word(self, state, word):
        return self.conditional(state, word), self._advance(state, word)

    def end_score(self, state):
        return self.conditional(state, EOS) if self.sentence_markers else 0.0

    def logprob(self, tokens, bos=None, eos=None):
        """
        Sum of the conditional log-probabilities of `tokens` (a word list or
        a whitespace separated string). Sentence markers default to the
        model's setting.
        """
        if isinstance(tokens, str):
            tokens = tokens.split()
        bos = self.sentence_markers if bos is None else bos
        eos = self.sentence_markers if eos is None else eos

        state = (BOS,) if bos and self.order > 1 else ()
        total = 0.0
        for word in tokens:
            logp, state = self.score_word(state, word)
            total += logp
        if eos:
            total += self.conditional(state, EOS)
        return total

    def sentence_score(self, words):
        state = self.initial_state()
        total = 0.0
        for word in words:
            logp, state = self.score_word(state, word)
            total += logp
        return total + self.end_score(state)

    def perplexity(self, texts):
        total, predicted = 0.0, 0
        for text in texts:
            words = text.split()
            total += self.logprob(words)
            predicted += len(words) + (1 if self.sentence_markers else 0)
        if not predicted:
            raise ValueError('perplexity of an empty text list')
        return exp(-total / predicted)


def count_ngrams(texts, order, sentence_markers=True):
    counts = [Counter() for _ in range(order)]
    for text in texts:
        words = text.split()
        if not words:
            continue
        seq = [BOS] + words + [EOS] if sentence_markers else words
        for m in range(1, order + 1):
            for i in range(len(seq) - m + 1):
                gram = tuple(seq[i:i + m])
                if gram == (BOS,):
                    continue
                counts[m - 1][gram] += 1
    return counts


def _unigrams(counts, smoothing, sentence_markers):
    total = sum(counts.values())
    types = len(counts)
    vocab = sorted(set(counts) | {(UNK,)})

    probs = {}
    for gram in vocab:
        c = counts.get(gram, 0)
        if smoothing == Smoothing.WITTEN_BELL:
            probs[gram] = log((c + types / float(len(vocab))) / (total + types))
        else:
            probs[gram] = log(c / float(total)) if c else LOG_FLOOR

    if sentence_markers:
        probs[(BOS,)] = LOG_FLOOR
    return probs


def train_ngram(texts, order=4, smoothing=Smoothing.WITTEN_BELL, sentence_markers=True):
    """
    Counts n-grams over whitespace-tokenized `texts` and turns them into a
    back-off model. Witten-Bell gives a seen continuation w of context h the
    probability c(h, w) / (c(h) + T(h)), T(h) being the number of distinct
    continuations, and leaves the rest to the lower order.
    """
    if order < 1:
        raise ValueError('n-gram order must be at least 1, got {}'.format(order))
    if smoothing not in Smoothing.ALL:
        raise ValueError('unknown smoothing {!r}, expected one of {}'.format(smoothing, sorted(Smoothing.ALL)))

    texts = list(texts)
    counts = count_ngrams(texts, order, sentence_markers)
    if not counts[0]:
        raise ValueError('cannot train a language model on an empty corpus')

    model = NGramModel(order, _unigrams(counts[0], smoothing, sentence_markers), {}, sentence_markers)

    for m in range(2, order + 1):
        by_context = defaultdict(dict)
        for gram, c in counts[m - 1].items():
            by_context[gram[:-1]][gram[-1]] = c

        for context in sorted(by_context):
            continuations = by_context[context]
            seen = sum(continuations.values())
            types = len(continuations)
            denominator = seen + types if smoothing == Smoothing.WITTEN_BELL else seen

            lower = context[1:]
            lower_mass = sum(exp(model._lookup(lower, w)) for w in continuations)
            for word, c in continuations.items():
                model.probs[context + (word,)] = log(c / float(denominator))

            if smoothing == Smoothing.WITTEN_BELL and lower_mass < 1.0:
                model.backoffs[context] = log(types / float(denominator)) - log(1.0 - lower_mass)
            else:
                model.backoffs[context] = LOG_FLOOR

    model.vocab = {g[0] for g in model.probs if len(g) == 1}
    model.log.debug('Trained %s on %d texts', model, len(texts))
    return model


def context_mass(model, context):
    """
    Total probability the model assigns to its vocabulary after `context`.
    """
    return float(np.sum([exp(model.conditional(context, w)) for w in model.vocab if w != BOS]))
