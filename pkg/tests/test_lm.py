from math import exp, log

import numpy as np
import pytest

from asrshrink.corpus import DEFAULT_LEXICON
from asrshrink.lm import (
    BOS, EOS, LOG_FLOOR, UNK, ArpaFormatError, Smoothing, context_mass, dumps_arpa, loads_arpa, logprob, read_arpa,
    train_ngram, write_arpa,
)
from asrshrink.util.rng import generator

TWO_WORDS = '\n'.join([
    '\\data\\',
    'ngram 1=2',
    '',
    '\\1-grams:',
    '-0.3010299957\ta',
    '-0.3010299957\tb',
    '',
    '\\end\\',
    '',
])


def _sentences(count, seed=0):
    rng = generator(seed, 'sentences')
    words = list(DEFAULT_LEXICON)
    return [
        ' '.join(words[i] for i in rng.integers(0, len(words), size=int(rng.integers(1, 6))))
        for _ in range(count)
    ]


class TestCounting:
    def test_certain_bigram(self):
        model = train_ngram(['a b'], order=2, smoothing=Smoothing.NONE, sentence_markers=False)
        assert exp(model.conditional(['a'], 'b')) == pytest.approx(1.0)

    def test_unigram_relative_frequency(self):
        model = train_ngram(['a a a b'], order=1, smoothing=Smoothing.NONE, sentence_markers=False)
        assert exp(model.conditional([], 'a')) == pytest.approx(0.75)
        assert exp(model.conditional([], 'b')) == pytest.approx(0.25)

    def test_perplexity(self):
        model = train_ngram(['a a a b'], order=1, smoothing=Smoothing.NONE, sentence_markers=False)
        assert model.perplexity(['a b']) == pytest.approx(exp(-(log(0.75) + log(0.25)) / 2.0))

    def test_counts_per_order(self):
        model = train_ngram(['a b', 'b c'], order=2)
        # a b c </s> <unk> <s>; <s> a, a b, b </s>, <s> b, b c, c </s>
        assert model.counts() == [6, 6]

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            train_ngram([''], order=2)
        with pytest.raises(ValueError):
            train_ngram(['a'], order=0)
        with pytest.raises(ValueError):
            train_ngram(['a'], smoothing='kneser_ney')


class TestBackoff:
    def test_unseen_bigram_backs_off(self):
        model = train_ngram(['a b', 'b c'], order=2)
        assert ('a', 'c') not in model.probs
        expected = model.backoffs[('a',)] + model.probs[('c',)]
        assert model.conditional(['a'], 'c') == pytest.approx(expected, abs=1e-12)

    def test_out_of_vocabulary_word(self):
        model = train_ngram(['a b', 'b c'], order=2)
        value = model.conditional(['a'], 'zebra')
        assert np.isfinite(value) and value > LOG_FLOOR
        assert value == model.conditional(['a'], UNK)

    def test_history_is_truncated(self):
        model = train_ngram(_sentences(50), order=3)
        assert model.conditional(['map', 'red', 'fox'], 'sun') == model.conditional(['red', 'fox'], 'sun')
        assert model.conditional(['fox'], 'sun') != model.conditional(['red', 'fox'], 'sun') or \
            ('red', 'fox') not in model.backoffs

    @pytest.mark.parametrize('order', [2, 3, 4])
    def test_contexts_are_normalized(self, order):
        model = train_ngram(_sentences(60), order=order)
        for context in list(model.backoffs)[:40]:
            assert context_mass(model, list(context)) == pytest.approx(1.0, abs=1e-9)
        assert context_mass(model, []) == pytest.approx(1.0, abs=1e-9)

    def test_sentence_score_matches_logprob(self):
        model = train_ngram(_sentences(40), order=3)
        for text in _sentences(10, seed=4):
            assert model.sentence_score(text.split()) == pytest.approx(logprob(model, text), abs=1e-12)

    def test_markers(self):
        model = train_ngram(['a'], order=2)
        with_markers = model.logprob(['a'])
        assert with_markers == pytest.approx(model.conditional([BOS], 'a') + model.conditional(['a'], EOS))
        assert model.logprob(['a'], bos=False, eos=False) == pytest.approx(model.conditional([], 'a'))


class TestArpa:
    def test_round_trip_scores(self):
        texts = _sentences(100)
        model = train_ngram(texts, order=3)
        loaded = loads_arpa(dumps_arpa(model))

        assert loaded.order == 3
        assert loaded.sentence_markers
        assert loaded.counts() == model.counts()
        for text in texts[:20] + _sentences(20, seed=5):
            assert loaded.logprob(text) == pytest.approx(model.logprob(text), abs=1e-6)

    def test_header_counts(self):
        model = train_ngram(_sentences(30), order=2)
        text = dumps_arpa(model)
        for m, count in enumerate(model.counts(), 1):
            assert 'ngram {}={}\n'.format(m, count) in text
        assert text.startswith('\\data\\\n')
        assert text.endswith('\\end\\\n')

    def test_byte_deterministic(self):
        assert dumps_arpa(train_ngram(_sentences(30), order=3)) == dumps_arpa(train_ngram(_sentences(30), order=3))

    def test_file_round_trip(self, tmp_path):
        model = train_ngram(_sentences(20), order=2)
        path = str(tmp_path / 'lm.arpa')
        write_arpa(model, path)
        assert read_arpa(path).probs.keys() == model.probs.keys()

    def test_hand_written_unigrams(self):
        model = loads_arpa(TWO_WORDS)
        assert model.order == 1
        assert not model.sentence_markers
        assert model.logprob('a b') == pytest.approx(2.0 * log(0.5), abs=1e-9)

    def test_malformed_entry_names_line(self):
        text = TWO_WORDS.replace('-0.3010299957\ta', 'oops\ta')
        with pytest.raises(ArpaFormatError) as e:
            loads_arpa(text)
        assert e.value.lineno == 5

    def test_count_mismatch(self):
        with pytest.raises(ArpaFormatError):
            loads_arpa(TWO_WORDS.replace('ngram 1=2', 'ngram 1=3'))

    def test_missing_end(self):
        with pytest.raises(ArpaFormatError):
            loads_arpa(TWO_WORDS.replace('\\end\\', ''))

    def test_missing_data_header(self):
        with pytest.raises(ArpaFormatError) as e:
            loads_arpa('ngram 1=1\n')
        assert e.value.lineno == 1
