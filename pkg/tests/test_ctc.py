from functools import lru_cache
from itertools import product
from time import perf_counter

import numpy as np
import pytest

from asrshrink.corpus import CharVocab
from asrshrink.ctc import (
    BeamError, BeamParams, InfeasibleTargetError, beam_decode, beam_search, collapse, ctc_loss, ctc_nll, dump_nbest,
    fused_score, greedy_decode, greedy_path, min_frames,
)
from asrshrink.lm import train_ngram
from asrshrink.numkit import ShapeError, backward, gradcheck, parameter, precision
from asrshrink.util.rng import generator
from asrshrink.util.serializer import load_records

from conftest import dirichlet_rows

EXHAUSTIVE = BeamParams({'width': 1000, 'prune_margin': 1e9, 'token_floor': -np.inf, 'beta': 0.5})


@lru_cache(maxsize=None)
def _paths(n, p):
    """
    Every alignment of `n` frames over `p` symbols, and the index of the
    labeling each one collapses to.
    """
    paths = np.array(list(product(range(p), repeat=n)))
    labels = [tuple(collapse(path)) for path in paths]
    unique = sorted(set(labels))
    position = {label: i for i, label in enumerate(unique)}
    return paths, unique, np.array([position[label] for label in labels])


def _labeling_probs(probs):
    n, p = probs.shape
    paths, unique, inverse = _paths(n, p)
    path_probs = np.prod(probs[np.arange(n), paths], axis=1)
    return unique, np.bincount(inverse, weights=path_probs, minlength=len(unique))


class TestLoss:
    def test_matches_path_enumeration(self):
        rng = generator(0, 'ctc')
        for _ in range(500):
            n, p = int(rng.integers(1, 7)), int(rng.integers(2, 5))
            probs = dirichlet_rows(rng, n, p)
            labelings, mass = _labeling_probs(probs)
            short = [i for i, labeling in enumerate(labelings) if len(labeling) <= 3]
            pick = short[int(rng.integers(len(short)))]

            nll = float(ctc_nll(np.log(probs), labelings[pick]).data)
            assert nll == pytest.approx(-np.log(mass[pick]), abs=1e-10)

    def test_labelings_sum_to_one(self):
        rng = generator(1, 'ctc')
        for _ in range(10):
            probs = dirichlet_rows(rng, 4, 3)
            labelings, _ = _labeling_probs(probs)
            total = sum(np.exp(-float(ctc_nll(np.log(probs), labeling).data)) for labeling in labelings)
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_empty_target_is_all_blank(self):
        probs = dirichlet_rows(generator(2, 'ctc'), 5, 4)
        nll = float(ctc_nll(np.log(probs), []).data)
        assert nll == pytest.approx(-np.log(probs[:, 0]).sum(), abs=1e-12)

    def test_text_target(self, vocab):
        probs = dirichlet_rows(generator(3, 'ctc'), 6, vocab.P)
        by_text = float(ctc_loss(probs, 'ab', vocab).data)
        by_index = float(ctc_nll(np.log(probs), [1, 2]).data)
        assert by_text == pytest.approx(by_index, abs=1e-12)

    def test_text_needs_vocabulary(self):
        with pytest.raises(ValueError):
            ctc_loss(np.full((3, 2), 0.5), 'a')

    def test_repeats_need_a_blank(self):
        assert min_frames([1, 1]) == 3
        assert min_frames([1, 2, 2, 2]) == 6
        with pytest.raises(InfeasibleTargetError):
            ctc_nll(np.log(np.full((2, 3), 1.0 / 3)), [1, 1])
        # the shortest feasible alignment is a, blank, a
        assert np.isfinite(float(ctc_nll(np.log(np.full((3, 3), 1.0 / 3)), [1, 1]).data))

    def test_blank_in_target(self):
        with pytest.raises(ShapeError):
            ctc_nll(np.log(np.full((4, 3), 1.0 / 3)), [1, 0])

    def test_symbol_out_of_range(self):
        with pytest.raises(ShapeError):
            ctc_nll(np.log(np.full((4, 3), 1.0 / 3)), [3])


class TestGradient:
    @pytest.mark.parametrize('seed', range(8))
    def test_gradcheck(self, seed):
        rng = generator(seed, 'ctc-grad')
        n, p = int(rng.integers(3, 8)), int(rng.integers(3, 6))
        target = [int(k) for k in rng.integers(1, p, size=int(rng.integers(1, 3)))]
        lp = parameter(np.log(dirichlet_rows(rng, n, p)), name='lp')
        errors = gradcheck(lambda: ctc_nll(lp, target), [lp])
        assert errors['lp'] < 1e-6

    def test_occupancy_sums_to_one_per_frame(self):
        lp = parameter(np.log(dirichlet_rows(generator(5, 'ctc'), 7, 5)))
        backward(ctc_nll(lp, [2, 3, 3]))
        np.testing.assert_allclose(lp.grad.sum(axis=1), -1.0, atol=1e-9)
        assert (lp.grad <= 1e-12).all()


class TestGreedy:
    def test_collapse(self):
        assert collapse([1, 1, 0, 1, 2, 2, 0]) == [1, 1, 2]
        assert collapse([0, 0]) == []

    def test_ties_go_to_lowest_index(self):
        assert greedy_path([[0.5, 0.5, 0.0], [0.2, 0.4, 0.4]]) == [0, 1]

    def test_decode(self, vocab):
        rows = np.full((5, vocab.P), 0.01)
        for t, k in enumerate([8, 8, 0, 9, 9]):
            rows[t, k] = 1.0
        assert greedy_decode(rows, vocab) == 'hi'


def _reordered_fixture():
    vocab = CharVocab('eht')
    e, h, t = 1, 2, 3
    rows = np.zeros((3, 4))
    rows[0, t] = 1.0
    rows[1, e], rows[1, h] = 0.6, 0.4
    rows[2, h], rows[2, e] = 0.6, 0.4
    return vocab, rows


class TestBeam:
    def test_language_model_fixes_word(self):
        vocab, rows = _reordered_fixture()
        lm = train_ngram(['the'], order=2)
        assert beam_decode(rows, vocab, lm, {'alpha': 2.0, 'beta': 0.0}) == 'the'
        assert beam_decode(rows, vocab, lm, {'alpha': 0.0, 'beta': 0.0}) == 'teh'
        assert greedy_decode(rows, vocab) == 'teh'

    def test_without_lm_scores_are_acoustic(self):
        vocab, rows = _reordered_fixture()
        hyps = beam_search(rows, vocab)
        assert [h.text for h in hyps] == ['teh', 'te', 'th', 'the']
        assert hyps[0].score == pytest.approx(np.log(0.36), abs=1e-12)

    @pytest.mark.parametrize('alpha', [0.0, 0.5])
    def test_exhaustive_search_finds_best_labeling(self, alpha):
        vocab = CharVocab('ab ')
        lm = train_ngram(['a b', 'b b a', 'a', 'b a a'], order=2)
        bp = EXHAUSTIVE.copy(alpha=alpha)
        rng = generator(0, 'beam', int(alpha * 10))
        for _ in range(100):
            probs = dirichlet_rows(rng, int(rng.integers(1, 6)), vocab.P)
            labelings, mass = _labeling_probs(probs)
            best = max(
                fused_score(vocab.decode(labeling), np.log(m), lm, bp)
                for labeling, m in zip(labelings, mass)
            )

            hyps = beam_search(probs, vocab, lm, bp)
            assert hyps[0].score == pytest.approx(best, abs=1e-9)
            assert fused_score(hyps[0].text, hyps[0].acoustic, lm, bp) == pytest.approx(hyps[0].score)

    def test_exhaustive_acoustic_without_lm(self):
        vocab = CharVocab('ab')
        rng = generator(1, 'beam')
        for _ in range(20):
            probs = dirichlet_rows(rng, int(rng.integers(1, 6)), vocab.P)
            labelings, mass = _labeling_probs(probs)
            hyps = beam_search(probs, vocab, bp=EXHAUSTIVE)
            assert hyps[0].acoustic == pytest.approx(np.log(mass.max()), abs=1e-9)
            assert len(hyps) == len(labelings)

    def test_width_limits_hypotheses(self, vocab):
        probs = dirichlet_rows(generator(2, 'beam'), 6, vocab.P)
        assert len(beam_search(probs, vocab, bp={'width': 3, 'token_floor': -np.inf})) <= 3

    def test_invalid_params(self, vocab):
        probs = np.full((2, vocab.P), 1.0 / vocab.P)
        with pytest.raises(BeamError):
            beam_search(probs, vocab, bp={'width': 0})
        with pytest.raises(BeamError):
            beam_search(probs, vocab, bp={'alpha': -1.0})

    def test_symbol_count_mismatch(self, vocab):
        with pytest.raises(BeamError):
            beam_search(np.full((2, 5), 0.2), vocab)

    def test_nbest_dump(self, tmp_path):
        vocab, rows = _reordered_fixture()
        path = str(tmp_path / 'nbest.jsonl')
        dump_nbest(path, [('u1', beam_search(rows, vocab))], n=2)
        records = load_records(path)
        assert [(r['id'], r['rank'], r['text']) for r in records] == [('u1', 0, 'teh'), ('u1', 1, 'te')]


class TestBeamProperties:
    def test_narrow_beams_never_beat_exhaustive_search(self):
        vocab = CharVocab('ab ')
        rng = generator(3, 'beam')
        for _ in range(60):
            probs = dirichlet_rows(rng, int(rng.integers(2, 7)), vocab.P)
            best = beam_search(probs, vocab, bp=EXHAUSTIVE)[0].score
            for width in (1, 2, 4, 8):
                narrow = beam_search(probs, vocab, bp={'width': width, 'alpha': 0.0})
                assert narrow[0].score <= best + 1e-12

    @pytest.mark.parametrize('with_lm', [False, True])
    def test_one_hot_rows_decode_to_greedy_output(self, with_lm):
        vocab = CharVocab('ab ')
        lm = train_ngram(['a b', 'b b a', 'a', 'b a a'], order=2) if with_lm else None
        rng = generator(4, 'beam')
        for _ in range(50):
            path = rng.integers(0, vocab.P, size=int(rng.integers(1, 12)))
            rows = np.zeros((len(path), vocab.P))
            rows[np.arange(len(path)), path] = 1.0
            assert beam_decode(rows, vocab, lm) == greedy_decode(rows, vocab)

    def test_long_input_in_single_precision(self):
        rng = generator(6, 'ctc')
        probs = dirichlet_rows(rng, 200, 5)
        target = [int(k) for k in rng.integers(1, 5, size=40)]
        reference = float(ctc_nll(np.log(probs), target).data)

        with precision('float32'):
            lp = parameter(np.log(probs))
            nll = ctc_nll(lp, target)
            backward(nll)

        assert nll.data.dtype == np.float32
        assert np.isfinite(float(nll.data))
        assert float(nll.data) == pytest.approx(reference, rel=1e-5)
        assert np.isfinite(lp.grad).all()


@pytest.mark.timing
def test_uncertain_rows_slow_down_fused_decoding(vocab):
    lm = train_ngram(['the cat sat', 'a cat ran', 'the dog sat on the mat'], order=3)

    def seconds(rows):
        times = []
        for _ in range(3):
            started = perf_counter()
            beam_search(rows, vocab, lm, {'width': 16})
            times.append(perf_counter() - started)
        return sorted(times)[1]

    uniform = np.full((40, vocab.P), 1.0 / vocab.P)
    one_hot = np.zeros((40, vocab.P))
    one_hot[np.arange(40), np.arange(40) % vocab.P] = 1.0
    assert seconds(one_hot) < seconds(uniform)
