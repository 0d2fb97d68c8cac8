"""
Best-path and prefix beam search decoding. Beam search optionally fuses a
word n-gram model: each completed word (closed by a space, or by the end of
the utterance) adds alpha * log P_lm(word | history) + beta to the score of
the prefix, and the end of the utterance adds alpha * log P_lm(</s> | history).
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from asrshrink.ctc.loss import BLANK
from asrshrink.numkit import Tensor
from asrshrink.util.config import Config
from asrshrink.util.serializer import dump_records

WORD_BOUNDARY = ' '


class BeamError(ValueError):
    pass


class BeamParams(Config):
    """
    Attributes
    ----------
    width : int
        Hypotheses kept after every frame.
    alpha : float
        Language model weight.
    beta : float
        Bonus per word.
    prune_margin : float
        Hypotheses whose fused score falls more than this many nats below
        the best one are discarded (the sign is ignored).
    token_floor : float
        Characters whose frame log-probability is below this are not
        considered as extensions at that frame.
    """
    width = 100
    alpha = 0.5
    beta = 1.5
    prune_margin = 10.0
    token_floor = -5.0

    def validate(self):
        if not isinstance(self.width, (int, np.integer)) or self.width < 1:
            raise BeamError('beam width must be a positive integer, got {!r}'.format(self.width))
        if self.alpha < 0:
            raise BeamError('LM weight must be non-negative, got {!r}'.format(self.alpha))
        return self


@dataclass
class Hypothesis:
    """
    A collapsed prefix with its blank / non-blank ending log-probabilities
    and the language model contribution accumulated over its closed words.
    """
    text: str
    p_blank: float = -np.inf
    p_nonblank: float = -np.inf
    lm_score: float = 0.0
    lm_state: Tuple = ()
    words: int = 0
    score: float = -np.inf

    @property
    def acoustic(self):
        return float(np.logaddexp(self.p_blank, self.p_nonblank))

    def to_dict(self):
        return {
            'text': self.text,
            'acoustic': self.acoustic,
            'lm': self.lm_score,
            'words': self.words,
            'score': self.score,
        }


def _rows(probs):
    p = probs.data if isinstance(probs, Tensor) else np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] == 0:
        raise BeamError('expected a non-empty [N x P] probability matrix, got shape {}'.format(p.shape))
    return p


def greedy_path(probs):
    # np.argmax keeps the first maximum: ties go to the lowest index
    return [int(k) for k in np.argmax(_rows(probs), axis=1)]


def collapse(path, blank=BLANK):
    out = []
    previous = None
    for k in path:
        if k != previous and k != blank:
            out.append(k)
        previous = k
    return out


def greedy_decode(probs, vocab):
    return vocab.decode(collapse(greedy_path(probs)))


def _fuse(acoustic, lm_score, words, lm, bp):
    if lm is None:
        return acoustic
    return acoustic + bp.alpha * lm_score + bp.beta * words


def fused_score(text, acoustic, lm, bp):
    """
    Final fused score of a complete transcript with acoustic log-probability
    `acoustic`, computed the way beam search scores its final hypotheses.
    """
    if lm is None:
        return acoustic
    words = text.split()
    return _fuse(acoustic, lm.sentence_score(words), len(words), lm, bp)


class _Search:
    def __init__(self, vocab, lm, bp):
        self.vocab = vocab
        self.lm = lm
        self.bp = bp
        self.floor = float(bp.token_floor)
        self.margin = abs(float(bp.prune_margin))

    def root(self):
        state = self.lm.initial_state() if self.lm is not None else ()
        return Hypothesis('', p_blank=0.0, lm_state=state)

    def extend(self, parent, char):
        """
        Fresh hypothesis for parent.text + char carrying the LM bookkeeping
        (probabilities start at zero mass).
        """
        child = Hypothesis(parent.text + char, lm_score=parent.lm_score, lm_state=parent.lm_state,
                           words=parent.words)
        if self.lm is not None and char == WORD_BOUNDARY:
            word = parent.text.rsplit(WORD_BOUNDARY, 1)[-1]
            if word:
                logp, child.lm_state = self.lm.score_word(parent.lm_state, word)
                child.lm_score += logp
                child.words += 1
        return child

    def step(self, beams, row, log_row):
        blank_lp = log_row[BLANK]
        candidates = [k for k in range(len(row)) if k != BLANK and log_row[k] >= self.floor]

        following = {}

        def slot(parent, text, char=None):
            if text not in following:
                following[text] = self.extend(parent, char) if char is not None else Hypothesis(
                    text, lm_score=parent.lm_score, lm_state=parent.lm_state, words=parent.words)
            return following[text]

        for hyp in beams:
            total = np.logaddexp(hyp.p_blank, hyp.p_nonblank)

            same = slot(hyp, hyp.text)
            same.p_blank = np.logaddexp(same.p_blank, total + blank_lp)

            last = hyp.text[-1] if hyp.text else None
            for k in candidates:
                char = self.vocab.symbol(k)
                longer = slot(hyp, hyp.text + char, char)
                if char == last:
                    same.p_nonblank = np.logaddexp(same.p_nonblank, hyp.p_nonblank + log_row[k])
                    longer.p_nonblank = np.logaddexp(longer.p_nonblank, hyp.p_blank + log_row[k])
                else:
                    longer.p_nonblank = np.logaddexp(longer.p_nonblank, total + log_row[k])

        return self.prune(following.values())

    def prune(self, hyps):
        live = []
        for hyp in hyps:
            if np.isneginf(hyp.p_blank) and np.isneginf(hyp.p_nonblank):
                continue
            hyp.score = _fuse(hyp.acoustic, hyp.lm_score, hyp.words, self.lm, self.bp)
            live.append(hyp)

        if not live:
            return live

        best = max(h.score for h in live)
        live = [h for h in live if h.score >= best - self.margin]
        live.sort(key=lambda h: (-h.score, h.text))
        return live[:self.bp.width]

    def finish(self, hyp):
        """
        Closes the trailing word and the sentence.
        """
        done = Hypothesis(hyp.text, hyp.p_blank, hyp.p_nonblank, hyp.lm_score, hyp.lm_state, hyp.words)
        if self.lm is not None:
            word = hyp.text.rsplit(WORD_BOUNDARY, 1)[-1]
            if word:
                logp, done.lm_state = self.lm.score_word(done.lm_state, word)
                done.lm_score += logp
                done.words += 1
            done.lm_score += self.lm.end_score(done.lm_state)
        done.score = _fuse(done.acoustic, done.lm_score, done.words, self.lm, self.bp)
        return done


def beam_search(probs, vocab, lm=None, bp=None):
    """
    Prefix beam search. Returns the final hypotheses, best first (ties by
    text), so the list doubles as an N-best output.
    """
    bp = BeamParams(bp).validate()
    p = _rows(probs)
    if p.shape[1] != vocab.P:
        raise BeamError('rows have {} symbols, the vocabulary has {}'.format(p.shape[1], vocab.P))

    with np.errstate(divide='ignore'):
        log_p = np.log(p)

    search = _Search(vocab, lm, bp)
    beams = [search.root()]
    for row, log_row in zip(p, log_p):
        beams = search.step(beams, row, log_row)
        if not beams:
            break

    final = [search.finish(h) for h in beams]
    final.sort(key=lambda h: (-h.score, h.text))
    return final


def beam_decode(probs, vocab, lm=None, bp=None):
    hyps = beam_search(probs, vocab, lm, bp)
    return hyps[0].text if hyps else ''


def dump_nbest(path, results, n=5):
    """
    Writes the top `n` hypotheses of every (utterance id, hypotheses) pair,
    one record per hypothesis.
    """
    def _records():
        for utt_id, hyps in results:
            for rank, hyp in enumerate(hyps[:n]):
                record = hyp.to_dict()
                record.update({'id': utt_id, 'rank': rank})
                yield record

    dump_records(path, _records())
