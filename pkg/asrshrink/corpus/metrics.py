from asrshrink.corpus.vocab import CorpusError


def edit_distance(ref, hyp):
    """
    Minimal number of substitutions, deletions and insertions turning the
    sequence `ref` into `hyp`.
    """
    previous = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, 1):
        current = [i]
        for j, h in enumerate(hyp, 1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (r != h),
            ))
        previous = current
    return previous[-1]


def _error_rate(refs, hyps, tokenize, unit):
    refs, hyps = list(refs), list(hyps)
    if len(refs) != len(hyps):
        raise CorpusError('got {} references but {} hypotheses'.format(len(refs), len(hyps)))

    errors = 0
    total = 0
    for ref, hyp in zip(refs, hyps):
        ref_tokens = tokenize(ref)
        errors += edit_distance(ref_tokens, tokenize(hyp))
        total += len(ref_tokens)

    if total == 0:
        raise CorpusError('references contain no {}s'.format(unit))
    return errors / float(total)


def wer(refs, hyps):
    """
    Word error rate: word-level edit operations summed over all pairs,
    divided by the total number of reference words. Can exceed 1.
    """
    return _error_rate(refs, hyps, str.split, 'word')


def cer(refs, hyps):
    return _error_rate(refs, hyps, list, 'character')
