"""
ARPA back-off model text format (UTF-8, LF line endings):

    \\data\\
    ngram 1=<count>
    ...
    \\1-grams:
    <log10 prob>\\t<w1>[\\t<log10 back-off>]
    ...
    \\end\\
"""
from math import log

from asrshrink.lm.ngram import BOS, LOG10_FLOOR, NGramModel

LN10 = log(10.0)


class ArpaFormatError(ValueError):
    def __init__(self, lineno, reason):
        super(ArpaFormatError, self).__init__('line {}: {}'.format(lineno, reason))
        self.lineno = lineno


def _fmt(value):
    return '{:.10f}'.format(max(value / LN10, LOG10_FLOOR))


def dumps_arpa(model):
    counts = model.counts()
    lines = ['\\data\\']
    lines.extend('ngram {}={}'.format(m, c) for m, c in enumerate(counts, 1))

    for m in range(1, model.order + 1):
        lines.append('')
        lines.append('\\{}-grams:'.format(m))
        for gram in sorted(g for g in model.probs if len(g) == m):
            fields = [_fmt(model.probs[gram]), ' '.join(gram)]
            if gram in model.backoffs:
                fields.append(_fmt(model.backoffs[gram]))
            lines.append('\t'.join(fields))

    lines.extend(['', '\\end\\', ''])
    return '\n'.join(lines)


def write_arpa(model, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(dumps_arpa(model))


def _float(text, lineno):
    try:
        return float(text)
    except ValueError:
        raise ArpaFormatError(lineno, 'expected a number, got {!r}'.format(text))


def loads_arpa(text):
    declared = {}
    probs, backoffs = {}, {}
    section = None
    seen = {}
    ended = False

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if ended:
            raise ArpaFormatError(lineno, 'content after \\end\\')

        if line == '\\data\\':
            if section is not None:
                raise ArpaFormatError(lineno, 'duplicate \\data\\ header')
            section = 'data'
            continue
        if section is None:
            raise ArpaFormatError(lineno, 'expected \\data\\, got {!r}'.format(line))

        if line == '\\end\\':
            _check_section(section, seen, declared, lineno)
            ended = True
            continue

        if line.startswith('\\') and line.endswith('-grams:'):
            _check_section(section, seen, declared, lineno)
            try:
                section = int(line[1:-len('-grams:')])
            except ValueError:
                raise ArpaFormatError(lineno, 'bad section header {!r}'.format(line))
            if section not in declared:
                raise ArpaFormatError(lineno, 'section {} not declared in \\data\\'.format(section))
            seen[section] = 0
            continue

        if section == 'data':
            if not line.startswith('ngram ') or '=' not in line:
                raise ArpaFormatError(lineno, 'expected "ngram <order>=<count>", got {!r}'.format(line))
            order, _, count = line[len('ngram '):].partition('=')
            try:
                declared[int(order)] = int(count)
            except ValueError:
                raise ArpaFormatError(lineno, 'bad n-gram count line {!r}'.format(line))
            continue

        fields = line.split()
        if len(fields) not in (section + 1, section + 2):
            raise ArpaFormatError(lineno, 'expected {} words in a {}-gram entry, got {!r}'.format(
                section, section, line))

        gram = tuple(fields[1:section + 1])
        probs[gram] = _float(fields[0], lineno) * LN10
        if len(fields) == section + 2:
            backoffs[gram] = _float(fields[-1], lineno) * LN10
        seen[section] += 1

    if not ended:
        raise ArpaFormatError(len(text.splitlines()), 'missing \\end\\')
    if not declared:
        raise ArpaFormatError(1, 'no n-gram counts declared')

    order = max(declared)
    sentence_markers = (BOS,) in probs
    return NGramModel(order, probs, backoffs, sentence_markers)


def _check_section(section, seen, declared, lineno):
    if isinstance(section, int) and seen[section] != declared[section]:
        raise ArpaFormatError(lineno, '\\{}-grams: declared {} entries, found {}'.format(
            section, declared[section], seen[section]))


def read_arpa(path):
    with open(path, 'r', encoding='utf-8') as f:
        return loads_arpa(f.read())
