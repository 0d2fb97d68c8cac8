"""
Utterances, synthetic corpora and the line-delimited manifest format.

Manifest: one JSON object per line (UTF-8), with the keys

    id     utterance identifier
    text   transcript over the character inventory
    audio  inline sample array, or a path relative to the manifest directory
           (``.wav`` = mono PCM 16-bit, ``.f64`` = raw little-endian float64)
    rate   sampling rate in Hz (required for inline and ``.f64`` audio)
    split  optional: train / dev / test
"""
from dataclasses import dataclass, field
from os import makedirs as os_makedirs, path as os_path
from typing import List, Optional

import numpy as np
from scipy.io import wavfile

from asrshrink.corpus.synth import SynthConfig, Waveform, synth
from asrshrink.corpus.vocab import CharVocab, CorpusError
from asrshrink.util.rng import generator
from asrshrink.util.serializer import dump_records, load_records

# Words without doubled letters, so transcripts stay CTC-feasible at low frame rates.
DEFAULT_LEXICON = [
    'cat', 'dog', 'sun', 'red', 'blue', 'fox', 'run', 'big', 'hat', 'map',
    'pen', 'cup', 'box', 'sky', 'top', 'win', 'day', 'joy', 'leaf', 'wind',
    'rain', 'gold', 'fish', 'bird', 'lake', 'star', 'jump', 'kite',
]

SPLITS = ('train', 'dev', 'test')

AUDIO_INLINE = 'inline'
AUDIO_WAV = 'wav'
AUDIO_F64 = 'f64'


@dataclass
class Utterance:
    id: str
    wave: Waveform
    transcript: str
    split: Optional[str] = None

    def __post_init__(self):
        if not self.transcript:
            raise CorpusError('utterance {} has an empty transcript'.format(self.id))

    @property
    def text(self):
        return self.transcript

    def words(self):
        return self.transcript.split()


@dataclass
class Corpus:
    train: List[Utterance] = field(default_factory=list)
    dev: List[Utterance] = field(default_factory=list)
    test: List[Utterance] = field(default_factory=list)

    def __len__(self):
        return len(self.train) + len(self.dev) + len(self.test)

    def all(self):
        return self.train + self.dev + self.test

    def split(self, name):
        if name not in SPLITS:
            raise CorpusError('unknown split {!r}, expected one of {}'.format(name, SPLITS))
        return getattr(self, name)

    def transcripts(self, split='train'):
        return [u.transcript for u in self.split(split)]

    def subset(self, train=None):
        """
        A corpus sharing dev/test but keeping only the first `train`
        training utterances (the small-data condition of a sweep).
        """
        return Corpus(self.train[:train] if train is not None else list(self.train), list(self.dev), list(self.test))

    @classmethod
    def from_utterances(cls, utterances):
        corpus = cls()
        for u in utterances:
            corpus.split(u.split or 'train').append(u)
        return corpus


def sample_transcript(rng, lexicon, min_words=1, max_words=3):
    n_words = int(rng.integers(min_words, max_words + 1))
    return ' '.join(lexicon[int(i)] for i in rng.integers(0, len(lexicon), size=n_words))


def split_counts(n, fractions):
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise CorpusError('split fractions must be three non-negative values summing to 1, got {}'.format(fractions))

    n_train = int(round(n * fractions[0]))
    n_dev = min(n - n_train, int(round(n * fractions[1])))
    return n_train, n_dev, n - n_train - n_dev


def gen_corpus(n, seed, lexicon=None, splits=(0.8, 0.1, 0.1), min_words=1, max_words=3, synth_cfg=None,
               vocab=None):
    """
    Generates `n` utterances whose transcripts are sampled from `lexicon`,
    partitioned into disjoint train/dev/test splits.
    """
    if n < 1:
        raise CorpusError('a corpus needs at least one utterance, got n={}'.format(n))

    lexicon = list(DEFAULT_LEXICON if lexicon is None else lexicon)
    if not lexicon:
        raise CorpusError('the lexicon is empty')

    vocab = vocab or CharVocab()
    for word in lexicon:
        if not word or ' ' in word:
            raise CorpusError('lexicon entries must be single non-empty words, got {!r}'.format(word))
        vocab.validate(word)

    synth_cfg = synth_cfg or SynthConfig()
    rng = generator(seed, 'transcripts')
    texts = [sample_transcript(rng, lexicon, min_words, max_words) for _ in range(n)]

    order = generator(seed, 'splits').permutation(n)
    n_train, n_dev, _ = split_counts(n, splits)
    assignment = {}
    for rank, index in enumerate(order):
        assignment[int(index)] = 'train' if rank < n_train else ('dev' if rank < n_train + n_dev else 'test')

    utterances = [
        Utterance(
            id='utt{:05d}'.format(i),
            wave=synth(text, synth_cfg, seed=seed * 1000003 + i, vocab=vocab),
            transcript=text,
            split=assignment[i],
        )
        for i, text in enumerate(texts)
    ]
    return Corpus.from_utterances(utterances)


def write_wav(path, wave):
    pcm = np.round(np.clip(wave.samples, -1.0, 1.0) * 32767.0).astype('<i2')
    wavfile.write(path, wave.rate_hz, pcm)


def read_wav(path):
    rate, pcm = wavfile.read(path)
    if pcm.ndim != 1:
        raise CorpusError('{}: expected mono audio, got {} channels'.format(path, pcm.shape[1]))
    if pcm.dtype != np.int16:
        raise CorpusError('{}: expected 16-bit PCM, got {}'.format(path, pcm.dtype))
    return Waveform(pcm.astype(np.float64) / 32767.0, rate)


def write_manifest(path, utterances, audio=AUDIO_INLINE, audio_dir='audio'):
    """
    Writes `utterances` to a manifest at `path`. With `audio` set to 'wav' or
    'f64', samples are stored as files under `audio_dir` (relative to the
    manifest) and referenced by relative path.
    """
    if audio not in (AUDIO_INLINE, AUDIO_WAV, AUDIO_F64):
        raise CorpusError('unknown audio storage {!r}'.format(audio))

    base = os_path.dirname(os_path.abspath(path))
    if audio != AUDIO_INLINE:
        os_makedirs(os_path.join(base, audio_dir), exist_ok=True)

    records = []
    for u in utterances:
        record = {'id': u.id, 'text': u.transcript, 'rate': u.wave.rate_hz}
        if u.split:
            record['split'] = u.split

        if audio == AUDIO_INLINE:
            record['audio'] = [float(x) for x in u.wave.samples]
        else:
            relative = os_path.join(audio_dir, '{}.{}'.format(u.id, audio))
            target = os_path.join(base, relative)
            if audio == AUDIO_WAV:
                write_wav(target, u.wave)
            else:
                u.wave.samples.astype('<f8').tofile(target)
            record['audio'] = relative.replace(os_path.sep, '/')

        records.append(record)

    dump_records(path, records)


def _load_audio(base, record):
    audio = record.get('audio')
    if isinstance(audio, list):
        return Waveform(audio, record.get('rate', 16000))

    if not isinstance(audio, str):
        raise CorpusError('utterance {}: audio must be a sample array or a relative path'.format(record.get('id')))

    target = os_path.join(base, audio)
    if audio.endswith('.wav'):
        return read_wav(target)
    if audio.endswith('.f64'):
        if 'rate' not in record:
            raise CorpusError('utterance {}: raw float64 audio needs a rate field'.format(record.get('id')))
        return Waveform(np.fromfile(target, dtype='<f8'), record['rate'])

    raise CorpusError('utterance {}: unsupported audio file {!r}'.format(record.get('id'), audio))


def read_manifest(path, vocab=None):
    base = os_path.dirname(os_path.abspath(path))
    utterances = []
    for record in load_records(path):
        for key in ('id', 'audio', 'text'):
            if key not in record:
                raise CorpusError('{}: record without {!r}: {}'.format(path, key, sorted(record)))

        if vocab is not None:
            vocab.validate(record['text'])

        utterances.append(Utterance(
            id=record['id'],
            wave=_load_audio(base, record),
            transcript=record['text'],
            split=record.get('split'),
        ))
    return utterances


def load_corpus(path, vocab=None):
    return Corpus.from_utterances(read_manifest(path, vocab))
