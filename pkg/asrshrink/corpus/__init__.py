from asrshrink.corpus.vocab import CharVocab, CorpusError, DEFAULT_CHARACTERS  # noqa: F401
from asrshrink.corpus.synth import SynthConfig, Waveform, char_frequency, synth  # noqa: F401
from asrshrink.corpus.manifest import (  # noqa: F401
    Corpus, DEFAULT_LEXICON, Utterance, gen_corpus, load_corpus, read_manifest, write_manifest,
)
from asrshrink.corpus.metrics import cer, edit_distance, wer  # noqa: F401
