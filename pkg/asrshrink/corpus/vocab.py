from string import ascii_lowercase


DEFAULT_CHARACTERS = ascii_lowercase + ' '


class CorpusError(ValueError):
    pass


class CharVocab:
    """
    Character inventory for CTC. Index 0 is the blank symbol, characters
    occupy indices 1..P-1.

    Parameters
    ----------
    characters : str or list[str]
        Ordered character inventory (defaults to the 26 letters and space).
    """
    BLANK = 0
    BLANK_SYMBOL = '<blank>'

    def __init__(self, characters=DEFAULT_CHARACTERS):
        characters = list(characters)
        if not characters:
            raise CorpusError('character inventory is empty')
        if len(set(characters)) != len(characters):
            raise CorpusError('character inventory has duplicates: {!r}'.format(''.join(characters)))
        if self.BLANK_SYMBOL in characters:
            raise CorpusError('the blank symbol cannot be a character')

        self.characters = characters
        self._index = {c: i + 1 for i, c in enumerate(characters)}

    def __repr__(self):
        return '<CharVocab P={} characters={!r}>'.format(self.P, ''.join(self.characters))

    def __eq__(self, other):
        return isinstance(other, CharVocab) and self.characters == other.characters

    def __len__(self):
        return self.P

    @property
    def P(self):
        return len(self.characters) + 1

    @property
    def blank(self):
        return self.BLANK

    def index(self, char):
        try:
            return self._index[char]
        except KeyError:
            raise CorpusError('unknown character {!r} (not in inventory {!r})'.format(char, ''.join(self.characters)))

    def symbol(self, index):
        if index == self.BLANK:
            return self.BLANK_SYMBOL
        return self.characters[index - 1]

    def encode(self, text):
        return [self.index(c) for c in text]

    def decode(self, indices):
        return ''.join(self.characters[i - 1] for i in indices if i != self.BLANK)

    def validate(self, text):
        for c in text:
            self.index(c)
        return text

    def to_dict(self):
        return {'characters': ''.join(self.characters)}

    @classmethod
    def from_dict(cls, obj):
        return cls(obj.get('characters', DEFAULT_CHARACTERS))
