class Serializer:
    FORMATS = {
        'json',
        'yaml',
    }

    EXTENSIONS = {
        '.json': 'json',
        '.jsonl': 'json',
        '.yaml': 'yaml',
        '.yml': 'yaml',
    }

    @classmethod
    def check_format(cls, fmt):
        if fmt not in cls.FORMATS:
            raise ValueError(f'Unsupported serialization format: {fmt}')

    @classmethod
    def format_for_extension(cls, ext):
        fmt = cls.EXTENSIONS.get(ext.lower())
        if fmt is None:
            raise ValueError(f'Unsupported configuration file extension: {ext!r}')
        return fmt

    @staticmethod
    def json():
        try:
            from ujson import loads, dumps
        except ImportError:
            from json import loads, dumps

        def _dumps(obj):
            return dumps(obj, ensure_ascii=False, sort_keys=True)

        return loads, _dumps

    @staticmethod
    def yaml():
        try:
            import pylibyaml  # noqa: F401
        except ImportError:
            pass
        from yaml import safe_load, safe_dump

        def _dumps(obj):
            return safe_dump(obj, sort_keys=True, allow_unicode=True)

        return safe_load, _dumps

    @classmethod
    def loads(cls, fmt, raw):
        cls.check_format(fmt)
        loads, _ = getattr(cls, fmt)()
        return loads(raw)

    @classmethod
    def dumps(cls, fmt, raw):
        cls.check_format(fmt)
        _, dumps = getattr(cls, fmt)()
        return dumps(raw)


def dump_records(path, records):
    """
    Writes an iterable of flat mappings as line-delimited JSON (UTF-8, LF).
    """
    _, dumps = Serializer.json()
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for record in records:
            f.write(dumps(record))
            f.write('\n')


def append_record(path, record):
    _, dumps = Serializer.json()
    with open(path, 'a', encoding='utf-8', newline='\n') as f:
        f.write(dumps(record))
        f.write('\n')


def load_records(path):
    loads, _ = Serializer.json()
    with open(path, 'r', encoding='utf-8') as f:
        return [loads(line) for line in f if line.strip()]
