from copy import deepcopy
from os import path as os_path

from asrshrink.util.serializer import Serializer


class ConfigError(ValueError):
    def __init__(self, config, key, reason):
        super(ConfigError, self).__init__('{}.{}: {}'.format(config.__class__.__name__, key, reason))
        self.key = key


class Config:
    """
    Base configuration object. Subclasses declare their defaults as class
    attributes; an instance copies those defaults and then applies the given
    mapping on top of them. Keys without a declared default are kept as-is.
    """
    def __init__(self, obj=None):
        self.__dict__.update({
            k: deepcopy(getattr(self, k)) for k in dir(self.__class__)
            if not k.startswith('_') and not callable(getattr(self.__class__, k))
            and not isinstance(getattr(self.__class__, k), (property, classmethod, staticmethod))
        })

        if isinstance(obj, Config):
            obj = obj.to_dict()

        if obj:
            self.__dict__.update(deepcopy(obj))

    def __repr__(self):
        return '<{} {}>'.format(self.__class__.__name__, ' '.join(
            '{}={!r}'.format(k, v) for k, v in sorted(self.__dict__.items())
        ))

    def __eq__(self, other):
        return isinstance(other, Config) and self.to_dict() == other.to_dict()

    def get(self, key, default=None):
        return self.__dict__.get(key, default)

    @classmethod
    def from_file(cls, path):
        with open(path, 'r', encoding='utf-8') as f:
            data = f.read()

        _, ext = os_path.splitext(path)
        fmt = Serializer.format_for_extension(ext)
        return cls(Serializer.loads(fmt, data) or {})

    def save(self, path):
        _, ext = os_path.splitext(path)
        fmt = Serializer.format_for_extension(ext)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(Serializer.dumps(fmt, self.to_dict()))

    def from_prefix(self, prefix):
        prefix += '_'
        obj = {}

        for k, v in self.__dict__.items():
            if k.startswith(prefix):
                obj[k[len(prefix):]] = v

        return Config(obj)

    def section(self, name, cls=None):
        """
        Returns the nested mapping stored under `name` as an instance of `cls`
        (defaults to a plain `Config`).
        """
        cls = cls or Config
        value = self.__dict__.get(name) or {}
        if isinstance(value, Config):
            value = value.to_dict()
        return cls(value)

    def update(self, other):
        if isinstance(other, Config):
            other = other.to_dict()

        self.__dict__.update(other)
        return self

    def copy(self, **overrides):
        inst = self.__class__(self.to_dict())
        inst.update(overrides)
        return inst

    def to_dict(self):
        return {
            k: (v.to_dict() if isinstance(v, Config) else deepcopy(v))
            for k, v in self.__dict__.items()
        }

    def require(self, key, predicate, reason):
        if not predicate(self.get(key)):
            raise ConfigError(self, key, '{} (got {!r})'.format(reason, self.get(key)))

    def validate(self):
        return self
