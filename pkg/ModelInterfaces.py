
import abc


class IPhoneticEncoder(metaclass=abc.ABCMeta):
    @classmethod
    def __subclasshook__(cls, subclass):
        return (hasattr(subclass, 'encode') and
                callable(subclass.encode))

    @abc.abstractmethod
    def encode(self, word: str) -> str:
        """Get the phonetic code of a word"""
        raise NotImplementedError


class ITagger(metaclass=abc.ABCMeta):
    @classmethod
    def __subclasshook__(cls, subclass):
        return (hasattr(subclass, 'tag') and
                callable(subclass.tag))

    @abc.abstractmethod
    def tag(self, tokens):
        """Get the part-of-speech tagged sentence for a token sequence"""
        raise NotImplementedError


class IRepairModel(metaclass=abc.ABCMeta):
    @classmethod
    def __subclasshook__(cls, subclass):
        return (hasattr(subclass, 'repairSentence') and
                callable(subclass.repairSentence))

    @abc.abstractmethod
    def repairSentence(self, sentence: str, marked_spans=None):
        """Get the repaired token sequence of an ASR output sentence"""
        raise NotImplementedError


class MissingResourceError(ValueError):
    """A file or model a component needs is not available"""
    pass


class ConfigError(ValueError):
    """A `key = value` setting that is unknown, missing or out of range"""

    def __init__(self, key: str, message: str):
        super().__init__(f'{key}: {message}')
        self.key = key
