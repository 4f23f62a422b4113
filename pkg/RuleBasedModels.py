import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import jellyfish
from metaphone import doublemetaphone

import ModelInterfaces

logger = logging.getLogger(__name__)

DOUBLE_METAPHONE_LENGTH = 4
VOWEL_GROUPS = re.compile(r'[aeiouy]+')


class UnencodableWordError(ValueError):
    pass


def clean_word(word: str) -> str:
    """Drop digits, apostrophes, hyphens and whitespace; what remains must be alphabetic."""
    cleaned = re.sub(r"[\d'\-\s]", '', word)
    if not cleaned or not cleaned.isalpha():
        raise UnencodableWordError(f'unencodable: {word!r}')
    return cleaned.lower()


def get_phonetic_encoder(name: str) -> ModelInterfaces.IPhoneticEncoder:
    if name == 'soundex':
        return SoundexEncoder()
    elif name == 'metaphone':
        return MetaphoneEncoder()
    elif name == 'dmeta':
        return DoubleMetaphoneEncoder()
    else:
        raise ValueError('Phonetic encoder not implemented')


class SoundexEncoder(ModelInterfaces.IPhoneticEncoder):

    def encode(self, word: str) -> str:
        return jellyfish.soundex(clean_word(word))


class MetaphoneEncoder(ModelInterfaces.IPhoneticEncoder):

    def encode(self, word: str) -> str:
        return jellyfish.metaphone(clean_word(word)).replace(' ', '').upper()


class DoubleMetaphoneEncoder(ModelInterfaces.IPhoneticEncoder):

    def encode(self, word: str) -> str:
        return self.encodeBoth(word)[0]

    def encodeBoth(self, word: str) -> Tuple[str, str]:
        primary, alternate = doublemetaphone(clean_word(word).upper())
        return ((primary or '').upper()[:DOUBLE_METAPHONE_LENGTH],
                (alternate or '').upper()[:DOUBLE_METAPHONE_LENGTH])


_soundex = SoundexEncoder()
_metaphone = MetaphoneEncoder()
_double_metaphone = DoubleMetaphoneEncoder()


def soundex(word: str) -> str:
    return _soundex.encode(word)


def metaphone(word: str) -> str:
    return _metaphone.encode(word)


def double_metaphone(word: str) -> Tuple[str, str]:
    return _double_metaphone.encodeBoth(word)


@dataclass(frozen=True)
class PhoneticCodes:
    soundex: str
    metaphone: str
    dmeta_primary: str
    dmeta_alternate: str


def phonetic_codes(span: str) -> PhoneticCodes:
    """Codes of a word or a multi-word span; spans are encoded with whitespace removed."""
    joined = ''.join(span.split())
    primary, alternate = double_metaphone(joined)
    return PhoneticCodes(soundex(joined), metaphone(joined), primary, alternate)


def soundex_key(code: str) -> str:
    return code.rstrip('0')


def codes_agree(code_a: str, code_b: str) -> bool:
    """Discrete phonetic key agreement.

    Keys agree when equal, when equal after dropping the onset symbol of both,
    or when one is the other plus a single trailing symbol (shorter key >= 3).
    """
    if not code_a or not code_b:
        return False
    if code_a == code_b:
        return True
    if len(code_a) >= 2 and len(code_b) >= 2 and code_a[1:] == code_b[1:]:
        return True
    shorter, longer = sorted((code_a, code_b), key=len)
    return len(shorter) >= 3 and len(longer) == len(shorter) + 1 and longer.startswith(shorter)


@lru_cache(maxsize=65536)
def _safe_codes(span: str):
    try:
        return phonetic_codes(span)
    except UnencodableWordError:
        return None


def soundex_agreement(a: str, b: str) -> float:
    codes_a, codes_b = _safe_codes(a), _safe_codes(b)
    if codes_a is None or codes_b is None:
        return 0.0
    return float(codes_agree(soundex_key(codes_a.soundex), soundex_key(codes_b.soundex)))


def metaphone_agreement(a: str, b: str) -> float:
    codes_a, codes_b = _safe_codes(a), _safe_codes(b)
    if codes_a is None or codes_b is None:
        return 0.0
    return float(codes_agree(codes_a.metaphone, codes_b.metaphone))


def double_metaphone_agreement(a: str, b: str) -> float:
    codes_a, codes_b = _safe_codes(a), _safe_codes(b)
    if codes_a is None or codes_b is None:
        return 0.0
    if codes_agree(codes_a.dmeta_primary, codes_b.dmeta_primary):
        return 1.0
    alternates = [(codes_a.dmeta_alternate, codes_b.dmeta_primary),
                  (codes_a.dmeta_primary, codes_b.dmeta_alternate),
                  (codes_a.dmeta_alternate, codes_b.dmeta_alternate)]
    if any(codes_agree(x, y) for x, y in alternates):
        return 0.5
    return 0.0


def phonetic_similarity(a: str, b: str) -> float:
    """algoScore: mean of Soundex, Metaphone and Double Metaphone agreement, in [0, 1]."""
    return (soundex_agreement(a, b) + metaphone_agreement(a, b) + double_metaphone_agreement(a, b)) / 3


def word_syllables(word: str) -> int:
    letters = ''.join(char for char in word.lower() if char.isalpha())
    if not letters:
        return 1
    count = len(VOWEL_GROUPS.findall(letters))
    silent_e = (len(letters) > 2 and letters.endswith('e') and letters[-2] not in 'aeiouy'
                and not (letters.endswith('le') and letters[-3] not in 'aeiouy'))
    if silent_e and count > 1:
        count -= 1
    return max(1, count)


def syllable_count(phrase: str) -> int:
    return sum(word_syllables(word) for word in phrase.split())
