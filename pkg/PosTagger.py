import logging
import os
import re
import time
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

import ModelInterfaces
import WordMatching

logger = logging.getLogger(__name__)

sample_folder = os.path.join(os.path.dirname(os.path.abspath(__file__)), "databases", "")
default_lexicon_path = sample_folder + 'lexicon_en.tsv'

CARDINAL_PATTERN = re.compile(r'^\d+([.,]\d+)*(st|nd|rd|th)?$')
CONTENT_TAG_PREFIXES = ('NN', 'VB')


@dataclass(frozen=True)
class TaggedSentence:
    items: Tuple[Tuple[str, str], ...]

    def __len__(self):
        return len(self.items)

    @property
    def tokens(self) -> Tuple[str, ...]:
        return tuple(token for token, _ in self.items)

    @property
    def tags(self) -> Tuple[str, ...]:
        return tuple(tag for _, tag in self.items)

    def text(self) -> str:
        return ' '.join(f'{token}/{tag}' for token, tag in self.items)


def load_lexicon(path: str = default_lexicon_path) -> Dict[str, str]:
    """Read a `word<TAB>TAG` file; the first tag listed for a word wins."""
    try:
        df = pd.read_csv(path, delimiter='\t', names=['word', 'tag'], comment='#',
                         dtype=str, keep_default_na=False, quoting=3)
    except FileNotFoundError as error:
        raise ModelInterfaces.MissingResourceError(f'Lexicon not found: {path}') from error
    lexicon = {}
    for word, tag in zip(df['word'], df['tag']):
        word = word.strip().lower()
        if word and tag.strip():
            lexicon.setdefault(word, tag.strip())
    logger.info('Loaded lexicon with %d words', len(lexicon))
    return lexicon


def guess_tag(token: str) -> str:
    if CARDINAL_PATTERN.match(token):
        return 'CD'
    if token.endswith('ing') and len(token) > 4:
        return 'VBG'
    if token.endswith('ed') and len(token) > 3:
        return 'VBD'
    if token.endswith('ly') and len(token) > 3:
        return 'RB'
    if token.endswith('s') and not token.endswith(('ss', 'us', 'is')) and len(token) > 2:
        return 'NNS'
    return 'NN'


class LexiconTagger(ModelInterfaces.ITagger):

    def __init__(self, lexicon: Mapping[str, str]) -> None:
        self.lexicon = dict(lexicon)

    def tag(self, tokens) -> TaggedSentence:
        return TaggedSentence(tuple((token, self.tagWord(token)) for token in tokens))

    def tagWord(self, token: str) -> str:
        known = self.lexicon.get(token)
        if known is not None:
            return known
        # Plural of a known noun
        if token.endswith('s') and self.lexicon.get(token[:-1], '').startswith('NN'):
            return 'NNS'
        return guess_tag(token)


_default_tagger: Optional[LexiconTagger] = None


def get_default_tagger() -> LexiconTagger:
    global _default_tagger
    if _default_tagger is None:
        _default_tagger = LexiconTagger(load_lexicon())
    return _default_tagger


def pos_tag(tokens: Sequence[str], lexicon: Optional[Mapping[str, str]] = None) -> TaggedSentence:
    start = time.time()
    tagger = get_default_tagger() if lexicon is None else LexiconTagger(lexicon)
    tagged = tagger.tag(tokens)
    logger.debug('Time for tagging: %s', str(time.time()-start))
    return tagged


def parse_pretagged(column: str) -> TaggedSentence:
    """Read a `token/TAG token/TAG ...` column, as carried by pre-tagged corpora."""
    items = []
    for item in column.split():
        token, separator, tag = item.rpartition('/')
        if not separator or not token or not tag:
            raise ValueError(f'Malformed tagged token {item!r}')
        items.append((WordMatching.normalize_token(token), tag))
    return TaggedSentence(tuple(items))


def is_content_tag(tag: str) -> bool:
    return tag.startswith(CONTENT_TAG_PREFIXES)


def content_words(tagged: TaggedSentence) -> List[Tuple[int, str]]:
    return [(idx, token) for idx, (token, tag) in enumerate(tagged.items) if is_content_tag(tag)]
