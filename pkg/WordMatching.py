import logging
import time
from dataclasses import dataclass
from enum import Enum
from string import punctuation
from typing import List, Optional, Sequence, Tuple

import WordMetrics

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TokenSequence:
    tokens: Tuple[str, ...]
    source: str = ''

    def __post_init__(self):
        for token in self.tokens:
            if not token or any(char.isspace() for char in token):
                raise ValueError(f'Invalid token {token!r}')

    def __len__(self):
        return len(self.tokens)

    def __getitem__(self, idx):
        return self.tokens[idx]

    def __iter__(self):
        return iter(self.tokens)

    def text(self) -> str:
        return detokenize(self)


def normalize_token(raw_token: str) -> str:
    return raw_token.lower().strip(punctuation)


def tokenize(raw: str) -> TokenSequence:
    """Lowercase, strip punctuation at token edges (internal hyphens and apostrophes stay), split on whitespace."""
    tokens = []
    for raw_token in raw.split():
        token = normalize_token(raw_token)
        if token:
            tokens.append(token)
    return TokenSequence(tuple(tokens), raw)


def from_tokens(tokens: Sequence[str]) -> TokenSequence:
    return TokenSequence(tuple(tokens), ' '.join(tokens))


def detokenize(sequence: TokenSequence) -> str:
    return ' '.join(sequence.tokens)


class OpKind(Enum):
    MATCH = 'match'
    SUBSTITUTE = 'substitute'
    INSERT = 'insert'
    DELETE = 'delete'


@dataclass(frozen=True)
class AlignmentOp:
    kind: OpKind
    hyp_index: Optional[int] = None
    ref_index: Optional[int] = None


@dataclass(frozen=True)
class AlignmentTrace:
    hypothesis: TokenSequence
    reference: TokenSequence
    ops: Tuple[AlignmentOp, ...]

    @property
    def cost(self) -> int:
        return sum(1 for op in self.ops if op.kind is not OpKind.MATCH)


def align(hyp: TokenSequence, ref: TokenSequence) -> AlignmentTrace:
    """Minimal-cost word alignment.

    Backtrace preference at every cell: match, substitute, delete (reference word
    missing from the hypothesis), insert (extra hypothesis word).
    """
    matrix = WordMetrics.edit_distance_matrix(hyp.tokens, ref.tokens)
    ops = []
    i, j = len(hyp), len(ref)
    while i > 0 or j > 0:
        if i > 0 and j > 0 and hyp[i-1] == ref[j-1] and matrix[i, j] == matrix[i-1, j-1]:
            ops.append(AlignmentOp(OpKind.MATCH, i-1, j-1))
            i, j = i-1, j-1
        elif i > 0 and j > 0 and matrix[i, j] == matrix[i-1, j-1] + 1:
            ops.append(AlignmentOp(OpKind.SUBSTITUTE, i-1, j-1))
            i, j = i-1, j-1
        elif j > 0 and matrix[i, j] == matrix[i, j-1] + 1:
            ops.append(AlignmentOp(OpKind.DELETE, None, j-1))
            j -= 1
        else:
            ops.append(AlignmentOp(OpKind.INSERT, i-1, None))
            i -= 1
    ops.reverse()
    return AlignmentTrace(hyp, ref, tuple(ops))


def accuracy(hyp: TokenSequence, ref: TokenSequence) -> float:
    if len(ref) == 0:
        raise WordMetrics.EmptyReferenceError('empty reference')
    return WordMetrics.accuracy_from_cost(len(ref), align(hyp, ref).cost)


@dataclass(frozen=True)
class Mispair:
    erroneous: Tuple[str, ...]
    correction: Tuple[str, ...]
    sentence: TokenSequence
    start: int
    end: int


def _runs_of_errors(ops: Sequence[AlignmentOp]) -> List[Tuple[int, int]]:
    runs = []
    start = None
    for idx, op in enumerate(ops):
        if op.kind is OpKind.MATCH:
            if start is not None:
                runs.append((start, idx))
                start = None
        elif start is None:
            start = idx
    if start is not None:
        runs.append((start, len(ops)))
    return runs


def extract_mispairs(trace: AlignmentTrace) -> List[Mispair]:
    """Group maximal runs of non-match operations into (erroneous, correction) pairs.

    A run made only of missing reference words has no hypothesis token to anchor it,
    so it absorbs the neighbouring matched word (the following one when there is one).
    """
    ops = trace.ops
    groups: List[List[int]] = []
    absorbed = set()
    for start, end in _runs_of_errors(ops):
        run = list(range(start, end))
        if any(ops[idx].hyp_index is not None for idx in run):
            groups.append(run)
        elif end < len(ops):
            groups.append(run + [end])
            absorbed.add(end)
        elif start > 0:
            if start - 1 in absorbed:
                groups[-1].extend(run)
            else:
                groups.append([start - 1] + run)
                absorbed.add(start - 1)

    mispairs = []
    for group in groups:
        hyp_indices = [ops[idx].hyp_index for idx in group if ops[idx].hyp_index is not None]
        ref_indices = [ops[idx].ref_index for idx in group if ops[idx].ref_index is not None]
        span_start, span_end = min(hyp_indices), max(hyp_indices) + 1
        mispairs.append(Mispair(
            erroneous=tuple(trace.hypothesis.tokens[span_start:span_end]),
            correction=tuple(trace.reference[idx] for idx in ref_indices),
            sentence=trace.hypothesis,
            start=span_start,
            end=span_end))
    return mispairs


def replace_spans(sentence: TokenSequence, replacements: Sequence[Tuple[int, int, Sequence[str]]]) -> TokenSequence:
    """Replace (start, end, tokens) spans right-to-left so earlier offsets stay valid."""
    tokens = list(sentence.tokens)
    previous_start = len(tokens) + 1
    for start, end, new_tokens in sorted(replacements, key=lambda item: item[0], reverse=True):
        if end > previous_start:
            raise ValueError('Overlapping spans')
        tokens[start:end] = list(new_tokens)
        previous_start = start
    return from_tokens(tokens)


def apply_mispairs(sentence: TokenSequence, mispairs: Sequence[Mispair]) -> TokenSequence:
    return replace_spans(sentence, [(pair.start, pair.end, pair.correction) for pair in mispairs])


def mispairs_for(hyp_text: str, ref_text: str) -> List[Mispair]:
    start = time.time()
    pairs = extract_mispairs(align(tokenize(hyp_text), tokenize(ref_text)))
    logger.debug('Time for aligning transcripts: %s', str(time.time()-start))
    return pairs
