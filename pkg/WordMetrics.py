import logging
from decimal import Decimal, ROUND_HALF_UP
from typing import Sequence

import jellyfish
import numpy as np

logger = logging.getLogger(__name__)


class EmptyReferenceError(ValueError):
    pass


def edit_distance_matrix(seq1: Sequence, seq2: Sequence) -> np.ndarray:
    """Full Levenshtein table between two sequences (words or characters).

    matrix[x, y] is the distance between seq1[:x] and seq2[:y].
    """
    size_x = len(seq1) + 1
    size_y = len(seq2) + 1
    matrix = np.zeros((size_x, size_y), dtype=int)
    for x in range(size_x):
        matrix[x, 0] = x
    for y in range(size_y):
        matrix[0, y] = y

    for x in range(1, size_x):
        for y in range(1, size_y):
            substitution_cost = 0 if seq1[x-1] == seq2[y-1] else 1
            matrix[x, y] = min(
                matrix[x-1, y] + 1,
                matrix[x-1, y-1] + substitution_cost,
                matrix[x, y-1] + 1
            )
    return matrix


def edit_distance_python(seq1: Sequence, seq2: Sequence) -> int:
    return int(edit_distance_matrix(seq1, seq2)[len(seq1), len(seq2)])


def strip_for_matching(text: str) -> str:
    return ''.join(text.lower().split())


def normalized_edit_distance(a: str, b: str) -> float:
    """Character Levenshtein over whitespace-stripped lowercase text, divided by the longer length."""
    a = strip_for_matching(a)
    b = strip_for_matching(b)
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return jellyfish.levenshtein_distance(a, b) / longest


def raw_edit_distance(a: str, b: str) -> int:
    return jellyfish.levenshtein_distance(strip_for_matching(a), strip_for_matching(b))


def round_half_up(value: float, digits: int = 1) -> float:
    quantum = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def accuracy_from_cost(reference_length: int, cost: int) -> float:
    if reference_length == 0:
        raise EmptyReferenceError('empty reference')
    percentage = 100.0 * (reference_length - cost) / reference_length
    return round_half_up(max(0.0, percentage))
