import logging
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Sequence, Tuple

import RuleBasedModels
import WordMetrics

logger = logging.getLogger(__name__)

SLOTS = ('subject', 'predicate', 'object')


class OntologyFormatError(ValueError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f'line {line_number}: {message}')
        self.line_number = line_number


def normalize_term(raw_term: str) -> str:
    """PEAK_SALES and 'peak  sales' both index as 'peak sales'."""
    return ' '.join(raw_term.replace('_', ' ').lower().split())


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str

    def __post_init__(self):
        for slot in SLOTS:
            if not getattr(self, slot):
                raise ValueError(f'Empty {slot} in triple')

    def terms(self) -> Tuple[str, str, str]:
        return (self.subject, self.predicate, self.object)


@dataclass(frozen=True)
class Ontology:
    triples: Tuple[Triple, ...] = ()
    term_index: Dict[str, Tuple[Tuple[int, str], ...]] = field(default_factory=dict, compare=False, hash=False)

    @classmethod
    def from_triples(cls, triples: Sequence[Triple]) -> 'Ontology':
        unique = tuple(dict.fromkeys(triples))
        index: Dict[str, List[Tuple[int, str]]] = {}
        for triple_id, triple in enumerate(unique):
            for slot, term in zip(SLOTS, triple.terms()):
                index.setdefault(term, []).append((triple_id, slot))
        return cls(unique, {term: tuple(entries) for term, entries in index.items()})

    def __len__(self):
        return len(self.triples)

    def terms(self) -> List[str]:
        return sorted(self.term_index)

    def lookup(self, term: str) -> List[Triple]:
        entries = self.term_index.get(normalize_term(term), ())
        return [self.triples[triple_id] for triple_id, _ in entries]

    def has_term(self, text: str) -> bool:
        return normalize_term(text) in self.term_index

    @property
    def vocabulary(self) -> FrozenSet[str]:
        """Every word occurring in some term."""
        return frozenset(word for term in self.term_index for word in term.split())

    @property
    def max_term_length(self) -> int:
        return max((len(term.split()) for term in self.term_index), default=0)

    def related(self, term_a: str, term_b: str) -> bool:
        """True when a single triple mentions both terms."""
        ids_a = {triple_id for triple_id, _ in self.term_index.get(normalize_term(term_a), ())}
        ids_b = {triple_id for triple_id, _ in self.term_index.get(normalize_term(term_b), ())}
        return bool(ids_a & ids_b)


def parse_triples(lines) -> List[Triple]:
    triples = []
    for line_number, line in enumerate(lines, start=1):
        line = line.rstrip('\r\n')
        if not line.strip() or line.lstrip().startswith('#'):
            continue
        fields = line.split('\t')
        if len(fields) != 3:
            raise OntologyFormatError(f'expected 3 tab-separated fields, got {len(fields)}', line_number)
        terms = [normalize_term(value) for value in fields]
        if not all(terms):
            raise OntologyFormatError('empty term', line_number)
        triples.append(Triple(*terms))
    return triples


def load_ontology(path: str) -> Ontology:
    with open(path, encoding='utf-8') as ontology_file:
        ontology = Ontology.from_triples(parse_triples(ontology_file))
    logger.info('Loaded %d triples with %d distinct terms from %s',
                len(ontology), len(ontology.term_index), path)
    return ontology


@dataclass(frozen=True)
class CandidateGene:
    triple: Triple
    matched_term: str
    span: str
    match_score: float


def term_similarity(span: str, term: str) -> float:
    return max(RuleBasedModels.phonetic_similarity(span, term),
               1.0 - WordMetrics.normalized_edit_distance(span, term))


def candidate_genes(span: str, ontology: Ontology, floor: float = 0.5) -> List[CandidateGene]:
    """Genes whose subject, predicate or object partially matches the span."""
    start = time.time()
    span = ' '.join(span.lower().split())
    scored = []
    for term, entries in ontology.term_index.items():
        score = term_similarity(span, term)
        if score >= floor:
            scored.append((score, term, entries))
    scored.sort(key=lambda item: (-item[0], item[1]))

    candidates = [CandidateGene(ontology.triples[triple_id], term, span, score)
                  for score, term, entries in scored
                  for triple_id, _ in entries]
    logger.debug('Time for retrieving candidate genes: %s', str(time.time()-start))
    return candidates
