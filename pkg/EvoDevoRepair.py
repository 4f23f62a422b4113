import logging
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values

import DomainOntology
import ModelInterfaces
import PosTagger
import RuleBasedModels
import WordMatching
import WordMetrics
from ModelInterfaces import ConfigError, MissingResourceError

logger = logging.getLogger(__name__)

NOISE_WORDS = frozenset([
    'is', 'are', 'was', 'were', 'be', 'been', 'being', 'am',
    'do', 'does', 'did', 'done', 'has', 'have', 'had', 'having', 'get', 'got',
    'can', 'could', 'will', 'would', 'shall', 'should', 'may', 'might', 'must'])

FITNESS_KEYS = ('w_phon', 'w_edit', 'threshold', 'b1', 'b2', 'b3', 'b4', 'b5',
                'max_window', 'retrieval_floor')
WEIGHT_TOLERANCE = 1e-6


class EmbeddingFormatError(ValueError):
    pass


def read_config_file(path: str, allowed_keys: Sequence[str]) -> Dict[str, str]:
    """Parse a `key = value` file; every key must be known and carry a value."""
    if not os.path.isfile(path):
        raise MissingResourceError(f'Config not found: {path}')
    values = dotenv_values(path)
    for key, value in values.items():
        if key not in allowed_keys:
            raise ConfigError(key, 'unknown key')
        if value is None or not value.strip():
            raise ConfigError(key, 'missing value')
    return {key: value.strip() for key, value in values.items()}


def parse_number(key: str, value: str, cast=float):
    try:
        return cast(value)
    except ValueError as error:
        raise ConfigError(key, f'invalid value {value!r}') from error


@dataclass(frozen=True)
class FitnessConfig:
    w_phon: float = 0.6
    w_edit: float = 0.4
    threshold: float = 0.55
    b: Tuple[float, float, float, float, float] = (0.2, 0.2, 0.3, 0.2, 0.1)
    max_window: int = 3
    retrieval_floor: float = 0.5

    def __post_init__(self):
        for key in ('w_phon', 'w_edit', 'retrieval_floor'):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ConfigError(key, 'must lie in [0, 1]')
        if abs(self.w_phon + self.w_edit - 1.0) > WEIGHT_TOLERANCE:
            raise ConfigError('w_edit', 'w_phon + w_edit must equal 1')
        # Above 1 nothing can be replaced
        if self.threshold < 0:
            raise ConfigError('threshold', 'must not be negative')
        if len(self.b) != 5:
            raise ConfigError('b1', 'five cost weights are required')
        for idx, weight in enumerate(self.b, start=1):
            if weight < 0:
                raise ConfigError(f'b{idx}', 'must not be negative')
        if abs(sum(self.b) - 1.0) > WEIGHT_TOLERANCE:
            raise ConfigError('b5', 'b1..b5 must sum to 1')
        if not 1 <= self.max_window <= 5:
            raise ConfigError('max_window', 'must lie in [1, 5]')


def load_fitness_config(path: str) -> FitnessConfig:
    values = read_config_file(path, FITNESS_KEYS)
    defaults = FitnessConfig()
    b = list(defaults.b)
    for idx in range(5):
        key = f'b{idx+1}'
        if key in values:
            b[idx] = parse_number(key, values[key])
    return FitnessConfig(
        w_phon=parse_number('w_phon', values['w_phon']) if 'w_phon' in values else defaults.w_phon,
        w_edit=parse_number('w_edit', values['w_edit']) if 'w_edit' in values else defaults.w_edit,
        threshold=parse_number('threshold', values['threshold']) if 'threshold' in values else defaults.threshold,
        b=tuple(b),
        max_window=parse_number('max_window', values['max_window'], int) if 'max_window' in values else defaults.max_window,
        retrieval_floor=(parse_number('retrieval_floor', values['retrieval_floor'])
                         if 'retrieval_floor' in values else defaults.retrieval_floor))


class EmbeddingTable:
    """Pre-trained word vectors of one fixed dimension."""

    def __init__(self, vectors: Mapping[str, np.ndarray]) -> None:
        dimensions = {len(vector) for vector in vectors.values()}
        if len(dimensions) > 1:
            raise EmbeddingFormatError('vectors of different dimensions')
        self.vectors = {word: np.asarray(vector, dtype=float) for word, vector in vectors.items()}
        self.dimension = dimensions.pop() if dimensions else 0

    def __len__(self):
        return len(self.vectors)

    def span_vector(self, span: str) -> Optional[np.ndarray]:
        known = [self.vectors[word] for word in span.lower().split() if word in self.vectors]
        if not known:
            return None
        return np.mean(known, axis=0)


def load_embeddings(path: str) -> EmbeddingTable:
    vectors = {}
    dimension = None
    with open(path, encoding='utf-8') as embedding_file:
        for line_number, line in enumerate(embedding_file, start=1):
            fields = line.split()
            if not fields:
                continue
            try:
                vector = np.array([float(value) for value in fields[1:]])
            except ValueError as error:
                raise EmbeddingFormatError(f'line {line_number}: non-numeric component') from error
            if len(vector) == 0:
                raise EmbeddingFormatError(f'line {line_number}: missing vector')
            if dimension is None:
                dimension = len(vector)
            elif len(vector) != dimension:
                raise EmbeddingFormatError(f'line {line_number}: expected dimension {dimension}')
            vectors[fields[0].lower()] = vector
    logger.info('Loaded %d embeddings from %s', len(vectors), path)
    return EmbeddingTable(vectors)


def final_score(span: str, term: str, cfg: FitnessConfig) -> float:
    """finalScore = w_phon * algoScore + w_edit * (1 - editScore)."""
    score = (cfg.w_phon * RuleBasedModels.phonetic_similarity(span, term)
             + cfg.w_edit * (1.0 - WordMetrics.normalized_edit_distance(span, term)))
    return float(min(1.0, max(0.0, score)))


def syllable_similarity(span: str, term: str) -> float:
    syllables_span = RuleBasedModels.syllable_count(span)
    syllables_term = RuleBasedModels.syllable_count(term)
    return 1.0 - abs(syllables_span - syllables_term) / max(syllables_span, syllables_term, 1)


def embedding_similarity(span: str, term: str, emb: Optional[EmbeddingTable]) -> float:
    if emb is None or emb.dimension == 0:
        return 0.0
    vector_span, vector_term = emb.span_vector(span), emb.span_vector(term)
    if vector_span is None or vector_term is None:
        return 0.0
    squared = float(np.sum((vector_span - vector_term) ** 2))
    return 1.0 - min(1.0, squared / emb.dimension)


def cost_score(span: str, term: str, cfg: FitnessConfig, emb: Optional[EmbeddingTable] = None) -> float:
    b1, b2, b3, b4, b5 = cfg.b
    score = (b1 * RuleBasedModels.soundex_agreement(span, term)
             + b2 * RuleBasedModels.metaphone_agreement(span, term)
             + b3 * (1.0 - WordMetrics.normalized_edit_distance(span, term))
             + b4 * syllable_similarity(span, term)
             + b5 * embedding_similarity(span, term, emb))
    return float(min(1.0, max(0.0, score)))


@dataclass(frozen=True)
class Replacement:
    start: int
    end: int
    span: str
    term: str
    score: float
    cost: float


@dataclass(frozen=True)
class RuleFiring:
    rule_id: str
    position: int
    old_word: str
    new_word: str


@dataclass(frozen=True)
class RepairResult:
    input: WordMatching.TokenSequence
    tagged: PosTagger.TaggedSentence
    after_gene_repair: WordMatching.TokenSequence
    output: WordMatching.TokenSequence
    replacements: Tuple[Replacement, ...] = ()
    rule_firings: Tuple[RuleFiring, ...] = ()
    intact_genes: Tuple[Tuple[int, int], ...] = field(default=(), compare=False)

    def text(self) -> str:
        return self.output.text()


@dataclass(frozen=True)
class WindowChoice:
    start: int
    end: int
    span: str
    term: str
    score: float
    cost: float
    intact: bool


def best_term(span: str, terms: Sequence[str], cfg: FitnessConfig,
              emb: Optional[EmbeddingTable] = None) -> Optional[Tuple[str, float, float]]:
    """Fittest term for a span: final score, then cost, raw edit distance, shorter term, lexicographic."""
    ranked = []
    for term in terms:
        score = final_score(span, term, cfg)
        cost = cost_score(span, term, cfg, emb)
        ranked.append((-score, -cost, WordMetrics.raw_edit_distance(span, term), len(term), term))
    if not ranked:
        return None
    negative_score, negative_cost, _, _, term = min(ranked)
    return term, -negative_score, -negative_cost


def injured_positions(tagged: PosTagger.TaggedSentence, ontology: DomainOntology.Ontology) -> List[int]:
    """Content words that are neither noise words nor part of any domain term."""
    vocabulary = ontology.vocabulary
    return [idx for idx, token in PosTagger.content_words(tagged)
            if token not in NOISE_WORDS and token not in vocabulary]


def scan_windows(tagged: PosTagger.TaggedSentence, ontology: DomainOntology.Ontology, cfg: FitnessConfig,
                 emb: Optional[EmbeddingTable] = None) -> List[WindowChoice]:
    tokens = tagged.tokens
    content = {idx for idx, _ in PosTagger.content_words(tagged)}
    injured = set(injured_positions(tagged, ontology))
    choices = []
    for length in range(min(cfg.max_window, len(tokens)), 0, -1):
        for start in range(len(tokens) - length + 1):
            positions = range(start, start + length)
            if not content.intersection(positions):
                continue
            span = ' '.join(tokens[start:start + length])
            if ontology.has_term(span):
                choices.append(WindowChoice(start, start + length, span, span, 1.0, 1.0, True))
                continue
            if not injured.intersection(positions):
                continue
            terms = list(dict.fromkeys(
                gene.matched_term for gene in DomainOntology.candidate_genes(span, ontology, cfg.retrieval_floor)))
            chosen = best_term(span, terms, cfg, emb)
            if chosen is None:
                continue
            term, score, cost = chosen
            if score >= cfg.threshold and term != span:
                choices.append(WindowChoice(start, start + length, span, term, score, cost, False))
    return choices


def select_windows(choices: Sequence[WindowChoice]) -> List[WindowChoice]:
    """Greedy non-overlapping selection, best score first, longer and earlier windows on ties."""
    claimed = set()
    selected = []
    for choice in sorted(choices, key=lambda item: (-item.score, -(item.end - item.start), item.start)):
        positions = set(range(choice.start, choice.end))
        if claimed & positions:
            continue
        claimed |= positions
        selected.append(choice)
    return sorted(selected, key=lambda item: item.start)


def trim_shared_tokens(choice: WindowChoice) -> Tuple[int, int, List[str], List[str]]:
    """Drop the words a window shares with its term at either edge; both sides keep one word."""
    span_tokens, term_tokens = choice.span.split(), choice.term.split()
    start, end = choice.start, choice.end
    while len(span_tokens) > 1 and len(term_tokens) > 1 and span_tokens[0] == term_tokens[0]:
        span_tokens, term_tokens = span_tokens[1:], term_tokens[1:]
        start += 1
    while len(span_tokens) > 1 and len(term_tokens) > 1 and span_tokens[-1] == term_tokens[-1]:
        span_tokens, term_tokens = span_tokens[:-1], term_tokens[:-1]
        end -= 1
    return start, end, span_tokens, term_tokens


def minimal_replacement(choice: WindowChoice, cfg: FitnessConfig,
                        emb: Optional[EmbeddingTable] = None) -> Replacement:
    start, end, span_tokens, term_tokens = trim_shared_tokens(choice)
    if (start, end) == (choice.start, choice.end):
        return Replacement(choice.start, choice.end, choice.span, choice.term, choice.score, choice.cost)
    span, term = ' '.join(span_tokens), ' '.join(term_tokens)
    return Replacement(start, end, span, term, final_score(span, term, cfg), cost_score(span, term, cfg, emb))


def ontology_based_repair(tagged: PosTagger.TaggedSentence, ontology: DomainOntology.Ontology,
                          cfg: FitnessConfig, emb: Optional[EmbeddingTable] = None) -> RepairResult:
    start_time = time.time()
    sentence = WordMatching.from_tokens(tagged.tokens)
    selected = select_windows(scan_windows(tagged, ontology, cfg, emb))
    # The text is the same either way; the record names only the words that change
    replacements = tuple(minimal_replacement(choice, cfg, emb) for choice in selected if not choice.intact)
    for replacement in replacements:
        logger.debug('Replacing "%s" by "%s" (score %.3f)', replacement.span, replacement.term, replacement.score)

    repaired = WordMatching.replace_spans(
        sentence, [(item.start, item.end, item.term.split()) for item in replacements])
    logger.debug('Time for ontology based repair: %s', str(time.time()-start_time))
    return RepairResult(input=sentence, tagged=tagged, after_gene_repair=repaired, output=repaired,
                        replacements=replacements,
                        intact_genes=tuple((choice.start, choice.end) for choice in selected if choice.intact))


def repair(sentence: str, ontology: DomainOntology.Ontology, cfg: FitnessConfig = FitnessConfig(),
           rules=(), emb: Optional[EmbeddingTable] = None,
           tagger: Optional[PosTagger.LexiconTagger] = None) -> RepairResult:
    """Tokenize, tag, repair genes, then grow the genotype through the grammar rules."""
    import LinguisticRules

    tagger = tagger or PosTagger.get_default_tagger()
    tokens = WordMatching.tokenize(sentence)
    partial = ontology_based_repair(tagger.tag(tokens), ontology, cfg, emb)
    result = LinguisticRules.linguistic_repair(partial, rules, ontology, cfg, tagger)
    return result


class EvoDevoRepairModel(ModelInterfaces.IRepairModel):

    def __init__(self, ontology: DomainOntology.Ontology, cfg: FitnessConfig = FitnessConfig(), rules=(),
                 emb: Optional[EmbeddingTable] = None, tagger: Optional[PosTagger.LexiconTagger] = None) -> None:
        self.ontology = ontology
        self.cfg = cfg
        self.rules = rules
        self.emb = emb
        self.tagger = tagger

    def repairSentence(self, sentence: str, marked_spans=None) -> WordMatching.TokenSequence:
        # Evo-Devo finds its own spans
        return repair(sentence, self.ontology, self.cfg, self.rules, self.emb, self.tagger).output
