import logging
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import DomainOntology
import EvoDevoRepair
import LinguisticRules
import NaiveBayesRepair
import PosTagger
import RuleBasedModels
import WordMatching
import WordMetrics
import models
from ModelInterfaces import ConfigError, IRepairModel

logger = logging.getLogger(__name__)

CHANNEL_KEYS = ('substitution_rate', 'deletion_rate', 'insertion_rate', 'phonetic_confusion', 'seed',
                'variants', 'min_accuracy', 'max_accuracy')
TRUE_VALUES = ('1', 'true', 'yes', 'on')
FALSE_VALUES = ('0', 'false', 'no', 'off')
METHODS = ('evo', 'ml')
BANDS = ('<70', '>=70 & <100', '100')
REPORT_COLUMNS = ['id', 'accuracy_before', 'accuracy_after', 'delta']


class CorpusFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelConfig:
    substitution_rate: float = 0.1
    deletion_rate: float = 0.0
    insertion_rate: float = 0.0
    phonetic_confusion: bool = True
    seed: int = 0
    variants: int = 1
    min_accuracy: float = 70.0
    max_accuracy: float = 100.0

    def __post_init__(self):
        for key in ('substitution_rate', 'deletion_rate', 'insertion_rate'):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ConfigError(key, 'must lie in [0, 1]')
        if self.substitution_rate + self.deletion_rate + self.insertion_rate > 1.0 + 1e-9:
            raise ConfigError('insertion_rate', 'rates must sum to at most 1')
        if self.variants < 1:
            raise ConfigError('variants', 'must be positive')
        if self.min_accuracy > self.max_accuracy:
            raise ConfigError('min_accuracy', 'must not exceed max_accuracy')


def parse_flag(key: str, value: str) -> bool:
    if value.lower() in TRUE_VALUES:
        return True
    if value.lower() in FALSE_VALUES:
        return False
    raise ConfigError(key, f'invalid value {value!r}')


def load_channel_config(path: str, seed: Optional[int] = None) -> ChannelConfig:
    values = EvoDevoRepair.read_config_file(path, CHANNEL_KEYS)
    settings = {}
    for key, value in values.items():
        if key == 'phonetic_confusion':
            settings[key] = parse_flag(key, value)
        elif key in ('seed', 'variants'):
            settings[key] = EvoDevoRepair.parse_number(key, value, int)
        else:
            settings[key] = EvoDevoRepair.parse_number(key, value)
    if seed is not None:
        settings['seed'] = seed
    return ChannelConfig(**settings)


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    reference: str
    hypothesis: str
    tags: str = ''


class CorpusDataset():
    def __init__(self, table: pd.DataFrame):
        self.table_dataframe = table
        self.number_of_samples = len(table)

    def __getitem__(self, idx) -> CorpusRecord:
        row = self.table_dataframe.iloc[idx]
        return CorpusRecord(row['id'], row['reference'], row['hypothesis'], row.get('tags', ''))

    def __len__(self):
        return self.number_of_samples

    def __iter__(self):
        return (self[idx] for idx in range(len(self)))


def load_corpus(path: str) -> CorpusDataset:
    """`id<TAB>reference<TAB>hypothesis[<TAB>token/TAG ...]` rows, `#` comments."""
    df = NaiveBayesRepair.read_tsv(path, ['id', 'reference', 'hypothesis', 'tags'])
    for row_number, row in enumerate(df.itertuples(index=False), start=1):
        if not row.id or not WordMatching.tokenize(row.reference).tokens:
            raise CorpusFormatError(f'row {row_number}: id and non-empty reference required')
    return CorpusDataset(df)


def corpus_from_records(records: Iterable[CorpusRecord]) -> CorpusDataset:
    records = list(records)
    return CorpusDataset(pd.DataFrame({
        'id': [record.id for record in records],
        'reference': [record.reference for record in records],
        'hypothesis': [record.hypothesis for record in records],
        'tags': [record.tags for record in records]}, dtype=str))


def load_references(path: str) -> List[str]:
    with open(path, encoding='utf-8') as references_file:
        return [line.strip() for line in references_file if line.strip() and not line.startswith('#')]


def channel_vocabulary(ontology: DomainOntology.Ontology, lexicon: Iterable[str]) -> List[str]:
    words = set(ontology.vocabulary) | set(lexicon)
    return sorted(word for word in words if word.isalpha())


def confusion_classes(vocabulary: Sequence[str]) -> Dict[str, List[str]]:
    """Words grouped by Soundex code."""
    classes = defaultdict(list)
    for word in vocabulary:
        classes[RuleBasedModels.soundex(word)].append(word)
    return dict(classes)


class NoisyChannel:
    """Seeded word-level substitution, deletion and insertion."""

    def __init__(self, cfg: ChannelConfig, vocabulary: Sequence[str]) -> None:
        if not vocabulary:
            raise ValueError('empty channel vocabulary')
        self.cfg = cfg
        self.vocabulary = list(vocabulary)
        self.classes = confusion_classes(self.vocabulary)
        self.rng = np.random.default_rng(cfg.seed)

    def substitute(self, token: str) -> str:
        if self.cfg.phonetic_confusion and token.isalpha():
            confusable = [word for word in self.classes.get(RuleBasedModels.soundex(token), []) if word != token]
            if confusable:
                return confusable[self.rng.integers(len(confusable))]
        others = [word for word in self.vocabulary if word != token]
        return others[self.rng.integers(len(others))]

    def corrupt(self, tokens: Sequence[str]) -> List[str]:
        cfg = self.cfg
        output = []
        for token in tokens:
            draw = self.rng.random()
            if draw < cfg.substitution_rate:
                output.append(self.substitute(token))
            elif draw < cfg.substitution_rate + cfg.deletion_rate:
                continue
            elif draw < cfg.substitution_rate + cfg.deletion_rate + cfg.insertion_rate:
                output.append(token)
                output.append(self.vocabulary[self.rng.integers(len(self.vocabulary))])
            else:
                output.append(token)
        return output


def generate_corpus(references: Sequence[str], cfg: ChannelConfig, ontology: DomainOntology.Ontology,
                    lexicon: Iterable[str]) -> CorpusDataset:
    """Noisy hypotheses for each reference, kept when their accuracy lies in the working band."""
    start = time.time()
    if not references:
        raise ValueError('empty reference list')
    channel = NoisyChannel(cfg, channel_vocabulary(ontology, lexicon))
    records = []
    for ref_idx, reference in enumerate(references, start=1):
        ref_tokens = WordMatching.tokenize(reference)
        if not ref_tokens.tokens:
            raise CorpusFormatError(f'reference {ref_idx} is empty')
        for variant in range(1, cfg.variants + 1):
            hypothesis = WordMatching.from_tokens(channel.corrupt(ref_tokens.tokens))
            accuracy = WordMatching.accuracy(hypothesis, ref_tokens)
            if cfg.min_accuracy <= accuracy < cfg.max_accuracy and len(hypothesis):
                records.append(CorpusRecord(f'{ref_idx}-{variant}', ref_tokens.text(), hypothesis.text()))
    logger.debug('Time for generating corpus: %s', str(time.time()-start))
    logger.info('Kept %d of %d noisy variants', len(records), len(references) * cfg.variants)
    return corpus_from_records(records)


def write_corpus(corpus: CorpusDataset, path: str):
    with open(path, 'w', encoding='utf-8', newline='') as corpus_file:
        corpus_file.write('# id\treference\thypothesis\n')
        for record in corpus:
            corpus_file.write(f'{record.id}\t{record.reference}\t{record.hypothesis}\n')


@dataclass(frozen=True)
class SentenceScore:
    id: str
    accuracy_before: float
    accuracy_after: float

    @property
    def delta(self) -> float:
        return WordMetrics.round_half_up(self.accuracy_after - self.accuracy_before)


def accuracy_band(accuracy: float) -> str:
    if accuracy >= 100.0:
        return BANDS[2]
    if accuracy >= 70.0:
        return BANDS[1]
    return BANDS[0]


@dataclass(frozen=True)
class EvalReport:
    method: str
    rows: Tuple[SentenceScore, ...]

    @property
    def mean_before(self) -> float:
        return float(np.mean([row.accuracy_before for row in self.rows])) if self.rows else 0.0

    @property
    def mean_after(self) -> float:
        return float(np.mean([row.accuracy_after for row in self.rows])) if self.rows else 0.0

    @property
    def mean_delta(self) -> float:
        return float(np.mean([row.delta for row in self.rows])) if self.rows else 0.0

    @property
    def improved(self) -> int:
        return sum(1 for row in self.rows if row.delta > 0)

    @property
    def unchanged(self) -> int:
        return sum(1 for row in self.rows if row.delta == 0)

    @property
    def degraded(self) -> int:
        return sum(1 for row in self.rows if row.delta < 0)

    def bandHistogram(self) -> Dict[str, int]:
        """Hypotheses per accuracy band before repair."""
        histogram = {band: 0 for band in BANDS}
        for row in self.rows:
            histogram[accuracy_band(row.accuracy_before)] += 1
        return histogram

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame([[row.id, row.accuracy_before, row.accuracy_after, row.delta] for row in self.rows],
                            columns=REPORT_COLUMNS)

    def summaryLines(self) -> List[str]:
        histogram = self.bandHistogram()
        return [
            f'# method: {self.method}',
            f'# sentences: {len(self.rows)}',
            f'# mean_before: {self.mean_before:.1f}',
            f'# mean_after: {self.mean_after:.1f}',
            f'# mean_delta: {self.mean_delta:.1f}',
            f'# improved: {self.improved} unchanged: {self.unchanged} degraded: {self.degraded}',
            '# bands: ' + ' '.join(f'[{band}]={count}' for band, count in histogram.items()),
        ]


def write_report(reports: Sequence[EvalReport], path_or_buffer):
    lines = ['# deltas are absolute accuracy points (after - before)']
    frames = []
    for report in reports:
        lines.extend(report.summaryLines())
        frame = report.to_dataframe()
        frame.insert(0, 'method', report.method)
        frames.append(frame)
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=['method'] + REPORT_COLUMNS)
    text = '\n'.join(lines) + '\n' + table.to_csv(sep='\t', index=False, float_format='%.1f', lineterminator='\n')
    if hasattr(path_or_buffer, 'write'):
        path_or_buffer.write(text)
    else:
        with open(path_or_buffer, 'w', encoding='utf-8', newline='') as report_file:
            report_file.write(text)


def oracle_spans(hypothesis: WordMatching.TokenSequence, reference: WordMatching.TokenSequence) -> List[Tuple[int, int]]:
    """Erroneous hypothesis spans as a human marker would flag them, from the alignment."""
    trace = WordMatching.align(hypothesis, reference)
    return [(pair.start, pair.end) for pair in WordMatching.extract_mispairs(trace)]


def evaluate_record(record: CorpusRecord, repair_model: IRepairModel) -> SentenceScore:
    reference = WordMatching.tokenize(record.reference)
    hypothesis = WordMatching.tokenize(record.hypothesis)
    before = WordMatching.accuracy(hypothesis, reference)
    if isinstance(repair_model, EvoDevoRepair.EvoDevoRepairModel) and record.tags:
        tagged = PosTagger.parse_pretagged(record.tags)
        partial = EvoDevoRepair.ontology_based_repair(tagged, repair_model.ontology, repair_model.cfg,
                                                      repair_model.emb)
        repaired = LinguisticRules.linguistic_repair(partial, repair_model.rules, repair_model.ontology,
                                                     repair_model.cfg, repair_model.tagger).output
    else:
        repaired = repair_model.repairSentence(record.hypothesis, oracle_spans(hypothesis, reference))
    return SentenceScore(record.id, before, WordMatching.accuracy(repaired, reference))


def evaluate(corpus: CorpusDataset, method: str, ontology: Optional[DomainOntology.Ontology] = None,
             cfg: EvoDevoRepair.FitnessConfig = EvoDevoRepair.FitnessConfig(), rules=(),
             emb: Optional[EvoDevoRepair.EmbeddingTable] = None,
             model: Optional[NaiveBayesRepair.NaiveBayesModel] = None,
             tagger: Optional[PosTagger.LexiconTagger] = None) -> List[EvalReport]:
    """Accuracy before and after repair, one report per method."""
    methods = METHODS if method == 'both' else (method,)
    repair_models = [(name, models.getRepairModel(name, ontology, cfg, rules, emb, model, tagger))
                     for name in methods]

    reports = []
    for name, repair_model in repair_models:
        start = time.time()
        rows = tuple(evaluate_record(record, repair_model) for record in corpus)
        logger.debug('Time for evaluating %s: %s', name, str(time.time()-start))
        reports.append(EvalReport(name, rows))
    return reports


def ml_examples(corpus: CorpusDataset) -> List[NaiveBayesRepair.TrainingExample]:
    """Training examples from the aligned hypothesis and reference of every record."""
    return NaiveBayesRepair.examples_from_pairs((record.hypothesis, record.reference) for record in corpus)
