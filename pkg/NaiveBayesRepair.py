import io
import itertools
import json
import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd

import ModelInterfaces
import WordMatching

logger = logging.getLogger(__name__)

FEATURE_IDS = ('f1', 'f2', 'f3', 'f4', 'f5', 'f6')
CATEGORICAL_FEATURES = ('f1', 'f2', 'f3', 'f4')
BAG_FEATURES = ('f5', 'f6')
DEFAULT_FEATURES = ('f1', 'f3', 'f4', 'f5', 'f6')
VOWELS = frozenset('aeiou')
START_TOKEN = '^'
END_TOKEN = '$'
MODEL_FORMAT = 'asr-repair-naive-bayes'
MODEL_VERSION = 1


class SpanError(ValueError):
    pass


class TrainingDataError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    left_context: str
    errors_in_sentence: int
    words_in_span: int
    right_context: str
    vowels: Tuple[Tuple[str, int], ...]
    consonants: Tuple[Tuple[str, int], ...]

    def value(self, feature_id: str) -> str:
        if feature_id == 'f1':
            return self.left_context
        elif feature_id == 'f2':
            return str(self.errors_in_sentence)
        elif feature_id == 'f3':
            return str(self.words_in_span)
        elif feature_id == 'f4':
            return self.right_context
        raise ValueError(f'{feature_id} is not a categorical feature')

    def bag(self, feature_id: str) -> Dict[str, int]:
        if feature_id == 'f5':
            return dict(self.vowels)
        elif feature_id == 'f6':
            return dict(self.consonants)
        raise ValueError(f'{feature_id} is not a bag feature')


@dataclass(frozen=True)
class TrainingExample:
    features: FeatureVector
    label: str


def check_span(sentence: WordMatching.TokenSequence, start: int, end: int):
    if not 0 <= start < end <= len(sentence):
        raise SpanError(f'span [{start}, {end}) outside a sentence of {len(sentence)} words')


def extract_features(sentence: WordMatching.TokenSequence, span: Tuple[int, int], total_errors: int) -> FeatureVector:
    """Context, size and letter bags of an erroneous span."""
    start, end = span
    check_span(sentence, start, end)
    if total_errors < 1:
        raise SpanError('a marked sentence has at least one error')
    letters = [char for char in ''.join(sentence.tokens[start:end]).lower() if char.isalpha()]
    vowels = Counter(char for char in letters if char in VOWELS)
    consonants = Counter(char for char in letters if char not in VOWELS)
    return FeatureVector(
        left_context=sentence[start - 1] if start > 0 else START_TOKEN,
        errors_in_sentence=total_errors,
        words_in_span=end - start,
        right_context=sentence[end] if end < len(sentence) else END_TOKEN,
        vowels=tuple(sorted(vowels.items())),
        consonants=tuple(sorted(consonants.items())))


def check_feature_set(features: Iterable[str]) -> Tuple[str, ...]:
    features = tuple(features)
    unknown = [feature for feature in features if feature not in FEATURE_IDS]
    if unknown or not features:
        raise ValueError(f'Invalid feature set {",".join(features) or "(empty)"}')
    return tuple(feature for feature in FEATURE_IDS if feature in features)


@dataclass
class NaiveBayesModel:
    alpha: float
    features: Tuple[str, ...]
    class_counts: Dict[str, int]
    # feature id -> label -> value (or character) -> count
    counts: Dict[str, Dict[str, Dict[str, int]]]
    vocabularies: Dict[str, frozenset] = field(init=False)
    totals: Dict[str, Dict[str, int]] = field(init=False)

    def __post_init__(self):
        self.vocabularies = {
            feature_id: frozenset(value for per_label in self.counts.get(feature_id, {}).values()
                                  for value in per_label)
            for feature_id in self.features}
        self.totals = {
            feature_id: {label: sum(per_value.values())
                         for label, per_value in self.counts.get(feature_id, {}).items()}
            for feature_id in self.features}

    @property
    def labels(self) -> List[str]:
        return sorted(self.class_counts)

    @property
    def class_priors(self) -> Dict[str, float]:
        total = sum(self.class_counts.values())
        return {label: count / total for label, count in self.class_counts.items()}

    def conditional(self, feature_id: str, value: str, label: str) -> float:
        """Laplace-smoothed P(value | label); unseen values share one extra slot."""
        count = self.counts.get(feature_id, {}).get(label, {}).get(value, 0)
        total = self.totals[feature_id].get(label, 0)
        slots = len(self.vocabularies[feature_id]) + 1
        return (count + self.alpha) / (total + self.alpha * slots)

    def logScore(self, features: FeatureVector, label: str) -> float:
        score = np.log(self.class_counts[label] / sum(self.class_counts.values()))
        for feature_id in self.features:
            if feature_id in CATEGORICAL_FEATURES:
                score += np.log(self.conditional(feature_id, features.value(feature_id), label))
            else:
                for char, count in features.bag(feature_id).items():
                    score += count * np.log(self.conditional(feature_id, char, label))
        return float(score)

    def posteriors(self, features: FeatureVector) -> Dict[str, float]:
        """Normalized P(label | features), the evidence term included."""
        labels = self.labels
        scores = np.array([self.logScore(features, label) for label in labels])
        evidence = np.logaddexp.reduce(scores)
        return {label: float(np.exp(score - evidence)) for label, score in zip(labels, scores)}

    def to_json(self) -> str:
        return json.dumps({
            'format': MODEL_FORMAT,
            'version': MODEL_VERSION,
            'alpha': self.alpha,
            'features': list(self.features),
            'class_counts': self.class_counts,
            'counts': self.counts,
        }, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'NaiveBayesModel':
        try:
            data = json.loads(text)
        except json.JSONDecodeError as error:
            raise TrainingDataError(f'Model is not valid JSON: {error}') from error
        if data.get('format') != MODEL_FORMAT or data.get('version') != MODEL_VERSION:
            raise TrainingDataError('Unsupported model format or version')
        return cls(float(data['alpha']), check_feature_set(data['features']),
                   {label: int(count) for label, count in data['class_counts'].items()},
                   data['counts'])


def train(examples: Sequence[TrainingExample], alpha: float = 1.0,
          features: Iterable[str] = DEFAULT_FEATURES) -> NaiveBayesModel:
    start = time.time()
    if not examples:
        raise TrainingDataError('empty training set')
    if alpha <= 0:
        raise TrainingDataError('alpha must be positive')
    features = check_feature_set(features)
    class_counts = Counter()
    counts = {feature_id: {} for feature_id in features}
    for example in examples:
        if not example.label:
            raise TrainingDataError('empty correction label')
        class_counts[example.label] += 1
        for feature_id in features:
            per_value = counts[feature_id].setdefault(example.label, {})
            if feature_id in CATEGORICAL_FEATURES:
                value = example.features.value(feature_id)
                per_value[value] = per_value.get(value, 0) + 1
            else:
                for char, count in example.features.bag(feature_id).items():
                    per_value[char] = per_value.get(char, 0) + count
    model = NaiveBayesModel(alpha, features, dict(class_counts), counts)
    logger.debug('Time for training on %d examples: %s', len(examples), str(time.time()-start))
    return model


def classify(model: NaiveBayesModel, features: FeatureVector) -> List[Tuple[str, float]]:
    """Labels by log P(label) + sum log P(f | label), best first, ties by label."""
    scored = [(label, model.logScore(features, label)) for label in model.labels]
    return sorted(scored, key=lambda item: (-item[1], item[0]))


def check_marked_spans(sentence: WordMatching.TokenSequence, marked_spans: Sequence[Tuple[int, int]]):
    previous_end = 0
    for start, end in sorted(marked_spans):
        check_span(sentence, start, end)
        if start < previous_end:
            raise SpanError('overlapping marked spans')
        previous_end = end


def apply_repair(model: NaiveBayesModel, sentence: WordMatching.TokenSequence,
                 marked_spans: Sequence[Tuple[int, int]]) -> WordMatching.TokenSequence:
    """Replace every marked span by its top-ranked correction."""
    check_marked_spans(sentence, marked_spans)
    replacements = []
    for start, end in marked_spans:
        features = extract_features(sentence, (start, end), len(marked_spans))
        label = classify(model, features)[0][0]
        replacements.append((start, end, label.split()))
    return WordMatching.replace_spans(sentence, replacements)


class NaiveBayesRepairModel(ModelInterfaces.IRepairModel):

    def __init__(self, model: NaiveBayesModel) -> None:
        self.model = model

    def repairSentence(self, sentence: str, marked_spans=None) -> WordMatching.TokenSequence:
        return apply_repair(self.model, WordMatching.tokenize(sentence), marked_spans or [])


@dataclass(frozen=True)
class CrossValidationResult:
    fold_accuracies: Tuple[float, ...]
    fold_sizes: Tuple[Tuple[int, int], ...]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))


def top_label_accuracy(model: NaiveBayesModel, examples: Sequence[TrainingExample]) -> float:
    hits = sum(1 for example in examples if classify(model, example.features)[0][0] == example.label)
    return hits / len(examples)


def cross_validate(examples: Sequence[TrainingExample], k: int = 10, alpha: float = 1.0, seed: int = 0,
                   features: Iterable[str] = DEFAULT_FEATURES) -> CrossValidationResult:
    """Seeded shuffle, then k contiguous folds; each fold is tested once."""
    start = time.time()
    if k < 2:
        raise TrainingDataError('k must be at least 2')
    if k > len(examples):
        raise TrainingDataError(f'k={k} exceeds the {len(examples)} available examples')
    order = np.random.default_rng(seed).permutation(len(examples))
    folds = np.array_split(order, k)
    accuracies, sizes = [], []
    for fold_idx, test_idx in enumerate(folds):
        train_idx = np.concatenate([fold for idx, fold in enumerate(folds) if idx != fold_idx])
        model = train([examples[idx] for idx in train_idx], alpha, features)
        accuracies.append(top_label_accuracy(model, [examples[idx] for idx in test_idx]))
        sizes.append((len(train_idx), len(test_idx)))
    logger.debug('Time for %d-fold cross validation: %s', k, str(time.time()-start))
    return CrossValidationResult(tuple(accuracies), tuple(sizes))


def majority_baseline(examples: Sequence[TrainingExample]) -> float:
    if not examples:
        raise TrainingDataError('empty training set')
    return Counter(example.label for example in examples).most_common(1)[0][1] / len(examples)


def feature_sweep(examples: Sequence[TrainingExample], k: int = 10, alpha: float = 1.0,
                  seed: int = 0) -> List[Tuple[Tuple[str, ...], float]]:
    """Mean cross-validated accuracy of every non-empty feature subset, best first."""
    results = []
    for size in range(1, len(FEATURE_IDS) + 1):
        for subset in itertools.combinations(FEATURE_IDS, size):
            results.append((subset, cross_validate(examples, k, alpha, seed, subset).mean_accuracy))
    return sorted(results, key=lambda item: (-item[1], len(item[0]), item[0]))


def examples_from_pairs(pairs: Iterable[Tuple[str, str]]) -> List[TrainingExample]:
    """Training examples from (hypothesis, reference) pairs via word alignment."""
    examples = []
    for hypothesis, reference in pairs:
        mispairs = WordMatching.mispairs_for(hypothesis, reference)
        for mispair in mispairs:
            if not mispair.correction:
                continue
            features = extract_features(mispair.sentence, (mispair.start, mispair.end), len(mispairs))
            examples.append(TrainingExample(features, ' '.join(mispair.correction)))
    return examples


def read_tsv(path: str, columns: Sequence[str]) -> pd.DataFrame:
    """Headerless UTF-8 TSV; lines starting with `#` are comments, a `#` inside a field is text.

    Short rows are padded with empty strings.
    """
    with open(path, encoding='utf-8') as tsv_file:
        lines = [line for line in tsv_file if not line.startswith('#') and line.strip()]
    if not lines:
        return pd.DataFrame(columns=list(columns), dtype=str)
    df = pd.read_csv(io.StringIO(''.join(lines)), sep='\t', names=list(columns), dtype=str,
                     keep_default_na=False, quoting=3, index_col=False)
    return df.fillna('')


def load_training_file(path: str) -> List[TrainingExample]:
    """Rows `sentence<TAB>span_start<TAB>span_len<TAB>correction`; f2 counts the rows of a sentence."""
    df = read_tsv(path, ['sentence', 'span_start', 'span_len', 'correction'])
    errors_per_sentence = Counter(df['sentence'])
    examples = []
    for row_number, row in enumerate(df.itertuples(index=False), start=1):
        try:
            start, length = int(row.span_start), int(row.span_len)
        except ValueError as error:
            raise TrainingDataError(f'row {row_number}: span offsets must be integers') from error
        sentence = WordMatching.tokenize(row.sentence)
        label = ' '.join(WordMatching.tokenize(row.correction).tokens)
        if not label:
            raise TrainingDataError(f'row {row_number}: empty correction')
        try:
            features = extract_features(sentence, (start, start + length), errors_per_sentence[row.sentence])
        except SpanError as error:
            raise TrainingDataError(f'row {row_number}: {error}') from error
        examples.append(TrainingExample(features, label))
    logger.info('Loaded %d training examples from %s', len(examples), path)
    return examples


def parse_marked_spans(text: str) -> List[Tuple[int, int]]:
    """`start:len,start:len` token offsets."""
    spans = []
    for item in text.split(','):
        if not item.strip():
            continue
        start, separator, length = item.partition(':')
        try:
            start, length = int(start), int(length)
        except ValueError as error:
            raise SpanError(f'bad span {item!r}') from error
        if not separator or length < 1:
            raise SpanError(f'bad span {item!r}')
        spans.append((start, start + length))
    return spans


def load_marked_file(path: str) -> List[Tuple[WordMatching.TokenSequence, List[Tuple[int, int]]]]:
    df = read_tsv(path, ['sentence', 'spans'])
    return [(WordMatching.tokenize(sentence), parse_marked_spans(spans))
            for sentence, spans in zip(df['sentence'], df['spans'])]


def save_model(model: NaiveBayesModel, path: str):
    with open(path, 'w', encoding='utf-8') as model_file:
        model_file.write(model.to_json())


def load_model(path: str) -> NaiveBayesModel:
    with open(path, encoding='utf-8') as model_file:
        return NaiveBayesModel.from_json(model_file.read())
