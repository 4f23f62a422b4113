import math
import os
import random
import unittest
from collections import Counter
from functools import lru_cache

import jellyfish

import DomainOntology
import EvaluationHarness
import EvoDevoRepair
import LinguisticRules
import NaiveBayesRepair
import PosTagger
import RuleBasedModels
import WordMatching

from dotenv import load_dotenv
load_dotenv()

databases = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'databases')
table1_path = os.path.join(databases, 'table1_ontology.tsv')
retail_path = os.path.join(databases, 'retail_ontology.tsv')
references_path = os.path.join(databases, 'retail_references.txt')
training_path = os.path.join(databases, 'ml_training_pairs.tsv')
channel_path = os.path.join(databases, 'default_channel.cfg')

ALPHABET = ('sales', 'peak', 'cells')
WORDS = ('which', 'industry', 'has', 'the', 'pixel', 'sales', 'car', 'dealers', 'for', 'optical', 'quotes',
         'goods', 'in', 'business', 'more', 'cells', 'peak', 'than', 'stores', 'beverages')


def brute_force_cost(hyp, ref) -> int:
    @lru_cache(maxsize=None)
    def cost(i, j):
        if i == len(hyp):
            return len(ref) - j
        if j == len(ref):
            return len(hyp) - i
        return min(cost(i + 1, j + 1) + (hyp[i] != ref[j]), cost(i + 1, j) + 1, cost(i, j + 1) + 1)
    return cost(0, 0)


def random_sentence(rng: random.Random, words, max_length: int):
    return [rng.choice(words) for _ in range(rng.randint(0, max_length))]


@lru_cache(maxsize=None)
def encoded(span: str):
    joined = ''.join(span.split())
    try:
        primary, alternate = RuleBasedModels.double_metaphone(joined)
        return RuleBasedModels.soundex(joined).rstrip('0'), RuleBasedModels.metaphone(joined), primary, alternate
    except RuleBasedModels.UnencodableWordError:
        return None


def keys_agree(a: str, b: str) -> bool:
    if not a or not b:
        return False
    if a == b or (len(a) > 1 and len(b) > 1 and a[1:] == b[1:]):
        return True
    if len(a) > len(b):
        a, b = b, a
    return len(a) >= 3 and len(b) == len(a) + 1 and b[:-1] == a


def direct_scores(span: str, term: str, cfg):
    """finalScore and cost of a span/term pair, recomputed from the phonetic keys and Levenshtein distance."""
    stripped_span, stripped_term = ''.join(span.split()), ''.join(term.split())
    distance = jellyfish.levenshtein_distance(stripped_span, stripped_term)
    ned = distance / max(len(stripped_span), len(stripped_term)) if stripped_span or stripped_term else 0.0
    codes_span, codes_term = encoded(span), encoded(term)
    if codes_span is None or codes_term is None:
        sx = mp = dm = 0.0
    else:
        sx = float(keys_agree(codes_span[0], codes_term[0]))
        mp = float(keys_agree(codes_span[1], codes_term[1]))
        if keys_agree(codes_span[2], codes_term[2]):
            dm = 1.0
        elif (keys_agree(codes_span[3], codes_term[2]) or keys_agree(codes_span[2], codes_term[3])
              or keys_agree(codes_span[3], codes_term[3])):
            dm = 0.5
        else:
            dm = 0.0
    syllables_span, syllables_term = RuleBasedModels.syllable_count(span), RuleBasedModels.syllable_count(term)
    syllables = 1.0 - abs(syllables_span - syllables_term) / max(syllables_span, syllables_term, 1)
    score = cfg.w_phon * ((sx + mp + dm) / 3) + cfg.w_edit * (1.0 - ned)
    b1, b2, b3, b4, _ = cfg.b
    cost = b1 * sx + b2 * mp + b3 * (1.0 - ned) + b4 * syllables
    return min(1.0, max(0.0, score)), min(1.0, max(0.0, cost)), distance


def oracle_replacements(tagged, ontology, cfg):
    """Every window scored against every ontology term, then picked greedily and trimmed to the changed words."""
    tokens = tagged.tokens
    terms = ontology.terms()
    vocabulary = {word for term in terms for word in term.split()}
    content = {idx for idx, tag in enumerate(tagged.tags) if tag[:2] in ('NN', 'VB')}
    injured = {idx for idx in content if tokens[idx] not in EvoDevoRepair.NOISE_WORDS
               and tokens[idx] not in vocabulary}
    windows = []
    for length in range(1, min(cfg.max_window, len(tokens)) + 1):
        for start in range(len(tokens) - length + 1):
            positions = set(range(start, start + length))
            span = ' '.join(tokens[start:start + length])
            if not positions & content:
                continue
            if span in terms:
                windows.append((1.0, length, start, span, True))
            elif positions & injured:
                ranked = []
                for term in terms:
                    score, cost, distance = direct_scores(span, term, cfg)
                    ranked.append((-score, -cost, distance, len(term), term))
                negative_score, _, _, _, term = min(ranked)
                if -negative_score >= cfg.threshold and term != span:
                    windows.append((-negative_score, length, start, term, False))
    taken, picked = set(), []
    for score, length, start, term, intact in sorted(windows, key=lambda item: (-item[0], -item[1], item[2])):
        positions = set(range(start, start + length))
        if not taken & positions:
            taken |= positions
            if not intact:
                picked.append((start, start + length, term))
    expected = []
    for start, end, term in sorted(picked):
        words, replacement = list(tokens[start:end]), term.split()
        while len(words) > 1 and len(replacement) > 1 and words[0] == replacement[0]:
            words, replacement, start = words[1:], replacement[1:], start + 1
        while len(words) > 1 and len(replacement) > 1 and words[-1] == replacement[-1]:
            words, replacement, end = words[:-1], replacement[:-1], end - 1
        expected.append((start, end, ' '.join(replacement)))
    return expected


def random_features(rng: random.Random, letters: str) -> NaiveBayesRepair.FeatureVector:
    word = ''.join(rng.choice(letters) for _ in range(rng.randint(1, 6)))
    vowels = Counter(char for char in word if char in NaiveBayesRepair.VOWELS)
    consonants = Counter(char for char in word if char not in NaiveBayesRepair.VOWELS)
    return NaiveBayesRepair.FeatureVector(rng.choice(['^', 'the', 'of']), rng.randint(1, 3), rng.randint(1, 2),
                                          rng.choice(['$', 'in', 'stores']), tuple(sorted(vowels.items())),
                                          tuple(sorted(consonants.items())))


def direct_log_score(examples, alpha, query, label) -> float:
    """log P(label) + sum of log Laplace-smoothed likelihoods, counted straight from the examples."""
    members = [example.features for example in examples if example.label == label]
    score = math.log(len(members) / len(examples))
    for feature_id in NaiveBayesRepair.CATEGORICAL_FEATURES:
        vocabulary = {example.features.value(feature_id) for example in examples}
        count = sum(1 for features in members if features.value(feature_id) == query.value(feature_id))
        score += math.log((count + alpha) / (len(members) + alpha * (len(vocabulary) + 1)))
    for feature_id in NaiveBayesRepair.BAG_FEATURES:
        vocabulary = {char for example in examples for char in example.features.bag(feature_id)}
        total = sum(sum(features.bag(feature_id).values()) for features in members)
        for char, times in query.bag(feature_id).items():
            count = sum(features.bag(feature_id).get(char, 0) for features in members)
            score += times * math.log((count + alpha) / (total + alpha * (len(vocabulary) + 1)))
    return score


class TestAlignmentProperties(unittest.TestCase):

    def test_alignment_is_minimal(self):
        rng = random.Random(1)
        for _ in range(1000):
            hyp = WordMatching.from_tokens(random_sentence(rng, ALPHABET, 6))
            ref = WordMatching.from_tokens(random_sentence(rng, ALPHABET, 6))
            trace = WordMatching.align(hyp, ref)
            self.assertEqual(trace.cost, brute_force_cost(hyp.tokens, ref.tokens))

    def test_accuracy_range(self):
        rng = random.Random(2)
        for _ in range(1000):
            hyp = WordMatching.from_tokens(random_sentence(rng, ALPHABET, 6))
            ref = WordMatching.from_tokens(random_sentence(rng, ALPHABET, 6) or ['sales'])
            accuracy = WordMatching.accuracy(hyp, ref)
            self.assertTrue(0.0 <= accuracy <= 100.0)
            self.assertEqual(accuracy == 100.0, hyp.tokens == ref.tokens)

    def test_mispairs_rebuild_reference(self):
        rng = random.Random(3)
        for _ in range(1000):
            # an empty hypothesis has no span to carry the correction
            hyp = WordMatching.from_tokens(random_sentence(rng, ALPHABET, 6) or ['peak'])
            ref = WordMatching.from_tokens(random_sentence(rng, ALPHABET, 6))
            mispairs = WordMatching.extract_mispairs(WordMatching.align(hyp, ref))
            self.assertEqual(WordMatching.apply_mispairs(hyp, mispairs).tokens, ref.tokens)


class TestScoringProperties(unittest.TestCase):

    def test_scores_are_symmetric(self):
        rng = random.Random(4)
        cfg = EvoDevoRepair.FitnessConfig()
        for _ in range(1000):
            a = ' '.join(random_sentence(rng, WORDS, 2) or ['sales'])
            b = ' '.join(random_sentence(rng, WORDS, 2) or ['peak'])
            self.assertEqual(RuleBasedModels.phonetic_similarity(a, b), RuleBasedModels.phonetic_similarity(b, a))
            self.assertAlmostEqual(EvoDevoRepair.final_score(a, b, cfg), EvoDevoRepair.final_score(b, a, cfg))
            self.assertAlmostEqual(EvoDevoRepair.cost_score(a, b, cfg), EvoDevoRepair.cost_score(b, a, cfg))
            self.assertTrue(0.0 <= EvoDevoRepair.cost_score(a, b, cfg) <= 1.0)

    def test_syllables_add_up(self):
        rng = random.Random(5)
        for _ in range(1000):
            words = random_sentence(rng, WORDS, 4)
            self.assertEqual(RuleBasedModels.syllable_count(' '.join(words)),
                             sum(RuleBasedModels.syllable_count(word) for word in words))

    def test_retrieval_floor_is_monotonic(self):
        ontology = DomainOntology.load_ontology(retail_path)
        rng = random.Random(6)
        for _ in range(1000):
            span = ' '.join(random_sentence(rng, WORDS, 2) or ['pixel'])
            low, high = sorted((rng.random(), rng.random()))
            loose = {gene.matched_term for gene in DomainOntology.candidate_genes(span, ontology, low)}
            strict = {gene.matched_term for gene in DomainOntology.candidate_genes(span, ontology, high)}
            self.assertLessEqual(strict, loose)


class TestRepairProperties(unittest.TestCase):

    def setUp(self):
        self.table1 = DomainOntology.load_ontology(table1_path)
        self.rules = LinguisticRules.load_rules()

    def test_unreachable_threshold_is_identity(self):
        rng = random.Random(7)
        cfg = EvoDevoRepair.FitnessConfig(threshold=1.01)
        for _ in range(1000):
            sentence = ' '.join(random_sentence(rng, WORDS, 10))
            self.assertEqual(EvoDevoRepair.repair(sentence, self.table1, cfg, self.rules).text(), sentence)

    def test_replacements_do_not_overlap(self):
        rng = random.Random(8)
        for _ in range(1000):
            sentence = ' '.join(random_sentence(rng, WORDS, 10))
            result = EvoDevoRepair.repair(sentence, self.table1)
            claimed = set()
            for replacement in result.replacements:
                positions = set(range(replacement.start, replacement.end))
                self.assertFalse(claimed & positions)
                self.assertTrue(0 <= replacement.start < replacement.end <= len(result.input))
                claimed |= positions

    def test_retrieval_matches_exhaustive_search(self):
        rng = random.Random(9)
        cfg = EvoDevoRepair.FitnessConfig()
        tagger = PosTagger.get_default_tagger()
        for _ in range(1000):
            tagged = tagger.tag(random_sentence(rng, WORDS, 8))
            result = EvoDevoRepair.ontology_based_repair(tagged, self.table1, cfg)
            self.assertEqual([(item.start, item.end, item.term) for item in result.replacements],
                             oracle_replacements(tagged, self.table1, cfg))


class TestNaiveBayesProperties(unittest.TestCase):

    def setUp(self):
        self.examples = NaiveBayesRepair.load_training_file(training_path)

    def test_posteriors_sum_to_one(self):
        rng = random.Random(10)
        for _ in range(1000):
            alpha = rng.uniform(0.1, 3.0)
            features = [feature for feature in NaiveBayesRepair.FEATURE_IDS if rng.random() < 0.5] or ['f3']
            model = NaiveBayesRepair.train(self.examples, alpha, features)
            posteriors = model.posteriors(rng.choice(self.examples).features)
            self.assertAlmostEqual(sum(posteriors.values()), 1.0)

    def test_serialization_preserves_ranking(self):
        rng = random.Random(11)
        model = NaiveBayesRepair.train(self.examples)
        restored = NaiveBayesRepair.NaiveBayesModel.from_json(model.to_json())
        for _ in range(1000):
            features = rng.choice(self.examples).features
            self.assertEqual(NaiveBayesRepair.classify(restored, features),
                             NaiveBayesRepair.classify(model, features))

    def test_cross_validation_is_seeded(self):
        small = self.examples[:8]
        for seed in range(1000):
            first = NaiveBayesRepair.cross_validate(small, 2, seed=seed)
            self.assertEqual(first, NaiveBayesRepair.cross_validate(small, 2, seed=seed))
            self.assertEqual(sorted(size for _, size in first.fold_sizes), [4, 4])

    def test_ranking_matches_direct_evaluation(self):
        rng = random.Random(12)
        letters = 'abeiost'
        for _ in range(1000):
            labels = ['label%d' % idx for idx in range(rng.randint(1, 5))]
            examples = [NaiveBayesRepair.TrainingExample(random_features(rng, letters), rng.choice(labels))
                        for _ in range(rng.randint(1, 20))]
            alpha = rng.choice([0.5, 1.0, 2.0])
            model = NaiveBayesRepair.train(examples, alpha, NaiveBayesRepair.FEATURE_IDS)
            query = random_features(rng, letters)
            expected = sorted(((label, direct_log_score(examples, alpha, query, label))
                               for label in {example.label for example in examples}),
                              key=lambda item: (-item[1], item[0]))
            ranked = NaiveBayesRepair.classify(model, query)
            self.assertEqual([label for label, _ in ranked], [label for label, _ in expected])
            for (_, score), (_, direct) in zip(ranked, expected):
                self.assertAlmostEqual(score, direct)


class TestGenerationProperties(unittest.TestCase):

    def test_same_seed_same_corruption(self):
        ontology = DomainOntology.load_ontology(retail_path)
        vocabulary = EvaluationHarness.channel_vocabulary(ontology, WORDS)
        rng = random.Random(13)
        for seed in range(1000):
            cfg = EvaluationHarness.ChannelConfig(substitution_rate=0.3, deletion_rate=0.1, insertion_rate=0.1,
                                                  seed=seed)
            tokens = random_sentence(rng, WORDS, 8)
            first = EvaluationHarness.NoisyChannel(cfg, vocabulary).corrupt(tokens)
            self.assertEqual(first, EvaluationHarness.NoisyChannel(cfg, vocabulary).corrupt(tokens))
            self.assertTrue(set(first) <= set(tokens) | set(vocabulary))

    def test_same_seed_same_corpus(self):
        ontology = DomainOntology.load_ontology(retail_path)
        lexicon = PosTagger.load_lexicon()
        references = EvaluationHarness.load_references(references_path)
        for seed in range(3):
            cfg = EvaluationHarness.load_channel_config(channel_path, seed=seed)
            self.assertEqual(list(EvaluationHarness.generate_corpus(references, cfg, ontology, lexicon)),
                             list(EvaluationHarness.generate_corpus(references, cfg, ontology, lexicon)))


if __name__ == '__main__':
    unittest.main()
