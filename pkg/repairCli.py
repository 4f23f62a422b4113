import argparse
import logging
import os
import sys
import time
from typing import List, Optional, Sequence

import pandas as pd
from dotenv import load_dotenv

import DomainOntology
import EvaluationHarness
import EvoDevoRepair
import LinguisticRules
import NaiveBayesRepair
import PosTagger
import RuleBasedModels
import WordMatching
import models

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageArgumentParser(argparse.ArgumentParser):
    """Usage problems exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f'{self.prog}: error: {message}\n')


def feature_list(text: str) -> List[str]:
    return [feature.strip() for feature in text.split(',') if feature.strip()]


def add_training_source(parser: argparse.ArgumentParser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--in', dest='input', help='training pairs TSV')
    source.add_argument('--corpus', help='corpus TSV; examples come from aligning each hypothesis with its reference')


def build_parser() -> argparse.ArgumentParser:
    parser = UsageArgumentParser(prog='repairCli', description='Domain repair of speech recognizer transcripts')
    parser.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING (default from ASR_REPAIR_LOG_LEVEL)')
    commands = parser.add_subparsers(dest='command', required=True)

    tokenize = commands.add_parser('tokenize', help='print normalized tokens')
    tokenize.add_argument('--text', required=True)

    align = commands.add_parser('align', help='print the word alignment of a hypothesis and its reference')
    align.add_argument('--hyp', required=True)
    align.add_argument('--ref', required=True)

    score = commands.add_parser('score', help='print the word accuracy of a hypothesis')
    score.add_argument('--hyp', required=True)
    score.add_argument('--ref', required=True)

    encode = commands.add_parser('encode', help='print the phonetic codes and syllables of a word')
    encode.add_argument('word')

    ontology = commands.add_parser('ontology', help='inspect an ontology file')
    ontology_commands = ontology.add_subparsers(dest='ontology_command', required=True)
    stats = ontology_commands.add_parser('stats', help='triple and distinct term counts')
    stats.add_argument('path')
    candidates = ontology_commands.add_parser('candidates', help='genes partially matching a span')
    candidates.add_argument('--ontology', required=True)
    candidates.add_argument('--span', required=True)
    candidates.add_argument('--floor', type=float, default=0.5)

    repair = commands.add_parser('repair', help='repair transcripts')
    repair_commands = repair.add_subparsers(dest='repair_command', required=True)
    evo = repair_commands.add_parser('evo', help='Evo-Devo ontology based repair')
    evo.add_argument('--ontology', required=True)
    evo.add_argument('--config', default=None)
    evo.add_argument('--rules', default=LinguisticRules.default_rules_path)
    evo.add_argument('--embeddings', default=None)
    source = evo.add_mutually_exclusive_group(required=True)
    source.add_argument('--sentence')
    source.add_argument('--in', dest='input')
    evo.add_argument('--out', default=None)

    ml = repair_commands.add_parser('ml', help='Naive Bayes span correction')
    ml_commands = ml.add_subparsers(dest='ml_command', required=True)
    ml_train = ml_commands.add_parser('train', help='train a model from marked training pairs')
    add_training_source(ml_train)
    ml_train.add_argument('--out', required=True)
    ml_train.add_argument('--alpha', type=float, default=1.0)
    ml_train.add_argument('--features', type=feature_list, default=list(NaiveBayesRepair.DEFAULT_FEATURES))
    ml_apply = ml_commands.add_parser('apply', help='repair marked spans with a trained model')
    ml_apply.add_argument('--model', required=True)
    ml_apply.add_argument('--in', dest='input', required=True)
    ml_cv = ml_commands.add_parser('cv', help='k-fold cross validation')
    add_training_source(ml_cv)
    ml_cv.add_argument('--k', type=int, default=10)
    ml_cv.add_argument('--seed', type=int, required=True)
    ml_cv.add_argument('--alpha', type=float, default=1.0)
    ml_cv.add_argument('--features', type=feature_list, default=list(NaiveBayesRepair.DEFAULT_FEATURES))
    ml_cv.add_argument('--sweep', action='store_true', help='evaluate every feature subset')

    gen = commands.add_parser('gen', help='generate a noisy channel corpus')
    gen.add_argument('--refs', required=True)
    gen.add_argument('--channel', required=True)
    gen.add_argument('--out', required=True)
    gen.add_argument('--seed', type=int, required=True)
    gen.add_argument('--ontology', default=None)
    gen.add_argument('--lexicon', default=PosTagger.default_lexicon_path)

    evaluate = commands.add_parser('eval', help='accuracy before and after repair')
    evaluate.add_argument('--corpus', required=True)
    evaluate.add_argument('--method', choices=['evo', 'ml', 'both'], required=True)
    evaluate.add_argument('--ontology', default=None)
    evaluate.add_argument('--config', default=None)
    evaluate.add_argument('--rules', default=LinguisticRules.default_rules_path)
    evaluate.add_argument('--embeddings', default=None)
    evaluate.add_argument('--model', default=None)
    evaluate.add_argument('--report', default=None)
    return parser


def configure_logging(level: Optional[str]):
    load_dotenv()
    level = (level or os.environ.get('ASR_REPAIR_LOG_LEVEL') or 'WARNING').upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')


def load_evo_resources(args):
    ontology = DomainOntology.load_ontology(args.ontology) if args.ontology else None
    cfg = EvoDevoRepair.load_fitness_config(args.config) if args.config else EvoDevoRepair.FitnessConfig()
    rules = LinguisticRules.load_rules(args.rules) if args.rules else []
    emb = EvoDevoRepair.load_embeddings(args.embeddings) if args.embeddings else None
    return ontology, cfg, rules, emb


def run_tokenize(args, out):
    out.write('\t'.join(WordMatching.tokenize(args.text).tokens) + '\n')


def run_align(args, out):
    trace = WordMatching.align(WordMatching.tokenize(args.hyp), WordMatching.tokenize(args.ref))
    for op in trace.ops:
        hyp_token = trace.hypothesis[op.hyp_index] if op.hyp_index is not None else '-'
        ref_token = trace.reference[op.ref_index] if op.ref_index is not None else '-'
        out.write(f'{op.kind.value}\t{hyp_token}\t{ref_token}\n')
    out.write(f'cost\t{trace.cost}\n')


def run_score(args, out):
    out.write(f'{WordMatching.accuracy(WordMatching.tokenize(args.hyp), WordMatching.tokenize(args.ref)):.1f}\n')


def run_encode(args, out):
    primary, alternate = RuleBasedModels.double_metaphone(args.word)
    out.write(f'soundex\t{RuleBasedModels.soundex(args.word)}\n')
    out.write(f'metaphone\t{RuleBasedModels.metaphone(args.word)}\n')
    out.write(f'dmeta_primary\t{primary}\n')
    out.write(f'dmeta_alternate\t{alternate}\n')
    out.write(f'syllables\t{RuleBasedModels.syllable_count(args.word)}\n')


def run_ontology(args, out):
    if args.ontology_command == 'stats':
        ontology = DomainOntology.load_ontology(args.path)
        out.write(f'triples\t{len(ontology)}\nterms\t{len(ontology.term_index)}\n')
    else:
        ontology = DomainOntology.load_ontology(args.ontology)
        for gene in DomainOntology.candidate_genes(args.span, ontology, args.floor):
            triple = gene.triple
            out.write(f'{gene.match_score:.3f}\t{gene.matched_term}\t{triple.subject}\t{triple.predicate}\t{triple.object}\n')


def run_repair_evo(args, out):
    ontology, cfg, rules, emb = load_evo_resources(args)
    repair_model = models.getRepairModel('evo', ontology, cfg, rules, emb)
    if args.sentence is not None:
        out.write(repair_model.repairSentence(args.sentence).text() + '\n')
        return
    corpus = EvaluationHarness.load_corpus(args.input)
    rows = []
    for record in corpus:
        result = EvoDevoRepair.repair(record.hypothesis, ontology, cfg, rules, emb)
        rows.append([record.id, record.hypothesis, result.text(),
                     ';'.join(f'{item.span}>{item.term}' for item in result.replacements),
                     ';'.join(f'{item.rule_id}@{item.position}' for item in result.rule_firings)])
    table = pd.DataFrame(rows, columns=['id', 'input', 'output', 'replacements', 'rule_firings'])
    text = table.to_csv(sep='\t', index=False, lineterminator='\n')
    if args.out:
        with open(args.out, 'w', encoding='utf-8', newline='') as report_file:
            report_file.write(text)
    else:
        out.write(text)


def training_examples(args) -> List[NaiveBayesRepair.TrainingExample]:
    if args.corpus:
        return EvaluationHarness.ml_examples(EvaluationHarness.load_corpus(args.corpus))
    return NaiveBayesRepair.load_training_file(args.input)


def run_repair_ml(args, out):
    if args.ml_command == 'train':
        examples = training_examples(args)
        model = NaiveBayesRepair.train(examples, args.alpha, args.features)
        NaiveBayesRepair.save_model(model, args.out)
        out.write(f'examples\t{len(examples)}\nlabels\t{len(model.labels)}\n')
    elif args.ml_command == 'apply':
        repair_model = models.getRepairModel('ml', model=NaiveBayesRepair.load_model(args.model))
        for sentence, spans in NaiveBayesRepair.load_marked_file(args.input):
            out.write(repair_model.repairSentence(sentence.text(), spans).text() + '\n')
    else:
        examples = training_examples(args)
        if args.sweep:
            for subset, accuracy in NaiveBayesRepair.feature_sweep(examples, args.k, args.alpha, args.seed):
                out.write(f'{",".join(subset)}\t{accuracy:.4f}\n')
            return
        result = NaiveBayesRepair.cross_validate(examples, args.k, args.alpha, args.seed, args.features)
        for fold, (accuracy, (train_size, test_size)) in enumerate(zip(result.fold_accuracies, result.fold_sizes), 1):
            out.write(f'fold{fold}\t{train_size}\t{test_size}\t{accuracy:.4f}\n')
        out.write(f'mean\t{result.mean_accuracy:.4f}\n')
        out.write(f'majority_baseline\t{NaiveBayesRepair.majority_baseline(examples):.4f}\n')


def run_gen(args, out):
    cfg = EvaluationHarness.load_channel_config(args.channel, seed=args.seed)
    ontology = DomainOntology.load_ontology(args.ontology) if args.ontology else DomainOntology.Ontology()
    lexicon = PosTagger.load_lexicon(args.lexicon)
    references = EvaluationHarness.load_references(args.refs)
    corpus = EvaluationHarness.generate_corpus(references, cfg, ontology, lexicon)
    EvaluationHarness.write_corpus(corpus, args.out)
    out.write(f'records\t{len(corpus)}\n')


def run_eval(args, out):
    ontology, cfg, rules, emb = load_evo_resources(args)
    model = NaiveBayesRepair.load_model(args.model) if args.model else None
    corpus = EvaluationHarness.load_corpus(args.corpus)
    reports = EvaluationHarness.evaluate(corpus, args.method, ontology, cfg, rules, emb, model)
    EvaluationHarness.write_report(reports, args.report or out)


COMMANDS = {
    'tokenize': run_tokenize,
    'align': run_align,
    'score': run_score,
    'encode': run_encode,
    'ontology': run_ontology,
    'gen': run_gen,
    'eval': run_eval,
}


def dispatch(argv: Sequence[str], out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(list(argv))
    except SystemExit as exit_request:
        return EXIT_OK if exit_request.code in (0, None) else EXIT_USAGE
    configure_logging(args.log_level)

    start = time.time()
    try:
        if args.command == 'repair':
            if args.repair_command == 'evo':
                run_repair_evo(args, out)
            else:
                run_repair_ml(args, out)
        else:
            COMMANDS[args.command](args, out)
    except (ValueError, OSError) as error:
        sys.stderr.write(f'repairCli: error: {error}\n')
        return EXIT_DATA
    logger.debug('Time for %s: %s', args.command, str(time.time()-start))
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(dispatch(sys.argv[1:]))
