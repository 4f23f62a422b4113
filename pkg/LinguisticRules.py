import dataclasses
import fnmatch
import logging
import os
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import DomainOntology
import EvoDevoRepair
import PosTagger
import RuleBasedModels
import WordMatching
import WordMetrics

logger = logging.getLogger(__name__)

default_rules_path = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'databases', 'grammar_rules.txt')

CONDITION_NAMES = ('unrelated', 'absent', 'present')


class RuleFormatError(ValueError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f'line {line_number}: {message}')
        self.line_number = line_number


@dataclass(frozen=True)
class PatternElement:
    kind: str  # start, end, term or tag
    glob: str = ''
    negated: bool = False

    def matchesTag(self, tag: str) -> bool:
        return fnmatch.fnmatchcase(tag, self.glob) != self.negated


@dataclass(frozen=True)
class GrammarRule:
    rule_id: str
    elements: Tuple[PatternElement, ...]
    focus: int
    conditions: Tuple[Tuple[str, Tuple[str, ...]], ...]
    replacements: Tuple[str, ...]
    description: str = ''


@dataclass(frozen=True)
class RuleMatch:
    focus_position: int
    terms: Tuple[str, ...]


def parse_element(text: str, line_number: int) -> PatternElement:
    if text == '^':
        return PatternElement('start')
    if text == '$':
        return PatternElement('end')
    if text == 'TERM':
        return PatternElement('term')
    negated = text.startswith('!')
    glob = text[1:] if negated else text
    if not glob or not all(char.isalnum() or char in '*?$' for char in glob):
        raise RuleFormatError(f'bad pattern element {text!r}', line_number)
    return PatternElement('tag', glob, negated)


def parse_conditions(text: str, line_number: int) -> Tuple[Tuple[str, Tuple[str, ...]], ...]:
    conditions = []
    for item in text.split():
        name, _, arguments = item.partition('=')
        if name not in CONDITION_NAMES:
            raise RuleFormatError(f'unknown condition {name!r}', line_number)
        values = tuple(value for value in arguments.split(',') if value)
        if name != 'unrelated' and not values:
            raise RuleFormatError(f'condition {name!r} needs tags', line_number)
        conditions.append((name, values))
    return tuple(conditions)


def parse_rule(line: str, line_number: int) -> GrammarRule:
    """`id | pattern [; conditions] | replace w1,w2 | description`"""
    fields = [value.strip() for value in line.split('|')]
    if len(fields) != 4:
        raise RuleFormatError('expected 4 "|"-separated fields', line_number)
    rule_id, pattern_text, action, description = fields
    if not rule_id:
        raise RuleFormatError('missing rule id', line_number)

    pattern_text, _, condition_text = pattern_text.partition(';')
    elements = []
    focus = None
    for raw in pattern_text.split():
        if raw.startswith('[') and raw.endswith(']'):
            if focus is not None:
                raise RuleFormatError('more than one focus element', line_number)
            element = parse_element(raw[1:-1], line_number)
            if element.kind != 'tag':
                raise RuleFormatError('focus must be a tag element', line_number)
            focus = len(elements)
        else:
            element = parse_element(raw, line_number)
        elements.append(element)
    if focus is None:
        raise RuleFormatError('no focus element', line_number)

    verb, _, words = action.partition(' ')
    replacements = tuple(word.strip().lower() for word in words.split(',') if word.strip())
    if verb != 'replace' or not replacements:
        raise RuleFormatError(f'unsupported action {action!r}', line_number)

    conditions = parse_conditions(condition_text, line_number)
    if any(name == 'unrelated' for name, _ in conditions) and \
            sum(1 for element in elements if element.kind == 'term') != 2:
        raise RuleFormatError('"unrelated" needs exactly two TERM elements', line_number)
    return GrammarRule(rule_id, tuple(elements), focus, conditions, replacements, description)


def parse_rules(lines) -> List[GrammarRule]:
    rules = []
    for line_number, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith('#'):
            continue
        rules.append(parse_rule(line.rstrip('\r\n'), line_number))
    return rules


def load_rules(path: str = default_rules_path) -> List[GrammarRule]:
    with open(path, encoding='utf-8') as rules_file:
        rules = parse_rules(rules_file)
    logger.info('Loaded %d grammar rules from %s', len(rules), path)
    return rules


class RuleMatcher:
    """Matches rule patterns against one tagged sentence."""

    def __init__(self, tagged: PosTagger.TaggedSentence, ontology: DomainOntology.Ontology, max_window: int):
        self.tokens = tagged.tokens
        self.tags = tagged.tags
        self.ontology = ontology
        self.max_window = max_window

    def matches(self, rule: GrammarRule) -> List[RuleMatch]:
        found = []
        for start in range(len(self.tokens) + 1):
            match = self.matchFrom(rule, 0, start, None, ())
            if match is not None and self.conditionsHold(rule, match):
                found.append(match)
        return list(dict.fromkeys(found))

    def matchFrom(self, rule, element_idx, position, focus_position, terms) -> Optional[RuleMatch]:
        if element_idx == len(rule.elements):
            return RuleMatch(focus_position, terms)
        element = rule.elements[element_idx]
        if element.kind == 'start':
            if position != 0:
                return None
            return self.matchFrom(rule, element_idx + 1, position, focus_position, terms)
        if element.kind == 'end':
            if position != len(self.tokens):
                return None
            return self.matchFrom(rule, element_idx + 1, position, focus_position, terms)
        if element.kind == 'term':
            longest = min(self.max_window, len(self.tokens) - position)
            for length in range(longest, 0, -1):
                span = ' '.join(self.tokens[position:position + length])
                if self.ontology.has_term(span):
                    match = self.matchFrom(rule, element_idx + 1, position + length, focus_position, terms + (span,))
                    if match is not None:
                        return match
            return None
        if position >= len(self.tokens) or not element.matchesTag(self.tags[position]):
            return None
        if element_idx == rule.focus:
            focus_position = position
        return self.matchFrom(rule, element_idx + 1, position + 1, focus_position, terms)

    def conditionsHold(self, rule: GrammarRule, match: RuleMatch) -> bool:
        for name, values in rule.conditions:
            if name == 'unrelated' and self.ontology.related(*match.terms):
                return False
            if name == 'absent' and any(tag in values for tag in self.tags):
                return False
            if name == 'present' and not any(tag in values for tag in self.tags):
                return False
        return True


def fittest_word(token: str, candidates: Sequence[str]) -> str:
    """Candidate closest in sound to the offending token, edit similarity on ties."""
    return min(candidates, key=lambda word: (-RuleBasedModels.phonetic_similarity(token, word),
                                             WordMetrics.normalized_edit_distance(token, word), word))


def linguistic_repair(partial: EvoDevoRepair.RepairResult, rules: Sequence[GrammarRule],
                      ontology: DomainOntology.Ontology,
                      cfg: EvoDevoRepair.FitnessConfig = EvoDevoRepair.FitnessConfig(),
                      tagger: Optional[PosTagger.LexiconTagger] = None) -> EvoDevoRepair.RepairResult:
    """Apply rules in order, each at most once per position, re-tagging after every firing."""
    start_time = time.time()
    tagger = tagger or PosTagger.get_default_tagger()
    tokens = list(partial.after_gene_repair.tokens)
    tagged = tagger.tag(tokens)
    firings = []
    for rule in rules:
        attempted = set()
        pending = True
        while pending:
            pending = False
            for match in RuleMatcher(tagged, ontology, cfg.max_window).matches(rule):
                if match.focus_position in attempted:
                    continue
                attempted.add(match.focus_position)
                old_word = tokens[match.focus_position]
                new_word = fittest_word(old_word, rule.replacements)
                if new_word == old_word or EvoDevoRepair.final_score(old_word, new_word, cfg) < cfg.threshold:
                    continue
                tokens[match.focus_position] = new_word
                firings.append(EvoDevoRepair.RuleFiring(rule.rule_id, match.focus_position, old_word, new_word))
                logger.debug('Rule %s replaced "%s" by "%s" at %d', rule.rule_id, old_word, new_word,
                             match.focus_position)
                tagged = tagger.tag(tokens)
                pending = True
                break
    logger.debug('Time for linguistic repair: %s', str(time.time()-start_time))
    return dataclasses.replace(partial, output=WordMatching.from_tokens(tokens),
                               rule_firings=partial.rule_firings + tuple(firings))
