from typing import Optional

import DomainOntology
import EvoDevoRepair
import NaiveBayesRepair
import PosTagger
import RuleBasedModels
from ModelInterfaces import IPhoneticEncoder, IRepairModel, MissingResourceError


def getRepairModel(method: str, ontology: Optional[DomainOntology.Ontology] = None,
                   cfg: EvoDevoRepair.FitnessConfig = EvoDevoRepair.FitnessConfig(), rules=(),
                   emb: Optional[EvoDevoRepair.EmbeddingTable] = None,
                   model: Optional[NaiveBayesRepair.NaiveBayesModel] = None,
                   tagger: Optional[PosTagger.LexiconTagger] = None) -> IRepairModel:
    """
    Get a sentence repair model.

    Args:
        method: 'evo' for ontology driven Evo-Devo repair, 'ml' for Naive Bayes span correction
        ontology, cfg, rules, emb, tagger: resources of the evo method
        model: trained Naive Bayes model of the ml method

    Returns:
        IRepairModel instance
    """
    if method == 'evo':
        if ontology is None:
            raise MissingResourceError('evo repair needs an ontology')
        return EvoDevoRepair.EvoDevoRepairModel(ontology, cfg, rules, emb, tagger)
    elif method == 'ml':
        if model is None:
            raise MissingResourceError('ml repair needs a trained model')
        return NaiveBayesRepair.NaiveBayesRepairModel(model)
    else:
        raise ValueError('Repair method not implemented')


def getPhoneticEncoder(name: str) -> IPhoneticEncoder:
    """
    Get a phonetic encoder by name: 'soundex', 'metaphone' or 'dmeta'.
    """
    return RuleBasedModels.get_phonetic_encoder(name)
