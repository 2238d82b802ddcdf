"""Aggregate expert probabilistic causal models into a counterfactually fair predictor."""

from .aggregation import (AggregationConfig, AggregationResult, FairnessSpec, Order, Rule,
                          TieBreak, aggregate, aggregate_judgments, edge_depth_layers, pooling,
                          pooling_removal, pooling_trace, prune_isolated, removal,
                          removal_pooling, is_structurally_fair, unfair_vertices)
from .distributions import Bernoulli, Beta, Categorical, PointMass, Poisson
from .dsl import parse_document, parse_model, serialize_model
from .errors import FairpoolError
from .expr import Binary, Comparison, Constant, IfThenElse, VarRef
from .formats import (EncodingTable, EvidenceRecord, parse_encoding, parse_evidence,
                      parse_fairness_spec)
from .graph import CausalDiagram, format_dag, parse_dag
from .montecarlo import (FairFeatureSet, FairnessReport, PredictorDistribution,
                         check_counterfactual_fairness, exact_fair_distribution, fair_predict,
                         interventional_contrast, kde, predict_full_evidence)
from .pooling import (PoolingKind, PoolingOperator, decision_report, mean_of_expectations,
                      pool_samples)
from .scm import (ProbabilisticCausalModel, counterfactual, descendants, evaluate, intervene,
                  sample_context)

__version__ = "0.1.0"
