"""Causal rule mining on binary observational data.

Mine ``X -> Y | S`` rules (intervention set ``X`` changes outcome ``Y`` in
subpopulation ``S``), estimate the average treatment effect on the treated
with bias-correcting estimators, and check those estimators on synthetic
scenarios whose true effect is known.
"""

__version__ = "0.1.0"

from .classify import Category, CovariateClassification, classify
from .data import Dataset, ItemRole, count_where, itemset, load_csv, support, write_csv
from .errors import (
    AllReplicatesInestimable,
    CausalRulesError,
    CollinearDesign,
    DuplicateItemName,
    EmptyDataset,
    MissingRoleForItem,
    NonBinaryCell,
    OverlappingSets,
)
from .estimators import (
    METHODS,
    AttEstimate,
    EstimationContext,
    att_cc,
    att_cm,
    att_conf,
    att_da,
    att_psm,
    att_sn,
    estimate,
    estimate_arrays,
    make_context,
)
from .glm import GlmFit, fit_logistic
from .miner import CausalRule, MiningConfig, MiningStats, ecrp_extend, mine, posp_check
from .simulation import (
    BootstrapResult,
    Scenario,
    ScenarioSpec,
    analytic_att,
    bootstrap,
    generate,
    table4_run,
)
