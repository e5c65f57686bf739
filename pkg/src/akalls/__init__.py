"""Adaptive pool-based active learning with nearest-neighbor label inference.

The engine scans an unlabeled pool under a label budget, infers labels by
sequentially querying nearest neighbors with anytime confidence bounds, and
returns a 1-NN classifier built on the points whose labels carry a margin
guarantee.  Synthetic problems with known ground truth, assumption audits,
exact risk evaluation and a reproducible benchmark harness are included.
"""

from akalls.problems import (
    Oracle,
    Pool,
    ProblemSpec,
    ball_prob_empirical,
    draw_pool,
    eta_example,
    example_1d,
    load_pool_csv,
    parse_problem,
    query_label,
)
from akalls.stats import (
    GridSpec,
    StatParams,
    build_grids,
    confidence_radius,
    margin_threshold,
    phi,
    sample_bound,
)
from akalls.neighbors import NeighborIndex
from akalls.engine import (
    ActiveState,
    ConfidentResult,
    OneNNClassifier,
    PassiveKnnClassifier,
    confident_adapt,
    passive_knn,
    predict_1nn,
    reliable,
    run_akalls,
)
from akalls.evaluation import (
    AuditReport,
    RiskEstimate,
    audit_h2,
    audit_h4,
    excess_risk_mc,
    excess_risk_quadrature_1d,
    fit_margin_noise,
    fit_rate,
)
from akalls.bench import ExperimentConfig, RunRecord, emit_report, run_experiment

__version__ = "0.1.0"

__all__ = [
    "ActiveState",
    "AuditReport",
    "ConfidentResult",
    "ExperimentConfig",
    "GridSpec",
    "NeighborIndex",
    "OneNNClassifier",
    "Oracle",
    "PassiveKnnClassifier",
    "Pool",
    "ProblemSpec",
    "RiskEstimate",
    "RunRecord",
    "StatParams",
    "audit_h2",
    "audit_h4",
    "ball_prob_empirical",
    "build_grids",
    "confidence_radius",
    "confident_adapt",
    "draw_pool",
    "emit_report",
    "eta_example",
    "example_1d",
    "excess_risk_mc",
    "excess_risk_quadrature_1d",
    "fit_margin_noise",
    "fit_rate",
    "load_pool_csv",
    "margin_threshold",
    "parse_problem",
    "passive_knn",
    "phi",
    "predict_1nn",
    "query_label",
    "reliable",
    "run_akalls",
    "sample_bound",
]
