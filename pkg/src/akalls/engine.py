"""Budgeted active-learning engine.

The outer loop sweeps a halving grid of smoothness levels.  At each level it
scans the pool in order; points whose label is already implied by earlier
guarantees are skipped, everything else goes through a sequential
neighbor-label vote with an anytime cutoff.  Votes whose margin lower bound
clears a fraction of the confidence radius join the informative set (with
that bound as a guarantee), the rest are parked as noisy.  The final
classifier is 1-NN on the informative set.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from akalls.neighbors import NeighborIndex
from akalls.problems import Oracle, Pool, ProblemSpec, ball_prob_empirical
from akalls.stats import GridSpec, StatParams, build_grids, confidence_radius, sample_bound

__all__ = [
    "ActiveState",
    "ConfidentResult",
    "EmptySupportError",
    "LevelStats",
    "OneNNClassifier",
    "PassiveKnnClassifier",
    "RunMetrics",
    "confident_adapt",
    "passive_knn",
    "predict_1nn",
    "reliable",
    "run_akalls",
]


class EmptySupportError(ValueError):
    """Prediction was requested from a classifier with no support points."""


@dataclass
class ConfidentResult:
    """Outcome of one sequential neighbor-label vote.

    ``queried`` lists (pool index, revealed label) in request order;
    ``lower_bound`` is |mean - 1/2| - b_{delta,|Q|} and may be negative.
    A zero-budget call returns the -inf sentinel with ``budget_exhausted``.
    """

    label: int
    queried: list
    lower_bound: float
    stopped_by_cutoff: bool
    budget_exhausted: bool = False

    @property
    def n_requests(self) -> int:
        return len(self.queried)


@dataclass
class LevelStats:
    """Bookkeeping for one smoothness level."""

    level: int
    alpha: float
    budget: int
    charged: int
    new_informative: int
    new_noisy: int
    reliable_skips: int
    scanned: int
    informative_total: int
    noisy_total: int


@dataclass
class RunMetrics:
    """Aggregate accounting for one engine run."""

    budget: int
    charged_requests: int
    distinct_reveals: int
    k_cap_max: int
    levels: list = field(default_factory=list)


@dataclass
class ActiveState:
    """Evolving engine state: labeled sets and margin guarantees.

    ``informative`` and ``noisy`` map pool index -> inferred label and are
    disjoint; informative sets are nested across levels by construction.
    ``guarantees`` maps every informative index to its margin lower bound.
    """

    informative: dict = field(default_factory=dict)
    noisy: dict = field(default_factory=dict)
    guarantees: dict = field(default_factory=dict)
    budget_remaining: int = 0
    level: int = 0


def reliable(x, alpha: float, L: float, guarantees, ball_prob, dim: int) -> bool:
    """Whether earlier guarantees already imply the label of ``x``.

    True iff some guaranteed point (x', c) puts the marginal mass of
    B(x, rho(x, x')) at or below (c / (64 L))^(d/alpha).

    Parameters
    ----------
    guarantees : sequence of (point, lower_bound) pairs
    ball_prob : callable (x, r_array) -> mass array
        Analytic when the problem provides it, else the pool estimate.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1]; got {alpha!r}")
    if L < 1.0:
        raise ValueError(f"L must be >= 1; got {L!r}")
    if not guarantees:
        return False
    pts = np.asarray([np.asarray(p, dtype=float).reshape(-1) for p, _ in guarantees])
    lbs = np.asarray([c for _, c in guarantees], dtype=float)
    q = np.asarray(x, dtype=float).reshape(-1)
    dists = np.linalg.norm(pts - q[None, :], axis=1)
    mass = np.asarray(ball_prob(q, dists), dtype=float)
    thresholds = (lbs / (64.0 * L)) ** (dim / alpha)
    return bool(np.any(mass <= thresholds))


def confident_adapt(
    x,
    epsilon: float,
    t: int,
    delta_s: float,
    pool: Pool,
    oracle: Oracle,
    *,
    index: Optional[NeighborIndex] = None,
    grids: Optional[GridSpec] = None,
    params: Optional[StatParams] = None,
    C: float = 1.0,
) -> ConfidentResult:
    """Sequentially vote on the label of ``x`` from its nearest neighbors.

    Labels of the neighbors of ``x`` (including ``x`` itself when it is a
    pool point) are requested one at a time in nondecreasing-distance order.
    After the k-th request the loop stops early when
    |mean_k - 1/2| > 2 b_{delta_s,k} (the cutoff), and otherwise when k
    reaches min(k_cap, t), where k_cap is the largest sample-size bound over
    the noise grid.  The reported label is the majority vote.

    Requests are processed in growing batches for speed; the outcome is
    identical to the one-at-a-time loop because labels are fixed per pool
    point and batching never changes which prefix ends up requested.
    """
    if t < 0:
        raise ValueError(f"budget must be nonnegative; got {t!r}")
    if pool.size < 1:
        raise ValueError("pool is empty")
    params = params or StatParams()
    grids = grids or build_grids(epsilon, C)
    index = index or NeighborIndex(pool)
    k_cap = max(sample_bound(params, delta_s, m) for m in grids.margins)
    cap = min(k_cap, t, pool.size)
    if cap == 0:
        return ConfidentResult(
            label=1,
            queried=[],
            lower_bound=-math.inf,
            stopped_by_cutoff=False,
            budget_exhausted=True,
        )

    u = math.log(1.0 / delta_s)
    log_terms = u + math.log(u)

    served = 0
    cum = 0
    stop = None
    cutoff = False
    b_stop = math.nan
    mean_stop = math.nan
    chunk = min(cap, 64)
    while served < cap:
        upto = min(cap, served + chunk)
        prefix = index.query_prefix(x, upto)
        cand = prefix[served:upto]
        labels = oracle.peek_many(cand)
        ks = np.arange(served + 1, upto + 1, dtype=float)
        csum = cum + np.cumsum(labels)
        b = np.sqrt((2.0 / ks) * (log_terms + np.log(np.log(math.e * ks))))
        dev = np.abs(csum / ks - 0.5)
        hits = np.flatnonzero(dev > 2.0 * b)
        if hits.size:
            j = int(hits[0])
            stop = served + j + 1
            cutoff = True
            b_stop = float(b[j])
            mean_stop = float(csum[j] / ks[j])
            break
        served = upto
        cum = int(csum[-1])
        if served == cap:
            stop = cap
            b_stop = float(b[-1])
            mean_stop = float(csum[-1] / ks[-1])
        chunk = min(cap, 2 * chunk)

    requested = index.query_prefix(x, stop)
    req_labels = oracle.query_many(requested)
    queried = [(int(i), int(y)) for i, y in zip(requested, req_labels)]
    label = 1 if mean_stop >= 0.5 else 0
    lower_bound = abs(mean_stop - 0.5) - b_stop
    return ConfidentResult(
        label=label,
        queried=queried,
        lower_bound=lower_bound,
        stopped_by_cutoff=cutoff,
        budget_exhausted=False,
    )


@dataclass
class OneNNClassifier:
    """1-NN classifier over the informative set.

    Support rows are sorted by pool index, so on exact distance ties the
    lowest pool index wins.
    """

    points: np.ndarray
    labels: np.ndarray
    pool_indices: np.ndarray

    @classmethod
    def from_state(cls, pool: Pool, informative: dict) -> "OneNNClassifier":
        idx = np.asarray(sorted(informative), dtype=np.int64)
        pts = pool.points[idx] if idx.size else np.empty((0, pool.dim))
        labels = np.asarray([informative[int(i)] for i in idx], dtype=np.int64)
        return cls(points=pts, labels=labels, pool_indices=idx)

    @property
    def support_size(self) -> int:
        return int(self.points.shape[0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Labels of the nearest support point for each row of ``X``."""
        if self.support_size == 0:
            raise EmptySupportError("classifier has no informative support points")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(X.shape[0], dtype=np.int64)
        step = max(1, int(2e7) // max(1, self.support_size))
        for lo in range(0, X.shape[0], step):
            block = X[lo : lo + step]
            d = ((block[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=2)
            out[lo : lo + step] = self.labels[np.argmin(d, axis=1)]
        return out


def predict_1nn(classifier: OneNNClassifier, x) -> int:
    """Label of the support point nearest to ``x`` (ties: lower pool index)."""
    return int(classifier.predict(np.atleast_2d(np.asarray(x, dtype=float)))[0])


def run_akalls(
    spec: ProblemSpec,
    pool: Pool,
    oracle: Oracle,
    n: int,
    L: float,
    C: float,
    delta: float,
    epsilon: float,
    *,
    params: Optional[StatParams] = None,
    index: Optional[NeighborIndex] = None,
):
    """Run the full smoothness-adaptive engine under label budget ``n``.

    Returns (classifier, state, metrics).  Each of the ceil(log2(1/epsilon))
    levels gets budget floor(n / levels) (at least 1, not rolled over); a
    level ends when its budget or the pool is exhausted.  Point s is skipped
    if already labeled, or if ``reliable`` accepts it at the level's
    smoothness; otherwise it is voted on at confidence
    delta / (32 s^2 levels) and routed to the informative or noisy set by
    the margin-guarantee test.
    """
    if n < 1:
        raise ValueError(f"label budget must be >= 1; got {n!r}")
    if L < 1.0:
        raise ValueError(f"L must be >= 1; got {L!r}")
    if C < 1.0:
        raise ValueError(f"C must be >= 1; got {C!r}")
    if pool.size < 1:
        raise ValueError("pool is empty")
    params = params or StatParams()
    grids = build_grids(epsilon, C)
    if not (0.0 < delta < math.exp(-1.0)):
        raise ValueError(f"delta must lie in (0, 1/e); got {delta!r}")
    index = index or NeighborIndex(pool)
    n_levels = grids.n_levels
    nbar = max(1, n // n_levels)
    if spec.ball_prob is not None:
        ball = spec.ball_prob
    else:
        ball = lambda q, r: ball_prob_empirical(pool, q, r)

    state = ActiveState()
    metrics = RunMetrics(budget=n, charged_requests=0, distinct_reveals=0, k_cap_max=0)
    guarantee_pairs = []  # parallel to state.guarantees, as (point, lb)

    for level, alpha_i in enumerate(grids.alphas, start=1):
        t = nbar
        new_inf = new_noisy = rel_skips = 0
        charged_at_level_start = metrics.charged_requests
        s = 0
        while t > 0 and s < pool.size:
            if s in state.informative or s in state.noisy:
                s += 1
                continue
            delta_s = delta / (32.0 * (s + 1) ** 2 * n_levels)
            x = pool.points[s]
            if reliable(x, alpha_i, L, guarantee_pairs, ball, spec.dim):
                rel_skips += 1
                s += 1
                continue
            res = confident_adapt(
                x, epsilon, t, delta_s, pool, oracle,
                index=index, grids=grids, params=params,
            )
            k_cap = max(sample_bound(params, delta_s, m) for m in grids.margins)
            metrics.k_cap_max = max(metrics.k_cap_max, k_cap)
            q = res.n_requests
            t -= q
            metrics.charged_requests += q
            threshold = 0.1 * confidence_radius(delta_s, q) if q else math.inf
            if res.lower_bound >= threshold:
                state.informative[s] = res.label
                state.guarantees[s] = res.lower_bound
                guarantee_pairs.append((pool.points[s].copy(), res.lower_bound))
                new_inf += 1
            else:
                state.noisy[s] = res.label
                new_noisy += 1
            s += 1
        state.budget_remaining = t
        state.level = level
        metrics.levels.append(
            LevelStats(
                level=level,
                alpha=alpha_i,
                budget=nbar,
                charged=metrics.charged_requests - charged_at_level_start,
                new_informative=new_inf,
                new_noisy=new_noisy,
                reliable_skips=rel_skips,
                scanned=s,
                informative_total=len(state.informative),
                noisy_total=len(state.noisy),
            )
        )

    metrics.distinct_reveals = oracle.distinct_reveals
    classifier = OneNNClassifier.from_state(pool, state.informative)
    return classifier, state, metrics


class PassiveKnnClassifier:
    """Passive baseline: label the leading pool points, vote among k nearest.

    The pool is an i.i.d. sample, so its leading ``n`` points are a uniform
    random subset; the labels come from the same oracle realization the
    active engine would see.  Default k is budget^(2a/(2a+d)) when the
    problem declares smoothness a, else sqrt(budget), rounded up.
    """

    def __init__(self, spec: ProblemSpec, pool: Pool, oracle: Oracle, n: int,
                 k: Optional[int] = None):
        if not (1 <= n <= pool.size):
            raise ValueError(f"label count must lie in [1, {pool.size}]; got {n!r}")
        if k is None:
            if spec.declared_smoothness is not None:
                a = spec.declared_smoothness[0]
                k = math.ceil(n ** (2.0 * a / (2.0 * a + spec.dim)))
            else:
                k = math.ceil(math.sqrt(n))
        if not (1 <= k <= n):
            raise ValueError(f"k must lie in [1, {n}]; got {k!r}")
        self.n = n
        self.k = k
        self._labels = np.asarray(oracle.query_many(np.arange(n)), dtype=np.int64)
        from scipy.spatial import cKDTree

        self._tree = cKDTree(pool.points[:n])

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        _, idx = self._tree.query(X, k=self.k)
        if self.k == 1:
            idx = idx[:, None]
        votes = self._labels[idx].mean(axis=1)
        return (votes >= 0.5).astype(np.int64)


def passive_knn(pool: Pool, oracle: Oracle, n: int, k: int, x) -> int:
    """Majority vote among the k nearest of the first n labeled pool points."""
    clf = PassiveKnnClassifier(oracle.spec, pool, oracle, n, k=k)
    return int(clf.predict(np.atleast_2d(np.asarray(x, dtype=float)))[0])
