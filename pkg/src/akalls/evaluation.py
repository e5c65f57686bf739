"""Ground-truth evaluation against known problems.

Excess risk is computed as E[|2 eta - 1| 1{f != f*}], which is exact for
known eta and has strictly lower variance than differencing two risk
estimates.  A 1-D adaptive quadrature serves as the independent oracle for
the Monte Carlo path.  Assumption audits check the ball-mass smoothness and
margin-noise conditions empirically.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from akalls.problems import Pool, ProblemSpec, draw_pool

__all__ = [
    "AuditReport",
    "BayesClassifier",
    "ConstantClassifier",
    "RiskEstimate",
    "audit_h2",
    "audit_h4",
    "excess_risk_mc",
    "excess_risk_quadrature_1d",
    "fit_margin_noise",
    "fit_rate",
]


@dataclass(frozen=True)
class RiskEstimate:
    """Excess-risk estimate with its provenance."""

    excess_risk: float
    std_error: float
    method: str  # "monte-carlo" | "quadrature"
    n_eval: int


@dataclass
class AuditReport:
    """Result of an empirical assumption audit."""

    assumption: str  # "H2-smoothness" | "H4-margin-noise"
    tested: int
    violations: int
    worst: Optional[dict] = None
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0


class ConstantClassifier:
    """Classifier that always answers the same label."""

    def __init__(self, label: int):
        self.label = int(label)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(np.atleast_2d(X).shape[0], self.label, dtype=np.int64)


class BayesClassifier:
    """The problem's own optimal classifier 1{eta >= 1/2}."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.spec.bayes(np.atleast_2d(np.asarray(X, dtype=float)))


def excess_risk_mc(spec: ProblemSpec, classifier, m: int, seed: int) -> RiskEstimate:
    """Monte Carlo excess risk: mean of |2 eta - 1| over disagreement with Bayes."""
    if m < 1:
        raise ValueError(f"sample size must be >= 1; got {m!r}")
    rng = np.random.default_rng(int(seed))
    total = 0.0
    total_sq = 0.0
    done = 0
    step = min(m, 200_000)
    while done < m:
        take = min(step, m - done)
        X = np.asarray(spec.sample(rng, take), dtype=float)
        eta = spec.eta_at(X)
        fstar = (eta >= 0.5).astype(np.int64)
        f = np.asarray(classifier.predict(X), dtype=np.int64)
        loss = np.abs(2.0 * eta - 1.0) * (f != fstar)
        total += float(loss.sum())
        total_sq += float((loss**2).sum())
        done += take
    mean = total / m
    var = max(0.0, total_sq / m - mean**2)
    se = math.sqrt(var / m)
    return RiskEstimate(excess_risk=mean, std_error=se, method="monte-carlo", n_eval=m)


def _disagreement_breakpoints(spec, classifier, lo, hi, grid_points):
    """Locate sign changes of the disagreement indicator on a dense grid."""
    xs = np.linspace(lo, hi, grid_points)
    pts = np.asarray(sorted(set(xs) | set(spec.bayes_boundaries)), dtype=float)
    pts = pts[(pts >= lo) & (pts <= hi)]
    eta = spec.eta_at(pts[:, None])
    fstar = (eta >= 0.5).astype(np.int64)
    f = np.asarray(classifier.predict(pts[:, None]), dtype=np.int64)
    dis = f != fstar
    flips = np.flatnonzero(dis[1:] != dis[:-1])
    breaks = []
    for j in flips:
        a, b = pts[j], pts[j + 1]
        da = dis[j]
        for _ in range(80):
            mid = 0.5 * (a + b)
            e_mid = spec.eta_at(np.array([[mid]]))[0]
            fm = int(classifier.predict(np.array([[mid]]))[0]) != (e_mid >= 0.5)
            if fm == da:
                a = mid
            else:
                b = mid
            if b - a <= 1e-13 * max(1.0, abs(a)):
                break
        breaks.append(0.5 * (a + b))
    return breaks


def excess_risk_quadrature_1d(
    spec: ProblemSpec, classifier, grid_points: int = 32769
) -> RiskEstimate:
    """Exact 1-D excess risk by piecewise adaptive quadrature.

    Integrates |2 eta - 1| p_X over the region where the classifier and the
    Bayes classifier disagree, truncated to the problem's quadrature window
    (tail mass below 1e-15).  Disagreement-region endpoints are located on a
    ``grid_points`` lattice and refined by bisection, so only smooth pieces
    reach the quadrature.
    """
    if spec.dim != 1:
        raise ValueError(f"quadrature oracle needs dim=1; got dim={spec.dim}")
    if spec.pdf is None or spec.quad_range is None:
        raise ValueError(f"problem {spec.name!r} has no density for quadrature")
    lo, hi = spec.quad_range
    breaks = _disagreement_breakpoints(spec, classifier, lo, hi, grid_points)
    edges = np.asarray(sorted({lo, hi, *breaks, *spec.bayes_boundaries}), dtype=float)
    edges = edges[(edges >= lo) & (edges <= hi)]

    def integrand(x):
        arr = np.asarray([[x]], dtype=float)
        return abs(2.0 * spec.eta_at(arr)[0] - 1.0) * float(spec.pdf(x))

    total = 0.0
    neval = 0
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 1e-13:
            continue
        mid = 0.5 * (a + b)
        e_mid = spec.eta_at(np.array([[mid]]))[0]
        fm = int(classifier.predict(np.array([[mid]]))[0])
        if fm == int(e_mid >= 0.5):
            continue
        val, _, info = integrate.quad(
            integrand, a, b, limit=200, epsabs=1e-12, epsrel=1e-10, full_output=True
        )[:3]
        total += val
        neval += int(info["neval"])
    return RiskEstimate(excess_risk=total, std_error=0.0, method="quadrature", n_eval=neval)


def audit_h2(
    spec: ProblemSpec,
    alpha: float,
    L: float,
    pairs: int = 10_000,
    seed: int = 0,
    reference_pool: Optional[Pool] = None,
) -> AuditReport:
    """Empirical check of the ball-mass smoothness condition.

    Samples ``pairs`` ordered point pairs (x, x') from the marginal and tests
    |eta(x) - eta(x')| <= L * P_X(B(x, rho(x, x')))^(alpha/d).  Uses the
    analytic ball mass when available, else an empirical estimate from
    ``reference_pool`` (drawn internally when absent).
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1]; got {alpha!r}")
    if pairs < 1:
        raise ValueError(f"pairs must be >= 1; got {pairs!r}")
    rng = np.random.default_rng(int(seed))
    X = np.asarray(spec.sample(rng, pairs), dtype=float)
    Xp = np.asarray(spec.sample(rng, pairs), dtype=float)
    lhs = np.abs(spec.eta_at(X) - spec.eta_at(Xp))
    dists = np.linalg.norm(X - Xp, axis=1)
    if spec.ball_prob is not None:
        mass = np.asarray([spec.ball_prob(X[i], dists[i]) for i in range(pairs)])
    else:
        from akalls.problems import ball_prob_empirical

        ref = reference_pool or draw_pool(spec, 100_000, seed=int(seed) + 1)
        mass = np.asarray(
            [ball_prob_empirical(ref, X[i], dists[i]) for i in range(pairs)]
        )
    rhs = L * mass ** (alpha / spec.dim)
    excess = lhs - rhs
    viol = excess > 1e-12
    worst = None
    if viol.any():
        i = int(np.argmax(excess))
        worst = {
            "x": X[i].tolist(),
            "x_prime": Xp[i].tolist(),
            "lhs": float(lhs[i]),
            "rhs": float(rhs[i]),
        }
    return AuditReport(
        assumption="H2-smoothness",
        tested=pairs,
        violations=int(viol.sum()),
        worst=worst,
    )


def audit_h4(
    spec: ProblemSpec,
    beta: float,
    C: float,
    epsilons: Sequence[float] = (0.02, 0.03, 0.05, 0.08, 0.125, 0.2, 0.3, 0.5),
    m: int = 200_000,
    seed: int = 0,
) -> AuditReport:
    """Empirical check of the margin-noise condition.

    Estimates P_X(|eta - 1/2| < eps) for each eps and flags a violation when
    the estimate exceeds C * eps^beta by more than three standard errors.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0; got {beta!r}")
    if C < 1.0:
        raise ValueError(f"C must be >= 1; got {C!r}")
    eps = np.asarray(sorted(epsilons), dtype=float)
    if eps.size == 0 or eps.min() <= 0 or eps.max() > 1:
        raise ValueError("epsilons must lie in (0, 1]")
    rng = np.random.default_rng(int(seed))
    X = np.asarray(spec.sample(rng, m), dtype=float)
    margin = np.abs(spec.eta_at(X) - 0.5)
    details = []
    violations = 0
    worst = None
    worst_gap = 0.0
    for e in eps:
        p_hat = float(np.mean(margin < e))
        se = math.sqrt(max(p_hat * (1 - p_hat), 0.0) / m)
        bound = C * e**beta
        gap = p_hat - bound
        violated = gap > 3.0 * se
        details.append(
            {"epsilon": float(e), "p_hat": p_hat, "bound": bound, "std_error": se,
             "violated": bool(violated)}
        )
        if violated:
            violations += 1
            if gap > worst_gap:
                worst_gap = gap
                worst = details[-1]
    return AuditReport(
        assumption="H4-margin-noise",
        tested=len(details),
        violations=violations,
        worst=worst,
        details=details,
    )


def fit_margin_noise(
    spec: ProblemSpec,
    epsilons: Sequence[float] = (0.02, 0.03, 0.05, 0.08, 0.125, 0.2, 0.3, 0.5),
    m: int = 200_000,
    seed: int = 0,
    head_mass: float = 0.3,
) -> tuple:
    """Fit margin-noise parameters (beta, C) from boundary-mass estimates.

    beta is the log-log slope of P(|eta - 1/2| < eps) against eps over the
    small-eps points (estimates below ``head_mass``), where the power law is
    identifiable; C is then the smallest constant >= 1 making the audit pass
    on the whole grid.  The fitted pair always satisfies ``audit_h4``.
    """
    eps = np.asarray(sorted(epsilons), dtype=float)
    rng = np.random.default_rng(int(seed))
    X = np.asarray(spec.sample(rng, m), dtype=float)
    margin = np.abs(spec.eta_at(X) - 0.5)
    p_hat = np.asarray([np.mean(margin < e) for e in eps])
    head = (p_hat > 0) & (p_hat <= head_mass)
    if head.sum() >= 2:
        slope, _ = np.polyfit(np.log(eps[head]), np.log(p_hat[head]), 1)
        beta = max(0.0, float(slope))
    else:
        beta = 0.0
    with np.errstate(divide="ignore"):
        need = np.where(p_hat > 0, p_hat / eps**beta, 0.0)
    C = max(1.0, float(need.max()))
    return beta, C


def fit_rate(points: Sequence[tuple]) -> tuple:
    """Least-squares slope of log excess risk against log budget.

    Returns (slope, intercept, r_squared).  Requires at least three points
    with positive budgets and risks.
    """
    pts = [(float(n), float(e)) for n, e in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points; got {len(pts)}")
    if any(n <= 0 or e <= 0 for n, e in pts):
        raise ValueError("budgets and excess risks must be positive")
    x = np.log([n for n, _ in pts])
    y = np.log([e for _, e in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float((resid**2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)


def theoretical_rate_exponent(alpha: float, beta: float, dim: int) -> float:
    """Reference label-complexity exponent -alpha(beta+1)/(2 alpha + d - alpha beta)."""
    return -alpha * (beta + 1.0) / (2.0 * alpha + dim - alpha * beta)
