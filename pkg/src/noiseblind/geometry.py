"""Monte-Carlo estimators for quotient constants, polytope inradius, and
small-ball tail diagnostics of random sensing ensembles.

Extrema over spheres are never computed exactly here.  Every operation
replaces them with a documented probe family -- uniform sphere samples,
the standard basis, and k-sparse spikes with k in {1, 2, 4} -- so each
reported figure bounds the true extremum from one side only: suprema
are estimated from below, infima from above.  Reports carry the probe
counts so that callers can judge the coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DistributionSpec, check_super_gaussian, sample_array
from .ensembles import matrix_entries
from .errors import NoiseBlindError, ParamError
from .norms import clipped_norm, dual_clipped_norm, s_star
from .rng import TAG_PROBE, derive_seed, stream
from .solvers import DecodeProblem, factorize, solve_bp

# small-ball tail constants: c1 = 1/(4 log 12), c2 = 2000 log 12 + 250
SMALL_BALL_C1 = 1.0 / (4.0 * math.log(12.0))
SMALL_BALL_C2 = 2000.0 * math.log(12.0) + 250.0

_SPIKE_SIZES = (1, 2, 4)
_SPIKES_PER_SIZE = 4
_AUDIT_SAMPLES = 10_000


@dataclass(frozen=True)
class NormKind:
    """Reference norm for quotient ratios: plain l2 or the clipped norm
    max(||.||_2, alpha*||.||_inf) with its explicit dual."""

    kind: str
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("l2", "clipped"):
            raise ParamError(f"unknown norm kind {self.kind!r}")
        if self.kind == "clipped" and self.alpha < 1.0:
            raise ParamError("clipped norm requires alpha >= 1")

    @property
    def label(self) -> str:
        if self.kind == "l2":
            return "l2"
        return f"clipped({self.alpha:g})"


L2 = NormKind("l2")


def Clipped(alpha: float) -> NormKind:
    return NormKind("clipped", float(alpha))


def _ref_norm(kind: NormKind, y: np.ndarray) -> float:
    if kind.kind == "l2":
        return float(np.linalg.norm(y))
    return clipped_norm(y, kind.alpha)


def _ref_dual_norm(kind: NormKind, y: np.ndarray) -> float:
    if kind.kind == "l2":
        return float(np.linalg.norm(y))
    return dual_clipped_norm(y, kind.alpha)


def _probe_directions(m: int, n_sphere: int, seed: int):
    """Unit-l2 probe family: ``n_sphere`` uniform sphere points, the m
    basis vectors, then random k-sparse sign spikes.  Sphere and spike
    substreams are independent, so enlarging ``n_sphere`` extends the
    sphere prefix without disturbing the spikes (probe sets are nested).
    """
    probes = []
    rng_sphere = stream(derive_seed(seed, "sphere"), TAG_PROBE)
    for j in range(n_sphere):
        g = rng_sphere.standard_normal(m)
        nrm = np.linalg.norm(g)
        if nrm == 0.0:
            g[0] = 1.0
            nrm = 1.0
        probes.append((f"sphere-{j:04d}", g / nrm))
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        probes.append((f"basis-{i:04d}", e))
    rng_spike = stream(derive_seed(seed, "spike"), TAG_PROBE)
    for k in _SPIKE_SIZES:
        if k > m:
            continue
        for j in range(_SPIKES_PER_SIZE):
            idx = rng_spike.choice(m, size=k, replace=False)
            signs = rng_spike.integers(0, 2, size=k) * 2.0 - 1.0
            w = np.zeros(m)
            w[idx] = signs / math.sqrt(k)
            probes.append((f"spike{k}-{j}", w))
    return probes


@dataclass(frozen=True)
class QuotientEstimate:
    """One-sided quotient-constant estimate.

    ``d_hat`` is the max over probed directions w of
    sqrt(s_star) * ||u_w||_1 / ||w|| with u_w the minimum-l1 preimage of
    w; it lower-bounds the true supremum.  ``certificate_lower`` is the
    max over the same probes of ||v||_dual / (sqrt(s_star)*||A^T v||_inf),
    a solver-free lower bound on the same constant scale.
    """

    d_hat: float
    norm_kind: NormKind
    directions_probed: int
    per_direction: tuple
    certificate_lower: float
    failures: tuple = ()


def quotient_estimate(A, norm_kind: NormKind = L2, n_directions: int = 100,
                      seed: int = 0) -> QuotientEstimate:
    """Probe the minimum-l1-preimage ratio over sphere/basis/spike
    directions; each direction costs one equality-constrained solve.

    Directions whose solve fails are recorded in ``failures`` and
    excluded from both maxima.  ``A`` is used exactly as given; the
    usual setting normalizes rows by sqrt(row count) beforehand.
    """
    if n_directions < 1:
        raise ParamError("n_directions must be >= 1")
    entries = matrix_entries(A)
    m, N = entries.shape
    fac = factorize(entries)
    sqrt_s = math.sqrt(s_star(m, N))
    probes = _probe_directions(m, n_directions, seed)

    records = []
    certs = []
    failures = []
    last_error = None
    for wid, w in probes:
        try:
            res = solve_bp(DecodeProblem(entries, w, factor=fac))
        except NoiseBlindError as exc:
            failures.append(wid)
            last_error = exc
            continue
        if not res.converged:
            failures.append(wid)
            continue
        ratio = sqrt_s * float(np.abs(res.z).sum()) / _ref_norm(norm_kind, w)
        records.append((wid, ratio))
        denom = sqrt_s * float(np.abs(entries.T @ w).max(initial=0.0))
        if denom > 0.0:
            certs.append(_ref_dual_norm(norm_kind, w) / denom)
    if not records:
        if last_error is not None:
            raise last_error
        raise NoiseBlindError("no probe direction produced a converged solve")
    return QuotientEstimate(
        d_hat=float(max(r for _, r in records)),
        norm_kind=norm_kind,
        directions_probed=len(probes),
        per_direction=tuple(records),
        certificate_lower=float(max(certs, default=0.0)),
        failures=tuple(failures),
    )


@dataclass(frozen=True)
class InradiusEstimate:
    """Upper bound on min over unit w of ||A^T w||_inf, with the best
    value found by each descent start."""

    upper: float
    per_start: tuple


def inradius_estimate(A, n_starts: int = 50, descent_iters: int = 500,
                      seed: int = 0) -> InradiusEstimate:
    """Multi-start minimization of w -> ||A^T w||_inf over the unit
    sphere: projected subgradient steps (step 1/sqrt(iter)) followed by
    a decaying-radius local search, then a 10^4-sample sphere audit
    folded into the minimum.  The returned value is an upper bound of
    the true inradius of the polytope spanned by the signed columns.
    """
    if n_starts < 1:
        raise ParamError("n_starts must be >= 1")
    if descent_iters < 0:
        raise ParamError("descent_iters must be >= 0")
    entries = matrix_entries(A)
    m = entries.shape[0]
    cols_t = entries.T
    rng = stream(derive_seed(seed, "inradius"), TAG_PROBE)

    def value(w):
        return float(np.abs(cols_t @ w).max())

    per_start = []
    for _ in range(n_starts):
        g = rng.standard_normal(m)
        nrm = np.linalg.norm(g)
        if nrm == 0.0:
            g[0] = 1.0
            nrm = 1.0
        cur = g / nrm
        corr = cols_t @ cur
        best_f = float(np.abs(corr).max())
        best_w = cur
        for t in range(1, descent_iters + 1):
            i = int(np.argmax(np.abs(corr)))
            grad = math.copysign(1.0, corr[i]) * entries[:, i]
            grad = grad - (grad @ cur) * cur
            nxt = cur - grad / math.sqrt(t)
            nrm = np.linalg.norm(nxt)
            if nrm == 0.0:
                break
            cur = nxt / nrm
            corr = cols_t @ cur
            f = float(np.abs(corr).max())
            if f < best_f:
                best_f, best_w = f, cur
        # local search with halving radius; subgradient steps alone
        # stall at O(1/sqrt(iters)) accuracy
        w = best_w
        radius = 0.25
        rounds = 0
        while radius > 1e-10 and rounds < 400:
            rounds += 1
            improved = False
            for _ in range(8):
                cand = w + radius * rng.standard_normal(m)
                nrm = np.linalg.norm(cand)
                if nrm == 0.0:
                    continue
                cand /= nrm
                f = value(cand)
                if f < best_f:
                    best_f, w = f, cand
                    improved = True
            if not improved:
                radius *= 0.5
        per_start.append(best_f)

    audit_min = math.inf
    remaining = _AUDIT_SAMPLES
    while remaining > 0:
        batch = min(remaining, 2000)
        W = rng.standard_normal((batch, m))
        W /= np.maximum(np.linalg.norm(W, axis=1, keepdims=True), 1e-300)
        vals = np.abs(W @ entries).max(axis=1)
        audit_min = min(audit_min, float(vals.min()))
        remaining -= batch
    return InradiusEstimate(
        upper=float(min(min(per_start), audit_min)),
        per_start=tuple(per_start),
    )


def q_moment_functional(A, w, q: float) -> float:
    """(N^{-1} sum_i |<a_i, w>|^q)^{1/q} over the columns a_i, evaluated
    in log space so large q does not overflow."""
    if q < 1.0:
        raise ParamError("q must be >= 1")
    entries = matrix_entries(A)
    w = np.asarray(w, dtype=np.float64).ravel()
    t = np.abs(entries.T @ w)
    peak = float(t.max(initial=0.0))
    if peak == 0.0:
        return 0.0
    r = t / peak
    pos = r[r > 0.0]
    s = float(np.exp(q * np.log(pos)).sum())
    return peak * math.exp((math.log(s) - math.log(t.size)) / q)


def empirical_R(dist: DistributionSpec, m: int, N: int, alpha: float,
                trials: int, seed: int) -> float:
    """Monte-Carlo mean of N^{-1/2} * clipped_norm(h, alpha) with
    h = N^{-1/2} sum_i eps_i b_i over fresh columns b_i and signs."""
    if trials < 1:
        raise ParamError("trials must be >= 1")
    if m < 1 or N < 1:
        raise ParamError("m and N must be >= 1")
    rng = stream(derive_seed(seed, "complexity"), TAG_PROBE)
    root_n = math.sqrt(N)
    total = 0.0
    for _ in range(trials):
        cols = sample_array(dist, rng, (m, N))
        eps = rng.integers(0, 2, size=N) * 2.0 - 1.0
        h = (cols @ eps) / root_n
        total += clipped_norm(h, alpha) / root_n
    return total / trials


def empirical_Q(dist: DistributionSpec, m: int, u: float, w_probes: int,
                tail_samples: int, seed: int,
                norm_kind: NormKind = L2) -> float:
    """Minimum over probed unit-dual-norm directions of the empirical
    tail P(|<b, w>| >= u); an upper bound of the sphere infimum."""
    if u <= 0.0:
        raise ParamError("u must be > 0")
    if w_probes < 0:
        raise ParamError("w_probes must be >= 0")
    if tail_samples < 1:
        raise ParamError("tail_samples must be >= 1")
    probes = _probe_directions(m, w_probes, derive_seed(seed, "directions"))
    rng = stream(derive_seed(seed, "tail"), TAG_PROBE)
    best = 1.0
    for _, w in probes:
        scale = _ref_dual_norm(norm_kind, w)
        if scale == 0.0:
            continue
        wn = w / scale
        draws = sample_array(dist, rng, (tail_samples, m))
        tail = float(np.mean(np.abs(draws @ wn) >= u))
        best = min(best, tail)
    return best


@dataclass(frozen=True)
class SmallBallReport:
    """Joint snapshot of the three small-ball quantities at one setting.

    ``q_moment_inf_hat`` and ``Q_hat`` are probed minima (upper bounds
    of the true infima); ``R_hat`` is a Monte-Carlo mean; ``trials``
    counts the trials behind ``R_hat``.
    """

    q: float
    u: float
    q_moment_inf_hat: float
    Q_hat: float
    R_hat: float
    alpha: float
    trials: int

    def __post_init__(self):
        if not 0.0 <= self.Q_hat <= 1.0:
            raise ParamError("Q_hat must lie in [0, 1]")
        if self.R_hat < 0.0 or self.q_moment_inf_hat < 0.0:
            raise ParamError("R_hat and q_moment_inf_hat must be >= 0")


def small_ball_report(A, dist: DistributionSpec, q: float, u: float,
                      alpha: float, w_probes: int = 32,
                      tail_samples: int = 2000, r_trials: int = 200,
                      seed: int = 0,
                      norm_kind: NormKind = L2) -> SmallBallReport:
    """Convenience aggregator: probed q-moment infimum for the given
    matrix plus fresh-sample tail and complexity estimates for its
    distribution at matching dimensions."""
    entries = matrix_entries(A)
    m, N = entries.shape
    probes = _probe_directions(m, w_probes, derive_seed(seed, "directions"))
    q_inf = math.inf
    for _, w in probes:
        scale = _ref_dual_norm(norm_kind, w)
        if scale == 0.0:
            continue
        q_inf = min(q_inf, q_moment_functional(A, w / scale, q))
    return SmallBallReport(
        q=float(q),
        u=float(u),
        q_moment_inf_hat=float(q_inf),
        Q_hat=empirical_Q(dist, m, u, w_probes, tail_samples,
                          derive_seed(seed, "tail-scan"), norm_kind),
        R_hat=empirical_R(dist, m, N, alpha, r_trials,
                          derive_seed(seed, "complexity-scan")),
        alpha=float(alpha),
        trials=int(r_trials),
    )


@dataclass(frozen=True)
class TailBoundCheck:
    upper_ok: bool
    empirical: float
    bound: float


def montgomery_smith_check(y, alpha: float, trials: int,
                           seed: int) -> TailBoundCheck:
    """Monte-Carlo audit of the sign-sum tail bound
    P(<eps, y> > alpha * ||y||_dual^(max(alpha,1))) <= exp(-alpha^2/2).

    ``upper_ok`` allows three binomial standard errors plus 1/trials of
    slack above the bound.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size == 0 or not np.any(y != 0.0):
        raise ParamError("y must be nonzero")
    if alpha <= 0.0:
        raise ParamError("alpha must be > 0")
    if trials < 1:
        raise ParamError("trials must be >= 1")
    threshold = alpha * dual_clipped_norm(y, max(alpha, 1.0))
    rng = stream(derive_seed(seed, "sign-tail"), TAG_PROBE)
    hits = 0
    remaining = trials
    while remaining > 0:
        batch = min(remaining, 65536)
        eps = rng.integers(0, 2, size=(batch, y.size)) * 2.0 - 1.0
        hits += int(np.count_nonzero(eps @ y > threshold))
        remaining -= batch
    empirical = hits / trials
    bound = math.exp(-alpha * alpha / 2.0)
    slack = 3.0 * math.sqrt(bound * (1.0 - bound) / trials) + 1.0 / trials
    return TailBoundCheck(
        upper_ok=bool(empirical <= bound + slack),
        empirical=float(empirical),
        bound=float(bound),
    )


@dataclass(frozen=True)
class SmallBallCheck:
    sigma: float
    c1: float
    c2: float
    u_grid: tuple
    min_tail: tuple
    bound: tuple
    passed_per_u: tuple
    passed: bool
    probes: int
    samples: int


def super_gaussian_small_ball_check(dist: DistributionSpec, sigma: float,
                                    m: int, u_grid, probes: int,
                                    samples: int, seed: int) -> SmallBallCheck:
    """For a distribution certified super-Gaussian at ``sigma``, check
    that the probed minimum of P(|<b, w>| > u) clears
    c1*exp(-c2*u^2/(2 sigma^2)) on each grid point with c1 = 1/(4 log 12)
    and c2 = 2000 log 12 + 250.  Valid for u >= sigma/4 only.
    """
    report = check_super_gaussian(dist, sigma)
    if not report.satisfied_on_grid:
        raise ParamError(
            f"{dist.name} is not certified super-Gaussian at sigma={sigma:g}"
        )
    u_values = tuple(float(u) for u in np.asarray(u_grid, dtype=np.float64).ravel())
    if not u_values:
        raise ParamError("u_grid must be nonempty")
    floor = sigma / 4.0
    for u in u_values:
        if u < floor - 1e-12:
            raise ParamError(f"u = {u:g} below the valid range [{floor:g}, inf)")
    if samples < 1:
        raise ParamError("samples must be >= 1")
    directions = _probe_directions(m, probes, derive_seed(seed, "directions"))
    rng = stream(derive_seed(seed, "tail"), TAG_PROBE)
    u_arr = np.array(u_values)
    mins = np.full(u_arr.size, 1.0)
    for _, w in directions:
        draws = sample_array(dist, rng, (samples, m))
        mag = np.abs(draws @ w)
        tails = np.mean(mag[:, None] > u_arr[None, :], axis=0)
        mins = np.minimum(mins, tails)
    bounds = SMALL_BALL_C1 * np.exp(-SMALL_BALL_C2 * u_arr**2 / (2.0 * sigma**2))
    ok = mins > bounds
    return SmallBallCheck(
        sigma=float(sigma),
        c1=SMALL_BALL_C1,
        c2=SMALL_BALL_C2,
        u_grid=u_values,
        min_tail=tuple(float(v) for v in mins),
        bound=tuple(float(b) for b in bounds),
        passed_per_u=tuple(bool(v) for v in ok),
        passed=bool(ok.all()),
        probes=len(directions),
        samples=int(samples),
    )


def reference_constants_weak_moment(kappa1: float, gamma: float):
    """Proof-regime reference constants (D, C) for the weak-moment
    ensemble law; reported for context only, never asserted against
    desk-scale estimates."""
    if kappa1 <= 0.0 or gamma <= 0.0:
        raise ParamError("kappa1 and gamma must be > 0")
    d_const = 8.0 / math.e * math.sqrt(
        1.0 + (9.0 + 8.0 * gamma) * math.log(4.0) + 8.0 * math.log(kappa1)
    )
    log_c = (5.0 + 8.0 * gamma) * math.log(4.0) + 8.0 * math.log(kappa1) \
        - 4.0 * math.log(3.0) - 1.0
    c_const = math.exp(log_c) if log_c < 700.0 else math.inf
    return d_const, c_const


def reference_constants_super_gaussian(sigma: float):
    """Proof-regime reference constants (D, C) for super-Gaussian laws
    with parameter ``sigma``; reported for context only."""
    if sigma <= 0.0:
        raise ParamError("sigma must be > 0")
    c1_inv = 10.0
    c2 = 5220.0
    d_const = 8.0 * math.sqrt(math.e) * math.sqrt(
        1.0 + 2.0 * math.log(64.0) + 2.0 * math.log(c1_inv)
        + c2 / (16.0 * sigma * sigma)
    )
    log_c = 2.0 * math.log(64.0) + 2.0 * math.log(c1_inv) \
        + c2 / (16.0 * sigma * sigma)
    c_const = math.exp(log_c) if log_c < 700.0 else math.inf
    return d_const, c_const
