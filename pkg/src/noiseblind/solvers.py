"""Certified decoders for equality- and ball-constrained l1 recovery.

Whatever produces a candidate solution, the result is only reported as
converged when an explicit dual feasible point ``v`` with
``||A^T v||_inf <= 1`` certifies it:

* equality decoder: gap = ``||z||_1 - <v, y>``
* ball decoder:     gap = ``||z||_1 - (<v, y> - eta * ||v||_2)``

Convergence means the gap passed ``tol_abs + tol_rel * objective`` and
the iterate is feasible.  The equality decoder reduces the problem to a
linear program in the positive/negative parts and hands it to a
simplex/interior-point engine, then re-derives the vertex and its dual
from scratch on the reported support (least squares on the columns, the
sign system for the dual), so the certificate never takes the engine's
word for it.  The ball decoder runs an over-relaxed operator-splitting
iteration whose checkpoints attempt a closed-form KKT polish on
candidate active sets.  Both fall back to the splitting iteration when
the primary route fails to certify.  All steps reuse one thin SVD of
the matrix, which may be shared across solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse

from .ensembles import matrix_entries
from .errors import DimensionError, ParamError, RankDeficient

_RANK_RTOL = 1e-10
_CHECK_EVERY = 50
_RHO_BALANCE_EVERY = 25
_RELAX = 1.8


@dataclass(frozen=True)
class MatrixFactorization:
    """Thin SVD of a sensing matrix, shared by every solve against it."""

    A: np.ndarray
    U: np.ndarray   # m x r
    sv: np.ndarray  # r singular values, descending
    Vt: np.ndarray  # r x N
    rank: int

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]


def factorize(A) -> MatrixFactorization:
    """Thin SVD with numerical rank at relative tolerance 1e-10."""
    arr = matrix_entries(A)
    U, s, Vt = np.linalg.svd(arr, full_matrices=False)
    rank = 0
    if s.size and s[0] > 0:
        rank = int(np.sum(s > _RANK_RTOL * s[0]))
    return MatrixFactorization(A=arr, U=U[:, :rank], sv=s[:rank], Vt=Vt[:rank], rank=rank)


@dataclass(frozen=True)
class DecodeProblem:
    """One decoding instance.

    ``eta = 0`` selects the equality-constrained decoder.  ``factor``
    optionally carries a precomputed :func:`factorize` result so repeated
    solves against the same matrix skip the SVD.
    """

    A: object
    y: np.ndarray
    eta: float = 0.0
    tol_abs: float = 1e-8
    tol_rel: float = 1e-8
    max_iters: int = 50000
    factor: MatrixFactorization | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.eta < 0:
            raise ParamError("eta must be nonnegative")
        if self.tol_abs <= 0 or self.tol_rel <= 0:
            raise ParamError("tolerances must be positive")
        if self.max_iters < 1:
            raise ParamError("max_iters must be positive")


@dataclass(frozen=True)
class DecodeResult:
    z: np.ndarray
    objective: float
    residual_norm: float
    iters: int
    converged: bool
    certificate_gap: float
    dual: np.ndarray | None = None


def decode(problem: DecodeProblem) -> DecodeResult:
    """Dispatch on ``eta``: 0 selects the equality decoder."""
    if problem.eta == 0.0:
        return solve_bp(problem)
    return solve_bpdn(problem)


def _setup(problem: DecodeProblem):
    fac = problem.factor if problem.factor is not None else factorize(problem.A)
    y = np.asarray(problem.y, dtype=np.float64).ravel()
    if y.size != fac.m:
        raise DimensionError(f"y has length {y.size}, expected {fac.m}")
    return fac, y


def _soft(v: np.ndarray, thr: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def _dual_fit(fac: MatrixFactorization, g: np.ndarray) -> np.ndarray:
    """Least-squares fit of A^T v ~ g: the dual candidate suggested by the
    splitting multiplier."""
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = (fac.Vt @ g) / fac.sv
    return fac.U @ np.nan_to_num(mu)


def _feasible_dual(fac: MatrixFactorization, v: np.ndarray):
    """Scale v so that ||A^T v||_inf <= 1 exactly; returns (v, ATv_inf)."""
    corr = np.abs(fac.A.T @ v).max(initial=0.0)
    if corr > 1.0:
        v = v / corr
        corr = 1.0
    return v, corr


def _bp_gap(v: np.ndarray, y: np.ndarray, objective: float) -> float:
    return objective - float(v @ y)


def _bpdn_gap(v: np.ndarray, y: np.ndarray, eta: float, objective: float) -> float:
    return objective - (float(v @ y) - eta * float(np.linalg.norm(v)))


def _candidate_supports(z_sparse: np.ndarray, corr_abs: np.ndarray, cap: int):
    """Candidate active sets for the polish step.

    The iterate's own support comes first; the dual multiplier then
    suggests near-active columns (|A^T v| close to 1), and finally the
    ``cap`` columns with the largest dual correlation.  With a noisy
    right-hand side the optimum sits on a vertex whose support the dual
    ranks correctly long before the iterates themselves converge.
    """
    seen = set()
    out = []

    def push(idx):
        idx = np.asarray(idx, dtype=np.intp)
        if idx.size == 0 or idx.size > cap:
            return
        key = idx.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(idx)

    support = np.flatnonzero(z_sparse)
    push(support)
    near = np.flatnonzero(corr_abs >= 1.0 - 1e-3)
    union = np.union1d(support, near)
    if union.size > cap:
        order = np.argsort(-corr_abs[union], kind="stable")
        union = np.sort(union[order[:cap]])
    push(union)
    top = np.sort(np.argsort(-corr_abs, kind="stable")[:cap])
    push(top)
    return out


def solve_bp(problem: DecodeProblem) -> DecodeResult:
    """Equality-constrained l1 minimization, min ||z||_1 s.t. Az = y.

    Requires full row rank (checked at relative tolerance 1e-10 through
    the SVD); raises :class:`RankDeficient` otherwise.  The result is
    feasible to ``tol_abs * (1 + ||y||_2)`` and carries the certified
    duality gap; ``converged`` is false only when every route ran out
    before the gap test passed.
    """
    if problem.eta != 0.0:
        raise ParamError("solve_bp requires eta = 0")
    fac, y = _setup(problem)
    if fac.rank < fac.m:
        raise RankDeficient(f"row rank {fac.rank} < m = {fac.m} at tolerance {_RANK_RTOL}")

    tol_feas = problem.tol_abs * (1.0 + np.linalg.norm(y))
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        return DecodeResult(
            z=np.zeros(fac.N), objective=0.0, residual_norm=0.0, iters=0,
            converged=True, certificate_gap=0.0, dual=np.zeros(fac.m),
        )

    def try_polish(support):
        A_s = fac.A[:, support]
        z_s, *_ = np.linalg.lstsq(A_s, y, rcond=None)
        resid = float(np.linalg.norm(A_s @ z_s - y))
        if resid > tol_feas:
            return None
        # the dual solves the sign system, but only confidently nonzero
        # entries vote: numerically-zero ones would inject noise signs
        conf = np.abs(z_s) > 1e-9 * np.abs(z_s).max(initial=0.0)
        if not conf.any():
            return None
        v, *_ = np.linalg.lstsq(A_s[:, conf].T, np.sign(z_s[conf]), rcond=None)
        v, _ = _feasible_dual(fac, v)
        z_full = np.zeros(fac.N)
        z_full[support] = z_s
        obj = float(np.abs(z_s).sum())
        gap = _bp_gap(v, y, obj)
        if gap <= problem.tol_abs + problem.tol_rel * obj:
            return z_full, obj, resid, max(gap, 0.0), v
        return None

    primary = _bp_linprog(problem, fac, y, tol_feas, try_polish)
    if primary is not None:
        return primary
    return _bp_splitting(problem, fac, y, tol_feas, try_polish)


def _bp_linprog(problem, fac, y, tol_feas, try_polish):
    """Split z into positive/negative parts and solve the linear program
    min 1'(p+q) s.t. Ap - Aq = y, p, q >= 0; returns None when the engine
    fails or its answer cannot be independently certified."""
    try:
        block = sparse.csc_matrix(fac.A)
        res = optimize.linprog(
            np.ones(2 * fac.N),
            A_eq=sparse.hstack([block, -block], format="csc"),
            b_eq=y,
            bounds=(0, None),
            method="highs",
            options={
                "primal_feasibility_tolerance": 1e-10,
                "dual_feasibility_tolerance": 1e-10,
            },
        )
    except (ValueError, optimize.OptimizeWarning):
        return None
    if not res.success:
        return None
    z = res.x[: fac.N] - res.x[fac.N :]
    iters = int(res.nit)
    scale = max(1.0, float(np.abs(z).max(initial=0.0)))
    support = np.flatnonzero(np.abs(z) > 1e-11 * scale)
    if support.size > fac.m:
        order = np.argsort(-np.abs(z[support]), kind="stable")
        support = np.sort(support[order[: fac.m]])
    if support.size:
        polished = try_polish(support)
        if polished is not None:
            z_full, obj, resid, gap, v = polished
            return DecodeResult(
                z=z_full, objective=obj, residual_norm=resid, iters=iters,
                converged=True, certificate_gap=gap, dual=v,
            )
    # fall back to the engine's own primal/dual pair, still audited here
    v, _ = _feasible_dual(fac, np.asarray(res.eqlin.marginals, dtype=np.float64))
    obj = float(np.abs(z).sum())
    gap = _bp_gap(v, y, obj)
    resid = float(np.linalg.norm(fac.A @ z - y))
    if gap <= problem.tol_abs + problem.tol_rel * obj and resid <= tol_feas:
        return DecodeResult(
            z=z, objective=obj, residual_norm=resid, iters=iters,
            converged=True, certificate_gap=max(gap, 0.0), dual=v,
        )
    return None


def _bp_splitting(problem, fac, y, tol_feas, try_polish):
    ynorm = float(np.linalg.norm(y))
    # projection onto {z : Az = y}
    anchor = fac.Vt.T @ ((fac.U.T @ y) / fac.sv)

    def project(v):
        return v - fac.Vt.T @ (fac.Vt @ v) + anchor

    x = anchor.copy()
    z = x.copy()
    u = np.zeros(fac.N)
    rho = 10.0 / (1.0 + ynorm)
    best = None
    iters = 0
    for it in range(1, problem.max_iters + 1):
        iters = it
        z_old = z
        x = project(z - u)
        x_hat = _RELAX * x + (1.0 - _RELAX) * z_old
        z = _soft(x_hat + u, 1.0 / rho)
        u = u + x_hat - z

        if it % _RHO_BALANCE_EVERY == 0:
            pri = np.linalg.norm(x - z)
            dua = rho * np.linalg.norm(z - z_old)
            if pri > 10.0 * dua and rho < 1e8:
                rho *= 2.0
                u = u / 2.0
            elif dua > 10.0 * pri and rho > 1e-8:
                rho /= 2.0
                u = u * 2.0

        if it % _CHECK_EVERY == 0 or it == problem.max_iters:
            v_fit, _ = _feasible_dual(fac, _dual_fit(fac, rho * u))
            corr_abs = np.abs(fac.A.T @ v_fit)
            for support in _candidate_supports(z, corr_abs, fac.m):
                polished = try_polish(support)
                if polished is not None:
                    z_full, obj, resid, gap, v = polished
                    return DecodeResult(
                        z=z_full, objective=obj, residual_norm=resid, iters=it,
                        converged=True, certificate_gap=gap, dual=v,
                    )
            # certificate from the splitting multiplier; x is feasible
            x_feas = project(z)
            obj = float(np.abs(x_feas).sum())
            gap = max(_bp_gap(v_fit, y, obj), 0.0)
            resid = float(np.linalg.norm(fac.A @ x_feas - y))
            if gap <= problem.tol_abs + problem.tol_rel * obj and resid <= tol_feas:
                return DecodeResult(
                    z=x_feas, objective=obj, residual_norm=resid, iters=it,
                    converged=True, certificate_gap=gap, dual=v_fit,
                )
            best = (x_feas, obj, resid, gap, v_fit)

    z_full, obj, resid, gap, v = best
    return DecodeResult(
        z=z_full, objective=obj, residual_norm=resid, iters=iters,
        converged=False, certificate_gap=gap, dual=v,
    )


def solve_bpdn(problem: DecodeProblem) -> DecodeResult:
    """Ball-constrained l1 minimization, min ||z||_1 s.t. ||Az - y||_2 <= eta.

    ``||y||_2 <= eta`` short-circuits to z = 0.  Otherwise the constraint
    is active at the optimum; the polish step solves the reduced KKT
    system on the iterate's support in closed form.
    """
    if problem.eta <= 0.0:
        raise ParamError("solve_bpdn requires eta > 0")
    fac, y = _setup(problem)
    eta = float(problem.eta)
    ynorm = float(np.linalg.norm(y))
    if ynorm <= eta:
        return DecodeResult(
            z=np.zeros(fac.N), objective=0.0, residual_norm=ynorm, iters=0,
            converged=True, certificate_gap=0.0, dual=np.zeros(fac.m),
        )

    d = fac.U.T @ y
    y_perp_sq = max(ynorm**2 - float(d @ d), 0.0)
    if y_perp_sq > eta**2:
        raise RankDeficient(
            "y is farther than eta from the range of A (rank-deficient matrix)"
        )

    def project(v):
        """Euclidean projection onto {z : ||Az - y|| <= eta}."""
        c = fac.Vt @ v
        e = fac.sv * c - d
        res_sq = float(e @ e) + y_perp_sq
        if res_sq <= eta**2:
            return v
        sv2 = fac.sv**2
        e2 = e * e

        def excess(lam):
            return float(np.sum(e2 / (1.0 + lam * sv2) ** 2)) + y_perp_sq - eta**2

        hi = 1.0
        while excess(hi) > 0.0:
            hi *= 8.0
        lam = optimize.brentq(excess, 0.0, hi, rtol=4 * np.finfo(float).eps, maxiter=200)
        c_z = (c + lam * fac.sv * d) / (1.0 + lam * sv2)
        return v + fac.Vt.T @ (c_z - c)

    tol_resid = eta * (1.0 + problem.tol_rel) + problem.tol_abs

    def try_polish(support, sigma):
        A_s = fac.A[:, support]
        w, *_ = np.linalg.lstsq(A_s, y, rcond=None)
        r_min = y - A_s @ w
        r_min_sq = float(r_min @ r_min)
        if r_min_sq >= eta**2:
            return None
        gram = A_s.T @ A_s
        # the reduced stationarity system couples the signs to the
        # solution; re-solve until they agree (the gap test arbitrates)
        for _ in range(3):
            try:
                minv_sigma = np.linalg.solve(gram, sigma)
            except np.linalg.LinAlgError:
                minv_sigma, *_ = np.linalg.lstsq(gram, sigma, rcond=None)
            quad = float(sigma @ minv_sigma)
            if quad <= 0.0:
                return None
            t = math.sqrt((eta**2 - r_min_sq) / quad)
            z_s = w - t * minv_sigma
            r = y - A_s @ z_s
            v, _ = _feasible_dual(fac, r / t)
            z_full = np.zeros(fac.N)
            z_full[support] = z_s
            obj = float(np.abs(z_s).sum())
            gap = _bpdn_gap(v, y, eta, obj)
            resid = float(np.linalg.norm(r))
            if gap <= problem.tol_abs + problem.tol_rel * obj and resid <= tol_resid:
                return z_full, obj, resid, max(gap, 0.0), v
            new_sigma = np.where(z_s >= 0.0, 1.0, -1.0)
            if np.array_equal(new_sigma, sigma):
                return None
            sigma = new_sigma
        return None

    x = project(np.zeros(fac.N))
    z = x.copy()
    u = np.zeros(fac.N)
    rho = 10.0 / (1.0 + ynorm)
    best = None
    iters = 0
    for it in range(1, problem.max_iters + 1):
        iters = it
        z_old = z
        x = project(z - u)
        x_hat = _RELAX * x + (1.0 - _RELAX) * z_old
        z = _soft(x_hat + u, 1.0 / rho)
        u = u + x_hat - z

        if it % _RHO_BALANCE_EVERY == 0:
            pri = np.linalg.norm(x - z)
            dua = rho * np.linalg.norm(z - z_old)
            if pri > 10.0 * dua and rho < 1e8:
                rho *= 2.0
                u = u / 2.0
            elif dua > 10.0 * pri and rho > 1e-8:
                rho /= 2.0
                u = u * 2.0

        if it % _CHECK_EVERY == 0 or it == problem.max_iters:
            v_fit, _ = _feasible_dual(fac, _dual_fit(fac, rho * u))
            corr = fac.A.T @ v_fit
            done = None
            for support in _candidate_supports(z, np.abs(corr), fac.m):
                sigma = np.sign(z[support])
                hole = sigma == 0.0
                if hole.any():
                    sigma[hole] = np.where(corr[support][hole] >= 0.0, 1.0, -1.0)
                done = try_polish(support, sigma)
                if done is not None:
                    break
            if done is not None:
                z_full, obj, resid, gap, v = done
                return DecodeResult(
                    z=z_full, objective=obj, residual_norm=resid, iters=it,
                    converged=True, certificate_gap=gap, dual=v,
                )
            x_feas = project(z)
            obj = float(np.abs(x_feas).sum())
            gap = max(_bpdn_gap(v_fit, y, eta, obj), 0.0)
            resid = float(np.linalg.norm(fac.A @ x_feas - y))
            if gap <= problem.tol_abs + problem.tol_rel * obj and resid <= tol_resid:
                return DecodeResult(
                    z=x_feas, objective=obj, residual_norm=resid, iters=it,
                    converged=True, certificate_gap=gap, dual=v_fit,
                )
            best = (x_feas, obj, resid, gap, v_fit)

    z_full, obj, resid, gap, v = best
    return DecodeResult(
        z=z_full, objective=obj, residual_norm=resid, iters=iters,
        converged=False, certificate_gap=gap, dual=v,
    )


def linear_least_norm(A, w) -> np.ndarray:
    """Minimum-l2-norm solution of ``Au = w`` via the SVD.

    Requires full row rank; raises :class:`RankDeficient` otherwise.
    """
    fac = A if isinstance(A, MatrixFactorization) else factorize(A)
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size != fac.m:
        raise DimensionError(f"w has length {w.size}, expected {fac.m}")
    if fac.rank < fac.m:
        raise RankDeficient(f"row rank {fac.rank} < m = {fac.m} at tolerance {_RANK_RTOL}")
    return fac.Vt.T @ ((fac.U.T @ w) / fac.sv)
