"""One-sided confidence intervals for boundary parameters.

The interval endpoints come from optimizing the target over the constancy
space coordinates subject to the observed fixed components keeping
probability at least alpha.  The log of that probability is concave in the
coordinates (Bernoulli and Poisson log pmfs are concave in the linear
predictor), so the feasible set is convex and the optimized endpoint of a
linear-in-theta target is a well-posed convex program; the other endpoint
runs away along the recession direction and sits at the end of the
parameter's range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import minimize
from scipy.special import gammaln

from .errors import NonBoundaryTarget, SolverFailure
from .expfam import BERNOULLI, CanonicalPoint, GlmModel

Target = tuple  # ("mean", row_index) or ("linear", coefficient_vector)


@dataclass(frozen=True)
class CiProblem:
    model: GlmModel
    beta_hat: np.ndarray  # LCM estimate embedded in R^p
    gamma_basis: np.ndarray  # p x j, orthonormal columns spanning the constancy space
    fixed: list[int]
    alpha: float
    target: Target

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        G = np.asarray(self.gamma_basis, dtype=float)
        if G.ndim != 2 or G.shape[0] != self.model.p:
            raise ValueError("gamma_basis must be p x j")
        if G.shape[1] and not np.allclose(G.T @ G, np.eye(G.shape[1]), atol=1e-8):
            raise ValueError("gamma_basis columns must be orthonormal")
        kind = self.target[0]
        if kind == "mean":
            if int(self.target[1]) not in set(self.fixed):
                raise NonBoundaryTarget(
                    f"row {self.target[1]} is free in the LCM; use a two-sided interval"
                )
        elif kind != "linear":
            raise ValueError(f"unknown target kind {kind!r}")
        object.__setattr__(self, "gamma_basis", G)
        object.__setattr__(self, "beta_hat", np.asarray(self.beta_hat, dtype=float))

    @property
    def j(self) -> int:
        return self.gamma_basis.shape[1]


@dataclass(frozen=True)
class OneSidedInterval:
    target: Target
    lower: float
    upper: float
    alpha: float
    achieved_constraint: float
    solver_status: str


def _log_pmf_fixed(model: GlmModel, theta: np.ndarray, fixed) -> float:
    """Joint log probability of the observed fixed response components."""
    idx = np.asarray(list(fixed), dtype=int)
    if idx.size == 0:
        return 0.0
    th = theta[idx]
    y = model.y[idx]
    if model.family.tag == BERNOULLI:
        t = model.trials[idx]
        binom = gammaln(t + 1) - gammaln(y + 1) - gammaln(t - y + 1)
        return float(np.sum(binom + y * th - t * (np.maximum(th, 0.0) + np.log1p(np.exp(-np.abs(th))))))
    if np.any(th > 700):
        return -math.inf
    return float(np.sum(y * th - np.exp(th) - gammaln(y + 1)))


def boundary_probability(model: GlmModel, point: CanonicalPoint, fixed) -> float:
    """Probability that the fixed response components equal their observed values."""
    return math.exp(_log_pmf_fixed(model, point.theta, fixed))


def target_description(problem: CiProblem):
    """Reduce the target to a linear function of the constancy coordinates.

    Returns (ell, transform, lower_limit, upper_limit): the u-space gradient,
    a map from ell @ u to the reported parameter scale, and the ends of the
    parameter's range (used for the degenerate endpoint).
    """
    model = problem.model
    A = model.M @ problem.gamma_basis
    theta_hat = model.M @ problem.beta_hat
    kind = problem.target[0]
    if kind == "mean":
        k = int(problem.target[1])
        ell = A[k]
        offset = float(theta_hat[k])
        if model.family.tag == BERNOULLI:

            def transform(v):
                th = offset + v
                return 1.0 / (1.0 + math.exp(-th)) if th >= 0 else math.exp(th) / (1.0 + math.exp(th))

            limits = (0.0, 1.0)
        else:

            def transform(v):
                return math.exp(min(offset + v, 700.0))

            limits = (0.0, math.inf)
    else:
        c = np.asarray(problem.target[1], dtype=float)
        ell = problem.gamma_basis.T @ c
        offset = float(c @ problem.beta_hat)

        def transform(v):
            return offset + v

        limits = (-math.inf, math.inf)

    scale = np.abs(A).max() if A.size else 0.0
    if np.linalg.norm(ell) <= 1e-10 * (1.0 + scale):
        raise NonBoundaryTarget("target does not vary over the constancy space")
    return ell, transform, limits[0], limits[1]


def _mean_var_rows(model, th, idx):
    if model.family.tag == BERNOULLI:
        t = model.trials[idx]
        with np.errstate(over="ignore"):
            p = 1.0 / (1.0 + np.exp(-th))
        return t * p, t * p * (1.0 - p)
    with np.errstate(over="ignore"):
        mean = np.exp(np.minimum(th, 700.0))
    return mean, mean


def _logp_and_grad(model, theta_hat, A, fixed, u):
    theta = theta_hat + A @ u
    lp = _log_pmf_fixed(model, theta, fixed)
    idx = np.asarray(list(fixed), dtype=int)
    mean, _ = _mean_var_rows(model, theta[idx], idx)
    grad = (model.y[idx] - mean) @ A[idx]
    return lp, grad


def _find_feasible(model, theta_hat, A, fixed, target_logp, u_rec=None):
    """Point with log probability of the fixed components above target_logp.

    Along a recession direction the probability of the observed fixed
    components increases monotonically toward one, so when one is supplied
    a doubling scan suffices.  Otherwise BFGS climbs the concave surface
    (steepest ascent stalls on the ill-conditioned ridges these problems
    produce).
    """
    j = A.shape[1]
    u = np.zeros(j)
    if _log_pmf_fixed(model, theta_hat + A @ u, fixed) >= target_logp:
        return u
    if u_rec is not None:
        r = 1.0 / (1.0 + np.abs(A @ u_rec).max())
        for _ in range(200):
            cand = r * u_rec
            if _log_pmf_fixed(model, theta_hat + A @ cand, fixed) >= target_logp:
                return cand
            r *= 2.0
    res = minimize(
        lambda v: -_logp_and_grad(model, theta_hat, A, fixed, v)[0],
        u,
        jac=lambda v: -_logp_and_grad(model, theta_hat, A, fixed, v)[1],
        method="BFGS",
        options={"maxiter": 2000, "gtol": 1e-12},
    )
    if -res.fun >= target_logp:
        return res.x
    raise SolverFailure("could not find a feasible point for the probability constraint")


def _slice_sup(model, theta_hat, A, fixed, ell, N, v, z0=None):
    """Supremum of the fixed-component log probability on the slice ell @ u = v.

    ``N`` is an orthonormal basis of the orthogonal complement of ell.  The
    log probability is concave and bounded above by zero, so even when its
    supremum on the slice is approached only as the coordinates run off to
    infinity, a Newton ascent saturates at the supremum to high accuracy
    (the shortfall decays exponentially along the escape direction).

    Returns (value, u, z) with z the coordinates in the slice.
    """
    base = (v / float(ell @ ell)) * ell
    if N.shape[1] == 0:
        return _log_pmf_fixed(model, theta_hat + A @ base, fixed), base, np.zeros(0)
    idx = np.asarray(list(fixed), dtype=int)
    AN = A[idx] @ N  # n_fixed x (j-1)
    th0 = theta_hat[idx] + A[idx] @ base
    y = model.y[idx]
    d_z = N.shape[1]

    z = np.zeros(d_z) if z0 is None else np.asarray(z0, dtype=float).copy()
    lp = _log_pmf_fixed(model, theta_hat + A @ (base + N @ z), fixed)
    for _ in range(200):
        th = th0 + AN @ z
        mean, var = _mean_var_rows(model, th, idx)
        g = (y - mean) @ AN
        H = AN.T @ (var[:, None] * AN)
        tau = 1e-12 * (1.0 + np.trace(H) / d_z)
        while True:
            try:
                step = np.linalg.solve(H + tau * np.eye(d_z), g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)) and g @ step >= 0:
                break
            tau *= 10.0
            if tau > 1e6:
                return lp, base + N @ z, z
        prev = lp
        scale = 1.0
        improved = False
        for _ in range(60):
            cand = z + scale * step
            lp_c = _log_pmf_fixed(model, theta_hat + A @ (base + N @ cand), fixed)
            if lp_c > lp:
                z, lp = cand, lp_c
                improved = True
                break
            scale *= 0.5
        if not improved or lp - prev <= 1e-13 * (1.0 + abs(lp)):
            break
    return lp, base + N @ z, z


def one_sided_ci(problem: CiProblem, recession: np.ndarray | None = None) -> OneSidedInterval:
    """Solve the min and max of the target over the alpha-feasible constancy set.

    ``recession`` may supply the direction of recession expressed in the
    original beta coordinates (e.g. the GDOR); it is used to decide which
    endpoint is degenerate and to locate feasible starting points.
    """
    if problem.j < 1:
        raise NonBoundaryTarget("constancy space is empty; conventional intervals apply")
    model = problem.model
    A = model.M @ problem.gamma_basis
    theta_hat = model.M @ problem.beta_hat
    fixed = list(problem.fixed)
    log_alpha = math.log(problem.alpha)
    ell, transform, lo_limit, hi_limit = target_description(problem)

    if recession is not None:
        u_rec = problem.gamma_basis.T @ np.asarray(recession, dtype=float)
        nrm = np.linalg.norm(u_rec)
        u_rec = u_rec / nrm if nrm > 0 else None
    else:
        u_rec = None

    u_feas = _find_feasible(
        model,
        theta_hat,
        A,
        fixed,
        max(log_alpha, math.log((1.0 + problem.alpha) / 2.0)),
        u_rec=u_rec,
    )

    rec_speed = float(ell @ u_rec) if u_rec is not None else None
    tol_speed = 1e-9 * (1.0 + np.linalg.norm(ell))
    N = scipy.linalg.null_space(ell[None, :]) if problem.j > 1 else np.zeros((problem.j, 0))
    v0 = float(ell @ u_feas)
    _, _, z_feas = _slice_sup(model, theta_hat, A, fixed, ell, N, v0)

    def optimize_side(sign):
        """sup of sign * (ell @ u) over the closure of the feasible set.

        Bisection on the target value v: phi(v) = sup of the log probability
        on the slice ell @ u = v is concave in v, so {phi >= log alpha} is an
        interval and its endpoint is the interval bound.  This captures
        suprema approached only at infinity, where a direct search over u
        stalls.  Returns (value, u, status); value is +inf when the
        expansion never leaves the feasible value range (degenerate side).
        """
        v_lo, z = v0, z_feas
        u_bind = u_feas
        step = 1.0 + abs(v0)
        v_hi = None
        for _ in range(120):
            v_try = v_lo + sign * step
            val, u_try, z_try = _slice_sup(model, theta_hat, A, fixed, ell, N, v_try, z0=z)
            if val >= log_alpha:
                v_lo, z, u_bind = v_try, z_try, u_try
                step *= 2.0
            else:
                v_hi = v_try
                break
        if v_hi is None:
            return math.inf, None, "unbounded"
        while abs(v_hi - v_lo) > 1e-12 * (1.0 + abs(v_lo)):
            mid = 0.5 * (v_lo + v_hi)
            val, u_try, z_try = _slice_sup(model, theta_hat, A, fixed, ell, N, mid, z0=z)
            if val >= log_alpha:
                v_lo, z, u_bind = mid, z_try, u_try
            else:
                v_hi = mid
        return sign * v_lo, u_bind, "value-bisection"

    statuses = []
    achieved = problem.alpha

    if rec_speed is not None and rec_speed > tol_speed:
        upper = hi_limit
        statuses.append("upper=range-end")
        val, u_opt, st = optimize_side(-1.0)
        lower = lo_limit if math.isinf(val) else transform(-val)
        statuses.append(f"lower={st}")
        if u_opt is not None:
            achieved = math.exp(_log_pmf_fixed(model, theta_hat + A @ u_opt, fixed))
    elif rec_speed is not None and rec_speed < -tol_speed:
        lower = lo_limit
        statuses.append("lower=range-end")
        val, u_opt, st = optimize_side(1.0)
        upper = hi_limit if math.isinf(val) else transform(val)
        statuses.append(f"upper={st}")
        if u_opt is not None:
            achieved = math.exp(_log_pmf_fixed(model, theta_hat + A @ u_opt, fixed))
    else:
        val_hi, u_hi, st_hi = optimize_side(1.0)
        val_lo, u_lo, st_lo = optimize_side(-1.0)
        upper = hi_limit if math.isinf(val_hi) else transform(val_hi)
        lower = lo_limit if math.isinf(val_lo) else transform(-val_lo)
        statuses.append(f"upper={st_hi},lower={st_lo}")
        ref = u_hi if u_hi is not None else u_lo
        if ref is not None:
            achieved = math.exp(_log_pmf_fixed(model, theta_hat + A @ ref, fixed))

    if lower > upper:
        lower, upper = upper, lower
    return OneSidedInterval(
        target=problem.target,
        lower=float(lower),
        upper=float(upper),
        alpha=problem.alpha,
        achieved_constraint=float(achieved),
        solver_status=";".join(statuses),
    )
