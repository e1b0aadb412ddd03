"""Limiting conditional model (LCM) recovery.

Three cooperating views of the same degeneracy are implemented here:
the support of the LCM read off the null basis (which response rows have
a nonzero component of M @ eta for some null eigenvector eta), a direction
of recession recovered by minimizing the piecewise-linear minimax function
over the null basis coordinates, and the subset refit that conditions the
model on the fixed rows.  The pipeline iterates fit -> null basis ->
support -> refit until the refit shows no further degeneracy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import IterationLimit, NoDescentDirection, ZeroDirection
from .expfam import BERNOULLI, CanonicalPoint, GlmModel, mean_value
from .fitting import FitConfig, FitResult, fit_mle
from .minnorm import min_norm_point
from .nullspace import NullBasis, null_basis

LOWER = "lower-bound"
UPPER = "upper-bound"
EQUALITY = "equality-pair"


def default_tolerance(model: GlmModel) -> float:
    """Tolerance for zeta / generator inner products; scales with the rows of M."""
    row_norms = np.linalg.norm(model.M, axis=1)
    return 1e-6 * (1.0 + float(row_norms.max()))


@dataclass(frozen=True)
class TangentConeGenerators:
    """Generators of the tangent cone at the observed response.

    Each row of the response contributes generators v such that a direction
    of recession delta must satisfy <v, delta> <= 0: rows at the lower end
    of their range contribute +row(M), rows at the upper end -row(M), and
    interior rows contribute the pair +-row(M) (forcing equality).
    """

    rows: list[tuple[int, np.ndarray, str]]

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class DirectionOfRecession:
    delta: np.ndarray
    zeta: np.ndarray
    a_coeffs: np.ndarray
    f_value: float
    is_dor: bool
    is_gdor: bool


@dataclass(frozen=True)
class LcmSupport:
    fixed: list[int]
    free: list[int]
    iterations: int = 0

    @property
    def degenerate(self) -> bool:
        return len(self.free) == 0


@dataclass(frozen=True)
class LcmFit:
    """Refit of the model conditioned on the fixed rows.

    beta_full embeds the restricted estimate back into the original
    coordinate order, with zeros for columns dropped as aliased.  In the
    completely degenerate case there is nothing to fit and the fitted means
    equal the observed response exactly.
    """

    fit: FitResult | None
    submodel: GlmModel | None
    kept_rows: list[int]
    kept_cols: list[int]
    dropped_cols: list[int]
    beta_full: np.ndarray
    fitted_means: np.ndarray
    degenerate: bool

    @property
    def loglik(self) -> float:
        # a point mass has log density zero at the observed point
        return 0.0 if self.fit is None else self.fit.loglik


def tangent_cone_generators(model: GlmModel) -> TangentConeGenerators:
    rows: list[tuple[int, np.ndarray, str]] = []
    trials = model.trials
    for i in range(model.n):
        m_i = model.M[i]
        y_i = model.y[i]
        if model.family.tag == BERNOULLI:
            if y_i == 0:
                rows.append((i, m_i.copy(), LOWER))
            elif y_i == trials[i]:
                rows.append((i, -m_i, UPPER))
            else:
                rows.append((i, m_i.copy(), EQUALITY))
                rows.append((i, -m_i, EQUALITY))
        else:
            if y_i == 0:
                rows.append((i, m_i.copy(), LOWER))
            else:
                rows.append((i, m_i.copy(), EQUALITY))
                rows.append((i, -m_i, EQUALITY))
    return TangentConeGenerators(rows)


def lcm_support_from_null_basis(
    model: GlmModel, basis: NullBasis, tol_support: float | None = None
) -> LcmSupport:
    """Rows whose component of M @ eta is nonzero for some null eigenvector are fixed."""
    tol = default_tolerance(model) if tol_support is None else tol_support
    if basis.j == 0:
        return LcmSupport(fixed=[], free=list(range(model.n)), iterations=0)
    MB = model.M @ basis.basis
    fixed_mask = np.max(np.abs(MB), axis=1) > tol
    fixed = [int(i) for i in np.flatnonzero(fixed_mask)]
    free = [int(i) for i in np.flatnonzero(~fixed_mask)]
    return LcmSupport(fixed=fixed, free=free, iterations=0)


def dor_check(
    model: GlmModel,
    delta,
    tol_dor: float | None = None,
    fixed: list[int] | None = None,
) -> tuple[bool, bool, np.ndarray]:
    """Validate a candidate direction of recession against the tangent cone.

    is_dor holds when every generator inner product is <= tol_dor (within
    |.| <= tol_dor for equality pairs).  is_gdor additionally requires that
    the nonzero set of zeta = M delta matches the fixed set; when no fixed
    set is supplied, the surrogate check requires strictness on every
    bound generator.
    """
    delta = np.asarray(delta, dtype=float)
    tol = default_tolerance(model) if tol_dor is None else tol_dor
    if np.linalg.norm(delta) <= tol:
        raise ZeroDirection("candidate direction is numerically zero")
    zeta = model.M @ delta
    gens = tangent_cone_generators(model)
    is_dor = True
    strict_all_bounds = True
    for _, v, kind in gens.rows:
        val = float(v @ delta)
        if val > tol:
            is_dor = False
        if kind in (LOWER, UPPER) and val >= -tol:
            strict_all_bounds = False
    if not is_dor:
        return False, False, zeta
    if fixed is not None:
        nonzero = {int(i) for i in np.flatnonzero(np.abs(zeta) > tol)}
        is_gdor = nonzero == set(fixed)
    else:
        is_gdor = strict_all_bounds
    return True, bool(is_gdor), zeta


def find_dor(
    model: GlmModel, basis: NullBasis, tol_dor: float | None = None
) -> DirectionOfRecession:
    """Direction of recession from the null basis, by minimax minimization.

    Projects out the equality-pair constraints, then minimizes the maximum
    generator inner product over unit coefficient vectors; the optimum is
    the direction opposite the minimum-norm point of the projected
    generator hull, which certifies global optimality on the sphere.
    """
    if basis.j < 1:
        raise NoDescentDirection("null basis is empty")
    tol = default_tolerance(model) if tol_dor is None else tol_dor
    B = basis.basis
    gens = tangent_cone_generators(model)

    ineq = []
    eq = []
    seen_eq = set()
    for i, v, kind in gens.rows:
        h = B.T @ v
        if kind == EQUALITY:
            if i not in seen_eq:
                seen_eq.add(i)
                eq.append(h)
        else:
            ineq.append(h)

    if eq:
        E = np.array([h for h in eq if np.linalg.norm(h) > tol])
        if len(E):
            _, sv, Vt = np.linalg.svd(E)
            rank = int(np.sum(sv > tol))
            Z = Vt[rank:].T  # j x d
        else:
            Z = np.eye(basis.j)
    else:
        Z = np.eye(basis.j)
    if Z.shape[1] == 0:
        raise NoDescentDirection("equality constraints leave no free direction")

    if not ineq:
        raise NoDescentDirection("no bound generators; data are interior")
    H = np.array(ineq) @ Z
    keep = np.linalg.norm(H, axis=1) > tol
    H = H[keep]
    if len(H) == 0:
        raise NoDescentDirection("no generator is sensitive to the null basis")

    w = min_norm_point(H)
    wnorm = float(np.linalg.norm(w))
    if wnorm <= 1e-7 * (1.0 + np.linalg.norm(H, axis=1).max()):
        raise NoDescentDirection("minimax optimum is not negative; null basis may be spurious")
    b = -w / wnorm
    a = Z @ b
    a = a / np.linalg.norm(a)
    delta = B @ a

    f_value = max(float(v @ delta) for _, v, _ in gens.rows)
    support = lcm_support_from_null_basis(model, basis, tol)
    is_dor, is_gdor, zeta = dor_check(model, delta, tol, fixed=support.fixed)
    return DirectionOfRecession(
        delta=delta,
        zeta=zeta,
        a_coeffs=a,
        f_value=f_value,
        is_dor=is_dor,
        is_gdor=is_gdor,
    )


def _independent_columns(M: np.ndarray) -> list[int]:
    """Columns forming a full-rank subset, preferring the original order."""
    if M.shape[1] == 0:
        return []
    sv = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(sv > 1e-8 * sv[0])) if sv[0] > 0 else 0
    if rank == M.shape[1]:
        return list(range(M.shape[1]))
    _, _, piv = scipy.linalg.qr(M, pivoting=True)
    return sorted(int(c) for c in piv[:rank])


def restrict_model(model: GlmModel, rows: list[int]) -> tuple[GlmModel, list[int]]:
    """Submodel on the given rows with aliased columns dropped."""
    rows = list(rows)
    Msub = model.M[rows]
    kept = _independent_columns(Msub)
    trials = model.family.trials
    family = model.family
    if family.tag == BERNOULLI and trials is not None:
        family = replace(family, trials=trials[rows])
    sub = GlmModel(M=Msub[:, kept], y=model.y[rows], family=family)
    return sub, kept


def refit_lcm(model: GlmModel, support: LcmSupport, config: FitConfig = FitConfig()) -> LcmFit:
    """Fit the model conditioned on the fixed rows of the support."""
    if support.degenerate:
        return LcmFit(
            fit=None,
            submodel=None,
            kept_rows=[],
            kept_cols=[],
            dropped_cols=list(range(model.p)),
            beta_full=np.zeros(model.p),
            fitted_means=model.y.copy(),
            degenerate=True,
        )
    sub, kept = restrict_model(model, support.free)
    fit = fit_mle(sub, config)
    beta_full = np.zeros(model.p)
    beta_full[kept] = fit.beta_hat
    means = model.y.astype(float).copy()
    point = CanonicalPoint.from_beta(sub, fit.beta_hat)
    means[support.free] = mean_value(sub, point)
    dropped = sorted(set(range(model.p)) - set(kept))
    return LcmFit(
        fit=fit,
        submodel=sub,
        kept_rows=list(support.free),
        kept_cols=kept,
        dropped_cols=dropped,
        beta_full=beta_full,
        fitted_means=means,
        degenerate=False,
    )


def iterate_to_lcm(
    model: GlmModel,
    config: FitConfig = FitConfig(),
    epsilon: float | None = None,
    want_dor: bool = True,
    first_fit: FitResult | None = None,
) -> tuple[LcmSupport, LcmFit, list[DirectionOfRecession]]:
    """Repeat fit -> null basis -> support -> restrict until no degeneracy remains.

    A user-supplied eigenvalue cutoff applies to the first round only; later
    rounds see a different spectrum and use the automatic cutoff.  At most p
    rounds can occur because each one removes at least one dimension.
    """
    n, p = model.n, model.p
    fixed_global: list[int] = []
    row_ids = np.arange(n)
    col_ids = list(range(p))
    current = model
    dors: list[DirectionOfRecession] = []
    rounds = 0

    while True:
        if rounds > p:
            raise IterationLimit(
                "completion did not terminate within p rounds; tolerances are misconfigured"
            )
        if rounds == 0 and first_fit is not None:
            fit = first_fit
        else:
            fit = fit_mle(current, config)
        nb = null_basis(fit.fisher, epsilon if rounds == 0 else None, scale=fit.info_scale)
        rounds += 1
        if nb.j == 0:
            break
        sup = lcm_support_from_null_basis(current, nb)
        if want_dor:
            try:
                d = find_dor(current, nb)
                delta_full = np.zeros(p)
                delta_full[col_ids] = d.delta
                zeta_full = np.zeros(n)
                zeta_full[row_ids] = d.zeta
                dors.append(replace(d, delta=delta_full, zeta=zeta_full))
            except NoDescentDirection:
                pass
        if not sup.fixed:
            break  # null basis fixed nothing; treat as terminal
        fixed_global.extend(int(i) for i in row_ids[sup.fixed])
        if not sup.free:
            break
        row_ids = row_ids[sup.free]
        current, col_ids = restrict_model(model, list(row_ids))

    free_global = sorted(set(range(n)) - set(fixed_global))
    support = LcmSupport(fixed=sorted(fixed_global), free=free_global, iterations=rounds)
    lcm_fit = refit_lcm(model, support, config)
    return support, lcm_fit, dors
