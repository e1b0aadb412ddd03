"""Discrete exponential family building blocks for Bernoulli and Poisson GLMs.

Everything here is a pure function of immutable inputs: the model, a
canonical parameter point, and the derived cumulant/mean/variance maps.
The canonical statistic of the submodel is ``M.T @ y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RankError

BERNOULLI = "bernoulli"
POISSON = "poisson"

# Smallest acceptable ratio of singular values of the model matrix.  Below
# this the degeneracy detection cannot distinguish ill-conditioning from
# genuine null directions, so construction fails.
RANK_CUTOFF = 1e-8


@dataclass(frozen=True)
class Family:
    """Response family: Bernoulli (optionally with trial counts) or Poisson."""

    tag: str
    trials: np.ndarray | None = None

    def __post_init__(self):
        if self.tag not in (BERNOULLI, POISSON):
            raise ValueError(f"unknown family tag {self.tag!r}")
        if self.trials is not None:
            if self.tag == POISSON:
                raise ValueError("Poisson family takes no trials vector")
            t = np.asarray(self.trials, dtype=float)
            if t.ndim != 1 or np.any(t < 1) or np.any(t != np.round(t)):
                raise ValueError("trials must be a vector of integers >= 1")
            object.__setattr__(self, "trials", t)

    @classmethod
    def bernoulli(cls, trials=None):
        if trials is not None:
            trials = np.asarray(trials, dtype=float)
        return cls(BERNOULLI, trials)

    @classmethod
    def poisson(cls):
        return cls(POISSON)

    def trials_for(self, n: int) -> np.ndarray:
        """Per-observation trial counts, defaulting to all ones."""
        if self.tag == POISSON:
            return np.ones(n)
        if self.trials is None:
            return np.ones(n)
        if len(self.trials) != n:
            raise ValueError("trials length does not match response length")
        return self.trials


@dataclass(frozen=True)
class GlmModel:
    """Model matrix, response, and family of a discrete GLM.

    ``M`` must have full column rank p <= n; the responses are validated as
    integers in the family's range but stored as floats because all
    downstream arithmetic is real.
    """

    M: np.ndarray
    y: np.ndarray
    family: Family

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if M.ndim != 2:
            raise ValueError("M must be a 2-d matrix")
        n, p = M.shape
        if y.shape != (n,):
            raise ValueError("y length does not match the rows of M")
        if p > n:
            raise RankError(f"more columns ({p}) than rows ({n})")
        if np.any(y != np.round(y)) or np.any(y < 0):
            raise ValueError("responses must be nonnegative integers")
        trials = self.family.trials_for(n)
        if self.family.tag == BERNOULLI and np.any(y > trials):
            raise ValueError("Bernoulli responses must satisfy y_i <= trials_i")
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[0] == 0 or sv[-1] / sv[0] < RANK_CUTOFF:
            raise RankError(
                f"model matrix is rank deficient or ill-conditioned "
                f"(singular value ratio {0 if sv[0] == 0 else sv[-1] / sv[0]:.3e})"
            )
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def p(self) -> int:
        return self.M.shape[1]

    @property
    def trials(self) -> np.ndarray:
        return self.family.trials_for(self.n)


@dataclass(frozen=True)
class CanonicalPoint:
    """Submodel canonical parameter beta and its linear predictor theta = M beta."""

    beta: np.ndarray
    theta: np.ndarray

    @classmethod
    def from_beta(cls, model: GlmModel, beta) -> "CanonicalPoint":
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (model.p,):
            raise ValueError("beta length does not match the columns of M")
        return cls(beta=beta, theta=model.M @ beta)


@dataclass(frozen=True)
class FisherInfo:
    """Symmetric positive-semidefinite Fisher information matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        scale = np.abs(A).max() if A.size else 0.0
        if not np.allclose(A, A.T, atol=1e-12 * (1.0 + scale), rtol=0.0):
            raise ValueError("Fisher information must be symmetric")
        object.__setattr__(self, "matrix", 0.5 * (A + A.T))

    def check_psd(self) -> bool:
        """Eigenvalue check used by tests; construction keeps this cheap."""
        w = np.linalg.eigvalsh(self.matrix)
        return bool(w.min(initial=0.0) >= -1e-10 * (1.0 + max(w.max(initial=0.0), 0.0)))


def canonical_statistic(model: GlmModel) -> np.ndarray:
    """Submodel canonical statistic M.T @ y."""
    return model.M.T @ model.y


def cumulant(family: Family, theta, trials=None):
    """Per-observation cumulant function, elementwise over theta.

    Bernoulli uses the overflow-safe branch form
    trials * (max(theta, 0) + log1p(exp(-|theta|))); Poisson is exp(theta)
    and may overflow to +inf for huge theta.
    """
    theta = np.asarray(theta, dtype=float)
    if family.tag == BERNOULLI:
        t = 1.0 if trials is None else trials
        return t * (np.maximum(theta, 0.0) + np.log1p(np.exp(-np.abs(theta))))
    with np.errstate(over="ignore"):
        return np.exp(theta)


def _model_cumulants(model: GlmModel, theta: np.ndarray) -> np.ndarray:
    return cumulant(model.family, theta, model.trials)


def log_likelihood(model: GlmModel, point: CanonicalPoint) -> float:
    """<M.T y, beta> minus the summed per-observation cumulants."""
    return float(canonical_statistic(model) @ point.beta - _model_cumulants(model, point.theta).sum())


def _logistic(theta: np.ndarray) -> np.ndarray:
    # evaluate in the branch that never overflows
    out = np.empty_like(theta)
    pos = theta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-theta[pos]))
    e = np.exp(theta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def mean_value(model: GlmModel, point: CanonicalPoint) -> np.ndarray:
    """Mean of the response componentwise: trials * logistic(theta) or exp(theta)."""
    if model.family.tag == BERNOULLI:
        return model.trials * _logistic(point.theta)
    with np.errstate(over="ignore"):
        return np.exp(point.theta)


def variance_value(model: GlmModel, point: CanonicalPoint) -> np.ndarray:
    """Variance of the response componentwise."""
    if model.family.tag == BERNOULLI:
        p = _logistic(point.theta)
        return model.trials * p * (1.0 - p)
    with np.errstate(over="ignore"):
        return np.exp(point.theta)


def fisher_information(model: GlmModel, point: CanonicalPoint) -> FisherInfo:
    """M.T diag(var) M, the variance of the submodel canonical statistic."""
    v = variance_value(model, point)
    F = (model.M * v[:, None]).T @ model.M
    return FisherInfo(0.5 * (F + F.T))


def score(model: GlmModel, point: CanonicalPoint) -> np.ndarray:
    """Gradient of the log likelihood at beta: M.T (y - mean)."""
    return model.M.T @ (model.y - mean_value(model, point))


def cgf_check(model: GlmModel, point: CanonicalPoint, t) -> float:
    """Submodel cumulant generating function value c(beta + t) - c(beta).

    Along a likelihood maximizing sequence this converges pointwise to the
    CGF of the limiting (conditional) distribution; in the completely
    degenerate case the limit is the linear function <M.T y, t>.
    """
    t = np.asarray(t, dtype=float)
    shifted = CanonicalPoint.from_beta(model, point.beta + t)
    return float(
        _model_cumulants(model, shifted.theta).sum() - _model_cumulants(model, point.theta).sum()
    )
