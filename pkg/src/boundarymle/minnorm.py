"""Minimum-norm point in the convex hull of finitely many vectors.

Wolfe's algorithm.  This is the workhorse behind the minimax search for a
direction of recession: for row vectors h_1..h_m the sphere-constrained
minimum of max_i <h_i, b> equals -dist(0, conv{h_i}), attained at the unit
vector pointing away from the nearest hull point, so the piecewise-linear
minimax problem reduces to this small dense projection.
"""

from __future__ import annotations

import numpy as np


def _affine_minimizer(P: np.ndarray) -> np.ndarray:
    """Coefficients of the min-norm point of the affine hull of the rows of P."""
    s = P.shape[0]
    G = P @ P.T
    scale = max(np.abs(G).max(), 1.0)
    K = np.zeros((s + 1, s + 1))
    K[:s, :s] = G
    K[:s, s] = scale
    K[s, :s] = scale
    rhs = np.zeros(s + 1)
    rhs[s] = scale
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    lam = sol[:s]
    total = lam.sum()
    if abs(total) > 1e-12:
        lam = lam / total
    return lam


def min_norm_point(points, tol: float = 1e-12, max_iter: int = 10000) -> np.ndarray:
    """Point of minimum Euclidean norm in the convex hull of the given rows.

    Terminates when the duality gap <w, w> - min_i <h_i, w> drops below
    tol times the squared data scale, which certifies near-optimality.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] == 0:
        raise ValueError("points must be a nonempty m x d array")
    m, _ = P.shape
    scale2 = max((P * P).sum(axis=1).max(), 1e-300)

    norms2 = (P * P).sum(axis=1)
    active = [int(np.argmin(norms2))]
    lam = np.array([1.0])
    w = P[active[0]].copy()

    for _ in range(max_iter):
        dots = P @ w
        j = int(np.argmin(dots))
        if w @ w - dots[j] <= tol * scale2:
            break
        if j in active:
            break  # numerical stall; w is already as good as representable
        active.append(j)
        lam = np.append(lam, 0.0)
        # minor cycle: pull w to the relative interior of the active set
        for _ in range(len(P) + 2):
            sub = P[active]
            mu = _affine_minimizer(sub)
            if np.all(mu > 1e-12):
                lam = mu
                w = mu @ sub
                break
            shrink = np.inf
            for lam_i, mu_i in zip(lam, mu):
                if mu_i <= 1e-12 and lam_i - mu_i > 0:
                    shrink = min(shrink, lam_i / (lam_i - mu_i))
            if not np.isfinite(shrink):
                lam = mu
                w = mu @ sub
                break
            lam = lam + shrink * (mu - lam)
            keep = lam > 1e-12
            if not np.any(keep):
                keep[int(np.argmax(lam))] = True
            active = [a for a, k in zip(active, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
            w = lam @ P[active]
    return w
