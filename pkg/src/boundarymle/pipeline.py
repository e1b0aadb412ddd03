"""End-to-end analysis pipeline and report assembly.

Runs fit -> null basis -> support -> direction of recession -> LCM refit ->
one-sided intervals for boundary mean-value targets, and assembles a
JSON-serializable report.  Optionally cross-checks every stage against the
brute-force oracles when the problem is small enough for them.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .completion import iterate_to_lcm
from .errors import BoundaryMleError, NonBoundaryTarget, TooLarge
from .expfam import BERNOULLI, CanonicalPoint, GlmModel, canonical_statistic, mean_value
from .fitting import FitConfig, fit_mle
from .inference import CiProblem, one_sided_ci
from .nullspace import null_basis
from .oracle import GridSpec, oracle_boundary_status, oracle_ci_grid, oracle_dor_verify

ORACLE_CI_TOL = 1e-4


@dataclass(frozen=True)
class PipelineOptions:
    alpha: float = 0.05
    epsilon: float | None = None  # None = automatic spectral-gap cutoff
    targets: str | list[int] = "boundary-means"
    want_dor: bool = True
    compute_intervals: bool = True
    verify_oracle: bool = False
    fit_config: FitConfig = field(default_factory=FitConfig)
    grid_spec: GridSpec = field(default_factory=GridSpec)


@dataclass
class Report:
    fit: dict
    degeneracy: dict
    lcm: dict | None = None
    dor: dict | None = None
    intervals: list[dict] | None = None
    oracle: dict | None = None
    timing: dict = field(default_factory=dict)
    error: dict | None = None
    column_names: list[str] | None = None

    def to_dict(self) -> dict:
        out = {"fit": self.fit, "degeneracy": self.degeneracy, "timing": self.timing}
        for key in ("lcm", "dor", "intervals", "oracle", "error", "column_names"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out

    @property
    def oracle_mismatch(self) -> bool:
        return bool(self.oracle and not self.oracle.get("agree", True))


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not serializable: {type(o)}")


def sanitize_floats(obj):
    """17-significant-digit floats (lossless for doubles); infinities as strings."""
    if isinstance(obj, float):
        if math.isfinite(obj):
            return float(f"{obj:.17g}")
        return "NaN" if math.isnan(obj) else ("Infinity" if obj > 0 else "-Infinity")
    if isinstance(obj, dict):
        return {k: sanitize_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [sanitize_floats(v) for v in obj]
    return obj


def report_json(report: Report | dict) -> str:
    content = report.to_dict() if isinstance(report, Report) else report
    plain = json.loads(json.dumps(content, default=_json_default))
    return json.dumps(sanitize_floats(plain), indent=2)


def limiting_gamma(model: GlmModel, free: list[int]) -> np.ndarray:
    """Orthonormal basis of the constancy space of the LCM.

    The LCM's Fisher information is M.T diag(w) M with positive weights only
    on the free rows, so its null space is the null space of M restricted to
    those rows; with no free rows every direction is in the constancy space.
    """
    if not free:
        q, _ = np.linalg.qr(np.eye(model.p))
        return q
    return scipy.linalg.null_space(model.M[list(free)])


def _interval_targets(model: GlmModel, fixed: list[int], targets) -> list[int]:
    if targets == "boundary-means":
        return list(fixed)
    wanted = [int(t) for t in targets]
    for t in wanted:
        if t not in set(fixed):
            raise NonBoundaryTarget(f"requested target row {t} is free in the LCM")
    return wanted


def _verify(model, options, j, support, dors, problems, intervals):
    """Brute-force cross-checks; returns an oracle block with an agree flag."""
    checks = []
    agree = True

    def record(name, ok, detail=""):
        nonlocal agree
        agree = agree and ok
        checks.append({"check": name, "ok": bool(ok), "detail": detail})

    try:
        on_boundary, _ = oracle_boundary_status(model)
        record("boundary-status", on_boundary == (j > 0), f"lp={on_boundary}, pipeline={j > 0}")
    except BoundaryMleError as exc:
        checks.append({"check": "boundary-status", "ok": True, "detail": f"skipped: {exc}"})

    for i, d in enumerate(dors):
        try:
            ok = oracle_dor_verify(model, d.delta)
            record(f"dor-{i}", ok)
        except TooLarge as exc:
            checks.append({"check": f"dor-{i}", "ok": True, "detail": f"skipped: {exc}"})

    for prob, iv in zip(problems, intervals):
        name = f"ci-{prob.target[0]}-{prob.target[1]}"
        try:
            g = oracle_ci_grid(prob, options.grid_spec)
        except TooLarge as exc:
            checks.append({"check": name, "ok": True, "detail": f"skipped: {exc}"})
            continue
        # The grid only visits certified-feasible points, so its bounded
        # endpoints are inner approximations: the solver interval must cover
        # them.  Agreement within tolerance is additionally required unless
        # the grid pushed that side to the end of the parameter range.
        lo_ok = iv.lower <= g.lower + ORACLE_CI_TOL
        hi_ok = iv.upper >= g.upper - ORACLE_CI_TOL
        lo_tight = abs(iv.lower - g.lower) <= ORACLE_CI_TOL or not math.isfinite(g.lower)
        hi_tight = abs(iv.upper - g.upper) <= ORACLE_CI_TOL or not math.isfinite(g.upper)
        record(name, lo_ok and hi_ok and lo_tight and hi_tight,
               f"solver=({iv.lower}, {iv.upper}) grid=({g.lower}, {g.upper})")
    return {"agree": agree, "checks": checks}


def run_pipeline(
    model: GlmModel,
    options: PipelineOptions = PipelineOptions(),
    column_names: list[str] | None = None,
    row_labels: list[str] | None = None,
) -> Report:
    timing: dict[str, float] = {}
    stage = "fit"
    try:
        t0 = time.perf_counter()
        fit = fit_mle(model, options.fit_config)
        timing["fit"] = time.perf_counter() - t0

        point = CanonicalPoint.from_beta(model, fit.beta_hat)
        fit_block = {
            "beta_hat": fit.beta_hat.tolist(),
            "log_likelihood": fit.loglik,
            "iterations": fit.iterations,
            "grad_norm": fit.grad_norm,
            "converged_interior": fit.converged_interior,
            "canonical_statistic": canonical_statistic(model).tolist(),
            "fitted_means": mean_value(model, point).tolist(),
        }

        stage = "null-basis"
        t0 = time.perf_counter()
        nb = null_basis(fit.fisher, options.epsilon, scale=fit.info_scale)
        timing["null_basis"] = time.perf_counter() - t0
        degeneracy = {
            "j": nb.j,
            "eigenvalues": nb.eigenvalues.tolist(),
            "epsilon": nb.threshold,
            "null_basis": nb.basis.tolist(),
        }

        report = Report(fit=fit_block, degeneracy=degeneracy, timing=timing,
                        column_names=column_names)
        if nb.j == 0:
            report.lcm = {"degenerate": False, "fixed": [], "free": list(range(model.n)),
                          "iterations": 0}
            if options.verify_oracle:
                stage = "verify-oracle"
                t0 = time.perf_counter()
                report.oracle = _verify(model, options, 0, None, [], [], [])
                timing["verify_oracle"] = time.perf_counter() - t0
            return report

        stage = "completion"
        t0 = time.perf_counter()
        support, lcm_fit, dors = iterate_to_lcm(
            model, options.fit_config, options.epsilon, options.want_dor, first_fit=fit
        )
        timing["completion"] = time.perf_counter() - t0
        report.lcm = {
            "degenerate": support.degenerate,
            "fixed": support.fixed,
            "free": support.free,
            "iterations": support.iterations,
            "beta_full": lcm_fit.beta_full.tolist(),
            "fitted_means": lcm_fit.fitted_means.tolist(),
            "dropped_columns": lcm_fit.dropped_cols,
            "log_likelihood": lcm_fit.loglik,
        }
        if dors:
            d = dors[-1]
            report.dor = {
                "delta": d.delta.tolist(),
                "zeta": d.zeta.tolist(),
                "is_dor": d.is_dor,
                "is_gdor": d.is_gdor,
                "f_value": d.f_value,
            }

        problems: list[CiProblem] = []
        intervals = []
        if options.compute_intervals and support.fixed:
            stage = "intervals"
            t0 = time.perf_counter()
            gamma = limiting_gamma(model, support.free)
            recession = dors[-1].delta if dors else None
            for k in _interval_targets(model, support.fixed, options.targets):
                prob = CiProblem(
                    model=model,
                    beta_hat=lcm_fit.beta_full,
                    gamma_basis=gamma,
                    fixed=support.fixed,
                    alpha=options.alpha,
                    target=("mean", int(k)),
                )
                iv = one_sided_ci(prob, recession=recession)
                problems.append(prob)
                intervals.append(iv)
            timing["intervals"] = time.perf_counter() - t0
            trials = model.trials
            report.intervals = [
                {
                    "target_id": f"mean[{prob.target[1]}]",
                    "row": int(prob.target[1]),
                    "x_label": (row_labels[prob.target[1]] if row_labels else str(prob.target[1])),
                    "observed": (
                        float(model.y[prob.target[1]]) / trials[prob.target[1]]
                        if model.family.tag == BERNOULLI
                        else float(model.y[prob.target[1]])
                    ),
                    "lower": iv.lower,
                    "upper": iv.upper,
                    "alpha": iv.alpha,
                    "achieved_constraint": iv.achieved_constraint,
                    "solver_status": iv.solver_status,
                }
                for prob, iv in zip(problems, intervals)
            ]

        if options.verify_oracle:
            stage = "verify-oracle"
            t0 = time.perf_counter()
            report.oracle = _verify(model, options, nb.j, support, dors, problems, intervals)
            timing["verify_oracle"] = time.perf_counter() - t0
        return report
    except BoundaryMleError as exc:
        return Report(
            fit=locals().get("fit_block", {}),
            degeneracy=locals().get("degeneracy", {}),
            timing=timing,
            error={"stage": stage, "error": type(exc).__name__, "message": str(exc)},
        )


def emit_plot_data(report: Report, path) -> None:
    """Interval chart data: target_id, x_label, observed, lower, upper, alpha."""
    import csv as _csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh)
        w.writerow(["target_id", "x_label", "observed", "lower", "upper", "alpha"])
        for iv in report.intervals or []:
            w.writerow([iv["target_id"], iv["x_label"], iv["observed"],
                        iv["lower"], iv["upper"], iv["alpha"]])
