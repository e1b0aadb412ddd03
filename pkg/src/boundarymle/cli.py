"""Command-line front end.

``fit`` is a thin client of the HTTP service: by default it mounts the
FastAPI app in-process (no network), or talks to a running server when
--server is given.  ``serve`` starts the service with uvicorn.

Exit codes: 0 success; 2 parse/rank error; 3 solver failure; 4 oracle
mismatch under --verify-oracle.
"""

from __future__ import annotations

import csv
import json
import sys

import click
import httpx

EXIT_OK = 0
EXIT_PARSE_RANK = 2
EXIT_SOLVER = 3
EXIT_ORACLE_MISMATCH = 4


@click.group()
def main():
    """Maximum likelihood fitting and one-sided inference at the boundary."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("boundarymle.service:app", host=host, port=port)


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # in-process: mount the ASGI app directly, no network involved
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _parse_epsilon(_ctx, _param, value):
    if value == "auto":
        return "auto"
    try:
        return float(value)
    except ValueError:
        raise click.BadParameter("must be 'auto' or a number")


def _parse_targets(_ctx, _param, value):
    if value == "boundary-means":
        return "boundary-means"
    try:
        return [int(t) for t in value.split(",") if t.strip() != ""]
    except ValueError:
        raise click.BadParameter("must be 'boundary-means' or a comma-separated row list")


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Input CSV with a header row.")
@click.option("--response", required=True, help="Response column name.")
@click.option("--predictors", required=True, multiple=True,
              help="Predictor column name (repeatable).")
@click.option("--categorical", multiple=True,
              help="Predictor to force categorical (default: inferred from the data).")
@click.option("--family", required=True, type=click.Choice(["bernoulli", "poisson"]))
@click.option("--trials-column", default=None, help="Bernoulli trial counts column.")
@click.option("--interactions", default=1, show_default=True, type=int,
              help="Include all interactions up to this order.")
@click.option("--alpha", default=0.05, show_default=True, type=float)
@click.option("--epsilon", default="auto", show_default=True, callback=_parse_epsilon,
              help="Null-space eigenvalue cutoff, or 'auto' for the spectral-gap rule.")
@click.option("--targets", default="boundary-means", show_default=True, callback=_parse_targets,
              help="'boundary-means' or a comma-separated list of row indices.")
@click.option("--report", "report_path", default=None, type=click.Path(dir_okay=False),
              help="Write the JSON report here.")
@click.option("--plot-data", "plot_path", default=None, type=click.Path(dir_okay=False),
              help="Write interval chart data (CSV) here.")
@click.option("--verify-oracle", is_flag=True,
              help="Cross-check against brute-force oracles when sizes permit.")
@click.option("--server", default=None, help="URL of a running service (default: in-process).")
def fit(data, response, predictors, categorical, family, trials_column, interactions,
        alpha, epsilon, targets, report_path, plot_path, verify_oracle, server):
    """Fit a model, detect boundary degeneracy, and compute intervals."""
    unknown = set(categorical) - set(predictors)
    if unknown:
        click.echo(f"error: --categorical names not in --predictors: {sorted(unknown)}", err=True)
        sys.exit(EXIT_PARSE_RANK)
    payload = {
        "csv_text": open(data, encoding="utf-8").read(),
        "response": response,
        "predictors": [
            {"name": p, "kind": "categorical" if p in set(categorical) else "auto"}
            for p in predictors
        ],
        "family": family,
        "trials_column": trials_column,
        "interactions": interactions,
        "alpha": alpha,
        "epsilon": epsilon,
        "targets": targets,
        "verify_oracle": verify_oracle,
    }
    with _client(server) as client:
        resp = client.post("/analyze", json=payload)
    if resp.status_code == 422:
        body = resp.json()
        click.echo(f"error [{body.get('stage', 'parse')}]: {body.get('message', resp.text)}", err=True)
        sys.exit(EXIT_PARSE_RANK)
    resp.raise_for_status()
    body = resp.json()
    report = body["report"]

    if report_path:
        from .pipeline import report_json

        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(report_json(report))
    if plot_path:
        with open(plot_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["target_id", "x_label", "observed", "lower", "upper", "alpha"])
            for iv in report.get("intervals") or []:
                w.writerow([iv["target_id"], iv["x_label"], iv["observed"],
                            iv["lower"], iv["upper"], iv["alpha"]])

    err = report.get("error")
    if err:
        click.echo(f"error [{err['stage']}]: {err['message']}", err=True)
        if err["error"] in ("ParseError", "RankError"):
            sys.exit(EXIT_PARSE_RANK)
        sys.exit(EXIT_SOLVER)

    def fmt(v):
        return v if isinstance(v, str) else f"{v:.6g}"

    j = report["degeneracy"]["j"]
    lcm = report.get("lcm") or {}
    click.echo(f"log likelihood: {fmt(report['fit']['log_likelihood'])}")
    click.echo(f"null dimension j = {j}")
    if j > 0:
        click.echo(f"fixed rows: {lcm.get('fixed')}")
        dor = report.get("dor")
        if dor:
            click.echo(f"direction of recession found (generic: {dor['is_gdor']})")
    for iv in report.get("intervals") or []:
        click.echo(
            f"  {iv['target_id']} ({iv['x_label']}): "
            f"[{fmt(iv['lower'])}, {fmt(iv['upper'])}] at alpha={iv['alpha']}"
        )
    oracle = report.get("oracle")
    if oracle is not None:
        if oracle["agree"]:
            click.echo("oracle cross-checks: all agree")
        else:
            bad = [c for c in oracle["checks"] if not c["ok"]]
            click.echo(f"oracle cross-checks FAILED: {bad}", err=True)
            sys.exit(EXIT_ORACLE_MISMATCH)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
