"""Serialisation of solutions, sweeps and figure tables.

CSV files are comma separated with a header row, LF line endings and floats
in 17 significant digits so that they regenerate bit for bit. JSON summaries
map non-finite floats to ``null``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import fields
from pathlib import Path

import numpy as np

from .metrics import EquilibriumMetrics, node_values

METRIC_COLUMNS = tuple(f.name for f in fields(EquilibriumMetrics))


def fmt(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(value)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


# single scenario


def schedule_table(sol, params, mode: str = "rational"):
    """Per-node rows: theta, weight, price, supply, financial position, threshold, default fraction, iterations, residual."""
    from .metrics import market_schedule

    sched = market_schedule(sol, params, mode)
    nv = node_values(sched, params)
    header = ("theta", "weight", "price", "q_supply", "q_financial", "theta_star", "default_frac", "iterations", "residual")
    rows = zip(
        sched.grid.nodes, sched.grid.weights, sched.prices, nv.supply, nv.q_fin,
        nv.theta_star, 1.0 - nv.survival, sched.iterations, sched.residuals,
    )
    return header, list(rows)


def metrics_table(metrics_list):
    return METRIC_COLUMNS, [[getattr(m, c) for c in METRIC_COLUMNS] for m in metrics_list]


def solve_summary(sol, metrics: EquilibriumMetrics, params, backend: str) -> dict:
    sched = sol.schedule
    return {
        "params": params.to_dict(),
        "mode": metrics.mode,
        "gamma": sol.gamma,
        "outer_iterations": sol.outer_iterations,
        "outer_residual": sol.residual,
        "multistart_spread": sol.multistart_spread,
        "grid_points": len(sched.grid),
        "max_clearing_residual": float(np.max(sched.residuals)) if len(sched.residuals) else 0.0,
        "metrics": metrics.to_dict(),
        "backend": backend,
    }


# sweeps


def sweep_table(result):
    """Long-format rows: swept value, mode, status, then every metric column."""
    name = result.spec.swept_parameter
    header = (name, "mode", "status") + METRIC_COLUMNS
    failed = {(f.value, f.mode): f.kind for f in result.failures}
    rows = []
    for mode in result.spec.modes:
        for v, m in zip(result.spec.values, result.rows[mode]):
            if m is None:
                rows.append([v, mode, failed.get((v, mode), "failed")] + [math.nan] * len(METRIC_COLUMNS))
            else:
                rows.append([v, mode, "ok"] + [getattr(m, c) for c in METRIC_COLUMNS])
    return header, rows


def sweep_summary(result) -> dict:
    spec = result.spec
    return {
        "base": spec.base.to_dict(),
        "swept_parameter": spec.swept_parameter,
        "values": list(spec.values),
        "mode": spec.mode,
        "grid": {"n_points": spec.grid.n_points, "truncation": spec.grid.truncation, "tol": spec.grid.tol},
        "alpha_c": result.alpha_c,
        "alpha_star": result.alpha_star,
        "mu_S_star": result.mu_S_star,
        "feasible_fraction": result.feasible_fraction(),
        "infeasible": [list(p) for p in result.infeasible],
        "failures": [{"value": f.value, "mode": f.mode, "kind": f.kind, "message": f.message} for f in result.failures],
        "notes": list(result.notes),
    }


def serialize_sweep(result) -> bytes:
    """Canonical byte form of a sweep: the CSV table followed by the JSON summary."""
    header, rows = sweep_table(result)
    return (csv_text(header, rows) + json_text(sweep_summary(result))).encode("utf-8")


# figures


def _status(rows_by_mode, i):
    return "ok" if all(r[i] is not None for r in rows_by_mode) else "infeasible"


def _col(row, name):
    return math.nan if row is None else getattr(row, name)


def figure1_table(sched0, sched_a, theta0: float):
    """Price against ``theta - theta0`` for the segmented and an integrated market."""
    nodes = sched0.grid.nodes
    pa = np.where(sched_a.feasible, sched_a.prices, np.nan)
    header = ("theta_minus_theta0", "price_alpha0", "price_alpha_finite")
    return header, [[t - theta0, p0, p1] for t, p0, p1 in zip(nodes, sched0.prices, pa)]


def figure2_table(result):
    rows = result.rows["rational"]
    header = ("alpha", "price_mean", "price_std", "status")
    return header, [[a, _col(r, "price_mean"), _col(r, "price_std"), _status([rows], i)] for i, (a, r) in enumerate(zip(result.spec.values, rows))]


def figure3_table(result):
    rows = result.rows["rational"]
    header = ("alpha", "mu_S", "sigma_S", "mu_F", "sigma_F", "sigma_F_aggregate", "status")
    names = header[1:-1]
    return header, [[a] + [_col(r, n) for n in names] + [_status([rows], i)] for i, (a, r) in enumerate(zip(result.spec.values, rows))]


def figure3_analytic_table(base, betas=(0.2, 0.4, 0.6), sigma_bars=None):
    """Approximate investor return at its per-beta optimum over a ``sigma_bar`` grid.

    Entries where the maximum sits next to a vanishing denominator (the
    approximation diverges there) are written as NaN.
    """
    from .analytic import analytic_alpha_star
    from .errors import SingularDenominator

    if sigma_bars is None:
        sigma_bars = np.round(np.arange(1, 21) * 0.01, 10)
    header = ("sigma_bar",) + tuple(f"mu_S_at_alpha_star_beta{b:g}" for b in betas)
    rows = []
    for s in sigma_bars:
        row = [float(s)]
        for b in betas:
            try:
                st = analytic_alpha_star(base.with_(beta=b, sigma_bar=float(s)))
                row.append(math.nan if st.singular else st.mu_S)
            except SingularDenominator:
                row.append(math.nan)
        rows.append(row)
    return header, rows


def figure4_table(result):
    r, n = result.rows["rational"], result.rows["naive"]
    header = ("alpha", "mu_F_rational", "mu_F_naive", "mu_S_rational", "mu_S_naive", "status")
    return header, [
        [a, _col(x, "mu_F"), _col(y, "mu_F"), _col(x, "mu_S"), _col(y, "mu_S"), _status([r, n], i)]
        for i, (a, x, y) in enumerate(zip(result.spec.values, r, n))
    ]


def figure5_table(result):
    rows = result.rows["rational"]
    header = ("alpha", "q_mean", "q_std", "default_frac", "default_frac_std", "status")
    names = header[1:-1]
    return header, [[a] + [_col(r, c) for c in names] + [_status([rows], i)] for i, (a, r) in enumerate(zip(result.spec.values, rows))]


def relative_growth(result) -> np.ndarray:
    """``q_std(alpha) / q_std(first alpha) - 1`` along a rational alpha sweep."""
    q = result.series("q_std", "rational")
    return q / q[0] - 1.0


def figure6_table(result_a, result_b):
    ga, gb = relative_growth(result_a), relative_growth(result_b)
    header = ("alpha", "sigma_Q_relative_marketA", "sigma_Q_relative_marketB", "status")
    rows = []
    for i, a in enumerate(result_a.spec.values):
        ok = np.isfinite(ga[i]) and np.isfinite(gb[i])
        rows.append([a, ga[i], gb[i], "ok" if ok else "infeasible"])
    return header, rows


PLOT_SCRIPT = '''"""Plot the figure tables written next to this script (requires matplotlib)."""

import csv
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def read(name):
    with open(HERE / name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) if r[k] not in ("", "nan") else math.nan for r in rows] for k in rows[0] if k != "status"} if rows else {}


def plot(name, x, ys, xlabel, out):
    path = HERE / name
    if not path.exists():
        return
    data = read(name)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for y in ys:
        ax.plot(data[x], data[y], marker=".", label=y)
    ax.set_xlabel(xlabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(HERE / out, dpi=150)
    plt.close(fig)


def main():
    plot("fig1.csv", "theta_minus_theta0", ["price_alpha0", "price_alpha_finite"], "theta - theta0", "fig1.png")
    plot("fig2.csv", "alpha", ["price_mean", "price_std"], "alpha", "fig2.png")
    plot("fig3.csv", "alpha", ["mu_S", "mu_F", "sigma_F"], "alpha", "fig3.png")
    if (HERE / "fig3-analytic.csv").exists():
        cols = [c for c in read("fig3-analytic.csv") if c != "sigma_bar"]
        plot("fig3-analytic.csv", "sigma_bar", cols, "sigma_bar", "fig3-analytic.png")
    plot("fig4.csv", "alpha", ["mu_F_rational", "mu_F_naive", "mu_S_rational", "mu_S_naive"], "alpha", "fig4.png")
    plot("fig5.csv", "alpha", ["q_mean", "q_std", "default_frac"], "alpha", "fig5.png")
    plot("fig6.csv", "alpha", ["sigma_Q_relative_marketA", "sigma_Q_relative_marketB"], "alpha", "fig6.png")
    return 0


if __name__ == "__main__":
    sys.exit(main())
'''
