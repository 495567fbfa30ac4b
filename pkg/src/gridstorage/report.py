"""Delimited outputs and figures for comparison, asymptotics, and lab runs.

CSV cells carry ``repr`` of floats so files round-trip bit-exactly; JSON key
order is fixed, making byte-identical reruns a meaningful determinism check.
"""

from __future__ import annotations

import csv
import json
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .asymptotics import AsymptoticApproximation
from .harness import KINDS, ComparisonRow
from .pickands import PickandsEstimate

_COMPARE_FIELDS = ("u", "kind", "p_hat", "se", "ci_lo", "ci_hi", "asy_value", "ratio", "flags")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def comparison_records(rows: Sequence[ComparisonRow]) -> list:
    records = []
    for row in rows:
        for kind in KINDS:
            mc = row.mc[kind]
            asy = row.asy[kind]
            records.append(
                {
                    "u": row.u,
                    "kind": kind,
                    "p_hat": mc.p_hat,
                    "se": mc.se,
                    "ci_lo": mc.ci95[0],
                    "ci_hi": mc.ci95[1],
                    "asy_value": asy.value,
                    "ratio": row.ratio[kind],
                    "flags": list(asy.flags),
                }
            )
    return records


def write_comparison_csv(rows: Sequence[ComparisonRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_COMPARE_FIELDS)
        for rec in comparison_records(rows):
            writer.writerow(
                [_fmt(rec[k]) if k != "flags" else "|".join(rec["flags"]) for k in _COMPARE_FIELDS]
            )


def write_comparison_json(rows: Sequence[ComparisonRow], path: str) -> None:
    with open(path, "w") as fh:
        json.dump(comparison_records(rows), fh, indent=1)
        fh.write("\n")


_ASYMPT_FIELDS = (
    "u",
    "regime",
    "t_u",
    "m_u",
    "Delta_u",
    "f_u",
    "psi_m",
    "prefactor",
    "value",
    "kind",
    "flags",
)


def write_asympt_csv(entries: Iterable, path: str) -> None:
    """Rows of (CoreQuantities, AsymptoticApproximation) pairs."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_ASYMPT_FIELDS)
        for cq, approx in entries:
            writer.writerow(
                [
                    _fmt(approx.u),
                    approx.regime.regime,
                    _fmt(cq.t_u),
                    _fmt(cq.m_u),
                    _fmt(cq.delta_u_scale),
                    _fmt(cq.f_u),
                    _fmt(approx.psi_m),
                    _fmt(approx.prefactor),
                    _fmt(approx.value),
                    approx.kind,
                    "|".join(approx.flags),
                ]
            )


_PICKANDS_FIELDS = ("process_tag", "delta", "S", "reps", "kind", "H_over_S", "SE")


def write_pickands_csv(estimate: PickandsEstimate, path: str) -> None:
    """Per-S trace rows followed by the final rate row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_PICKANDS_FIELDS)
        for S, _H, h_over_s, se in estimate.trace:
            writer.writerow(
                [estimate.process_tag, _fmt(estimate.delta), _fmt(float(S)), estimate.reps]
                + ["H_window", _fmt(float(h_over_s)), _fmt(float(se))]
            )
        writer.writerow(
            [estimate.process_tag, _fmt(estimate.delta), _fmt(estimate.S), estimate.reps]
            + [estimate.kind, _fmt(estimate.value), _fmt(estimate.std_error)]
        )


# ---------------------------------------------------------------------------
# figures


def render_comparison_figure(rows: Sequence[ComparisonRow], path: str) -> None:
    """Two panels: estimated vs predicted probabilities, and their ratio."""
    u = [row.u for row in rows]
    fig, (ax_p, ax_r) = plt.subplots(1, 2, figsize=(10, 4))
    for kind, marker in zip(KINDS, "osv"):
        p = [row.mc[kind].p_hat for row in rows]
        lo = [row.mc[kind].p_hat - row.mc[kind].ci95[0] for row in rows]
        hi = [row.mc[kind].ci95[1] - row.mc[kind].p_hat for row in rows]
        a = [row.asy[kind].value for row in rows]
        r = [row.ratio[kind] for row in rows]
        ax_p.errorbar(u, p, yerr=[lo, hi], marker=marker, linestyle="none", label=f"MC {kind}")
        ax_p.plot(u, a, linestyle="--", label=f"analytic {kind}")
        ax_r.plot(u, r, marker=marker, label=kind)
    ax_p.set_yscale("log")
    ax_p.set_xlabel("u")
    ax_p.set_ylabel("probability")
    ax_p.legend(fontsize=8)
    ax_r.axhline(1.0, color="gray", linewidth=0.8)
    ax_r.set_xlabel("u")
    ax_r.set_ylabel("MC / analytic")
    ax_r.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_pickands_figure(estimate: PickandsEstimate, path: str) -> None:
    S = [row[0] for row in estimate.trace]
    h_over_s = [row[2] for row in estimate.trace]
    se = [row[3] for row in estimate.trace]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(S, h_over_s, yerr=[1.96 * s for s in se], marker="o", label="window mean / S")
    ax.axhline(estimate.value, linestyle="--", color="C1", label=f"rate = {estimate.value:.3f}")
    ax.set_xlabel("S")
    ax.set_ylabel("window functional / S")
    ax.set_title(estimate.process_tag)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_asympt_figure(entries: Sequence, path: str) -> None:
    u = [approx.u for _cq, approx in entries]
    v = [approx.value for _cq, approx in entries]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(u, v, marker="o")
    ax.set_xscale("log")
    positive = [x for x in v if x > 0]
    if positive:
        ax.set_yscale("log")
    ax.set_xlabel("u")
    ax.set_ylabel("approximation value")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_path_figure(times: np.ndarray, drifted: np.ndarray, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(times, drifted, linewidth=0.7)
    ax.set_xlabel("t")
    ax.set_ylabel("X(t) - c t")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
