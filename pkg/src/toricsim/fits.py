"""Finite-size scaling fits for the sweep tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class FitResult:
    model: str
    params: dict
    errors: dict = field(default_factory=dict)


def _lstsq_with_errors(design: np.ndarray, y: np.ndarray):
    coef, res, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise ValueError("degenerate design matrix")
    dof = max(len(y) - design.shape[1], 1)
    if len(res):
        sigma2 = float(res[0]) / dof
    else:
        sigma2 = float(((design @ coef - y) ** 2).sum()) / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return coef, np.sqrt(np.diag(cov))


def fit_log_growth(sizes, values) -> FitResult:
    """Fit y = a (ln L + ln ln L) + b."""
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    if sizes.size < 4:
        raise ValueError("log_growth fit needs at least 4 points")
    x = np.log(sizes) + np.log(np.log(sizes))
    design = np.column_stack([x, np.ones_like(x)])
    coef, err = _lstsq_with_errors(design, values)
    return FitResult("log_growth", {"a": coef[0], "b": coef[1]}, {"a": err[0], "b": err[1]})


def fit_exp_decay(distances, values) -> FitResult:
    """Fit y = A exp(-d / xi) on positive data (linear fit of the logarithm)."""
    d = np.asarray(distances, dtype=float)
    y = np.asarray(values, dtype=float)
    if d.size < 4:
        raise ValueError("exp_decay fit needs at least 4 points")
    if (y <= 0).any():
        keep = y > 0
        d, y = d[keep], y[keep]
        if d.size < 3:
            raise ValueError("not enough positive points for a decay fit")
    design = np.column_stack([d, np.ones_like(d)])
    coef, err = _lstsq_with_errors(design, np.log(y))
    slope, intercept = coef
    if slope >= 0:
        raise ValueError("data does not decay")
    xi = -1.0 / slope
    amp = math.exp(intercept)
    return FitResult(
        "exp_decay",
        {"amplitude": amp, "xi": xi},
        {"amplitude": amp * err[1], "xi": xi * xi * err[0]},
    )


def fit_quadratic_log(sizes, values) -> FitResult:
    """Fit y = a ln|A| + c (ln|A|)^2 + b (the boundary entanglement form)."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.asarray(values, dtype=float)
    if x.size < 4:
        raise ValueError("quadratic log fit needs at least 4 points")
    design = np.column_stack([x, x * x, np.ones_like(x)])
    coef, err = _lstsq_with_errors(design, y)
    return FitResult(
        "quadratic_log",
        {"a": coef[0], "c": coef[1], "b": coef[2]},
        {"a": err[0], "c": err[1], "b": err[2]},
    )


def _zero_crossings(q: np.ndarray, diff: np.ndarray) -> list[float]:
    out = []
    for k in range(len(q) - 1):
        if diff[k] == 0:
            out.append(float(q[k]))
        elif diff[k] * diff[k + 1] < 0:
            t = diff[k] / (diff[k] - diff[k + 1])
            out.append(float(q[k] + t * (q[k + 1] - q[k])))
    return out


def fit_crossing(curves: dict) -> FitResult:
    """Transition point from order-parameter curves at different sizes.

    The effective size exponent of each adjacent size pair,
    x(q) = ln(O_{L2}/O_{L1}) / ln(L2/L1), runs from 1 (extensive order)
    to 0 (size-independent); pairs of exponent curves intersect at the
    transition.  With only two sizes (a single exponent curve) the
    estimate is where x crosses 1/2.
    """
    sizes = sorted(curves)
    if len(sizes) < 2:
        raise ValueError("crossing fit needs at least two sizes")
    grid = None
    exponents = []
    for l1, l2 in zip(sizes, sizes[1:]):
        q1, v1 = (np.asarray(a, dtype=float) for a in curves[l1])
        q2, v2 = (np.asarray(a, dtype=float) for a in curves[l2])
        if q1.shape != q2.shape or not np.allclose(q1, q2):
            raise ValueError("crossing fit needs a common sweep grid")
        if (v1 <= 0).any() or (v2 <= 0).any():
            raise ValueError("order parameter must be positive for the exponent curves")
        grid = q1
        exponents.append(np.log(v2 / v1) / math.log(l2 / l1))
    crossings = []
    for x1, x2 in zip(exponents, exponents[1:]):
        crossings += _zero_crossings(grid, x1 - x2)
    if not crossings:
        # fall back to the half-exponent point of every pair curve
        for x in exponents:
            crossings += _zero_crossings(grid, x - 0.5)
    if not crossings:
        raise ValueError("curves do not cross on the grid")
    arr = np.asarray(crossings)
    err = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return FitResult("crossing_point", {"q_c": float(arr.mean())}, {"q_c": err})


def fit_scaling(rows, model: str) -> FitResult:
    """Dispatch on runner rows: dicts with the sweep coordinate and 'mean'."""
    if model == "log_growth":
        pts = sorted((r["lx"], r["mean"]) for r in rows)
        return fit_log_growth([p[0] for p in pts], [p[1] for p in pts])
    if model == "exp_decay":
        pts = sorted((r["arg"], r["mean"]) for r in rows)
        return fit_exp_decay([p[0] for p in pts], [p[1] for p in pts])
    if model == "quadratic_log":
        pts = sorted((r["arg"], r["mean"]) for r in rows)
        return fit_quadratic_log([p[0] for p in pts], [p[1] for p in pts])
    if model == "crossing_point":
        curves = {}
        for r in rows:
            curves.setdefault(r["lx"], []).append((r["q"], r["mean"]))
        return fit_crossing(
            {L: tuple(zip(*sorted(pts))) for L, pts in curves.items()}
        )
    raise ValueError(f"unknown fit model {model!r}")
