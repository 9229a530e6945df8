"""
One-dimensional diagonal-norm SBP operators of interior order 2, 4, 6.

Each operator set provides the quadrature (norm) matrix H, the first
derivative D1, a variable-coefficient narrow-stencil second derivative
D2(b), and boundary-derivative rows S-hat, on a uniform grid that
includes both endpoints.

The second derivative is assembled from its integration-by-parts
skeleton plus a remainder built from forward undivided differences,

    H D2(b) = -D1^T H b D1 - R(b) - e0 e0^T b S + eN eN^T b S,
    R(b)    = sum_alpha (1/h) Dt_a^T B_a(b) Dt_a,

where B_a(b) are nonnegative moving averages of b.  With S equal to the
first/last rows of D1 the operator is fully compatible; the remainder
weights are chosen so that the interior stencil is narrow (bandwidth
2q+1) and reproduces the classical variable-coefficient stencils.

Coefficient tables are derived exactly (see tools/derive_coefficients.py)
and are never trusted: certify_operator_set runs the invariant battery.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._coefficients import TABLES

_MIN_POINTS = {2: 3, 4: 8, 6: 12}


def _binom_row(alpha):
    """Forward undivided difference stencil of order alpha."""
    return np.array([(-1) ** (alpha - m) * math.comb(alpha, m)
                     for m in range(alpha + 1)], dtype=float)


@dataclass(frozen=True)
class OperatorSet1D:
    """Immutable bundle of 1D SBP operators for one order and grid size."""

    order: int
    n_points: int
    spacing: float
    norm_weights: np.ndarray
    first_weight: float
    d1: np.ndarray
    boundary_deriv: np.ndarray
    e_left: np.ndarray
    e_right: np.ndarray
    fully_compatible: bool
    # Remainder data: {alpha: (stencil, gamma-weights)}, scaled by 1/h on use.
    gamma: dict = field(repr=False, default_factory=dict)

    @property
    def interior_halfwidth(self):
        return self.order // 2

    @property
    def closure_width(self):
        return self.order


def build_operator_set(order, n_points, spacing, fully_compatible=True):
    """Construct an SBP operator set on n_points uniform grid points.

    Raises ValueError for unsupported order, too few points (left and
    right boundary closures may not overlap), or non-positive spacing.
    """
    if order not in TABLES:
        raise ValueError(f"unsupported SBP order {order}; choose 2, 4 or 6")
    if n_points < _MIN_POINTS[order]:
        raise ValueError(
            f"order {order} needs at least {_MIN_POINTS[order]} points, "
            f"got {n_points}")
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")

    tab = TABLES[order]
    n, h = n_points, float(spacing)
    q = order // 2
    w = order  # closure rows / nontrivial norm weights per end

    hw = np.ones(n)
    hw[:w] = [float(v) for v in tab["h"]]
    hw[n - w:] = hw[:w][::-1]
    hw *= h

    d1 = np.zeros((n, n))
    interior = np.array([float(v) for v in tab["d1_interior"]])
    for i in range(w, n - w):
        d1[i, i - q:i + q + 1] = interior
    closure = np.array([[float(v) for v in row] for row in tab["d1_closure"]])
    d1[:w, :w + q] = closure
    d1[n - w:, n - w - q:] = -closure[::-1, ::-1]
    d1 /= h

    s = np.zeros((n, n))
    if fully_compatible:
        s[0], s[n - 1] = d1[0], d1[n - 1]
    else:
        srow = np.array([float(v) for v in tab["s_row"]]) / h
        s[0, :q + 2] = srow
        s[n - 1, n - q - 2:] = -srow[::-1]

    e0 = np.zeros(n)
    e0[0] = 1.0
    en = np.zeros(n)
    en[-1] = 1.0

    gamma = {a: (_binom_row(a), np.array([float(v) for v in g]))
             for a, g in tab["gamma"].items()}

    for arr in (hw, d1, s, e0, en):
        arr.flags.writeable = False
    return OperatorSet1D(
        order=order, n_points=n, spacing=h, norm_weights=hw,
        first_weight=float(hw[0]), d1=d1, boundary_deriv=s,
        e_left=e0, e_right=en, fully_compatible=fully_compatible,
        gamma=gamma)


# ---------------------------------------------------------------------------
# Vectorized application along an arbitrary axis.


_D1_FAST = {}


def _d1_fast_data(ops):
    """Stencil + closure-block split of D1 for large grids."""
    key = id(ops)
    hit = _D1_FAST.get(key)
    if hit is not None and hit[0] is ops:
        return hit[1]
    n, w, q = ops.n_points, ops.order, ops.order // 2
    d1 = ops.d1
    s = d1[n // 2, n // 2 - q:n // 2 + q + 1].copy()
    data = {
        "stencil_conv": s[::-1].copy(),       # correlation kernel for D1
        "stencil_conv_t": s.copy(),           # D1 interior is antisymmetric
        "left": d1[:w, :w + q].T.copy(),
        "right": d1[n - w:, n - w - q:].T.copy(),
        "t_left": d1[:w + 2 * q, :w + q].copy(),
        "t_right": d1[n - w - 2 * q:, n - w - q:].copy(),
    }
    _D1_FAST[key] = (ops, data)
    return data


def _apply_d1_any(ops, u, axis, transpose):
    u = np.asarray(u)
    if u.shape[axis] != ops.n_points:
        raise ValueError("axis length does not match operator size")
    n, w, q = ops.n_points, ops.order, ops.order // 2
    if n < 2 * (w + 2 * q):
        contract = 0 if transpose else 1
        return np.moveaxis(np.tensordot(u, ops.d1, axes=(axis, contract)),
                           -1, axis)
    from scipy.ndimage import convolve1d

    d = _d1_fast_data(ops)
    ul = np.ascontiguousarray(np.moveaxis(u, axis, -1))
    kern = d["stencil_conv_t"] if transpose else d["stencil_conv"]
    out = convolve1d(ul, kern, axis=-1, mode="constant")
    if transpose:
        out[..., :w + q] = ul[..., :w + 2 * q] @ d["t_left"]
        out[..., n - w - q:] = ul[..., n - w - 2 * q:] @ d["t_right"]
    else:
        out[..., :w] = ul[..., :w + q] @ d["left"]
        out[..., n - w:] = ul[..., n - w - q:] @ d["right"]
    return np.moveaxis(out, -1, axis)


def apply_d1(ops, u, axis=-1):
    """D1 u along the given axis."""
    return _apply_d1_any(ops, u, axis, transpose=False)


def apply_d1_transpose(ops, u, axis=-1):
    """D1^T u along the given axis (used by transposed-traction SATs)."""
    return _apply_d1_any(ops, u, axis, transpose=True)


def apply_remainder(ops, b, u, axis=-1):
    """R(b) u along the given axis, per grid line.

    b and u have the same shape; the remainder acts independently on
    each line along `axis` with that line's coefficient samples.
    """
    b = np.asarray(b, dtype=float)
    u = np.asarray(u, dtype=float)
    if b.shape != u.shape or u.shape[axis] != ops.n_points:
        raise ValueError("shape mismatch in remainder application")
    from scipy.ndimage import correlate1d

    bl = np.ascontiguousarray(np.moveaxis(b, axis, -1))
    ul = np.ascontiguousarray(np.moveaxis(u, axis, -1))
    n = ops.n_points
    out = np.zeros_like(ul)
    scratch = np.zeros_like(ul)
    for alpha, (nu, g) in ops.gamma.items():
        width = alpha + 1
        nrows = n - alpha
        # diff[r] = sum_m nu[m] u[r+m]; likewise the coefficient average
        org = -(width // 2)
        diff = correlate1d(ul, nu, axis=-1, mode="constant",
                           origin=org)[..., :nrows]
        diff = diff * correlate1d(bl, g, axis=-1, mode="constant",
                                  origin=org)[..., :nrows]
        # adjoint scatter: out[r+m] += nu[m] diff[r]
        scratch[..., :nrows] = diff
        scratch[..., nrows:] = 0.0
        out += correlate1d(scratch, nu[::-1], axis=-1, mode="constant",
                           origin=width - 1 - width // 2)
    out /= ops.spacing
    return np.moveaxis(out, -1, axis)


def apply_d2(ops, b, u, axis=-1):
    """Narrow-stencil D2(b) u along the given axis, per grid line."""
    b = np.asarray(b, dtype=float)
    u = np.asarray(u, dtype=float)
    if b.shape[axis] != ops.n_points or u.shape[axis] != ops.n_points:
        raise ValueError("coefficient/argument length mismatch")
    if b.shape != u.shape:
        b = np.broadcast_to(b, u.shape)
    wide = apply_d1(ops, b * apply_d1(ops, u, axis), axis)
    rem = apply_remainder(ops, b, u, axis)
    res = wide - np.moveaxis(
        np.moveaxis(rem, axis, -1) / ops.norm_weights, -1, axis)
    if not ops.fully_compatible:
        # Differs from the fully compatible operator in rows 0 and N only.
        sl0 = [slice(None)] * u.ndim
        sl0[axis] = 0
        slN = [slice(None)] * u.ndim
        slN[axis] = ops.n_points - 1
        d = ops.boundary_deriv - _fc_rows(ops)
        corr0 = np.moveaxis(u, axis, -1) @ d[0]
        corrN = np.moveaxis(u, axis, -1) @ d[-1]
        res[tuple(sl0)] -= b[tuple(sl0)] * corr0 / ops.norm_weights[0]
        res[tuple(slN)] += b[tuple(slN)] * corrN / ops.norm_weights[-1]
    return res


def _fc_rows(ops):
    s = np.zeros_like(ops.boundary_deriv)
    s[0], s[-1] = ops.d1[0], ops.d1[-1]
    return s


def d2_dense(ops, b):
    """Dense D2(b) matrix (verification-scale use only)."""
    n = ops.n_points
    return apply_d2(ops, np.broadcast_to(np.asarray(b, float), (n, n)),
                    np.eye(n), axis=-1).T


def extract_remainder(ops, b):
    """Recompose the dense remainder matrix R(b) from the SBP identity."""
    b = np.asarray(b, dtype=float)
    if b.shape != (ops.n_points,):
        raise ValueError("coefficient length mismatch")
    H = np.diag(ops.norm_weights)
    D2 = d2_dense(ops, b)
    S = ops.boundary_deriv
    R = (-H @ D2 - ops.d1.T @ H @ np.diag(b) @ ops.d1
         - np.outer(ops.e_left, b[0] * S[0])
         + np.outer(ops.e_right, b[-1] * S[-1]))
    return R


# ---------------------------------------------------------------------------
# Certification.


def _check(report, name, residual, tol):
    report[name] = {"residual": float(residual), "tol": tol,
                    "passed": bool(residual <= tol)}


def certify_operator_set(ops, n_coeff_samples=8, seed=0):
    """Run the invariant battery; returns a report dict.

    report['passed'] is False if any check fails; individual entries
    carry residuals and tolerances.
    """
    report = {}
    n, h, q, w = ops.n_points, ops.spacing, ops.order // 2, ops.order
    H = np.diag(ops.norm_weights)

    _check(report, "norm_positive",
           max(0.0, -ops.norm_weights.min()) / h, 0.0)
    _check(report, "norm_symmetric",
           np.abs(ops.norm_weights - ops.norm_weights[::-1]).max() / h, 1e-13)
    _check(report, "norm_sum",
           abs(ops.norm_weights.sum() - (n - 1) * h) / ((n - 1) * h), 1e-13)

    sbp = (H @ ops.d1 + ops.d1.T @ H
           + np.outer(ops.e_left, ops.e_left)
           - np.outer(ops.e_right, ops.e_right))
    _check(report, "sbp_identity", np.abs(sbp).max() * h, 1e-13)

    x = np.arange(n) * h
    res_b = res_i = 0.0
    for p in range(2 * q + 1):
        exact = p * x ** (p - 1) if p else np.zeros(n)
        got = ops.d1 @ x ** p
        err = np.abs(got - exact) / max(1.0, np.abs(exact).max())
        if p <= q:
            res_b = max(res_b, err[:w].max(), err[n - w:].max())
        if n > 2 * w:  # grids this small are all boundary closure
            res_i = max(res_i, err[w:n - w].max())
    _check(report, "d1_boundary_accuracy", res_b * h, 1e-12)
    _check(report, "d1_interior_accuracy", res_i * h, 1e-12)

    srow_res = np.abs(ops.boundary_deriv[1:-1]).max() if n > 2 else 0.0
    _check(report, "boundary_deriv_rows_only_ends", srow_res, 0.0)
    if ops.fully_compatible:
        _check(report, "fully_compatible_rows",
               max(np.abs(ops.boundary_deriv[0] - ops.d1[0]).max(),
                   np.abs(ops.boundary_deriv[-1] - ops.d1[-1]).max()), 0.0)
    else:
        res_s = 0.0
        for p in range(q + 2):
            exact = p * x ** (p - 1) if p else np.zeros(n)
            got = ops.boundary_deriv @ x ** p
            scale = max(1.0, np.abs(exact).max())
            res_s = max(res_s, abs(got[0] - exact[0]) / scale,
                        abs(got[-1] - exact[-1]) / scale)
        _check(report, "boundary_deriv_accuracy", res_s * h, 1e-12)

    rng = np.random.default_rng(seed)
    coeffs = [np.ones(n), 1.0 + np.arange(n) * h]
    coeffs += [rng.random(n) for _ in range(n_coeff_samples)]
    sym = psd = recomp = bandw = 0.0
    for b in coeffs:
        R = extract_remainder(ops, b)
        scale = max(np.abs(R).max(), 1e-300)
        sym = max(sym, np.abs(R - R.T).max() / scale)
        eigs = np.linalg.eigvalsh(0.5 * (R + R.T))
        psd = max(psd, -eigs.min() / max(eigs.max(), 1e-300))
        D2 = d2_dense(ops, b)
        rebuilt = -np.linalg.solve(
            H, R + ops.d1.T @ H @ np.diag(b) @ ops.d1
            + np.outer(ops.e_left, b[0] * ops.boundary_deriv[0])
            - np.outer(ops.e_right, b[-1] * ops.boundary_deriv[-1]))
        recomp = max(recomp,
                     np.abs(D2 - rebuilt).max() / max(np.abs(D2).max(), 1.0))
        # Pure-interior rows: wide-part bandwidth only collapses once the
        # first-derivative closure rows are out of reach.
        for i in range(w + q, n - w - q):
            row = D2[i].copy()
            row[i - q:i + q + 1] = 0.0
            bandw = max(bandw, np.abs(row).max() * h * h)
    _check(report, "remainder_symmetry", sym, 1e-14)
    _check(report, "remainder_psd", psd, 1e-10)
    _check(report, "d2_recomposition", recomp, 1e-12)
    _check(report, "d2_interior_narrow", bandw, 1e-13)

    # Interior exactness: constant coefficient, quadratic argument.
    d2u = apply_d2(ops, np.ones(n), x ** 2)
    _check(report, "d2_quadratic_interior",
           np.abs(d2u[w:n - w] - 2.0).max() if n > 2 * w else 0.0, 1e-11)

    report["passed"] = all(v["passed"] for k, v in report.items()
                           if isinstance(v, dict))
    return report


def dump_operator_csv(ops, path, b=None):
    """Dump dense operator matrices as CSV for external cross-validation."""
    b = np.ones(ops.n_points) if b is None else np.asarray(b, float)
    mats = {"H": np.diag(ops.norm_weights), "D1": ops.d1,
            "S": ops.boundary_deriv, "D2": d2_dense(ops, b),
            "R": extract_remainder(ops, b)}
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["matrix", "row"]
                    + [f"c{j}" for j in range(ops.n_points)])
        for name, m in mats.items():
            for i, row in enumerate(m):
                wr.writerow([name, i] + [f"{v:.17g}" for v in row])
