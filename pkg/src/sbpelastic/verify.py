"""
Manufactured-solution verification and operator audits.

The manufactured displacement

    u1 = sin(2 X1 + 3 X2 - t),  u2 = sin(3 X1 + 2 X2 - 2 t)

is substituted into the elastic wave equation for either the smooth
anisotropic material (mms_material) or the unit isotropic one; the
induced forcing, velocity and boundary tractions are generated in
closed form with sympy and evaluated with numpy.  run_convergence
sweeps grid resolutions on the square-with-scatterer reference domain
and reports quadrature-weighted l2 errors and pairwise rates;
audit_self_adjointness checks the dense assembled operator for
symmetry and negative semidefiniteness.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import sympy as sp

from . import mesh
from .discretization import ElasticOperator, assemble_dense, constant_material
from .elasticity import isotropic_stiffness, mms_material
from .timestepper import UnstableRunError, estimate_dt, rk4_advance, steps_for

WAVELENGTH = 2.0 * np.pi / np.sqrt(13.0)
KINDS = ("anisotropic", "isotropic")


class _TimeHarmonicField:
    """Evaluator for a * cos(c t) + b * sin(c t) combinations.

    The MMS constituents are sinusoids of (X-phase - c t), so every
    derived field separates into finitely many temporal harmonics with
    spatial coefficient fields.  Coefficients are evaluated once per
    distinct grid and cached, which makes the per-step data cost
    negligible during time stepping.
    """

    def __init__(self, expr, symbols):
        from sympy.simplify.fu import TR10  # sum formulas only

        T, X1, X2 = symbols
        e = sp.expand(TR10(sp.expand(expr)))
        self._terms = []  # (frequency, is_sine, lambdified coefficient)
        residual = e
        for freq in (1, 2):
            for trig, is_sine in ((sp.cos, False), (sp.sin, True)):
                coeff = e.coeff(trig(freq * T))
                if coeff != 0:
                    residual -= coeff * trig(freq * T)
                    self._terms.append(
                        (freq, is_sine, sp.lambdify((X1, X2), coeff, "numpy")))
        if sp.expand(residual) != 0:
            raise ValueError("expression is not harmonic in time with "
                             "frequencies 1 and 2")
        self._cache = {}

    def __call__(self, t, X1, X2):
        # identify the grid by its memory layout; the stored reference
        # keeps the buffer alive so the key cannot be recycled
        key = (X1.__array_interface__["data"][0], X1.shape, X1.strides)
        hit = self._cache.get(key)
        if hit is None:
            shape = np.shape(X1)
            hit = (X1, [(freq, is_sine,
                         np.broadcast_to(np.asarray(fn(X1, X2), dtype=float),
                                         shape))
                        for freq, is_sine, fn in self._terms])
            self._cache[key] = hit
        out = np.zeros(np.shape(X1))
        for freq, is_sine, coeff in hit[1]:
            out += coeff * (np.sin(freq * t) if is_sine else np.cos(freq * t))
        return out


def _lambdify(expr, symbols):
    return _TimeHarmonicField(expr, symbols)


@dataclass(frozen=True)
class ManufacturedProblem:
    kind: str
    material: object            # points -> StiffnessField
    inner_bc: str
    _u: tuple
    _v: tuple
    _f: tuple
    _stress: tuple              # flat (I, J) row-major

    def displacement(self, t, X):
        X = np.asarray(X, dtype=float)
        return np.stack([f(t, X[..., 0], X[..., 1]) for f in self._u],
                        axis=-1)

    def velocity(self, t, X):
        X = np.asarray(X, dtype=float)
        return np.stack([f(t, X[..., 0], X[..., 1]) for f in self._v],
                        axis=-1)

    def forcing(self, t, X):
        X = np.asarray(X, dtype=float)
        return np.stack([f(t, X[..., 0], X[..., 1]) for f in self._f],
                        axis=-1)

    def traction(self, t, X, normal):
        X = np.asarray(X, dtype=float)
        s = np.stack([f(t, X[..., 0], X[..., 1]) for f in self._stress],
                     axis=-1).reshape(X.shape[:-1] + (2, 2))
        return np.einsum("...I,...IJ->...J", np.asarray(normal, float), s)

    def boundary_data(self, domain):
        data = {}
        for key, tag in domain.face_tags.items():
            if tag == "robin":
                data[key] = lambda t, X, n: self.traction(t, X, n)
            else:
                data[key] = lambda t, X, n: self.displacement(t, X)
        return data

    def initial_state(self, domain):
        u = [np.moveaxis(self.displacement(0.0, b.grid.nodes), -1, 0)
             for b in domain.blocks]
        v = [np.moveaxis(self.velocity(0.0, b.grid.nodes), -1, 0)
             for b in domain.blocks]
        return u, v


@functools.lru_cache(maxsize=None)
def manufactured_problem(kind):
    if kind not in KINDS:
        raise ValueError(f"unknown manufactured-solution kind {kind!r}")
    X1, X2, T = sp.symbols("X1 X2 T", real=True)
    Xs = (X1, X2)
    u = (sp.sin(2 * X1 + 3 * X2 - T), sp.sin(3 * X1 + 2 * X2 - 2 * T))

    if kind == "anisotropic":
        rho = 2 + sp.sin((X1 + X2) / 2)

        def C(I, J, K, L):
            i, j, k, l = I + 1, J + 1, K + 1, L + 1
            if I == K and J == L:
                return (8 + sp.sin(i * X1 + j * X2)
                        + sp.sin(k * X1 - l * X2) / 2)
            return ((sp.sin(i * X1 + j * X2) + sp.sin(k * X1 + l * X2)) / 8
                    + (sp.sin(i * X1 - j * X2)
                       + sp.sin(k * X1 - l * X2)) / 16)

        material = mms_material
        inner_bc = "displacement"
    else:
        rho = sp.Integer(1)

        def C(I, J, K, L):
            def d(a, b):
                return 1 if a == b else 0
            return d(I, J) * d(K, L) + d(I, K) * d(J, L) + d(I, L) * d(J, K)

        material = constant_material(isotropic_stiffness(1.0, 1.0, rho=1.0))
        inner_bc = "robin"

    stress = [[sp.expand(sum(C(I, J, K, L) * sp.diff(u[L], Xs[K])
                             for K in range(2) for L in range(2)))
               for J in range(2)] for I in range(2)]
    force = [sp.expand(rho * sp.diff(u[J], T, 2)
                       - sum(sp.diff(stress[I][J], Xs[I]) for I in range(2)))
             for J in range(2)]
    syms = (T, X1, X2)
    return ManufacturedProblem(
        kind=kind, material=material, inner_bc=inner_bc,
        _u=tuple(_lambdify(e, syms) for e in u),
        _v=tuple(_lambdify(sp.diff(e, T), syms) for e in u),
        _f=tuple(_lambdify(e, syms) for e in force),
        _stress=tuple(_lambdify(stress[I][J], syms)
                      for I in range(2) for J in range(2)))


def isotropic_forcing_closed_form(t, X):
    """Independent closed form for the unit isotropic material.

    f_J = rho u''_J - (lam + mu) d_J (div u) - mu lap u_J with
    lam = mu = rho = 1.
    """
    X = np.asarray(X, dtype=float)
    X1, X2 = X[..., 0], X[..., 1]
    s1 = np.sin(2 * X1 + 3 * X2 - t)
    s2 = np.sin(3 * X1 + 2 * X2 - 2 * t)
    # div u = 2 cos(p1) + 2 cos(p2); d/dX1(div u) = -4 sin p1 - 6 sin p2
    f1 = -1.0 * s1 - 2.0 * (-4.0 * s1 - 6.0 * s2) - (-13.0 * s1)
    f2 = -4.0 * s2 - 2.0 * (-6.0 * s1 - 4.0 * s2) - (-13.0 * s2)
    return np.stack([f1, f2], axis=-1)


# ---------------------------------------------------------------------------
# Error measures.


def l2_error(domain, numeric, exact):
    """Quadrature-weighted error sqrt(sum_J <e_J, e_J>_{JH})."""
    total = 0.0
    for b, blk in enumerate(domain.blocks):
        e = np.asarray(numeric[b]) - np.asarray(exact[b])
        if e.shape != numeric[b].shape:
            raise ValueError("field shape mismatch")
        w = (blk.metrics.J * blk.ops1.norm_weights[:, None]
             * blk.ops2.norm_weights[None, :])
        total += float(np.sum(w * e * e))
    return math.sqrt(total)


def points_per_wavelength(domain, wavelength=WAVELENGTH):
    """Wavelength over the largest physical node spacing."""
    hmax = 0.0
    for blk in domain.blocks:
        nodes = blk.grid.nodes
        d1 = np.linalg.norm(np.diff(nodes, axis=0), axis=-1)
        d2 = np.linalg.norm(np.diff(nodes, axis=1), axis=-1)
        hmax = max(hmax, d1.max(), d2.max())
    return wavelength / hmax


# ---------------------------------------------------------------------------
# Convergence sweep.


def run_mms_case(kind, order, h_inv, stencil="narrow", cfl=0.5, t_final=1.0):
    """One sweep cell; returns (l2 error at t_final, ppwl)."""
    prob = manufactured_problem(kind)
    dom = mesh.build_reference_domain(h_inv + 1, order,
                                      inner_bc=prob.inner_bc)
    op = ElasticOperator(dom, prob.material,
                         wide_stencil=(stencil == "wide"))
    u, v = prob.initial_state(dom)
    n_steps, dt = steps_for(t_final, estimate_dt(op, cfl=cfl))
    u, v, _ = rk4_advance(op, u, v, dt, n_steps,
                          boundary_data=prob.boundary_data(dom),
                          forcing=prob.forcing)
    exact = [np.moveaxis(prob.displacement(t_final, b.grid.nodes), -1, 0)
             for b in dom.blocks]
    return l2_error(dom, u, exact), points_per_wavelength(dom)


def run_convergence(kind, order, resolutions=(40, 60, 80, 100, 120),
                    stencil="narrow", cfl=0.5, t_final=1.0, progress=None):
    """Resolution sweep; returns a list of report rows.

    Rows carry h_inv, ppwl, order, stencil, error, log10_error and the
    pairwise rate (nan for the first row); an unstable cell is reported
    with error nan and the sweep continues.
    """
    if list(resolutions) != sorted(set(resolutions)):
        raise ValueError("resolutions must be strictly ascending")
    rows = []
    prev = None
    for h_inv in resolutions:
        try:
            err, ppwl = run_mms_case(kind, order, h_inv, stencil=stencil,
                                     cfl=cfl, t_final=t_final)
        except UnstableRunError:
            err, ppwl = float("nan"), float("nan")
        rate = float("nan")
        if prev is not None and err == err and prev[1] == prev[1]:
            rate = math.log(prev[1] / err) / math.log(h_inv / prev[0])
        rows.append({"h_inv": h_inv, "ppwl": ppwl, "order": order,
                     "stencil": stencil, "error": err,
                     "log10_error": math.log10(err) if err == err
                     else float("nan"),
                     "rate": rate})
        if progress is not None:
            progress(rows[-1])
        prev = (h_inv, err)
    return rows


def average_rate(rows):
    rates = [r["rate"] for r in rows if r["rate"] == r["rate"]]
    if not rates:
        return float("nan")
    return float(np.mean(rates))


# ---------------------------------------------------------------------------
# Operator audits.


def audit_operator(op, max_dofs=40000):
    """Symmetry/definiteness report for the dense weighted operator."""
    A, w = assemble_dense(op, max_dofs=max_dofs)
    M = w[:, None] * A
    scale = float(np.abs(M).max())
    asym = float(np.abs(M - M.T).max() / scale)
    eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
    radius = float(np.abs(eigs).max())
    return {
        "n_dofs": op.n_dofs,
        "asymmetry_rel": asym,
        "max_eig": float(eigs.max()),
        "max_eig_scaled": float(eigs.max() / radius),
        "spectral_radius": radius,
    }


def two_block_audit_domain(order, n=35):
    """Curvilinear two-block domain with mixed BC kinds for audits."""
    b0 = mesh.build_block(mesh.annulus_map(1.0, 2.0, 0.0, np.pi / 2), n, n)
    b1 = mesh.build_block(mesh.annulus_map(1.0, 2.0, np.pi / 2, np.pi), n, n)
    tags = {(0, "west"): "robin", (0, "east"): "displacement",
            (0, "south"): "robin",
            (1, "west"): "robin", (1, "east"): "displacement",
            (1, "north"): "displacement"}
    return mesh.assemble_domain([b0, b1], tags, [(0, "north", 1, "south")],
                                order=order)
