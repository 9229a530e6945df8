"""
Material fields for anisotropic (Cosserat) elasticity.

Stiffness tensors are stored as full 16-component per-point tables
C[..., I, J, K, L]; only the major symmetry C_IJKL = C_KLIJ is assumed.
Transformation to the reference domain mixes the first and third
indices with the transformation gradient:

    c[i, J, k, L] = J F_Ii C_IJKL F_Kk,   varrho = J rho,

which retains the major symmetry (in the pair sense) but generally
breaks the minor one.  Christoffel speeds drive time-step selection and
slowness-surface output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StiffnessField:
    C: np.ndarray    # (..., 2, 2, 2, 2)
    rho: np.ndarray  # (...)


@dataclass(frozen=True)
class TransformedStiffness:
    c: np.ndarray       # (..., i, J, k, L)
    varrho: np.ndarray  # (...)


def _check_isotropic_psd(lam, mu, d=2):
    if mu < 0 or lam + 2.0 * mu / d < 0:
        raise ValueError(
            f"isotropic tensor not PSD: mu={mu}, lambda+2mu/d={lam + 2 * mu / d}")


def isotropic_stiffness(lam, mu, rho=1.0):
    """Constant isotropic stiffness; major and minor symmetric."""
    _check_isotropic_psd(lam, mu)
    delta = np.eye(2)
    C = (lam * np.einsum("IJ,KL->IJKL", delta, delta)
         + mu * (np.einsum("IK,JL->IJKL", delta, delta)
                 + np.einsum("IL,JK->IJKL", delta, delta)))
    return StiffnessField(C=C, rho=np.asarray(float(rho)))


def mms_material(points):
    """Smooth anisotropic manufactured-solution material.

    rho = 2 + sin((X1+X2)/2); C_IJKL takes the alpha branch when I=K
    and J=L and the beta branch otherwise, both sums of sinusoids in
    the index-weighted coordinates (1-based index values).
    """
    X = np.asarray(points, dtype=float)
    X1, X2 = X[..., 0], X[..., 1]
    C = np.empty(X1.shape + (2, 2, 2, 2))
    for I in range(2):
        for J in range(2):
            for K in range(2):
                for L in range(2):
                    i, j, k, l = I + 1, J + 1, K + 1, L + 1
                    if I == K and J == L:
                        val = (8.0 + np.sin(i * X1 + j * X2)
                               + 0.5 * np.sin(k * X1 - l * X2))
                    else:
                        val = (0.125 * (np.sin(i * X1 + j * X2)
                                        + np.sin(k * X1 + l * X2))
                               + 0.0625 * (np.sin(i * X1 - j * X2)
                                           + np.sin(k * X1 - l * X2)))
                    C[..., I, J, K, L] = val
    rho = 2.0 + np.sin(0.5 * (X1 + X2))
    return StiffnessField(C=C, rho=rho)


def random_stiffness(seed, points):
    """Per-point uniform random stiffness with major symmetry.

    Independent components ~ U(0,1) for index pairs (IJ) <= (KL), the
    rest copied; +4 added on the I=K, J=L branch; rho = 1 + U(0,1).
    """
    X = np.asarray(points, dtype=float)
    shape = X.shape[:-1]
    rng = np.random.default_rng(seed)
    C = np.empty(shape + (2, 2, 2, 2))
    pairs = [(I, J) for I in range(2) for J in range(2)]
    for a, (I, J) in enumerate(pairs):
        for b, (K, L) in enumerate(pairs):
            if b < a:
                continue
            val = rng.random(shape)
            if (I, J) == (K, L):
                val = val + 4.0
            C[..., I, J, K, L] = val
            C[..., K, L, I, J] = val
    rho = 1.0 + rng.random(shape)
    return StiffnessField(C=C, rho=rho)


def sample_stiffness(field, shape):
    """Broadcast a (possibly constant) stiffness field to a grid shape."""
    C = np.broadcast_to(field.C, shape + (2, 2, 2, 2))
    rho = np.broadcast_to(field.rho, shape)
    return StiffnessField(C=C, rho=rho)


def transform_stiffness(field, metrics):
    """Pull the material back to the reference domain."""
    shape = metrics.J.shape
    C = np.broadcast_to(field.C, shape + (2, 2, 2, 2))
    rho = np.broadcast_to(field.rho, shape)
    c = np.einsum("...Ii,...IJKL,...Kk,...->...iJkL",
                  metrics.F, C, metrics.F, metrics.J, optimize=True)
    return TransformedStiffness(c=c, varrho=metrics.J * rho)


def christoffel_matrix(C, rho, xi):
    """Gamma_JL = xi_I C_IJKL xi_K / rho for one or many points."""
    return np.einsum("I,...IJKL,K->...JL", xi, np.asarray(C, float), xi) \
        / np.asarray(rho, float)[..., None, None]


def christoffel_speeds(C, rho, xi, tol=1e-10):
    """Phase speeds (quasi-S, quasi-P) along the unit direction xi."""
    xi = np.asarray(xi, dtype=float)
    if abs(np.linalg.norm(xi) - 1.0) > 1e-10:
        raise ValueError("direction must be a unit vector")
    G = christoffel_matrix(C, rho, xi)
    Gs = 0.5 * (G + np.swapaxes(G, -1, -2))
    eigs = np.linalg.eigvalsh(Gs)
    scale = max(float(np.abs(eigs).max()), 1e-300)
    if eigs.min() < -tol * scale:
        raise ValueError(
            f"non-physical material along {xi}: eigenvalue {eigs.min():.3e}")
    return np.sqrt(np.clip(eigs, 0.0, None))


def _unit_directions(n_dirs):
    th = np.linspace(0.0, 2.0 * np.pi, n_dirs, endpoint=False)
    return np.stack([np.cos(th), np.sin(th)], axis=-1)


def max_wave_speed(transformed, n_dirs=360, tol=1e-10):
    """Largest quasi-P speed of the transformed material.

    Maximum over grid points and uniformly sampled unit directions;
    monotone non-decreasing when n_dirs is refined by integer factors.
    """
    if n_dirs < 8:
        raise ValueError("need at least 8 direction samples")
    c = transformed.c
    rho = transformed.varrho
    vmax = 0.0
    for xi in _unit_directions(n_dirs):
        G = christoffel_matrix(c, rho, xi)
        a = G[..., 0, 0]
        d = G[..., 1, 1]
        b = 0.5 * (G[..., 0, 1] + G[..., 1, 0])
        disc = np.sqrt(0.25 * (a - d) ** 2 + b ** 2)
        lam_max = 0.5 * (a + d) + disc
        lam_min = 0.5 * (a + d) - disc
        if lam_min.min() < -tol * max(lam_max.max(), 1e-300):
            raise ValueError("non-physical transformed material")
        vmax = max(vmax, float(np.sqrt(max(lam_max.max(), 0.0))))
    return vmax


def slowness_surface(C, rho, n_dirs=360):
    """Closed slowness polylines s = xi / v(xi), slow branch first."""
    rows = []
    for branch in (0, 1):
        poly = []
        for xi in _unit_directions(n_dirs):
            v = christoffel_speeds(C, rho, xi)[branch]
            poly.append(xi / v)
        poly.append(poly[0])
        rows.append(np.asarray(poly))
    return rows


def dump_slowness_csv(C, rho, path, n_dirs=360):
    """CSV schema: branch, angle, s1, s2 (closed polylines)."""
    polys = slowness_surface(C, rho, n_dirs)
    th = np.append(np.linspace(0.0, 2 * np.pi, n_dirs, endpoint=False),
                   0.0)
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["branch", "angle", "s1", "s2"])
        for b, poly in enumerate(polys):
            for ang, (s1, s2) in zip(th, poly):
                wr.writerow([b, f"{ang:.17g}", f"{s1:.17g}", f"{s2:.17g}"])
