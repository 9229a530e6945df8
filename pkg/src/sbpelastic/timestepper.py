"""
Explicit time integration for the semi-discrete elastic system.

The second-order system is advanced as the first-order pair
(u, v = u') with the classical fourth-order Runge-Kutta scheme.  The
step size comes from the usual CFL reasoning on the reference domain:
the transformed material carries its own wave speeds, so

    dt = cfl * min(h1, h2) / v_max.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elasticity import TransformedStiffness, max_wave_speed

# Stability margins shrink with order because the operator spectrum grows.
DEFAULT_CFL = {2: 1.0, 4: 0.8, 6: 0.6}


class UnstableRunError(RuntimeError):
    """Raised when the solution stops being finite."""


def estimate_dt(op, cfl=None, n_dirs=360):
    """Stable step size for an ElasticOperator.

    cfl defaults to a per-order margin; experiments that compare
    discretizations pin an explicit value instead.
    """
    order = op.domain.blocks[0].ops1.order
    cfl = DEFAULT_CFL[order] if cfl is None else float(cfl)
    if cfl <= 0:
        raise ValueError(f"cfl must be positive, got {cfl}")
    dt = np.inf
    for b, blk in enumerate(op.domain.blocks):
        t = TransformedStiffness(c=op._c[b], varrho=op._varrho[b])
        v = max_wave_speed(t, n_dirs=n_dirs)
        dt = min(dt, cfl * min(blk.grid.h1, blk.grid.h2) / v)
    return float(dt)


@dataclass
class Trace:
    """Time series collected during a run."""
    times: np.ndarray
    energy: list          # list of energy-part dicts (may be empty)
    receivers: np.ndarray  # (n_steps+1, n_receivers, 4): u1 u2 v1 v2


def _sample_receivers(op, u, v, receivers):
    out = np.empty((len(receivers), 4))
    for r, (b, i, j) in enumerate(receivers):
        out[r] = [u[b][0, i, j], u[b][1, i, j], v[b][0, i, j], v[b][1, i, j]]
    return out


def rk4_advance(op, u, v, dt, n_steps, t0=0.0, boundary_data=None,
                forcing=None, receivers=(), record_energy=False):
    """Advance (u, v) by n_steps of size dt; returns (u, v, Trace).

    receivers: (block, i, j) grid indices sampled every step.
    record_energy: collect the energy decomposition every step
    (meaningful for homogeneous data).
    """
    u = [x.copy() for x in u]
    v = [x.copy() for x in v]
    times = t0 + dt * np.arange(n_steps + 1)
    energy = []
    rec = np.empty((n_steps + 1, len(receivers), 4))

    def rhs(t, uu, vv):
        return vv, op.apply(uu, t=t, boundary_data=boundary_data,
                            forcing=forcing)

    def axpy(xs, a, ys):
        return [x + a * y for x, y in zip(xs, ys)]

    for step in range(n_steps + 1):
        if receivers:
            rec[step] = _sample_receivers(op, u, v, receivers)
        if record_energy:
            energy.append(op.energy_parts(u, v))
        if step == n_steps:
            break
        t = times[step]
        k1u, k1v = rhs(t, u, v)
        k2u, k2v = rhs(t + 0.5 * dt, axpy(u, 0.5 * dt, k1u),
                       axpy(v, 0.5 * dt, k1v))
        k3u, k3v = rhs(t + 0.5 * dt, axpy(u, 0.5 * dt, k2u),
                       axpy(v, 0.5 * dt, k2v))
        k4u, k4v = rhs(t + dt, axpy(u, dt, k3u), axpy(v, dt, k3v))
        for b in range(len(u)):
            u[b] += (dt / 6.0) * (k1u[b] + 2 * k2u[b] + 2 * k3u[b] + k4u[b])
            v[b] += (dt / 6.0) * (k1v[b] + 2 * k2v[b] + 2 * k3v[b] + k4v[b])
        if not all(np.all(np.isfinite(x)) for x in u):
            raise UnstableRunError(
                f"non-finite solution after step {step + 1} (t={t + dt:g})")
    return u, v, Trace(times=times, energy=energy, receivers=rec)


def steps_for(t_final, dt):
    """Step count and adjusted dt that land exactly on t_final."""
    n = max(1, int(np.ceil(t_final / dt - 1e-12)))
    return n, t_final / n


def ricker(t, peak_frequency, delay=None):
    """Ricker wavelet, unit peak amplitude."""
    t0 = 1.0 / peak_frequency if delay is None else delay
    arg = (np.pi * peak_frequency * (np.asarray(t) - t0)) ** 2
    return (1.0 - 2.0 * arg) * np.exp(-arg)


def discrete_delta(block, point):
    """Bilinear point-source weights on the four enclosing nodes.

    Returns a list of (i, j, weight / (J * h1 * h2)) entries whose
    quadrature sum reproduces the zeroth moment of a delta at `point`
    in reference coordinates (x1, x2) of the block.
    """
    x1, x2 = point
    if not (0.0 <= x1 <= 1.0 and 0.0 <= x2 <= 1.0):
        raise ValueError("source point outside the reference block")
    g = block.grid
    i = min(int(x1 / g.h1), g.n1 - 2)
    j = min(int(x2 / g.h2), g.n2 - 2)
    a = x1 / g.h1 - i
    b = x2 / g.h2 - j
    entries = []
    for di, wi in ((0, 1 - a), (1, a)):
        for dj, wj in ((0, 1 - b), (1, b)):
            ii, jj = i + di, j + dj
            cell = block.metrics.J[ii, jj] * g.h1 * g.h2
            entries.append((ii, jj, wi * wj / cell))
    return entries
