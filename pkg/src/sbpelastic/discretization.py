"""
Multiblock SAT discretization of the elastic wave equation in
second-order displacement form.

On each block the transformed equation reads

    varrho u''_J = d_i ( c_iJkL d_k u_L ) + J f_J,

with varrho = J rho and c the reference-domain stiffness.  Same-axis
terms use the narrow variable-coefficient second derivative, cross
terms the first-derivative pair.  Boundary conditions (traction/Robin
and displacement) and interface coupling are imposed with simultaneous
approximation terms chosen so that the assembled spatial operator is
self-adjoint and negative semidefinite in the inner product weighted
by varrho and the quadrature; the semi-discrete energy

    E = kinetic + strain + remainder + boundary/interface corrections

is then exactly conserved for homogeneous data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import mesh
from .elasticity import sample_stiffness, transform_stiffness
from .sbp1d import apply_d1, apply_d1_transpose, apply_remainder


def constant_material(stiffness_field):
    """Adapt a constant StiffnessField to the per-point material protocol."""
    return lambda points: sample_stiffness(stiffness_field,
                                           np.shape(points)[:-1])


@dataclass(frozen=True)
class _FaceData:
    axis: int
    sign: float
    fsl: tuple             # slice tuple for (n1, n2) arrays
    fsl3: tuple            # slice tuple for (2, n1, n2) arrays
    hw_perp: float         # boundary quadrature weight, normal axis
    hface: np.ndarray      # (m,) tangential quadrature weights
    jhat: np.ndarray       # (m,) surface Jacobian
    normal: np.ndarray     # (m, 2) physical outward unit normal
    points: np.ndarray     # (m, 2) physical face coordinates
    cf: np.ndarray         # (m, 2, 2, 2, 2) transformed stiffness on face
    nu_cc: np.ndarray      # (m, 2, 2) nu_i c_iJkL nu_k (normal-normal block)
    penalty: np.ndarray = field(default=None)  # (m, 2, 2), boundary faces


class ElasticOperator:
    """Spatial operator u -> acceleration for a multiblock domain.

    material: callable mapping physical points (..., 2) to a
    StiffnessField evaluated there (see elasticity.constant_material
    for the constant case).  wide_stencil replaces the narrow same-axis
    second derivative with the first-derivative pair; boundary and
    interface treatment is identical.  beta >= 1 scales the
    displacement/interface penalty.
    """

    def __init__(self, domain, material, wide_stencil=False, beta=1.0,
                 impedance=0.0):
        if beta < 1.0:
            raise ValueError(f"penalty scaling beta must be >= 1, got {beta}")
        self.domain = domain
        self.wide_stencil = bool(wide_stencil)
        self.beta = float(beta)
        self.impedance = float(impedance)

        self._c = []
        self._ct = []       # index order (i, J, k, L, n1, n2), contiguous
        self._c_diag = []   # per axis i: (J, L, n1, n2) same-axis block
        self._varrho = []
        self._hw2d = []
        self.shapes = []
        for blk in domain.blocks:
            fld = material(blk.grid.nodes)
            t = transform_stiffness(fld, blk.metrics)
            if t.varrho.min() <= 0:
                raise ValueError("non-positive mass density")
            self._c.append(t.c)
            ct = np.ascontiguousarray(np.moveaxis(t.c, (-4, -3, -2, -1),
                                                  (0, 1, 2, 3)))
            self._ct.append(ct)
            self._c_diag.append([np.ascontiguousarray(ct[i, :, i])
                                 for i in range(2)])
            self._varrho.append(t.varrho)
            self._hw2d.append(blk.ops1.norm_weights[:, None]
                              * blk.ops2.norm_weights[None, :])
            self.shapes.append((2, blk.grid.n1, blk.grid.n2))
        self.n_dofs = sum(int(np.prod(s)) for s in self.shapes)

        self._faces = {}
        for bi, blk in enumerate(domain.blocks):
            for name in mesh.FACES:
                self._faces[(bi, name)] = self._build_face(bi, name)

    # -- face bookkeeping ---------------------------------------------------

    def _ops(self, bi):
        blk = self.domain.blocks[bi]
        return (blk.ops1, blk.ops2)

    def _build_face(self, bi, name):
        blk = self.domain.blocks[bi]
        axis, _, nu = mesh.FACES[name]
        fsl = mesh.face_slice(name)
        cf = self._c[bi][fsl]
        nu_cc = cf[:, axis, :, axis, :]
        tan_ops = self._ops(bi)[mesh.tangent_axis(name)]
        hw_perp = self._ops(bi)[axis].first_weight
        fd = _FaceData(
            axis=axis, sign=float(nu[axis]), fsl=fsl,
            fsl3=(slice(None),) + fsl, hw_perp=hw_perp,
            hface=tan_ops.norm_weights,
            jhat=blk.metrics.faces[name]["jhat"],
            normal=blk.metrics.faces[name]["normal"],
            points=blk.grid.nodes[fsl], cf=cf, nu_cc=nu_cc,
            penalty=2.0 * self.beta * nu_cc / hw_perp)
        return fd

    # -- state handling -----------------------------------------------------

    def zero_state(self):
        return [np.zeros(s) for s in self.shapes]

    def flatten(self, blocks):
        return np.concatenate([b.ravel() for b in blocks])

    def unflatten(self, x):
        out = []
        k = 0
        for s in self.shapes:
            m = int(np.prod(s))
            out.append(np.asarray(x)[k:k + m].reshape(s))
            k += m
        return out

    def weights(self):
        """Flat varrho-and-quadrature weight vector (the energy norm)."""
        return self.flatten([
            np.broadcast_to(self._varrho[b] * self._hw2d[b], self.shapes[b])
            for b in range(len(self.shapes))])

    # -- core differential pieces -------------------------------------------

    def _gradients(self, bi, ub):
        ops = self._ops(bi)
        return np.stack([apply_d1(ops[0], ub, axis=1),
                         apply_d1(ops[1], ub, axis=2)], axis=1)

    def _volume_apply(self, bi, ub, du):
        ops = self._ops(bi)
        hw = [ops[0].norm_weights[:, None], ops[1].norm_weights[None, :]]
        out = np.zeros_like(ub)
        for i in range(2):
            flux = np.einsum("JkLpq,Lkpq->Jpq", self._ct[bi][i], du,
                             optimize=True)
            out += apply_d1(ops[i], flux, axis=i + 1)
            if not self.wide_stencil:
                # same-axis narrow correction, batched over (J, L)
                b = self._c_diag[bi][i]
                rem = apply_remainder(ops[i], b,
                                      np.broadcast_to(ub[None], b.shape),
                                      axis=i + 2)
                out -= rem.sum(axis=1) / hw[i]
        return out

    def _face_traction(self, bi, name, du):
        """Surface-Jacobian-scaled traction on a face, shape (m, 2)."""
        fd = self._faces[(bi, name)]
        duf = du[(slice(None), slice(None)) + fd.fsl]  # (L, k, m)
        return fd.sign * np.einsum("mJkL,Lkm->mJ", fd.cf[:, fd.axis], duf)

    def _traction_transpose(self, bi, name, phi):
        """Adjoint of the scaled traction acting on face values phi (m, 2)."""
        fd = self._faces[(bi, name)]
        ops = self._ops(bi)
        shape = self.shapes[bi]
        out = np.zeros(shape)
        for k in range(2):
            vals = fd.sign * np.einsum("mLJ,mL->mJ",
                                       fd.cf[:, fd.axis, :, k, :], phi)
            w = np.zeros(shape)
            w[fd.fsl3] = vals.T
            out += apply_d1_transpose(ops[k], w, axis=k + 1)
        return out

    # -- right-hand side ----------------------------------------------------

    def apply(self, u, t=0.0, boundary_data=None, forcing=None):
        """Acceleration blocks for displacement blocks u.

        boundary_data: optional dict (block, face) -> g(t, points, normal)
        returning physical data, traction + impedance * u for Robin
        faces and prescribed displacement for displacement faces.
        forcing: optional f(t, points) -> (..., 2) physical body force.
        """
        boundary_data = boundary_data or {}
        du = [self._gradients(b, ub) for b, ub in enumerate(u)]
        out = [self._volume_apply(b, ub, du[b]) for b, ub in enumerate(u)]

        for (bi, name), tag in self.domain.face_tags.items():
            fd = self._faces[(bi, name)]
            g = boundary_data.get((bi, name))
            gv = (np.zeros_like(fd.points) if g is None
                  else np.asarray(g(t, fd.points, fd.normal), dtype=float))
            T = self._face_traction(bi, name, du[bi])
            uf = u[bi][fd.fsl3].T  # (m, 2)
            if tag == "robin":
                resid = T + fd.jhat[:, None] * (self.impedance * uf - gv)
                out[bi][fd.fsl3] -= (resid / fd.hw_perp).T
            else:  # displacement
                w = uf - gv
                out[bi] += (self._traction_transpose(
                    bi, name, fd.hface[:, None] * w) / self._hw2d[bi])
                pen = np.einsum("mJL,mL->mJ", fd.penalty, w)
                out[bi][fd.fsl3] -= (pen / fd.hw_perp).T

        for itf in self.domain.interfaces:
            self._interface_sat(itf, u, du, out)

        accel = []
        for b, ub in enumerate(u):
            o = out[b]
            if forcing is not None:
                fv = np.asarray(
                    forcing(t, self.domain.blocks[b].grid.nodes), dtype=float)
                o = o + self.domain.blocks[b].metrics.J * np.moveaxis(fv, -1, 0)
            accel.append(o / self._varrho[b])
        return accel

    def _interface_pieces(self, itf, u, du):
        """Jump, traction average and penalty in side-a ordering."""
        fa = self._faces[(itf.block_a, itf.face_a)]
        fb = self._faces[(itf.block_b, itf.face_b)]

        def to_a(arr):
            return arr[::-1] if itf.flip else arr

        ua = u[itf.block_a][fa.fsl3].T
        ub = to_a(u[itf.block_b][fb.fsl3].T)
        w = ua - ub
        Ta = self._face_traction(itf.block_a, itf.face_a, du[itf.block_a])
        Tb = to_a(self._face_traction(itf.block_b, itf.face_b,
                                      du[itf.block_b]))
        Z = 0.5 * self.beta * (fa.nu_cc / fa.hw_perp
                               + to_a(fb.nu_cc) / fb.hw_perp)
        return fa, fb, w, Ta, Tb, Z

    def _interface_sat(self, itf, u, du, out):
        fa, fb, w, Ta, Tb, Z = self._interface_pieces(itf, u, du)

        def from_a(arr):
            return arr[::-1] if itf.flip else arr

        resid_a = 0.5 * (Ta + Tb) + np.einsum("mJL,mL->mJ", Z, w)
        out[itf.block_a][fa.fsl3] -= (resid_a / fa.hw_perp).T
        out[itf.block_a] += (self._traction_transpose(
            itf.block_a, itf.face_a, 0.5 * fa.hface[:, None] * w)
            / self._hw2d[itf.block_a])

        wb = from_a(-w)
        resid_b = from_a(0.5 * (Tb + Ta)) + np.einsum(
            "mJL,mL->mJ", from_a(Z), wb)
        out[itf.block_b][fb.fsl3] -= (resid_b / fb.hw_perp).T
        out[itf.block_b] += (self._traction_transpose(
            itf.block_b, itf.face_b, 0.5 * fb.hface[:, None] * wb)
            / self._hw2d[itf.block_b])

    # -- energy -------------------------------------------------------------

    def _kinetic(self, v1, v2):
        return 0.5 * sum(
            float(np.sum(self._hw2d[b] * self._varrho[b] * v1[b] * v2[b]))
            for b in range(len(v1)))

    def _strain(self, u1, u2, du1=None, du2=None):
        du1 = du1 or [self._gradients(b, x) for b, x in enumerate(u1)]
        du2 = du2 or [self._gradients(b, x) for b, x in enumerate(u2)]
        total = 0.0
        for b in range(len(u1)):
            total += float(np.einsum(
                "Jipq,pqiJkL,Lkpq,pq->", du1[b], self._c[b], du2[b],
                self._hw2d[b], optimize=True))
        return 0.5 * total

    def _remainder_energy(self, u1, u2):
        if self.wide_stencil:
            return 0.0
        total = 0.0
        for b in range(len(u1)):
            c = self._c[b]
            ops = self._ops(b)
            blk_w = [self._ops(b)[1].norm_weights[None, :],
                     self._ops(b)[0].norm_weights[:, None]]
            for i in range(2):
                for J in range(2):
                    for L in range(2):
                        r = apply_remainder(ops[i], c[..., i, J, i, L],
                                            u2[b][L], axis=i)
                        total += float(np.sum(blk_w[i] * u1[b][J] * r))
        return 0.5 * total

    def _correction(self, u1, u2, du1=None, du2=None):
        du1 = du1 or [self._gradients(b, x) for b, x in enumerate(u1)]
        du2 = du2 or [self._gradients(b, x) for b, x in enumerate(u2)]
        total = 0.0
        for (bi, name), tag in self.domain.face_tags.items():
            fd = self._faces[(bi, name)]
            a1 = u1[bi][fd.fsl3].T
            a2 = u2[bi][fd.fsl3].T
            if tag == "robin":
                total += 0.5 * self.impedance * float(
                    np.sum(fd.hface[:, None] * fd.jhat[:, None] * a1 * a2))
                continue
            T1 = self._face_traction(bi, name, du1[bi])
            T2 = self._face_traction(bi, name, du2[bi])
            total -= 0.5 * float(np.sum(fd.hface[:, None]
                                        * (a1 * T2 + a2 * T1)))
            total += 0.5 * float(np.einsum(
                "m,mJ,mJL,mL->", fd.hface, a1, fd.penalty, a2))
        for itf in self.domain.interfaces:
            fa, _, w1, Ta1, Tb1, Z = self._interface_pieces(itf, u1, du1)
            _, _, w2, Ta2, Tb2, _ = self._interface_pieces(itf, u2, du2)
            th1 = Ta1 - Tb1
            th2 = Ta2 - Tb2
            total -= 0.25 * float(np.sum(fa.hface[:, None]
                                         * (w1 * th2 + w2 * th1)))
            total += 0.5 * float(np.einsum(
                "m,mJ,mJL,mL->", fa.hface, w1, Z, w2))
        return total

    def energy_parts(self, u, v):
        """Energy decomposition for homogeneous boundary/interface data."""
        du = [self._gradients(b, x) for b, x in enumerate(u)]
        parts = {
            "kinetic": self._kinetic(v, v),
            "strain": self._strain(u, u, du, du),
            "remainder": self._remainder_energy(u, u),
            "correction": self._correction(u, u, du, du),
        }
        parts["total"] = sum(parts.values())
        return parts

    def energy_rate(self, u, v):
        """Semi-discrete d/dt of the energy for homogeneous data."""
        a = self.apply(u)
        du = [self._gradients(b, x) for b, x in enumerate(u)]
        dv = [self._gradients(b, x) for b, x in enumerate(v)]
        return 2.0 * (self._kinetic(v, a)
                      + self._strain(u, v, du, dv)
                      + self._remainder_energy(u, v)
                      + self._correction(u, v, du, dv))


def assemble_dense(op, max_dofs=40000):
    """Dense matrix of the homogeneous operator u -> acceleration.

    Returns (A, w) with w the varrho-quadrature weights; w[:, None] * A
    is symmetric negative semidefinite by construction.  Intended for
    verification-scale problems only.
    """
    n = op.n_dofs
    if n > max_dofs:
        raise ValueError(f"dense assembly capped at {max_dofs} unknowns, "
                         f"requested {n}")
    A = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        A[:, j] = op.flatten(op.apply(op.unflatten(e)))
        e[j] = 0.0
    return A, op.weights()
