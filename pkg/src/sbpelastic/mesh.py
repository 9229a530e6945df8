"""
Curvilinear multiblock grids on the unit-square reference domain.

Each block is the image of [0,1]^2 under a smooth mapping given either
analytically or by transfinite interpolation of four edge curves.  The
discrete metric data (transformation gradient, Jacobian, face surface
Jacobians and outward unit normals) is computed with the same-order
first-derivative SBP operators used by the PDE discretization, so the
discrete Nanson identity holds exactly by construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .sbp1d import OperatorSet1D, apply_d1, build_operator_set

# Face name -> (axis, end index on that axis, reference outward normal).
FACES = {
    "west": (0, 0, np.array([-1.0, 0.0])),
    "east": (0, -1, np.array([1.0, 0.0])),
    "south": (1, 0, np.array([0.0, -1.0])),
    "north": (1, -1, np.array([0.0, 1.0])),
}


def face_slice(face):
    """Index tuple selecting the face line of a (n1, n2, ...) array."""
    axis, end, _ = FACES[face]
    sl = [slice(None), slice(None)]
    sl[axis] = end
    return tuple(sl)


def tangent_axis(face):
    """Grid axis running along the face."""
    return 1 - FACES[face][0]


class FoldedMappingError(ValueError):
    """Raised when the discrete Jacobian is non-positive somewhere."""


# ---------------------------------------------------------------------------
# Mappings.


@dataclass(frozen=True)
class AnalyticMap:
    """Mapping given by a callable (x1, x2) -> (X1, X2) on [0,1]^2."""

    fn: object
    gradient: object = None  # optional (x1,x2) -> dX[I][i] arrays

    def __call__(self, x1, x2):
        return self.fn(x1, x2)


def identity_map():
    return AnalyticMap(lambda x1, x2: (x1, x2),
                       gradient=lambda x1, x2: _const_grad(x1, np.eye(2)))


def affine_map(A, b):
    """X = A x + b with constant 2x2 A."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)

    def fn(x1, x2):
        return (A[0, 0] * x1 + A[0, 1] * x2 + b[0],
                A[1, 0] * x1 + A[1, 1] * x2 + b[1])

    return AnalyticMap(fn, gradient=lambda x1, x2: _const_grad(x1, A))


def _const_grad(x, A):
    g = np.empty(np.shape(x) + (2, 2))
    g[...] = A
    return g


def annulus_map(r0, r1, th0, th1):
    """Polar patch (r, theta) = (r0 + (r1-r0) x1, th0 + (th1-th0) x2)."""

    def fn(x1, x2):
        r = r0 + (r1 - r0) * x1
        th = th0 + (th1 - th0) * x2
        return r * np.cos(th), r * np.sin(th)

    return AnalyticMap(fn)


@dataclass(frozen=True)
class TransfiniteMap:
    """Bilinear-blending interpolation of four parametric edge curves.

    Edges are callables of one parameter in [0,1]: south(x1), north(x1),
    west(x2), east(x2); corners must agree.
    """

    south: object
    north: object
    west: object
    east: object

    def __post_init__(self):
        corners = [
            (self.south(0.0), self.west(0.0)),
            (self.south(1.0), self.east(0.0)),
            (self.north(0.0), self.west(1.0)),
            (self.north(1.0), self.east(1.0)),
        ]
        for a, b in corners:
            if np.hypot(a[0] - b[0], a[1] - b[1]) > 1e-12:
                raise ValueError(f"edge curves disagree at a corner: {a} vs {b}")

    def __call__(self, x1, x2):
        s = np.asarray(self.south(x1), dtype=float)
        n = np.asarray(self.north(x1), dtype=float)
        w = np.asarray(self.west(x2), dtype=float)
        e = np.asarray(self.east(x2), dtype=float)
        c00 = np.asarray(self.south(0.0), dtype=float)
        c10 = np.asarray(self.south(1.0), dtype=float)
        c01 = np.asarray(self.north(0.0), dtype=float)
        c11 = np.asarray(self.north(1.0), dtype=float)
        out = []
        for I in range(2):
            out.append((1 - x2) * s[I] + x2 * n[I]
                       + (1 - x1) * w[I] + x1 * e[I]
                       - ((1 - x1) * (1 - x2) * c00[I] + x1 * (1 - x2) * c10[I]
                          + (1 - x1) * x2 * c01[I] + x1 * x2 * c11[I]))
        return tuple(out)


def transfinite_map(south, north, west, east):
    return TransfiniteMap(south, north, west, east)


def line_curve(p, q):
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    return lambda t: ((1 - t) * p[0] + t * q[0], (1 - t) * p[1] + t * q[1])


# ---------------------------------------------------------------------------
# Grids and metrics.


@dataclass(frozen=True)
class BlockGrid:
    n1: int
    n2: int
    h1: float
    h2: float
    nodes: np.ndarray  # (n1, n2, 2)
    mapping: object = field(repr=False, default=None)


@dataclass(frozen=True)
class BlockMetrics:
    F: np.ndarray          # (n1, n2, 2, 2): F[I, i] = dx_i/dX_I
    J: np.ndarray          # (n1, n2)
    faces: dict            # face name -> {"jhat": (m,), "normal": (m, 2)}


def build_block(mapping, n1, n2):
    """Evaluate a mapping on the tensor-product reference grid."""
    x1 = np.linspace(0.0, 1.0, n1)
    x2 = np.linspace(0.0, 1.0, n2)
    X1, X2 = mapping(x1[:, None], x2[None, :])
    nodes = np.stack(np.broadcast_arrays(X1, X2), axis=-1).astype(float)
    if not np.all(np.isfinite(nodes)):
        raise ValueError("mapping produced non-finite coordinates")
    return BlockGrid(n1=n1, n2=n2, h1=1.0 / (n1 - 1), h2=1.0 / (n2 - 1),
                     nodes=nodes, mapping=mapping)


def compute_metrics(grid, ops1, ops2, use_analytic=False):
    """Discrete metric data from same-order D1 operators.

    Raises FoldedMappingError if the discrete Jacobian is non-positive
    anywhere (reports the offending grid index).
    """
    if use_analytic and getattr(grid.mapping, "gradient", None) is not None:
        x1 = np.linspace(0.0, 1.0, grid.n1)[:, None] * np.ones((1, grid.n2))
        x2 = np.ones((grid.n1, 1)) * np.linspace(0.0, 1.0, grid.n2)[None, :]
        a = np.asarray(grid.mapping.gradient(x1, x2), dtype=float)
    else:
        # a[..., I, i] = d X_I / d x_i, covariant basis vectors as columns.
        a = np.stack([apply_d1(ops1, grid.nodes, axis=0),
                      apply_d1(ops2, grid.nodes, axis=1)], axis=-1)
    J = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    if np.any(J <= 0):
        idx = np.unravel_index(int(np.argmin(J)), J.shape)
        raise FoldedMappingError(
            f"non-positive Jacobian {J[idx]:.3e} at grid index {idx}")
    # F[I, i] = dx_i/dX_I = (a^{-1})[i, I] transposed.
    F = np.empty_like(a)
    F[..., 0, 0] = a[..., 1, 1] / J
    F[..., 0, 1] = -a[..., 1, 0] / J
    F[..., 1, 0] = -a[..., 0, 1] / J
    F[..., 1, 1] = a[..., 0, 0] / J

    faces = {}
    for name, (axis, end, nu) in FACES.items():
        sl = face_slice(name)
        Jf = J[sl]
        Ff = F[sl]
        # Nanson: Jhat n_I = J F_Ii nu_i; unit normal and Jhat follow.
        v = Jf[:, None] * np.einsum("pIi,i->pI", Ff, nu)
        jhat = np.linalg.norm(v, axis=-1)
        if np.any(jhat <= 0):
            raise FoldedMappingError(f"degenerate face metric on {name}")
        faces[name] = {"jhat": jhat, "normal": v / jhat[:, None]}
    return BlockMetrics(F=F, J=J, faces=faces)


# ---------------------------------------------------------------------------
# Domain assembly.


@dataclass(frozen=True)
class Block:
    grid: BlockGrid
    metrics: BlockMetrics
    ops1: OperatorSet1D
    ops2: OperatorSet1D


@dataclass(frozen=True)
class Interface:
    block_a: int
    face_a: str
    block_b: int
    face_b: str
    flip: bool  # True if the tangential index runs oppositely on side b


@dataclass(frozen=True)
class Domain:
    blocks: list
    face_tags: dict    # (block index, face name) -> "robin" | "displacement"
    interfaces: list

    @property
    def diameter(self):
        lo = np.min([b.grid.nodes.min(axis=(0, 1)) for b in self.blocks], axis=0)
        hi = np.max([b.grid.nodes.max(axis=(0, 1)) for b in self.blocks], axis=0)
        return float(np.linalg.norm(hi - lo))


def _face_points(block, face):
    return block.grid.nodes[face_slice(face)]


def assemble_domain(blocks, face_tags, interface_specs, order=None):
    """Wire blocks, boundary tags and conforming interfaces into a Domain.

    blocks: list of Block (or BlockGrid, in which case `order` is used to
    build metrics).  interface_specs: iterables (ia, face_a, ib, face_b).
    Orientation (same/reversed) is detected from the node coordinates.
    """
    blks = []
    for b in blocks:
        if isinstance(b, Block):
            blks.append(b)
        else:
            if order is None:
                raise ValueError("order required to build metrics from grids")
            o1 = build_operator_set(order, b.n1, b.h1)
            o2 = build_operator_set(order, b.n2, b.h2)
            blks.append(Block(grid=b, metrics=compute_metrics(b, o1, o2),
                              ops1=o1, ops2=o2))

    claimed = {}
    interfaces = []
    dom = Domain(blocks=blks, face_tags=dict(face_tags),
                 interfaces=interfaces)
    tol = 1e-10 * max(dom.diameter, 1.0)

    for ia, fa, ib, fb in interface_specs:
        pa = _face_points(blks[ia], fa)
        pb = _face_points(blks[ib], fb)
        if len(pa) != len(pb):
            raise ValueError(
                f"non-conforming interface {ia}.{fa} - {ib}.{fb}: "
                f"{len(pa)} vs {len(pb)} points")
        if np.abs(pa - pb).max() <= tol:
            flip = False
        elif np.abs(pa - pb[::-1]).max() <= tol:
            flip = True
        else:
            raise ValueError(
                f"non-conforming interface {ia}.{fa} - {ib}.{fb}: "
                "coordinates do not coincide")
        ja = blks[ia].metrics.faces[fa]["jhat"]
        jb = blks[ib].metrics.faces[fb]["jhat"]
        if np.abs(ja - (jb[::-1] if flip else jb)).max() > tol:
            raise ValueError(
                f"interface {ia}.{fa} - {ib}.{fb}: surface Jacobians differ")
        for key in ((ia, fa), (ib, fb)):
            if key in claimed:
                raise ValueError(f"face {key} referenced twice")
            claimed[key] = "interface"
        interfaces.append(Interface(ia, fa, ib, fb, flip))

    for (bi, face), tag in face_tags.items():
        if tag not in ("robin", "displacement"):
            raise ValueError(f"unknown boundary tag {tag!r}")
        if (bi, face) in claimed:
            raise ValueError(f"face ({bi}, {face}) is both tagged and coupled")
        claimed[(bi, face)] = tag

    for bi in range(len(blks)):
        for face in FACES:
            if (bi, face) not in claimed:
                raise ValueError(f"dangling face ({bi}, {face})")
    return dom


# ---------------------------------------------------------------------------
# Reference geometry: square with a circular scatterer, 4-block O-grid.


def square_with_hole_blocks(n, radius=0.3, half_width=1.0, order=4):
    """[-w, w]^2 with a circular hole, meshed by 4 transfinite blocks.

    Reference direction x1 runs radially from the hole to the outer
    square, x2 tangentially (counterclockwise), which keeps J > 0.
    Returns (domain-ready) blocks, outer/inner face lists and interface
    specs.
    """
    w = half_width
    corners = np.array([[w, -w], [w, w], [-w, w], [-w, -w], [w, -w]])
    blocks = []
    for k in range(4):
        th0 = -np.pi / 4 + k * np.pi / 2
        th1 = th0 + np.pi / 2

        def arc(t, th0=th0, th1=th1):
            th = th0 + (th1 - th0) * t
            return radius * np.cos(th), radius * np.sin(th)

        outer = line_curve(corners[k], corners[k + 1])
        # west = inner arc (x1=0), east = outer square side (x1=1),
        # south/north = straight radial edges shared with the neighbors.
        m = transfinite_map(south=line_curve(arc(0.0), corners[k]),
                            north=line_curve(arc(1.0), corners[k + 1]),
                            west=arc, east=outer)
        blocks.append(build_block(m, n, n))

    interfaces = [(k, "north", (k + 1) % 4, "south") for k in range(4)]
    outer_faces = [(k, "east") for k in range(4)]
    inner_faces = [(k, "west") for k in range(4)]
    return blocks, outer_faces, inner_faces, interfaces


def build_reference_domain(n, order, radius=0.3, half_width=1.0,
                           inner_bc="displacement", outer_bc="robin"):
    blocks, outer, inner, ifaces = square_with_hole_blocks(
        n, radius=radius, half_width=half_width, order=order)
    tags = {f: outer_bc for f in outer}
    tags.update({f: inner_bc for f in inner})
    return assemble_domain(blocks, tags, ifaces, order=order)


def dump_nodes_csv(domain, path):
    """Write node coordinates and Jacobians for plotting."""
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["block", "i", "j", "X1", "X2", "J"])
        for bi, b in enumerate(domain.blocks):
            for i in range(b.grid.n1):
                for j in range(b.grid.n2):
                    wr.writerow([bi, i, j,
                                 f"{b.grid.nodes[i, j, 0]:.17g}",
                                 f"{b.grid.nodes[i, j, 1]:.17g}",
                                 f"{b.metrics.J[i, j]:.17g}"])
