import dataclasses

import numpy as np
import pytest

from sbpelastic import sbp1d

ORDERS = (2, 4, 6)


def make(order, n=24, h=None, fc=True):
    return sbp1d.build_operator_set(order, n, h or 1.0 / (n - 1), fc)


def test_order2_norm_and_boundary_row():
    ops = make(2, n=5, h=0.25)
    assert np.allclose(ops.norm_weights, 0.25 * np.array([0.5, 1, 1, 1, 0.5]))
    assert np.allclose(ops.d1[0], np.array([-1, 1, 0, 0, 0]) / 0.25)


@pytest.mark.parametrize("order", ORDERS)
def test_d1_kills_constants(order):
    ops = make(order)
    assert np.abs(ops.d1 @ np.ones(ops.n_points)).max() < 1e-13


@pytest.mark.parametrize("order", ORDERS)
def test_sbp_identity(order):
    ops = make(order, h=0.05)
    H = np.diag(ops.norm_weights)
    res = (H @ ops.d1 + ops.d1.T @ H
           + np.outer(ops.e_left, ops.e_left)
           - np.outer(ops.e_right, ops.e_right))
    assert np.abs(res).max() <= 1e-13


@pytest.mark.parametrize("order", ORDERS)
def test_d1_monomial_accuracy(order):
    q, w = order // 2, order
    ops = make(order, n=31)
    x = np.arange(31) * ops.spacing
    for p in range(2 * q + 1):
        exact = p * x ** (p - 1) if p else np.zeros_like(x)
        err = np.abs(ops.d1 @ x ** p - exact)
        assert err[w:-w].max() < 1e-11
        if p <= q:
            assert err.max() < 1e-11


def test_bad_inputs():
    with pytest.raises(ValueError):
        sbp1d.build_operator_set(3, 20, 0.1)
    with pytest.raises(ValueError):
        sbp1d.build_operator_set(4, 7, 0.1)
    with pytest.raises(ValueError):
        sbp1d.build_operator_set(4, 20, -0.1)
    ops = make(4)
    with pytest.raises(ValueError):
        sbp1d.apply_d2(ops, np.ones(5), np.ones(ops.n_points))


def test_d2_order2_interior_stencil():
    # b(x)=1+x, u(x)=x: interior rows give d/dx((1+x)*1) = 1.
    ops = make(2, n=12, h=0.1)
    x = np.arange(12) * 0.1
    out = sbp1d.apply_d2(ops, 1.0 + x, x)
    assert np.allclose(out[2:-2], 1.0, atol=1e-12)


@pytest.mark.parametrize("order", ORDERS)
def test_d2_constant_and_quadratic(order):
    n = 25
    ops = make(order, n=n, h=1.0 / (n - 1))
    x = np.arange(n) / (n - 1)
    w, q = order, order // 2
    assert np.abs(sbp1d.apply_d2(ops, np.ones(n), np.ones(n))).max() < 1e-11
    out = sbp1d.apply_d2(ops, np.ones(n), x ** 2)
    assert np.abs(out[w:-w] - 2.0).max() < 1e-10


@pytest.mark.parametrize("order", ORDERS)
def test_remainder_invariants(order):
    n = 12 if order < 6 else 13
    ops = make(order, n=n)
    rng = np.random.default_rng(3)
    for b in (np.ones(n), rng.random(n)):
        R = sbp1d.extract_remainder(ops, b)
        scale = np.abs(R).max()
        assert np.abs(R - R.T).max() <= 1e-14 * max(scale, 1.0)
        assert np.linalg.eigvalsh(R).min() >= -1e-10 * scale


@pytest.mark.parametrize("order", ORDERS)
def test_remainder_zero_to_order_2q(order):
    errs = []
    for n in (17, 33, 65):
        h = 1.0 / (n - 1)
        ops = make(order, n=n, h=h)
        x = np.arange(n) * h
        u = np.sin(3.0 * x)  # keeps the form above the roundoff floor
        R = sbp1d.extract_remainder(ops, np.ones(n))
        errs.append(abs(u @ R @ u))
    rates = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(rates) > order - 0.7


@pytest.mark.parametrize("order", ORDERS)
def test_remainder_two_tensor_semidefiniteness(order):
    # Pointwise-PSD 2x2 tensor fields keep the block form PSD.
    n = 14
    ops = make(order, n=n)
    rng = np.random.default_rng(7)
    for _ in range(10):
        a = rng.random((2, 2, n))
        S = np.einsum("ikp,jkp->ijp", a, a)  # PSD per point
        u = rng.standard_normal((2, n))
        total = sum(u[i] @ sbp1d.extract_remainder(ops, S[i, j]) @ u[j]
                    for i in range(2) for j in range(2))
        scale = max(abs(total), np.abs(S).max() * (u ** 2).sum())
        assert total >= -1e-10 * scale


@pytest.mark.parametrize("order", ORDERS)
def test_norm_borrowing_bound(order):
    ops = make(order, h=0.07)
    rng = np.random.default_rng(1)
    for _ in range(50):
        u = rng.standard_normal(ops.n_points)
        lhs = u @ (ops.norm_weights * u)
        rhs = ops.first_weight * (u[0] ** 2 + u[-1] ** 2)
        assert lhs >= rhs - 1e-12 * lhs


@pytest.mark.parametrize("order", ORDERS)
def test_fully_compatible_rows_and_row_confinement(order):
    n = 26
    fc = make(order, n=n)
    nc = make(order, n=n, fc=False)
    assert np.array_equal(fc.boundary_deriv[0], fc.d1[0])
    assert np.array_equal(fc.boundary_deriv[-1], fc.d1[-1])
    b = np.random.default_rng(0).random(n) + 0.2
    diff = np.abs(sbp1d.d2_dense(fc, b) - sbp1d.d2_dense(nc, b))
    assert diff[1:-1].max() == 0.0
    assert diff[0].max() > 0.0 and diff[-1].max() > 0.0


@pytest.mark.parametrize("order", ORDERS)
def test_certification_passes(order):
    for fc in (True, False):
        rep = sbp1d.certify_operator_set(make(order, fc=fc))
        assert rep["passed"], rep


def test_certification_detects_fault():
    ops = make(6)
    d1 = ops.d1.copy()
    d1[0, 0] += 1e-3
    broken = dataclasses.replace(ops, d1=d1)
    rep = sbp1d.certify_operator_set(broken)
    assert not rep["passed"]
    assert not rep["sbp_identity"]["passed"]


def test_apply_along_axis_batched():
    ops = make(4, n=16)
    rng = np.random.default_rng(5)
    b = rng.random((3, 16)) + 0.5
    u = rng.standard_normal((3, 16))
    batched = sbp1d.apply_d2(ops, b, u, axis=-1)
    for k in range(3):
        single = sbp1d.apply_d2(ops, b[k], u[k])
        assert np.allclose(batched[k], single, atol=1e-13)
    # axis=0 agrees with axis=-1 after transpose
    t = sbp1d.apply_d2(ops, b.T, u.T, axis=0)
    assert np.allclose(t.T, batched, atol=1e-13)


def test_dump_operator_csv(tmp_path):
    ops = make(2, n=6)
    path = tmp_path / "ops.csv"
    sbp1d.dump_operator_csv(ops, path)
    text = path.read_text().splitlines()
    assert text[0].startswith("matrix,row")
    assert sum(1 for line in text if line.startswith("D2,")) == 6
