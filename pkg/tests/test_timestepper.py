import numpy as np
import pytest

from sbpelastic import discretization, elasticity, mesh, timestepper


def small_op(order=2, n=11):
    dom = mesh.build_reference_domain(n=n, order=order)
    return discretization.ElasticOperator(dom, elasticity.mms_material)


def test_estimate_dt_scales_with_grid_and_cfl():
    op1 = small_op(n=11)
    op2 = small_op(n=21)
    dt1 = timestepper.estimate_dt(op1)
    dt2 = timestepper.estimate_dt(op2)
    # the speed field is sampled on the grid, so halving is approximate
    assert dt2 == pytest.approx(dt1 / 2.0, rel=5e-3)
    assert timestepper.estimate_dt(op1, cfl=0.5) == pytest.approx(
        0.5 * dt1 / timestepper.DEFAULT_CFL[2], rel=1e-12)
    with pytest.raises(ValueError, match="cfl"):
        timestepper.estimate_dt(op1, cfl=-1.0)


def test_estimate_dt_closed_form_isotropic():
    # Identity geometry, lambda = mu = rho = 1: v_max = sqrt(3) and
    # dt = cfl * h / sqrt(3) exactly.
    blk = mesh.build_block(mesh.identity_map(), 11, 11)
    tags = {(0, f): "robin" for f in mesh.FACES}
    dom = mesh.assemble_domain([blk], tags, [], order=2)
    mat = discretization.constant_material(
        elasticity.isotropic_stiffness(1.0, 1.0))
    op = discretization.ElasticOperator(dom, mat)
    dt = timestepper.estimate_dt(op, cfl=0.5)
    assert dt == pytest.approx(0.5 * 0.1 / np.sqrt(3.0), abs=1e-12)


def test_rk4_energy_conserved_free_evolution():
    # Smooth initial data: the RK4 truncation error is tiny well below
    # the stability limit, so the discrete energy is nearly constant.
    op = small_op(order=4, n=17)
    u = []
    for blk in op.domain.blocks:
        X = blk.grid.nodes
        r2 = X[..., 0] ** 2 + X[..., 1] ** 2
        amp = (r2 - 0.09) * np.exp(-1.5 * r2)  # zero on the scatterer
        u.append(np.stack([amp * np.cos(X[..., 0] + X[..., 1]),
                           -0.5 * amp * np.sin(X[..., 0] - X[..., 1])]))
    v = op.zero_state()
    dt = timestepper.estimate_dt(op, cfl=0.1)
    _, _, tr = timestepper.rk4_advance(op, u, v, dt, 100, record_energy=True)
    e = np.array([p["total"] for p in tr.energy])
    assert np.abs(e - e[0]).max() <= 1e-6 * abs(e[0])


def test_rk4_temporal_order():
    # Halving dt cuts the energy drift by ~2^4.
    op = small_op(order=4, n=11)
    rng = np.random.default_rng(1)
    u = [rng.standard_normal(s) for s in op.shapes]
    v = [rng.standard_normal(s) for s in op.shapes]
    dt = timestepper.estimate_dt(op, cfl=0.9)
    drifts = []
    for refine in (1, 2):
        _, _, tr = timestepper.rk4_advance(op, u, v, dt / refine,
                                           20 * refine, record_energy=True)
        e = np.array([p["total"] for p in tr.energy])
        drifts.append(np.abs(e - e[0]).max())
    assert drifts[0] / drifts[1] > 10.0


def test_rk4_detects_blowup():
    op = small_op(order=2, n=11)
    rng = np.random.default_rng(2)
    u = [rng.standard_normal(s) for s in op.shapes]
    v = [rng.standard_normal(s) for s in op.shapes]
    dt = 50.0 * timestepper.estimate_dt(op)
    with pytest.raises(timestepper.UnstableRunError, match="non-finite"):
        timestepper.rk4_advance(op, u, v, dt, 200)


def test_receiver_trace_shape_and_content():
    op = small_op(order=2, n=11)
    u = op.zero_state()
    v = op.zero_state()
    u[0][0, 3, 4] = 2.5
    dt = timestepper.estimate_dt(op)
    _, _, tr = timestepper.rk4_advance(op, u, v, dt, 3,
                                       receivers=[(0, 3, 4), (1, 0, 0)])
    assert tr.receivers.shape == (4, 2, 4)
    assert tr.receivers[0, 0, 0] == 2.5
    assert tr.receivers[0, 1, 0] == 0.0
    assert len(tr.times) == 4


def test_steps_for_lands_on_final_time():
    n, dt = timestepper.steps_for(1.0, 0.03)
    assert n * dt == pytest.approx(1.0)
    assert dt <= 0.03 + 1e-12


def test_ricker_peak_and_decay():
    w = timestepper.ricker(np.array([0.5]), peak_frequency=2.0)
    assert w[0] == pytest.approx(1.0)
    assert abs(timestepper.ricker(np.array([5.0]), 2.0)[0]) < 1e-10


def test_discrete_delta_moments():
    blk = mesh.build_reference_domain(n=11, order=2).blocks[0]
    entries = timestepper.discrete_delta(blk, (0.37, 0.62))
    # quadrature of the delta against 1 is 1 (interior weights J h1 h2)
    total = sum(w * blk.metrics.J[i, j] * blk.grid.h1 * blk.grid.h2
                for i, j, w in entries)
    assert total == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError, match="outside"):
        timestepper.discrete_delta(blk, (1.5, 0.5))
