"""Tests for the planar-film relaxation flow.

Oracles used here:

* finite differences of the quadrature energy validate the assembled
  discrete energy gradient,
* implicit and explicit steps of the same flow must agree to second order
  in the step size,
* the mobility is a pure rate constant, so doubling it must reproduce a
  step of twice the size exactly.
"""

import dataclasses

import numpy as np
import pytest

import gaugeflow.flatflow as ff
from gaugeflow.deformation import GaugeSpec, TimeDerivSpec
from gaugeflow.errors import BadConfig, ImmersionLost
from gaugeflow.frankoseen import FOParams


def small_cfg(**kw) -> ff.FlowConfig:
    base = dict(n=48, h=1.0 / 48.0, t_end=0.01)
    base.update(kw)
    return ff.FlowConfig(**base)


def wiggled_state(cfg: ff.FlowConfig, seed: int = 3) -> ff.FlowState:
    """A deterministic band-limited state off the flat/uniform manifold."""
    rng = np.random.default_rng(seed)
    n = cfg.n
    y = np.arange(n) * cfg.h
    L = n * cfg.h

    def band(amp):
        out = np.zeros(n)
        for k in range(1, 4):
            a, b = rng.normal(size=2)
            out += amp * (a * np.cos(2 * np.pi * k * y / L)
                          + b * np.sin(2 * np.pi * k * y / L))
        return out

    st = ff.FlowState(0.0, band(0.004), band(0.004),
                      1.0 + band(0.05), band(0.05))
    return st


# ---------------------------------------------------------------------------
# configuration validation


def test_unknown_family_rejected():
    cfg = small_cfg(initial_condition=ff.InitialCondition(family="vortex"))
    with pytest.raises(BadConfig, match="vortex"):
        cfg.validate()


def test_fractional_winding_rejected():
    cfg = small_cfg(initial_condition=ff.InitialCondition(winding=1.5))
    with pytest.raises(BadConfig, match="whole number"):
        cfg.validate()


def test_nonpositive_width_rejected():
    cfg = small_cfg(initial_condition=ff.InitialCondition(width=0.0))
    with pytest.raises(BadConfig, match="width"):
        cfg.validate()


def test_mixed_convections_need_explicit_opt_in():
    cfg = small_cfg(gauge=GaugeSpec(rank=1, kind="material"),
                    timederiv=TimeDerivSpec(rank=1, kind="jaumann"))
    with pytest.raises(BadConfig, match="dissipative"):
        cfg.validate()
    cfg = dataclasses.replace(cfg, allow_inconsistent=True)
    cfg.validate()


def test_schedule_must_cover_horizon():
    cfg = small_cfg(t_end=1.0, tau_schedule=((0.5, 1e-3),))
    with pytest.raises(BadConfig, match="t_end"):
        cfg.validate()


def test_schedule_times_must_be_sorted():
    cfg = small_cfg(t_end=1.0, tau_schedule=((0.8, 1e-3), (0.5, 1e-3), (1.0, 1e-3)))
    with pytest.raises(BadConfig, match="nondecreasing"):
        cfg.validate()


def test_tiny_grid_rejected():
    with pytest.raises(BadConfig, match="8"):
        small_cfg(n=4).validate()


# ---------------------------------------------------------------------------
# initial data


def test_uniform_family_has_zero_energy():
    cfg = small_cfg(initial_condition=ff.InitialCondition(family="uniform"))
    st = ff.init_state(cfg)
    _, _, U = ff.energy_of(st, cfg)
    assert abs(U) < 1e-28
    assert ff.gradient_norm(st, cfg) < 1e-13


def test_twist_is_deterministic_and_periodic():
    cfg = small_cfg()
    a = ff.init_state(cfg)
    b = ff.init_state(cfg)
    assert np.array_equal(a.q1, b.q1) and np.array_equal(a.q2, b.q2)
    # angle gains one full turn across the period: endpoint wraps to start
    theta = ff._twist_angle(cfg.n, cfg.h, 1.0, 0.35)
    assert theta[0] == 0.0
    assert theta[-1] < 2.0 * np.pi


def test_zero_winding_equals_uniform():
    cfg = small_cfg(initial_condition=ff.InitialCondition(winding=0.0))
    st = ff.init_state(cfg)
    assert np.allclose(st.q1, 1.0, atol=1e-12) and np.allclose(st.q2, 0.0)


# ---------------------------------------------------------------------------
# energy gradient against finite differences of the quadrature energy


def test_energy_gradient_matches_finite_differences():
    cfg = small_cfg()
    st = wiggled_state(cfg)
    geo = ff._geometry(st, cfg)
    gf1, gf2, gq1, gq2 = ff._energy_gradient(geo, st.q1, st.q2, cfg.params)

    def U_of(f1, f2, q1, q2):
        probe = ff.FlowState(0.0, f1, f2, q1, q2)
        return ff.energy_of(probe, cfg)[2]

    rng = np.random.default_rng(11)
    eps = 1.0e-6
    worst = 0.0
    for _ in range(4):
        df1, df2, dq1, dq2 = (rng.normal(size=cfg.n) for _ in range(4))
        up = U_of(st.f1 + eps * df1, st.f2 + eps * df2,
                  st.q1 + eps * dq1, st.q2 + eps * dq2)
        dn = U_of(st.f1 - eps * df1, st.f2 - eps * df2,
                  st.q1 - eps * dq1, st.q2 - eps * dq2)
        fd = (up - dn) / (2.0 * eps)
        exact = cfg.h * float(gf1 @ df1 + gf2 @ df2 + gq1 @ dq1 + gq2 @ dq2)
        worst = max(worst, abs(fd - exact) / max(abs(fd), 1.0e-12))
    assert worst < 1.0e-6


# ---------------------------------------------------------------------------
# stepping


def test_first_step_decreases_energy():
    cfg = ff.FlowConfig()
    st = ff.init_state(cfg)
    _, _, U0 = ff.energy_of(st, cfg)
    new = ff.step(st, cfg, 1.0e-4)
    _, _, U1 = ff.energy_of(new, cfg)
    assert U1 < U0


def test_implicit_matches_explicit_to_second_order():
    cfg = ff.FlowConfig()
    st = ff.init_state(cfg)

    def gap(tau):
        a = ff.step(st, cfg, tau)
        b = ff.explicit_step(st, cfg, tau)
        return max(np.max(np.abs(a.f1 - b.f1)), np.max(np.abs(a.f2 - b.f2)),
                   np.max(np.abs(a.q1 - b.q1)), np.max(np.abs(a.q2 - b.q2)))

    g1, g2 = gap(5.0e-7), gap(1.0e-6)
    assert g2 / g1 == pytest.approx(4.0, rel=0.15)


def test_mobility_is_a_pure_rate_constant():
    # lam enters the implicit system only through the product lam*tau, so
    # doubling the mobility must reproduce a double-size step exactly
    # (tau chosen as a power-of-two multiple keeps the products bit-equal).
    cfg1 = ff.FlowConfig()
    cfg2 = dataclasses.replace(
        cfg1, params=FOParams(K=0.1, omega=0.5, mobility=2.0))
    st = ff.init_state(cfg1)
    a = ff.step(st, cfg1, 2.0e-4)
    b = ff.step(st, cfg2, 1.0e-4)
    assert np.array_equal(a.f1, b.f1) and np.array_equal(a.f2, b.f2)
    assert np.array_equal(a.q1, b.q1) and np.array_equal(a.q2, b.q2)


def test_overturned_film_raises_immersion_lost():
    cfg = small_cfg()
    st = ff.init_state(cfg)
    y = np.arange(cfg.n) * cfg.h
    L = cfg.n * cfg.h
    # displacement whose slope reaches -1.6 somewhere: c = 1 + Df2 < 0
    bad = ff.FlowState(0.0, st.f1, -1.6 * L / (2 * np.pi)
                       * np.sin(2 * np.pi * y / L), st.q1, st.q2)
    with pytest.raises(ImmersionLost):
        ff.energy_of(bad, cfg)


def test_uniform_state_is_a_fixed_point():
    cfg = small_cfg(initial_condition=ff.InitialCondition(family="uniform"))
    st = ff.init_state(cfg)
    new = ff.step(st, cfg, 1.0e-2)
    assert np.max(np.abs(new.q1 - st.q1)) < 1e-13
    assert np.max(np.abs(new.q2 - st.q2)) < 1e-13
    assert np.max(np.abs(new.f1 - st.f1)) < 1e-13
    assert np.max(np.abs(new.f2 - st.f2)) < 1e-13


# ---------------------------------------------------------------------------
# the run loop


def test_run_records_one_energy_row_per_accepted_step():
    cfg = small_cfg(t_end=2.0e-3)
    traj = ff.run(cfg)
    d = traj.diagnostics
    assert len(traj.energy) == d["accepted_steps"] + 1
    assert len(traj.states) == d["accepted_steps"] + 1
    ts = [r.t for r in traj.energy]
    assert all(b > a for a, b in zip(ts[:-1], ts[1:]))
    assert all(r.dissipation_residual <= 5.0e-3 for r in traj.energy)
    assert d["stopped_on"] == "t_end"
    assert traj.states[-1].t == pytest.approx(cfg.t_end, abs=1e-12)


def test_run_is_bit_reproducible():
    cfg = small_cfg(t_end=2.0e-3)
    a = ff.run(cfg)
    b = ff.run(cfg)
    assert [r.U_total for r in a.energy] == [r.U_total for r in b.energy]
    assert [r.tau for r in a.energy] == [r.tau for r in b.energy]
    assert np.array_equal(a.states[-1].q1, b.states[-1].q1)
    assert np.array_equal(a.states[-1].f2, b.states[-1].f2)


def test_run_monotone_energy():
    cfg = small_cfg(t_end=5.0e-3)
    traj = ff.run(cfg)
    U = [r.U_total for r in traj.energy]
    assert all(b - a <= 1e-12 for a, b in zip(U[:-1], U[1:]))


def test_explicit_schedule_is_honoured():
    cfg = small_cfg(
        t_end=1.0e-3,
        initial_condition=ff.InitialCondition(family="uniform"),
        tau_schedule=((5.0e-4, 1.0e-4), (1.0e-3, 2.5e-4)),
    )
    traj = ff.run(cfg)
    taus = [r.tau for r in traj.energy[1:]]
    # uniform data never rejects, so the schedule is followed exactly up to
    # the clamp against the remaining horizon
    assert taus[0] == pytest.approx(1.0e-4)
    assert any(t == pytest.approx(2.5e-4) for t in taus)
    assert traj.states[-1].t == pytest.approx(1.0e-3, abs=1e-12)


def test_stop_on_gradient_norm():
    cfg = small_cfg(
        t_end=1.0,
        initial_condition=ff.InitialCondition(family="uniform"),
        stop_gradnorm=1.0e-10,
    )
    traj = ff.run(cfg)
    assert traj.diagnostics["stopped_on"] == "gradnorm"
    assert traj.diagnostics["accepted_steps"] == 1
    assert traj.states[-1].t < 1.0


def test_snapshots_pick_first_state_at_or_past_request():
    cfg = small_cfg(t_end=2.0e-3, snapshot_times=(0.0, 1.0e-3, 99.0))
    traj = ff.run(cfg)
    assert len(traj.snapshots) == 3
    s0, s1, s2 = traj.snapshots
    assert s0.state.t == 0.0
    assert s1.state.t >= 1.0e-3
    prev = [s for s in traj.states if s.t < s1.state.t]
    assert all(s.t < 1.0e-3 for s in prev)
    assert s2.state is traj.states[-1]


def test_restart_continues_from_given_state():
    cfg = small_cfg(t_end=1.0e-3)
    first = ff.run(cfg)
    cfg2 = dataclasses.replace(cfg, t_end=2.0e-3)
    cont = ff.run(cfg2, state=first.states[-1])
    assert cont.states[0].t == pytest.approx(1.0e-3, abs=1e-12)
    assert cont.states[-1].t == pytest.approx(2.0e-3, abs=1e-12)


# ---------------------------------------------------------------------------
# dissipation bookkeeping


def test_dissipation_check_consistent_run():
    cfg = small_cfg(t_end=5.0e-3)
    traj = ff.run(cfg)
    report = ff.dissipation_check(traj, cfg)
    assert report["consistent"] is True
    assert report["max_rel_residual"] <= 5.0e-3
    assert report["positive_increments"] == []
    assert len(report["intervals"]) == len(traj.energy) - 1
    row = report["intervals"][0]
    assert set(row) == {"t0", "t1", "dUdt", "gradnorm2_mid",
                        "cross_predicted", "cross_measured", "rel_residual"}


def test_gauge_gradient_norms_reports_all_four():
    cfg = small_cfg()
    st = wiggled_state(cfg)
    norms = ff.gauge_gradient_norms(st, cfg)
    assert set(norms) == set(ff.VECTOR_GAUGES)
    assert all(v > 0 for v in norms.values())
    assert norms["material"] == pytest.approx(ff.gradient_norm(st, cfg), rel=1e-12)
