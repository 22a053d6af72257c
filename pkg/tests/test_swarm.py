import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanolander import swarm as sw

coord = st.floats(-50, 50, allow_nan=False)
point = st.tuples(coord, coord)


# -- pairwise forces --------------------------------------------------------

def test_f_cov_examples():
    np.testing.assert_allclose(sw.f_cov((1, 0), (0, 0), 1.0), (1, 0))
    np.testing.assert_allclose(sw.f_cov((2, 0), (0, 0), 1.0), (0.5, 0))


@given(point, point, st.floats(0.1, 10))
def test_f_cov_antisymmetric(a, b, c):
    if np.hypot(a[0] - b[0], a[1] - b[1]) < 1e-3:
        return
    np.testing.assert_array_equal(sw.f_cov(a, b, c), -sw.f_cov(b, a, c))


def test_f_cov_capped_near_contact():
    f = sw.f_cov((1e-9, 0), (0, 0), 1.0)
    assert np.linalg.norm(f) == pytest.approx(1.0 / sw.MIN_DISTANCE)


def test_f_com_examples():
    np.testing.assert_allclose(sw.f_com((2, 0), (0, 0), 1.0, 1, 3), (-2, 0))
    np.testing.assert_array_equal(sw.f_com((2, 0), (0, 0), 1.0, 3, 3), (0, 0))
    f1 = sw.f_com((1, 1), (0, 0), 0.5, 0, 2)
    f2 = sw.f_com((2, 2), (0, 0), 0.5, 0, 2)
    np.testing.assert_allclose(f2, 2 * f1)


def test_f_obs_examples():
    np.testing.assert_allclose(sw.f_obs((0, 3), (0, 0), 3.0), (0, 1))


@given(point, point, st.floats(0.1, 10))
def test_f_obs_points_away(r, o, c):
    d = np.subtract(r, o)
    if np.hypot(*d) < 1e-3:
        return
    assert np.dot(sw.f_obs(r, o, c), d) > 0


# -- swarm-level quantities ---------------------------------------------------

def test_degree_examples():
    st_ = sw.SwarmState.at_rest([(0, 0), (3, 0), (10, 0)])
    assert [sw.degree(i, st_, 5.0) for i in range(3)] == [1, 1, 0]
    assert sw.degree(0, sw.SwarmState.at_rest([(0, 0)]), 5.0) == 0
    tight = sw.SwarmState.at_rest(np.random.default_rng(0).random((6, 2)))
    assert all(sw.degree(i, tight, 5.0) == 5 for i in range(6))


def test_net_force_examples():
    p = sw.VirtualForceParams(C_cov=1.0, C_com=0.0)
    assert np.all(sw.net_force(0, sw.SwarmState.at_rest([(4, 4)]), p) == 0)
    tri = sw.SwarmState.at_rest([(0, 0), (1, 0), (0, 1)])
    np.testing.assert_allclose(sw.net_force(0, tri, p), (-1, -1))
    pair = sw.SwarmState.at_rest([(-1, 0), (1, 0)])
    np.testing.assert_allclose(sw.net_force(0, pair, p), -sw.net_force(1, pair, p))


def test_net_force_includes_obstacles():
    p = sw.VirtualForceParams(C_obs=3.0)
    st_ = sw.SwarmState.at_rest([(0, 3)], obstacles=[(0, 0)])
    np.testing.assert_allclose(sw.net_force(0, st_, p), (0, 1))


def test_linear_pull_on_needy_lander():
    p = sw.VirtualForceParams(C_cov=1e-9, C_com=1.0, D=1, com_law="linear")
    st_ = sw.SwarmState.at_rest([(0, 0), (8, 0)])
    np.testing.assert_allclose(sw.net_force(0, st_, p), (8, 0), atol=1e-8)


def test_rest_length_pull_vanishes_at_range():
    p = sw.VirtualForceParams(C_cov=1e-9, C_com=1.0, D=1, R_c=5.0)
    far = sw.SwarmState.at_rest([(0, 0), (8, 0)])
    np.testing.assert_allclose(sw.net_force(0, far, p), (3, 0), atol=1e-8)
    edge = sw.SwarmState.at_rest([(0, 0), (5.000001, 0)])
    assert np.linalg.norm(sw.net_force(0, edge, p)) < 1e-5


def test_pull_limited_to_nearest_neighbours():
    p = sw.VirtualForceParams(C_cov=1e-9, C_com=1.0, D=1, R_c=1.0, com_law="linear")
    st_ = sw.SwarmState.at_rest([(0, 0), (2, 0), (-30, 0)])
    np.testing.assert_allclose(sw.net_force(0, st_, p), (2, 0), atol=1e-7)


# -- integration ---------------------------------------------------------------

def test_step_equilibrium():
    st_ = sw.SwarmState.at_rest([(1, 2)])
    nxt = sw.step(st_, sw.VirtualForceParams(), 0.1)
    np.testing.assert_array_equal(nxt.positions, st_.positions)
    assert nxt.t == 1


def test_terminal_velocity():
    p = sw.VirtualForceParams(m_i=1.0, mu_i=2.0)
    F = np.array([[0.6, -0.2]])
    st_ = sw.SwarmState.at_rest([(0, 0)])
    dt = 0.01
    for _ in range(int(10 / (p.mu_i / p.m_i) / dt)):
        st_ = sw.step(st_, p, dt, forces=F)
    np.testing.assert_allclose(st_.velocities[0], F[0] / p.mu_i, rtol=1e-2)


def test_pair_repulsion_monotone():
    p = sw.VirtualForceParams(C_com=0.0)
    st_ = sw.SwarmState.at_rest([(0, 0), (0.5, 0)])
    d = [0.5]
    for _ in range(200):
        st_ = sw.step(st_, p, 0.1)
        d.append(float(np.hypot(*(st_.positions[0] - st_.positions[1]))))
    assert np.all(np.diff(d) > 0)


def test_step_rejects_bad_dt():
    with pytest.raises(ValueError):
        sw.step(sw.SwarmState.at_rest([(0, 0)]), sw.VirtualForceParams(), 0.0)


def test_confinement():
    p = sw.VirtualForceParams(C_com=0.0)
    init = sw.random_deployment(20, 3, 29.0)
    _, trace, _ = sw.run_coverage(init, p, 0.1, 300, area_side=10.0)
    assert np.all(np.abs(trace.positions[1:]) <= 5.0 + 1e-12)


# -- area -----------------------------------------------------------------------

def test_coverage_area_examples():
    assert sw.coverage_area([(0, 0), (1, 0), (1, 1), (0, 1)]) == pytest.approx(1.0)
    assert sw.coverage_area([(0, 0), (2, 0), (0, 2)]) == pytest.approx(2.0)
    assert sw.coverage_area([(0, 0), (5, 5)]) == 0.0
    assert sw.coverage_area([(1, 1)]) == 0.0


def test_coverage_area_order_independent():
    pts = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)
    assert sw.coverage_area(pts[[2, 0, 3, 1]]) == pytest.approx(1.0)


def test_sensing_area_single_disk():
    assert sw.sensing_area([(0, 0)], 2.5, resolution=0.02) == pytest.approx(np.pi * 2.5**2, rel=2e-3)


# -- runs -------------------------------------------------------------------------

def test_single_lander_settles_immediately():
    _, _, m = sw.run_coverage(sw.SwarmState.at_rest([(0, 0)]), sw.VirtualForceParams(), 0.1, 100)
    assert m.settled and m.area == 0.0
    assert m.t_settle == sw.SettleRule().window


def test_run_rejects_zero_steps():
    with pytest.raises(ValueError):
        sw.run_coverage(sw.SwarmState.at_rest([(0, 0)]), sw.VirtualForceParams(), 0.1, 0)


def test_unsettled_flag():
    _, _, m = sw.run_coverage(sw.random_deployment(30, 0), sw.VirtualForceParams(), 0.1, 5)
    assert not m.settled and m.t_settle == 5


def test_settled_force_bound():
    p = sw.VirtualForceParams()
    rule = sw.SettleRule()
    for seed in range(3):
        fin, _, m = sw.run_coverage(sw.random_deployment(40, seed), p, 0.1, 3000, record=False)
        assert m.settled
        F = sw.residual_forces(fin, p, 30.0)
        assert np.hypot(*F.T).max() < 10 * rule.eps * p.mu_i / 0.1


def test_determinism():
    p = sw.VirtualForceParams()
    runs = [sw.run_coverage(sw.random_deployment(25, 7), p, 0.1, 400, record=False) for _ in range(2)]
    assert runs[0][2].to_dict() == runs[1][2].to_dict()
    np.testing.assert_array_equal(runs[0][0].positions, runs[1][0].positions)


def test_translation_invariance():
    p = sw.VirtualForceParams()
    init = sw.random_deployment(15, 2, obstacles=[(1.0, 1.0)])
    shift = np.array([100.0, -40.0])
    moved = sw.SwarmState.at_rest(init.positions + shift, init.obstacles + shift)
    a, _, _ = sw.run_coverage(init, p, 0.1, 300, area_side=None, record=False)
    b, _, _ = sw.run_coverage(moved, p, 0.1, 300, area_side=None, record=False)
    np.testing.assert_allclose(b.positions, a.positions + shift, atol=1e-8)


def test_exclusion_far_site_matches_coverage():
    p = sw.VirtualForceParams()
    init = sw.random_deployment(20, 1)
    a, _, _ = sw.run_coverage(init, p, 0.1, 200, record=False)
    b, _, _ = sw.run_exclusion(init, (1e6, 1e6), p, 0.1, 200, record=False)
    np.testing.assert_allclose(b.positions, a.positions, atol=1e-3)


def test_exclusion_pushes_single_lander_radially():
    site = np.array([3.0, -1.0])
    init = sw.SwarmState.at_rest([site + (0.01, 0.02)])
    fin, _, _ = sw.run_exclusion(init, site, sw.VirtualForceParams(), 0.1, 20, area_side=None, record=False)
    d = fin.positions[0] - site
    assert np.hypot(*d) > 0.1
    assert d[1] / d[0] == pytest.approx(2.0, rel=1e-9)


def test_outputs(tmp_path):
    init = sw.random_deployment(5, 0)
    _, trace, m = sw.run_coverage(init, sw.VirtualForceParams(), 0.1, 30)
    trace.write_csv(tmp_path / "s.csv")
    sw.write_metrics(tmp_path / "m.json", m)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "t,lander_id,x,y,degree"
    assert len(lines) == 1 + 5 * len(trace.positions)
    data = json.loads((tmp_path / "m.json").read_text())
    assert {"area", "mean_degree", "t_settle", "hops_total", "min_pair_dist", "settled"} <= set(data)


def test_hops_count_path_length():
    # one lander drifting 2.5 units in total needs 3 unit hops
    init = sw.SwarmState((np.zeros((1, 2))), np.array([[1.25, 0.0]]))
    p = sw.VirtualForceParams(mu_i=2.0)
    _, trace, m = sw.run_coverage(init, p, 0.1, 2000, area_side=None)
    path = np.hypot(*np.diff(trace.positions[:, 0], axis=0).T).sum()
    assert m.hops_total == int(np.ceil(path))


@pytest.mark.parametrize("bad", [{"C_cov": 0}, {"R_c": -1}, {"D": -1}, {"mu_i": 0}, {"com_law": "x"}])
def test_params_validation(bad):
    with pytest.raises(ValueError):
        sw.VirtualForceParams(**bad)


def test_state_validation():
    with pytest.raises(ValueError):
        sw.SwarmState(np.zeros((0, 2)), np.zeros((0, 2)))
    with pytest.raises(ValueError):
        sw.SwarmState(np.zeros((2, 2)), np.zeros((3, 2)))
