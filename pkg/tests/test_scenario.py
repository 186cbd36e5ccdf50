import math

import numpy as np
import pytest
from scipy import integrate

from risvlc.scenario import (
    DEG,
    DeviceOrientation,
    OrientationModel,
    RisPanel,
    ScenarioError,
    SystemParameters,
    build_default_scenario,
    element_positions,
    grid_shape,
    sample_orientation,
)


def test_defaults_match_parameter_table():
    sc = build_default_scenario()
    p = sc.params
    assert (p.P_S, p.K, p.U, p.B) == (5.0, 100, 4, 200e6)
    assert p.xi_fov == pytest.approx(85 * DEG)
    assert p.phi_half == pytest.approx(70 * DEG)
    assert (p.rho_ris, p.G_f, p.refractive_index, p.R_pd, p.N_o, p.R_min) == (0.95, 1.0, 1.5, 0.53, 1e-21, 30e3)
    assert sc.layout.room_dims == (5.0, 5.0, 3.0)
    assert all(u[2] == 0.85 for u in sc.layout.user_positions)
    assert len(sc.user_orientations) == 4


def test_desk_override():
    sc = build_default_scenario({"K": 30, "U": 2, "P_S": 5})
    assert (sc.K, sc.U, sc.params.P_S) == (30, 2, 5)
    panel = sc.layout.ris_panel
    assert panel.rows * panel.cols == 30


@pytest.mark.parametrize("overrides", [
    {"rho_ris": 1.5},
    {"bogus": 1},
    {"K": 30, "ris_rows": 4, "ris_cols": 4},
    {"eve_position": (6.0, 1.0, 0.85)},
    {"user_positions": [(1.0, 1.0, 0.85)]},
    {"xi_fov_deg": 95},
    {"user_layout": "spiral"},
])
def test_invalid_overrides(overrides):
    with pytest.raises(ScenarioError):
        build_default_scenario(overrides)


def test_panel_centred_on_wall_at_mid_height():
    sc = build_default_scenario()
    e = sc.elements
    assert np.allclose(e[:, 1], 0.0)
    assert e[:, 0].mean() == pytest.approx(2.5)
    assert e[:, 2].mean() == pytest.approx(1.5)


def test_default_users_in_front_of_panel():
    sc = build_default_scenario({"K": 30, "U": 2})
    users = sc.users
    assert np.allclose(users[:, 1], 0.5)
    assert np.allclose(users[:, 0], [2.25, 2.75])
    assert tuple(sc.eve) == (4.5, 4.5, 0.85)
    assert sc.eve_orientation == DeviceOrientation(0.0, 0.0)


def test_circle_layout_option():
    sc = build_default_scenario({"user_layout": "circle", "user_radius": 1.5})
    r = np.hypot(sc.users[:, 0] - 2.5, sc.users[:, 1] - 2.5)
    assert np.allclose(r, 1.5)


def test_degree_keys():
    sc = build_default_scenario({"xi_fov_deg": 75})
    assert sc.params.xi_fov == pytest.approx(75 * DEG)


def test_build_is_pure():
    a = build_default_scenario({"K": 30, "U": 2}, seed=7)
    b = build_default_scenario({"K": 30, "U": 2}, seed=7)
    c = build_default_scenario({"K": 30, "U": 2}, seed=8)
    assert a == b
    assert a.user_orientations != c.user_orientations


def test_fixed_model_faces_up(rng):
    o = sample_orientation(OrientationModel(kind="fixed"), rng)
    assert o == DeviceOrientation(0.0, 0.0)
    assert np.allclose(o.normal, [0, 0, 1])


def test_sampling_deterministic():
    m = OrientationModel()
    a = [sample_orientation(m, np.random.default_rng(3)) for _ in range(2)]
    assert a[0] == a[1]


def _truncated_laplace_mean(mu, std):
    b = std / math.sqrt(2)
    f = lambda a: math.exp(-abs(a - mu) / b)
    num = integrate.quad(lambda a: a * f(a), 0, math.pi / 2, points=[mu])[0]
    den = integrate.quad(f, 0, math.pi / 2, points=[mu])[0]
    return num / den


def test_truncated_laplace_mean_monte_carlo():
    m = OrientationModel()
    rng = np.random.default_rng(2024)
    alphas = np.array([sample_orientation(m, rng).alpha for _ in range(100_000)])
    expected = _truncated_laplace_mean(m.alpha_mean, m.alpha_std)
    assert abs(alphas.mean() - expected) < 1 * DEG
    assert abs(alphas.mean() - 41 * DEG) < 1 * DEG


def test_orientation_ranges_10k_draws():
    rng = np.random.default_rng(0)
    m = OrientationModel(alpha_mean=80 * DEG, alpha_std=20 * DEG)  # lots of truncation
    for _ in range(10_000):
        o = sample_orientation(m, rng)
        assert 0.0 <= o.alpha <= math.pi / 2
        assert -math.pi <= o.beta <= math.pi


def test_device_orientation_ranges():
    with pytest.raises(ScenarioError):
        DeviceOrientation(alpha=-0.1)
    with pytest.raises(ScenarioError):
        DeviceOrientation(beta=4.0)


def test_system_parameters_validation():
    with pytest.raises(ScenarioError):
        SystemParameters(B=0)
    with pytest.raises(ScenarioError):
        SystemParameters(xi_fov=0)


def test_single_element_centre():
    panel = RisPanel("y0", (1.0, 0.0, 1.0), 1, 1, 0.1)
    assert np.allclose(element_positions(panel), [[1.05, 0.0, 1.05]])


def test_two_by_two_spacing():
    e = element_positions(RisPanel("y0", (0.0, 0.0, 0.0), 2, 2, 0.1))
    d = np.linalg.norm(e[:, None] - e[None], axis=2)
    assert np.allclose(sorted(d[0])[1:3], [0.1, 0.1])
    assert len({tuple(p) for p in np.round(e, 12)}) == 4


def test_default_grid_on_wall():
    sc = build_default_scenario()
    e = sc.elements
    assert e.shape == (100, 3)
    assert np.all(e[:, 1] == 0.0)
    assert np.all((e[:, 2] >= 0) & (e[:, 2] <= 3))
    assert len({tuple(p) for p in np.round(e, 12)}) == 100


@pytest.mark.parametrize("wall", ["y0", "ymax", "x0", "xmax"])
def test_elements_on_declared_wall(wall):
    sc = build_default_scenario({"K": 12, "ris_wall": wall, "user_layout": "circle"})
    e = sc.elements
    n = sc.layout.ris_panel.normal
    plane = e @ n
    assert np.allclose(plane, plane[0])


def test_grid_shape():
    assert grid_shape(100) == (10, 10)
    assert grid_shape(30) == (5, 6)
    assert grid_shape(7) == (1, 7)
