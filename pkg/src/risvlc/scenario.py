"""Deployment geometry, system constants and the random device-orientation model.

Everything here is immutable once built.  Angles are radians internally;
the config-file loader in :mod:`risvlc.configio` handles degree conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping

import numpy as np

DEG = math.pi / 180.0

# inward normal and in-plane horizontal axis for each supported wall
WALLS: dict[str, tuple[tuple[float, float, float], tuple[float, float, float]]] = {
    "y0": ((0.0, 1.0, 0.0), (1.0, 0.0, 0.0)),
    "ymax": ((0.0, -1.0, 0.0), (-1.0, 0.0, 0.0)),
    "x0": ((1.0, 0.0, 0.0), (0.0, -1.0, 0.0)),
    "xmax": ((-1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
}


class ScenarioError(ValueError):
    """Raised for invalid overrides or inconsistent geometry."""


@dataclass(frozen=True)
class PowerConsumptionModel:
    """Per-component power draw in watts (transmitter, RIS element, receiver)."""

    P_DAC: float = 0.175
    P_Filter: float = 0.0025
    P_PA: float = 0.280
    P_Driver: float = 2.758
    P_TCircuit: float = 3.250
    P_Element: float = 0.100
    P_ADC: float = 0.095
    P_TIA: float = 2.500
    P_RCircuit: float = 0.0019

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ScenarioError(f"{f.name} must be >= 0, got {getattr(self, f.name)}")


@dataclass(frozen=True)
class SystemParameters:
    P_S: float = 5.0
    K: int = 100
    U: int = 4
    xi_fov: float = 85.0 * DEG
    rho_ris: float = 0.95
    phi_half: float = 70.0 * DEG
    G_f: float = 1.0
    refractive_index: float = 1.5
    A_pd: float = 1e-4
    R_pd: float = 0.53
    B: float = 200e6
    N_o: float = 1e-21
    R_min: float = 30e3
    consumption: PowerConsumptionModel = field(default_factory=PowerConsumptionModel)

    def __post_init__(self):
        for name in ("P_S", "G_f", "refractive_index", "A_pd", "R_pd", "B", "N_o"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.K < 1 or self.U < 1:
            raise ScenarioError(f"K and U must be >= 1, got K={self.K}, U={self.U}")
        if not 0 < self.xi_fov <= math.pi / 2:
            raise ScenarioError(f"xi_fov must lie in (0, pi/2], got {self.xi_fov}")
        if not 0 < self.phi_half < math.pi / 2:
            raise ScenarioError(f"phi_half must lie in (0, pi/2), got {self.phi_half}")
        if not 0 < self.rho_ris <= 1:
            raise ScenarioError(f"rho_ris must lie in (0, 1], got {self.rho_ris}")
        if self.R_min < 0:
            raise ScenarioError(f"R_min must be >= 0, got {self.R_min}")

    @property
    def noise_power(self) -> float:
        """Receiver noise variance N_o * B in A^2."""
        return self.N_o * self.B


@dataclass(frozen=True)
class RisPanel:
    wall: str
    origin: tuple[float, float, float]
    rows: int
    cols: int
    element_side: float = 0.1

    @property
    def K(self) -> int:
        return self.rows * self.cols

    @property
    def element_area(self) -> float:
        return self.element_side**2

    @property
    def normal(self) -> np.ndarray:
        return np.asarray(WALLS[self.wall][0])

    @property
    def horizontal(self) -> np.ndarray:
        return np.asarray(WALLS[self.wall][1])


@dataclass(frozen=True)
class RoomLayout:
    room_dims: tuple[float, float, float]
    ap_position: tuple[float, float, float]
    ris_panel: RisPanel
    user_positions: tuple[tuple[float, float, float], ...]
    eve_position: tuple[float, float, float]


@dataclass(frozen=True)
class DeviceOrientation:
    """Handheld receiver tilt: polar angle ``alpha`` from vertical, azimuth ``beta``."""

    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= math.pi / 2:
            raise ScenarioError(f"alpha must lie in [0, pi/2], got {self.alpha}")
        if not -math.pi <= self.beta <= math.pi:
            raise ScenarioError(f"beta must lie in [-pi, pi], got {self.beta}")

    @property
    def normal(self) -> np.ndarray:
        sa = math.sin(self.alpha)
        return np.array([math.cos(self.beta) * sa, math.sin(self.beta) * sa, math.cos(self.alpha)])


@dataclass(frozen=True)
class OrientationModel:
    alpha_mean: float = 41.0 * DEG
    alpha_std: float = 9.0 * DEG
    kind: str = "laplace"  # "laplace" (truncated to [0, pi/2]) or "fixed"
    fixed_alpha: float = 0.0
    fixed_beta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("laplace", "fixed"):
            raise ScenarioError(f"unknown orientation model kind {self.kind!r}")
        if self.alpha_std <= 0:
            raise ScenarioError("alpha_std must be > 0")


def sample_orientation(model: OrientationModel, rng: np.random.Generator) -> DeviceOrientation:
    """Draw one device orientation.

    The polar angle follows a Laplace law with the model's mean and standard
    deviation (scale = std / sqrt(2)), truncated to [0, pi/2] by rejection; the
    azimuth is uniform on [-pi, pi].
    """
    if model.kind == "fixed":
        return DeviceOrientation(model.fixed_alpha, model.fixed_beta)
    scale = model.alpha_std / math.sqrt(2.0)
    while True:
        alpha = rng.laplace(model.alpha_mean, scale)
        if 0.0 <= alpha <= math.pi / 2:
            break
    beta = rng.uniform(-math.pi, math.pi)
    return DeviceOrientation(float(alpha), float(beta))


def element_positions(layout: RoomLayout | RisPanel) -> np.ndarray:
    """Centres of the RIS elements, shape (K, 3), row-major (rows stacked upward)."""
    panel = layout.ris_panel if isinstance(layout, RoomLayout) else layout
    side = panel.element_side
    r, c = np.meshgrid(np.arange(panel.rows), np.arange(panel.cols), indexing="ij")
    offsets = (
        (c.ravel()[:, None] + 0.5) * side * panel.horizontal
        + (r.ravel()[:, None] + 0.5) * side * np.array([0.0, 0.0, 1.0])
    )
    return np.asarray(panel.origin, dtype=float) + offsets


@dataclass(frozen=True)
class Scenario:
    params: SystemParameters
    layout: RoomLayout
    orientation_model: OrientationModel
    user_orientations: tuple[DeviceOrientation, ...]
    eve_orientation: DeviceOrientation
    seed: int = 0

    @property
    def K(self) -> int:
        return self.params.K

    @property
    def U(self) -> int:
        return self.params.U

    @property
    def elements(self) -> np.ndarray:
        return element_positions(self.layout)

    @property
    def users(self) -> np.ndarray:
        return np.asarray(self.layout.user_positions, dtype=float)

    @property
    def eve(self) -> np.ndarray:
        return np.asarray(self.layout.eve_position, dtype=float)

    def with_params(self, **changes) -> "Scenario":
        """Copy with some SystemParameters fields replaced (geometry untouched)."""
        return replace(self, params=replace(self.params, **changes))


def grid_shape(K: int) -> tuple[int, int]:
    """Most square rows x cols factorisation of K with rows <= cols."""
    rows = max(d for d in range(1, int(math.isqrt(K)) + 1) if K % d == 0)
    return rows, K // rows


def circle_positions(U: int, center, radius: float, height: float) -> tuple[tuple[float, float, float], ...]:
    angles = 2 * math.pi * np.arange(U) / U
    return tuple(
        (center[0] + radius * math.cos(a), center[1] + radius * math.sin(a), height) for a in angles
    )


def line_positions(U: int, panel_center, inward, horiz, distance: float, spread: float,
                   height: float) -> tuple[tuple[float, float, float], ...]:
    """U receivers evenly spaced over ``spread`` metres on a line parallel to
    the RIS wall, ``distance`` metres in front of the panel centre."""
    out = []
    for u in range(U):
        p = np.asarray(panel_center, float) + distance * inward + spread * ((u + 0.5) / U - 0.5) * horiz
        out.append((float(p[0]), float(p[1]), height))
    return tuple(out)


_PARAM_KEYS = {f.name for f in fields(SystemParameters)} - {"consumption"}
_CONSUMPTION_KEYS = {f.name for f in fields(PowerConsumptionModel)}
_LAYOUT_KEYS = {
    "room_dims", "ap_position", "ris_wall", "ris_center", "ris_rows", "ris_cols",
    "element_side", "user_positions", "eve_position", "user_height", "user_layout",
    "user_radius", "user_wall_distance", "user_spread",
}
_ORIENT_KEYS = {"alpha_mean", "alpha_std", "orientation_kind", "fixed_alpha", "fixed_beta", "eve_orientation"}
_DEGREE_KEYS = {"xi_fov", "phi_half", "alpha_mean", "alpha_std", "fixed_alpha", "fixed_beta"}
KNOWN_KEYS = frozenset(
    _PARAM_KEYS | _CONSUMPTION_KEYS | _LAYOUT_KEYS | _ORIENT_KEYS | {f"{k}_deg" for k in _DEGREE_KEYS}
)


def _normalise(overrides: Mapping[str, Any]) -> dict[str, Any]:
    out = {}
    for key, value in overrides.items():
        if key not in KNOWN_KEYS:
            raise ScenarioError(f"unknown override key {key!r}")
        if key.endswith("_deg"):
            out[key[:-4]] = float(value) * DEG
        else:
            out[key] = value
    return out


def _inside(p, dims) -> bool:
    return all(0.0 <= p[i] <= dims[i] for i in range(3))


def build_default_scenario(overrides: Mapping[str, Any] | None = None, seed: int = 0) -> Scenario:
    """Assemble a scenario from Table-II style defaults plus ``overrides``.

    Defaults: 5 x 5 x 3 m room, AP at the ceiling centre, RIS panel centred on
    wall y=0 at 1.5 m height, users spread over 1 m on a line 0.5 m in front of
    the panel (``user_layout="circle"`` puts them on a ``user_radius`` circle
    around the room centre instead), receiver height 0.85 m, Eve at
    (4.5, 4.5, 0.85) facing straight up.  User
    orientations are drawn from the orientation model with ``seed``.

    Override keys are SystemParameters / PowerConsumptionModel field names,
    layout keys (``room_dims``, ``ap_position``, ``ris_wall``, ``ris_center``,
    ``ris_rows``, ``ris_cols``, ``element_side``, ``user_positions``,
    ``eve_position``, ``user_height``, ``user_layout``, ``user_radius``,
    ``user_wall_distance``, ``user_spread``) and orientation keys.
    Angle-valued keys also accept a ``_deg`` suffixed form.
    """
    ov = _normalise(overrides or {})

    param_kw = {k: ov[k] for k in _PARAM_KEYS if k in ov}
    cons_kw = {k: ov[k] for k in _CONSUMPTION_KEYS if k in ov}

    rows, cols = ov.get("ris_rows"), ov.get("ris_cols")
    if "K" in param_kw:
        K = int(param_kw["K"])
        if rows is None and cols is None:
            rows, cols = grid_shape(K)
        elif rows is None or cols is None:
            rows = rows if rows is not None else K // int(cols)
            cols = cols if cols is not None else K // int(rows)
        if int(rows) * int(cols) != K:
            raise ScenarioError(f"K={K} inconsistent with {rows}x{cols} RIS grid")
    else:
        if rows is None and cols is None:
            rows, cols = 10, 10
        elif rows is None or cols is None:
            raise ScenarioError("ris_rows and ris_cols must be given together without K")
        param_kw["K"] = int(rows) * int(cols)
    rows, cols = int(rows), int(cols)

    params = SystemParameters(consumption=PowerConsumptionModel(**cons_kw), **param_kw)

    dims = tuple(float(v) for v in ov.get("room_dims", (5.0, 5.0, 3.0)))
    if len(dims) != 3 or min(dims) <= 0:
        raise ScenarioError(f"room_dims must be three positive lengths, got {dims}")
    ap = tuple(float(v) for v in ov.get("ap_position", (dims[0] / 2, dims[1] / 2, dims[2])))

    wall = ov.get("ris_wall", "y0")
    if wall not in WALLS:
        raise ScenarioError(f"unknown ris_wall {wall!r}; expected one of {sorted(WALLS)}")
    side = float(ov.get("element_side", 0.1))
    if side <= 0:
        raise ScenarioError("element_side must be > 0")
    normal, horiz = (np.asarray(v) for v in WALLS[wall])
    # centre on the wall: horizontal coordinate along the wall axis plus height
    wall_mid = {
        "y0": (dims[0] / 2, 0.0, 0.0),
        "ymax": (dims[0] / 2, dims[1], 0.0),
        "x0": (0.0, dims[1] / 2, 0.0),
        "xmax": (dims[0], dims[1] / 2, 0.0),
    }[wall]
    h_center, z_center = ov.get("ris_center", (None, 1.5))
    center = np.array(wall_mid, dtype=float)
    if h_center is not None:
        axis = int(np.argmax(np.abs(horiz)))
        center[axis] = float(h_center)
    center[2] = float(z_center)
    origin = center - (cols * side / 2) * horiz - np.array([0.0, 0.0, rows * side / 2])
    panel = RisPanel(wall, tuple(float(v) for v in origin), rows, cols, side)

    height = float(ov.get("user_height", 0.85))
    if "user_positions" in ov:
        users = tuple(tuple(float(c) for c in p) for p in ov["user_positions"])
        if len(users) != params.U:
            raise ScenarioError(f"{len(users)} user positions given for U={params.U}")
    elif ov.get("user_layout", "line") == "line":
        users = line_positions(
            params.U, center, normal, horiz,
            float(ov.get("user_wall_distance", 0.5)), float(ov.get("user_spread", 1.0)), height,
        )
    elif ov["user_layout"] == "circle":
        radius = float(ov.get("user_radius", 1.5))
        users = circle_positions(params.U, (dims[0] / 2, dims[1] / 2), radius, height)
    else:
        raise ScenarioError(f"user_layout must be 'line' or 'circle', got {ov['user_layout']!r}")
    eve = tuple(float(v) for v in ov.get("eve_position", (4.5, 4.5, height)))

    layout = RoomLayout(dims, ap, panel, users, eve)
    elems = element_positions(layout)
    for name, p in [("ap_position", ap), ("eve_position", eve)] + [("user_positions", u) for u in users]:
        if not _inside(p, dims):
            raise ScenarioError(f"{name} {p} lies outside the room {dims}")
    if not all(_inside(p, dims) for p in elems):
        raise ScenarioError("RIS panel does not fit on the wall")
    rx = np.array((eve,) + users)
    if np.min(np.linalg.norm(elems - np.asarray(ap), axis=1)) == 0.0:
        raise ScenarioError("AP coincides with an RIS element")
    if np.min(np.linalg.norm(elems[:, None, :] - rx[None, :, :], axis=2)) == 0.0:
        raise ScenarioError("a receiver coincides with an RIS element")

    model = OrientationModel(
        alpha_mean=float(ov.get("alpha_mean", 41.0 * DEG)),
        alpha_std=float(ov.get("alpha_std", 9.0 * DEG)),
        kind=ov.get("orientation_kind", "laplace"),
        fixed_alpha=float(ov.get("fixed_alpha", 0.0)),
        fixed_beta=float(ov.get("fixed_beta", 0.0)),
    )
    rng = np.random.default_rng(seed)
    user_orient = tuple(sample_orientation(model, rng) for _ in range(params.U))
    eve_mode = ov.get("eve_orientation", "fixed")
    if eve_mode == "fixed":
        eve_orient = DeviceOrientation(0.0, 0.0)
    elif eve_mode == "random":
        eve_orient = sample_orientation(model, rng)
    else:
        raise ScenarioError(f"eve_orientation must be 'fixed' or 'random', got {eve_mode!r}")

    return Scenario(params, layout, model, user_orient, eve_orient, seed)
