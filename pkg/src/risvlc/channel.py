"""NLoS optical channel through mirror-array RIS elements.

Scalar functions give the per-link geometry; :class:`ChannelGeometry`
precomputes every factor that does not depend on the mirror angles so that a
whole GA population can be evaluated with one einsum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scenario import WALLS, DeviceOrientation, Scenario

_EZ = np.array([0.0, 0.0, 1.0])


class GeometryError(ValueError):
    """Coincident points or mismatched sizes."""


def lambertian_order(phi_half: float) -> float:
    """Lambertian emission order m = -log2(cos(phi_half))."""
    if not 0.0 < phi_half < math.pi / 2:
        raise GeometryError(f"phi_half must lie in (0, pi/2), got {phi_half}")
    return -math.log2(math.cos(phi_half))


def concentrator_gain(f: float, xi_fov: float) -> float:
    """Non-imaging concentrator gain f^2 / sin^2(FoV)."""
    if not 0.0 < xi_fov <= math.pi / 2:
        raise GeometryError(f"xi_fov must lie in (0, pi/2], got {xi_fov}")
    return f**2 / math.sin(xi_fov) ** 2


def _unit(src, dst) -> tuple[np.ndarray, float]:
    v = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    d = float(np.linalg.norm(v))
    if d == 0.0:
        raise GeometryError(f"coincident points {src} and {dst}")
    return v / d, d


def incidence_cosine(rx_pos, rx_orientation: DeviceOrientation, element_pos) -> float:
    """Cosine between the tilted receiver normal and the receiver->element ray.

    Negative values (element behind the photodiode) are returned as-is.
    """
    ray, _ = _unit(rx_pos, element_pos)
    return float(ray @ rx_orientation.normal)


def mirror_normal(omega, gamma, wall: str = "y0") -> np.ndarray:
    """Unit normal of a mirror with roll ``omega`` and yaw ``gamma`` on ``wall``.

    Broadcasts over array-valued angles; the trailing axis holds xyz.
    """
    inward, horiz = (np.asarray(v) for v in WALLS[wall])
    omega = np.asarray(omega, dtype=float)[..., None]
    gamma = np.asarray(gamma, dtype=float)[..., None]
    return np.sin(gamma) * np.cos(omega) * horiz + np.cos(gamma) * np.cos(omega) * inward + np.sin(omega) * _EZ


def irradiance_cosine(element_pos, omega: float, gamma: float, rx_pos, wall: str = "y0") -> float:
    """Cosine between the mirror normal and the element->receiver ray.

    With omega = gamma = 0 the mirror faces straight into the room, so on wall
    y=0 this reduces to (y_rx - y_k) / d.
    """
    ray, _ = _unit(element_pos, rx_pos)
    return float(ray @ mirror_normal(omega, gamma, wall))


@dataclass(frozen=True)
class RisElementPose:
    index: int
    position: tuple[float, float, float]
    omega: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        lim = math.pi / 2
        if not (-lim <= self.omega <= lim and -lim <= self.gamma <= lim):
            raise GeometryError(f"element {self.index}: angles must lie in [-pi/2, pi/2]")


def poses_from_angles(scenario: Scenario, omega, gamma) -> list[RisElementPose]:
    pos = scenario.elements
    if len(omega) != len(pos) or len(gamma) != len(pos):
        raise GeometryError(f"expected {len(pos)} angles per axis, got {len(omega)} and {len(gamma)}")
    return [RisElementPose(k, tuple(pos[k]), float(omega[k]), float(gamma[k])) for k in range(len(pos))]


def _ap_side(scenario: Scenario, element_pos) -> tuple[float, float, float]:
    """(d_k, cos Phi_k, cos xi_k) for the AP -> element hop.

    Phi_k is measured from the AP's downward normal, xi_k from the wall's
    inward normal; neither depends on the mirror tilt.
    """
    ray, d = _unit(scenario.layout.ap_position, element_pos)
    cos_phi = float(-ray[2])
    cos_xi = float(-ray @ scenario.layout.ris_panel.normal)
    return d, cos_phi, cos_xi


def element_gain(scenario: Scenario, pose: RisElementPose, rx_pos, rx_orientation: DeviceOrientation) -> float:
    """DC gain of the AP -> element -> receiver path.

    Zero when the incidence angle exceeds the FoV or when any of the four
    cosines is non-positive.
    """
    p = scenario.params
    m = lambertian_order(p.phi_half)
    d_k, cos_phi_k, cos_xi_k = _ap_side(scenario, pose.position)
    _, d_ku = _unit(pose.position, rx_pos)
    cos_phi_ku = irradiance_cosine(pose.position, pose.omega, pose.gamma, rx_pos, scenario.layout.ris_panel.wall)
    cos_xi_ku = incidence_cosine(rx_pos, rx_orientation, pose.position)

    if cos_xi_ku < math.cos(p.xi_fov):
        return 0.0
    if min(cos_phi_k, cos_xi_k, cos_phi_ku, cos_xi_ku) <= 0.0:
        return 0.0
    area = scenario.layout.ris_panel.element_area
    gc = concentrator_gain(p.refractive_index, p.xi_fov)
    scale = p.rho_ris * (m + 1) * p.A_pd / (2 * math.pi**2 * d_k**2 * d_ku**2)
    return (
        scale * area * gc * p.G_f
        * math.exp(m * math.log(cos_phi_k)) * cos_xi_k * cos_phi_ku * cos_xi_ku
    )


@dataclass(frozen=True)
class ChannelState:
    H: np.ndarray  # (K, U) legitimate users
    h_e: np.ndarray  # (K,) eavesdropper

    def rows(self) -> list[tuple[int, str, float]]:
        """(k, receiver, gain) triples, k and users 1-based, Eve labelled 'e'."""
        out = []
        K, U = self.H.shape
        for k in range(K):
            for u in range(U):
                out.append((k + 1, str(u + 1), float(self.H[k, u])))
            out.append((k + 1, "e", float(self.h_e[k])))
        return out


class ChannelGeometry:
    """Angle-independent channel factors for a fixed scenario.

    ``gains(omega, gamma)`` returns an array of shape (..., K, U + 1) whose
    last column is Eve.
    """

    def __init__(
        self,
        scenario: Scenario,
        element_pos=None,
        user_orientations: Sequence[DeviceOrientation] | None = None,
        eve_orientation: DeviceOrientation | None = None,
    ):
        p = scenario.params
        panel = scenario.layout.ris_panel
        self.wall = panel.wall
        elems = scenario.elements if element_pos is None else np.asarray(element_pos, dtype=float)
        user_or = scenario.user_orientations if user_orientations is None else tuple(user_orientations)
        eve_or = scenario.eve_orientation if eve_orientation is None else eve_orientation
        rx = np.vstack([scenario.users, scenario.eve[None, :]])
        rx_normals = np.array([o.normal for o in (*user_or, eve_or)])
        if len(rx_normals) != len(rx):
            raise GeometryError("one orientation per receiver required")

        ap = np.asarray(scenario.layout.ap_position, dtype=float)
        to_elem = elems - ap
        d_k = np.linalg.norm(to_elem, axis=1)
        to_rx = rx[None, :, :] - elems[:, None, :]
        d_kr = np.linalg.norm(to_rx, axis=2)
        if np.any(d_k == 0) or np.any(d_kr == 0):
            raise GeometryError("coincident AP/element/receiver positions")
        cos_phi_k = -to_elem[:, 2] / d_k
        cos_xi_k = -(to_elem @ panel.normal) / d_k
        self.rays = to_rx / d_kr[..., None]
        cos_xi_kr = -np.einsum("krc,rc->kr", self.rays, rx_normals)

        m = lambertian_order(p.phi_half)
        gc = concentrator_gain(p.refractive_index, p.xi_fov)
        ap_ok = (cos_phi_k > 0) & (cos_xi_k > 0)
        ap_term = np.where(ap_ok, np.exp(m * np.log(np.where(ap_ok, cos_phi_k, 1.0))) * cos_xi_k, 0.0)
        rx_ok = (cos_xi_kr >= math.cos(p.xi_fov)) & (cos_xi_kr > 0)
        const = p.rho_ris * (m + 1) * p.A_pd * panel.element_area * gc * p.G_f / (2 * math.pi**2)
        self.static = np.where(
            rx_ok, const * ap_term[:, None] * cos_xi_kr / (d_k[:, None] ** 2 * d_kr**2), 0.0
        )
        self.K, self.R = self.static.shape

    def gains(self, omega, gamma) -> np.ndarray:
        normals = mirror_normal(omega, gamma, self.wall)  # (..., K, 3)
        cos_phi = np.einsum("...kc,krc->...kr", normals, self.rays)
        return self.static * np.maximum(cos_phi, 0.0)


def assemble_channels(
    scenario: Scenario,
    poses: Sequence[RisElementPose],
    user_orientations: Sequence[DeviceOrientation] | None = None,
    eve_orientation: DeviceOrientation | None = None,
) -> ChannelState:
    """Gain matrix for all users plus Eve's gain vector for one RIS configuration."""
    if len(poses) != scenario.K:
        raise GeometryError(f"expected {scenario.K} poses, got {len(poses)}")
    pos = np.array([p.position for p in poses], dtype=float)
    geo = ChannelGeometry(scenario, pos, user_orientations, eve_orientation)
    g = geo.gains(np.array([p.omega for p in poses]), np.array([p.gamma for p in poses]))
    return ChannelState(H=g[:, :-1], h_e=g[:, -1])
