"""Achievable, eavesdropper and secrecy rates for RSMA and power-domain NOMA.

All rate expressions share one kernel::

    B * log2(1 + e/(2 pi) * (R_pd g)^2 S / ((R_pd g)^2 I + N_o B))

with ``g`` the composite gain h^T g_u, ``S`` the useful electrical power and
``I`` the interfering electrical power.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import ChannelState
from .scenario import PowerConsumptionModel, Scenario, SystemParameters

__all__ = [
    "PowerConsumptionModel", "RsmaPowerAllocation", "NomaPowerAllocation", "RateReport",
    "composite_gain", "link_rate", "rsma_common_rate", "rsma_private_rate", "rsma_eve_rates",
    "rsma_min_secrecy", "rsma_report", "noma_coefficients", "sic_order", "noma_user_rate",
    "noma_eve_rate", "noma_min_secrecy", "noma_report", "total_power", "min_see",
    "rsma_rates_batch", "noma_rates_batch",
]

SNR_FACTOR = math.e / (2 * math.pi)
_LN2 = math.log(2.0)


def _params(obj) -> SystemParameters:
    return obj.params if isinstance(obj, Scenario) else obj


@dataclass(frozen=True)
class RsmaPowerAllocation:
    P0: float
    P: tuple[float, ...]

    def __post_init__(self):
        if self.P0 < 0 or min(self.P, default=0.0) < 0:
            raise ValueError("RSMA powers must be non-negative")

    @property
    def total(self) -> float:
        return self.P0 + sum(self.P)


@dataclass(frozen=True)
class NomaPowerAllocation:
    epsilon: float
    U: int

    @property
    def c(self) -> np.ndarray:
        return noma_coefficients(self.epsilon, self.U)


@dataclass
class RateReport:
    scheme: str
    user_rates: list  # RSMA: [common, private] per user; NOMA: one rate per user
    eve_rates: list
    min_secrecy_rate: float
    see: float
    p_total: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def composite_gain(h, g) -> float:
    """Effective channel of one user: sum_k h[k] g[k]."""
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    if h.shape != g.shape:
        raise ValueError(f"shape mismatch {h.shape} vs {g.shape}")
    return float(h @ g)


def link_rate(params, gain, signal, interference):
    """Rate kernel; broadcasts over array arguments."""
    p = _params(params)
    q = (p.R_pd * np.asarray(gain, dtype=float)) ** 2
    sinr = SNR_FACTOR * q * signal / (q * interference + p.noise_power)
    return p.B * np.log1p(sinr) / _LN2


def rsma_common_rate(scenario, gain_u: float, alloc: RsmaPowerAllocation) -> float:
    return float(link_rate(scenario, gain_u, alloc.P0, sum(alloc.P)))


def rsma_private_rate(scenario, gain_u: float, alloc: RsmaPowerAllocation, u: int) -> float:
    if not 0 <= u < len(alloc.P):
        raise IndexError(f"user index {u} out of range for {len(alloc.P)} users")
    others = sum(alloc.P) - alloc.P[u]
    return float(link_rate(scenario, gain_u, alloc.P[u], others))


def rsma_eve_rates(scenario, gain_e_u: float, alloc: RsmaPowerAllocation, u: int) -> tuple[float, float]:
    """Eve's (common, private) rates when wiretapping user ``u``."""
    return rsma_common_rate(scenario, gain_e_u, alloc), rsma_private_rate(scenario, gain_e_u, alloc, u)


def _gains(channels: ChannelState, G) -> tuple[np.ndarray, np.ndarray]:
    G = np.asarray(G, dtype=float)
    if G.shape != channels.H.shape:
        raise ValueError(f"association shape {G.shape} does not match channel {channels.H.shape}")
    gu = np.array([composite_gain(channels.H[:, u], G[:, u]) for u in range(G.shape[1])])
    ge = np.array([composite_gain(channels.h_e, G[:, u]) for u in range(G.shape[1])])
    return gu, ge


def rsma_report(scenario, channels: ChannelState, G, alloc: RsmaPowerAllocation, common: str = "per_user") -> RateReport:
    """Per-user RSMA rates and the clamped minimum secrecy rate.

    ``common="min"`` limits every user's common-stream rate to the weakest
    user's, i.e. the joint-decodability variant; the default keeps the per-user
    value.
    """
    gu, ge = _gains(channels, G)
    U = len(gu)
    rc = [rsma_common_rate(scenario, gu[u], alloc) for u in range(U)]
    if common == "min":
        rc = [min(rc)] * U
    elif common != "per_user":
        raise ValueError(f"unknown common-rate mode {common!r}")
    rp = [rsma_private_rate(scenario, gu[u], alloc, u) for u in range(U)]
    eve = [rsma_eve_rates(scenario, ge[u], alloc, u) for u in range(U)]
    diffs = [(rc[u] + rp[u]) - (eve[u][0] + eve[u][1]) for u in range(U)]
    sr = max(0.0, min(diffs))
    pt = total_power(scenario)
    return RateReport("RSMA", [[rc[u], rp[u]] for u in range(U)], [list(e) for e in eve], sr, min_see(sr, pt), pt)


def rsma_min_secrecy(scenario, channels: ChannelState, G, alloc: RsmaPowerAllocation, common: str = "per_user") -> float:
    return rsma_report(scenario, channels, G, alloc, common).min_secrecy_rate


def noma_coefficients(epsilon: float, U: int) -> np.ndarray:
    """Power fractions c_u = eps (1-eps)^(u-1) for u < U and (1-eps)^(U-1) for the last user."""
    if not 0.5 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0.5, 1], got {epsilon}")
    if U < 1:
        raise ValueError("U must be >= 1")
    c = epsilon * (1.0 - epsilon) ** np.arange(U, dtype=float)
    c[-1] = (1.0 - epsilon) ** (U - 1)
    return c


def sic_order(gains) -> np.ndarray:
    """User indices sorted by composite gain, strongest first (ties keep index order)."""
    return np.argsort(-np.asarray(gains, dtype=float), kind="stable")


def noma_user_rate(scenario, gain_u: float, c, u: int) -> float:
    """Rate of the user at SIC position ``u`` (0 = strongest)."""
    c = np.asarray(c, dtype=float)
    if not 0 <= u < len(c):
        raise IndexError(f"SIC position {u} out of range for {len(c)} users")
    P_S = _params(scenario).P_S
    return float(link_rate(scenario, gain_u, c[u] * P_S, c[:u].sum() * P_S))


def noma_eve_rate(scenario, gain_e_u: float, c, u: int) -> float:
    """Eve's rate on the user at SIC position ``u``; same decoding order as the users."""
    return noma_user_rate(scenario, gain_e_u, c, u)


def noma_report(scenario, channels: ChannelState, G, c) -> RateReport:
    gu, ge = _gains(channels, G)
    c = np.asarray(c, dtype=float)
    U = len(gu)
    rank = np.empty(U, dtype=int)
    rank[sic_order(gu)] = np.arange(U)
    ru = [noma_user_rate(scenario, gu[u], c, rank[u]) for u in range(U)]
    re = [noma_eve_rate(scenario, ge[u], c, rank[u]) for u in range(U)]
    sr = max(0.0, min(ru[u] - re[u] for u in range(U)))
    pt = total_power(scenario)
    return RateReport("NOMA", ru, re, sr, min_see(sr, pt), pt, {"sic_order": [int(i) for i in sic_order(gu)]})


def noma_min_secrecy(scenario, channels: ChannelState, G, c) -> float:
    return noma_report(scenario, channels, G, c).min_secrecy_rate


def total_power(scenario) -> float:
    """Transmitter + RIS + receiver consumption in watts."""
    p = _params(scenario)
    c = p.consumption
    tx = p.P_S + c.P_DAC + c.P_Filter + c.P_PA + c.P_Driver + c.P_TCircuit
    ris = p.K * c.P_Element
    rx = p.U * (c.P_ADC + c.P_TIA + c.P_Filter + c.P_RCircuit)
    return tx + ris + rx


def min_see(min_sr: float, p_total: float) -> float:
    if p_total <= 0:
        raise ValueError(f"total power must be > 0, got {p_total}")
    return min_sr / p_total


# -- batched forms used by the optimizer -------------------------------------

def rsma_rates_batch(params, gu, ge, P0, P, common: str = "per_user"):
    """Total (common + private) rates of users and of Eve per wiretapped user.

    gu, ge, P: (N, U); P0: (N,).  Returns two (N, U) arrays.
    """
    sum_p = P.sum(axis=1, keepdims=True)
    P0 = np.asarray(P0)[:, None]
    rc = link_rate(params, gu, P0, sum_p)
    if common == "min":
        rc = np.broadcast_to(rc.min(axis=1, keepdims=True), rc.shape)
    rp = link_rate(params, gu, P, sum_p - P)
    ec = link_rate(params, ge, P0, sum_p)
    ep = link_rate(params, ge, P, sum_p - P)
    return rc + rp, ec + ep


def noma_rates_batch(params, gu, ge, c):
    """User and Eve NOMA rates under original user ids.  gu, ge, c: (N, U)."""
    P_S = _params(params).P_S
    order = np.argsort(-gu, axis=1, kind="stable")
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.arange(gu.shape[1])[None, :].repeat(len(gu), 0), axis=1)
    c_cum = np.concatenate([np.zeros((len(c), 1)), np.cumsum(c, axis=1)[:, :-1]], axis=1)
    sig = np.take_along_axis(c, rank, axis=1) * P_S
    intf = np.take_along_axis(c_cum, rank, axis=1) * P_S
    return link_rate(params, gu, sig, intf), link_rate(params, ge, sig, intf)
