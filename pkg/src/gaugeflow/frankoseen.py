"""One-constant Frank–Oseen surface energy with length penalty.

Energy of a tangential director field q on a surface patch:

    U[X, q] = (K/2) ∫ |∇q|² + |II q|²  dS  +  (ω/4) ∫ (|q|² - 1)² dS

split into a gradient part U_grad = (K/2)∫|∇q|² and the rest U_R.  The
module provides the molecular field δU/δq, the stress fields entering the
shape gradient, and the strong-form assembly of the shape force under each
gauge of surface independence.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .deformation import GaugeSpec, gauge_stress
from .errors import RankMismatch
from .geometry import (GeometryCache, TangentField, pointwise_inner,
                       with_variance)
from .operators import bochner_laplacian, covariant_derivative, divergence
from .surfaces import AmbientField


@dataclass(frozen=True)
class FOParams:
    """Material constants: elastic K, length-penalty omega, mobility.

    The mobility is the rate constant of the gradient flow (config key
    ``mobility``); it does not enter the energy itself.
    """

    K: float = 0.1
    omega: float = 0.5
    mobility: float = 1.0

    def __post_init__(self):
        if self.K <= 0 or self.omega <= 0 or self.mobility <= 0:
            raise ValueError("FOParams entries must be strictly positive")


@dataclass
class EnergyBreakdown:
    U_grad: float
    U_R: float
    total: float
    density: np.ndarray


@dataclass
class StressRecord:
    """Stress fields of the shape gradient (contravariant proxies) plus the
    pointwise energy density u."""

    sigma_FO: TangentField
    sigma_E_I: TangentField
    sigma_E: TangentField
    eta_FO: TangentField
    u: np.ndarray


@dataclass
class ShapeForce:
    """Assembled shape force under a chosen gauge.

    ``V_full`` is the ambient strong form -div_S(σ_FO - σ̄ + ν⊗η_FO); v_t
    and v_n are the tangential/normal split computed independently.  The
    mobility is *not* applied here: V_full = -δU/δX.
    """

    V_full: AmbientField
    v_t: TangentField
    v_n: np.ndarray


def _pointwise(q: TangentField, geo: GeometryCache):
    """Shared pointwise quantities: ∇q (cov), |∇q|², IIq (cov), |IIq|², |q|²."""
    q_d = with_variance(q, geo, ("d",))
    T = covariant_derivative(q_d, geo)                       # q_i|j
    T2 = pointwise_inner(T, T, geo)
    q_up = with_variance(q, geo, ("u",)).proxy
    IIq = np.einsum("abij,abj->abi", geo.II, q_up)           # (II q)_i
    IIq2 = np.einsum("abij,abi,abj->ab", geo.ginv, IIq, IIq)
    qsq = pointwise_inner(q, q, geo)
    return T, T2, IIq, IIq2, qsq


def energy(q: TangentField, geo: GeometryCache, p: FOParams) -> EnergyBreakdown:
    if q.rank != 1:
        raise RankMismatch("director must be a rank-1 field")
    _, T2, _, IIq2, qsq = _pointwise(q, geo)
    u = 0.5 * p.K * (T2 + IIq2) + 0.25 * p.omega * (qsq - 1.0) ** 2
    w = geo.grid.quad_weights() * geo.sqrtg
    U_grad = float(np.sum(w * 0.5 * p.K * T2))
    U_R = float(np.sum(w * (0.5 * p.K * IIq2 + 0.25 * p.omega * (qsq - 1.0) ** 2)))
    return EnergyBreakdown(U_grad, U_R, U_grad + U_R, u)


def molecular_field(q: TangentField, geo: GeometryCache, p: FOParams) -> TangentField:
    """δU/δq = -K(Δq - II²q) + ω(|q|²-1)q, contravariant proxies."""
    q_up = with_variance(q, geo, ("u",))
    lap = bochner_laplacian(q_up, geo).proxy
    II_mix = np.einsum("abik,abkj->abij", geo.ginv, geo.II)  # II^i_j
    II2 = np.einsum("abik,abkj->abij", II_mix, II_mix)
    II2q = np.einsum("abij,abj->abi", II2, q_up.proxy)
    qsq = pointwise_inner(q, q, geo)
    m = -p.K * (lap - II2q) + p.omega * (qsq - 1.0)[..., None] * q_up.proxy
    return TangentField(m, ("u",))


def stresses(q: TangentField, geo: GeometryCache, p: FOParams) -> StressRecord:
    T, T2, IIq, IIq2, qsq = _pointwise(q, geo)
    u = 0.5 * p.K * (T2 + IIq2) + 0.25 * p.omega * (qsq - 1.0) ** 2
    q_up = with_variance(q, geo, ("u",)).proxy

    # (∇q)ᵀ∇q, raised: g^{ik} g^{jl} g^{mn} q_m|k q_n|l
    TtT_dd = np.einsum("abmn,abmk,abnl->abkl", geo.ginv, T.proxy, T.proxy)
    TtT = np.einsum("abik,abjl,abkl->abij", geo.ginv, geo.ginv, TtT_dd)

    II_mix = np.einsum("abik,abkj->abij", geo.ginv, geo.II)
    II2 = np.einsum("abik,abkj->abij", II_mix, II_mix)
    II2q = np.einsum("abij,abj->abi", II2, q_up)
    IIq_up = np.einsum("abij,abj->abi", geo.ginv, IIq)

    sigma_FO = p.K * (TtT + np.einsum("abi,abj->abij", II2q, q_up)) \
        - u[..., None, None] * geo.ginv

    def tracefree_sym(t):
        tr = np.einsum("abij,abij->ab", geo.g, t)
        return 0.5 * (t + np.swapaxes(t, -1, -2)) - 0.5 * tr[..., None, None] * geo.ginv

    sigma_E_I = p.K * tracefree_sym(TtT)
    sigma_E = p.K * tracefree_sym(TtT + np.einsum("abi,abj->abij", IIq_up, IIq_up))

    # η_FO = K( <∇q, II> q - ∇_{(IIq)} q + div(IIq ⊗ q) )
    gradq_II = np.einsum("abij,abik,abjl,abkl->ab", T.proxy, geo.ginv, geo.ginv, geo.II)
    Tu = covariant_derivative(TangentField(q_up, ("u",)), geo).proxy   # q^i_|k
    conv = np.einsum("abik,abk->abi", Tu, IIq_up)
    IIq_q = TangentField(np.einsum("abi,abk->abik", IIq_up, q_up), ("u", "u"))
    div_IIqq = with_variance(divergence(IIq_q, geo, "covariant"), geo, ("u",)).proxy
    eta = p.K * (gradq_II[..., None] * q_up - conv + div_IIqq)

    return StressRecord(TangentField(sigma_FO, ("u", "u")),
                        TangentField(sigma_E_I, ("u", "u")),
                        TangentField(sigma_E, ("u", "u")),
                        TangentField(eta, ("u",)), u)


def shape_force(q: TangentField, geo: GeometryCache, p: FOParams,
                gauge: GaugeSpec) -> ShapeForce:
    """Strong-form shape force -δU/δX under the chosen gauge, with the
    independently assembled tangential/normal split."""
    rec = stresses(q, geo, p)
    m = molecular_field(q, geo, p)
    sig_bar = gauge_stress(q, m, gauge, geo, "frame")

    total = TangentField(rec.sigma_FO.proxy - sig_bar.proxy, ("u", "u"))
    V_full = AmbientField(-divergence(total, geo, "surface", eta=rec.eta_FO).values)

    # Tangential: div σ̄ + (δU/δq)·∇q
    div_sig = with_variance(divergence(sig_bar, geo, "covariant"), geo, ("u",)).proxy
    T = covariant_derivative(with_variance(q, geo, ("d",)), geo).proxy   # q_i|k
    m_gradq = np.einsum("abi,abik->abk", m.proxy, T)                     # covariant
    v_t = TangentField(div_sig + np.einsum("abki,abi->abk", geo.ginv, m_gradq), ("u",))

    # Normal: <σ̄ - σ_E, II> - div η_FO + (ω/4) H (|q|²-1)²
    diff = TangentField(sig_bar.proxy - rec.sigma_E.proxy, ("u", "u"))
    qsq = pointwise_inner(q, q, geo)
    v_n = (pointwise_inner(diff, TangentField(geo.II, ("d", "d")), geo)
           - divergence(rec.eta_FO, geo, "covariant").proxy
           + 0.25 * p.omega * geo.H * (qsq - 1.0) ** 2)

    return ShapeForce(V_full, v_t, v_n)
