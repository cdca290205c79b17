"""Deformation calculus: gauges, deformation derivatives, gauge stresses.

Central objects:

* the deformation gradient ``G_ij = <∂_j W, ∂_i X>`` of a surface deformation
  ``W`` (first index = frame slot, second = derivative slot), equal to
  ``w_i|j - w⊥ II_ij`` through the tangential/normal split of W;
* its symmetric/antisymmetric parts S (strain) and A (rotation);
* the normal-coupling covector ``b_i = <∂_i W, ν> = (∇w⊥ + II·w)_i``.

Every non-material deformation derivative of a tangential field differs from
the material one by pointwise convection terms built from G, -Gᵀ or A; the
maps below tabulate those differences for vectors and 2-tensors, together
with the stress fields that the choice of gauge contributes to shape
gradients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankMismatch, UnknownQuantity, UnsupportedConvention
from .geometry import (GeometryCache, TangentField, project_tangent,
                       with_variance)
from .operators import covariant_derivative, divergence
from .surfaces import AmbientField

VECTOR_GAUGES = ("material", "upper", "lower", "jaumann")
TENSOR_GAUGES = ("material", "uu", "ll", "ul", "lu", "jaumann")


def _check_kind(rank: int, kind: str):
    valid = VECTOR_GAUGES if rank == 1 else TENSOR_GAUGES
    if rank not in (1, 2):
        raise RankMismatch(f"gauges exist for ranks 1 and 2, got {rank}")
    if kind not in valid:
        raise ValueError(f"kind {kind!r} invalid for rank {rank}; expected one of {valid}")


@dataclass(frozen=True)
class GaugeSpec:
    """Choice of gauge (surface-independence convention) for a given rank."""

    rank: int
    kind: str

    def __post_init__(self):
        _check_kind(self.rank, self.kind)


@dataclass(frozen=True)
class TimeDerivSpec:
    """Choice of observer-invariant time derivative; same flavor names as
    the gauges of matching rank."""

    rank: int
    kind: str

    def __post_init__(self):
        _check_kind(self.rank, self.kind)


@dataclass
class DeformationParts:
    """Pointwise deformation data of a single W on a fixed geometry.

    ``dG``/``db`` are exact parameter derivatives of the G and b proxies
    (``dG[..., i, j, m] = ∂_m G_ij``, ``db[..., i, j] = ∂_j b_i``), present
    when W carried analytic second derivatives; consumers fall back to the
    grid scheme when they are missing.
    """

    geo: GeometryCache
    G: TangentField
    S: TangentField
    A: TangentField
    b: TangentField
    wt: TangentField
    wn: np.ndarray
    dG: np.ndarray | None = None
    db: np.ndarray | None = None


def decompose_deformation(W: AmbientField, geo: GeometryCache) -> DeformationParts:
    """Split a deformation field into (G, S, A, b, tangential w, normal w⊥)."""
    if W.d is None:
        W = W.with_derivatives(geo.grid)
    G = np.einsum("jabc,iabc->abij", W.d, geo.dX)
    S = 0.5 * (G + np.swapaxes(G, -1, -2))
    A = 0.5 * (G - np.swapaxes(G, -1, -2))
    wn = np.einsum("abc,abc->ab", W.values, geo.nu)
    wt = project_tangent(W, geo, 1)
    b = np.einsum("iabc,abc->abi", W.d, geo.nu)
    dG = db = None
    if W.dd is not None:
        # ∂_m G_ij = <∂_m ∂_j W, ∂_i X> + <∂_j W, ∂_m ∂_i X>
        dG = (np.einsum("mjabc,iabc->abijm", W.dd, geo.dX)
              + np.einsum("jabc,miabc->abijm", W.d, geo.ddX))
        # ∂_j b_i = <∂_j ∂_i W, ν> + <∂_i W, ∂_j ν>
        db = (np.einsum("jiabc,abc->abij", W.dd, geo.nu)
              + np.einsum("iabc,jabc->abij", W.d, geo.dnu))
    return DeformationParts(geo,
                            TangentField(G, ("d", "d")),
                            TangentField(S, ("d", "d")),
                            TangentField(A, ("d", "d")),
                            TangentField(b, ("d",)),
                            wt, wn, dG, db)


# ---------------------------------------------------------------------------
# Convection matrices per gauge flavor
# ---------------------------------------------------------------------------

def _convect(parts: DeformationParts, kind: str) -> np.ndarray:
    """Covariant convection matrix of a rank-1 flavor: 0, G, -Gᵀ or A."""
    if kind == "material":
        return np.zeros_like(parts.G.proxy)
    if kind == "upper":
        return parts.G.proxy
    if kind == "lower":
        return -np.swapaxes(parts.G.proxy, -1, -2)
    if kind == "jaumann":
        return parts.A.proxy
    raise ValueError(kind)


_TENSOR_FLAVORS = {
    "material": ("material", "material"),
    "uu": ("upper", "upper"),
    "ll": ("lower", "lower"),
    "ul": ("upper", "lower"),
    "lu": ("lower", "upper"),
    "jaumann": ("jaumann", "jaumann"),
}


def _convect_pair(parts: DeformationParts, kind: str) -> tuple[np.ndarray, np.ndarray]:
    k1, k2 = _TENSOR_FLAVORS[kind]
    return _convect(parts, k1), _convect(parts, k2)


def vector_deformation(q: TangentField, parts: DeformationParts,
                       assumed_gauge: GaugeSpec, derivative) -> TangentField:
    """Deformation derivative of flavor ``derivative`` for a vector field
    transported trivially in ``assumed_gauge``.

    The result is the pointwise convection difference (Ψ_assumed − Ψ_deriv)q;
    it vanishes exactly when the two flavors coincide.
    """
    if q.rank != 1 or assumed_gauge.rank != 1 or derivative.rank != 1:
        raise RankMismatch("vector_deformation expects rank-1 field and specs")
    geo = parts.geo
    P = _convect(parts, assumed_gauge.kind) - _convect(parts, derivative.kind)
    q_up = with_variance(q, geo, ("u",)).proxy
    out = np.einsum("abim,abmk,abk->abi", geo.ginv, P, q_up)
    return TangentField(out, ("u",))


def tensor_deformation(q: TangentField, parts: DeformationParts,
                       assumed_gauge: GaugeSpec, derivative) -> TangentField:
    """Rank-2 analogue of :func:`vector_deformation`:
    (Ψ₁ᴬ−Ψ₁ᴰ)q + q(Ψ₂ᴬ−Ψ₂ᴰ)ᵀ with the tabulated flavor pair per gauge."""
    if q.rank != 2 or assumed_gauge.rank != 2 or derivative.rank != 2:
        raise RankMismatch("tensor_deformation expects rank-2 field and specs")
    geo = parts.geo
    A1, A2 = _convect_pair(parts, assumed_gauge.kind)
    D1, D2 = _convect_pair(parts, derivative.kind)
    P1, P2 = A1 - D1, A2 - D2
    q_uu = with_variance(q, geo, ("u", "u")).proxy
    left = np.einsum("abim,abmk,abkj->abij", geo.ginv, P1, q_uu)
    right = np.einsum("abik,abjm,abmk->abij", q_uu, geo.ginv, P2)
    return TangentField(left + right, ("u", "u"))


# ---------------------------------------------------------------------------
# Deformation of geometric quantities
# ---------------------------------------------------------------------------

def _grad_b(parts: DeformationParts) -> np.ndarray:
    """Covariant ∇b with exact parameter derivatives when available."""
    geo = parts.geo
    if parts.db is not None:
        return parts.db - np.einsum("abmji,abm->abij", geo.gamma2, parts.b.proxy)
    return covariant_derivative(parts.b, geo).proxy


def _grad_G(parts: DeformationParts) -> np.ndarray:
    """Covariant G_ij|k with exact parameter derivatives when available."""
    geo = parts.geo
    if parts.dG is not None:
        return (parts.dG
                - np.einsum("abmki,abmj->abijk", geo.gamma2, parts.G.proxy)
                - np.einsum("abmkj,abim->abijk", geo.gamma2, parts.G.proxy))
    return covariant_derivative(parts.G, geo).proxy


GEOMETRIC_QUANTITIES = ("metric", "inverse_metric", "density", "christoffel2",
                        "normal", "shape_operator")


def geometric_deformation(quantity: str, geo: GeometryCache, parts: DeformationParts):
    """Linear response of a geometric quantity to the deformation in ``parts``.

    Returns covariant/contravariant tangential fields for the tensors, a
    scalar array for the density, an ambient field for the normal, and the
    rank-3 proxy array ``out[..., m, i, j] = 𝔡Γ^m_ij`` for the Christoffel
    symbols.  The shape-operator entry is the *material* deformation
    ∇b − II·G (frozen-proxy differences differ from it by both-slot
    convection).
    """
    if quantity == "metric":
        return TangentField(2.0 * parts.S.proxy, ("d", "d"))
    if quantity == "inverse_metric":
        S_up = with_variance(parts.S, geo, ("u", "u")).proxy
        return TangentField(-2.0 * S_up, ("u", "u"))
    if quantity == "density":
        trG = np.einsum("abij,abij->ab", geo.ginv, parts.G.proxy)
        return trG * geo.sqrtg
    if quantity == "christoffel2":
        gradG = _grad_G(parts)
        b_up = with_variance(parts.b, geo, ("u",)).proxy
        II_mixed = np.einsum("abmk,abki->abmi", geo.ginv, geo.II)   # II^m_i
        out = (np.einsum("abml,ablji->abmij", geo.ginv, gradG)       # G^m_j|i
               + np.einsum("abm,abij->abmij", b_up, geo.II)
               - np.einsum("abj,abmi->abmij", parts.b.proxy, II_mixed))
        return out
    if quantity == "normal":
        b_up = with_variance(parts.b, geo, ("u",)).proxy
        return AmbientField(-np.einsum("abi,iabc->abc", b_up, geo.dX))
    if quantity == "shape_operator":
        II_G = np.einsum("abik,abkl,ablj->abij", geo.II, geo.ginv, parts.G.proxy)
        return TangentField(_grad_b(parts) - II_G, ("d", "d"))
    raise UnknownQuantity(f"unsupported quantity {quantity!r}; "
                          f"expected one of {GEOMETRIC_QUANTITIES}")


# ---------------------------------------------------------------------------
# Adjoints and gauge stresses
# ---------------------------------------------------------------------------

def adjoint_divergence(r: TangentField, geo: GeometryCache, which: str) -> AmbientField:
    """L²-adjoint of the convection map of flavor ``which`` ∈ {G, GT, S, A}.

    For G: -(div r + <r, II> ν); GT and S likewise with rᵀ and sym(r);
    A: -div(skew(r)) with no normal part.
    """
    if r.rank != 2:
        raise RankMismatch("adjoint_divergence expects a rank-2 field")
    r_uu = with_variance(r, geo, ("u", "u")).proxy
    rT = np.swapaxes(r_uu, -1, -2)
    if which == "G":
        arg = r_uu
    elif which == "GT":
        arg = rT
    elif which == "S":
        arg = 0.5 * (r_uu + rT)
    elif which == "A":
        skew = TangentField(0.5 * (r_uu - rT), ("u", "u"))
        div_t = with_variance(divergence(skew, geo, "covariant"), geo, ("u",)).proxy
        return AmbientField(-np.einsum("abi,iabc->abc", div_t, geo.dX))
    else:
        raise ValueError(f"unknown adjoint flavor {which!r}")
    full = divergence(TangentField(arg, ("u", "u")), geo, "tangential")
    return AmbientField(-full.values)


def gauge_stress(q: TangentField, molecular: TangentField, gauge: GaugeSpec,
                 geo: GeometryCache, convention: str = "frame") -> TangentField:
    """Stress contributed by the chosen gauge, from the molecular field m=δU/δq.

    Rank 1, frame convention: 0 / m⊗q / -q⊗m / (m⊗q - q⊗m)/2 for
    material / upper / lower / Jaumann.  The contravariant-proxy convention
    shifts every entry by -m⊗q.  Rank 2 follows the six tabulated cases; no
    proxy convention exists there.
    """
    if convention not in ("frame", "contravariant_proxy"):
        raise UnsupportedConvention(f"unknown convention {convention!r}")
    if q.rank != molecular.rank or q.rank != gauge.rank:
        raise RankMismatch("field, molecular field and gauge must share rank")

    if q.rank == 1:
        m = with_variance(molecular, geo, ("u",)).proxy
        v = with_variance(q, geo, ("u",)).proxy
        mq = np.einsum("abi,abj->abij", m, v)
        qm = np.swapaxes(mq, -1, -2)
        if gauge.kind == "material":
            sig = np.zeros_like(mq)
        elif gauge.kind == "upper":
            sig = mq
        elif gauge.kind == "lower":
            sig = -qm
        else:  # jaumann
            sig = 0.5 * (mq - qm)
        if convention == "contravariant_proxy":
            sig = sig - mq
        return TangentField(sig, ("u", "u"))

    if convention == "contravariant_proxy":
        raise UnsupportedConvention("contravariant-proxy stresses exist only for rank 1")
    m = with_variance(molecular, geo, ("u", "u")).proxy
    v = with_variance(q, geo, ("u", "u")).proxy
    # Metric-contracted products of two contravariant 2-tensors.
    m_qT = np.einsum("abik,abjl,abkl->abij", m, v, geo.g)    # m qᵀ
    mT_q = np.einsum("abki,ablj,abkl->abij", m, v, geo.g)    # mᵀ q
    qT_m = np.einsum("abki,ablj,abkl->abij", v, m, geo.g)    # qᵀ m
    if gauge.kind == "material":
        sig = np.zeros_like(m_qT)
    elif gauge.kind == "uu":
        sig = m_qT + mT_q
    elif gauge.kind == "ll":
        sig = -np.swapaxes(m_qT + mT_q, -1, -2)
    elif gauge.kind == "ul":
        sig = m_qT - qT_m
    elif gauge.kind == "lu":
        sig = -np.swapaxes(m_qT - qT_m, -1, -2)
    else:  # jaumann
        s = m_qT + mT_q
        sig = 0.5 * (s - np.swapaxes(s, -1, -2))
    return TangentField(sig, ("u", "u"))


def phi_minus_psi(gauge: GaugeSpec, derivative: TimeDerivSpec,
                  parts: DeformationParts) -> tuple[TangentField, TangentField]:
    """Convection mismatch (Φ₁−Ψ₁, Φ₂−Ψ₂) between a time-derivative flavor
    and an energy gauge; enters the energy rate as the inconsistency
    cross-term.  Zero pair iff the names match.  For rank 1 only the first
    entry is meaningful (the second is returned as a zero field).
    """
    if gauge.rank != derivative.rank:
        raise RankMismatch("gauge and derivative must share rank")
    if gauge.rank == 1:
        P = _convect(parts, derivative.kind) - _convect(parts, gauge.kind)
        zero = np.zeros_like(P)
        return (TangentField(P, ("d", "d")), TangentField(zero, ("d", "d")))
    D1, D2 = _convect_pair(parts, derivative.kind)
    G1, G2 = _convect_pair(parts, gauge.kind)
    return (TangentField(D1 - G1, ("d", "d")), TangentField(D2 - G2, ("d", "d")))
