"""Differential operators on tangential tensor fields.

The covariant derivative appends its index as the *last* slot, always
covariant: for a field with slots (i1..in), the result carries slots
(i1..in, k) and proxies

    q_{i1..in|k} = ∂_k q_{i1..in} - Σ_α Γ^m_{k iα} q_{..m..}     ('d' slots)
    q^{i}_{..|k} = ∂_k q^{i}_{..} + Γ^i_{k m} q^{m}_{..}          ('u' slots)

Component derivatives use the grid's differentiation scheme; everything else
is exact pointwise algebra from the geometry cache.
"""
from __future__ import annotations

import numpy as np

from .errors import RankMismatch
from .geometry import (GeometryCache, TangentField, _SLOT_LETTERS,
                       pointwise_inner, to_ambient, with_variance)
from .surfaces import AmbientField


def covariant_derivative(q: TangentField | np.ndarray, geo: GeometryCache) -> TangentField:
    """Surface covariant derivative; output rank is input rank + 1.

    For a scalar this is the plain gradient with a covariant index; for
    higher ranks each slot receives its Christoffel correction with the sign
    fixed by the slot's variance.
    """
    if isinstance(q, np.ndarray):
        q = TangentField(q, ())
    P = q.proxy
    grid = geo.grid
    out = np.stack([grid.deriv(P, 0), grid.deriv(P, 1)], axis=-1)
    letters = _SLOT_LETTERS[: q.rank]
    for s, v in enumerate(q.variance):
        L = letters[s]
        qsub = "ab" + letters.replace(L, "m")
        osub = "ab" + letters + "z"
        if v == "d":
            out -= np.einsum(f"abmz{L},{qsub}->{osub}", geo.gamma2, P)
        else:
            out += np.einsum(f"ab{L}zm,{qsub}->{osub}", geo.gamma2, P)
    return TangentField(out, q.variance + ("d",))


def divergence(q: TangentField, geo: GeometryCache, mode: str = "covariant",
               eta: TangentField | None = None):
    """Divergence in one of three flavours.

    ``covariant``
        Contract the last original slot with the derivative slot:
        rank n in, rank n-1 out (tangential, proxies).
    ``tangential``
        For a rank-2 field, the full-bundle divergence
        div σ + <II, σ> ν as an ambient field.
    ``surface``
        Divergence of σ + ν⊗η for a rank-2 σ and rank-1 η:
        (div σ - II η) + (<II, σ> + div η) ν, ambient.
    """
    if mode == "covariant":
        if q.rank < 1:
            raise RankMismatch("covariant divergence needs rank >= 1")
        q_up = with_variance(q, geo, q.variance[:-1] + ("u",))
        T = covariant_derivative(q_up, geo)
        proxy = np.trace(T.proxy, axis1=-2, axis2=-1)
        if q.rank == 1:
            return TangentField(proxy, ())
        return TangentField(proxy, q.variance[:-1])

    if mode == "tangential":
        if q.rank != 2:
            raise RankMismatch("tangential divergence expects a rank-2 field")
        div_t = divergence(q, geo, "covariant")
        amb = to_ambient(with_variance(div_t, geo, ("u",)), geo).values
        II_f = TangentField(geo.II, ("d", "d"))
        amb = amb + pointwise_inner(II_f, q, geo)[..., None] * geo.nu
        return AmbientField(amb)

    if mode == "surface":
        if q.rank != 2 or eta is None or eta.rank != 1:
            raise RankMismatch("surface divergence expects rank-2 sigma and rank-1 eta")
        div_t = with_variance(divergence(q, geo, "covariant"), geo, ("u",)).proxy
        eta_up = with_variance(eta, geo, ("u",)).proxy
        II_up_mix = np.einsum("abik,abkj->abij", geo.ginv, geo.II)   # II^i_j
        II_eta = np.einsum("abij,abj->abi", II_up_mix, eta_up)       # (II η)^i
        tangential = div_t - II_eta
        amb = np.einsum("abi,iabc->abc", tangential, geo.dX)
        II_f = TangentField(geo.II, ("d", "d"))
        div_eta = divergence(eta, geo, "covariant").proxy
        amb = amb + (pointwise_inner(II_f, q, geo) + div_eta)[..., None] * geo.nu
        return AmbientField(amb)

    raise ValueError(f"unknown divergence mode {mode!r}")


def curl(q: TangentField, geo: GeometryCache) -> np.ndarray:
    """Scalar rotation of a tangential vector field: rot q = -<∇q, E>.

    In coordinates this equals (∂_1 q_2 - ∂_2 q_1)/sqrt|g|; the Christoffel
    contributions cancel by symmetry.
    """
    if q.rank != 1:
        raise RankMismatch("curl expects a rank-1 field")
    T = covariant_derivative(with_variance(q, geo, ("d",)), geo)
    E_up = np.einsum("abik,abkl,abjl->abij", geo.ginv, geo.E, geo.ginv)
    return -np.einsum("abij,abij->ab", T.proxy, E_up)


def bochner_laplacian(q: TangentField, geo: GeometryCache) -> TangentField:
    """Connection Laplacian Δ = div ∘ ∇, preserving rank and variance."""
    T = covariant_derivative(q, geo)
    out = divergence(T, geo, "covariant")
    return with_variance(out, geo, q.variance)
