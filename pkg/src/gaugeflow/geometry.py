"""First- and second-order geometry of a surface patch.

Index conventions used throughout the package:

* metric ``g[..., i, j]`` = <∂_i X, ∂_j X>;
* Christoffel symbols of the first kind ``gamma1[..., i, j, k]`` =
  Γ_ijk = <∂_i ∂_j X, ∂_k X>, symmetric in (i, j);
* second kind ``gamma2[..., m, i, j]`` = Γ^m_ij = g^{mk} Γ_ijk;
* second fundamental form ``II[..., i, j]`` = <∂_i ∂_j X, ν> with the
  normal fixed by sqrt|g| ν = ∂_1 X × ∂_2 X (orientation is part of the
  data, not a choice left to sign conventions downstream);
* surface Levi-Civita tensor ``E[..., i, j]`` = sqrt|g| ε_ij.

Tensor fields on the patch are stored through coordinate proxies with an
explicit variance per slot ('u' contravariant / 'd' covariant), so raising
and lowering are explicit operations rather than implicit conventions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetric, RankMismatch
from .grid import ParameterGrid
from .surfaces import AmbientField, SurfacePatch

# Immersion threshold: det g must stay above this times the largest metric
# entry, otherwise the patch is treated as degenerate.
METRIC_FLOOR = 1e-12

_EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])

_SLOT_LETTERS = "ijkl"


@dataclass
class TangentField:
    """A tensor field tangential to the surface, stored via proxies.

    ``proxy`` has shape ``grid.shape + (2,)*rank``; ``variance`` is a tuple
    with one entry per slot, 'u' for contravariant or 'd' for covariant.
    Scalars are rank 0 with an empty variance.
    """

    proxy: np.ndarray
    variance: tuple[str, ...]

    def __post_init__(self):
        if any(v not in ("u", "d") for v in self.variance):
            raise ValueError(f"bad variance {self.variance!r}")
        if self.proxy.ndim != 2 + len(self.variance):
            raise RankMismatch(
                f"proxy of ndim {self.proxy.ndim} does not fit variance {self.variance!r}")

    @property
    def rank(self) -> int:
        return len(self.variance)


def scalar_field(values: np.ndarray) -> TangentField:
    return TangentField(np.asarray(values), ())


@dataclass
class GeometryCache:
    """All pointwise geometric quantities derived from a patch.

    Everything here is algebraic in ``X`` and its chart derivatives; no
    discrete differentiation of computed quantities is involved, so analytic
    patches give these to rounding accuracy.
    """

    patch: SurfacePatch
    g: np.ndarray          # (n1, n2, 2, 2)
    ginv: np.ndarray       # (n1, n2, 2, 2)
    detg: np.ndarray       # (n1, n2)
    sqrtg: np.ndarray      # (n1, n2)
    nu: np.ndarray         # (n1, n2, 3)
    gamma1: np.ndarray     # (n1, n2, 2, 2, 2): Γ_ijk
    gamma2: np.ndarray     # (n1, n2, 2, 2, 2): Γ^m_ij
    II: np.ndarray         # (n1, n2, 2, 2)
    H: np.ndarray          # (n1, n2)
    Kgauss: np.ndarray     # (n1, n2)
    E: np.ndarray          # (n1, n2, 2, 2)
    dg: np.ndarray         # (n1, n2, 2, 2, 2): ∂_k g_ij at [..., k, i, j]
    dnu: np.ndarray        # (2, n1, n2, 3): ∂_i ν (Weingarten)

    @property
    def grid(self) -> ParameterGrid:
        return self.patch.grid

    @property
    def dX(self) -> np.ndarray:
        return self.patch.dX

    @property
    def ddX(self) -> np.ndarray:
        return self.patch.ddX


def build_geometry(patch: SurfacePatch) -> GeometryCache:
    """Assemble the geometric cache; raises DegenerateMetric if the
    immersion fails the determinant floor."""
    dX, ddX = patch.dX, patch.ddX
    g = np.einsum("iabc,jabc->abij", dX, dX)
    detg = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    if np.min(detg) <= METRIC_FLOOR * np.max(np.abs(g)):
        raise DegenerateMetric(
            f"min det g = {np.min(detg):.3e} under floor "
            f"{METRIC_FLOOR * np.max(np.abs(g)):.3e}")
    sqrtg = np.sqrt(detg)
    ginv = np.empty_like(g)
    ginv[..., 0, 0] = g[..., 1, 1]
    ginv[..., 1, 1] = g[..., 0, 0]
    ginv[..., 0, 1] = -g[..., 0, 1]
    ginv[..., 1, 0] = -g[..., 1, 0]
    ginv /= detg[..., None, None]

    nu = np.cross(dX[0], dX[1]) / sqrtg[..., None]

    gamma1 = np.einsum("ijabc,kabc->abijk", ddX, dX)
    gamma2 = np.einsum("abkm,abijk->abmij", ginv, gamma1)

    II = np.einsum("ijabc,abc->abij", ddX, nu)
    H = np.einsum("abij,abij->ab", ginv, II)
    Kgauss = (II[..., 0, 0] * II[..., 1, 1] - II[..., 0, 1] * II[..., 1, 0]) / detg
    E = sqrtg[..., None, None] * _EPS2

    # ∂_k g_ij = Γ_kij + Γ_kji -- exact, no extra differentiation needed.
    dg = np.einsum("abkij->abkij", gamma1) + np.einsum("abkji->abkij", gamma1)
    # Weingarten: ∂_i ν = -II_i^k ∂_k X.
    II_mix = np.einsum("abil,ablk->abik", II, ginv)      # II_i^k
    dnu = -np.einsum("abik,kabc->iabc", II_mix, dX)

    return GeometryCache(patch, g, ginv, detg, sqrtg, nu, gamma1, gamma2,
                         II, H, Kgauss, E, dg, dnu)


# ---------------------------------------------------------------------------
# Variance algebra
# ---------------------------------------------------------------------------

def _apply_metric_slot(proxy: np.ndarray, metric: np.ndarray, slot: int) -> np.ndarray:
    """Contract ``proxy`` slot ``slot`` (axis 2+slot) with a nodewise 2x2 matrix."""
    moved = np.moveaxis(proxy, 2 + slot, -1)
    out = np.einsum("ab...i,abij->ab...j", moved, metric)
    return np.moveaxis(out, -1, 2 + slot)


def with_variance(q: TangentField, geo: GeometryCache,
                  variance: tuple[str, ...]) -> TangentField:
    """Raise/lower slots of ``q`` to match the requested variance."""
    if len(variance) != q.rank:
        raise RankMismatch(f"variance {variance!r} does not match rank {q.rank}")
    proxy = q.proxy
    for s, (have, want) in enumerate(zip(q.variance, variance)):
        if have == want:
            continue
        metric = geo.g if want == "d" else geo.ginv
        proxy = _apply_metric_slot(proxy, metric, s)
    return TangentField(proxy, tuple(variance))


def pointwise_inner(a: TangentField, b: TangentField, geo: GeometryCache) -> np.ndarray:
    """Full metric contraction of two equal-rank tangential fields, nodewise."""
    if a.rank != b.rank:
        raise RankMismatch(f"rank {a.rank} vs {b.rank}")
    if a.rank == 0:
        return a.proxy * b.proxy
    # Flip b to the dual variance of a, then contract slot by slot.
    dual = tuple("d" if v == "u" else "u" for v in a.variance)
    bd = with_variance(b, geo, dual).proxy
    letters = _SLOT_LETTERS[: a.rank]
    return np.einsum(f"ab{letters},ab{letters}->ab", a.proxy, bd)


def l2_inner(a, b, geo: GeometryCache) -> float:
    """Surface L² pairing ∫ <a, b> dS with the metric area element.

    Accepts two tangential fields of equal rank or two ambient fields (the
    ambient case uses the Euclidean dot product nodewise).
    """
    if isinstance(a, AmbientField) and isinstance(b, AmbientField):
        dens = np.einsum("abc,abc->ab", a.values, b.values)
    elif isinstance(a, TangentField) and isinstance(b, TangentField):
        dens = pointwise_inner(a, b, geo)
    else:
        raise RankMismatch("l2_inner needs two tangential or two ambient fields")
    return geo.grid.integrate(dens * geo.sqrtg)


def l2_norm(a, geo: GeometryCache) -> float:
    return float(np.sqrt(max(l2_inner(a, a, geo), 0.0)))


# ---------------------------------------------------------------------------
# Frames: projection and embedding
# ---------------------------------------------------------------------------

def project_tangent(field: AmbientField | np.ndarray, geo: GeometryCache,
                    rank: int = 1) -> TangentField:
    """Tangential part of an ambient field, as contravariant proxies.

    rank 1 expects values of shape ``(n1, n2, 3)``; rank 2 expects an ambient
    2-tensor ``(n1, n2, 3, 3)`` and projects both legs.  Projection is
    idempotent and annihilates the normal component.
    """
    values = field.values if isinstance(field, AmbientField) else np.asarray(field)
    if rank == 1:
        if values.shape[-1:] != (3,) or values.ndim != 3:
            raise RankMismatch(f"expected (n1, n2, 3), got {values.shape}")
        cov = np.einsum("abc,jabc->abj", values, geo.dX)
        return TangentField(np.einsum("abij,abj->abi", geo.ginv, cov), ("u",))
    if rank == 2:
        if values.shape[-2:] != (3, 3) or values.ndim != 4:
            raise RankMismatch(f"expected (n1, n2, 3, 3), got {values.shape}")
        cov = np.einsum("kabc,abcd,labd->abkl", geo.dX, values, geo.dX)
        proxy = np.einsum("abik,abkl,abjl->abij", geo.ginv, cov, geo.ginv)
        return TangentField(proxy, ("u", "u"))
    raise RankMismatch(f"projection supports rank 1 or 2, got {rank}")


def to_ambient(q: TangentField, geo: GeometryCache) -> AmbientField:
    """Embed a rank-1 or rank-2 tangential field into ambient space."""
    if q.rank == 1:
        up = with_variance(q, geo, ("u",)).proxy
        return AmbientField(np.einsum("abi,iabc->abc", up, geo.dX))
    if q.rank == 2:
        up = with_variance(q, geo, ("u", "u")).proxy
        return AmbientField(np.einsum("abij,iabc,jabd->abcd", up, geo.dX, geo.dX))
    raise RankMismatch(f"embedding supports rank 1 or 2, got {q.rank}")


def normal_part(field: AmbientField, geo: GeometryCache) -> np.ndarray:
    """Nodewise normal component <field, ν> of an ambient vector field."""
    return np.einsum("abc,abc->ab", field.values, geo.nu)
