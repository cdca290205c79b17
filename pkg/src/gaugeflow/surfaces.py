"""Surface patches over a parameter grid, with exact or sampled derivatives.

A patch stores the immersion ``X`` together with its first and second
parameter derivatives.  When built from an analytic chart the derivatives are
exact closures evaluated on the grid (``source == "analytic"``); when built
from point samples they come from the grid's differentiation scheme
(``source == "sampled"``).

The module also provides the charts used throughout the tests (flat sheet,
graph over the periodic square, sphere band) and seeded band-limited Fourier
fields with exact derivatives for the verification oracles.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import ParameterGrid


@dataclass
class AmbientField:
    """An R^3-valued field on the grid, optionally with exact derivatives.

    ``values`` has shape ``(n1, n2, 3)``; ``d`` (first derivatives) has shape
    ``(2, n1, n2, 3)`` with ``d[i] = ∂_i``, ``dd`` (second derivatives) shape
    ``(2, 2, n1, n2, 3)``.
    """

    values: np.ndarray
    d: np.ndarray | None = None
    dd: np.ndarray | None = None

    def with_derivatives(self, grid: ParameterGrid) -> "AmbientField":
        """Return a copy whose missing derivatives are filled in discretely."""
        d = self.d
        if d is None:
            d = np.stack([grid.deriv(self.values, 0), grid.deriv(self.values, 1)])
        dd = self.dd
        if dd is None:
            dd = np.stack([np.stack([grid.deriv(d[i], j) for j in range(2)]) for i in range(2)])
        return AmbientField(self.values, d, dd)


# A chart maps grid coordinate arrays (Y1, Y2) to (X, dX, ddX).
Chart = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


@dataclass
class SurfacePatch:
    """Discretized immersion of a coordinate patch.

    Attributes
    ----------
    grid : ParameterGrid
    X : ndarray, shape (n1, n2, 3)
    dX : ndarray, shape (2, n1, n2, 3)
        ``dX[i]`` is the i-th tangent coordinate vector ``∂_i X``.
    ddX : ndarray, shape (2, 2, n1, n2, 3)
        Second derivatives, symmetric in the leading pair.
    source : str
        ``"analytic"`` or ``"sampled"``.
    """

    grid: ParameterGrid
    X: np.ndarray
    dX: np.ndarray
    ddX: np.ndarray
    source: str = "analytic"

    @classmethod
    def from_chart(cls, grid: ParameterGrid, chart: Chart) -> "SurfacePatch":
        Y1, Y2 = grid.mesh()
        X, dX, ddX = chart(Y1, Y2)
        return cls(grid, X, dX, ddX, source="analytic")

    @classmethod
    def from_samples(cls, grid: ParameterGrid, X: np.ndarray) -> "SurfacePatch":
        dX = np.stack([grid.deriv(X, 0), grid.deriv(X, 1)])
        ddX = np.stack([np.stack([grid.deriv(dX[i], j) for j in range(2)]) for i in range(2)])
        return cls(grid, X, dX, ddX, source="sampled")

    def displaced(self, W: AmbientField, eps: float) -> "SurfacePatch":
        """The patch ``X + eps*W`` with derivatives carried along.

        Used by the finite-difference oracles; requires ``W`` to have both
        derivative levels (call :meth:`AmbientField.with_derivatives` first
        if they are missing).
        """
        if W.d is None or W.dd is None:
            raise ValueError("displacement field needs first and second derivatives")
        return SurfacePatch(
            self.grid,
            self.X + eps * W.values,
            self.dX + eps * W.d,
            self.ddX + eps * W.dd,
            source=self.source,
        )


# ---------------------------------------------------------------------------
# Charts
# ---------------------------------------------------------------------------

def flat_chart() -> Chart:
    """Identity chart of the flat sheet X = (y1, y2, 0)."""

    def chart(Y1, Y2):
        shp = Y1.shape
        X = np.stack([Y1, Y2, np.zeros(shp)], axis=-1)
        dX = np.zeros((2,) + shp + (3,))
        dX[0, ..., 0] = 1.0
        dX[1, ..., 1] = 1.0
        ddX = np.zeros((2, 2) + shp + (3,))
        return X, dX, ddX

    return chart


def graph_chart(height: Callable[[np.ndarray, np.ndarray], tuple]) -> Chart:
    """Graph X = (y1, y2, φ(y1, y2)) over the parameter square.

    ``height(Y1, Y2)`` must return ``(z, dz, ddz)`` with shapes
    ``(n1, n2)``, ``(2, n1, n2)`` and ``(2, 2, n1, n2)``.
    """

    def chart(Y1, Y2):
        z, dz, ddz = height(Y1, Y2)
        shp = Y1.shape
        X = np.stack([Y1, Y2, z], axis=-1)
        dX = np.zeros((2,) + shp + (3,))
        dX[0, ..., 0] = 1.0
        dX[1, ..., 1] = 1.0
        dX[0, ..., 2] = dz[0]
        dX[1, ..., 2] = dz[1]
        ddX = np.zeros((2, 2) + shp + (3,))
        ddX[..., 2] = ddz
        return X, dX, ddX

    return chart


def sin_cos_height(amplitude: float = 0.3, k1: int = 1, k2: int = 1):
    """Height closure φ = amplitude * sin(2π k1 y1) * cos(2π k2 y2)."""
    w1 = 2.0 * np.pi * k1
    w2 = 2.0 * np.pi * k2

    def height(Y1, Y2):
        s1, c1 = np.sin(w1 * Y1), np.cos(w1 * Y1)
        s2, c2 = np.sin(w2 * Y2), np.cos(w2 * Y2)
        z = amplitude * s1 * c2
        dz = np.stack([amplitude * w1 * c1 * c2, -amplitude * w2 * s1 * s2])
        ddz = np.empty((2, 2) + Y1.shape)
        ddz[0, 0] = -amplitude * w1 * w1 * s1 * c2
        ddz[0, 1] = ddz[1, 0] = -amplitude * w1 * w2 * c1 * s2
        ddz[1, 1] = -amplitude * w2 * w2 * s1 * c2
        return z, dz, ddz

    return height


def sphere_band(n1: int, n2: int, theta_min: float = 0.35 * np.pi,
                theta_max: float = 0.65 * np.pi) -> SurfacePatch:
    """Band of the unit sphere, polar angle in ``[theta_min, theta_max]``.

    Direction 1 is the (non-periodic) polar angle, direction 2 the periodic
    azimuth.  With this chart the normal points outward, the second
    fundamental form is -g, the mean curvature is -2 and the Gauss curvature
    is +1.
    """
    h1 = (theta_max - theta_min) / (n1 - 1)
    h2 = 2.0 * np.pi / n2
    grid = ParameterGrid(n1, n2, h1, h2, periodic1=False, periodic2=True)

    def chart(Y1, Y2):
        th = theta_min + Y1
        ph = Y2
        st, ct = np.sin(th), np.cos(th)
        sp, cp = np.sin(ph), np.cos(ph)
        X = np.stack([st * cp, st * sp, ct], axis=-1)
        dX = np.stack([
            np.stack([ct * cp, ct * sp, -st], axis=-1),
            np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1),
        ])
        ddX = np.empty((2, 2) + Y1.shape + (3,))
        ddX[0, 0] = np.stack([-st * cp, -st * sp, -ct], axis=-1)
        ddX[0, 1] = ddX[1, 0] = np.stack([-ct * sp, ct * cp, np.zeros_like(st)], axis=-1)
        ddX[1, 1] = np.stack([-st * cp, -st * sp, np.zeros_like(st)], axis=-1)
        return X, dX, ddX

    return SurfacePatch.from_chart(grid, chart)


def film_chart(f1, f2) -> Chart:
    """Flat film X = (y1 + f1(y2), y2 + f2(y2), 0).

    ``f1`` and ``f2`` are closures of one variable returning
    ``(value, first, second)`` derivative arrays.
    """

    def chart(Y1, Y2):
        shp = Y1.shape
        v1, d1, dd1 = f1(Y2)
        v2, d2, dd2 = f2(Y2)
        X = np.stack([Y1 + v1, Y2 + v2, np.zeros(shp)], axis=-1)
        dX = np.zeros((2,) + shp + (3,))
        dX[0, ..., 0] = 1.0
        dX[1, ..., 0] = d1
        dX[1, ..., 1] = 1.0 + d2
        ddX = np.zeros((2, 2) + shp + (3,))
        ddX[1, 1, ..., 0] = dd1
        ddX[1, 1, ..., 1] = dd2
        return X, dX, ddX

    return chart


# ---------------------------------------------------------------------------
# Seeded band-limited Fourier fields with exact derivatives
# ---------------------------------------------------------------------------

def _fourier_modes(rng: np.random.Generator, kmax: int, amp: float):
    """Random coefficients for a real trigonometric polynomial.

    One half of the integer lattice is enumerated so every mode appears once.
    Amplitudes decay quadratically in the mode number to keep the fields
    smooth at modest band limits.
    """
    modes = []
    for m1 in range(0, kmax + 1):
        for m2 in range(-kmax, kmax + 1):
            if m1 == 0 and m2 < 0:
                continue
            scale = amp / (1.0 + m1 * m1 + m2 * m2)
            a, b = rng.normal(0.0, scale, size=2)
            if m1 == 0 and m2 == 0:
                b = 0.0
            modes.append((m1, m2, a, b))
    return modes


def fourier_scalar(grid: ParameterGrid, seed: int, kmax: int = 2, amp: float = 1.0):
    """Seeded periodic scalar field: ``(values, d, dd)`` with exact closures.

    Shapes follow the chart convention: ``values`` is ``(n1, n2)``, ``d`` is
    ``(2, n1, n2)``, ``dd`` is ``(2, 2, n1, n2)``.
    """
    if not (grid.periodic1 and grid.periodic2):
        raise ValueError("Fourier fields need a doubly periodic grid")
    rng = np.random.default_rng(seed)
    modes = _fourier_modes(rng, kmax, amp)
    L1 = grid.n1 * grid.h1
    L2 = grid.n2 * grid.h2
    Y1, Y2 = grid.mesh()
    vals = np.zeros(grid.shape)
    d = np.zeros((2,) + grid.shape)
    dd = np.zeros((2, 2) + grid.shape)
    for m1, m2, a, b in modes:
        w1 = 2.0 * np.pi * m1 / L1
        w2 = 2.0 * np.pi * m2 / L2
        phase = w1 * Y1 + w2 * Y2
        c, s = np.cos(phase), np.sin(phase)
        term = a * c + b * s
        dterm = -a * s + b * c
        vals += term
        d[0] += w1 * dterm
        d[1] += w2 * dterm
        dd[0, 0] += -w1 * w1 * term
        dd[0, 1] += -w1 * w2 * term
        dd[1, 0] += -w1 * w2 * term
        dd[1, 1] += -w2 * w2 * term
    return vals, d, dd


def fourier_ambient(grid: ParameterGrid, seed: int, kmax: int = 2,
                    amp: float = 0.1) -> AmbientField:
    """Seeded R^3-valued periodic field with exact derivative closures."""
    parts = [fourier_scalar(grid, seed + 17 * c, kmax=kmax, amp=amp) for c in range(3)]
    values = np.stack([p[0] for p in parts], axis=-1)
    d = np.stack([p[1] for p in parts], axis=-1)
    dd = np.stack([p[2] for p in parts], axis=-1)
    return AmbientField(values, d, dd)


def fourier_proxies(grid: ParameterGrid, seed: int, shape: tuple = (),
                    kmax: int = 2, amp: float = 1.0) -> np.ndarray:
    """Seeded periodic component samples of shape ``grid.shape + shape``."""
    count = int(np.prod(shape)) if shape else 1
    comps = [fourier_scalar(grid, seed + 101 * c, kmax=kmax, amp=amp)[0] for c in range(count)]
    out = np.stack(comps, axis=-1).reshape(grid.shape + shape) if shape else comps[0]
    return out
