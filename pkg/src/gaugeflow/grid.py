"""Uniform parameter grids and discrete differentiation backends.

A :class:`ParameterGrid` fixes the sampling of the two-dimensional parameter
domain and owns the discrete partial-derivative operator used by everything
downstream.  Two schemes are available:

``central``
    Second-order central differences.  Periodic directions wrap around;
    non-periodic directions fall back to one-sided second-order stencils at
    the boundary rows (via ``numpy.gradient``).

``spectral``
    FFT differentiation, only valid in periodic directions.  For smooth
    periodic data this is accurate to rounding and is what the verification
    oracles use; the time-stepping code sticks with central differences.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCHEMES = ("central", "spectral")


@dataclass(frozen=True)
class ParameterGrid:
    """Uniform tensor-product grid on the parameter domain.

    A periodic direction with ``n`` nodes and spacing ``h`` samples
    ``[0, n*h)``; a non-periodic one samples ``[0, (n-1)*h]`` inclusive.

    Parameters
    ----------
    n1, n2 : int
        Node counts per direction (at least 4).
    h1, h2 : float
        Grid spacings (positive).
    periodic1, periodic2 : bool
        Whether the respective direction wraps around.
    scheme : str
        Discrete differentiation backend, one of ``SCHEMES``.
    """

    n1: int
    n2: int
    h1: float
    h2: float
    periodic1: bool = True
    periodic2: bool = True
    scheme: str = "central"

    def __post_init__(self):
        if self.n1 < 4 or self.n2 < 4:
            raise ValueError("grids need at least 4 nodes per direction")
        if self.h1 <= 0 or self.h2 <= 0:
            raise ValueError("grid spacings must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if self.scheme == "spectral" and not (self.periodic1 and self.periodic2):
            raise ValueError("spectral differentiation needs periodic directions")

    # -- sampling ---------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    def axis(self, i: int) -> np.ndarray:
        """Return the 1D coordinate array of direction ``i`` (0 or 1)."""
        n = (self.n1, self.n2)[i]
        h = (self.h1, self.h2)[i]
        return h * np.arange(n)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return coordinate arrays ``Y1, Y2`` of shape ``(n1, n2)``."""
        return np.meshgrid(self.axis(0), self.axis(1), indexing="ij")

    # -- differentiation --------------------------------------------------

    def deriv(self, f: np.ndarray, axis: int) -> np.ndarray:
        """Discrete partial derivative of samples ``f`` along grid ``axis``.

        ``f`` may carry arbitrary trailing component axes; the first two axes
        must match the grid shape.
        """
        if f.shape[:2] != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.shape}")
        h = (self.h1, self.h2)[axis]
        periodic = (self.periodic1, self.periodic2)[axis]
        if self.scheme == "spectral":
            return _fft_deriv(f, axis, h)
        if periodic:
            return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * h)
        return np.gradient(f, h, axis=axis, edge_order=2)

    # -- quadrature -------------------------------------------------------

    def quad_weights(self) -> np.ndarray:
        """Nodewise quadrature weights: midpoint in periodic directions,
        trapezoid in non-periodic ones."""
        w1 = np.full(self.n1, self.h1)
        w2 = np.full(self.n2, self.h2)
        if not self.periodic1:
            w1[0] *= 0.5
            w1[-1] *= 0.5
        if not self.periodic2:
            w2[0] *= 0.5
            w2[-1] *= 0.5
        return np.outer(w1, w2)

    def integrate(self, f: np.ndarray) -> float:
        """Quadrature of a nodewise scalar field."""
        return float(np.sum(self.quad_weights() * f))


def _fft_deriv(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    n = f.shape[axis]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    if n % 2 == 0:
        # Zero the unmatched Nyquist mode so the operator stays skew-adjoint
        # on real data.
        k[n // 2] = 0.0
    shape = [1] * f.ndim
    shape[axis] = n
    return np.real(np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(f, axis=axis), axis=axis))
