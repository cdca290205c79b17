"""The (time derivative, gauge) table of convection mismatches, in numbers.

A surface quantity can be attached to the moving surface in different ways
(a gauge), and its rate can be measured by different observer derivatives.
Whenever the two conventions differ the deformation derivative picks up a
convective term built from the symmetric part S and antisymmetric part A
of the tangential deformation gradient G.  This demo evaluates every cell
of the vector table on a seeded geometry/field pair, prints which S/A
combination each cell is, and spot-checks one cell against an independent
finite-difference transport oracle.

Run:  python3 demos/deformation_cells.py
"""

import numpy as np

from gaugeflow.deformation import (GaugeSpec, TimeDerivSpec, VECTOR_GAUGES,
                                   decompose_deformation, phi_minus_psi)
from gaugeflow.verification import (check_vector_gauge_matrix, standard_fields,
                                    standard_patch)
from gaugeflow.geometry import build_geometry


LABELS = {
    ("material", "material"): "0", ("material", "upper"): "-S-A",
    ("material", "lower"): "S-A", ("material", "jaumann"): "-A",
    ("upper", "material"): "S+A", ("upper", "upper"): "0",
    ("upper", "lower"): "2S", ("upper", "jaumann"): "S",
    ("lower", "material"): "A-S", ("lower", "upper"): "-2S",
    ("lower", "lower"): "0", ("lower", "jaumann"): "-S",
    ("jaumann", "material"): "A", ("jaumann", "upper"): "-S",
    ("jaumann", "lower"): "S", ("jaumann", "jaumann"): "0",
}


def main():
    patch = standard_patch(48)
    q, _, W = standard_fields(patch)
    geo = build_geometry(patch)
    parts = decompose_deformation(W.with_derivatives(patch.grid), geo)

    G = parts.G.proxy
    S = 0.5 * (G + np.swapaxes(G, -1, -2))
    A = 0.5 * (G - np.swapaxes(G, -1, -2))
    print(f"seeded deformation:  max|S| = {np.max(np.abs(S)):.3f}   "
          f"max|A| = {np.max(np.abs(A)):.3f}")
    print()
    print("convection mismatch Phi - Psi by (derivative row, gauge column),")
    print("entries: named S/A combination, max |cell| over the patch")
    print()
    header = " " * 10 + "".join(f"{g:>16s}" for g in VECTOR_GAUGES)
    print(header)
    for deriv in VECTOR_GAUGES:
        cells = []
        for gauge in VECTOR_GAUGES:
            mat, _ = phi_minus_psi(GaugeSpec(1, gauge), TimeDerivSpec(1, deriv),
                                   parts)
            mag = np.max(np.abs(mat.proxy))
            cells.append(f"{LABELS[(deriv, gauge)]:>6s} {mag:8.2e}")
        print(f"{deriv:>9s} " + " ".join(cells))

    print()
    print("finite-difference oracle over all 16 cells (transport onto a")
    print("displaced immersion, central differences, slope must be ~2):")
    reports = check_vector_gauge_matrix(patch, q, W)
    worst = max(r.max_rel_err for r in reports if r.order is not None)
    orders = [r.order for r in reports if r.order is not None]
    print(f"  worst relative error {worst:.2e}   "
          f"observed orders in [{min(orders):.2f}, {max(orders):.2f}]")
    ok = all(r.passed for r in reports)
    print(f"  all cells passed: {ok}")


if __name__ == "__main__":
    main()
