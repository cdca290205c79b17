"""Tour of the reference geometries and the operator toolbox.

Builds the three reference patches (flat torus chart, unit-sphere band,
doubly periodic graph), prints their curvature against closed forms, and
then walks through the first-order toolbox on the graph patch: covariant
derivative, divergence flavors, curl, and the Bochner Laplacian, each
checked by an identity that an implementation cannot satisfy by accident.

Run:  python3 demos/geometry_tour.py
"""

import numpy as np

from gaugeflow.geometry import (TangentField, build_geometry, l2_inner,
                                with_variance)
from gaugeflow.grid import ParameterGrid
from gaugeflow.operators import (bochner_laplacian, covariant_derivative,
                                 curl, divergence)
from gaugeflow.surfaces import (SurfacePatch, flat_chart, fourier_proxies,
                                graph_chart, sin_cos_height, sphere_band)


def banner(text):
    print()
    print(text)
    print("-" * len(text))


def main():
    n = 48
    grid = ParameterGrid(n, n, 1.0 / n, 1.0 / n, scheme="spectral")

    banner("Reference patches")
    flat = build_geometry(SurfacePatch.from_chart(grid, flat_chart()))
    print(f"flat chart      max|H| = {np.max(np.abs(flat.H)):.2e}   "
          f"max|K| = {np.max(np.abs(flat.Kgauss)):.2e}   (both exactly zero)")

    sph = build_geometry(sphere_band(48, 64))
    print(f"unit sphere     H in [{sph.H.min():+.6f}, {sph.H.max():+.6f}]  "
          f"K in [{sph.Kgauss.min():+.6f}, {sph.Kgauss.max():+.6f}]   "
          "(outward normal: H=-2, K=+1)")

    geo = build_geometry(SurfacePatch.from_chart(grid, graph_chart(sin_cos_height())))
    print(f"graph patch     H in [{geo.H.min():+.3f}, {geo.H.max():+.3f}]  "
          f"K in [{geo.Kgauss.min():+.3f}, {geo.Kgauss.max():+.3f}]")

    banner("Operator identities on the graph patch")
    q = TangentField(fourier_proxies(grid, 7, (2,), kmax=2), ("u",))
    f = fourier_proxies(grid, 8, (), kmax=2)

    grad_f = covariant_derivative(f, geo)
    lhs = l2_inner(with_variance(grad_f, geo, ("u",)), q, geo)
    rhs = -grid.integrate(divergence(q, geo, "covariant").proxy * f * geo.sqrtg)
    print(f"<grad f, q> + <f, div q>            = {lhs - rhs:+.3e}   "
          "(integration by parts, closed surface)")

    curl_grad = curl(with_variance(grad_f, geo, ("u",)), geo)
    print(f"max |curl grad f|                   = {np.max(np.abs(curl_grad)):.3e}")

    lap = bochner_laplacian(q, geo)
    T = covariant_derivative(with_variance(q, geo, ("d",)), geo)
    pair = l2_inner(lap, q, geo)
    energy = -grid.integrate(
        np.einsum("abik,abjl,abij,abkl->ab", geo.ginv, geo.ginv,
                  T.proxy, T.proxy) * geo.sqrtg)
    print(f"<Lap q, q> + ||grad q||^2           = {pair - energy:+.3e}   "
          "(Bochner Laplacian is the gradient's adjoint composition)")

    banner("Divergence flavors on the sphere band")
    # the tangential projector (proxy: the inverse metric) has tangential
    # divergence H nu: on the unit sphere with outward normal that is -2 X
    P = TangentField(sph.ginv.copy(), ("u", "u"))
    divP = divergence(P, sph, "tangential")
    print(f"max |div P - H nu|                  = "
          f"{np.max(np.abs(divP.values - sph.H[..., None] * sph.nu)):.3e}")
    print()
    print("done; see gaugeflow verify --selector geometry for the strict gates")


if __name__ == "__main__":
    main()
