"""Geometry cache: metric, curvature, normals on reference surfaces."""
import numpy as np

from gaugeflow import (
    ParameterGrid,
    SurfacePatch,
    TangentField,
    build_geometry,
    flat_chart,
    graph_chart,
    l2_inner,
    l2_norm,
    pointwise_inner,
    project_tangent,
    sin_cos_height,
    sphere_band,
    to_ambient,
    with_variance,
)
from gaugeflow.surfaces import AmbientField, fourier_ambient


def test_flat_patch_is_flat(flat_geo):
    assert np.allclose(flat_geo.g, np.eye(2), atol=1e-13)
    assert np.max(np.abs(flat_geo.gamma2)) < 1e-12
    assert np.max(np.abs(flat_geo.II)) < 1e-12
    assert np.max(np.abs(flat_geo.H)) < 1e-12
    assert np.max(np.abs(flat_geo.Kgauss)) < 1e-12


def test_sphere_curvature_and_orientation(sphere_geo):
    # outward normal, II = -g, H = -2, K = +1 on the unit sphere
    assert np.max(np.abs(sphere_geo.nu - sphere_geo.patch.X)) < 1e-11
    assert np.max(np.abs(sphere_geo.II + sphere_geo.g)) < 1e-11
    assert np.max(np.abs(sphere_geo.H + 2.0)) < 1e-11
    assert np.max(np.abs(sphere_geo.Kgauss - 1.0)) < 1e-11


def _graph_H_central(height_fn, n_fine: int, stride: int) -> np.ndarray:
    """Mean curvature of a height graph from central differences of the
    sampled height alone (no geometry-module code involved)."""
    h = 1.0 / n_fine
    y = h * np.arange(n_fine)
    Y1, Y2 = np.meshgrid(y, y, indexing="ij")
    phi = height_fn(Y1, Y2)[0]

    def d(f, axis):
        return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * h)

    px, py = d(phi, 0), d(phi, 1)
    pxx = (np.roll(phi, -1, 0) - 2 * phi + np.roll(phi, 1, 0)) / h**2
    pyy = (np.roll(phi, -1, 1) - 2 * phi + np.roll(phi, 1, 1)) / h**2
    pxy = d(px, 1)
    w2 = 1.0 + px**2 + py**2
    H = ((1 + py**2) * pxx - 2 * px * py * pxy + (1 + px**2) * pyy) / w2**1.5
    return H[::stride, ::stride]


def test_graph_mean_curvature_matches_central_difference_oracle(graph_geo):
    # Richardson-extrapolated central differences of the height samples give
    # the curvature of the graph independently of the geometry cache.
    n = graph_geo.grid.n1
    H_c = _graph_H_central(sin_cos_height(), 10 * n, 10)
    H_f = _graph_H_central(sin_cos_height(), 20 * n, 20)
    H_oracle = (4.0 * H_f - H_c) / 3.0
    scale = np.max(np.abs(H_oracle))
    assert np.max(np.abs(graph_geo.H - H_oracle)) / scale < 1e-6


def test_normal_is_unit_and_orthogonal(graph_geo):
    nrm = np.linalg.norm(graph_geo.nu, axis=-1)
    assert np.max(np.abs(nrm - 1.0)) < 1e-13
    for i in range(2):
        dots = np.einsum("abc,abc->ab", graph_geo.dX[i], graph_geo.nu)
        assert np.max(np.abs(dots)) < 1e-13


def test_projection_of_normal_vanishes(graph_geo):
    res = project_tangent(graph_geo.nu, graph_geo)
    assert np.max(np.abs(res.proxy)) < 1e-12


def test_projection_fixes_tangential_fields(graph_geo, seeded_director):
    amb = to_ambient(seeded_director, graph_geo)
    back = project_tangent(amb, graph_geo)
    assert np.max(np.abs(back.proxy - seeded_director.proxy)) < 1e-10


def test_projection_output_is_orthogonal_to_normal(graph_geo):
    W = fourier_ambient(graph_geo.grid, 123, kmax=2)
    tang = to_ambient(project_tangent(W, graph_geo), graph_geo)
    dots = np.einsum("abc,abc->ab", tang.values, graph_geo.nu)
    assert np.max(np.abs(dots)) < 1e-12


def test_variance_shuffle_roundtrip(graph_geo, seeded_director):
    down = with_variance(seeded_director, graph_geo, ("d",))
    up = with_variance(down, graph_geo, ("u",))
    assert np.max(np.abs(up.proxy - seeded_director.proxy)) < 1e-12


def test_inner_product_positive_and_nondegenerate(graph_geo, seeded_director):
    assert l2_norm(seeded_director, graph_geo) > 0
    zero = TangentField(np.zeros_like(seeded_director.proxy), ("u",))
    assert l2_norm(zero, graph_geo) == 0.0


def test_flat_torus_unit_field_norm(flat_geo):
    proxy = np.zeros(flat_geo.grid.shape + (2,))
    proxy[..., 0] = 1.0
    q = TangentField(proxy, ("u",))
    assert abs(l2_norm(q, flat_geo) - 1.0) < 1e-12


def test_tangential_and_ambient_inner_products_agree(graph_geo, seeded_director):
    # the subbundle inclusion is an isometry: computing <q, q> via proxies
    # with the metric equals computing it on the ambient representatives
    q = seeded_director
    amb = to_ambient(q, graph_geo)
    via_proxy = pointwise_inner(q, q, graph_geo)
    via_ambient = np.einsum("abc,abc->ab", amb.values, amb.values)
    assert np.max(np.abs(via_proxy - via_ambient)) < 1e-12
    lhs = l2_inner(q, q, graph_geo)
    rhs = graph_geo.grid.integrate(via_ambient * graph_geo.sqrtg)
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))
