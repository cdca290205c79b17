"""Surface differential operators: covariant derivative, divergence,
curl, Bochner Laplacian."""
import numpy as np

from gaugeflow import (
    ParameterGrid,
    SurfacePatch,
    TangentField,
    bochner_laplacian,
    build_geometry,
    covariant_derivative,
    curl,
    divergence,
    flat_chart,
    l2_inner,
    scalar_field,
    sphere_band,
    with_variance,
)
from gaugeflow.surfaces import fourier_proxies


def _rotation_field(geo):
    Y1, Y2 = geo.grid.mesh()
    proxy = np.stack([-Y2, Y1], axis=-1)
    return TangentField(proxy, ("u",))


def test_gradient_of_constant_scalar_vanishes(flat_geo):
    f = scalar_field(np.full(flat_geo.grid.shape, 3.25))
    grad = covariant_derivative(f, flat_geo)
    assert np.max(np.abs(grad.proxy)) < 1e-12


def test_flat_rotation_field_gradient(flat_open_geo):
    # q = (-y2, y1): the covariant derivative proxy is the rotation generator
    grad = covariant_derivative(_rotation_field(flat_open_geo), flat_open_geo)
    expected = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.max(np.abs(grad.proxy - expected)) < 1e-10


def test_sphere_projected_constant_vs_christoffel_expansion(sphere_geo):
    # nabla q for q = P(const) on the sphere, assembled by hand from
    # partials of the proxy plus Christoffel terms, slot by slot.
    const = np.array([0.35, -0.2, 0.55])
    amb = np.broadcast_to(const, sphere_geo.grid.shape + (3,))
    proxy_up = np.einsum("abij,abc,jabc->abi", sphere_geo.ginv,
                         amb, sphere_geo.dX)
    q = TangentField(proxy_up, ("u",))
    T = covariant_derivative(q, sphere_geo)
    dq = np.stack([sphere_geo.grid.deriv(proxy_up, 0),
                   sphere_geo.grid.deriv(proxy_up, 1)])
    manual = np.empty_like(T.proxy)
    for i in range(2):
        for j in range(2):
            manual[..., i, j] = dq[j][..., i] + np.einsum(
                "ab,ab->ab", sphere_geo.gamma2[..., i, j, :][..., 0],
                proxy_up[..., 0]) + sphere_geo.gamma2[..., i, j, 1] * proxy_up[..., 1]
    scale = np.max(np.abs(manual))
    assert np.max(np.abs(T.proxy - manual)) / scale < 1e-6


def test_divergence_modes_on_flat_identity(flat_geo):
    sigma = TangentField(
        np.broadcast_to(np.eye(2), flat_geo.grid.shape + (2, 2)).copy(),
        ("u", "u"))
    assert np.max(np.abs(divergence(sigma, flat_geo, "covariant").proxy)) < 1e-12
    assert np.max(np.abs(divergence(sigma, flat_geo, "tangential").values)) < 1e-12
    eta = TangentField(np.zeros(flat_geo.grid.shape + (2,)), ("u",))
    assert np.max(np.abs(divergence(sigma, flat_geo, "surface", eta=eta).values)) < 1e-12


def test_sphere_identity_tensor_divergence_is_mean_curvature_normal(sphere_geo):
    # div of the tangential projector picks up <II, Id> nu = H nu = -2 nu
    sigma = TangentField(sphere_geo.ginv.copy(), ("u", "u"))
    out = divergence(sigma, sphere_geo, "tangential").values
    expected = -2.0 * sphere_geo.nu
    assert np.max(np.abs(out - expected)) < 1e-9


def test_surface_divergence_decomposition(graph_geo):
    # div_S(sigma + nu otimes eta) recomposed from independently computed
    # pieces: (div sigma - II eta) tangential and (<II,sigma> + div eta) normal
    grid = graph_geo.grid
    sigma = TangentField(fourier_proxies(grid, 31, (2, 2), kmax=2), ("u", "u"))
    eta = TangentField(fourier_proxies(grid, 32, (2,), kmax=2), ("u",))
    out = divergence(sigma, graph_geo, "surface", eta=eta).values

    from gaugeflow import pointwise_inner, to_ambient
    div_t = with_variance(divergence(sigma, graph_geo, "covariant"),
                          graph_geo, ("u",)).proxy
    II_mix = np.einsum("abik,abkj->abij", graph_geo.ginv, graph_geo.II)
    II_eta = np.einsum("abij,abj->abi", II_mix,
                       with_variance(eta, graph_geo, ("u",)).proxy)
    tang = np.einsum("abi,iabc->abc", div_t - II_eta, graph_geo.dX)
    II_f = TangentField(graph_geo.II, ("d", "d"))
    nrm = (pointwise_inner(II_f, sigma, graph_geo)
           + divergence(eta, graph_geo, "covariant").proxy)
    recomposed = tang + nrm[..., None] * graph_geo.nu
    scale = np.max(np.abs(recomposed))
    assert np.max(np.abs(out - recomposed)) / scale < 1e-8


def test_curl_of_rotation_field_is_two(flat_open_geo):
    r = curl(_rotation_field(flat_open_geo), flat_open_geo)
    assert np.max(np.abs(r - 2.0)) < 1e-10


def test_curl_of_gradient_vanishes(flat_geo):
    Y1, Y2 = flat_geo.grid.mesh()
    f = scalar_field(np.sin(2 * np.pi * Y1) * np.cos(2 * np.pi * Y2))
    grad = with_variance(covariant_derivative(f, flat_geo), flat_geo, ("u",))
    r = curl(grad, flat_geo)
    assert np.max(np.abs(r)) < 1e-9


def test_curl_coordinate_formula_on_curved_patch(graph_geo):
    # -<nabla q, E> against (1/sqrt g)(d1 q_2 - d2 q_1)
    q = TangentField(fourier_proxies(graph_geo.grid, 33, (2,), kmax=2), ("u",))
    lhs = curl(q, graph_geo)
    q_dn = with_variance(q, graph_geo, ("d",)).proxy
    rhs = (graph_geo.grid.deriv(q_dn[..., 1], 0)
           - graph_geo.grid.deriv(q_dn[..., 0], 1)) / graph_geo.sqrtg
    scale = np.max(np.abs(rhs))
    assert np.max(np.abs(lhs - rhs)) / scale < 1e-6


def test_laplacian_of_constant_vanishes(flat_geo):
    proxy = np.zeros(flat_geo.grid.shape + (2,))
    proxy[..., 0] = 0.7
    lap = bochner_laplacian(TangentField(proxy, ("u",)), flat_geo)
    assert np.max(np.abs(lap.proxy)) < 1e-10


def test_laplacian_fourier_eigenfunction(flat_geo):
    Y1, Y2 = flat_geo.grid.mesh()
    proxy = np.zeros(flat_geo.grid.shape + (2,))
    proxy[..., 0] = np.sin(2 * np.pi * Y2)
    lap = bochner_laplacian(TangentField(proxy, ("u",)), flat_geo)
    expected = -4 * np.pi**2 * proxy
    scale = 4 * np.pi**2
    assert np.max(np.abs(lap.proxy - expected)) / scale < 1e-9


def test_laplacian_adjoint_to_gradient(graph_geo):
    q = TangentField(fourier_proxies(graph_geo.grid, 34, (2,), kmax=2), ("u",))
    r = TangentField(fourier_proxies(graph_geo.grid, 35, (2,), kmax=2), ("u",))
    gq = covariant_derivative(q, graph_geo)
    gr = covariant_derivative(r, graph_geo)
    lhs = l2_inner(with_variance(gq, graph_geo, ("u", "u")), gr, graph_geo)
    rhs = -l2_inner(bochner_laplacian(q, graph_geo), r, graph_geo)
    assert abs(lhs - rhs) / max(abs(lhs), 1e-15) < 1e-6
