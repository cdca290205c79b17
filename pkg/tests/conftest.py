"""Shared fixtures: reference patches and seeded fields."""
import numpy as np
import pytest

from gaugeflow import (
    ParameterGrid,
    SurfacePatch,
    TangentField,
    build_geometry,
    flat_chart,
    fourier_ambient,
    fourier_proxies,
    graph_chart,
    sin_cos_height,
    sphere_band,
)


@pytest.fixture(scope="session")
def flat_geo():
    grid = ParameterGrid(32, 32, 1 / 32, 1 / 32, scheme="spectral")
    return build_geometry(SurfacePatch.from_chart(grid, flat_chart()))


@pytest.fixture(scope="session")
def flat_open_geo():
    # non-periodic flat patch: linear coordinate fields stay single-valued
    grid = ParameterGrid(33, 33, 1 / 32, 1 / 32, periodic1=False,
                         periodic2=False, scheme="central")
    return build_geometry(SurfacePatch.from_chart(grid, flat_chart()))


@pytest.fixture(scope="session")
def sphere_geo():
    return build_geometry(sphere_band(40, 56))


@pytest.fixture(scope="session")
def graph_patch():
    n = 48
    grid = ParameterGrid(n, n, 1 / n, 1 / n, scheme="spectral")
    return SurfacePatch.from_chart(grid, graph_chart(sin_cos_height()))


@pytest.fixture(scope="session")
def graph_geo(graph_patch):
    return build_geometry(graph_patch)


@pytest.fixture(scope="session")
def seeded_director(graph_patch):
    return TangentField(fourier_proxies(graph_patch.grid, 7, (2,), kmax=2), ("u",))


@pytest.fixture(scope="session")
def seeded_tensor(graph_patch):
    return TangentField(fourier_proxies(graph_patch.grid, 8, (2, 2), kmax=2), ("u", "u"))


@pytest.fixture(scope="session")
def seeded_deformation(graph_patch):
    return fourier_ambient(graph_patch.grid, 9, kmax=2, amp=0.1)
