import numpy as np
import pytest

from viscowave import (
    DomainSpec,
    PhysicalParams,
    assemble,
    build_kernel,
    build_mesh,
    make_rate,
)


def interval_mesh(resolution=64, length=1.0, gamma1=("right",)):
    spec = DomainSpec(
        dimension=1,
        extent=(length,),
        gamma1_faces=frozenset(gamma1),
        resolution=(resolution,),
    )
    return build_mesh(spec)


def square_mesh(resolution=16, extent=(1.0, 1.0), gamma1=("right",)):
    spec = DomainSpec(
        dimension=2,
        extent=extent,
        gamma1_faces=frozenset(gamma1),
        resolution=(resolution, resolution),
    )
    return build_mesh(spec)


def default_params(**overrides):
    base = dict(a=2.0, b=1.0, kappa=1.0, k_exp=4.0, p_c=1.0, q_c=1.0)
    base.update(overrides)
    return PhysicalParams(**base)


def exp_kernel(alpha=1.0, g0=1.0, a=2.0):
    return build_kernel(make_rate("constant", alpha), g0, a)


@pytest.fixture
def mesh64():
    return interval_mesh(64)


@pytest.fixture
def ops64(mesh64):
    return assemble(mesh64, default_params())


def sine_profile(mesh, amplitude):
    u = amplitude * np.sin(0.5 * np.pi * mesh.nodes[:, 0] / mesh.spec.extent[0])
    u[mesh.gamma0_nodes] = 0.0
    return u
