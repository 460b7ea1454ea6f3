import numpy as np
import pytest

from plasmahom import geometry, materials, meshing


@pytest.fixture(scope="session")
def drude_builder():
    def build(omega_tilde):
        return materials.material_from_drude(1.0, 20.72, omega_tilde)
    return build


@pytest.fixture(scope="session")
def planar_mesh():
    return meshing.generate_mesh(geometry.build_geometry("planar_sheet"), 0.1)


@pytest.fixture(scope="session")
def ribbon_mesh():
    return meshing.generate_mesh(geometry.build_geometry("ribbon", width=0.7), 0.05)


@pytest.fixture(scope="session")
def tube_mesh():
    return meshing.generate_mesh(geometry.build_geometry("tube", radius=0.375), 0.05)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
