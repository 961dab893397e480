import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from disperkit.assembly import SafeMatrices, Scales, assemble
from disperkit.config import load_config
from disperkit.materials import Layup, isotropic_material
from disperkit.mesh import build_plate_mesh

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

ALU = dict(E=70e9, nu=0.33, rho=2700.0)
ALU_CT = 3040.0


def alu_speeds():
    """Dimensionless bulk speeds of aluminium for ``c_T = ALU_CT``."""
    E, nu, rho = ALU["E"], ALU["nu"], ALU["rho"]
    cl = np.sqrt(E * (1 - nu) / ((1 + nu) * (1 - 2 * nu)) / rho) / ALU_CT
    cs = np.sqrt(E / (2 * (1 + nu)) / rho) / ALU_CT
    return cl, cs


def alu_plate(n_plies=4, order=4):
    mat = isotropic_material(**ALU, name="aluminium")
    layup = Layup.from_angles([0.0] * n_plies, 0.25e-3, mat)
    a = layup.thickness / 2
    return assemble(build_plate_mesh(layup, order, a), Scales(a, ALU_CT))


def random_family(rng, n=10, complex_k2=True):
    """Random Hermitian family ``K1 + i k K2 + k^2 K3`` with an SPD mass."""
    A = rng.standard_normal((n, n))
    K1 = A @ A.T / n
    K2 = rng.standard_normal((n, n))
    K2 = K2 - K2.T if complex_k2 else np.zeros((n, n))
    B = rng.standard_normal((n, n))
    K3 = B @ B.T / n + np.eye(n)
    C = rng.standard_normal((n, n))
    M = C @ C.T / n + np.eye(n)
    return SafeMatrices.from_arrays(K1, K2, K3, M)


@pytest.fixture(scope="session")
def plate():
    return alu_plate()


@pytest.fixture(scope="session")
def sym_laminate():
    return load_config(CONFIGS / "symmetric_laminate.toml").build_matrices()


@pytest.fixture(scope="session")
def pipe_config():
    return load_config(CONFIGS / "pipe.toml")


@pytest.fixture(scope="session")
def pipe(pipe_config):
    return pipe_config.build_matrices()


ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(label, passed, detail)``; printed once in the terminal summary."""

    def record(label, passed, detail):
        ACCEPTANCE[label] = (bool(passed), detail)
        print(f"{label} {'PASS' if passed else 'FAIL'}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=lambda s: int(s.split("-")[1])):
        passed, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"{label} {'PASS' if passed else 'FAIL'}: {detail}")
