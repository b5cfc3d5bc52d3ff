import numpy as np
import pytest

from crackscatter import ComplexFrequency, CrackGeometry, IncidentWave, LatticeSymbols
from crackscatter.kernel import FactorizedKernel, MatrixKernel
from crackscatter.solver import SpectralSolution


@pytest.fixture(scope="session")
def om035():
    return ComplexFrequency(0.35, 1e-3)


@pytest.fixture(scope="session")
def wave45(om035):
    return IncidentWave.from_angle(om035, np.pi / 4)


@pytest.fixture(scope="session")
def sym35(om035, wave45):
    return LatticeSymbols(om035, wave45)


@pytest.fixture(scope="session")
def circle_nodes_4096():
    return np.exp(2j * np.pi * np.arange(4096) / 4096)


def _fk(sym, N, M):
    return FactorizedKernel(MatrixKernel(sym, CrackGeometry(N=N, M=M)),
                            node_count=4096)


@pytest.fixture(scope="session")
def fk_M0N4(sym35):
    return _fk(sym35, 4, 0)


@pytest.fixture(scope="session")
def fk_M1N4(sym35):
    return _fk(sym35, 4, 1)


@pytest.fixture(scope="session")
def fk_M1N6(sym35):
    return _fk(sym35, 6, 1)


@pytest.fixture(scope="session")
def fk_M2N4(sym35):
    return _fk(sym35, 4, 2)


@pytest.fixture(scope="session")
def sol_M0(fk_M0N4, wave45):
    return SpectralSolution(fk_M0N4, wave45)


@pytest.fixture(scope="session")
def sol_M1(fk_M1N4, wave45):
    return SpectralSolution(fk_M1N4, wave45)
