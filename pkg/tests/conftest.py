import numpy as np
import pytest

import parahom as ph


@pytest.fixture(scope="session")
def lattice_1d():
    return ph.unit_lattice(1)


@pytest.fixture(scope="session")
def lattice_2d():
    return ph.unit_lattice(2)


@pytest.fixture(scope="session")
def deriv_1d():
    return ph.derivative_symbol_1d()


@pytest.fixture(scope="session")
def grad_2d():
    return ph.gradient_symbol(2)


def sinusoid_coefficient(lattice, n_cell=1024, base=2.0, amplitude=1.0, freq=1):
    def fn(y):
        return (base + amplitude * np.sin(2 * np.pi * freq * y[:, 0]))[:, None, None]
    return ph.PeriodicCoefficient.from_callable(fn, lattice, n_cell, "linear")


@pytest.fixture(scope="session")
def sin_coefficient_1d(lattice_1d):
    return sinusoid_coefficient(lattice_1d)


@pytest.fixture(scope="session")
def sin_cell_1d(sin_coefficient_1d, deriv_1d):
    return ph.solve_cell_problem(sin_coefficient_1d, deriv_1d, 1024)
