import sys

import numpy as np
import pytest

from lambda_mle import DirichletPerturbationModel, QGaussianModel, SufficientData
from lambda_mle.dirichlet import dp_sample
from lambda_mle.qgaussian import qg_sample

EXAMPLE1 = dict(lam=-1.2, theta=-1.0, n=500, seed=42)
EXAMPLE2 = dict(p=(0.1, 0.4, 0.5), sigma=0.1, n=100, seed=7)


@pytest.fixture(scope="session")
def qg_model():
    return QGaussianModel(EXAMPLE1["lam"])


@pytest.fixture(scope="session")
def example1_data(qg_model):
    x = qg_sample(EXAMPLE1["theta"], EXAMPLE1["lam"], EXAMPLE1["n"], EXAMPLE1["seed"])
    return SufficientData.from_samples(qg_model, x)


@pytest.fixture(scope="session")
def dp_model():
    return DirichletPerturbationModel(EXAMPLE2["sigma"], 2)


@pytest.fixture(scope="session")
def example2_data(dp_model):
    q = dp_sample(EXAMPLE2["p"], EXAMPLE2["sigma"], EXAMPLE2["n"], EXAMPLE2["seed"])
    return SufficientData.from_samples(dp_model, q)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
