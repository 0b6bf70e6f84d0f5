import pathlib

import numpy as np
import pytest

from srgcert.modelio import load_model

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "srgcert" / "data"


@pytest.fixture(scope="session")
def h1_model():
    return load_model(DATA / "h1.tf")


@pytest.fixture(scope="session")
def h2_model():
    return load_model(DATA / "h2.tf")


@pytest.fixture(scope="session")
def h3_model():
    return load_model(DATA / "h3.tf")


@pytest.fixture(scope="session")
def h4_model():
    return load_model(DATA / "h4.tf")


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
