# APPLICATION/tests/conftest.py

from pathlib import Path

import pytest

from stab_core.exact_algebra import Torus
from stab_core.gkm_model import pn, tstar_pn
from stab_core.lattice_geometry import Chamber

DATA_DIR = Path(__file__).resolve().parents[1] / "app" / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def tp1():
    return tstar_pn(2)


@pytest.fixture
def tp2():
    return tstar_pn(3)


@pytest.fixture
def p2():
    return pn(3)


@pytest.fixture
def std(tp1) -> Chamber:
    return Chamber.standard(tp1.torus)


@pytest.fixture
def torus_ah() -> Torus:
    return Torus(("a1", "a2", "h"), ("a1", "a2"))


def poly(torus: Torus, text: str):
    return torus.parse_poly(text)
