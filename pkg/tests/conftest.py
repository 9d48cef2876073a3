import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from ho_semantics.config import PACKAGE_ROOT  # noqa: E402
from ho_semantics.engine import OperationalModel  # noqa: E402
from ho_semantics.rules import load_builtin  # noqa: E402
from ho_semantics.term import enumerate_closed, parse_term  # noqa: E402

ASSET_DIR = os.path.join(PACKAGE_ROOT, "assets")


@pytest.fixture(scope="session")
def asset_dir():
    return ASSET_DIR


@pytest.fixture(scope="session")
def xcl_spec():
    return load_builtin("xcl", ASSET_DIR)


@pytest.fixture(scope="session")
def xcl_nd_spec():
    return load_builtin("xcl_nd", ASSET_DIR)


@pytest.fixture
def xcl(xcl_spec):
    return OperationalModel(xcl_spec)


@pytest.fixture
def xcl_nd(xcl_nd_spec):
    return OperationalModel(xcl_nd_spec)


@pytest.fixture(scope="session")
def xcl_pool(xcl_spec):
    return enumerate_closed(xcl_spec.sig, 3)


@pytest.fixture
def term(xcl_spec):
    """Parse a closed xCL term."""
    return lambda src: parse_term(src, xcl_spec.sig)


@pytest.fixture
def nd_term(xcl_nd_spec):
    return lambda src: parse_term(src, xcl_nd_spec.sig)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
