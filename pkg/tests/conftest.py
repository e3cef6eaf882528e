import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stpagency.fixtures import ca2_chain, copy_chain, degenerate_copy_loop, pa_chain
from stpagency.paloop import PaLoop


@pytest.fixture
def copy_fix():
    return copy_chain()


@pytest.fixture
def pa_fix():
    return pa_chain()


@pytest.fixture
def ca2_fix():
    return ca2_chain()


@pytest.fixture
def pa_loop(pa_fix):
    return PaLoop.from_chain(pa_fix)


@pytest.fixture
def degenerate_loop():
    return degenerate_copy_loop()
