import pytest

from skewdim.extension import verify_kernel_transitivity
from skewdim.freegroup import BoundaryPoint
from skewdim.projection import Projection, f2_srw
from skewdim.symbolic import from_forbidden


@pytest.fixture(scope="session")
def f2():
    system, chi = f2_srw()
    return chi


@pytest.fixture(scope="session")
def f2_cert(f2):
    return verify_kernel_transitivity(f2, 4)


@pytest.fixture(scope="session")
def ray():
    return BoundaryPoint.parse("", "e1 e2")


@pytest.fixture(scope="session")
def restricted():
    """Non-full-shift fixture: ``ab`` and ``BB`` forbidden, depth-2 non-constant potential."""
    alphabet = ["a", "A", "b", "B"]
    forbidden = [("a", "b"), ("B", "B")]
    base = from_forbidden(alphabet, forbidden)
    table = {}
    for a in range(4):
        for b in range(4):
            if base.incidence[a, b]:
                table[f"{alphabet[a]}{alphabet[b]}"] = 0.7 + 0.15 * a + 0.1 * b
    system = from_forbidden(alphabet, forbidden, table)
    return Projection.from_mapping(system, {"a": "e1", "A": "E1", "b": "e2", "B": "E2"}, rank=2)
