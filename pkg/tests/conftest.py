from __future__ import annotations

import cmath

import pytest

from wkbteich.qdiff import RationalQD

OMEGA = cmath.exp(2j * cmath.pi / 3)


def differentials() -> dict[str, RationalQD]:
    return {
        "square": RationalQD((-1, 0, 1)),
        "cubic": RationalQD.from_roots([1, OMEGA, OMEGA**2]),
        "quartic": RationalQD.from_roots([1, 1j, -1, -1j]),
        "punctured": RationalQD((-1, 0, 1), (0, 0, 1)),
        "pole3": RationalQD((-1, 0, 1), (0, 0, 0, 1)),
    }


@pytest.fixture(scope="session")
def square() -> RationalQD:
    return RationalQD((-1, 0, 1))
