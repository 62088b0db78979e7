import math

import pytest


def bisect_shot_optimum(tol: float = 1e-12) -> float:
    """Independent bisection oracle for the root of 1 - exp(-2x) = x."""
    lo, hi = 0.5, 1.0
    f = lambda x: 1.0 - math.exp(-2.0 * x) - x
    assert f(lo) > 0 > f(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.fixture(scope="session")
def x_star():
    return bisect_shot_optimum()


@pytest.fixture(scope="session")
def shot_peak_constant(x_star):
    """x* exp(-2 x*): per-shot peak in units of (G'/G)^2."""
    return x_star * math.exp(-2.0 * x_star)
