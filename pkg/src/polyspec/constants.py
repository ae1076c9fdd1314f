"""Spectral constants for disk comparisons.

The first zero of the Bessel function J0 enters every disk bound: the
first Dirichlet eigenvalue of a disk of radius r is (J0_ZERO / r)**2.
The constant is hard-coded; ``bessel_j0_first_zero`` recomputes it by
bisecting the power series so the value can be cross-checked at test
time without pulling in a special-function library.
"""

import math

# First positive zero of J0, correct to the last digit of a float64.
J0_ZERO = 2.404825557695773

# lambda(disk of radius 1) = J0_ZERO**2
DISK_EIGENVALUE = J0_ZERO**2


def bessel_j0(x: float) -> float:
    """Evaluate J0(x) by its power series.

    The series sum_k (-1)^k (x/2)^(2k) / (k!)^2 converges fast for the
    |x| <= 4 range needed to bracket the first zero.
    """
    z = -0.25 * x * x
    term = 1.0
    total = 1.0
    for k in range(1, 40):
        term *= z / (k * k)
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return total


def bessel_j0_first_zero(tol: float = 1e-14) -> float:
    """Locate the first zero of J0 in (2, 3) by bisection."""
    lo, hi = 2.0, 3.0
    flo = bessel_j0(lo)
    if not (flo > 0.0 > bessel_j0(hi)):
        raise RuntimeError("J0 sign change not bracketed in (2, 3)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if bessel_j0(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def disk_eigenvalue(r: float) -> float:
    """First Dirichlet eigenvalue of a disk of radius ``r``."""
    if r <= 0.0:
        raise ValueError("disk radius must be positive")
    return DISK_EIGENVALUE / (r * r)


def _selfcheck() -> None:
    z = bessel_j0_first_zero()
    if not math.isclose(z, J0_ZERO, rel_tol=0.0, abs_tol=1e-12):
        raise AssertionError(f"J0 zero mismatch: {z} vs {J0_ZERO}")


if __name__ == "__main__":  # pragma: no cover
    _selfcheck()
    print(f"j0 = {bessel_j0_first_zero():.15f}")
