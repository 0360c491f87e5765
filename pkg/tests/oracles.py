"""Independent test oracles.

These deliberately avoid the library's production algorithms: the reciprocal
determinant formula, the Bell-polynomial form of the inversion coefficients,
fixed-point series iteration, and brute-force quadrature live here so the
recurrence-based production paths are checked against something else.
"""

import math

import numpy as np

from hyperlev.series import TruncatedSeries, bell_partial


def reciprocal_coeff_determinant(f: TruncatedSeries, n: int) -> complex:
    """Coefficient r_n of 1/f via the classical determinant formula.

    f = sum_{j>=k} f_j z^j with f_k != 0; valid for n >= -k + 2.
    """
    k = f.base_exp
    assert f.den == 1

    def fj(idx):
        rel = idx - k
        if rel < 0:
            return 0.0
        if rel >= len(f.coeffs):
            raise IndexError("series too short for requested determinant")
        return complex(f.coeffs[rel])

    fk = fj(k)
    if n == -k:
        return 1 / fk
    if n == -k + 1:
        return -fj(k + 1) / fk**2
    m = n + k
    mat = np.zeros((m, m), dtype=complex)
    for col in range(m):
        mat[0, col] = fj(k + 1 + col)
    for row in range(1, m):
        for col in range(m):
            mat[row, col] = fj(k + col - row + 1)
    sign = (-1) ** (n + k)
    return sign / fk ** (n + k + 1) * np.linalg.det(mat)


def rising_factorial(x, i):
    out = 1.0
    for j in range(i):
        out *= x + j
    return out


def lagrange_coeff_bell(f: TruncatedSeries, n: int, branch="principal") -> complex:
    """Inversion coefficient l_n via the explicit Bell-polynomial formula."""
    k = f.base_exp
    fk = complex(f.coeffs[0])
    root = fk ** (1.0 / k)
    if branch == "negated":
        root = -root
    if n == 1:
        return 1 / root

    def frel(j):  # f_{k+j}
        return complex(f.coeffs[j]) if j < len(f.coeffs) else 0.0

    total = 0.0
    for m in range(1, n):
        args = [math.factorial(j) * frel(j) / fk for j in range(1, n - m + 1)]
        b = bell_partial(n - 1, m, args)
        total += (-1) ** m * rising_factorial(n / k, m) * b
    return total / (math.factorial(n) * root**n)


def catalan_inverse_coeffs(order: int) -> np.ndarray:
    """Fixed-point iteration z <- w + z^2 for the inverse of w = z - z^2."""
    z = np.zeros(order + 1)
    z[1] = 1.0
    for _ in range(order + 2):
        sq = np.convolve(z, z)[: order + 1]
        new = np.zeros(order + 1)
        new[1] = 1.0
        new += sq
        new[0] = 0.0
        z = new
    return z  # z[n] = coefficient of w^n


def eval_series_naive(f: TruncatedSeries, x: complex) -> complex:
    return sum(complex(c) * x ** float(f.exponent(i)) for i, c in enumerate(f.coeffs))


def richardson_derivative(fn, order: int, h: float):
    """4th-order finite-difference p_n = g^{(n)}(0)/n! for n = 0, 1, 2."""
    g = fn
    p0 = g(0.0)
    p1 = (8 * (g(h) - g(-h)) - (g(2 * h) - g(-2 * h))) / (12 * h)
    p2 = (-g(2 * h) + 16 * g(h) - 30 * g(0.0) + 16 * g(-h) - g(-2 * h)) / (12 * h**2) / 2
    return [p0, p1, p2][: order + 1]
