"""Series engine: examples, oracles, and round-trip properties."""

import math

import numpy as np
import pytest

from hyperlev.errors import (
    NonvanishingInner,
    PrincipalPartPresent,
    UnsupportedOrder,
    ZeroLeadingCoefficient,
)
from hyperlev.series import (
    TruncatedSeries,
    add,
    bell_partial,
    compose,
    differentiate_param,
    exp_base_power,
    lagrange_invert,
    mul,
    reciprocal,
)

from oracles import (
    catalan_inverse_coeffs,
    eval_series_naive,
    lagrange_coeff_bell,
    reciprocal_coeff_determinant,
    richardson_derivative,
)


def series(base, coeffs, den=1):
    return TruncatedSeries(base, coeffs, den)


def coeff_at(f, exponent):
    for i, c in enumerate(f.coeffs):
        if f.exponent(i) == exponent:
            return c
    return 0.0


def random_series(rng, base=0, length=12, den=1, lead_lo=0.1, lead_hi=10.0):
    coeffs = rng.standard_normal(length) + 1j * rng.standard_normal(length)
    lead = rng.uniform(lead_lo, lead_hi) * np.exp(2j * np.pi * rng.uniform())
    coeffs[0] = lead
    return TruncatedSeries(base, coeffs.tolist(), den)


def tame_series(rng, base=0, length=12, den=1, lead_lo=0.1, lead_hi=10.0):
    """Random series whose reciprocal/inverse keeps O(1) coefficients.

    Tail coefficients decay like 2^-j relative to the lead, so the zeros of
    the normalized series stay outside the unit disk and absolute
    per-coefficient tolerances are meaningful.
    """
    lead = rng.uniform(lead_lo, lead_hi) * np.exp(2j * np.pi * rng.uniform())
    tail = rng.uniform(0.1, 1.0, size=length - 1) * np.exp(2j * np.pi * rng.uniform(size=length - 1))
    tail *= lead * 0.3 ** np.arange(1, length)
    return TruncatedSeries(base, [lead, *tail.tolist()], den)


# ---------------------------------------------------------------- add / mul


def test_add_cancellation():
    a = series(0, [1.0, 1.0])
    b = series(0, [1.0, -1.0])
    s = add(a, b)
    assert s.base_exp == 0 and s.coeffs[0] == 2.0
    assert all(c == 0 for c in s.coeffs[1:])


def test_add_identity_with_zero():
    s = series(0, [3.0, 2.0, 1.0])
    assert add(s, TruncatedSeries.zero()) is s


def test_add_matches_pointwise_evaluation():
    rng = np.random.default_rng(7)
    parts = [random_series(rng, base=rng.integers(-2, 3), length=14) for _ in range(5)]
    total = parts[0]
    for p in parts[1:]:
        total = add(total, p)
    z = 0.01
    direct = sum(eval_series_naive(p, z) for p in parts)
    # compare only through the common truncation order
    approx = eval_series_naive(total, z)
    tail = max(abs(p.coeffs[-1]) for p in parts) * abs(z) ** float(total.exponent(total.length - 1) + 1)
    assert abs(direct - approx) < 1e-12 + 10 * tail


def test_mul_polynomials():
    a = series(0, [1.0, 1.0])
    b = series(0, [1.0, -1.0])
    p = mul(a, b)
    assert p.coeffs == (1.0, 0.0, -1.0) or (p.coeffs[0] == 1.0 and p.coeffs[1] == 0.0)


def test_mul_exponent_bookkeeping():
    a = series(-1, [1.0])
    b = series(2, [1.0])
    p = mul(a, b)
    assert p.base_exp == 1 and p.coeffs == (1.0,)


def test_mul_reciprocal_round_trip():
    rng = np.random.default_rng(11)
    f = tame_series(rng, base=1, length=20)
    unit = mul(f, reciprocal(f))
    assert unit.base_exp == 0
    assert abs(unit.coeffs[0] - 1) < 1e-12
    assert all(abs(c) < 1e-12 for c in unit.coeffs[1:])


def test_commutativity_and_associativity():
    rng = np.random.default_rng(13)
    for _ in range(25):
        a = random_series(rng, length=10)
        b = random_series(rng, length=10)
        c = random_series(rng, length=10)
        ab = mul(a, b)
        ba = mul(b, a)
        assert all(abs(x - y) <= 1e-13 * max(1, abs(x)) for x, y in zip(ab.coeffs, ba.coeffs))
        left = mul(mul(a, b), c)
        right = mul(a, mul(b, c))
        assert all(abs(x - y) <= 1e-12 * max(1, abs(x)) for x, y in zip(left.coeffs, right.coeffs))
        s1 = add(add(a, b), c)
        s2 = add(a, add(b, c))
        assert all(abs(x - y) <= 1e-13 * max(1, abs(x)) for x, y in zip(s1.coeffs, s2.coeffs))


# ---------------------------------------------------------------- reciprocal


def test_reciprocal_geometric():
    f = series(0, [1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    r = reciprocal(f)
    expect = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0]
    assert np.allclose([complex(c) for c in r.coeffs], expect)


def test_reciprocal_matches_determinant_formula():
    rng = np.random.default_rng(17)
    for _ in range(10):
        f = random_series(rng, base=rng.integers(-2, 3), length=9)
        r = reciprocal(f)
        for n_rel in range(6):
            n = r.base_exp + n_rel
            want = reciprocal_coeff_determinant(f, n)
            got = complex(r.coeffs[n_rel])
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


def test_reciprocal_of_diffusion_principal_part():
    # sigma^2/2 z^-2 + a z^-1 + eta_0 + ... has reciprocal with base exponent +2
    f = series(-2, [0.5 * 0.042**2, 0.14, -5.2, 3.1, -2.2])
    r = reciprocal(f)
    assert r.base_exp == 2
    assert abs(complex(r.coeffs[0]) - 1 / (0.5 * 0.042**2)) < 1e-9


def test_reciprocal_rejects_zero_lead():
    with pytest.raises(ZeroLeadingCoefficient):
        reciprocal(TruncatedSeries.zero())


# ---------------------------------------------------------------- Bell


def test_bell_single_block():
    x = list(range(1, 10))
    for n in range(1, 7):
        assert bell_partial(n, 1, x) == x[n - 1]


def test_bell_pair_partition():
    # enumerate partitions of {1,2,3} into 2 blocks: {1}{23}, {2}{13}, {3}{12}
    x1, x2 = 2.0, 3.0
    assert bell_partial(3, 2, [x1, x2]) == pytest.approx(3 * x1 * x2)


def test_bell_all_singletons():
    x1 = 1.7
    for n in range(1, 8):
        assert bell_partial(n, n, [x1]) == pytest.approx(x1**n)


def test_bell_against_sympy():
    sympy = pytest.importorskip("sympy")
    rng = np.random.default_rng(23)
    xs = rng.uniform(-2, 2, size=8).tolist()
    for n in range(1, 8):
        for m in range(1, n + 1):
            want = float(sympy.bell(n, m, xs[: n - m + 1]))
            assert bell_partial(n, m, xs) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_bell_short_arguments_raise():
    with pytest.raises(IndexError):
        bell_partial(5, 2, [1.0, 2.0])


# ---------------------------------------------------------------- powers


def test_exp_base_power_exponential_series():
    f = series(1, [1.0] + [0.0] * 8)
    p = exp_base_power(math.e, f)
    for n, c in enumerate(p.coeffs):
        assert abs(c - 1 / math.factorial(n)) < 1e-12


def test_exp_base_power_unit_base():
    f = series(0, [0.3, 0.1, 0.05, -0.2])
    p = exp_base_power(1.0, f)
    assert abs(p.coeffs[0] - 1) < 1e-15
    assert all(abs(c) < 1e-15 for c in p.coeffs[1:])


def test_exp_base_power_finite_difference_oracle():
    f = series(0, [0.3, 0.1, 0.05])
    p = exp_base_power(2.0, f)

    def g(t):
        return 2.0 ** (0.3 + 0.1 * t + 0.05 * t * t)

    want = richardson_derivative(g, 2, h=1e-2)
    for got, ref in zip(p.coeffs, want):
        assert abs(got - ref) < 1e-8


def test_exp_base_power_multiplicativity():
    rng = np.random.default_rng(29)
    f = random_series(rng, base=0, length=10).scaled(0.3)
    g = random_series(rng, base=0, length=10).scaled(0.2)
    lhs = exp_base_power(2.5, add(f, g))
    rhs = mul(exp_base_power(2.5, f), exp_base_power(2.5, g))
    for a, b in zip(lhs.coeffs, rhs.coeffs):
        assert abs(a - b) <= 1e-11 * max(1.0, abs(a))


def test_exp_base_power_rejects_principal_part():
    with pytest.raises(PrincipalPartPresent):
        exp_base_power(2.0, series(-1, [1.0, 2.0]))


# ---------------------------------------------------------------- inversion


def test_lagrange_invert_catalan():
    f = series(1, [1.0, -1.0] + [0.0] * 6)
    g = lagrange_invert(f)
    want = catalan_inverse_coeffs(len(g.coeffs))
    for i, c in enumerate(g.coeffs):
        assert abs(c - want[i + 1]) < 1e-10


def test_lagrange_invert_pure_square_branches():
    f = series(2, [1.0, 0.0, 0.0])
    g_p = lagrange_invert(f, "principal")
    g_n = lagrange_invert(f, "negated")
    assert g_p.den == 2 and g_p.exponent(0) == 0.5
    assert abs(g_p.coeffs[0] - 1.0) < 1e-15
    assert abs(g_n.coeffs[0] + 1.0) < 1e-15


@pytest.mark.parametrize("k,branch", [(1, "principal"), (2, "principal"), (2, "negated")])
def test_lagrange_invert_round_trip(k, branch):
    rng = np.random.default_rng(31 + k)
    for _ in range(20):
        f = random_series(rng, base=k, length=14)
        g = lagrange_invert(f, branch)
        # evaluate f(g(w)) - w at small w numerically through the truncation
        for w in (1e-3, 1e-3 + 5e-4j):
            zv = eval_series_naive(g, w)
            res = eval_series_naive(f, zv) - w
            assert abs(res) < 1e-10


def test_lagrange_invert_matches_bell_formula():
    rng = np.random.default_rng(41)
    for k in (1, 2):
        f = random_series(rng, base=k, length=10)
        g = lagrange_invert(f)
        for n in range(1, 9):
            want = lagrange_coeff_bell(f, n)
            got = complex(g.coeffs[n - 1])
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


def test_lagrange_invert_rejects_bad_order():
    with pytest.raises(UnsupportedOrder):
        lagrange_invert(series(3, [1.0, 1.0]))


# ---------------------------------------------------------------- compose


def test_compose_geometric_with_square():
    outer = series(0, [1.0] * 7)  # 1/(1-z)
    inner = series(2, [1.0, 0.0, 0.0, 0.0, 0.0])
    c = compose(outer, inner)
    assert abs(coeff_at(c, 0) - 1) < 1e-14
    assert abs(coeff_at(c, 2) - 1) < 1e-14
    assert abs(coeff_at(c, 4) - 1) < 1e-14
    assert abs(coeff_at(c, 1)) < 1e-14
    assert abs(coeff_at(c, 3)) < 1e-14


def test_compose_exp_log_identity():
    n = 12
    exp_s = series(0, [1 / math.factorial(j) for j in range(n)])
    log_s = series(1, [(-1) ** (j + 1) / j for j in range(1, n)])
    c = compose(exp_s, log_s)
    assert abs(coeff_at(c, 0) - 1) < 1e-12
    assert abs(coeff_at(c, 1) - 1) < 1e-12
    for e in range(2, c.length):
        assert abs(c.coeffs[e]) < 1e-10


def test_compose_inverse_round_trip():
    rng = np.random.default_rng(43)
    f = tame_series(rng, base=1, length=14)
    g = lagrange_invert(f)
    ident = compose(f, g)
    assert abs(ident.coeffs[0] - 1) < 1e-10
    for c in ident.coeffs[1:]:
        assert abs(c) < 1e-10


def test_compose_rejects_nonvanishing_inner():
    with pytest.raises(NonvanishingInner):
        compose(series(0, [1.0, 1.0]), series(0, [1.0, 1.0]))


# ---------------------------------------------------------------- derivative


def test_differentiate_power_rule():
    f = series(-1, [1.0], den=2)  # q^(1/2)
    d = differentiate_param(f)
    assert d.den == 2 and d.exponent(0) == 0.5
    assert abs(d.coeffs[0] - 0.5) < 1e-15


def test_differentiate_constant_is_zero():
    assert differentiate_param(series(0, [4.2])).is_zero


def test_differentiate_termwise_pattern():
    # series in integer powers of 1/q: slot n -> (coefficient * -n) at n+1
    f = series(0, [2.0, 3.0, 4.0, 5.0])
    d = differentiate_param(f)
    assert d.base_exp == 2
    assert np.allclose([complex(c) for c in d.coeffs], [-3.0, -8.0, -15.0])


# ---------------------------------------------------------------- properties


def test_reciprocal_round_trip_many():
    rng = np.random.default_rng(47)
    for _ in range(200):
        length = int(rng.integers(2, 31))
        f = tame_series(rng, base=int(rng.integers(-3, 4)), length=length)
        unit = mul(f, reciprocal(f))
        assert abs(unit.coeffs[0] - 1) < 1e-12
        assert all(abs(c) < 1e-12 for c in unit.coeffs[1:])


def test_invert_round_trip_many():
    rng = np.random.default_rng(53)
    for _ in range(100):
        k = int(rng.integers(1, 3))
        f = tame_series(rng, base=k, length=int(rng.integers(3, 15)))
        g = lagrange_invert(f)
        if k == 1:
            ident = compose(f, g)
            assert abs(ident.coeffs[0] - 1) < 1e-10
            assert all(abs(c) < 1e-10 for c in ident.coeffs[1:])
        else:
            sq = mul(g, g)  # g(w)^2 has integer exponents again
            # f(g(w)) = f_2 g^2 + f_3 g^3 + ... ; check numerically
            for w in (1e-4, 1e-4 + 3e-5j):
                res = eval_series_naive(f, eval_series_naive(g, w)) - w
                assert abs(res) < 1e-10
            assert sq.den in (1, 2)


def test_half_grid_promotion_in_mixed_ops():
    a = series(0, [1.0, 2.0, 3.0])          # integer grid
    b = series(0, [1.0, 1.0, 1.0, 1.0], 2)  # half grid
    s = add(a, b)
    assert s.den == 2
    assert abs(coeff_at(s, 0) - 2.0) < 1e-15
    assert abs(coeff_at(s, 0.5) - 1.0) < 1e-15
    assert abs(coeff_at(s, 1) - 3.0) < 1e-15
