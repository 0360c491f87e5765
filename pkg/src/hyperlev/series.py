"""Arithmetic on truncated Laurent/Puiseux series.

A :class:`TruncatedSeries` stores finitely many coefficients of

    f(x) = sum_i  coeffs[i] * x**((base_exp + i) / den)

where ``den`` is 1 (integer exponent grid) or 2 (half-integer grid).  The
length of ``coeffs`` is the truncation order: slots beyond it are unknown,
not zero, and every binary operation truncates its result to the order it
can actually guarantee.  Coefficients may be Python/NumPy scalars or mpmath
numbers; all routines are written against plain arithmetic so the same code
runs in double precision or extended precision.

Leading zeros are stripped on construction, so ``coeffs[0] != 0`` except for
the canonical zero series (empty coefficient tuple).
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction

from .errors import (
    NonvanishingInner,
    PrincipalPartPresent,
    UnsupportedOrder,
    ZeroLeadingCoefficient,
)

# Reciprocal refuses leading coefficients below this magnitude.
LEADING_COEFF_FLOOR = 1e-300


def _is_native(x):
    return isinstance(x, (int, float, complex))


def _sc_exp(x):
    if _is_native(x):
        return cmath.exp(x) if isinstance(x, complex) else math.exp(x)
    import mpmath

    return mpmath.exp(x)


def _sc_log(x):
    if _is_native(x):
        if isinstance(x, complex) or x < 0:
            return cmath.log(x)
        return math.log(x)
    import mpmath

    return mpmath.log(x)


def _sc_root(x, k):
    """Principal k-th root (k in {1, 2})."""
    if k == 1:
        return x
    if _is_native(x):
        if isinstance(x, complex) or x < 0:
            return cmath.sqrt(x)
        return math.sqrt(x)
    import mpmath

    return mpmath.sqrt(x)


class TruncatedSeries:
    __slots__ = ("base_exp", "den", "coeffs")

    def __init__(self, base_exp, coeffs, den=1, normalize=True):
        if den not in (1, 2):
            raise UnsupportedOrder(f"exponent step must be 1 or 1/2, got 1/{den}")
        coeffs = tuple(coeffs)
        if normalize:
            i = 0
            while i < len(coeffs) and coeffs[i] == 0:
                i += 1
            base_exp += i
            coeffs = coeffs[i:]
        if not coeffs:
            base_exp, den = 0, 1
        object.__setattr__(self, "base_exp", base_exp)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("TruncatedSeries is immutable")

    # -- structure ----------------------------------------------------------

    @property
    def step(self):
        return Fraction(1, self.den)

    @property
    def length(self):
        return len(self.coeffs)

    @property
    def is_zero(self):
        return not self.coeffs

    @property
    def high_slot(self):
        """Highest known exponent slot (grid units)."""
        return self.base_exp + len(self.coeffs) - 1

    def exponent(self, i):
        return Fraction(self.base_exp + i, self.den)

    def exponents(self):
        return [self.exponent(i) for i in range(len(self.coeffs))]

    @classmethod
    def zero(cls):
        return cls(0, (), 1)

    @classmethod
    def constant(cls, value, length=1, den=1):
        return cls(0, (value,) + (0,) * (length - 1), den, normalize=value == 0)

    def map(self, fn):
        return TruncatedSeries(self.base_exp, [fn(c) for c in self.coeffs], self.den,
                               normalize=False)

    def astype_complex(self):
        return self.map(complex)

    def promoted(self, den):
        """Embed on a finer grid (integer -> half-integer, odd slots zero)."""
        if den == self.den:
            return self
        if self.den != 1 or den != 2:
            raise UnsupportedOrder("only promotion from step 1 to step 1/2 is supported")
        if self.is_zero:
            return self
        out = []
        for i, c in enumerate(self.coeffs):
            out.append(c)
            if i + 1 < len(self.coeffs):
                out.append(0)
        return TruncatedSeries(2 * self.base_exp, out, 2, normalize=False)

    # -- convenience arithmetic ---------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, other.scaled(-1))

    def __neg__(self):
        return self.scaled(-1)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return mul(self, other)
        return self.scaled(other)

    __rmul__ = __mul__

    def scaled(self, factor):
        if factor == 0:
            return TruncatedSeries.zero()
        return self.map(lambda c: c * factor)

    def shifted(self, slots):
        """Multiply by x**(slots/den)."""
        if self.is_zero:
            return self
        return TruncatedSeries(self.base_exp + slots, self.coeffs, self.den,
                               normalize=False)

    def plus_scalar(self, value):
        """Add a constant; the exponent-0 slot must be inside the known range."""
        if self.is_zero:
            return TruncatedSeries.constant(value)
        if self.high_slot < 0:
            raise ValueError("constant slot lies beyond the known truncation order")
        if self.base_exp > 0:
            # slots below base_exp are exact zeros, so extending is exact
            coeffs = (value,) + (0,) * (self.base_exp - 1) + self.coeffs
            return TruncatedSeries(0, coeffs, self.den, normalize=value == 0)
        coeffs = list(self.coeffs)
        coeffs[-self.base_exp] = coeffs[-self.base_exp] + value
        return TruncatedSeries(self.base_exp, coeffs, self.den)

    def truncated(self, length):
        """Keep at most ``length`` coefficients."""
        if length >= len(self.coeffs):
            return self
        return TruncatedSeries(self.base_exp, self.coeffs[:length], self.den)

    def truncated_to_slot(self, hi_slot):
        """Drop coefficients with exponent slot above ``hi_slot``."""
        return self.truncated(hi_slot - self.base_exp + 1)

    # -- evaluation ----------------------------------------------------------

    def __call__(self, x):
        return evaluate(self, x)

    def __repr__(self):
        if self.is_zero:
            return "TruncatedSeries(0)"
        head = ", ".join(f"x^{self.exponent(i)}*{self.coeffs[i]!r}"
                         for i in range(min(3, len(self.coeffs))))
        tail = f", ... ({len(self.coeffs)} terms)" if len(self.coeffs) > 3 else ""
        return f"TruncatedSeries({head}{tail})"


def _common_grid(a, b):
    den = max(a.den, b.den)
    return a.promoted(den), b.promoted(den), den


def add(a, b):
    """Coefficientwise sum, truncated to the shorter reachable order."""
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    a, b, den = _common_grid(a, b)
    lo = min(a.base_exp, b.base_exp)
    hi = min(a.high_slot, b.high_slot)
    if hi < lo:
        raise ValueError("operands share no known exponent slots")
    out = [0] * (hi - lo + 1)
    for src in (a, b):
        for i, c in enumerate(src.coeffs):
            slot = src.base_exp + i
            if slot > hi:
                break
            out[slot - lo] = out[slot - lo] + c
    return TruncatedSeries(lo, out, den)


def mul(a, b):
    """Cauchy product, truncated to the shorter operand's order."""
    if a.is_zero or b.is_zero:
        return TruncatedSeries.zero()
    a, b, den = _common_grid(a, b)
    n = min(len(a.coeffs), len(b.coeffs))
    ac, bc = a.coeffs, b.coeffs
    out = []
    for m in range(n):
        s = ac[0] * bc[m]
        for i in range(1, m + 1):
            s = s + ac[i] * bc[m - i]
        out.append(s)
    return TruncatedSeries(a.base_exp + b.base_exp, out, den)


def product(factors):
    it = iter(factors)
    acc = next(it)
    for f in it:
        acc = mul(acc, f)
    return acc


def reciprocal(f, floor=LEADING_COEFF_FLOOR):
    """Series of 1/f, same truncation order, base exponent negated.

    Solves the triangular convolution system; mathematically identical to the
    classical determinant formula for the reciprocal coefficients, but stable.
    """
    if f.is_zero or abs(f.coeffs[0]) < floor:
        raise ZeroLeadingCoefficient("reciprocal of a series with vanishing leading term")
    f0 = f.coeffs[0]
    inv0 = 1 / f0
    out = [inv0]
    for n in range(1, len(f.coeffs)):
        s = f.coeffs[1] * out[n - 1]
        for j in range(2, n + 1):
            s = s + f.coeffs[j] * out[n - j]
        out.append(-s * inv0)
    return TruncatedSeries(-f.base_exp, out, f.den, normalize=False)


def bell_partial(n, m, x):
    """Exponential partial Bell polynomial B_{n,m}(x_1, ..., x_{n-m+1}).

    Uses the convolution recurrence
    B_{n,m} = sum_j C(n-1, j-1) x_j B_{n-j, m-1}.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got n={n}, m={m}")
    if len(x) < n - m + 1:
        raise IndexError(f"need at least {n - m + 1} arguments, got {len(x)}")
    table = {(0, 0): 1}
    for k in range(1, n + 1):
        # only blocks with k - j <= n - m feed into B_{n,m}
        for j in range(max(1, k - (n - m)), min(k, m) + 1):
            s = 0
            for i in range(1, k - j + 2):
                b = table.get((k - i, j - 1))
                if b is not None and b != 0:
                    s = s + math.comb(k - 1, i - 1) * x[i - 1] * b
            table[(k, j)] = s
    return table[(n, m)]


def _power_one_plus(u, alpha, length):
    """Coefficients of (1 + u(x))**alpha where u has no constant term.

    ``u`` is the list of coefficients of slots 1.. of the local variable.
    Returns slots 0..length-1.  Standard recurrence from (1+u) P' = alpha u' P.
    """
    out = [1]
    for n in range(1, length):
        s = 0
        for j in range(1, n + 1):
            uj = u[j - 1] if j - 1 < len(u) else 0
            if uj != 0:
                s = s + (alpha * j - (n - j)) * uj * out[n - j]
        out.append(s / n)
    return out


def _exp_slots(v, length):
    """exp of sum_{j>=1} v[j-1] x^j, slots 0..length-1."""
    out = [1]
    for n in range(1, length):
        s = 0
        for j in range(1, n + 1):
            vj = v[j - 1] if j - 1 < len(v) else 0
            if vj != 0:
                s = s + j * vj * out[n - j]
        out.append(s / n)
    return out


def exp_base_power(c, f):
    """Series of c**f(x) for c > 0 and f without principal part.

    The constant slot gives c**f_0; higher slots follow from the stable
    exponential recurrence applied to log(c) * (f - f_0).  Coefficients agree
    with the Bell-polynomial expansion of the generalized chain rule.
    """
    if c <= 0:
        raise ValueError("base must be a positive real number")
    if f.is_zero:
        return TruncatedSeries.constant(1)
    if f.base_exp < 0:
        raise PrincipalPartPresent("exponent series has negative powers")
    lc = _sc_log(c)
    length = f.high_slot + 1
    # dense tail slots 1..length-1 of log(c) * f
    v = [0] * (length - 1)
    for i, coeff in enumerate(f.coeffs):
        slot = f.base_exp + i
        if slot >= 1:
            v[slot - 1] = lc * coeff
    out = _exp_slots(v, length)
    if f.base_exp == 0:
        f0 = f.coeffs[0]
        scale = _sc_exp(lc * f0)
        out = [scale * t for t in out]
    return TruncatedSeries(0, out, f.den, normalize=False)


def _revert(fc):
    """Compositional inverse of sum_{m>=1} fc[m-1] z^m (fc[0] != 0).

    Returns g coefficients (slots 1..len(fc)) with f(g(w)) = w + O(w^{L+1}).
    Order-by-order solve; the partial power table P[m][n] = [w^n] g^m is
    filled as g grows, which keeps the scheme triangular and stable.
    """
    L = len(fc)
    inv_f1 = 1 / fc[0]
    g = [0] * (L + 1)
    g[1] = inv_f1
    P = [[0] * (L + 1) for _ in range(L + 1)]
    P[0][0] = 1
    P[1][1] = g[1]
    for n in range(2, L + 1):
        acc = 0
        for m in range(2, n + 1):
            s = 0
            for j in range(1, n - m + 2):
                pm = P[m - 1][n - j]
                if pm != 0 and g[j] != 0:
                    s = s + g[j] * pm
            P[m][n] = s
            if fc[m - 1] != 0:
                acc = acc + fc[m - 1] * s
        g[n] = -acc * inv_f1
        P[1][n] = g[n]
    return g[1:]


def lagrange_invert(f, branch="principal"):
    """Compositional inverse of a series with leading exponent k in {1, 2}.

    For k = 2 the result lives on the half-integer grid of the new variable
    and ``branch`` picks the square-root branch of the leading coefficient:
    the inverse starts with w**(1/k) / (k-th root of f_k).  The composition
    f(g(w)) reproduces w up to the shared truncation order.
    """
    if branch not in ("principal", "negated"):
        raise ValueError(f"unknown branch {branch!r}")
    if f.is_zero:
        raise ZeroLeadingCoefficient("cannot invert the zero series")
    if f.den != 1:
        raise UnsupportedOrder("series to invert must lie on an integer exponent grid")
    k = f.base_exp
    if k not in (1, 2):
        raise UnsupportedOrder(f"leading exponent must be 1 or 2, got {k}")
    f0 = f.coeffs[0]
    if abs(f0) < LEADING_COEFF_FLOOR:
        raise ZeroLeadingCoefficient("vanishing leading coefficient")
    L = len(f.coeffs)
    alpha = (f0 * 0 + 1) / k  # 1/k in the operand's arithmetic
    root = _sc_root(f0, k)
    if branch == "negated" and k == 2:
        root = -root
    # F(z) = root * z * (1 + u(z))**(1/k) satisfies F**k = f exactly (as series)
    u = [fj / f0 for fj in f.coeffs[1:]]
    p = _power_one_plus(u, alpha, L)
    fc = [root * pj for pj in p]  # slots 1..L
    g = _revert(fc)
    return TruncatedSeries(1, g, den=k)


def compose(outer, inner):
    """outer(inner(x)) by Horner evaluation in the series ring.

    ``outer`` must be a Taylor series on the integer grid; ``inner`` must
    vanish at the origin.  The result lives on the inner series' grid and is
    truncated to the order both operands can support.
    """
    if outer.is_zero:
        return TruncatedSeries.zero()
    if outer.den != 1 or outer.base_exp < 0:
        raise UnsupportedOrder("outer series must have nonnegative integer exponents")
    if inner.is_zero:
        if outer.base_exp == 0:
            return TruncatedSeries.constant(outer.coeffs[0])
        return TruncatedSeries.zero()
    if inner.base_exp < 1:
        raise NonvanishingInner("inner series must vanish at the origin")
    e_outer = outer.high_slot
    hi = min(inner.high_slot, (e_outer + 1) * inner.base_exp - 1)
    n = hi + 1
    inner_dense = [0] * n
    for i, c in enumerate(inner.coeffs):
        slot = inner.base_exp + i
        if slot < n:
            inner_dense[slot] = c
    outer_dense = [0] * (e_outer + 1)
    for i, c in enumerate(outer.coeffs):
        outer_dense[outer.base_exp + i] = c
    res = [0] * n
    res[0] = outer_dense[e_outer]
    for m in range(e_outer - 1, -1, -1):
        new = [0] * n
        for i in range(n):
            ri = res[i]
            if ri == 0:
                continue
            for j in range(1, n - i):
                cj = inner_dense[j]
                if cj != 0:
                    new[i + j] = new[i + j] + ri * cj
        new[0] = new[0] + outer_dense[m]
        res = new
    return TruncatedSeries(0, res, inner.den)


def differentiate_param(f):
    """Termwise derivative with respect to q of a series in powers of 1/q.

    A slot with exponent e (of 1/q, i.e. the term is q**(-e)) maps to
    coefficient -e at exponent e + 1.
    """
    if f.is_zero:
        return f
    out = []
    for i, c in enumerate(f.coeffs):
        e = Fraction(f.base_exp + i, f.den)
        if e == 0:
            out.append(0)
        elif f.den == 1:
            out.append(-int(e) * c)
        else:
            out.append(c * (-(f.base_exp + i)) / 2)
    return TruncatedSeries(f.base_exp + f.den, out, f.den)


def evaluate(f, x):
    """Horner evaluation in x**(1/den) using principal fractional powers.

    Works for scalars (complex/float/mpmath) and NumPy arrays.
    """
    if f.is_zero:
        return 0.0 * x if hasattr(x, "shape") else 0.0
    if f.den == 1:
        t = x
    else:
        t = x ** 0.5 if _is_native(x) or hasattr(x, "shape") else _sc_root(x, 2)
    acc = f.coeffs[-1]
    for c in reversed(f.coeffs[:-1]):
        acc = acc * t + c
    if f.base_exp != 0:
        acc = acc * t ** f.base_exp
    return acc
