"""Solutions of psi(z) = q: convergent expansions and numerical solvers.

For |q| large every root of psi(z) = q admits a convergent expansion in
powers of 1/q (pure-jump regimes) or 1/sqrt(q) (with a Brownian component).
Each expansion is built by the same three-step pipeline used in the
convergence proofs: take the reciprocal of the local Laurent data of psi,
invert that series compositionally, and (for the outer roots) reciprocate
once more.  Coefficient generation runs in extended precision (mpmath) and
is cached; evaluation uses ordinary complex doubles.

The numerical side provides bracketed real root finding on the interlacing
intervals and midpoint-predictor/Newton-corrector tracking of all roots
along vertical contours q = c + iu, which doubles as the validation oracle
for the expansions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath as mp
import numpy as np
from scipy.optimize import brentq

from .errors import (
    BelowValidityThreshold,
    BracketFailure,
    IndexOutOfRange,
    PoleEvaluation,
    RegimeMismatch,
    RhoOneTooSmall,
    TrackingDivergence,
)
from .model import HyperExpParams, laurent_coeffs, psi, psi_prime, root_counts
from .series import (
    TruncatedSeries,
    differentiate_param,
    exp_base_power,
    lagrange_invert,
    mul,
    reciprocal,
)

FAR = "far"

#: decimal digits used while generating expansion coefficients
COEFF_DPS = 50

#: residual threshold defining the empirical validity radius
QMIN_RESIDUAL = 1e-8

#: contour abscissa used in the q_min scan (matches the worked contours)
QMIN_CONTOUR_ABSCISSA = 0.5

_BRACKET_SHRINK = 1e-9
_NEWTON_ABS_TOL = 1e-12


def _regime(params):
    if params.sigma > 0:
        return "gaussian"
    if params.drift > 0:
        return "drift_pos"
    if params.drift < 0:
        return "drift_neg"
    return "driftless"


# --------------------------------------------------------------------------
# Expansion objects
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RootExpansion:
    """Expansion of one root location z(q) in powers of 1/q.

    ``series`` holds complex coefficients of q^{-slot/den}.  For roots on the
    negative axis the stored series is the (negative) location itself; the
    conventional positive quantity is its negation, available via
    ``zeta_series``.  ``q_min`` is the calibrated modulus below which the
    truncated series stops meeting the residual contract.
    """

    side: str                      # "pos" | "neg"
    index: object                  # 1..N or FAR
    regime: str
    branch: str                    # square-root branch picking the far root
    series: TruncatedSeries
    q_min: float
    rho_one: float
    mp_coeffs: tuple = field(repr=False, compare=False, default=())

    @property
    def step(self):
        return self.series.step

    @property
    def coeffs(self):
        return self.series.coeffs

    @property
    def is_far(self):
        return self.index == FAR

    @property
    def zeta_series(self):
        """Series of the positive root magnitude (zeta or zeta-hat)."""
        return self.series if self.side == "pos" else self.series.scaled(-1.0)

    @property
    def lead_coeff(self):
        return self.series.coeffs[0]

    def location(self, q):
        return eval_expansion(self, q)

    def zeta(self, q):
        v = eval_expansion(self, q)
        return v if self.side == "pos" else -v

    def _mp_series(self):
        return TruncatedSeries(self.series.base_exp, self.mp_coeffs,
                               self.series.den, normalize=False)


@dataclass(frozen=True)
class DerivedRootSeries:
    """Series derived from a root: 1/zeta, 1/(zeta -+ 1), k^{-+zeta}, zeta'.

    For the ``power`` kind on an outer root the exponentially large factor is
    split off: value(q) = exp(-pref_coef * q^pref_power) * series(q).
    """

    kind: str                      # inv | inv_shift | power | deriv
    side: str
    series: TruncatedSeries
    prefactor_tag: str             # none | exp_sqrt | exp_linear
    pref_coef: float = 0.0         # log(k) * leading location coefficient
    q_min: float = 0.0
    mp_coeffs: tuple = field(repr=False, compare=False, default=())

    @property
    def coeffs(self):
        return self.series.coeffs

    def prefactor(self, q):
        if self.prefactor_tag == "none":
            return 1.0
        power = 0.5 if self.prefactor_tag == "exp_sqrt" else 1.0
        return np.exp(-self.pref_coef * np.asarray(q, dtype=complex) ** power)

    def _mp_series(self):
        return TruncatedSeries(self.series.base_exp, self.mp_coeffs,
                               self.series.den, normalize=False)


def eval_expansion(x, q):
    """Horner evaluation of a root or derived series at complex q.

    Emits a BelowValidityThreshold warning (value still returned) when |q|
    falls under the calibrated threshold.
    """
    qq = np.asarray(q, dtype=complex)
    if x.q_min and np.min(np.abs(qq)) < x.q_min:
        warnings.warn(
            f"evaluation at |q| < {x.q_min:.3g} is below the validity threshold",
            BelowValidityThreshold,
            stacklevel=2,
        )
    f = x.series
    if f.den == 2:
        t = qq ** -0.5
    else:
        t = 1.0 / qq
    coeffs = f.coeffs
    acc = np.full_like(qq, complex(coeffs[-1]))
    for c in reversed(coeffs[:-1]):
        acc = acc * t + complex(c)
    val = acc * t ** f.base_exp if f.base_exp else acc
    if isinstance(x, DerivedRootSeries) and x.prefactor_tag != "none":
        val = val * x.prefactor(qq)
    return complex(val) if np.ndim(q) == 0 else val


# --------------------------------------------------------------------------
# Extended-precision pipelines
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _far_location_mp(params, order, dps):
    """Location series of the outer root: reciprocal -> inversion -> reciprocal."""
    with mp.workdps(dps):
        if params.sigma > 0:
            cache = laurent_coeffs(params, max(order - 1, 2), num=mp.mpf)
            h = cache.h_series()                  # base -2
            d = reciprocal(h)                     # base +2
            c_pos = lagrange_invert(d, "principal")
            c_neg = lagrange_invert(d, "negated")
            loc_pos = reciprocal(c_pos).truncated_to_slot(order)
            loc_neg = reciprocal(c_neg).truncated_to_slot(order)
            return loc_pos, loc_neg
        cache = laurent_coeffs(params, max(order, 2), num=mp.mpf)
        h = cache.h_series()                      # base -1 (drift != 0)
        d = reciprocal(h)                         # base +1
        c = lagrange_invert(d, "principal")
        loc = reciprocal(c).truncated_to_slot(order)
        return loc, loc


@lru_cache(maxsize=None)
def _near_location_mp(params, side, index, order, dps):
    """Location series of an inner root trapped next to its pole."""
    with mp.workdps(dps):
        cache = laurent_coeffs(params, max(order - 2, 2), num=mp.mpf)
        if side == "pos":
            g = cache.g_series(index)
            pole = mp.mpf(params.pos_jumps[index - 1][1])
        else:
            g = cache.g_hat_series(index)
            pole = -mp.mpf(params.neg_jumps[index - 1][1])
        g = g.truncated(order + 1)               # slots -1 .. order - 1
        c = reciprocal(g)                        # base +1
        b = lagrange_invert(c, "principal")      # z(w), base 1
        coeffs = (pole,) + b.coeffs[: order]
        return TruncatedSeries(0, coeffs, 1, normalize=False)


def _finalize(params, side, index, regime, branch, loc_mp, calibrate):
    series = loc_mp.astype_complex()
    q_min = 0.0
    exp = RootExpansion(side, index, regime, branch, series, q_min,
                        params.rho_one, tuple(loc_mp.coeffs))
    if calibrate:
        q_min = _calibrate_q_min(params, exp)
        exp = RootExpansion(side, index, regime, branch, series, q_min,
                            params.rho_one, tuple(loc_mp.coeffs))
    return exp


@lru_cache(maxsize=None)
def expand_far_root(params, side, order, dps=COEFF_DPS, calibrate=True):
    """Expansion of the root beyond the last pole on the given side.

    Gaussian regime: a series in 1/sqrt(q) with leading sqrt(2 q/sigma^2)
    term; the two sides differ by the square-root branch.  Pure-jump regimes:
    a series in 1/q led by q/drift, existing only on the drift's side.
    """
    if side not in ("pos", "neg"):
        raise ValueError("side must be 'pos' or 'neg'")
    regime = _regime(params)
    m, mh = root_counts(params)
    has_far = (m > params.n_pos) if side == "pos" else (mh > params.n_neg)
    if not has_far:
        raise RegimeMismatch(f"no outer root on the {side} side in regime {regime}")
    loc_pos, loc_neg = _far_location_mp(params, order, dps)
    loc = loc_pos if side == "pos" else loc_neg
    branch = "principal"
    if regime == "gaussian" and side == "neg":
        branch = "negated"
    return _finalize(params, side, FAR, regime, branch, loc, calibrate)


@lru_cache(maxsize=None)
def expand_near_root(params, side, index, order, dps=COEFF_DPS, calibrate=True):
    """Expansion of the root trapped between two consecutive poles."""
    n = params.n_pos if side == "pos" else params.n_neg
    if not 1 <= index <= n:
        raise IndexOutOfRange(f"root index {index} outside 1..{n}")
    loc = _near_location_mp(params, side, index, order, dps)
    return _finalize(params, side, index, _regime(params), "principal", loc,
                     calibrate=calibrate)


def derive_series(root, kind, k=1.0, dps=COEFF_DPS):
    """Series of 1/zeta, 1/(zeta -+ 1), k^{-+zeta}, or d(zeta)/dq.

    Signs follow the convention that the derived quantity refers to the
    positive root magnitude: on the negative side the object built is
    1/zeta-hat, 1/(zeta-hat + 1), k^{zeta-hat}, or zeta-hat'.
    """
    if kind not in ("inv", "inv_shift", "power", "deriv"):
        raise ValueError(f"unknown derived-series kind {kind!r}")
    if kind == "inv_shift" and root.rho_one <= 1.0:
        raise RhoOneTooSmall("1/(zeta - 1) series needs the smallest positive rate > 1")
    if kind == "power" and not k > 0:
        raise ValueError("moneyness must be positive")
    sign = 1.0 if root.side == "pos" else -1.0
    with mp.workdps(dps):
        loc = root._mp_series()
        tag, pref = "none", 0.0
        if kind == "inv":
            out = reciprocal(loc).scaled(sign)
        elif kind == "inv_shift":
            # pos: 1/(zeta-1) = 1/(loc-1); neg: 1/(zeta_hat+1) = -1/(loc-1)
            out = reciprocal(loc.plus_scalar(-1)).scaled(sign)
        elif kind == "deriv":
            out = differentiate_param(loc).scaled(sign)
        else:  # power: k^{-zeta} (pos) or k^{zeta_hat} (neg) == k^{-loc}
            kk = mp.mpf(k)
            if root.is_far:
                lead = loc.coeffs[0]
                tail = TruncatedSeries(loc.base_exp + 1, loc.coeffs[1:], loc.den,
                                       normalize=False)
                out = exp_base_power(kk, tail.scaled(-1))
                tag = "exp_sqrt" if loc.den == 2 else "exp_linear"
                pref = float(mp.log(kk) * lead)
            else:
                out = exp_base_power(kk, loc.scaled(-1))
        mp_coeffs = tuple(out.coeffs)
        series = out.astype_complex()
    return DerivedRootSeries(kind, root.side, series, tag, pref, root.q_min,
                             mp_coeffs)


# --------------------------------------------------------------------------
# Validity calibration
# --------------------------------------------------------------------------


def _series_residual(params, exp, q):
    try:
        z = eval_expansion(exp, q)
        return abs(psi(params, z) - q)
    except (PoleEvaluation, OverflowError):
        return np.inf


def _calibrate_q_min(params, exp, start=1e4, shrink=0.92, floor=0.05):
    """Scan |q| downward along the real ray and the vertical contour.

    The first modulus where the truncated-series residual exceeds the
    threshold sets q_min at 1.25x that modulus, turning the existence-only
    convergence statement into a checkable contract.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BelowValidityThreshold)
        c = QMIN_CONTOUR_ABSCISSA
        modulus = start
        last_good = start
        while modulus > floor:
            probes = [modulus]
            if modulus > c:
                probes.append(c + 1j * np.sqrt(modulus**2 - c**2))
            bad = any(
                _series_residual(params, exp, q) > QMIN_RESIDUAL for q in probes
            )
            if bad:
                return float(min(1.25 * modulus, last_good))
            last_good = modulus
            modulus *= shrink
    return float(floor)


# --------------------------------------------------------------------------
# Numerical root finding on the real axis
# --------------------------------------------------------------------------


def _psi_real(params, x, q):
    return float(psi(params, complex(x)).real) - q


def _solve_bracket(params, q, lo, hi):
    width = hi - lo
    a = lo + _BRACKET_SHRINK * width
    b = hi - _BRACKET_SHRINK * width
    fa = _psi_real(params, a, q)
    fb = _psi_real(params, b, q)
    grow = 0.5
    while fa * fb > 0 and grow > 1e-12:
        # push the endpoints closer to the poles until the signs split
        grow *= 1e-3
        a = lo + grow * _BRACKET_SHRINK * width
        b = hi - grow * _BRACKET_SHRINK * width
        fa = _psi_real(params, a, q)
        fb = _psi_real(params, b, q)
    if fa * fb > 0:
        raise BracketFailure(f"no sign change in ({lo}, {hi}) for q={q}")
    root = brentq(lambda x: _psi_real(params, x, q), a, b, xtol=1e-14, rtol=1e-15)
    # Newton polish
    for _ in range(3):
        f = _psi_real(params, root, q)
        if abs(f) <= _NEWTON_ABS_TOL * max(1.0, abs(q)):
            break
        d = psi_prime(params, complex(root)).real
        if d == 0:
            break
        root -= f / d
    return root


def _outer_root(params, q, side):
    """Root beyond the last pole; bracket grown geometrically outward."""
    if side == "pos":
        lo = params.pos_rates[-1] if params.n_pos else 0.0
        start = lo + max(1.0, lo)
        f_at = lambda x: _psi_real(params, x, q)
        hi = start
        while f_at(hi) < 0:
            hi = lo + 2 * (hi - lo)
            if hi > 1e14:
                raise BracketFailure("outer positive root not bracketed")
        return _solve_bracket(params, q, lo, hi)
    hi = -(params.neg_rates[-1] if params.n_neg else 0.0)
    start = hi - max(1.0, -hi)
    lo = start
    f_at = lambda x: _psi_real(params, x, q)
    while f_at(lo) < 0:
        lo = hi + 2 * (lo - hi)
        if lo < -1e14:
            raise BracketFailure("outer negative root not bracketed")
    return _solve_bracket(params, q, lo, hi)


def numeric_roots_real(params, q):
    """All real solutions of psi(z) = q for q > 0, sorted ascending.

    One root per interlacing interval between consecutive poles, plus outer
    roots according to the regime counts.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    m, mh = root_counts(params)
    roots = []
    # positive side: intervals (rho_{l-1}, rho_l)
    edges = [0.0, *params.pos_rates.tolist()]
    for lo, hi in zip(edges[:-1], edges[1:]):
        roots.append(_solve_bracket(params, q, lo, hi))
    if m > params.n_pos:
        roots.append(_outer_root(params, q, "pos"))
    edges = [0.0, *(-params.neg_rates).tolist()]
    for hi, lo in zip(edges[:-1], edges[1:]):
        roots.append(_solve_bracket(params, q, lo, hi))
    if mh > params.n_neg:
        roots.append(_outer_root(params, q, "neg"))
    return np.sort(np.array(roots))


def numeric_roots_sides(params, q):
    """(zeta_1..zeta_M, zeta_hat_1..zeta_hat_Mhat) as positive magnitudes."""
    roots = numeric_roots_real(params, q)
    pos = np.sort(roots[roots > 0])
    neg = np.sort(-roots[roots < 0])
    return pos, neg


# --------------------------------------------------------------------------
# Contour tracking
# --------------------------------------------------------------------------

try:  # pragma: no cover - exercised indirectly
    import numba

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover
    _HAVE_NUMBA = False


def _make_kernel():
    if not _HAVE_NUMBA:
        return None

    @numba.njit(cache=True, fastmath=False)
    def kernel(half_sig2, a, pw, pr, nw, nr, c, u, z0, max_newton):
        n_u = u.shape[0]
        n_r = z0.shape[0]
        out = np.empty((n_u, n_r), dtype=np.complex128)
        ok = True

        def _psi(z):
            val = half_sig2 * z * z + a * z
            for i in range(pw.shape[0]):
                val += z * pw[i] / (pr[i] - z)
            for i in range(nw.shape[0]):
                val -= z * nw[i] / (nr[i] + z)
            return val

        def _dpsi(z):
            val = 2.0 * half_sig2 * z + a
            for i in range(pw.shape[0]):
                val += pw[i] * pr[i] / ((pr[i] - z) * (pr[i] - z))
            for i in range(nw.shape[0]):
                val -= nw[i] * nr[i] / ((nr[i] + z) * (nr[i] + z))
            return val

        for m in range(n_r):
            z = z0[m]
            q0 = c + 1j * u[0]
            for _ in range(max_newton):
                f = _psi(z) - q0
                if abs(f) <= 1e-10 + 1e-14 * abs(q0):
                    break
                z = z - f / _dpsi(z)
            out[0, m] = z
            for j in range(1, n_u):
                du = u[j] - u[j - 1]
                q = c + 1j * u[j]
                zmid = z + 0.5 * du * 1j / _dpsi(z)
                z = z + du * 1j / _dpsi(zmid)
                converged = False
                for it in range(max_newton):
                    f = _psi(z) - q
                    if abs(f) <= 1e-10 + 1e-14 * abs(q) and it >= 2:
                        converged = True
                        break
                    z = z - f / _dpsi(z)
                if not converged:
                    f = _psi(z) - q
                    if abs(f) > 1e-10 + 1e-14 * abs(q):
                        ok = False
                out[j, m] = z
        return out, ok

    return kernel


_TRACK_KERNEL = _make_kernel()


def _track_python(params, c, u, z0, max_newton):
    n_u, n_r = len(u), len(z0)
    out = np.empty((n_u, n_r), dtype=complex)
    z = np.array(z0, dtype=complex)
    for _ in range(max_newton):
        f = _psi_vec(params, z) - (c + 1j * u[0])
        if np.all(np.abs(f) <= 1e-10 + 1e-14 * abs(c + 1j * u[0])):
            break
        z = z - f / _dpsi_vec(params, z)
    out[0] = z
    for j in range(1, n_u):
        du = u[j] - u[j - 1]
        q = c + 1j * u[j]
        zmid = z + 0.5 * du * 1j / _dpsi_vec(params, z)
        z = z + du * 1j / _dpsi_vec(params, zmid)
        for it in range(max_newton):
            f = _psi_vec(params, z) - q
            if np.all(np.abs(f) <= 1e-10 + 1e-14 * abs(q)) and it >= 2:
                break
            z = z - f / _dpsi_vec(params, z)
        f = _psi_vec(params, z) - q
        if np.any(np.abs(f) > 1e-10 + 1e-14 * abs(q)):
            raise TrackingDivergence(f"Newton failed at u={u[j]}")
        out[j] = z
    return out


def _psi_vec(params, z):
    out = 0.5 * params.sigma**2 * z * z + params.drift * z
    if params.n_pos:
        out = out + z * np.sum(params.pos_weights / (params.pos_rates - z[:, None]), axis=1)
    if params.n_neg:
        out = out - z * np.sum(params.neg_weights / (params.neg_rates + z[:, None]), axis=1)
    return out


def _dpsi_vec(params, z):
    out = params.sigma**2 * z + params.drift
    if params.n_pos:
        out = out + np.sum(
            params.pos_weights * params.pos_rates / (params.pos_rates - z[:, None]) ** 2,
            axis=1,
        )
    if params.n_neg:
        out = out - np.sum(
            params.neg_weights * params.neg_rates / (params.neg_rates + z[:, None]) ** 2,
            axis=1,
        )
    return out


def track_roots_contour(params, c, u_grid, seeds=None, max_newton=10):
    """Track every root of psi(z) = c + iu along an increasing u grid.

    Midpoint-method predictor on dz/du = i/psi'(z) followed by Newton
    correction at each grid point, keeping |psi(z) - q| within 1e-10 (plus a
    relative guard for very large |q|).  The grid must start at u = 0, where
    the roots are real and seeded by the bracketed solver.  Returns an array
    of shape (len(u_grid), M + M-hat) ordered ascending at the seed.
    """
    u = np.asarray(u_grid, dtype=float)
    if len(u) == 0 or u[0] != 0.0:
        raise ValueError("u grid must start at 0 (real seed point)")
    if np.any(np.diff(u) <= 0):
        raise ValueError("u grid must be strictly increasing")
    if seeds is None:
        seeds = numeric_roots_real(params, c)
    z0 = np.asarray(seeds, dtype=complex)
    if _TRACK_KERNEL is not None:
        out, ok = _TRACK_KERNEL(
            0.5 * params.sigma**2,
            params.drift,
            params.pos_weights,
            params.pos_rates,
            params.neg_weights,
            params.neg_rates,
            float(c),
            u,
            z0,
            max_newton,
        )
        if not ok:
            raise TrackingDivergence("Newton failed to converge on the contour")
        return out
    return _track_python(params, c, u, z0, max_newton)


# --------------------------------------------------------------------------
# Hybrid evaluation
# --------------------------------------------------------------------------


class RootSystem:
    """All expansions of a model at one order, with a hybrid evaluator.

    ``locations_at(q)`` returns the full ordered root vector, using the
    series wherever |q| clears the per-root validity threshold and falling
    back to tracking from the real axis otherwise.
    """

    def __init__(self, params, order=16, dps=COEFF_DPS):
        self.params = params
        self.order = order
        m, mh = root_counts(params)
        self.pos = [expand_near_root(params, "pos", i, order, dps)
                    for i in range(1, params.n_pos + 1)]
        if m > params.n_pos:
            self.pos.append(expand_far_root(params, "pos", order, dps))
        self.neg = [expand_near_root(params, "neg", i, order, dps)
                    for i in range(1, params.n_neg + 1)]
        if mh > params.n_neg:
            self.neg.append(expand_far_root(params, "neg", order, dps))

    @property
    def q_min(self):
        return max([e.q_min for e in self.pos + self.neg], default=0.0)

    def locations_at(self, q, mode="hybrid"):
        """(pos locations ascending zeta_1..zeta_M, neg locations -zeta_hat)."""
        q = complex(q)
        if mode == "numeric" or (mode == "hybrid" and abs(q) < self.q_min):
            if q.imag == 0:
                roots = numeric_roots_real(self.params, q.real)
            else:
                u = np.linspace(0.0, abs(q.imag), max(8, int(abs(q.imag) * 2) + 2))
                tracked = track_roots_contour(self.params, q.real, u)
                row = tracked[-1] if q.imag > 0 else np.conj(tracked[-1])
                roots = row
            pos = [z for z in roots if np.real(z) > 0]
            neg = [z for z in roots if np.real(z) <= 0]
            return (np.array(sorted(pos, key=lambda z: z.real)),
                    np.array(sorted(neg, key=lambda z: -z.real)))
        with warnings.catch_warnings():
            if mode == "series":
                warnings.simplefilter("ignore", BelowValidityThreshold)
            pos = np.array([eval_expansion(e, q) for e in self.pos])
            neg = np.array([eval_expansion(e, q) for e in self.neg])
        return pos, neg
