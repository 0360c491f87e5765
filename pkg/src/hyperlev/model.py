"""The hyperexponential process: parameters, rational exponent, local series.

The model is a Brownian component (volatility ``sigma``), a linear drift, and
a finite mixture of exponential jumps on each side of zero.  Its cumulant
(Laplace) exponent

    psi(z) = sigma^2 z^2 / 2 + a z + z * sum w/(rho - z) - z * sum wh/(rhoh + z)

extends to a rational function with simple real poles at the jump rates.
This module provides psi and its derivative, the local Laurent data around
z = infinity and around each pole (the inputs to every expansion downstream),
root-count rules, the risk-neutral drift, the distribution at an independent
exponential time, and plain-text parameter fixtures.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from importlib import resources

import numpy as np

from .errors import FixtureError, InconsistentRoots, PoleEvaluation, RhoOneTooSmall
from .series import TruncatedSeries

POLE_PROXIMITY_FLOOR = 1e-12
MASS_TOLERANCE = 1e-8


def _validate_jumps(jumps, label):
    rates = [r for _, r in jumps]
    if any(w <= 0 for w, _ in jumps):
        raise ValueError(f"{label} weights must be strictly positive")
    if any(r <= 0 for r in rates):
        raise ValueError(f"{label} rates must be strictly positive")
    if any(b <= a for a, b in zip(rates, rates[1:])):
        raise ValueError(f"{label} rates must be strictly increasing")


@dataclass(frozen=True)
class HyperExpParams:
    """Model parameters: volatility, drift, and (weight, rate) jump pairs."""

    sigma: float
    drift: float
    pos_jumps: tuple = ()
    neg_jumps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "pos_jumps", tuple(map(tuple, self.pos_jumps)))
        object.__setattr__(self, "neg_jumps", tuple(map(tuple, self.neg_jumps)))
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        _validate_jumps(self.pos_jumps, "positive-side")
        _validate_jumps(self.neg_jumps, "negative-side")

    @property
    def n_pos(self):
        return len(self.pos_jumps)

    @property
    def n_neg(self):
        return len(self.neg_jumps)

    @cached_property
    def pos_weights(self):
        return np.array([w for w, _ in self.pos_jumps], dtype=float)

    @cached_property
    def pos_rates(self):
        return np.array([r for _, r in self.pos_jumps], dtype=float)

    @cached_property
    def neg_weights(self):
        return np.array([w for w, _ in self.neg_jumps], dtype=float)

    @cached_property
    def neg_rates(self):
        return np.array([r for _, r in self.neg_jumps], dtype=float)

    @property
    def jump_mass(self):
        """Total exponential-mixture weight (minus the constant tail of psi)."""
        return float(self.pos_weights.sum() + self.neg_weights.sum())

    @property
    def rho_one(self):
        return float(self.pos_rates[0]) if self.n_pos else np.inf

    def with_drift(self, drift):
        return HyperExpParams(self.sigma, float(drift), self.pos_jumps, self.neg_jumps)

    @classmethod
    def risk_neutral(cls, sigma, pos_jumps, neg_jumps, r):
        """Parameters whose drift solves psi(1) = r (requires rho_1 > 1)."""
        a = risk_neutral_drift(sigma, pos_jumps, neg_jumps, r)
        return cls(sigma, a, tuple(map(tuple, pos_jumps)), tuple(map(tuple, neg_jumps)))


def risk_neutral_drift(sigma, pos_jumps, neg_jumps, r):
    """The unique drift with psi(1) = r: the martingale condition for e^X."""
    pos_jumps = tuple(map(tuple, pos_jumps))
    neg_jumps = tuple(map(tuple, neg_jumps))
    if pos_jumps and min(rate for _, rate in pos_jumps) <= 1.0:
        raise RhoOneTooSmall("risk-neutral condition needs the smallest positive rate > 1")
    if r < 0:
        raise ValueError("interest rate must be nonnegative")
    a = r - 0.5 * sigma * sigma
    a -= sum(w / (rho - 1.0) for w, rho in pos_jumps)
    a += sum(w / (rho + 1.0) for w, rho in neg_jumps)
    return a


def _psi_raw(params, z):
    zz = np.asarray(z, dtype=complex)
    out = 0.5 * params.sigma**2 * zz * zz + params.drift * zz
    if params.n_pos:
        out = out + zz * np.sum(
            params.pos_weights / (params.pos_rates - zz[..., None]), axis=-1
        )
    if params.n_neg:
        out = out - zz * np.sum(
            params.neg_weights / (params.neg_rates + zz[..., None]), axis=-1
        )
    return out


def _check_poles(params, z):
    zz = np.asarray(z, dtype=complex)
    for rates, sign in ((params.pos_rates, 1.0), (params.neg_rates, -1.0)):
        if len(rates):
            d = np.abs(zz[..., None] - sign * rates)
            if np.min(d) < POLE_PROXIMITY_FLOOR:
                raise PoleEvaluation("evaluation point within 1e-12 of a pole")


def psi(params, z):
    """The rational cumulant exponent, analytic off the poles."""
    _check_poles(params, z)
    out = _psi_raw(params, z)
    return complex(out) if np.ndim(z) == 0 else out


def psi_prime(params, z):
    """d psi / dz as a rational function."""
    _check_poles(params, z)
    zz = np.asarray(z, dtype=complex)
    out = params.sigma**2 * zz + params.drift
    if params.n_pos:
        out = out + np.sum(
            params.pos_weights * params.pos_rates
            / (params.pos_rates - zz[..., None]) ** 2,
            axis=-1,
        )
    if params.n_neg:
        out = out - np.sum(
            params.neg_weights * params.neg_rates
            / (params.neg_rates + zz[..., None]) ** 2,
            axis=-1,
        )
    return complex(out) if np.ndim(z) == 0 else out


def root_counts(params):
    """Number of positive / negative solutions of psi(z) = q for q > 0."""
    n, nh = params.n_pos, params.n_neg
    if params.sigma > 0:
        return n + 1, nh + 1
    if params.drift > 0:
        return n + 1, nh
    if params.drift < 0:
        return n, nh + 1
    return n, nh


# --------------------------------------------------------------------------
# Local Laurent data
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LaurentCoefficientCache:
    """Taylor/Laurent coefficients of psi near infinity and near each pole.

    eta[n] is the regular coefficient of psi(1/z) at z = 0; omega[l][n] and
    omega_hat[l][n] are the regular parts of psi shifted to the l-th positive
    (negative) pole.  Coefficients are stored in whatever scalar type ``num``
    produced them (float by default, mpmath.mpf for extended precision).
    """

    params: HyperExpParams
    order: int
    eta: tuple
    omega: tuple
    omega_hat: tuple

    @property
    def jump_mass(self):
        return self.params.jump_mass

    def gamma(self, q):
        """Mass normalizer 1/(q + total jump weight) of the atom dispatch."""
        return 1.0 / (q + self.jump_mass)

    def _nums(self):
        # scalar constructor consistent with the stored coefficients
        probe = self.eta[0]
        return type(probe)

    def h_series(self):
        """psi(1/z) around z = 0: principal part sigma^2/2 z^-2 + a z^-1."""
        p = self.params
        num = self._nums()
        half_sig2 = num(p.sigma) * num(p.sigma) / 2
        coeffs = [half_sig2, num(p.drift), *self.eta]
        return TruncatedSeries(-2, coeffs, 1)

    def g_series(self, ell):
        """psi shifted to the ell-th positive pole (1-based)."""
        p = self.params
        num = self._nums()
        w, rho = p.pos_jumps[ell - 1]
        w, rho = num(w), num(rho)
        sig2 = num(p.sigma) * num(p.sigma)
        a = num(p.drift)
        om = self.omega[ell - 1]
        coeffs = [
            -w * rho,
            sig2 * rho * rho / 2 + a * rho + om[0],
            sig2 * rho + a + om[1],
            sig2 / 2 + om[2],
            *om[3:],
        ]
        return TruncatedSeries(-1, coeffs, 1, normalize=False)

    def g_hat_series(self, ell):
        """psi shifted to the ell-th negative pole (1-based)."""
        p = self.params
        num = self._nums()
        w, rho = p.neg_jumps[ell - 1]
        w, rho = num(w), num(rho)
        sig2 = num(p.sigma) * num(p.sigma)
        a = num(p.drift)
        om = self.omega_hat[ell - 1]
        coeffs = [
            w * rho,
            sig2 * rho * rho / 2 - a * rho + om[0],
            a - sig2 * rho + om[1],
            sig2 / 2 + om[2],
            *om[3:],
        ]
        return TruncatedSeries(-1, coeffs, 1, normalize=False)


def laurent_coeffs(params, order, num=float):
    """Closed-form eta / omega / omega-hat tables up to the given order.

    ``num`` converts the raw float parameters; pass ``mpmath.mpf`` to build
    the tables in extended precision.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    pw = [num(w) for w, _ in params.pos_jumps]
    pr = [num(r) for _, r in params.pos_jumps]
    nw = [num(w) for w, _ in params.neg_jumps]
    nr = [num(r) for _, r in params.neg_jumps]
    zero = num(0.0)

    eta = []
    pos_pow = list(1 + zero for _ in pr)
    neg_pow = list(1 + zero for _ in nr)
    for n in range(order + 1):
        s = zero
        for w, p in zip(pw, pos_pow):
            s = s + w * p
        t = zero
        for w, p in zip(nw, neg_pow):
            t = t + w * p
        eta.append(-(s + (-1) ** n * t))
        pos_pow = [p * r for p, r in zip(pos_pow, pr)]
        neg_pow = [p * r for p, r in zip(neg_pow, nr)]

    max_n = max(order, 2)

    def pole_table(rho_ell, own_index, own_weight, same_pairs, other_pairs, same_sign):
        # n = 0 entry, then n >= 1 per the geometric-series expansion
        row = []
        s0 = zero
        for i, (w, r) in enumerate(same_pairs):
            if i != own_index:
                s0 = s0 + w * rho_ell / (r - rho_ell)
        for w, r in other_pairs:
            s0 = s0 - w * rho_ell / (r + rho_ell)
        row.append(s0 - own_weight)
        for n in range(1, max_n + 1):
            s = zero
            for i, (w, r) in enumerate(same_pairs):
                if i != own_index:
                    s = s + w * r / (r - rho_ell) ** (n + 1)
            t = zero
            for w, r in other_pairs:
                t = t + w * r / (r + rho_ell) ** (n + 1)
            if same_sign:
                row.append(s + (-1) ** n * t)
            else:
                row.append(t + (-1) ** n * s)
        return tuple(row)

    pos_pairs = list(zip(pw, pr))
    neg_pairs = list(zip(nw, nr))
    omega = tuple(
        pole_table(pr[l], l, pw[l], pos_pairs, neg_pairs, True)
        for l in range(len(pr))
    )
    omega_hat = tuple(
        pole_table(nr[l], l, nw[l], neg_pairs, pos_pairs, False)
        for l in range(len(nr))
    )
    return LaurentCoefficientCache(params, order, tuple(eta), omega, omega_hat)


# --------------------------------------------------------------------------
# Distribution at an exponential time
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpTimeDistribution:
    """Mixture law of the process at an independent exponential time.

    The density on x > 0 is sum of coef * exp(-rate x) over ``pos_terms``;
    on x < 0 it is sum of coef * exp(rate x) over ``neg_terms``; ``atom_mass``
    sits at the origin (nonzero only in the driftless pure-jump regime).
    """

    q: float
    alpha: float
    atom_mass: float
    pos_terms: tuple  # (rate, density coefficient)
    neg_terms: tuple

    @property
    def total_mass(self):
        mass = self.atom_mass
        mass += sum(c / r for r, c in self.pos_terms)
        mass += sum(c / r for r, c in self.neg_terms)
        return mass

    def density(self, x):
        if x > 0:
            return sum(c * np.exp(-r * x) for r, c in self.pos_terms)
        if x < 0:
            return sum(c * np.exp(r * x) for r, c in self.neg_terms)
        raise ValueError("density undefined at the atom location")


def exp_time_distribution(params, q, roots=None):
    """Weights of the exponential mixture for the law at time e(q).

    ``roots`` may supply precomputed real solutions of psi(z) = q (ascending);
    they are found numerically otherwise.  Raises InconsistentRoots when the
    mixture mass misses 1 by more than 1e-8.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    if roots is None:
        from .roots import numeric_roots_real

        roots = numeric_roots_real(params, q)
    roots = np.asarray(roots, dtype=float)
    pos = np.sort(roots[roots > 0])
    neg = np.sort(-roots[roots < 0])
    m, mh = root_counts(params)
    if len(pos) != m or len(neg) != mh:
        raise InconsistentRoots(
            f"expected {m}+{mh} roots, got {len(pos)}+{len(neg)}"
        )
    alpha = 0.0
    if params.sigma == 0 and params.drift == 0:
        alpha = float(1.0 / (q + params.jump_mass))
    pos_terms = tuple((float(z), float(q / psi_prime(params, z).real)) for z in pos)
    neg_terms = tuple((float(z), float(-q / psi_prime(params, -z).real)) for z in neg)
    dist = ExpTimeDistribution(float(q), alpha, q * alpha, pos_terms, neg_terms)
    if abs(dist.total_mass - 1.0) > MASS_TOLERANCE:
        raise InconsistentRoots(
            f"mixture mass {dist.total_mass!r} deviates from 1 beyond {MASS_TOLERANCE}"
        )
    return dist


# --------------------------------------------------------------------------
# Fixtures
# --------------------------------------------------------------------------

FIXTURES_ENV_VAR = "HYPERLEV_FIXTURES"


def fixture_path(name):
    """Resolve a named fixture file, honoring the override directory."""
    filename = name if name.endswith(".params") else f"{name}.params"
    override = os.environ.get(FIXTURES_ENV_VAR)
    if override:
        candidate = os.path.join(override, filename)
        if os.path.exists(candidate):
            return candidate
        raise FixtureError(f"fixture {filename!r} not found under {override!r}")
    ref = resources.files("hyperlev").joinpath("fixtures", filename)
    if not ref.is_file():
        raise FixtureError(f"no built-in fixture named {name!r}")
    return str(ref)


def load_fixture(source, sigma=None, r=None):
    """Read a plain-text parameter file; returns (params, r).

    Recognized keys: ``sigma``, ``r``, optional ``a``, and repeated
    ``pos_jump = weight rate`` / ``neg_jump = weight rate`` lines.  When ``a``
    is absent the drift is derived from the risk-neutral condition.  The
    ``sigma``/``r`` arguments override file values (and force re-derivation
    of the drift).
    """
    path = source if os.path.exists(str(source)) else fixture_path(str(source))
    values = {}
    pos, neg = [], []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise FixtureError(f"{path}:{lineno}: expected 'key = value'")
                key, _, val = line.partition("=")
                key = key.strip().lower()
                val = val.strip()
                if key in ("pos_jump", "neg_jump"):
                    parts = val.replace(",", " ").split()
                    if len(parts) != 2:
                        raise FixtureError(
                            f"{path}:{lineno}: jump lines need 'weight rate'"
                        )
                    (pos if key == "pos_jump" else neg).append(
                        (float(parts[0]), float(parts[1]))
                    )
                elif key in ("sigma", "r", "a"):
                    values[key] = float(val)
                else:
                    raise FixtureError(f"{path}:{lineno}: unknown key {key!r}")
    except OSError as exc:
        raise FixtureError(f"cannot read fixture {path!r}: {exc}") from exc
    except ValueError as exc:
        raise FixtureError(f"malformed number in {path!r}: {exc}") from exc

    if "sigma" not in values and sigma is None:
        raise FixtureError(f"{path!r} does not define sigma")
    if "r" not in values and r is None:
        raise FixtureError(f"{path!r} does not define r")
    sig = float(sigma) if sigma is not None else values["sigma"]
    rate = float(r) if r is not None else values["r"]
    overridden = sigma is not None or r is not None
    if "a" in values and not overridden:
        params = HyperExpParams(sig, values["a"], tuple(pos), tuple(neg))
    else:
        params = HyperExpParams.risk_neutral(sig, pos, neg, rate)
    return params, rate
