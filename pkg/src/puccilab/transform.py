"""Gradient-removing change of variables and the transformed source term.

For a pair (g, f) the substitution integrates G(t) = int_0^t g and
phi(s) = int_0^s exp(G); the transformed source h(s) = exp(G(t)) f(t) at
t = phi^{-1}(s) is what the radial engines consume.  G and phi are obtained
in one pass by integrating the coupled system (G' = g, phi' = exp(G)) with
adaptive Runge-Kutta; a table caches a refined grid so that repeated
inversion during ODE runs stays cheap (monotone cubic interpolation with
exact knot slopes, polished by Newton steps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp

from . import dsl
from .errors import InvalidInputError, TransformOverflowError
from .pairs import GradientPair

DEFAULT_TOL = 1e-10
DEFAULT_T_MAX = 50.0
G_OVERFLOW = 700.0
PHI_OVERFLOW = 1e300
_T_SEED = 1e-12  # integration starts here; below it phi(t) = t to 14+ digits
_T_CAP = 1e9


class _Hermite:
    """Piecewise cubic Hermite with exact knot slopes, scalar evaluation."""

    __slots__ = ("x", "y", "d")

    def __init__(self, x, y, d):
        self.x = x
        self.y = y
        self.d = d

    def __call__(self, xq: float) -> float:
        x = self.x
        i = int(np.searchsorted(x, xq)) - 1
        if i < 0:
            i = 0
        elif i > x.size - 2:
            i = x.size - 2
        h = x[i + 1] - x[i]
        s = (xq - x[i]) / h
        y0 = self.y[i]
        y1 = self.y[i + 1]
        d0 = self.d[i] * h
        d1 = self.d[i + 1] * h
        s2 = s * s
        s3 = s2 * s
        return (y0 * (2 * s3 - 3 * s2 + 1) + d0 * (s3 - 2 * s2 + s)
                + y1 * (3 * s2 - 2 * s3) + d1 * (s3 - s2))


def _seed_G(pair: GradientPair, t: float, tol: float) -> float:
    """G on [0, t] by adaptive quadrature; tolerates integrable endpoint
    singularities of g (power-type g with exponent in (-1, 0))."""
    if t == 0.0:
        return 0.0
    val, _err = quad(pair.g_at, 0.0, t, epsabs=min(tol, 1e-12), epsrel=tol, limit=200)
    return val


@dataclass
class _Integration:
    sol: object
    t_end: float
    truncated_at: float | None


def _integrate_pair(pair: GradientPair, t_end: float, tol: float) -> _Integration:
    """Integrate (G' = g, phi' = exp(G)) from ~0 to t_end with overflow guards."""

    def rhs(t, y):
        return (pair.g_at(t), math.exp(min(y[0], 709.0)))

    def g_guard(t, y):
        return y[0] - G_OVERFLOW

    def phi_guard(t, y):
        return y[1] - PHI_OVERFLOW

    g_guard.terminal = True
    g_guard.direction = 1
    phi_guard.terminal = True
    phi_guard.direction = 1

    t0 = min(_T_SEED, 0.5 * t_end)
    g0 = _seed_G(pair, t0, tol)
    phi0 = t0 * (1.0 + 0.5 * g0)  # phi = t + O(t*G) below the seed point
    rtol = max(0.01 * tol, 1e-13)
    sol = solve_ivp(rhs, (t0, t_end), (g0, phi0), method="RK45",
                    rtol=rtol, atol=rtol, dense_output=True,
                    events=(g_guard, phi_guard))
    if sol.status == -1:
        raise InvalidInputError(f"transform integration failed for pair {pair.label!r}: {sol.message}")
    truncated = None
    if sol.status == 1:
        hits = [ev[0] for ev in sol.t_events if ev.size]
        truncated = float(min(hits))
    return _Integration(sol, float(sol.t[-1]), truncated)


class TransformTable:
    """Cached sampling of (t, G, phi) for one pair, with fast inversion.

    Immutable once built; `ensure_v` returns a (possibly new) table covering
    the requested range instead of mutating in place.
    """

    def __init__(self, pair: GradientPair, tol: float = DEFAULT_TOL,
                 t_max: float = DEFAULT_T_MAX):
        self.pair = pair
        self.tol = tol
        self.t_max = t_max
        run = _integrate_pair(pair, t_max, tol)
        self._dense = run.sol.sol
        self.truncated_at = run.truncated_at
        self._dense_lo = float(run.sol.t[0])
        # knots: solver steps plus midpoints, origin prepended
        steps = run.sol.t
        mids = 0.5 * (steps[:-1] + steps[1:])
        t = np.unique(np.concatenate(([0.0], steps, mids)))
        vals = run.sol.sol(t[1:])
        G = np.concatenate(([0.0], vals[0]))
        phi = np.concatenate(([0.0], vals[1]))
        keep = np.concatenate(([True], np.diff(phi) > 0))
        t, G, phi = t[keep], G[keep], phi[keep]
        self.t_grid = t
        self.G_grid = G
        self.phi_grid = phi
        self._check_invariants()
        dG = self._slopes_g(t)
        eG = np.exp(G)
        self._G_of_t = _Hermite(t, G, dG)
        self._phi_of_t = _Hermite(t, phi, eG)
        self._t_of_phi = _Hermite(phi, t, np.exp(-G))
        self.t_end = float(t[-1])
        self.phi_end = float(phi[-1])
        self.G_end = float(G[-1])

    def _slopes_g(self, t: np.ndarray) -> np.ndarray:
        out = np.empty_like(t)
        for i, ti in enumerate(t):
            if ti == 0.0:
                # g may be singular at 0 (power-type with exponent < 0);
                # the [0, seed] sliver is special-cased everywhere anyway
                try:
                    out[i] = self.pair.g_at(0.0)
                except Exception:
                    out[i] = self.pair.g_at(float(t[1]))
            else:
                out[i] = self.pair.g_at(ti)
        return out

    def _check_invariants(self):
        if np.any(np.diff(self.G_grid) < -self.tol * max(1.0, self.G_grid[-1])):
            raise InvalidInputError(f"G is decreasing for pair {self.pair.label!r}; g must be nonnegative")
        if self.phi_grid.size >= 3:
            # discrete convexity on a nonuniform grid: divided differences
            # (chord slopes, = averaged exp(G) > 0) must not decrease
            slopes = np.diff(self.phi_grid) / np.diff(self.t_grid)
            if np.any(np.diff(slopes) < -self.tol * np.maximum(slopes[:-1], 1.0)):
                raise InvalidInputError(f"phi lost convexity for pair {self.pair.label!r}")

    # -- exact-ish dense evaluations -------------------------------------
    def G_dense(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        if t < self._dense_lo:
            return _seed_G(self.pair, t, self.tol)
        if t > self.t_end * (1 + 1e-12):
            raise InvalidInputError(f"t={t:.6g} beyond tabulated range {self.t_end:.6g}")
        return float(self._dense(min(t, self.t_end))[0])

    def phi_dense(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        if t < self._dense_lo:
            return t * (1.0 + 0.5 * _seed_G(self.pair, t, self.tol))
        if t > self.t_end * (1 + 1e-12):
            raise InvalidInputError(f"t={t:.6g} beyond tabulated range {self.t_end:.6g}")
        return float(self._dense(min(t, self.t_end))[1])

    # -- fast table evaluations ------------------------------------------
    def G_of(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        if t < self._dense_lo:
            g0 = self.G_grid[1] if self.t_grid.size > 1 else 0.0
            return _seed_G(self.pair, t, self.tol) if g0 > 1e-8 else g0 * (t / self._dense_lo)
        return self._G_of_t(t)

    def phi_of(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        if t < self._dense_lo:
            return t
        return self._phi_of_t(t)

    def invert(self, v: float, refine: int = 2) -> float:
        """t with phi(t) = v, from the cached inverse grid plus Newton."""
        if v < 0.0:
            raise InvalidInputError(f"cannot invert phi at negative value {v}")
        if v == 0.0:
            return 0.0
        if v >= self.phi_end:
            if v <= self.phi_end * (1 + 1e-9):
                return self.t_end
            raise InvalidInputError(f"v={v:.6g} beyond tabulated range {self.phi_end:.6g}")
        if self.phi_grid.size > 1 and v <= self.phi_grid[1]:
            return v  # phi(t) = t below the seed point
        t = self._t_of_phi(v)
        for _ in range(refine):
            t = min(max(t, 0.0), self.t_end)
            ph = self.phi_of(t)
            t -= (ph - v) / math.exp(min(self.G_of(t), 709.0))
        return min(max(t, 0.0), self.t_end)

    def transformed_of(self, v: float, expr: dsl.Expr) -> float:
        """exp(G(t)) * expr(t) at t = phi^{-1}(v)."""
        t = self.invert(v)
        return math.exp(min(self.G_of(t), 709.0)) * dsl.eval_expr(expr, t, self.pair.params)

    def h_of(self, v: float) -> float:
        """Transformed source at v, using the pair's own f."""
        return self.transformed_of(v, self.pair.f)

    def ensure_v(self, v_target: float) -> "TransformTable":
        """Return a table whose phi range covers v_target (may be self)."""
        table = self
        while table.phi_end < v_target:
            if table.truncated_at is not None:
                raise TransformOverflowError(table.truncated_at)
            if table.t_max >= _T_CAP:
                raise InvalidInputError(
                    f"phi reaches only {table.phi_end:.3g} by t = {table.t_max:.3g}; "
                    f"target {v_target:.3g} is out of reach")
            table = TransformTable(self.pair, self.tol, min(table.t_max * 4.0, _T_CAP))
        return table


# ---------------------------------------------------------------------------
# contract-level scalar operations


def compute_G(pair: GradientPair, t: float, tol: float = DEFAULT_TOL) -> float:
    """Integral of g over [0, t] by adaptive quadrature."""
    if t < 0.0:
        raise InvalidInputError(f"t must be nonnegative, got {t}")
    if t == 0.0:
        return 0.0
    val, _err = quad(pair.g_at, 0.0, t, epsabs=tol, epsrel=tol, limit=200)
    return float(val)


def compute_phi(pair: GradientPair, s: float, tol: float = DEFAULT_TOL) -> float:
    """phi(s) by integrating the coupled (G, phi) system from 0 to s."""
    if s < 0.0:
        raise InvalidInputError(f"s must be nonnegative, got {s}")
    if s == 0.0:
        return 0.0
    if s < _T_SEED:
        return s * (1.0 + 0.5 * _seed_G(pair, s, tol))
    run = _integrate_pair(pair, s, tol)
    if run.truncated_at is not None and run.t_end < s * (1 - 1e-12):
        raise TransformOverflowError(run.truncated_at)
    return float(run.sol.y[1][-1])


def invert_phi(pair: GradientPair, v: float, tol: float = DEFAULT_TOL) -> float:
    """s with phi(s) = v: monotone bracketing then safeguarded Newton using
    phi' = exp(G)."""
    if v < 0.0:
        raise InvalidInputError(f"v must be nonnegative, got {v}")
    if v == 0.0:
        return 0.0
    # g >= 0 gives phi(t) >= t, so t* lies in [0, v]
    run = _integrate_pair(pair, max(v, 16 * _T_SEED), tol)
    dense = run.sol.sol
    lo_t = float(run.sol.t[0])
    hi = run.t_end
    if float(run.sol.y[1][-1]) < v * (1 - 1e-12):
        raise TransformOverflowError(run.truncated_at if run.truncated_at is not None else hi,
                                     f"phi reaches only {run.sol.y[1][-1]:.3g} before overflow; cannot invert at {v:.6g}")

    def phi_at(t):
        if t <= 0.0:
            return 0.0
        if t < lo_t:
            return t
        return float(dense(min(t, hi))[1])

    def G_at(t):
        if t <= 0.0 or t < lo_t:
            return 0.0 if t <= 0.0 else float(dense(lo_t)[0])
        return float(dense(min(t, hi))[0])

    lo, up = 0.0, hi
    t = min(v, hi)
    target_tol = tol * max(1.0, v)
    for _ in range(200):
        ph = phi_at(t)
        if abs(ph - v) <= target_tol:
            return t
        if ph > v:
            up = t
        else:
            lo = t
        step = (ph - v) / math.exp(min(G_at(t), 709.0))
        t_new = t - step
        if not (lo < t_new < up):
            t_new = 0.5 * (lo + up)
        t = t_new
    return t


def transformed_h(pair: GradientPair, s: float, tol: float = DEFAULT_TOL) -> float:
    """h(s) = exp(G(t)) f(t) at t = phi^{-1}(s)."""
    if s < 0.0:
        raise InvalidInputError(f"s must be nonnegative, got {s}")
    t = invert_phi(pair, s, tol)
    return math.exp(min(compute_G(pair, t, tol), 709.0)) * pair.f_at(t)


# ---------------------------------------------------------------------------
# heuristic growth classification

SUBLINEAR = "Sublinear"
SUPERLINEAR = "Superlinear"
NEITHER = "Neither"
UNDETERMINED = "Undetermined"

_STABLE_REL = 0.10  # relative change allowed over the last three samples


@dataclass
class GrowthReport:
    """Heuristic sub/superlinear classification of a pair.

    The limits of h(s)/s at 0 and infinity cannot be decided by sampling;
    every field here is an extrapolated estimate and `Undetermined` is a
    legitimate outcome, not an error.
    """

    klass: str
    limit_at_zero: float | None
    trend_at_zero: str
    limit_at_infinity: float | None
    trend_at_infinity: str
    mu1_used: float
    c_star: float | None = None
    C_star: float | None = None
    truncated: bool = False
    samples: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def enc(x):
            if x is None:
                return None
            if math.isinf(x):
                return "inf" if x > 0 else "-inf"
            return float(x)

        return {
            "class": self.klass,
            "limit_at_zero": enc(self.limit_at_zero),
            "trend_at_zero": self.trend_at_zero,
            "limit_at_infinity": enc(self.limit_at_infinity),
            "trend_at_infinity": self.trend_at_infinity,
            "mu1_used": self.mu1_used,
            "c_star": enc(self.c_star),
            "C_star": enc(self.C_star),
            "truncated": self.truncated,
            "samples": {k: [[s, enc(q)] for s, q in v] for k, v in self.samples.items()},
            "heuristic": True,
        }


def _trend(qs: list, mu1: float):
    """(estimate, trend) for a sequence of h(s)/s samples marching toward a
    limit.  Stabilization is judged relative to max(|q|, 1e-3 mu1) so decay
    to zero still registers; divergence needs monotone growth past mu1."""
    finite = []
    for q in qs:
        if q is None or math.isnan(q) or math.isinf(q):
            break
        finite.append(q)
    truncated = len(finite) < len(qs)
    if len(finite) < 3:
        if truncated and len(qs) >= 1 and qs[len(finite)] is not None and math.isinf(qs[len(finite)]):
            return math.copysign(math.inf, qs[len(finite)]), "diverging", True
        return None, "truncated" if truncated else "undetermined", truncated
    last3 = finite[-3:]
    floor = 1e-3 * mu1
    rels = [abs(last3[i] - last3[i - 1]) / max(abs(last3[i]), floor) for i in (1, 2)]
    if max(rels) <= _STABLE_REL:
        return finite[-1], "stabilized", truncated
    mags = [abs(x) for x in last3]
    if mags[0] < mags[1] < mags[2] and mags[2] > mu1:
        return math.copysign(math.inf, last3[-1]), "diverging", truncated
    return None, "undetermined", truncated


def classify_growth(pair: GradientPair, mu1: float, *, k_max: int = 6,
                    p_ref: float | None = None, tol: float = DEFAULT_TOL) -> GrowthReport:
    """Estimate the limits of h(s)/s at 0 and infinity on geometric grids
    s = 10^{+-k} and classify the pair against the eigenvalue threshold."""
    if mu1 <= 0.0:
        raise InvalidInputError(f"mu1 must be positive, got {mu1}")
    table = TransformTable(pair, tol)
    truncated = False
    try:
        table = table.ensure_v(10.0 ** k_max)
    except TransformOverflowError:
        truncated = True

    def sample(s: float) -> float | None:
        if s >= table.phi_end:
            return None
        try:
            return table.h_of(s) / s
        except (OverflowError, InvalidInputError):
            return None

    up = [(10.0 ** k, sample(10.0 ** k)) for k in range(0, k_max + 1)]
    down = [(10.0 ** (-k), sample(10.0 ** (-k))) for k in range(0, k_max + 1)]
    est_inf, trend_inf, trunc_up = _trend([q for _s, q in up], mu1)
    est_zero, trend_zero, _ = _trend([q for _s, q in down], mu1)
    truncated = truncated or trunc_up

    klass = UNDETERMINED
    if est_inf is not None and est_zero is not None:
        if est_inf < mu1 < est_zero:
            klass = SUBLINEAR
        elif est_zero < mu1 < est_inf:
            klass = SUPERLINEAR
        else:
            klass = NEITHER

    C_star = None
    if p_ref is not None:
        qs = []
        for s, _q in up:
            if s >= table.phi_end:
                qs.append(None)
                continue
            try:
                qs.append(table.h_of(s) / s ** p_ref)
            except (OverflowError, InvalidInputError):
                qs.append(None)
        C_est, C_trend, _ = _trend(qs, mu1)
        if C_est is not None and math.isfinite(C_est) and C_trend == "stabilized":
            C_star = C_est

    return GrowthReport(
        klass=klass,
        limit_at_zero=est_zero,
        trend_at_zero=trend_zero,
        limit_at_infinity=est_inf,
        trend_at_infinity=trend_inf,
        mu1_used=mu1,
        c_star=est_zero if est_zero is not None and math.isfinite(est_zero) else None,
        C_star=C_star,
        truncated=truncated,
        samples={"infinity": up, "zero": down},
    )
