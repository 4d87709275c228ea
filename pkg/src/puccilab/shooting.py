"""Radial shooting for the extremal-operator equations.

Integrates M(D^2 v) + h(v) = 0 for radial v by reducing the operator to the
two-eigenvalue weighted form, inverting the weighting for v'', and running
an embedded Runge-Kutta 4(5) pair with dense output and zero-crossing event
detection.  On top of the integrator sit the decay classifier, the critical
exponent bisection, and the principal-eigenvalue solver on balls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import dsl
from .errors import BracketError, InvalidInputError, ShootFailureError
from .pairs import GradientPair
from .pucci import Ellipticity, OperatorSign, invert_pucci_1d, weight_1d
from .transform import TransformTable

R_START = 1e-8  # Taylor-seeded start radius; kills the u'/r singularity
DEFAULT_R_MAX = 1e4
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
SAMPLES_PER_DECADE = 120
MIN_WINDOW_SAMPLES = 50

# decay-detection constants; asymptotics guarantee the limits exist but give
# no finite-r detection rule, so these are fixed, reported conventions
CONVERGED_REL_VAR = 0.01
OSCILLATION_REL = 0.05
MIN_EXTREMA = 3

MINUS_TAIL_CAVEAT = ("between the located critical exponent and the"
                     " n-dimensional critical power, the minus-operator tail"
                     " may be slow or pseudo-slow decaying; the classifier"
                     " reports what it measures and never forces one")


# ---------------------------------------------------------------------------
# closed-form exponent constants


@dataclass
class CriticalExponents:
    """Dimension-like numbers and the derived exponent thresholds."""

    N_plus: float
    N_minus: float
    p_s_plus: float | None
    p_p_plus: float | None
    p_s_minus: float | None
    p_o_minus: float | None
    p_star_n: float | None
    p_star_located: float | None = None
    p_star_bracket: tuple | None = None
    notes: tuple = ()

    def N_for(self, sign: OperatorSign) -> float:
        return self.N_plus if sign is OperatorSign.PLUS else self.N_minus

    def to_json(self) -> dict:
        return {
            "N_plus": self.N_plus,
            "N_minus": self.N_minus,
            "p_s_plus": self.p_s_plus,
            "p_p_plus": self.p_p_plus,
            "p_s_minus": self.p_s_minus,
            "p_o_minus": self.p_o_minus,
            "p_star_n": self.p_star_n,
            "p_star_located": self.p_star_located,
            "p_star_bracket": list(self.p_star_bracket) if self.p_star_bracket else None,
            "notes": list(self.notes),
        }


def critical_constants(ell: Ellipticity) -> CriticalExponents:
    """All closed-form exponent constants for the given ellipticity."""
    ratio = ell.lam / ell.Lam
    N_plus = ratio * (ell.n - 1) + 1.0
    N_minus = (ell.n - 1) / ratio + 1.0
    notes = []
    if N_plus > 2.0:
        p_s_plus = N_plus / (N_plus - 2.0)
        p_p_plus = (N_plus + 2.0) / (N_plus - 2.0)
    else:
        p_s_plus = p_p_plus = None
        notes.append(f"N_plus = {N_plus:.6g} <= 2: plus-operator exponents undefined")
    if N_minus > 2.0:
        p_s_minus = N_minus / (N_minus - 2.0)
        p_o_minus = (N_minus + 2.0) / (N_minus - 2.0)
    else:
        p_s_minus = p_o_minus = None
        notes.append(f"N_minus = {N_minus:.6g} <= 2: minus-operator exponents undefined")
    if ell.n >= 3:
        p_star_n = (ell.n + 2.0) / (ell.n - 2.0)
    else:
        p_star_n = None
        notes.append("n < 3: the n-dimensional critical power is undefined")
    return CriticalExponents(N_plus, N_minus, p_s_plus, p_p_plus,
                             p_s_minus, p_o_minus, p_star_n, notes=tuple(notes))


# ---------------------------------------------------------------------------
# sources: anything exposing h(v)


class PowerSource:
    """h(v) = |v|^{p-1} v, the pure-power source (odd extension below zero
    so the crossing event can be bracketed)."""

    def __init__(self, p: float):
        if not p > 1.0:
            raise InvalidInputError(f"power exponent must exceed 1, got {p}")
        self.p = p

    def h(self, v: float) -> float:
        return abs(v) ** (self.p - 1.0) * v

    def describe(self) -> dict:
        return {"kind": "power", "p": self.p}


class LinearSource:
    """h(v) = mu v, used by the eigenvalue shooter."""

    def __init__(self, mu: float):
        self.mu = mu

    def h(self, v: float) -> float:
        return self.mu * v

    def describe(self) -> dict:
        return {"kind": "linear", "mu": self.mu}


class TransformedSource:
    """h(v) = shift*v + exp(G(t)) numerator(t) at t = phi^{-1}(v).

    With the defaults this is the transformed source of the pair itself;
    a custom numerator plus a negative linear shift realizes the
    decomposed sources of the ball problems.  Extended oddly below zero.
    """

    def __init__(self, pair: GradientPair, numerator: dsl.Expr | None = None,
                 linear_shift: float = 0.0, tol: float = 1e-10):
        self.pair = pair
        self.numerator = numerator if numerator is not None else pair.f
        self.linear_shift = linear_shift
        self.tol = tol
        self._table = TransformTable(pair, tol)

    def table(self) -> TransformTable:
        return self._table

    def reserve(self, v_max: float) -> None:
        """Make sure the cached table covers amplitudes up to v_max."""
        self._table = self._table.ensure_v(v_max)

    def h(self, v: float) -> float:
        if v < 0.0:
            return -self.h(-v)
        if v > 0.98 * self._table.phi_end:
            self._table = self._table.ensure_v(2.0 * v)
        base = self._table.transformed_of(v, self.numerator)
        return self.linear_shift * v + base

    def describe(self) -> dict:
        out = {"kind": "transformed", "pair": self.pair.describe()}
        if self.numerator is not self.pair.f:
            out["numerator"] = dsl.format_expr(self.numerator)
        if self.linear_shift != 0.0:
            out["linear_shift"] = self.linear_shift
        return out


# ---------------------------------------------------------------------------
# configuration and trajectories


@dataclass
class ShootConfig:
    source: object
    ell: Ellipticity
    sign: OperatorSign
    amplitude: float
    r_max: float = DEFAULT_R_MAX
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL

    def __post_init__(self):
        if not self.amplitude > 0.0:
            raise InvalidInputError(f"amplitude must be positive, got {self.amplitude}")
        if not self.r_max > 10.0 * R_START:
            raise InvalidInputError(f"r_max must exceed {10 * R_START}, got {self.r_max}")
        if not (self.rtol > 0.0 and self.atol > 0.0):
            raise InvalidInputError("tolerances must be positive")

    def describe(self) -> dict:
        return {
            "source": self.source.describe(),
            "lambda": self.ell.lam,
            "Lambda": self.ell.Lam,
            "n": self.ell.n,
            "sign": self.sign.value,
            "amplitude": self.amplitude,
            "r_max": self.r_max,
            "rtol": self.rtol,
            "atol": self.atol,
        }


@dataclass
class Terminal:
    kind: str  # crossed | rmax | stepfail
    r: float

    def to_json(self) -> dict:
        return {"kind": self.kind, "r": self.r}


@dataclass
class Trajectory:
    """Sampled radial shot: (r, v, v', v'') on a geometric grid plus the
    terminal event.  A dense interpolant is kept for re-evaluation."""

    r: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    ddv: np.ndarray
    terminal: Terminal
    config: ShootConfig
    n_steps: int
    _dense: object = field(default=None, repr=False)

    def eval(self, r):
        """Dense-output (v, v') at radii inside the integrated range."""
        r = np.asarray(r, dtype=float)
        if self._dense is None:
            raise InvalidInputError("trajectory carries no dense interpolant")
        out = self._dense(np.clip(r, R_START, self.terminal.r))
        return out[0], out[1]

    def residuals(self) -> np.ndarray:
        """|weighted(v'') + (n-1) weighted(v'/r) + h(v)| at every sample."""
        ell, sign = self.config.ell, self.config.sign
        h = self.config.source.h
        out = np.empty(self.r.size)
        for i, (ri, vi, wi, ai) in enumerate(zip(self.r, self.v, self.dv, self.ddv)):
            out[i] = abs(weight_1d(ai, ell, sign)
                         + (ell.n - 1) * weight_1d(wi / ri, ell, sign)
                         + h(vi))
        return out


def radial_rhs(r: float, v: float, vp: float, h_of_v: float,
               ell: Ellipticity, sign: OperatorSign) -> float:
    """v'' solving the radial equation given v, v' and the source value.

    At r = 0 symmetry forces v' = 0 and every Hessian eigenvalue equals
    v''(0), so v'' solves n * weighted(v'') = -h.
    """
    if r < 0.0:
        raise InvalidInputError(f"radius must be nonnegative, got {r}")
    if r == 0.0:
        if vp != 0.0:
            raise InvalidInputError("v'(0) must vanish for a radial profile")
        return invert_pucci_1d(-h_of_v / ell.n, ell, sign)
    return invert_pucci_1d(-h_of_v - (ell.n - 1) * weight_1d(vp / r, ell, sign), ell, sign)


def integrate_shoot(cfg: ShootConfig) -> Trajectory:
    """Shoot from the center with the config's amplitude.

    Starts at r0 = 1e-8 from the second-order Taylor expansion around the
    center and stops at the first zero of v (event location is at the
    integrator's root-finding precision, far below 1e-12 in r), at r_max,
    or on step failure (recorded, not raised).
    """
    ell, sign = cfg.ell, cfg.sign
    h = cfg.source.h
    if isinstance(cfg.source, TransformedSource):
        cfg.source.reserve(4.0 * cfg.amplitude)
    n = ell.n

    def rhs(r, y):
        v, w = y
        return (w, invert_pucci_1d(-h(v) - (n - 1) * weight_1d(w / r, ell, sign), ell, sign))

    def crossing(r, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1

    a = cfg.amplitude
    vpp0 = radial_rhs(0.0, a, 0.0, h(a), ell, sign)
    y0 = (a + 0.5 * vpp0 * R_START ** 2, vpp0 * R_START)
    sol = solve_ivp(rhs, (R_START, cfg.r_max), y0, method="RK45",
                    rtol=cfg.rtol, atol=cfg.atol, dense_output=True,
                    events=crossing)
    if sol.status == -1:
        terminal = Terminal("stepfail", float(sol.t[-1]))
    elif sol.t_events[0].size:
        terminal = Terminal("crossed", float(sol.t_events[0][0]))
    else:
        terminal = Terminal("rmax", float(sol.t[-1]))

    r_end = terminal.r
    decades = max(1.0, math.log10(r_end / R_START))
    n_samples = max(600, int(SAMPLES_PER_DECADE * decades))
    rs = np.geomspace(R_START, r_end, n_samples)
    rs[-1] = r_end
    ys = sol.sol(rs)
    vs, ws = ys[0], ys[1]
    dds = np.empty_like(rs)
    for i, (ri, vi, wi) in enumerate(zip(rs, vs, ws)):
        dds[i] = radial_rhs(ri, vi, wi, h(vi), ell, sign)
    return Trajectory(rs, vs, ws, dds, terminal, cfg, int(sol.t.size), _dense=sol.sol)


# ---------------------------------------------------------------------------
# decay classification


@dataclass
class DecayClass:
    """Tail classification of a positive entire shot.

    kinds: Crossing | FastDecay | SlowDecay | PseudoSlow | Undetermined.
    The detection thresholds are finite-radius conventions (documented in
    `diagnostics`), since the defining limits live at infinity.
    """

    kind: str
    alpha: float
    N_tilde_used: float
    crossing_radius: float | None = None
    C: float | None = None
    c_star: float | None = None
    C1: float | None = None
    C2: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "N_tilde_used": self.N_tilde_used,
            "crossing_radius": self.crossing_radius,
            "C": self.C,
            "c_star": self.c_star,
            "C1": self.C1,
            "C2": self.C2,
            "diagnostics": self.diagnostics,
        }


def _rel_variation(w: np.ndarray) -> float:
    m = float(np.mean(w))
    if m == 0.0:
        return math.inf
    return float((w.max() - w.min()) / abs(m))


def classify_decay(traj: Trajectory, p: float, consts: CriticalExponents,
                   pair: GradientPair | None = None) -> DecayClass:
    """Classify the tail of a shot for the power-p source.

    Works on w_s = r^alpha v and w_f = r^(N-2) v over the window
    [r_max/10, r_max]; convergence means relative variation below 1% over
    the last half-decade, pseudo-slow needs at least 3 extrema with
    persistent oscillation above 5% across the full window.  For
    transformed shots v already equals phi(u), so no back-transform is
    needed here; `pair` is echoed into the diagnostics when given.
    """
    if not p > 1.0:
        raise InvalidInputError(f"exponent p must exceed 1, got {p}")
    alpha = 2.0 / (p - 1.0)
    N_tilde = consts.N_for(traj.config.sign)
    base = DecayClass(kind="Undetermined", alpha=alpha, N_tilde_used=N_tilde)
    if traj.config.sign is OperatorSign.MINUS:
        base.diagnostics["minus_tail_caveat"] = MINUS_TAIL_CAVEAT
    if pair is not None:
        base.diagnostics["pair"] = pair.describe()

    if traj.terminal.kind == "crossed":
        base.kind = "Crossing"
        base.crossing_radius = traj.terminal.r
        return base
    if traj.terminal.kind == "stepfail":
        base.diagnostics["reason"] = f"integration stalled at r = {traj.terminal.r:.6g}"
        return base

    r_max = traj.terminal.r
    mask = traj.r >= r_max / 10.0
    r = traj.r[mask]
    v = traj.v[mask]
    base.diagnostics["window"] = [float(r_max / 10.0), float(r_max)]
    base.diagnostics["n_window_samples"] = int(r.size)
    if r.size < MIN_WINDOW_SAMPLES:
        base.diagnostics["reason"] = f"window holds {r.size} samples, need {MIN_WINDOW_SAMPLES}"
        return base

    w_s = r ** alpha * v
    w_f = r ** (N_tilde - 2.0) * v
    half = r >= r_max / math.sqrt(10.0)
    rv_f = _rel_variation(w_f[half])
    rv_s = _rel_variation(w_s[half])
    mean_f = float(np.mean(w_f[half]))
    mean_s = float(np.mean(w_s[half]))

    d = np.diff(w_s)
    scale = max(abs(float(np.mean(w_s))), 1e-300)
    d = np.where(np.abs(d) < 1e-12 * scale, 0.0, d)
    signs = np.sign(d)
    signs = signs[signs != 0]
    extrema = int(np.sum(signs[1:] != signs[:-1]))
    osc_full = _rel_variation(w_s)

    fitted = None
    if np.all(v > 0.0):
        fitted = float(-np.polyfit(np.log(r), np.log(v), 1)[0])

    base.diagnostics.update({
        "relvar_fast_half_decade": rv_f,
        "relvar_slow_half_decade": rv_s,
        "mean_fast": mean_f,
        "mean_slow": mean_s,
        "extrema_count": extrema,
        "oscillation_rel_full_window": osc_full,
        "fitted_decay_exponent": fitted,
        "thresholds": {
            "converged_rel_var": CONVERGED_REL_VAR,
            "oscillation_rel": OSCILLATION_REL,
            "min_extrema": MIN_EXTREMA,
            "persistence": "one decade of r",
        },
    })

    if rv_f < CONVERGED_REL_VAR and mean_f > 0.0:
        base.kind = "FastDecay"
        base.C = mean_f
        return base
    if rv_s < CONVERGED_REL_VAR and mean_s > 0.0:
        base.kind = "SlowDecay"
        base.c_star = mean_s
        return base
    if extrema >= MIN_EXTREMA and osc_full > OSCILLATION_REL and np.all(v > 0.0):
        c1, c2 = float(w_s.min()), float(w_s.max())
        if 0.0 < c1 < c2:
            base.kind = "PseudoSlow"
            base.C1, base.C2 = c1, c2
            return base
    base.diagnostics.setdefault(
        "reason",
        "no tail test fired: not converged in either scaling and the window "
        f"shows {extrema} extrema (pseudo-slow needs {MIN_EXTREMA} persisting "
        f"over a decade with oscillation above {OSCILLATION_REL:.0%})")
    return base


# ---------------------------------------------------------------------------
# critical exponent location and the ball eigenvalue


@dataclass
class LocatedExponent:
    p_star: float
    bracket: tuple
    r_max: float
    amplitude: float
    evaluations: tuple

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    def to_json(self) -> dict:
        return {
            "p_star": self.p_star,
            "bracket": list(self.bracket),
            "bracket_width": self.width,
            "r_max": self.r_max,
            "amplitude": self.amplitude,
            "evaluations": [list(e) for e in self.evaluations],
        }


def _shot_crosses(p, ell, sign, r_max, rtol, atol) -> bool:
    cfg = ShootConfig(PowerSource(p), ell, sign, 1.0, r_max, rtol, atol)
    traj = integrate_shoot(cfg)
    if traj.terminal.kind == "stepfail":
        raise ShootFailureError(
            f"integration stalled at r = {traj.terminal.r:.6g} for p = {p}",
            {"p": p, "terminal": traj.terminal.to_json()})
    return traj.terminal.kind == "crossed"


def default_bracket(ell: Ellipticity, sign: OperatorSign) -> tuple:
    """Theory-backed bisection bracket: crossing is guaranteed at the lower
    end and positivity at the upper end."""
    consts = critical_constants(ell)
    if sign is OperatorSign.PLUS:
        if consts.p_s_plus is None:
            raise InvalidInputError(
                "N_plus <= 2: the plus-operator critical exponent regime is "
                "undefined; refusing the search")
        lo = max(consts.p_s_plus, consts.p_star_n or 1.0)
        return (lo, consts.p_p_plus)
    if consts.p_o_minus is None or consts.p_star_n is None:
        raise InvalidInputError("no default bracket available; supply one explicitly")
    return (consts.p_o_minus, consts.p_star_n)


def find_critical_p(ell: Ellipticity, sign: OperatorSign, bracket: tuple | None = None,
                    tol_p: float = 0.02, *, r_max: float = DEFAULT_R_MAX,
                    rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> LocatedExponent:
    """Bisect the exponent separating crossing shots from entire positive
    ones.  Scaling invariance of the pure-power problem makes the
    amplitude-1 dichotomy sufficient."""
    if sign is OperatorSign.PLUS and critical_constants(ell).N_plus <= 2.0:
        raise InvalidInputError(
            "N_plus <= 2: the plus-operator critical exponent regime is "
            "undefined; refusing the search")
    if bracket is None:
        bracket = default_bracket(ell, sign)
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (1.0 < lo < hi):
        raise InvalidInputError(f"bracket must satisfy 1 < lo < hi, got ({lo}, {hi})")
    if not tol_p > 0.0:
        raise InvalidInputError(f"tol_p must be positive, got {tol_p}")
    evals = []
    cross_lo = _shot_crosses(lo, ell, sign, r_max, rtol, atol)
    evals.append((lo, "crossed" if cross_lo else "positive"))
    cross_hi = _shot_crosses(hi, ell, sign, r_max, rtol, atol)
    evals.append((hi, "crossed" if cross_hi else "positive"))
    if not cross_lo or cross_hi:
        raise BracketError(
            f"bracket ({lo}, {hi}) does not straddle the transition: "
            f"lower end {'crossed' if cross_lo else 'stayed positive'}, "
            f"upper end {'crossed' if cross_hi else 'stayed positive'}",
            data={"evaluations": evals})
    while hi - lo > tol_p:
        mid = 0.5 * (lo + hi)
        crossed = _shot_crosses(mid, ell, sign, r_max, rtol, atol)
        evals.append((mid, "crossed" if crossed else "positive"))
        if crossed:
            lo = mid
        else:
            hi = mid
    return LocatedExponent(0.5 * (lo + hi), (lo, hi), r_max, 1.0, tuple(evals))


def first_eigenvalue_ball(ell: Ellipticity, sign: OperatorSign, R: float, *,
                          mu_hi: float | None = None, rel_width: float = 1e-8,
                          rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> float:
    """Principal radial eigenvalue on the ball of radius R.

    Shoots the linear problem with unit center value; the first zero radius
    decreases strictly in mu, so bisection on 'crosses before R' converges
    to the eigenvalue whose eigenfunction vanishes exactly at R.
    """
    if not R > 0.0:
        raise InvalidInputError(f"ball radius must be positive, got {R}")
    if mu_hi is None:
        mu_hi = 1e6 / R ** 2

    def crosses(mu: float) -> bool:
        cfg = ShootConfig(LinearSource(mu), ell, sign, 1.0, R, rtol, atol)
        traj = integrate_shoot(cfg)
        if traj.terminal.kind == "stepfail":
            raise ShootFailureError(
                f"eigenvalue shot stalled at r = {traj.terminal.r:.6g} for mu = {mu}",
                {"mu": mu})
        return traj.terminal.kind == "crossed"

    lo = 0.0  # h = 0 keeps the shot at its center value: never crosses
    hi = float(mu_hi)
    if not crosses(hi):
        raise BracketError(
            f"no crossing before R = {R} even at mu = {hi:.6g}; "
            "cannot bracket the eigenvalue", data={"mu_hi": hi})
    while hi - lo > rel_width * hi:
        mid = 0.5 * (lo + hi)
        if crosses(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
