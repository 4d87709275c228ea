"""Dirichlet problems on balls by amplitude shooting.

Everything is solved in the transformed variable v (the v-equation carries
no gradient term), then mapped back through u = phi^{-1}(v).  The original
gradient-term equation is verified a posteriori by finite differences on a
uniform grid: the gradient term only shifts the radial Hessian eigenvalue,
since the outer product of a radial gradient has a single nonzero
eigenvalue (u')^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dsl
from .errors import BracketError, InvalidInputError, ShootFailureError
from .pairs import GradientPair
from .pucci import Ellipticity, OperatorSign, weight_1d
from .shooting import (DEFAULT_ATOL, DEFAULT_RTOL, ShootConfig, Trajectory,
                       TransformedSource, integrate_shoot)

DEFAULT_GRID_NODES = 4000
RHO_REL_TOL = 1e-8


@dataclass(frozen=True)
class AutonomousSpec:
    """Plain source: use the expression (default: the pair's own f)."""

    f: dsl.Expr | None = None

    def describe(self, pair: GradientPair) -> dict:
        expr = self.f if self.f is not None else pair.f
        return {"variant": "autonomous", "f": dsl.format_expr(expr)}


@dataclass(frozen=True)
class DecomposedSpec:
    """Source split as f(t) = -gamma phi(t) exp(-G(t)) + psi(t), psi >= 0."""

    gamma: float
    psi: dsl.Expr

    def __post_init__(self):
        if self.gamma < 0.0:
            raise InvalidInputError(f"gamma must be nonnegative, got {self.gamma}")

    def describe(self, pair: GradientPair) -> dict:
        return {"variant": "decomposed", "gamma": self.gamma, "psi": dsl.format_expr(self.psi)}


SourceSpec = AutonomousSpec | DecomposedSpec


def _check_psi_nonnegative(spec: DecomposedSpec, pair: GradientPair,
                           lo=1e-8, hi=1e4, samples=41) -> None:
    ratio = (hi / lo) ** (1.0 / (samples - 1))
    t = lo
    for _ in range(samples):
        val = dsl.eval_expr(spec.psi, t, pair.params)
        if val < 0.0 or math.isnan(val):
            raise InvalidInputError(f"psi must be nonnegative; psi({t:.3g}) = {val:.3g}")
        t *= ratio


def build_source(spec: SourceSpec, pair: GradientPair, tol: float = 1e-10) -> TransformedSource:
    """Transformed shot source for a ball problem."""
    if isinstance(spec, DecomposedSpec):
        _check_psi_nonnegative(spec, pair)
        return TransformedSource(pair, numerator=spec.psi, linear_shift=-spec.gamma, tol=tol)
    if isinstance(spec, AutonomousSpec):
        numerator = spec.f if spec.f is not None else pair.f
        return TransformedSource(pair, numerator=numerator, tol=tol)
    raise InvalidInputError(f"not a source spec: {spec!r}")


def _default_ball_rmax(R: float) -> float:
    return max(100.0, 20.0 * R)


def _shoot(source, ell, sign, amplitude, r_max, rtol, atol) -> Trajectory:
    cfg = ShootConfig(source, ell, sign, amplitude, r_max, rtol, atol)
    traj = integrate_shoot(cfg)
    if traj.terminal.kind == "stepfail":
        raise ShootFailureError(
            f"ball shot stalled at r = {traj.terminal.r:.6g} (amplitude {amplitude:.6g})",
            {"amplitude": amplitude, "terminal": traj.terminal.to_json()})
    return traj


def crossing_radius(spec: SourceSpec, pair: GradientPair, ell: Ellipticity,
                    sign: OperatorSign, amplitude: float, *,
                    r_max: float | None = None, rtol: float = DEFAULT_RTOL,
                    atol: float = DEFAULT_ATOL, source: TransformedSource | None = None) -> float | None:
    """First zero radius of the transformed shot, or None if it stays
    positive out to r_max."""
    if not amplitude > 0.0:
        raise InvalidInputError(f"amplitude must be positive, got {amplitude}")
    if r_max is None:
        r_max = _default_ball_rmax(1.0)
    src = source if source is not None else build_source(spec, pair)
    traj = _shoot(src, ell, sign, amplitude, r_max, rtol, atol)
    return traj.terminal.r if traj.terminal.kind == "crossed" else None


@dataclass
class RadialSolution:
    """A located ball solution in both variables.

    `residual_transformed` is the defect of the integrated shot: the
    relative boundary mismatch plus the algebraic sample residual of the
    v-equation (the shot satisfies its own ODE to solver precision, so the
    independent checks are `residual_original` and any external oracle).
    """

    R: float
    amplitude: float
    v_profile: Trajectory
    r_grid: np.ndarray
    u_grid: np.ndarray
    v_grid: np.ndarray
    residual_transformed: float
    residual_original: float | None
    boundary_defect: float
    amp_bracket: tuple
    spec_echo: dict = field(default_factory=dict)
    notes: tuple = ()
    _source: object = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "R": self.R,
            "amplitude": self.amplitude,
            "amp_bracket": list(self.amp_bracket),
            "residual_transformed": self.residual_transformed,
            "residual_original": self.residual_original,
            "boundary_defect": self.boundary_defect,
            "source": self.spec_echo,
            "notes": list(self.notes),
        }


def _rho_side(rho: float | None, R: float) -> int:
    """+1 when the shot outlives R (crossing beyond R or never), -1 inside."""
    if rho is None or rho >= R:
        return 1
    return -1


def solve_ball(spec: SourceSpec, pair: GradientPair, ell: Ellipticity,
               sign: OperatorSign, R: float, amp_bracket: tuple, *,
               r_max: float | None = None, n_grid: int = DEFAULT_GRID_NODES,
               rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
               rho_tol: float = RHO_REL_TOL) -> RadialSolution:
    """Find the amplitude whose crossing radius equals R by bisection on the
    continuous map a -> rho(a), then assemble the solution in both variables."""
    if not R > 0.0:
        raise InvalidInputError(f"ball radius must be positive, got {R}")
    if r_max is None:
        r_max = _default_ball_rmax(R)
    if r_max <= R:
        raise InvalidInputError(f"r_max = {r_max} must exceed the ball radius {R}")
    source = build_source(spec, pair)
    a_lo, a_hi = float(amp_bracket[0]), float(amp_bracket[1])
    if not (0.0 < a_lo < a_hi):
        raise InvalidInputError(f"need 0 < a_lo < a_hi, got ({a_lo}, {a_hi})")

    def rho(a: float) -> float | None:
        return crossing_radius(spec, pair, ell, sign, a, r_max=r_max,
                               rtol=rtol, atol=atol, source=source)

    sampled = []
    rho_lo = rho(a_lo)
    rho_hi = rho(a_hi)
    sampled += [(a_lo, rho_lo), (a_hi, rho_hi)]
    side_lo = _rho_side(rho_lo, R)
    side_hi = _rho_side(rho_hi, R)
    if side_lo == side_hi:
        raise BracketError(
            f"amplitude bracket ({a_lo:.6g}, {a_hi:.6g}) does not straddle "
            f"rho = {R}: sampled " + ", ".join(
                f"rho({a:.6g}) = {('none' if r is None else f'{r:.6g}')}" for a, r in sampled),
            data={"sampled": sampled})

    a_star, rho_star = None, None
    for _ in range(300):
        mid = 0.5 * (a_lo + a_hi)
        rho_mid = rho(mid)
        sampled.append((mid, rho_mid))
        if rho_mid is not None and abs(rho_mid - R) <= rho_tol * R:
            a_star, rho_star = mid, rho_mid
            break
        if _rho_side(rho_mid, R) == side_lo:
            a_lo = mid
        else:
            a_hi = mid
        if (a_hi - a_lo) <= 1e-14 * a_hi:
            raise BracketError(
                f"amplitude interval collapsed to ({a_lo!r}, {a_hi!r}) without "
                f"meeting |rho - R| <= {rho_tol:g} R; rho may jump here",
                data={"sampled": sampled})
    if a_star is None:
        raise BracketError("amplitude bisection did not converge in 300 steps",
                           data={"sampled": sampled})

    traj = _shoot(source, ell, sign, a_star, r_max, rtol, atol)
    table = source.table()
    r_nodes = np.linspace(0.0, R, n_grid)
    v_nodes = np.empty(n_grid)
    v_nodes[0] = a_star
    inside = r_nodes[1:] <= rho_star
    vv, _dv = traj.eval(r_nodes[1:][inside])
    v_nodes[1:][inside] = np.maximum(vv, 0.0)
    v_nodes[1:][~inside] = 0.0
    v_nodes[-1] = 0.0
    u_nodes = np.array([table.invert(v) for v in v_nodes])

    alg = float(np.max(traj.residuals()))
    defect = abs(rho_star - R) / R
    res_transformed = defect + alg / max(1.0, a_star)
    notes = []
    if np.any(v_nodes[:-1] <= 0.0):
        notes.append("positivity violated inside the ball; inspect the profile")

    sol = RadialSolution(
        R=R, amplitude=a_star, v_profile=traj,
        r_grid=r_nodes, u_grid=u_nodes, v_grid=v_nodes,
        residual_transformed=res_transformed, residual_original=None,
        boundary_defect=defect, amp_bracket=(a_lo, a_hi),
        spec_echo=spec.describe(pair), notes=tuple(notes), _source=source)
    sol.residual_original = residual_original(sol, pair, ell, sign, spec=spec)
    return sol


def residual_original(sol: RadialSolution, pair: GradientPair, ell: Ellipticity,
                      sign: OperatorSign, *, spec: SourceSpec | None = None,
                      n_nodes: int | None = None) -> float:
    """Sup-norm residual of the gradient-term equation on the back-mapped
    profile, via second-order centered differences at interior nodes.

    Passing n_nodes resamples the stored dense trajectory on a finer uniform
    grid first (used for grid-doubling error decay checks).
    """
    if n_nodes is not None:
        r_nodes = np.linspace(0.0, sol.R, n_nodes)
        table = sol._source.table()
        rho_star = sol.v_profile.terminal.r
        v_nodes = np.empty(n_nodes)
        v_nodes[0] = sol.amplitude
        inside = r_nodes[1:] <= rho_star
        vv, _ = sol.v_profile.eval(r_nodes[1:][inside])
        v_nodes[1:][inside] = np.maximum(vv, 0.0)
        v_nodes[1:][~inside] = 0.0
        v_nodes[-1] = 0.0
        u = np.array([table.invert(v) for v in v_nodes])
        r = r_nodes
    else:
        r, u = sol.r_grid, sol.u_grid
    if r.size < 100:
        raise InvalidInputError(f"verification grid too coarse: {r.size} nodes, need >= 100")
    if spec is None:
        spec = AutonomousSpec()

    table = sol._source.table()

    def f_of(t: float) -> float:
        if isinstance(spec, DecomposedSpec):
            phi_t = table.phi_of(t)
            G_t = table.G_of(t)
            return (-spec.gamma * phi_t * math.exp(-min(G_t, 709.0))
                    + dsl.eval_expr(spec.psi, t, pair.params))
        expr = spec.f if spec.f is not None else pair.f
        return dsl.eval_expr(expr, t, pair.params)

    h_step = r[1] - r[0]
    worst = 0.0
    for i in range(1, r.size - 1):
        up = (u[i + 1] - u[i - 1]) / (2.0 * h_step)
        upp = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h_step * h_step)
        radial_eig = upp + pair.g_at(u[i]) * up * up
        val = (weight_1d(radial_eig, ell, sign)
               + (ell.n - 1) * weight_1d(up / r[i], ell, sign)
               + f_of(u[i]))
        worst = max(worst, abs(val))
    return worst


@dataclass
class ScanResult:
    samples: tuple
    solutions: tuple
    degenerate: bool
    notes: tuple = ()

    def to_json(self) -> dict:
        return {
            "samples": [[a, (None if r is None else r)] for a, r in self.samples],
            "solutions": [s.to_json() for s in self.solutions],
            "count": len(self.solutions),
            "degenerate": self.degenerate,
            "notes": list(self.notes),
        }


def uniqueness_scan(spec: SourceSpec, pair: GradientPair, ell: Ellipticity,
                    sign: OperatorSign, R: float, amp_grid, *,
                    r_max: float | None = None, rtol: float = DEFAULT_RTOL,
                    atol: float = DEFAULT_ATOL) -> ScanResult:
    """Evaluate rho(a) over an amplitude grid and refine every sign change
    of rho(a) - R.  Counts crossings instead of assuming monotonicity."""
    amp_grid = np.asarray(amp_grid, dtype=float)
    if amp_grid.size < 20:
        raise InvalidInputError(f"amplitude grid needs >= 20 points, got {amp_grid.size}")
    if np.any(np.diff(amp_grid) <= 0.0):
        raise InvalidInputError("amplitude grid must be strictly increasing")
    if amp_grid[0] > 1e-2 or amp_grid[-1] < 1e2:
        raise InvalidInputError("amplitude grid must span at least [1e-2, 1e2]")
    if r_max is None:
        r_max = _default_ball_rmax(R)
    source = build_source(spec, pair)
    source.reserve(4.0 * float(amp_grid[-1]))

    samples = []
    for a in amp_grid:
        rho = crossing_radius(spec, pair, ell, sign, float(a), r_max=r_max,
                              rtol=rtol, atol=atol, source=source)
        samples.append((float(a), rho))

    finite = [r for _a, r in samples if r is not None]
    notes = []
    degenerate = False
    if len(finite) == len(samples) and len(finite) >= 2:
        spread = (max(finite) - min(finite)) / max(abs(np.mean(finite)), 1e-300)
        if spread < 1e-10:
            degenerate = True
            notes.append(
                f"rho is constant at {np.mean(finite):.9g} across the grid "
                "(relative variation below 1e-10): a degenerate continuum, "
                "not isolated solutions")

    solutions = []
    if not degenerate:
        sides = [_rho_side(rho, R) for _a, rho in samples]
        for i in range(len(samples) - 1):
            if sides[i] != sides[i + 1]:
                sol = solve_ball(spec, pair, ell, sign, R,
                                 (samples[i][0], samples[i + 1][0]),
                                 r_max=r_max, rtol=rtol, atol=atol)
                solutions.append(sol)
    return ScanResult(tuple(samples), tuple(solutions), degenerate, tuple(notes))
