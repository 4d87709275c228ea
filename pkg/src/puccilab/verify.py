"""Seeded property suites runnable from the CLI.

Each suite draws its cases from a seeded generator, so a fixed seed gives a
bit-identical report.  Violations are counted, never silently clipped.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import transform
from .pairs import builtin_pair
from .pucci import Ellipticity, OperatorSign, eigenvalues_sym, invert_pucci_1d, outer, pucci_eval, pucci_radial_eval, weight_1d, SymMatrix
from .shooting import LinearSource, ShootConfig, integrate_shoot

CANONICAL_PAIR_PARAMS = {
    "power-m": {"m": 1.0, "p": 0.5},
    "texp": {"m": 1.0, "q": 2.0, "nu": 1.0},
    "exp-one": {"a": 1.0, "p": 2.0},
    "mu-over-1+t": {"a": 1.0, "mu": 1.0, "p": 2.0},
    "sinh-cosh": {"a": 1.0, "p": 2.0, "gamma": 0.5},
    "regular-log": {"p": 1.5},
    "tanh-psi": {"gamma": 0.5, "mu": 1.0, "p": 2.0},
    "two-t-rational": {"p": 2.0},
    "proto-uniq": {"p": 3.0},
}


@dataclass
class SuiteReport:
    name: str
    checks: int = 0
    failures: int = 0
    max_violation: float = 0.0
    duration_s: float = 0.0
    failed_cases: list = field(default_factory=list)

    def record(self, ok: bool, violation: float, detail: str) -> None:
        self.checks += 1
        self.max_violation = max(self.max_violation, violation)
        if not ok:
            self.failures += 1
            if len(self.failed_cases) < 10:
                self.failed_cases.append(detail)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_json(self) -> dict:
        return {
            "suite": self.name,
            "checks": self.checks,
            "failures": self.failures,
            "max_violation": self.max_violation,
            "duration_s": self.duration_s,
            "failed_cases": self.failed_cases,
            "passed": self.passed,
        }

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: {self.checks - self.failures}/{self.checks} checks "
                f"(max violation {self.max_violation:.3e}, {self.duration_s:.2f}s)")


def _random_sym(rng, dim: int) -> SymMatrix:
    a = rng.standard_normal((dim, dim))
    return SymMatrix.from_full(0.5 * (a + a.T))


def suite_operators(seed: int = 0, count: int = 1000) -> SuiteReport:
    """Homogeneity, the two chain inequalities, duality, trace degeneracy
    and rotation invariance on random symmetric matrices of dim <= 6."""
    rep = SuiteReport("operators")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    for k in range(count):
        dim = int(rng.integers(2, 7))
        lam = 0.5 + rng.random()
        ell = Ellipticity(lam, lam + 2.0 * rng.random(), dim)
        m = _random_sym(rng, dim)
        nmat = _random_sym(rng, dim)
        plus = OperatorSign.PLUS
        minus = OperatorSign.MINUS
        mp, mm = pucci_eval(m, ell, plus), pucci_eval(m, ell, minus)
        scale = max(1.0, abs(mp), abs(mm))
        for alpha in (0.0, 0.5, 2.0, 10.0):
            got = pucci_eval(alpha * m, ell, plus)
            err = abs(got - alpha * mp) / max(1.0, abs(alpha * mp))
            rep.record(err <= 1e-12, err, f"case {k}: homogeneity alpha={alpha} err={err:.2e}")
        np_plus = pucci_eval(nmat, ell, plus)
        np_minus = pucci_eval(nmat, ell, minus)
        both = pucci_eval(m + nmat, ell, plus)
        slack = 1e-10 * max(1.0, abs(both), abs(mp) + abs(np_plus))
        ok = (mp + np_minus <= both + slack) and (both <= mp + np_plus + slack)
        rep.record(ok, max(mp + np_minus - both, both - mp - np_plus, 0.0),
                   f"case {k}: chain inequality (plus) violated")
        both_m = pucci_eval(m + nmat, ell, minus)
        ok = (mm + np_minus <= both_m + slack) and (both_m <= mp + np_minus + slack)
        rep.record(ok, max(mm + np_minus - both_m, both_m - mp - np_minus, 0.0),
                   f"case {k}: chain inequality (minus) violated")
        dual = abs(mm + pucci_eval(-1.0 * m, ell, plus)) / scale
        rep.record(dual <= 1e-12, dual, f"case {k}: duality err={dual:.2e}")
        ell_eq = Ellipticity(lam, lam, dim)
        tr = lam * float(np.trace(m.to_full()))
        terr = abs(pucci_eval(m, ell_eq, plus) - tr) / max(1.0, abs(tr))
        rep.record(terr <= 1e-10, terr, f"case {k}: trace degeneracy err={terr:.2e}")
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        rotated = SymMatrix.from_full(q.T @ m.to_full() @ q)
        rerr = abs(pucci_eval(rotated, ell, plus) - mp) / scale
        rep.record(rerr <= 1e-9, rerr, f"case {k}: rotation invariance err={rerr:.2e}")
    rep.duration_s = time.perf_counter() - t0
    return rep


def suite_lemma21(seed: int = 0, count: int = 1000) -> SuiteReport:
    """Change-of-variables identity for phi(t) = exp(c t) - 1 and its
    sandwich inequalities, on random (matrix, gradient, c) triples."""
    rep = SuiteReport("lemma21")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    plus, minus = OperatorSign.PLUS, OperatorSign.MINUS
    for k in range(count):
        dim = int(rng.integers(2, 7))
        lam = 0.5 + rng.random()
        ell = Ellipticity(lam, lam + 2.0 * rng.random(), dim)
        m = _random_sym(rng, dim)
        xi = rng.standard_normal(dim)
        c = 0.1 + 1.9 * rng.random()
        u = 2.0 * rng.random()
        dphi = c * math.exp(c * u)
        ddphi = c * c * math.exp(c * u)
        grad = outer(xi)
        inner = dphi * m + ddphi * grad
        for sign in (plus, minus):
            lhs = pucci_eval(inner, ell, sign) / dphi
            rhs = pucci_eval(m + c * grad, ell, sign)
            err = abs(lhs - rhs) / max(1.0, abs(rhs))
            rep.record(err <= 1e-10, err, f"case {k}: identity ({sign.value}) err={err:.2e}")
        xi2 = float(xi @ xi)
        lhs_p = pucci_eval(dphi * m + ddphi * grad, ell, plus) / dphi
        low = pucci_eval(m, ell, plus) + c * ell.lam * xi2
        high = pucci_eval(m, ell, plus) + c * ell.Lam * xi2
        slack = 1e-10 * max(1.0, abs(low), abs(high))
        rep.record(low - slack <= lhs_p <= high + slack,
                   max(low - lhs_p, lhs_p - high, 0.0),
                   f"case {k}: plus sandwich violated")
        lhs_m = pucci_eval(dphi * m + ddphi * grad, ell, minus) / dphi
        low_m = pucci_eval(m, ell, minus) + c * ell.lam * xi2
        high_m = pucci_eval(m, ell, minus) + c * ell.Lam * xi2
        rep.record(low_m - slack <= lhs_m <= high_m + slack,
                   max(low_m - lhs_m, lhs_m - high_m, 0.0),
                   f"case {k}: minus sandwich violated")
    rep.duration_s = time.perf_counter() - t0
    return rep


def suite_transform(seed: int = 0, count: int = 100) -> SuiteReport:
    """Roundtrips, closed-form transformed sources, and table determinism
    across the whole pair registry."""
    rep = SuiteReport("transform")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    for name, params in CANONICAL_PAIR_PARAMS.items():
        pair = builtin_pair(name, params)
        for s in np.linspace(0.0, 10.0, 21):
            v = transform.compute_phi(pair, float(s))
            back = transform.invert_phi(pair, v)
            err = abs(back - s) / max(1.0, s)
            rep.record(err <= 1e-8, err, f"{name}: roundtrip at s={s:.2f} err={err:.2e}")
        first = transform.TransformTable(pair)
        rebuilt = transform.TransformTable(pair)
        same = (np.array_equal(first.t_grid, rebuilt.t_grid)
                and np.array_equal(first.phi_grid, rebuilt.phi_grid))
        rep.record(same, 0.0 if same else 1.0, f"{name}: table rebuild not bit-identical")
    closed_forms = [
        ("exp-one", {"a": 1.0, "p": 2.0}, lambda s: s ** 2),
        ("regular-log", {"p": 1.5}, lambda s: s ** 1.5),
        ("proto-uniq", {"p": 3.0}, lambda s: -s + s ** 3),
    ]
    for name, params, ref in closed_forms:
        pair = builtin_pair(name, params)
        for s in 0.1 + 2.9 * rng.random(20):
            got = transform.transformed_h(pair, float(s))
            err = abs(got - ref(s)) / max(1.0, abs(ref(s)))
            rep.record(err <= 1e-7, err, f"{name}: h({s:.3f}) err={err:.2e}")
    _ = count
    rep.duration_s = time.perf_counter() - t0
    return rep


def suite_radial(seed: int = 0, count: int = 1000) -> SuiteReport:
    """Radial reduction vs the matrix operator, weighting roundtrips, and a
    linear-shot oracle with a known first zero."""
    rep = SuiteReport("radial")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    for k in range(count):
        dim = int(rng.integers(2, 7))
        lam = 0.5 + rng.random()
        ell = Ellipticity(lam, lam + 2.0 * rng.random(), dim)
        sign = OperatorSign.PLUS if rng.random() < 0.5 else OperatorSign.MINUS
        up = rng.standard_normal()
        upp = rng.standard_normal()
        r = 0.1 + 2.0 * rng.random()
        direct = pucci_radial_eval(up, upp, r, ell, sign)
        diag = SymMatrix.from_full(np.diag([upp] + [up / r] * (dim - 1)))
        err = abs(direct - pucci_eval(diag, ell, sign)) / max(1.0, abs(direct))
        rep.record(err <= 1e-12, err, f"case {k}: radial consistency err={err:.2e}")
        tval = 20.0 * (rng.random() - 0.5)
        round_err = abs(weight_1d(invert_pucci_1d(tval, ell, sign), ell, sign) - tval)
        rep.record(round_err <= 1e-14 * max(1.0, abs(tval)), round_err,
                   f"case {k}: weighting roundtrip err={round_err:.2e}")
    ell = Ellipticity(1.0, 1.0, 3)
    traj = integrate_shoot(ShootConfig(LinearSource(1.0), ell, OperatorSign.PLUS, 1.0, 10.0))
    err = abs(traj.terminal.r - math.pi)
    rep.record(traj.terminal.kind == "crossed" and err <= 1e-6, err,
               f"linear-shot zero at {traj.terminal.r!r}, expected pi")
    spec = eigenvalues_sym(SymMatrix.from_full(np.diag([3.0, 1.0, 2.0])))
    rep.record(spec.eigenvalues == (1.0, 2.0, 3.0), 0.0, "diagonal spectrum mismatch")
    rep.duration_s = time.perf_counter() - t0
    return rep


SUITES = {
    "operators": suite_operators,
    "lemma21": suite_lemma21,
    "transform": suite_transform,
    "radial": suite_radial,
}


def run_suites(names, seed: int = 0, count: int = 1000) -> list:
    reports = []
    for name in names:
        reports.append(SUITES[name](seed=seed, count=count))
    return reports
