"""Hamiltonian vector fields, RK4 flows and the dynamical laws checked along them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import (
    ZERO,
    EvaluationError,
    SampleBox,
    ScalarExpr,
    compile_exprs,
    evaluate_batch,
)
from .multivector import (
    apply,
    contract_functions,
    d,
    lie_derivative,
    sn_bracket,
    zero_field,
)
from .structures import (
    Bracket,
    IdentityResult,
    check_zero,
    nj3_jacobi_pairs,
)

CONSERVATIVE = ("poisson", "np", "gp")


class BlowUp(EvaluationError):
    pass


@dataclass
class HamiltonianSystem:
    """A structure (candidate or glued pair) together with its Hamiltonians."""

    structure: object
    hamiltonians: list
    box: SampleBox | None = None

    def __post_init__(self):
        self.hamiltonians = [ScalarExpr.coerce(h) for h in self.hamiltonians]
        need = self.eta.order - 1
        if len(self.hamiltonians) != need:
            raise ValueError(f"{self.kind} of order {self.eta.order} needs {need} Hamiltonians, "
                             f"got {len(self.hamiltonians)}")
        for h in self.hamiltonians:
            if h.max_index() >= self.dim:
                raise ValueError("Hamiltonian uses coordinates outside the chart")
        if self.box is None:
            self.box = SampleBox.cube(self.dim)

    @property
    def eta(self):
        return self.structure.eta

    @property
    def companion(self):
        c = self.structure.companion
        return c if c is not None else zero_field(self.dim, self.eta.order - 1)

    @property
    def kind(self):
        return self.structure.kind

    @property
    def dim(self):
        return self.eta.dim

    @property
    def conservative(self):
        return self.kind in CONSERVATIVE or self.companion.is_zero

    def bracket(self):
        return Bracket(self.eta, self.structure.companion)


def nambu_jacobi_field(eta, E, hs):
    """i_{dH_1^..^dH_{k-1}} eta + sum_i (-1)^i H_i i_{dH_1^..^dH_i-hat..} E."""
    X = contract_functions(eta, hs)
    if E is not None and not E.is_zero:
        for i, h in enumerate(hs, start=1):
            if h.is_zero:
                continue
            term = contract_functions(E, hs[:i - 1] + hs[i:]) * h
            X = X - term if i % 2 else X + term
    return X


def hamiltonian_vector_field(sys):
    return nambu_jacobi_field(sys.eta, sys.structure.companion, sys.hamiltonians)


def expected_rates(sys):
    """Symbolic dH_i/dt along the flow; only the companion part survives."""
    X = hamiltonian_vector_field(sys)
    return [apply(X, d(h, sys.dim)) for h in sys.hamiltonians]


# ---------------------------------------------------------------- integration

@dataclass
class Trajectory:
    t0: float
    h: float
    states: np.ndarray
    blew_up: bool = False

    @property
    def count(self):
        return len(self.states)

    @property
    def times(self):
        return self.t0 + self.h * np.arange(self.count)

    def to_csv(self, fh=None):
        out = fh or io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        n = self.states.shape[1]
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)])
        for t, row in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        return out.getvalue() if fh is None else None


def integrate(sys, x0, t_end, h, t0=0.0):
    """Classical fixed-step RK4.

    The step is shrunk to the largest value <= ``h`` that divides the time
    span evenly, so the last state sits exactly at ``t_end``.  A non-finite
    state stops the run and the trajectory is returned truncated with
    ``blew_up`` set.
    """
    if not h > 0:
        raise ValueError("step must be positive")
    x = np.asarray(x0, dtype=float)
    if x.shape != (sys.dim,):
        raise ValueError(f"initial point must have {sys.dim} entries")
    X = hamiltonian_vector_field(sys)
    fn = compile_exprs([X[(i,)] for i in range(sys.dim)])

    def f(y):
        try:
            return np.array(fn(y, math.exp), dtype=float)
        except (ZeroDivisionError, OverflowError) as err:
            raise BlowUp(f"vector field failed at {list(y)}") from err

    span = float(t_end) - float(t0)
    if span < 0:
        raise ValueError("t_end precedes the start time")
    steps = max(int(math.ceil(span / h - 1e-9)), 0)
    if steps:
        h = span / steps
    out = np.empty((steps + 1, sys.dim))
    out[0] = x
    # overflow is detected below, so numpy need not warn about it
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(steps):
            try:
                k1 = f(x)
                k2 = f(x + 0.5 * h * k1)
                k3 = f(x + 0.5 * h * k2)
                k4 = f(x + h * k3)
            except BlowUp:
                return Trajectory(t0, h, out[:j + 1], blew_up=True)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(x)):
                return Trajectory(t0, h, out[:j + 1], blew_up=True)
            out[j + 1] = x
    return Trajectory(t0, h, out)


# ---------------------------------------------------------------- diagnostics

@dataclass
class LawResult:
    passed: bool
    max_residual: float
    worst_index: int | None = None
    informational: bool = False

    def to_json(self):
        out = {"pass": bool(self.passed), "max_residual": float(self.max_residual)}
        if self.worst_index is not None:
            out["worst_index"] = int(self.worst_index)
        if self.informational:
            out["informational"] = True
        return out


@dataclass
class DiagnosticsReport:
    laws: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(r.passed for r in self.laws.values() if not r.informational)

    def __bool__(self):
        return self.passed

    def add(self, name, result):
        self.laws[name] = result

    def to_json(self):
        return {name: self.laws[name].to_json() for name in sorted(self.laws)}


def _law_from_identity(r: IdentityResult, informational=False):
    return LawResult(r.passed, r.max_residual, None, informational)


def _trajectory_law(values, tol):
    values = np.abs(np.asarray(values, dtype=float))
    if values.size == 0:
        return LawResult(True, 0.0)
    j = int(np.argmax(values))
    res = float(values[j])
    ok = res <= tol
    return LawResult(ok, res, None if ok else j)


def _eval_along(exprs, states):
    return evaluate_batch(exprs, states)


@dataclass
class DiagnosticsConfig:
    rate_tol_conservative: float = 1e-6
    rate_tol_dissipative: float = 1e-5
    drift_tol: float = 1e-6
    agreement_tol: float = 1e-10
    agreement_samples: int = 100
    symbolic_tol: float = 1e-9


def run_diagnostics(sys, traj, functions=None, pair=None, config=None):
    """Check the dynamical laws that apply to ``sys`` along ``traj``.

    ``functions`` is a tuple of arity-many functions for the bracket
    conservation law; ``pair`` is two functions for the homomorphism law.
    """
    cfg = config or DiagnosticsConfig()
    rep = DiagnosticsReport()
    box = sys.box.replace(tol=cfg.symbolic_tol)
    states = traj.states
    hs = sys.hamiltonians
    X = hamiltonian_vector_field(sys)
    br = sys.bracket()
    k = sys.eta.order

    # (a) energy balance by centered differences
    if len(states) >= 3:
        hv = _eval_along(hs, states)
        fd = (hv[:, 2:] - hv[:, :-2]) / (2 * traj.h)
        if sys.conservative:
            for i in range(len(hs)):
                rep.add(f"energy.H{i + 1}.rate", _shift(_trajectory_law(fd[i], cfg.rate_tol_conservative), 1))
                # relative drift, absolute when the initial value vanishes
                drift = hv[i] - hv[i, 0]
                if hv[i, 0] != 0:
                    drift = drift / abs(hv[i, 0])
                rep.add(f"energy.H{i + 1}.drift", _trajectory_law(drift, cfg.drift_tol))
        else:
            rates = _eval_along(expected_rates(sys), states[1:-1])
            for i in range(len(hs)):
                rep.add(f"energy.H{i + 1}.dissipation",
                        _shift(_trajectory_law(fd[i] - rates[i], cfg.rate_tol_dissipative), 1))
    rates = expected_rates(sys)
    if sys.conservative:
        rep.add("symbolic.first_integrals",
                _law_from_identity(check_zero([(f"X(H{i + 1})", r) for i, r in enumerate(rates)], box)))
    elif k == 2:
        h = hs[0]
        Z = sys.companion
        law = rates[0] + h * apply(Z, d(h, sys.dim))
        rep.add("symbolic.dissipation", _law_from_identity(check_zero([("X_H(H)+H Z(H)", law)], box)))

    # (b) bracket conservation
    if functions is not None and sys.conservative:
        fs = [ScalarExpr.coerce(f) for f in functions]
        if len(fs) != k:
            raise ValueError(f"bracket conservation needs {k} functions")
        g = br(*fs)
        dg = apply(X, d(g, sys.dim))
        rhs = ZERO
        for i in range(k):
            xf = apply(X, d(fs[i], sys.dim))
            rhs = rhs + br(*(fs[:i] + [xf] + fs[i + 1:]))
        rep.add("bracket_conservation.symbolic",
                _law_from_identity(check_zero([("X{F}-sum{..X(F_i)..}", dg - rhs)], box)))
        integrals = all(apply(X, d(f, sys.dim)).is_zero for f in fs)
        if integrals:
            gv = _eval_along([g], states)[0]
            rep.add("bracket_conservation.trajectory", _trajectory_law(gv - gv[0], cfg.drift_tol))

    # (c) homomorphism
    if pair is not None and k == 2:
        f1, f2 = (ScalarExpr.coerce(f) for f in pair)
        xf = nambu_jacobi_field(sys.eta, sys.structure.companion, [f1])
        xh = nambu_jacobi_field(sys.eta, sys.structure.companion, [f2])
        xfh = nambu_jacobi_field(sys.eta, sys.structure.companion, [br(f1, f2)])
        rep.add("homomorphism", _law_from_identity(check_zero([("[X_F,X_H]+X_{F,H}", sn_bracket(xf, xh) + xfh)], box)))

    # (d) preservation and mutual consistency
    if k >= 3:
        if sys.companion.is_zero:
            rep.add("preservation", _law_from_identity(
                check_zero([("L_X eta", lie_derivative(X, sys.eta))], box)))
        else:
            E = sys.companion
            xe = contract_functions(E, hs[:k - 2])
            rep.add("consistency.eta", _law_from_identity(
                check_zero([("L_XE eta", lie_derivative(xe, sys.eta))], box)))
            xeta = contract_functions(sys.eta, hs)
            val = apply(E, *[d(h, sys.dim) for h in hs])
            rhs = contract_functions(sys.eta, [val])
            if (k - 1) % 2:
                rhs = -rhs
            rep.add("consistency.companion", _law_from_identity(
                check_zero([("L_Xeta E - rhs", lie_derivative(xeta, E) - rhs)], box)))

    # (e) bi-Hamiltonian agreement for order-3 structures
    if k == 3:
        (l1, z1), (l2, z2) = nj3_jacobi_pairs(sys.eta, sys.structure.companion, hs[0], hs[1])
        h1, h2 = hs
        x2 = nambu_jacobi_field(l2, z2, [h1])
        x1 = nambu_jacobi_field(l1, z1, [h2])
        rep.add("bi_hamiltonian.symbolic", _law_from_identity(
            check_zero([("X - X2", X - x2), ("X - X1", X - x1)], box)))
        idx = np.linspace(0, len(states) - 1, min(cfg.agreement_samples, len(states))).astype(int)
        pts = states[idx]
        comps = [x2[(i,)] for i in range(sys.dim)] + [x1[(i,)] for i in range(sys.dim)]
        vals = _eval_along(comps, pts)
        diff = np.abs(vals[:sys.dim] - vals[sys.dim:]).max(axis=0)
        law = _trajectory_law(diff, cfg.agreement_tol)
        if law.worst_index is not None:
            law.worst_index = int(idx[law.worst_index])
        rep.add("bi_hamiltonian.pointwise", law)
    return rep


def _shift(law, offset):
    if law.worst_index is not None:
        law.worst_index += offset
    return law


def involutivity_residual(eta, hs, fs):
    """[X_H, X_F] - (-1)^(k-1) sum_i X_{F_1,..,{H_1..H_{k-1},F_i},..,F_{k-1}} for a Nambu tensor."""
    k = eta.order
    br = Bracket(eta)
    hs = [ScalarExpr.coerce(h) for h in hs]
    fs = [ScalarExpr.coerce(f) for f in fs]
    lhs = sn_bracket(contract_functions(eta, hs), contract_functions(eta, fs))
    rhs = zero_field(eta.dim, 1)
    for i in range(k - 1):
        inner = br(*hs, fs[i])
        rhs = rhs + contract_functions(eta, fs[:i] + [inner] + fs[i + 1:])
    return lhs - rhs if (k - 1) % 2 == 0 else lhs + rhs


def involutivity_report(eta, hs, fs, box):
    rep = DiagnosticsReport()
    r = check_zero([("involutivity", involutivity_residual(eta, hs, fs))], box)
    rep.add("involutivity", LawResult(r.passed, r.max_residual, None, informational=True))
    return rep
