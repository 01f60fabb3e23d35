"""Brackets built from tensor data, their defining identities, and the
fixed-entry contractions relating higher brackets to Jacobi pairs."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import ONE, ZERO, SampleBox, ScalarExpr, max_residual, var
from .multivector import (
    MultiVectorField,
    apply,
    contract_functions,
    d,
    sn_bracket,
    wedge,
    zero_field,
)

KINDS = ("poisson", "jacobi", "np", "nj", "gp", "gj")
JACOBI_TYPE = ("jacobi", "nj", "gj")


class StructureError(ValueError):
    pass


@dataclass(frozen=True)
class StructureCandidate:
    """A tensor (or tensor pair) tagged with the structure it claims to be."""

    kind: str
    eta: MultiVectorField
    companion: MultiVectorField | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StructureError(f"unknown kind {self.kind!r}")
        k = self.eta.order
        if self.kind in ("poisson", "jacobi") and k != 2:
            raise StructureError(f"{self.kind} needs a bivector, got order {k}")
        if self.kind in ("np", "nj") and k < 2:
            raise StructureError("Nambu kinds need order >= 2")
        if self.kind in ("gp", "gj") and (k < 2 or k % 2):
            raise StructureError("generalized kinds need an even order >= 2")
        if self.kind in JACOBI_TYPE:
            if self.companion is None:
                raise StructureError(f"{self.kind} needs a companion field")
            if self.companion.order != k - 1:
                raise StructureError(f"companion must have order {k - 1}")
            if self.companion.dim != self.eta.dim:
                raise StructureError("companion lives on a different chart")
        elif self.companion is not None:
            raise StructureError(f"{self.kind} takes no companion")

    @property
    def order(self):
        return self.eta.order

    @property
    def dim(self):
        return self.eta.dim

    @property
    def jacobi_type(self):
        return self.kind in JACOBI_TYPE


class Bracket:
    """k-ary bracket {F_1..F_k} = eta(dF_1..dF_k) + sum_i (-1)^(i+1) F_i E(dF_1..^i..dF_k)."""

    def __init__(self, eta, companion=None):
        self.eta = eta
        self.companion = companion if companion is not None and not companion.is_zero else None
        self.arity = eta.order
        self.dim = eta.dim

    def __call__(self, *fs):
        if len(fs) != self.arity:
            raise ValueError(f"bracket takes {self.arity} arguments, got {len(fs)}")
        fs = [ScalarExpr.coerce(f) for f in fs]
        ds = [d(f, self.dim) for f in fs]
        val = apply(self.eta, *ds)
        if self.companion is not None:
            for i, f in enumerate(fs):
                if f.is_zero:
                    continue
                term = f * apply(self.companion, *(ds[:i] + ds[i + 1:]))
                val = val + term if i % 2 == 0 else val - term
        return val


def make_bracket(c):
    return Bracket(c.eta, c.companion)


# ---------------------------------------------------------------- reports

@dataclass
class IdentityResult:
    passed: bool
    max_residual: float
    witness: dict | None = None

    def to_json(self):
        out = {"pass": bool(self.passed), "max_residual": float(self.max_residual)}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class VerificationReport:
    results: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(r.passed for r in self.results.values())

    def __bool__(self):
        return self.passed

    def add(self, name, result):
        self.results[name] = result

    def extend(self, other, prefix=""):
        for name, r in other.results.items():
            self.results[prefix + name] = r

    def failures(self):
        return {n: r for n, r in self.results.items() if not r.passed}

    def to_json(self):
        return {name: self.results[name].to_json() for name in sorted(self.results)}


def check_zero(items, box):
    """Residual of expressions that should vanish.

    ``items`` is a list of (label, ScalarExpr | MultiVectorField).  Fails
    carry the worst sample point and the label of the offending component.
    """
    exprs, labels = [], []
    for label, obj in items:
        if isinstance(obj, MultiVectorField):
            for idx, c in obj.items():
                exprs.append(c)
                labels.append(f"{label}[{','.join(str(i + 1) for i in idx)}]")
        else:
            exprs.append(ScalarExpr.coerce(obj))
            labels.append(label)
    res, pt, j = max_residual(exprs, box)
    passed = res <= box.tol
    witness = None
    if not passed:
        witness = {"point": [float(v) for v in pt], "component": labels[j]}
    return IdentityResult(passed, res, witness)


# ---------------------------------------------------------------- function family

def _monomials(dim, degree):
    out = [ONE]
    for deg in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(dim), deg):
            m = ONE
            for i in combo:
                m = m * var(i)
            out.append(m)
    return out


@dataclass
class FunctionFamily:
    """Finite stand-in for "all smooth functions": a fixed base list plus
    ``n_random`` seeded polynomials of degree <= ``degree``."""

    base: list
    dim: int
    n_random: int = 8
    degree: int = 2
    seed: int = 0

    def __post_init__(self):
        if not self.base and self.n_random == 0:
            raise ValueError("function family is empty")

    @classmethod
    def standard(cls, dim, n_random=8, degree=2, seed=0):
        return cls(_monomials(dim, degree), dim, n_random, degree, seed)

    def random_members(self):
        rng = np.random.default_rng([self.seed, 7919])
        monos = _monomials(self.dim, self.degree)
        out = []
        for _ in range(self.n_random):
            coefs = rng.integers(-3, 4, size=len(monos))
            if not coefs.any():
                coefs[-1] = 1
            f = ZERO
            for c, m in zip(coefs.tolist(), monos):
                if c:
                    f = f + m.scale(c)
            out.append(f)
        return out

    @property
    def members(self):
        return list(self.base) + self.random_members()

    def coordinates(self):
        return [var(i) for i in range(self.dim)]

    def tuples(self, size, limit, seed_offset=0):
        """Deterministic selection of ``size``-tuples of distinct members.

        All tuples are returned when there are at most ``limit`` of them;
        otherwise coordinate tuples come first, then random picks weighted
        toward the random polynomials.
        """
        members = self.members
        if size == 0:
            return [()]
        total = math.comb(len(members), size)
        if limit is None or total <= limit:
            return list(itertools.combinations(members, size))
        rng = np.random.default_rng([self.seed, 104729, size, seed_offset])
        out = []
        coords = self.coordinates()
        for combo in itertools.combinations(coords, size):
            if len(out) >= limit // 3:
                break
            out.append(combo)
        rand = self.random_members()
        pool = rand + list(self.base)
        while len(out) < limit:
            picks = rng.choice(len(pool), size=size, replace=False)
            out.append(tuple(pool[i] for i in picks))
        return out


# ---------------------------------------------------------------- identities

def poisson_residual(L):
    return sn_bracket(L, L)


def jacobi_residuals(L, Z):
    """[L,L] + 2 Z^L and [Z,L]; both vanish for a Jacobi pair."""
    return {"sn_self": sn_bracket(L, L) + wedge(Z, L) * 2, "sn_mixed": sn_bracket(Z, L)}


def gj_residuals(eta, E):
    p = eta.order // 2
    return {"sn_self": sn_bracket(eta, eta) + wedge(E, eta) * (2 * (2 * p - 1)),
            "sn_mixed": sn_bracket(eta, E)}


def fundamental_identity_residual(br, *fs):
    """LHS - RHS of {F_1..F_{k-1},{F_k..F_{2k-1}}} = sum_j {F_k,..,{F_1..F_{k-1},F_j},..,F_{2k-1}}."""
    k = br.arity
    if len(fs) != 2 * k - 1:
        raise ValueError(f"fundamental identity needs {2 * k - 1} functions, got {len(fs)}")
    head, tail = list(fs[:k - 1]), list(fs[k - 1:])
    lhs = br(*head, br(*tail))
    rhs = ZERO
    for j in range(k):
        inner = br(*head, tail[j])
        rhs = rhs + br(*(tail[:j] + [inner] + tail[j + 1:]))
    return lhs - rhs


def first_order_residual(br, h, f1, *rest):
    """{H F_1, F_2..} - H{F_1,..} - {H,F_2..} F_1 + H F_1 {1,F_2..}."""
    h, f1 = ScalarExpr.coerce(h), ScalarExpr.coerce(f1)
    return (br(h * f1, *rest) - h * br(f1, *rest) - br(h, *rest) * f1
            + h * f1 * br(ONE, *rest))


# ---------------------------------------------------------------- cascades

def _companion_or_zero(eta, E):
    return E if E is not None else zero_field(eta.dim, eta.order - 1)


def contract_step(eta, E, f):
    """Fix the last entry of the bracket of (eta, E) to ``f``.

    Returns (i_{df} eta + (-1)^(k+1) f E, i_{df} E).
    """
    k = eta.order
    E = _companion_or_zero(eta, E)
    f = ScalarExpr.coerce(f)
    new_eta = contract_functions(eta, [f])
    if not E.is_zero:
        new_eta = new_eta + E * (f if (k + 1) % 2 == 0 else -f)
    new_E = contract_functions(E, [f]) if E.order >= 1 else zero_field(eta.dim, 0)
    return new_eta, new_E


def cascade_stepwise(eta, E, fixers):
    """Fix F_k, then F_{k-1}, ..., then F_3, one entry at a time."""
    fixers = list(fixers)
    if len(fixers) != eta.order - 2:
        raise ValueError(f"need {eta.order - 2} fixers, got {len(fixers)}")
    E = _companion_or_zero(eta, E)
    for f in reversed(fixers):
        eta, E = contract_step(eta, E, f)
    return eta, E


def cascade_contract(eta, E, fixers):
    """Closed form of fixing entries 3..k of the bracket of (eta, E).

    Lambda = i_{dF_3^..^dF_k} eta
             + sum_{j=0}^{k-3} (-1)^(k+1-j) F_{k-j} i_{dF_3^..^dF_{k-j}-hat..^dF_k} E
    Z      = i_{dF_3^..^dF_k} E
    """
    fixers = [ScalarExpr.coerce(f) for f in fixers]
    k = eta.order
    if len(fixers) != k - 2:
        raise ValueError(f"need {k - 2} fixers, got {len(fixers)}")
    E = _companion_or_zero(eta, E)
    lam = contract_functions(eta, fixers)
    if not E.is_zero:
        for j in range(k - 2):
            # fixers[i] holds F_{i+3}; F_{k-j} sits at position k-3-j
            pos = k - 3 - j
            others = fixers[:pos] + fixers[pos + 1:]
            term = contract_functions(E, others) * fixers[pos]
            lam = lam + (term if (k + 1 - j) % 2 == 0 else -term)
    Z = contract_functions(E, fixers)
    return lam, Z


# ---------------------------------------------------------------- bi-Hamiltonian splitting

@dataclass
class FixedEntries:
    lambda1: MultiVectorField
    lambda2: MultiVectorField
    report: VerificationReport


def fix_entries(eta, h1, h2, box=None):
    """Split a 3-vector into Lambda1 = -i_{dH1} eta and Lambda2 = i_{dH2} eta."""
    if eta.order != 3:
        raise StructureError("fix_entries needs a 3-vector")
    box = box or SampleBox.cube(eta.dim)
    l1 = -contract_functions(eta, [h1])
    l2 = contract_functions(eta, [h2])
    rep = VerificationReport()
    rep.add("lambda1.poisson", check_zero([("[L1,L1]", sn_bracket(l1, l1))], box))
    rep.add("lambda2.poisson", check_zero([("[L2,L2]", sn_bracket(l2, l2))], box))
    rep.add("compatibility", check_zero([("[L1,L2]", sn_bracket(l1, l2))], box))
    return FixedEntries(l1, l2, rep)


def nj3_jacobi_pairs(eta, E, h1, h2):
    """Jacobi pairs of a 3-bracket with one entry fixed.

    {F,G}^1 = {F,H1,G} and {F,G}^2 = {F,G,H2}, i.e.
    (L1, Z1) = (-i_{dH1} eta - H1 E, -i_{dH1} E),
    (L2, Z2) = ( i_{dH2} eta + H2 E,  i_{dH2} E).
    """
    if eta.order != 3:
        raise StructureError("needs a 3-vector")
    E = _companion_or_zero(eta, E)
    h1, h2 = ScalarExpr.coerce(h1), ScalarExpr.coerce(h2)
    l1 = -contract_functions(eta, [h1]) - E * h1
    z1 = -contract_functions(E, [h1])
    l2 = contract_functions(eta, [h2]) + E * h2
    z2 = contract_functions(E, [h2])
    return (l1, z1), (l2, z2)


def compatibility_residuals(p1, p2):
    """Compatibility of two Jacobi pairs.

    Adding the two pairs gives a Jacobi pair exactly when the cross terms of
    [L,L] + 2 Z^L and [Z,L] cancel:
        [L1,L2] + Z1^L2 + Z2^L1 = 0,   [Z1,L2] + [Z2,L1] = 0.
    """
    (l1, z1), (l2, z2) = p1, p2
    return {"bivector": sn_bracket(l1, l2) + wedge(z1, l2) + wedge(z2, l1),
            "vector": sn_bracket(z1, l2) + sn_bracket(z2, l1)}


def compatibility_report(p1, p2, box):
    rep = VerificationReport()
    for name, r in compatibility_residuals(p1, p2).items():
        rep.add(f"compatibility.{name}", check_zero([(name, r)], box))
    (l1, z1), (l2, z2) = p1, p2
    summed = jacobi_residuals(l1 + l2, z1 + z2)
    rep.add("compatibility.sum_is_jacobi",
            check_zero([(n, r) for n, r in summed.items()], box))
    return rep


# ---------------------------------------------------------------- verify

def _jacobi_pair_report(L, Z, box, prefix):
    rep = VerificationReport()
    for name, r in jacobi_residuals(L, Z).items():
        rep.add(f"{prefix}{name}", check_zero([(name, r)], box))
    return rep


def verify(c, fam=None, box=None, max_tuples=24, fi_tuples=None):
    """Check every defining identity of the candidate's kind.

    Failures are definitive and carry a witness.  A pass is probabilistic:
    universally quantified conditions are tested over ``fam`` and sample
    points of ``box`` only.
    """
    box = box or SampleBox.cube(c.dim)
    fam = fam or FunctionFamily.standard(c.dim, seed=box.seed)
    rep = VerificationReport()
    k = c.order
    if c.kind == "poisson":
        rep.add("poisson.sn_self", check_zero([("[L,L]", poisson_residual(c.eta))], box))
    elif c.kind == "jacobi":
        rep.extend(_jacobi_pair_report(c.eta, c.companion, box, "jacobi."))
    elif c.kind == "gp":
        rep.add("gp.sn_self", check_zero([("[eta,eta]", sn_bracket(c.eta, c.eta))], box))
    elif c.kind == "gj":
        for name, r in gj_residuals(c.eta, c.companion).items():
            rep.add(f"gj.{name}", check_zero([(name, r)], box))
    elif c.kind == "np":
        if k == 2:
            rep.add("np.sn_self", check_zero([("[L,L]", poisson_residual(c.eta))], box))
        else:
            items = []
            for fixers in fam.tuples(k - 2, max_tuples):
                lam = contract_functions(c.eta, fixers)
                items.append((f"fixers{_label(fixers)}", sn_bracket(lam, lam)))
            rep.add("np.contraction_poisson", check_zero(items, box))
    elif c.kind == "nj":
        if k == 2:
            rep.extend(_jacobi_pair_report(c.eta, c.companion, box, "nj.cascade_"))
        else:
            selves, mixed = [], []
            for fixers in fam.tuples(k - 2, max_tuples):
                lam, z = cascade_contract(c.eta, c.companion, fixers)
                res = jacobi_residuals(lam, z)
                selves.append((f"fixers{_label(fixers)}", res["sn_self"]))
                mixed.append((f"fixers{_label(fixers)}", res["sn_mixed"]))
            rep.add("nj.cascade_sn_self", check_zero(selves, box))
            rep.add("nj.cascade_sn_mixed", check_zero(mixed, box))
    if c.kind in ("np", "nj"):
        br = make_bracket(c)
        n_fi = fi_tuples if fi_tuples is not None else (6 if k <= 3 else 2)
        items = []
        for fs in _fi_inputs(fam, k, n_fi):
            items.append((f"functions{_label(fs)}", fundamental_identity_residual(br, *fs)))
        rep.add(f"{c.kind}.fundamental_identity", check_zero(items, box))
    if c.jacobi_type and c.kind != "jacobi" or c.kind == "jacobi":
        br = make_bracket(c)
        items = []
        rand = fam.random_members()
        pool = rand if rand else fam.members
        for j in range(min(3, len(pool))):
            h, f1 = pool[j], pool[(j + 1) % len(pool)]
            rest = [pool[(j + 2 + i) % len(pool)] for i in range(k - 1)]
            items.append((f"case{j}", first_order_residual(br, h, f1, *rest)))
        rep.add(f"{c.kind}.first_order_operator", check_zero(items, box))
    return rep


def _fi_inputs(fam, k, count):
    """Function tuples for sampled fundamental-identity checks."""
    rng = np.random.default_rng([fam.seed, 15485863, k])
    coords = fam.coordinates()
    rand = fam.random_members()
    out = []
    if len(coords) >= 2 * k - 1:
        out.append(tuple(coords[:2 * k - 1]))
    pool = coords + rand
    while len(out) < count:
        picks = rng.choice(len(pool), size=2 * k - 1, replace=len(pool) < 2 * k - 1)
        out.append(tuple(pool[i] for i in picks))
    return out[:count]


def _label(fs):
    return "(" + "; ".join(str(f) for f in fs) + ")"
