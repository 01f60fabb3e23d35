"""Symbolic scalar fields on a coordinate chart.

A ``ScalarExpr`` is stored in an exp-polynomial normal form: a sum of terms
``c * prod(x_i^p_i) * exp(a) / prod(D_j^q_j)`` where ``a`` and the ``D_j`` are
themselves ``ScalarExpr`` values.  Like terms combine on construction, so many
identities cancel to the literal zero; whatever does not cancel is decided by
randomized point evaluation (``equal_probabilistic``).
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

# relative size below which the sum of two coefficients counts as cancelled
_CANCEL = 64 * np.finfo(float).eps


class ExprError(ValueError):
    pass


class ExprParseError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class ExprSyntaxError(ExprParseError):
    pass


class UnknownIdentifierError(ExprParseError):
    pass


class NegativeExponentError(ExprParseError):
    pass


class EvaluationError(ArithmeticError):
    pass


class DivisionByZero(EvaluationError):
    pass


class NonFiniteValue(EvaluationError):
    pass


# A term key is (mono, exparg, recips):
#   mono   -- tuple of (index, power) sorted by index, power a nonzero int
#   exparg -- ScalarExpr without constant part, or None
#   recips -- tuple of (ScalarExpr denominator, power > 0) sorted by signature
# Keys are interned to small integers; ``ScalarExpr.terms`` maps id -> coeff.
_KEYS = []
_KEY_ID = {}
_LOCK = threading.Lock()


def _kid(key):
    i = _KEY_ID.get(key)
    if i is None:
        with _LOCK:
            i = _KEY_ID.get(key)
            if i is None:
                i = len(_KEYS)
                _KEYS.append(key)
                _KEY_ID[key] = i
    return i


_UNIT = _kid(((), None, ()))


class ScalarExpr:
    __slots__ = ("terms", "_hash", "_sig", "_deriv", "_fn", "_np", "__weakref__")

    def __init__(self, terms=None):
        self.terms = terms or {}
        self._hash = None
        self._sig = None
        self._deriv = {}
        self._fn = None
        self._np = None

    @staticmethod
    def from_keys(items):
        """Build from (key tuple, coefficient) pairs."""
        out = {}
        for key, c in items:
            _acc(out, _kid(key), float(c))
        return ScalarExpr(out)

    # construction helpers
    @staticmethod
    def const(c):
        c = float(c)
        if not math.isfinite(c):
            raise NonFiniteValue(f"non-finite constant {c}")
        return ScalarExpr({_UNIT: c}) if c != 0.0 else ZERO

    @staticmethod
    def var(i):
        if i < 0:
            raise ExprError("coordinate index must be non-negative")
        return ScalarExpr({_kid((((i, 1),), None, ())): 1.0})

    @staticmethod
    def coerce(v):
        if isinstance(v, ScalarExpr):
            return v
        if isinstance(v, (int, float, np.floating, np.integer)):
            return ScalarExpr.const(v)
        raise TypeError(f"cannot interpret {v!r} as a scalar expression")

    # structural queries
    @property
    def is_zero(self):
        return not self.terms

    @property
    def is_constant(self):
        return not self.terms or (len(self.terms) == 1 and _UNIT in self.terms)

    def constant_value(self):
        if not self.is_constant:
            raise ExprError("expression is not constant")
        return self.terms.get(_UNIT, 0.0)

    @property
    def is_polynomial(self):
        for k in self.terms:
            mono, arg, rec = _KEYS[k]
            if arg is not None or rec or any(p < 0 for _, p in mono):
                return False
        return True

    def max_index(self):
        """Largest coordinate index referenced, or -1 for constants."""
        m = -1
        for k in self.terms:
            mono, ea, rc = _KEYS[k]
            for i, _ in mono:
                m = max(m, i)
            if ea is not None:
                m = max(m, ea.max_index())
            for d, _ in rc:
                m = max(m, d.max_index())
        return m

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = ScalarExpr.const(other)
        if not isinstance(other, ScalarExpr):
            return NotImplemented
        return self is other or self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # arithmetic
    def __add__(self, other):
        other = _co(other)
        if other is None:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for k, c in other.terms.items():
            _acc(out, k, c)
        return ScalarExpr(out)

    __radd__ = __add__

    def __neg__(self):
        return ScalarExpr({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        other = _co(other)
        if other is None:
            return NotImplemented
        if not other.terms:
            return self
        out = dict(self.terms)
        for k, c in other.terms.items():
            _acc(out, k, -c)
        return ScalarExpr(out)

    def __rsub__(self, other):
        other = _co(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = _co(other)
        if other is None:
            return NotImplemented
        if not self.terms or not other.terms:
            return ZERO
        if other.is_constant:
            return self.scale(other.constant_value())
        if self.is_constant:
            return other.scale(self.constant_value())
        a, b = self.terms, other.terms
        if len(a) * len(b) >= _VEC_MIN:
            packed = _mul_packed(self, other)
            if packed is not None:
                return packed
        if len(a) < len(b):
            a, b = b, a
        out, mag = {}, {}
        table = _MUL
        for i2, c2 in b.items():
            for i1, c1 in a.items():
                r = table.get((i1 << 32) | i2)
                if r is None:
                    r = _mul_ids(i1, i2)
                k, f = r
                v = c1 * c2 * f
                s = out.get(k)
                if s is None:
                    out[k] = v
                    mag[k] = abs(v)
                else:
                    out[k] = s + v
                    mag[k] += abs(v)
        return ScalarExpr(_pruned(out, mag))

    __rmul__ = __mul__

    def scale(self, c):
        c = float(c)
        if c == 0.0:
            return ZERO
        if c == 1.0:
            return self
        return ScalarExpr({k: v * c for k, v in self.terms.items()})

    def __truediv__(self, other):
        other = _co(other)
        if other is None:
            return NotImplemented
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        other = _co(other)
        if other is None:
            return NotImplemented
        return other * reciprocal(self)

    def __pow__(self, p):
        if not isinstance(p, (int, np.integer)) or p < 0:
            raise ExprError("only non-negative integer powers are supported")
        result, base = ONE, self
        p = int(p)
        while p:
            if p & 1:
                result = result * base
            p >>= 1
            if p:
                base = base * base
        return result

    # printing
    def to_string(self, coords=None):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, key=lambda k: _term_order(_KEYS[k])):
            c = self.terms[k]
            body = _term_body(_KEYS[k], coords)
            mag = abs(c)
            if body is None:
                txt = _fmt(mag)
            elif mag == 1.0:
                txt = body
            else:
                txt = f"{_fmt(mag)}*{body}"
            if not parts:
                parts.append(("-" if c < 0 else "") + txt)
            else:
                parts.append((" - " if c < 0 else " + ") + txt)
        return "".join(parts)

    @property
    def sig(self):
        if self._sig is None:
            self._sig = self.to_string()
        return self._sig

    def __str__(self):
        return self.sig

    def __repr__(self):
        return f"ScalarExpr({self.sig!r})"

    # calculus and evaluation
    def diff(self, i):
        return differentiate(self, i)

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple, np.ndarray)):
            point = point[0]
        return evaluate(self, point)


ZERO = ScalarExpr()
ONE = ScalarExpr({_UNIT: 1.0})


def _co(v):
    try:
        return ScalarExpr.coerce(v)
    except TypeError:
        return None


def _acc(out, k, c):
    old = out.get(k)
    if old is None:
        if c != 0.0:
            out[k] = c
        return
    s = old + c
    if s == 0.0 or abs(s) <= _CANCEL * max(abs(old), abs(c)):
        del out[k]
    else:
        out[k] = s


def _pruned(out, mag):
    for k in [k for k, s in out.items() if abs(s) <= _CANCEL * mag[k]]:
        del out[k]
    return out


def _split_constant(e):
    """Return (constant part, remainder) of an expression."""
    c = e.terms.get(_UNIT)
    if c is None:
        return 0.0, e
    rest = dict(e.terms)
    del rest[_UNIT]
    return c, ScalarExpr(rest)


_MUL = {}


def _mul_ids(i1, i2):
    r = _mul_keys(_KEYS[i1], _KEYS[i2])
    _MUL[(i1 << 32) | i2] = r
    return r


def _mul_keys(k1, k2):
    m1, a1, r1 = k1
    m2, a2, r2 = k2
    if not m1:
        mono = m2
    elif not m2:
        mono = m1
    else:
        powers = dict(m1)
        for i, p in m2:
            q = powers.get(i, 0) + p
            if q:
                powers[i] = q
            else:
                del powers[i]
        mono = tuple(sorted(powers.items()))
    factor = 1.0
    if a1 is None:
        arg = a2
    elif a2 is None:
        arg = a1
    else:
        c, arg = _split_constant(a1 + a2)
        if c:
            factor = math.exp(c)
        if arg.is_zero:
            arg = None
    if not r1:
        rec = r2
    elif not r2:
        rec = r1
    else:
        powers = dict(r1)
        for d, q in r2:
            powers[d] = powers.get(d, 0) + q
        rec = tuple(sorted(powers.items(), key=lambda t: t[0].sig))
    return _kid((mono, arg, rec)), factor


# Vectorized products.  A key splits into a "transcendental" part
# (exparg, recips), interned separately, and a monomial packed into an int64
# with _BITS bits per variable.  Inputs whose exponents exceed _PMAX in
# magnitude, or that use more than _NV variables, take the scalar path.
_NV, _BITS, _PMAX = 10, 6, 15
_FIELD = 1 << (_BITS - 1)
_OFFSET = sum(_FIELD << (_BITS * i) for i in range(_NV))
_MASK = (1 << _BITS) - 1
_VEC_MIN = 400
_TRANS = []
_TRANS_ID = {}
_TRANS_MUL = {}
_KEY_NP = {}
_PACK_ID = {}


def _tid(tr):
    i = _TRANS_ID.get(tr)
    if i is None:
        with _LOCK:
            i = _TRANS_ID.get(tr)
            if i is None:
                i = len(_TRANS)
                _TRANS.append(tr)
                _TRANS_ID[tr] = i
    return i


def _key_np(k):
    info = _KEY_NP.get(k)
    if info is None:
        mono, arg, rec = _KEYS[k]
        if any(i >= _NV or abs(p) > _PMAX for i, p in mono):
            packed = None
        else:
            powers = dict(mono)
            packed = sum((powers.get(i, 0) + _FIELD) << (_BITS * i) for i in range(_NV))
        info = _KEY_NP[k] = (_tid((arg, rec)), packed)
    return info


def _arrays(e):
    if e._np is None:
        tids, packs, coefs = [], [], []
        for k, c in e.terms.items():
            t, p = _key_np(k)
            if p is None:
                e._np = False
                return False
            tids.append(t)
            packs.append(p)
            coefs.append(c)
        e._np = (np.array(tids, dtype=np.int64), np.array(packs, dtype=np.int64),
                 np.array(coefs, dtype=float))
    return e._np


def _trans_mul(t1, t2):
    r = _TRANS_MUL.get((t1, t2))
    if r is None:
        a1, r1 = _TRANS[t1]
        a2, r2 = _TRANS[t2]
        k, f = _mul_keys(((), a1, r1), ((), a2, r2))
        _, arg, rec = _KEYS[k]
        r = _TRANS_MUL[(t1, t2)] = (_tid((arg, rec)), f)
    return r


def _unpack_id(t, packed):
    k = _PACK_ID.get((t, packed))
    if k is None:
        mono = []
        for i in range(_NV):
            p = ((packed >> (_BITS * i)) & _MASK) - _FIELD
            if p:
                mono.append((i, p))
        arg, rec = _TRANS[t]
        k = _PACK_ID[(t, packed)] = _kid((tuple(mono), arg, rec))
    return k


def _mul_packed(x, y):
    ax, ay = _arrays(x), _arrays(y)
    if ax is False or ay is False:
        return None
    tx, px, cx = ax
    ty, py, cy = ay
    groups = {}
    for t1 in np.unique(tx):
        m1 = tx == t1
        for t2 in np.unique(ty):
            m2 = ty == t2
            t, f = _trans_mul(int(t1), int(t2))
            pk = (px[m1][:, None] + py[m2][None, :] - _OFFSET).ravel()
            cf = (cx[m1][:, None] * cy[m2][None, :]).ravel() * f
            groups.setdefault(t, []).append((pk, cf))
    out = {}
    for t, chunks in groups.items():
        pk = np.concatenate([c[0] for c in chunks])
        cf = np.concatenate([c[1] for c in chunks])
        uniq, inv = np.unique(pk, return_inverse=True)
        tot = np.bincount(inv, weights=cf, minlength=len(uniq))
        mag = np.bincount(inv, weights=np.abs(cf), minlength=len(uniq))
        keep = np.abs(tot) > _CANCEL * mag
        for p, c in zip(uniq[keep].tolist(), tot[keep].tolist()):
            out[_unpack_id(t, p)] = c
    return ScalarExpr(out)


def _term_order(key):
    mono, arg, rec = key
    deg = sum(p for _, p in mono)
    return (bool(rec), arg is not None, deg, tuple((i, -p) for i, p in mono),
            arg.sig if arg is not None else "", tuple((d.sig, q) for d, q in rec))


def _name(i, coords):
    if coords is None:
        return f"x{i + 1}"
    return coords[i]


def _term_body(key, coords):
    mono, arg, rec = key
    num, den = [], []
    for i, p in mono:
        s = _name(i, coords)
        (num if p > 0 else den).append(s if abs(p) == 1 else f"{s}^{abs(p)}")
    if arg is not None:
        num.append(f"exp({arg.to_string(coords)})")
    for d, q in rec:
        s = f"({d.to_string(coords)})"
        den.append(s if q == 1 else f"{s}^{q}")
    if not num and not den:
        return None
    txt = "*".join(num) if num else "1"
    for d in den:
        txt += "/" + d
    return txt


def _fmt(c):
    if c == int(c) and abs(c) < 1e16:
        return str(int(c))
    r = repr(c)
    if "e" in r or "E" in r:
        r = format(Decimal(r), "f")
    return r


def exp(e):
    e = ScalarExpr.coerce(e)
    c, rest = _split_constant(e)
    try:
        f = math.exp(c)
    except OverflowError as err:
        raise NonFiniteValue("exponential overflow in constant") from err
    if rest.is_zero:
        return ScalarExpr.const(f)
    return ScalarExpr({_kid(((), rest, ())): f})


def reciprocal(e):
    e = ScalarExpr.coerce(e)
    if e.is_zero:
        raise DivisionByZero("division by the zero expression")
    if len(e.terms) == 1:
        (k, c), = e.terms.items()
        mono, arg, rec = _KEYS[k]
        inv_key = (tuple((i, -p) for i, p in mono), None if arg is None else -arg, ())
        out = ScalarExpr({_kid(inv_key): 1.0 / c})
        for d, q in rec:
            out = out * d ** q
        return out
    lead = min(e.terms, key=lambda k: _term_order(_KEYS[k]))
    lc = e.terms[lead]
    d = e.scale(1.0 / lc)
    return ScalarExpr({_kid(((), None, ((d, 1),))): 1.0 / lc})


def var(i):
    return ScalarExpr.var(i)


def const(c):
    return ScalarExpr.const(c)


# ---------------------------------------------------------------- calculus

_DKEY = {}


def differentiate(e, i):
    """Partial derivative of ``e`` with respect to coordinate ``i``."""
    if i < 0:
        raise ExprError("coordinate index must be non-negative")
    hit = e._deriv.get(i)
    if hit is not None:
        return hit
    out, mag = {}, {}
    for k, c in e.terms.items():
        dk = _DKEY.get((k << 16) | i)
        if dk is None:
            dk = _DKEY[(k << 16) | i] = _diff_key(_KEYS[k], i).terms
        for k2, f in dk.items():
            v = c * f
            s = out.get(k2)
            if s is None:
                out[k2] = v
                mag[k2] = abs(v)
            else:
                out[k2] = s + v
                mag[k2] += abs(v)
    res = ScalarExpr(_pruned(out, mag))
    e._deriv[i] = res
    return res


def _diff_key(key, i):
    """Derivative of the unit-coefficient term with the given key."""
    mono, arg, rec = key
    term = ScalarExpr({_kid(key): 1.0})
    out = ZERO
    for j, p in mono:
        if j == i:
            powers = dict(mono)
            if p - 1:
                powers[i] = p - 1
            else:
                del powers[i]
            out = out + ScalarExpr({_kid((tuple(sorted(powers.items())), arg, rec)): float(p)})
    if arg is not None:
        da = differentiate(arg, i)
        if da.terms:
            out = out + da * term
    for d, q in rec:
        dd = differentiate(d, i)
        if dd.terms:
            extra = ScalarExpr({_kid(((), None, ((d, 1),))): -float(q)})
            out = out + dd * term * extra
    return out


def gradient(e, n):
    return [differentiate(e, i) for i in range(n)]


# ---------------------------------------------------------------- evaluation

class _Codegen:
    """Emit straight-line Python for a batch of expressions, sharing the
    values of repeated exponential arguments and denominators."""

    def __init__(self):
        self.lines = []
        self.names = {}
        self.exps = {}
        self.count = 0

    def value(self, e):
        name = self.names.get(e)
        if name is not None:
            return name
        terms = []
        for k, c in e.terms.items():
            terms.append(self._term(_KEYS[k], c))
        name = f"v{self.count}"
        self.count += 1
        if not terms:
            self.lines.append(f"{name} = 0.0")
        else:
            self.lines.append(f"{name} = 0.0")
            for start in range(0, len(terms), 32):
                chunk = " + ".join(terms[start:start + 32])
                self.lines.append(f"{name} = {name} + ({chunk})")
        self.names[e] = name
        return name

    def _term(self, key, c):
        mono, arg, rec = key
        factors = [repr(float(c))]
        for i, p in mono:
            factors.append(f"x[{i}]" if p == 1 else f"x[{i}]**{p}")
        if arg is not None:
            a = self.value(arg)
            ename = self.exps.get(a)
            if ename is None:
                ename = self.exps[a] = f"e_{a}"
                self.lines.append(f"{ename} = exp({a})")
            factors.append(ename)
        txt = "*".join(factors)
        for d, q in rec:
            dn = self.value(d)
            txt += f"/{dn}" if q == 1 else f"/{dn}**{q}"
        return txt


def compile_exprs(exprs):
    """Compile expressions into ``f(x) -> list of values``.

    ``x`` is indexable by coordinate; entries may be floats or numpy arrays.
    """
    gen = _Codegen()
    outs = [gen.value(e) for e in exprs]
    body = "\n    ".join(gen.lines) or "pass"
    src = f"def _f(x, exp):\n    {body}\n    return [{', '.join(outs)}]\n"
    ns = {}
    exec(compile(src, "<scalar-expr>", "exec"), ns)
    return ns["_f"]


def _compiled(e):
    if e._fn is None:
        e._fn = compile_exprs([e])
    return e._fn


def evaluate(e, point):
    """Value of ``e`` at a point (sequence of floats)."""
    pt = [float(v) for v in point]
    if e.max_index() >= len(pt):
        raise ExprError(f"point has dimension {len(pt)} but expression uses x{e.max_index() + 1}")
    if any(not math.isfinite(v) for v in pt):
        raise NonFiniteValue("point has non-finite coordinates")
    try:
        v = _compiled(e)(pt, math.exp)[0]
    except ZeroDivisionError as err:
        raise DivisionByZero(f"division by zero at {pt}") from err
    except OverflowError as err:
        raise NonFiniteValue(f"overflow at {pt}") from err
    v = float(v)
    if not math.isfinite(v):
        raise NonFiniteValue(f"non-finite value at {pt}")
    return v


def evaluate_batch(exprs, points):
    """Evaluate several expressions at many points.

    Returns an array of shape (len(exprs), len(points)); failed entries are nan.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ExprError("points must be a 2-d array")
    exprs = list(exprs)
    if not exprs:
        return np.zeros((0, len(pts)))
    need = max(e.max_index() for e in exprs)
    if need >= pts.shape[1]:
        raise ExprError(f"points have dimension {pts.shape[1]} but expressions use x{need + 1}")
    fn = compile_exprs(exprs) if len(exprs) > 1 else _compiled(exprs[0])
    cols = [pts[:, i] for i in range(pts.shape[1])]
    with np.errstate(all="ignore"):
        vals = fn(cols, np.exp)
    out = np.empty((len(exprs), len(pts)))
    for r, v in enumerate(vals):
        out[r] = v
    out[~np.isfinite(out)] = np.nan
    return out


# ---------------------------------------------------------------- identity testing

@dataclass(frozen=True)
class SampleBox:
    """Axis-aligned sampling region plus the probabilistic-equality protocol."""

    bounds: tuple
    n_samples: int = 64
    seed: int = 0
    tol: float = 1e-9

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", b)
        if any(lo > hi for lo, hi in b):
            raise ValueError("box bounds must satisfy lo <= hi")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    @classmethod
    def cube(cls, n, lo=-1.0, hi=1.0, **kw):
        return cls(tuple((lo, hi) for _ in range(n)), **kw)

    @property
    def dim(self):
        return len(self.bounds)

    def rng(self):
        return np.random.default_rng(self.seed)

    def draw(self, rng, count):
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return lo + (hi - lo) * rng.random((count, len(self.bounds)))

    def replace(self, **kw):
        args = dict(bounds=self.bounds, n_samples=self.n_samples, seed=self.seed, tol=self.tol)
        args.update(kw)
        return SampleBox(**args)


MAX_REDRAWS = 10


def sample_values(exprs, box):
    """Evaluate expressions at ``box.n_samples`` seeded points.

    Points where any expression fails to evaluate are re-drawn, at most
    ``MAX_REDRAWS`` times, after which ``EvaluationError`` is raised.
    Returns (points, values) with values of shape (len(exprs), N).
    """
    rng = box.rng()
    pts = box.draw(rng, box.n_samples)
    vals = evaluate_batch(exprs, pts)
    for _ in range(MAX_REDRAWS):
        bad = np.isnan(vals).any(axis=0)
        if not bad.any():
            return pts, vals
        fresh = box.draw(rng, int(bad.sum()))
        pts[bad] = fresh
        vals[:, bad] = evaluate_batch(exprs, fresh)
    if np.isnan(vals).any():
        raise EvaluationError("expressions failed to evaluate after repeated re-draws")
    return pts, vals


@dataclass(frozen=True)
class Verdict:
    equal: bool
    residual: float = 0.0
    witness: tuple | None = None
    exact: bool = False

    def __bool__(self):
        return self.equal


def equal_probabilistic(a, b, box=None):
    """Decide a == b by exact cancellation, else by sampling.

    ``equal`` means |a-b| <= tol*(1+|a|+|b|) at every sample; ``unequal``
    carries a witness point and the residual |a-b| there.
    """
    a, b = ScalarExpr.coerce(a), ScalarExpr.coerce(b)
    if (a - b).is_zero:
        return Verdict(True, 0.0, None, exact=True)
    if box is None:
        box = SampleBox.cube(max(a.max_index(), b.max_index(), 0) + 1)
    pts, vals = sample_values([a, b], box)
    diff = np.abs(vals[0] - vals[1])
    bound = box.tol * (1.0 + np.abs(vals[0]) + np.abs(vals[1]))
    bad = diff > bound
    if bad.any():
        j = int(np.argmax(np.where(bad, diff, -1.0)))
        return Verdict(False, float(diff[j]), tuple(float(v) for v in pts[j]))
    return Verdict(True, float(diff.max()), None)


def max_residual(exprs, box):
    """Max absolute sample value over a list of expressions that should vanish.

    Returns (residual, witness point or None, index of worst expression).
    Exactly-zero expressions are skipped.
    """
    live = [(i, e) for i, e in enumerate(exprs) if not e.is_zero]
    if not live:
        return 0.0, None, None
    pts, vals = sample_values([e for _, e in live], box)
    absval = np.abs(vals)
    r, j = np.unravel_index(int(np.argmax(absval)), absval.shape)
    return float(absval[r, j]), tuple(float(v) for v in pts[j]), live[r][0]


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?|\.\d+)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))")


def _tokenize(text):
    data = text.encode("utf-8")
    s = data.decode("utf-8")
    toks = []
    pos = 0
    # byte offsets are tracked through an index map for non-ascii safety
    offsets = []
    acc = 0
    for ch in s:
        offsets.append(acc)
        acc += len(ch.encode("utf-8"))
    offsets.append(acc)
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m or m.end() == pos:
            if s[pos:].strip() == "":
                break
            bad = pos + (len(s[pos:]) - len(s[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {s[bad]!r}", offsets[bad])
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), offsets[start]))
        pos = m.end()
    toks.append(("end", "", offsets[len(s)]))
    return toks


class _Parser:
    def __init__(self, text, coords):
        self.toks = _tokenize(text)
        self.i = 0
        self.coords = {name: k for k, name in enumerate(coords)}

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op):
        t = self.take()
        if t[1] != op or t[0] not in ("op",):
            raise ExprSyntaxError(f"expected {op!r}", t[2])
        return t

    def expr(self):
        v = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            v = v + rhs if op == "+" else v - rhs
        return v

    def term(self):
        v = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, off = self.take()
            rhs = self.factor()
            if op == "*":
                v = v * rhs
            else:
                if rhs.is_zero:
                    raise ExprSyntaxError("division by literal zero", off)
                v = v / rhs
        return v

    def factor(self):
        b = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            t = self.peek()
            if t[0] == "op" and t[1] == "-":
                raise NegativeExponentError("negative integer exponent", t[2])
            if t[0] != "num" or "." in t[1]:
                raise ExprSyntaxError("expected non-negative integer exponent", t[2])
            self.take()
            return b ** int(t[1])
        return b

    def base(self):
        kind, text, off = self.take()
        if kind == "num":
            return ScalarExpr.const(float(text))
        if kind == "id":
            if text == "exp":
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return exp(inner)
            if text not in self.coords:
                raise UnknownIdentifierError(f"unknown identifier {text!r}", off)
            return ScalarExpr.var(self.coords[text])
        if kind == "op" and text == "(":
            v = self.expr()
            self.expect(")")
            return v
        if kind == "op" and text == "-":
            return -self.factor()
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", off)
        raise ExprSyntaxError(f"unexpected token {text!r}", off)


def parse(text, coords):
    """Parse ``text`` over the ordered coordinate names ``coords``."""
    coords = list(coords)
    if "exp" in coords:
        raise ExprError("'exp' is reserved and cannot name a coordinate")
    p = _Parser(text, coords)
    v = p.expr()
    kind, tok, off = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected token {tok!r}", off)
    return v


def to_string(e, coords=None):
    return e.to_string(coords)
