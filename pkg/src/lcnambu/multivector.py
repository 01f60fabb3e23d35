"""Multivector fields and differential forms on a single coordinate chart.

Both are stored as maps from strictly increasing index tuples to
``ScalarExpr`` coefficients.  Sign conventions:

* right contraction inserts the form in the LAST argument slot,
  ``(i_b X)(a_1..a_{m-1}) = X(a_1..a_{m-1}, b)``, and composes as
  ``i_{a^b} = i_a i_b``;
* the Schouten-Nijenhuis bracket agrees with the decomposable formula
  ``[X,Y] = sum_ij (-1)^(i+j) [X_i,Y_j] ^ X_1..^X_i..X_m ^ Y_1..^Y_j..Y_n``.
"""

from __future__ import annotations

import itertools
import warnings

from .expr import ONE, ZERO, ScalarExpr, differentiate, equal_probabilistic


class ChartMismatch(ValueError):
    pass


class NotClosedWarning(UserWarning):
    pass


def _perm_sign(seq):
    """Sign of the permutation sorting ``seq``; 0 if it has repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _merge(a, b):
    """Sorted union of disjoint sorted tuples with the sign of the shuffle."""
    if not a:
        return b, 1
    if not b:
        return a, 1
    out = []
    sign = 1
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        elif a[i] > b[j]:
            out.append(b[j])
            # b[j] jumps over the remaining len(a)-i entries of a
            if (len(a) - i) % 2:
                sign = -sign
            j += 1
        else:
            return None, 0
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out), sign


class _Graded:
    """Shared storage for multivectors and forms."""

    __slots__ = ("dim", "order", "coeffs")

    def __init__(self, dim, order, coeffs=None):
        self.dim = int(dim)
        self.order = int(order)
        clean = {}
        for idx, c in (coeffs or {}).items():
            idx = tuple(idx)
            c = ScalarExpr.coerce(c)
            if c.is_zero:
                continue
            if len(idx) != self.order:
                raise ValueError(f"index {idx} does not have length {self.order}")
            if any(i < 0 or i >= self.dim for i in idx):
                raise ValueError(f"index {idx} out of range for dimension {self.dim}")
            if list(idx) != sorted(set(idx)):
                s = _perm_sign(idx)
                if s == 0:
                    continue
                idx = tuple(sorted(idx))
                c = c if s > 0 else -c
                old = clean.get(idx)
                c = c if old is None else old + c
                if c.is_zero:
                    clean.pop(idx, None)
                    continue
            elif idx in clean:
                c = clean[idx] + c
                if c.is_zero:
                    del clean[idx]
                    continue
            clean[idx] = c
        self.coeffs = clean

    def _like(self, order, coeffs):
        return type(self)(self.dim, order, coeffs)

    def _check(self, other):
        if not isinstance(other, _Graded) or type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.dim != self.dim:
            raise ChartMismatch(f"dimension {self.dim} vs {other.dim}")

    def __getitem__(self, idx):
        if isinstance(idx, int):
            idx = (idx,)
        idx = tuple(idx)
        s = _perm_sign(idx)
        if s == 0:
            return ZERO
        c = self.coeffs.get(tuple(sorted(idx)), ZERO)
        return c if s > 0 else -c

    @property
    def is_zero(self):
        return not self.coeffs

    def items(self):
        return sorted(self.coeffs.items())

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        self._check(other)
        if other.order != self.order and not (other.is_zero or self.is_zero):
            raise ValueError(f"cannot add orders {self.order} and {other.order}")
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            s = out.get(k)
            s = c if s is None else s + c
            if s.is_zero:
                out.pop(k, None)
            else:
                out[k] = s
        return self._like(self.order, out)

    __radd__ = __add__

    def __neg__(self):
        return self._like(self.order, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, f):
        if isinstance(f, _Graded):
            return NotImplemented
        f = ScalarExpr.coerce(f)
        if f.is_zero:
            return self._like(self.order, {})
        return self._like(self.order, {k: f * c for k, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, _Graded):
            return NotImplemented
        if type(other) is not type(self) or other.dim != self.dim:
            return False
        if self.is_zero and other.is_zero:
            return True
        return self.order == other.order and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((type(self).__name__, self.dim, self.order, frozenset(self.coeffs.items())))

    def wedge(self, other):
        return wedge(self, other)

    def __xor__(self, other):
        return wedge(self, other)

    def scalar(self):
        if self.order != 0:
            raise ValueError("not an order-0 object")
        return self.coeffs.get((), ZERO)

    def map(self, fn):
        return self._like(self.order, {k: fn(c) for k, c in self.coeffs.items()})

    def components(self):
        return list(self.coeffs.values())

    def to_json(self, coords):
        return {",".join(coords[i] for i in k): c.to_string(coords) for k, c in self.items()}

    def __repr__(self):
        if not self.coeffs:
            return f"{type(self).__name__}(dim={self.dim}, order={self.order}, 0)"
        body = ", ".join(f"{k}: {c}" for k, c in self.items())
        return f"{type(self).__name__}(dim={self.dim}, order={self.order}, {{{body}}})"


class MultiVectorField(_Graded):
    __slots__ = ()

    def __call__(self, *forms):
        return apply(self, *forms)


class DifferentialForm(_Graded):
    __slots__ = ("closed",)

    def __init__(self, dim, order, coeffs=None):
        super().__init__(dim, order, coeffs)
        self.closed = True


OneForm = DifferentialForm


# ---------------------------------------------------------------- builders

def scalar_field(dim, f):
    return MultiVectorField(dim, 0, {(): ScalarExpr.coerce(f)})


def basis_vector(dim, *indices, coeff=ONE):
    """coeff * d_{i1} ^ ... ^ d_{im} (indices in any order)."""
    return MultiVectorField(dim, len(indices), {tuple(indices): coeff})


def basis_form(dim, *indices, coeff=ONE):
    return DifferentialForm(dim, len(indices), {tuple(indices): coeff})


def vector_field(components):
    comps = [ScalarExpr.coerce(c) for c in components]
    return MultiVectorField(len(comps), 1, {(i,): c for i, c in enumerate(comps)})


def one_form(components):
    comps = [ScalarExpr.coerce(c) for c in components]
    return DifferentialForm(len(comps), 1, {(i,): c for i, c in enumerate(comps)})


def zero_field(dim, order):
    return MultiVectorField(dim, order, {})


def d(f, dim):
    """Differential of a scalar function as a one-form."""
    f = ScalarExpr.coerce(f)
    if f.max_index() >= dim:
        raise ChartMismatch(f"function uses coordinates beyond dimension {dim}")
    return DifferentialForm(dim, 1, {(i,): differentiate(f, i) for i in range(dim)})


def from_json(data, coords, parse_fn, kind=MultiVectorField):
    """Build a field from ``{"x,y": "expr", ...}``."""
    dim = len(coords)
    pos = {c: i for i, c in enumerate(coords)}
    coeffs = {}
    order = None
    for key, text in data.items():
        names = [s.strip() for s in key.split(",")] if key.strip() else []
        try:
            idx = tuple(pos[n] for n in names)
        except KeyError as err:
            raise ValueError(f"unknown coordinate in key {key!r}") from err
        if order is None:
            order = len(idx)
        elif order != len(idx):
            raise ValueError("all keys must have the same number of coordinates")
        c = parse_fn(text, coords)
        s = _perm_sign(idx)
        if s == 0:
            continue
        c = c if s > 0 else -c
        idx = tuple(sorted(idx))
        coeffs[idx] = coeffs[idx] + c if idx in coeffs else c
    return kind(dim, order or 0, coeffs)


# ---------------------------------------------------------------- algebra

def wedge(a, b):
    if isinstance(a, ScalarExpr) or isinstance(b, ScalarExpr):
        return a * b
    a._check(b)
    if a.order + b.order > a.dim:
        return a._like(a.order + b.order, {})
    out = {}
    for i, ca in a.coeffs.items():
        for j, cb in b.coeffs.items():
            k, s = _merge(i, j)
            if s == 0:
                continue
            term = ca * cb
            if s < 0:
                term = -term
            old = out.get(k)
            out[k] = term if old is None else old + term
    return a._like(a.order + b.order, out)


def wedge_all(*items):
    out = items[0]
    for it in items[1:]:
        out = wedge(out, it)
    return out


def _contract_one(theta, X):
    """Right contraction by a one-form: sum_i (-1)^(i+m) <theta,X_i> X^(i)."""
    m = X.order
    out = {}
    for idx, c in X.coeffs.items():
        for pos, a in enumerate(idx, start=1):
            t = theta.coeffs.get((a,))
            if t is None:
                continue
            rest = idx[:pos - 1] + idx[pos:]
            term = t * c
            if (pos + m) % 2:
                term = -term
            old = out.get(rest)
            out[rest] = term if old is None else old + term
    return MultiVectorField(X.dim, m - 1, out)


def contract_right(alpha, X):
    """Right contraction i_alpha X of a multivector by a form."""
    if isinstance(alpha, ScalarExpr):
        return X * alpha
    if not isinstance(alpha, DifferentialForm) or not isinstance(X, MultiVectorField):
        raise TypeError("contract_right expects (DifferentialForm, MultiVectorField)")
    if alpha.dim != X.dim:
        raise ChartMismatch(f"dimension {alpha.dim} vs {X.dim}")
    q = alpha.order
    if q > X.order:
        raise ValueError(f"cannot contract an order-{q} form into an order-{X.order} field")
    if q == 0:
        return X * alpha.scalar()
    total = MultiVectorField(X.dim, X.order - q, {})
    for idx, a in alpha.coeffs.items():
        # i_{dx_j1 ^ ... ^ dx_jq} = i_{dx_j1} ... i_{dx_jq}: innermost is the last
        Y = X
        for j in reversed(idx):
            Y = _contract_one(DifferentialForm(X.dim, 1, {(j,): ONE}), Y)
            if Y.is_zero:
                break
        if not Y.is_zero:
            total = total + Y * a
    return total


def contract_functions(X, fns):
    """i_{dF_1 ^ ... ^ dF_k} X = i_{dF_1} ... i_{dF_k} X."""
    Y = X
    for f in reversed(list(fns)):
        Y = _contract_one(d(f, X.dim), Y)
    return Y


def sharp(X, beta):
    """Musical sharp X#(beta) := i_beta X."""
    return contract_right(beta, X)


def _left_contract_basis(idx, k):
    """Left contraction of d_idx by dx_k: (-1)^(j+1) d_{idx without k}."""
    for pos, a in enumerate(idx, start=1):
        if a == k:
            return idx[:pos - 1] + idx[pos:], (1 if pos % 2 else -1)
    return None, 0


def _det(rows):
    n = len(rows)
    if n == 0:
        return ONE
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = ZERO
    for perm in itertools.permutations(range(n)):
        term = ONE
        for r, c in enumerate(perm):
            term = term * rows[r][c]
            if term.is_zero:
                break
        if term.is_zero:
            continue
        total = total + term if _perm_sign(perm) > 0 else total - term
    return total


def apply(X, *forms):
    """X(a_1, ..., a_m) = sum_I X^I det(a_r(d_{I_s}))."""
    if len(forms) == 1 and isinstance(forms[0], (list, tuple)):
        forms = tuple(forms[0])
    if len(forms) != X.order:
        raise ValueError(f"order-{X.order} field applied to {len(forms)} forms")
    for a in forms:
        if a.order != 1:
            raise ValueError("apply expects one-forms")
        if a.dim != X.dim:
            raise ChartMismatch(f"dimension {a.dim} vs {X.dim}")
    total = ZERO
    for idx, c in X.coeffs.items():
        rows = [[a.coeffs.get((i,), ZERO) for i in idx] for a in forms]
        dv = _det(rows)
        if not dv.is_zero:
            total = total + c * dv
    return total


# ---------------------------------------------------------------- Schouten-Nijenhuis

def _as_field(x, dim=None):
    if isinstance(x, MultiVectorField):
        return x
    if dim is None:
        raise TypeError("scalar argument needs a dimension")
    return scalar_field(dim, x)


def sn_bracket(X, Y):
    """Schouten-Nijenhuis bracket, orders (m, n) -> m+n-1.

    Coordinate form: [X,Y] = sum_k (i_{dx_k} X) ^ d_k Y - d_k X ^ (left i_{dx_k} Y),
    where d_k differentiates coefficients.  For a function F this gives
    [X,F] = i_{dF} X and [F,H] = 0.
    """
    if isinstance(X, ScalarExpr) and isinstance(Y, ScalarExpr):
        raise TypeError("bracket of two bare scalars needs a dimension; wrap with scalar_field")
    if isinstance(X, ScalarExpr):
        X = scalar_field(Y.dim, X)
    if isinstance(Y, ScalarExpr):
        Y = scalar_field(X.dim, Y)
    if X.dim != Y.dim:
        raise ChartMismatch(f"dimension {X.dim} vs {Y.dim}")
    m, n = X.order, Y.order
    order = m + n - 1
    if order < 0:
        return MultiVectorField(X.dim, 0, {})
    out = {}

    def acc(idx, val):
        old = out.get(idx)
        out[idx] = val if old is None else old + val

    for I, c in X.coeffs.items():
        for J, dc in Y.coeffs.items():
            # derivatives of Y's coefficient along the directions of X
            for pos, a in enumerate(I, start=1):
                dd = differentiate(dc, a)
                if dd.is_zero:
                    continue
                rest = I[:pos - 1] + I[pos:]
                k, s = _merge(rest, J)
                if s == 0:
                    continue
                if (pos + m) % 2:
                    s = -s
                term = c * dd
                acc(k, term if s > 0 else -term)
            # derivatives of X's coefficient along the directions of Y
            for pos, b in enumerate(J, start=1):
                dcx = differentiate(c, b)
                if dcx.is_zero:
                    continue
                rest = J[:pos - 1] + J[pos:]
                k, s = _merge(I, rest)
                if s == 0:
                    continue
                if pos % 2:
                    s = -s
                term = dc * dcx
                acc(k, term if s > 0 else -term)
    return MultiVectorField(X.dim, order, out)


def lie_bracket(U, V):
    """Jacobi-Lie bracket of vector fields: [U,V]^k = U(V^k) - V(U^k)."""
    if U.order != 1 or V.order != 1:
        raise ValueError("lie_bracket expects vector fields")
    comps = []
    for k in range(U.dim):
        s = ZERO
        for i in range(U.dim):
            ui, vi = U[(i,)], V[(i,)]
            if not ui.is_zero:
                s = s + ui * differentiate(V[(k,)], i)
            if not vi.is_zero:
                s = s - vi * differentiate(U[(k,)], i)
        comps.append(s)
    return vector_field(comps)


def sn_bracket_decomposable(xs, ys):
    """SN bracket of X_1^...^X_m and Y_1^...^Y_n from their factors.

    Direct implementation of the decomposable definition; used as an
    independent oracle for ``sn_bracket``.  Both lists must be non-empty.
    """
    xs, ys = list(xs), list(ys)
    m, n = len(xs), len(ys)
    dim = xs[0].dim
    total = MultiVectorField(dim, m + n - 1, {})
    for i in range(m):
        for j in range(n):
            rest = [xs[a] for a in range(m) if a != i] + [ys[b] for b in range(n) if b != j]
            term = wedge_all(lie_bracket(xs[i], ys[j]), *rest)
            total = total + (term if (i + j) % 2 == 0 else -term)
    return total


def lie_derivative(V, X):
    if not isinstance(V, MultiVectorField) or V.order != 1:
        raise ValueError("lie_derivative needs a vector field")
    return sn_bracket(V, X)


# ---------------------------------------------------------------- forms

def exterior_derivative(alpha, dim=None):
    if isinstance(alpha, ScalarExpr):
        if dim is None:
            raise TypeError("pass dim when differentiating a scalar")
        return d(alpha, dim)
    if not isinstance(alpha, DifferentialForm):
        raise TypeError("exterior_derivative expects a form")
    out = {}
    for J, a in alpha.coeffs.items():
        for k in range(alpha.dim):
            da = differentiate(a, k)
            if da.is_zero:
                continue
            idx, s = _merge((k,), J)
            if s == 0:
                continue
            old = out.get(idx)
            val = da if s > 0 else -da
            out[idx] = val if old is None else old + val
    return DifferentialForm(alpha.dim, alpha.order + 1, out)


def ldr_differential(alpha, theta, check_closed=True, box=None):
    """Lichnerowicz-de Rham differential d_theta a = da - theta ^ a.

    When ``theta`` is not closed a ``NotClosedWarning`` is issued and the
    result carries ``closed=False``.
    """
    if isinstance(alpha, ScalarExpr):
        alpha = DifferentialForm(theta.dim, 0, {(): alpha})
    if alpha.order == 0:
        da = d(alpha.scalar(), alpha.dim)
    else:
        da = exterior_derivative(alpha)
    out = da - wedge(theta, alpha)
    closed = True
    if check_closed:
        dth = exterior_derivative(theta)
        for c in dth.components():
            if not equal_probabilistic(c, ZERO, box):
                closed = False
                break
        if not closed:
            warnings.warn("Lee form is not closed; d_theta is not nilpotent", NotClosedWarning)
    out.closed = closed
    return out
