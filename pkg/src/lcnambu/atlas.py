"""Locally conformal atlases on a single global coordinate system.

Charts are axis-aligned boxes sharing the global coordinates, so transition
maps are identities and overlaps are box intersections.  A chart carries a
local tensor eta_a and a potential sigma_a; the rescaled tensors
exp(-w sigma_a) eta_a (w = order - 1) glue to a global tensor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .expr import SampleBox, ScalarExpr, exp, max_residual, parse, to_string
from .multivector import (
    DifferentialForm,
    MultiVectorField,
    contract_functions,
    contract_right,
    d,
    from_json,
    ldr_differential,
    wedge,
)
from .structures import (
    Bracket,
    FunctionFamily,
    StructureCandidate,
    VerificationReport,
    check_zero,
    compatibility_report,
    jacobi_residuals,
    nj3_jacobi_pairs,
    verify,
)

ATLAS_KINDS = {"poisson": "nj", "np": "nj", "gp": "gj"}
OVERLAP_SAMPLES = 32


class AtlasError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    name: str
    box: tuple
    tensor: MultiVectorField
    sigma: ScalarExpr

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.box)
        object.__setattr__(self, "box", b)
        if len(b) != self.tensor.dim:
            raise AtlasError(f"chart {self.name}: box has {len(b)} axes, tensor lives in {self.tensor.dim}")
        if any(not lo < hi for lo, hi in b):
            raise AtlasError(f"chart {self.name}: degenerate box")
        object.__setattr__(self, "sigma", ScalarExpr.coerce(self.sigma))

    def sample_box(self, like):
        return like.replace(bounds=self.box)


def _intersect(*boxes):
    out = []
    for axes in zip(*boxes):
        lo = max(a[0] for a in axes)
        hi = min(a[1] for a in axes)
        if not lo < hi:
            return None
        out.append((lo, hi))
    return tuple(out)


@dataclass
class ConformalAtlas:
    dim: int
    coords: tuple
    charts: list
    kind: str = "np"
    order: int = 3

    def __post_init__(self):
        self.coords = tuple(self.coords)
        if self.kind not in ATLAS_KINDS:
            raise AtlasError(f"unknown atlas kind {self.kind!r}")
        if not self.charts:
            raise AtlasError("atlas has no charts")
        if len(self.coords) != self.dim:
            raise AtlasError("coordinate list does not match dimension")
        if self.kind == "poisson" and self.order != 2:
            raise AtlasError("a Poisson atlas carries bivectors")
        if self.kind == "gp" and self.order % 2:
            raise AtlasError("generalized Poisson tensors have even order")
        names = [c.name for c in self.charts]
        if len(set(names)) != len(names):
            raise AtlasError("chart names must be unique")
        for c in self.charts:
            if c.tensor.dim != self.dim:
                raise AtlasError(f"chart {c.name} lives in dimension {c.tensor.dim}")
            if c.tensor.order != self.order:
                raise AtlasError(f"chart {c.name} carries order {c.tensor.order}, atlas order is {self.order}")

    @property
    def weight(self):
        return self.order - 1

    def chart(self, name):
        for c in self.charts:
            if c.name == name:
                return c
        raise KeyError(name)

    def overlaps(self):
        for a, b in itertools.combinations(self.charts, 2):
            box = _intersect(a.box, b.box)
            if box is not None:
                yield a, b, box

    def triple_overlaps(self):
        for a, b, c in itertools.combinations(self.charts, 3):
            box = _intersect(a.box, b.box, c.box)
            if box is not None:
                yield a, b, c, box

    def rescaled(self, chart):
        return chart.tensor * exp(chart.sigma.scale(-self.weight))

    # ---- serialization

    @classmethod
    def from_json(cls, data):
        try:
            coords = tuple(data["coordinates"])
            dim = int(data.get("dimension", len(coords)))
            kind = data.get("kind", "np")
            charts = []
            for ch in data["charts"]:
                tensor = from_json(ch["tensor"], coords, parse)
                charts.append(Chart(ch["name"], tuple(tuple(b) for b in ch["box"]), tensor,
                                    parse(str(ch.get("sigma", "0")), coords)))
            order = int(data.get("order", charts[0].tensor.order if charts else 0))
        except (KeyError, TypeError, IndexError) as err:
            raise AtlasError(f"malformed atlas document: {err!r}") from err
        # a chart whose tensor is written as zero still has the atlas order
        charts = [c if c.tensor.coeffs or c.tensor.order == order
                  else Chart(c.name, c.box, MultiVectorField(dim, order), c.sigma) for c in charts]
        return cls(dim, coords, charts, kind, order)

    def to_json(self):
        return {
            "dimension": self.dim,
            "coordinates": list(self.coords),
            "kind": self.kind,
            "order": self.order,
            "charts": [{"name": c.name, "box": [list(b) for b in c.box],
                        "sigma": to_string(c.sigma, self.coords),
                        "tensor": c.tensor.to_json(self.coords)} for c in self.charts],
        }


def transition_scalar(atlas, beta, alpha):
    """lambda_{beta alpha} = exp(-w (sigma_beta - sigma_alpha))."""
    b, a = atlas.chart(beta), atlas.chart(alpha)
    return exp((b.sigma - a.sigma).scale(-atlas.weight))


def validate(atlas, box=None, family=None):
    """Local structure checks, overlap conformality, Lee consistency and cocycles.

    ``box`` supplies the sampling protocol (seed, tolerance, sample count for
    the per-chart checks); overlaps always use 32 points.
    """
    proto = box or SampleBox.cube(atlas.dim)
    rep = VerificationReport()
    for c in atlas.charts:
        cand = StructureCandidate(atlas.kind, c.tensor)
        cb = c.sample_box(proto)
        fam = family or FunctionFamily.standard(atlas.dim, seed=proto.seed)
        rep.extend(verify(cand, fam, cb), prefix=f"chart.{c.name}.")
    for a, b, ob in atlas.overlaps():
        sb = proto.replace(bounds=ob, n_samples=OVERLAP_SAMPLES)
        tag = f"overlap.{a.name}|{b.name}"
        lee = d(a.sigma, atlas.dim) - d(b.sigma, atlas.dim)
        rep.add(f"{tag}.lee", check_zero([("dsigma", MultiVectorField(atlas.dim, 1, lee.coeffs))], sb))
        diff = atlas.rescaled(a) - atlas.rescaled(b)
        rep.add(f"{tag}.conformal", check_zero([("rescaled", diff)], sb))
    for a, b, c, tb in atlas.triple_overlaps():
        sb = proto.replace(bounds=tb, n_samples=OVERLAP_SAMPLES)
        lhs = transition_scalar(atlas, b.name, a.name) * transition_scalar(atlas, a.name, c.name)
        res = lhs - transition_scalar(atlas, b.name, c.name)
        rep.add(f"cocycle.{a.name}|{b.name}|{c.name}", check_zero([("lambda", res)], sb))
    return rep


# ---------------------------------------------------------------- gluing

@dataclass
class GlobalPair:
    """Glued tensor, Lee form and companion (-1)^k i_theta eta."""

    eta: MultiVectorField
    theta: DifferentialForm
    companion: MultiVectorField
    kind: str = "nj"
    coords: tuple = field(default=())

    @property
    def order(self):
        return self.eta.order

    @property
    def dim(self):
        return self.eta.dim

    def candidate(self):
        return StructureCandidate(self.kind, self.eta, self.companion)

    def to_json(self):
        coords = self.coords or tuple(f"x{i + 1}" for i in range(self.dim))
        return {
            "dimension": self.dim,
            "coordinates": list(coords),
            "kind": self.kind,
            "order": self.order,
            "eta": self.eta.to_json(coords),
            "companion": self.companion.to_json(coords),
            "theta": self.theta.to_json(coords),
        }


def companion_of(eta, theta):
    """(-1)^k i_theta eta."""
    c = contract_right(theta, eta)
    return c if eta.order % 2 == 0 else -c


def glue(atlas, box=None, check=True):
    """Global pair of a validated atlas.

    The first chart's rescaled tensor serves as the global expression; the
    invariants are re-checked chart by chart on each chart's own box.
    """
    if check:
        rep = validate(atlas, box)
        if not rep.passed:
            bad = ", ".join(sorted(rep.failures()))
            raise AtlasError(f"atlas does not validate: {bad}")
    first = atlas.charts[0]
    eta = atlas.rescaled(first)
    theta = d(first.sigma, atlas.dim)
    comp = companion_of(eta, theta)
    return GlobalPair(eta, theta, comp, ATLAS_KINDS[atlas.kind], atlas.coords)


def chart_independence(atlas, gp, box=None):
    """Per-chart residuals of eta - exp(-w sigma_a) eta_a and theta - dsigma_a."""
    proto = box or SampleBox.cube(atlas.dim)
    rep = VerificationReport()
    for c in atlas.charts:
        sb = proto.replace(bounds=c.box, n_samples=OVERLAP_SAMPLES)
        rep.add(f"glue.{c.name}.eta", check_zero([("eta", gp.eta - atlas.rescaled(c))], sb))
        dth = gp.theta - d(c.sigma, atlas.dim)
        rep.add(f"glue.{c.name}.theta",
                check_zero([("theta", MultiVectorField(atlas.dim, 1, dth.coeffs))], sb))
    return rep


def induced_bracket(gp):
    return Bracket(gp.eta, gp.companion)


def localize(atlas, chart, f):
    """F_a = exp(-sigma_a) F."""
    c = atlas.chart(chart) if isinstance(chart, str) else chart
    return exp(-c.sigma) * ScalarExpr.coerce(f)


def local_global_residual(atlas, gp, chart, fs):
    """exp(sigma_a) {F_a^1..F_a^k}_a - {F^1..F^k} with F_a = exp(-sigma_a) F."""
    c = atlas.chart(chart) if isinstance(chart, str) else chart
    local = Bracket(c.tensor)
    lfs = [localize(atlas, c, f) for f in fs]
    return exp(c.sigma) * local(*lfs) - induced_bracket(gp)(*fs)


def glue_theorem_report(atlas, gp, box=None, family=None):
    """Structure verification of the glued pair plus chart independence."""
    proto = box or SampleBox.cube(atlas.dim)
    rep = verify(gp.candidate(), family, proto)
    rep.extend(chart_independence(atlas, gp, proto))
    return rep


# ---------------------------------------------------------------- contraction

def contract_atlas(atlas, fixer, box=None):
    """Fix the last entry of every local bracket.

    ``fixer`` is either a global function F (localized as exp(-sigma_a) F)
    or a mapping chart name -> local function F_a, in which case the local
    functions must glue: exp(sigma_a) F_a = exp(sigma_b) F_b on overlaps.
    """
    if atlas.kind != "np" or atlas.order < 3:
        raise AtlasError("contraction needs a Nambu-Poisson atlas of order >= 3")
    proto = box or SampleBox.cube(atlas.dim)
    if isinstance(fixer, dict):
        local = {name: ScalarExpr.coerce(f) for name, f in fixer.items()}
        missing = [c.name for c in atlas.charts if c.name not in local]
        if missing:
            raise AtlasError(f"no fixer for charts {missing}")
        for a, b, ob in atlas.overlaps():
            sb = proto.replace(bounds=ob, n_samples=OVERLAP_SAMPLES)
            res = exp(a.sigma) * local[a.name] - exp(b.sigma) * local[b.name]
            r, _, _ = max_residual([res], sb)
            if r > sb.tol:
                raise AtlasError(f"fixers disagree on overlap {a.name}|{b.name} (residual {r:.3g})")
    else:
        local = {c.name: localize(atlas, c, fixer) for c in atlas.charts}
    charts = [Chart(c.name, c.box, contract_functions(c.tensor, [local[c.name]]), c.sigma)
              for c in atlas.charts]
    k = atlas.order - 1
    return ConformalAtlas(atlas.dim, atlas.coords, charts, "poisson" if k == 2 else "np", k)


def contracted_pair(gp, f):
    """Global pair of the contracted atlas: (i_dF eta + (-1)^(k-1) F E, i_dF E)."""
    f = ScalarExpr.coerce(f)
    k = gp.order
    eta = contract_functions(gp.eta, [f])
    eta = eta + gp.companion * (f if k % 2 else -f)
    comp = contract_functions(gp.companion, [f])
    return GlobalPair(eta, gp.theta, comp, "nj", gp.coords)


def contracted_pair_ldr(gp, f):
    """Same pair through the twisted differential: (i_{d_theta F} eta, (-1)^k i_{d_theta F ^ theta} eta)."""
    dtf = ldr_differential(ScalarExpr.coerce(f), gp.theta, check_closed=False)
    eta = contract_right(dtf, gp.eta)
    comp = contract_right(wedge(dtf, gp.theta), gp.eta)
    if gp.order % 2:
        comp = -comp
    return GlobalPair(eta, gp.theta, comp, "nj", gp.coords)


def contracted_pair_signed(gp, f):
    """Companion written as (-1)^k i_dF E; equals ``contracted_pair`` only for even k."""
    out = contracted_pair(gp, f)
    if gp.order % 2:
        out = GlobalPair(out.eta, out.theta, -out.companion, out.kind, out.coords)
    return out


# ---------------------------------------------------------------- lift

@dataclass
class Lift:
    eta4: MultiVectorField
    companion3: MultiVectorField
    pairs: tuple
    report: VerificationReport


def lift_to_4gp(gp, h1, h2, box=None):
    """Order-4 tensor Lambda1 ^ Lambda2 and companion Z1^Lambda2 + Z2^Lambda1
    from the two Jacobi pairs of a locally conformal 3-bracket."""
    if gp.order != 3:
        raise AtlasError("the lift needs an order-3 global pair")
    proto = box or SampleBox.cube(gp.dim)
    p1, p2 = nj3_jacobi_pairs(gp.eta, gp.companion, h1, h2)
    (l1, z1), (l2, z2) = p1, p2
    eta4 = wedge(l1, l2)
    comp3 = wedge(z1, l2) + wedge(z2, l1)
    rep = VerificationReport()
    rep.add("lift.companion_relation",
            check_zero([("E3 - i_theta eta4", comp3 - contract_right(gp.theta, eta4))], proto))
    for i, (lam, z) in enumerate((p1, p2), start=1):
        for name, r in jacobi_residuals(lam, z).items():
            rep.add(f"pair{i}.jacobi.{name}", check_zero([(name, r)], proto))
    rep.extend(compatibility_report(p1, p2, proto))
    return Lift(eta4, comp3, (p1, p2), rep)
