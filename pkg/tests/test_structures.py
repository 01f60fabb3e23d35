import itertools

import pytest

from conftest import residual, rpoly
from lcnambu.atlas import companion_of
from lcnambu.expr import ONE, ZERO, SampleBox, equal_probabilistic, exp, var
from lcnambu.multivector import (
    basis_vector,
    contract_functions,
    d,
    sn_bracket,
    wedge,
    zero_field,
)
from lcnambu.structures import (
    Bracket,
    FunctionFamily,
    StructureCandidate,
    StructureError,
    cascade_contract,
    cascade_stepwise,
    compatibility_report,
    compatibility_residuals,
    contract_step,
    first_order_residual,
    fix_entries,
    fundamental_identity_residual,
    jacobi_residuals,
    make_bracket,
    nj3_jacobi_pairs,
    verify,
)

X = [var(i) for i in range(6)]
x, y, z = X[:3]


def so3():
    return (basis_vector(3, 0, 1, coeff=z) + basis_vector(3, 1, 2, coeff=x)
            + basis_vector(3, 2, 0, coeff=y))


def r6():
    return basis_vector(6, 0, 1, 2) + basis_vector(6, 3, 4, 5)


def lc_r4_jacobi():
    w = basis_vector(4, 0, 1) + basis_vector(4, 2, 3)
    f = exp(-X[0])
    return StructureCandidate("jacobi", w * f, basis_vector(4, 1, coeff=-f))


def lc_nj3():
    f = exp(X[0].scale(-2))
    return basis_vector(3, 0, 1, 2, coeff=f), basis_vector(3, 1, 2, coeff=-f)


def contact():
    L = -wedge(basis_vector(3, 1), basis_vector(3, 0) + basis_vector(3, 2, coeff=y))
    return L, basis_vector(3, 2)


class TestCandidate:
    def test_orders_checked(self):
        with pytest.raises(StructureError):
            StructureCandidate("poisson", basis_vector(3, 0, 1, 2))
        with pytest.raises(StructureError):
            StructureCandidate("gp", basis_vector(3, 0, 1, 2))
        with pytest.raises(StructureError):
            StructureCandidate("nj", basis_vector(3, 0, 1, 2))
        with pytest.raises(StructureError):
            StructureCandidate("np", basis_vector(3, 0, 1, 2), basis_vector(3, 0, 1))
        with pytest.raises(StructureError):
            StructureCandidate("jacobi", basis_vector(3, 0, 1), basis_vector(3, 0, 1))
        with pytest.raises(StructureError):
            StructureCandidate("symplectic", basis_vector(3, 0, 1))


class TestBracket:
    def test_poisson(self):
        br = make_bracket(StructureCandidate("poisson", basis_vector(2, 0, 1)))
        assert br(x, y) == ONE

    def test_jacobi_pure_companion(self):
        br = make_bracket(StructureCandidate("jacobi", zero_field(2, 2), basis_vector(2, 0)))
        assert br(ONE, x) == ONE
        f, h = x * y, x * x + y
        assert br(f, h) == f * 2 * x - h * y

    def test_nambu_jacobi_constant_entry(self):
        br = make_bracket(StructureCandidate("nj", basis_vector(3, 0, 1, 2), basis_vector(3, 1, 2, coeff=-ONE)))
        assert br(ONE, y, z) == -ONE

    def test_arity(self):
        br = make_bracket(StructureCandidate("poisson", basis_vector(2, 0, 1)))
        with pytest.raises(ValueError):
            br(x)

    def test_skew_and_multilinear(self, rng):
        eta, E = lc_nj3()
        br = Bracket(eta, E)
        f, g, h = (rpoly(3, rng) for _ in range(3))
        assert equal_probabilistic(br(f, g, h), -br(g, f, h))
        assert equal_probabilistic(br(f, g, h), -br(f, h, g))
        assert equal_probabilistic(br(f.scale(3) + g, g, h), br(f, g, h).scale(3))

    def test_zero_companion_collapses(self, rng):
        eta = basis_vector(4, 0, 1, 2, coeff=X[3] + 1)
        a = Bracket(eta, zero_field(4, 2))
        b = Bracket(eta)
        fs = [rpoly(4, rng) for _ in range(3)]
        assert a(*fs) == b(*fs)
        gp = basis_vector(4, 0, 1, 2, 3)
        assert Bracket(gp, zero_field(4, 3))(*fs, X[0]) == Bracket(gp)(*fs, X[0])


class TestVerify:
    def test_so3_passes(self):
        rep = verify(StructureCandidate("poisson", so3()))
        assert rep.passed

    def test_r6_fails_with_witness(self):
        rep = verify(StructureCandidate("np", r6()))
        assert not rep.passed
        fi = rep.results["np.fundamental_identity"]
        assert not fi.passed and fi.witness is not None and fi.max_residual > 1.0
        assert not rep.results["np.contraction_poisson"].passed

    def test_lc_jacobi_passes(self):
        assert verify(lc_r4_jacobi()).passed

    def test_jacobi_with_wrong_companion_fails(self):
        c = lc_r4_jacobi()
        bad = StructureCandidate("jacobi", c.eta, -c.companion)
        rep = verify(bad)
        assert not rep.passed and rep.failures()["jacobi.sn_self"].witness is not None

    def test_lc_nj3_passes(self):
        eta, E = lc_nj3()
        assert verify(StructureCandidate("nj", eta, E)).passed

    def test_gp_and_gj(self):
        eta = basis_vector(5, 0, 1, 2, 3) + basis_vector(5, 1, 2, 3, 4) * 2
        assert verify(StructureCandidate("gp", eta)).passed
        scaled = eta * exp((X[4] - X[0]).scale(3))
        theta = d(X[0] - X[4], 5)
        assert verify(StructureCandidate("gj", scaled, companion_of(scaled, theta))).passed

    def test_report_json(self):
        rep = verify(StructureCandidate("np", r6()))
        js = rep.to_json()
        assert list(js) == sorted(js)
        for entry in js.values():
            assert set(entry) <= {"pass", "max_residual", "witness"}
            if not entry["pass"]:
                assert "point" in entry["witness"]


class TestFundamentalIdentity:
    def test_canonical_volume(self, rng):
        br = Bracket(basis_vector(3, 0, 1, 2))
        fs = [x, y, z, x * y, y * z + x * x]
        assert fundamental_identity_residual(br, *fs).is_zero
        fs = [rpoly(3, rng) for _ in range(5)]
        assert residual(fundamental_identity_residual(br, *fs), dim=3) < 1e-9

    def test_binary_case_is_jacobi(self, rng):
        br = Bracket(basis_vector(2, 0, 1))
        fs = [rpoly(2, rng) for _ in range(3)]
        assert fundamental_identity_residual(br, *fs).is_zero

    def test_r6_golden_value(self):
        br = Bracket(r6())
        got = fundamental_identity_residual(br, X[0] * X[3], X[1], X[2], X[4], X[5])
        assert got == -ONE

    def test_arity(self):
        with pytest.raises(ValueError):
            fundamental_identity_residual(Bracket(basis_vector(3, 0, 1, 2)), x, y)


class TestCascade:
    def test_canonical_fixer(self):
        lam, Z = cascade_contract(basis_vector(3, 0, 1, 2), None, [z])
        assert lam == basis_vector(3, 0, 1) and Z.is_zero

    def test_constant_fixer(self):
        lam, Z = cascade_contract(basis_vector(3, 0, 1, 2), None, [ONE])
        assert lam.is_zero and Z.is_zero

    def test_lc_example(self):
        eta, E = lc_nj3()
        lam, Z = cascade_contract(eta, E, [z])
        f = exp(x.scale(-2))
        # i_{dz} eta + z E, with Z = i_{dz} E
        assert lam == basis_vector(3, 0, 1, coeff=f) + basis_vector(3, 1, 2, coeff=-z * f)
        assert Z == basis_vector(3, 1, coeff=-f)
        res = jacobi_residuals(lam, Z)
        assert all(r.is_zero for r in res.values())

    def test_fixer_count(self):
        with pytest.raises(ValueError):
            cascade_contract(basis_vector(3, 0, 1, 2), None, [])

    @pytest.mark.parametrize("k", [3, 4, 5])
    def test_stepwise_equals_closed_form(self, rng, k):
        n = 6
        eta = zero_field(n, k)
        E = zero_field(n, k - 1)
        for idx in itertools.islice(itertools.combinations(range(n), k), 4):
            eta = eta + basis_vector(n, *idx, coeff=rpoly(n, rng, degree=1))
        for idx in itertools.islice(itertools.combinations(range(n), k - 1), 4):
            E = E + basis_vector(n, *idx, coeff=rpoly(n, rng, degree=1))
        fixers = [rpoly(n, rng) for _ in range(k - 2)]
        a = cascade_contract(eta, E, fixers)
        b = cascade_stepwise(eta, E, fixers)
        assert residual(a[0] - b[0]) < 1e-9 and residual(a[1] - b[1], dim=n) < 1e-9

    def test_contracted_pair_reproduces_bracket(self, rng):
        eta, E = lc_nj3()
        br = Bracket(eta, E)
        f3 = rpoly(3, rng)
        lam, Z = contract_step(eta, E, f3)
        f1, f2 = rpoly(3, rng), rpoly(3, rng)
        assert equal_probabilistic(Bracket(lam, Z)(f1, f2), br(f1, f2, f3))


class TestFixEntries:
    def test_first_contraction_sign(self):
        fx = fix_entries(basis_vector(3, 0, 1, 2), x, y)
        assert fx.lambda1 == -basis_vector(3, 1, 2)

    def test_constant_second_hamiltonian(self):
        fx = fix_entries(basis_vector(3, 0, 1, 2), x, ONE.scale(3))
        assert fx.lambda2.is_zero

    def test_euler_top_compatible(self):
        h1 = (x * x + y * y + z * z).scale(0.5)
        h2 = (x * x + (y * y).scale(0.5) + (z * z).scale(1 / 3)).scale(0.5)
        fx = fix_entries(basis_vector(3, 0, 1, 2), h1, h2)
        assert fx.report.passed
        assert sn_bracket(fx.lambda1, fx.lambda2).is_zero

    def test_holds_on_passing_nambu_tensors(self, rng):
        for eta in (basis_vector(3, 0, 1, 2, coeff=exp(x)), basis_vector(4, 0, 1, 3, coeff=X[2] + 2)):
            n = eta.dim
            assert verify(StructureCandidate("np", eta)).passed
            fx = fix_entries(eta, rpoly(n, rng), rpoly(n, rng))
            assert fx.report.passed


class TestJacobiPairs:
    def test_pairs_reproduce_bracket(self, rng):
        eta, E = lc_nj3()
        h1, h2 = rpoly(3, rng), rpoly(3, rng)
        (l1, z1), (l2, z2) = nj3_jacobi_pairs(eta, E, h1, h2)
        br = Bracket(eta, E)
        f, g = rpoly(3, rng), rpoly(3, rng)
        assert equal_probabilistic(Bracket(l1, z1)(f, g), br(f, h1, g))
        assert equal_probabilistic(Bracket(l2, z2)(f, g), br(f, g, h2))

    def test_pairs_from_nj3_are_compatible(self, rng):
        eta, E = lc_nj3()
        box = SampleBox.cube(3)
        p1, p2 = nj3_jacobi_pairs(eta, E, rpoly(3, rng), rpoly(3, rng))
        for lam, Z in (p1, p2):
            assert all(residual(r, box) < 1e-9 for r in jacobi_residuals(lam, Z).values())
        assert compatibility_report(p1, p2, box).passed

    def test_compatibility_sign_on_contact_pair(self):
        L, Z = contact()
        assert all(r.is_zero for r in jacobi_residuals(L, Z).values())
        p1, p2 = (L, Z), (L * 3, Z * 3)
        res = compatibility_residuals(p1, p2)
        assert res["bivector"].is_zero and res["vector"].is_zero
        # the other sign is refuted by the same pair
        literal = sn_bracket(L, L * 3) - (wedge(Z, L * 3) + wedge(Z * 3, L))
        assert residual(literal) > 1.0


class TestFirstOrder:
    def test_property_on_jacobi_types(self, rng):
        eta, E = lc_nj3()
        for c in (lc_r4_jacobi(), StructureCandidate("nj", eta, E)):
            br = make_bracket(c)
            n = c.dim
            fs = [rpoly(n, rng) for _ in range(c.order + 1)]
            assert residual(first_order_residual(br, *fs), dim=n) < 1e-9


class TestFamily:
    def test_standard_contents(self):
        fam = FunctionFamily.standard(3)
        assert len(fam.base) == 1 + 3 + 6
        assert len(fam.members) == 18
        assert set(fam.coordinates()) <= set(fam.members)

    def test_deterministic(self):
        a = FunctionFamily.standard(4, seed=3).random_members()
        b = FunctionFamily.standard(4, seed=3).random_members()
        c = FunctionFamily.standard(4, seed=4).random_members()
        assert a == b and a != c

    def test_tuple_budget(self):
        fam = FunctionFamily.standard(5)
        pairs = fam.tuples(2, 24)
        assert len(pairs) == 24 and all(len(t) == 2 for t in pairs)
        assert len(fam.tuples(1, 100)) == len(fam.members)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            FunctionFamily([], 3, n_random=0)


def test_contract_step_zero_companion():
    lam, Z = contract_step(basis_vector(3, 0, 1, 2), None, z)
    assert lam == contract_functions(basis_vector(3, 0, 1, 2), [z]) and Z.is_zero
    assert ZERO.is_zero
