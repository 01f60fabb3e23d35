import math

import numpy as np
import pytest

from conftest import load_fixture, residual, rpoly
from lcnambu.atlas import ConformalAtlas, glue
from lcnambu.dynamics import (
    DiagnosticsConfig,
    HamiltonianSystem,
    hamiltonian_vector_field,
    integrate,
    involutivity_report,
    involutivity_residual,
    nambu_jacobi_field,
    run_diagnostics,
)
from lcnambu.expr import ONE, SampleBox, equal_probabilistic, var
from lcnambu.multivector import apply, basis_vector, d, vector_field, zero_field
from lcnambu.structures import Bracket, StructureCandidate

x, y, z = var(0), var(1), var(2)
VOL3 = basis_vector(3, 0, 1, 2)
EULER_H1 = (x * x + y * y + z * z).scale(0.5)
EULER_H2 = (x * x + (y * y).scale(0.5) + (z * z).scale(1 / 3)).scale(0.5)


def euler_top():
    return HamiltonianSystem(StructureCandidate("np", VOL3), [EULER_H1, EULER_H2])


def oscillator():
    return HamiltonianSystem(StructureCandidate("poisson", basis_vector(2, 0, 1)), [(x * x + y * y).scale(0.5)])


def textbook_rk4(f, x0, t_end, n):
    h = t_end / n
    s = np.array(x0, dtype=float)
    for _ in range(n):
        k1 = f(s)
        k2 = f(s + h / 2 * k1)
        k3 = f(s + h / 2 * k2)
        k4 = f(s + h * k3)
        s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return s


def euler_rhs(s):
    a, b, c = s
    return np.array([-b * c / 6, 2 * a * c / 3, -a * b / 2])


class TestVectorFields:
    def test_oscillator_field(self):
        X = hamiltonian_vector_field(oscillator())
        assert X == vector_field([y, -x])

    def test_euler_top_is_gradient_cross_product(self):
        X = hamiltonian_vector_field(euler_top())
        ref = vector_field([(y * z).scale(-1 / 6), (x * z).scale(2 / 3), (x * y).scale(-0.5)])
        assert residual(X - ref) < 1e-15

    def test_pure_companion(self):
        Z = basis_vector(2, 0)
        h = x * y + 1
        X = nambu_jacobi_field(zero_field(2, 2), Z, [h])
        assert X == Z * (-h)

    def test_field_generates_bracket(self, rng):
        gp = glue(ConformalAtlas.from_json(load_fixture("lc_np4.json")))
        hs = [rpoly(5, rng, density=0.1) for _ in range(3)]
        X = nambu_jacobi_field(gp.eta, gp.companion, hs)
        f = rpoly(5, rng, density=0.1)
        # X is a derivation, so the zeroth-order part F E(dH..) of the bracket drops out
        rhs = Bracket(gp.eta, gp.companion)(f, *hs) - f * apply(gp.companion, *[d(h, 5) for h in hs])
        assert equal_probabilistic(apply(X, d(f, 5)), rhs)

    def test_hamiltonian_count(self):
        with pytest.raises(ValueError):
            HamiltonianSystem(StructureCandidate("np", VOL3), [EULER_H1])

    def test_hamiltonian_outside_chart(self):
        with pytest.raises(ValueError):
            HamiltonianSystem(StructureCandidate("poisson", basis_vector(2, 0, 1)), [z])


class TestIntegrate:
    def test_oscillator_period(self):
        traj = integrate(oscillator(), [1.0, 0.0], 2 * math.pi, 1e-3)
        assert traj.times[-1] == pytest.approx(2 * math.pi, abs=1e-12)
        assert np.linalg.norm(traj.states[-1] - [1.0, 0.0]) < 1e-8

    def test_zero_field_is_constant(self):
        sys = HamiltonianSystem(StructureCandidate("poisson", basis_vector(2, 0, 1)), [ONE])
        traj = integrate(sys, [0.3, -0.2], 1.0, 0.1)
        assert np.all(traj.states == [0.3, -0.2])

    def test_matches_independent_rk4(self):
        traj = integrate(euler_top(), [1.0, 0.1, 0.1], 10.0, 1e-3)
        ref = textbook_rk4(euler_rhs, [1.0, 0.1, 0.1], 10.0, 10000)
        assert traj.count == 10001
        assert np.max(np.abs(traj.states[-1] - ref)) < 1e-12

    def test_step_adjusted_to_span(self):
        traj = integrate(oscillator(), [1.0, 0.0], 1.0, 0.3)
        assert traj.count == 5 and traj.h == pytest.approx(0.25)

    def test_blow_up_truncates(self):
        sys = HamiltonianSystem(StructureCandidate("poisson", basis_vector(2, 0, 1)), [-x * y * y])
        # y' = y^2 leaves the reals at t = 1
        traj = integrate(sys, [1.0, 1.0], 10.0, 0.01)
        assert traj.blew_up and traj.count < 1001
        assert np.all(np.isfinite(traj.states))

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            integrate(oscillator(), [1.0], 1.0, 0.1)
        with pytest.raises(ValueError):
            integrate(oscillator(), [1.0, 0.0], 1.0, 0.0)

    def test_csv(self):
        traj = integrate(oscillator(), [1.0, 0.0], 0.2, 0.1)
        lines = traj.to_csv().splitlines()
        assert lines[0] == "t,x1,x2"
        assert len(lines) == 4


class TestDiagnostics:
    def test_euler_top(self):
        sys = euler_top()
        traj = integrate(sys, [1.0, 0.1, 0.1], 10.0, 1e-3)
        rep = run_diagnostics(sys, traj, functions=[x * x + y * y + z * z, EULER_H2, x * y])
        assert rep.passed, rep.to_json()
        for i in (1, 2):
            assert rep.laws[f"energy.H{i}.drift"].max_residual < 1e-6
        assert rep.laws["bi_hamiltonian.pointwise"].max_residual < 1e-10
        assert "preservation" in rep.laws

    def test_lc_dissipation(self):
        doc = load_fixture("lc_dissipation.json")
        gp = glue(ConformalAtlas.from_json(doc))
        H = (x * x + y * y).scale(0.5)
        sys = HamiltonianSystem(gp, [H])
        assert not sys.conservative
        traj = integrate(sys, [0.5, 0.2], 2.0, 1e-3)
        rep = run_diagnostics(sys, traj, pair=[x * y, x + y * y])
        assert rep.passed, rep.to_json()
        assert rep.laws["energy.H1.dissipation"].max_residual < 1e-5
        assert rep.laws["symbolic.dissipation"].max_residual < 1e-9
        assert rep.laws["homomorphism"].passed

    def test_lc_nambu_jacobi_laws(self):
        gp = glue(ConformalAtlas.from_json(load_fixture("lc_np3.json")))
        sys = HamiltonianSystem(gp, [x * y + z, z * z - y])
        traj = integrate(sys, [0.1, 0.2, 0.3], 1.0, 1e-3)
        rep = run_diagnostics(sys, traj)
        assert rep.passed, rep.to_json()
        assert {"consistency.eta", "consistency.companion", "bi_hamiltonian.symbolic"} <= set(rep.laws)

    def test_dissipation_law_detects_wrong_rate(self):
        gp = glue(ConformalAtlas.from_json(load_fixture("lc_dissipation.json")))
        sys = HamiltonianSystem(gp, [(x * x + y * y).scale(0.5)])
        traj = integrate(sys, [0.5, 0.2], 1.0, 1e-3)
        # pretend the companion vanishes: the same trajectory now violates conservation
        fake = HamiltonianSystem(StructureCandidate("poisson", gp.eta), sys.hamiltonians)
        rep = run_diagnostics(fake, traj)
        assert not rep.laws["energy.H1.rate"].passed
        assert rep.laws["energy.H1.rate"].worst_index is not None

    def test_bracket_conservation_on_oscillator(self):
        sys = oscillator()
        traj = integrate(sys, [1.0, 0.0], 1.0, 1e-3)
        rep = run_diagnostics(sys, traj, functions=[x, y])
        assert rep.laws["bracket_conservation.symbolic"].passed
        assert "bracket_conservation.trajectory" not in rep.laws

    def test_config_tolerance_is_used(self):
        sys = euler_top()
        traj = integrate(sys, [1.0, 0.1, 0.1], 10.0, 1e-2)
        strict = run_diagnostics(sys, traj, config=DiagnosticsConfig(drift_tol=1e-16))
        assert not strict.laws["energy.H1.drift"].passed

    def test_homomorphism_on_poisson(self, rng):
        sys = HamiltonianSystem(StructureCandidate("poisson", basis_vector(3, 0, 1, coeff=z)
                                                   + basis_vector(3, 1, 2, coeff=x)
                                                   + basis_vector(3, 2, 0, coeff=y)), [x * x])
        traj = integrate(sys, [0.1, 0.2, 0.3], 0.1, 1e-2)
        rep = run_diagnostics(sys, traj, pair=[rpoly(3, rng), rpoly(3, rng)])
        assert rep.laws["homomorphism"].passed

    def test_report_json(self):
        sys = oscillator()
        rep = run_diagnostics(sys, integrate(sys, [1.0, 0.0], 0.1, 1e-2))
        js = rep.to_json()
        assert list(js) == sorted(js)
        assert all("pass" in v for v in js.values())


class TestInvolutivity:
    def test_euler_top(self):
        fs = [x * y, z]
        r = involutivity_residual(VOL3, [EULER_H1, EULER_H2], fs)
        assert r.is_zero
        rep = involutivity_report(VOL3, [EULER_H1, EULER_H2], fs, SampleBox.cube(3))
        assert rep.laws["involutivity"].informational and rep.passed

    def test_informational_does_not_fail(self):
        eta = basis_vector(4, 0, 1, 2, coeff=var(3) + 2)
        rep = involutivity_report(eta, [var(3) * x, y], [z * var(3), x], SampleBox.cube(4))
        assert rep.passed
