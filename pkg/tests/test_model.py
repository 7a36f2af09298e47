import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zenobattery import model, qcore
from zenobattery.errors import IndexOutOfRangeError, ParameterError
from zenobattery.model import ModelParams, Qubit

SQRT2 = math.sqrt(2.0)
X, Y, Z = model.pauli("x"), model.pauli("y"), model.pauli("z")
SP, SM = model.pauli("plus"), model.pauli("minus")

positive = st.floats(0.1, 3.0)


class TestParams:
    def test_defaults_resonant(self):
        p = ModelParams()
        assert p.omega1 == pytest.approx(1 / SQRT2)
        assert p.capacity == pytest.approx(SQRT2)
        assert p.theta == pytest.approx(math.pi / 8)

    @pytest.mark.parametrize("field", ["omega0", "g", "gamma", "mu", "omega1"])
    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_non_positive(self, field, bad):
        with pytest.raises(ParameterError):
            ModelParams(**{field: bad})

    @given(positive, positive)
    def test_derived_eigenvalues(self, gamma, mu):
        p = ModelParams(gamma=gamma, mu=mu)
        assert 0 < p.theta < math.pi / 4
        assert p.lambda4 == pytest.approx(2 * mu / math.sqrt(1 + gamma**2))
        assert p.lambda3 == pytest.approx(2 * mu * gamma / math.sqrt(1 + gamma**2))
        assert (p.lambda1, p.lambda2) == (-p.lambda4, -p.lambda3)
        assert p.capacity == pytest.approx(p.lambda3)

    def test_bare_resonance(self):
        assert ModelParams().bare_resonant_omega1 == pytest.approx(SQRT2)

    def test_replace(self):
        p = ModelParams().replace(g=0.02)
        assert p.g == 0.02 and p.gamma == 1.0


class TestPauli:
    def test_z_convention(self):
        np.testing.assert_array_equal(Z, np.diag([1, -1]))

    def test_raising(self):
        np.testing.assert_array_equal(SP @ model.KET0, model.KET1)
        np.testing.assert_array_equal(SM @ model.KET1, model.KET0)

    @pytest.mark.parametrize("axis", ["x", "y", "z"])
    def test_involution(self, axis):
        np.testing.assert_array_equal(model.pauli(axis) @ model.pauli(axis), np.eye(2))

    def test_y_convention(self):
        # i|1><0| - i|0><1|
        np.testing.assert_array_equal(Y, 1j * np.outer(model.KET1, model.KET0) - 1j * np.outer(model.KET0, model.KET1))

    def test_unknown_axis(self):
        with pytest.raises(ValueError):
            model.pauli("w")


class TestEmbed:
    def test_modulator_slot(self):
        np.testing.assert_array_equal(model.embed(Z, Qubit.MODULATOR, 2), np.kron(Z, np.eye(2)))

    def test_charger_slot_index(self):
        assert model.embed(X, Qubit.CHARGER, 3)[0, 2] == 1

    def test_identity(self):
        np.testing.assert_array_equal(model.embed(np.eye(2), Qubit.BATTERY, 3), np.eye(8))

    @pytest.mark.parametrize("q,n", [(2, 2), (3, 3), (-1, 3), (0, 4), (0, 1)])
    def test_out_of_range(self, q, n):
        with pytest.raises(IndexOutOfRangeError):
            model.embed(Z, q, n)


class TestHamiltonians:
    def test_hmc_reduces_to_bare_form(self):
        expected = -np.kron(Z, np.eye(2)) + np.kron(X, X)
        np.testing.assert_allclose(model.build_hmc(ModelParams()), expected, atol=1e-15)

    @pytest.mark.parametrize("gamma,mu,l4", [(0.7, 1.0, 2 / math.sqrt(1.49)), (1.0, 2.0, 2 * SQRT2)])
    def test_hmc_top_eigenvalue(self, gamma, mu, l4):
        w = qcore.herm_eig(model.build_hmc(ModelParams(gamma=gamma, mu=mu))).eigenvalues
        assert w[-1] == pytest.approx(l4, abs=1e-10)

    @settings(max_examples=50)
    @given(positive, positive)
    def test_hmc_spectrum_closed_form(self, gamma, mu):
        p = ModelParams(gamma=gamma, mu=mu)
        h = model.build_hmc(p)
        assert qcore.hermiticity_defect(h) < 1e-12
        np.testing.assert_allclose(qcore.herm_eig(h).eigenvalues, sorted(p.eigenvalues), atol=1e-10)

    def test_hmcb_decoupled_limit(self):
        p = ModelParams(g=1e-300).replace(omega1=0.3)
        w = qcore.herm_eig(model.build_hmcb(p)).eigenvalues
        expected = sorted(lam + s * 0.3 for lam in p.eigenvalues for s in (1, -1))
        np.testing.assert_allclose(w, expected, atol=1e-10)

    def test_hmcb_matches_definition(self):
        p = ModelParams(omega1=0.4, g=0.05)
        i2 = np.eye(2)
        expected = (np.kron(model.build_hmc(p), i2)
                    + 2 * p.g * (np.kron(np.kron(i2, SP), SM) + np.kron(np.kron(i2, SM), SP))
                    - p.omega1 * np.kron(np.eye(4), Z))
        np.testing.assert_allclose(model.build_hmcb(p), expected, atol=1e-15)

    def test_hmcb_diagonal_element(self):
        p = ModelParams(omega1=0.4)
        v3 = np.kron(model.eigenbasis_mc(p)[2][0], model.KET1)
        assert qcore.expectation(v3, model.build_hmcb(p)) == pytest.approx(p.lambda3 + p.omega1, abs=1e-12)

    def test_hmcb_transition_strength(self):
        p = ModelParams(g=0.01)
        v1 = np.kron(model.eigenbasis_mc(p)[0][0], model.KET1)
        v3 = np.kron(model.eigenbasis_mc(p)[2][0], model.KET0)
        assert abs(np.vdot(v1, model.build_hmcb(p) @ v3)) == pytest.approx(p.g / SQRT2, abs=1e-14)

    @pytest.mark.parametrize("omega1,diag", [(1 / SQRT2, [0, SQRT2]), (1.0, [0, 2])])
    def test_hb(self, omega1, diag):
        np.testing.assert_allclose(model.build_hb(ModelParams(omega1=omega1)), np.diag(diag), atol=1e-15)


class TestTildeAndEigenbasis:
    def test_tilde_orthonormal(self):
        p = ModelParams()
        t0, t1 = model.tilde_state(model.KET0, p), model.tilde_state(model.KET1, p)
        assert np.vdot(t0, t0) == pytest.approx(1)
        assert abs(np.vdot(t0, t1)) < 1e-15

    def test_tilde_one_components(self):
        # exp(i sigma_y theta)|1> = sin(theta)|0> + cos(theta)|1> for sigma_y = i|1><0| - i|0><1|
        t1 = model.tilde_state(model.KET1, ModelParams())
        np.testing.assert_allclose(t1, [math.sin(math.pi / 8), math.cos(math.pi / 8)], atol=1e-15)

    def test_tilde_small_gamma_is_identity(self):
        np.testing.assert_allclose(model.rotation(ModelParams(gamma=1e-12)), np.eye(2), atol=1e-11)

    def test_rotation_is_matrix_exponential(self):
        from scipy.linalg import expm

        p = ModelParams(gamma=0.7)
        np.testing.assert_allclose(model.rotation(p), expm(1j * p.theta * Y), atol=1e-14)

    @settings(max_examples=50)
    @given(positive, positive)
    def test_eigenbasis_residuals(self, gamma, mu):
        p = ModelParams(gamma=gamma, mu=mu)
        h = model.build_hmc(p)
        pairs = model.eigenbasis_mc(p)
        for v, lam in pairs:
            assert np.linalg.norm(h @ v - lam * v) < 1e-10
        vs = np.array([v for v, _ in pairs])
        np.testing.assert_allclose(vs.conj() @ vs.T, np.eye(4), atol=1e-12)

    def test_eigenbasis_ordering(self):
        lams = [lam for _, lam in model.eigenbasis_mc(ModelParams())]
        np.testing.assert_allclose(lams, [-SQRT2, -SQRT2, SQRT2, SQRT2])

    def test_eigenbasis_structure(self):
        p = ModelParams(gamma=0.7, mu=1.3)
        r = model.rotation(p)
        expected = [
            np.kron(r @ model.KET_PLUS, model.KET_MINUS),
            np.kron(r @ model.KET0, model.KET_PLUS),
            np.kron(r @ model.KET1, model.KET_PLUS),
            np.kron(r @ model.KET_MINUS, model.KET_MINUS),
        ]
        for (v, _), e in zip(model.eigenbasis_mc(p), expected):
            assert abs(np.vdot(e, v)) == pytest.approx(1.0, abs=1e-10)


class TestPulse:
    def test_action_on_tilde_states(self):
        p = ModelParams()
        pulse = model.pulse_operator(p, 2)
        for ket, sign in ((model.KET0, 1), (model.KET1, -1)):
            state = np.kron(model.tilde_state(ket, p), model.KET_PLUS)
            np.testing.assert_allclose(pulse @ state, sign * state, atol=1e-15)

    def test_basis_change_identity(self):
        p = ModelParams()
        r = model.rotation(p)
        np.testing.assert_allclose(model.pulse_operator(p, 3), model.embed(r @ Z @ r.conj().T, 0, 3), atol=1e-15)

    @pytest.mark.parametrize("n", [2, 3])
    @given(gamma=positive)
    def test_involution_hermitian_unitary(self, n, gamma):
        pulse = model.pulse_operator(ModelParams(gamma=gamma), n)
        np.testing.assert_allclose(pulse @ pulse, np.eye(2**n), atol=1e-14)
        assert qcore.hermiticity_defect(pulse) < 1e-14

    def test_commutes_with_projector(self):
        p = ModelParams(gamma=0.7)
        t1 = model.tilde_state(model.KET1, p)
        proj = model.embed(np.outer(t1, t1.conj()), 0, 3)
        pulse = model.pulse_operator(p, 3)
        np.testing.assert_allclose(pulse @ proj, proj @ pulse, atol=1e-15)


class TestInitialState:
    @given(positive, positive)
    def test_energies(self, gamma, mu):
        p = ModelParams(gamma=gamma, mu=mu)
        psi = model.initial_state(p)
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)
        assert qcore.expectation(psi, model.charger_energy_operator(p)) == pytest.approx(p.lambda3, abs=1e-12)
        assert qcore.expectation(psi, model.battery_energy_operator(p)) == pytest.approx(0.0, abs=1e-15)

    def test_unit_example(self):
        p = ModelParams()
        assert qcore.expectation(model.initial_state(p), model.charger_energy_operator(p)) == pytest.approx(SQRT2)


class TestEffectiveCharger:
    def test_bare_point(self):
        np.testing.assert_allclose(model.effective_charger_h(ModelParams()), X / SQRT2, atol=1e-15)

    def test_untraced_has_identity_shift(self):
        p = ModelParams()
        np.testing.assert_allclose(model.effective_charger_h(p, traceless=False),
                                   (np.eye(2) + X) / SQRT2, atol=1e-15)

    @given(positive, positive)
    def test_plus_minus_eigenstates(self, gamma, mu):
        p = ModelParams(gamma=gamma, mu=mu)
        for traceless in (True, False):
            h = model.effective_charger_h(p, traceless)
            for ket in (model.KET_PLUS, model.KET_MINUS):
                out = h @ ket
                residual = out - np.vdot(ket, out) * ket
                assert np.linalg.norm(residual) < 1e-12
            w = np.linalg.eigvalsh(h)
            assert w[1] - w[0] == pytest.approx(p.lambda3, abs=1e-12)

    def test_excited_energy(self):
        h = model.effective_charger_h(ModelParams())
        assert qcore.expectation(model.KET_PLUS, h) == pytest.approx(1 / SQRT2)
