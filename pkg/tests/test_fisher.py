import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfiprotect.core import (
    X,
    Y,
    Z,
    ParametricFamily,
    embed_pauli,
    evolve,
    identity_channel,
    random_channel,
    random_density_matrix,
    random_hermitian,
    random_pure_state,
)
from qfiprotect.fisher import (
    NotDifferentiableError,
    Povm,
    SingularOutcomeError,
    classical_fisher,
    classical_fisher_from_state,
    covariant_derivative,
    family_qfi,
    ozawa_error,
    qfi,
    qfi_loss,
    qfi_pure,
    sld,
    sld_measurement,
    state_derivative,
)
from qfiprotect.noise import dephasing_sequence, ghz_probe
from qfiprotect.schemes import immune_scheme, pauli_mixture, x_basis_povm
from qfiprotect.pauli import parse_pauli

PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / math.sqrt(2)


def collective_z(n, t=1.0):
    return t / 2 * sum(embed_pauli("Z", j, n) for j in range(n))


def random_family(rng, dim, pure=True):
    probe = random_pure_state(dim, rng) if pure else random_density_matrix(dim, rng)
    return ParametricFamily(probe, random_hermitian(dim, rng))


def random_povm(rng, dim, n_out):
    ch = random_channel(dim, n_out, rng)
    return Povm(tuple(k.conj().T @ k for k in ch.kraus_ops))


class TestStateDerivative:
    def test_zero_generator(self, rng):
        fam = ParametricFamily(random_density_matrix(2, rng), np.zeros((2, 2)))
        np.testing.assert_array_equal(state_derivative(fam, 0.4), np.zeros((2, 2)))

    def test_single_qubit(self):
        fam = ParametricFamily(PLUS, Z / 2)
        np.testing.assert_allclose(state_derivative(fam, 0.0), Y / 2, atol=1e-15)

    def test_finite_difference(self, rng):
        h = 1e-5
        for _ in range(20):
            fam = random_family(rng, 8, pure=bool(rng.integers(2)))
            theta = rng.uniform(-2, 2)
            fd = (evolve(fam, theta + h) - evolve(fam, theta - h)) / (2 * h)
            d = state_derivative(fam, theta)
            assert np.max(np.abs(fd - d)) < 1e-6
            assert abs(np.trace(d)) < 1e-12


class TestSld:
    def test_diagonal_family(self):
        res = sld(np.diag([0.5, 0.5]), np.diag([0.5, -0.5]))
        np.testing.assert_allclose(res.sld, np.diag([1, -1]))
        assert res.support_dimension == 2

    def test_pure_state_relation(self, rng):
        fam = random_family(rng, 4)
        theta = 0.8
        L = sld(evolve(fam, theta), state_derivative(fam, theta)).sld
        psi = fam.state_vector(theta)
        np.testing.assert_allclose(L @ psi, 2 * covariant_derivative(fam, theta), atol=1e-10)

    @pytest.mark.parametrize("rank", [1, 2, 4])
    def test_defining_equation(self, rng, rank):
        for _ in range(20):
            fam = ParametricFamily(random_density_matrix(4, rng, rank), random_hermitian(4, rng))
            rho, drho = evolve(fam, 0.3), state_derivative(fam, 0.3)
            L = sld(rho, drho).sld
            assert np.max(np.abs(L - L.conj().T)) < 1e-12
            assert np.linalg.norm((L @ rho + rho @ L) / 2 - drho) < 1e-8

    def test_kernel_derivative_rejected(self):
        rho = np.diag([1.0, 0, 0, 0]).astype(complex)
        drho = np.zeros((4, 4), dtype=complex)
        drho[2, 3] = drho[3, 2] = 0.1
        with pytest.raises(NotDifferentiableError):
            sld(rho, drho)


class TestQfi:
    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_ghz_heisenberg(self, n):
        t = 0.7
        fam = ParametricFamily(ghz_probe(n), collective_z(n, t))
        assert family_qfi(fam, 0.2) == pytest.approx(n**2 * t**2, rel=1e-10)

    def test_maximally_mixed(self, rng):
        fam = ParametricFamily(np.eye(4) / 4, random_hermitian(4, rng))
        assert family_qfi(fam, 0.5) == pytest.approx(0.0, abs=1e-20)

    def test_pure_formula_examples(self):
        assert qfi_pure(ParametricFamily(PLUS, Z / 2), 0.0) == pytest.approx(1.0)
        assert qfi_pure(ParametricFamily(ghz_probe(5), collective_z(5)), 0.0) == pytest.approx(25.0)
        assert qfi_pure(ParametricFamily(np.array([1, 0]), Z / 2), 0.3) == pytest.approx(0.0, abs=1e-15)

    def test_pure_formula_matches_sld_route(self, rng):
        fam = random_family(rng, 8)
        for theta in np.linspace(-3, 3, 20):
            assert qfi_pure(fam, theta) == pytest.approx(family_qfi(fam, theta), abs=1e-9)


class TestCovariantDerivative:
    def test_eigenstate(self):
        d = covariant_derivative(ParametricFamily(np.array([0, 1]), Z / 2), 0.4)
        np.testing.assert_allclose(d, 0, atol=1e-16)

    def test_plus_state(self):
        d = covariant_derivative(ParametricFamily(PLUS, Z / 2), 0.0)
        np.testing.assert_allclose(d, -0.5j * MINUS, atol=1e-15)

    def test_orthogonal_and_norm(self, rng):
        for _ in range(50):
            fam = random_family(rng, 4)
            theta = rng.uniform(-1, 1)
            d = covariant_derivative(fam, theta)
            assert abs(np.vdot(fam.state_vector(theta), d)) < 1e-12
            assert 4 * np.vdot(d, d).real == pytest.approx(qfi_pure(fam, theta), abs=1e-10)


class TestClassicalFisher:
    def test_x_basis_on_immune_probe(self):
        assert classical_fisher(x_basis_povm(3), immune_scheme(3), 0.3) == pytest.approx(4.0, abs=1e-10)

    def test_z_basis_uninformative(self):
        povm = Povm.from_basis(np.eye(2))
        assert classical_fisher(povm, ParametricFamily(PLUS, Z / 2), 0.4) == pytest.approx(0.0, abs=1e-15)

    def test_sld_basis_attains_qfi(self, rng):
        for _ in range(50):
            fam = random_family(rng, 2, pure=False)
            rho, drho = evolve(fam, 0.2), state_derivative(fam, 0.2)
            cf = classical_fisher_from_state(sld_measurement(rho, drho), rho, drho)
            assert cf == pytest.approx(qfi(rho, drho), abs=1e-8)

    def test_data_processing(self, rng):
        for _ in range(500):
            fam = random_family(rng, 4, pure=bool(rng.integers(2)))
            povm = random_povm(rng, 4, int(rng.integers(2, 6)))
            assert classical_fisher(povm, fam, 0.1) <= family_qfi(fam, 0.1) + 1e-8

    def test_singular_outcome(self):
        # outcome probability vanishes at theta = 0 but moves linearly (|0> measured on a rotating state)
        fam = ParametricFamily(np.array([0, 1]), X / 2)
        with pytest.raises(SingularOutcomeError):
            classical_fisher_from_state(
                Povm.from_basis(np.eye(2)), evolve(fam, 0.0), np.array([[1e-6, 0], [0, -1e-6]])
            )

    def test_povm_validation(self):
        with pytest.raises(ValueError):
            Povm((np.diag([1.0, 0.0]),))


class TestQfiLoss:
    def test_identity_channel(self, rng):
        fam = random_family(rng, 4)
        loss = qfi_loss(fam, 0.3, identity_channel(4))
        assert loss.value == pytest.approx(0.0, abs=1e-12)
        assert loss.difference == pytest.approx(0.0, abs=1e-10)

    def test_full_dephasing_kills_ghz(self):
        n, t = 3, 1.0
        fam = ParametricFamily(ghz_probe(n), collective_z(n, t))
        loss = qfi_loss(fam, 0.2, dephasing_sequence("Z", 0.5, n).to_kraus())
        assert loss.difference == pytest.approx(n**2 * t**2, abs=1e-9)
        assert loss.value == pytest.approx(n**2 * t**2, abs=1e-8)

    def test_correctable_error_is_free(self):
        ch = pauli_mixture([parse_pauli("III"), parse_pauli("ZII")], [0.8, 0.2])
        loss = qfi_loss(immune_scheme(3), 0.3, ch)
        assert loss.value < 1e-12
        assert abs(loss.difference) < 1e-9

    def test_identity_holds_and_is_nonnegative(self, rng):
        for _ in range(100):
            fam = random_family(rng, 4, pure=bool(rng.integers(2)))
            ch = random_channel(4, int(rng.integers(1, 4)), rng)
            loss = qfi_loss(fam, 0.4, ch)
            assert loss.difference == pytest.approx(loss.kraus_sum, abs=1e-8)
            assert loss.kraus_sum >= 0
            assert loss.qfi_after <= loss.qfi_before + 1e-9


class TestOzawa:
    def test_noisy_sld_gives_equality(self, rng):
        fam = random_family(rng, 4)
        ch = random_channel(4, 2, rng)
        rho, drho = evolve(fam, 0.1), state_derivative(fam, 0.1)
        q = sld(ch(rho), ch(drho)).sld
        assert ozawa_error(fam, 0.1, ch, q) == pytest.approx(qfi_loss(fam, 0.1, ch).kraus_sum, abs=1e-10)

    def test_identity_channel_with_own_sld(self, rng):
        fam = random_family(rng, 4)
        L = sld(evolve(fam, 0.1), state_derivative(fam, 0.1)).sld
        assert ozawa_error(fam, 0.1, identity_channel(4), L) == pytest.approx(0.0, abs=1e-20)

    def test_bounds_loss_from_above(self, rng):
        for _ in range(1000):
            fam = random_family(rng, 2, pure=bool(rng.integers(2)))
            ch = random_channel(2, 2, rng)
            q = random_hermitian(2, rng)
            assert ozawa_error(fam, 0.5, ch, q) >= qfi_loss(fam, 0.5, ch).difference - 1e-8

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            ozawa_error(random_family(rng, 2), 0.0, identity_channel(2), np.eye(4))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_kraus=st.integers(1, 4))
def test_monotonicity(seed, n_kraus):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, 8, pure=bool(rng.integers(2)))
    ch = random_channel(8, n_kraus, rng)
    theta = float(rng.uniform(-1, 1))
    assert family_qfi(fam, theta, ch) <= family_qfi(fam, theta) + 1e-9
