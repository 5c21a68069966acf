import math

import numpy as np
import pytest

from qfiprotect.analytic import (
    UnidentifiableError,
    binomial,
    block_coefficients,
    crb,
    ghz_qfi_exact,
    ghz_qfi_sector_assembly,
    ghz_qfi_subtraction_form,
    logical_ghz_qfi_exact,
    raw_ghz_qfi_exact,
    two_level_qfi,
)
from qfiprotect.core import random_density_matrix, random_hermitian
from qfiprotect.fisher import qfi
from qfiprotect.noise import DephasingScenario
from qfiprotect.oracle import brute_force_ghz_qfi, brute_force_logical_qfi


class TestBlockCoefficients:
    def test_noiseless(self):
        c0 = block_coefficients(5, 0, 0.0, 0.0)
        assert (c0.a_k, c0.x_k, c0.y_k) == (1.0, 1.0, 1.0)
        for k in (1, 2):
            assert block_coefficients(5, k, 0.0, 0.0).a_k == 0.0

    def test_no_phase_flips(self):
        for k in range(4):
            assert block_coefficients(7, k, 0.2, 0.0).x_k == 1.0

    def test_worked_example(self):
        c = block_coefficients(3, 1, 0.1, 0.05)
        assert c.a_k == pytest.approx(0.09, rel=1e-12)
        assert c.x_k == pytest.approx(0.729, rel=1e-12)
        assert c.y_k == pytest.approx(0.5832, rel=1e-12)

    @pytest.mark.parametrize("n", [1, 3, 5, 9, 15, 41, 101])
    def test_sector_weights_sum_to_one(self, n):
        for px in (0.0, 0.01, 0.2, 0.5):
            total = sum(binomial(n, k) * block_coefficients(n, k, px, 0.1).a_k for k in range((n - 1) // 2 + 1))
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_contrast_ordering(self, rng):
        for _ in range(200):
            n = int(rng.choice([1, 3, 5, 7, 9]))
            k = int(rng.integers(0, (n - 1) // 2 + 1))
            c = block_coefficients(n, k, rng.uniform(0, 0.5), rng.uniform(0, 0.5))
            assert 0 <= c.a_k <= 1 and abs(c.x_k) <= 1 and abs(c.y_k) <= abs(c.x_k) + 1e-15

    @pytest.mark.parametrize("args", [(4, 0, 0.1, 0.1), (5, 3, 0.1, 0.1), (5, 0, 0.6, 0.1)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            block_coefficients(*args)


class TestTwoLevelQfi:
    def test_maximally_mixed_example(self):
        z = np.diag([1.0, -1.0])
        assert two_level_qfi(np.eye(2) / 2, z / 2) == pytest.approx(1.0)

    def test_zero_derivative(self, rng):
        assert two_level_qfi(random_density_matrix(2, rng), np.zeros((2, 2))) == 0.0

    def test_matches_sld_route(self, rng):
        for _ in range(1000):
            rho = random_density_matrix(2, rng)
            h = random_hermitian(2, rng)
            drho = -1j * (h @ rho - rho @ h)
            assert two_level_qfi(rho, drho) == pytest.approx(qfi(rho, drho), abs=1e-9)

    def test_pure_branch(self):
        psi = np.array([1, 1j]) / math.sqrt(2)
        rho = np.outer(psi, psi.conj())
        z = np.diag([1.0, -1.0])
        drho = -1j * (z / 2 @ rho - rho @ z / 2)
        assert two_level_qfi(rho, drho) == pytest.approx(1.0)

    def test_pure_state_with_kernel_derivative(self):
        with pytest.raises(ValueError):
            two_level_qfi(np.diag([1.0, 0.0]), np.diag([0.0, 0.1]))


class TestGhzQfi:
    @pytest.mark.parametrize("n", [3, 5, 15])
    def test_parallel_only(self, n):
        gz, t = 0.3, 1.0
        pz = (1 - math.exp(-gz * t)) / 2
        assert ghz_qfi_exact(n, t, 0.2, 0.0, pz) == pytest.approx(math.exp(-2 * n * gz * t) * n**2 * t**2, rel=1e-12)

    def test_transverse_only(self):
        assert ghz_qfi_exact(5, 1.3, 0.2, 0.2, 0.0) == pytest.approx(25 * 1.3**2, rel=1e-12)

    def test_bounded_and_equal_only_without_phase_flips(self, rng):
        for _ in range(200):
            n = int(rng.choice([1, 3, 5, 7]))
            t, w = rng.uniform(0.1, 2), rng.uniform(0, 2)
            px, pz = rng.uniform(0, 0.5), rng.uniform(1e-3, 0.5)
            f = ghz_qfi_exact(n, t, w, px, pz)
            assert 0 <= f < n**2 * t**2 * (1 - 1e-12)

    @pytest.mark.parametrize("n", [3, 5, 7])
    def test_monotone_in_pz(self, n):
        t, w = 1.0, 0.37
        for px in np.linspace(0, 0.5, 20):
            values = [ghz_qfi_exact(n, t, w, px, pz) for pz in np.linspace(0, 0.5, 20)]
            assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))

    def test_dual_route(self, rng):
        for _ in range(200):
            n = int(rng.choice([1, 3, 5, 7, 9, 15]))
            args = (n, rng.uniform(0.1, 2), rng.uniform(0, 2), rng.uniform(0, 0.5), rng.uniform(0, 0.5))
            exact = ghz_qfi_exact(*args)
            full = n**2 * args[1] ** 2
            assert ghz_qfi_subtraction_form(*args) == pytest.approx(exact, abs=1e-12 * full)
            assert ghz_qfi_sector_assembly(*args) == pytest.approx(exact, abs=1e-9 * full)

    def test_brute_force_example(self):
        assert ghz_qfi_exact(3, 1.0, 0.3, 0.1, 0.05) == pytest.approx(brute_force_ghz_qfi(3, 1.0, 0.3, 0.1, 0.05), rel=1e-8)

    def test_large_n_stays_finite(self):
        f = ghz_qfi_exact(149, 1.0, 0.001, 0.0005, 0.0025)
        assert 0 < f < 149**2


class TestLogical:
    def test_unit_blocks_match_raw(self):
        s = DephasingScenario(7, 1, 0.1, 0.2, 0.3, 1.1)
        assert logical_ghz_qfi_exact(s) == pytest.approx(raw_ghz_qfi_exact(s), rel=1e-13)

    def test_even_block_count(self):
        with pytest.raises(ValueError, match="odd block count"):
            logical_ghz_qfi_exact(DephasingScenario(6, 3, 0.1, 0.1))

    def test_oracle_at_three_blocks(self):
        s = DephasingScenario(9, 3, 0.2, 0.3, 0.4, 0.8)
        assert logical_ghz_qfi_exact(s) == pytest.approx(brute_force_logical_qfi(s), rel=1e-6)

    def test_recovery_matters(self):
        # without the syndrome recovery the block state keeps more information than the formula
        s = DephasingScenario(9, 3, 0.2, 0.3, 0.4, 0.8)
        assert brute_force_logical_qfi(s, recover=False) > logical_ghz_qfi_exact(s) + 1e-3

    def test_figure3_operating_point(self):
        base = dict(n_total=15, gamma_x=0.001, gamma_z=0.5, omega=0.001, time=1.0)
        f5 = logical_ghz_qfi_exact(DephasingScenario(block_size=5, **base))
        f1 = logical_ghz_qfi_exact(DephasingScenario(block_size=1, **base))
        assert crb(f5) < crb(f1)


class TestCrb:
    def test_examples(self):
        assert crb(1.0) == 1.0
        assert crb(4.0, 100) == pytest.approx(0.05)
        n, t = 7, 0.5
        assert crb(n**2 * t**2) == pytest.approx(1 / (n * t))

    @pytest.mark.parametrize("f", [0.0, -1.0])
    def test_unidentifiable(self, f):
        with pytest.raises(UnidentifiableError, match="unidentifiable"):
            crb(f)

    def test_bad_nu(self):
        with pytest.raises(ValueError):
            crb(1.0, 0)


def test_binomial_switches_to_lgamma():
    assert binomial(40, 20) == math.comb(40, 20)
    assert binomial(150, 75) == pytest.approx(math.comb(150, 75), rel=1e-10)
