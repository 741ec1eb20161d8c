"""Purity computations, averages, dedup guards and the inequality checks."""

import itertools
import math

import numpy as np
import pytest

from latticeprobe.purity import (
    PurityProfile,
    SubsetMask,
    all_subset_purities,
    average_purity,
    avpur_profile,
    chain_subset_purities,
    check_subset_inequalities,
    macro_purity_closed_form,
    reduced_purity,
    werner_detection_threshold,
    profile_to_csv,
)
from latticeprobe.states import (
    apply_dephasing,
    make_classical_correlated,
    make_cluster,
    make_ghz,
    make_macro_superposition,
    make_phi_state,
    make_werner,
    mixed_state,
    pure_state,
)

from conftest import brute_average_purity, brute_purity, random_pure_vector

# frozen by the explicit partial-trace oracle (see conftest.brute_purity)
MACRO_5_07_K2 = 0.7542858928774123


class TestSubsetMask:
    def test_qubit_msb_convention(self):
        m = SubsetMask.from_qubits(4, [1])
        assert m.bits == 0b1000
        assert m.qubits == (1,)

    def test_complement(self):
        m = SubsetMask.from_qubits(3, [1, 3])
        assert m.complement().qubits == (2,)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            SubsetMask(3, 8)


class TestReducedPurity:
    def test_ghz_subsets_half(self):
        st = make_ghz(3)
        assert reduced_purity(st, [1]) == pytest.approx(0.5, abs=1e-12)
        assert reduced_purity(st, [1, 2]) == pytest.approx(0.5, abs=1e-12)

    def test_product_state_all_one(self):
        amps = np.zeros(16, dtype=complex)
        amps[0b0110] = 1.0
        st = pure_state(amps)
        for bits in range(1, 16):
            assert reduced_purity(st, bits) == pytest.approx(1.0, abs=1e-12)

    def test_phi_interior_pair_closed_form(self):
        for phi in (0.3, 1.7, math.pi):
            st = make_phi_state(6, phi)
            expect = (1.0 + math.cos(phi / 2.0) ** 2) ** 2 / 4.0
            assert reduced_purity(st, [2, 3]) == pytest.approx(expect, abs=1e-12)
        assert reduced_purity(make_phi_state(6, math.pi), [2, 3]) == pytest.approx(
            0.25, abs=1e-12
        )

    @pytest.mark.parametrize("n", [2, 4, 6, 8])
    def test_bounds_and_complement_symmetry(self, n):
        rng = np.random.default_rng(n)
        st = pure_state(random_pure_vector(rng, n))
        for bits in rng.integers(1, 1 << n, size=8):
            bits = int(bits)
            k = bits.bit_count()
            val = reduced_purity(st, bits)
            assert 2.0**-k - 1e-12 <= val <= 1.0 + 1e-12
            comp = ((1 << n) - 1) ^ bits
            assert val == pytest.approx(reduced_purity(st, comp), abs=1e-10)

    def test_empty_subset(self):
        assert reduced_purity(make_ghz(2), 0) == 1.0


class TestMacroClosedForm:
    def test_ghz_values(self):
        assert macro_purity_closed_form(4, 0.0, 2) == pytest.approx(0.5, abs=1e-15)
        assert macro_purity_closed_form(4, 0.0, 0) == pytest.approx(1.0, abs=1e-15)
        assert macro_purity_closed_form(4, 0.0, 4) == pytest.approx(1.0, abs=1e-15)

    def test_frozen_oracle_value(self):
        assert macro_purity_closed_form(5, 0.7, 2) == pytest.approx(
            MACRO_5_07_K2, abs=1e-10
        )
        st = make_macro_superposition(5, 0.7)
        assert reduced_purity(st, [2, 4]) == pytest.approx(MACRO_5_07_K2, abs=1e-10)

    @pytest.mark.parametrize("gamma", [0.0, 0.3, 0.6 + 0.2j, 0.9])
    @pytest.mark.parametrize("n", [2, 4, 6, 8])
    def test_grid_against_brute_force(self, n, gamma):
        st = make_macro_superposition(n, gamma)
        for k in range(n + 1):
            bits = ((1 << k) - 1) << (n - k)
            assert macro_purity_closed_form(n, gamma, k) == pytest.approx(
                brute_purity(st, bits), abs=1e-10
            )


class TestAveragePurity:
    def test_k_zero_is_one(self):
        assert average_purity(make_werner(3, 0.7), 0) == 1.0

    def test_ghz_profile(self):
        prof = avpur_profile(make_ghz(10))
        np.testing.assert_allclose(prof.avpur[1:-1], 0.5, atol=1e-12)
        assert prof.avpur[0] == 1.0
        assert prof.avpur[10] == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [4, 6])
    def test_pure_complement_symmetry_of_profile(self, n):
        rng = np.random.default_rng(n + 17)
        prof = avpur_profile(pure_state(random_pure_vector(rng, n)))
        for k in range(n + 1):
            assert prof.avpur[k] == pytest.approx(prof.avpur[n - k], abs=1e-10)

    def test_permutation_dedup_matches_enumeration(self):
        for st in (make_macro_superposition(6, 0.5), make_werner(5, 0.3)):
            for k in (1, 2, 3):
                assert average_purity(st, k) == pytest.approx(
                    brute_average_purity(st, k), abs=1e-12
                )

    def test_permutation_dedup_guard_catches_lies(self):
        rng = np.random.default_rng(2)
        st = pure_state(random_pure_vector(rng, 4), symmetry="permutation")
        with pytest.raises(RuntimeError, match="dedup check failed"):
            average_purity(st, 2)

    @pytest.mark.parametrize("d", [0.0, 0.3])
    def test_chain_dedup_matches_enumeration(self, d):
        st = apply_dephasing(make_phi_state(7, 1.2), d)
        for k in (1, 3, 5, 7):
            assert average_purity(st, k) == pytest.approx(
                brute_average_purity(st, k), abs=1e-11
            )

    def test_chain_dedup_guard_catches_lies(self):
        rng = np.random.default_rng(3)
        st = pure_state(
            random_pure_vector(rng, 5), symmetry="chain", chain_phase=1.0
        )
        with pytest.raises(RuntimeError, match="dedup check failed"):
            average_purity(st, 2)

    def test_separable_monotonicity(self):
        # product and classically correlated states never gain purity with size
        states = [make_classical_correlated(6), make_phi_state(6, 0.0)]
        rng = np.random.default_rng(8)
        single = rng.normal(size=(6, 2)) + 1j * rng.normal(size=(6, 2))
        amps = np.array([1.0])
        for row in single:
            amps = np.kron(amps, row / np.linalg.norm(row))
        states.append(pure_state(amps))
        for st in states:
            prof = avpur_profile(st).avpur
            assert np.all(np.diff(prof) <= 1e-12)


class TestChainTransfer:
    @pytest.mark.parametrize("n", [2, 4, 6, 8])
    def test_against_brute_force(self, n):
        rng = np.random.default_rng(n)
        for phi in (0.0, 0.9, math.pi):
            for d in (0.0, 0.4):
                st = apply_dephasing(make_phi_state(n, phi), d)
                masks = rng.integers(0, 1 << n, size=6)
                vals = chain_subset_purities(n, phi, d, masks)
                for bits, val in zip(masks, vals):
                    assert val == pytest.approx(brute_purity(st, int(bits)), abs=1e-12)

    def test_chain_classes_independent_of_n(self):
        # the four reference subset classes do not change with chain length
        subsets = ([2], [2, 5], [2, 3, 4, 5], [1, 2, 3, 4, 5])
        for phi in np.linspace(0.0, 2 * math.pi, 9):
            vals = {
                n: [reduced_purity(make_phi_state(n, phi), s) for s in subsets]
                for n in (6, 7, 8)
            }
            np.testing.assert_allclose(vals[6], vals[7], atol=1e-12)
            np.testing.assert_allclose(vals[6], vals[8], atol=1e-12)


class TestInequalities:
    def test_classical_not_violated(self):
        prof = avpur_profile(make_classical_correlated(8))
        assert not check_subset_inequalities(prof).violated

    def test_ghz_violated_with_witness(self):
        prof = avpur_profile(make_ghz(6))
        verdict = check_subset_inequalities(prof)
        assert verdict.violated
        assert verdict.witness[1] == 6
        assert verdict.margin == pytest.approx(0.5, abs=1e-12)

    def test_subset_map_mode(self):
        st = make_phi_state(6, math.pi)
        verdict = check_subset_inequalities(all_subset_purities(st))
        assert verdict.violated
        a, b = verdict.witness
        assert a & b == a  # witness pair is nested

    def test_werner_threshold_formula(self):
        assert werner_detection_threshold(2) == pytest.approx(
            1.0 - 1.0 / math.sqrt(3.0), abs=1e-15
        )
        assert werner_detection_threshold(3) == pytest.approx(
            1.0 - 1.0 / math.sqrt(5.0), abs=1e-15
        )
        assert werner_detection_threshold(40) > 0.999

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_werner_threshold_by_bisection(self, n):
        def violated(d):
            return check_subset_inequalities(avpur_profile(make_werner(n, d))).violated

        lo, hi = 0.0, 1.0
        assert violated(lo) and not violated(hi)
        while hi - lo > 1e-7:
            mid = 0.5 * (lo + hi)
            if violated(mid):
                lo = mid
            else:
                hi = mid
        assert 0.5 * (lo + hi) == pytest.approx(
            werner_detection_threshold(n), abs=1e-6
        )


class TestProfileType:
    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            PurityProfile(n=2, avpur=np.array([1.0, 0.5]))
        with pytest.raises(ValueError, match="finite"):
            PurityProfile(n=2, avpur=np.array([1.0, np.nan, 0.5]))

    def test_bounds_check(self):
        good = PurityProfile(n=2, avpur=np.array([1.0, 0.6, 0.3]))
        assert good.within_bounds()
        bad = PurityProfile(n=2, avpur=np.array([1.0, 0.1, 0.3]))
        assert not bad.within_bounds()

    def test_csv_round_trip(self, tmp_path):
        prof = avpur_profile(make_ghz(3))
        path = tmp_path / "profile.csv"
        with open(path, "w") as fh:
            profile_to_csv(prof, fh)
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "k,avpur"
        parsed = [float(r.split(",")[1]) for r in rows[1:]]
        np.testing.assert_allclose(parsed, prof.avpur)
