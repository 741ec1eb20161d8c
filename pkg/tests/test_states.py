"""State constructors, the dephasing channel and serialization."""

import math

import numpy as np
import pytest

from latticeprobe.states import (
    MIXED,
    PURE,
    PURE_DEPHASED,
    QubitRegisterState,
    apply_dephasing,
    count_01_substrings,
    make_classical_correlated,
    make_cluster,
    make_ghz,
    make_macro_superposition,
    make_phi_state,
    make_werner,
    mixed_state,
    pure_state,
    state_from_json,
    state_to_json,
)
from latticeprobe.purity import reduced_purity

from conftest import dephase_kraus_oracle, full_density_matrix, random_pure_vector


class TestMacroSuperposition:
    def test_ghz_is_gamma_zero(self):
        st = make_macro_superposition(3, 0.0)
        expect = np.zeros(8, dtype=complex)
        expect[0] = expect[7] = 1.0 / math.sqrt(2)
        np.testing.assert_allclose(st.data, expect, atol=1e-15)

    def test_gamma_one_is_all_zero_ket(self):
        st = make_macro_superposition(4, 1.0)
        expect = np.zeros(16, dtype=complex)
        expect[0] = 1.0
        np.testing.assert_allclose(st.data, expect, atol=1e-15)

    @pytest.mark.parametrize("gamma", [0.5, 0.3 + 0.4j, 0.99])
    def test_normalized(self, gamma):
        st = make_macro_superposition(5, gamma)
        assert abs(np.vdot(st.data, st.data).real - 1.0) < 1e-12

    def test_rejects_large_gamma(self):
        with pytest.raises(ValueError):
            make_macro_superposition(3, 1.2)

    def test_rejects_degenerate_normalization(self):
        with pytest.raises(ValueError, match="degenerate"):
            make_macro_superposition(1, -1.0)
        with pytest.raises(ValueError, match="degenerate"):
            make_macro_superposition(2, 1.0j)


class TestPhiState:
    def test_substring_count_example(self):
        # 0b01101 read left to right: "01" at positions 1-2 and 4-5
        assert count_01_substrings(0b01101, 5) == 2

    def test_phi_zero_is_uniform_product(self):
        st = make_phi_state(3, 0.0)
        np.testing.assert_allclose(st.data, np.full(8, 2.0**-1.5), atol=1e-15)

    def test_n2_pi_amplitudes(self):
        st = make_phi_state(2, math.pi)
        np.testing.assert_allclose(st.data, np.array([1, -1, 1, 1]) / 2.0, atol=1e-14)

    def test_cluster_alias(self):
        np.testing.assert_allclose(
            make_cluster(4).data, make_phi_state(4, math.pi).data
        )

    @pytest.mark.parametrize("n", [2, 5, 8])
    def test_sign_of_phase_does_not_change_purities(self, n):
        rng = np.random.default_rng(n)
        plus = make_phi_state(n, 1.1)
        minus = make_phi_state(n, -1.1)
        for bits in rng.integers(1, 1 << n, size=6):
            assert reduced_purity(plus, int(bits)) == pytest.approx(
                reduced_purity(minus, int(bits)), abs=1e-12
            )


class TestDenseConstructors:
    def test_werner_limits(self):
        ghz = make_ghz(2)
        proj = np.outer(ghz.data, np.conj(ghz.data))
        np.testing.assert_allclose(make_werner(2, 0.0).data, proj, atol=1e-15)
        np.testing.assert_allclose(make_werner(2, 1.0).data, np.eye(4) / 4, atol=1e-15)

    def test_werner_midpoint_valid(self):
        rho = np.asarray(make_werner(2, 0.5).data)
        assert abs(np.trace(rho).real - 1.0) < 1e-12
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)

    def test_classical_correlated_single_qubit(self):
        np.testing.assert_allclose(
            make_classical_correlated(1).data, np.eye(2) / 2, atol=1e-15
        )

    def test_classical_correlated_reduction(self):
        st = make_classical_correlated(3)
        assert reduced_purity(st, [2]) == pytest.approx(0.5, abs=1e-12)

    def test_dense_cap(self):
        with pytest.raises(ValueError):
            make_werner(11, 0.1)

    def test_mixed_state_rejects_nonpsd(self):
        bad = np.diag([1.5, -0.5]).astype(complex)
        with pytest.raises(ValueError, match="semidefinite"):
            mixed_state(bad)


class TestValidation:
    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError, match="normalized"):
            pure_state(np.array([1.0, 1.0]))

    def test_normalize_flag(self):
        st = pure_state(np.array([1.0, 1.0]), normalize=True)
        assert abs(np.vdot(st.data, st.data).real - 1.0) < 1e-15

    def test_qubit_bounds(self):
        with pytest.raises(ValueError):
            QubitRegisterState(n=16, kind=PURE, data=np.zeros(1 << 16))

    def test_immutable(self):
        st = make_ghz(2)
        with pytest.raises(ValueError):
            st.data[0] = 0.0


class TestDephasing:
    def test_identity_channel(self):
        st = make_ghz(3)
        assert apply_dephasing(st, 0.0) is st

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            apply_dephasing(make_ghz(2), 1.5)

    def test_pure_becomes_tagged(self):
        st = apply_dephasing(make_ghz(3), 0.3)
        assert st.kind == PURE_DEPHASED
        assert st.dephasing == 0.3

    def test_composition(self):
        st = apply_dephasing(apply_dephasing(make_ghz(3), 0.2), 0.5)
        assert st.dephasing == pytest.approx(1.0 - 0.8 * 0.5, abs=1e-15)

    def test_ghz_full_purity_closed_form(self):
        # full purity (1 + (1-d)**(2n)) / 2 for the dephased GHZ family
        for n in (2, 5, 9):
            for d in (0.1, 0.45, 0.9):
                st = apply_dephasing(make_ghz(n), d)
                expect = (1.0 + (1.0 - d) ** (2 * n)) / 2.0
                assert reduced_purity(st, (1 << n) - 1) == pytest.approx(expect, abs=1e-12)
                assert reduced_purity(st, [1]) == pytest.approx(0.5, abs=1e-12)

    def test_dense_full_damping(self):
        ghz = make_ghz(2)
        dense = mixed_state(np.outer(ghz.data, np.conj(ghz.data)))
        out = apply_dephasing(dense, 1.0)
        np.testing.assert_allclose(out.data, np.diag([0.5, 0, 0, 0.5]), atol=1e-14)

    def test_dense_channel_matches_kraus_oracle(self):
        rng = np.random.default_rng(11)
        for n in (2, 3):
            psi = random_pure_vector(rng, n)
            dense = mixed_state(np.outer(psi, psi.conj()))
            for d in (0.25, 0.8):
                out = apply_dephasing(dense, d)
                oracle = dephase_kraus_oracle(np.outer(psi, psi.conj()), d, n)
                np.testing.assert_allclose(out.data, oracle, atol=1e-12)

    @pytest.mark.parametrize("d", [0.0, 0.3, 1.0])
    @pytest.mark.parametrize("n", [2, 4, 6, 8])
    def test_representation_equivalence(self, n, d):
        # symbolic damping on amplitudes vs the explicit subset-sum channel
        rng = np.random.default_rng(100 * n + int(10 * d))
        psi = random_pure_vector(rng, n)
        symbolic = apply_dephasing(pure_state(psi), d)
        dense = apply_dephasing(mixed_state(np.outer(psi, psi.conj())), d)
        for bits in rng.integers(1, 1 << n, size=5):
            assert reduced_purity(symbolic, int(bits)) == pytest.approx(
                reduced_purity(dense, int(bits)), abs=1e-10
            )

    @pytest.mark.parametrize("n", [3, 5])
    def test_dephasing_locality(self, n):
        # dephasing a traced-out qubit is invisible to the reduced matrix
        rng = np.random.default_rng(n)
        psi = random_pure_vector(rng, n)
        dense = mixed_state(np.outer(psi, psi.conj()))
        full = apply_dephasing(dense, 0.4)
        sub_bits = (1 << (n - 1)) | 1  # first and last qubits
        inside_only = dephase_selected(np.asarray(dense.data), 0.4, n, sub_bits)
        from conftest import partial_trace

        np.testing.assert_allclose(
            partial_trace(np.asarray(full.data), n, sub_bits),
            partial_trace(inside_only, n, sub_bits),
            atol=1e-12,
        )


def dephase_selected(rho: np.ndarray, d: float, n: int, bits: int) -> np.ndarray:
    """Phase noise applied only to the masked qubits (test-local helper)."""
    out = rho
    for q in range(1, n + 1):
        if not bits >> (n - q) & 1:
            continue
        idx = np.arange(1 << n)
        sign = 1.0 - 2.0 * ((idx >> (n - q)) & 1)
        zrz = (sign[:, None] * sign[None, :]) * out
        out = (1.0 - d / 2.0) * out + (d / 2.0) * zrz
    return out


class TestSerialization:
    def test_round_trip_pure(self):
        st = make_macro_superposition(3, 0.4 + 0.1j)
        back = state_from_json(state_to_json(st))
        np.testing.assert_allclose(back.data, st.data, atol=1e-15)
        assert back.kind == PURE

    def test_round_trip_dephased(self):
        st = apply_dephasing(make_cluster(3), 0.35)
        back = state_from_json(state_to_json(st))
        assert back.kind == PURE_DEPHASED
        assert back.dephasing == 0.35

    def test_round_trip_mixed(self):
        st = make_werner(2, 0.3)
        back = state_from_json(state_to_json(st))
        assert back.kind == MIXED
        np.testing.assert_allclose(back.data, st.data, atol=1e-15)


class TestOracleAgainstFullMatrix:
    """Every constructor's purities agree with the explicit partial trace."""

    @pytest.mark.parametrize(
        "state",
        [
            make_macro_superposition(4, 0.6),
            make_phi_state(4, 1.3),
            make_werner(3, 0.4),
            make_classical_correlated(4),
            apply_dephasing(make_cluster(4), 0.2),
        ],
        ids=["macro", "phi", "werner", "classical", "dephased-cluster"],
    )
    def test_reduced_matches_brute(self, state):
        from conftest import brute_purity

        rng = np.random.default_rng(5)
        for bits in rng.integers(1, 1 << state.n, size=6):
            assert reduced_purity(state, int(bits)) == pytest.approx(
                brute_purity(state, int(bits)), abs=1e-11
            )
