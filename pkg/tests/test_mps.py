import numpy as np
import pytest
from hypothesis import given, settings

from cutknit.circuit import Circuit, cx, h, simulate_statevector, x
from cutknit.encoder import encode
from cutknit.mps import bond_profile_csv, mps_amplitude, mps_fidelity, mps_from_zero, simulate_mps
from conftest import circuits, random_circuit


@settings(max_examples=30, deadline=None)
@given(circuits(min_qubits=2, max_qubits=8, max_depth=40))
def test_untruncated_mps_matches_statevector(circ):
    ref = simulate_statevector(circ).amplitudes
    got = simulate_mps(circ, chi_max=256).to_vector()
    assert np.max(np.abs(got - ref)) < 1e-10


def test_ten_qubit_random_circuits():
    rng = np.random.default_rng(7)
    for _ in range(3):
        circ = random_circuit(rng, 10, 80)
        ref = simulate_statevector(circ).amplitudes
        assert np.max(np.abs(simulate_mps(circ, chi_max=1024).to_vector() - ref)) < 1e-10


@pytest.mark.parametrize("n", [2, 5, 9])
def test_ghz_bond_dimension_two(n):
    ghz = Circuit(n, 0, (h(0),) + tuple(cx(i, i + 1) for i in range(n - 1)))
    st = simulate_mps(ghz)
    assert max(st.bond_dims) == 2
    assert abs(mps_amplitude(st, "1" * n)) ** 2 == pytest.approx(0.5)
    assert bond_profile_csv(st).splitlines()[0] == "bond,dim"


def test_long_range_gate_routed_through_swaps():
    circ = Circuit(6, 0, (h(0), cx(0, 5)))
    st = simulate_mps(circ)
    assert abs(mps_amplitude(st, "100001")) ** 2 == pytest.approx(0.5)


def test_truncation_records_discarded_weight():
    rng = np.random.default_rng(3)
    circ = random_circuit(rng, 8, 120)
    exact = simulate_mps(circ, chi_max=256)
    cut = simulate_mps(circ, chi_max=2)
    assert max(cut.bond_dims) <= 2
    assert cut.discarded_weight > 0
    assert mps_fidelity(cut, exact) < 1.0


def test_zero_state_and_examples():
    st = mps_from_zero(3)
    assert mps_amplitude(st, "000") == 1 and mps_amplitude(st, "101") == 0
    assert st.bond_dims == [1, 1]
    assert np.allclose(mps_from_zero(1).to_vector(), [1, 0])
    plus = simulate_mps(Circuit(1, 0, (h(0),)))
    assert np.allclose(plus.to_vector(), [2 ** -0.5] * 2)


def test_ghz3_amplitudes_and_fidelities():
    ghz = Circuit(3, 0, (h(0), cx(0, 1), cx(1, 2)))
    exact = simulate_mps(ghz)
    assert mps_amplitude(exact, "000") == pytest.approx(2 ** -0.5)
    assert mps_amplitude(exact, "010") == 0
    assert mps_fidelity(exact, exact) == pytest.approx(1.0)
    one = simulate_mps(Circuit(1, 0, (x(0),)))
    assert mps_fidelity(simulate_mps(Circuit(1, 0, ())), one) == pytest.approx(0.0)
    # a chi=1 GHZ keeps one Schmidt branch: overlap 1/2, the best any product state achieves
    assert mps_fidelity(simulate_mps(ghz, chi_max=1), exact) == pytest.approx(0.5)


def test_encoder_circuit_with_small_bond_cap():
    circ = encode(np.random.default_rng(2).uniform(-1, 1, 4), 2, 1)
    ref = simulate_statevector(circ).amplitudes
    assert abs(np.vdot(ref, simulate_mps(circ, chi_max=8).to_vector())) ** 2 == pytest.approx(1, abs=1e-10)


def test_all_amplitudes_six_qubits():
    circ = random_circuit(np.random.default_rng(5), 6, 50)
    ref = simulate_statevector(circ).amplitudes
    st = simulate_mps(circ)
    got = np.array([mps_amplitude(st, format(i, "06b")) for i in range(64)])
    assert np.max(np.abs(got - ref)) < 1e-10
