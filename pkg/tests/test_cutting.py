import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cutknit.circuit import CX_MATRIX, Circuit, cx, h
from cutknit.cutting import (STRATEGIES, CouplingMap, CutError, QpdExpansion, check_expansion,
                             check_ucry, cross_gates, expand_cut_cx, expand_cut_ucry, expansion_choi,
                             format_coupling_map, fragment_circuits, make_plan,
                             parse_coupling_map, printed_gate_cut_report,
                             printed_wire_cut_report, qpd_overhead, sample_heavy_hex,
                             sampling_variance_bound, sparse_cut_select, ucry_matrix,
                             unitary_choi)
from cutknit.encoder import encode


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_cx_expansion_reproduces_cx_channel(strategy):
    chk = check_expansion(expand_cut_cx(strategy))
    assert chk.passed, chk.deviation
    assert chk.deviation < 1e-10


def test_expansion_shapes():
    gate = expand_cut_cx("gate_cut")
    assert (len(gate.terms), len(gate.settings), gate.gamma) == (6, 6, 3.0)
    assert not gate.keeps_gate
    wire = expand_cut_cx("pauli_table")
    assert (len(wire.terms), len(wire.settings), wire.gamma) == (8, 6, 4.0)
    assert wire.keeps_gate
    assert sum(t.coefficient for t in gate.terms) == pytest.approx(1.0)


def test_oracle_rejects_a_perturbed_expansion():
    exp = expand_cut_cx("gate_cut")
    terms = list(exp.terms)
    terms[0] = dataclasses.replace(terms[0], coefficient=-terms[0].coefficient)
    assert not check_expansion(QpdExpansion(exp.strategy, tuple(terms), exp.keeps_gate)).passed


def test_choi_of_identity_differs_from_cx():
    ident = unitary_choi(np.eye(4))
    assert np.max(np.abs(ident - unitary_choi(CX_MATRIX))) > 0.1
    assert np.allclose(expansion_choi(expand_cut_cx()), unitary_choi(CX_MATRIX), atol=1e-12)


def test_printed_constants_are_reported_not_used():
    assert not printed_gate_cut_report().passed
    wire = printed_wire_cut_report()
    assert not wire.passed and "corrected" in wire.note


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-np.pi, np.pi), min_size=4, max_size=4))
def test_ucry_expansion_matches_channel(angles):
    chk = check_ucry(angles)
    assert chk.passed, chk.deviation


def test_overhead_numbers():
    assert [qpd_overhead(k) for k in range(4)] == [1, 9, 81, 729]
    assert sampling_variance_bound(2) == 81.0
    assert sampling_variance_bound(2, gamma=4.0) == 256.0
    with pytest.raises(CutError):
        qpd_overhead(-1)


def test_selection_prefers_long_range_then_early():
    circ = encode(np.linspace(-1, 1, 4), 2, 1)
    sel = sparse_cut_select(circ, [0, 1], [2], 4)
    assert [(c.control, c.distance) for c in sel] == [(0, 2), (0, 2), (1, 1), (1, 1)]
    assert sel[0].gate_index < sel[1].gate_index
    assert sparse_cut_select(circ, [0, 1], [2], 1) == sel[:1]
    assert sparse_cut_select(circ, [0, 1], [2], 0) == []


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 6), st.integers(0, 1000))
def test_selection_is_deterministic_and_maximal(na, nd, k, seed):
    data = np.random.default_rng(seed).uniform(-1, 1, (1 << na) * nd)
    circ = encode(data, na, nd)
    addr, dat = range(na), range(na, na + nd)
    a = sparse_cut_select(circ, addr, dat, k)
    assert a == sparse_cut_select(circ, addr, dat, k)
    rest = [c for c in cross_gates(circ, addr, dat) if c not in a]
    if a and rest:
        assert min(c.distance for c in a) >= max(c.distance for c in rest)


def test_selection_errors():
    circ = encode(np.zeros(4), 2, 1)
    with pytest.raises(CutError):
        sparse_cut_select(circ, [0, 1], [1, 2], 1)
    with pytest.raises(CutError):
        sparse_cut_select(circ, [0, 1], [2], 1, "physical_shortest_path")
    with pytest.raises(CutError):
        sparse_cut_select(circ, [0, 1], [2], -1)


def test_coupling_map_roundtrip_and_distances():
    cmap = sample_heavy_hex()
    assert cmap.num_physical == 27
    assert parse_coupling_map(format_coupling_map(cmap)) == cmap
    assert cmap.shortest_path_length(0, 26) == 12
    line = parse_coupling_map("qubits 4\nlayout 3 2 1 0\n0 1\n1 2\n2 3  # tail\n")
    assert line.virtual_distance(0, 3) == 3 and line.virtual_distance(0, 1) == 1


def test_physical_distance_changes_selection():
    circ = encode(np.zeros(4), 2, 1)
    # virtual qubit 1 sits far from the data qubit, qubit 0 next to it
    cmap = parse_coupling_map("qubits 5\nlayout 3 0 4\n0 1\n1 2\n2 3\n3 4\n")
    sel = sparse_cut_select(circ, [0, 1], [2], 1, "physical_shortest_path", cmap)
    assert sel[0].control == 1 and sel[0].distance == 4


def test_coupling_map_errors():
    with pytest.raises(CutError):
        parse_coupling_map("0 1\n")
    with pytest.raises(CutError):
        CouplingMap(2, frozenset({(0, 5)}))
    with pytest.raises(CutError):
        parse_coupling_map("qubits 3\n0 1\n").shortest_path_length(0, 2)


def test_gate_cut_splits_disconnected_fragments():
    circ = Circuit(4, 0, (h(0), cx(0, 1), cx(1, 2), cx(2, 3)))
    frags = fragment_circuits(circ, [2])
    assert [f.qubit_map for f in frags] == [(0, 1), (2, 3)]
    assert len(fragment_circuits(circ, [2], keeps_gate=True)) == 1
    with pytest.raises(CutError):
        fragment_circuits(circ, [0])


def test_plan_counts():
    circ = encode(np.zeros(8), 2, 2)
    plan = make_plan(circ, sparse_cut_select(circ, [0, 1], [2, 3], 2))
    assert plan.cut_count == 2 and plan.setting_count == 36 and plan.term_count == 36
    assert plan.gamma_total == 9.0
    wire = make_plan(circ, sparse_cut_select(circ, [0, 1], [2, 3], 2), "pauli_table")
    assert wire.term_count == 64 and wire.setting_count == 36


def test_ucry_needs_four_angles():
    with pytest.raises(CutError):
        check_ucry([0.1])


def test_three_plus_three_instance_prefers_q0_q5():
    circ = encode(np.random.default_rng(0).uniform(-1, 1, 24), 3, 3)
    sel = sparse_cut_select(circ, [0, 1, 2], [3, 4, 5], 2)
    assert (sel[0].control, sel[0].target, sel[0].distance) == (0, 5, 5)
    plan = make_plan(circ, sel)
    qubits = sorted(q for f in plan.fragments for q in f.qubit_map)
    assert qubits == list(range(6))


def test_c21_cut_is_the_sixth_gate():
    circ = encode(np.random.default_rng(0).uniform(-1, 1, 4), 2, 1)
    sel = sparse_cut_select(circ, [0, 1], [2], 1)
    assert sel[0].gate_index == 5            # zero-based, i.e. the sixth op
    assert circ.ops[5].qubits == (0, 2)
    frags = fragment_circuits(circ, [5])
    assert sum(len(f.qubit_map) for f in frags) == 3


def test_no_cut_single_fragment():
    circ = encode(np.zeros(4), 2, 1)
    frags = fragment_circuits(circ, [])
    assert len(frags) == 1 and frags[0].circuit == circ


def test_ucry_zero_angles_and_term_table():
    exp = expand_cut_ucry(np.zeros(4))
    assert check_ucry(np.zeros(4)).passed
    assert len(exp.terms) == 8 and len(exp.settings) == 6
    assert all(abs(t.coefficient) == 0.5 for t in exp.terms)
    assert np.allclose(ucry_matrix(np.zeros(4)), np.eye(8))


def test_gamma_squared_matches_overhead():
    assert expand_cut_cx("gate_cut").gamma ** 2 == qpd_overhead(1)
