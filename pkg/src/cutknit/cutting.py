"""Cut selection and quasi-probability expansions of cut gates.

A cut CX is replaced by a signed sum of local operations.  Each term is a
pair of operation sequences, one per side, plus a coefficient and a flag
saying whether the term is read with the parity of its recorded
mid-circuit bits.  Terms that share the same circuit form one setting;
several terms may be read from one setting.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from .circuit import (CX_MATRIX, HADAMARD, I2, PAULI_X, PAULI_Y, PAULI_Z, P0, P1, S_GATE,
                      SDG_GATE, STATE_VECTORS, TWO_QUBIT, Circuit, GateKind,
                      GateOp, gate_matrix, ry_matrix)


class CutError(ValueError):
    pass


# ----------------------------------------------------------- coupling maps

@dataclass(frozen=True)
class CouplingMap:
    num_physical: int
    edges: frozenset
    layout: tuple[int, ...] | None = None

    def __post_init__(self):
        norm = frozenset(tuple(sorted(map(int, e))) for e in self.edges)
        object.__setattr__(self, "edges", norm)
        for u, v in norm:
            if u == v or not (0 <= u < self.num_physical and 0 <= v < self.num_physical):
                raise CutError(f"edge ({u}, {v}) is invalid for {self.num_physical} qubits")
        if self.layout is not None:
            lay = tuple(int(p) for p in self.layout)
            object.__setattr__(self, "layout", lay)
            if len(set(lay)) != len(lay):
                raise CutError("layout is not injective")
            if any(not 0 <= p < self.num_physical for p in lay):
                raise CutError("layout references a missing physical qubit")

    def physical(self, virtual: int) -> int:
        if self.layout is None:
            if virtual >= self.num_physical:
                raise CutError(f"virtual qubit {virtual} has no physical image")
            return virtual
        if virtual >= len(self.layout):
            raise CutError(f"virtual qubit {virtual} is not in the layout")
        return self.layout[virtual]

    def neighbours(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {q: [] for q in range(self.num_physical)}
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def shortest_path_length(self, u: int, v: int) -> int:
        """Hop count between physical qubits (breadth-first search)."""
        if u == v:
            return 0
        adj = self.neighbours()
        seen = {u}
        frontier = deque([(u, 0)])
        while frontier:
            node, d = frontier.popleft()
            for nb in adj[node]:
                if nb == v:
                    return d + 1
                if nb not in seen:
                    seen.add(nb)
                    frontier.append((nb, d + 1))
        raise CutError(f"physical qubits {u} and {v} are disconnected")

    def virtual_distance(self, a: int, b: int) -> int:
        return self.shortest_path_length(self.physical(a), self.physical(b))


def parse_coupling_map(text: str) -> CouplingMap:
    """Header ``qubits N``, optional ``layout p0 p1 ...``, then one ``u v`` edge per line."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("qubits"):
        raise CutError("coupling map must start with 'qubits N'")
    try:
        n = int(lines[0].split()[1])
        layout = None
        edges = []
        for ln in lines[1:]:
            parts = ln.split()
            if parts[0] == "layout":
                layout = tuple(int(p) for p in parts[1:])
            elif len(parts) == 2:
                edges.append((int(parts[0]), int(parts[1])))
            else:
                raise CutError(f"bad coupling-map line {ln!r}")
    except (IndexError, ValueError) as exc:
        raise CutError(f"malformed coupling map: {exc}") from None
    return CouplingMap(n, frozenset(edges), layout)


def format_coupling_map(cmap: CouplingMap) -> str:
    out = [f"qubits {cmap.num_physical}"]
    if cmap.layout is not None:
        out.append("layout " + " ".join(map(str, cmap.layout)))
    out += [f"{u} {v}" for u, v in sorted(cmap.edges)]
    return "\n".join(out) + "\n"


def sample_heavy_hex() -> CouplingMap:
    """A 27-qubit heavy-hex patch shipped with the package."""
    text = resources.files("cutknit").joinpath("data/heavy_hex_27.txt").read_text()
    return parse_coupling_map(text)


# ------------------------------------------------------------ selection

DISTANCE_MODES = ("virtual_abs", "physical_shortest_path")


@dataclass(frozen=True)
class CutCandidate:
    gate_index: int
    control: int
    target: int
    distance: int


def cross_gates(circuit: Circuit, addr_set, data_set, distance_mode: str = "virtual_abs",
                coupling: CouplingMap | None = None) -> list[CutCandidate]:
    addr, data = set(addr_set), set(data_set)
    if addr & data:
        raise CutError(f"address and data sets overlap on {sorted(addr & data)}")
    if distance_mode not in DISTANCE_MODES:
        raise CutError(f"unknown distance mode {distance_mode!r}")
    if distance_mode == "physical_shortest_path" and coupling is None:
        raise CutError("physical_shortest_path needs a coupling map")
    pool = []
    for idx, op in enumerate(circuit.ops):
        if op.kind not in TWO_QUBIT:
            continue
        a, b = op.qubits
        if (a in addr and b in data) or (a in data and b in addr):
            if distance_mode == "virtual_abs":
                d = abs(a - b)
            else:
                d = coupling.virtual_distance(a, b)
            pool.append(CutCandidate(idx, a, b, d))
    return pool


def sparse_cut_select(circuit: Circuit, addr_set, data_set, max_cuts: int,
                      distance_mode: str = "virtual_abs",
                      coupling: CouplingMap | None = None) -> list[CutCandidate]:
    """Longest cross-register gates first; ties go to the earlier gate."""
    if max_cuts < 0:
        raise CutError("max_cuts must be >= 0")
    pool = cross_gates(circuit, addr_set, data_set, distance_mode, coupling)
    pool.sort(key=lambda c: (-c.distance, c.gate_index))
    return pool[:max_cuts]


# --------------------------------------------------------- local operations

@dataclass(frozen=True, eq=False)
class LocalOp:
    """One step of a fragment-side operation sequence.

    kinds: ``gate`` (a named single-qubit gate), ``measure`` (Z measurement
    recorded to the cut's bit), ``prepare`` (reset to a named state),
    ``unitary`` and ``instrument`` (explicit matrices; used only by the
    oracle for multi-qubit sides).
    """
    kind: str
    gate: GateKind | None = None
    state: str | None = None
    matrices: tuple = ()

    def __repr__(self):
        if self.kind == "gate":
            return self.gate.value
        if self.kind == "prepare":
            return f"prep({self.state})"
        return self.kind

    @property
    def records(self) -> bool:
        return self.kind in ("measure", "instrument")


def _g(kind: GateKind) -> LocalOp:
    return LocalOp("gate", gate=kind)


MEASURE = LocalOp("measure")
H_OP, S_OP, SDG_OP, X_OP, Y_OP, Z_OP = (_g(k) for k in (GateKind.H, GateKind.S, GateKind.SDG,
                                                           GateKind.X, GateKind.Y, GateKind.Z))
X_MEASURE = (H_OP, MEASURE, H_OP)


def prep(label: str) -> LocalOp:
    if label not in STATE_VECTORS:
        raise CutError(f"unknown state {label!r}")
    return LocalOp("prepare", state=label)


@dataclass(frozen=True)
class QpdTerm:
    coefficient: float
    control_side: tuple
    target_side: tuple
    setting_id: int
    parity: bool = True

    @property
    def records(self) -> bool:
        return any(op.records for op in self.control_side + self.target_side)


@dataclass(frozen=True)
class QpdExpansion:
    """All terms for one cut.

    ``keeps_gate`` marks a wire cut on the control wire: both sides then act
    on the control qubit (measure, then re-prepare) and the CX stays.
    """
    strategy: str
    terms: tuple
    keeps_gate: bool = False

    @property
    def gamma(self) -> float:
        return float(sum(abs(t.coefficient) for t in self.terms))

    @property
    def settings(self) -> list[int]:
        return sorted({t.setting_id for t in self.terms})

    def setting_ops(self, setting_id: int) -> tuple[tuple, tuple]:
        for t in self.terms:
            if t.setting_id == setting_id:
                return t.control_side, t.target_side
        raise CutError(f"no setting {setting_id}")


STRATEGIES = ("gate_cut", "pauli_table")


def _gate_cut_terms() -> tuple:
    # CX equals (S (x) HSH) after exp(i pi/4 Z(x)X); the six-term expansion of
    # the latter, with the local Cliffords folded into each term.
    return (
        QpdTerm(+0.5, (S_OP,), (H_OP, S_OP, H_OP), 0, False),
        QpdTerm(+0.5, (SDG_OP,), (H_OP, SDG_OP, H_OP), 1, False),
        QpdTerm(+0.5, (MEASURE,), (), 2, True),
        QpdTerm(-0.5, (MEASURE,), (X_OP,), 3, True),
        QpdTerm(+0.5, (), X_MEASURE, 4, True),
        QpdTerm(-0.5, (Z_OP,), X_MEASURE, 5, True),
    )


_BASIS_CHANGE = {"I": (), "X": (H_OP,), "Y": (SDG_OP, H_OP), "Z": ()}

# identity-channel wire cut: rho = 1/2 sum_P Tr(P rho) P, each Pauli split
# into its eigenprojectors.  (observable, prepared state, coefficient)
WIRE_CUT_ROWS = (
    ("I", "plus", +0.5), ("I", "minus", +0.5),
    ("X", "plus", +0.5), ("X", "minus", -0.5),
    ("Y", "plus_i", +0.5), ("Y", "minus_i", -0.5),
    ("Z", "zero", +0.5), ("Z", "one", -0.5),
)
# uncorrected rows; kept so `verify` can show they fail the channel check
PRINTED_WIRE_CUT_ROWS = (
    ("I", "plus", +0.5), ("I", "minus", +0.5),
    ("X", "zero", +0.5), ("X", "one", -0.5),
    ("Y", "minus_i", +0.5), ("Y", "plus_i", -0.5),
    ("Z", "plus", +0.5), ("Z", "minus", -0.5),
)


def wire_cut_terms(rows=WIRE_CUT_ROWS) -> tuple:
    """One setting per prepared state; identity rows reuse the setting that
    prepares the same state and ignore its recorded bit."""
    order = {lab: i for i, lab in enumerate(["zero", "one", "plus", "minus", "plus_i", "minus_i"])}
    measured_for_state = {}
    for obs, state, _ in rows:
        if obs != "I":
            measured_for_state.setdefault(state, obs)
    terms = []
    for obs, state, c in rows:
        basis = obs if obs != "I" else measured_for_state.get(state, "Z")
        control = _BASIS_CHANGE[basis] + (MEASURE,)
        terms.append(QpdTerm(c, control, (prep(state),), order[state], parity=obs != "I"))
    return tuple(terms)


def expand_cut_cx(strategy: str = "gate_cut") -> QpdExpansion:
    if strategy == "gate_cut":
        return QpdExpansion("gate_cut", _gate_cut_terms(), keeps_gate=False)
    if strategy == "pauli_table":
        return QpdExpansion("pauli_table", wire_cut_terms(), keeps_gate=True)
    raise CutError(f"unknown strategy {strategy!r}")


# ------------------------------------------------------- channel oracle

def embed(matrix: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Lift an operator on ``qubits`` (qubit 0 = most significant) to n qubits."""
    k = len(qubits)
    t = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
    eye = np.eye(2 ** n, dtype=complex).reshape((2,) * (2 * n))
    out = np.tensordot(t, eye, axes=(list(range(k, 2 * k)), list(qubits)))
    out = np.moveaxis(out, list(range(k)), list(qubits))
    return out.reshape(2 ** n, 2 ** n)


# each entry: (sign, Kraus operator) so the map is sum sign * K rho K^dagger
SignedKraus = list


def _side_kraus(ops: Sequence[LocalOp], qubits: Sequence[int], n: int, parity: bool,
                start: SignedKraus) -> SignedKraus:
    out = start
    for op in ops:
        nxt = []
        if op.kind == "gate":
            u = embed(gate_matrix(op.gate), qubits[:1], n)
            nxt = [(s, u @ k) for s, k in out]
        elif op.kind == "unitary":
            u = embed(op.matrices[0], qubits, n)
            nxt = [(s, u @ k) for s, k in out]
        elif op.kind in ("measure", "instrument"):
            mats = (P0, P1) if op.kind == "measure" else op.matrices
            q = qubits[:1] if op.kind == "measure" else qubits
            for bit, m in enumerate(mats):
                sign = -1 if (parity and bit) else 1
                e = embed(m, q, n)
                nxt += [(s * sign, e @ k) for s, k in out]
        elif op.kind == "prepare":
            vec = STATE_VECTORS[op.state]
            for b in (0, 1):
                e = embed(np.outer(vec, np.eye(2)[b]), qubits[:1], n)
                nxt += [(s, e @ k) for s, k in out]
        else:
            raise CutError(f"unknown local op kind {op.kind!r}")
        out = nxt
    return out


def term_kraus(term: QpdTerm, control_qubits: Sequence[int], target_qubits: Sequence[int],
               n: int, wire_cut: bool = False) -> SignedKraus:
    eye = [(1, np.eye(2 ** n, dtype=complex))]
    ks = _side_kraus(term.control_side, control_qubits, n, term.parity, eye)
    side = control_qubits if wire_cut else target_qubits
    return _side_kraus(term.target_side, side, n, term.parity, ks)


def apply_signed_kraus(ks: SignedKraus, rho: np.ndarray) -> np.ndarray:
    return sum(s * (k @ rho @ k.conj().T) for s, k in ks)


def choi_matrix(channel: Callable[[np.ndarray], np.ndarray], dim: int) -> np.ndarray:
    """Sum over the matrix units E_ij of E_ij (x) channel(E_ij)."""
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1
            out += np.kron(e, channel(e))
    return out


def unitary_choi(u: np.ndarray) -> np.ndarray:
    return choi_matrix(lambda r: u @ r @ u.conj().T, u.shape[0])


def expansion_choi(exp: QpdExpansion) -> np.ndarray:
    """Choi matrix of the weighted term sum for a CX on (control 0, target 1)."""
    n = 2
    total = []
    for t in exp.terms:
        ks = term_kraus(t, [0], [1], n, wire_cut=exp.keeps_gate)
        if exp.keeps_gate:
            ks = [(s, CX_MATRIX @ k) for s, k in ks]
        total += [(t.coefficient * s, k) for s, k in ks]
    return choi_matrix(lambda r: apply_signed_kraus(total, r), 4)


@dataclass(frozen=True)
class ChannelCheck:
    name: str
    passed: bool
    deviation: float
    note: str = ""


def check_expansion(exp: QpdExpansion, atol: float = 1e-10) -> ChannelCheck:
    dev = float(np.max(np.abs(expansion_choi(exp) - unitary_choi(CX_MATRIX))))
    return ChannelCheck(f"CX/{exp.strategy}", dev <= atol, dev)


# ---------------------------------------- conformance of the printed forms

def _printed_gate_cut_pieces() -> list[SignedKraus]:
    """Channel pieces of the printed CX figure, each with implicit unit weight:
    [I], [Z(x)X], then a1*a2 families (projector (I + a2 Z)/2 on the control
    with H S^a1 H on the target) and the mirrored family."""
    n = 2
    pieces = [[(1, np.eye(4, dtype=complex))],
              [(1, np.kron(PAULI_Z, PAULI_X))]]
    for a1, a2 in itertools.product((1, -1), repeat=2):
        sa = S_GATE if a1 == 1 else SDG_GATE
        hsh = HADAMARD @ sa @ HADAMARD
        proj_z = (I2 + a2 * PAULI_Z) / 2
        proj_x = (I2 + a2 * PAULI_X) / 2
        pieces.append([(a1 * a2, embed(proj_z, [0], n) @ embed(hsh, [1], n))])
        pieces.append([(a1 * a2, embed(hsh, [0], n) @ embed(proj_x, [1], n))])
    return pieces


def printed_gate_cut_report(atol: float = 1e-10) -> ChannelCheck:
    """Best least-squares fit of one free weight per printed family against
    the CX channel; a nonzero residual means no choice of prefactors works."""
    pieces = _printed_gate_cut_pieces()
    # group: [I], [ZX], family A (4 pieces), family B (4 pieces)
    groups = [pieces[0:1], pieces[1:2], pieces[2::2], pieces[3::2]]
    cols = []
    for g in groups:
        ks = [kp for piece in g for kp in piece]
        cols.append(choi_matrix(lambda r, ks=ks: apply_signed_kraus(ks, r), 4).reshape(-1))
    a = np.stack(cols, axis=1)
    b = unitary_choi(CX_MATRIX).reshape(-1)
    w, *_ = np.linalg.lstsq(a, b, rcond=None)
    dev = float(np.max(np.abs(a @ w - b)))
    note = "weights " + ", ".join(f"{x.real:+.3f}" for x in w)
    return ChannelCheck("CX/printed-figure", dev <= atol, dev, note)


def printed_wire_cut_report(atol: float = 1e-10) -> ChannelCheck:
    exp = QpdExpansion("pauli_table(printed)", wire_cut_terms(PRINTED_WIRE_CUT_ROWS), keeps_gate=True)
    chk = check_expansion(exp, atol)
    diffs = [f"{p[0]}:{p[1]}->{c[1]}{'' if p[2] == c[2] else ' sign'}"
             for p, c in zip(PRINTED_WIRE_CUT_ROWS, WIRE_CUT_ROWS) if p != c]
    return ChannelCheck("CX/printed-table", chk.passed, chk.deviation,
                        "corrected rows " + "; ".join(diffs))


# ------------------------------------------------------------ UCRy cuts

def ucry_matrix(angles: Sequence[float]) -> np.ndarray:
    """Block-diagonal Ry(angles[i]) on the last qubit, selected by the
    control register value i (first qubit most significant)."""
    k = len(angles)
    out = np.zeros((2 * k, 2 * k), dtype=complex)
    for i, a in enumerate(angles):
        out[2 * i:2 * i + 2, 2 * i:2 * i + 2] = ry_matrix(a)
    return out


def _rot_y_quarter(sign: int) -> np.ndarray:
    # exp(i sign pi/4 Y)
    return (I2 + sign * 1j * PAULI_Y) / math.sqrt(2)


def expand_cut_ucry(angles: Sequence[float]) -> QpdExpansion:
    """Decompose UCRy(angles) on a two-qubit control register and one target.

    With C = diag(cos(a/2)) and S = diag(sin(a/2)) on the controls the gate is
    C(x)I - i S(x)Y.  Six settings carry eight terms of weight 1/4 * w_j:
    the instrument {C, S} with target I or Y (each read with and without
    parity), the diagonal unitaries C +- iS against a Y measurement, and the
    instrument {(C+S)/sqrt2, (C-S)/sqrt2} against quarter Y rotations.
    """
    a = np.asarray(angles, dtype=float)
    if a.shape != (4,):
        raise CutError("UCRy cut expects exactly four angles (two control qubits)")
    c = np.diag(np.cos(a / 2)).astype(complex)
    s = np.diag(np.sin(a / 2)).astype(complex)
    inst = LocalOp("instrument", matrices=(c, s))
    signed = LocalOp("instrument", matrices=((c + s) / math.sqrt(2), (c - s) / math.sqrt(2)))
    zp = LocalOp("unitary", matrices=(c + 1j * s,))
    zm = LocalOp("unitary", matrices=(c - 1j * s,))
    y_meas = (SDG_OP, H_OP, MEASURE, H_OP, S_OP)
    rp = LocalOp("unitary", matrices=(_rot_y_quarter(+1),))
    rm = LocalOp("unitary", matrices=(_rot_y_quarter(-1),))
    q = 0.25
    terms = (
        QpdTerm(q * 2, (inst,), (), 0, False),
        QpdTerm(q * 2, (inst,), (), 0, True),
        QpdTerm(q * 2, (inst,), (Y_OP,), 1, False),
        QpdTerm(-q * 2, (inst,), (Y_OP,), 1, True),
        QpdTerm(-q * 2, (zp,), y_meas, 2, True),
        QpdTerm(q * 2, (zm,), y_meas, 3, True),
        QpdTerm(-q * 2, (signed,), (rp,), 4, True),
        QpdTerm(q * 2, (signed,), (rm,), 5, True),
    )
    return QpdExpansion("ucry", terms)


def check_ucry(angles: Sequence[float], atol: float = 1e-10) -> ChannelCheck:
    exp = expand_cut_ucry(angles)
    n = 3
    total = []
    for t in exp.terms:
        # target-side Y gates act on qubit 2; unitary target ops are 2x2
        ks = term_kraus(t, [0, 1], [2], n)
        total += [(t.coefficient * s, k) for s, k in ks]
    got = choi_matrix(lambda r: apply_signed_kraus(total, r), 8)
    dev = float(np.max(np.abs(got - unitary_choi(ucry_matrix(angles)))))
    return ChannelCheck("UCRy", dev <= atol, dev)


# ------------------------------------------------------- overhead numbers

def qpd_overhead(k: int) -> int:
    if k < 0:
        raise CutError("k must be >= 0")
    return 3 ** (2 * k)


def sampling_variance_bound(cut_count: int, gamma: float = 3.0) -> float:
    """Worst-case variance growth of the knitted estimator, (gamma**2)**cut_count."""
    if cut_count < 0:
        raise CutError("cut_count must be >= 0")
    return float(gamma ** 2) ** cut_count


# ----------------------------------------------------------- fragments

@dataclass(frozen=True)
class FragmentCircuit:
    circuit: Circuit
    qubit_map: tuple[int, ...]   # local -> global qubit
    clbit_map: tuple[int, ...]   # local -> global clbit


def interaction_components(num_qubits: int, ops: Sequence[GateOp]) -> list[tuple[int, ...]]:
    parent = list(range(num_qubits))

    def find(q):
        while parent[q] != q:
            parent[q] = parent[parent[q]]
            q = parent[q]
        return q

    for op in ops:
        if len(op.qubits) == 2:
            a, b = find(op.qubits[0]), find(op.qubits[1])
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for q in range(num_qubits):
        groups.setdefault(find(q), []).append(q)
    return [tuple(g) for g in sorted(groups.values())]


def split_fragments(circuit: Circuit) -> list[FragmentCircuit]:
    """One circuit per connected component of the two-qubit interaction graph."""
    out = []
    for comp in interaction_components(circuit.num_qubits, circuit.ops):
        local = {q: i for i, q in enumerate(comp)}
        ops = [op for op in circuit.ops if op.qubits[0] in local]
        clbits = sorted({op.clbit for op in ops if op.clbit is not None})
        cl_local = {c: i for i, c in enumerate(clbits)}
        mapped = tuple(GateOp(op.kind, tuple(local[q] for q in op.qubits), op.angle, op.state,
                              None if op.clbit is None else cl_local[op.clbit]) for op in ops)
        out.append(FragmentCircuit(Circuit(len(comp), len(clbits), mapped), comp, tuple(clbits)))
    return out


@dataclass(frozen=True)
class CutPlan:
    cut_indices: tuple[int, ...]
    expansions: tuple
    candidates: tuple = ()
    fragments: tuple = ()

    @property
    def cut_count(self) -> int:
        return len(self.cut_indices)

    @property
    def strategy(self) -> str:
        return self.expansions[0].strategy if self.expansions else "none"

    @property
    def terms_per_cut(self) -> list[tuple]:
        return [e.terms for e in self.expansions]

    @property
    def gamma_total(self) -> float:
        return float(np.prod([e.gamma for e in self.expansions])) if self.expansions else 1.0

    @property
    def setting_count(self) -> int:
        return int(np.prod([len(e.settings) for e in self.expansions])) if self.expansions else 1

    @property
    def term_count(self) -> int:
        return int(np.prod([len(e.terms) for e in self.expansions])) if self.expansions else 1


def fragment_circuits(circuit: Circuit, cut_indices: Sequence[int],
                      keeps_gate: bool = False) -> list[FragmentCircuit]:
    """Fragments of ``circuit`` once the cut gates are removed (or, for wire
    cuts, kept).  Cut gates are left out of the fragment op lists; their
    endpoints are where per-term operations get spliced later."""
    cuts = set(cut_indices)
    for i in cuts:
        if not 0 <= i < len(circuit.ops) or circuit.ops[i].kind is not GateKind.CX:
            raise CutError(f"op {i} is not a CX and cannot be cut")
    if keeps_gate:
        return split_fragments(circuit)
    ops = [op for i, op in enumerate(circuit.ops) if i not in cuts]
    return split_fragments(circuit.with_ops(ops))


def make_plan(circuit: Circuit, candidates: Sequence[CutCandidate],
              strategy: str = "gate_cut") -> CutPlan:
    cands = tuple(sorted(candidates, key=lambda c: c.gate_index))
    idx = tuple(c.gate_index for c in cands)
    if len(set(idx)) != len(idx):
        raise CutError("duplicate cut index")
    exp = expand_cut_cx(strategy)
    frags = tuple(fragment_circuits(circuit, idx, exp.keeps_gate))
    return CutPlan(idx, tuple(exp for _ in idx), cands, frags)


def conformance_checks(seed: int = 0, atol: float = 1e-10) -> list[ChannelCheck]:
    rng = np.random.default_rng(seed)
    checks = [check_expansion(expand_cut_cx(s), atol) for s in STRATEGIES]
    checks.append(check_ucry(rng.uniform(-math.pi, math.pi, 4), atol))
    checks.append(check_ucry(np.zeros(4), atol))
    return checks


__all__ = [
    "ChannelCheck", "CouplingMap", "CutCandidate", "CutError", "CutPlan", "FragmentCircuit",
    "LocalOp", "QpdExpansion", "QpdTerm", "check_expansion", "check_ucry", "choi_matrix",
    "conformance_checks", "cross_gates", "expand_cut_cx", "expand_cut_ucry",
    "fragment_circuits", "make_plan", "parse_coupling_map", "printed_gate_cut_report",
    "printed_wire_cut_report", "qpd_overhead", "sample_heavy_hex", "sampling_variance_bound",
    "sparse_cut_select", "split_fragments", "ucry_matrix",
]
