"""Circuit IR, gate library and the dense statevector simulator.

Bit order used everywhere in this package: qubit 0 is the most significant
bit of an amplitude index and the leftmost character of a bitstring.  The
same holds for classical bits (clbit 0 leftmost).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

DEFAULT_QUBIT_CAP = 24
MAX_MIDCIRCUIT_MEASUREMENTS = 16
BIT_ORDER = "q0-left"


class GateKind(str, Enum):
    H = "H"
    X = "X"
    Y = "Y"
    Z = "Z"
    S = "S"
    SDG = "SDG"
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    CX = "CX"
    CZ = "CZ"
    MEASURE_Z = "MEASUREZ"
    PREPARE = "PREPARE"


ROTATIONS = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ})
TWO_QUBIT = frozenset({GateKind.CX, GateKind.CZ})
NON_UNITARY = frozenset({GateKind.MEASURE_Z, GateKind.PREPARE})

_SQ2 = 1 / math.sqrt(2)
STATE_VECTORS = {
    "zero": np.array([1, 0], dtype=complex),
    "one": np.array([0, 1], dtype=complex),
    "plus": np.array([_SQ2, _SQ2], dtype=complex),
    "minus": np.array([_SQ2, -_SQ2], dtype=complex),
    "plus_i": np.array([_SQ2, 1j * _SQ2], dtype=complex),
    "minus_i": np.array([_SQ2, -1j * _SQ2], dtype=complex),
}


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class GateOp:
    kind: GateKind
    qubits: tuple[int, ...]
    angle: float | None = None
    state: str | None = None
    clbit: int | None = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = 2 if kind in TWO_QUBIT else 1
        if len(self.qubits) != arity:
            raise CircuitError(f"{kind.value} takes {arity} qubit(s), got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise CircuitError(f"{kind.value} needs two distinct qubits")
        if kind in ROTATIONS:
            if self.angle is None or not math.isfinite(self.angle):
                raise CircuitError(f"{kind.value} needs a finite angle")
        elif self.angle is not None:
            raise CircuitError(f"{kind.value} takes no angle")
        if kind is GateKind.MEASURE_Z and (self.clbit is None or self.clbit < 0):
            raise CircuitError("MeasureZ needs a clbit")
        if kind is GateKind.PREPARE and self.state not in STATE_VECTORS:
            raise CircuitError(f"unknown state label {self.state!r}")

    @property
    def is_unitary(self) -> bool:
        return self.kind not in NON_UNITARY


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    num_clbits: int = 0
    ops: tuple[GateOp, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.num_qubits < 1:
            raise CircuitError("a circuit needs at least one qubit")
        for op in self.ops:
            if max(op.qubits) >= self.num_qubits:
                raise CircuitError(f"{op} addresses a qubit >= {self.num_qubits}")
            if op.clbit is not None and op.clbit >= self.num_clbits:
                raise CircuitError(f"{op} addresses a clbit >= {self.num_clbits}")

    def __len__(self):
        return len(self.ops)

    def with_ops(self, ops: Iterable[GateOp], num_clbits: int | None = None) -> "Circuit":
        return Circuit(self.num_qubits, self.num_clbits if num_clbits is None else num_clbits, tuple(ops))

    def count(self, kind: GateKind | str) -> int:
        kind = GateKind(kind)
        return sum(op.kind is kind for op in self.ops)

    def two_qubit_indices(self) -> list[int]:
        return [i for i, op in enumerate(self.ops) if op.kind in TWO_QUBIT]

    def depth(self) -> int:
        level = [0] * self.num_qubits
        for op in self.ops:
            d = max(level[q] for q in op.qubits) + 1
            for q in op.qubits:
                level[q] = d
        return max(level, default=0)


# Small constructors, mostly for tests and the encoder.
def h(q): return GateOp(GateKind.H, (q,))
def x(q): return GateOp(GateKind.X, (q,))
def y(q): return GateOp(GateKind.Y, (q,))
def z(q): return GateOp(GateKind.Z, (q,))
def s(q): return GateOp(GateKind.S, (q,))
def sdg(q): return GateOp(GateKind.SDG, (q,))
def rx(q, theta): return GateOp(GateKind.RX, (q,), angle=float(theta))
def ry(q, theta): return GateOp(GateKind.RY, (q,), angle=float(theta))
def rz(q, theta): return GateOp(GateKind.RZ, (q,), angle=float(theta))
def cx(c, t): return GateOp(GateKind.CX, (c, t))
def cz(a, b): return GateOp(GateKind.CZ, (a, b))
def measure(q, c): return GateOp(GateKind.MEASURE_Z, (q,), clbit=c)
def prepare(q, label): return GateOp(GateKind.PREPARE, (q,), state=label)


# ---------------------------------------------------------------- matrices

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2
S_GATE = np.diag([1, 1j]).astype(complex)
SDG_GATE = np.diag([1, -1j]).astype(complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)
CX_MATRIX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ_MATRIX = np.diag([1, 1, 1, -1]).astype(complex)

_FIXED = {
    GateKind.H: HADAMARD,
    GateKind.X: PAULI_X,
    GateKind.Y: PAULI_Y,
    GateKind.Z: PAULI_Z,
    GateKind.S: S_GATE,
    GateKind.SDG: SDG_GATE,
    GateKind.CX: CX_MATRIX,
    GateKind.CZ: CZ_MATRIX,
    GateKind.MEASURE_Z: P0,
}


def rx_matrix(theta: float) -> np.ndarray:
    c, s_ = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s_], [-1j * s_, c]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s_ = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s_], [s_, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


_ROT = {GateKind.RX: rx_matrix, GateKind.RY: ry_matrix, GateKind.RZ: rz_matrix}


def gate_matrix(kind: GateKind | str, angle: float | None = None) -> np.ndarray:
    """Matrix of a gate kind.

    Two-qubit matrices use (first qubit, second qubit) as (MSB, LSB), so for
    CX the first qubit is the control.  ``MEASURE_Z`` maps to the projective
    element P0 = |0><0|.  ``PREPARE`` has no matrix.
    """
    try:
        kind = GateKind(kind)
    except ValueError:
        raise CircuitError(f"unknown gate kind {kind!r}") from None
    if kind in ROTATIONS:
        if angle is None:
            raise CircuitError(f"{kind.value} needs an angle")
        return _ROT[kind](float(angle))
    if angle is not None:
        raise CircuitError(f"{kind.value} takes no angle")
    if kind is GateKind.PREPARE:
        raise CircuitError("PREPARE is not a matrix gate")
    return _FIXED[kind].copy()


def op_matrix(op: GateOp) -> np.ndarray:
    return gate_matrix(op.kind, op.angle)


def same_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-10) -> bool:
    """True when a = e^{i phi} b for some phase."""
    return phase_distance(a, b) < atol


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    inner = np.vdot(b, a)
    if abs(inner) < 1e-300:
        return float(np.max(np.abs(a - b)))
    phase = inner / abs(inner)
    return float(np.max(np.abs(a - phase * b)))


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


# ------------------------------------------------------------ Clifford table

def _basis_element_matrices() -> dict[str, np.ndarray]:
    """Left-hand sides of the single-qubit Clifford decomposition table.

    R_A = (I + iA)/sqrt2, R_AB = (A + B)/sqrt2, Pi_A = (I + A)/2 and
    Pi_AB = (A + iB)/2, the usual sixteen-element operation basis.
    """
    P = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}
    out = dict(P)
    for a in "XYZ":
        out[f"R_{a}"] = (I2 + 1j * P[a]) * _SQ2
        out[f"Pi_{a}"] = (I2 + P[a]) / 2
    for a, b in ("YZ", "ZX", "XY"):
        out[f"R_{a}{b}"] = (P[a] + P[b]) * _SQ2
        out[f"Pi_{a}{b}"] = (P[a] + 1j * P[b]) / 2
    return out


# Right-hand sides as printed, read left to right as a matrix product.
CLIFFORD_TABLE: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("X", ("H", "Z", "H")),
    ("Y", ("H", "Z", "H", "Z")),
    ("Z", ("S", "S")),
    ("R_X", ("H", "SDG", "H")),
    ("R_Y", ("S", "H", "SDG", "H", "SDG")),
    ("R_Z", ("SDG",)),
    ("R_YZ", ("H", "SDG", "H", "Z")),
    ("R_ZX", ("SDG", "H", "SDG", "H", "SDG")),
    ("R_XY", ("H", "Z", "H", "SDG")),
    ("Pi_X", ("S", "H", "S", "H", "P0", "H", "SDG", "H", "SDG")),
    ("Pi_Y", ("H", "SDG", "H", "P0", "H", "S", "H")),
    ("Pi_Z", ("P0",)),
    ("Pi_YZ", ("S", "H", "S", "H", "P0", "H", "S", "H", "SDG")),
    ("Pi_ZX", ("H", "SDG", "H", "P0", "H", "S", "H", "Z")),
    ("Pi_XY", ("P0", "H", "Z", "H")),
)


@dataclass(frozen=True)
class RowCheck:
    row: str
    passed: bool
    deviation: float
    compared_as: str


def _product(names: Sequence[str]) -> np.ndarray:
    lookup = {"H": HADAMARD, "Z": PAULI_Z, "X": PAULI_X, "S": S_GATE, "SDG": SDG_GATE, "P0": P0}
    out = I2.copy()
    for name in names:
        out = out @ lookup[name]
    return out


def superoperator(k: np.ndarray) -> np.ndarray:
    """Row-major vectorised superoperator of rho -> k rho k^dagger."""
    return np.kron(k, k.conj())


def verify_clifford_table(atol: float = 1e-10) -> list[RowCheck]:
    """Check every row of the Clifford decomposition table.

    Unitary rows are compared up to global phase.  Rows that contain P0 are
    compared as channel elements rho -> A rho A^dagger, which is the same
    phase-insensitive comparison carried out on superoperators.
    """
    lhs = _basis_element_matrices()
    report = []
    for name, rhs_names in CLIFFORD_TABLE:
        rhs = _product(rhs_names)
        if "P0" in rhs_names:
            dev = float(np.max(np.abs(superoperator(lhs[name]) - superoperator(rhs))))
            how = "channel-element"
        else:
            dev = phase_distance(rhs, lhs[name])
            how = "unitary-up-to-phase"
        report.append(RowCheck(name, dev < atol, dev, how))
    return report


# ---------------------------------------------------------------- simulator

@dataclass(frozen=True)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2 ** self.num_qubits:
            raise CircuitError("amplitude count must be 2**num_qubits")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        a = np.zeros(2 ** n, dtype=complex)
        a[0] = 1
        return cls(n, a)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, bits: str) -> complex:
        return complex(self.amplitudes[int(bits, 2)])


def _apply_1q(psi: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    # psi has shape (2,)*n
    out = np.tensordot(u, psi, axes=([1], [q]))
    return np.moveaxis(out, 0, q)


def _apply_2q(psi: np.ndarray, u: np.ndarray, q0: int, q1: int) -> np.ndarray:
    out = np.tensordot(u.reshape(2, 2, 2, 2), psi, axes=([2, 3], [q0, q1]))
    return np.moveaxis(out, (0, 1), (q0, q1))


def _apply_cx(psi: np.ndarray, c: int, t: int) -> np.ndarray:
    out = psi.copy()
    idx = [slice(None)] * psi.ndim
    idx[c] = 1
    sub = out[tuple(idx)]
    tt = t - 1 if t > c else t
    out[tuple(idx)] = np.flip(sub, axis=tt)
    return out


def apply_op(psi: np.ndarray, op: GateOp) -> np.ndarray:
    """Apply one unitary op to a (2,)*n tensor and return a new tensor."""
    if op.kind is GateKind.CX:
        return _apply_cx(psi, *op.qubits)
    if op.kind in TWO_QUBIT:
        return _apply_2q(psi, op_matrix(op), *op.qubits)
    return _apply_1q(psi, op_matrix(op), op.qubits[0])


def terminal_measurements(circuit: Circuit) -> set[int]:
    """Indices of MeasureZ ops with no later op on the same qubit."""
    seen: set[int] = set()
    terminal = set()
    for i in range(len(circuit.ops) - 1, -1, -1):
        op = circuit.ops[i]
        if op.kind is GateKind.MEASURE_Z and op.qubits[0] not in seen:
            terminal.add(i)
        seen.update(op.qubits)
    return terminal


def _check_cap(circuit: Circuit, max_qubits: int):
    if circuit.num_qubits > max_qubits:
        raise CircuitError(f"{circuit.num_qubits} qubits exceeds the cap of {max_qubits}")


def simulate_statevector(circuit: Circuit, max_qubits: int = DEFAULT_QUBIT_CAP) -> StateVector:
    """Exact final state U_k...U_1|0...0>.  Terminal measurements are ignored."""
    _check_cap(circuit, max_qubits)
    terminal = terminal_measurements(circuit)
    n = circuit.num_qubits
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1
    for i, op in enumerate(circuit.ops):
        if op.kind is GateKind.MEASURE_Z and i in terminal:
            continue
        if not op.is_unitary:
            raise CircuitError(f"op {i} ({op.kind.value}) is not unitary; use simulate_with_midcircuit")
        psi = apply_op(psi, op)
    return StateVector(n, psi.reshape(-1))


def _collapse(psi: np.ndarray, q: int, outcome: int) -> tuple[float, np.ndarray]:
    idx = [slice(None)] * psi.ndim
    idx[q] = 1 - outcome
    out = psi.copy()
    out[tuple(idx)] = 0
    p = float(np.vdot(out, out).real)
    if p > 0:
        out /= math.sqrt(p)
    return p, out


def _set_qubit(psi: np.ndarray, q: int, vec: np.ndarray) -> np.ndarray:
    # psi has qubit q in |0>; returns psi with that factor replaced by vec
    idx0 = [slice(None)] * psi.ndim
    idx0[q] = 0
    reduced = psi[tuple(idx0)]
    return np.moveaxis(np.multiply.outer(vec, reduced), 0, q)


# ops that leave a qubit's Z-basis populations untouched, as seen from that qubit
def _z_diagonal_on(op: GateOp, q: int) -> bool:
    if op.kind in (GateKind.Z, GateKind.S, GateKind.SDG, GateKind.RZ, GateKind.MEASURE_Z, GateKind.CZ):
        return True
    return op.kind is GateKind.CX and op.qubits[0] == q


def deferrable_measurements(circuit: Circuit) -> set[int]:
    """MeasureZ ops that commute with every later op on their qubit.

    These can be read from the final state instead of branching, which is
    exact because the Z projectors commute with everything that follows.
    Terminal measurements are included.
    """
    out = set()
    clean: dict[int, bool] = {}
    for i in range(len(circuit.ops) - 1, -1, -1):
        op = circuit.ops[i]
        if op.kind is GateKind.MEASURE_Z and clean.get(op.qubits[0], True):
            out.add(i)
        for q in op.qubits:
            clean[q] = clean.get(q, True) and _z_diagonal_on(op, q)
    return out


def _read_map(circuit: Circuit, deferred: set[int]) -> dict[int, list[int]]:
    read: dict[int, list[int]] = {}
    for i in sorted(deferred):
        op = circuit.ops[i]
        read.setdefault(op.qubits[0], []).append(op.clbit)
    return read


def _final_index(read: dict[int, list[int]], n: int, m: int) -> tuple[np.ndarray, int]:
    """Map each basis index of n qubits to the clbit integer it writes."""
    basis = np.arange(2 ** n)
    index = np.zeros(2 ** n, dtype=np.int64)
    mask = 0
    for q, cbits in read.items():
        bit = (basis >> (n - 1 - q)) & 1
        for c in cbits:
            index |= bit << (m - 1 - c)
            mask |= 1 << (m - 1 - c)
    return index, mask


def _count_branching(circuit: Circuit, deferred: set[int]) -> int:
    mids = sum(1 for i, op in enumerate(circuit.ops)
               if op.kind is GateKind.MEASURE_Z and i not in deferred)
    if mids > MAX_MIDCIRCUIT_MEASUREMENTS:
        raise CircuitError(f"{mids} mid-circuit measurements exceed the branch cap")
    return mids


def joint_probabilities(circuit: Circuit, max_qubits: int = DEFAULT_QUBIT_CAP,
                        prune: float = 0.0) -> np.ndarray:
    """Exact distribution over clbit strings as a dense vector of length 2**num_clbits.

    Mid-circuit MeasureZ ops branch the state (at most 2**16 branches) unless
    they commute with the rest of the circuit on their qubit.  PrepareState
    resets a qubit by tracing it out (branching on its Z value without
    recording) and setting the new state.
    """
    _check_cap(circuit, max_qubits)
    deferred = deferrable_measurements(circuit)
    _count_branching(circuit, deferred)
    n, m = circuit.num_qubits, circuit.num_clbits
    psi0 = np.zeros((2,) * n, dtype=complex)
    psi0[(0,) * n] = 1
    # each branch: (weight, state tensor, recorded clbit value as int)
    branches = [(1.0, psi0, 0)]
    for i, op in enumerate(circuit.ops):
        if op.kind is GateKind.MEASURE_Z:
            if i in deferred:
                continue
            q, c = op.qubits[0], op.clbit
            bit = 1 << (m - 1 - c)
            nxt = []
            for w, psi, rec in branches:
                for outcome in (0, 1):
                    p, post = _collapse(psi, q, outcome)
                    if p * w > prune and p > 0:
                        nxt.append((w * p, post, (rec & ~bit) | (bit if outcome else 0)))
            branches = nxt
        elif op.kind is GateKind.PREPARE:
            q = op.qubits[0]
            vec = STATE_VECTORS[op.state]
            nxt = []
            for w, psi, rec in branches:
                for outcome in (0, 1):
                    p, post = _collapse(psi, q, outcome)
                    if p * w > prune and p > 0:
                        if outcome:
                            post = _apply_1q(post, PAULI_X, q)
                        nxt.append((w * p, _set_qubit(post, q, vec), rec))
            branches = nxt
        else:
            branches = [(w, apply_op(psi, op), rec) for w, psi, rec in branches]
    out = np.zeros(2 ** m)
    term_index, term_mask = _final_index(_read_map(circuit, deferred), n, m)
    for w, psi, rec in branches:
        probs = np.abs(psi.reshape(-1)) ** 2 * w
        np.add.at(out, term_index | (rec & ~term_mask), probs)
    return out


# ------------------------------------------------------ density matrices

DENSITY_QUBIT_CAP = 12


def _rho_apply(rho: np.ndarray, op: GateOp, n: int) -> np.ndarray:
    # rho has shape (2,)*2n: n row axes then n column axes
    rho = apply_op(rho, op)
    cols = tuple(q + n for q in op.qubits)
    if op.kind is GateKind.CX:
        return _apply_cx(rho, *cols)
    u = op_matrix(op).conj()
    if op.kind in TWO_QUBIT:
        return _apply_2q(rho, u, *cols)
    return _apply_1q(rho, u, cols[0])


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _rho_depolarize2(rho: np.ndarray, a: int, b: int, p: float, n: int) -> np.ndarray:
    """(1-p) rho + p/15 * (sum over the 15 non-identity Paulis of P rho P).

    Uses the twirl identity: the sum over all 16 Paulis equals
    4 Tr_ab(rho) (x) I_ab.
    """
    rows = list(_LETTERS[:n])
    cols = list(_LETTERS[n:2 * n])
    src = rows + cols
    traced_in = rows + [rows[q] if q in (a, b) else cols[q] for q in range(n)]
    kept = [ch for i, ch in enumerate(src) if i not in (a, b, a + n, b + n)]
    traced = np.einsum("".join(traced_in) + "->" + "".join(kept), rho)
    spec = "".join(kept) + f",{rows[a]}{cols[a]},{rows[b]}{cols[b]}->" + "".join(src)
    eye = np.eye(2)
    mixed = np.einsum(spec, traced, eye, eye)
    return (1 - p - p / 15) * rho + (4 * p / 15) * mixed


def _rho_project(rho: np.ndarray, q: int, outcome: int, n: int) -> tuple[float, np.ndarray]:
    out = np.zeros_like(rho)
    idx = [slice(None)] * (2 * n)
    idx[q] = outcome
    idx[q + n] = outcome
    out[tuple(idx)] = rho[tuple(idx)]
    p = float(np.real(np.trace(out.reshape(2 ** n, 2 ** n))))
    if p > 0:
        out /= p
    return p, out


def _rho_reset(rho: np.ndarray, q: int, vec: np.ndarray, n: int) -> np.ndarray:
    rows, cols = _LETTERS[:n], _LETTERS[n:2 * n]
    src = rows + cols
    reduced_in = rows + cols[:q] + rows[q] + cols[q + 1:]
    kept = src.replace(rows[q], "").replace(cols[q], "")
    reduced = np.einsum(reduced_in + "->" + kept, rho)
    return np.einsum(f"{kept},{rows[q]}{cols[q]}->{src}", reduced, np.outer(vec, vec.conj()))


def noisy_joint_probabilities(circuit: Circuit, p2q: float,
                              max_qubits: int = DENSITY_QUBIT_CAP) -> np.ndarray:
    """Exact clbit distribution with two-qubit depolarizing noise of strength
    ``p2q`` after every two-qubit gate, by density-matrix evolution.

    Sampling shots from this vector is statistically identical to drawing an
    independent Pauli trajectory per shot.
    """
    if not 0 <= p2q <= 1:
        raise CircuitError(f"noise probability {p2q} outside [0, 1]")
    _check_cap(circuit, max_qubits)
    deferred = deferrable_measurements(circuit)
    _count_branching(circuit, deferred)
    n, m = circuit.num_qubits, circuit.num_clbits
    rho0 = np.zeros((2,) * (2 * n), dtype=complex)
    rho0[(0,) * (2 * n)] = 1
    branches = [(1.0, rho0, 0)]
    for i, op in enumerate(circuit.ops):
        if op.kind is GateKind.MEASURE_Z:
            if i in deferred:
                continue
            q, bit = op.qubits[0], 1 << (m - 1 - op.clbit)
            nxt = []
            for w, rho, rec in branches:
                for outcome in (0, 1):
                    p, post = _rho_project(rho, q, outcome, n)
                    if p > 0:
                        nxt.append((w * p, post, (rec & ~bit) | (bit if outcome else 0)))
            branches = nxt
        elif op.kind is GateKind.PREPARE:
            vec = STATE_VECTORS[op.state]
            branches = [(w, _rho_reset(rho, op.qubits[0], vec, n), rec) for w, rho, rec in branches]
        else:
            nxt = []
            for w, rho, rec in branches:
                rho = _rho_apply(rho, op, n)
                if op.kind in TWO_QUBIT and p2q > 0:
                    rho = _rho_depolarize2(rho, *op.qubits, p2q, n)
                nxt.append((w, rho, rec))
            branches = nxt
    out = np.zeros(2 ** m)
    term_index, term_mask = _final_index(_read_map(circuit, deferred), n, m)
    for w, rho, rec in branches:
        diag = np.clip(np.real(np.diagonal(rho.reshape(2 ** n, 2 ** n))), 0, None) * w
        np.add.at(out, term_index | (rec & ~term_mask), diag)
    return out


def _vector_to_dict(vec: np.ndarray, width: int) -> dict[str, float]:
    return {format(i, f"0{width}b") if width else "": float(p)
            for i, p in enumerate(vec) if p > 0}


@dataclass(frozen=True)
class CountsTable:
    shots: int
    counts: dict
    num_clbits: int
    bit_order: str = BIT_ORDER

    def __post_init__(self):
        for k, v in self.counts.items():
            if len(k) != self.num_clbits or (set(k) - {"0", "1"}):
                raise CircuitError(f"malformed bitstring {k!r}")
            if v < 0:
                raise CircuitError(f"negative count for {k!r}")
        total = sum(self.counts.values())
        if total != self.shots:
            raise CircuitError(f"counts sum to {total}, expected {self.shots}")

    def probabilities(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}


def sample_counts(probs: np.ndarray, shots: int, rng: np.random.Generator,
                  width: int) -> CountsTable:
    p = np.clip(probs, 0, None)
    p = p / p.sum()
    draws = rng.multinomial(shots, p)
    counts = {format(i, f"0{width}b") if width else "": int(c) for i, c in enumerate(draws) if c}
    return CountsTable(shots, counts, width)


def simulate_with_midcircuit(circuit: Circuit, mode: str = "analytic", shots: int | None = None,
                             seed: int | None = None, max_qubits: int = DEFAULT_QUBIT_CAP):
    """Run a circuit with mid-circuit measurement and reset.

    ``mode="analytic"`` returns ``{clbit_string: probability}``;
    ``mode="sampled"`` returns a :class:`CountsTable` drawn from it.
    """
    probs = joint_probabilities(circuit, max_qubits)
    if mode == "analytic":
        return _vector_to_dict(probs, circuit.num_clbits)
    if mode == "sampled":
        if not shots or shots < 1:
            raise CircuitError("sampled mode needs shots >= 1")
        return sample_counts(probs, shots, np.random.default_rng(seed), circuit.num_clbits)
    raise CircuitError(f"unknown mode {mode!r}")


# ------------------------------------------------------------------- noise

_PAULI_OPS = (None, GateKind.X, GateKind.Y, GateKind.Z)
# the 15 non-identity two-qubit Paulis as (first, second) factor indices
TWO_QUBIT_PAULIS = tuple((a, b) for a in range(4) for b in range(4) if (a, b) != (0, 0))


def _pauli_ops(q0: int, q1: int, which: int) -> list[GateOp]:
    a, b = TWO_QUBIT_PAULIS[which]
    ops = []
    if a:
        ops.append(GateOp(_PAULI_OPS[a], (q0,)))
    if b:
        ops.append(GateOp(_PAULI_OPS[b], (q1,)))
    return ops


def insert_paulis(circuit: Circuit, pattern: dict[int, int]) -> Circuit:
    """Insert the two-qubit Pauli ``pattern[i]`` right after op ``i``."""
    ops = []
    for i, op in enumerate(circuit.ops):
        ops.append(op)
        if i in pattern:
            ops.extend(_pauli_ops(*op.qubits, pattern[i]))
    return circuit.with_ops(ops)


def apply_depolarizing_noise(circuit: Circuit, p: float, rng_seed) -> Circuit:
    """One depolarizing trajectory: after every two-qubit gate, with
    probability p, insert a uniformly random non-identity two-qubit Pauli."""
    if not 0 <= p <= 1:
        raise CircuitError(f"noise probability {p} outside [0, 1]")
    rng = np.random.default_rng(rng_seed)
    pattern = {}
    for i in circuit.two_qubit_indices():
        if rng.random() < p:
            pattern[i] = int(rng.integers(15))
    return insert_paulis(circuit, pattern)


def sample_noise_patterns(circuit: Circuit, p: float, shots: int,
                          rng: np.random.Generator) -> dict[tuple, int]:
    """Group ``shots`` independent trajectories by their Pauli insertion pattern.

    Returns ``{((op_index, pauli), ...): shot_count}``; the empty tuple is
    the noiseless trajectory.
    """
    if not 0 <= p <= 1:
        raise CircuitError(f"noise probability {p} outside [0, 1]")
    sites = circuit.two_qubit_indices()
    if not sites or p == 0:
        return {(): shots}
    hit = rng.random((shots, len(sites))) < p
    which = rng.integers(15, size=(shots, len(sites)))
    code = np.where(hit, which + 1, 0)
    rows, counts = np.unique(code, axis=0, return_counts=True)
    out = {}
    for row, cnt in zip(rows, counts):
        key = tuple((sites[j], int(v) - 1) for j, v in enumerate(row) if v)
        out[key] = out.get(key, 0) + int(cnt)
    return out


# ----------------------------------------------------------- serialization

def dumps(circuit: Circuit) -> str:
    """Line format: header ``qubits N clbits M`` then ``GATE q[,q2] [angle] [clbit|state]``."""
    lines = [f"qubits {circuit.num_qubits} clbits {circuit.num_clbits}"]
    for op in circuit.ops:
        parts = [op.kind.value, ",".join(str(q) for q in op.qubits)]
        if op.angle is not None:
            parts.append(repr(float(op.angle)))
        if op.clbit is not None:
            parts.append(str(op.clbit))
        if op.state is not None:
            parts.append(op.state)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Circuit:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise CircuitError("empty circuit document")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "qubits" or head[2] != "clbits":
        raise CircuitError(f"bad header {lines[0]!r}")
    n, m = int(head[1]), int(head[3])
    ops = []
    for ln in lines[1:]:
        parts = ln.split()
        try:
            kind = GateKind(parts[0])
        except ValueError:
            raise CircuitError(f"unknown gate {parts[0]!r}") from None
        qubits = tuple(int(q) for q in parts[1].split(","))
        rest = parts[2:]
        kw = {}
        if kind in ROTATIONS:
            kw["angle"] = float(rest.pop(0))
        if kind is GateKind.MEASURE_Z:
            kw["clbit"] = int(rest.pop(0))
        if kind is GateKind.PREPARE:
            kw["state"] = rest.pop(0)
        if rest:
            raise CircuitError(f"trailing fields in {ln!r}")
        ops.append(GateOp(kind, qubits, **kw))
    return Circuit(n, m, tuple(ops))
