"""Matrix product state backend for the circuit IR.

Tensors are stored as (left bond, physical, right bond).  The state is kept
in mixed canonical form around ``center``; two-qubit gates are applied on
adjacent sites with an SVD split and truncated to ``chi_max``.  Non-adjacent
gates are routed with SWAP chains.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .circuit import (Circuit, CircuitError, GateKind, GateOp, StateVector, TWO_QUBIT,
                      op_matrix, terminal_measurements)

log = logging.getLogger(__name__)

DEFAULT_CHI_MAX = 64
DEFAULT_SVD_CUTOFF = 1e-12
DEGENERACY_TOL = 1e-14

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@dataclass
class MpsState:
    num_qubits: int
    tensors: list
    chi_max: int = DEFAULT_CHI_MAX
    svd_cutoff: float = DEFAULT_SVD_CUTOFF
    center: int = 0
    discarded_weight: float = 0.0
    max_bond_reached: int = 1
    truncations: list = field(default_factory=list)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self) -> "MpsState":
        return MpsState(self.num_qubits, [t.copy() for t in self.tensors], self.chi_max,
                        self.svd_cutoff, self.center, self.discarded_weight,
                        self.max_bond_reached, list(self.truncations))

    # -- canonical form ---------------------------------------------------
    def move_center(self, site: int):
        while self.center < site:
            j = self.center
            a = self.tensors[j]
            l, d, r = a.shape
            q, rr = np.linalg.qr(a.reshape(l * d, r))
            self.tensors[j] = q.reshape(l, d, q.shape[1])
            self.tensors[j + 1] = np.tensordot(rr, self.tensors[j + 1], axes=(1, 0))
            self.center += 1
        while self.center > site:
            j = self.center
            a = self.tensors[j]
            l, d, r = a.shape
            q, rr = np.linalg.qr(a.reshape(l, d * r).T)
            self.tensors[j] = q.T.reshape(q.shape[1], d, r)
            self.tensors[j - 1] = np.tensordot(self.tensors[j - 1], rr.T, axes=(2, 0))
            self.center -= 1

    def canonicalize(self):
        """Full sweep to a right-canonical form with unit norm at site 0."""
        self.center = self.num_qubits - 1
        self.move_center(0)
        c = self.tensors[0]
        nrm = np.linalg.norm(c)
        if nrm > 0:
            self.tensors[0] = c / nrm

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))

    # -- gates ------------------------------------------------------------
    def apply_1q(self, u: np.ndarray, q: int):
        self.tensors[q] = np.einsum("st,ltr->lsr", u, self.tensors[q])

    def _apply_adjacent(self, g: np.ndarray, i: int):
        """Apply 4x4 gate g on sites (i, i+1), first index = site i."""
        self.move_center(i)
        a, b = self.tensors[i], self.tensors[i + 1]
        l, r = a.shape[0], b.shape[2]
        theta = np.tensordot(a, b, axes=(2, 0))  # l s t r
        theta = np.einsum("stuv,luvr->lstr", g.reshape(2, 2, 2, 2), theta)
        mat = theta.reshape(l * 2, 2 * r)
        u, sv, vh = np.linalg.svd(mat, full_matrices=False)
        keep = self._keep_count(sv)
        dropped = float(np.sum(sv[keep:] ** 2))
        if dropped > 0:
            self.discarded_weight += dropped
            self.truncations.append((i, dropped))
            log.debug("bond %d truncated, discarded weight %.3e", i, dropped)
        u, sv, vh = u[:, :keep], sv[:keep], vh[:keep]
        sv = sv / np.linalg.norm(sv)
        self.tensors[i] = u.reshape(l, 2, keep)
        self.tensors[i + 1] = (sv[:, None] * vh).reshape(keep, 2, r)
        self.center = i + 1
        self.max_bond_reached = max(self.max_bond_reached, keep)

    def _keep_count(self, sv: np.ndarray) -> int:
        keep = int(np.sum(sv > self.svd_cutoff))
        keep = max(1, min(keep, self.chi_max))
        if keep < len(sv):
            k = keep
            # never split a degenerate group unless that empties the bond
            while k > 0 and sv[k - 1] - sv[k] < DEGENERACY_TOL:
                k -= 1
            if k > 0:
                keep = k
        return keep

    def apply_2q(self, g: np.ndarray, q0: int, q1: int):
        if q0 > q1:
            g = SWAP @ g @ SWAP
            q0, q1 = q1, q0
        # bring q0 next to q1 with swaps, apply, then swap back
        for j in range(q0, q1 - 1):
            self._apply_adjacent(SWAP, j)
        self._apply_adjacent(g, q1 - 1)
        for j in range(q1 - 2, q0 - 1, -1):
            self._apply_adjacent(SWAP, j)

    def apply(self, op: GateOp):
        if not op.is_unitary:
            raise CircuitError(f"MPS backend only applies unitary ops, got {op.kind.value}")
        if op.kind in TWO_QUBIT:
            self.apply_2q(op_matrix(op), *op.qubits)
        else:
            self.apply_1q(op_matrix(op), op.qubits[0])

    # -- queries ----------------------------------------------------------
    def to_vector(self) -> np.ndarray:
        if self.num_qubits > 24:
            raise CircuitError("refusing to densify more than 24 qubits")
        v = self.tensors[0]
        for t in self.tensors[1:]:
            v = np.tensordot(v, t, axes=(v.ndim - 1, 0))
        return v.reshape(-1)


def mps_from_zero(num_qubits: int, chi_max: int = DEFAULT_CHI_MAX,
                  svd_cutoff: float = DEFAULT_SVD_CUTOFF) -> MpsState:
    if num_qubits < 1:
        raise CircuitError("need at least one qubit")
    site = np.zeros((1, 2, 1), dtype=complex)
    site[0, 0, 0] = 1
    return MpsState(num_qubits, [site.copy() for _ in range(num_qubits)], chi_max, svd_cutoff)


def mps_apply(state: MpsState, op: GateOp) -> MpsState:
    out = state.copy()
    out.apply(op)
    return out


def simulate_mps(circuit: Circuit, chi_max: int = DEFAULT_CHI_MAX,
                 svd_cutoff: float = DEFAULT_SVD_CUTOFF) -> MpsState:
    state = mps_from_zero(circuit.num_qubits, chi_max, svd_cutoff)
    terminal = terminal_measurements(circuit)
    for i, op in enumerate(circuit.ops):
        if op.kind is GateKind.MEASURE_Z and i in terminal:
            continue
        state.apply(op)
    return state


def mps_amplitude(state: MpsState, bits: str) -> complex:
    """<bits|state> by a left-to-right chain contraction."""
    if len(bits) != state.num_qubits or set(bits) - {"0", "1"}:
        raise CircuitError(f"malformed basis string {bits!r}")
    v = np.ones((1,), dtype=complex)
    for t, b in zip(state.tensors, bits):
        v = v @ t[:, int(b), :]
    return complex(v[0])


def mps_overlap(a: MpsState, b: MpsState) -> complex:
    """<a|b>."""
    if a.num_qubits != b.num_qubits:
        raise CircuitError("qubit count mismatch")
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.einsum("ab,asc,bsd->cd", env, ta.conj(), tb)
    return complex(env[0, 0])


def mps_vector_overlap(a: MpsState, vec: np.ndarray) -> complex:
    """<a|vec> for a dense vector, without densifying the MPS."""
    n = a.num_qubits
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    if vec.size != 2 ** n:
        raise CircuitError("qubit count mismatch")
    rest = vec.reshape(1, -1)  # (bond, remaining)
    for t in a.tensors:
        rest = rest.reshape(rest.shape[0], 2, -1)
        rest = np.einsum("asc,asr->cr", t.conj(), rest)
    return complex(rest[0, 0])


def mps_fidelity(a: MpsState, b) -> float:
    """|<a|b>|^2 for normalised states; b may be an MPS, StateVector or array."""
    if isinstance(b, MpsState):
        ov = mps_overlap(a, b)
        nb = mps_overlap(b, b).real
    else:
        vec = b.amplitudes if isinstance(b, StateVector) else np.asarray(b)
        if vec.size != 2 ** a.num_qubits:
            raise CircuitError("qubit count mismatch")
        ov = mps_vector_overlap(a, vec)
        nb = float(np.vdot(vec, vec).real)
    na = mps_overlap(a, a).real
    return float(min(1.0, max(0.0, abs(ov) ** 2 / (na * nb))))


def bond_profile_csv(state: MpsState) -> str:
    rows = ["bond,dim"] + [f"{i},{d}" for i, d in enumerate(state.bond_dims)]
    return "\n".join(rows) + "\n"
