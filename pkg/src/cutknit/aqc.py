"""Approximate compilation of the prefix that holds the cut gates.

The prefix C1 (everything up to and including the last cut gate) is
replaced by a nearest-neighbour ansatz.  At its initial parameters the
ansatz reproduces C1 with the cut gates removed; the optimizer then pulls
it toward the state of the full prefix, so the cut gates' entangling effect
is carried by the parameters instead of by long-range CX gates.
"""
from __future__ import annotations

import cmath
import csv
import io
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import HADAMARD, I2, Circuit, GateKind, cx, op_matrix, ry, rz
from .mps import DEFAULT_CHI_MAX, MpsState, simulate_mps

log = logging.getLogger(__name__)

SHIFT = math.pi / 2
TRUNCATION_WARN = 1e-8


class AqcError(RuntimeError):
    pass


# ------------------------------------------------------------- splitting

@dataclass(frozen=True)
class PrefixSplit:
    prefix: Circuit          # C1
    truncated: Circuit       # C1 without the cut gates
    cut_gates: tuple         # (position in C1, op)
    suffix: Circuit          # C2


def split_prefix_suffix(circuit: Circuit, cut_indices: Sequence[int]) -> PrefixSplit:
    """C1 runs through the last cut gate; with no cuts it is every op before
    the first measurement or preparation."""
    cuts = sorted(set(cut_indices))
    first_nonunitary = next((i for i, op in enumerate(circuit.ops) if not op.is_unitary),
                            len(circuit.ops))
    boundary = cuts[-1] + 1 if cuts else first_nonunitary
    if boundary > first_nonunitary:
        raise AqcError("a cut gate lies after a measurement; it is outside the unitary prefix")
    for i in cuts:
        if circuit.ops[i].kind not in (GateKind.CX, GateKind.CZ):
            raise AqcError(f"op {i} is not a two-qubit gate")
    c1 = circuit.ops[:boundary]
    trunc = tuple(op for i, op in enumerate(c1) if i not in cuts)
    n = circuit.num_qubits
    return PrefixSplit(Circuit(n, 0, c1), Circuit(n, 0, trunc),
                       tuple((i, circuit.ops[i]) for i in cuts),
                       Circuit(n, circuit.num_clbits, circuit.ops[boundary:]))


def reassemble(split: PrefixSplit) -> Circuit:
    return split.suffix.with_ops(split.prefix.ops + split.suffix.ops)


# ---------------------------------------------------------------- ansatz

def zyz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """(phi, theta, lam) with u = phase * Rz(phi) Ry(theta) Rz(lam)."""
    det = np.linalg.det(u)
    v = u / cmath.sqrt(det)
    a, b = v[0, 0], v[1, 0]
    theta = 2 * math.atan2(abs(b), abs(a))
    if abs(b) < 1e-12:
        plus, minus = -2 * cmath.phase(a), 0.0
    elif abs(a) < 1e-12:
        plus, minus = 0.0, 2 * cmath.phase(b)
    else:
        plus, minus = -2 * cmath.phase(a), 2 * cmath.phase(b)
    phi, lam = (plus + minus) / 2, (plus - minus) / 2
    return phi, theta, lam


@dataclass
class Ansatz:
    """Rotation layer, CX blocks on adjacent pairs, rotation layer.

    Each block is (Ry, Rz on both qubits), CX(q, q+1), (Ry, Rz on both
    qubits).  ``template`` lists the circuit as ("ry"|"rz", qubit, param)
    and ("cx", q) entries.
    """
    num_qubits: int
    blocks: list
    padding_layers: int
    template: list
    theta0: np.ndarray
    pairs: list = field(default_factory=list)   # per qubit: [(ry_idx, rz_idx), ...]

    @property
    def num_params(self) -> int:
        return 4 * self.num_qubits + 8 * len(self.blocks)

    def circuit(self, theta) -> Circuit:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.num_params,):
            raise AqcError(f"expected {self.num_params} parameters, got {theta.shape}")
        ops = []
        for item in self.template:
            if item[0] == "cx":
                ops.append(cx(item[1], item[1] + 1))
            elif item[0] == "ry":
                ops.append(ry(item[1], theta[item[2]]))
            else:
                ops.append(rz(item[1], theta[item[2]]))
        return Circuit(self.num_qubits, 0, tuple(ops))

    def state(self, theta) -> np.ndarray:
        return self.states(np.asarray(theta, dtype=float)[None, :])[0]

    def states(self, thetas: np.ndarray) -> np.ndarray:
        """Output states for a batch of parameter vectors, shape (B, 2**n)."""
        thetas = np.asarray(thetas, dtype=float)
        if thetas.ndim != 2 or thetas.shape[1] != self.num_params:
            raise AqcError(f"expected (B, {self.num_params}) parameters, got {thetas.shape}")
        n, batch = self.num_qubits, thetas.shape[0]
        psi = np.zeros((batch,) + (2,) * n, dtype=complex)
        psi[(slice(None),) + (0,) * n] = 1
        for item in self.template:
            if item[0] == "cx":
                c, t = item[1] + 1, item[1] + 2
                idx = [slice(None)] * (n + 1)
                idx[c] = 1
                sub = psi[tuple(idx)]
                psi = psi.copy()
                psi[tuple(idx)] = np.flip(sub, axis=t - 1)
                continue
            half = thetas[:, item[2]] / 2
            cos, sin = np.cos(half), np.sin(half)
            ax = item[1] + 1
            moved = np.moveaxis(psi, ax, -1)
            a0, a1 = moved[..., 0], moved[..., 1]
            shape = (batch,) + (1,) * (n - 1)
            if item[0] == "ry":
                c_, s_ = cos.reshape(shape), sin.reshape(shape)
                out = np.stack([c_ * a0 - s_ * a1, s_ * a0 + c_ * a1], axis=-1)
            else:
                ph = np.exp(-1j * half).reshape(shape)
                out = np.stack([ph * a0, ph.conj() * a1], axis=-1)
            psi = np.moveaxis(out, -1, ax)
        return psi.reshape(batch, -1)


class _Builder:
    def __init__(self, n: int):
        self.n = n
        self.windows = [[I2.copy()] for _ in range(n)]
        self.blocks: list[int] = []

    def gate(self, q: int, m: np.ndarray):
        self.windows[q][-1] = m @ self.windows[q][-1]

    def block(self, q: int):
        self.blocks.append(q)
        self.windows[q].append(I2.copy())
        self.windows[q + 1].append(I2.copy())

    def cx_adjacent(self, c: int, t: int):
        if t == c + 1:
            self.block(c)
        elif t == c - 1:
            for q in (t, c):
                self.gate(q, HADAMARD)
            self.block(t)
            for q in (t, c):
                self.gate(q, HADAMARD)
        else:
            raise AqcError("not adjacent")

    def swap(self, a: int, b: int):
        self.cx_adjacent(a, b)
        self.cx_adjacent(b, a)
        self.cx_adjacent(a, b)

    def cx(self, c: int, t: int):
        if abs(c - t) == 1:
            self.cx_adjacent(c, t)
            return
        step = 1 if t > c else -1
        path = list(range(c, t, step))  # c walks to t - step
        for a, b in zip(path, path[1:]):
            self.swap(a, b)
        self.cx_adjacent(t - step, t)
        for a, b in reversed(list(zip(path, path[1:]))):
            self.swap(a, b)


def build_ansatz(truncated: Circuit, padding_layers: int = 1) -> Ansatz:
    """Ansatz whose initial parameters reproduce ``truncated`` up to phase.

    Every CX of the input becomes blocks (routed with SWAPs when the qubits
    are not neighbours); single-qubit gates are folded into the rotation
    windows between blocks.  ``padding_layers`` appends two blocks per
    adjacent pair per layer, which cancel at zero angles and give the
    optimizer room to move.
    """
    n = truncated.num_qubits
    b = _Builder(n)
    for op in truncated.ops:
        if not op.is_unitary:
            raise AqcError(f"{op.kind.value} cannot be compiled into the ansatz")
        if op.kind is GateKind.CX:
            b.cx(*op.qubits)
        elif op.kind is GateKind.CZ:
            a, t = op.qubits
            b.gate(t, HADAMARD)
            b.cx(a, t)
            b.gate(t, HADAMARD)
        else:
            b.gate(op.qubits[0], op_matrix(op))
    for _ in range(padding_layers):
        for q in range(n - 1):
            b.block(q)
            b.block(q)
    template: list = []
    pairs: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    counter = 0

    def rot_pair(q):
        nonlocal counter
        template.append(("ry", q, counter))
        template.append(("rz", q, counter + 1))
        pairs[q].append((counter, counter + 1))
        counter += 2

    for q in range(n):
        rot_pair(q)
    for q in b.blocks:
        rot_pair(q)
        rot_pair(q + 1)
        template.append(("cx", q))
        rot_pair(q)
        rot_pair(q + 1)
    for q in range(n):
        rot_pair(q)
    theta0 = np.zeros(counter)
    for q in range(n):
        for k, m in enumerate(b.windows[q]):
            phi, theta, lam = zyz_angles(m)
            (_, first_rz), (second_ry, second_rz) = pairs[q][2 * k], pairs[q][2 * k + 1]
            theta0[first_rz] = lam
            theta0[second_ry] = theta
            theta0[second_rz] = phi
    return Ansatz(n, b.blocks, padding_layers, template, theta0, pairs)


# ----------------------------------------------------------- cost function

def target_state(prefix: Circuit, chi_max: int = DEFAULT_CHI_MAX) -> MpsState:
    state = simulate_mps(prefix, chi_max=chi_max)
    if state.discarded_weight > TRUNCATION_WARN:
        warnings.warn(f"target MPS discarded weight {state.discarded_weight:.2e}; "
                      "infidelities below that floor are not meaningful", stacklevel=2)
    return state


def _target_vector(target) -> np.ndarray:
    if isinstance(target, MpsState):
        vec = target.to_vector()
    else:
        vec = np.asarray(target, dtype=complex).reshape(-1)
    return vec / np.linalg.norm(vec)


def _batch_infidelity(ansatz: Ansatz, thetas: np.ndarray, tvec: np.ndarray) -> np.ndarray:
    if tvec.size != 2 ** ansatz.num_qubits:
        raise AqcError("target and ansatz qubit counts differ")
    ov = ansatz.states(thetas) @ tvec.conj()
    return np.clip(1 - np.abs(ov) ** 2, 0.0, 1.0)


def infidelity(ansatz: Ansatz, theta, target) -> float:
    """1 - |<target|ansatz(theta)>|^2; ``target`` is an MpsState or a vector."""
    if isinstance(target, MpsState) and target.num_qubits != ansatz.num_qubits:
        raise AqcError("target and ansatz qubit counts differ")
    tvec = _target_vector(target)
    return float(_batch_infidelity(ansatz, np.asarray(theta, dtype=float)[None, :], tvec)[0])


def _shifted(theta: np.ndarray, h: float) -> np.ndarray:
    eye = np.eye(theta.size) * h
    return np.concatenate([theta + eye, theta - eye])


def parameter_shift_gradient(ansatz: Ansatz, theta, target) -> np.ndarray:
    """Exact gradient from losses at theta_k +- pi/2 (every parameter enters
    one rotation exp(-i theta P / 2))."""
    theta = np.asarray(theta, dtype=float)
    vals = _batch_infidelity(ansatz, _shifted(theta, SHIFT), _target_vector(target))
    return (vals[:theta.size] - vals[theta.size:]) / 2


def finite_difference_gradient(ansatz: Ansatz, theta, target, h: float = 1e-5) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    tvec = _target_vector(target)
    grad = np.empty_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = h
        lp = float(_batch_infidelity(ansatz, (theta + e)[None, :], tvec)[0])
        lm = float(_batch_infidelity(ansatz, (theta - e)[None, :], tvec)[0])
        grad[k] = (lp - lm) / (2 * h)
    return grad


# -------------------------------------------------------------- optimizer

@dataclass(frozen=True)
class OptimizerConfig:
    epsilon: float = 1e-3
    max_iters: int = 500
    initial_step: float = 0.1
    armijo_c: float = 1e-4
    shrink: float = 0.5
    grow: float = 2.0          # next trial step = grow * last accepted step
    max_step: float = 10.0
    min_step: float = 1e-12

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise AqcError("epsilon must be in (0, 1)")
        if self.max_iters < 1:
            raise AqcError("max_iters must be >= 1")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    loss: float
    step: float


@dataclass(frozen=True)
class CompilationResult:
    optimized_parameters: np.ndarray
    final_infidelity: float
    iterations: int
    compiled_circuit: Circuit
    trace: tuple
    converged: bool
    depth_before: int
    depth_after: int


def _check_finite(loss: float, it: int):
    if not math.isfinite(loss):
        raise AqcError(f"non-finite loss at iteration {it}")


def minimize(ansatz: Ansatz, target: MpsState, cfg: OptimizerConfig = OptimizerConfig(),
             theta_start=None) -> tuple[np.ndarray, float, int, list[TraceRow], bool]:
    """Gradient descent with Armijo backtracking; accepted steps never raise the loss."""
    theta = np.array(ansatz.theta0 if theta_start is None else theta_start, dtype=float)
    target = _target_vector(target)
    loss = infidelity(ansatz, theta, target)
    _check_finite(loss, 0)
    trace = [TraceRow(0, loss, 0.0)]
    step = cfg.initial_step
    it = 0
    while loss >= cfg.epsilon and it < cfg.max_iters:
        it += 1
        grad = parameter_shift_gradient(ansatz, theta, target)
        g2 = float(grad @ grad)
        if g2 == 0:
            log.info("zero gradient at iteration %d", it)
            break
        t = step
        while True:
            trial = theta - t * grad
            new = infidelity(ansatz, trial, target)
            _check_finite(new, it)
            if new <= loss - cfg.armijo_c * t * g2:
                break
            t *= cfg.shrink
            if t < cfg.min_step:
                t = 0.0
                break
        if t == 0.0:
            log.info("line search stalled at iteration %d", it)
            break
        theta, loss = trial, new
        trace.append(TraceRow(it, loss, t))
        step = min(cfg.max_step, t * cfg.grow)
    return theta, loss, it, trace, loss < cfg.epsilon


def compile_prefix(circuit: Circuit, cut_indices: Sequence[int],
                   cfg: OptimizerConfig = OptimizerConfig(), padding_layers: int = 1,
                   chi_max: int = DEFAULT_CHI_MAX) -> tuple[CompilationResult, PrefixSplit, Ansatz]:
    """Fit the ansatz to the full prefix state and assemble suffix o ansatz.

    The cut gates are not appended again: the fitted ansatz already carries
    their effect, and the distance of the output state from the original is
    bounded by sqrt(final infidelity).
    """
    split = split_prefix_suffix(circuit, cut_indices)
    ans = build_ansatz(split.truncated, padding_layers)
    target = target_state(split.prefix, chi_max)
    theta, loss, iters, trace, ok = minimize(ans, target, cfg)
    compiled = assemble(split, ans, theta, reinsert_cuts=False)
    res = CompilationResult(theta, loss, iters, compiled, tuple(trace), ok,
                            split.prefix.depth(), ans.circuit(theta).depth())
    return res, split, ans


def assemble(split: PrefixSplit, ansatz: Ansatz, theta, reinsert_cuts: bool) -> Circuit:
    """suffix o [cut gates] o ansatz(theta).  With the cut gates put back and
    theta = theta0 this is the original circuit whenever the cut gates can be
    moved to the end of the prefix (always true for a single cut)."""
    ops = list(ansatz.circuit(theta).ops)
    if reinsert_cuts:
        ops += [op for _, op in split.cut_gates]
    ops += list(split.suffix.ops)
    return Circuit(ansatz.num_qubits, split.suffix.num_clbits, tuple(ops))


def trace_csv(trace: Sequence[TraceRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "loss", "step"])
    for r in trace:
        w.writerow([r.iteration, repr(r.loss), repr(r.step)])
    return buf.getvalue()


__all__ = [
    "AqcError", "Ansatz", "CompilationResult", "OptimizerConfig", "PrefixSplit", "TraceRow",
    "assemble", "build_ansatz", "compile_prefix", "finite_difference_gradient", "infidelity",
    "minimize", "parameter_shift_gradient", "reassemble", "split_prefix_suffix", "target_state",
    "trace_csv", "zyz_angles",
]
