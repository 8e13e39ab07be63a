"""Subexperiment generation, execution and global reconstruction.

Bit conventions: a :class:`JobResult` key is the observable bits in
register order (clbit 0 rightmost) followed by one recorded bit per cut, in
cut order.  Reconstruction reverses the observable part, so reconstructed
keys put clbit 0 on the left like every other table in the package.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .circuit import (Circuit, CircuitError, CountsTable, GateKind, GateOp, joint_probabilities,
                      measure, noisy_joint_probabilities, prepare)
from .cutting import CutPlan, FragmentCircuit, LocalOp, split_fragments
from .mps import simulate_mps

log = logging.getLogger(__name__)

VIRTUAL_SHOTS = 10 ** 6
MODES = ("analytic", "sampled")
BACKENDS = ("statevector", "mps")


class KnitError(RuntimeError):
    pass


# ---------------------------------------------------------- materialize

@dataclass(frozen=True)
class Subexperiment:
    setting_ids: tuple[int, ...]
    circuit: Circuit
    fragments: tuple[FragmentCircuit, ...]
    n_obs: int
    job_label: str

    @property
    def qpd_bit_count(self) -> int:
        return self.circuit.num_clbits - self.n_obs


def job_label(setting_ids: Sequence[int]) -> str:
    return "sc" + "".join(str(s) for s in setting_ids)


def _local_to_ops(seq: Sequence[LocalOp], qubit: int, clbit: int) -> list[GateOp]:
    out = []
    for op in seq:
        if op.kind == "gate":
            out.append(GateOp(op.gate, (qubit,)))
        elif op.kind == "measure":
            out.append(measure(qubit, clbit))
        elif op.kind == "prepare":
            out.append(prepare(qubit, op.state))
        else:
            raise KnitError(f"local op {op!r} has no circuit form")
    return out


def splice(circuit: Circuit, plan: CutPlan, setting_ids: Sequence[int]) -> Circuit:
    """Replace every cut gate by the operations of its chosen setting.

    Cut m records into clbit ``circuit.num_clbits + m``.
    """
    if len(setting_ids) != plan.cut_count:
        raise KnitError("one setting per cut is required")
    n_obs = circuit.num_clbits
    where = {g: m for m, g in enumerate(plan.cut_indices)}
    ops = []
    for i, op in enumerate(circuit.ops):
        m = where.get(i)
        if m is None:
            ops.append(op)
            continue
        exp = plan.expansions[m]
        ctrl_side, tgt_side = exp.setting_ops(setting_ids[m])
        c, t = op.qubits
        ops += _local_to_ops(ctrl_side, c, n_obs + m)
        ops += _local_to_ops(tgt_side, c if exp.keeps_gate else t, n_obs + m)
        if exp.keeps_gate:
            ops.append(op)
    return Circuit(circuit.num_qubits, n_obs + plan.cut_count, tuple(ops))


def materialize_subexperiments(circuit: Circuit, plan: CutPlan) -> list[Subexperiment]:
    for g in plan.cut_indices:
        if g >= len(circuit.ops) or circuit.ops[g].kind is not GateKind.CX:
            raise KnitError(f"plan cuts op {g}, which is not a CX in this circuit")
    per_cut = [e.settings for e in plan.expansions]
    subs = []
    for combo in itertools.product(*per_cut):
        spliced = splice(circuit, plan, combo)
        subs.append(Subexperiment(tuple(combo), spliced, tuple(split_fragments(spliced)),
                                  circuit.num_clbits, job_label(combo)))
    return subs


# -------------------------------------------------------------- results

@dataclass(frozen=True)
class JobResult:
    job_label: str
    counts: dict
    shots: float
    n_obs: int
    error: str | None = None

    @property
    def n_qpd(self) -> int:
        if not self.counts:
            return 0
        return len(next(iter(self.counts))) - self.n_obs


def dump_results(results: Sequence[JobResult]) -> str:
    doc = [{"job_label": r.job_label, "shots": r.shots, "n_obs": r.n_obs, "error": r.error,
            "counts": sorted(r.counts.items())} for r in sorted(results, key=lambda r: r.job_label)]
    return json.dumps({"jobs": doc}, indent=1)


def load_results(text: str) -> list[JobResult]:
    doc = json.loads(text)
    return [JobResult(j["job_label"], {k: v for k, v in j["counts"]}, j["shots"], j["n_obs"],
                      j.get("error")) for j in doc["jobs"]]


# ------------------------------------------------------------ execution

def _combine(parts: Sequence[tuple[np.ndarray, tuple[int, ...]]], width: int) -> np.ndarray:
    """Outer product of fragment distributions placed on global clbits;
    clbits no fragment writes stay 0."""
    tensor = np.ones(())
    written: list[int] = []
    for probs, cmap in parts:
        tensor = np.multiply.outer(tensor, probs.reshape((2,) * len(cmap)))
        written += list(cmap)
    full = np.zeros((2,) * width)
    order = np.argsort(written)
    idx = tuple(slice(None) if c in written else 0 for c in range(width))
    full[idx] = np.transpose(tensor, order) if written else tensor
    return full.reshape(-1)


def _mps_probabilities(circ: Circuit, chi_max: int) -> np.ndarray | None:
    """Clbit distribution from the MPS backend when every measurement is terminal."""
    from .circuit import _final_index, _read_map, terminal_measurements
    term = terminal_measurements(circ)
    if any((not op.is_unitary) and i not in term for i, op in enumerate(circ.ops)):
        return None
    state = simulate_mps(circ, chi_max=chi_max)
    amps = np.abs(state.to_vector()) ** 2
    index, _ = _final_index(_read_map(circ, term), circ.num_qubits, circ.num_clbits)
    out = np.zeros(2 ** circ.num_clbits)
    np.add.at(out, index, amps)
    return out


def subexperiment_probabilities(sub: Subexperiment, noise_p: float = 0.0,
                                backend: str = "statevector", chi_max: int = 64) -> np.ndarray:
    parts = []
    for frag in sub.fragments:
        circ = frag.circuit
        if noise_p > 0:
            p = noisy_joint_probabilities(circ, noise_p)
        elif backend == "mps":
            p = _mps_probabilities(circ, chi_max)
            if p is None:
                p = joint_probabilities(circ)
        else:
            p = joint_probabilities(circ)
        parts.append((p, frag.clbit_map))
    return _combine(parts, sub.circuit.num_clbits)


def job_seed(seed: int, label: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), zlib.crc32(label.encode())])


def _to_job_keys(vec: np.ndarray, width: int, n_obs: int, values) -> dict:
    out = {}
    for i in np.nonzero(values)[0]:
        bits = format(int(i), f"0{width}b") if width else ""
        out[bits[:n_obs][::-1] + bits[n_obs:]] = values[i]
    return out


@dataclass(frozen=True)
class RunOptions:
    mode: str = "analytic"
    shots: int = 10_000
    seed: int = 0
    noise_p: float = 0.0
    backend: str = "statevector"
    chi_max: int = 64

    def __post_init__(self):
        if self.mode not in MODES:
            raise KnitError(f"unknown mode {self.mode!r}")
        if self.backend not in BACKENDS:
            raise KnitError(f"unknown backend {self.backend!r}")
        if self.mode == "sampled" and self.shots < 1:
            raise KnitError("sampled mode needs shots >= 1")
        if not 0 <= self.noise_p <= 1:
            raise KnitError("noise_p must be in [0, 1]")


def run_one(sub: Subexperiment, opts: RunOptions, shots: int | None = None) -> JobResult:
    try:
        probs = subexperiment_probabilities(sub, opts.noise_p, opts.backend, opts.chi_max)
    except (CircuitError, KnitError, MemoryError) as exc:
        log.error("job %s failed: %s", sub.job_label, exc)
        return JobResult(sub.job_label, {}, 0, sub.n_obs, f"{type(exc).__name__}: {exc}")
    width = sub.circuit.num_clbits
    if opts.mode == "analytic":
        vals = probs * VIRTUAL_SHOTS
        vals[vals < 0] = 0
        counts = {k: float(v) for k, v in _to_job_keys(probs, width, sub.n_obs, vals).items()}
        return JobResult(sub.job_label, counts, VIRTUAL_SHOTS, sub.n_obs)
    n = opts.shots if shots is None else shots
    rng = np.random.default_rng(job_seed(opts.seed, sub.job_label))
    p = np.clip(probs, 0, None)
    draws = rng.multinomial(n, p / p.sum())
    counts = {k: int(v) for k, v in _to_job_keys(probs, width, sub.n_obs, draws).items()}
    return JobResult(sub.job_label, counts, n, sub.n_obs)


def _run_star(args):
    return run_one(*args)


def allocate_shots(subs: Sequence[Subexperiment], plan: CutPlan, shots: int,
                   allocation: str = "uniform") -> dict[str, int]:
    """Per-job shot budget.  ``weighted`` spends the same total budget in
    proportion to the summed |coefficient| of the terms each job feeds."""
    if allocation == "uniform" or plan.cut_count == 0:
        return {s.job_label: shots for s in subs}
    if allocation != "weighted":
        raise KnitError(f"unknown shot allocation {allocation!r}")
    weight = {}
    for s in subs:
        w = 1.0
        for m, sid in enumerate(s.setting_ids):
            w *= sum(abs(t.coefficient) for t in plan.expansions[m].terms if t.setting_id == sid)
        weight[s.job_label] = w
    total = shots * len(subs)
    norm = sum(weight.values())
    return {k: max(1, round(total * w / norm)) for k, w in weight.items()}


def run_subexperiments(subs: Sequence[Subexperiment], opts: RunOptions | None = None,
                       parallelism: int = 1, shot_plan: Mapping[str, int] | None = None
                       ) -> list[JobResult]:
    """Simulate every subexperiment; output is sorted by job label whatever
    the scheduling.  A failing job yields a JobResult carrying the error."""
    opts = opts or RunOptions()
    if parallelism < 1:
        raise KnitError("parallelism must be >= 1")
    args = [(s, opts, None if shot_plan is None else shot_plan[s.job_label]) for s in subs]
    if parallelism == 1 or len(subs) <= 1:
        results = [run_one(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_run_star, args, chunksize=max(1, len(args) // (4 * parallelism))))
    return sorted(results, key=lambda r: r.job_label)


# -------------------------------------------------------- reconstruction

def parity(bits: str) -> int:
    if set(bits) - {"0", "1"}:
        raise KnitError(f"non-binary string {bits!r}")
    return -1 if bits.count("1") % 2 else 1


def clamp_round(value: float) -> int:
    return max(0, math.floor(value + 0.5))


def clamp_round_table(table: Mapping[str, float]) -> dict[str, int]:
    return {k: clamp_round(v) for k, v in table.items()}


def term_results(results: Sequence[JobResult], plan: CutPlan) -> tuple[list[JobResult], dict]:
    """Split each job into one result per QPD term it feeds.

    The term's recorded bits are zeroed where the term ignores them, so the
    plain parity rule of the reconstruction applies to every term.  Returns
    the term results and a label -> coefficient map.
    """
    out, coeffs = [], {}
    for r in results:
        if r.error:
            raise KnitError(f"job {r.job_label} failed: {r.error}")
        sids = [int(ch) for ch in r.job_label[2:]]
        choices = []
        for m, sid in enumerate(sids):
            choices.append([(j, t) for j, t in enumerate(plan.expansions[m].terms)
                            if t.setting_id == sid])
        for combo in itertools.product(*choices):
            label = r.job_label + "/t" + "".join(str(j) for j, _ in combo)
            coeffs[label] = float(np.prod([t.coefficient for _, t in combo]))
            keep = [t.parity for _, t in combo]
            counts: dict[str, float] = {}
            for key, n in r.counts.items():
                obs, qpd = key[:r.n_obs], key[r.n_obs:]
                masked = "".join(b if k else "0" for b, k in zip(qpd, keep))
                counts[obs + masked] = counts.get(obs + masked, 0) + n
            out.append(JobResult(label, counts, r.shots, r.n_obs))
    return out, coeffs


@dataclass(frozen=True)
class QuasiDistribution:
    values: dict
    n_obs_bits: int

    def __post_init__(self):
        for k, v in self.values.items():
            if len(k) != self.n_obs_bits:
                raise KnitError(f"key {k!r} has the wrong length")
            if not math.isfinite(v):
                raise KnitError(f"non-finite quasi-probability at {k!r}")

    def total(self) -> float:
        return float(sum(self.values.values()))

    def clamped(self) -> dict[str, float]:
        return {k: max(0.0, v) for k, v in self.values.items()}

    def vector(self) -> np.ndarray:
        out = np.zeros(2 ** self.n_obs_bits)
        for k, v in self.values.items():
            out[int(k, 2) if k else 0] = v
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bitstring", "quasi_probability"])
        for k in sorted(self.values):
            w.writerow([k, repr(float(self.values[k]))])
        return buf.getvalue()


@dataclass(frozen=True)
class Reconstruction:
    counts: CountsTable
    quasi: QuasiDistribution
    raw: dict


def reconstruct_global_counts(results: Sequence[JobResult], coefficients: Mapping[str, float],
                              n_obs_bits: int, reference_shots: float | None = None
                              ) -> Reconstruction:
    """Signed accumulation of term counts into reversed observable keys,
    then a clamp-and-round pass.

    Results with differing shot totals are rescaled to ``reference_shots``
    (default: the largest total) before accumulation.
    """
    if not results:
        raise KnitError("no results to reconstruct")
    ref = reference_shots or max(r.shots for r in results)
    n_q = None
    acc: dict[str, float] = {}
    for r in sorted(results, key=lambda r: r.job_label):
        if r.error:
            raise KnitError(f"job {r.job_label} failed: {r.error}")
        if r.job_label not in coefficients:
            raise KnitError(f"no coefficient for job {r.job_label!r}")
        c = coefficients[r.job_label]
        scale = ref / r.shots if r.shots else 0.0
        for key, n in r.counts.items():
            if len(key) < n_obs_bits:
                raise KnitError(f"key {key!r} shorter than {n_obs_bits} observable bits")
            width = len(key) - n_obs_bits
            if n_q is None:
                n_q = width
            elif width != n_q:
                raise KnitError("inconsistent key lengths across results")
            obs, qpd = key[:n_obs_bits], key[n_obs_bits:]
            sigma = parity(qpd) if n_q > 0 else 1
            out = obs[::-1]
            acc[out] = acc.get(out, 0.0) + c * sigma * n * scale
    rounded = {k: v for k, v in clamp_round_table(acc).items() if v > 0}
    table = CountsTable(sum(rounded.values()), rounded, n_obs_bits)
    quasi = QuasiDistribution({k: v / ref for k, v in acc.items()}, n_obs_bits)
    return Reconstruction(table, quasi, acc)


def knit_expectation(results: Sequence[JobResult], coefficients: Mapping[str, float],
                     observable: str) -> float:
    """sum_j c_j <eigenvalue(observable) * parity(recorded bits)>_j.

    ``observable`` lists one factor (I or Z) per observable bit, clbit 0
    first.
    """
    if set(observable) - {"I", "Z"}:
        raise KnitError(f"unsupported observable {observable!r}; only I and Z factors")
    total = 0.0
    for r in results:
        if r.error:
            raise KnitError(f"job {r.job_label} failed: {r.error}")
        if r.n_obs != len(observable):
            raise KnitError("observable length does not match the observable bits")
        c = coefficients[r.job_label]
        acc = 0.0
        for key, n in r.counts.items():
            obs = key[:r.n_obs][::-1]
            eig = parity("".join(b for b, f in zip(obs, observable) if f == "Z"))
            acc += n * eig * parity(key[r.n_obs:])
        total += c * acc / r.shots
    return float(total)


# ------------------------------------------------------------ one call

@dataclass(frozen=True)
class KnitOutcome:
    reconstruction: Reconstruction
    subexperiments: int
    terms: int
    job_results: tuple
    term_results: tuple
    coefficients: dict


def knit(circuit: Circuit, plan: CutPlan, opts: RunOptions | None = None, parallelism: int = 1,
         allocation: str = "uniform") -> KnitOutcome:
    opts = opts or RunOptions()
    subs = materialize_subexperiments(circuit, plan)
    shot_plan = None
    if opts.mode == "sampled":
        shot_plan = allocate_shots(subs, plan, opts.shots, allocation)
    results = run_subexperiments(subs, opts, parallelism, shot_plan)
    terms, coeffs = term_results(results, plan)
    ref = VIRTUAL_SHOTS if opts.mode == "analytic" else opts.shots
    rec = reconstruct_global_counts(terms, coeffs, circuit.num_clbits, ref)
    return KnitOutcome(rec, len(subs), len(terms), tuple(results), tuple(terms), coeffs)


def direct_distribution(circuit: Circuit, noise_p: float = 0.0) -> np.ndarray:
    """Uncut clbit distribution, for comparisons."""
    if noise_p > 0:
        return noisy_joint_probabilities(circuit, noise_p)
    return joint_probabilities(circuit)


__all__ = [
    "JobResult", "KnitError", "KnitOutcome", "QuasiDistribution", "Reconstruction", "RunOptions",
    "Subexperiment", "VIRTUAL_SHOTS", "allocate_shots", "clamp_round", "clamp_round_table",
    "direct_distribution", "dump_results", "job_seed", "knit", "knit_expectation", "load_results",
    "materialize_subexperiments", "parity", "reconstruct_global_counts", "run_one",
    "run_subexperiments", "splice", "subexperiment_probabilities", "term_results",
]
