"""Gray-code angle encoder and decoder for real tensors.

Data d in [-1, 1] becomes angles arccos(d); per data qubit the column of
angles is Walsh-Hadamard transformed (1/N scaling) and gray-permuted, so
that a ladder of Ry rotations interleaved with gray-coded CX gates
realises the uniformly controlled rotation UCRy(arccos(d)).
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .circuit import Circuit, CircuitError, CountsTable, cx, h, measure, ry

log = logging.getLogger(__name__)


class EncodingError(ValueError):
    pass


def _check_pow2(n: int):
    if n < 1 or n & (n - 1):
        raise EncodingError(f"length {n} is not a power of two")


def fwht(v) -> np.ndarray:
    """Unscaled Walsh-Hadamard butterfly (Sylvester order)."""
    a = np.array(v, dtype=float)
    n = a.shape[0]
    _check_pow2(n)
    step = 1
    while step < n:
        a = a.reshape(-1, 2, step, *a.shape[1:])
        a = np.concatenate([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1)
        a = a.reshape(n, *a.shape[2:]) if a.ndim > 2 else a.reshape(n)
        step *= 2
    return a


def fwht_scaled(v) -> np.ndarray:
    """Forward transform with the full 1/N factor; :func:`fwht` inverts it."""
    a = np.asarray(v, dtype=float)
    return fwht(a) / a.shape[0]


def gray_code(i: int, n_bits: int | None = None) -> int:
    if i < 0 or (n_bits is not None and i >= 1 << n_bits):
        raise EncodingError(f"index {i} out of range")
    return i ^ (i >> 1)


def gray_sequence(n_bits: int) -> list[int]:
    return [gray_code(i) for i in range(1 << n_bits)]


def gray_permute(v) -> np.ndarray:
    """out[k] = v[g(k)], so step k of the circuit uses coefficient g(k)."""
    v = np.asarray(v)
    n = v.shape[0]
    _check_pow2(n)
    return v[[gray_code(k) for k in range(n)]]


def inverse_gray_permute(v) -> np.ndarray:
    v = np.asarray(v)
    out = np.empty_like(v)
    out[[gray_code(k) for k in range(v.shape[0])]] = v
    return out


@dataclass(frozen=True)
class EncoderLayout:
    n_addr: int
    n_data: int

    @property
    def address_qubits(self) -> list[int]:
        return list(range(self.n_addr))

    @property
    def data_qubits(self) -> list[int]:
        return list(range(self.n_addr, self.n_addr + self.n_data))

    @property
    def gray_sequence(self) -> list[int]:
        return gray_sequence(self.n_addr)

    @property
    def cx_control_schedule(self) -> list[int]:
        """Control address qubit of the CX closing step k.

        It is the qubit whose bit flips between g(k) and g(k+1), cyclically,
        so the last step returns to g(0).  Address qubit 0 is the most
        significant address bit.
        """
        seq = self.gray_sequence
        n = len(seq)
        out = []
        for k in range(n):
            flip = seq[k] ^ seq[(k + 1) % n]
            bit = flip.bit_length() - 1
            out.append(self.n_addr - 1 - bit)
        return out


@dataclass(frozen=True)
class AnglePayload:
    data: np.ndarray          # shape (2**n_addr, n_data), address-major
    n_addr: int
    n_data: int
    raw_angles: np.ndarray    # arccos(data), same shape
    final_angles: np.ndarray  # shape (n_data, 2**n_addr)

    @property
    def layout(self) -> EncoderLayout:
        return EncoderLayout(self.n_addr, self.n_data)


def data_to_angles(data, n_addr: int, n_data: int) -> AnglePayload:
    if n_addr < 1 or n_data < 1:
        raise EncodingError("need at least one address and one data qubit")
    d = np.asarray(data, dtype=float).reshape(-1)
    n = 1 << n_addr
    if d.size != n * n_data:
        raise EncodingError(f"data length {d.size} != 2**{n_addr} * {n_data}")
    if np.any(np.abs(d) > 1):
        warnings.warn(f"{int(np.sum(np.abs(d) > 1))} values outside [-1, 1] clipped", stacklevel=2)
        d = np.clip(d, -1, 1)
    d = d.reshape(n, n_data)
    raw = np.arccos(d)
    final = np.stack([gray_permute(fwht_scaled(raw[:, j])) for j in range(n_data)])
    return AnglePayload(d, n_addr, n_data, raw, final)


def angles_to_data(payload: AnglePayload) -> np.ndarray:
    """Invert the angle pipeline without any simulation."""
    cols = [np.cos(fwht(inverse_gray_permute(payload.final_angles[j])))
            for j in range(payload.n_data)]
    return np.stack(cols, axis=1)


def build_encoder_circuit(payload: AnglePayload, measure_all: bool = True) -> Circuit:
    lay = payload.layout
    fa = np.asarray(payload.final_angles)
    if fa.shape != (payload.n_data, 1 << payload.n_addr) or not np.all(np.isfinite(fa)):
        raise EncodingError("payload angles have the wrong shape or are not finite")
    ops = [h(q) for q in lay.address_qubits]
    sched = lay.cx_control_schedule
    for j, dq in enumerate(lay.data_qubits):
        for k, ctrl in enumerate(sched):
            ops.append(ry(dq, fa[j, k]))
            ops.append(cx(ctrl, dq))
    n = payload.n_addr + payload.n_data
    if measure_all:
        ops += [measure(q, q) for q in range(n)]
    return Circuit(n, n if measure_all else 0, tuple(ops))


def encode(data, n_addr: int, n_data: int, measure_all: bool = True) -> Circuit:
    return build_encoder_circuit(data_to_angles(data, n_addr, n_data), measure_all)


def _bucket_weights(items, n_addr: int, n_data: int) -> np.ndarray:
    """weights[address, data_qubit, bit] summed from (bitstring, weight) pairs."""
    width = n_addr + n_data
    w = np.zeros((1 << n_addr, n_data, 2))
    for bits, cnt in items:
        if len(bits) != width or set(bits) - {"0", "1"}:
            raise EncodingError(f"malformed bitstring {bits!r}")
        a = int(bits[:n_addr], 2)
        for j in range(n_data):
            w[a, j, int(bits[n_addr + j])] += cnt
    return w


def decode_weights(w: np.ndarray) -> np.ndarray:
    """Data values from per-address bit weights; shape (2**n_addr, n_data)."""
    tot = w.sum(axis=2)
    if np.any(tot <= 0):
        empty = sorted(set(np.nonzero(tot <= 0)[0].tolist()))
        raise EncodingError(f"no counts for address(es) {empty}")
    p1 = w[..., 1] / tot
    p0 = w[..., 0] / tot
    if np.any(p0 == 0):
        # 2*atan2(sqrt(p1), 0) = pi, i.e. data -1
        log.debug("%d address buckets have p0 = 0; decoded as -1", int(np.sum(p0 == 0)))
    theta = 2 * np.arctan2(np.sqrt(p1), np.sqrt(p0))
    return np.cos(theta)


def decode_counts(counts, n_addr: int, n_data: int) -> np.ndarray:
    """Data vector (address-major, flattened) from counts over n_addr + n_data bits.

    ``counts`` may be a :class:`CountsTable` or a mapping of bitstring to a
    non-negative (possibly fractional) weight.
    """
    if isinstance(counts, CountsTable):
        counts = counts.counts
    if not isinstance(counts, Mapping):
        raise EncodingError("counts must be a mapping or CountsTable")
    if any(v < 0 for v in counts.values()):
        raise EncodingError("negative weights cannot be decoded")
    return decode_weights(_bucket_weights(counts.items(), n_addr, n_data)).reshape(-1)


def decode_probability_vector(probs: np.ndarray, n_addr: int, n_data: int) -> np.ndarray:
    """Same as :func:`decode_counts` for a dense vector over 2**(n_addr+n_data) strings."""
    p = np.clip(np.asarray(probs, dtype=float), 0, None).reshape((2,) * (n_addr + n_data))
    p = p.reshape(1 << n_addr, *(2,) * n_data)
    w = np.zeros((1 << n_addr, n_data, 2))
    for j in range(n_data):
        axes = tuple(1 + k for k in range(n_data) if k != j)
        w[:, j, :] = p.sum(axis=axes) if axes else p
    return decode_weights(w).reshape(-1)


def angles_csv(payload: AnglePayload) -> str:
    rows = ["data_qubit,step,angle"]
    for j in range(payload.n_data):
        rows += [f"{j},{k},{float(a)!r}" for k, a in enumerate(payload.final_angles[j])]
    return "\n".join(rows) + "\n"


def read_data_csv(text: str) -> np.ndarray:
    vals = [float(ln.split(",")[0]) for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    return np.array(vals)


def required_addr_qubits(length: int, n_data: int) -> int:
    return max(1, math.ceil(math.log2(max(1, math.ceil(length / n_data)))))


__all__ = [
    "AnglePayload", "EncoderLayout", "EncodingError", "angles_csv", "angles_to_data",
    "build_encoder_circuit", "data_to_angles", "decode_counts", "decode_probability_vector",
    "encode", "fwht", "fwht_scaled", "gray_code", "gray_permute", "gray_sequence",
    "inverse_gray_permute", "read_data_csv", "CircuitError",
]
