import sys

import numpy as np
import pytest
from hypothesis import strategies as st

from cutknit.circuit import Circuit, GateKind, GateOp

_ONE_Q = [GateKind.H, GateKind.X, GateKind.Y, GateKind.Z, GateKind.S, GateKind.SDG]
_ROT = [GateKind.RX, GateKind.RY, GateKind.RZ]


def random_circuit(rng: np.random.Generator, n: int, depth: int) -> Circuit:
    ops = []
    for _ in range(depth):
        r = rng.random()
        if r < 0.35 and n > 1:
            a, b = rng.choice(n, 2, replace=False)
            kind = GateKind.CX if rng.random() < 0.7 else GateKind.CZ
            ops.append(GateOp(kind, (int(a), int(b))))
        elif r < 0.7:
            ops.append(GateOp(_ROT[rng.integers(3)], (int(rng.integers(n)),),
                              angle=float(rng.uniform(-np.pi, np.pi))))
        else:
            ops.append(GateOp(_ONE_Q[rng.integers(len(_ONE_Q))], (int(rng.integers(n)),)))
    return Circuit(n, 0, tuple(ops))


@st.composite
def circuits(draw, min_qubits=1, max_qubits=6, max_depth=30):
    n = draw(st.integers(min_qubits, max_qubits))
    depth = draw(st.integers(0, max_depth))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_circuit(np.random.default_rng(seed), n, depth)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for ac in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[ac]
        terminalreporter.write_line(f"{ac} {'PASS' if ok else 'FAIL'}: {detail}")
