import numpy as np
import pytest
from scipy.optimize import fsolve

from multiflow import build_system, load_case, regularize_lossless
from multiflow.case_model import BusKind, build_admittance

TWO_BUS = """function mpc = two_bus
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1.0	0	230	1	1.1	0.9;
	2	1	50	20	0	0	1	1.0	0	230	1	1.1	0.9;
];
mpc.gen = [
	1	0	0	300	-300	1.0	100	1	250	10;
];
mpc.branch = [
	1	2	0.01	0.1	0.02	250	250	250	0	0	1	-360	360;
];
"""

# an elliptical map for the two-bus case: every row is positive definite
GOOD_MAP = [[30.0, 1.0, 0.0], [30.0, 0.0, 1.0], [30.0, 1.0, 1.0]]


def polar_newton(net, guess=None):
    """Independent oracle: polar power flow solved by scipy's hybrid method.

    Returns complex bus voltages.
    """
    y = build_admittance(net).y.toarray()
    buses = net.buses
    ang_idx = [i for i, b in enumerate(buses) if b.kind is not BusKind.SLACK]
    mag_idx = [i for i, b in enumerate(buses) if b.kind is BusKind.PQ]
    vm0 = np.array([b.v_magnitude_setpoint if b.kind is not BusKind.PQ else 1.0 for b in buses])
    p = np.array([b.p_injection for b in buses])
    q = np.array([b.q_injection for b in buses])

    def volt(x):
        va = np.zeros(len(buses))
        vm = vm0.copy()
        va[ang_idx] = x[:len(ang_idx)]
        vm[mag_idx] = x[len(ang_idx):]
        return vm * np.exp(1j * va)

    def f(x):
        v = volt(x)
        s = v * np.conj(y @ v)
        return np.concatenate([s.real[ang_idx] - p[ang_idx], s.imag[mag_idx] - q[mag_idx]])

    x0 = np.concatenate([np.zeros(len(ang_idx)), np.ones(len(mag_idx))]) if guess is None else guess
    x, info, ier, msg = fsolve(f, x0, full_output=True, xtol=1e-13)
    assert ier == 1, msg
    return volt(x)


@pytest.fixture(scope="session")
def case9():
    net = regularize_lossless(load_case("case9"))
    return net, build_system(net)


@pytest.fixture(scope="session")
def case4gs():
    net = regularize_lossless(load_case("case4gs"))
    return net, build_system(net)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance outcomes, criterion number -> list of (ok, detail); printed at the end
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
