"""Power flow equations as a system of quadratics ``f_i(U) = U^T M_i U - r_i``.

``U`` holds the real parts of all bus voltages followed by the imaginary
parts of every non-slack bus (the slack imaginary part is fixed at zero and
removed), so ``n = 2*N_bus - 1``.  Equations are ordered slack ``V^2``
first, then ascending bus index with ``(P, Q)`` for PQ buses and ``(P, V^2)``
for PV buses.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .case_model import AdmittanceMatrix, BusKind, Network

EQ_P, EQ_Q, EQ_V2 = "P", "Q", "V2"


@dataclass(frozen=True)
class QuadraticSystem:
    n: int
    matrices: tuple          # M_i, symmetric scipy.sparse (n x n)
    r: np.ndarray
    var_index: dict          # bus position -> (d position, q position or None)
    eq_index: dict           # bus position -> tuple of equation rows
    eq_kind: tuple           # per equation: (bus position, "P" | "Q" | "V2")
    network: Network
    admittance: AdmittanceMatrix
    _stack: sp.csr_matrix    # all M_i stacked row-wise, shape (n*n, n)

    @property
    def n_bus(self) -> int:
        return self.network.n_bus

    @property
    def slack(self) -> int:
        return self.network.slack

    def to_complex(self, u) -> np.ndarray:
        """Complex bus voltages encoded by a state vector."""
        u = np.asarray(u, dtype=float)
        nb = self.n_bus
        v = u[:nb].astype(complex)
        q = np.insert(u[nb:], self.slack, 0.0)
        return v + 1j * q

    def from_complex(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        return np.concatenate([v.real, np.delete(v.imag, self.slack)])


def _selector(nb: int, slack: int) -> np.ndarray:
    """Matrix mapping the reduced state U onto the full [Vd; Vq] vector."""
    sel = np.zeros((2 * nb, 2 * nb - 1))
    sel[:nb, :nb] = np.eye(nb)
    cols = nb
    for k in range(nb):
        if k != slack:
            sel[nb + k, cols] = 1.0
            cols += 1
    return sel


def assemble_equations(net: Network, y: AdmittanceMatrix) -> QuadraticSystem:
    nb = net.n_bus
    s = net.slack
    n = 2 * nb - 1
    g = y.g.toarray()
    b = y.b.toarray()
    sel = _selector(nb, s)

    var_index = {}
    pos = nb
    for k in range(nb):
        if k == s:
            var_index[k] = (k, None)
        else:
            var_index[k] = (k, pos)
            pos += 1

    def quad(k: int, kind: str) -> np.ndarray:
        # nonsymmetric form on the full 2N vector z = [Vd; Vq]
        a = np.zeros((2 * nb, 2 * nb))
        re_i = np.concatenate([g[k], -b[k]])   # Re(I_k) = re_i . z
        im_i = np.concatenate([b[k], g[k]])    # Im(I_k) = im_i . z
        if kind == EQ_P:
            a[k] += re_i
            a[nb + k] += im_i
        elif kind == EQ_Q:
            a[nb + k] += re_i
            a[k] -= im_i
        else:
            a[k, k] = 1.0
            a[nb + k, nb + k] = 1.0
        m = sel.T @ (0.5 * (a + a.T)) @ sel
        return m

    mats, rhs, kinds = [], [], []
    eq_index = {}

    def add(k, kind, value):
        eq_index.setdefault(k, []).append(len(mats))
        mats.append(sp.csr_matrix(quad(k, kind)))
        rhs.append(value)
        kinds.append((k, kind))

    add(s, EQ_V2, net.buses[s].v_magnitude_setpoint ** 2)
    for k, bus in enumerate(net.buses):
        if bus.kind is BusKind.PQ:
            add(k, EQ_P, bus.p_injection)
            add(k, EQ_Q, bus.q_injection)
        elif bus.kind is BusKind.PV:
            add(k, EQ_P, bus.p_injection)
            add(k, EQ_V2, bus.v_magnitude_setpoint ** 2)
    stack = sp.vstack(mats).tocsr()
    return QuadraticSystem(
        n=n, matrices=tuple(mats), r=np.asarray(rhs, dtype=float),
        var_index=var_index, eq_index={k: tuple(v) for k, v in eq_index.items()},
        eq_kind=tuple(kinds), network=net, admittance=y, _stack=stack)


def build_system(net: Network) -> QuadraticSystem:
    from .case_model import build_admittance
    return assemble_equations(net, build_admittance(net))


def _check(sys: QuadraticSystem, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (sys.n,):
        raise ValueError(f"state has shape {u.shape}, expected ({sys.n},)")
    return u


def jacobian(sys: QuadraticSystem, u) -> np.ndarray:
    """Dense Jacobian; row i is ``2 (M_i u)^T``."""
    u = _check(sys, u)
    return 2.0 * (sys._stack @ u).reshape(sys.n, sys.n)


def residual(sys: QuadraticSystem, u) -> np.ndarray:
    u = _check(sys, u)
    mu = (sys._stack @ u).reshape(sys.n, sys.n)
    return mu @ u - sys.r


def residual_and_jacobian(sys: QuadraticSystem, u):
    u = _check(sys, u)
    mu = (sys._stack @ u).reshape(sys.n, sys.n)
    return mu @ u - sys.r, 2.0 * mu


def dump_equations(sys: QuadraticSystem) -> str:
    """(M_i, r_i) as JSON sparse triplets, for debugging."""
    eqs = []
    for (k, kind), m, r in zip(sys.eq_kind, sys.matrices, sys.r):
        c = m.tocoo()
        eqs.append({"bus": k + 1, "kind": kind, "r": float(r),
                    "rows": c.row.tolist(), "cols": c.col.tolist(), "vals": c.data.tolist()})
    return json.dumps({"n": sys.n, "equations": eqs})
