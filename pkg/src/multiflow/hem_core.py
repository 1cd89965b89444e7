"""Holomorphic embedding of a traced curve around one of its points.

Around a curve point ``(u*, alpha*)`` the local parameter ``t`` moves the
curve to ``alpha = alpha* + t``.  Bus voltages ``V(t)``, their reciprocals
``W(t) = 1/V(t)`` and PV reactive injections ``Q(t)`` are expanded as power
series in ``t``.  Matching coefficients gives, for every degree ``i >= 1``,
one real linear system of dimension ``4 N_bus + N_gen - 3`` whose matrix
depends only on the degree-0 terms, so it is factorized once per
embedding.

Injections vary additively along the curve: ``P_k(t) = P_k0 + K_p,k t`` and
likewise for ``Q`` and the squared magnitudes, with ``K`` read off the
curve direction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .case_model import BusKind
from .curve_design import CurveDirection
from .errors import DegenerateVoltageError, EmbeddingSingularError
from .quadratic_form import EQ_P, EQ_Q, QuadraticSystem

VOLTAGE_FLOOR = 1e-6
DEFAULT_I_MAX = 15


@dataclass(frozen=True)
class EmbeddingCoefficients:
    k_p: np.ndarray      # per bus (zero where absent)
    k_q: np.ndarray
    k_v: np.ndarray      # PV buses and slack
    p0: np.ndarray       # realised injections at the base point
    q0: np.ndarray
    vm2: np.ndarray      # realised squared magnitudes
    base_state: np.ndarray
    alpha: float
    slack: int

    @property
    def k_s(self) -> float:
        return float(self.k_v[self.slack])


@dataclass(frozen=True)
class SeriesState:
    v: np.ndarray        # (i_max+1, N_bus) complex voltage coefficients
    w: np.ndarray        # (i_max+1, N_bus) reciprocal coefficients, slack column unused
    q: np.ndarray        # (i_max+1, N_gen) PV reactive coefficients
    u: np.ndarray        # (i_max+1, n) coefficients of the state vector U
    i_max: int
    system_size: int
    pv_buses: tuple


def embedding_dimension(sys: QuadraticSystem) -> int:
    return 4 * sys.n_bus + sys.network.n_gen - 3


def embed_at_point(sys: QuadraticSystem, direction: CurveDirection, u, alpha_here: float
                   ) -> EmbeddingCoefficients:
    """Degree-0 data of an embedding centred at ``(u, alpha_here)``."""
    u = np.asarray(u, dtype=float)
    v = sys.to_complex(u)
    if np.min(np.abs(v)) < VOLTAGE_FLOOR:
        k = int(np.argmin(np.abs(v)))
        raise DegenerateVoltageError(f"bus {k + 1}: |V| = {abs(v[k]):.3g} below voltage floor")
    nb = sys.n_bus
    s = v * np.conj(sys.admittance.y @ v)
    k_p = np.zeros(nb)
    k_q = np.zeros(nb)
    k_v = np.zeros(nb)
    for i, (k, kind) in enumerate(sys.eq_kind):
        if kind == EQ_P:
            k_p[k] = direction.d[i]
        elif kind == EQ_Q:
            k_q[k] = direction.d[i]
        else:
            k_v[k] = direction.d[i]
    return EmbeddingCoefficients(k_p, k_q, k_v, s.real.copy(), s.imag.copy(),
                                 np.abs(v) ** 2, u.copy(), float(alpha_here), sys.slack)


class _Layout:
    """Unknown ordering of the per-degree real system."""

    def __init__(self, sys: QuadraticSystem):
        net = sys.network
        self.slack = sys.slack
        self.nonslack = [k for k in range(net.n_bus) if k != self.slack]
        self.pv = [k for k, b in enumerate(net.buses) if b.kind is BusKind.PV]
        m = len(self.nonslack)
        self.pos = {k: j for j, k in enumerate(self.nonslack)}
        self.vr = np.arange(m)
        self.vi = m + np.arange(m)
        self.wr = 2 * m + np.arange(m)
        self.wi = 3 * m + np.arange(m)
        self.q = 4 * m + np.arange(len(self.pv))
        self.vs = 4 * m + len(self.pv)
        self.size = self.vs + 1


def _assemble(sys: QuadraticSystem, coeffs: EmbeddingCoefficients, lay: _Layout):
    g = sys.admittance.g.tocoo()
    b = sys.admittance.b.tocoo()
    v0 = sys.to_complex(coeffs.base_state)
    w0 = 1.0 / v0
    rows, cols, vals = [], [], []

    def put(r, c, x):
        rows.append(r)
        cols.append(c)
        vals.append(x)

    m = len(lay.nonslack)
    # balance equations: rows 2j (real) and 2j+1 (imag) for non-slack bus j
    for mat, im_part in ((g, False), (b, True)):
        for kk, nn, val in zip(mat.row, mat.col, mat.data):
            if kk == lay.slack:
                continue
            j = lay.pos[kk]
            if nn == lay.slack:
                # slack voltage is real
                put(2 * j + (1 if im_part else 0), lay.vs, val)
                continue
            c = lay.pos[nn]
            if not im_part:   # G
                put(2 * j, lay.vr[c], val)
                put(2 * j + 1, lay.vi[c], val)
            else:             # B
                put(2 * j, lay.vi[c], -val)
                put(2 * j + 1, lay.vr[c], val)
    pv_pos = {k: i for i, k in enumerate(lay.pv)}
    for k in lay.nonslack:
        j = lay.pos[k]
        c = complex(coeffs.p0[k], -coeffs.q0[k])
        # - c * conj(w)
        put(2 * j, lay.wr[j], -c.real)
        put(2 * j, lay.wi[j], -c.imag)
        put(2 * j + 1, lay.wr[j], -c.imag)
        put(2 * j + 1, lay.wi[j], c.real)
        if k in pv_pos:
            # + j q_i conj(w0)
            qi = lay.q[pv_pos[k]]
            put(2 * j, qi, w0[k].imag)
            put(2 * j + 1, qi, w0[k].real)
    base = 2 * m
    # reciprocal equations v0 w + w0 v
    for k in lay.nonslack:
        j = lay.pos[k]
        r0, r1 = base + 2 * j, base + 2 * j + 1
        put(r0, lay.wr[j], v0[k].real)
        put(r0, lay.wi[j], -v0[k].imag)
        put(r0, lay.vr[j], w0[k].real)
        put(r0, lay.vi[j], -w0[k].imag)
        put(r1, lay.wi[j], v0[k].real)
        put(r1, lay.wr[j], v0[k].imag)
        put(r1, lay.vi[j], w0[k].real)
        put(r1, lay.vr[j], w0[k].imag)
    base = 4 * m
    for i, k in enumerate(lay.pv):
        j = lay.pos[k]
        put(base + i, lay.vr[j], 2 * v0[k].real)
        put(base + i, lay.vi[j], 2 * v0[k].imag)
    put(lay.vs, lay.vs, 2 * v0[lay.slack].real)
    a = sp.csc_matrix((vals, (rows, cols)), shape=(lay.size, lay.size))
    a.sum_duplicates()
    return a


def embedding_matrix(sys: QuadraticSystem, coeffs: EmbeddingCoefficients) -> sp.csc_matrix:
    return _assemble(sys, coeffs, _Layout(sys))


def series_coefficients(sys: QuadraticSystem, coeffs: EmbeddingCoefficients,
                        i_max: int = DEFAULT_I_MAX) -> SeriesState:
    """Power series of all embedded variables through degree ``i_max``.

    Raises :class:`EmbeddingSingularError` when the base point itself is
    singular (the per-degree matrix cannot be factorized).
    """
    if i_max < 1:
        raise ValueError("i_max must be at least 1")
    lay = _Layout(sys)
    a = _assemble(sys, coeffs, lay)
    try:
        lu = spla.splu(a)
    except RuntimeError as exc:
        raise EmbeddingSingularError(f"embedding matrix is singular: {exc}") from None

    nb = sys.n_bus
    ns = lay.nonslack
    m = len(ns)
    s = lay.slack
    v = np.zeros((i_max + 1, nb), dtype=complex)
    w = np.zeros((i_max + 1, nb), dtype=complex)
    q = np.zeros((i_max + 1, len(lay.pv)))
    v[0] = sys.to_complex(coeffs.base_state)
    w[0, ns] = 1.0 / v[0, ns]
    q[0] = coeffs.q0[lay.pv]
    kpq = coeffs.k_p[ns] - 1j * coeffs.k_q[ns]
    pv_j = np.array([lay.pos[k] for k in lay.pv], dtype=int)

    for i in range(1, i_max + 1):
        vn = v[:, ns]
        wn = w[:, ns]
        rhs_bal = kpq * np.conj(wn[i - 1])
        if len(lay.pv):
            conv_q = np.zeros(len(lay.pv), dtype=complex)
            for mm in range(1, i):
                conv_q += q[mm] * np.conj(wn[i - mm, pv_j])
            rhs_bal[pv_j] -= 1j * conv_q
        conv_vw = np.sum(vn[1:i] * wn[i - 1:0:-1], axis=0) if i > 1 else np.zeros(m, complex)
        rhs_rec = -conv_vw
        rhs = np.empty(lay.size)
        rhs[0:2 * m:2] = rhs_bal.real
        rhs[1:2 * m:2] = rhs_bal.imag
        rhs[2 * m:4 * m:2] = rhs_rec.real
        rhs[2 * m + 1:4 * m:2] = rhs_rec.imag
        for idx, k in enumerate(lay.pv):
            conv = sum(v[mm, k] * np.conj(v[i - mm, k]) for mm in range(1, i))
            rhs[4 * m + idx] = (coeffs.k_v[k] if i == 1 else 0.0) - np.real(conv)
        conv_s = sum(v[mm, s].real * v[i - mm, s].real for mm in range(1, i))
        rhs[lay.vs] = (coeffs.k_v[s] if i == 1 else 0.0) - conv_s
        x = lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise EmbeddingSingularError("embedding solve produced non-finite coefficients")
        v[i, ns] = x[lay.vr] + 1j * x[lay.vi]
        w[i, ns] = x[lay.wr] + 1j * x[lay.wi]
        q[i] = x[lay.q]
        v[i, s] = x[lay.vs]
    u = np.concatenate([v.real, np.delete(v.imag, s, axis=1)], axis=1)
    return SeriesState(v, w, q, u, i_max, lay.size, tuple(lay.pv))


def evaluate_series(series: SeriesState, alpha: float):
    """Horner evaluation of the truncated series at local parameter ``alpha``.

    Returns ``(voltages, pv_reactive)``.
    """
    v = np.zeros(series.v.shape[1], dtype=complex)
    q = np.zeros(series.q.shape[1])
    for i in range(series.i_max, -1, -1):
        v = v * alpha + series.v[i]
        q = q * alpha + series.q[i]
    return v, q


def evaluate_state(series: SeriesState, alpha: float) -> np.ndarray:
    out = np.zeros(series.u.shape[1])
    for c in series.u[::-1]:
        out = out * alpha + c
    return out


def cauchy(a, b) -> np.ndarray:
    """Cauchy product of two coefficient sequences, truncated to len(a)."""
    n = len(a)
    return np.array([sum(a[m] * b[i - m] for m in range(i + 1)) for i in range(n)])


def dump_coefficients(series: SeriesState) -> str:
    """CSV rows ``bus,degree,re,im`` for plotting or debugging."""
    lines = ["bus,degree,re,im"]
    for k in range(series.v.shape[1]):
        for i in range(series.i_max + 1):
            c = series.v[i, k]
            lines.append(f"{k + 1},{i},{c.real!r},{c.imag!r}")
    return "\n".join(lines) + "\n"
