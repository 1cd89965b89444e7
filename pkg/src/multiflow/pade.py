"""Near-diagonal Pade approximants of truncated power series.

The denominator is normalised to ``l_0 = 1``.  Series are rescaled in the
independent variable before the coefficient-matching solve so that the
Toeplitz system stays well conditioned for series with small radius of
convergence; the returned coefficients are in the original variable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .errors import DegeneratePadeError, PoleEvaluationError

COND_LIMIT = 1e13
DOUBLET_TOL = 1e-6
# a branch point on the real axis often shows up as a tight cluster of
# complex poles; roots this close to the axis count as real
NEAR_REAL = 0.05


@dataclass(frozen=True)
class PadeApproximant:
    numerator: np.ndarray
    denominator: np.ndarray

    @property
    def degrees(self) -> tuple[int, int]:
        return len(self.numerator) - 1, len(self.denominator) - 1

    @property
    def order(self) -> int:
        return sum(self.degrees)


def _scale(c: np.ndarray) -> float:
    """Rough inverse radius of convergence from the coefficient decay."""
    idx = [i for i in range(1, len(c)) if abs(c[i]) > 0]
    if not idx:
        return 1.0
    logs = np.log(np.abs(c[idx]))
    if len(idx) == 1:
        rho = np.exp(logs[0] / idx[0]) if abs(c[0]) == 0 else (abs(c[idx[0]]) / abs(c[0])) ** (1 / idx[0])
    else:
        x = np.asarray(idx, dtype=float) - np.mean(idx)
        rho = np.exp(x @ (logs - logs.mean()) / (x @ x))
    if not np.isfinite(rho) or rho <= 0:
        return 1.0
    return float(rho)


def _solve(c: np.ndarray, n_num: int, n_den: int):
    if n_den == 0:
        return c[:n_num + 1].copy(), np.ones(1, dtype=c.dtype)
    col = c[n_num:n_num + n_den]
    row = np.array([c[n_num - j] if n_num - j >= 0 else 0 for j in range(n_den)], dtype=c.dtype)
    t = toeplitz(col, row)
    if not np.all(np.isfinite(t)):
        raise DegeneratePadeError("non-finite coefficients")
    sv = np.linalg.svd(t, compute_uv=False)
    if sv[0] == 0 or sv[-1] / sv[0] < 1.0 / COND_LIMIT:
        raise DegeneratePadeError(f"singular matching system for degrees ({n_num}, {n_den})")
    rhs = -c[n_num + 1:n_num + n_den + 1]
    tail = np.linalg.solve(t, rhs)
    den = np.concatenate([np.ones(1, dtype=c.dtype), tail])
    num = np.convolve(den, c[:n_num + 1])[:n_num + 1]
    return num, den


def pade_degrees(order: int) -> tuple[int, int]:
    return (order + 1) // 2, order // 2


def pade_from_series(c, allow_fallback: bool = True) -> PadeApproximant:
    """Pade approximant of degrees ``(ceil(N/2), floor(N/2))`` for ``c_0..c_N``.

    A singular matching system lowers ``N`` by two and retries; orders 0
    and 1 have no denominator and always succeed.  With
    ``allow_fallback=False`` the singular case raises
    :class:`DegeneratePadeError` instead.
    """
    c = np.asarray(c)
    if c.dtype.kind not in "fc":
        c = c.astype(float)
    order = len(c) - 1
    if order < 1:
        raise ValueError("need at least two coefficients")
    rho = _scale(c)
    powers = rho ** -np.arange(order + 1, dtype=float)
    cs = c * powers
    while True:
        n_num, n_den = pade_degrees(order)
        try:
            num, den = _solve(cs[:order + 1], n_num, n_den)
            break
        except DegeneratePadeError:
            if not allow_fallback:
                raise
            order -= 2
    num = num * rho ** np.arange(len(num))
    den = den * rho ** np.arange(len(den))
    return PadeApproximant(num, den)


def _horner(coef, x):
    out = np.zeros_like(x, dtype=np.result_type(coef, x))
    for a in coef[::-1]:
        out = out * x + a
    return out


def pade_eval(p: PadeApproximant, alpha):
    x = np.asarray(alpha, dtype=float)
    den = _horner(p.denominator, x)
    if np.any(np.abs(den) < 1e-14):
        raise PoleEvaluationError(f"evaluation at a pole (alpha = {alpha})")
    out = _horner(p.numerator, x) / den
    return out if out.ndim else out[()]


def _roots(coef) -> np.ndarray:
    coef = np.asarray(coef)
    scale = np.max(np.abs(coef))
    if scale == 0:
        raise DegeneratePadeError("zero polynomial")
    keep = np.nonzero(np.abs(coef) > 1e-14 * scale)[0]
    coef = coef[:keep[-1] + 1]
    if len(coef) < 2:
        return np.zeros(0, dtype=complex)
    comp = np.polynomial.polynomial.polycompanion(coef)
    return np.linalg.eigvals(comp)


def _near_real(roots, tol_imag, rel_imag):
    lim = np.maximum(tol_imag * (1 + np.abs(roots.real)), rel_imag * np.abs(roots.real))
    keep = roots[np.abs(roots.imag) <= lim]
    return keep[np.argsort(np.abs(keep.real))]


def denominator_real_roots(p: PadeApproximant, tol_imag: float = 1e-6,
                           rel_imag: float = 0.0) -> np.ndarray:
    """Real roots of the denominator, sorted by magnitude.

    A positive ``rel_imag`` also admits roots with ``|imag| <= rel_imag*|real|``
    (their real parts are returned).
    """
    if len(p.denominator) < 2:
        return np.zeros(0)
    return _near_real(_roots(p.denominator), tol_imag, rel_imag).real


def is_doublet(p: PadeApproximant, zeta, tol: float = DOUBLET_TOL, zeros=None) -> bool:
    """True when a numerator root cancels the pole at ``zeta``."""
    if zeros is None:
        if len(p.numerator) < 2 or not np.any(p.numerator):
            return False
        zeros = _roots(p.numerator)
    return bool(np.any(np.abs(zeros - zeta) <= tol * max(1.0, abs(zeta))))


def min_pole_from_roots(roots, travel_sign: int):
    cands = [abs(z) for z in roots if z != 0 and np.sign(z) == travel_sign]
    return min(cands) * travel_sign if cands else None


def min_pole(pades, travel_sign: int, tol_imag: float = 1e-6, drop_doublets: bool = True,
             rel_imag: float = NEAR_REAL):
    """Nearest real pole on the side of travel over all approximants, or None.

    Spurious pole/zero pairs are ignored when ``drop_doublets`` is set.
    """
    best = None
    for p in pades:
        if len(p.denominator) < 2:
            continue
        try:
            roots = _near_real(_roots(p.denominator), tol_imag, rel_imag)
        except DegeneratePadeError:
            continue
        zeros = None
        for z in roots:    # sorted by magnitude of the real part
            x = z.real
            if x == 0 or np.sign(x) != travel_sign:
                continue
            if best is not None and abs(x) >= abs(best):
                break
            if drop_doublets:
                if zeros is None:
                    zeros = (_roots(p.numerator) if len(p.numerator) > 1 and np.any(p.numerator)
                             else np.zeros(0))
                if is_doublet(p, z, zeros=zeros):
                    continue
            best = float(x)
            break
    return best


def matching_system_size(i_max: int) -> int:
    """Real dimension of the coefficient-matching system for complex series."""
    return 2 * (i_max + 1)
