"""Curve design: the one-parameter families ``PF(U) - alpha * d_l``.

``d_l`` is column ``l`` of the inverse of an invertible map ``E`` that
recombines the power flow equations.  Tracing ``PF(U) = alpha d_l`` is the
same as tracing the level curve obtained by dropping equation ``l`` from
``E PF(U)``, so only the directions ``d_l`` are needed downstream.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CaseIOError, DesignError
from .quadratic_form import QuadraticSystem, residual

log = logging.getLogger(__name__)

STRATEGIES = ("identity", "user_file", "heuristic")


@dataclass(frozen=True)
class EllipticalMap:
    e_matrix: np.ndarray
    e_inverse: np.ndarray
    provenance: str = "identity"


@dataclass(frozen=True)
class CurveDirection:
    l: int            # 1-based equation index
    d: np.ndarray

    def __post_init__(self):
        if not np.any(self.d):
            raise DesignError(f"curve direction {self.l} is zero")


@dataclass(frozen=True)
class RowReport:
    row: int
    pd: bool
    gamma_positive: bool

    @property
    def ok(self) -> bool:
        return self.pd and self.gamma_positive


def _is_pd(h: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        return False
    return True


def row_quadratic(sys: QuadraticSystem, weights) -> tuple[np.ndarray, float]:
    """Quadratic part and constant of ``sum_j w_j f_j``."""
    h = np.zeros((sys.n, sys.n))
    for w, m in zip(weights, sys.matrices):
        if w:
            h += w * m.toarray()
    return h, float(np.dot(weights, sys.r))


def verify_elliptical(sys: QuadraticSystem, emap: EllipticalMap) -> list[RowReport]:
    e = np.asarray(emap.e_matrix, dtype=float)
    if e.shape != (sys.n, sys.n):
        raise ValueError(f"map has shape {e.shape}, expected ({sys.n}, {sys.n})")
    out = []
    for i, row in enumerate(e):
        h, gamma = row_quadratic(sys, row)
        out.append(RowReport(i + 1, _is_pd(h), gamma > 0))
    return out


def make_map(e_matrix, provenance="user_file") -> EllipticalMap:
    e = np.asarray(e_matrix, dtype=float)
    if e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise DesignError(f"map must be square, got shape {e.shape}")
    try:
        inv = np.linalg.inv(e)
    except np.linalg.LinAlgError:
        raise DesignError("map is not invertible") from None
    if not np.all(np.isfinite(inv)) or np.max(np.abs(e @ inv - np.eye(len(e)))) > 1e-10:
        raise DesignError("map is not invertible (ill-conditioned)")
    return EllipticalMap(e, inv, provenance)


def load_e_matrix(path) -> np.ndarray:
    """Read a dense map from CSV (first row ``n``) or JSON ``{"n", "matrix"}``."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise CaseIOError(f"cannot read map file {p}: {exc}") from exc
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        n = int(doc["n"])
        rows = doc["matrix"]
    else:
        reader = list(csv.reader(io.StringIO(text)))
        reader = [r for r in reader if r and any(c.strip() for c in r)]
        n = int(float(reader[0][0]))
        rows = [[float(c) for c in r] for r in reader[1:]]
    e = np.asarray(rows, dtype=float)
    if e.shape != (n, n):
        raise DesignError(f"map file declares n={n} but holds shape {e.shape}")
    return e


def save_e_matrix(path, e) -> None:
    e = np.asarray(e, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([len(e)])
        w.writerows([[repr(float(v)) for v in row] for row in e])


def heuristic_map(sys: QuadraticSystem, seed: int = 0, attempts: int = 200) -> EllipticalMap:
    """Random positive combinations of equations with PD quadratic part.

    Falls back to the identity map when any row cannot be filled within
    ``attempts`` draws or the assembled map is singular.
    """
    rng = np.random.default_rng(seed)
    n = sys.n
    rows = []
    for i in range(n):
        found = None
        for _ in range(attempts):
            w = rng.exponential(size=n)
            w[i] += 1.0
            h, gamma = row_quadratic(sys, w)
            if gamma > 0 and _is_pd(h):
                found = w
                break
        if found is None:
            log.warning("heuristic map: row %d has no PD combination after %d draws; "
                        "using identity", i + 1, attempts)
            return EllipticalMap(np.eye(n), np.eye(n), "identity")
        rows.append(found)
    try:
        return make_map(np.array(rows), "heuristic")
    except DesignError:
        log.warning("heuristic map is singular; using identity")
        return EllipticalMap(np.eye(n), np.eye(n), "identity")


def design_curves(sys: QuadraticSystem, strategy: str = "identity", e_file=None,
                  e_matrix=None, seed: int = 0) -> list[CurveDirection]:
    """Directions ``d_l = E^-1 e_l`` for ``l = 1..n``."""
    if strategy not in STRATEGIES:
        raise DesignError(f"unknown curve strategy {strategy!r}")
    n = sys.n
    if strategy == "identity":
        emap = EllipticalMap(np.eye(n), np.eye(n), "identity")
    elif strategy == "user_file":
        if e_matrix is None:
            if e_file is None:
                raise DesignError("user_file strategy requires a map file")
            e_matrix = load_e_matrix(e_file)
        emap = make_map(e_matrix, "user_file")
        if emap.e_matrix.shape != (n, n):
            raise DesignError(f"map has shape {emap.e_matrix.shape}, system needs ({n}, {n})")
        for rep in verify_elliptical(sys, emap):
            if not rep.ok:
                what = "indefinite quadratic part" if not rep.pd else "non-positive constant"
                raise DesignError(f"map row {rep.row} fails the elliptical condition ({what})",
                                  row=rep.row)
    else:
        emap = heuristic_map(sys, seed)
    return [CurveDirection(l + 1, emap.e_inverse[:, l].copy()) for l in range(n)]


def parameterized_residual(sys: QuadraticSystem, direction: CurveDirection, u, alpha: float):
    return residual(sys, u) - alpha * direction.d
