"""Dense-matrix operation-count model and step-efficiency metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

from .errors import NumericalError


@dataclass(frozen=True)
class CostModel:
    n_bus: int
    n_gen: int
    i_max: int
    c_tl: float
    c_pd: float
    c_newton: float
    r_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def _counts(n_bus, n_gen, i_max):
    two_thirds = Fraction(2, 3)
    m = 4 * n_bus + n_gen - 3
    c_tl = two_thirds * m ** 3 + 2 * m ** 2 * i_max
    p = 2 * i_max + 2
    c_pd = (two_thirds * p ** 3 + 2 * p ** 2) * (2 * n_bus - 1)
    k = 2 * n_bus - 1
    c_newton = two_thirds * k ** 3 + 2 * k ** 2
    return c_tl, c_pd, c_newton


def exact_counts(n_bus: int, n_gen: int, i_max: int):
    """The three operation counts as exact fractions (integer inputs)."""
    return _counts(Fraction(n_bus), Fraction(n_gen), Fraction(i_max))


def complexity_estimates(n_bus, n_gen, i_max: int) -> CostModel:
    """Operation counts of one holomorphic step versus three Newton iterations.

    ``n_gen`` may be fractional when scaled from ``n_bus``.
    """
    if n_bus < 2 or n_gen < 0 or i_max < 1:
        raise ValueError("need n_bus >= 2, n_gen >= 0, i_max >= 1")
    c_tl, c_pd, c_newton = (float(c) for c in _counts(float(n_bus), float(n_gen), int(i_max)))
    r = (c_tl + c_pd + 3 * c_newton) / (3 * c_newton)
    return CostModel(int(n_bus), n_gen, int(i_max), c_tl, c_pd, c_newton, r)


def equivalent_steps(n_pc: int, n_he_pc: int, n_he_holo: int) -> float:
    """PC steps represented by one holomorphic step."""
    if n_he_holo <= 0:
        raise NumericalError("equivalent steps undefined without holomorphic steps")
    return (n_pc - n_he_pc) / n_he_holo


def avg_steps_per_dim(total_steps: int, n_bus: int) -> float:
    if total_steps < 1:
        raise ValueError("total_steps must be at least 1")
    return float(total_steps) ** (1.0 / (2 * n_bus - 1))
