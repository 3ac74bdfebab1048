"""
Dynamika procesu trójkątnego.

Odwzorowania ułamkowo-liniowe f_j, reguła progowa, krok φ z rozgałęzieniem
w punktach decyzyjnych, odwzorowanie odwrotne ψ ze sprawdzaniem
legalności oraz iteracja trajektorii.
"""

import enum
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

from .exceptions import BranchEncountered, InputError, SameSide
from .params import (BoundaryPoint, DecisionPoints, SystemParams, exit_point,
                     next_node, project)
from .rationals import format_rational, parse_rational, round_fraction, to_decimal

logger = logging.getLogger(__name__)


class BranchPolicy(str, enum.Enum):
    """Zachowanie trajektorii w punkcie decyzyjnym."""
    LOWER = "lower"
    UPPER = "upper"
    ERROR = "error"


class Legitimacy(str, enum.Enum):
    """Wynik sprawdzenia legalności przeciwobrazu."""
    YES = "yes"
    NO = "no"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class StepResult:
    """
    Wynik jednego kroku φ.

    Attributes:
        successors: Jeden lub dwa następniki.
        nodes: Węzły obsługiwane w kroku (w tej samej kolejności).
    """
    successors: Tuple[BoundaryPoint, ...]
    nodes: Tuple[int, ...]

    @property
    def branched(self) -> bool:
        """Czy krok się rozgałęził."""
        return len(self.successors) > 1


@dataclass
class Trajectory:
    """
    Trajektoria procesu trójkątnego.

    Attributes:
        points: Kolejne punkty brzegowe.
        branch_log: Indeksy kroków, w których trafiono punkt decyzyjny.
    """
    points: List[BoundaryPoint] = field(default_factory=list)
    branch_log: List[int] = field(default_factory=list)

    @property
    def itinerary(self) -> List[int]:
        """Etykiety boków kolejnych punktów."""
        return [p.side for p in self.points]

    def __len__(self) -> int:
        """Liczba punktów trajektorii."""
        return len(self.points)

    def to_csv_rows(self) -> List[Dict[str, str]]:
        """
        Wiersze eksportu CSV.

        Returns:
            List[Dict]: Kolumny step, side, x_decimal, x_rational, branched.
        """
        branched = set(self.branch_log)
        rows = []
        for step_no, point in enumerate(self.points):
            x = Fraction(point.x)
            rows.append({
                "step": str(step_no),
                "side": str(point.side),
                "x_decimal": to_decimal(x, 20),
                "x_rational": format_rational(x),
                "branched": "1" if step_no in branched else "0",
            })
        return rows

    @classmethod
    def from_csv_rows(cls, rows: Iterable[Dict[str, str]]) -> "Trajectory":
        """Odtwarza trajektorię z wierszy CSV."""
        trajectory = cls()
        for row in rows:
            x = row.get("x_rational") or row["x_decimal"]
            trajectory.points.append(BoundaryPoint(int(row["side"]), parse_rational(x)))
            if row.get("branched") == "1":
                trajectory.branch_log.append(int(row["step"]))
        return trajectory


def forward_map(params: SystemParams, j: int, z: BoundaryPoint) -> BoundaryPoint:
    """
    Odwzorowanie f_j: punkt wyjścia dryfu z punktu z przy obsłudze węzła j.

    Dla parametrów znormalizowanych używa postaci zamkniętych; w ogólnym
    przypadku liczy punkt wyjścia w R³ i rzutuje go na sympleks.

    Args:
        params: Parametry systemu.
        j: Obsługiwany węzeł (bok docelowy).
        z: Punkt startowy spoza boku j.

    Returns:
        BoundaryPoint: Punkt na boku j.

    Raises:
        SameSide: Jeśli z leży na boku j.
    """
    if z.side == j:
        raise SameSide(j)
    if not params.is_normalized:
        image = project(exit_point(params, j, z.to_simplex()))
        return BoundaryPoint.from_simplex(image, side=j)

    rho = params.rho
    theta = params.drift_constant
    a = 1 - rho[j - 1]
    prev = next_node(j, 2)
    rho_prev = rho[prev - 1]
    x = z.x
    if z.side == prev:
        value = rho_prev * (1 - x) / (a + theta * (1 - x))
    else:
        value = (rho_prev * x + a * (1 - x)) / (a + theta * x)
    return BoundaryPoint(j, value)


def forward_derivative(params: SystemParams, j: int, z: BoundaryPoint) -> Fraction:
    """
    Pochodna współrzędnej f_j względem x (parametry znormalizowane).

    Args:
        params: Parametry znormalizowane.
        j: Bok docelowy.
        z: Punkt spoza boku j.

    Returns:
        Fraction: Ujemna pochodna gałęzi.
    """
    if z.side == j:
        raise SameSide(j)
    rho = params.rho
    theta = params.drift_constant
    a = 1 - rho[j - 1]
    prev = next_node(j, 2)
    if z.side == prev:
        return -rho[prev - 1] * a / (a + theta * (1 - z.x)) ** 2
    return -rho[next_node(j, 1) - 1] * a / (a + theta * z.x) ** 2


def corner_image(params: SystemParams, side: int) -> Fraction:
    """Współrzędna f_side(e_side) = ρ_prev / (ρ_prev + ρ_next)."""
    rho_prev = params.rho_of(next_node(side, 2))
    rho_next = params.rho_of(next_node(side, 1))
    return rho_prev / (rho_prev + rho_next)


def switch_rule(d: DecisionPoints, z: BoundaryPoint) -> Tuple[int, ...]:
    """
    Reguła progowa R(x, î).

    Args:
        d: Punkty decyzyjne.
        z: Punkt brzegowy.

    Returns:
        tuple: (ĵ,) gdy x < d_î, (k̂,) gdy x > d_î, oba przy równości.
    """
    threshold = d[z.side]
    if z.x < threshold:
        return (next_node(z.side, 1),)
    if z.x > threshold:
        return (next_node(z.side, 2),)
    return (next_node(z.side, 1), next_node(z.side, 2))


def step(params: SystemParams, d: DecisionPoints, z: BoundaryPoint) -> StepResult:
    """
    Jeden krok φ procesu trójkątnego.

    Args:
        params: Parametry systemu.
        d: Punkty decyzyjne.
        z: Punkt bieżący.

    Returns:
        StepResult: Następnik(i) i obsłużone węzły.
    """
    nodes = switch_rule(d, z)
    return StepResult(tuple(forward_map(params, j, z) for j in nodes), nodes)


def pre_image(params: SystemParams, z: BoundaryPoint) -> BoundaryPoint:
    """
    Przeciwobraz f_{Side(z)}⁻¹(z) bez sprawdzania reguły.

    Bok źródłowy wynika z porównania x z obrazem narożnika: poniżej niego
    przeciwobraz leży na boku k̂ = î+2, od niego w górę na boku ĵ = î+1.

    Args:
        params: Parametry znormalizowane.
        z: Punkt, którego przeciwobraz jest szukany.

    Returns:
        BoundaryPoint: Przeciwobraz.
    """
    if not params.is_normalized:
        raise InputError("Odwzorowanie odwrotne wymaga parametrów znormalizowanych")
    target = z.side
    prev, nxt = next_node(target, 2), next_node(target, 1)
    rho = params.rho
    theta = params.drift_constant
    a = 1 - rho[target - 1]
    rho_prev = rho[prev - 1]
    x = z.x
    if x < corner_image(params, target):
        u = a * x / (rho_prev - theta * x)
        return BoundaryPoint(prev, 1 - u)
    return BoundaryPoint(nxt, a * (1 - x) / (a + theta * x - rho_prev))


def inverse_map(params: SystemParams, d: DecisionPoints,
                z: BoundaryPoint) -> Tuple[BoundaryPoint, Legitimacy]:
    """
    Odwzorowanie odwrotne ψ = f_{Side(z)}⁻¹ ze sprawdzeniem legalności.

    Args:
        params: Parametry znormalizowane.
        d: Punkty decyzyjne.
        z: Punkt, którego przeciwobraz jest szukany.

    Returns:
        tuple: (przeciwobraz w, legalność).
    """
    target = z.side
    pre = pre_image(params, z)
    nodes = switch_rule(d, pre)
    if target not in nodes:
        return pre, Legitimacy.NO
    if len(nodes) == 2:
        return pre, Legitimacy.BOUNDARY
    return pre, Legitimacy.YES


def trajectory(params: SystemParams, d: DecisionPoints, z0: BoundaryPoint, n: int,
               branch_policy: BranchPolicy = BranchPolicy.ERROR,
               round_denominator: Optional[int] = None) -> Trajectory:
    """
    Iteruje krok φ n razy.

    Args:
        params: Parametry systemu.
        d: Punkty decyzyjne.
        z0: Punkt startowy.
        n: Liczba kroków (n = 0 daje trajektorię z samym z0).
        branch_policy: Wybór gałęzi ĵ (lower), k̂ (upper) lub błąd.
        round_denominator: Tryb przybliżony: zaokrąglanie współrzędnych
            do siatki 1/round_denominator po każdym kroku.

    Returns:
        Trajectory: Trajektoria długości n + 1.

    Raises:
        BranchEncountered: Przy rozgałęzieniu i polityce 'error'.
    """
    if n < 0:
        raise InputError(f"Liczba kroków musi być nieujemna: {n}")
    policy = BranchPolicy(branch_policy)
    result = Trajectory(points=[z0])
    current = z0
    for t in range(n):
        outcome = step(params, d, current)
        if outcome.branched:
            result.branch_log.append(t)
            if policy is BranchPolicy.ERROR:
                raise BranchEncountered(t, current)
            current = outcome.successors[0 if policy is BranchPolicy.LOWER else 1]
        else:
            current = outcome.successors[0]
        if round_denominator is not None:
            current = BoundaryPoint(current.side, round_fraction(Fraction(current.x),
                                                                 round_denominator))
        result.points.append(current)
    return result
