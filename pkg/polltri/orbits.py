"""
Silnik orbit procesu trójkątnego.

Iteracja zbiorów A^t, łańcuchy przeciwobrazów punktów decyzyjnych,
certyfikat skończoności P, wyznaczanie orbit okresowych przez podział
brzegu na łuki oraz klasyfikacja stabilności i basenów przyciągania.
"""

import bisect
import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .dynamics import (BranchPolicy, Legitimacy, forward_derivative, forward_map,
                       inverse_map, step, switch_rule)
from .exceptions import AssertionTriggered, EngineError, NotFiniteP
from .params import NODES, BoundaryPoint, DecisionPoints, SystemParams, geometry, next_node
from .rationals import ceil_fraction, floor_fraction, format_rational, round_fraction, to_decimal

logger = logging.getLogger(__name__)

MAX_ORBITS = 4
DEFAULT_PRECISION = Fraction(1, 10 ** 30)
ROUNDING_DENOMINATOR = 2 ** 256
BASIN_DENOMINATOR = 2 ** 128

Interval = Tuple[Fraction, Fraction]


class Stability(str, enum.Enum):
    """Klasa stabilności orbity."""
    STABLE = "stable"
    ONE_SIDED = "one_sided"
    UNSTABLE = "unstable"


class ChainEnd(str, enum.Enum):
    """Powód zakończenia łańcucha przeciwobrazów."""
    ILLEGITIMATE = "illegitimate"
    DEPTH_LIMIT = "depth-limit"
    CYCLE = "cycle-detected"


@dataclass
class IntervalSet:
    """
    Suma rozłącznych domkniętych przedziałów na bokach trójkąta.

    Attributes:
        intervals: Dla każdego boku posortowana lista przedziałów (lo, hi).
    """
    intervals: Dict[int, List[Interval]] = field(
        default_factory=lambda: {side: [] for side in NODES})

    @classmethod
    def full(cls) -> "IntervalSet":
        """Cały brzeg A⁰."""
        return cls({side: [(Fraction(0), Fraction(1))] for side in NODES})

    @classmethod
    def from_pieces(cls, pieces: Sequence[Tuple[int, Fraction, Fraction]]) -> "IntervalSet":
        """
        Buduje zbiór z dowolnych kawałków, scalając nachodzące na siebie.

        Args:
            pieces: Trójki (bok, lo, hi).

        Returns:
            IntervalSet: Zbiór z rozłącznymi przedziałami.
        """
        result = cls()
        for side in NODES:
            parts = sorted((lo, hi) for s, lo, hi in pieces if s == side)
            merged: List[Interval] = []
            for lo, hi in parts:
                if merged and lo <= merged[-1][1]:
                    if hi > merged[-1][1]:
                        merged[-1] = (merged[-1][0], hi)
                else:
                    merged.append((lo, hi))
            result.intervals[side] = merged
        return result

    @property
    def count(self) -> int:
        """Łączna liczba przedziałów."""
        return sum(len(parts) for parts in self.intervals.values())

    def contains(self, point: BoundaryPoint) -> bool:
        """Czy punkt należy do zbioru."""
        return any(lo <= point.x <= hi for lo, hi in self.intervals[point.side])

    def is_subset_of(self, other: "IntervalSet") -> bool:
        """Czy każdy przedział zawiera się w przedziale drugiego zbioru."""
        for side in NODES:
            for lo, hi in self.intervals[side]:
                if not any(olo <= lo and hi <= ohi for olo, ohi in other.intervals[side]):
                    return False
        return True

    def total_length(self) -> Fraction:
        """Suma długości przedziałów."""
        return sum((hi - lo for parts in self.intervals.values() for lo, hi in parts),
                   Fraction(0))

    def to_dict(self) -> Dict[str, List[List[str]]]:
        """Przedziały jako napisy "p/q"."""
        return {str(side): [[format_rational(lo), format_rational(hi)] for lo, hi in parts]
                for side, parts in self.intervals.items()}


@dataclass(frozen=True)
class EscapeCertificate:
    """
    Wynik testu skończoności P.

    Attributes:
        finite: Czy znaleziono t₀ z {d₁, d₂, d₃} ∩ A^{t₀} = ∅.
        t0: Pierwsze takie t (None gdy nierozstrzygnięte).
        depth: Sprawdzona głębokość.
    """
    finite: bool
    t0: Optional[int]
    depth: int

    @property
    def label(self) -> str:
        """Etykieta raportu: FiniteP(t₀) lub Undecided."""
        return f"FiniteP({self.t0})" if self.finite else "Undecided"


@dataclass
class PreImageChain:
    """
    Łańcuch ψ^(t)(dᵢ) jednego punktu decyzyjnego.

    Attributes:
        root: Punkt decyzyjny.
        members: Kolejne legalne przeciwobrazy.
        flags: Legalność każdego członu (yes lub boundary).
        termination: Powód zakończenia.
        cycle_start: Indeks członu, do którego łańcuch wrócił (dla cyklu).
    """
    root: BoundaryPoint
    members: List[BoundaryPoint] = field(default_factory=list)
    flags: List[Legitimacy] = field(default_factory=list)
    termination: ChainEnd = ChainEnd.DEPTH_LIMIT
    cycle_start: Optional[int] = None

    @property
    def depth(self) -> int:
        """Liczba legalnych przeciwobrazów."""
        return len(self.members)


@dataclass
class PreImageTree:
    """Łańcuchy przeciwobrazów wszystkich trzech punktów decyzyjnych."""
    chains: Dict[int, PreImageChain]

    def points(self) -> List[BoundaryPoint]:
        """Wszystkie punkty P (bez powtórzeń)."""
        unique: List[BoundaryPoint] = []
        for side in NODES:
            chain = self.chains[side]
            for point in [chain.root] + chain.members:
                if not any(point.same_point(other) for other in unique):
                    unique.append(point)
        return unique

    @property
    def all_terminated(self) -> bool:
        """Czy wszystkie łańcuchy skończyły się nielegalnym przeciwobrazem."""
        return all(chain.termination is ChainEnd.ILLEGITIMATE for chain in self.chains.values())


@dataclass(frozen=True)
class OrbitPoint:
    """
    Punkt orbity zadany wymierną otoczką [lo, hi] na boku.

    Attributes:
        side: Bok.
        lo: Dolny koniec otoczki.
        hi: Górny koniec otoczki.
    """
    side: int
    lo: Fraction
    hi: Fraction

    @property
    def midpoint(self) -> BoundaryPoint:
        """Środek otoczki."""
        return BoundaryPoint(self.side, (self.lo + self.hi) / 2)

    @property
    def radius(self) -> Fraction:
        """Promień otoczki."""
        return (self.hi - self.lo) / 2

    def contains(self, x: Fraction) -> bool:
        """Czy x leży w otoczce."""
        return self.lo <= x <= self.hi

    def to_dict(self) -> Dict[str, str]:
        """Zapis punktu: dziesiętnie i jako otoczka wymierna."""
        return {
            "side": self.side,
            "decimal": to_decimal(self.midpoint.x, 32),
            "lo": format_rational(self.lo),
            "hi": format_rational(self.hi),
            "radius": to_decimal(self.radius, 6),
        }


@dataclass
class OrbitCertificate:
    """
    Certyfikat orbity okresowej.

    Attributes:
        points: Kolejne punkty orbity (otoczki).
        node_cycle: Boki kolejnych punktów.
        contraction: Iloczyn |f'| wzdłuż cyklu w środkach otoczek.
        lipschitz: Górne ograniczenie stałej Lipschitza złożenia na otoczce.
        stability: Klasa stabilności.
        contains_decision_point: Czy orbita przechodzi przez punkt decyzyjny.
    """
    points: List[OrbitPoint]
    node_cycle: Tuple[int, ...]
    contraction: Fraction
    lipschitz: Fraction
    stability: Stability = Stability.STABLE
    contains_decision_point: bool = False

    @property
    def period(self) -> int:
        """Okres orbity m."""
        return len(self.points)

    @property
    def midpoints(self) -> List[BoundaryPoint]:
        """Środki otoczek kolejnych punktów."""
        return [p.midpoint for p in self.points]

    @property
    def direction(self) -> str:
        """Kierunek obiegu dla okresu 3: clockwise (1→2→3) lub anticlockwise."""
        forward = all(next_node(a, 1) == b for a, b in
                      zip(self.node_cycle, self.node_cycle[1:] + self.node_cycle[:1]))
        return "clockwise" if forward else "anticlockwise"

    def canonical_cycle(self) -> Tuple[int, ...]:
        """Najmniejszy leksykograficznie obrót cyklu węzłów."""
        m = len(self.node_cycle)
        return min(self.node_cycle[k:] + self.node_cycle[:k] for k in range(m))

    def verify(self, params: SystemParams, d: DecisionPoints) -> bool:
        """
        Sprawdza certyfikat przez dokładne ponowne wykonanie kroków.

        Każda otoczka musi leżeć po jednej stronie punktu decyzyjnego swojego
        boku (poza orbitami przez punkt decyzyjny), a jej obraz musi mieścić
        się w otoczce następnego punktu.

        Args:
            params: Parametry znormalizowane.
            d: Punkty decyzyjne.

        Returns:
            bool: True jeśli certyfikat jest poprawny.
        """
        m = len(self.points)
        for k, point in enumerate(self.points):
            nxt = self.points[(k + 1) % m]
            for x in (point.lo, point.hi):
                nodes = switch_rule(d, BoundaryPoint(point.side, x))
                if nxt.side not in nodes:
                    return False
                if len(nodes) > 1 and not self.contains_decision_point:
                    return False
                image = forward_map(params, nxt.side, BoundaryPoint(point.side, x))
                if not nxt.contains(image.x):
                    return False
        return True

    def to_dict(self) -> Dict[str, object]:
        """Rekord atlasu orbit."""
        return {
            "m": self.period,
            "node_cycle": list(self.node_cycle),
            "points": [p.to_dict() for p in self.points],
            "contraction": to_decimal(self.contraction, 12),
            "lipschitz": to_decimal(self.lipschitz, 12),
            "stability": self.stability.value,
            "contains_decision_point": self.contains_decision_point,
        }


def _image_pieces(params: SystemParams, d: DecisionPoints,
                  current: IntervalSet) -> List[Tuple[int, Fraction, Fraction]]:
    pieces = []
    for side in NODES:
        threshold = d[side]
        lower_node, upper_node = next_node(side, 1), next_node(side, 2)
        for lo, hi in current.intervals[side]:
            if lo <= threshold:
                # f jest malejąca: obraz [f(prawy), f(lewy)]
                top = forward_map(params, lower_node, BoundaryPoint(side, lo)).x
                bottom = forward_map(params, lower_node,
                                     BoundaryPoint(side, min(hi, threshold))).x
                pieces.append((lower_node, bottom, top))
            if hi >= threshold:
                top = forward_map(params, upper_node,
                                  BoundaryPoint(side, max(lo, threshold))).x
                bottom = forward_map(params, upper_node, BoundaryPoint(side, hi)).x
                pieces.append((upper_node, bottom, top))
    return pieces


def iterate_boundary_sets(params: SystemParams, d: DecisionPoints,
                          t_max: int) -> List[IntervalSet]:
    """
    Oblicza zbiory A⁰ ⊃ A¹ ⊃ … ⊃ A^{t_max}.

    Args:
        params: Parametry znormalizowane.
        d: Punkty decyzyjne.
        t_max: Liczba iteracji.

    Returns:
        List[IntervalSet]: Zbiory A^t dla t = 0..t_max.
    """
    sets = [IntervalSet.full()]
    for _ in range(t_max):
        sets.append(IntervalSet.from_pieces(_image_pieces(params, d, sets[-1])))
    return sets


def escape_certificate(params: SystemParams, d: DecisionPoints,
                       t_max: int) -> EscapeCertificate:
    """
    Szuka pierwszego t₀ ≤ t_max, dla którego żaden dᵢ nie leży w A^{t₀}.

    Args:
        params: Parametry znormalizowane.
        d: Punkty decyzyjne.
        t_max: Maksymalna głębokość.

    Returns:
        EscapeCertificate: FiniteP(t₀) albo Undecided.
    """
    current = IntervalSet.full()
    for t in range(1, t_max + 1):
        current = IntervalSet.from_pieces(_image_pieces(params, d, current))
        if not any(current.contains(point) for point in d.points()):
            logger.info("P skończony: t0 = %d", t)
            return EscapeCertificate(True, t, t)
    logger.info("Brak rozstrzygnięcia skończoności P do głębokości %d", t_max)
    return EscapeCertificate(False, None, t_max)


def preimage_tree(params: SystemParams, d: DecisionPoints, depth: int) -> PreImageTree:
    """
    Iteruje ψ od każdego punktu decyzyjnego, póki przeciwobrazy są legalne.

    Args:
        params: Parametry znormalizowane.
        d: Punkty decyzyjne.
        depth: Maksymalna długość łańcucha.

    Returns:
        PreImageTree: Łańcuchy z powodem zakończenia.
    """
    chains = {}
    for side in NODES:
        chain = PreImageChain(root=d.point(side))
        current = chain.root
        visited = [current]
        for _ in range(depth):
            pre_image, legitimacy = inverse_map(params, d, current)
            if legitimacy is Legitimacy.NO:
                chain.termination = ChainEnd.ILLEGITIMATE
                break
            repeat = next((i for i, seen in enumerate(visited) if seen.same_point(pre_image)),
                          None)
            if repeat is not None:
                chain.termination = ChainEnd.CYCLE
                chain.cycle_start = repeat
                break
            chain.members.append(pre_image)
            chain.flags.append(legitimacy)
            visited.append(pre_image)
            current = pre_image
        chains[side] = chain
    return PreImageTree(chains)


def _arc_end(u: Fraction) -> BoundaryPoint:
    # prawy koniec łuku odczytany na boku, do którego łuk dochodzi
    if u.denominator == 1 and u > 0:
        return BoundaryPoint(int(u), Fraction(1))
    return BoundaryPoint.from_circle(u)


@dataclass
class _Arc:
    start: Fraction
    end: Fraction
    node: int = 0
    image: int = -1

    def endpoints(self) -> Tuple[BoundaryPoint, BoundaryPoint]:
        return BoundaryPoint.from_circle(self.start), _arc_end(self.end)

    def representative(self) -> BoundaryPoint:
        return BoundaryPoint.from_circle((self.start + self.end) / 2)


def _partition(params: SystemParams, d: DecisionPoints,
               points: Sequence[BoundaryPoint]) -> List[_Arc]:
    positions = sorted({p.circle_position for p in points})
    n = len(positions)
    arcs = [_Arc(positions[k], positions[k + 1]) for k in range(n - 1)]
    arcs.append(_Arc(positions[-1], positions[0] + 3))
    for arc in arcs:
        image = step(params, d, arc.representative())
        target = image.successors[0]
        arc.node = image.nodes[0]
        u = target.circle_position
        index = bisect.bisect_right(positions, u) - 1
        arc.image = index if index >= 0 else n - 1
    return arcs


def _core_cycles(arcs: List[_Arc]) -> List[List[int]]:
    n = len(arcs)
    core = set(range(n))
    for _ in range(n):
        core = {arcs[k].image for k in core}
    cycles = []
    seen = set()
    for start in sorted(core):
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        k = arcs[start].image
        while k != start:
            cycle.append(k)
            seen.add(k)
            k = arcs[k].image
        cycles.append(cycle)
    return cycles


def _compose(params: SystemParams, nodes: Sequence[int], z: BoundaryPoint) -> BoundaryPoint:
    for node in nodes:
        z = forward_map(params, node, z)
    return z


def _lipschitz_bound(params: SystemParams, nodes: Sequence[int],
                     lo: BoundaryPoint, hi: BoundaryPoint) -> Fraction:
    # |f'| jest monotoniczne na boku, więc maksimum leży na końcu przedziału
    bound = Fraction(1)
    for node in nodes:
        left = abs(forward_derivative(params, node, lo))
        right = abs(forward_derivative(params, node, hi))
        bound *= max(left, right)
        lo, hi = forward_map(params, node, lo), forward_map(params, node, hi)
    return bound


def _enclose_fixed_point(params: SystemParams, nodes: Sequence[int], arc: _Arc,
                         precision: Fraction, max_iterations: int) -> Tuple[Fraction, Fraction, int]:
    left, right = arc.endpoints()
    images = sorted((_compose(params, nodes, left), _compose(params, nodes, right)),
                    key=lambda p: p.x)
    side = images[0].side
    lo, hi = images[0].x, images[1].x
    for _ in range(max_iterations):
        if hi - lo <= precision:
            return lo, hi, side
        a = _compose(params, nodes, BoundaryPoint(side, lo)).x
        b = _compose(params, nodes, BoundaryPoint(side, hi)).x
        new_lo, new_hi = min(a, b), max(a, b)
        if new_lo.denominator > ROUNDING_DENOMINATOR or new_hi.denominator > ROUNDING_DENOMINATOR:
            new_lo = floor_fraction(new_lo, ROUNDING_DENOMINATOR)
            new_hi = ceil_fraction(new_hi, ROUNDING_DENOMINATOR)
        lo, hi = max(lo, new_lo), min(hi, new_hi)
    raise EngineError(
        f"Otoczka orbity o cyklu {list(nodes)} nie osiągnęła szerokości {precision} "
        f"po {max_iterations} iteracjach"
    )


def certificate_from_enclosure(params: SystemParams, d: DecisionPoints, side: int,
                               lo: Fraction, hi: Fraction,
                               nodes: Sequence[int]) -> OrbitCertificate:
    """
    Buduje certyfikat z otoczki pierwszego punktu i ciągu obsługiwanych węzłów.

    Args:
        params: Parametry znormalizowane.
        d: Punkty decyzyjne.
        side: Bok pierwszego punktu.
        lo: Dolny koniec otoczki.
        hi: Górny koniec otoczki.
        nodes: Węzły obsługiwane kolejno w cyklu (ostatni to `side`).

    Returns:
        OrbitCertificate: Certyfikat z klasą stabilności.
    """
    points = [OrbitPoint(side, lo, hi)]
    for node in nodes[:-1]:
        current = points[-1]
        a = forward_map(params, node, BoundaryPoint(current.side, current.lo)).x
        b = forward_map(params, node, BoundaryPoint(current.side, current.hi)).x
        points.append(OrbitPoint(node, min(a, b), max(a, b)))
    contraction = Fraction(1)
    for k, point in enumerate(points):
        target = points[(k + 1) % len(points)].side
        contraction *= abs(forward_derivative(params, target, point.midpoint))
    lipschitz = _lipschitz_bound(params, nodes, BoundaryPoint(side, lo), BoundaryPoint(side, hi))
    hits = any(p.contains(d[p.side]) for p in points)
    cert = OrbitCertificate(
        points=points,
        node_cycle=tuple(p.side for p in points),
        contraction=contraction,
        lipschitz=lipschitz,
        contains_decision_point=hits,
    )
    return replace(cert, stability=stability_classify(cert, d))


def exact_orbit(params: SystemParams, d: DecisionPoints,
                points: Sequence[BoundaryPoint]) -> OrbitCertificate:
    """
    Certyfikat orbity zadanej dokładnymi punktami (np. przez punkt decyzyjny).

    Args:
        params: Parametry znormalizowane.
        d: Punkty decyzyjne.
        points: Kolejne punkty orbity.

    Returns:
        OrbitCertificate: Certyfikat o zerowym promieniu.
    """
    nodes = [points[(k + 1) % len(points)].side for k in range(len(points))]
    first = points[0]
    return certificate_from_enclosure(params, d, first.side, Fraction(first.x),
                                      Fraction(first.x), nodes)


def _is_exact(cert: OrbitCertificate) -> bool:
    return all(p.lo == p.hi for p in cert.points)


def _dedup(certificates: List[OrbitCertificate]) -> List[OrbitCertificate]:
    # przy powtórzeniu zostaje certyfikat dokładny (orbita przez punkt decyzyjny)
    unique: List[OrbitCertificate] = []
    for cert in certificates:
        duplicate = None
        for k, other in enumerate(unique):
            if cert.canonical_cycle() != other.canonical_cycle():
                continue
            if any(p.side == q.side and p.lo <= q.hi and q.lo <= p.hi
                   for p in cert.points for q in other.points):
                duplicate = k
                break
        if duplicate is None:
            unique.append(cert)
            continue
        logger.debug("Pominięto powtórzoną orbitę %s", cert.node_cycle)
        if _is_exact(cert) and not _is_exact(unique[duplicate]):
            unique[duplicate] = cert
    return unique


def find_orbits(params: SystemParams, d: DecisionPoints, t_max: int = 64,
                precision: Fraction = DEFAULT_PRECISION,
                max_iterations: int = 10_000) -> List[OrbitCertificate]:
    """
    Wyznacza wszystkie orbity okresowe przy skończonym P.

    Punkty P dzielą pętlę brzegu na łuki; krok φ przeprowadza każdy łuk
    w inny łuk, co daje odwzorowanie indeksów h. Cykle rdzenia h
    odpowiadają orbitom; każdą orbitę otacza się iteracją złożenia gałęzi
    aż do szerokości `precision`.

    Args:
        params: Parametry znormalizowane.
        d: Punkty decyzyjne.
        t_max: Głębokość testu skończoności P.
        precision: Docelowa szerokość otoczek.
        max_iterations: Budżet iteracji otoczki.

    Returns:
        List[OrbitCertificate]: Zweryfikowane certyfikaty orbit.

    Raises:
        NotFiniteP: Jeśli skończoność P nie jest potwierdzona.
        AssertionTriggered: Jeśli znaleziono więcej niż cztery orbity.
    """
    escape = escape_certificate(params, d, t_max)
    if not escape.finite:
        raise NotFiniteP(f"Skończoność P nierozstrzygnięta do głębokości {t_max}")
    tree = preimage_tree(params, d, escape.t0 + 1)
    arcs = _partition(params, d, tree.points())
    certificates = []
    for cycle in _core_cycles(arcs):
        nodes = [arcs[k].node for k in cycle]
        lo, hi, side = _enclose_fixed_point(params, nodes, arcs[cycle[0]], precision,
                                            max_iterations)
        cert = certificate_from_enclosure(params, d, side, lo, hi, nodes)
        if not cert.verify(params, d) or cert.lipschitz >= 1:
            raise EngineError(f"Certyfikat orbity {cert.node_cycle} nie przeszedł weryfikacji")
        certificates.append(cert)

    for chain in tree.chains.values():
        if chain.termination is ChainEnd.CYCLE:
            cycle_points = ([chain.root] + chain.members)[chain.cycle_start:]
            certificates.append(exact_orbit(params, d, list(reversed(cycle_points))))

    certificates = _dedup(certificates)
    summary = geometry(params)
    for cert in certificates:
        if not all(summary.in_va(p.midpoint) for p in cert.points):
            logger.warning("Orbita %s wychodzi poza obszar VA", cert.node_cycle)
    if len(certificates) > MAX_ORBITS:
        raise AssertionTriggered(
            f"Znaleziono {len(certificates)} orbit okresowych (dopuszczalnie {MAX_ORBITS})")
    if len(certificates) == MAX_ORBITS:
        logger.warning("Znaleziono dokładnie cztery orbity dla rho=%s d=%s",
                       params.rho, d.xs)
    return certificates


def stability_classify(cert: OrbitCertificate, d: DecisionPoints) -> Stability:
    """
    Klasyfikuje stabilność orbity.

    Args:
        cert: Certyfikat orbity.
        d: Punkty decyzyjne.

    Returns:
        Stability: stable, gdy żaden punkt nie jest punktem decyzyjnym i
        kontrakcja < 1; dla orbit przez punkt decyzyjny unstable przy
        nieparzystym okresie, one_sided przy parzystym.
    """
    through_decision = any(p.lo == p.hi == d[p.side] for p in cert.points)
    if through_decision:
        return Stability.UNSTABLE if cert.period % 2 else Stability.ONE_SIDED
    if cert.contraction < 1:
        return Stability.STABLE
    return Stability.UNSTABLE


@dataclass(frozen=True)
class BasinAssignment:
    """
    Przypisanie punktu startowego do orbity.

    Attributes:
        start: Punkt startowy.
        orbit: Indeks orbity (None gdy brak zbieżności).
        steps: Liczba kroków do przechwycenia.
        branch: Polityka rozgałęzienia użyta dla startu.
    """
    start: BoundaryPoint
    orbit: Optional[int]
    steps: int
    branch: BranchPolicy = BranchPolicy.LOWER


@dataclass
class BasinReport:
    """Wynik próbkowania basenów."""
    assignments: List[BasinAssignment]

    @property
    def unassigned(self) -> List[BasinAssignment]:
        """Starty bez zbieżności."""
        return [a for a in self.assignments if a.orbit is None]

    def counts(self) -> Dict[Optional[int], int]:
        """Liczba startów przypisanych do każdej orbity."""
        result: Dict[Optional[int], int] = {}
        for assignment in self.assignments:
            result[assignment.orbit] = result.get(assignment.orbit, 0) + 1
        return result


def grid_starts(resolution: int) -> List[BoundaryPoint]:
    """Równomierna siatka `resolution` punktów rozłożona na trzy boki."""
    per_side = max(1, resolution // 3)
    return [BoundaryPoint(side, Fraction(2 * k + 1, 2 * per_side))
            for side in NODES for k in range(per_side)]


def _captured(point: BoundaryPoint, d: DecisionPoints, orbits: Sequence[OrbitCertificate],
              tolerance: Fraction) -> Optional[int]:
    nodes = switch_rule(d, point)
    for index, cert in enumerate(orbits):
        m = cert.period
        for k, orbit_point in enumerate(cert.points):
            if orbit_point.side != point.side:
                continue
            if abs(point.x - orbit_point.midpoint.x) > tolerance:
                continue
            if nodes == (cert.points[(k + 1) % m].side,):
                return index
    return None


def _assign(args) -> BasinAssignment:
    params, d, orbits, start, policy, tolerance, budget = args
    current = start
    for steps in range(budget + 1):
        index = _captured(current, d, orbits, tolerance)
        if index is not None:
            return BasinAssignment(start, index, steps, policy)
        outcome = step(params, d, current)
        if outcome.branched:
            choice = outcome.successors[0 if policy is BranchPolicy.LOWER else 1]
        else:
            choice = outcome.successors[0]
        current = BoundaryPoint(choice.side, round_fraction(Fraction(choice.x), BASIN_DENOMINATOR))
    return BasinAssignment(start, None, budget, policy)


def basin_sample(params: SystemParams, d: DecisionPoints, grid: int = 300,
                 orbits: Optional[Sequence[OrbitCertificate]] = None,
                 starts: Optional[Sequence[BoundaryPoint]] = None,
                 branch_policy: BranchPolicy = BranchPolicy.LOWER,
                 tolerance: Fraction = Fraction(1, 10 ** 12),
                 budget: int = 100_000, jobs: int = 1) -> BasinReport:
    """
    Przypisuje punkty startowe do orbit, do których zbiegają trajektorie.

    Trajektorie liczone są w trybie przybliżonym (zaokrąglenie do siatki
    2⁻¹²⁸), co jest bez znaczenia przy tolerancji przechwycenia 10⁻¹².

    Args:
        params: Parametry znormalizowane.
        d: Punkty decyzyjne.
        grid: Liczba punktów siatki (gdy nie podano `starts`).
        orbits: Certyfikaty orbit (domyślnie liczone przez find_orbits).
        starts: Jawne punkty startowe.
        branch_policy: Gałąź wybierana przy trafieniu w punkt decyzyjny.
        tolerance: Tolerancja przechwycenia.
        budget: Budżet kroków na start.
        jobs: Liczba procesów roboczych.

    Returns:
        BasinReport: Przypisania w kolejności startów.
    """
    if orbits is None:
        orbits = find_orbits(params, d)
    points = list(starts) if starts is not None else grid_starts(grid)
    policy = BranchPolicy(branch_policy)
    tasks = [(params, d, list(orbits), start, policy, tolerance, budget) for start in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            assignments = list(pool.map(_assign, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        assignments = [_assign(task) for task in tasks]
    report = BasinReport(assignments)
    for failed in report.unassigned:
        logger.warning("Brak zbieżności ze startu %s", failed.start)
    return report
