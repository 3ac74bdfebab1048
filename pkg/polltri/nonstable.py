"""
Konstrukcja punktów decyzyjnych z nieskończenie wieloma przeciwobrazami.

d₁ jest ciągiem czwórek q = 1001 i r = 0110 wyznaczonym przez schodki
przybliżające prostą y = αx + β; d₂ i d₃ są stałymi kodami
ostatecznie zerowymi. Moduł sprawdza rozszerzoną legalność, legalność
kolejnych ψ-obrazów d₁ i klasyfikuje przedziały między przeciwobrazami.
"""

import enum
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import mpmath

from .exceptions import EnclosureTooCoarse, InputError, Undecidable
from .orbits import IntervalSet
from .params import NODES, BoundaryPoint, SystemParams
from .rationals import format_rational, parse_rational, to_decimal
from .symbolic import (DEFAULT_DEPTH_CAP, BitCode, DecisionCodes, GeneratorBits, decode,
                       is_legitimate, iet_step, parse_code, symbolic_psi, unit_repr)

logger = logging.getLogger(__name__)

Q = (1, 0, 0, 1)
R = (0, 1, 1, 0)
D2_LITERAL = "2:10101(0)"
D3_LITERAL = "3:01(0)"

MAX_DPS = 4000
_SURD_RE = re.compile(
    r"^(?:(?P<a>[+-]?\d+(?:/\d+)?)(?P<sign>[+-]))?(?:(?P<b>\d+(?:/\d+)?)\*)?sqrt(?P<n>\d+)$")

_NAMED: Dict[str, Callable[[], mpmath.mpf]] = {
    "e-1": lambda: mpmath.e - 1,
    "pi/2": lambda: mpmath.pi / 2,
    "pi-2": lambda: mpmath.pi - 2,
    "ln3": lambda: mpmath.log(3),
    "zeta3": lambda: mpmath.zeta(3),
}


@lru_cache(maxsize=None)
def _named_enclosure(name: str, dps: int) -> Tuple[Fraction, Fraction]:
    with mpmath.workdps(dps + 10):
        center = Fraction(mpmath.nstr(_NAMED[name](), dps + 5))
    margin = Fraction(1, 10 ** dps)
    return center - margin, center + margin


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


@dataclass(frozen=True)
class Alpha:
    """
    Niewymierny parametr schodków α ∈ (1, 2).

    Niewymierność kwadratowa a + b√n porównywana jest dokładnie przez
    podnoszenie do kwadratu; stałe nazwane trzymane są jako otoczki mpmath
    zagęszczane na żądanie.

    Attributes:
        literal: Zapis z konfiguracji.
        a: Część wymierna niewymierności kwadratowej.
        b: Współczynnik przy √n.
        n: Liczba pod pierwiastkiem (0 dla stałych nazwanych).
        name: Nazwa stałej (pusta dla niewymierności kwadratowych).
    """
    literal: str
    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)
    n: int = 0
    name: str = ""

    @classmethod
    def parse(cls, text: str) -> "Alpha":
        """
        Parsuje literał: sqrt2, sqrt3, golden, a+b*sqrtN lub nazwa stałej.

        Raises:
            InputError: Dla literałów wymiernych, nieznanych lub spoza (1, 2).
        """
        literal = str(text).strip().replace(" ", "")
        if literal in _NAMED:
            alpha = cls(literal, name=literal)
        elif literal == "golden":
            alpha = cls(literal, Fraction(1, 2), Fraction(1, 2), 5)
        else:
            match = _SURD_RE.match(literal)
            if match is None:
                try:
                    value = parse_rational(literal)
                except InputError:
                    raise InputError(f"Nieznany literał α: {text!r}") from None
                raise InputError(f"α musi być niewymierne, podano {format_rational(value)}")
            a = parse_rational(match.group("a")) if match.group("a") else Fraction(0)
            b = parse_rational(match.group("b")) if match.group("b") else Fraction(1)
            if match.group("sign") == "-":
                b = -b
            n = int(match.group("n"))
            if math.isqrt(n) ** 2 == n:
                raise InputError(f"α = {literal} jest wymierne")
            alpha = cls(literal, a, b, n)
        if alpha.sign_of(Fraction(-1), Fraction(1)) <= 0 or \
                alpha.sign_of(Fraction(2), Fraction(-1)) <= 0:
            raise InputError(f"α = {literal} poza przedziałem (1, 2)")
        if alpha.name:
            lo, hi = _named_enclosure(alpha.name, 50)
            near = ((lo + hi) / 2).limit_denominator(1000)
            if lo <= near <= hi:
                raise InputError(f"α = {literal} nieodróżnialne od {format_rational(near)}")
        return alpha

    @property
    def is_surd(self) -> bool:
        """Czy α jest niewymiernością kwadratową."""
        return not self.name

    def sign_of(self, p: Fraction, q: Fraction) -> int:
        """
        Znak p + q·α.

        Args:
            p: Wyraz wolny.
            q: Współczynnik przy α.

        Returns:
            int: -1, 0 lub 1.

        Raises:
            EnclosureTooCoarse: Gdy otoczka stałej nie rozstrzyga znaku.
        """
        if self.is_surd:
            a = p + q * self.a
            b = q * self.b
            if b == 0:
                return _sign(a)
            if a >= 0 and b > 0:
                return 1
            if a <= 0 and b < 0:
                return -1
            square = a * a - b * b * self.n
            return _sign(square) if a > 0 else -_sign(square)
        if q == 0:
            return _sign(p)
        dps = 30
        while dps <= MAX_DPS:
            lo, hi = _named_enclosure(self.name, dps)
            ends = (p + q * lo, p + q * hi)
            if min(ends) > 0:
                return 1
            if max(ends) < 0:
                return -1
            dps *= 2
        raise EnclosureTooCoarse(f"Znak {p} + {q}·{self.literal} nierozstrzygnięty "
                                 f"przy {MAX_DPS} cyfrach")

    def decimal(self, digits: int = 20) -> str:
        """Przybliżenie dziesiętne."""
        if self.is_surd:
            with mpmath.workdps(digits + 10):
                value = (mpmath.mpf(self.a.numerator) / self.a.denominator
                         + mpmath.mpf(self.b.numerator) / self.b.denominator
                         * mpmath.sqrt(self.n))
                return mpmath.nstr(value, digits)
        lo, hi = _named_enclosure(self.name, digits + 5)
        return to_decimal((lo + hi) / 2, digits)

    def __str__(self) -> str:
        """Literał α."""
        return self.literal


class QuadrupleSequence:
    """
    Ciąg czwórek q, r generowany leniwie.

    Attributes:
        alpha: Parametr schodków (None dla ciągów okresowych).
        beta: Przesunięcie schodków.
        pattern: Wzorzec ciągu okresowego (None dla schodków).
    """

    def __init__(self, alpha: Optional[Alpha] = None, beta: Fraction = Fraction(0),
                 pattern: Optional[str] = None) -> None:
        self.alpha = alpha
        self.beta = beta
        self.pattern = pattern
        self._symbols: List[str] = []
        self._q = 0
        self._r = 0
        if pattern is None and alpha is None:
            raise InputError("Ciąg czwórek wymaga α albo wzorca")

    @classmethod
    def periodic(cls, pattern: str) -> "QuadrupleSequence":
        """Ciąg okresowy powtarzający wzorzec (np. "q")."""
        if not pattern or set(pattern) - {"q", "r"}:
            raise InputError(f"Wzorzec może zawierać tylko q i r: {pattern!r}")
        return cls(pattern=pattern)

    def _extend(self, count: int) -> None:
        while len(self._symbols) < count:
            t = len(self._symbols)
            if self.pattern is not None:
                symbol = self.pattern[t % len(self.pattern)]
            elif t == 0:
                symbol = "q"
            elif t == 1:
                symbol = "r"
            else:
                # q gdy 1 + Q_t < α(1 + R_t) + β
                lhs = Fraction(1 + self._q) - self.beta
                symbol = "q" if self.alpha.sign_of(-lhs, Fraction(1 + self._r)) > 0 else "r"
            self._symbols.append(symbol)
            if symbol == "q":
                self._q += 1
            else:
                self._r += 1

    def symbol(self, k: int) -> str:
        """Czwórka o indeksie k (od zera)."""
        self._extend(k + 1)
        return self._symbols[k]

    def head(self, n: int) -> str:
        """Pierwsze n czwórek jako napis."""
        self._extend(n)
        return "".join(self._symbols[:n])

    def bits(self) -> Iterator[int]:
        """Nieskończony strumień bitów kodu."""
        k = 0
        while True:
            yield from (Q if self.symbol(k) == "q" else R)
            k += 1

    def compare_tail(self, t: int, depth_cap: int = DEFAULT_DEPTH_CAP // 4) -> int:
        """
        Porównuje ogon y_{t+1}y_{t+2}… z całym ciągiem (q > r).

        Returns:
            int: -1, 0 lub 1.

        Raises:
            Undecidable: Gdy ogon i ciąg zgadzają się na `depth_cap` czwórkach.
        """
        horizon = len(self.pattern) if self.pattern is not None else depth_cap
        for k in range(horizon):
            a, b = self.symbol(t + k), self.symbol(k)
            if a != b:
                return 1 if a == "q" else -1
        if self.pattern is not None:
            return 0
        raise Undecidable(4 * depth_cap, f"ogon od t = {t + 1}")

    def first_violation(self, n: int) -> Optional[int]:
        """Pierwszy indeks (od 1) z trzema q z rzędu lub r bez następnego q."""
        word = self.head(n + 1)
        for t in range(n):
            if word[t:t + 3] == "qqq" or word[t:t + 2] == "rr":
                return t + 1
        return None


def staircase(alpha, beta=0, n: int = 2) -> QuadrupleSequence:
    """
    Ciąg schodkowy y(α, β) z n wyliczonymi czwórkami.

    y₁ = q, y₂ = r, dalej y_{t+1} = q gdy 1 + Q_t < α(1 + R_t) + β, r w
    przeciwnym razie; reguła stosowana jest od t = 2.

    Args:
        alpha: Alpha lub jego literał.
        beta: β ∈ [−1, 1].
        n: Liczba czwórek do wyliczenia (n ≥ 2).

    Returns:
        QuadrupleSequence: Ciąg (dalsze czwórki liczone leniwie).
    """
    if n < 2:
        raise InputError(f"Ciąg schodkowy wymaga n ≥ 2, podano {n}")
    alpha = alpha if isinstance(alpha, Alpha) else Alpha.parse(alpha)
    beta = parse_rational(beta)
    if not -1 <= beta <= 1:
        raise InputError(f"β = {beta} poza przedziałem [−1, 1]")
    sequence = QuadrupleSequence(alpha, beta)
    sequence.head(n)
    return sequence


def staircase_code(side: int, alpha, beta=0) -> BitCode:
    """Kod d na boku `side` zbudowany z ciągu schodkowego."""
    alpha = alpha if isinstance(alpha, Alpha) else Alpha.parse(alpha)
    beta = parse_rational(beta)
    label = f"staircase(alpha={alpha},beta={format_rational(beta)})"
    return BitCode(side, GeneratorBits.from_factory(
        lambda: staircase(alpha, beta).bits(), label))


@dataclass(frozen=True)
class LegitimacyReport:
    """
    Wynik sprawdzenia rozszerzonej legalności.

    Attributes:
        passed: Czy warunki (a) i (b) zachodzą dla t ≤ checked.
        checked: Sprawdzona długość.
        failure: Pierwsze t (od 1) z naruszeniem.
        condition: Naruszony warunek: "a" (po r) lub "b" (po q).
        aperiodic: Czy żaden ogon nie jest równy całemu ciągowi.
    """
    passed: bool
    checked: int
    failure: Optional[int] = None
    condition: Optional[str] = None
    aperiodic: bool = True


def extended_legitimacy_check(d1: QuadrupleSequence, n: int,
                              depth_cap: int = DEFAULT_DEPTH_CAP // 4) -> LegitimacyReport:
    """
    Sprawdza rozszerzoną legalność dla t = 3..n.

    (a) po y_t = r ogon y_{t+1}… jest większy od d₁;
    (b) po y_t = q ogon y_{t+1}… jest mniejszy od d₁.

    Args:
        d1: Ciąg czwórek.
        n: Długość sprawdzenia (n ≥ 3).
        depth_cap: Limit porównań ogonów (w czwórkach).

    Returns:
        LegitimacyReport: Wynik z pierwszym naruszeniem.
    """
    if n < 3:
        raise InputError(f"Sprawdzenie legalności wymaga n ≥ 3, podano {n}")
    aperiodic = all(d1.compare_tail(t, depth_cap) != 0 for t in (1, 2))
    for t in range(3, n + 1):
        order = d1.compare_tail(t, depth_cap)
        if order == 0:
            aperiodic = False
        if d1.symbol(t - 1) == "r" and order <= 0:
            return LegitimacyReport(False, t, t, "a", aperiodic)
        if d1.symbol(t - 1) == "q" and order >= 0:
            return LegitimacyReport(False, t, t, "b", aperiodic)
    return LegitimacyReport(True, n, aperiodic=aperiodic)


def build_nonstable(alpha="sqrt2", beta=0) -> DecisionCodes:
    """
    Punkty decyzyjne d₁ = 1:y(α, β), d₂ = 2:10101(0), d₃ = 3:01(0).

    Args:
        alpha: Alpha lub literał.
        beta: Przesunięcie schodków (domyślnie 0).

    Returns:
        DecisionCodes: Kody trzech punktów decyzyjnych.
    """
    return DecisionCodes((staircase_code(1, alpha, beta), parse_code(D2_LITERAL),
                          parse_code(D3_LITERAL)))


@dataclass(frozen=True)
class PreimageReport:
    """
    Wynik weryfikacji łańcucha ψ-obrazów.

    Attributes:
        passed: Czy wszystkie obrazy do głębokości były legalne.
        depth: Żądana głębokość.
        failure: Indeks t pierwszego nielegalnego ψ^(t).
    """
    passed: bool
    depth: int
    failure: Optional[int] = None


def verify_infinite_preimages(d: DecisionCodes, depth: int, side: int = 1,
                              depth_cap: int = DEFAULT_DEPTH_CAP) -> PreimageReport:
    """
    Sprawdza legalność ψ^(t)(d_side) dla t = 1..depth.

    ψ^(t) jest legalne, gdy ψ^(t−1) leży w przedziale legalności swojego boku.

    Raises:
        Undecidable: Gdy porównanie z końcem przedziału jest nierozstrzygnięte.
    """
    code = d[side]
    for t in range(1, depth + 1):
        if not is_legitimate(code, d, depth_cap):
            logger.info("ψ^(%d)(d%d) nielegalne", t, side)
            return PreimageReport(False, depth, t)
        code = symbolic_psi(code)
    return PreimageReport(True, depth)


def preimage_codes(d: DecisionCodes, side: int, depth: int,
                   depth_cap: int = DEFAULT_DEPTH_CAP) -> List[BitCode]:
    """Legalne ψ-obrazy d_side (bez samego d_side), najwyżej `depth`."""
    chain = []
    code = d[side]
    for _ in range(depth):
        if not is_legitimate(code, d, depth_cap):
            break
        code = symbolic_psi(code)
        chain.append(code)
    return chain


@dataclass(frozen=True)
class CornerChain:
    """Łańcuch przeciwobrazów d₂ lub d₃ kończący się w narożniku."""
    side: int
    members: Tuple[BitCode, ...]
    corner: Optional[int]

    @property
    def count(self) -> int:
        """Liczba przeciwobrazów."""
        return len(self.members)


def corner_chain(d: DecisionCodes, side: int, params: SystemParams,
                 limit: int = 64) -> CornerChain:
    """
    Skończony łańcuch przeciwobrazów d_side z narożnikiem, w którym się kończy.

    Returns:
        CornerChain: Przeciwobrazy i numer wierzchołka e_k ostatniego z nich.
    """
    members = preimage_codes(d, side, limit)
    corner = None
    if members:
        point = decode(members[-1], params)
        corner = BoundaryPoint(members[-1].side, point.lo).corner_node if point.exact else None
    return CornerChain(side, tuple(members), corner)


class IntervalKind(str, enum.Enum):
    """Typ przedziału między przeciwobrazami."""
    PERIODIC = "periodic"
    SEMI_PERIODIC = "semi_periodic"
    APERIODIC = "aperiodic"


@dataclass(frozen=True)
class ClassifiedArc:
    """Łuk pętli brzegu między kolejnymi punktami z typem."""
    start: Fraction
    end: Fraction
    kind: IntervalKind

    @property
    def length(self) -> Fraction:
        """Długość łuku."""
        return self.end - self.start

    def pieces(self) -> List[Tuple[int, Fraction, Fraction]]:
        """Łuk rozcięty na kawałki boków."""
        result = []
        lo = self.start
        while lo < self.end:
            base = Fraction(int(lo))
            hi = min(self.end, base + 1)
            result.append((int(lo) % 3 + 1, lo - base, hi - base))
            lo = hi
        return result


@dataclass
class IntervalClassification:
    """
    Klasyfikacja przedziałów przy zadanej głębokości przeciwobrazów d₁.

    Attributes:
        depth: Głębokość łańcucha d₁.
        arcs: Łuki z typami w kolejności na pętli.
        delta: Długość najkrótszego przedziału periodycznego lub półperiodycznego.
    """
    depth: int
    arcs: List[ClassifiedArc] = field(default_factory=list)
    delta: Optional[Fraction] = None

    def _set(self, kind: IntervalKind) -> IntervalSet:
        return IntervalSet.from_pieces([p for arc in self.arcs if arc.kind is kind
                                        for p in arc.pieces()])

    @property
    def periodic(self) -> IntervalSet:
        """Przedziały periodyczne."""
        return self._set(IntervalKind.PERIODIC)

    @property
    def semi_periodic(self) -> IntervalSet:
        """Przedziały półperiodyczne."""
        return self._set(IntervalKind.SEMI_PERIODIC)

    @property
    def aperiodic(self) -> IntervalSet:
        """Przedziały aperiodyczne (przybliżenie z góry)."""
        return self._set(IntervalKind.APERIODIC)

    def counts(self) -> Dict[str, int]:
        """Liczba łuków każdego typu."""
        result = {kind.value: 0 for kind in IntervalKind}
        for arc in self.arcs:
            result[arc.kind.value] += 1
        return result

    def to_dict(self) -> Dict[str, object]:
        """Raport klasyfikacji."""
        return {
            "depth": self.depth,
            "counts": self.counts(),
            "delta": to_decimal(self.delta, 12) if self.delta is not None else None,
        }


def classify_intervals(params: SystemParams, d: DecisionCodes, depth: int,
                       depth_cap: int = DEFAULT_DEPTH_CAP) -> IntervalClassification:
    """
    Klasyfikuje łuki między przeciwobrazami punktów decyzyjnych.

    Oba końce z rodziny d₂/d₃: periodyczny; jeden z rodziny d₁: półperiodyczny;
    oba z rodziny d₁: aperiodyczny.

    Args:
        params: Parametry z pustymi narożnikami J.
        d: Kody punktów decyzyjnych (d₂, d₃ o skończonych łańcuchach).
        depth: Głębokość łańcucha przeciwobrazów d₁.
        depth_cap: Limit porównań kodów.

    Returns:
        IntervalClassification: Łuki z typami i Δ.
    """
    for side in (2, 3):
        report = verify_infinite_preimages(d, 64, side, depth_cap)
        if report.passed:
            raise InputError(f"Łańcuch przeciwobrazów d{side} nie jest skończony")
    marked: Dict[Fraction, bool] = {}
    for side in NODES:
        codes = [d[side]] + preimage_codes(d, side, depth if side == 1 else 64, depth_cap)
        for code in codes:
            u = decode(code, params).midpoint.circle_position
            # punkt wspólny obu rodzin traktowany jak d₂/d₃
            marked[u] = marked.get(u, False) or side != 1
    positions = sorted(marked)
    classification = IntervalClassification(depth)
    for k, start in enumerate(positions):
        end = positions[k + 1] if k + 1 < len(positions) else positions[0] + 3
        periodic_ends = marked[start] + marked[positions[(k + 1) % len(positions)]]
        kind = (IntervalKind.PERIODIC, IntervalKind.SEMI_PERIODIC,
                IntervalKind.APERIODIC)[2 - periodic_ends]
        classification.arcs.append(ClassifiedArc(start, end, kind))
    lengths = [arc.length for arc in classification.arcs if arc.kind is not IntervalKind.APERIODIC]
    classification.delta = min(lengths) if lengths else None
    logger.info("Klasyfikacja przy głębokości %d: %s", depth, classification.counts())
    return classification


@dataclass(frozen=True)
class IetChainReport:
    """Porównanie przekształcenia odcinka z łańcuchem ψ czytanym wstecz."""
    depth: int
    points: Tuple[Fraction, ...]
    max_deviation: Fraction
    agrees: bool


def iet_chain(d: DecisionCodes, depth: int, nbits: int = 96) -> IetChainReport:
    """
    Uruchamia przekształcenie odcinka z punktu ψ^(depth)(d₁) i porównuje
    kolejne obrazy z ψ^(t−1)(d₁).

    Args:
        d: Kody punktów decyzyjnych.
        depth: Długość łańcucha.
        nbits: Liczba bitów reprezentacji jednostkowej.

    Returns:
        IetChainReport: Punkty trajektorii i największe odchylenie.
    """
    chain = [d[1]] + preimage_codes(d, 1, depth)
    if len(chain) <= depth:
        raise InputError(f"Łańcuch d1 ma tylko {len(chain) - 1} legalnych przeciwobrazów")
    d_tilde = [unit_repr(d[side], nbits) for side in NODES]
    tolerance = Fraction(1, 2 ** (nbits - 2))
    u = unit_repr(chain[depth], nbits)
    points = [u]
    deviation = Fraction(0)
    for t in range(depth, 0, -1):
        expected = unit_repr(chain[t - 1], nbits)
        images = iet_step(u, d_tilde)
        u = min(images, key=lambda v: abs(v - expected))
        deviation = max(deviation, abs(u - expected))
        points.append(u)
    return IetChainReport(depth, tuple(points), deviation, deviation <= tolerance)
