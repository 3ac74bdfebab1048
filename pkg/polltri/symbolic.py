"""
Dynamika symboliczna procesu trójkątnego.

Punkty brzegu kodowane są ciągami bitów: bit 1 punktu z na boku î
mówi, czy z leży od obrazu narożnika f_î(e_î) w górę. W tym kodowaniu
ψ to przesunięcie z dopełnieniem, a φ dopisuje bit gałęzi przed
dopełnieniem kodu.

Kod ma jeden z trzech nośników: skończone słowo, słowo ostatecznie
okresowe albo strumień z generatora (np. schodki Sturmowskie).
"""

import logging
import math
import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

from .dynamics import corner_image, forward_map, pre_image
from .exceptions import (DifferentSides, EnclosureTooCoarse, InputError, RegionUnsupported,
                         Undecidable)
from .params import NODES, BoundaryPoint, DecisionPoints, SystemParams, geometry, next_node
from .rationals import format_rational, to_decimal

logger = logging.getLogger(__name__)

DEFAULT_DEPTH_CAP = 2 ** 16
DEFAULT_PRECISION = Fraction(1, 10 ** 30)

_CODE_RE = re.compile(r"^\s*([123])\s*:\s*(.+?)\s*$")
_BITS_RE = re.compile(r"^([01]*)(?:\(([01]+)\))?$")
_STAIRCASE_RE = re.compile(r"^staircase\((.*)\)$")


def _check_bits(bits: Sequence[int]) -> Tuple[int, ...]:
    result = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in result):
        raise InputError(f"Kod może zawierać tylko bity 0 i 1: {bits}")
    return result


def _word_value(word: Sequence[int]) -> Fraction:
    if not word:
        return Fraction(0)
    return Fraction(int("".join(map(str, word)), 2), 2 ** len(word))


@dataclass(frozen=True)
class FiniteBits:
    """
    Skończone słowo bitowe.

    Przy porównaniach i wartościach słowo jest dopełniane zerami.
    """
    word: Tuple[int, ...]

    def __post_init__(self) -> None:
        """Walidacja bitów."""
        object.__setattr__(self, "word", _check_bits(self.word))

    def bit(self, k: int) -> int:
        """Bit o indeksie k (od zera)."""
        return self.word[k] if k < len(self.word) else 0

    def shift(self, n: int = 1) -> "FiniteBits":
        """Usuwa n pierwszych bitów."""
        return FiniteBits(self.word[n:])

    def complement(self) -> "PeriodicBits":
        """Dopełnienie słowa razem z ogonem: ogon zerowy przechodzi w jedynki."""
        return PeriodicBits(tuple(1 - b for b in self.word), (1,))

    def prepend(self, b: int) -> "FiniteBits":
        """Dopisuje bit na początku."""
        return FiniteBits((b,) + self.word)

    def as_periodic(self) -> "PeriodicBits":
        """Słowo z ogonem zerowym: word(0)."""
        return PeriodicBits(self.word, (0,))

    def value(self) -> Fraction:
        """Σ b_k 2^-(k+1)."""
        return _word_value(self.word)

    def literal(self) -> str:
        """Zapis słowa."""
        return "".join(map(str, self.word))

    def __len__(self) -> int:
        """Długość słowa."""
        return len(self.word)


@dataclass(frozen=True)
class PeriodicBits:
    """
    Słowo ostatecznie okresowe prefix(period)^∞ w postaci kanonicznej.

    Okres jest pierwotny, a prefiks najkrótszy możliwy.
    """
    prefix: Tuple[int, ...]
    period: Tuple[int, ...]

    def __post_init__(self) -> None:
        """Walidacja i kanonizacja."""
        prefix = _check_bits(self.prefix)
        period = _check_bits(self.period)
        if not period:
            raise InputError("Okres kodu nie może być pusty")
        n = len(period)
        for p in range(1, n + 1):
            if n % p == 0 and period == period[:p] * (n // p):
                period = period[:p]
                break
        while prefix and prefix[-1] == period[-1]:
            prefix = prefix[:-1]
            period = (period[-1],) + period[:-1]
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "period", period)

    def bit(self, k: int) -> int:
        """Bit o indeksie k (od zera)."""
        if k < len(self.prefix):
            return self.prefix[k]
        return self.period[(k - len(self.prefix)) % len(self.period)]

    def shift(self, n: int = 1) -> "PeriodicBits":
        """Usuwa n pierwszych bitów."""
        if n <= len(self.prefix):
            return PeriodicBits(self.prefix[n:], self.period)
        r = (n - len(self.prefix)) % len(self.period)
        return PeriodicBits((), self.period[r:] + self.period[:r])

    def complement(self) -> "PeriodicBits":
        """Dopełnienie wszystkich bitów."""
        return PeriodicBits(tuple(1 - b for b in self.prefix), tuple(1 - b for b in self.period))

    def prepend(self, b: int) -> "PeriodicBits":
        """Dopisuje bit na początku."""
        return PeriodicBits((b,) + self.prefix, self.period)

    def as_periodic(self) -> "PeriodicBits":
        """Identyczność."""
        return self

    @property
    def constant_tail(self) -> Optional[int]:
        """Wartość stałego ogona lub None."""
        return self.period[0] if len(self.period) == 1 else None

    def value(self) -> Fraction:
        """Dokładna wartość Σ b_k 2^-(k+1)."""
        p = len(self.period)
        tail = Fraction(int("".join(map(str, self.period)), 2), 2 ** p - 1)
        return _word_value(self.prefix) + tail / 2 ** len(self.prefix)

    def literal(self) -> str:
        """Zapis prefix(period)."""
        return "".join(map(str, self.prefix)) + "(" + "".join(map(str, self.period)) + ")"


class BitSource:
    """
    Współdzielony, dopisywany tylko na końcu bufor bitów z generatora.

    Widoki GeneratorBits czytają go bez własnego kursora, więc można je
    kopiować i używać z wielu wątków.
    """

    def __init__(self, factory: Callable[[], Iterator[int]], label: str = "") -> None:
        self._factory = factory
        self._iterator: Optional[Iterator[int]] = None
        self._cache: List[int] = []
        self._lock = threading.Lock()
        self.label = label

    def get(self, k: int) -> int:
        """Bit o indeksie k, generowany w razie potrzeby."""
        if k < len(self._cache):
            return self._cache[k]
        with self._lock:
            if self._iterator is None:
                self._iterator = self._factory()
            while len(self._cache) <= k:
                try:
                    self._cache.append(next(self._iterator))
                except StopIteration:
                    raise InputError(f"Źródło bitów '{self.label}' wyczerpane po "
                                     f"{len(self._cache)} bitach") from None
        return self._cache[k]

    def __len__(self) -> int:
        """Liczba już wygenerowanych bitów."""
        return len(self._cache)


@dataclass(frozen=True, eq=False)
class GeneratorBits:
    """
    Widok na strumień z generatora: prefiks, przesunięcie i flaga dopełnienia.

    Attributes:
        prefix: Bity dopisane przed strumieniem.
        source: Wspólne źródło bitów.
        offset: Liczba pominiętych bitów źródła.
        flipped: Czy bity źródła są dopełnione.
    """
    prefix: Tuple[int, ...]
    source: BitSource
    offset: int = 0
    flipped: bool = False

    @classmethod
    def from_factory(cls, factory: Callable[[], Iterator[int]],
                     label: str = "") -> "GeneratorBits":
        """Nowy strumień z funkcji tworzącej iterator bitów."""
        return cls((), BitSource(factory, label))

    def bit(self, k: int) -> int:
        """Bit o indeksie k (od zera)."""
        if k < len(self.prefix):
            return self.prefix[k]
        return self.source.get(self.offset + k - len(self.prefix)) ^ int(self.flipped)

    def shift(self, n: int = 1) -> "GeneratorBits":
        """Usuwa n pierwszych bitów."""
        if n <= len(self.prefix):
            return GeneratorBits(self.prefix[n:], self.source, self.offset, self.flipped)
        return GeneratorBits((), self.source, self.offset + n - len(self.prefix), self.flipped)

    def complement(self) -> "GeneratorBits":
        """Dopełnienie wszystkich bitów."""
        return GeneratorBits(tuple(1 - b for b in self.prefix), self.source, self.offset,
                             not self.flipped)

    def prepend(self, b: int) -> "GeneratorBits":
        """Dopisuje bit na początku."""
        return GeneratorBits((b,) + self.prefix, self.source, self.offset, self.flipped)

    def value(self, nbits: int = 64) -> Fraction:
        """Wartość obcięta do nbits bitów (ograniczenie dolne)."""
        return _word_value([self.bit(k) for k in range(nbits)])

    def literal(self) -> str:
        """Etykieta źródła albo pierwsze bity z wielokropkiem."""
        if not self.prefix and self.offset == 0 and not self.flipped and self.source.label:
            return self.source.label
        return "".join(str(self.bit(k)) for k in range(24)) + "..."


Bits = Union[FiniteBits, PeriodicBits, GeneratorBits]


@dataclass(frozen=True)
class BitCode:
    """
    Kod binarny punktu brzegu.

    Attributes:
        side: Bok (1, 2, 3).
        bits: Nośnik bitów.
    """
    side: int
    bits: Bits

    def __post_init__(self) -> None:
        """Walidacja boku."""
        if self.side not in NODES:
            raise InputError(f"Nieprawidłowy bok kodu: {self.side}")

    def bit(self, k: int) -> int:
        """Bit o indeksie k (od zera)."""
        return self.bits.bit(k)

    def head(self, n: int) -> str:
        """Pierwsze n bitów jako napis."""
        return "".join(str(self.bits.bit(k)) for k in range(n))

    @property
    def is_generator(self) -> bool:
        """Czy kod pochodzi z generatora."""
        return isinstance(self.bits, GeneratorBits)

    def __str__(self) -> str:
        """Zapis literału kodu."""
        return format_code(self)


def _exact_horizon(a: Bits, b: Bits) -> Optional[int]:
    if isinstance(a, GeneratorBits) or isinstance(b, GeneratorBits):
        return None
    pa, pb = a.as_periodic(), b.as_periodic()
    lcm = len(pa.period) * len(pb.period) // math.gcd(len(pa.period), len(pb.period))
    return max(len(pa.prefix), len(pb.prefix)) + lcm


def compare_bits(a: Bits, b: Bits, depth_cap: int = DEFAULT_DEPTH_CAP) -> int:
    """
    Porównanie leksykograficzne dwóch strumieni bitów.

    Dla nośników okresowych i skończonych wynik jest dokładny; strumienie
    z generatora porównywane są leniwie do głębokości `depth_cap`.

    Returns:
        int: -1, 0 lub 1.

    Raises:
        Undecidable: Gdy strumienie zgadzają się na `depth_cap` bitach.
    """
    horizon = _exact_horizon(a, b)
    limit = horizon if horizon is not None else depth_cap
    for k in range(limit):
        x, y = a.bit(k), b.bit(k)
        if x != y:
            return -1 if x < y else 1
    if horizon is not None:
        return 0
    raise Undecidable(depth_cap, "strumień z generatora")


def compare_codes(c1: BitCode, c2: BitCode, depth_cap: int = DEFAULT_DEPTH_CAP) -> int:
    """
    Porównanie leksykograficzne kodów na jednym boku.

    Raises:
        DifferentSides: Gdy kody leżą na różnych bokach.
    """
    if c1.side != c2.side:
        raise DifferentSides(f"Kody na różnych bokach: {c1.side} i {c2.side}")
    return compare_bits(c1.bits, c2.bits, depth_cap)


@dataclass(frozen=True)
class DecisionCodes:
    """
    Punkty decyzyjne zadane kodami.

    Attributes:
        codes: Kody (d₁, d₂, d₃); kod dᵢ leży na boku i.
    """
    codes: Tuple[BitCode, BitCode, BitCode]

    def __post_init__(self) -> None:
        """Walidacja boków."""
        if len(self.codes) != 3:
            raise InputError("Oczekiwano trzech kodów punktów decyzyjnych")
        for side, code in zip(NODES, self.codes):
            if code.side != side:
                raise InputError(f"Kod d{side} leży na boku {code.side}")

    def __getitem__(self, side: int) -> BitCode:
        """Kod punktu decyzyjnego boku."""
        return self.codes[side - 1]

    @classmethod
    def from_literals(cls, literals: Sequence[str]) -> "DecisionCodes":
        """Kody z literałów konfiguracji."""
        return cls(tuple(parse_code(text) for text in literals))  # type: ignore[arg-type]

    def to_list(self) -> List[str]:
        """Literały kodów."""
        return [format_code(c) for c in self.codes]


def symbolic_psi(c: BitCode) -> BitCode:
    """
    Symboliczne ψ: î:0x → k̂:x̄, î:1x → ĵ:x̄.

    Args:
        c: Kod z co najmniej jednym bitem.

    Returns:
        BitCode: Kod przeciwobrazu.
    """
    if isinstance(c.bits, FiniteBits) and not len(c.bits):
        raise InputError("Pusty kod nie ma przeciwobrazu")
    first = c.bit(0)
    side = next_node(c.side, 1 if first else 2)
    return BitCode(side, c.bits.shift(1).complement())


def psi_iterate(c: BitCode, n: int) -> BitCode:
    """n-krotne złożenie symbolic_psi."""
    for _ in range(n):
        c = symbolic_psi(c)
    return c


def symbolic_phi(c: BitCode, d: DecisionCodes,
                 depth_cap: int = DEFAULT_DEPTH_CAP) -> Tuple[BitCode, ...]:
    """
    Symboliczne φ: î:x → ĵ:0x̄ dla x ≤ d_î oraz î:x → k̂:1x̄ dla x ≥ d_î.

    Args:
        c: Kod punktu.
        d: Kody punktów decyzyjnych.
        depth_cap: Limit głębokości porównania.

    Returns:
        tuple: Jeden obraz albo dwa przy x = d_î (najpierw gałąź ĵ).
    """
    order = compare_codes(c, d[c.side], depth_cap)
    rest = c.bits.complement()
    images = []
    if order <= 0:
        images.append(BitCode(next_node(c.side, 1), rest.prepend(0)))
    if order >= 0:
        images.append(BitCode(next_node(c.side, 2), rest.prepend(1)))
    return tuple(images)


def unit_repr(c: BitCode, nbits: int = 64) -> Fraction:
    """
    Położenie kodu na odcinku jednostkowym: u = (side−1)/3 + (1/3)Σ 2^-j x_j.

    Dokładne dla kodów skończonych i okresowych; dla strumieni z generatora
    obcięte do `nbits` bitów.
    """
    if isinstance(c.bits, GeneratorBits):
        value = c.bits.value(nbits)
    else:
        value = c.bits.value()
    return (Fraction(c.side - 1) + value) / 3


def iet_step(u: Fraction, d_tilde: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    """
    Dwuspadkowe przekształcenie odcinka o nachyleniu −1/2.

    Na [d̃₁, d̃₂) ∪ [d̃₃, 1): u ↦ −u/2 + 1; na [0, d̃₁) ∪ [d̃₂, d̃₃): u ↦ −u/2 + 1/2.
    W punkcie d̃ᵢ zwracane są oba obrazy, w kolejności zgodnej z symbolic_phi.

    Args:
        u: Punkt z [0, 1).
        d_tilde: Obrazy jednostkowe punktów decyzyjnych (po jednym na trzecię).

    Returns:
        tuple: Jeden lub dwa obrazy.
    """
    if not 0 <= u < 1:
        raise InputError(f"Punkt odcinka jednostkowego poza [0, 1): {u}")
    d1, d2, d3 = (Fraction(v) for v in d_tilde)
    low, high = -u / 2 + Fraction(1, 2), -u / 2 + 1
    side = int(3 * u) + 1
    threshold = (d1, d2, d3)[side - 1]
    # na boku 2 gałąź ĵ to −u/2 + 1
    below, above = (high, low) if side == 2 else (low, high)
    if u < threshold:
        return (below,)
    if u > threshold:
        return (above,)
    return (below, above)


def b_distance(c1: BitCode, c2: BitCode, nbits: int = 64) -> Fraction:
    """
    Odległość Σ|x_t − x'_t| 2^-t między kodami na jednym boku.

    Dokładna dla kodów skończonych i okresowych (ogon XOR jest okresowy).

    Raises:
        DifferentSides: Gdy kody leżą na różnych bokach.
    """
    if c1.side != c2.side:
        raise DifferentSides(f"Odległość b wymaga kodów na jednym boku: {c1.side} i {c2.side}")
    horizon = _exact_horizon(c1.bits, c2.bits)
    if horizon is None:
        return _word_value([c1.bit(k) ^ c2.bit(k) for k in range(nbits)])
    a, b = c1.bits.as_periodic(), c2.bits.as_periodic()
    start = max(len(a.prefix), len(b.prefix))
    xor = [a.bit(k) ^ b.bit(k) for k in range(horizon)]
    return PeriodicBits(tuple(xor[:start]), tuple(xor[start:])).value()


@dataclass(frozen=True)
class Enclosure:
    """
    Wymierna otoczka punktu na boku.

    Attributes:
        side: Bok.
        lo: Dolny koniec.
        hi: Górny koniec.
    """
    side: int
    lo: Fraction
    hi: Fraction

    @property
    def midpoint(self) -> BoundaryPoint:
        """Środek otoczki."""
        return BoundaryPoint(self.side, (self.lo + self.hi) / 2)

    @property
    def width(self) -> Fraction:
        """Szerokość otoczki."""
        return self.hi - self.lo

    @property
    def exact(self) -> bool:
        """Czy otoczka jest punktem."""
        return self.lo == self.hi

    def contains(self, x: Fraction) -> bool:
        """Czy x leży w otoczce."""
        return self.lo <= x <= self.hi

    def to_dict(self):
        """Zapis otoczki."""
        return {"side": self.side, "decimal": to_decimal(self.midpoint.x, 32),
                "lo": format_rational(self.lo), "hi": format_rational(self.hi)}


def _require_encoding(params: SystemParams) -> None:
    if not geometry(params).all_j_empty:
        raise RegionUnsupported("Kodowanie binarne wymaga pustych narożników J")


def _side_sequence(c: BitCode, n: int) -> List[int]:
    # bok ψ^(t+1) wynika z pierwszego bitu ψ^t, czyli b_t XOR (t mod 2)
    sides = [c.side]
    for t in range(n):
        lead = c.bit(t) ^ (t % 2)
        sides.append(next_node(sides[-1], 1 if lead else 2))
    return sides


def _compose(params: SystemParams, sides: Sequence[int], w: BoundaryPoint) -> BoundaryPoint:
    for node in reversed(sides):
        w = forward_map(params, node, w)
    return w


def decode(c: BitCode, params: SystemParams, precision: Fraction = DEFAULT_PRECISION,
           depth_cap: int = DEFAULT_DEPTH_CAP) -> Enclosure:
    """
    Punkt brzegu o zadanym kodzie.

    Punkt to granica złożeń f_{s₀}∘…∘f_{s_{n−1}}(w), gdzie s_t to boki
    kolejnych ψ-obrazów kodu. Otoczka powstaje z w na obu końcach boku s_n.
    Kody ze stałym ogonem dekodowane są dokładnie przez narożnik.

    Args:
        c: Kod punktu.
        params: Parametry systemu.
        precision: Docelowa szerokość otoczki.
        depth_cap: Maksymalna liczba użytych bitów.

    Returns:
        Enclosure: Otoczka punktu na boku c.side.

    Raises:
        RegionUnsupported: Gdy któryś narożnik J jest niepusty.
        EnclosureTooCoarse: Gdy nie osiągnięto precyzji w limicie bitów.
    """
    _require_encoding(params)
    tail = None
    if isinstance(c.bits, (FiniteBits, PeriodicBits)):
        periodic = c.bits.as_periodic()
        tail = periodic.constant_tail
    if tail is not None:
        n = len(periodic.prefix)
        sides = _side_sequence(c, n)
        corner = BoundaryPoint(sides[n], Fraction(tail ^ (n % 2)))
        point = _compose(params, sides[:n], corner)
        return Enclosure(c.side, Fraction(point.x), Fraction(point.x))

    n = 16
    while n <= depth_cap:
        sides = _side_sequence(c, n)
        a = _compose(params, sides[:n], BoundaryPoint(sides[n], Fraction(0))).x
        b = _compose(params, sides[:n], BoundaryPoint(sides[n], Fraction(1))).x
        lo, hi = min(a, b), max(a, b)
        if hi - lo <= precision:
            return Enclosure(c.side, lo, hi)
        n *= 2
    raise EnclosureTooCoarse(f"Dekodowanie {format_code(c)} nie osiągnęło precyzji "
                             f"{precision} na {depth_cap} bitach")


def encode(z: BoundaryPoint, params: SystemParams, nbits: int) -> BitCode:
    """
    Pierwsze nbits bitów kodu punktu.

    Bit wiodący ψ^t(z) to [x ≥ f(e)] na jego boku; bit kodu to bit wiodący
    XOR (t mod 2).

    Args:
        z: Punkt brzegu.
        params: Parametry znormalizowane.
        nbits: Liczba bitów.

    Returns:
        BitCode: Kod skończony długości nbits.
    """
    _require_encoding(params)
    bits = []
    current = z
    for t in range(nbits):
        lead = 1 if current.x >= corner_image(params, current.side) else 0
        bits.append(lead ^ (t % 2))
        current = pre_image(params, current)
    return BitCode(z.side, FiniteBits(tuple(bits)))


def legitimacy_interval(d: DecisionCodes, side: int) -> Tuple[BitCode, BitCode]:
    """
    Kody na boku `side` mające legalny przeciwobraz: [0 d̄_{side+2}, 1 d̄_{side+1}].

    Returns:
        tuple: (dolny, górny) koniec przedziału.
    """
    low = d[next_node(side, 2)].bits.complement().prepend(0)
    high = d[next_node(side, 1)].bits.complement().prepend(1)
    return BitCode(side, low), BitCode(side, high)


def is_legitimate(c: BitCode, d: DecisionCodes, depth_cap: int = DEFAULT_DEPTH_CAP) -> bool:
    """Czy kod leży w przedziale legalności swojego boku."""
    low, high = legitimacy_interval(d, c.side)
    return compare_codes(low, c, depth_cap) <= 0 and compare_codes(c, high, depth_cap) <= 0


def decision_points_from_codes(d: DecisionCodes, params: SystemParams,
                               precision: Fraction = DEFAULT_PRECISION) -> DecisionPoints:
    """
    Liczbowe punkty decyzyjne z kodów (środki otoczek dekodowania).

    Returns:
        DecisionPoints: Punkty decyzyjne.
    """
    values = []
    for side in NODES:
        enclosure = decode(d[side], params, precision)
        values.append(enclosure.midpoint.x)
        logger.debug("d%d = %s (szerokość %s)", side, to_decimal(enclosure.midpoint.x, 20),
                     enclosure.width)
    return DecisionPoints(tuple(values))  # type: ignore[arg-type]


def parse_code(text: str) -> BitCode:
    """
    Literał kodu: "2:10101(0)", "1:(10)", "3:0110" lub
    "1:staircase(alpha=sqrt2,beta=0)".

    Raises:
        InputError: Przy błędnej składni.
    """
    match = _CODE_RE.match(text)
    if not match:
        raise InputError(f"Nieprawidłowy literał kodu: {text!r}")
    side, body = int(match.group(1)), match.group(2).replace(" ", "")
    staircase_match = _STAIRCASE_RE.match(body)
    if staircase_match:
        from .nonstable import staircase_code

        options = {}
        for part in filter(None, staircase_match.group(1).split(",")):
            key, _, value = part.partition("=")
            if key not in ("alpha", "beta") or not value:
                raise InputError(f"Nieznana opcja schodków: {part!r}")
            options[key] = value
        return staircase_code(side, options.get("alpha", "sqrt2"), options.get("beta", "0"))
    bits_match = _BITS_RE.match(body)
    if not bits_match or not body:
        raise InputError(f"Nieprawidłowe bity kodu: {body!r}")
    prefix = tuple(int(b) for b in bits_match.group(1))
    if bits_match.group(2) is None:
        return BitCode(side, FiniteBits(prefix))
    return BitCode(side, PeriodicBits(prefix, tuple(int(b) for b in bits_match.group(2))))


def format_code(c: BitCode) -> str:
    """Literał kodu (dla strumieni z generatora etykieta lub prefiks)."""
    return f"{c.side}:{c.bits.literal()}"
