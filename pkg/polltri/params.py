"""
Parametry systemu obsługi cyklicznej z trzema kolejkami.

Walidacja parametrów, izomorfizm przeważenia (normalizacja μ ≡ 1) oraz
statyczna geometria rzutowanego systemu: ogniska, obszar ⱽA, narożniki J
i stałe kontrakcji.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .exceptions import InputError, LoadTooHigh, SystemRecurrent
from .rationals import Number, format_rational, parse_rational, sqrt_bounds

logger = logging.getLogger(__name__)

NODES: Tuple[int, int, int] = (1, 2, 3)

Vector = Tuple[Fraction, Fraction, Fraction]
Coordinate = Union[Fraction, float]


def next_node(node: int, shift: int = 1) -> int:
    """Węzeł przesunięty cyklicznie o `shift` (1 → 2 → 3 → 1)."""
    return (node - 1 + shift) % 3 + 1


def _triple(values: Sequence[Number], name: str) -> Tuple[Fraction, Fraction, Fraction]:
    if len(values) != 3:
        raise InputError(f"{name}: oczekiwano trzech wartości, otrzymano {len(values)}")
    return tuple(parse_rational(v) for v in values)  # type: ignore[return-value]


@dataclass(frozen=True)
class SystemParams:
    """
    Parametry systemu: intensywności napływu i obsługi.

    Attributes:
        lam: Intensywności napływu λᵢ.
        mu: Intensywności obsługi μᵢ.
        service_variance: Wariancje czasów obsługi σᵢ².
    """
    lam: Vector
    mu: Vector
    service_variance: Vector = (Fraction(1), Fraction(1), Fraction(1))

    def __post_init__(self) -> None:
        """Walidacja struktury parametrów."""
        for name, values in (("lambda", self.lam), ("mu", self.mu),
                             ("sigma2", self.service_variance)):
            if len(values) != 3:
                raise InputError(f"{name}: oczekiwano trzech wartości")
        if any(v < 0 for v in self.lam):
            raise InputError(f"Intensywności napływu nie mogą być ujemne: {self.lam}")
        if any(v <= 0 for v in self.mu):
            raise InputError(f"Intensywności obsługi muszą być dodatnie: {self.mu}")
        if any(v < 0 for v in self.service_variance):
            raise InputError(f"Wariancje nie mogą być ujemne: {self.service_variance}")

    @property
    def rho(self) -> Vector:
        """Obciążenia ρᵢ = λᵢ/μᵢ."""
        return tuple(l / m for l, m in zip(self.lam, self.mu))  # type: ignore[return-value]

    @property
    def theta(self) -> Vector:
        """Stałe dryfu θⱼ = μⱼ⁻¹Σλᵢ − 1."""
        total = sum(self.lam)
        return tuple(total / m - 1 for m in self.mu)  # type: ignore[return-value]

    @property
    def total_load(self) -> Fraction:
        """Łączne obciążenie Σρᵢ."""
        return sum(self.rho, Fraction(0))

    @property
    def drift_constant(self) -> Fraction:
        """θ = Σρ − 1 systemu znormalizowanego."""
        return self.total_load - 1

    @property
    def is_normalized(self) -> bool:
        """Czy μᵢ = 1 dla wszystkich węzłów."""
        return all(m == 1 for m in self.mu)

    def rho_of(self, node: int) -> Fraction:
        """ρ dla węzła o etykiecie 1..3."""
        return self.rho[node - 1]

    def to_dict(self) -> Dict[str, List[str]]:
        """
        Konwertuje parametry do słownika.

        Returns:
            Dict: Wartości jako napisy "p/q".
        """
        return {
            "lambda": [format_rational(v) for v in self.lam],
            "mu": [format_rational(v) for v in self.mu],
            "sigma2": [format_rational(v) for v in self.service_variance],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Sequence[Number]]) -> "SystemParams":
        """
        Tworzy parametry ze słownika z kluczami 'lambda', 'mu', 'sigma2'.

        Args:
            data: Słownik parametrów.

        Returns:
            SystemParams: Nowa instancja (bez sprawdzania tranzytywności).
        """
        sigma2 = data.get("sigma2", (1, 1, 1))
        return cls(
            lam=_triple(data["lambda"], "lambda"),
            mu=_triple(data.get("mu", (1, 1, 1)), "mu"),
            service_variance=_triple(sigma2, "sigma2"),
        )

    @classmethod
    def normalized(cls, rho: Sequence[Number],
                   sigma2: Sequence[Number] = (1, 1, 1)) -> "SystemParams":
        """Parametry z μ ≡ 1 i λ = ρ."""
        return cls(lam=_triple(rho, "rho"), mu=(Fraction(1),) * 3,  # type: ignore[arg-type]
                   service_variance=_triple(sigma2, "sigma2"))


@dataclass(frozen=True)
class BoundaryPoint:
    """
    Punkt na brzegu trójkąta.

    Bok î jest parametryzowany jako z = (1−x)e_ĵ + x e_k̂, gdzie
    ĵ = î+1, k̂ = î+2 (cyklicznie). Narożnik (1, î) to ten sam punkt
    co (0, î+1).

    Attributes:
        side: Etykieta boku (1, 2, 3).
        x: Współrzędna na boku, 0 ≤ x ≤ 1.
    """
    side: int
    x: Coordinate

    def __post_init__(self) -> None:
        """Walidacja punktu po utworzeniu."""
        if self.side not in NODES:
            raise InputError(f"Nieprawidłowy bok: {self.side}")
        if not 0 <= self.x <= 1:
            raise InputError(f"Współrzędna poza [0, 1]: {self.x}")

    @property
    def is_corner(self) -> bool:
        """Czy punkt jest wierzchołkiem trójkąta."""
        return self.x == 0 or self.x == 1

    @property
    def corner_node(self) -> Optional[int]:
        """Numer wierzchołka e_k dla narożnika, inaczej None."""
        if self.x == 0:
            return next_node(self.side, 1)
        if self.x == 1:
            return next_node(self.side, 2)
        return None

    @property
    def circle_position(self) -> Fraction:
        """
        Położenie na pętli brzegu u ∈ [0, 3).

        Zgodne z utożsamieniem narożników: (1, s) i (0, s+1) mają to samo u.
        """
        return (Fraction(self.side - 1) + Fraction(self.x)) % 3

    def to_simplex(self) -> Vector:
        """
        Współrzędne barycentryczne punktu w R³.

        Returns:
            Vector: (y₁, y₂, y₃) z sumą 1.
        """
        coords = [Fraction(0)] * 3
        coords[next_node(self.side, 1) - 1] = 1 - Fraction(self.x)
        coords[next_node(self.side, 2) - 1] = Fraction(self.x)
        return tuple(coords)  # type: ignore[return-value]

    def same_point(self, other: "BoundaryPoint") -> bool:
        """Równość punktów z uwzględnieniem utożsamienia narożników."""
        if self.side == other.side:
            return self.x == other.x
        return self.is_corner and other.is_corner and self.corner_node == other.corner_node

    @classmethod
    def from_simplex(cls, y: Sequence[Fraction], side: Optional[int] = None) -> "BoundaryPoint":
        """
        Odczytuje punkt brzegowy ze współrzędnych w R³.

        Args:
            y: Nieujemny wektor z co najmniej jedną zerową współrzędną.
            side: Bok, na którym odczytać punkt (dla narożników).

        Returns:
            BoundaryPoint: Punkt na wskazanym lub wykrytym boku.

        Raises:
            InputError: Jeśli punkt nie leży na brzegu.
        """
        if side is None:
            zeros = [i + 1 for i, v in enumerate(y) if v == 0]
            if not zeros:
                raise InputError(f"Punkt {tuple(y)} nie leży na brzegu")
            side = zeros[0]
        elif y[side - 1] != 0:
            raise InputError(f"Punkt {tuple(y)} nie leży na boku {side}")
        a = y[next_node(side, 1) - 1]
        b = y[next_node(side, 2) - 1]
        return cls(side, b / (a + b))

    @classmethod
    def from_circle(cls, u: Fraction) -> "BoundaryPoint":
        """Punkt o położeniu u na pętli brzegu."""
        u = u % 3
        whole = int(u)
        return cls(whole + 1, u - whole)

    def to_dict(self) -> Dict[str, str]:
        """
        Konwertuje punkt do słownika.

        Returns:
            Dict: Bok i współrzędna.
        """
        value = format_rational(self.x) if isinstance(self.x, Fraction) else repr(self.x)
        return {"side": self.side, "x": value}

    @classmethod
    def from_dict(cls, data: Dict[str, Number]) -> "BoundaryPoint":
        """Tworzy punkt ze słownika z kluczami 'side' i 'x'."""
        return cls(side=int(data["side"]), x=parse_rational(data["x"]))

    def __str__(self) -> str:
        """Tekstowa reprezentacja punktu."""
        return f"{self.side}:{self.x}"


@dataclass(frozen=True)
class DecisionPoints:
    """
    Punkty decyzyjne d_î, po jednym na każdym boku.

    Attributes:
        xs: Współrzędne (d₁, d₂, d₃), każda w (0, 1).
    """
    xs: Vector

    def __post_init__(self) -> None:
        """Walidacja punktów decyzyjnych."""
        if len(self.xs) != 3:
            raise InputError("Oczekiwano trzech punktów decyzyjnych")
        for side, value in zip(NODES, self.xs):
            if not 0 < value < 1:
                raise InputError(f"Punkt decyzyjny d{side} = {value} poza (0, 1)")

    def __getitem__(self, side: int) -> Fraction:
        """Współrzędna punktu decyzyjnego na boku `side`."""
        return self.xs[side - 1]

    def point(self, side: int) -> BoundaryPoint:
        """Punkt decyzyjny boku jako BoundaryPoint."""
        return BoundaryPoint(side, self.xs[side - 1])

    def points(self) -> List[BoundaryPoint]:
        """Wszystkie trzy punkty decyzyjne."""
        return [self.point(side) for side in NODES]

    @classmethod
    def from_values(cls, values: Sequence[Number]) -> "DecisionPoints":
        """Punkty decyzyjne z wartości konfiguracji."""
        return cls(_triple(values, "decision_points"))

    @classmethod
    def uniform(cls, value: Number) -> "DecisionPoints":
        """Ten sam punkt decyzyjny na każdym boku."""
        x = parse_rational(value)
        return cls((x, x, x))

    @classmethod
    def from_weights(cls, weights: Sequence[Sequence[Number]]) -> "DecisionPoints":
        """
        Punkty decyzyjne z macierzy wag reguły progowej.

        d_î = (1 + b_îk̂ / b_îĵ)⁻¹.

        Args:
            weights: Macierz 3×3 wag b; przekątna jest ignorowana.

        Returns:
            DecisionPoints: Odpowiadające punkty decyzyjne.
        """
        if len(weights) != 3 or any(len(row) != 3 for row in weights):
            raise InputError("Macierz wag musi mieć wymiar 3×3")
        xs = []
        for side in NODES:
            row = weights[side - 1]
            b_j = parse_rational(row[next_node(side, 1) - 1])
            b_k = parse_rational(row[next_node(side, 2) - 1])
            if b_j <= 0 or b_k <= 0:
                raise InputError(f"Wagi w wierszu {side} muszą być dodatnie")
            xs.append(1 / (1 + b_k / b_j))
        return cls(tuple(xs))  # type: ignore[arg-type]

    def to_list(self) -> List[str]:
        """Współrzędne jako napisy "p/q"."""
        return [format_rational(v) for v in self.xs]


@dataclass(frozen=True)
class SideInterval:
    """Przedział współrzędnych [lo, hi] na jednym boku."""
    side: int
    lo: Fraction
    hi: Fraction

    def contains(self, x: Coordinate) -> bool:
        """Czy x należy do domkniętego przedziału."""
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class GeometrySummary:
    """
    Geometria rzutowanego systemu.

    Attributes:
        foci: Ogniska v₁, v₂, v₃.
        va_intervals: Przedział ⱽA na każdym boku.
        j_corners: Narożniki J_k jako listy przedziałów (pusta lista gdy J_k = ∅).
        gamma: Stała kontrakcji γ.
        c_region: Obszary C_j(γ) dla par (cel, bok źródłowy); brak klucza gdy pusty.
        degenerate: Narożniki z ρᵢ + ρⱼ = 1 dokładnie.
    """
    foci: Tuple[Vector, Vector, Vector]
    va_intervals: Dict[int, SideInterval]
    j_corners: Dict[int, List[SideInterval]]
    gamma: Fraction
    c_region: Dict[Tuple[int, int], SideInterval] = field(default_factory=dict)
    degenerate: Tuple[int, ...] = ()

    @property
    def all_j_empty(self) -> bool:
        """Czy wszystkie narożniki J są puste."""
        return all(not parts for parts in self.j_corners.values())

    def in_va(self, point: BoundaryPoint) -> bool:
        """Czy punkt leży w ⱽA."""
        return self.va_intervals[point.side].contains(point.x)

    def in_j_corner(self, point: BoundaryPoint) -> bool:
        """Czy punkt leży w którymś narożniku J (przedziały otwarte od strony ⱽA)."""
        for parts in self.j_corners.values():
            for part in parts:
                if part.side == point.side and part.lo < point.x < part.hi:
                    return True
                if part.side == point.side and point.x in (0, 1) and part.contains(point.x):
                    return True
        return False


def validate_params(lam: Sequence[Number], mu: Sequence[Number],
                    sigma2: Sequence[Number] = (1, 1, 1)) -> SystemParams:
    """
    Tworzy i sprawdza parametry systemu.

    Args:
        lam: Intensywności napływu.
        mu: Intensywności obsługi.
        sigma2: Wariancje czasów obsługi.

    Returns:
        SystemParams: Parametry systemu tranzytywnego.

    Raises:
        LoadTooHigh: Jeśli ρᵢ ≥ 1 dla któregoś węzła.
        SystemRecurrent: Jeśli Σρᵢ ≤ 1.
    """
    params = SystemParams(lam=_triple(lam, "lambda"), mu=_triple(mu, "mu"),
                          service_variance=_triple(sigma2, "sigma2"))
    for node, rho in zip(NODES, params.rho):
        if rho >= 1:
            raise LoadTooHigh(node, rho)
    if params.total_load <= 1:
        raise SystemRecurrent(params.total_load)
    logger.debug("Parametry poprawne: rho=%s theta=%s", params.rho, params.drift_constant)
    return params


def fractional_linear(alpha: Fraction, x: Coordinate) -> Coordinate:
    """
    Odwzorowanie F_α(x) = x / (α + (1 − α)x).

    Args:
        alpha: Parametr α > 0.
        x: Punkt z [0, 1].

    Returns:
        Wartość F_α(x); F_α ∘ F_β = F_αβ.
    """
    if alpha <= 0:
        raise InputError(f"Parametr α musi być dodatni: {alpha}")
    return x / (alpha + (1 - alpha) * x)


def reweight_point(params: SystemParams, z: BoundaryPoint) -> BoundaryPoint:
    """Obraz punktu w odwzorowaniu T (przeskalowanie osi przez 1/μᵢ)."""
    ratio = params.mu[next_node(z.side, 2) - 1] / params.mu[next_node(z.side, 1) - 1]
    return BoundaryPoint(z.side, fractional_linear(ratio, z.x))


def reweight(params: SystemParams, d: DecisionPoints) -> Tuple[SystemParams, DecisionPoints]:
    """
    Sprowadza system do postaci znormalizowanej μ ≡ 1.

    Na boku î odwzorowanie T to F_{μ_k̂/μ_ĵ}; trajektorie procesu ogólnego
    przeniesione przez T są trajektoriami procesu znormalizowanego.

    Args:
        params: Parametry ogólne.
        d: Punkty decyzyjne procesu ogólnego.

    Returns:
        tuple: (parametry znormalizowane, przekształcone punkty decyzyjne).
    """
    scaled_variance = tuple(s * m * m for s, m in zip(params.service_variance, params.mu))
    normalized = SystemParams(lam=params.rho, mu=(Fraction(1),) * 3,  # type: ignore[arg-type]
                              service_variance=scaled_variance)  # type: ignore[arg-type]
    xs = tuple(reweight_point(params, d.point(side)).x for side in NODES)
    return normalized, DecisionPoints(xs)  # type: ignore[arg-type]


def exit_point(params: SystemParams, j: int, y: Sequence[Fraction]) -> Vector:
    """
    Punkt wyjścia średniego dryfu przy obsłudze węzła j.

    yᵢ' = yᵢ + λᵢ yⱼ / (μⱼ − λⱼ) dla i ≠ j oraz yⱼ' = 0.

    Args:
        params: Parametry systemu.
        j: Obsługiwany węzeł.
        y: Stan początkowy w R³.

    Returns:
        Vector: Stan w chwili opróżnienia kolejki j.
    """
    lam_j = params.lam[j - 1]
    mu_j = params.mu[j - 1]
    served = y[j - 1]
    out = []
    for i in NODES:
        if i == j:
            out.append(Fraction(0))
        else:
            out.append(y[i - 1] + params.lam[i - 1] * served / (mu_j - lam_j))
    return tuple(out)  # type: ignore[return-value]


def project(y: Sequence[Fraction]) -> Vector:
    """Rzut Λ na sympleks Σyᵢ = 1."""
    total = sum(y, Fraction(0))
    if total == 0:
        raise InputError("Nie można rzutować wektora zerowego")
    return tuple(v / total for v in y)  # type: ignore[return-value]


def _endpoint_bound(rho_src: Fraction, rho_target: Fraction,
                    rho_corner: Fraction, theta: Fraction) -> Fraction:
    # maksimum |f'| na boku źródłowym poza narożnikiem J
    if rho_corner >= theta:
        return rho_src / (1 - rho_target)
    return (1 - rho_target) / rho_src


def contraction_region(params: SystemParams,
                       gamma: Fraction) -> Dict[Tuple[int, int], SideInterval]:
    """
    Obszary C_j(γ), w których |f_j'| ≤ γ.

    Pierwiastki brane są z górnego ograniczenia, więc zwracane przedziały
    leżą wewnątrz prawdziwych obszarów.

    Args:
        params: Parametry systemu.
        gamma: Dodatni próg nachylenia.

    Returns:
        dict: Przedział na boku źródłowym dla pary (cel, bok źródłowy);
        brak klucza, gdy obszar jest pusty.
    """
    gamma = Fraction(gamma)
    if gamma <= 0:
        raise InputError(f"Próg nachylenia musi być dodatni: {gamma}")
    rho = params.rho
    theta = params.drift_constant
    region: Dict[Tuple[int, int], SideInterval] = {}
    for target in NODES:
        prev, nxt = next_node(target, 2), next_node(target, 1)
        a = 1 - rho[target - 1]
        rp, rn = rho[prev - 1], rho[nxt - 1]
        # gałąź z boku prev: |g'(x)| = ρ_prev·a / (ρ_prev + ρ_next − θx)²
        _, root = sqrt_bounds(rp * a / gamma)
        hi = min(Fraction(1), (rp + rn - root) / theta)
        if hi >= 0:
            region[(target, prev)] = SideInterval(prev, Fraction(0), hi)
        # gałąź z boku next: |g'(x)| = ρ_next·a / (a + θx)²
        _, root = sqrt_bounds(rn * a / gamma)
        lo = max(Fraction(0), (root - a) / theta)
        if lo <= 1:
            region[(target, nxt)] = SideInterval(nxt, lo, Fraction(1))
    return region


def geometry(params: SystemParams) -> GeometrySummary:
    """
    Oblicza geometrię rzutowanego systemu.

    Args:
        params: Parametry (używane są tylko obciążenia ρ).

    Returns:
        GeometrySummary: Ogniska, ⱽA, narożniki J, γ oraz obszary C_j(γ).
    """
    rho = params.rho
    theta = params.drift_constant
    if theta <= 0:
        raise SystemRecurrent(params.total_load)

    foci = []
    for k in NODES:
        coords = [r for r in rho]
        coords[k - 1] = rho[k - 1] - 1
        foci.append(tuple(c / theta for c in coords))

    j_corners: Dict[int, List[SideInterval]] = {}
    degenerate = []
    for k in NODES:
        rho_k = rho[k - 1]
        if rho_k == theta:
            degenerate.append(k)
        if rho_k < theta:
            cut = rho_k / theta
            j_corners[k] = [
                SideInterval(next_node(k, 1), cut, Fraction(1)),
                SideInterval(next_node(k, 2), Fraction(0), 1 - cut),
            ]
        else:
            j_corners[k] = []
    if degenerate:
        logger.warning("Przypadek zdegenerowany ρᵢ + ρⱼ = 1 dla narożników %s", degenerate)

    va_intervals = {}
    for side in NODES:
        near = next_node(side, 1)
        far = next_node(side, 2)
        lo = max(Fraction(0), 1 - rho[near - 1] / theta)
        hi = min(Fraction(1), rho[far - 1] / theta)
        va_intervals[side] = SideInterval(side, lo, hi)

    bounds = []
    for target in NODES:
        prev, nxt = next_node(target, 2), next_node(target, 1)
        rho_t = rho[target - 1]
        bounds.append(_endpoint_bound(rho[prev - 1], rho_t, rho[nxt - 1], theta))
        bounds.append(_endpoint_bound(rho[nxt - 1], rho_t, rho[prev - 1], theta))
    gamma = max(bounds)
    c_region = contraction_region(params, gamma)

    return GeometrySummary(
        foci=tuple(foci),  # type: ignore[arg-type]
        va_intervals=va_intervals,
        j_corners=j_corners,
        gamma=gamma,
        c_region=c_region,
        degenerate=tuple(degenerate),
    )
