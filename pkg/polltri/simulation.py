"""
Symulacja stochastyczna systemu obsługi wyczerpującej z trzema kolejkami.

Łańcuch momentów przełączeń ζ(n) = Λ(ξ(τₙ)), walidatory wzorów na
momenty okresu zajętości oraz dwa eksperymenty: zbieżność na orbity
procesu trójkątnego i dychotomia dla punktów decyzyjnych bez stabilności.
"""

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .dynamics import forward_map
from .exceptions import BudgetExceeded, InputError
from .orbits import OrbitCertificate, Stability
from .params import NODES, BoundaryPoint, DecisionPoints, SystemParams, next_node
from .rationals import parse_rational

logger = logging.getLogger(__name__)

DIFFUSION_THRESHOLD = 10 ** 12
DEFAULT_EPS_CAP = 1e-3
DEFAULT_TAIL = 1000
DEFAULT_MAX_PERIOD = 12
DEFAULT_GENERATION_BUDGET = 10 ** 6
LOCKED_CYCLE = (1, 3, 2)
_LN10 = math.log(10)

Rule = Union[DecisionPoints, Sequence[Sequence[Fraction]]]


class ServiceKind(str, enum.Enum):
    """Rozkład czasu obsługi."""
    EXPONENTIAL = "exponential"
    DETERMINISTIC = "deterministic"
    GAMMA = "gamma"


@dataclass(frozen=True)
class ServiceModel:
    """
    Rozkłady czasów obsługi w węzłach.

    Attributes:
        kinds: Typ rozkładu w każdym węźle.
        means: Średnie 1/μᵢ.
        variances: Wariancje σᵢ².
    """
    kinds: Tuple[ServiceKind, ServiceKind, ServiceKind]
    means: Tuple[float, float, float]
    variances: Tuple[float, float, float]

    def __post_init__(self) -> None:
        """Walidacja rozkładów."""
        for node, kind, mean, variance in zip(NODES, self.kinds, self.means, self.variances):
            if mean <= 0 or not math.isfinite(mean) or variance < 0 or not math.isfinite(variance):
                raise InputError(f"Nieprawidłowy rozkład obsługi w węźle {node}")
            if kind is ServiceKind.GAMMA and variance == 0:
                raise InputError(f"Rozkład gamma w węźle {node} wymaga dodatniej wariancji")

    @classmethod
    def from_params(cls, params: SystemParams, kind: str = "exponential") -> "ServiceModel":
        """
        Model obsługi o średnich 1/μᵢ.

        Wariancja wynika z typu: 1/μ² dla wykładniczego, 0 dla
        deterministycznego, σᵢ² z parametrów dla gamma.
        """
        service_kind = ServiceKind(kind)
        means = tuple(1 / float(m) for m in params.mu)
        if service_kind is ServiceKind.EXPONENTIAL:
            variances = tuple(m * m for m in means)
        elif service_kind is ServiceKind.DETERMINISTIC:
            variances = (0.0, 0.0, 0.0)
        else:
            variances = tuple(float(v) for v in params.service_variance)
        return cls((service_kind,) * 3, means, variances)  # type: ignore[arg-type]

    def sample(self, rng: np.random.Generator, node: int) -> float:
        """Jeden czas obsługi w węźle."""
        return self.total(rng, node, 1)

    def total(self, rng: np.random.Generator, node: int, count: int) -> float:
        """Suma `count` niezależnych czasów obsługi w węźle."""
        kind, mean, variance = self.kinds[node - 1], self.means[node - 1], self.variances[node - 1]
        if count <= 0:
            return 0.0
        if kind is ServiceKind.DETERMINISTIC:
            return count * mean
        if kind is ServiceKind.EXPONENTIAL:
            return float(rng.gamma(count, mean))
        shape = mean * mean / variance
        return float(rng.gamma(count * shape, variance / mean))


@dataclass
class PollingState:
    """
    Stan systemu w chwili przełączenia.

    W reżimie dyfuzyjnym (bardzo duże W) kolejki zastępują udziały
    `shares` i logarytm łącznej liczby zadań `log_w`.

    Attributes:
        queues: Długości kolejek (None w reżimie dyfuzyjnym).
        server: Węzeł obsługiwany.
        log_clock: Logarytm naturalny czasu symulacji.
        shares: Znormalizowane długości kolejek w reżimie dyfuzyjnym.
        log_w: Logarytm naturalny W w reżimie dyfuzyjnym.
    """
    queues: Optional[List[int]]
    server: int
    log_clock: float = -math.inf
    shares: Optional[np.ndarray] = None
    log_w: Optional[float] = None

    @property
    def diffusive(self) -> bool:
        """Czy stan jest w reżimie dyfuzyjnym."""
        return self.queues is None

    @property
    def log10_w(self) -> float:
        """log₁₀ W."""
        if self.diffusive:
            return self.log_w / _LN10
        total = sum(self.queues)
        return math.log10(total) if total > 0 else -math.inf

    def advance_clock(self, duration: float) -> None:
        """Dodaje czas (w skali liniowej) do zegara logarytmicznego."""
        if duration > 0:
            self.log_clock = float(np.logaddexp(self.log_clock, math.log(duration)))


@dataclass(frozen=True)
class SwitchRecord:
    """
    Rekord momentu przełączenia τₙ.

    Attributes:
        replica: Numer repliki.
        n: Numer przełączenia.
        log10_tau: log₁₀ τₙ.
        queues: ξ(τₙ) (None w reżimie dyfuzyjnym).
        zeta: Λ(ξ(τₙ)) na boku opróżnionej kolejki (None gdy W = 0).
        server: Węzeł opróżniony w τₙ.
        next_node: Węzeł wybrany przez regułę.
        log10_w: log₁₀ W.
        services: Liczba obsług w okresie zajętości (None w reżimie dyfuzyjnym).
    """
    replica: int
    n: int
    log10_tau: float
    queues: Optional[Tuple[int, int, int]]
    zeta: Optional[BoundaryPoint]
    server: int
    next_node: int
    log10_w: float
    services: Optional[int] = None

    @property
    def w(self) -> Optional[int]:
        """W = Σξᵢ (None w reżimie dyfuzyjnym)."""
        return sum(self.queues) if self.queues is not None else None


def _float(x) -> float:
    return float(x)


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Niezależny strumień licznikowy repliki wyprowadzony z ziarna głównego."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(replica,))))


def serve_one(state: PollingState, params: SystemParams, service: ServiceModel,
              rng: np.random.Generator) -> PollingState:
    """
    Jedna obsługa w węźle serwera z napływem Poisson(λᵢS) do każdej kolejki.

    Returns:
        PollingState: Nowy stan (serwer bez zmian).
    """
    if state.diffusive or state.queues[state.server - 1] == 0:
        raise InputError("Obsługa wymaga niepustej kolejki serwera")
    duration = service.sample(rng, state.server)
    queues = [q + int(rng.poisson(_float(l) * duration)) for q, l in zip(state.queues, params.lam)]
    queues[state.server - 1] -= 1
    result = replace(state, queues=queues)
    result.advance_clock(duration)
    return result


def threshold_decision(rule: Rule, queues: Sequence[float], node: int,
                       rng: np.random.Generator) -> int:
    """
    Reguła progowa po opróżnieniu kolejki `node`.

    Args:
        rule: Punkty decyzyjne albo macierz wag b.
        queues: Długości (lub udziały) kolejek; kolejka `node` jest pusta.
        node: Opróżniony węzeł.
        rng: Strumień repliki (remis rozstrzyga rzut monetą).

    Returns:
        int: ĵ = node+1 gdy wygrywa ważona kolejka ĵ, k̂ = node+2 w przeciwnym razie.
    """
    j, k = next_node(node, 1), next_node(node, 2)
    qj, qk = queues[j - 1], queues[k - 1]
    if qj == 0 and qk == 0:
        raise InputError("Reguła progowa wymaga niepustego systemu")
    if isinstance(rule, DecisionPoints):
        threshold = rule[node]
        if isinstance(qj, (int, np.integer)) and isinstance(qk, (int, np.integer)):
            x = Fraction(int(qk), int(qj) + int(qk))
        else:
            x = qk / (qj + qk)
            threshold = _float(threshold)
        if x < threshold:
            return j
        if x > threshold:
            return k
    else:
        weights = rule[node - 1]
        left, right = _float(weights[j - 1]) * qj, _float(weights[k - 1]) * qk
        if left > right:
            return j
        if right > left:
            return k
    return j if rng.integers(2) == 0 else k


def _zeta(queues: Sequence, node: int) -> Optional[BoundaryPoint]:
    j, k = next_node(node, 1), next_node(node, 2)
    qj, qk = queues[j - 1], queues[k - 1]
    if qj + qk == 0:
        return None
    if isinstance(qj, (int, np.integer)) and isinstance(qk, (int, np.integer)):
        return BoundaryPoint(node, Fraction(int(qk), int(qj) + int(qk)))
    return BoundaryPoint(node, float(qk / (qj + qk)))


def _empty_race(state: PollingState, params: SystemParams, rng: np.random.Generator) -> int:
    rates = np.array([_float(l) for l in params.lam])
    total = rates.sum()
    if total <= 0:
        raise BudgetExceeded("Pusty system bez napływu nigdy się nie zapełni")
    state.advance_clock(float(rng.exponential(1 / total)))
    node = int(rng.choice(3, p=rates / total)) + 1
    state.queues[node - 1] = 1
    return node


def _exact_busy_period(state: PollingState, params: SystemParams, service: ServiceModel,
                       rng: np.random.Generator, budget: int) -> int:
    j = state.server
    rates = [_float(l) for l in params.lam]
    batch = state.queues[j - 1]
    services = 0
    generations = 0
    while batch > 0:
        generations += 1
        if generations > budget:
            raise BudgetExceeded(f"Okres zajętości przekroczył {budget} pokoleń obsług")
        duration = service.total(rng, j, batch)
        services += batch
        state.advance_clock(duration)
        arrivals = [int(rng.poisson(rate * duration)) for rate in rates]
        for i in NODES:
            if i != j:
                state.queues[i - 1] += arrivals[i - 1]
        batch = arrivals[j - 1]
    state.queues[j - 1] = 0
    return services


def busy_period_moments(params: SystemParams, service: ServiceModel, j: int,
                        c: float) -> Tuple[float, float]:
    """
    Średnia i wariancja długości okresu zajętości od c zadań w węźle j.

    E B = c/(μ(1−ρ)), Var B = c(σ² + ρ/μ²)/(1−ρ)³.
    """
    rho = _float(params.rho_of(j))
    mean_s = service.means[j - 1]
    var_s = service.variances[j - 1]
    return c * mean_s / (1 - rho), c * (var_s + rho * mean_s ** 2) / (1 - rho) ** 3


def service_count_moments(params: SystemParams, service: ServiceModel, j: int,
                          c: float) -> Tuple[float, float]:
    """
    Średnia i wariancja liczby obsług T_c do opróżnienia kolejki j.

    E T_c = c/(1−ρ), Var T_c = cσ²/(1−ρ)³, gdzie σ² = λ²σ_S² + ρ to wariancja
    napływu w czasie jednej obsługi.
    """
    rho = _float(params.rho_of(j))
    lam = _float(params.lam[j - 1])
    sigma2 = lam ** 2 * service.variances[j - 1] + rho
    return c / (1 - rho), c * sigma2 / (1 - rho) ** 3


def switch_epoch_moments(params: SystemParams, service: ServiceModel, j: int,
                         xi_j: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Warunkowa średnia i macierz kowariancji przyrostu ξ(τₙ₊₁) − ξ(τₙ).

    Args:
        params: Parametry systemu.
        service: Model obsługi.
        j: Węzeł obsługiwany od τₙ.
        xi_j: Długość kolejki j w τₙ.

    Returns:
        tuple: (średnie, kowariancje) o wymiarach 3 i 3×3; przyrost kolejki j
        wynosi dokładnie −ξⱼ.
    """
    mean_b, var_b = busy_period_moments(params, service, j, xi_j)
    rates = np.array([_float(l) for l in params.lam])
    rates[j - 1] = 0.0
    mean = rates * mean_b
    mean[j - 1] = -xi_j
    cov = np.outer(rates, rates) * var_b + np.diag(rates * mean_b)
    return mean, cov


def chebyshev_bound(params: SystemParams, service: ServiceModel, i: int, j: int,
                    xi_j: float) -> float:
    """Ograniczenie P[|Δξᵢ − E| > ξⱼ^(2/3)] ≤ Var/ξⱼ^(4/3)."""
    _, cov = switch_epoch_moments(params, service, j, xi_j)
    return float(cov[i - 1, i - 1]) / xi_j ** (4 / 3)


def projection_perturbation_bound(u: float) -> float:
    """Ograniczenie przesunięcia rzutu 2u^(−1/3)."""
    return 2 * u ** (-1 / 3)


def projection_deviation(params: SystemParams, previous: SwitchRecord,
                         current: SwitchRecord) -> float:
    """
    Odległość |ζ(n) − φ(ζ(n−1))|₁ między rekordami kolejnych przełączeń.

    Returns:
        float: Odległość w normie L1 na sympleksie.
    """
    if previous.zeta is None or current.zeta is None:
        raise InputError("Odchylenie wymaga niepustych stanów")
    image = forward_map(params, previous.next_node, previous.zeta)
    return 2 * abs(float(image.x) - float(current.zeta.x))


def growth_rate(params: SystemParams, d: DecisionPoints) -> float:
    """ν = ½·minⱼ Dθ/(1−ρⱼ), gdzie D = minᵢ min(dᵢ, 1−dᵢ)."""
    margin = min(min(x, 1 - x) for x in d.xs)
    theta = params.drift_constant
    return float(min(margin * theta / (1 - rho) for rho in params.rho) / 2)


def z_score(samples: Sequence[float], expected: float) -> float:
    """Statystyka (średnia − oczekiwana)/(odchylenie/√n)."""
    values = np.asarray(samples, dtype=float)
    se = values.std(ddof=1) / math.sqrt(len(values))
    return float((values.mean() - expected) / se)


def _diffusive_busy_period(state: PollingState, params: SystemParams, service: ServiceModel,
                           rng: np.random.Generator) -> None:
    # przyrosty jako Gauss z dokładnymi momentami, wszystko względem W
    j = state.server
    y = state.shares
    scale = math.exp(-state.log_w)
    mean_b, var_b = busy_period_moments(params, service, j, float(y[j - 1]))
    b = max(0.0, mean_b + math.sqrt(var_b * scale) * float(rng.standard_normal()))
    rates = np.array([_float(l) for l in params.lam])
    noise = rng.standard_normal(3)
    arrivals = rates * b + np.sqrt(np.maximum(rates * b * scale, 0.0)) * noise
    values = y + np.maximum(arrivals, 0.0)
    values[j - 1] = 0.0
    total = float(values.sum())
    if b > 0:
        state.log_clock = float(np.logaddexp(state.log_clock, state.log_w + math.log(b)))
    state.log_w += math.log(total)
    state.shares = values / total


def _to_diffusive(state: PollingState) -> None:
    queues = np.array(state.queues, dtype=float)
    total = float(queues.sum())
    state.shares = queues / total
    state.log_w = math.log(total)
    state.queues = None


def run_busy_period(state: PollingState, params: SystemParams, service: ServiceModel,
                    rng: np.random.Generator, rule: Optional[Rule] = None, n: int = 0,
                    replica: int = 0,
                    budget: int = DEFAULT_GENERATION_BUDGET) -> Tuple[PollingState, SwitchRecord]:
    """
    Okres zajętości serwera aż do opróżnienia jego kolejki.

    Obsługi wykonywane są pokoleniami: zadania przybyłe do obsługiwanej
    kolejki w czasie obsługi pokolenia tworzą następne pokolenie. Przy
    pustym systemie serwer czeka na pierwsze zgłoszenie (wyścig wykładniczy).

    Args:
        state: Stan w chwili przełączenia (zmieniany w miejscu).
        params: Parametry systemu.
        service: Model obsługi.
        rng: Strumień repliki.
        rule: Reguła wyboru następnego węzła (None: bez decyzji).
        n: Numer przełączenia w rekordzie.
        replica: Numer repliki w rekordzie.
        budget: Limit pokoleń obsług.

    Returns:
        tuple: (stan po decyzji, rekord momentu przełączenia).

    Raises:
        BudgetExceeded: Po przekroczeniu limitu pokoleń.
    """
    services: Optional[int] = None
    if state.diffusive:
        _diffusive_busy_period(state, params, service, rng)
        queues_view: Sequence = state.shares
    else:
        if sum(state.queues) == 0:
            state.server = _empty_race(state, params, rng)
        elif state.queues[state.server - 1] == 0:
            raise InputError(f"Kolejka serwera {state.server} jest pusta")
        services = _exact_busy_period(state, params, service, rng, budget)
        queues_view = state.queues
    emptied = state.server
    zeta = _zeta(queues_view, emptied)
    if rule is None:
        chosen = emptied
    elif zeta is None:
        # pusty system: następny okres zaczyna się od wyścigu napływów
        chosen = emptied
    else:
        chosen = threshold_decision(rule, queues_view, emptied, rng)
    record = SwitchRecord(
        replica=replica,
        n=n,
        log10_tau=state.log_clock / _LN10,
        queues=tuple(state.queues) if not state.diffusive else None,
        zeta=zeta,
        server=emptied,
        next_node=chosen,
        log10_w=state.log10_w,
        services=services,
    )
    state.server = chosen
    return state, record


def simulate(params: SystemParams, service: ServiceModel, rule: Rule,
             initial: Tuple[Sequence[int], int], n_switches: int, seed: int,
             replica: int = 0, diffusion_threshold: float = DIFFUSION_THRESHOLD,
             budget: int = DEFAULT_GENERATION_BUDGET) -> List[SwitchRecord]:
    """
    Symuluje n_switches okresów zajętości od stanu początkowego.

    Args:
        params: Parametry systemu.
        service: Model obsługi.
        rule: Reguła progowa.
        initial: (kolejki, węzeł serwera).
        n_switches: Liczba przełączeń.
        seed: Ziarno główne.
        replica: Numer repliki (wybiera strumień).
        diffusion_threshold: Próg W przejścia do reżimu dyfuzyjnego.
        budget: Limit pokoleń obsług na okres zajętości.

    Returns:
        List[SwitchRecord]: Rekordy kolejnych przełączeń (n = 1..n_switches).
    """
    queues, server = initial
    if len(queues) != 3 or any(int(q) < 0 for q in queues):
        raise InputError(f"Nieprawidłowy stan początkowy: {queues}")
    rng = replica_rng(seed, replica)
    state = PollingState([int(q) for q in queues], int(server))
    records = []
    for n in range(1, n_switches + 1):
        if not state.diffusive and sum(state.queues) >= diffusion_threshold:
            logger.info("Replika %d: reżim dyfuzyjny od przełączenia %d (błąd rzutu <= %.2e)",
                        replica, n, projection_perturbation_bound(sum(state.queues)))
            _to_diffusive(state)
        state, record = run_busy_period(state, params, service, rng, rule, n, replica, budget)
        records.append(record)
    return records


def initial_state(rule: Rule, w0: int, rng: np.random.Generator,
                  direction: Optional[BoundaryPoint] = None) -> Tuple[List[int], int]:
    """
    Stan startowy o obciążeniu w0 w kierunku punktu brzegu.

    Kierunek jest losowany jednostajnie, gdy nie podano `direction`.
    Serwer wybiera reguła progowa, jak po opróżnieniu kolejki boku.
    """
    if direction is None:
        direction = BoundaryPoint(int(rng.integers(1, 4)), float(rng.uniform(0.0, 1.0)))
    queues = [0, 0, 0]
    j, k = next_node(direction.side, 1), next_node(direction.side, 2)
    queues[k - 1] = int(round(float(direction.x) * w0))
    queues[j - 1] = w0 - queues[k - 1]
    return queues, threshold_decision(rule, queues, direction.side, rng)


def _window_match(window: Sequence[SwitchRecord], orbit: OrbitCertificate,
                  eps: float) -> bool:
    m = orbit.period
    sides = orbit.node_cycle
    mids = [float(p.midpoint.x) for p in orbit.points]
    for offset in range(m):
        ok = True
        for k, record in enumerate(window):
            index = (offset + k) % m
            if record.zeta is None or record.zeta.side != sides[index] \
                    or abs(float(record.zeta.x) - mids[index]) >= eps:
                ok = False
                break
        if ok:
            return True
    return False


def capture_index(records: Sequence[SwitchRecord], orbits: Sequence[OrbitCertificate],
                  eps: float = DEFAULT_EPS_CAP) -> Tuple[Optional[int], Optional[int]]:
    """
    Pierwsze przełączenie, od którego ostatnie 3m rekordów leżą przy orbicie.

    Returns:
        tuple: (indeks orbity, numer przełączenia) albo (None, None).
    """
    for end in range(1, len(records) + 1):
        for index, orbit in enumerate(orbits):
            window = 3 * orbit.period
            if end >= window and _window_match(records[end - window:end], orbit, eps):
                return index, records[end - 1].n
    return None, None


@dataclass(frozen=True)
class ReplicaOutcome:
    """Wynik repliki eksperymentu zbieżności."""
    replica: int
    orbit: Optional[int]
    capture: Optional[int]


def binomial_ci(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Dokładny przedział Cloppera–Pearsona."""
    if trials == 0:
        return 0.0, 1.0
    interval = stats.binomtest(successes, trials).proportion_ci(
        confidence_level=confidence, method="exact")
    return float(interval.low), float(interval.high)


@dataclass
class ConvergenceReport:
    """
    Wynik eksperymentu zbieżności.

    Attributes:
        w0: Obciążenie początkowe.
        outcomes: Wyniki replik w kolejności numerów.
    """
    w0: int
    outcomes: List[ReplicaOutcome] = field(default_factory=list)

    @property
    def captured(self) -> int:
        """Liczba replik przechwyconych przez orbitę."""
        return sum(1 for o in self.outcomes if o.orbit is not None)

    @property
    def fraction(self) -> float:
        """Frakcja przechwyconych replik."""
        return self.captured / len(self.outcomes) if self.outcomes else 0.0

    def per_orbit(self) -> Dict[int, int]:
        """Liczba przechwyceń dla każdej orbity."""
        counts: Dict[int, int] = {}
        for outcome in self.outcomes:
            if outcome.orbit is not None:
                counts[outcome.orbit] = counts.get(outcome.orbit, 0) + 1
        return counts

    def to_dict(self) -> Dict[str, object]:
        """Raport z przedziałem ufności."""
        low, high = binomial_ci(self.captured, len(self.outcomes))
        return {
            "w0": self.w0,
            "replicas": len(self.outcomes),
            "captured": self.captured,
            "fraction": self.fraction,
            "ci95": [low, high],
            "per_orbit": {str(k): v for k, v in sorted(self.per_orbit().items())},
        }


@dataclass(frozen=True)
class SimulationSettings:
    """Ustawienia wspólne eksperymentów symulacyjnych."""
    n_switches: int = 200
    eps_cap: float = DEFAULT_EPS_CAP
    tail: int = DEFAULT_TAIL
    max_period: int = DEFAULT_MAX_PERIOD
    diffusion_threshold: float = DIFFUSION_THRESHOLD
    budget: int = DEFAULT_GENERATION_BUDGET

    def diffusion_summary(self) -> Dict[str, object]:
        """
        Opis przybliżenia dyfuzyjnego do raportu.

        Powyżej progu W przyrosty okresu zajętości są gaussowskie z dokładnymi
        momentami; odchylenie ζ od φ(ζ) jest wtedy rzędu 2W^(−1/3).
        """
        return {
            "threshold": self.diffusion_threshold,
            "increments": "gauss_exact_moments",
            "projection_error_bound": projection_perturbation_bound(self.diffusion_threshold),
        }


def _run_replica(args) -> Tuple[int, List[SwitchRecord]]:
    params, service, rule, w0, seed, replica, settings = args
    # osobny strumień stanu początkowego, niezależny od przebiegu
    start = initial_state(rule, w0, np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(replica, 0)))))
    records = simulate(params, service, rule, start, settings.n_switches, seed, replica,
                       settings.diffusion_threshold, settings.budget)
    return replica, records


def run_replicas(params: SystemParams, service: ServiceModel, rule: Rule, w0: int,
                 replicas: int, seed: int, settings: SimulationSettings = SimulationSettings(),
                 jobs: int = 1) -> List[List[SwitchRecord]]:
    """
    Uruchamia repliki (równolegle przy jobs > 1) i zwraca rekordy według numeru repliki.
    """
    tasks = [(params, service, rule, w0, seed, replica, settings) for replica in range(replicas)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_replica, tasks))
    else:
        results = [_run_replica(task) for task in tasks]
    results.sort(key=lambda item: item[0])
    return [records for _, records in results]


def convergence_experiment(params: SystemParams, service: ServiceModel, d: DecisionPoints,
                           orbits: Sequence[OrbitCertificate], w0: int, replicas: int,
                           seed: int, settings: SimulationSettings = SimulationSettings(),
                           jobs: int = 1,
                           runs: Optional[List[List[SwitchRecord]]] = None) -> ConvergenceReport:
    """
    Sprawdza, czy trajektorie ζ przechwytywane są przez orbity procesu trójkątnego.

    Args:
        params: Parametry systemu.
        service: Model obsługi.
        d: Punkty decyzyjne (P skończone).
        orbits: Certyfikaty orbit.
        w0: Obciążenie początkowe.
        replicas: Liczba replik.
        seed: Ziarno główne.
        settings: Horyzont, ε i limity.
        jobs: Liczba procesów.
        runs: Gotowe rekordy replik (pomija symulację).

    Returns:
        ConvergenceReport: Wynik każdej repliki.
    """
    if runs is None:
        runs = run_replicas(params, service, d, w0, replicas, seed, settings, jobs)
    report = ConvergenceReport(w0)
    for replica, records in enumerate(runs):
        orbit, capture = capture_index(records, orbits, settings.eps_cap)
        if orbit is not None and orbits[orbit].stability is Stability.ONE_SIDED:
            logger.warning("Replika %d przechwycona przez orbitę jednostronną %s",
                           replica, orbits[orbit].node_cycle)
        report.outcomes.append(ReplicaOutcome(replica, orbit, capture))
    logger.info("w0=%d: przechwycono %d z %d", w0, report.captured, replicas)
    return report


class TailClass(str, enum.Enum):
    """Klasa końcowego fragmentu trasy."""
    LOCKED_PERIOD3 = "locked_period3"
    NO_SHORT_PERIOD = "no_short_period"
    OTHER = "other"


def shortest_period(sides: Sequence[int], max_period: int) -> Optional[int]:
    """Najkrótszy okres P ≤ max_period pasujący do całego ciągu boków."""
    for period in range(1, max_period + 1):
        if all(sides[k] == sides[k + period] for k in range(len(sides) - period)):
            return period
    return None


def classify_tail(records: Sequence[SwitchRecord], tail: int = DEFAULT_TAIL,
                  max_period: int = DEFAULT_MAX_PERIOD) -> TailClass:
    """
    Klasyfikuje ostatnie `tail` przełączeń repliki.

    locked_period3: cykl węzłów (1, 3, 2); no_short_period: żaden okres
    ≤ max_period nie pasuje (zastępczy test aperiodyczności).
    """
    sides = [r.server for r in records[-tail:]]
    period = shortest_period(sides, max_period)
    if period is None:
        return TailClass.NO_SHORT_PERIOD
    if period == 3:
        cycle = tuple(sides[:3])
        rotations = {LOCKED_CYCLE[k:] + LOCKED_CYCLE[:k] for k in range(3)}
        if cycle in rotations:
            return TailClass.LOCKED_PERIOD3
    return TailClass.OTHER


@dataclass
class NoZeroOneReport:
    """Liczności klas końcowych z przedziałami Cloppera–Pearsona."""
    replicas: int
    counts: Dict[str, int]

    def to_dict(self) -> Dict[str, object]:
        """Raport eksperymentu."""
        return {
            "replicas": self.replicas,
            "counts": dict(self.counts),
            "ci95": {name: list(binomial_ci(count, self.replicas))
                     for name, count in self.counts.items()},
            "proxy": "no_short_period: brak okresu P <= max_period w końcowym oknie",
        }


def no_zero_one_experiment(params: SystemParams, service: ServiceModel,
                           d_nonstable: Rule, replicas: int, horizon: int, seed: int,
                           w0: int = 10 ** 5, settings: SimulationSettings = SimulationSettings(),
                           jobs: int = 1,
                           runs: Optional[List[List[SwitchRecord]]] = None) -> NoZeroOneReport:
    """
    Liczy repliki zablokowane na orbicie okresu 3 i repliki bez krótkiego okresu.

    Args:
        params: Parametry systemu.
        service: Model obsługi.
        d_nonstable: Liczbowe punkty decyzyjne (np. dekodowane z kodów).
        replicas: Liczba replik.
        horizon: Liczba przełączeń na replikę.
        seed: Ziarno główne.
        w0: Obciążenie początkowe.
        settings: Okno końcowe i próg okresu.
        jobs: Liczba procesów.
        runs: Gotowe rekordy replik (pomija symulację).

    Returns:
        NoZeroOneReport: Liczności klas.
    """
    if runs is None:
        settings = replace(settings, n_switches=horizon)
        runs = run_replicas(params, service, d_nonstable, w0, replicas, seed, settings, jobs)
    counts = {kind.value: 0 for kind in TailClass}
    for records in runs:
        counts[classify_tail(records, settings.tail, settings.max_period).value] += 1
    logger.info("Klasy końcowe: %s", counts)
    return NoZeroOneReport(len(runs), counts)


def parse_rule_weights(weights: Sequence[Sequence]) -> List[List[Fraction]]:
    """Macierz wag z wartości konfiguracji."""
    return [[parse_rational(v) for v in row] for row in weights]
