"""
Schematy Pydantic dla walidacji konfiguracji i raportów.

Definiuje bloki pliku konfiguracyjnego eksperymentu (również treści żądań
API) oraz modele raportów zwracanych przez CLI i API.
"""

from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Number = Union[int, float, str]


class StrictModel(BaseModel):
    """Model odrzucający nieznane klucze."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ParamsBlock(StrictModel):
    """
    Blok [params].

    Attributes:
        lam: Intensywności napływu λᵢ (klucz "lambda").
        mu: Intensywności obsługi μᵢ (domyślnie 1, 1, 1).
        sigma2: Wariancje czasów obsługi σᵢ².
    """
    lam: List[Number] = Field(..., alias="lambda", min_length=3, max_length=3,
                              description="Intensywności napływu")
    mu: List[Number] = Field(default=[1, 1, 1], min_length=3, max_length=3,
                             description="Intensywności obsługi")
    sigma2: List[Number] = Field(default=[1, 1, 1], min_length=3, max_length=3,
                                 description="Wariancje czasów obsługi")


class NonstableBlock(StrictModel):
    """Parametry konstrukcji schodkowej: α i β."""
    alpha: str = Field(default="sqrt2", description="Literał α z przedziału (1, 2)")
    beta: Number = Field(default=0, description="Przesunięcie β z [−1, 1]")
    classify_depth: int = Field(default=24, ge=1, description="Głębokość klasyfikacji przedziałów")
    iet_depth: int = Field(default=16, ge=1, description="Długość łańcucha przekształcenia odcinka")


class RuleBlock(StrictModel):
    """
    Blok [rule]: dokładnie jedna postać reguły progowej.

    Attributes:
        decision_points: Punkty decyzyjne (d₁, d₂, d₃).
        weights: Macierz wag b 3×3.
        codes: Kody bitowe punktów decyzyjnych.
        nonstable: Konstrukcja schodkowa.
    """
    decision_points: Optional[List[Number]] = Field(None, min_length=3, max_length=3)
    weights: Optional[List[List[Number]]] = Field(None, min_length=3, max_length=3)
    codes: Optional[List[str]] = Field(None, min_length=3, max_length=3)
    nonstable: Optional[NonstableBlock] = None

    @model_validator(mode="after")
    def exactly_one(self) -> "RuleBlock":
        """Sprawdza, że podano dokładnie jedną postać reguły."""
        given = [name for name in ("decision_points", "weights", "codes", "nonstable")
                 if getattr(self, name) is not None]
        if len(given) != 1:
            raise ValueError("Blok [rule] wymaga dokładnie jednego z: decision_points, "
                             f"weights, codes, nonstable (podano: {given})")
        return self

    @property
    def symbolic(self) -> bool:
        """Czy reguła jest zadana kodami."""
        return self.codes is not None or self.nonstable is not None


class EngineBlock(StrictModel):
    """Blok [engine]: głębokości, tolerancje i budżety silnika orbit."""
    t_max: int = Field(default=64, ge=1, description="Głębokość testu skończoności P")
    depth: int = Field(default=64, ge=1, description="Głębokość łańcuchów przeciwobrazów")
    precision: Number = Field(default="1e-30", description="Szerokość otoczek orbit")
    capture_tolerance: Number = Field(default="1e-12", description="Tolerancja przechwycenia")
    step_budget: int = Field(default=100_000, ge=1, description="Budżet kroków na start")
    depth_cap: int = Field(default=2 ** 16, ge=1, description="Limit porównań kodów")
    grid: int = Field(default=300, ge=3, description="Punkty siatki basenów")
    branch_policy: Literal["lower", "upper"] = "lower"
    jobs: int = Field(default=1, ge=1, description="Liczba procesów roboczych")


class SimulationBlock(StrictModel):
    """Blok [simulation]."""
    service: Literal["exponential", "deterministic", "gamma"] = "exponential"
    replicas: int = Field(default=200, ge=1)
    switches: int = Field(default=200, ge=1)
    w0: List[int] = Field(default=[100_000], min_length=1)
    eps_cap: float = Field(default=1e-3, gt=0)
    tail: int = Field(default=1000, ge=1)
    max_period: int = Field(default=12, ge=1)
    diffusion_threshold: float = Field(default=1e12, gt=0)
    budget: int = Field(default=10 ** 6, ge=1)

    @field_validator("w0")
    @classmethod
    def positive_loads(cls, value: List[int]) -> List[int]:
        """Obciążenia początkowe muszą być dodatnie."""
        if any(w <= 0 for w in value):
            raise ValueError("Obciążenia początkowe w0 muszą być dodatnie")
        return value


class SweepBlock(StrictModel):
    """Blok [sweep]: losowe konfiguracje (ρ, d) o wspólnym mianowniku."""
    samples: int = Field(default=1000, ge=1)
    denominator: int = Field(default=100, ge=4)
    t_max: int = Field(default=64, ge=1)


class OutputBlock(StrictModel):
    """Blok [output]: ścieżki plików wynikowych."""
    atlas: Optional[str] = None
    csv: Optional[str] = None
    trajectory: Optional[str] = None
    report: Optional[str] = None
    svg: Optional[str] = None


class ExperimentConfig(StrictModel):
    """
    Pełna konfiguracja eksperymentu.

    Attributes:
        experiment: Rodzaj eksperymentu.
        seed: Ziarno główne.
        params: Parametry systemu.
        rule: Reguła progowa.
        engine: Ustawienia silnika orbit.
        simulation: Ustawienia symulacji.
        sweep: Ustawienia przeglądu.
        output: Ścieżki wynikowe.
    """
    experiment: Literal["orbits", "sweep", "convergence", "no_zero_one",
                        "nonstable"] = "orbits"
    seed: int = Field(default=0, ge=0)
    params: ParamsBlock
    rule: Optional[RuleBlock] = None
    start: Optional[Dict[str, Number]] = Field(None, description="Start trajektorii: side, x")
    steps: int = Field(default=30, ge=0, description="Liczba kroków trajektorii")
    engine: EngineBlock = Field(default_factory=EngineBlock)
    simulation: SimulationBlock = Field(default_factory=SimulationBlock)
    sweep: SweepBlock = Field(default_factory=SweepBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    @model_validator(mode="after")
    def rule_required(self) -> "ExperimentConfig":
        """Wszystkie eksperymenty poza przeglądem wymagają reguły."""
        if self.rule is None and self.experiment != "sweep":
            raise ValueError(f"Eksperyment '{self.experiment}' wymaga bloku [rule]")
        return self


class ValidationReport(BaseModel):
    """
    Raport walidacji parametrów.

    Attributes:
        rho: Obciążenia ρᵢ.
        theta: θ = Σρ − 1.
        normalized: Czy μ = (1, 1, 1).
        all_j_empty: Czy narożniki J są puste.
        degenerate: Narożniki z ρᵢ + ρⱼ = 1.
        gamma: Stała kontrakcji.
        va: Przedziały ⱽA na bokach.
        j_corners: Narożniki J jako przedziały.
    """
    rho: List[str]
    theta: str
    normalized: bool
    all_j_empty: bool
    degenerate: List[int]
    gamma: str
    va: Dict[str, List[str]]
    j_corners: Dict[str, List[Dict[str, Any]]]


class OrbitAtlas(BaseModel):
    """
    Atlas orbit.

    Attributes:
        status: FiniteP(t₀) albo Undecided.
        t0: Głębokość ucieczki.
        decision_points: Użyte punkty decyzyjne.
        orbits: Certyfikaty orbit.
        basins: Liczba startów na orbitę ("none" dla nieprzypisanych).
        unassigned: Liczba startów bez zbieżności.
    """
    status: str
    t0: Optional[int] = None
    decision_points: List[str] = Field(default_factory=list)
    orbits: List[Dict[str, Any]] = Field(default_factory=list)
    basins: Dict[str, int] = Field(default_factory=dict)
    unassigned: int = 0


class NonstableReport(BaseModel):
    """Raport weryfikacji konstrukcji bez stabilności."""
    alpha: str
    beta: str
    codes: List[str]
    depth: int
    prefix: str
    legitimacy: Dict[str, Any]
    preimages: Dict[str, Any]
    corner_chains: Dict[str, Dict[str, Any]]
    legitimacy_interval: List[str]
    classification: Optional[Dict[str, Any]] = None
    iet: Optional[Dict[str, Any]] = None


class SimulationReport(BaseModel):
    """
    Raport eksperymentu symulacyjnego.

    Attributes:
        experiment: convergence albo no_zero_one.
        seed: Ziarno główne.
        replicas: Liczba replik.
        results: Wyniki dla kolejnych w0 (lub jeden wynik klas końcowych).
        diffusion: Próg reżimu dyfuzyjnego i ograniczenie błędu rzutu przy progu.
    """
    experiment: str
    seed: int
    replicas: int
    results: List[Dict[str, Any]]
    diffusion: Dict[str, Any] = Field(default_factory=dict)
