"""
Wyjątki pakietu polltri.

Błędy danych wejściowych dziedziczą po ValueError, a wyniki silnika, których
nie da się rozstrzygnąć, po RuntimeError. Każda klasa niesie kod wyjścia CLI.
"""

from typing import Optional


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ENGINE = 3
EXIT_ASSERTION = 4
EXIT_UNDECIDED = 5


class PolltriError(Exception):
    """Bazowa klasa wszystkich błędów pakietu."""

    exit_code: int = EXIT_ENGINE


class InputError(PolltriError, ValueError):
    """Nieprawidłowe dane wejściowe (parametry, konfiguracja, pliki)."""

    exit_code = EXIT_USAGE


class EngineError(PolltriError, RuntimeError):
    """Silnik nie może dokończyć obliczeń."""

    exit_code = EXIT_ENGINE


class LoadTooHigh(InputError):
    """Obciążenie węzła ρᵢ ≥ 1."""

    def __init__(self, node: int, rho) -> None:
        self.node = node
        self.rho = rho
        super().__init__(f"Obciążenie węzła {node} jest za duże: ρ = {rho} ≥ 1")


class SystemRecurrent(InputError):
    """Σρᵢ ≤ 1: system nie jest tranzytywny."""

    def __init__(self, total) -> None:
        self.total = total
        super().__init__(
            f"Suma obciążeń Σρ = {total} ≤ 1: system jest rekurencyjny, "
            "analiza orbit wymaga Σρ > 1"
        )


class SameSide(InputError):
    """Odwzorowanie f_j wywołane dla punktu leżącego na boku j."""

    def __init__(self, node: int) -> None:
        self.node = node
        super().__init__(f"Punkt leży już na boku {node}")


class DifferentSides(InputError):
    """Porównanie kodów z różnych boków."""


class RegionUnsupported(InputError):
    """Kodowanie binarne wymaga pustych narożników J."""


class NotFiniteP(InputError):
    """Zbiór przeciwobrazów punktów decyzyjnych nie jest potwierdzony jako skończony."""


class ConfigError(InputError):
    """Błąd pliku konfiguracyjnego."""


class PlotInputError(InputError):
    """Błąd parsowania pliku wejściowego wykresu."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"linia {line}: {message}"
        super().__init__(message)


class BranchEncountered(EngineError):
    """Trajektoria trafiła dokładnie w punkt decyzyjny przy polityce 'error'."""

    def __init__(self, step: int, point) -> None:
        self.step = step
        self.point = point
        super().__init__(f"Rozgałęzienie w kroku {step} w punkcie {point}")


class NoConvergence(EngineError):
    """Trajektoria nie zbiegła do żadnej orbity w budżecie kroków."""

    def __init__(self, start, budget: int) -> None:
        self.start = start
        self.budget = budget
        super().__init__(f"Brak zbieżności z punktu {start} po {budget} krokach")


class Undecidable(EngineError):
    """Porównanie leksykograficzne nierozstrzygnięte do zadanej głębokości."""

    def __init__(self, depth: int, context: str = "") -> None:
        self.depth = depth
        suffix = f" ({context})" if context else ""
        super().__init__(f"Porównanie nierozstrzygnięte do głębokości {depth} bitów{suffix}")


class EnclosureTooCoarse(EngineError):
    """Otoczka liczby α zbyt szeroka mimo maksymalnego doprecyzowania."""


class BudgetExceeded(EngineError):
    """Przekroczony budżet pętli symulacji lub iteracji."""


class AssertionTriggered(PolltriError):
    """Naruszenie twierdzenia (np. więcej niż cztery orbity)."""

    exit_code = EXIT_ASSERTION

    def __init__(self, message: str, reproducer: Optional[str] = None) -> None:
        self.reproducer = reproducer
        super().__init__(message)
