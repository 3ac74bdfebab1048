"""
Moduł konfiguracji.

Wczytuje plik TOML eksperymentu, waliduje go schematami Pydantic,
nakłada nadpisania z linii poleceń i konfiguruje logowanie.
"""

import logging
import sys
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError

from .exceptions import ConfigError
from .params import DecisionPoints, SystemParams, validate_params
from .schemas import ExperimentConfig, ParamsBlock, RuleBlock

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(verbosity: int = 0) -> None:
    """
    Konfiguruje logowanie całego pakietu.

    Args:
        verbosity: 0 - WARNING, 1 - INFO, 2 i więcej - DEBUG.
    """
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def parse_config(data: dict) -> ExperimentConfig:
    """
    Waliduje słownik konfiguracji.

    Raises:
        ConfigError: Przy nieznanych kluczach lub błędnych wartościach.
    """
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"Nieprawidłowa konfiguracja: {problems}") from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Wczytuje plik konfiguracyjny TOML.

    Args:
        path: Ścieżka pliku.

    Returns:
        ExperimentConfig: Zwalidowana konfiguracja.

    Raises:
        ConfigError: Gdy pliku nie ma, nie jest poprawnym TOML-em lub
            nie przechodzi walidacji.
    """
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"Brak pliku konfiguracyjnego: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Błąd składni TOML w {path}: {e}") from None
    return parse_config(data)


def apply_overrides(config: ExperimentConfig, seed: Optional[int] = None,
                    replicas: Optional[int] = None, depth: Optional[int] = None,
                    out: Optional[str] = None, jobs: Optional[int] = None) -> ExperimentConfig:
    """
    Nakłada flagi linii poleceń na konfigurację.

    `out` trafia do ścieżki CSV (lub raportu, gdy eksperyment nie pisze CSV).

    Returns:
        ExperimentConfig: Nowa, ponownie zwalidowana konfiguracja.
    """
    data = config.model_dump(by_alias=True)
    if seed is not None:
        data["seed"] = seed
    if replicas is not None:
        data["simulation"]["replicas"] = replicas
    if depth is not None:
        data["engine"]["depth"] = depth
    if jobs is not None:
        data["engine"]["jobs"] = jobs
    if out is not None:
        key = "report" if config.experiment == "nonstable" else "csv"
        data["output"][key] = out
    return parse_config(data)


def build_params(block: ParamsBlock) -> SystemParams:
    """Parametry systemu tranzytywnego z bloku [params]."""
    return validate_params(block.lam, block.mu, block.sigma2)


def build_decision_points(rule: RuleBlock) -> DecisionPoints:
    """
    Liczbowe punkty decyzyjne z bloku [rule] w postaci punktów lub wag.

    Raises:
        ConfigError: Dla reguły symbolicznej (kody dekoduje runner).
    """
    if rule.decision_points is not None:
        return DecisionPoints.from_values(rule.decision_points)
    if rule.weights is not None:
        return DecisionPoints.from_weights(rule.weights)
    raise ConfigError("Reguła symboliczna wymaga dekodowania kodów")
