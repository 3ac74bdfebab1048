"""
Interfejs linii poleceń `polltri`.

Podpolecenia: validate, orbits, sweep, simulate, nonstable, plot.
Kody wyjścia: 0 sukces, 2 błąd użycia lub danych, 3 błąd silnika,
4 naruszenie asercji, 5 wynik nierozstrzygnięty.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from . import __version__, runner
from .config import apply_overrides, load_config, parse_config, setup_logging
from .exceptions import EXIT_OK, EXIT_UNDECIDED, EXIT_USAGE, AssertionTriggered, PolltriError
from .schemas import ExperimentConfig

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """Parser argumentów ze wszystkimi podpoleceniami."""
    parser = argparse.ArgumentParser(
        prog="polltri",
        description="Proces trójkątny systemu obsługi wyczerpującej z trzema kolejkami")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="więcej komunikatów (-v INFO, -vv DEBUG)")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(name: str, help_text: str) -> argparse.ArgumentParser:
        command = sub.add_parser(name, help=help_text)
        command.add_argument("--config", required=True, help="plik konfiguracyjny TOML")
        command.add_argument("--seed", type=int, help="ziarno główne")
        command.add_argument("--replicas", type=int, help="liczba replik")
        command.add_argument("--depth", type=int, help="głębokość łańcuchów")
        command.add_argument("--out", help="plik wynikowy")
        command.add_argument("--jobs", type=int, help="liczba procesów")
        return command

    with_config("validate", "sprawdza parametry i drukuje geometrię")
    with_config("orbits", "atlas orbit okresowych")
    with_config("sweep", "przegląd losowych konfiguracji")
    with_config("simulate", "eksperyment symulacyjny")
    nonstable = with_config("nonstable", "weryfikacja konstrukcji bez stabilności")
    nonstable.add_argument("--alpha", help="literał α (np. sqrt2)")

    plot = sub.add_parser("plot", help="wykres SVG trajektorii lub przebiegu")
    plot.add_argument("input", help="plik CSV trajektorii lub przebiegu")
    plot.add_argument("--out", required=True, help="plik SVG")
    plot.add_argument("--config", help="konfiguracja z parametrami i punktami decyzyjnymi")
    return parser


def _print(data: object) -> None:
    print(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False))


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config)
    config = apply_overrides(config, seed=args.seed, replicas=args.replicas, depth=args.depth,
                             out=args.out, jobs=args.jobs)
    alpha = getattr(args, "alpha", None)
    if alpha is not None:
        data = config.model_dump(by_alias=True)
        data["rule"] = {"nonstable": dict((data.get("rule") or {}).get("nonstable") or {},
                                          alpha=alpha)}
        config = parse_config(data)
    return config


def dispatch(args: argparse.Namespace) -> int:
    """
    Wykonuje podpolecenie.

    Returns:
        int: Kod wyjścia.
    """
    if args.command == "plot":
        config = load_config(args.config) if args.config else None
        runner.cmd_plot(args.input, args.out, config)
        return EXIT_OK

    config = _load(args)
    if args.command == "validate":
        _print(runner.cmd_validate(config.params).model_dump())
        return EXIT_OK
    if args.command == "orbits":
        atlas, code = runner.cmd_orbits(config)
        _print(atlas.model_dump())
        return code
    if args.command == "sweep":
        summary, _ = runner.cmd_sweep(config)
        _print(summary)
        return EXIT_UNDECIDED if summary["undecided"] == summary["samples"] else EXIT_OK
    if args.command == "simulate":
        _print(runner.cmd_simulate(config).model_dump())
        return EXIT_OK
    if args.command == "nonstable":
        _print(runner.cmd_nonstable(config).model_dump())
        return EXIT_OK
    raise AssertionError(args.command)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Punkt wejścia CLI.

    Args:
        argv: Argumenty (domyślnie sys.argv[1:]).

    Returns:
        int: Kod wyjścia.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    setup_logging(args.verbose)
    try:
        return dispatch(args)
    except AssertionTriggered as e:
        logger.error("%s", e)
        if e.reproducer:
            print(f"Plik odtwarzający: {e.reproducer}", file=sys.stderr)
        return e.exit_code
    except PolltriError as e:
        logger.error("%s", e)
        print(f"Błąd: {e}", file=sys.stderr)
        return e.exit_code
