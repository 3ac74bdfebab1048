"""
Orkiestracja eksperymentów.

Wspólna warstwa dla CLI i API: buduje obiekty dziedziny z konfiguracji,
uruchamia silniki i zapisuje pliki wynikowe.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import export
from .config import build_decision_points, build_params
from .dynamics import BranchPolicy, trajectory
from .exceptions import (EXIT_OK, EXIT_UNDECIDED, AssertionTriggered, EngineError,
                         InputError)
from .nonstable import (build_nonstable, classify_intervals, corner_chain,
                        extended_legitimacy_check, iet_chain, staircase,
                        verify_infinite_preimages)
from .orbits import basin_sample, escape_certificate, find_orbits
from .params import NODES, BoundaryPoint, DecisionPoints, SystemParams, geometry, validate_params
from .rationals import format_rational, parse_rational
from .schemas import (ExperimentConfig, NonstableReport, OrbitAtlas, ParamsBlock,
                      SimulationReport, ValidationReport)
from .simulation import (ServiceModel, SimulationSettings, convergence_experiment,
                         no_zero_one_experiment, replica_rng, run_replicas)
from .symbolic import DecisionCodes, decision_points_from_codes, legitimacy_interval

logger = logging.getLogger(__name__)

LEGITIMACY_PREFIX = 12


def _codes(config: ExperimentConfig) -> DecisionCodes:
    rule = config.rule
    if rule.nonstable is not None:
        return build_nonstable(rule.nonstable.alpha, rule.nonstable.beta)
    return DecisionCodes.from_literals(rule.codes)


def resolve_rule(config: ExperimentConfig,
                 params: SystemParams) -> Tuple[DecisionPoints, Optional[DecisionCodes]]:
    """
    Punkty decyzyjne z bloku [rule].

    Reguły symboliczne są dekodowane do otoczek o szerokości `precision`.

    Returns:
        tuple: (punkty decyzyjne, kody lub None).
    """
    if config.rule is None:
        raise InputError("Brak bloku [rule]")
    if not config.rule.symbolic:
        return build_decision_points(config.rule), None
    codes = _codes(config)
    precision = parse_rational(config.engine.precision)
    return decision_points_from_codes(codes, params, precision), codes


def cmd_validate(block: ParamsBlock) -> ValidationReport:
    """
    Sprawdza parametry i zwraca pochodne wielkości z geometrią.

    Args:
        block: Blok [params].

    Returns:
        ValidationReport: ρ, θ i podsumowanie geometrii.

    Raises:
        LoadTooHigh: Jeśli ρᵢ ≥ 1.
        SystemRecurrent: Jeśli Σρ ≤ 1.
    """
    params = build_params(block)
    summary = geometry(params)
    return ValidationReport(
        rho=[format_rational(r) for r in params.rho],
        theta=format_rational(params.drift_constant),
        normalized=params.is_normalized,
        all_j_empty=summary.all_j_empty,
        degenerate=list(summary.degenerate),
        gamma=format_rational(summary.gamma),
        va={str(side): [format_rational(iv.lo), format_rational(iv.hi)]
            for side, iv in summary.va_intervals.items()},
        j_corners={str(node): [{"side": iv.side, "lo": format_rational(iv.lo),
                                "hi": format_rational(iv.hi)} for iv in parts]
                   for node, parts in summary.j_corners.items()},
    )


def _symbolic_undecided(codes: DecisionCodes, config: ExperimentConfig) -> bool:
    # nieskończony łańcuch legalnych ψ-obrazów któregoś dᵢ
    for side in NODES:
        report = verify_infinite_preimages(codes, config.engine.t_max, side,
                                           config.engine.depth_cap)
        if report.passed:
            logger.info("d%d ma %d legalnych przeciwobrazów", side, config.engine.t_max)
            return True
    return False


def cmd_orbits(config: ExperimentConfig) -> Tuple[OrbitAtlas, int]:
    """
    Atlas orbit: test skończoności P, orbity, stabilność i baseny.

    Args:
        config: Konfiguracja eksperymentu.

    Returns:
        tuple: (atlas, kod wyjścia) - EXIT_UNDECIDED gdy skończoność P
        nie została rozstrzygnięta.
    """
    params = build_params(config.params)
    engine = config.engine
    if config.rule is not None and config.rule.symbolic:
        codes = _codes(config)
        if _symbolic_undecided(codes, config):
            return OrbitAtlas(status="Undecided", decision_points=codes.to_list()), EXIT_UNDECIDED
    d, _ = resolve_rule(config, params)
    escape = escape_certificate(params, d, engine.t_max)
    if not escape.finite:
        return OrbitAtlas(status=escape.label, decision_points=d.to_list()), EXIT_UNDECIDED

    precision = parse_rational(engine.precision)
    orbits = find_orbits(params, d, engine.t_max, precision)
    basins = basin_sample(params, d, engine.grid, orbits,
                          branch_policy=BranchPolicy(engine.branch_policy),
                          tolerance=parse_rational(engine.capture_tolerance),
                          budget=engine.step_budget, jobs=engine.jobs)
    atlas = OrbitAtlas(
        status=escape.label,
        t0=escape.t0,
        decision_points=d.to_list(),
        orbits=[cert.to_dict() for cert in orbits],
        basins={("none" if k is None else str(k)): v for k, v in basins.counts().items()},
        unassigned=len(basins.unassigned),
    )
    output = config.output
    if output.atlas:
        export.write_json(output.atlas, atlas.model_dump())
    if output.csv:
        export.write_csv(output.csv, export.basin_rows(basins), export.BASIN_COLUMNS)
    series = None
    if config.start is not None:
        start = BoundaryPoint.from_dict(config.start)
        path = trajectory(params, d, start, config.steps, BranchPolicy(engine.branch_policy))
        series = {"trajectory": path.points}
        if output.trajectory:
            export.write_csv(output.trajectory, path.to_csv_rows(),
                             ["step", "side", "x_decimal", "x_rational", "branched"])
    if output.svg:
        export.plot_svg(output.svg, series, params, d, orbits)
    return atlas, EXIT_OK


@dataclass(frozen=True)
class SweepRow:
    """Wiersz przeglądu losowych konfiguracji."""
    index: int
    rho: Tuple[Fraction, Fraction, Fraction]
    d: Tuple[Fraction, Fraction, Fraction]
    status: str
    t0: Optional[int] = None
    orbits: int = 0
    stabilities: Tuple[str, ...] = ()

    def to_row(self) -> Dict[str, str]:
        """Wiersz CSV."""
        return {
            "index": str(self.index),
            "rho1": format_rational(self.rho[0]),
            "rho2": format_rational(self.rho[1]),
            "rho3": format_rational(self.rho[2]),
            "d1": format_rational(self.d[0]),
            "d2": format_rational(self.d[1]),
            "d3": format_rational(self.d[2]),
            "status": self.status,
            "t0": "" if self.t0 is None else str(self.t0),
            "orbits": str(self.orbits),
            "stabilities": ";".join(self.stabilities),
            "flagged": "1" if self.orbits == 4 else "0",
        }


def sample_configuration(seed: int, index: int,
                         denominator: int) -> Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...]]:
    """
    Losowa konfiguracja (ρ, d) o mianowniku `denominator`.

    Strumień zależy tylko od (seed, index), więc wynik nie zależy od
    liczby procesów. ρᵢ < 1 i Σρᵢ > 1 są wymuszane odrzucaniem.
    """
    rng = replica_rng(seed, index)
    while True:
        k = [int(v) for v in rng.integers(1, denominator, size=3)]
        if sum(k) > denominator:
            break
    rho = tuple(Fraction(v, denominator) for v in k)
    d = tuple(Fraction(int(v), denominator) for v in rng.integers(1, denominator, size=3))
    return rho, d


def _sweep_task(args) -> SweepRow:
    seed, index, denominator, t_max = args
    rho, d_values = sample_configuration(seed, index, denominator)
    params = validate_params(rho, (1, 1, 1))
    d = DecisionPoints(d_values)  # type: ignore[arg-type]
    escape = escape_certificate(params, d, t_max)
    if not escape.finite:
        return SweepRow(index, rho, d_values, "Undecided")  # type: ignore[arg-type]
    try:
        orbits = find_orbits(params, d, t_max)
    except AssertionTriggered as e:
        logger.error("Konfiguracja %d: %s", index, e)
        return SweepRow(index, rho, d_values, "assertion", escape.t0)  # type: ignore[arg-type]
    except EngineError as e:
        logger.warning("Konfiguracja %d: %s", index, e)
        return SweepRow(index, rho, d_values, "error", escape.t0)  # type: ignore[arg-type]
    return SweepRow(index, rho, d_values, escape.label, escape.t0, len(orbits),  # type: ignore[arg-type]
                    tuple(cert.stability.value for cert in orbits))


def reproducer_toml(row: SweepRow) -> str:
    """Konfiguracja TOML odtwarzająca wiersz przeglądu."""
    def values(xs: Sequence[Fraction]) -> str:
        return ", ".join(f'"{format_rational(x)}"' for x in xs)

    return (
        'experiment = "orbits"\n'
        "seed = 0\n\n"
        "[params]\n"
        f"lambda = [{values(row.rho)}]\n"
        'mu = ["1", "1", "1"]\n\n'
        "[rule]\n"
        f"decision_points = [{values(row.d)}]\n"
    )


def cmd_sweep(config: ExperimentConfig) -> Tuple[Dict[str, object], List[SweepRow]]:
    """
    Przegląd losowych konfiguracji z asercją o co najwyżej czterech orbitach.

    Args:
        config: Konfiguracja z blokiem [sweep].

    Returns:
        tuple: (podsumowanie, wiersze w kolejności indeksów).

    Raises:
        AssertionTriggered: Gdy któraś konfiguracja ma więcej niż cztery
            orbity; plik odtwarzający zapisywany jest obok CSV.
    """
    sweep = config.sweep
    tasks = [(config.seed, index, sweep.denominator, sweep.t_max) for index in range(sweep.samples)]
    if config.engine.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.engine.jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(task) for task in tasks]

    if config.output.csv:
        export.write_csv(config.output.csv, (row.to_row() for row in rows), export.SWEEP_COLUMNS)
    failed = [row for row in rows if row.status == "assertion"]
    if failed:
        base = Path(config.output.csv) if config.output.csv else Path("sweep.csv")
        path = base.with_name(f"{base.stem}_reproducer_{failed[0].index}.toml")
        path.write_text(reproducer_toml(failed[0]), encoding="utf-8")
        raise AssertionTriggered(
            f"Konfiguracja {failed[0].index} ma więcej niż cztery orbity", str(path))

    undecided = sum(1 for row in rows if row.status == "Undecided")
    summary = {
        "samples": len(rows),
        "finite": sum(1 for row in rows if row.status.startswith("FiniteP")),
        "undecided": undecided,
        "undecided_fraction": undecided / len(rows),
        "errors": sum(1 for row in rows if row.status == "error"),
        "flagged_four": sum(1 for row in rows if row.orbits == 4),
        "max_orbits": max((row.orbits for row in rows), default=0),
    }
    for row in rows:
        if row.orbits == 4:
            logger.warning("Cztery orbity: rho=%s d=%s", row.rho, row.d)
    logger.info("Przegląd: %s", summary)
    return summary, rows


def _settings(config: ExperimentConfig) -> SimulationSettings:
    sim = config.simulation
    return SimulationSettings(n_switches=sim.switches, eps_cap=sim.eps_cap, tail=sim.tail,
                              max_period=sim.max_period,
                              diffusion_threshold=sim.diffusion_threshold, budget=sim.budget)


def _run_path(base: str, w0: int, many: bool) -> str:
    if not many:
        return base
    path = Path(base)
    return str(path.with_name(f"{path.stem}_w{w0}{path.suffix}"))


def cmd_simulate(config: ExperimentConfig) -> SimulationReport:
    """
    Eksperyment symulacyjny: zbieżność na orbity albo dychotomia bez stabilności.

    Eksperyment wybiera pole `experiment` ("convergence" lub "no_zero_one").

    Args:
        config: Konfiguracja z blokami [rule] i [simulation].

    Returns:
        SimulationReport: Wyniki z przedziałami Cloppera–Pearsona.
    """
    params = build_params(config.params)
    sim = config.simulation
    service = ServiceModel.from_params(params, sim.service)
    settings = _settings(config)
    d, _ = resolve_rule(config, params)
    jobs = config.engine.jobs
    results: List[Dict[str, object]] = []

    if config.experiment == "no_zero_one":
        runs = run_replicas(params, service, d, sim.w0[0], sim.replicas, config.seed,
                            settings, jobs)
        report = no_zero_one_experiment(params, service, d, sim.replicas, sim.switches,
                                        config.seed, sim.w0[0], settings, jobs, runs=runs)
        results.append(report.to_dict())
        if config.output.csv:
            export.write_runs(config.output.csv, runs)
    elif config.experiment == "convergence":
        orbits = find_orbits(params, d, config.engine.t_max, parse_rational(config.engine.precision))
        previous = None
        for w0 in sim.w0:
            runs = run_replicas(params, service, d, w0, sim.replicas, config.seed, settings, jobs)
            report = convergence_experiment(params, service, d, orbits, w0, sim.replicas,
                                            config.seed, settings, jobs, runs=runs)
            results.append(report.to_dict())
            if previous is not None and report.fraction < previous:
                logger.warning("Frakcja przechwyceń spadła przy w0=%d: %.3f < %.3f",
                               w0, report.fraction, previous)
            previous = report.fraction
            if config.output.csv:
                export.write_runs(_run_path(config.output.csv, w0, len(sim.w0) > 1), runs)
    else:
        raise InputError(f"Eksperyment '{config.experiment}' nie jest symulacją")

    result = SimulationReport(experiment=config.experiment, seed=config.seed,
                              replicas=sim.replicas, results=results,
                              diffusion=settings.diffusion_summary())
    if config.output.report:
        export.write_json(config.output.report, result.model_dump())
    return result


def cmd_nonstable(config: ExperimentConfig) -> NonstableReport:
    """
    Raport konstrukcji punktów decyzyjnych z nieskończonym łańcuchem przeciwobrazów.

    Sprawdza rozszerzoną legalność ciągu schodkowego, łańcuch ψ-obrazów d₁,
    skończone łańcuchy d₂ i d₃, klasyfikację przedziałów oraz zgodność
    z przekształceniem odcinka.

    Args:
        config: Konfiguracja z blokiem [rule.nonstable].

    Returns:
        NonstableReport: Wyniki weryfikacji.
    """
    params = build_params(config.params)
    block = config.rule.nonstable if config.rule is not None else None
    if block is None:
        raise InputError("Eksperyment 'nonstable' wymaga bloku [rule.nonstable]")
    depth = config.engine.depth
    sequence = staircase(block.alpha, block.beta)
    codes = build_nonstable(block.alpha, block.beta)

    legitimacy = extended_legitimacy_check(sequence, max(depth // 4, 3))
    preimages = verify_infinite_preimages(codes, depth, 1, config.engine.depth_cap)
    chains = {}
    for side in (2, 3):
        chain = corner_chain(codes, side, params)
        chains[str(side)] = {"count": chain.count, "corner": chain.corner,
                             "members": [c.head(LEGITIMACY_PREFIX) for c in chain.members]}
    low, high = legitimacy_interval(codes, 1)

    classification = None
    iet = None
    if geometry(params).all_j_empty:
        classification = classify_intervals(params, codes, block.classify_depth,
                                            config.engine.depth_cap).to_dict()
        chain_report = iet_chain(codes, block.iet_depth)
        iet = {"depth": chain_report.depth, "agrees": chain_report.agrees,
               "max_deviation": float(chain_report.max_deviation)}
    else:
        logger.warning("Narożniki J niepuste: pomijam klasyfikację przedziałów")

    report = NonstableReport(
        alpha=str(sequence.alpha),
        beta=format_rational(parse_rational(block.beta)),
        codes=codes.to_list(),
        depth=depth,
        prefix=sequence.head(8),
        legitimacy={"passed": legitimacy.passed, "checked": legitimacy.checked,
                    "failure": legitimacy.failure, "condition": legitimacy.condition,
                    "aperiodic": legitimacy.aperiodic},
        preimages={"passed": preimages.passed, "depth": preimages.depth,
                   "failure": preimages.failure},
        corner_chains=chains,
        legitimacy_interval=[low.head(LEGITIMACY_PREFIX), high.head(LEGITIMACY_PREFIX)],
        classification=classification,
        iet=iet,
    )
    if config.output.report:
        export.write_json(config.output.report, report.model_dump())
    return report


def cmd_plot(source: str, out: str, config: Optional[ExperimentConfig] = None) -> None:
    """
    Wykres SVG trajektorii lub przebiegu symulacji.

    Args:
        source: Plik CSV trajektorii lub przebiegu.
        out: Plik SVG.
        config: Opcjonalna konfiguracja (ogniska i punkty decyzyjne).
    """
    series = export.read_plot_input(source)
    params = d = None
    if config is not None:
        params = build_params(config.params)
        if config.rule is not None and not config.rule.symbolic:
            d = build_decision_points(config.rule)
    export.plot_svg(out, series, params, d)
