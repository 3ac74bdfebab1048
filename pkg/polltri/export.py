"""
Zapis wyników: pliki CSV, dokumenty JSON i wykresy SVG trójkąta.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .exceptions import PlotInputError  # noqa: E402
from .orbits import BasinReport, OrbitCertificate  # noqa: E402
from .params import BoundaryPoint, DecisionPoints, SystemParams, geometry  # noqa: E402
from .rationals import format_rational, parse_rational  # noqa: E402
from .simulation import SwitchRecord  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

RUN_COLUMNS = ["replica", "n", "tau", "q1", "q2", "q3", "server", "next_node",
               "zeta_side", "zeta_x", "W"]
BASIN_COLUMNS = ["start_side", "start_x", "orbit", "steps", "branch"]
SWEEP_COLUMNS = ["index", "rho1", "rho2", "rho3", "d1", "d2", "d3", "status", "t0",
                 "orbits", "stabilities", "flagged"]

CORNERS = ((0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2))


def _scientific(log10_value: float) -> str:
    if log10_value == -math.inf:
        return "0"
    exponent = math.floor(log10_value)
    mantissa = 10 ** (log10_value - exponent)
    return f"{mantissa:.9f}e{exponent:+d}"


def write_csv(path: PathLike, rows: Iterable[Dict[str, object]], columns: Sequence[str]) -> None:
    """Zapisuje wiersze do pliku CSV z nagłówkiem."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_json(path: PathLike, data: object) -> None:
    """Zapisuje dokument JSON (klucze posortowane, stabilny zapis)."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle, indent=2, sort_keys=True, ensure_ascii=False)
        handle.write("\n")


def switch_record_row(record: SwitchRecord) -> Dict[str, str]:
    """
    Wiersz CSV rekordu przełączenia.

    Czas i W zapisywane są w postaci naukowej wyprowadzonej z logarytmów,
    w reżimie dyfuzyjnym kolejki pozostają puste.
    """
    queues = record.queues if record.queues is not None else ("", "", "")
    return {
        "replica": str(record.replica),
        "n": str(record.n),
        "tau": _scientific(record.log10_tau),
        "q1": str(queues[0]),
        "q2": str(queues[1]),
        "q3": str(queues[2]),
        "server": str(record.server),
        "next_node": str(record.next_node),
        "zeta_side": str(record.zeta.side) if record.zeta is not None else "",
        "zeta_x": repr(float(record.zeta.x)) if record.zeta is not None else "",
        "W": str(record.w) if record.w is not None else _scientific(record.log10_w),
    }


def write_runs(path: PathLike, runs: Sequence[Sequence[SwitchRecord]]) -> None:
    """Zapisuje rekordy wszystkich replik (kolejność: replika, przełączenie)."""
    write_csv(path, (switch_record_row(r) for records in runs for r in records), RUN_COLUMNS)


def basin_rows(report: BasinReport) -> List[Dict[str, str]]:
    """Wiersze CSV przypisań basenów."""
    return [{
        "start_side": str(a.start.side),
        "start_x": format_rational(a.start.x),
        "orbit": "" if a.orbit is None else str(a.orbit),
        "steps": str(a.steps),
        "branch": a.branch.value,
    } for a in report.assignments]


def _to_plane(point: BoundaryPoint) -> Tuple[float, float]:
    y = point.to_simplex()
    return (sum(float(c) * corner[0] for c, corner in zip(y, CORNERS)),
            sum(float(c) * corner[1] for c, corner in zip(y, CORNERS)))


def _vector_to_plane(y: Sequence) -> Tuple[float, float]:
    return (sum(float(c) * corner[0] for c, corner in zip(y, CORNERS)),
            sum(float(c) * corner[1] for c, corner in zip(y, CORNERS)))


def read_plot_input(path: PathLike) -> Dict[str, List[BoundaryPoint]]:
    """
    Odczytuje trajektorię lub przebieg symulacji do wykresu.

    Plik trajektorii ma kolumny side i x_rational (lub x_decimal); plik
    przebiegu ma kolumny replica, zeta_side i zeta_x. Każda replika
    tworzy osobną serię.

    Args:
        path: Ścieżka pliku CSV.

    Returns:
        Dict: Serie punktów według etykiety.

    Raises:
        PlotInputError: Przy braku kolumn lub błędnym wierszu (z numerem linii).
    """
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise PlotInputError(f"Nie można otworzyć pliku {path}: {e}") from None
    series: Dict[str, List[BoundaryPoint]] = {}
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        if not header:
            return series
        if "zeta_side" in header and "zeta_x" in header:
            side_key, x_key, label_key = "zeta_side", "zeta_x", "replica"
        elif "side" in header and ("x_rational" in header or "x_decimal" in header):
            side_key = "side"
            x_key = "x_rational" if "x_rational" in header else "x_decimal"
            label_key = None
        else:
            raise PlotInputError(f"Nieznany nagłówek: {','.join(header)}", 1)
        for row in reader:
            line = reader.line_num
            if None in row or any(row.get(k) is None for k in header):
                raise PlotInputError("Zła liczba kolumn", line)
            if not row[side_key]:
                continue
            try:
                point = BoundaryPoint(int(row[side_key]), parse_rational(row[x_key]))
            except (ValueError, TypeError) as e:
                raise PlotInputError(str(e), line) from None
            label = row[label_key] if label_key else "trajectory"
            series.setdefault(label, []).append(point)
    logger.debug("Wczytano %d serii z %s", len(series), path)
    return series


def plot_svg(path: PathLike, series: Optional[Dict[str, List[BoundaryPoint]]] = None,
             params: Optional[SystemParams] = None, d: Optional[DecisionPoints] = None,
             orbits: Sequence[OrbitCertificate] = ()) -> None:
    """
    Rysuje trójkąt z ogniskami, punktami decyzyjnymi, orbitami i trajektoriami.

    Zapis SVG jest deterministyczny dla ustalonego wejścia (stała sól
    identyfikatorów, brak daty w metadanych).

    Args:
        path: Plik wynikowy SVG.
        series: Serie punktów (cięciwy między kolejnymi punktami).
        params: Parametry do narysowania ognisk.
        d: Punkty decyzyjne.
        orbits: Orbity rysowane jako zamknięte wielokąty.
    """
    with plt.rc_context({"svg.hashsalt": "polltri", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 5.5))
        frame = list(CORNERS) + [CORNERS[0]]
        ax.plot([p[0] for p in frame], [p[1] for p in frame], color="black", linewidth=1)
        for node, corner in enumerate(CORNERS, start=1):
            ax.annotate(f"e{node}", corner, textcoords="offset points", xytext=(-12, -12))

        if params is not None:
            for node, focus in enumerate(geometry(params).foci, start=1):
                fx, fy = _vector_to_plane(focus)
                ax.plot([fx], [fy], marker="x", color="gray")
                ax.annotate(f"v{node}", (fx, fy), textcoords="offset points", xytext=(4, 4))
        if d is not None:
            for point in d.points():
                px, py = _to_plane(point)
                ax.plot([px], [py], marker="o", color="red", markersize=5)

        for index, orbit in enumerate(orbits):
            polygon = [_to_plane(p) for p in orbit.midpoints]
            polygon.append(polygon[0])
            ax.plot([p[0] for p in polygon], [p[1] for p in polygon], linewidth=1.5,
                    label=f"orbita {index}: {orbit.node_cycle}")

        for label in sorted(series or {}, key=str):
            points = [_to_plane(p) for p in series[label]]
            if not points:
                continue
            ax.plot([p[0] for p in points], [p[1] for p in points], linewidth=0.5,
                    alpha=0.6, marker=".", markersize=2)

        ax.set_aspect("equal")
        ax.axis("off")
        if orbits:
            ax.legend(loc="upper right", fontsize="small")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
