"""
Aplikacja FastAPI procesu trójkątnego.

Udostępnia walidację parametrów, atlas orbit, raport konstrukcji bez
stabilności i eksperymenty symulacyjne przez REST API.
"""

from datetime import datetime

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from . import __version__, runner, schemas
from .exceptions import PolltriError

SERVER_START_TIME = datetime.utcnow()

app = FastAPI(
    title="Polltri API",
    description="REST API procesu trójkątnego systemu obsługi z trzema kolejkami",
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc"
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _raise_http(error: PolltriError) -> None:
    if isinstance(error, ValueError):
        raise HTTPException(status_code=400, detail=str(error))
    raise HTTPException(status_code=422, detail=str(error))


@app.post("/params/validate", response_model=schemas.ValidationReport, tags=["Params"])
def validate_params(params: schemas.ParamsBlock):
    """
    Sprawdza parametry systemu.

    Args:
        params: Blok parametrów (lambda, mu, sigma2).

    Returns:
        ValidationReport: ρ, θ i geometria.

    Raises:
        HTTPException: 400 dla parametrów spoza obszaru tranzytywnego.
    """
    try:
        return runner.cmd_validate(params)
    except PolltriError as e:
        _raise_http(e)


@app.post("/orbits", response_model=schemas.OrbitAtlas, tags=["Orbits"])
def orbits(config: schemas.ExperimentConfig):
    """
    Wyznacza atlas orbit.

    Status "Undecided" zwracany jest z kodem 200.

    Args:
        config: Konfiguracja eksperymentu (bez ścieżek wynikowych).

    Returns:
        OrbitAtlas: Orbity, stabilność i baseny.

    Raises:
        HTTPException: 400 dla błędnych danych, 422 dla błędów silnika.
    """
    try:
        atlas, _ = runner.cmd_orbits(_without_output(config))
        return atlas
    except PolltriError as e:
        _raise_http(e)


@app.post("/nonstable", response_model=schemas.NonstableReport, tags=["Nonstable"])
def nonstable(config: schemas.ExperimentConfig):
    """
    Weryfikuje konstrukcję punktów decyzyjnych bez stabilności.

    Raises:
        HTTPException: 400 dla błędnych danych, 422 dla błędów silnika.
    """
    try:
        return runner.cmd_nonstable(_without_output(config))
    except PolltriError as e:
        _raise_http(e)


@app.post("/simulate", response_model=schemas.SimulationReport, tags=["Simulation"])
def simulate(config: schemas.ExperimentConfig):
    """
    Uruchamia eksperyment symulacyjny.

    Raises:
        HTTPException: 400 dla błędnych danych, 422 dla błędów silnika.
    """
    try:
        return runner.cmd_simulate(_without_output(config))
    except PolltriError as e:
        _raise_http(e)


def _without_output(config: schemas.ExperimentConfig) -> schemas.ExperimentConfig:
    # API nie zapisuje plików po stronie serwera
    return config.model_copy(update={"output": schemas.OutputBlock()})


def get_server_uptime() -> str:
    """
    Oblicza czas działania serwera.

    Returns:
        str: Czas działania w formacie "Xh Ym Zs".
    """
    delta = datetime.utcnow() - SERVER_START_TIME
    hours, remainder = divmod(int(delta.total_seconds()), 3600)
    minutes, seconds = divmod(remainder, 60)
    return f"{hours}h {minutes}m {seconds}s"


@app.get("/api", tags=["Info"])
def api_info():
    """
    Endpoint z informacjami o API.

    Zwraca nazwę, wersję pakietu i listę endpointów obliczeniowych;
    dokumentacja interaktywna dostępna jest pod /docs.

    Returns:
        dict: Informacje o API (name, version, description, documentation,
        endpoints).
    """
    return {
        "name": "Polltri API",
        "version": __version__,
        "description": "REST API procesu trójkątnego",
        "documentation": "/docs",
        "endpoints": ["/params/validate", "/orbits", "/nonstable", "/simulate"],
    }


@app.get("/health", tags=["Info"])
def health_check():
    """
    Endpoint sprawdzający stan serwera.

    Nie wykonuje obliczeń; służy do sprawdzania, czy proces odpowiada.

    Returns:
        dict: Status serwera ("healthy") i czas działania w formacie "Xh Ym Zs".
    """
    return {
        "status": "healthy",
        "uptime": get_server_uptime()
    }
