"""
Konfiguracja testów: znacznik `slow` dla przebiegów w pełnej skali.

Testy oznaczone `@pytest.mark.slow` uruchamiane są tylko z flagą --runslow.
"""

import pytest


def pytest_addoption(parser):
    """Dodaje flagę --runslow."""
    parser.addoption("--runslow", action="store_true", default=False,
                     help="uruchamia testy w pełnej skali")


def pytest_configure(config):
    """Rejestruje znacznik slow."""
    config.addinivalue_line("markers", "slow: test w pełnej skali (wymaga --runslow)")


def pytest_collection_modifyitems(config, items):
    """Pomija testy slow bez flagi --runslow."""
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="wymaga --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
