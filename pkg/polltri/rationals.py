"""
Pomocnicze operacje na liczbach wymiernych.

Parsowanie wartości z konfiguracji, zaokrąglanie do ustalonego mianownika
oraz zapis dziesiętny wysokiej precyzji.
"""

import math
from fractions import Fraction
from typing import Union

import mpmath

from .exceptions import InputError

Number = Union[int, float, str, Fraction]


def parse_rational(value: Number) -> Fraction:
    """
    Zamienia wartość z konfiguracji na dokładną liczbę wymierną.

    Akceptuje napisy "p/q", napisy dziesiętne, liczby całkowite oraz
    liczby zmiennoprzecinkowe (konwertowane przez ich zapis dziesiętny,
    więc 0.45 daje dokładnie 9/20).

    Args:
        value: Wartość do konwersji.

    Returns:
        Fraction: Dokładna wartość.

    Raises:
        InputError: Jeśli wartości nie da się odczytać.
    """
    if isinstance(value, bool):
        raise InputError(f"Nieprawidłowa liczba: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InputError(f"Nieprawidłowa liczba: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"Nieprawidłowa liczba: {value!r}") from None
    raise InputError(f"Nieprawidłowa liczba: {value!r}")


def round_fraction(x: Fraction, denominator: int) -> Fraction:
    """Zaokrągla x do najbliższej wielokrotności 1/denominator."""
    return Fraction(round(x * denominator), denominator)


def floor_fraction(x: Fraction, denominator: int) -> Fraction:
    """Zaokrąglenie w dół do siatki 1/denominator."""
    return Fraction(math.floor(x * denominator), denominator)


def ceil_fraction(x: Fraction, denominator: int) -> Fraction:
    """Zaokrąglenie w górę do siatki 1/denominator."""
    return Fraction(math.ceil(x * denominator), denominator)


def sqrt_bounds(x: Fraction, bits: int = 128):
    """
    Zwraca wymierne ograniczenia (dolne, górne) pierwiastka z x ≥ 0.

    Args:
        x: Nieujemna liczba wymierna.
        bits: Liczba bitów dokładności.

    Returns:
        tuple: (lo, hi) z lo ≤ √x ≤ hi oraz hi − lo ≤ 2^-bits.
    """
    if x < 0:
        raise InputError(f"Pierwiastek z liczby ujemnej: {x}")
    scale = 1 << bits
    # √x·scale = √(x·scale²)
    scaled = x * scale * scale
    root = math.isqrt(scaled.numerator // scaled.denominator)
    lo = Fraction(root, scale)
    hi = lo if lo * lo == x else Fraction(root + 1, scale)
    return lo, hi


def to_decimal(x: Fraction, digits: int = 40) -> str:
    """
    Zapis dziesiętny liczby wymiernej z zadaną liczbą cyfr znaczących.

    Args:
        x: Liczba wymierna.
        digits: Liczba cyfr znaczących.

    Returns:
        str: Zapis dziesiętny.
    """
    with mpmath.workdps(digits + 10):
        value = mpmath.mpf(x.numerator) / x.denominator
        return mpmath.nstr(value, digits)


def format_rational(x: Fraction) -> str:
    """Zapis "p/q" (lub "p" dla liczb całkowitych)."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"
