"""
Testy konstrukcji punktów decyzyjnych z nieskończenie wieloma przeciwobrazami.
"""

from fractions import Fraction

import pytest

from polltri.exceptions import InputError
from polltri.nonstable import (Alpha, IntervalKind, QuadrupleSequence, build_nonstable,
                               classify_intervals, corner_chain, extended_legitimacy_check,
                               iet_chain, preimage_codes, staircase, staircase_code,
                               verify_infinite_preimages)
from polltri.params import SystemParams
from polltri.symbolic import format_code, is_legitimate, legitimacy_interval

SYMMETRIC = SystemParams.normalized(("0.45", "0.45", "0.45"))


@pytest.fixture(scope="module")
def nonstable():
    """Kody d dla α = √2, β = 0."""
    return build_nonstable("sqrt2")


def as_bits(word):
    """Zapis czwórek jako cyfr (q > r)."""
    return word.replace("q", "1").replace("r", "0")


class TestAlpha:
    """Testy parametru α."""

    @pytest.mark.parametrize("text", ["sqrt2", "sqrt3", "golden", "1/2+1/2*sqrt5", "e-1",
                                      "pi/2"])
    def test_valid(self, text):
        """Testuje poprawne literały."""
        assert str(Alpha.parse(text)) == text

    @pytest.mark.parametrize("text", ["3/2", "sqrt4", "sqrt5", "foo", "1.5"])
    def test_invalid(self, text):
        """Testuje literały wymierne, nieznane i spoza (1, 2)."""
        with pytest.raises(InputError):
            Alpha.parse(text)

    def test_sign_surd(self):
        """Testuje dokładny znak p + q√2."""
        alpha = Alpha.parse("sqrt2")
        assert alpha.sign_of(Fraction(-141, 100), Fraction(1)) == 1
        assert alpha.sign_of(Fraction(-142, 100), Fraction(1)) == -1
        assert alpha.sign_of(Fraction(2), Fraction(0)) == 1

    def test_sign_named(self):
        """Testuje znak dla stałej nazwanej."""
        alpha = Alpha.parse("pi/2")
        assert alpha.sign_of(Fraction(-157, 100), Fraction(1)) == 1
        assert alpha.sign_of(Fraction(-158, 100), Fraction(1)) == -1


class TestStaircase:
    """Testy ciągów schodkowych."""

    def test_sqrt2_prefix(self):
        """Testuje początek y(√2, 0)."""
        assert staircase("sqrt2").head(7) == "qrqrqqr"

    def test_no_violation(self):
        """Testuje brak qqq i rr."""
        for text in ("sqrt2", "golden", "sqrt3"):
            assert staircase(text).first_violation(300) is None

    def test_monotone_in_beta(self):
        """Testuje monotoniczność leksykograficzną względem β."""
        heads = [as_bits(staircase("sqrt2", beta).head(60))
                 for beta in ("-1/2", "-1/4", "0", "1/4", "1/2")]
        assert heads == sorted(heads)

    def test_invalid_arguments(self):
        """Testuje błędy dla n < 2 i β poza [−1, 1]."""
        with pytest.raises(InputError):
            staircase("sqrt2", n=1)
        with pytest.raises(InputError):
            staircase("sqrt2", beta=2)

    def test_code_bits(self):
        """Testuje bity kodu: q = 1001, r = 0110."""
        code = staircase_code(1, "sqrt2")
        assert code.head(16) == "1001011010010110"
        assert format_code(code) == "1:staircase(alpha=sqrt2,beta=0)"

    def test_periodic_pattern(self):
        """Testuje błędny wzorzec ciągu okresowego."""
        with pytest.raises(InputError):
            QuadrupleSequence.periodic("qx")


class TestExtendedLegitimacy:
    """Testy rozszerzonej legalności."""

    @pytest.mark.parametrize("n", [60, pytest.param(10 ** 4, marks=pytest.mark.slow)])
    def test_sqrt2(self, n):
        """Testuje legalność i aperiodyczność y(√2, 0)."""
        report = extended_legitimacy_check(staircase("sqrt2"), n)
        assert report.passed
        assert report.aperiodic
        assert report.failure is None

    def test_all_q(self):
        """Testuje naruszenie warunku po q dla ciągu qqq…"""
        report = extended_legitimacy_check(QuadrupleSequence.periodic("q"), 10)
        assert not report.passed
        assert report.failure == 3
        assert report.condition == "b"
        assert not report.aperiodic

    def test_short(self):
        """Testuje błąd dla n < 3."""
        with pytest.raises(InputError):
            extended_legitimacy_check(staircase("sqrt2"), 2)


class TestNonstableCodes:
    """Testy punktów decyzyjnych konstrukcji."""

    def test_codes(self, nonstable):
        """Testuje kody d₁, d₂, d₃."""
        assert nonstable[1].head(8) == "10010110"
        assert format_code(nonstable[2]) == "2:10101(0)"
        assert format_code(nonstable[3]) == "3:01(0)"

    def test_legitimacy_interval(self, nonstable):
        """Testuje przedział legalności boku 1."""
        low, high = legitimacy_interval(nonstable, 1)
        assert low.head(4) == "0101"
        assert high.head(7) == "1010101"
        assert is_legitimate(nonstable[1], nonstable)

    @pytest.mark.parametrize("depth", [8, 64, pytest.param(4 * 10 ** 4, marks=pytest.mark.slow)])
    def test_infinite_preimages(self, nonstable, depth):
        """Testuje legalność ψ-obrazów d₁."""
        report = verify_infinite_preimages(nonstable, depth)
        assert report.passed
        assert report.failure is None

    @pytest.mark.parametrize("side, failure", [(2, 6), (3, 3)])
    def test_finite_chains(self, nonstable, side, failure):
        """Testuje skończone łańcuchy d₂ i d₃."""
        report = verify_infinite_preimages(nonstable, 16, side)
        assert not report.passed
        assert report.failure == failure

    def test_d2_chain(self, nonstable):
        """Testuje pięć przeciwobrazów d₂ kończących się w e₃."""
        chain = corner_chain(nonstable, 2, SYMMETRIC)
        assert [format_code(c) for c in chain.members] == \
            ["3:1010(1)", "1:101(0)", "2:10(1)", "3:1(0)", "1:(1)"]
        assert chain.count == 5
        assert chain.corner == 3

    def test_d3_chain(self, nonstable):
        """Testuje dwa przeciwobrazy d₃ kończące się w e₂."""
        chain = corner_chain(nonstable, 3, SYMMETRIC)
        assert [format_code(c) for c in chain.members] == ["2:0(1)", "1:(0)"]
        assert chain.corner == 2

    def test_preimage_codes_limit(self, nonstable):
        """Testuje ograniczenie długości łańcucha d₁."""
        assert len(preimage_codes(nonstable, 1, 12)) == 12


class TestClassification:
    """Testy klasyfikacji przedziałów."""

    def test_arcs(self, nonstable):
        """Testuje pokrycie pętli i dodatnie Δ."""
        result = classify_intervals(SYMMETRIC, nonstable, 6)
        assert sum(arc.length for arc in result.arcs) == 3
        assert result.delta is not None and result.delta > 0
        assert result.counts()[IntervalKind.PERIODIC.value] > 0
        assert sum(result.counts().values()) == len(result.arcs)

    def test_report(self, nonstable):
        """Testuje raport klasyfikacji."""
        data = classify_intervals(SYMMETRIC, nonstable, 4).to_dict()
        assert data["depth"] == 4
        assert set(data["counts"]) == {"periodic", "semi_periodic", "aperiodic"}


class TestIetChain:
    """Testy przekształcenia odcinka jednostkowego."""

    def test_agrees(self, nonstable):
        """Testuje zgodność trajektorii z łańcuchem ψ."""
        report = iet_chain(nonstable, 8)
        assert report.agrees
        assert len(report.points) == 9
