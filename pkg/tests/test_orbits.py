"""
Testy silnika orbit.
"""

import math
from fractions import Fraction

import pytest

from polltri.dynamics import BranchPolicy, corner_image, forward_map, step
from polltri.exceptions import NotFiniteP
from polltri.orbits import (ChainEnd, IntervalSet, OrbitCertificate, OrbitPoint, Stability,
                            _dedup, basin_sample, certificate_from_enclosure,
                            escape_certificate, exact_orbit, find_orbits,
                            iterate_boundary_sets, preimage_tree, stability_classify)
from polltri.params import NODES, BoundaryPoint, DecisionPoints, SystemParams, next_node
from polltri.symbolic import BitCode, FiniteBits, decode

SYMMETRIC = SystemParams.normalized(("0.45", "0.45", "0.45"))
HALF = DecisionPoints.uniform("1/2")
CLOCKWISE_X = (27 - math.sqrt(477)) / 14
ANTICLOCKWISE_X = (-13 + math.sqrt(477)) / 14


@pytest.fixture(scope="module")
def symmetric_orbits():
    """Orbity konfiguracji symetrycznej."""
    return find_orbits(SYMMETRIC, HALF)


class TestIntervalSet:
    """Testy zbiorów przedziałów."""

    def test_merge(self):
        """Testuje scalanie nachodzących przedziałów."""
        pieces = [(1, Fraction(0), Fraction(1, 2)), (1, Fraction(1, 3), Fraction(2, 3)),
                  (2, Fraction(1, 4), Fraction(1, 2))]
        result = IntervalSet.from_pieces(pieces)
        assert result.intervals[1] == [(Fraction(0), Fraction(2, 3))]
        assert result.count == 2
        assert result.total_length() == Fraction(11, 12)

    def test_contains(self):
        """Testuje przynależność punktu."""
        result = IntervalSet.from_pieces([(3, Fraction(1, 4), Fraction(1, 2))])
        assert result.contains(BoundaryPoint(3, Fraction(1, 2)))
        assert not result.contains(BoundaryPoint(2, Fraction(1, 3)))

    def test_nested(self):
        """Testuje zstępujący ciąg zbiorów A^t."""
        sets = iterate_boundary_sets(SYMMETRIC, HALF, 6)
        assert len(sets) == 7
        for outer, inner in zip(sets, sets[1:]):
            assert inner.is_subset_of(outer)
            assert inner.total_length() <= outer.total_length()


class TestEscapeCertificate:
    """Testy certyfikatu skończoności P."""

    def test_symmetric(self):
        """Testuje FiniteP(2) dla konfiguracji symetrycznej."""
        cert = escape_certificate(SYMMETRIC, HALF, 64)
        assert cert.finite
        assert cert.t0 == 2
        assert cert.label == "FiniteP(2)"

    def test_near_corner(self):
        """Testuje FiniteP(1) dla punktów decyzyjnych przy narożniku."""
        d = DecisionPoints.uniform("1/1000")
        cert = escape_certificate(SYMMETRIC, d, 64)
        assert cert.t0 == 1

    def test_undecided_label(self):
        """Testuje etykietę Undecided."""
        cert = escape_certificate(SYMMETRIC, HALF, 1)
        assert not cert.finite
        assert cert.label == "Undecided"


class TestPreimageTree:
    """Testy łańcuchów przeciwobrazów."""

    def test_symmetric_chains(self):
        """Testuje kończenie się łańcuchów nielegalnym przeciwobrazem."""
        tree = preimage_tree(SYMMETRIC, HALF, 16)
        assert tree.all_terminated
        for chain in tree.chains.values():
            assert chain.termination is ChainEnd.ILLEGITIMATE
            assert chain.depth <= 2

    def test_points_unique(self):
        """Testuje brak powtórzeń w zbiorze P."""
        points = preimage_tree(SYMMETRIC, HALF, 16).points()
        for k, point in enumerate(points):
            assert not any(point.same_point(other) for other in points[k + 1:])


class TestFindOrbits:
    """Testy wyznaczania orbit."""

    def test_two_orbits(self, symmetric_orbits):
        """Testuje dwie orbity okresu 3."""
        assert len(symmetric_orbits) == 2
        assert sorted(cert.canonical_cycle() for cert in symmetric_orbits) == \
            [(1, 2, 3), (1, 3, 2)]
        assert all(cert.period == 3 for cert in symmetric_orbits)

    def test_orbit_values(self, symmetric_orbits):
        """Testuje punkty orbit: x* i 1 − x* na każdym boku."""
        for cert in symmetric_orbits:
            expected = CLOCKWISE_X if cert.direction == "clockwise" else ANTICLOCKWISE_X
            for point in cert.points:
                assert abs(float(point.midpoint.x) - expected) < 1e-12
                assert point.hi - point.lo <= Fraction(1, 10 ** 30)

    def test_stability(self, symmetric_orbits):
        """Testuje stabilność i kontrakcję < 1."""
        for cert in symmetric_orbits:
            assert cert.stability is Stability.STABLE
            assert cert.contraction < 1
            assert cert.lipschitz < 1
            assert not cert.contains_decision_point

    def test_verify(self, symmetric_orbits):
        """Testuje dokładną weryfikację certyfikatów."""
        assert all(cert.verify(SYMMETRIC, HALF) for cert in symmetric_orbits)

    def test_verify_rejects_wrong_side(self, symmetric_orbits):
        """Testuje odrzucenie certyfikatu z przestawionymi punktami."""
        cert = symmetric_orbits[0]
        broken = OrbitCertificate(list(reversed(cert.points)), cert.node_cycle[::-1],
                                  cert.contraction, cert.lipschitz)
        assert not broken.verify(SYMMETRIC, HALF)

    def test_not_finite(self):
        """Testuje błąd przy nierozstrzygniętej skończoności P."""
        with pytest.raises(NotFiniteP):
            find_orbits(SYMMETRIC, HALF, t_max=1)

    def test_to_dict(self, symmetric_orbits):
        """Testuje rekord atlasu."""
        data = symmetric_orbits[0].to_dict()
        assert data["m"] == 3
        assert data["stability"] == "stable"
        assert len(data["points"]) == 3


class TestStabilityClassify:
    """Testy klasyfikacji stabilności."""

    def test_through_decision_odd(self):
        """Testuje orbitę nieparzystą przez punkt decyzyjny."""
        half = Fraction(1, 2)
        points = [OrbitPoint(1, half, half), OrbitPoint(2, Fraction(1, 3), Fraction(1, 3)),
                  OrbitPoint(3, Fraction(1, 3), Fraction(1, 3))]
        cert = OrbitCertificate(points, (1, 2, 3), Fraction(1, 2), Fraction(1, 2))
        assert stability_classify(cert, HALF) is Stability.UNSTABLE

    def test_through_decision_even(self):
        """Testuje orbitę parzystą przez punkt decyzyjny."""
        half = Fraction(1, 2)
        points = [OrbitPoint(1, half, half), OrbitPoint(2, Fraction(1, 3), Fraction(1, 3))]
        cert = OrbitCertificate(points, (1, 2), Fraction(1, 2), Fraction(1, 2))
        assert stability_classify(cert, HALF) is Stability.ONE_SIDED

    def test_expanding(self):
        """Testuje orbitę z kontrakcją ≥ 1."""
        points = [OrbitPoint(1, Fraction(1, 3), Fraction(1, 3))]
        cert = OrbitCertificate(points, (1,), Fraction(3, 2), Fraction(3, 2))
        assert stability_classify(cert, HALF) is Stability.UNSTABLE

    def test_rotation_through_decision_points(self):
        """Testuje orbitę 1→2→3 przechodzącą dokładnie przez punkty decyzyjne."""
        params = SystemParams.normalized(("4/7", "4/7", "4/7"))
        d = DecisionPoints.uniform("2/5")
        x = Fraction(2, 5)
        for side in NODES:
            result = step(params, d, BoundaryPoint(side, x))
            assert result.branched
            assert result.successors[0] == BoundaryPoint(next_node(side, 1), x)

        cert = exact_orbit(params, d, [BoundaryPoint(side, x) for side in NODES])
        assert cert.contains_decision_point
        assert cert.contraction < 1
        assert cert.stability is Stability.UNSTABLE

    def test_duplicate_prefers_exact_certificate(self):
        """Testuje, że otoczka tej samej orbity nie zastępuje certyfikatu dokładnego."""
        params = SystemParams.normalized(("4/7", "4/7", "4/7"))
        d = DecisionPoints.uniform("2/5")
        x = Fraction(2, 5)
        enclosed = certificate_from_enclosure(params, d, 1, x - Fraction(1, 100),
                                              x + Fraction(1, 100), [2, 3, 1])
        exact = exact_orbit(params, d, [BoundaryPoint(side, x) for side in NODES])
        assert enclosed.stability is Stability.STABLE

        for order in ([enclosed, exact], [exact, enclosed]):
            unique = _dedup(order)
            assert len(unique) == 1
            assert unique[0] is exact
            assert unique[0].stability is Stability.UNSTABLE


def _boundary_stages(params, t_max):
    stages = [{side: [corner_image(params, side)] for side in NODES}]
    for _ in range(t_max - 1):
        previous = stages[-1]
        stages.append({
            side: [forward_map(params, side, BoundaryPoint(source, x)).x
                   for source in (next_node(side, 1), next_node(side, 2))
                   for x in previous[source]]
            for side in NODES
        })
    return stages


class TestBoundaryStages:
    """Testy zbiorów punktów granicznych kolejnych etapów."""

    @pytest.mark.parametrize("rho", [("0.45", "0.45", "0.45"), ("0.4", "0.45", "0.35")])
    def test_nesting_and_interleaving(self, rho):
        """Testuje liczność 2^(t−1) i przeplatanie się etapów dla t ≤ 4."""
        params = SystemParams.normalized(rho)
        stages = _boundary_stages(params, 4)
        for side in NODES:
            earlier = [Fraction(0), Fraction(1)]
            for t, stage in enumerate(stages, start=1):
                points = sorted(stage[side])
                assert len(set(points)) == 2 ** (t - 1)
                assert not set(points) & set(earlier)
                earlier = sorted(earlier)
                for lo, hi in zip(earlier, earlier[1:]):
                    assert sum(1 for x in points if lo < x < hi) == 1
                earlier += points

    def test_stages_match_codes(self):
        """Testuje zgodność etapów z dekodowaniem kodów w1 długości t."""
        stages = _boundary_stages(SYMMETRIC, 4)
        for t, stage in enumerate(stages, start=1):
            for side in NODES:
                decoded = set()
                for k in range(2 ** (t - 1)):
                    word = tuple(int(b) for b in format(k, "b").zfill(t - 1)) if t > 1 else ()
                    code = BitCode(side, FiniteBits(word + (1,)))
                    decoded.add(decode(code, SYMMETRIC).lo)
                assert decoded == set(stage[side])


class TestBasinSample:
    """Testy próbkowania basenów."""

    def test_grid(self, symmetric_orbits):
        """Testuje przypisanie wszystkich startów siatki."""
        report = basin_sample(SYMMETRIC, HALF, grid=30, orbits=symmetric_orbits)
        assert len(report.assignments) == 30
        assert not report.unassigned
        assert set(report.counts()) <= {0, 1}

    def test_start_on_orbit(self, symmetric_orbits):
        """Testuje przechwycenie w zerowym kroku."""
        start = symmetric_orbits[0].points[0].midpoint
        report = basin_sample(SYMMETRIC, HALF, orbits=symmetric_orbits, starts=[start])
        assert report.assignments[0].orbit == 0
        assert report.assignments[0].steps == 0

    def test_branch_policy(self, symmetric_orbits):
        """Testuje start w punkcie decyzyjnym przy obu politykach."""
        start = [BoundaryPoint(1, Fraction(1, 2))]
        lower = basin_sample(SYMMETRIC, HALF, orbits=symmetric_orbits, starts=start,
                             branch_policy=BranchPolicy.LOWER)
        upper = basin_sample(SYMMETRIC, HALF, orbits=symmetric_orbits, starts=start,
                             branch_policy=BranchPolicy.UPPER)
        cycles = {symmetric_orbits[a.orbit].canonical_cycle()
                  for a in lower.assignments + upper.assignments}
        assert cycles == {(1, 2, 3), (1, 3, 2)}
