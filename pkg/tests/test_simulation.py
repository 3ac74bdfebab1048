"""
Testy symulacji systemu obsługi wyczerpującej.
"""

from fractions import Fraction

import numpy as np
import pytest

from polltri.dynamics import forward_map
from polltri.exceptions import InputError
from polltri.orbits import OrbitCertificate, OrbitPoint, find_orbits
from polltri.params import BoundaryPoint, DecisionPoints, SystemParams
from polltri.simulation import (ServiceKind, ServiceModel, SimulationSettings, PollingState,
                                SwitchRecord, TailClass, binomial_ci, busy_period_moments,
                                capture_index, chebyshev_bound, classify_tail,
                                convergence_experiment, growth_rate, initial_state,
                                no_zero_one_experiment, projection_deviation,
                                projection_perturbation_bound, replica_rng, run_busy_period,
                                run_replicas, serve_one, service_count_moments,
                                shortest_period, simulate, switch_epoch_moments,
                                threshold_decision, z_score)

SYMMETRIC = SystemParams.normalized(("0.45", "0.45", "0.45"))
HALF = DecisionPoints.uniform("1/2")
CLOCKWISE = OrbitCertificate(
    [OrbitPoint(side, Fraction(3686, 10000), Fraction(3686, 10000)) for side in (1, 2, 3)],
    (1, 2, 3), Fraction(1, 2), Fraction(1, 2))


def record(n, side, x, server=None, next_node=1):
    """Rekord przełączenia z zadanym ζ."""
    zeta = BoundaryPoint(side, x) if x is not None else None
    return SwitchRecord(0, n, 0.0, None, zeta, server or side, next_node, 6.0)


def servers(sides):
    """Rekordy z zadanym ciągiem opróżnianych węzłów."""
    return [record(n + 1, side, 0.5) for n, side in enumerate(sides)]


class TestServiceModel:
    """Testy rozkładów obsługi."""

    def test_exponential(self):
        """Testuje wariancję 1/μ² rozkładu wykładniczego."""
        model = ServiceModel.from_params(SystemParams.normalized(("0.5", "0.5", "0.5")))
        assert model.means == (1.0, 1.0, 1.0)
        assert model.variances == (1.0, 1.0, 1.0)

    def test_deterministic_total(self):
        """Testuje sumę czasów deterministycznych."""
        model = ServiceModel.from_params(SYMMETRIC, "deterministic")
        assert model.total(replica_rng(1, 0), 2, 7) == 7.0

    def test_gamma_zero_variance(self):
        """Testuje błąd rozkładu gamma o zerowej wariancji."""
        with pytest.raises(InputError):
            ServiceModel((ServiceKind.GAMMA,) * 3, (1.0, 1.0, 1.0), (0.0, 0.0, 0.0))

    def test_unknown_kind(self):
        """Testuje nieznany typ rozkładu."""
        with pytest.raises(ValueError):
            ServiceModel.from_params(SYMMETRIC, "uniform")


class TestRandomStreams:
    """Testy strumieni losowych replik."""

    def test_reproducible(self):
        """Testuje powtarzalność strumienia repliki."""
        assert replica_rng(5, 3).random() == replica_rng(5, 3).random()

    def test_independent(self):
        """Testuje różne strumienie dla różnych replik."""
        assert replica_rng(5, 0).random() != replica_rng(5, 1).random()


class TestThresholdDecision:
    """Testy reguły progowej w symulacji."""

    def test_below_and_above(self):
        """Testuje wybór ĵ i k̂."""
        rng = replica_rng(0, 0)
        assert threshold_decision(HALF, [0, 3, 1], 1, rng) == 2
        assert threshold_decision(HALF, [0, 1, 3], 1, rng) == 3

    def test_tie(self):
        """Testuje rzut monetą przy remisie."""
        rng = replica_rng(0, 0)
        chosen = {threshold_decision(HALF, [2, 0, 2], 2, rng) for _ in range(50)}
        assert chosen == {1, 3}

    def test_empty(self):
        """Testuje błąd dla pustego systemu."""
        with pytest.raises(InputError):
            threshold_decision(HALF, [0, 0, 0], 1, replica_rng(0, 0))

    def test_weights_match_points(self):
        """Testuje zgodność macierzy wag z punktami decyzyjnymi."""
        weights = [[0, 1, 3], [2, 0, 1], [1, 1, 0]]
        d = DecisionPoints.from_weights(weights)
        rng = np.random.default_rng(3)
        for _ in range(300):
            node = int(rng.integers(1, 4))
            queues = [int(v) for v in rng.integers(0, 20, size=3)]
            queues[node - 1] = 0
            j, k = node % 3 + 1, (node + 1) % 3 + 1
            row = weights[node - 1]
            if row[j - 1] * queues[j - 1] == row[k - 1] * queues[k - 1]:
                continue
            assert threshold_decision(weights, queues, node, rng) == \
                threshold_decision(d, queues, node, rng)

    def test_shares(self):
        """Testuje regułę na udziałach zmiennoprzecinkowych."""
        shares = np.array([0.0, 0.7, 0.3])
        assert threshold_decision(HALF, shares, 1, replica_rng(0, 0)) == 2


class TestBusyPeriod:
    """Testy okresów zajętości."""

    def test_serve_one(self):
        """Testuje pojedynczą obsługę."""
        model = ServiceModel.from_params(SYMMETRIC, "deterministic")
        state = serve_one(PollingState([2, 0, 0], 1), SYMMETRIC, model, replica_rng(1, 0))
        assert state.queues[0] >= 1
        assert state.log_clock == pytest.approx(0.0)

    def test_serve_empty(self):
        """Testuje błąd obsługi pustej kolejki."""
        model = ServiceModel.from_params(SYMMETRIC)
        with pytest.raises(InputError):
            serve_one(PollingState([0, 2, 0], 1), SYMMETRIC, model, replica_rng(1, 0))

    def test_empties_server_queue(self):
        """Testuje opróżnienie kolejki i rekord przełączenia."""
        model = ServiceModel.from_params(SYMMETRIC)
        state, rec = run_busy_period(PollingState([50, 10, 20], 1), SYMMETRIC, model,
                                     replica_rng(2, 0), HALF, n=1)
        assert rec.queues[0] == 0
        assert rec.server == 1
        assert rec.next_node in (2, 3)
        assert state.server == rec.next_node
        assert rec.services >= 50

    def test_empty_system(self):
        """Testuje start z pustego systemu."""
        model = ServiceModel.from_params(SYMMETRIC)
        _, rec = run_busy_period(PollingState([0, 0, 0], 1), SYMMETRIC, model,
                                 replica_rng(4, 0))
        assert rec.services >= 1

    def test_moments_monte_carlo(self):
        """Testuje E B = c/(μ(1−ρ)) i E T_c = c/(1−ρ) metodą Monte Carlo."""
        params = SystemParams.normalized(("0.5", "0.45", "0.45"))
        model = ServiceModel.from_params(params)
        durations, counts = [], []
        for replica in range(200):
            _, rec = run_busy_period(PollingState([1000, 0, 0], 1), params, model,
                                     replica_rng(7, replica))
            durations.append(10 ** rec.log10_tau)
            counts.append(rec.services)
        mean_b, var_b = busy_period_moments(params, model, 1, 1000)
        mean_t, var_t = service_count_moments(params, model, 1, 1000)
        assert mean_b == pytest.approx(2000.0)
        assert var_b == pytest.approx(12000.0)
        assert var_t == pytest.approx(6000.0)
        assert abs(z_score(durations, mean_b)) < 4
        assert abs(z_score(counts, mean_t)) < 4

    @pytest.mark.parametrize("kind, sigma2", [
        ("exponential", (1, 1, 1)),
        ("deterministic", (1, 1, 1)),
        ("gamma", ("2", "2", "2")),
    ])
    def test_moments_service_kinds(self, kind, sigma2):
        """Testuje średnie i wariancje B oraz T_c dla różnych rozkładów obsługi."""
        params = SystemParams.normalized(("0.5", "0.45", "0.45"), sigma2)
        model = ServiceModel.from_params(params, kind)
        durations, counts = [], []
        for replica in range(400):
            _, rec = run_busy_period(PollingState([500, 0, 0], 1), params, model,
                                     replica_rng(13, replica))
            durations.append(10 ** rec.log10_tau)
            counts.append(rec.services)
        mean_b, var_b = busy_period_moments(params, model, 1, 500)
        mean_t, var_t = service_count_moments(params, model, 1, 500)
        assert abs(z_score(durations, mean_b)) < 4
        assert abs(z_score(counts, mean_t)) < 4
        assert np.var(durations, ddof=1) == pytest.approx(var_b, rel=0.3)
        assert np.var(counts, ddof=1) == pytest.approx(var_t, rel=0.3)


class TestSwitchMoments:
    """Testy momentów przyrostów."""

    def test_means(self):
        """Testuje średni przyrost 0.45·1000/0.55."""
        model = ServiceModel.from_params(SYMMETRIC)
        mean, cov = switch_epoch_moments(SYMMETRIC, model, 1, 1000)
        assert mean[0] == -1000
        assert mean[1] == pytest.approx(818.1818, rel=1e-6)
        assert cov[0, 0] == 0
        assert np.allclose(cov, cov.T)

    def test_chebyshev_decreasing(self):
        """Testuje malejące ograniczenie Czebyszewa."""
        model = ServiceModel.from_params(SYMMETRIC)
        assert chebyshev_bound(SYMMETRIC, model, 2, 1, 10 ** 6) < \
            chebyshev_bound(SYMMETRIC, model, 2, 1, 10 ** 4)

    def test_switch_epoch_empirical(self):
        """Testuje dryf, kowariancje przyrostów i ograniczenie Czebyszewa na próbie."""
        model = ServiceModel.from_params(SYMMETRIC)
        start = [1000, 200, 300]
        increments = []
        for replica in range(400):
            _, rec = run_busy_period(PollingState(list(start), 1), SYMMETRIC, model,
                                     replica_rng(17, replica))
            increments.append([q - s for q, s in zip(rec.queues, start)])
        increments = np.array(increments, dtype=float)
        mean, cov = switch_epoch_moments(SYMMETRIC, model, 1, 1000)

        assert np.all(increments[:, 0] == -1000)
        for i in (1, 2):
            assert abs(z_score(increments[:, i], mean[i])) < 4
            assert np.var(increments[:, i], ddof=1) == pytest.approx(cov[i, i], rel=0.3)
        assert np.cov(increments[:, 1], increments[:, 2])[0, 1] == \
            pytest.approx(cov[1, 2], rel=0.35)

        # dryf W: ξⱼθ/(1−ρⱼ)
        drift = 1000 * float(SYMMETRIC.drift_constant) / (1 - 0.45)
        assert abs(z_score(increments.sum(axis=1), drift)) < 4

        deviation = np.abs(increments[:, 1] - mean[1])
        frequency = float(np.mean(deviation > 1000 ** (2 / 3)))
        assert frequency <= chebyshev_bound(SYMMETRIC, model, 2, 1, 1000)

    def test_projection_deviation_bound(self):
        """Testuje odchylenie ζ od φ(ζ) względem 2u^(−1/3) na przebiegu."""
        model = ServiceModel.from_params(SYMMETRIC)
        records = simulate(SYMMETRIC, model, HALF, ([60000, 30000, 10000], 1), 30, seed=5)
        checked = 0
        for previous, current in zip(records, records[1:]):
            u = previous.queues[previous.next_node - 1]
            if u < 1000:
                continue
            checked += 1
            assert projection_deviation(SYMMETRIC, previous, current) <= \
                projection_perturbation_bound(u)
        assert checked > 20

    def test_projection_deviation(self):
        """Testuje zerowe odchylenie dla rekordu zgodnego z φ."""
        start = BoundaryPoint(1, Fraction(1, 3))
        image = forward_map(SYMMETRIC, 2, start)
        previous = SwitchRecord(0, 1, 0.0, None, start, 1, 2, 6.0)
        current = SwitchRecord(0, 2, 0.0, None, image, 2, 3, 6.0)
        assert projection_deviation(SYMMETRIC, previous, current) == 0

    def test_growth_rate(self):
        """Testuje ν = 7/44 w przypadku symetrycznym."""
        assert growth_rate(SYMMETRIC, HALF) == pytest.approx(7 / 44)


class TestSimulate:
    """Testy przebiegu symulacji."""

    def test_reproducible(self):
        """Testuje powtarzalność przy tym samym ziarnie i replice."""
        model = ServiceModel.from_params(SYMMETRIC)
        first = simulate(SYMMETRIC, model, HALF, ([300, 100, 50], 1), 20, seed=9)
        second = simulate(SYMMETRIC, model, HALF, ([300, 100, 50], 1), 20, seed=9)
        assert [r.queues for r in first] == [r.queues for r in second]
        assert [r.n for r in first] == list(range(1, 21))

    def test_diffusion_regime(self):
        """Testuje przejście do reżimu dyfuzyjnego i wzrost W."""
        model = ServiceModel.from_params(SYMMETRIC)
        records = simulate(SYMMETRIC, model, HALF, ([300, 100, 50], 1), 60, seed=2,
                           diffusion_threshold=100)
        assert all(r.queues is None and r.services is None for r in records)
        assert records[-1].log10_w > records[0].log10_w
        assert all(isinstance(r.zeta, BoundaryPoint) for r in records)

    def test_invalid_start(self):
        """Testuje błędny stan początkowy."""
        model = ServiceModel.from_params(SYMMETRIC)
        with pytest.raises(InputError):
            simulate(SYMMETRIC, model, HALF, ([-1, 2, 3], 1), 5, seed=1)

    def test_initial_state(self):
        """Testuje stan startowy w kierunku punktu brzegu."""
        queues, server = initial_state(HALF, 1000, replica_rng(0, 0),
                                       BoundaryPoint(1, Fraction(1, 4)))
        assert queues == [0, 750, 250]
        assert server == 2

    def test_parallel_matches_serial(self):
        """Testuje identyczne przebiegi replik dla jobs=1 i jobs=2."""
        model = ServiceModel.from_params(SYMMETRIC)
        settings = SimulationSettings(n_switches=15)
        serial = run_replicas(SYMMETRIC, model, HALF, 1000, 3, seed=21, settings=settings)
        parallel = run_replicas(SYMMETRIC, model, HALF, 1000, 3, seed=21, settings=settings,
                                jobs=2)
        assert serial == parallel
        assert [records[0].replica for records in serial] == [0, 1, 2]

    def test_diffusion_summary(self):
        """Testuje opis progu dyfuzyjnego i ograniczenia błędu w raporcie."""
        summary = SimulationSettings(diffusion_threshold=1e9).diffusion_summary()
        assert summary["threshold"] == 1e9
        assert summary["projection_error_bound"] == pytest.approx(2e-3)
        assert summary["projection_error_bound"] == projection_perturbation_bound(1e9)


class TestCapture:
    """Testy przechwycenia przez orbitę."""

    def test_capture(self):
        """Testuje pierwsze okno 3m rekordów przy orbicie."""
        records = [record(n, 1, Fraction(9, 10)) for n in range(1, 6)]
        records += [record(5 + k, (1, 2, 3)[k % 3], Fraction(3687, 10000)) for k in range(1, 10)]
        assert capture_index(records, [CLOCKWISE], eps=1e-3) == (0, 14)

    def test_no_capture(self):
        """Testuje brak przechwycenia."""
        records = [record(n, 1 + n % 3, Fraction(1, 2)) for n in range(1, 30)]
        assert capture_index(records, [CLOCKWISE], eps=1e-3) == (None, None)

    def test_experiment_from_runs(self):
        """Testuje raport zbieżności z gotowych przebiegów."""
        captured = [record(k + 1, (1, 2, 3)[k % 3], Fraction(3686, 10000)) for k in range(9)]
        missed = [record(k + 1, 1, Fraction(1, 2)) for k in range(9)]
        report = convergence_experiment(SYMMETRIC, ServiceModel.from_params(SYMMETRIC), HALF,
                                        [CLOCKWISE], 1000, 2, 0, runs=[captured, missed])
        assert report.captured == 1
        assert report.fraction == 0.5
        data = report.to_dict()
        assert data["per_orbit"] == {"0": 1}
        assert data["ci95"][0] < 0.5 < data["ci95"][1]

    def test_simulated_capture(self):
        """Testuje przechwycenie przebiegów przez orbity dla d = 1/2."""
        orbits = find_orbits(SYMMETRIC, HALF)
        settings = SimulationSettings(n_switches=150, eps_cap=1e-2)
        report = convergence_experiment(SYMMETRIC, ServiceModel.from_params(SYMMETRIC), HALF,
                                        orbits, 10 ** 5, 3, seed=2024, settings=settings)
        assert report.captured == 3
        assert all(o.capture is not None for o in report.outcomes)

    @pytest.mark.slow
    def test_capture_rate_full_scale(self):
        """Testuje przechwycenie co najmniej 95% z 200 replik przy w0 = 10⁵."""
        orbits = find_orbits(SYMMETRIC, HALF)
        settings = SimulationSettings(n_switches=150, eps_cap=1e-2)
        report = convergence_experiment(SYMMETRIC, ServiceModel.from_params(SYMMETRIC), HALF,
                                        orbits, 10 ** 5, 200, seed=2024, settings=settings,
                                        jobs=4)
        assert len(report.outcomes) == 200
        assert report.fraction >= 0.95

    @pytest.mark.slow
    def test_capture_grows_with_load(self):
        """Testuje, że przechwycenie nie słabnie i nie opóźnia się przy większym w0."""
        orbits = find_orbits(SYMMETRIC, HALF)
        model = ServiceModel.from_params(SYMMETRIC)
        settings = SimulationSettings(n_switches=150, eps_cap=1e-2)
        reports = [convergence_experiment(SYMMETRIC, model, HALF, orbits, w0, 200, seed=77,
                                          settings=settings, jobs=4)
                   for w0 in (10, 10 ** 5)]
        assert reports[0].fraction <= reports[1].fraction
        assert reports[1].captured > 0
        if reports[0].captured:
            medians = [np.median([o.capture for o in r.outcomes if o.capture is not None])
                       for r in reports]
            assert medians[1] <= medians[0]


class TestBinomial:
    """Testy przedziałów Cloppera–Pearsona."""

    def test_zero_successes(self):
        """Testuje przedział dla zera sukcesów."""
        low, high = binomial_ci(0, 10)
        assert low == 0.0
        assert high == pytest.approx(0.3085, abs=1e-4)

    def test_half(self):
        """Testuje przedział zawierający 1/2."""
        low, high = binomial_ci(5, 10)
        assert low < 0.5 < high

    def test_no_trials(self):
        """Testuje pustą próbę."""
        assert binomial_ci(0, 0) == (0.0, 1.0)


class TestTailClass:
    """Testy klasyfikacji końcowych fragmentów tras."""

    def test_locked(self):
        """Testuje cykl (1, 3, 2)."""
        assert classify_tail(servers([3, 2, 1] * 20), tail=30) is TailClass.LOCKED_PERIOD3

    def test_clockwise_other(self):
        """Testuje cykl (1, 2, 3) jako inny."""
        assert classify_tail(servers([1, 2, 3] * 20), tail=30) is TailClass.OTHER

    def test_no_short_period(self):
        """Testuje ciąg Thuego–Morse'a bez krótkiego okresu."""
        sides = [1 + bin(k).count("1") % 2 for k in range(200)]
        assert classify_tail(servers(sides), tail=100, max_period=12) is \
            TailClass.NO_SHORT_PERIOD

    def test_shortest_period(self):
        """Testuje najkrótszy okres."""
        assert shortest_period([1, 2, 1, 2, 1], 3) == 2
        assert shortest_period([1, 2, 3, 1], 2) is None

    def test_experiment_from_runs(self):
        """Testuje liczności klas eksperymentu."""
        runs = [servers([1, 3, 2] * 10), servers([1, 2] * 15)]
        settings = SimulationSettings(tail=20)
        report = no_zero_one_experiment(SYMMETRIC, ServiceModel.from_params(SYMMETRIC), HALF,
                                        2, 30, 0, settings=settings, runs=runs)
        data = report.to_dict()
        assert data["counts"] == {"locked_period3": 1, "no_short_period": 0, "other": 1}
        assert set(data["ci95"]) == set(data["counts"])

    def test_control_run(self):
        """Testuje przebieg kontrolny dla d = 1/2: wszystkie repliki kończą na cyklu 3."""
        settings = SimulationSettings(tail=60)
        report = no_zero_one_experiment(SYMMETRIC, ServiceModel.from_params(SYMMETRIC), HALF,
                                        4, 200, seed=3, w0=10 ** 5, settings=settings)
        counts = report.to_dict()["counts"]
        assert report.replicas == 4
        assert counts["no_short_period"] == 0
        assert counts["locked_period3"] + counts["other"] == 4
