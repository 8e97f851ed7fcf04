"""Tests for the see-saw Bell-value optimizer."""

import math

import numpy as np
import pytest

from ghz_robustness.bell_operator import bell_value, build_mk, quantum_bound
from ghz_robustness.channels_states import (
    ChannelKind,
    DimensionMismatchError,
    NoiseSpec,
    decohered_ghz,
    expectation,
    ghz,
)
from ghz_robustness.config import OptimizerConfig
from ghz_robustness.correlations import closed_form_bell_value
from ghz_robustness.optimizer import max_bell, seesaw_step
from ghz_robustness.observables import SettingsTable, random_table

HALF_PI = math.pi / 2

DEPOLARIZING = ChannelKind.DEPOLARIZING
DEPHASING = ChannelKind.DEPHASING
DISSIPATION = ChannelKind.DISSIPATION


def _dense_value(table: SettingsTable, noise: NoiseSpec | None) -> float:
    rho = decohered_ghz(table.n, noise)
    return bell_value(build_mk(table.n), lambda word: expectation(rho, table.resolve(word)))


def _optimal_chsh_table() -> SettingsTable:
    return SettingsTable.from_angles(
        [
            [[HALF_PI, 0.0], [HALF_PI, HALF_PI]],
            [[HALF_PI, -math.pi / 4], [HALF_PI, math.pi / 4]],
        ]
    )


class TestPureState:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_reaches_quantum_bound(self, n):
        """Pure GHZ reaches 2^((n-1)/2)."""
        report = max_bell(n, None)

        assert report.converged
        assert report.best_value == pytest.approx(2 ** ((n - 1) / 2), abs=1e-6)

    def test_report_fields(self, fast_config):
        report = max_bell(3, None, fast_config)

        assert report.n == 3
        assert report.channel == "none"
        assert report.p is None
        assert report.starts_used == fast_config.starts
        assert len(report.iterations) == fast_config.starts
        assert report.seed == fast_config.seed


class TestNoisyMaxima:
    def test_depolarizing_two_qubits(self, fast_config):
        """(1-p)^2 sqrt(2) at p = 0.1."""
        report = max_bell(2, NoiseSpec(kind=DEPOLARIZING, p=0.1), fast_config)

        assert report.best_value == pytest.approx(0.81 * math.sqrt(2), abs=1e-6)

    def test_dephasing_two_qubits(self, fast_config):
        """sqrt(1 + (1-p)^4) at p = 0.5."""
        report = max_bell(2, NoiseSpec(kind=DEPHASING, p=0.5), fast_config)

        assert report.best_value == pytest.approx(math.sqrt(1.0625), abs=1e-5)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_complete_dissipation_returns_to_bound(self, n, fast_config):
        report = max_bell(n, NoiseSpec(kind=DISSIPATION, p=1.0), fast_config)

        assert report.best_value == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("p", [0.1, 0.2, 0.3])
    def test_depolarizing_scaling(self, p, fast_config):
        """max_bell(depolarizing, p) = (1-p)^n max_bell(none)."""
        pure = max_bell(3, None, fast_config).best_value
        noisy = max_bell(3, NoiseSpec(kind=DEPOLARIZING, p=p), fast_config).best_value

        assert noisy == pytest.approx((1 - p) ** 3 * pure, abs=1e-6)

    @pytest.mark.parametrize("n", [3, 5])
    def test_odd_dephasing_scaling(self, n, fast_config):
        pure = max_bell(n, None, fast_config).best_value
        noisy = max_bell(n, NoiseSpec(kind=DEPHASING, p=0.15), fast_config).best_value

        assert noisy == pytest.approx(0.85**n * pure, abs=1e-6)

    @pytest.mark.parametrize("p", [0.9, 0.99, 0.999])
    def test_even_dephasing_persists_two_qubits(self, p):
        """Violation survives strong dephasing: sqrt(1 + (1-p)^4) > 1."""
        report = max_bell(2, NoiseSpec(kind=DEPHASING, p=p))

        assert report.best_value > 1.0
        assert report.best_value == pytest.approx(math.sqrt(1 + (1 - p) ** 4), abs=1e-5)

    @pytest.mark.parametrize("p", [0.3, 0.5, 0.9])
    def test_four_qubit_dephasing_attains_bound(self, p):
        """Past 1 - 2^(-3/8) the best value is the local bound itself, not more."""
        report = max_bell(4, NoiseSpec(kind=DEPHASING, p=p))

        assert report.best_value == pytest.approx(1.0, abs=1e-9)
        assert report.best_value <= 1.0 + 1e-14

    def test_four_qubit_dephasing_violates_before_crossing(self):
        """Equatorial settings give 2^(3/2) (1-p)^4 while that exceeds 1."""
        report = max_bell(4, NoiseSpec(kind=DEPHASING, p=0.2))

        assert report.best_value > 1.0
        assert report.best_value >= 2**1.5 * 0.8**4 - 1e-9

    @pytest.mark.parametrize(
        ("n", "kind", "p"),
        [(2, DEPHASING, 0.3), (3, DISSIPATION, 0.2), (4, DEPOLARIZING, 0.05), (5, DEPHASING, 0.0)],
    )
    def test_never_exceeds_quantum_bound(self, n, kind, p, fast_config):
        report = max_bell(n, NoiseSpec(kind=kind, p=p), fast_config)

        assert 0.0 <= report.best_value <= quantum_bound(n) + 1e-9


class TestReportConsistency:
    @pytest.mark.parametrize(
        "noise",
        [None, NoiseSpec(kind=DISSIPATION, p=0.35), NoiseSpec(kind=DEPHASING, p=0.6)],
    )
    def test_best_value_matches_settings(self, noise, fast_config):
        """Reported value equals the Bell value at the reported settings on both paths."""
        report = max_bell(3, noise, fast_config)
        table = report.best_settings

        closed = closed_form_bell_value(build_mk(3), table, noise)
        assert report.best_value == pytest.approx(closed, abs=1e-10)
        assert report.best_value == pytest.approx(_dense_value(table, noise), abs=1e-10)

    def test_reproducible(self, fast_config):
        noise = NoiseSpec(kind=DISSIPATION, p=0.3)

        first = max_bell(3, noise, fast_config)
        second = max_bell(3, noise, fast_config)

        assert first == second

    def test_different_seed_same_optimum(self, fast_config):
        other = fast_config.model_copy(update={"seed": 7})
        noise = NoiseSpec(kind=DEPOLARIZING, p=0.2)

        assert max_bell(2, noise, other).best_value == pytest.approx(
            max_bell(2, noise, fast_config).best_value, abs=1e-6
        )

    def test_precomputed_state(self, fast_config):
        noise = NoiseSpec(kind=DEPHASING, p=0.4)
        rho = decohered_ghz(2, noise, method="channelwise")

        report = max_bell(2, noise, fast_config, rho=rho)

        assert report.best_value == pytest.approx(math.sqrt(1 + 0.6**4), abs=1e-6)

    def test_non_convergence_is_reported(self):
        """A single sweep from random starts cannot meet a 1e-12 tolerance."""
        config = OptimizerConfig(starts=4, max_sweeps=1, polish=False)

        report = max_bell(4, None, config)

        assert report.converged is False
        assert report.iterations == (1, 1, 1, 1)


class TestPreconditions:
    def test_party_count_range(self):
        with pytest.raises(ValueError, match="Party count"):
            max_bell(1, None)

        with pytest.raises(ValueError, match="Party count"):
            max_bell(13, None)

    def test_state_size_must_match(self, fast_config):
        with pytest.raises(DimensionMismatchError):
            max_bell(3, None, fast_config, rho=ghz(2))


class TestSeesawStep:
    def test_single_sweep_increases_value(self):
        """One pass over both parties raises the value from 100 random starts."""
        rho = ghz(2)
        expansion = build_mk(2)
        rng = np.random.default_rng(11)
        for _ in range(100):
            table = random_table(2, rng)
            start = closed_form_bell_value(expansion, table, None)
            previous = start
            for party in range(2):
                table = seesaw_step(table, rho, expansion, party)
                current = closed_form_bell_value(expansion, table, None)
                assert current >= previous - 1e-12
                previous = current
            assert previous > start

    def test_monotone_under_noise(self, rng):
        noise = NoiseSpec(kind=DISSIPATION, p=0.4)
        rho = decohered_ghz(3, noise)
        expansion = build_mk(3)
        table = random_table(3, rng)
        previous = closed_form_bell_value(expansion, table, noise)
        for _ in range(5):
            for party in range(3):
                table = seesaw_step(table, rho, expansion, party)
                current = closed_form_bell_value(expansion, table, noise)
                assert current >= previous - 1e-12
                previous = current

    def test_optimal_table_is_fixed_point(self):
        table = _optimal_chsh_table()

        for party in range(2):
            updated = seesaw_step(table, ghz(2), build_mk(2), party)
            np.testing.assert_allclose(updated.vectors(), table.vectors(), atol=1e-12)

    def test_zero_field_keeps_settings(self, rng):
        """Maximally mixed state has no preferred direction."""
        rho = decohered_ghz(2, NoiseSpec(kind=DEPOLARIZING, p=1.0))
        table = random_table(2, rng)

        assert seesaw_step(table, rho, build_mk(2), 0) == table

    def test_dimension_checks(self, rng):
        with pytest.raises(DimensionMismatchError):
            seesaw_step(random_table(3, rng), ghz(2), build_mk(2), 0)

        with pytest.raises(IndexError, match="out of range"):
            seesaw_step(random_table(2, rng), ghz(2), build_mk(2), 2)
