"""Tests for the command-line front end."""

import json

import pytest

from ghz_robustness import cli, correlations
from ghz_robustness.channels_states import ChannelKind
from ghz_robustness.config import OptimizerConfig
from ghz_robustness.schema_validation import SWEEP_COLUMNS

FAST = ["--starts", "16"]


def _usage_error(argv) -> int:
    with pytest.raises(SystemExit) as excinfo:
        cli.main(argv)
    return excinfo.value.code


@pytest.fixture
def unconverging(monkeypatch):
    """Force every optimization to stop after a single sweep."""
    monkeypatch.setattr(
        cli,
        "_optimizer_config",
        lambda args: OptimizerConfig(starts=2, max_sweeps=1, polish=False),
    )


class TestMaxbell:
    def test_pure_three_qubits(self, capsys):
        assert cli.main(["maxbell", "--n", "3", "--channel", "none", *FAST]) == 0

        out = capsys.readouterr().out
        assert "best value: 2.000000000" in out
        assert "converged:  true" in out
        assert out.count("party ") == 3

    def test_complete_dissipation(self, capsys):
        argv = ["maxbell", "--n", "2", "--channel", "dissipation", "--p", "1", *FAST]

        assert cli.main(argv) == 0
        assert "best value: 1.000000000" in capsys.readouterr().out

    def test_json_output(self, capsys):
        argv = ["maxbell", "--n", "2", "--channel", "depolarizing", "--p", "0.1", "--json", *FAST]

        assert cli.main(argv) == 0

        payload = json.loads(capsys.readouterr().out)
        assert set(payload) == {"n", "channel", "p", "max_bell", "settings", "converged", "seed"}
        assert payload["channel"] == "depolarizing"
        assert payload["p"] == 0.1
        assert payload["max_bell"] == pytest.approx(0.81 * 2**0.5, abs=1e-6)
        assert set(payload["settings"][0]) == {"theta", "theta_prime", "phi", "phi_prime"}
        assert len(payload["settings"]) == 2

    def test_json_pure_state_has_null_p(self, capsys):
        assert cli.main(["maxbell", "--n", "2", "--channel", "none", "--json", *FAST]) == 0

        assert json.loads(capsys.readouterr().out)["p"] is None

    def test_same_seed_same_output(self, capsys):
        argv = ["maxbell", "--n", "3", "--channel", "dephasing", "--p", "0.3", "--seed", "5", *FAST]

        cli.main(argv)
        first = capsys.readouterr().out
        cli.main(argv)

        assert capsys.readouterr().out == first

    @pytest.mark.parametrize(
        "argv",
        [
            ["maxbell", "--n", "2", "--channel", "badname", "--p", "0.1"],
            ["maxbell", "--n", "2", "--channel", "dephasing"],
            ["maxbell", "--n", "2", "--channel", "none", "--p", "0.1"],
            ["maxbell", "--n", "1", "--channel", "none"],
            ["maxbell", "--n", "2", "--channel", "dephasing", "--p", "1.5"],
            ["maxbell", "--n", "2", "--channel", "none", "--starts", "0"],
        ],
    )
    def test_invalid_flags_exit_2(self, argv, capsys):
        assert _usage_error(argv) == 2
        assert "usage:" in capsys.readouterr().err

    def test_non_convergence_exits_1(self, unconverging, capsys):
        assert cli.main(["maxbell", "--n", "3", "--channel", "none"]) == 1

        captured = capsys.readouterr()
        assert "converged:  false" in captured.out
        assert "Error: optimizer did not converge" in captured.err


class TestPmax:
    def test_depolarizing_two_qubits(self, capsys):
        assert cli.main(["pmax", "--n", "2", "--channel", "depolarizing", *FAST]) == 0

        out = capsys.readouterr().out
        assert "analytic:   0.159103585" in out
        assert "numeric:    0.159" in out
        assert "difference:" in out
        assert "outcome:    below the local bound" in out

    def test_two_qubit_dephasing_reports_cap(self, capsys):
        argv = ["pmax", "--n", "2", "--channel", "dephasing", "--scan-step", "0.05"]
        argv += ["--tol", "1e-3"]

        assert cli.main(argv) == 0

        out = capsys.readouterr().out
        assert "no threshold found below cap 0.999" in out
        assert "analytic:   not available" in out
        assert "outcome:    violation persists up to the cap" in out

    def test_four_qubit_dephasing_reports_tie(self, capsys):
        argv = ["pmax", "--n", "4", "--channel", "dephasing", "--scan-step", "0.05"]
        argv += ["--tol", "1e-3", *FAST]

        assert cli.main(argv) == 0

        out = capsys.readouterr().out
        assert "numeric:    0.22" in out
        assert "analytic:   not available" in out
        assert "outcome:    local bound attained, not exceeded" in out

    def test_json_output(self, capsys):
        argv = ["pmax", "--n", "2", "--channel", "dissipation", "--tol", "1e-3", "--json", *FAST]

        assert cli.main(argv) == 0

        payload = json.loads(capsys.readouterr().out)
        assert payload["p_max"] == pytest.approx(0.292893, abs=1e-3)
        assert payload["analytic_p_max"] == pytest.approx(1 - 2**-0.5)
        assert payload["bracket_verified"] is True
        assert payload["outcome"] == "below_bound"

    def test_tolerance_floor(self):
        assert _usage_error(["pmax", "--n", "2", "--channel", "dephasing", "--tol", "1e-9"]) == 2

    def test_none_channel_rejected(self):
        assert _usage_error(["pmax", "--n", "2", "--channel", "none"]) == 2

    def test_unconverged_search_exits_1(self, unconverging, capsys):
        assert cli.main(["pmax", "--n", "3", "--channel", "depolarizing"]) == 1
        assert "p=0.000000000" in capsys.readouterr().err


class TestSweep:
    def _argv(self, out, *extra):
        return [
            "sweep",
            "--n",
            "2",
            "--channel",
            "dephasing",
            "--p-min",
            "0",
            "--p-max",
            "1",
            "--steps",
            "11",
            "--out",
            str(out),
            *FAST,
            *extra,
        ]

    def test_writes_csv(self, tmp_path):
        out = tmp_path / "f.csv"

        assert cli.main(self._argv(out)) == 0

        lines = out.read_text(encoding="utf-8").split("\n")
        assert lines[0] == ",".join(SWEEP_COLUMNS)
        assert lines[-1] == ""
        rows = [line.split(",") for line in lines[1:-1]]
        assert len(rows) == 11
        assert rows[0] == ["dephasing", "2", "0.000000000", "1.414213562"]
        assert rows[-1] == ["dephasing", "2", "1.000000000", "1.000000000"]
        assert rows[5][2] == "0.500000000"
        assert rows[5][3] == f"{(1 + 0.5**4) ** 0.5:.9f}"

    def test_deterministic_bytes(self, tmp_path):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"

        cli.main(self._argv(first))
        cli.main(self._argv(second))

        assert first.read_bytes() == second.read_bytes()

    def test_invalid_range_exit_2(self, tmp_path):
        out = tmp_path / "f.csv"
        argv = self._argv(out)
        argv[argv.index("--p-min") + 1] = "0.8"
        argv[argv.index("--p-max") + 1] = "0.2"

        assert _usage_error(argv) == 2

    def test_too_few_steps_exit_2(self, tmp_path):
        argv = self._argv(tmp_path / "f.csv")
        argv[argv.index("--steps") + 1] = "1"

        assert _usage_error(argv) == 2

    def test_write_failure_exit_1(self, tmp_path, capsys):
        assert cli.main(self._argv(tmp_path)) == 1
        assert "Error: cannot write" in capsys.readouterr().err


class TestVerify:
    def test_smoke_scale_passes(self, capsys):
        assert cli.main(["verify", "--n-max", "2", "--trials", "5"]) == 0

        out = capsys.readouterr().out
        assert "max correlation deviation:" in out
        assert out.rstrip().endswith("PASS")

    def test_party_count_capped(self):
        assert _usage_error(["verify", "--n-max", "7"]) == 2

    def test_injected_bug_fails(self, monkeypatch, capsys):
        original = correlations._diagonal_weight

        def broken(n, noise):
            if noise is not None and noise.kind is ChannelKind.DISSIPATION:
                return (1.0 - (2.0 * noise.p - 1.0) ** n) / 2
            return original(n, noise)

        monkeypatch.setattr(correlations, "_diagonal_weight", broken)

        assert cli.main(["verify", "--n-max", "2", "--trials", "2"]) == 1

        out = capsys.readouterr().out
        assert "breach: check=correlation n=2 channel=dissipation" in out
        assert "settings_seed=" in out
        assert out.rstrip().endswith("FAIL")


class TestAmbient:
    def test_metrics_textfile_written(self, tmp_path, monkeypatch):
        target = tmp_path / "metrics" / "ghz.prom"
        monkeypatch.setenv("GHZ_METRICS_TEXTFILE", str(target))

        assert cli.main(["maxbell", "--n", "2", "--channel", "none", *FAST]) == 0

        assert "ghz_robustness_optimizer_runs_total" in target.read_text()

    def test_log_flags_override_environment(self, capsys):
        argv = ["--log-level", "DEBUG", "--log-format", "json", "maxbell", "--n", "2"]
        argv += ["--channel", "none", *FAST]

        assert cli.main(argv) == 0

        captured = capsys.readouterr()
        assert "max_bell_finished" in captured.err
        assert "max_bell_finished" not in captured.out
