"""
End-to-end tests of the CLI on the constant wave of [-1, 1].

Validates:
- solve -> spectrum -> evolve writes its files and exits 0
- Identical invocations write identical profiles
- Configuration errors exit with code 2
"""

import json

import pandas as pd
import pytest
from click.testing import CliRunner

from src.presentation.cli.main import EXIT_OK, EXIT_USAGE, cli


def _invoke(*args):
    return CliRunner().invoke(cli, ["--jobs", "1", *args])


@pytest.fixture
def profile_path(tmp_path):
    path = tmp_path / "profile.json"
    result = _invoke("solve", "--alpha", "1", "--lambda", "2", "--n", "32", "--seeds", "2", "--out", str(path))
    assert result.exit_code == EXIT_OK, result.output
    return path


class TestPipeline:
    """Test suite for the solve / spectrum / evolve chain."""

    def test_solve(self, profile_path):
        payload = json.loads(profile_path.read_text())

        assert payload["omega"] == pytest.approx(1.0, abs=1e-8)
        assert payload["N"] == 32
        assert (profile_path.parent / "profile_diagnostics.json").exists()

    def test_profile_id_is_deterministic(self, profile_path):
        first = json.loads(profile_path.read_text())["profile_id"]
        result = _invoke("solve", "--alpha", "1", "--lambda", "2", "--n", "32", "--seeds", "2", "--out", str(profile_path))
        second = json.loads(profile_path.read_text())["profile_id"]

        assert result.exit_code == EXIT_OK
        assert first == second

    def test_spectrum(self, profile_path, tmp_path):
        out = tmp_path / "spectrum.json"
        result = _invoke("spectrum", "--profile", str(profile_path), "--n-eigs", "3", "--out", str(out))

        assert result.exit_code == EXIT_OK, result.output
        assert "Verdict: " in result.output
        assert json.loads(out.read_text())["n_neg_plus"] == 1

    def test_evolve(self, profile_path, tmp_path):
        out = tmp_path / "run.csv"
        result = _invoke(
            "--seed", "3", "evolve", "--profile", str(profile_path), "--equation", "nls", "--delta", "1e-3",
            "--t-final", "0.05", "--dt", "1e-3", "--record-every", "10", "--out", str(out),
        )

        assert result.exit_code == EXIT_OK, result.output
        frame = pd.read_csv(out)
        assert len(frame) == 6
        assert frame["distance"].max() < 1e-2


class TestUsageErrors:
    """Test suite for exit code 2."""

    def test_missing_lambda(self, tmp_path):
        result = _invoke("solve", "--alpha", "1", "--out", str(tmp_path / "p.json"))

        assert result.exit_code == EXIT_USAGE
        assert not (tmp_path / "p.json").exists()

    def test_bad_config_file(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text("[1, 2]")
        result = _invoke("verify", "--config", str(config))

        assert result.exit_code == EXIT_USAGE

    def test_missing_profile_file(self, tmp_path):
        result = _invoke("spectrum", "--profile", str(tmp_path / "nope.json"))

        assert result.exit_code == EXIT_USAGE
