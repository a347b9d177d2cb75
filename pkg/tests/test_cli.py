"""Tests for presets, the config file round trip, and the CLI contract."""

import json

import pytest

from noisymatch.cli import EXIT_INVARIANT, EXIT_OK, EXIT_PARSE, main
from noisymatch.config_io import (
    apply_overrides,
    canonical_json,
    config_hash,
    config_to_dict,
    dict_to_config,
)
from noisymatch.errors import ConfigError
from noisymatch.presets import fig1, fig2, noise_from_token, preset, split_seats


class TestPresets:
    def test_degenerate_single_college(self):
        config, _ = fig1(colleges=1)
        assert len(config.colleges) == 1
        assert config.colleges[0].capacity == 1000

    @pytest.mark.parametrize("colleges", [1, 2, 7, 10, 100])
    def test_total_seats_invariant(self, colleges):
        config, _ = fig1(colleges=colleges)
        assert config.total_capacity() == 1000

    def test_two_tier_seat_fractions(self):
        config, _ = fig2(colleges=20)
        seats = {}
        for college in config.colleges:
            seats.setdefault(college.coalition, []).append(college.capacity)
        assert sum(seats[1]) == 500 and all(s == 25 for s in seats[1])
        assert sum(seats[2]) == 1000 and all(s == 50 for s in seats[2])

    def test_noise_tokens(self):
        assert noise_from_token("none") is None
        assert noise_from_token("pareto").to_dict() == {
            "kind": "pareto",
            "shape": 2.0,
            "scale": 0.3,
        }
        with pytest.raises(ConfigError, match="noise"):
            noise_from_token("lognormal")

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="preset"):
            preset("fig3")

    def test_split_seats_sums(self):
        assert split_seats(10, 3) == [4, 3, 3]
        assert sum(split_seats(1000, 7)) == 1000


class TestConfigRoundTrip:
    def test_doc_round_trip_is_identity(self):
        config, plan = fig2(colleges=3, replications=2)
        doc = config_to_dict(config, plan)
        config2, plan2 = dict_to_config(json.loads(json.dumps(doc)))
        assert config_to_dict(config2, plan2) == doc

    def test_hash_ignores_key_order(self):
        config, plan = fig1(colleges=2, replications=1)
        doc = config_to_dict(config, plan)
        shuffled = json.loads(json.dumps(doc))
        shuffled = dict(reversed(list(shuffled.items())))
        assert config_hash(doc) == config_hash(shuffled)
        assert canonical_json(doc) == canonical_json(shuffled)

    def test_overrides(self):
        doc = {"a": {"b": 1}, "seed": 2}
        out = apply_overrides(doc, ["a.b=5", "seed=9", "tag=fast"])
        assert out["a"]["b"] == 5 and out["seed"] == 9 and out["tag"] == "fast"
        assert doc["a"]["b"] == 1  # original untouched
        with pytest.raises(ConfigError, match="key=value"):
            apply_overrides(doc, ["oops"])

    def test_missing_field_diagnostics(self):
        with pytest.raises(ConfigError, match="missing required field"):
            dict_to_config({"n_students": 10})


def run_cli(*argv):
    return main(list(argv))


class TestCliContract:
    def test_preset_run_writes_outputs(self, tmp_path):
        out = tmp_path / "run1"
        code = run_cli(
            "--preset", "fig1", "--colleges", "5", "--replications", "2",
            "--seed", "7", "--threads", "1", "--out-dir", str(out), "--emit-cutoffs",
        )
        assert code == EXIT_OK
        for name in ("curves.csv", "metrics.csv", "cutoffs.csv", "manifest.json"):
            assert (out / name).exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["master_seed"] == 7
        assert "config_hash" in manifest
        assert set(manifest["outputs"]) == {"curves.csv", "metrics.csv", "cutoffs.csv"}

    def test_same_seed_byte_identical(self, tmp_path):
        args = ("--preset", "fig1", "--colleges", "4", "--replications", "3",
                "--seed", "11", "--threads", "1", "--emit-cutoffs")
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli(*args, "--out-dir", str(a)) == EXIT_OK
        assert run_cli(*args, "--out-dir", str(b)) == EXIT_OK
        for name in ("curves.csv", "metrics.csv", "cutoffs.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_thread_count_does_not_change_output(self, tmp_path):
        base = ("--preset", "fig2", "--colleges", "3", "--replications", "4", "--seed", "5")
        one, many = tmp_path / "t1", tmp_path / "t8"
        assert run_cli(*base, "--threads", "1", "--out-dir", str(one)) == EXIT_OK
        assert run_cli(*base, "--threads", "8", "--out-dir", str(many)) == EXIT_OK
        assert (one / "curves.csv").read_bytes() == (many / "curves.csv").read_bytes()
        assert (one / "metrics.csv").read_bytes() == (many / "metrics.csv").read_bytes()

    def test_config_file_run(self, tmp_path):
        config, plan = fig1(colleges=3, replications=2)
        doc = config_to_dict(config, plan)
        path = tmp_path / "econ.json"
        path.write_text(json.dumps(doc))
        out = tmp_path / "run"
        assert run_cli("--config", str(path), "--out-dir", str(out), "--threads", "1") == EXIT_OK
        assert (out / "curves.csv").exists()

    def test_parse_errors_exit_two(self, tmp_path):
        assert run_cli("--preset", "nope", "--out-dir", str(tmp_path)) == EXIT_PARSE
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run_cli("--config", str(bad), "--out-dir", str(tmp_path)) == EXIT_PARSE
        assert run_cli("--bogus-flag") == EXIT_PARSE

    def test_invariant_violation_exits_three(self, tmp_path):
        code = run_cli(
            "--preset", "fig1", "--set", "n_students=100",
            "--out-dir", str(tmp_path / "x"), "--threads", "1",
        )
        assert code == EXIT_INVARIANT

    def test_effective_config_recorded(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            "--preset", "fig1", "--colleges", "2", "--replications", "2",
            "--set", "master_seed=123", "--threads", "1", "--out-dir", str(out),
        )
        assert code == EXIT_OK
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["effective_config"]["master_seed"] == 123
        assert manifest["master_seed"] == 123
