"""Tests de la lecture et de la validation des configurations."""

import json
from pathlib import Path

import pytest

from blockmom.config import (
    MAX_SWEEP_CELLS,
    RunConfig,
    diagnose_config,
    diagnose_echo,
    load_config,
    study_config,
    study_echo,
    sweep_config,
)
from blockmom.errors import CapacityError, ConfigError
from blockmom.harness import DEFAULT_T_GRID


def _simulate(**section):
    base = {"N": 256, "k": 8, "l": 2, "seed": 1}
    return {"distribution": {"family": "gaussian"}, "simulate": {**base, **section}}


class TestLoadConfig:
    def test_toml(self, simulate_config):
        raw = load_config(simulate_config)
        assert raw["distribution"]["family"] == "gaussian"
        assert raw["simulate"]["N"] == 256

    def test_json(self, write_config):
        path = write_config(json.dumps(_simulate()), "c.json")
        assert load_config(path)["simulate"]["k"] == 8

    def test_json_summary_uses_config_echo(self, write_config):
        summary = {"version": "0.1.0", "config": _simulate(), "curves": []}
        path = write_config(json.dumps(summary), "summary.json")
        assert load_config(path) == _simulate()

    def test_parse_error(self, write_config):
        path = write_config("[simulate\nN = ", "bad.toml")
        with pytest.raises(ConfigError, match="cannot parse"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.toml")


class TestStudyConfig:
    def test_defaults(self):
        study = study_config(_simulate())
        assert study.T == "auto"
        assert study.replicates == 1000
        assert study.t_grid == DEFAULT_T_GRID
        assert study.estimators == ("mom", "block_umom_subsampled", "sample_mean")

    def test_unknown_keys_listed(self):
        with pytest.raises(ConfigError, match="unknown keys in \\[simulate\\]: bogus, zz"):
            study_config(_simulate(bogus=1, zz=2))

    def test_unknown_section(self):
        raw = {**_simulate(), "extra": {}}
        with pytest.raises(ConfigError, match="extra"):
            study_config(raw)

    def test_plan_validated(self):
        with pytest.raises(ConfigError, match="too many blocks"):
            study_config(_simulate(N=10, k=8, l=2))

    def test_seed_required(self):
        raw = _simulate()
        del raw["simulate"]["seed"]
        with pytest.raises(ConfigError, match="seed"):
            study_config(raw)

    def test_replicates_floor(self):
        with pytest.raises(ConfigError, match="replicates"):
            study_config(_simulate(replicates=500))

    def test_overrides(self):
        study = study_config(_simulate(), {
            "seed": 99, "k": 4, "t_grid": "1,3", "T": "40", "threads": None,
        })
        assert study.master_seed == 99
        assert study.k == 4
        assert study.t_grid == (1.0, 3.0)
        assert study.T == 40

    def test_exact_capacity(self):
        raw = _simulate(N=4000, k=20, l=10, estimators=["block_umom_exact"])
        with pytest.raises(CapacityError):
            study_config(raw)

    def test_invalid_distribution(self):
        raw = _simulate()
        raw["distribution"] = {"family": "pareto", "alpha": 2.0}
        with pytest.raises(ConfigError, match="alpha > 2"):
            study_config(raw)

    def test_echo_round_trip(self):
        raw = _simulate(T=64, t_grid=[1.5, 3.0], threads="auto")
        raw["distribution"] = {"family": "student_t", "df": 5, "standardize": True}
        study = study_config(raw)
        echoed = json.loads(json.dumps(study_echo(study)))
        assert study_config(echoed) == study


class TestDiagnoseConfig:
    def _raw(self, **section):
        base = {"seed": 2, "R": 1000}
        return {"distribution": {"family": "gaussian"}, "diagnose": {**base, **section}}

    def test_defaults(self):
        config = diagnose_config(self._raw())
        assert config.m_grid == (25, 100, 400)
        assert config.hajek is None
        assert config.ks_replicates == 0

    def test_hajek_settings(self):
        config = diagnose_config(self._raw(l=16, b=64, t="L"))
        t, lower, _ = config.hajek.resolve_t()
        assert t == lower
        assert config.hajek.k == 64

    def test_numeric_t(self):
        config = diagnose_config(self._raw(l=4, b=8, t=2.5))
        assert config.hajek.resolve_t()[0] == 2.5

    def test_invalid_t(self):
        with pytest.raises(ConfigError):
            diagnose_config(self._raw(l=4, b=8, t="middle"))

    def test_invalid_m_grid(self):
        with pytest.raises(ConfigError, match="m_grid"):
            diagnose_config(self._raw(m_grid=[10, 0]))

    def test_small_ks(self):
        with pytest.raises(ConfigError):
            diagnose_config(self._raw(ks_replicates=10))

    def test_echo_round_trip(self):
        config = diagnose_config(self._raw(l=4, b=8, R_outer=300))
        assert diagnose_config(diagnose_echo(config)) == config


class TestSweepConfig:
    def _raw(self, **section):
        base = {
            "N": 240, "k": [4, 8], "l": 2, "seed": 3,
            "estimators": ["mom"], "t_grid": [1.0],
        }
        return {
            "distributions": {
                "gauss": {"family": "gaussian"},
                "rad": {"family": "rademacher"},
            },
            "sweep": {**base, **section},
        }

    def test_expansion(self):
        config = sweep_config(self._raw())
        assert len(config.cells) == 4
        assert [c.cell_id for c in config.cells] == [
            "k4_l2_Tauto_gauss", "k4_l2_Tauto_rad",
            "k8_l2_Tauto_gauss", "k8_l2_Tauto_rad",
        ]
        assert [c.index for c in config.cells] == [0, 1, 2, 3]

    def test_distribution_subset(self):
        config = sweep_config(self._raw(distributions=["rad"]))
        assert {c.distribution for c in config.cells} == {"rad"}

    def test_undefined_distribution(self):
        with pytest.raises(ConfigError, match="undefined distributions"):
            sweep_config(self._raw(distributions=["cauchy"]))

    def test_oversize_grid(self):
        ks = list(range(1, MAX_SWEEP_CELLS // 2 + 2))
        with pytest.raises(ConfigError, match="too large"):
            sweep_config(self._raw(k=ks))

    def test_scalar_k_override(self):
        config = sweep_config(self._raw(), {"k": 6})
        assert {c.study.k for c in config.cells} == {6}

    def test_cell_validation(self):
        with pytest.raises(ConfigError, match="too many blocks"):
            sweep_config(self._raw(k=[200]))


class TestRunConfig:
    def test_seed_required(self):
        with pytest.raises(ConfigError, match="requires a seed"):
            RunConfig(command="simulate", output_dir=Path("out"))

    def test_estimate_without_seed(self):
        run = RunConfig(command="estimate", output_dir=Path("out"))
        assert run.seed is None

    def test_unknown_command(self):
        with pytest.raises(ConfigError):
            RunConfig(command="plot", output_dir=Path("out"), seed=1)
