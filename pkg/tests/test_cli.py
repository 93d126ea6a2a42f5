import json

import numpy as np
import pytest

from orbitot.cli import main
from orbitot.errors import InvalidParameterError
from orbitot.serialize import (
    dumps_canonical,
    format_float,
    parse_config,
    render_csv,
)


def write_config(tmp_path, cfg, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def gaussian_config(**overrides):
    cfg = {
        "family": "gaussian",
        "params0": {"mean": [0.0, 0.0], "cov": [[1.0, 0.2], [0.2, 0.5]]},
        "params1": {"mean": [2.0, -1.0], "cov": [[1.5, -0.3], [-0.3, 1.0]]},
        "tasks": ["cost"],
        "validation": {"n_samples": 128, "n_trials": 3, "base_seed": 7,
                       "mc_samples": 20000},
    }
    cfg.update(overrides)
    return cfg


class TestCanonicalJson:
    def test_float_17_digits_roundtrip(self):
        for x in (0.1, 1 / 3, 5.2633094174999862, 1e-300, -0.0, 12345.0):
            assert float(format_float(x)) == x

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidParameterError):
            format_float(float("inf"))

    def test_key_order_and_types(self):
        text = dumps_canonical({"b": 1, "a": [1.5, True, None, "x"]})
        assert text.index('"b"') < text.index('"a"')
        assert json.loads(text) == {"b": 1, "a": [1.5, True, None, "x"]}

    def test_numpy_values(self):
        doc = {"v": np.array([1.0, 2.0]), "s": np.float64(0.25), "n": np.int64(3)}
        assert json.loads(dumps_canonical(doc)) == {"v": [1.0, 2.0], "s": 0.25, "n": 3}

    def test_csv_rendering(self):
        text = render_csv(["a", "b"], [[1, 0.5], [2, 0.25]])
        assert text == "a,b\n1,0.5\n2,0.25\n"


class TestConfigParsing:
    def test_valid_gaussian(self):
        cfg = parse_config(gaussian_config())
        assert cfg.family == "gaussian"
        assert cfg.validation.n_samples == 128

    @pytest.mark.parametrize("family,params", [
        ("gaussian", {"mean": [0.5, -1.0], "cov": [[1.0, 0.2], [0.2, 0.5]]}),
        ("elliptical", {"location": [0.0], "dispersion": [[2.0]],
                        "generator": {"type": "student_t", "nu": 5.0}}),
        ("wishart", {"scale": [[1.0, 0.1], [0.1, 0.7]], "dof": 3.5}),
        ("product1d", {"marginals": [
            {"family": "exponential", "beta": 2.0},
            {"family": "pareto", "alpha": 3.0, "xm": 1.0}]}),
        ("quantile1d", {"family": "lognormal", "mu": 0.1, "sigma": 0.4}),
    ])
    def test_params_roundtrip_through_document_form(self, family, params):
        from orbitot.serialize import params_to_dict, parse_params
        parsed = parse_params(family, params, "$.params0")
        echoed = json.loads(dumps_canonical(params_to_dict(family, parsed)))
        reparsed = parse_params(family, echoed, "$.params0")
        assert json.loads(dumps_canonical(params_to_dict(family, reparsed))) == echoed

    def test_schema_violation_reports_path(self):
        bad = gaussian_config(tasks=["dance"])
        with pytest.raises(InvalidParameterError, match=r"\$\.tasks"):
            parse_config(bad)

    def test_oversized_assignment_rejected(self):
        bad = gaussian_config()
        bad["validation"]["n_samples"] = 4096
        with pytest.raises(InvalidParameterError, match="n_samples"):
            parse_config(bad)

    def test_wishart_dof_invariant_named(self):
        bad = {
            "family": "wishart",
            "params0": {"scale": [[1.0, 0.0], [0.0, 1.0]], "dof": 1.0},
            "params1": {"scale": [[2.0, 0.0], [0.0, 1.0]], "dof": 1.0},
            "tasks": ["cost"],
        }
        with pytest.raises(InvalidParameterError, match="p >= d"):
            parse_config(bad)

    def test_marginal_field_path_in_error(self):
        bad = {
            "family": "product1d",
            "params0": {"marginals": [{"family": "exponential", "beta": 1.0}]},
            "params1": {"marginals": [{"family": "exponential", "beta": -1.0}]},
            "tasks": ["cost"],
        }
        with pytest.raises(InvalidParameterError, match=r"params1"):
            parse_config(bad)


class TestCliCommands:
    def test_cost_trivial_identical_marginals(self, tmp_path, capsys):
        cfg = gaussian_config()
        cfg["params1"] = cfg["params0"]
        code = main(["cost", "--config", write_config(tmp_path, cfg)])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["results"]["cost"] == 0.0

    def test_cost_prints_json_document(self, tmp_path, capsys):
        code = main(["cost", "--config", write_config(tmp_path, gaussian_config())])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["family"] == "gaussian"
        assert doc["results"]["cost"] == pytest.approx(5.2633094174999862)

    def test_certify_demo_is_certified(self, tmp_path, capsys):
        cfg = gaussian_config(tasks=["certify"])
        code = main(["certify", "--config", write_config(tmp_path, cfg)])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["results"]["certificate"]["verdict"] == "certified"
        assert doc["results"]["map"]["type"] == "affine"

    def test_validate_demo_passes_and_is_deterministic(self, tmp_path):
        cfg = gaussian_config(tasks=["cost", "map", "certify", "validate"])
        path = write_config(tmp_path, cfg)
        out1, out2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
        assert main(["validate", "--config", path, "--seed", "42",
                     "--out", out1, "--quiet"]) == 0
        assert main(["validate", "--config", path, "--seed", "42",
                     "--out", out2, "--quiet"]) == 0
        b1 = open(out1, "rb").read()
        b2 = open(out2, "rb").read()
        assert b1 == b2
        doc = json.loads(b1)
        assert doc["results"]["validation"]["passed"] is True
        assert doc["results"]["oracle"]["base_seed"] == 42
        assert "runtimes" not in json.dumps(doc)

    def test_validate_breach_exits_two(self, tmp_path, capsys):
        cfg = gaussian_config(tasks=["validate"])
        cfg["validation"]["kantorovich_rtol"] = 1e-9  # unattainable at n = 128
        code = main(["validate", "--config", write_config(tmp_path, cfg), "--quiet"])
        capsys.readouterr()
        assert code == 2

    def test_wishart_dof_violation_exit_one(self, tmp_path, capsys):
        bad = {
            "family": "wishart",
            "params0": {"scale": [[1.0, 0.0], [0.0, 1.0]], "dof": 1.0},
            "params1": {"scale": [[2.0, 0.0], [0.0, 1.0]], "dof": 1.0},
            "tasks": ["cost"],
        }
        code = main(["cost", "--config", write_config(tmp_path, bad)])
        err = capsys.readouterr().err
        assert code == 1
        assert "p >= d" in err

    def test_unknown_flag_exit_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["cost", "--config", "x.json", "--frobnicate"])
        capsys.readouterr()
        assert exc.value.code == 1

    def test_missing_config_exit_one(self, capsys):
        code = main(["cost", "--config", "/nonexistent/job.json"])
        assert code == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_sample_shape_contract(self, tmp_path):
        cfg = {
            "family": "wishart",
            "params0": {"scale": [[1.0, 0.3], [0.3, 0.8]], "dof": 4.0},
            "params1": {"scale": [[2.0, 0.0], [0.0, 1.2]], "dof": 4.0},
            "tasks": ["cost"],
            "sample": {"n": 9, "which": "params0"},
        }
        out = str(tmp_path / "w.csv")
        assert main(["sample", "--config", write_config(tmp_path, cfg),
                     "--out", out]) == 0
        lines = open(out).read().strip().split("\n")
        assert len(lines) == 10  # header + n rows
        assert len(lines[0].split(",")) == 3  # d (d + 1) / 2 for d = 2

    def test_sample_seed_reproducible(self, tmp_path):
        cfg = gaussian_config()
        cfg["sample"] = {"n": 5}
        path = write_config(tmp_path, cfg)
        o1, o2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        main(["sample", "--config", path, "--seed", "3", "--out", o1])
        main(["sample", "--config", path, "--seed", "3", "--out", o2])
        assert open(o1).read() == open(o2).read()

    def test_csv_only_for_validate_and_sample(self, tmp_path, capsys):
        code = main(["cost", "--config", write_config(tmp_path, gaussian_config()),
                     "--format", "csv"])
        assert code == 1
        assert "csv" in capsys.readouterr().err

    def test_validate_csv_trial_rows(self, tmp_path):
        cfg = gaussian_config(tasks=["validate"])
        out = str(tmp_path / "trials.csv")
        assert main(["validate", "--config", write_config(tmp_path, cfg),
                     "--format", "csv", "--out", out, "--quiet"]) == 0
        lines = open(out).read().strip().split("\n")
        assert lines[0].startswith("family,trial,seed_base")
        assert len(lines) == 1 + 3  # header + n_trials

    def test_run_uses_config_tasks(self, tmp_path, capsys):
        cfg = gaussian_config(tasks=["cost", "map"])
        code = main(["run", "--config", write_config(tmp_path, cfg)])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert "map" in doc["results"] and "certificate" not in doc["results"]

    def test_mixed_product_full_pipeline(self, tmp_path):
        cfg = {
            "family": "product1d",
            "params0": {"marginals": [
                {"family": "exponential", "beta": 1.0},
                {"family": "lognormal", "mu": 0.0, "sigma": 0.5},
                {"family": "weibull", "k": 2.0, "lam": 1.5},
            ]},
            "params1": {"marginals": [
                {"family": "weibull", "k": 1.5, "lam": 2.0},
                {"family": "exponential", "beta": 2.0},
                {"family": "lognormal", "mu": 0.2, "sigma": 0.3},
            ]},
            "tasks": ["cost", "map", "certify", "validate"],
            "validation": {"n_samples": 256, "n_trials": 3, "base_seed": 21,
                           "mc_samples": 20000},
        }
        out = str(tmp_path / "mixed.json")
        code = main(["run", "--config", write_config(tmp_path, cfg),
                     "--out", out, "--quiet"])
        doc = json.loads(open(out).read())
        assert code == 0
        assert doc["results"]["map"]["type"] == "coordinatewise"
        assert len(doc["results"]["map"]["maps"]) == 3
        assert doc["results"]["certificate"]["verdict"] == "certified"
        assert doc["results"]["validation"]["passed"] is True

    def test_missing_output_directory_exit_one(self, tmp_path, capsys):
        cfg = gaussian_config()
        code = main(["cost", "--config", write_config(tmp_path, cfg),
                     "--out", str(tmp_path / "no" / "such" / "dir" / "r.json")])
        capsys.readouterr()
        assert code == 1

    def test_elliptical_generator_defaults_to_gaussian(self):
        cfg = {
            "family": "elliptical",
            "params0": {"location": [0.0], "dispersion": [[1.0]]},
            "params1": {"location": [1.0], "dispersion": [[2.0]]},
            "tasks": ["cost"],
        }
        parsed = parse_config(cfg)
        assert parsed.params0.generator == "gaussian"
        assert parsed.params0.nu is None

    def test_no_tmp_litter_after_write(self, tmp_path):
        cfg = gaussian_config()
        out = tmp_path / "r.json"
        main(["cost", "--config", write_config(tmp_path, cfg), "--out", str(out)])
        leftovers = [p for p in tmp_path.iterdir() if p.suffix == ".tmp"]
        assert out.exists() and not leftovers
