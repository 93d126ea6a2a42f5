"""Config parsing and deterministic serialization.

Result documents must be byte-identical across reruns with the same config
and seed, so rendering is done by a hand-rolled walker with fixed key order
(insertion order of the dicts we build) and floats printed with 17
significant digits.  Configs are validated against the JSON schema shipped
in ``orbitot/schema/job.schema.json`` and then parsed into the typed
parameter objects, with errors reporting the offending field path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .certificates import CertificateReport
from .distributions import (
    Empirical,
    EllipticalParams,
    Exponential,
    GaussianParams,
    Lognormal,
    Marginal1D,
    Normal,
    Pareto,
    Product1D,
    Weibull,
    WishartParams,
)
from .errors import InvalidParameterError
from .oracle import OracleReport
from .orbit_transport import (
    FAMILIES,
    AffineMap,
    CongruenceMap,
    DiagMap,
    QuantileMap,
)

TASKS = ("cost", "map", "certify", "validate")


# ---------------------------------------------------------------------------
# canonical JSON / CSV rendering
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    """Render a float with 17 significant digits (round-trip exact)."""
    x = float(x)
    if not np.isfinite(x):
        raise InvalidParameterError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def _render(obj, indent: int, level: int) -> str:
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad_in}{json.dumps(str(k))}: {_render(v, indent, level + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad_in}{_render(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, np.ndarray):
        return _render(obj.tolist(), indent, level)
    if isinstance(obj, bool | np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise InvalidParameterError(f"cannot serialize object of type {type(obj).__name__}")


def dumps_canonical(obj, indent: int = 2) -> str:
    """Deterministic JSON text: fixed key order, 17-significant-digit floats."""
    return _render(obj, indent, 0) + "\n"


def render_csv(header: list[str], rows: list[list]) -> str:
    """CSV with the same float convention as the JSON documents."""
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return format_float(v)
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# config schema and parsing
# ---------------------------------------------------------------------------

def load_schema() -> dict:
    text = resources.files("orbitot").joinpath("schema/job.schema.json").read_text()
    return json.loads(text)


def validate_config_schema(cfg: dict) -> None:
    import jsonschema

    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "$" + "".join(
            f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path
        )
        raise InvalidParameterError(f"config schema violation at {path}: {err.message}")


_MARGINAL_FIELDS = {
    "exponential": ("beta",),
    "normal": ("mu", "sigma"),
    "lognormal": ("mu", "sigma"),
    "weibull": ("k", "lam"),
    "pareto": ("alpha", "xm"),
    "empirical": ("sample",),
}


def parse_marginal(d: dict, path: str) -> Marginal1D:
    family = d.get("family")
    if family not in _MARGINAL_FIELDS:
        raise InvalidParameterError(
            f"{path}.family: unknown 1-D family {family!r}; "
            f"supported: {sorted(_MARGINAL_FIELDS)}"
        )
    try:
        if family == "exponential":
            return Exponential(float(d["beta"]))
        if family == "normal":
            return Normal(float(d["mu"]), float(d["sigma"]))
        if family == "lognormal":
            return Lognormal(float(d["mu"]), float(d["sigma"]))
        if family == "weibull":
            return Weibull(float(d["k"]), float(d["lam"]))
        if family == "pareto":
            return Pareto(float(d["alpha"]), float(d["xm"]))
        return Empirical(d["sample"])
    except KeyError as exc:
        raise InvalidParameterError(f"{path}: missing field {exc.args[0]!r}") from exc
    except InvalidParameterError as exc:
        raise InvalidParameterError(f"{path}: {exc}") from exc


def parse_params(family: str, d: dict, path: str):
    try:
        if family == "gaussian":
            return GaussianParams(d["mean"], d["cov"])
        if family == "elliptical":
            gen = d.get("generator", {"type": "gaussian"})
            return EllipticalParams(
                d["location"],
                d["dispersion"],
                generator=gen.get("type", "gaussian"),
                nu=gen.get("nu"),
            )
        if family == "wishart":
            return WishartParams(d["scale"], d["dof"])
        if family == "product1d":
            marginals = tuple(
                parse_marginal(m, f"{path}.marginals[{i}]")
                for i, m in enumerate(d["marginals"])
            )
            return Product1D(marginals)
        if family == "quantile1d":
            return parse_marginal(d, path)
        raise InvalidParameterError(f"unknown family {family!r}; supported: {FAMILIES}")
    except KeyError as exc:
        raise InvalidParameterError(f"{path}: missing field {exc.args[0]!r}") from exc
    except InvalidParameterError:
        raise
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class ValidationSettings:
    n_samples: int = 512
    n_trials: int = 5
    base_seed: int = 0
    mc_samples: int = 100_000
    kantorovich_rtol: float = 0.15


@dataclass(frozen=True)
class SampleSettings:
    n: int
    which: str = "params0"


@dataclass(frozen=True)
class OutputSettings:
    path: str | None = None
    format: str = "json"


@dataclass(frozen=True)
class JobConfig:
    family: str
    params0: object
    params1: object
    tasks: tuple
    validation: ValidationSettings
    sample: SampleSettings | None
    output: OutputSettings


def parse_config(cfg: dict) -> JobConfig:
    """Schema-validate and parse a job config into typed parameters."""
    validate_config_schema(cfg)
    family = cfg["family"]
    params0 = parse_params(family, cfg["params0"], "$.params0")
    params1 = parse_params(family, cfg["params1"], "$.params1")
    if getattr(params0, "dim", 1) != getattr(params1, "dim", 1):
        raise InvalidParameterError(
            "$.params1: dimension differs from params0 "
            f"({getattr(params1, 'dim', 1)} vs {getattr(params0, 'dim', 1)})"
        )
    tasks = tuple(cfg["tasks"])
    v = cfg.get("validation", {})
    validation = ValidationSettings(
        n_samples=int(v.get("n_samples", 512)),
        n_trials=int(v.get("n_trials", 5)),
        base_seed=int(v.get("base_seed", 0)),
        mc_samples=int(v.get("mc_samples", 100_000)),
        kantorovich_rtol=float(v.get("kantorovich_rtol", 0.15)),
    )
    s = cfg.get("sample")
    sample = SampleSettings(n=int(s["n"]), which=s.get("which", "params0")) if s else None
    o = cfg.get("output", {})
    output = OutputSettings(path=o.get("path"), format=o.get("format", "json"))
    return JobConfig(
        family=family,
        params0=params0,
        params1=params1,
        tasks=tasks,
        validation=validation,
        sample=sample,
        output=output,
    )


# ---------------------------------------------------------------------------
# result documents
# ---------------------------------------------------------------------------

def marginal_to_dict(m: Marginal1D) -> dict:
    return m.params_dict()


def params_to_dict(family: str, params) -> dict:
    if family == "gaussian":
        return {"mean": params.mean, "cov": params.cov.mat}
    if family == "elliptical":
        gen = {"type": params.generator}
        if params.nu is not None:
            gen["nu"] = params.nu
        return {
            "location": params.location,
            "dispersion": params.dispersion.mat,
            "generator": gen,
        }
    if family == "wishart":
        return {"scale": params.scale.mat, "dof": params.dof}
    if family == "product1d":
        return {"marginals": [marginal_to_dict(m) for m in params.marginals]}
    if family == "quantile1d":
        return marginal_to_dict(params)
    raise InvalidParameterError(f"unknown family {family!r}")


def map_to_dict(mp) -> dict:
    if isinstance(mp, AffineMap):
        return {"type": "affine", "shift": mp.shift, "linear": mp.linear}
    if isinstance(mp, CongruenceMap):
        return {"type": "congruence", "t": mp.t}
    if isinstance(mp, DiagMap):
        return {"type": "diag_scale", "ratios": mp.ratios}
    if isinstance(mp, QuantileMap):
        return {
            "type": "quantile",
            "source": marginal_to_dict(mp.source),
            "target": marginal_to_dict(mp.target),
        }
    if isinstance(mp, (list, tuple)):
        return {"type": "coordinatewise", "maps": [map_to_dict(m) for m in mp]}
    raise InvalidParameterError(f"cannot serialize map of type {type(mp).__name__}")


def certificate_to_dict(report: CertificateReport) -> dict:
    def check(c):
        if c is None:
            return None
        return {"passed": bool(c.passed), "value": float(c.value), "label": c.label}

    return {
        "family": report.family,
        "verdict": report.verdict,
        "spd_check": check(report.spd_check),
        "monotonicity_check": check(report.monotonicity_check),
        "pushforward_check": check(report.pushforward_check),
    }


def oracle_to_dict(report: OracleReport) -> dict:
    # Runtimes are deliberately omitted: documents must be byte-identical
    # across reruns of the same config and seed.
    return {
        "closed_form": report.closed_form,
        "mc_monge": {
            "estimate": report.mc_estimate,
            "stderr": report.mc_stderr,
            "n": report.mc_samples,
        },
        "assignment_kantorovich": report.kantorovich,
        "trials": list(report.kantorovich_trials),
        "n_samples": report.n_samples,
        "n_trials": report.n_trials,
        "base_seed": report.base_seed,
    }


def oracle_trial_rows(report: OracleReport) -> tuple[list[str], list[list]]:
    header = [
        "family",
        "trial",
        "seed_base",
        "seed_stream",
        "n_samples",
        "assignment_cost",
        "closed_form",
        "mc_estimate",
        "mc_stderr",
        "mc_samples",
    ]
    rows = [
        [
            report.family,
            t,
            report.base_seed,
            100 + t,
            report.n_samples,
            value,
            report.closed_form,
            report.mc_estimate,
            report.mc_stderr,
            report.mc_samples,
        ]
        for t, value in enumerate(report.kantorovich_trials)
    ]
    return header, rows
