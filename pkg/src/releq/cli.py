"""Batch scenario runner.

Reads a JSON configuration, runs one of the four computation models
(oscillator, tls, corr, maxent_solve), and writes a CSV data file plus a
JSON metadata sidecar holding the effective configuration, tolerances,
wall time, and library version.  Floats are written in shortest
round-trip form, so identical configurations produce byte-identical CSV.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, bath, maxent, oscillator, tls
from .bath import BathParams, QuadratureError
from .odeint import OdeError
from .oscillator import InvariantViolationError

__all__ = ["ConfigError", "ScenarioConfig", "run", "main"]

MODELS = ("oscillator", "tls", "corr", "maxent_solve")
REGIMES = ("markovian", "non_markovian")

_NUMERICAL_ERRORS = (
    OdeError,
    QuadratureError,
    InvariantViolationError,
    maxent.MaxEntError,
    tls.BoundaryStateError,
    tls.ResonanceError,
    oscillator.DegenerateStateError,
    FloatingPointError,
)


class ConfigError(ValueError):
    """Configuration missing fields or holding out-of-range values."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario description.

    ``initial`` is the model's moment list: ``[re_a, im_a, n]`` for the
    oscillator, ``[sz, re_sp, im_sp]`` for the two-level system.  The
    maxent_solve model ignores the time fields and instead uses
    ``operator_set`` (a named preset or explicit matrices) plus ``targets``.
    """

    model: str
    params: dict = field(default_factory=dict)
    initial: list = field(default_factory=list)
    regime: str = "non_markovian"
    t_max: float = 0.0
    dt_out: float = 0.0
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    output_path: str = ""
    operator_set: dict = field(default_factory=dict)
    targets: list = field(default_factory=list)

    @staticmethod
    def from_dict(raw: dict, regime_override: str | None = None, output_override: str | None = None) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        known = set(ScenarioConfig.__dataclass_fields__) | {"tolerances"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown configuration fields: {sorted(unknown)}")

        model = raw.get("model")
        if model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {model!r}")
        regime = regime_override or raw.get("regime", "non_markovian")
        if regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}, got {regime!r}")

        tolerances = raw.get("tolerances", {})
        if not isinstance(tolerances, dict):
            raise ConfigError("tolerances must be an object with rel_tol/abs_tol")
        rel_tol = float(tolerances.get("rel_tol", raw.get("rel_tol", 1e-9)))
        abs_tol = float(tolerances.get("abs_tol", raw.get("abs_tol", 1e-12)))

        output_path = output_override or raw.get("output_path", "")
        if not output_path:
            raise ConfigError("output_path is required (or pass --output)")

        t_max = float(raw.get("t_max", 0.0))
        dt_out = float(raw.get("dt_out", 0.0))
        if model in ("oscillator", "tls"):
            if t_max <= 0:
                raise ConfigError(f"{model} runs need t_max > 0, got {t_max}")
            if dt_out <= 0:
                raise ConfigError(f"{model} runs need dt_out > 0, got {dt_out}")
        elif model == "corr":
            if t_max < 0:
                raise ConfigError(f"corr runs need t_max >= 0, got {t_max}")
            if dt_out <= 0 and t_max > 0:
                raise ConfigError(f"corr runs need dt_out > 0, got {dt_out}")

        config = ScenarioConfig(
            model=model,
            params=dict(raw.get("params", {})),
            initial=list(raw.get("initial", [])),
            regime=regime,
            t_max=t_max,
            dt_out=dt_out,
            rel_tol=rel_tol,
            abs_tol=abs_tol,
            output_path=str(output_path),
            operator_set=dict(raw.get("operator_set", {})),
            targets=list(raw.get("targets", [])),
        )
        config._validate_model_fields()
        return config

    def _validate_model_fields(self):
        if self.model in ("oscillator", "tls", "corr"):
            for name in ("W", "beta_bath"):
                if name not in self.params:
                    raise ConfigError(f"params.{name} is required for model {self.model}")
        if self.model == "oscillator" and len(self.initial) != 3:
            raise ConfigError("oscillator initial must be [re_a, im_a, n]")
        if self.model == "tls":
            if len(self.initial) != 3:
                raise ConfigError("tls initial must be [sz, re_sp, im_sp]")
            if "Omega" not in self.params:
                raise ConfigError("params.Omega is required for model tls")
        if self.model == "maxent_solve":
            if "kind" not in self.operator_set:
                raise ConfigError("maxent_solve needs operator_set.kind")
            if not self.targets:
                raise ConfigError("maxent_solve needs a targets list")

    def bath_params(self) -> BathParams:
        try:
            return BathParams(
                W=float(self.params["W"]),
                beta=float(self.params["beta_bath"]),
                omega0=float(self.params.get("omega0", 1.0)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def sample_times(self) -> np.ndarray:
        if self.t_max == 0.0:
            return np.empty(0)
        count = int(np.floor(self.t_max / self.dt_out + 1e-9))
        return np.arange(count + 1) * self.dt_out


def _format_row(values) -> str:
    return ",".join(repr(float(v)) for v in values) + "\n"


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(header + "\n")
        for row in rows:
            handle.write(_format_row(row))


def _complex_pairs(values) -> np.ndarray:
    out = []
    for entry in values:
        if isinstance(entry, (int, float)):
            out.append(complex(entry))
        else:
            re, im = entry
            out.append(complex(float(re), float(im)))
    return np.array(out, dtype=complex)


def _build_operator_set(spec: dict) -> maxent.RelevantOperatorSet:
    kind = spec.get("kind")
    if kind == "spin":
        return maxent.spin_operator_set()
    if kind == "fock":
        return maxent.fock_operator_set(int(spec.get("dim", 256)))
    if kind == "explicit":
        try:
            operators = tuple(
                np.array(
                    [[complex(cell[0], cell[1]) for cell in row] for row in op],
                    dtype=complex,
                )
                for op in spec["operators"]
            )
            return maxent.RelevantOperatorSet(operators, tuple(spec["pairing"]))
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise ConfigError(f"bad explicit operator_set: {exc}") from None
    raise ConfigError(f"operator_set.kind must be spin, fock, or explicit, got {kind!r}")


def _run_oscillator(config: ScenarioConfig) -> list:
    params = config.bath_params()
    re_a, im_a, n0 = (float(v) for v in config.initial)
    initial = oscillator.OscillatorState(mean_a=complex(re_a, im_a), mean_n=n0)
    run_data = oscillator.simulate(
        initial,
        params,
        config.regime,
        t_max=config.t_max,
        dt_out=config.dt_out,
        rel_tol=config.rel_tol,
        abs_tol=config.abs_tol,
    )
    rows = [
        (t, a.real, a.imag, n, s, b)
        for t, a, n, s, b in zip(
            run_data.times, run_data.mean_a, run_data.mean_n, run_data.entropy, run_data.beta
        )
    ]
    _write_csv(config.output_path, "t,re_a,im_a,n,S,beta", rows)
    return rows


def _run_tls(config: ScenarioConfig) -> list:
    bath_params = config.bath_params()
    omega0 = bath_params.omega0
    params = tls.TlsParams(
        omega0=omega0,
        omegaL=float(config.params.get("omegaL", omega0)),
        Omega=float(config.params["Omega"]),
        bath=bath_params,
    )
    sz, re_sp, im_sp = (float(v) for v in config.initial)
    initial = tls.TlsState(mean_sz=sz, mean_sp=complex(re_sp, im_sp))
    run_data = tls.simulate(
        initial,
        params,
        config.regime,
        t_max=config.t_max,
        dt_out=config.dt_out,
        rel_tol=config.rel_tol,
        abs_tol=config.abs_tol,
    )
    rows = [
        (t, sz_t, sp.real, sp.imag, s, b)
        for t, sz_t, sp, s, b in zip(
            run_data.times, run_data.mean_sz, run_data.mean_sp, run_data.entropy, run_data.beta
        )
    ]
    _write_csv(config.output_path, "t,sz,re_sp,im_sp,S,beta", rows)
    return rows


def _run_corr(config: ScenarioConfig) -> list:
    params = config.bath_params()
    samples = bath.correlator_samples(params, config.sample_times())
    bath.write_correlator_csv(config.output_path, samples)
    return [(s.t, s.f.real, s.f.imag, s.f_beta.real, s.f_beta.imag) for s in samples]


def _run_maxent(config: ScenarioConfig) -> list:
    ops = _build_operator_set(config.operator_set)
    targets = _complex_pairs(config.targets)
    initial = _complex_pairs(config.initial) if config.initial else None
    solution = maxent.solve_self_consistency(targets, ops, initial_F=initial)
    state = maxent.build_state(solution, ops)
    with open(config.output_path, "w", newline="") as handle:
        handle.write("m,re_F,im_F,re_target,im_target\n")
        for m, (f, t) in enumerate(zip(solution, targets)):
            tail = ",".join(repr(float(v)) for v in (f.real, f.imag, t.real, t.imag))
            handle.write(f"{m},{tail}\n")
    return {
        "phi": state.phi,
        "entropy": maxent.entropy(state, targets),
        "residual": float(np.max(np.abs(maxent.moments(state, ops) - targets))),
    }


def run(config: ScenarioConfig) -> dict:
    """Execute one scenario; returns the metadata written next to the CSV."""
    start = time.perf_counter()
    runner = {
        "oscillator": _run_oscillator,
        "tls": _run_tls,
        "corr": _run_corr,
        "maxent_solve": _run_maxent,
    }[config.model]
    result = runner(config)
    metadata = {
        "config": asdict(config),
        "tolerances": {"rel_tol": config.rel_tol, "abs_tol": config.abs_tol},
        "wall_time_s": time.perf_counter() - start,
        "version": __version__,
    }
    if config.model == "maxent_solve":
        metadata["solution"] = result
    meta_path = Path(config.output_path).with_suffix(".meta.json")
    meta_path.write_text(json.dumps(metadata, indent=2) + "\n")
    return metadata


def _run_single(config_path: str, args) -> int:
    try:
        raw = json.loads(Path(config_path).read_text())
        config = ScenarioConfig.from_dict(
            raw,
            regime_override="markovian" if args.markovian else None,
            output_override=args.output,
        )
        if args.model and config.model != args.model:
            raise ConfigError(
                f"config {config_path} declares model {config.model!r}, "
                f"command line asked for {args.model!r}"
            )
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        run(config)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="releq",
        description="Run oscillator, two-level, correlator, or maxent scenarios.",
    )
    parser.add_argument("model", nargs="?", choices=MODELS, help="model to run")
    parser.add_argument("--config", help="path to a JSON scenario configuration")
    parser.add_argument(
        "--markovian", action="store_true", help="force the markovian regime"
    )
    parser.add_argument("--output", help="override the CSV output path")
    parser.add_argument(
        "--sweep",
        metavar="DIR",
        help="run every *.json configuration in DIR concurrently",
    )
    args = parser.parse_args(argv)

    if args.sweep:
        configs = sorted(Path(args.sweep).glob("*.json"))
        if not configs:
            print(f"no *.json configurations in {args.sweep}", file=sys.stderr)
            return 2
        if args.output and len(configs) > 1:
            print("--output cannot be shared by a sweep", file=sys.stderr)
            return 2
        with concurrent.futures.ThreadPoolExecutor() as pool:
            codes = list(pool.map(lambda p: _run_single(str(p), args), configs))
        return max(codes)

    if not args.model or not args.config:
        parser.print_usage(sys.stderr)
        print("a model and --config are required unless --sweep is given", file=sys.stderr)
        return 2
    return _run_single(args.config, args)


if __name__ == "__main__":
    sys.exit(main())
