"""Command-line driver.

Every subcommand reads one JSON experiment config and writes deterministic
JSON/CSV files into the output directory::

    willis-lattice tensors --config exp.json --output out/

Exit codes: 0 success, 1 numerical failure, 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import dispersion, homogenize, lattice, resonator
from .analytics import effective_law, primed_tensors
from .core import CellParams, ParameterError
from .solver import DefectivePencilError, SingularSystemError

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2

DEFAULT_CELL = {"h": 0.02, "K": 1.0, "m": 1.0, "c": 0.5, "delta": [0.0, 0.1]}
REQUIRED_CELL = ("m", "c")


class ConfigError(ValueError):
    pass


def _complex_from(value, where: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{where}: expected a number or [re, im]")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number")
    return float(value)


@dataclass(frozen=True)
class Sweep:
    start: float
    stop: float
    count: int

    def values(self) -> list[float]:
        return [float(x) for x in np.linspace(self.start, self.stop, self.count)]


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment.  ``cell`` keeps the raw field dict so that
    serialisation round-trips exactly."""

    cell: dict
    omega: Union[float, Sweep] = 1.0
    h_list: tuple = (0.02, 0.01, 0.005)
    k_path: tuple = ()
    perturbation: dict = field(default_factory=lambda: {"epsilon": [1e-4, 1e-3, 1e-2], "trials": 8, "seed": 0})
    resonator: Optional[dict] = None
    sample_n: int = 5
    tolerance: float = 1e-3
    output_dir: str = "output"

    @property
    def params(self) -> CellParams:
        d = dict(self.cell)
        d["delta"] = _complex_from(d.get("delta", 0.0), "cell.delta")
        return CellParams(**d)

    @property
    def omegas(self) -> list[float]:
        return self.omega.values() if isinstance(self.omega, Sweep) else [float(self.omega)]

    @classmethod
    def default(cls) -> "ExperimentConfig":
        return cls.from_dict({"cell": dict(DEFAULT_CELL)})

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config: expected a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"{sorted(extra)[0]}: unknown field")
        if "cell" not in doc or not isinstance(doc["cell"], dict):
            raise ConfigError("cell: missing required section")
        allowed = {f.name for f in fields(CellParams)}
        cell = {}
        for key in REQUIRED_CELL:
            if key not in doc["cell"]:
                raise ConfigError(f"cell.{key}: missing required field")
        for key, value in doc["cell"].items():
            if key not in allowed:
                raise ConfigError(f"cell.{key}: unknown field")
            if key == "delta":
                z = _complex_from(value, "cell.delta")
                cell[key] = [z.real, z.imag]
            elif value is not None:
                cell[key] = _number(value, f"cell.{key}")
        for key, value in DEFAULT_CELL.items():
            cell.setdefault(key, value)

        omega = doc.get("omega", 1.0)
        if isinstance(omega, dict):
            try:
                omega = Sweep(_number(omega["start"], "omega.start"), _number(omega["stop"], "omega.stop"),
                              int(omega["count"]))
            except KeyError as exc:
                raise ConfigError(f"omega.{exc.args[0]}: missing required field") from None
            if omega.count < 1:
                raise ConfigError("omega.count: sweep count must be >= 1")
            if omega.start <= 0 or omega.stop <= 0:
                raise ConfigError("omega: frequencies must be positive")
        else:
            omega = _number(omega, "omega")
            if omega <= 0:
                raise ConfigError("omega: must be positive")

        h_list = tuple(_number(h, "h_list") for h in doc.get("h_list", cls.h_list))
        if any(h <= 0 for h in h_list) or any(b >= a for a, b in zip(h_list, h_list[1:])):
            raise ConfigError("h_list: values must be positive and strictly decreasing")
        k_path = []
        for k in doc.get("k_path", ()):
            if not (isinstance(k, (list, tuple)) and len(k) == 2):
                raise ConfigError("k_path: each entry must be [k1, k2]")
            k_path.append((_number(k[0], "k_path"), _number(k[1], "k_path")))

        pert = dict(doc.get("perturbation", {"epsilon": [1e-4, 1e-3, 1e-2], "trials": 8, "seed": 0}))
        eps = pert.get("epsilon", [1e-4, 1e-3, 1e-2])
        eps = [eps] if isinstance(eps, (int, float)) else list(eps)
        pert = {"epsilon": [_number(e, "perturbation.epsilon") for e in eps],
                "trials": int(pert.get("trials", 8)), "seed": int(pert.get("seed", 0)),
                **({"h": _number(pert["h"], "perturbation.h")} if "h" in pert else {})}
        if pert["trials"] < 1:
            raise ConfigError("perturbation.trials: must be >= 1")
        if any(e < 0 for e in pert["epsilon"]):
            raise ConfigError("perturbation.epsilon: must be non-negative")

        res = doc.get("resonator")
        if res is not None:
            res = dict(res)
            for key in ("m_shell", "m_core", "k_total"):
                if key not in res:
                    raise ConfigError(f"resonator.{key}: missing required field")

        cfg = cls(cell=cell, omega=omega, h_list=h_list, k_path=tuple(k_path), perturbation=pert,
                  resonator=res, sample_n=int(doc.get("sample_n", 5)),
                  tolerance=_number(doc.get("tolerance", 1e-3), "tolerance"),
                  output_dir=str(doc.get("output_dir", "output")))
        try:
            cfg.params
            if res is not None:
                _resonator_params(res)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None
        if cfg.sample_n < 3:
            raise ConfigError("sample_n: must be >= 3")
        return cfg

    def to_dict(self) -> dict:
        doc = {
            "cell": dict(self.cell),
            "omega": asdict(self.omega) if isinstance(self.omega, Sweep) else self.omega,
            "h_list": list(self.h_list),
            "k_path": [list(k) for k in self.k_path],
            "perturbation": dict(self.perturbation),
            "sample_n": self.sample_n,
            "tolerance": self.tolerance,
            "output_dir": self.output_dir,
        }
        if self.resonator is not None:
            doc["resonator"] = dict(self.resonator)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON: {exc}") from None
    return ExperimentConfig.from_dict(doc)


def _resonator_params(d: dict) -> resonator.ResonatorParams:
    return resonator.ResonatorParams(
        m_shell=float(d["m_shell"]), m_core=float(d["m_core"]),
        k_total=float(d["k_total"]), gamma=float(d.get("gamma", 0.0)))


def _cpair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _write(out: Path, name: str, text: str):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(x) -> str:
    return repr(float(x))


def _pool(threads: int):
    return ThreadPoolExecutor(max_workers=threads) if threads > 1 else None


def _map(executor, fn, items):
    return list(executor.map(fn, items)) if executor is not None else [fn(x) for x in items]


# ---------------------------------------------------------------- commands

def cmd_tensors(cfg: ExperimentConfig, out: Path, threads: int = 1) -> int:
    p = cfg.params
    C = homogenize.spring_network_elasticity(p.K, p.h)
    reports = []
    for omega in cfg.omegas:
        law = effective_law(p, omega, C)
        primed = primed_tensors(law.S, law.D, omega)
        S3, D3 = primed.cartesian()
        cart = {}
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    cart[f"S'_{i + 1}{j + 1}{k + 1}"] = _cpair(S3[i, j, k])
                    cart[f"D'_{k + 1}{i + 1}{j + 1}"] = _cpair(D3[k, i, j])
        reports.append({
            "omega": omega,
            **law.to_dict(),
            "primed": {
                "S_prime": {"re": np.real(primed.S_prime).tolist(), "im": np.imag(primed.S_prime).tolist()},
                "D_prime": {"re": np.real(primed.D_prime).tolist(), "im": np.imag(primed.D_prime).tolist()},
                "cartesian": cart,
            },
        })
    doc = reports[0] if len(reports) == 1 else {"sweep": reports}
    _write(out, "tensors.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_homogenize(cfg: ExperimentConfig, out: Path, threads: int = 1) -> int:
    if len(cfg.h_list) < 3:
        raise ConfigError("h_list: at least three values are required for extrapolation")
    p = cfg.params
    status = EXIT_OK
    executor = _pool(threads)
    try:
        for idx, omega in enumerate(cfg.omegas):
            try:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    _, report = homogenize.extract_effective_law(p, omega, cfg.h_list, n=cfg.sample_n,
                                                                 executor=executor)
            except SingularSystemError as exc:
                print(f"error: solver failure at omega={omega}, cell={p}: {exc}", file=sys.stderr)
                return EXIT_NUMERICAL
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
            suffix = "" if len(cfg.omegas) == 1 else f"_{idx:03d}"
            _write(out, f"homogenize{suffix}.json", report.to_json() + "\n")
            _write(out, f"homogenize{suffix}.csv", report.to_csv())
            worst = float(np.max(report.extrapolated_errors))
            if worst > cfg.tolerance or not np.all(report.monotone):
                print(f"error: no convergence at omega={omega}: worst extrapolated error {worst:.3e}",
                      file=sys.stderr)
                status = EXIT_NUMERICAL
    finally:
        if executor is not None:
            executor.shutdown()
    return status


def cmd_dispersion(cfg: ExperimentConfig, out: Path, threads: int = 1) -> int:
    if not cfg.k_path:
        raise ConfigError("k_path: at least one wavevector is required")
    p = cfg.params
    law1 = effective_law(p, 1.0, homogenize.spring_network_elasticity(p.K, p.h))
    cell = lattice.build_periodic_cell(p)
    for k in cfg.k_path:
        if math.hypot(*k) * p.h > 0.1:
            print(f"warning: |k|h = {math.hypot(*k) * p.h:.3g} > 0.1 at k={k}; "
                  "outside the long-wavelength regime", file=sys.stderr)
    executor = _pool(threads)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            results = _map(executor, lambda k: dispersion.compare_point(p, k, law1=law1, cell=cell),
                           cfg.k_path)
    except (DefectivePencilError, SingularSystemError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        if executor is not None:
            executor.shutdown()
    rows = []
    for block in results:
        for r in block:
            rows.append([_num(r["k1"]), _num(r["k2"]), r["branch"],
                         _num(r["discrete"].real), _num(r["discrete"].imag),
                         _num(r["effective"].real), _num(r["effective"].imag),
                         _num(r["mismatch"]), int(r["ambiguous"])])
    header = ["k1", "k2", "branch", "re_omega", "im_omega", "re_omega_eff", "im_omega_eff",
              "mismatch", "ambiguous"]
    _write(out, "dispersion.csv", _csv(header, rows))
    return EXIT_OK


def cmd_resonator(cfg: ExperimentConfig, out: Path, threads: int = 1) -> int:
    if cfg.resonator is None:
        raise ConfigError("resonator: section required for this command")
    res = _resonator_params(cfg.resonator)
    sweep = cfg.resonator.get("omega")
    if isinstance(sweep, dict):
        omegas = Sweep(float(sweep["start"]), float(sweep["stop"]), int(sweep["count"])).values()
    elif sweep is not None:
        omegas = [float(sweep)]
    else:
        omegas = cfg.omegas
    _write(out, "resonator_sweep.csv", resonator.sweep_csv(res, omegas))
    band = resonator.negative_band(res)
    summary = {"params": asdict(res), "negative_band": None if band is None else
               [band[0], None if math.isinf(band[1]) else band[1]]}
    _write(out, "resonator.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")

    targets = cfg.resonator.get("targets", [])
    if targets:
        rows = []
        for t in targets:
            z = _complex_from(t.get("mass"), "resonator.targets.mass")
            om = float(t.get("omega", cfg.omegas[0]))
            try:
                d = resonator.design_for_mass(z, om, res.m_shell)
                rows.append([_num(z.real), _num(z.imag), _num(om), _num(d.m_core), _num(d.k_total),
                             _num(d.gamma), "ok"])
            except resonator.InfeasibleTargetError as exc:
                rows.append([_num(z.real), _num(z.imag), _num(om), "", "", "", f"infeasible: {exc}"])
        _write(out, "resonator_design.csv",
               _csv(["target_re", "target_im", "omega", "m_core", "k_total", "gamma", "status"], rows))
    return EXIT_OK


def cmd_perturb(cfg: ExperimentConfig, out: Path, threads: int = 1) -> int:
    p = cfg.params
    pert = cfg.perturbation
    h = pert.get("h", p.h)
    omega = cfg.omegas[0]
    executor = _pool(threads)
    try:
        stats = _map(executor, lambda e: homogenize.perturbation_study(
            p, omega, e, pert["trials"], pert["seed"], h=h, n=cfg.sample_n), pert["epsilon"])
    except SingularSystemError as exc:
        print(f"error: unperturbed sample singular at omega={omega}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        if executor is not None:
            executor.shutdown()
    summary, trials = [], []
    for st in stats:
        summary.append([_num(st.epsilon), len(st.deviations), st.n_excluded, _num(st.mean), _num(st.worst)])
        for t, dev in enumerate(st.deviations):
            trials.append([_num(st.epsilon), t, _num(dev)])
    _write(out, "perturb.csv", _csv(["epsilon", "n_used", "n_excluded", "mean", "worst"], summary))
    _write(out, "perturb_trials.csv", _csv(["epsilon", "trial", "deviation"], trials))
    return EXIT_OK


def cmd_validate(cfg: ExperimentConfig, out: Path, threads: int = 1) -> int:
    p = cfg.params
    report = {}
    lat = lattice.build_periodic_cell(p)
    report["periodic-cell"] = lattice.validate(lat)
    for h in cfg.h_list:
        spec = lattice.LatticeSpec(p.with_h(h), cfg.sample_n, cfg.sample_n, "finite-sample")
        report[f"finite-sample h={h!r}"] = lattice.validate(lattice.build(spec))
    _write(out, "validate.json", json.dumps(report, indent=1, sort_keys=True) + "\n")
    problems = [f"{k}: {m}" for k, v in report.items() for m in v]
    for msg in problems:
        print(f"invalid: {msg}", file=sys.stderr)
    return EXIT_NUMERICAL if problems else EXIT_OK


COMMANDS = {
    "tensors": cmd_tensors,
    "homogenize": cmd_homogenize,
    "dispersion": cmd_dispersion,
    "resonator": cmd_resonator,
    "perturb": cmd_perturb,
    "validate": cmd_validate,
}


HELP = {
    "tensors": "closed-form blocks C, S, D, rho at the configured frequency",
    "homogenize": "measure the law on finite samples and extrapolate in h",
    "dispersion": "Bloch bands against the effective medium along k_path",
    "resonator": "core-shell effective mass sweep and inverse design",
    "perturb": "sensitivity of the measured law to random mass and stiffness jitter",
    "validate": "geometry and topology checks on the periodic cell and samples",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="willis-lattice", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--config", required=True, help="experiment JSON")
        sp.add_argument("--output", default=None, help="output directory (overrides config)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for independent solves")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.threads < 1:
            raise ConfigError("--threads: must be >= 1")
        out = Path(args.output if args.output is not None else cfg.output_dir)
        return COMMANDS[args.command](cfg, out, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularSystemError, DefectivePencilError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
