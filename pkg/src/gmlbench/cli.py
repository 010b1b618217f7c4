"""Command-line driver.

Subcommands write one table each (CSV by default, JSON with ``--format json``)
to ``--output``, to ``$GMLBENCH_OUTPUT_DIR/<command>.<ext>`` when that
variable is set, or to stdout. Exit codes: 0 all checks pass, 1 numerical
failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import models
from .correlators import CorrelatorSpec, gml_correlator, spec_from_catalog
from .dynamics import IntegratorSettings, QuantumModel, SwitchingSchedule
from .errors import NumericalFailure, WorkbenchError
from .gml import adiabatic_sweep, denominator_phase, sucher_shift
from .identities import (
    DerivativeSettings,
    interaction_identity_residual,
    lemma_mixed_residual,
    lemma_residual,
    load_tolerance_model,
    set_tolerances,
    time_translation_residual,
)

OUTPUT_DIR_ENV = "GMLBENCH_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    model: str = "two-level"
    g: float | None = None
    delta: float = 1.0
    t_hop: float = 1.0
    u: float = 2.0
    g_scale: float = 1.0
    dim: int = 4
    seed: int = 42
    scale: float = 1.0
    real: bool = False
    eps: list = field(default_factory=lambda: [0.2, 0.1, 0.05])
    step: float | None = None
    dg_rel: float = 1e-4
    cutoff_decades: float = 8.0
    psi0_index: int = 0
    insert: list = field(default_factory=list)
    tolerance: float = 1e-2
    calibration: str | None = None
    output: str | None = None
    format: str = "csv"

    def validate(self):
        if not self.eps or any(not e > 0 for e in self.eps):
            raise UsageError("--eps values must be positive")
        if self.step is not None and not 0 < self.step <= 0.1:
            raise UsageError("--step must lie in (0, 0.1]")
        if not 1e-8 <= self.dg_rel <= 1e-2:
            raise UsageError("--dg-rel must lie in [1e-8, 1e-2]")
        if not self.cutoff_decades > 0:
            raise UsageError("--cutoff-decades must be positive")
        if self.format not in ("csv", "json"):
            raise UsageError("--format must be csv or json")


# ---------------------------------------------------------------------------
# tables


def render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "PASS" if value else "FAIL"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


class ResultTable:
    def __init__(self, header: list[str]):
        self.header = list(header)
        self.rows: list[dict] = []

    def add(self, **values):
        unknown = set(values) - set(self.header)
        if unknown:
            raise KeyError(f"columns not in header: {sorted(unknown)}")
        self.rows.append(values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([render(row.get(col)) for col in self.header])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{col: _jsonable(row.get(col)) for col in self.header} for row in self.rows]
        return json.dumps({"header": self.header, "rows": rows}, indent=1) + "\n"


def _emit(table: ResultTable, config: RunConfig, command: str):
    text = table.to_json() if config.format == "json" else table.to_csv()
    target = config.output
    if target is None and os.environ.get(OUTPUT_DIR_ENV):
        target = str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{command}.{config.format}")
    if target is None:
        sys.stdout.write(text)
    else:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        Path(target).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# model and settings


def build_model(config: RunConfig) -> QuantumModel:
    name = config.model
    if name == "two-level":
        model = models.two_level(config.delta, 0.2 if config.g is None else config.g)
    elif name == "diagonal-crossing":
        model = models.diagonal_crossing(1.0 if config.g is None else config.g)
    elif name == "hubbard-dimer":
        model = models.hubbard_dimer(config.t_hop, config.u, config.g_scale)
    elif name == "random":
        model = models.random_model(config.dim, config.seed, config.scale,
                                    g=1.0 if config.g is None else config.g, real=config.real)
    else:
        model = models.load_model(name)
    if config.g is not None and model.g != config.g:
        model = model.with_coupling(config.g)
    return model


def build_settings(config: RunConfig, model: QuantumModel) -> IntegratorSettings:
    if config.step is None:
        return IntegratorSettings.default_for(model)
    return IntegratorSettings(config.step)


def _provenance(config: RunConfig, model: QuantumModel, settings: IntegratorSettings) -> dict:
    return dict(model=model.name, g=model.g, step=settings.step, dg_rel=config.dg_rel,
                cutoff_decades=config.cutoff_decades, psi0_index=config.psi0_index)


PROVENANCE = ["model", "g", "step", "dg_rel", "cutoff_decades", "psi0_index"]


# ---------------------------------------------------------------------------
# subcommands

NEGATIVE_GRID = [(-1.0, -3.0), (0.0, -2.0)]
POSITIVE_GRID = [(3.0, 1.0), (2.0, 0.0)]
MIXED_GRID = [(2.0, -2.0), (1.0, -1.0)]
TRANSLATION_GRID = [(0.0, -3.0), (-1.0, -2.0)]


def cmd_verify_lemma(config: RunConfig) -> int:
    model = build_model(config)
    settings = build_settings(config, model)
    dset = DerivativeSettings(config.dg_rel)
    table = ResultTable(["experiment", "identity", "epsilon", "t", "s", *PROVENANCE, "lhs_norm",
                         "rhs_norm", "residual_abs", "residual_rel", "bound", "status"])
    prov = _provenance(config, model, settings)
    ok = True
    for eps in config.eps:
        sched = SwitchingSchedule(eps, "symmetric", config.cutoff_decades)
        reports = []
        reports += [lemma_residual(model, sched, settings, dset, t, s) for t, s in NEGATIVE_GRID]
        reports += [lemma_residual(model, sched, settings, dset, t, s) for t, s in POSITIVE_GRID]
        reports += [lemma_mixed_residual(model, sched, settings, dset, t, s) for t, s in MIXED_GRID]
        reports += [interaction_identity_residual(model, sched, settings, dset, t, s)
                    for t, s in NEGATIVE_GRID[:1] + POSITIVE_GRID[:1]]
        if model.g > 0:
            reports += [time_translation_residual(model, sched, settings, t, s)
                        for t, s in TRANSLATION_GRID]
        for r in reports:
            ok &= r.passed
            table.add(experiment="verify-lemma", identity=r.identity_id, epsilon=eps,
                      t=r.parameters["t"], s=r.parameters["s"], **prov, lhs_norm=r.lhs_norm,
                      rhs_norm=r.rhs_norm, residual_abs=r.residual_abs,
                      residual_rel=r.residual_rel, bound=r.bound, status=r.passed)
    _emit(table, config, "verify-lemma")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_gml(config: RunConfig) -> int:
    model = build_model(config)
    settings = build_settings(config, model)
    dset = DerivativeSettings(config.dg_rel)
    table = ResultTable(["experiment", "row", "epsilon", *PROVENANCE, "energy_plus",
                         "energy_minus", "energy_imag_minus", "shift_energy_minus",
                         "eigenresidual_plus", "eigenresidual_minus", "phase_minus",
                         "extrapolated_energy", "uncertainty", "order", "note"])
    prov = _provenance(config, model, settings)
    sweep = adiabatic_sweep(model, sorted(config.eps, reverse=True), settings, dset,
                            config.psi0_index, config.cutoff_decades)
    for k, eps in enumerate(sweep.epsilons):
        sched = SwitchingSchedule(eps, "symmetric", config.cutoff_decades)
        phase, _ = denominator_phase(model, sched, settings, config.psi0_index, "-")
        table.add(experiment="gml", row="eps", epsilon=eps, **prov,
                  energy_plus=sweep.energies_plus[k], energy_minus=sweep.energies_minus[k],
                  energy_imag_minus=sweep.energies_imag_minus[k],
                  shift_energy_minus=sweep.shifts_minus[k],
                  eigenresidual_plus=sweep.eigenresiduals_plus[k].full,
                  eigenresidual_minus=sweep.eigenresiduals_minus[k].full, phase_minus=phase)
    idx = sweep.continued_index
    note = f"continued from H0 eigenstate {config.psi0_index} to H eigenstate {idx}"
    if idx != 0:
        note += " (not the ground state of H)"
    table.add(experiment="gml", row="limit", epsilon=0.0, **prov,
              energy_plus=sweep.extrapolated_plus, energy_minus=sweep.extrapolated_minus,
              extrapolated_energy=sweep.extrapolated_energy,
              uncertainty=sweep.extrapolation_uncertainty, order=sweep.order, note=note)
    _emit(table, config, "gml")
    return EXIT_OK


def cmd_sucher(config: RunConfig) -> int:
    model = build_model(config)
    settings = build_settings(config, model)
    dset = DerivativeSettings(config.dg_rel)
    table = ResultTable(["experiment", "row", "epsilon", *PROVENANCE, "estimate_re",
                         "estimate_im", "energy", "shift", "uncertainty", "order"])
    prov = _provenance(config, model, settings)
    res = sucher_shift(model, sorted(config.eps, reverse=True), settings, dset,
                       config.psi0_index, config.cutoff_decades)
    for eps, est in zip(res.epsilons, res.estimates):
        table.add(experiment="sucher", row="eps", epsilon=eps, **prov, estimate_re=est.real,
                  estimate_im=est.imag, energy=res.psi0_energy + est.real, shift=est.real)
    table.add(experiment="sucher", row="limit", epsilon=0.0, **prov, energy=res.energy,
              shift=res.extrapolated, uncertainty=res.uncertainty, order=res.order)
    _emit(table, config, "sucher")
    return EXIT_OK


def _parse_insertion(text: str) -> tuple[str, float]:
    name, sep, time = text.rpartition("@")
    if not sep or not name:
        raise UsageError(f"--insert expects NAME@TIME, got {text!r}")
    try:
        return name, float(time)
    except ValueError:
        raise UsageError(f"--insert time {time!r} is not a number") from None


def _correlator_spec(config: RunConfig, model: QuantumModel) -> CorrelatorSpec:
    entries = [_parse_insertion(x) for x in config.insert]
    psi0 = config.psi0_index
    if not entries and config.model not in models.CATALOG:
        block = models.read_model_file(config.model).get("correlator")
        if block:
            try:
                entries = [(x["op"], float(x["time"])) for x in block.get("insertions", [])]
            except (KeyError, TypeError, ValueError) as exc:
                raise UsageError(f"malformed correlator block: {exc}") from exc
            psi0 = int(block.get("psi0_index", psi0))
    try:
        return spec_from_catalog(model, entries, psi0)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def cmd_correlator(config: RunConfig) -> int:
    model = build_model(config)
    settings = build_settings(config, model)
    spec = _correlator_spec(config, model)
    table = ResultTable(["experiment", "row", "epsilon", *PROVENANCE, "insertions", "lhs_re",
                         "lhs_im", "rhs_re", "rhs_im", "deviation", "tolerance", "status"])
    prov = _provenance(config, model, settings)
    prov["psi0_index"] = spec.psi0_index
    label = " ".join(f"{x.label}@{render(x.time)}" for x in spec.insertions)
    rep = gml_correlator(model, sorted(config.eps, reverse=True), settings, spec,
                         config.cutoff_decades)
    for eps, rhs, dev in zip(rep.epsilons, rep.rhs, rep.deviations):
        table.add(experiment="correlator", row="eps", epsilon=eps, **prov, insertions=label,
                  lhs_re=rep.lhs.real, lhs_im=rep.lhs.imag, rhs_re=rhs.real, rhs_im=rhs.imag,
                  deviation=dev)
    ok = rep.deviation <= config.tolerance
    table.add(experiment="correlator", row="limit", epsilon=0.0, **prov, insertions=label,
              lhs_re=rep.lhs.real, lhs_im=rep.lhs.imag, rhs_re=rep.extrapolated_rhs.real,
              rhs_im=rep.extrapolated_rhs.imag, deviation=rep.deviation,
              tolerance=config.tolerance, status=ok)
    _emit(table, config, "correlator")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_model_validate(config: RunConfig, path: str) -> int:
    table = ResultTable(["experiment", "path", "kind", "field", "message", "deviation"])
    diags = models.validate_model(models.read_model_file(path))
    for d in diags:
        table.add(experiment="model-validate", path=path, kind=d.kind, field=d.field,
                  message=d.message, deviation=d.deviation)
    _emit(table, config, "model-validate")
    for d in diags:
        print(f"{d.kind}: {d.message}", file=sys.stderr)
    return EXIT_OK if not diags else EXIT_USAGE


# ---------------------------------------------------------------------------
# argument handling


def _add_common(p: argparse.ArgumentParser):
    a = p.add_argument
    a("--config", help="JSON file with RunConfig fields; flags override it")
    a("--print-config", action="store_true", help="echo the effective configuration and exit")
    a("--model", help="catalog name (two-level, diagonal-crossing, hubbard-dimer, random) "
                      "or model file path")
    a("--g", type=float, help="coupling (overrides the model's)")
    a("--delta", type=float, help="two-level splitting")
    a("--t-hop", type=float, dest="t_hop")
    a("--u", type=float)
    a("--g-scale", type=float, dest="g_scale")
    a("--dim", type=int)
    a("--seed", type=int)
    a("--scale", type=float)
    a("--real", action="store_true", default=None, help="real random model")
    a("--eps", type=float, nargs="+", help="switching rates, e.g. 0.2 0.1 0.05")
    a("--step", type=float, help="time step (default 1e-3*min(1, 1/|H0+|g|V|))")
    a("--dg-rel", type=float, dest="dg_rel")
    a("--cutoff-decades", type=float, dest="cutoff_decades")
    a("--psi0-index", type=int, dest="psi0_index")
    a("--calibration", help="tolerance constants file (key = value)")
    a("--output", "-o", help="output file")
    a("--format", choices=["csv", "json"])


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmlbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("verify-lemma", "g-derivative propagator identities"),
                           ("gml", "Gell-Mann--Low sweep and energy extrapolation"),
                           ("sucher", "energy shift from the S-operator"),
                           ("correlator", "Heisenberg vs S-operator two-point functions")):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        if name == "correlator":
            p.add_argument("--insert", action="append", metavar="NAME@TIME",
                           help="catalog operator at a time (repeatable)")
            p.add_argument("--tolerance", type=float)
    p = sub.add_parser("model-validate", help="check a model file")
    p.add_argument("path")
    p.add_argument("--output", "-o")
    p.add_argument("--format", choices=["csv", "json"])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base = asdict(RunConfig())
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(base)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        base.update(loaded)
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            base[f.name] = value
    config = RunConfig(**base)
    config.validate()
    return config


COMMANDS = {
    "verify-lemma": cmd_verify_lemma,
    "gml": cmd_gml,
    "sucher": cmd_sucher,
    "correlator": cmd_correlator,
}


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        config = resolve_config(args)
        if getattr(args, "print_config", False):
            print(json.dumps(asdict(config), indent=1))
            return EXIT_OK
        if config.calibration:
            set_tolerances(load_tolerance_model(config.calibration))
        if args.command == "model-validate":
            return cmd_model_validate(config, args.path)
        return COMMANDS[args.command](config)
    except NumericalFailure as exc:
        print(f"FAIL: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, WorkbenchError, ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # never let malformed input surface as a traceback
        print(f"error: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if getattr(args, "calibration", None):
            set_tolerances(None)


if __name__ == "__main__":
    sys.exit(main())
