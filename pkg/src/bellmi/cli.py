"""Command-line entry point.

Subcommands: ``simulate`` (Monte Carlo correlation tables), ``mutual-info``
(the information measures), ``transform`` (build correlated-settings models
and reports), and ``verify`` (the Bell-locality check on a model file).

All randomness flows from ``--seed``; outputs carry no timestamps and do
not echo the parallelism degree, so a command line repeated with the same
seed produces identical bytes at any parallelism.

Exit codes: 0 success, 1 verification failed, 2 configuration or parse
error, 3 internal inconsistency, 4 acceptance-rate floor breached.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np

from . import analysis, serialize, transforms
from .errors import (
    AcceptanceFloorError,
    ConditioningError,
    ConfigError,
    InternalConsistencyError,
    ValidationError,
)
from .models import (
    PRESETS,
    GisinGisinModel,
    SettingsSpec,
    TonerBaconModel,
    brans_build,
    input_broadcast_build,
    pr_box_conditional,
    preset,
)
from .sphere import RandomSource
from .transforms import TransformReport

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3
EXIT_FLOOR = 4


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _emit(text: str, out_file: Optional[str]) -> None:
    if out_file is None:
        sys.stdout.write(text)
    else:
        with open(out_file, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _build_spec(args) -> SettingsSpec:
    if args.settings_file and args.preset:
        raise ConfigError("--preset and --settings-file are mutually exclusive")
    if args.settings_file:
        spec = serialize.load_settings(_read(args.settings_file))
    else:
        spec = preset(args.preset or "chsh")
    if getattr(args, "input_dist_file", None):
        p_xy = serialize.load_input_dist(_read(args.input_dist_file))
        spec = SettingsSpec.finite(spec.alice_settings, spec.bob_settings, p_xy)
    return spec


def _model_for(name: str):
    if name == "tb":
        return TonerBaconModel()
    if name == "gg":
        return GisinGisinModel()
    raise ConfigError(f"model {name!r} has no round sampler; use the transform command")


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------

def cmd_simulate(args) -> int:
    spec = _build_spec(args)
    model = _model_for(args.model)
    est = analysis.estimate_correlations(
        model,
        spec,
        args.rounds,
        RandomSource(args.seed),
        parallelism=args.parallelism,
    )
    quantum = analysis.exact_singlet_conditional(spec)
    payload = serialize.correlation_payload(
        est, model=args.model, seed=args.seed, quantum=quantum
    )
    if args.output == "csv":
        _emit(serialize.correlation_csv(payload), args.out_file)
    else:
        _emit(serialize.json_text(payload), args.out_file)
    return EXIT_OK


# ----------------------------------------------------------------------
# mutual-info
# ----------------------------------------------------------------------

def cmd_mutual_info(args) -> int:
    target = args.target
    if target == "tb-uniform":
        est = analysis.mi_tb_quadrature(args.panels)
        payload = serialize.mi_payload(
            est, target=target, bound=1.0, panels=args.panels
        )
    elif target == "gg-uniform":
        est = analysis.mi_gg_uniform()
        payload = serialize.mi_payload(est, target=target, bound=None)
    elif target == "tb-finite":
        spec = _build_spec(args)
        est = analysis.mi_finite_settings_tb(
            spec, args.samples, RandomSource(args.seed)
        )
        payload = serialize.mi_payload(
            est, target=target, bound=1.0, samples=args.samples, seed=args.seed
        )
    elif target == "exact-model-file":
        if not args.model_file:
            raise ConfigError("--target exact-model-file needs --model-file")
        model = serialize.load_model(_read(args.model_file))
        a_vars = tuple(v for v in args.vars_a.split(",") if v)
        b_vars = (
            tuple(v for v in args.vars_b.split(",") if v) if args.vars_b else None
        )
        est = analysis.mi_exact_finite(model, a_vars, b_vars)
        bound = None
        if "m" in model.table.variables:
            bound = model.table.entropy(("m",))
        payload = serialize.mi_payload(
            est,
            target=target,
            bound=bound,
            vars_a=list(a_vars),
            vars_b=list(b_vars) if b_vars else list(model.hidden_vars),
        )
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown target {target!r}")
    _emit(serialize.json_text(payload), args.out_file)
    return EXIT_OK


# ----------------------------------------------------------------------
# transform
# ----------------------------------------------------------------------

def _resolve_corr_and_spec(args):
    if args.corr_file:
        if args.settings_file:
            raise ConfigError(
                "--corr-file carries its own settings; --settings-file conflicts"
            )
        spec, corr = serialize.load_correlation(_read(args.corr_file))
        if args.input_dist_file:
            p_xy = serialize.load_input_dist(_read(args.input_dist_file))
            spec = SettingsSpec.finite(spec.alice_settings, spec.bob_settings, p_xy)
        return spec, corr
    spec = _build_spec(args)
    if args.corr == "pr-box":
        return spec, pr_box_conditional()
    return spec, analysis.exact_singlet_conditional(spec)


def cmd_transform(args) -> int:
    if not args.out_file:
        raise ConfigError("transform needs --out-file for the model file")
    source = RandomSource(args.seed)
    if args.model == "brans":
        spec, corr = _resolve_corr_and_spec(args)
        cs = brans_build(corr, spec)
        report = TransformReport(
            source="brans",
            corr_deviation=cs.conditional().max_deviation(corr),
            inputs_deviation=float(np.max(np.abs(cs.input_marginal() - spec.p_xy))),
            mi_value=analysis.mi_exact_finite(cs).value,
            mi_bound=None,
            extras={"exact": True, "lambda_support": len(cs.table.labels("lam"))},
        )
        model_text = serialize.json_text(serialize.model_payload(cs))
    elif args.model == "input-broadcast":
        spec, corr = _resolve_corr_and_spec(args)
        comm = input_broadcast_build(corr, spec)
        cs, report = transforms.comm_to_cs(comm, spec)
        model_text = serialize.json_text(serialize.model_payload(cs))
    elif args.model == "tb":
        spec = _build_spec(args)
        cs, report = transforms.comm_to_cs(
            TonerBaconModel(), spec, source=source, rounds=args.rounds
        )
        model_text = serialize.json_text(serialize.sampler_payload(cs, seed=args.seed))
    elif args.model == "gg":
        spec = _build_spec(args)
        cs, report = transforms.det_to_cs(
            GisinGisinModel(),
            spec,
            source=source,
            rounds=args.rounds,
            floor=args.floor,
        )
        model_text = serialize.json_text(serialize.sampler_payload(cs, seed=args.seed))
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown model {args.model!r}")
    _emit(model_text, args.out_file)
    _emit(serialize.json_text(serialize.transform_payload(report)), None)
    return EXIT_OK


# ----------------------------------------------------------------------
# verify
# ----------------------------------------------------------------------

def cmd_verify(args) -> int:
    model = serialize.load_model(_read(args.model_file))
    report = analysis.verify_bell_local(model, tol=args.tol)
    _emit(serialize.json_text(serialize.locality_payload(report)), args.out_file)
    return EXIT_OK if report.ok else EXIT_VERIFY_FAILED


# ----------------------------------------------------------------------
# parser wiring
# ----------------------------------------------------------------------

def _add_settings_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), default=None,
                   help="named settings preset (default: chsh)")
    p.add_argument("--settings-file", default=None,
                   help="JSON settings file (alice_settings, bob_settings, p_xy)")
    p.add_argument("--input-dist-file", default=None,
                   help="JSON file overriding the joint input distribution p_xy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellmi",
        description=(
            "Bell-local models with correlated measurement settings: "
            "simulation, transforms, and mutual-information accounting."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="estimate a correlation table by Monte Carlo")
    p.add_argument("--model", required=True, choices=("tb", "gg"))
    _add_settings_flags(p)
    p.add_argument("--rounds", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("--out-file", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mutual-info", help="compute I(x,y:lambda) for a target")
    p.add_argument(
        "--target",
        required=True,
        choices=("tb-uniform", "gg-uniform", "tb-finite", "exact-model-file"),
    )
    _add_settings_flags(p)
    p.add_argument("--model-file", default=None)
    p.add_argument("--vars-a", default="x,y", help="comma-separated first variable set")
    p.add_argument("--vars-b", default=None,
                   help="comma-separated second variable set (default: hidden vars)")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--panels", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-file", default=None)
    p.set_defaults(func=cmd_mutual_info)

    p = sub.add_parser("transform", help="build a correlated-settings model + report")
    p.add_argument(
        "--model", required=True, choices=("tb", "gg", "brans", "input-broadcast")
    )
    _add_settings_flags(p)
    p.add_argument("--corr", choices=("quantum", "pr-box"), default="quantum",
                   help="target correlations for brans/input-broadcast")
    p.add_argument("--corr-file", default=None,
                   help="correlation-table JSON fixing settings and target")
    p.add_argument("--rounds", type=int, default=transforms.REPORT_ROUNDS,
                   help="Monte Carlo rounds for sampled-path report checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--floor", type=float, default=1e-6,
                   help="abort when the double-click acceptance rate sits below this")
    p.add_argument("--out-file", default=None, help="model file destination (required)")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("verify", help="check Bell locality of an exact model file")
    p.add_argument("model_file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out-file", default=None)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AcceptanceFloorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FLOOR
    except InternalConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ConfigError, ValidationError, ConditioningError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
