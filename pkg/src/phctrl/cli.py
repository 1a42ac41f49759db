"""Command-line entry point wiring all modules together.

Configuration layering, later wins: built-in defaults, the PHGEN_SEED
environment variable (seed only), an optional --config JSON file, then
explicit flags.  The effective configuration is echoed into every
report, and rerunning from an echoed configuration reproduces the
report byte for byte except for wall_time.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from .core import (
    DEFAULT_SYMMETRY_TOL,
    Dims,
    ScalarField,
    dumps_system,
    system_from_dict,
    system_to_dict,
    validate_ph,
)
from .ctrb import (
    DEFAULT_PBH_TOL,
    canonical_witness,
    kalman_matrix,
    pbh_check,
    rank_svd,
)
from .errors import PhctrlError
from .experiments import (
    GridSpec,
    PI_SQUARED_THIRD,
    distance_to_uncontrollability,
    prop1_membership,
    prop1_partial_measure,
    run_genericity_trial,
    run_nowhere_density_probe,
)
from .sample import (
    SamplerSpec,
    ShiftedGram,
    Wishart,
    sample_ph,
    sample_pht,
    sample_uncontrollable,
    stream,
)
from .vectorize import dumps_packed, pack, packed_from_dict, unpack

DEFAULT_EPS_GRID = [0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1]


class _UsageError(Exception):
    pass


def _read_json_input(path: str | None):
    if path in (None, "-"):
        return json.load(sys.stdin)
    with open(path) as fp:
        return json.load(fp)


def _write_text(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fp:
            fp.write(text)


def _effective_config(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge defaults, PHGEN_SEED, the --config file, and explicit flags."""
    cfg = dict(defaults)
    env_seed = os.environ.get("PHGEN_SEED")
    if env_seed is not None and "seed" in cfg:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise _UsageError(f"PHGEN_SEED must be an integer, got {env_seed!r}")
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path) as fp:
            try:
                data = json.load(fp)
            except json.JSONDecodeError as e:
                raise _UsageError(f"config file {config_path}: {e}")
        if not isinstance(data, dict):
            raise _UsageError(f"config file {config_path} must hold a JSON object")
        unknown = set(data) - set(defaults)
        if unknown:
            raise _UsageError(
                f"config file {config_path} has unknown keys: {sorted(unknown)}"
            )
        cfg.update(data)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if "h_law" in cfg and isinstance(cfg["h_law"], str):
        cfg["h_law"] = cfg["h_law"].replace("-", "_")
    if "eps_grid" in cfg and isinstance(cfg["eps_grid"], str):
        try:
            cfg["eps_grid"] = [float(tok) for tok in cfg["eps_grid"].split(",") if tok.strip()]
        except ValueError:
            raise _UsageError(f"cannot parse eps grid {cfg['eps_grid']!r}")
    return cfg


def _sampler_spec(cfg: dict) -> SamplerSpec:
    if cfg["h_law"] == "wishart":
        law = Wishart(cfg.get("wishart_p"))
    elif cfg["h_law"] == "shifted_gram":
        law = ShiftedGram(cfg.get("gram_eps", 1.0))
    else:
        raise _UsageError(f"unknown H law {cfg['h_law']!r}")
    return SamplerSpec(
        dims=Dims(cfg["n"], cfg["m"]),
        field=ScalarField(cfg["field"]),
        j_scale=cfg["j_scale"],
        h_law=law,
        b_scale=cfg["b_scale"],
        seed=cfg["seed"],
    )


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_witness(args: argparse.Namespace) -> int:
    cfg = _effective_config(args, {"n": 2, "m": 1})
    system = canonical_witness(cfg["n"], cfg["m"])
    _write_text(args.out, dumps_system(system, indent=2) + "\n")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = _effective_config(
        args, {"tol": DEFAULT_SYMMETRY_TOL, "ph": False, "delta": None}
    )
    system = system_from_dict(_read_json_input(args.infile), tol=cfg["tol"])
    message = "valid structured system (J skew-adjoint, H self-adjoint)"
    if cfg["ph"]:
        ph = validate_ph(system, cfg["delta"])
        message = f"valid port-Hamiltonian system, pd_margin {ph.pd_margin!r}"
    _write_text(args.out, dumps_system(system, indent=2) + "\n")
    print(message, file=sys.stderr)
    return 0


def _cmd_pack(args: argparse.Namespace) -> int:
    cfg = _effective_config(args, {"tol": DEFAULT_SYMMETRY_TOL})
    system = system_from_dict(_read_json_input(args.infile), tol=cfg["tol"])
    _write_text(args.out, dumps_packed(pack(system), indent=2) + "\n")
    return 0


def _cmd_unpack(args: argparse.Namespace) -> int:
    v = packed_from_dict(_read_json_input(args.infile))
    _write_text(args.out, dumps_system(unpack(v), indent=2) + "\n")
    return 0


_SAMPLE_DEFAULTS = {
    "n": 2, "m": 1, "field": "real", "kind": "ph", "k": 1,
    "h_law": "wishart", "wishart_p": None, "gram_eps": 1.0,
    "j_scale": 1.0, "b_scale": 1.0, "seed": 0, "count": 1,
}


def _cmd_sample(args: argparse.Namespace) -> int:
    cfg = _effective_config(args, _SAMPLE_DEFAULTS)
    spec = _sampler_spec(cfg)
    lines = []
    for i in range(cfg["count"]):
        rng = stream(cfg["seed"], i)
        if cfg["kind"] == "ph":
            system = sample_ph(spec, rng)
        elif cfg["kind"] == "pht":
            system = sample_pht(spec, rng)
        elif cfg["kind"] == "uncontrollable":
            system = sample_uncontrollable(
                spec.dims, cfg["k"], rng, spec.field,
                j_scale=cfg["j_scale"], b_scale=cfg["b_scale"],
            )
        else:
            raise _UsageError(f"unknown sample kind {cfg['kind']!r}")
        lines.append(json.dumps(system_to_dict(system), separators=(",", ":")))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    cfg = _effective_config(args, {
        "tol": DEFAULT_SYMMETRY_TOL, "rank_rel_tol": None, "pbh_tol": DEFAULT_PBH_TOL,
    })
    system = system_from_dict(_read_json_input(args.infile), tol=cfg["tol"])
    report = rank_svd(kalman_matrix(system), cfg["rank_rel_tol"])
    pbh = pbh_check(system, cfg["pbh_tol"])
    out = {
        "rank": report.rank,
        "sv": list(report.singular_values),
        "tol": report.tol_used,
        "controllable": report.controllable,
        "pbh_agrees": pbh == report.controllable,
    }
    _write_text(args.out, json.dumps(out, indent=2) + "\n")
    return 0


_MC_DEFAULTS = {
    "n": 4, "m": 2, "field": "real",
    "h_law": "wishart", "wishart_p": None, "gram_eps": 1.0,
    "j_scale": 1.0, "b_scale": 1.0, "seed": 0,
    "trials": 1000, "cross_check": False, "rank_rel_tol": None,
}


def _cmd_mc_genericity(args: argparse.Namespace) -> int:
    cfg = _effective_config(args, _MC_DEFAULTS)
    spec = _sampler_spec(cfg)
    echo = {"subcommand": "mc-genericity", **cfg}
    report = run_genericity_trial(
        spec, cfg["trials"],
        cross_check=cfg["cross_check"],
        rank_rel_tol=cfg["rank_rel_tol"],
        config_echo=echo,
    )
    stats = report.sigma_n_stats
    print(
        f"mc-genericity: n={cfg['n']} m={cfg['m']} field={cfg['field']} "
        f"trials={report.trials} seed={cfg['seed']}"
    )
    print(
        f"controllable fraction: {report.fraction!r} "
        f"({report.controllable_count}/{report.trials})"
    )
    print(
        f"sigma_n of reachability matrix: min {stats['min']:.6e} "
        f"median {stats['median']:.6e} max {stats['max']:.6e}"
    )
    if report.pbh_agreements is not None:
        print(f"PBH cross-check agreements: {report.pbh_agreements}/{report.trials}")
    if args.json_out:
        _write_text(args.json_out, report.to_json() + "\n")
    if args.csv_out:
        header = "n,m,field,trials,controllable_count,fraction,min_sigma_n,seed"
        row = (
            f"{cfg['n']},{cfg['m']},{cfg['field']},{report.trials},"
            f"{report.controllable_count},{report.fraction!r},"
            f"{report.min_sigma_n!r},{cfg['seed']}"
        )
        _write_text(args.csv_out, header + "\n" + row + "\n")
    return 0


_PROBE_DEFAULTS = {
    "n": 3, "k": 1, "m": 1, "field": "real",
    "eps_grid": DEFAULT_EPS_GRID, "trials_per_eps": 500,
    "seed": 0, "max_retries": 60, "rank_rel_tol": None,
}


def _cmd_perturb_probe(args: argparse.Namespace) -> int:
    cfg = _effective_config(args, _PROBE_DEFAULTS)
    base = sample_uncontrollable(
        Dims(cfg["n"], cfg["m"]), cfg["k"], stream(cfg["seed"]),
        ScalarField(cfg["field"]),
    )
    echo = {"subcommand": "perturb-probe", **cfg}
    report = run_nowhere_density_probe(
        base, cfg["eps_grid"], cfg["trials_per_eps"],
        seed=cfg["seed"],
        rank_rel_tol=cfg["rank_rel_tol"],
        max_retries=cfg["max_retries"],
        config_echo=echo,
    )
    print(
        f"perturb-probe: n={cfg['n']} k={cfg['k']} m={cfg['m']} "
        f"base rank {report.base_rank}, seed {cfg['seed']}"
    )
    for row in report.rows:
        print(
            f"  eps={row.eps:11.4e}  fraction={row.fraction:6.4f}  "
            f"mean_rank={row.mean_rank:6.3f}  mean_sigma_n={row.mean_sigma_n:.6e}"
        )
    if args.json_out:
        _write_text(args.json_out, report.to_json() + "\n")
    if args.csv_out:
        _write_text(args.csv_out, report.to_csv())
    return 0


def _cmd_dist_unctrb(args: argparse.Namespace) -> int:
    cfg = _effective_config(args, {
        "tol": DEFAULT_SYMMETRY_TOL, "grid_points": 41,
        "refine_levels": 16, "margin": 1.0,
    })
    system = system_from_dict(_read_json_input(args.infile), tol=cfg["tol"])
    estimate = distance_to_uncontrollability(
        system,
        GridSpec(
            points_per_axis=cfg["grid_points"],
            refine_levels=cfg["refine_levels"],
            margin=cfg["margin"],
        ),
    )
    print(
        f"distance to uncontrollability <= {estimate.value:.6e} "
        f"at lambda = {estimate.lam.real:+.6e}{estimate.lam.imag:+.6e}j "
        f"({estimate.evaluations} pencil evaluations; upper bound)"
    )
    if args.json_out:
        payload = {
            "config": {"subcommand": "dist-unctrb", **cfg},
            "distance": estimate.value,
            "lambda": [estimate.lam.real, estimate.lam.imag],
            "evaluations": estimate.evaluations,
        }
        _write_text(args.json_out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_prop1(args: argparse.Namespace) -> int:
    cfg = _effective_config(args, {"i_max": 1000, "x": None})
    measure = prop1_partial_measure(cfg["i_max"])
    print(f"partial measure of the first {cfg['i_max']} intervals: {measure!r}")
    print(f"limit pi^2/3 = {PI_SQUARED_THIRD!r} (gap {PI_SQUARED_THIRD - measure:.6e})")
    membership = None
    if cfg["x"] is not None:
        result = prop1_membership(cfg["x"], cfg["i_max"])
        membership = {
            "x": cfg["x"],
            "covered": result.covered,
            "witness_index": result.witness_index,
        }
        print(
            f"x = {cfg['x']!r}: covered={result.covered} "
            f"witness_index={result.witness_index}"
        )
    if args.json_out:
        payload = {
            "config": {"subcommand": "prop1", **cfg},
            "partial_measure": measure,
            "limit": PI_SQUARED_THIRD,
            "membership": membership,
        }
        _write_text(args.json_out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phctrl",
        description="Port-Hamiltonian system toolbox: structure validation, "
                    "controllability certificates, and genericity experiments.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON file overriding defaults (flags win)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("witness", parents=[common],
                       help="emit the canonical controllable system")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--out", "-o")
    p.set_defaults(handler=_cmd_witness)

    p = sub.add_parser("validate", parents=[common],
                       help="validate a system JSON and emit its normalized form")
    p.add_argument("--in", dest="infile", help="input path, - for stdin")
    p.add_argument("--tol", type=float, help="symmetry residual gate")
    p.add_argument("--ph", action=argparse.BooleanOptionalAction,
                   help="also require H positive definite")
    p.add_argument("--delta", type=float, help="positive definiteness margin")
    p.add_argument("--out", "-o")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("pack", parents=[common],
                       help="system JSON to flat coordinate vector")
    p.add_argument("--in", dest="infile")
    p.add_argument("--tol", type=float)
    p.add_argument("--out", "-o")
    p.set_defaults(handler=_cmd_pack)

    p = sub.add_parser("unpack", parents=[common],
                       help="flat coordinate vector to system JSON")
    p.add_argument("--in", dest="infile")
    p.add_argument("--out", "-o")
    p.set_defaults(handler=_cmd_unpack)

    p = sub.add_parser("sample", parents=[common],
                       help="draw random systems as JSON lines")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--field", choices=["real", "complex"])
    p.add_argument("--kind", choices=["ph", "pht", "uncontrollable"])
    p.add_argument("--k", type=int, help="unreachable states (kind=uncontrollable)")
    p.add_argument("--h-law", dest="h_law", choices=["wishart", "shifted-gram"])
    p.add_argument("--wishart-p", dest="wishart_p", type=int)
    p.add_argument("--gram-eps", dest="gram_eps", type=float)
    p.add_argument("--j-scale", dest="j_scale", type=float)
    p.add_argument("--b-scale", dest="b_scale", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--out", "-o")
    p.set_defaults(handler=_cmd_sample)

    p = sub.add_parser("check", parents=[common],
                       help="controllability verdict for a system JSON")
    p.add_argument("--in", dest="infile")
    p.add_argument("--tol", type=float)
    p.add_argument("--rank-rel-tol", dest="rank_rel_tol", type=float)
    p.add_argument("--pbh-tol", dest="pbh_tol", type=float)
    p.add_argument("--out", "-o")
    p.set_defaults(handler=_cmd_check)

    p = sub.add_parser("mc-genericity", parents=[common],
                       help="Monte Carlo controllable fraction under random draws")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--field", choices=["real", "complex"])
    p.add_argument("--h-law", dest="h_law", choices=["wishart", "shifted-gram"])
    p.add_argument("--wishart-p", dest="wishart_p", type=int)
    p.add_argument("--gram-eps", dest="gram_eps", type=float)
    p.add_argument("--j-scale", dest="j_scale", type=float)
    p.add_argument("--b-scale", dest="b_scale", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--cross-check", dest="cross_check",
                   action=argparse.BooleanOptionalAction)
    p.add_argument("--rank-rel-tol", dest="rank_rel_tol", type=float)
    p.add_argument("--json", dest="json_out", metavar="PATH")
    p.add_argument("--csv", dest="csv_out", metavar="PATH")
    p.set_defaults(handler=_cmd_mc_genericity)

    p = sub.add_parser("perturb-probe", parents=[common],
                       help="perturb an uncontrollable base across step sizes")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--field", choices=["real", "complex"])
    p.add_argument("--eps-grid", dest="eps_grid",
                   help="comma-separated step sizes, e.g. 0,1e-8,1e-4")
    p.add_argument("--trials-per-eps", dest="trials_per_eps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-retries", dest="max_retries", type=int)
    p.add_argument("--rank-rel-tol", dest="rank_rel_tol", type=float)
    p.add_argument("--json", dest="json_out", metavar="PATH")
    p.add_argument("--csv", dest="csv_out", metavar="PATH")
    p.set_defaults(handler=_cmd_perturb_probe)

    p = sub.add_parser("dist-unctrb", parents=[common],
                       help="grid estimate of the distance to uncontrollability")
    p.add_argument("--in", dest="infile")
    p.add_argument("--tol", type=float)
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--refine-levels", dest="refine_levels", type=int)
    p.add_argument("--margin", type=float)
    p.add_argument("--json", dest="json_out", metavar="PATH")
    p.set_defaults(handler=_cmd_dist_unctrb)

    p = sub.add_parser("prop1", parents=[common],
                       help="interval union around the rationals: partial "
                            "measure and membership")
    p.add_argument("--i-max", dest="i_max", type=int)
    p.add_argument("--x", type=float, help="point to test for coverage")
    p.add_argument("--json", dest="json_out", metavar="PATH")
    p.set_defaults(handler=_cmd_prop1)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        return args.handler(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except PhctrlError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (json.JSONDecodeError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
