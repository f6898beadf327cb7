"""koopman-cert command line interface.

Subcommands: simulate, estimate, variance, bounds, study.  Exit codes:
0 success, 2 config error, 3 numerical failure.
"""

import argparse
import json
import os
import sys as _sys

import numpy as np

from . import bounds as bounds_mod
from . import studies
from .config import dictionary_from_config, load_json, system_from_config
from .edmd import edmd_estimate, estimation_error
from .errors import ConfigError, KoopmanCertError, NumericalError
from .galerkin import galerkin_matrix
from .systems import sample_ergodic, sample_iid
from .variance import exact_reference_gram


def _add_common(p):
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default=None, help="output file or directory")


def build_parser():
    p = argparse.ArgumentParser(prog="koopman-cert")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "estimate", "variance", "bounds", "study"):
        _add_common(sub.add_parser(name))
    sub.choices["simulate"].add_argument("--m", type=int, default=100)
    sub.choices["simulate"].add_argument(
        "--regime", choices=["ergodic", "iid"], default="ergodic"
    )
    sub.choices["estimate"].add_argument("--m", type=int, default=1000)
    sub.choices["estimate"].add_argument(
        "--regime", choices=["ergodic", "iid"], default="ergodic"
    )
    return p


def _seed(args, cfg, default=0):
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", default))


def _emit(args, payload, default_name):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        path = args.out
        if os.path.isdir(path):
            path = os.path.join(path, default_name)
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_simulate(args):
    cfg = load_json(args.config)
    system = system_from_config(cfg["system"])
    seed = _seed(args, cfg)
    if args.regime == "ergodic":
        pairs = sample_ergodic(system, args.m, seed=seed)
    else:
        from .studies import _default_mu0

        pairs = sample_iid(system, _default_mu0(system), args.m, seed=seed)
    if args.format == "csv":
        lines = ["k,x,y"]
        for k, (x, y) in enumerate(zip(np.asarray(pairs.xs), np.asarray(pairs.ys))):
            lines.append(f"{k},{_scalar(x)},{_scalar(y)}")
        text = "\n".join(lines) + "\n"
        if args.out:
            path = args.out
            if os.path.isdir(path):
                path = os.path.join(path, "pairs.csv")
            with open(path, "w") as fh:
                fh.write(text)
        else:
            print(text, end="")
        return 0
    payload = {
        "regime": pairs.regime.value,
        "seed": pairs.seed,
        "xs": np.asarray(pairs.xs).tolist(),
        "ys": np.asarray(pairs.ys).tolist(),
    }
    _emit(args, payload, "pairs.json")
    return 0


def _scalar(v):
    arr = np.asarray(v)
    if arr.ndim == 0:
        return repr(arr.item())
    return ";".join(repr(x) for x in arr.ravel())


def cmd_estimate(args):
    cfg = load_json(args.config)
    system = system_from_config(cfg["system"])
    dictionary = dictionary_from_config(cfg["dictionary"], system=system)
    seed = _seed(args, cfg)
    if args.regime == "ergodic":
        pairs = sample_ergodic(system, args.m, seed=seed)
    else:
        from .studies import _default_mu0

        pairs = sample_iid(system, _default_mu0(system), args.m, seed=seed)
    est = edmd_estimate(dictionary, pairs)
    payload = est.to_json_dict()
    payload["seed"] = seed
    payload["config_hash"] = hash_config(cfg)
    try:
        ref = galerkin_matrix(exact_reference_gram(system, dictionary))
        payload["errors"] = estimation_error(est, ref)
    except KoopmanCertError:
        pass
    _emit(args, payload, "estimate.json")
    return 0


def hash_config(cfg):
    import hashlib

    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True).encode("utf-8")
    ).hexdigest()[:16]


def cmd_variance(args):
    cfg = load_json(args.config)
    study = studies.StudyConfig.from_dict(_study_dict(cfg, args))
    rows = studies.run_variance_check(study)
    return _emit_rows(args, rows, "variance", "variance_check.csv")


def cmd_bounds(args):
    cfg = load_json(args.config)
    system = system_from_config(cfg["system"])
    dictionary = dictionary_from_config(cfg["dictionary"], system=system)
    branch = cfg.get("branch", bounds_mod.BRANCH_ERGODIC_LINEAR)
    thin = cfg.get("thin")
    thin_params = (thin["alpha"], thin["theta"]) if thin else None
    seed = _seed(args, cfg)
    m_values = cfg.get("m_grid", [1000, 10000])
    epsilons = cfg.get("epsilons", [1.0])
    n_trials = int(cfg.get("n_trials", 1000))
    rows = studies.run_bound_validity(
        system, dictionary, branch, m_values, epsilons, n_trials, seed,
        thin_params=thin_params, threads=args.threads,
    )
    inputs = bounds_mod.bound_inputs_from_exact(
        system, dictionary, thin_params=thin_params
    )
    report = studies._branch_bound(inputs, branch, m_values[-1], epsilons[0])
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "bound_report.json"), "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    studies.write_csv(os.path.join(out_dir, "bound_grid.csv"), rows, "bounds")
    return 0


def _study_dict(cfg, args):
    d = dict(cfg)
    if args.seed is not None:
        d["seed"] = args.seed
    if args.threads != 1:
        d["threads"] = args.threads
    return d


def cmd_study(args):
    cfg = load_json(args.config)
    study = studies.StudyConfig.from_dict(_study_dict(cfg, args))
    rows, fits = studies.run_convergence_study(study)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    if args.format == "json":
        with open(os.path.join(out_dir, "convergence.json"), "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        studies.write_csv(os.path.join(out_dir, "convergence.csv"), rows, "convergence")
    with open(os.path.join(out_dir, "rate_fit.json"), "w") as fh:
        json.dump(
            {k: (v.to_json_dict() if v else None) for k, v in fits.items()},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return 0


def _emit_rows(args, rows, schema, default_name):
    if args.format == "json" or not args.out:
        payload = rows
        _emit(args, payload, default_name.replace(".csv", ".json"))
        return 0
    path = args.out
    if os.path.isdir(path):
        path = os.path.join(path, default_name)
    studies.write_csv(path, rows, schema)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "variance": cmd_variance,
    "bounds": cmd_bounds,
    "study": cmd_study,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2
    except (NumericalError, KoopmanCertError) as exc:
        print(f"numerical failure: {exc}", file=_sys.stderr)
        return 3


if __name__ == "__main__":
    _sys.exit(main())
