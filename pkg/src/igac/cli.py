"""Command-line entry point: ``igac {fisher|curvature|geodesic|jacobi|ige|report}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from ._ode import StepControl
from .config import FORMATS, MAX_SEED, load_config
from .exceptions import ConfigError, ConvergenceError, MetricError
from .fisher import IntegrationScheme, fisher_metric, get_family
from .geodesic import GeodesicState, integrate_geodesic, unit_speed
from .jacobi import default_deviation, divergence_exponent, integrate_jlc
from .manifolds import build_manifold, parse_params
from .runner import (
    classification_summary,
    csv_text,
    curvature_payload,
    dumps_json,
    emit_outputs,
    fit_summary,
    geodesic_table,
    ige_table,
    jacobi_table,
    run_experiment,
    table_json,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("igac")


def _floats(text: str, what: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ValueError(f"{what}: empty")
    return np.array(vals)


def parse_init(text: str):
    """``"theta=0,1;thetadot=0.5,-1"`` -> (theta, thetadot)."""
    parts = {}
    key = None
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if "=" in chunk:
            key, chunk = (s.strip() for s in chunk.split("=", 1))
            parts[key] = [chunk]
        elif key is not None and chunk:
            parts[key].append(chunk)
    unknown = set(parts) - {"theta", "thetadot"}
    if unknown or "theta" not in parts or "thetadot" not in parts:
        raise ValueError(f"--init must look like 'theta=a,b;thetadot=c,d', got {text!r}")
    return (_floats(",".join(parts["theta"]), "theta"), _floats(",".join(parts["thetadot"]), "thetadot"))


def _seed(text):
    v = int(text)
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _emit(args, name: str, text: str):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    else:
        sys.stdout.write(text)


def _table(args, stem, header, cols):
    if args.format == "json":
        _emit(args, stem + ".json", dumps_json(table_json(header, cols)) + "\n")
    else:
        _emit(args, stem + ".csv", csv_text(header, cols))


def _manifold(args):
    return build_manifold(args.manifold, parse_params(args.params))


def _geodesic(args, m, t_eval=None):
    theta, thetadot = parse_init(args.init)
    if not args.raw_speed:
        thetadot = unit_speed(m, theta, thetadot)
    control = StepControl(rtol=args.rtol, atol=args.atol)
    if t_eval is None and args.samples:
        t_eval = np.linspace(0.0, args.tau_max, args.samples)
    return integrate_geodesic(m, GeodesicState(0.0, theta, thetadot), args.tau_max, control, t_eval)


def cmd_fisher(args):
    family = get_family(args.family)
    theta = _floats(args.theta, "--theta")
    seed = args.seed if args.seed is not None else 0
    scheme = IntegrationScheme(kind=args.scheme, budget=args.budget or IntegrationScheme.budget, seed=seed)
    est = fisher_metric(family, theta, scheme)
    payload = {"family": family.name, "theta": theta.tolist(), "scheme": est.scheme,
               "metric": est.metric.tolist(), "error": est.error.tolist()}
    _emit(args, "fisher.json", dumps_json(payload) + "\n")


def cmd_curvature(args):
    m = _manifold(args)
    payload = curvature_payload(m, _floats(args.point, "--point"))
    payload["manifold"] = m.name
    _emit(args, "curvature.json", dumps_json(payload) + "\n")


def cmd_geodesic(args):
    m = _manifold(args)
    path = _geodesic(args, m)
    if path.status != "completed":
        log.warning("geodesic stopped early at tau=%s (%s)", path.tau_end, path.status)
    _table(args, "geodesic", *geodesic_table(m, path))


def cmd_jacobi(args):
    m = _manifold(args)
    path = _geodesic(args, m)
    J0, DJ0 = default_deviation(m, path.theta[0], path.thetadot[0])
    field = integrate_jlc(m, path, J0, DJ0)
    window = tuple(_floats(args.window, "--window")) if args.window else None
    if window is not None and len(window) != 2:
        raise ValueError("--window expects 'a,b'")
    fit = divergence_exponent(field, window)
    _table(args, "jacobi", *jacobi_table(field))
    summary = dumps_json(fit_summary(fit)) + "\n"
    if args.out:
        _emit(args, "jacobi_fit.json", summary)
    else:
        sys.stderr.write(summary)


def _load(args):
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, directory=args.out)


def cmd_ige(args):
    cfg = _load(args)
    cfg = dataclasses.replace(
        cfg,
        curvature=dataclasses.replace(cfg.curvature, enabled=False),
        jacobi=dataclasses.replace(cfg.jacobi, enabled=False),
        ige=dataclasses.replace(cfg.ige, enabled=True),
    )
    if not cfg.ige.grid:
        raise ConfigError([("ige.grid", "missing key")])
    res = run_experiment(cfg, threads=args.threads)
    summary = dumps_json({k: v for k, v in classification_summary(res.classification).items()
                          if k in ("class", "rate", "r2_linear", "r2_log")}) + "\n"
    if args.out:
        _emit(args, "ige_series.csv", csv_text(*ige_table(res.series)))
        _emit(args, "ige_classification.json", summary)
    elif args.format == "json":
        sys.stdout.write(summary)
    else:
        sys.stdout.write(csv_text(*ige_table(res.series)))
        sys.stderr.write(summary)


def cmd_report(args):
    cfg = _load(args)
    formats = (args.format,) if args.format else None
    res = run_experiment(cfg, threads=args.threads)
    emit_outputs(res, formats=formats)
    rep = res.report
    line = f"{rep.manifold}: {rep.verdict}"
    if rep.exponent is not None:
        line += f"  lambda_J={rep.exponent.exponent:.4g} (r2={rep.exponent.r2:.4f})"
    if rep.growth is not None:
        line += f"  IGE {rep.growth.label} rate={rep.growth.rate:.4g}"
    print(line)
    print(f"artifacts in {cfg.output.directory}")


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # accepted before or after the subcommand; the subcommand copy must not
    # overwrite a value given before it, hence SUPPRESS defaults there
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: stdout for single analyses)", **kw)
    common.add_argument("--seed", type=_seed, help="random seed (unsigned 64-bit)", **kw)
    common.add_argument("--threads", type=_positive_int,
                        help="worker threads (default: $IGAC_THREADS, else 1); results do not depend on it", **kw)
    common.add_argument("--format", choices=FORMATS, help="output format", **kw)
    common.add_argument("-v", "--verbose", action="store_true", **kw)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    p = argparse.ArgumentParser(prog="igac", parents=[_global_flags(suppress=False)],
                                description="Information-geometric chaos analysis.")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fisher", parents=[common], help="Fisher-Rao metric of a distribution family")
    f.add_argument("--family", required=True, choices=["gaussian", "exponential-spacing", "wigner-dyson"])
    f.add_argument("--theta", required=True, help="parameters, comma separated")
    f.add_argument("--scheme", choices=["quad", "mc"], default="quad")
    f.add_argument("--budget", type=_positive_int)
    f.set_defaults(func=cmd_fisher)

    def manifold_args(q):
        q.add_argument("--manifold", required=True, choices=["gaussian", "iho", "integrable", "chaotic"])
        q.add_argument("--params", default="", help="k=v[,k=v...]; list items separated by ';'")

    c = sub.add_parser("curvature", parents=[common], help="curvature tensors at a point")
    manifold_args(c)
    c.add_argument("--point", required=True)
    c.set_defaults(func=cmd_curvature)

    def flow_args(q):
        manifold_args(q)
        q.add_argument("--init", required=True, help="'theta=a,b;thetadot=c,d'")
        q.add_argument("--tau-max", type=float, required=True)
        q.add_argument("--rtol", type=float, default=1e-10)
        q.add_argument("--atol", type=float, default=1e-12)
        q.add_argument("--samples", type=int, default=201, help="output samples (0: integrator steps)")
        q.add_argument("--raw-speed", action="store_true", help="do not rescale thetadot to unit speed")

    g = sub.add_parser("geodesic", parents=[common], help="integrate a geodesic")
    flow_args(g)
    g.set_defaults(func=cmd_geodesic)

    j = sub.add_parser("jacobi", parents=[common], help="Jacobi field and divergence exponent")
    flow_args(j)
    j.add_argument("--window", help="fit window 'a,b' (default: last 60%% of the span)")
    j.set_defaults(func=cmd_jacobi)

    i = sub.add_parser("ige", parents=[common], help="entropy series from a TOML config")
    i.add_argument("--config", required=True)
    i.set_defaults(func=cmd_ige)

    r = sub.add_parser("report", parents=[common], help="full experiment and chaos verdict")
    r.add_argument("--config", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="igac: %(levelname)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        for path, msg in exc.problems:
            print(f"igac: config error: {path}: {msg}" if path else f"igac: config error: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, MetricError, ArithmeticError) as exc:
        print(f"igac: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"igac: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
