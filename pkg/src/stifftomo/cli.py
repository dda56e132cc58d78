"""Command-line interface: generate, fit, extract, curve, oracle."""

import argparse
import csv
import sys
import warnings

import numpy as np

from . import __version__
from .boussinesq import STRAIN_LABELS, scaled_strain_vector
from .elastic import contact_modulus
from .errors import ValidationError
from .forward import indentation_curve_exact, m3_spherical, stiffness_asymptotic, stiffness_map_forward
from .inverse import FitResult, extract_inclusion, fit_map
from .io import dump_json, format_float, load_config, load_map, parse_quantity, read_json, save_map, write_json
from .polarization import dimensionless_polarization, spherical_ks_gs

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3


def cmd_generate(args):
    cfg = load_config(args.config)
    incl = cfg.require_inclusion()
    smap = stiffness_map_forward(
        cfg.grid,
        cfg.material,
        incl,
        cfg.indenter,
        cfg.require_w(),
        g3=cfg.g3,
        noise_sigma=cfg.noise_sigma,
        seed=cfg.seed,
        stiffness=cfg.stiffness_model,
    )
    save_map(smap, args.out)
    return EXIT_OK


def cmd_fit(args):
    smap = load_map(args.inp)
    result = fit_map(smap, multistart=args.multistart, max_iter=args.max_iter)
    write_json(args.out, result.to_dict())
    if not result.converged:
        print(f"fit did not converge: {result.message}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_extract(args):
    cfg = load_config(args.config)
    fit = FitResult.from_dict(read_json(args.fit))
    convention = "paper" if args.paper_normalization else cfg.convention
    if args.known_volume is not None:
        res = extract_inclusion(
            fit,
            cfg.material,
            cfg.indenter,
            cfg.nu0,
            volume=parse_quantity(args.known_volume, "volume", "--known-volume"),
            convention=convention,
        )
    else:
        res = extract_inclusion(fit, cfg.material, cfg.indenter, cfg.nu0, alpha=args.known_alpha, convention=convention)
    sys.stdout.write(dump_json(res.to_dict()))
    return EXIT_OK


def cmd_curve(args):
    cfg = load_config(args.config)
    incl = cfg.require_inclusion()
    w_max = parse_quantity(args.w_max, "length", "--w-max")
    if not w_max > 0 or args.steps < 1:
        raise ValidationError("--w-max must be positive and --steps at least 1")
    x1 = incl.x0[0] if args.x1 is None else parse_quantity(args.x1, "length", "--x1")
    x2 = incl.x0[1] if args.x2 is None else parse_quantity(args.x2, "length", "--x2")
    xi = float(np.hypot(x1 - incl.x0[0], x2 - incl.x0[1]) / incl.d)
    m3 = cfg.g3 + float(m3_spherical(cfg.material, incl, xi))
    theta1 = contact_modulus(cfg.material)
    rows = []
    for i in range(1, args.steps + 1):
        w = w_max * i / args.steps
        state = indentation_curve_exact(w, cfg.indenter, theta1, m3)
        s_eps, s0 = stiffness_asymptotic(w, cfg.indenter, theta1, m3)
        rows.append((w, state.a, state.P, state.S, float(s_eps), float(s0), m3))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("w", "a", "P", "S_exact", "S_asymptotic", "S0", "m3"))
        for row in rows:
            writer.writerow([format_float(v) for v in row])
    return EXIT_OK


def cmd_oracle(args):
    if args.what == "strain":
        eps = scaled_strain_vector(args.xi, args.nu)
        out = {"xi": args.xi, "nu": args.nu, "labels": list(STRAIN_LABELS), "strain": eps.tolist()}
    else:
        ks = spherical_ks_gs(args.alpha, args.nu, args.nu0)
        out = {
            "alpha": args.alpha,
            "nu": args.nu,
            "nu0": args.nu0,
            "k_s": ks.k_s,
            "g_s": ks.g_s,
            "p": dimensionless_polarization(ks).tolist(),
        }
    sys.stdout.write(dump_json(out))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stifftomo",
        description="Asymptotic indentation stiffness tomography: forward maps and inclusion identification.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthetic stiffness map from a run config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output CSV; metadata goes to <out>.meta.json")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="five-parameter fit of a stiffness map")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--multistart", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=200)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("extract", help="moduli ratio or volume from a fit")
    p.add_argument("--fit", required=True)
    p.add_argument("--config", required=True)
    known = p.add_mutually_exclusive_group(required=True)
    known.add_argument("--known-volume", help="inclusion volume, SI or unit-tagged (e.g. '2 um3')")
    known.add_argument("--known-alpha", type=float)
    p.add_argument("--paper-normalization", action="store_true", help="use the d**-4 normalization without mu**2")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("curve", help="exact and first-order stiffness versus depth")
    p.add_argument("--config", required=True)
    p.add_argument("--w-max", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--x1", help="indentation point (default: epicentre)")
    p.add_argument("--x2")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("oracle", help="closed-form strain vector or polarization coefficients")
    osub = p.add_subparsers(dest="what", required=True)
    q = osub.add_parser("strain")
    q.add_argument("--xi", type=float, required=True)
    q.add_argument("--nu", type=float, required=True)
    q = osub.add_parser("ksgs")
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--nu", type=float, required=True)
    q.add_argument("--nu0", type=float, required=True)
    p.set_defaults(func=cmd_oracle)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.showwarning = _show_warning
            return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
