"""Command-line frontend.

Every subcommand reads plain-text inputs (TOML map configs, adjacency
lists), writes CSV/JSON results plus a manifest echoing the resolved
configuration, and is fully determined by ``--seed``.  Exit codes:
0 success, 2 configuration error, 3 domain error, 4 horizon/censoring
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, HorizonError, RecspecError
from .insertion import (
    InsertionSpec,
    build_ell_sequence,
    required_source_length,
    verify_prescribed_repetitions,
)
from .maps import (
    MAP_GALLERY,
    ExtentTable,
    MarkovExpandingMap,
    ball_cylinder_comparison,
    distortion_constants,
    map_from_config,
    recurrence_sandwich,
)
from .sft import SubshiftOfFiniteType, sft_from_text
from .thermo import (
    Potential,
    bowen_dimension,
    bowen_dimension_diagnostic,
    kac_check,
    pressure,
    pressure_with_holes,
)
from .spectrum import ae_rate_experiment, build_source, construct_E_point
from .words import Word, random_word

FMT = "%.12g"


def _fmt(x) -> str:
    if isinstance(x, float):
        return FMT % x
    return str(x)


def _load_map(path: str) -> MarkovExpandingMap:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"map config not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad TOML in {path}: {exc}") from exc
    return map_from_config(cfg)


def _load_sft(path: str) -> SubshiftOfFiniteType:
    try:
        return sft_from_text(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"subshift file not found: {path}") from exc


def _resolve_potential(spec: str, sft: SubshiftOfFiniteType,
                       map_: MarkovExpandingMap | None) -> Potential:
    if spec == "zero":
        return Potential.constant(sft, 0.0)
    if spec.startswith("const:"):
        return Potential.constant(sft, float(spec.split(":", 1)[1]))
    if spec.startswith("bernoulli:"):
        probs = [float(t) for t in spec.split(":", 1)[1].split(",")]
        if len(probs) != sft.alphabet_size or abs(sum(probs) - 1.0) > 1e-9:
            raise ConfigError("bernoulli weights must cover the alphabet and sum to 1")
        return Potential.from_symbol_values(sft, np.log(probs))
    if spec.startswith("dimension:"):
        if map_ is None:
            raise ConfigError("dimension potential needs a map")
        s = float(spec.split(":", 1)[1])
        return map_.log_slope_potential(1).scaled(-s)
    if spec.startswith("csv:"):
        path = spec.split(":", 1)[1]
        rows = list(csv.reader(Path(path).read_text().splitlines()))
        body = [r for r in rows if r and not r[0].startswith("#") and r[0] != "cylinder"]
        words = [Word.from_str(r[0]) for r in body]
        level = len(words[0])
        if any(len(w) != level for w in words):
            raise ConfigError("potential cylinders must share one length")
        values = {w.symbols.tobytes(): float(r[1]) for w, r in zip(words, body)}

        def fn(cyl: Word) -> float:
            key = cyl.symbols.tobytes()
            if key not in values:
                raise ConfigError(f"potential misses cylinder {cyl.to_str()}")
            return values[key]

        return Potential.from_function(sft, level, fn)
    raise ConfigError(f"unknown potential spec {spec!r}")


def _write_manifest(outdir: Path, command: str, args: argparse.Namespace) -> None:
    payload = {
        "command": command,
        "version": __version__,
        "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
    }
    (outdir / "manifest.json").write_text(json.dumps(payload, indent=2, default=str) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _plan(args, **extra) -> int:
    plan = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    plan.update(extra)
    print(json.dumps({"dry_run": True, "plan": plan}, indent=2, default=str))
    return 0


# -- subcommands -----------------------------------------------------------------


def cmd_pressure(args) -> int:
    map_ = _load_map(args.map) if args.map else None
    sft = map_.coding_sft() if map_ else _load_sft(args.sft)
    if args.dry_run:
        return _plan(args, alphabet=sft.alphabet_size)
    phi = _resolve_potential(args.potential, sft, map_)
    value = pressure(sft, phi)
    outdir = _outdir(args)
    _write_csv(outdir / "pressure.csv", ["alphabet", "potential", "pressure"],
               [[sft.alphabet_size, args.potential, value]])
    _write_manifest(outdir, "pressure", args)
    print(FMT % value)
    return 0


def cmd_dimension(args) -> int:
    map_ = _load_map(args.map)
    if args.dry_run:
        return _plan(args, branches=map_.n_branches)
    if args.refine:
        s0, s1, gap = bowen_dimension_diagnostic(map_, args.level)
    else:
        s0 = bowen_dimension(map_, args.level)
        s1, gap = None, None
    outdir = _outdir(args)
    rows = [[args.level, s0]]
    header = ["level", "dimension"]
    if s1 is not None:
        header += ["dimension_next_level", "refinement_gap"]
        rows[0] += [s1, gap]
    _write_csv(outdir / "dimension.csv", header, rows)
    _write_manifest(outdir, "dimension", args)
    print(FMT % s0)
    return 0


def cmd_holes(args) -> int:
    map_ = _load_map(args.map)
    sft = map_.coding_sft()
    if args.family not in ("ones", "zeros"):
        raise ConfigError("hole family must be 'ones' or 'zeros'")
    symbol = 1 if args.family == "ones" else 0
    if symbol >= sft.alphabet_size:
        raise ConfigError("hole symbol outside the alphabet")
    if args.dry_run:
        return _plan(args)
    phi = _resolve_potential(args.potential, sft, map_)
    rows = []
    for n in range(1, args.n_max + 1):
        hole = Word([symbol] * n, sft.alphabet_size)
        value = pressure_with_holes(sft, phi, [hole])
        rows.append([n, value])
    outdir = _outdir(args)
    _write_csv(outdir / "holes.csv", ["n", "pressure"], rows)
    _write_manifest(outdir, "holes", args)
    for n, value in rows:
        print(f"{n} {FMT % value}")
    return 0


def cmd_construct(args) -> int:
    map_ = _load_map(args.map)
    if args.dry_run:
        return _plan(args)
    pt = construct_E_point(map_, args.alpha, args.beta, args.n, args.horizon,
                           seed=args.seed, birkhoff_tolerance=args.birkhoff_tolerance)
    outdir = _outdir(args)
    rows = []
    for k in pt.identity_checked:
        lk = pt.ell.value(k)
        ratio = math.log(lk) / (pt.source.rate_scale * k)
        rows.append([k, lk, ratio])
    _write_csv(outdir / "construct.csv", ["k", "ell_k", "ratio"], rows)
    diag = {
        "alpha": args.alpha, "beta": args.beta, "n": args.n,
        "horizon": args.horizon, "seed": args.seed,
        "point": pt.point,
        "lower_estimate": pt.rate_estimate.lower,
        "upper_estimate": pt.rate_estimate.upper,
        "window_policy": pt.rate_estimate.policy,
        "identity_violations": list(pt.identity_violations),
        "block_scale_rows_ok": all(lo <= m <= hi for _, m, lo, hi in pt.block_scale_rows),
        "lambda_n": pt.source.lambda_n,
        "mean_return": pt.source.mean_return,
        "nu_A": pt.source.nu_A,
        "pressure_gap": pt.source.pressure_gap,
        "marker_word": pt.marker_word.to_str(),
        "achieved_psi_mean": pt.sample.achieved_psi_mean,
        "achieved_mean_return": pt.sample.achieved_mean_return,
        "word_head": pt.base_word[:80].to_str(),
    }
    (outdir / "construct.json").write_text(json.dumps(diag, indent=2) + "\n")
    _write_manifest(outdir, "construct", args)
    print(f"lower {FMT % pt.rate_estimate.lower} upper {FMT % pt.rate_estimate.upper} "
          f"violations {len(pt.identity_violations)}")
    if pt.identity_violations:
        raise DomainError("prescribed repetition times violated")
    return 0


def cmd_recurrence(args) -> int:
    map_ = _load_map(args.map)
    sft = map_.coding_sft()
    if args.dry_run:
        return _plan(args)
    phi = _resolve_potential(args.potential, sft, map_)
    r_grid = 2.0 ** -np.arange(args.r_min_exp, args.r_max_exp + 1)
    res = ae_rate_experiment(map_, phi, args.points, args.horizon, args.seed,
                             r_grid=r_grid, threads=args.threads)
    outdir = _outdir(args)
    rows = [[i, s] for i, s in enumerate(res["slopes"])]
    _write_csv(outdir / "recurrence.csv", ["point", "slope"], rows)
    summary = {k: v for k, v in res.items() if k != "slopes"}
    (outdir / "recurrence.json").write_text(
        json.dumps(summary, indent=2, default=float) + "\n")
    _write_manifest(outdir, "recurrence", args)
    print(f"median {FMT % res['median']} target {FMT % res['target']}")
    if res["censored_scales"] > args.points * len(r_grid) // 2:
        raise HorizonError("more than half of all scales censored")
    return 0


def cmd_spectrum(args) -> int:
    map_ = _load_map(args.map)
    targets = []
    for cell in args.targets.split(","):
        a, b = cell.split(":")
        targets.append((float(a), float(b)))
    if args.dry_run:
        return _plan(args, parsed_targets=targets)
    source = build_source(map_, args.n, args.birkhoff_tolerance)
    rows = []
    seq = np.random.SeedSequence(args.seed)
    for (a, b), child in zip(targets, seq.spawn(len(targets))):
        pt = construct_E_point(map_, a, b, args.n, args.horizon,
                               seed=child.entropy, source=source,
                               birkhoff_tolerance=args.birkhoff_tolerance)
        rows.append([a, b, pt.rate_estimate.lower, pt.rate_estimate.upper,
                     len(pt.identity_violations), pt.point])
    outdir = _outdir(args)
    _write_csv(outdir / "spectrum.csv",
               ["alpha", "beta", "lower", "upper", "violations", "point"], rows)
    _write_manifest(outdir, "spectrum", args)
    for row in rows:
        print(" ".join(_fmt(v) for v in row))
    return 0


def cmd_verify(args) -> int:
    if args.target == "repetition":
        return _verify_repetition(args)
    if args.target == "sandwich":
        return _verify_sandwich(args)
    if args.target == "kac":
        return _verify_kac(args)
    raise ConfigError(f"unknown verify target {args.target!r}")


def _verify_repetition(args) -> int:
    if args.dry_run:
        return _plan(args)
    rng = np.random.default_rng(args.seed)
    rows, violations = [], 0
    for trial in range(args.trials):
        a_size = args.alphabet if args.alphabet else int(rng.integers(2, 6))
        spec = InsertionSpec.standard(a_size)
        horizon = int(10 ** rng.uniform(3.0, 5.0))
        mode = ["poly", "geom", "mixed"][int(rng.integers(0, 3))]
        if mode == "poly":
            ell = build_ell_sequence(0.0, 0.0, 130, 2)
        elif mode == "geom":
            r = float(rng.uniform(0.2, 1.2))
            ell = build_ell_sequence(r, r, 90, 2)
        else:
            lo = float(rng.uniform(0.1, 0.5))
            ell = build_ell_sequence(lo, lo + float(rng.uniform(0.2, 0.8)), 90, 2,
                                     value_cap=horizon)
        need = required_source_length(ell, horizon)
        w = random_word(rng, need + 8, a_size)
        rep = verify_prescribed_repetitions(w, spec, ell, horizon)
        violations += len(rep.violations)
        rows.append([trial, mode, a_size, horizon, len(rep.checked), len(rep.violations)])
    outdir = _outdir(args)
    _write_csv(outdir / "verify_repetition.csv",
               ["trial", "mode", "alphabet", "horizon", "checked", "violations"], rows)
    _write_manifest(outdir, "verify repetition", args)
    print(f"{args.trials} trials, {violations} violations")
    if violations:
        raise DomainError("prescribed repetition times violated")
    return 0


def _verify_sandwich(args) -> int:
    map_ = _load_map(args.map)
    if args.dry_run:
        return _plan(args)
    dist = distortion_constants(map_)
    rng = np.random.default_rng(args.seed)
    sft = map_.coding_sft()
    state_rows = []
    bad = 0
    extents = {n: ExtentTable.build(map_, n) for n in range(1, args.k_max + 1)}
    for i in range(args.points):
        w = _random_admissible_word(sft, rng, args.word_length)
        orbit = map_.orbit_values(w, window=min(60, len(w) // 2))
        for k in range(2, args.k_max + 1):
            rep = recurrence_sandwich(map_, w, k, dist, orbit=orbit)
            ok = rep.ok or rep.detail["censored"]
            if not dist.full_branch_adjacent:
                rep2 = ball_cylinder_comparison(map_, w, k, dist, extents=extents[k])
                ok = ok and rep2.ok
            bad += 0 if ok else 1
            state_rows.append([i, k, int(ok)])
    outdir = _outdir(args)
    _write_csv(outdir / "verify_sandwich.csv", ["point", "k", "ok"], state_rows)
    _write_manifest(outdir, "verify sandwich", args)
    print(f"{args.points} points x k<= {args.k_max}: {bad} violations")
    if bad:
        raise DomainError("sandwich violated")
    return 0


def _verify_kac(args) -> int:
    map_ = _load_map(args.map)
    sft = map_.coding_sft()
    if args.dry_run:
        return _plan(args)
    phi = _resolve_potential(args.potential, sft, map_)
    A = Word.from_str(args.cylinder, alphabet_size=sft.alphabet_size)
    report = kac_check(sft, phi, A, t_max=args.t_max)
    outdir = _outdir(args)
    _write_csv(outdir / "verify_kac.csv",
               ["cylinder", "mass", "mean_return", "product", "tail"],
               [[args.cylinder, report.cylinder_mass, report.mean_return,
                 report.product, report.tail_estimate]])
    _write_manifest(outdir, "verify kac", args)
    print(f"mass {FMT % report.cylinder_mass} mean {FMT % report.mean_return} "
          f"product {FMT % report.product}")
    if abs(report.product - 1.0) > args.tolerance:
        raise DomainError(f"return-time identity off by {report.product - 1.0:.3e}")
    return 0


def _random_admissible_word(sft: SubshiftOfFiniteType, rng: np.random.Generator,
                            length: int) -> Word:
    out = np.empty(length, dtype=np.int64)
    out[0] = rng.integers(0, sft.alphabet_size)
    for t in range(1, length):
        succ = sft.successors(int(out[t - 1]))
        out[t] = succ[rng.integers(0, succ.size)]
    return Word(out, sft.alphabet_size)


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--out", default="recspec-out", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--dry-run", action="store_true",
                        help="validate and print the plan without computing")

    p = argparse.ArgumentParser(prog="recspec",
                                description="recurrence spectra of expanding interval maps")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("pressure", parents=[common], help="topological pressure")
    sp.add_argument("--map", help="map TOML config")
    sp.add_argument("--sft", help="subshift adjacency-list file")
    sp.add_argument("--potential", default="zero")
    sp.set_defaults(func=cmd_pressure)

    sp = sub.add_parser("dimension", parents=[common], help="repeller dimension")
    sp.add_argument("--map", required=True)
    sp.add_argument("--level", type=int, default=1)
    sp.add_argument("--refine", action="store_true")
    sp.set_defaults(func=cmd_dimension)

    sp = sub.add_parser("holes", parents=[common], help="pressure under shrinking holes")
    sp.add_argument("--map", required=True)
    sp.add_argument("--family", default="ones")
    sp.add_argument("--n-max", type=int, default=20)
    sp.add_argument("--potential", default="zero")
    sp.set_defaults(func=cmd_holes)

    sp = sub.add_parser("construct", parents=[common],
                        help="point with prescribed recurrence rates")
    sp.add_argument("--map", required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--horizon", type=int, default=10 ** 5)
    sp.add_argument("--birkhoff-tolerance", type=float, default=0.05)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("recurrence", parents=[common],
                        help="return-time statistics of typical points")
    sp.add_argument("--map", required=True)
    sp.add_argument("--points", type=int, default=50)
    sp.add_argument("--horizon", type=int, default=10 ** 6)
    sp.add_argument("--potential", default="dimension:1")
    sp.add_argument("--r-min-exp", type=int, default=5)
    sp.add_argument("--r-max-exp", type=int, default=16)
    sp.set_defaults(func=cmd_recurrence)

    sp = sub.add_parser("spectrum", parents=[common],
                        help="grid of prescribed-rate constructions")
    sp.add_argument("--map", required=True)
    sp.add_argument("--targets", required=True, help="comma list alpha:beta")
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--horizon", type=int, default=10 ** 5)
    sp.add_argument("--birkhoff-tolerance", type=float, default=0.05)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("verify", parents=[common], help="self-checks")
    sp.add_argument("target", choices=["repetition", "sandwich", "kac"])
    sp.add_argument("--alphabet", type=int, default=0,
                    help="inner alphabet size (0 = randomize)")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--map")
    sp.add_argument("--points", type=int, default=25)
    sp.add_argument("--k-max", type=int, default=10)
    sp.add_argument("--word-length", type=int, default=200_000)
    sp.add_argument("--potential", default="zero")
    sp.add_argument("--cylinder", default="0")
    sp.add_argument("--t-max", type=int, default=40)
    sp.add_argument("--tolerance", type=float, default=1e-6)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HorizonError as exc:
        print(f"horizon error: {exc}", file=sys.stderr)
        return 4
    except (DomainError, RecspecError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
