"""Command-line interface.

Subcommands: phantom, project, noise, register, fbp, tv, evaluate,
suite. The register command is driven by an INI-style config file; all
other commands take explicit flags. Exit codes: 0 success, 1 numerical
failure during optimization, 2 bad arguments or config, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path

import scipy.fft

from . import __version__
from .action import GroupAction
from .experiments import SUITE_IDS, run_suite
from .grid import Grid2D
from .io import config_hash, read_igrd, read_isin, write_igrd, write_isin, write_manifest, write_pgm16
from .metrics import psnr, ssim
from .optimize import RegistrationConfig, StopReason, register
from .phantom import NoiseSpec, PhantomKind, PhantomSpec, add_noise, make_phantom
from .tomo import fbp, make_parallel_geometry, ray_transform
from .tv import TVConfig, tv_reconstruct

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2
EXIT_IO = 3


class ConfigError(ValueError):
    pass


def _default_grid(size: int) -> Grid2D:
    return Grid2D(size, size)


# --- register config -----------------------------------------------------

_CONFIG_SCHEMA = {
    "phantom": {"template_kind", "target_kind", "size"},
    "geometry": {"n_angles", "n_detectors"},
    "noise": {"snr_db", "seed"},
    "registration": {"gamma", "sigma", "alpha", "n_steps", "max_iters", "grad_tol", "action"},
    "fbp": {"freq_scaling"},
    "tv": {"mu", "iters"},
    "output": {"dir"},
}
_REQUIRED_SECTIONS = ("phantom", "geometry", "registration")


def load_experiment_config(path) -> dict:
    """Parse and validate the INI config; unknown sections or keys are errors."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    for section in parser.sections():
        if section not in _CONFIG_SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _CONFIG_SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
    for section in _REQUIRED_SECTIONS:
        if section not in parser:
            raise ConfigError(f"missing required section [{section}]")

    def need(section, key, convert, validate=None, describe=""):
        if key not in parser[section]:
            raise ConfigError(f"missing key {key!r} in section [{section}]")
        raw = parser[section][key]
        try:
            value = convert(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for [{section}] {key} = {raw!r}: {exc}") from exc
        if validate is not None and not validate(value):
            raise ConfigError(f"invalid [{section}] {key} = {raw!r}{describe}")
        return value

    cfg = {
        "template_kind": need("phantom", "template_kind", PhantomKind.parse),
        "target_kind": need("phantom", "target_kind", PhantomKind.parse),
        "size": need("phantom", "size", int, lambda v: v >= 2, " (need >= 2)"),
        "n_angles": need("geometry", "n_angles", int, lambda v: v >= 1, " (need >= 1)"),
        "n_detectors": need("geometry", "n_detectors", int, lambda v: v >= 2, " (need >= 2)"),
    }
    reg = parser["registration"]
    try:
        cfg["registration"] = RegistrationConfig(
            gamma=need("registration", "gamma", float, lambda v: v >= 0, " (need >= 0)"),
            sigma=need("registration", "sigma", float, lambda v: v > 0, " (need > 0)"),
            alpha=need("registration", "alpha", float, lambda v: v > 0, " (need > 0)"),
            n_steps=int(reg.get("n_steps", "20")),
            max_iters=int(reg.get("max_iters", "200")),
            grad_tol=float(reg.get("grad_tol", "0.0")),
            action=GroupAction.parse(reg.get("action", "geometric")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if "noise" in parser:
        cfg["noise"] = NoiseSpec(
            target_snr_db=need("noise", "snr_db", float),
            seed=int(parser["noise"].get("seed", "0")),
        )
    if "fbp" in parser:
        cfg["fbp_freq_scaling"] = need(
            "fbp", "freq_scaling", float, lambda v: 0 < v <= 1, " (need in (0, 1])"
        )
    if "tv" in parser:
        cfg["tv"] = TVConfig(
            mu=need("tv", "mu", float, lambda v: v > 0, " (need > 0)"),
            n_iters=int(parser["tv"].get("iters", "1000")),
        )
    cfg["out_dir"] = parser.get("output", "dir", fallback="out")
    return cfg


# --- commands --------------------------------------------------------------


def cmd_phantom(args) -> int:
    kind = PhantomKind.parse(args.kind)
    img = make_phantom(PhantomSpec(kind, _default_grid(args.size)))
    write_igrd(args.out, img)
    if args.preview:
        write_pgm16(Path(args.out).with_suffix(".pgm"), img)
    return EXIT_OK


def cmd_project(args) -> int:
    img = read_igrd(args.image)
    geom = make_parallel_geometry(img.grid, args.angles, args.detectors)
    write_isin(args.out, ray_transform(img, geom))
    return EXIT_OK


def cmd_noise(args) -> int:
    sino = read_isin(args.sinogram)
    noisy = add_noise(sino, NoiseSpec(args.snr_db, args.seed))
    write_isin(args.out, noisy)
    return EXIT_OK


def cmd_fbp(args) -> int:
    grid = _default_grid(args.size)
    sino = read_isin(args.sinogram, grid=grid)
    rec = fbp(sino, grid, args.freq_scaling)
    write_igrd(args.out, rec)
    write_pgm16(Path(args.out).with_suffix(".pgm"), rec)
    return EXIT_OK


def cmd_tv(args) -> int:
    grid = _default_grid(args.size)
    sino = read_isin(args.sinogram, grid=grid)
    rec = tv_reconstruct(sino, grid, TVConfig(mu=args.mu, n_iters=args.iters))
    write_igrd(args.out, rec)
    write_pgm16(Path(args.out).with_suffix(".pgm"), rec)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    img = read_igrd(args.image)
    ref = read_igrd(args.reference)
    row = {"image": str(args.image), "ssim": f"{ssim(img, ref):.6f}", "psnr": f"{psnr(img, ref):.4f}"}
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(row))
        writer.writeheader()
        writer.writerow(row)
    return EXIT_OK


def cmd_register(args) -> int:
    cfg = load_experiment_config(args.config)
    out_dir = Path(args.out or cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    grid = _default_grid(cfg["size"])
    template = make_phantom(PhantomSpec(cfg["template_kind"], grid))
    target = make_phantom(PhantomSpec(cfg["target_kind"], grid))
    geom = make_parallel_geometry(grid, cfg["n_angles"], cfg["n_detectors"])
    data = ray_transform(target, geom)
    if "noise" in cfg:
        noise = cfg["noise"]
        if args.seed is not None:
            noise = NoiseSpec(noise.target_snr_db, args.seed)
        data = add_noise(data, noise)

    rows = []
    result = register(
        template,
        data,
        geom,
        cfg["registration"],
        progress=lambda k, v, gn: rows.append((k, v.total, v.penalty, v.discrepancy, gn)),
    )

    for i, img in enumerate(result.trajectory):
        write_igrd(out_dir / f"trajectory_{i:03d}.igrd", img)
        write_pgm16(out_dir / f"trajectory_{i:03d}.pgm", img)
    write_isin(out_dir / "data.isin", data)
    log_path = Path(args.log_csv) if args.log_csv else out_dir / "objective.csv"
    with open(log_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "total", "penalty", "discrepancy", "grad_norm"])
        writer.writerows(rows)
    final = result.trajectory[-1]
    with open(out_dir / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ssim", "psnr_db", "iterations", "stop_reason"])
        writer.writerow(
            [f"{ssim(final, target):.6f}", f"{psnr(final, target):.4f}",
             result.iterations_run, result.stop_reason.value]
        )
    if "fbp_freq_scaling" in cfg:
        write_igrd(out_dir / "fbp.igrd", fbp(data, grid, cfg["fbp_freq_scaling"]))
    if "tv" in cfg:
        write_igrd(out_dir / "tv.igrd", tv_reconstruct(data, grid, cfg["tv"]))
    write_manifest(
        out_dir / "manifest.json",
        {
            "config_sha256": config_hash(args.config),
            "seed": args.seed if args.seed is not None else cfg.get("noise", NoiseSpec(0.0)).seed,
            "version": __version__,
        },
    )

    if result.stop_reason is StopReason.NUMERICAL_FAILURE:
        print("register: stopped on numerical failure; last finite iterate written", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_suite(args) -> int:
    if args.id not in SUITE_IDS:
        print(f"suite: invalid suite id {args.id}; valid ids: {SUITE_IDS}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out or f"suite{args.id}_out")
    results = run_suite(args.id, out_dir, full=args.full)
    for res in results:
        print(f"{res.case.name}: ssim={res.ssim_final:.4f} psnr={res.psnr_final:.2f} "
              f"stop={res.registration.stop_reason.value}")
    if any(r.registration.stop_reason is StopReason.NUMERICAL_FAILURE for r in results):
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tomoflow",
        description="Indirect diffeomorphic image registration for 2D parallel-beam tomography",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    parser.add_argument("--out", default=None, help="output directory or file override")
    parser.add_argument("--seed", type=int, default=None, help="noise seed override")
    parser.add_argument("--log-csv", default=None, help="objective log CSV path")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="rasterize a phantom to IGRD")
    p.add_argument("--kind", required=True, help=", ".join(k.value for k in PhantomKind))
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--preview", action="store_true", help="also write a PGM preview")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_phantom)

    p = sub.add_parser("project", help="ray transform of an IGRD image to ISIN")
    p.add_argument("--image", required=True)
    p.add_argument("--angles", type=int, required=True)
    p.add_argument("--detectors", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_project)

    p = sub.add_parser("noise", help="add calibrated noise to a sinogram")
    p.add_argument("--sinogram", required=True)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_noise)

    p = sub.add_parser("register", help="run indirect registration from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_register)

    p = sub.add_parser("fbp", help="filtered back projection of an ISIN sinogram")
    p.add_argument("--sinogram", required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--freq-scaling", type=float, default=0.8)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_fbp)

    p = sub.add_parser("tv", help="total-variation reconstruction of an ISIN sinogram")
    p.add_argument("--sinogram", required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_tv)

    p = sub.add_parser("evaluate", help="SSIM/PSNR of an image against a reference")
    p.add_argument("--image", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("suite", help="run a full experiment suite")
    p.add_argument("--id", type=int, required=True)
    p.add_argument("--full", action="store_true", help="paper-scale resolution")
    p.set_defaults(fn=cmd_suite)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with scipy.fft.set_workers(max(1, args.threads)):
            return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
