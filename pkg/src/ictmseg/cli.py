"""Command line interface.

Verbs:
  segment    segment one image file and write a report directory
  init-only  run the edge-based initializer and write its labels only
  bench      run the phantom noise-robustness grid
  spectrum   print the sampled-Gaussian circulant spectrum summary

Configuration resolves in three layers: built-in defaults, then a JSON
config file (``--config``), then explicit flags. ``run.json`` written by
``segment`` is itself a valid config file, so a run can be reproduced with
``ictmseg segment --config <outdir>/run.json``.

Exit codes: 0 success; 2 configuration error; 3 file I/O or format error;
4 initialization failure; 5 solver contract violation. ``bench`` exits 1
when any grid cell failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .bench import run_grid, write_bench_csv
from .errors import ContractError, FormatError, InitializationError
from .fidelity import ModelConfig
from .image import ImageField, lift_dimensions, load_image, overlay_contours, save_labels
from .initialization import IglimConfig, multi_iglim
from .kernels import circulant_spectrum_1d, circulant_spectrum_2d
from .metrics import score
from .phantoms import PHANTOM_KINDS
from .solver import SolverConfig, solve

EXIT_OK = 0
EXIT_BENCH_CELL_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INIT = 4
EXIT_CONTRACT = 5

# Keys written into run.json alongside the configuration; ignored on reload.
RESULT_KEYS = {"iterations", "wall_time_seconds", "decay_guaranteed"}


@dataclass
class RunConfig:
    """Resolved settings for one segmentation run."""

    input: str | None = None
    output: str = "out"
    model: str = "cv"
    phases: int = 2
    lambdas: list[float] = field(default_factory=lambda: [1.0])
    mu: float = 50.0
    tau: float = 0.25
    sigma: float = 10.0
    p: float = 0.01
    lvf_radius: int = 2
    mean_estimator: str = "global_mean"
    iglim_lambda: float = 0.003
    iglim_alpha: float = 1.0
    iglim_rounds: int = 2
    lift: bool = False
    seed: int = 0
    max_iters: int = 500
    stop_rule: str = "no_pixel_change"
    energy_tol: float = 1e-6
    overlay_color: list[int] = field(default_factory=lambda: [255, 0, 0])

    def solver_config(self) -> SolverConfig:
        model = ModelConfig(
            kind=self.model,
            lambdas=tuple(self.lambdas),
            sigma=self.sigma,
            lvf_weight=self.p,
            lvf_radius=self.lvf_radius,
            mean_estimator=self.mean_estimator,
        )
        model.check_phases(self.phases)
        return SolverConfig(
            model=model,
            mu=self.mu,
            tau=self.tau,
            max_iters=self.max_iters,
            stop_rule=self.stop_rule,
            energy_tol=self.energy_tol,
        )

    def iglim_config(self) -> IglimConfig:
        return IglimConfig(
            phases=self.phases,
            lam=self.iglim_lambda,
            alpha=self.iglim_alpha,
            denoise_rounds=self.iglim_rounds,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _resolve_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}

    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ContractError("config file must hold a JSON object")
        for key, value in raw.items():
            if key in RESULT_KEYS:
                continue
            if key not in fields:
                raise ContractError(f"unknown config key: {key!r}")
            setattr(cfg, key, value)

    for name in fields:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            setattr(cfg, name, flag_value)

    # normalize JSON-sourced collections
    cfg.lambdas = [float(x) for x in cfg.lambdas]
    cfg.overlay_color = [int(x) for x in cfg.overlay_color]
    if len(cfg.overlay_color) != 3:
        raise ContractError("overlay color must have 3 components")
    return cfg


def _diag(message: str) -> None:
    print(f"ictmseg: {message}", file=sys.stderr)


def _save_rgb_png(img: ImageField, path: Path) -> None:
    arr = np.clip(np.rint(img.data[:, :, :3]), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def _cmd_segment(args: argparse.Namespace, init_only: bool = False) -> int:
    try:
        cfg = _resolve_run_config(args)
        if cfg.input is None:
            raise ContractError("an input image is required (--input)")
        scfg = cfg.solver_config()
        iglim = cfg.iglim_config()
    except (ContractError, FormatError, ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        _diag(f"configuration error: {exc}")
        return EXIT_CONFIG

    try:
        img = load_image(cfg.input)
    except (FormatError, OSError) as exc:
        _diag(f"cannot read {cfg.input}: {exc}")
        return EXIT_IO

    try:
        work = lift_dimensions(img) if cfg.lift else img
    except ContractError as exc:
        _diag(f"configuration error: {exc}")
        return EXIT_CONFIG

    t0 = time.perf_counter()
    try:
        init = multi_iglim(work, iglim, cfg.seed)
    except InitializationError as exc:
        _diag(f"initialization failed: {exc}")
        return EXIT_INIT
    except ContractError as exc:
        _diag(f"configuration error: {exc}")
        return EXIT_CONFIG

    outdir = Path(cfg.output)
    if init_only:
        try:
            outdir.mkdir(parents=True, exist_ok=True)
            save_labels(init, outdir / "init_labels.png")
        except (ContractError, OSError) as exc:
            _diag(f"cannot write outputs: {exc}")
            return EXIT_IO
        print(f"wrote {outdir / 'init_labels.png'}")
        return EXIT_OK

    try:
        result = solve(work, init, scfg)
    except ContractError as exc:
        _diag(f"solver contract violation: {exc}")
        return EXIT_CONTRACT
    wall = time.perf_counter() - t0

    try:
        outdir.mkdir(parents=True, exist_ok=True)
        save_labels(result.partition, outdir / "labels.png")
        save_labels(init, outdir / "init_labels.png")
        overlay = overlay_contours(img, result.partition, tuple(cfg.overlay_color))
        _save_rgb_png(overlay, outdir / "overlay.png")
        # timing is zeroed in the CSV so re-running a config reproduces the
        # file byte for byte; wall time is recorded in run.json instead
        result.trace.to_csv(outdir / "energy.csv", timing=False)
        from .report import save_energy_figure

        save_energy_figure(result.trace, outdir / "energy.png")
        run_record = cfg.to_dict()
        run_record["iterations"] = result.trace.iterations
        run_record["wall_time_seconds"] = wall
        run_record["decay_guaranteed"] = scfg.decay_guaranteed
        with open(outdir / "run.json", "w", encoding="utf-8") as fh:
            json.dump(run_record, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except (ContractError, OSError) as exc:
        _diag(f"cannot write outputs: {exc}")
        return EXIT_IO

    print(
        f"segmented {cfg.input}: {result.trace.iterations} iterations, "
        f"{result.partition.phases} phases -> {outdir}"
    )
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    try:
        bench = _resolve_bench_config(args)
    except (ContractError, FormatError, ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        _diag(f"configuration error: {exc}")
        return EXIT_CONFIG

    cells = run_grid(
        cases=bench["cases"],
        variances=bench["variances"],
        size=bench["size"],
        scfg_plain=bench["scfg_plain"],
        scfg_lvf=bench["scfg_lvf"],
        iglim_lam=bench["iglim_lambda"],
        iglim_alpha=bench["iglim_alpha"],
        iglim_rounds=bench["iglim_rounds"],
        seed=bench["seed"],
        rgb=bench["rgb"],
    )

    outdir = Path(bench["output"])
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        write_bench_csv(cells, outdir / "bench.csv")
        from .report import save_bench_figure

        save_bench_figure(cells, outdir / "bench_accuracy.png")
        for cell in cells:
            if cell.comparison is None:
                continue
            cell_dir = outdir / "cells" / f"{cell.case}_v{cell.variance:g}"
            cell_dir.mkdir(parents=True, exist_ok=True)
            save_labels(cell.comparison.init, cell_dir / "init_labels.png")
            save_labels(cell.comparison.partition_plain, cell_dir / "labels_plain.png")
            save_labels(cell.comparison.partition_lvf, cell_dir / "labels_lvf.png")
            cell.comparison.report_plain.to_json(cell_dir / "metrics_plain.json")
            cell.comparison.report_lvf.to_json(cell_dir / "metrics_lvf.json")
    except (ContractError, OSError) as exc:
        _diag(f"cannot write outputs: {exc}")
        return EXIT_IO

    failed = [cell for cell in cells if cell.error is not None]
    for cell in failed:
        _diag(f"cell {cell.case} variance {cell.variance:g} failed: {cell.error}")
    print(f"wrote {outdir / 'bench.csv'} ({sum(len(c.rows) for c in cells)} rows)")
    return EXIT_BENCH_CELL_FAILED if failed else EXIT_OK


def _resolve_bench_config(args: argparse.Namespace) -> dict:
    settings = {
        "cases": ["shapes3"],
        "variances": [0.0, 50.0, 300.0, 500.0],
        "size": 128,
        "seed": 0,
        "rgb": False,
        "output": "bench_out",
        "model": "cv",
        "p": 0.01,
        "mu": 1.0,
        "tau": 0.25,
        "sigma": 10.0,
        "lvf_radius": 2,
        "mean_estimator": "global_mean",
        "iglim_lambda": 0.003,
        "iglim_alpha": 1.0,
        "iglim_rounds": 2,
        "max_iters": 500,
        "stop_rule": "no_pixel_change",
        "energy_tol": 1e-6,
    }
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ContractError("config file must hold a JSON object")
        for key, value in raw.items():
            if key not in settings:
                raise ContractError(f"unknown config key: {key!r}")
            settings[key] = value
    for key in settings:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            settings[key] = flag_value

    for case in settings["cases"]:
        if case not in PHANTOM_KINDS:
            raise ContractError(f"unknown phantom kind: {case!r}")
    if settings["p"] < 0:
        raise ContractError("force weight p must be nonnegative")

    def scfg(p: float) -> SolverConfig:
        return SolverConfig(
            model=ModelConfig(
                kind=settings["model"],
                lambdas=1.0,
                sigma=settings["sigma"],
                lvf_weight=p,
                lvf_radius=settings["lvf_radius"],
                mean_estimator=settings["mean_estimator"],
            ),
            mu=settings["mu"],
            tau=settings["tau"],
            max_iters=settings["max_iters"],
            stop_rule=settings["stop_rule"],
            energy_tol=settings["energy_tol"],
        )

    settings["scfg_plain"] = scfg(0.0)
    settings["scfg_lvf"] = scfg(float(settings["p"]))
    settings["variances"] = [float(v) for v in settings["variances"]]
    return settings


def _cmd_spectrum(args: argparse.Namespace) -> int:
    try:
        rep1 = circulant_spectrum_1d(args.n, args.sigma)
        print(
            f"1d size={args.n} sigma={args.sigma:g} "
            f"min_eigenvalue={rep1.min_eigenvalue:.12g} all_positive={rep1.all_positive}"
        )
        if args.m is not None:
            rep2 = circulant_spectrum_2d(args.m, args.n, args.sigma)
            print(
                f"2d size={args.m}x{args.n} sigma={args.sigma:g} "
                f"min_eigenvalue={rep2.min_eigenvalue:.12g} all_positive={rep2.all_positive}"
            )
    except (ContractError, ValueError, TypeError) as exc:
        _diag(f"configuration error: {exc}")
        return EXIT_CONFIG
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (run.json is accepted)")
    parser.add_argument("--input", help="input image (PNG/PGM/PPM)")
    parser.add_argument("--output", help="output directory")
    parser.add_argument("--model", choices=["cv", "lif"])
    parser.add_argument("--phases", type=int)
    parser.add_argument("--lambdas", type=_float_list, help="per-phase weights, comma separated")
    parser.add_argument("--mu", type=float, help="perimeter weight")
    parser.add_argument("--tau", type=float, help="perimeter kernel width")
    parser.add_argument("--sigma", type=float, help="local fitting kernel width")
    parser.add_argument("--p", type=float, help="variance force weight")
    parser.add_argument("--lvf-radius", dest="lvf_radius", type=int)
    parser.add_argument("--mean-estimator", dest="mean_estimator", choices=["global_mean", "local_gaussian_mean"])
    parser.add_argument("--iglim-lambda", dest="iglim_lambda", type=float)
    parser.add_argument("--iglim-alpha", dest="iglim_alpha", type=float)
    parser.add_argument("--iglim-rounds", dest="iglim_rounds", type=int)
    parser.add_argument("--lift", action=argparse.BooleanOptionalAction, default=None, help="append CIELAB channels")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--max-iters", dest="max_iters", type=int)
    parser.add_argument("--stop-rule", dest="stop_rule", choices=["no_pixel_change", "energy_rel_tol"])
    parser.add_argument("--energy-tol", dest="energy_tol", type=float)
    parser.add_argument("--overlay-color", dest="overlay_color", type=_int_list)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ictmseg",
        description="Multi-phase image segmentation by iterative convolution thresholding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_seg = sub.add_parser("segment", help="segment an image file")
    _add_run_flags(p_seg)

    p_init = sub.add_parser("init-only", help="write the initializer's labels only")
    _add_run_flags(p_init)

    p_bench = sub.add_parser("bench", help="run the phantom noise grid")
    p_bench.add_argument("--config", help="JSON bench config")
    p_bench.add_argument("--output")
    p_bench.add_argument("--cases", type=_str_list, help="comma separated phantom kinds")
    p_bench.add_argument("--variances", type=_float_list)
    p_bench.add_argument("--size", type=int)
    p_bench.add_argument("--seed", type=int)
    p_bench.add_argument("--rgb", action=argparse.BooleanOptionalAction, default=None)
    p_bench.add_argument("--model", choices=["cv", "lif"])
    p_bench.add_argument("--p", type=float)
    p_bench.add_argument("--mu", type=float)
    p_bench.add_argument("--tau", type=float)
    p_bench.add_argument("--sigma", type=float)
    p_bench.add_argument("--lvf-radius", dest="lvf_radius", type=int)
    p_bench.add_argument("--mean-estimator", dest="mean_estimator", choices=["global_mean", "local_gaussian_mean"])
    p_bench.add_argument("--iglim-lambda", dest="iglim_lambda", type=float)
    p_bench.add_argument("--iglim-alpha", dest="iglim_alpha", type=float)
    p_bench.add_argument("--iglim-rounds", dest="iglim_rounds", type=int)
    p_bench.add_argument("--max-iters", dest="max_iters", type=int)

    p_spec = sub.add_parser("spectrum", help="print circulant spectrum summary")
    p_spec.add_argument("--n", type=int, required=True, help="axis length")
    p_spec.add_argument("--m", type=int, help="second axis length for the 2D report")
    p_spec.add_argument("--sigma", type=float, required=True, help="kernel width")

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "segment":
        return _cmd_segment(args)
    if args.command == "init-only":
        return _cmd_segment(args, init_only=True)
    if args.command == "bench":
        return _cmd_bench(args)
    if args.command == "spectrum":
        return _cmd_spectrum(args)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
