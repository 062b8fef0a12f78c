"""Command-line interface.

    pbsenhance enhance photo <in> <out> [options]
    pbsenhance enhance video <in-dir> <out-dir> [options]
    pbsenhance metrics de <img>
    pbsenhance metrics psnr <a> <b>

Exit codes: 0 success, 1 runtime or I/O failure, 2 invalid arguments.
"""
from __future__ import annotations

import argparse
import re
import sys
import time
from pathlib import Path

import numpy as np

from .flow import FlowParams
from .illumination import GammaParams
from .metrics import discrete_entropy, psnr
from .multiscale import JbuParams
from .photo import correct_overexposure, enhance_per_channel, enhance_photo
from .raster import VideoSequence, dump_scalar_field, load_image, save_image
from .solver import SolverConfig
from .synthetic import quantize8
from .video import PropagationConfig, enhance_video, extract_keyframes

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=0.8, help="smoothness weight")
    p.add_argument("--gamma", type=float, default=0.6, help="gamma adjustment in (0, 1]")
    p.add_argument("--tau", type=float, default=1e-5, help="flat-gradient threshold")
    p.add_argument("--max-dim", dest="max_dim", type=int, default=400, help="fast-path working size")
    p.add_argument("--max-outer", dest="max_outer", type=int, default=20, help="outer iteration cap")
    p.add_argument("--config", type=Path, default=None, help="key=value defaults file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pbsenhance", description="Low-light photo and video enhancement.")
    top = parser.add_subparsers(dest="command", required=True)

    enhance = top.add_parser("enhance", help="enhance a photo or a frame sequence")
    kinds = enhance.add_subparsers(dest="kind", required=True)

    photo = kinds.add_parser("photo", help="enhance one image")
    photo.add_argument("input", type=Path)
    photo.add_argument("output", type=Path)
    _add_solver_flags(photo)
    photo.add_argument("--naive", action="store_true", help="solve at full resolution")
    photo.add_argument("--per-channel", dest="per_channel", action="store_true")
    photo.add_argument("--overexposure", action="store_true", help="correct overexposure instead")
    photo.add_argument("--dump-illum", dest="dump_illum", type=Path, default=None)
    photo.add_argument("--report", type=Path, default=None, help="write the report here instead of stdout")

    video = kinds.add_parser("video", help="enhance a directory of numbered frames")
    video.add_argument("input", type=Path)
    video.add_argument("output", type=Path)
    _add_solver_flags(video)
    video.add_argument("--ell", type=float, default=0.1, help="keyframe luminance threshold")
    video.add_argument("--kf-ratio", dest="kf_ratio", type=float, default=0.3)
    video.add_argument("--window", type=int, default=30, help="propagation window side")
    video.add_argument("--parzen-d", dest="parzen_d", type=float, default=5.0)
    video.add_argument("--denoise", type=float, default=0.5, help="temporal blend strength in [0, 1]")
    video.add_argument("--pattern", default="frame_%05d.png", help="printf-style frame name")
    video.add_argument("--keyframes-only", dest="keyframes_only", action="store_true")
    video.add_argument("--report", type=Path, default=None)

    metrics = top.add_parser("metrics", help="image metrics")
    mkinds = metrics.add_subparsers(dest="metric", required=True)
    de = mkinds.add_parser("de", help="discrete entropy")
    de.add_argument("image", type=Path)
    ps = mkinds.add_parser("psnr", help="peak signal-to-noise ratio")
    ps.add_argument("a", type=Path)
    ps.add_argument("b", type=Path)
    niqe = mkinds.add_parser("niqe", help="not available")
    niqe.add_argument("image", type=Path)
    parser.set_defaults(_leaves={"photo": photo, "video": video})
    return parser


def read_config(path: Path) -> dict[str, str]:
    values = {}
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    cfg_path = getattr(args, "config", None)
    if cfg_path is None:
        return args
    try:
        entries = read_config(cfg_path)
    except OSError as exc:
        raise UsageError(f"cannot read config {cfg_path}: {exc.strerror}") from exc
    aliases = {"lambda": "lam", "ratio": "kf_ratio"}
    leaf = args._leaves[args.kind]
    known = {a.dest: a for a in leaf._actions}
    defaults = {}
    for key, raw in entries.items():
        dest = aliases.get(key, key)
        action = known.get(dest)
        if action is None or dest in ("input", "output", "config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        if action.nargs == 0:
            defaults[dest] = raw.lower() in ("1", "true", "yes", "on")
        else:
            try:
                defaults[dest] = action.type(raw) if action.type else raw
            except ValueError:
                raise UsageError(f"bad value for {key}: {raw!r}") from None
    # explicit flags win over file values
    leaf.set_defaults(**defaults)
    return parser.parse_args(argv)


def _solver_configs(args) -> tuple[SolverConfig, JbuParams]:
    try:
        gamma = GammaParams(gamma=args.gamma)
        solver = SolverConfig(lam=args.lam, tau=args.tau, max_outer=args.max_outer, gamma=gamma)
        jbu = JbuParams(max_dim=args.max_dim)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return solver, jbu


def _write_report(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def cmd_enhance_photo(args) -> int:
    solver, jbu = _solver_configs(args)
    mode = "naive" if args.naive else "fast"
    start = time.perf_counter()
    img = load_image(args.input)
    if args.overexposure:
        R, S, report = correct_overexposure(img, solver, jbu, mode, per_channel=args.per_channel)
    elif args.per_channel:
        R, S, report = enhance_per_channel(img, solver, jbu, mode)
    else:
        R, S, report = enhance_photo(img, solver, jbu, mode)
    save_image(R, args.output)
    if args.dump_illum is not None:
        if S.ndim == 2:
            dump_scalar_field(S, args.dump_illum)
        else:
            base = args.dump_illum.with_suffix("") if args.dump_illum.suffix in (".png", ".raw") else args.dump_illum
            for c, name in enumerate("rgb"):
                dump_scalar_field(S[:, :, c], base.with_name(f"{base.name}_{name}"))
    wall_ms = int(round((time.perf_counter() - start) * 1000))
    text = report.to_text(de_in=f"{discrete_entropy(img):.6f}", de_out=f"{discrete_entropy(quantize8(R)):.6f}", wall_ms=wall_ms)
    _write_report(text, args.report)
    return EXIT_OK


def _frame_regex(pattern: str) -> re.Pattern:
    m = re.fullmatch(r"(.*)%(0?\d*)d(.*)", pattern)
    if m is None or "%" in m.group(1) + m.group(3):
        raise UsageError(f"pattern needs exactly one integer field: {pattern!r}")
    return re.compile(re.escape(m.group(1)) + r"(\d+)" + re.escape(m.group(3)))


def read_frames(directory: Path, pattern: str) -> tuple[VideoSequence, list[int]]:
    """Load numbered frames; numbers must be consecutive."""
    rx = _frame_regex(pattern)
    if not directory.is_dir():
        raise OSError(f"not a directory: {directory}")
    found = {}
    for entry in directory.iterdir():
        m = rx.fullmatch(entry.name)
        if m:
            idx = int(m.group(1))
            if entry.name != pattern % idx or idx in found:
                raise OSError(f"misnumbered frame: {entry.name}")
            found[idx] = entry
    if not found:
        raise OSError(f"no frames matching {pattern!r} in {directory}")
    numbers = sorted(found)
    if numbers != list(range(numbers[0], numbers[0] + len(numbers))):
        missing = sorted(set(range(numbers[0], numbers[-1] + 1)) - set(numbers))
        raise OSError(f"missing frame number(s): {missing[:5]}")
    frames = [load_image(found[i]) for i in numbers]
    try:
        video = VideoSequence(frames=frames, names=[found[i].name for i in numbers])
    except ValueError as exc:
        raise OSError(str(exc)) from exc
    return video, numbers


def cmd_enhance_video(args) -> int:
    solver, jbu = _solver_configs(args)
    try:
        prop = PropagationConfig(
            window_n=args.window,
            parzen_d=args.parzen_d,
            keyframe_ell=args.ell,
            keyframe_ratio=args.kf_ratio,
            flow=FlowParams(),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not 0.0 <= args.denoise <= 1.0:
        raise UsageError("denoise must be in [0, 1]")
    _frame_regex(args.pattern)
    start = time.perf_counter()
    video, numbers = read_frames(args.input, args.pattern)
    if args.keyframes_only:
        print(" ".join(str(k) for k in extract_keyframes(video, prop)))
        return EXIT_OK
    result = enhance_video(video, solver, jbu, prop, args.denoise)
    args.output.mkdir(parents=True, exist_ok=True)
    for name, frame in zip(video.names, result.video.frames):
        save_image(frame, args.output / name)
    wall_ms = int(round((time.perf_counter() - start) * 1000))
    iters = max((r.outer_iterations for r in result.reports.values()), default=0)
    text = "".join(
        f"{k}={v}\n"
        for k, v in {
            "frames": len(video),
            "keyframes": ",".join(map(str, result.keyframes)),
            "outer_iterations": iters,
            "clamped_pixels": result.clamped_pixels,
            "wall_ms": wall_ms,
        }.items()
    )
    if args.report is not None:
        args.report.write_text(text)
    return EXIT_OK


def cmd_metrics(args) -> int:
    if args.metric == "de":
        print(f"DE={discrete_entropy(load_image(args.image)):.3f}")
    elif args.metric == "psnr":
        a, b = load_image(args.a), load_image(args.b)
        if a.shape != b.shape:
            raise ValueError(f"image sizes differ: {a.shape[:2]} vs {b.shape[:2]}")
        print(f"PSNR={psnr(a, b):.3f}")
    else:
        print("NIQE: unavailable")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.command == "metrics":
            return cmd_metrics(args)
        if args.kind == "photo":
            return cmd_enhance_photo(args)
        return cmd_enhance_video(args)
    except UsageError as exc:
        print(f"pbsenhance: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (OSError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"pbsenhance: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
