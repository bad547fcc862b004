"""Command-line entry point.

Subcommands: synth, train, generate, evaluate, report. Every run writes a
``manifest.json`` (config snapshot, seed, SHA-256 of each artifact) into
its output directory, which is enough to re-run the artifact. Exit codes:
0 ok, 2 config error, 3 data error, 4 numeric failure.

Heavy imports happen inside the command handlers so that ``--threads N``
can pin the BLAS/OpenMP pools before numpy initializes; with
``--threads 1`` runs are bitwise deterministic.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path


def _set_threads(n: int | None) -> None:
    if n is None:
        return
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(outdir: Path, command: str, config: dict, seed: int,
                    artifacts: list[Path]) -> None:
    manifest = {
        "command": command,
        "seed": seed,
        "config": config,
        "artifacts": {p.name: _sha256(p) for p in artifacts},
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_ini(args):
    from .config import load_ini

    return load_ini(args.config) if args.config else None


def cmd_synth(args) -> int:
    from dataclasses import asdict

    from .config import parse_synth_model, preset_config
    from .rng import Rng
    from .synth import FreshConfig, gen_fresh, gen_pscgm
    from .traces import normalize_maxabs, save_traceset

    cp = _load_ini(args)
    if args.preset:
        cfg = preset_config(args.preset)
    elif cp is not None and cp.has_section("synth"):
        sec = cp["synth"]
        if sec.get("preset", None):
            cfg = preset_config(sec.get("preset"))
        else:
            cfg = parse_synth_model(cp, args.model or sec.get("model", "fresh"))
    else:
        from .errors import ConfigError

        raise ConfigError("synth needs --preset or a [synth] config section")

    n = args.n or (cp and cp.has_section("synth") and cp["synth"].getint(
        "n_traces", fallback=0)) or 100
    length = args.length or (cp and cp.has_section("synth") and cp["synth"].getint(
        "trace_len", fallback=0)) or 16384
    rng = Rng(args.seed)
    generator = gen_fresh if isinstance(cfg, FreshConfig) else gen_pscgm
    ts = generator(cfg, n, length, rng)
    if args.normalize:
        ts, _scale = normalize_maxabs(ts)

    out = _outdir(args)
    path = out / "traces.ngts"
    save_traceset(ts, path)
    _write_manifest(out, "synth",
                    {"model": type(cfg).__name__, "params": asdict(cfg),
                     "n_traces": n, "trace_len": length,
                     "normalize": bool(args.normalize)},
                    args.seed, [path])
    print(f"wrote {path} ({n} x {length} @ {ts.sample_rate_hz:g} Hz)")
    return 0


def cmd_train(args) -> int:
    import numpy as np

    from .config import parse_gan_config
    from .errors import ConfigError
    from .gan import build_model, load_model, train
    from .rng import Rng
    from .traces import load_traceset

    cp = _load_ini(args)
    if cp is None or not cp.has_section("train"):
        raise ConfigError("train needs --config with a [train] section")
    cfg = parse_gan_config(cp)
    data_path = args.data or cp["train"].get("data", None)
    if not data_path:
        raise ConfigError("no dataset: set [train] data or pass --data")
    data = load_traceset(data_path)
    if data.trace_len != cfg.trace_len:
        raise ConfigError(
            f"dataset trace length {data.trace_len} != configured "
            f"trace_len {cfg.trace_len}"
        )
    if float(np.max(np.abs(data.data))) > 1.0:
        from .traces import normalize_maxabs

        data, _ = normalize_maxabs(data)

    out = _outdir(args)
    rng = Rng(args.seed)
    resume = args.resume or cp["train"].get("resume", None)
    resume_state = None
    if resume:
        model, resume_state = load_model(resume)
    else:
        model = build_model(cfg, rng)
    log_path = out / "training_log.csv"
    model, history = train(model, data, cfg, rng, checkpoint_dir=str(out),
                           log_path=log_path, verbose=not args.quiet,
                           resume_state=resume_state)
    artifacts = sorted(out.glob("*.ckpt")) + [log_path]
    _write_manifest(out, "train",
                    {"gan": json.loads(cfg.to_json()), "data": str(data_path),
                     "resume": resume or ""},
                    args.seed, artifacts)
    print(f"trained {len(history.epoch)} epochs; artifacts in {out}")
    return 0


def cmd_generate(args) -> int:
    from .gan import generate, load_model
    from .rng import Rng
    from .traces import save_traceset

    model, _ = load_model(args.checkpoint)
    ts = generate(model, args.n, Rng(args.seed))
    out = _outdir(args)
    path = out / "generated.ngts"
    save_traceset(ts, path)
    _write_manifest(out, "generate",
                    {"checkpoint": str(args.checkpoint), "n": args.n},
                    args.seed, [path])
    print(f"wrote {path} ({args.n} x {ts.trace_len})")
    return 0


def cmd_evaluate(args) -> int:
    from dataclasses import asdict, replace

    from .config import parse_eval_params
    from .report import EvalParams, evaluate_sets, write_report
    from .traces import load_traceset

    cp = _load_ini(args)
    params = parse_eval_params(cp) if cp is not None else EvalParams()
    overrides = {}
    if args.thresh is not None:
        overrides["thresh"] = args.thresh
    if args.fundamental is not None:
        overrides["fundamental_hz"] = args.fundamental
    if args.nfft is not None:
        overrides["nfft"] = args.nfft
    if args.fid_space is not None:
        overrides["fid_space"] = args.fid_space
    if overrides:
        params = replace(params, **overrides)

    ref = load_traceset(args.set_a, name="reference")
    gen = load_traceset(args.set_b, name="generated")
    report = evaluate_sets(ref, gen, params)
    out = _outdir(args)
    files = write_report(report, out, plots=args.plots)
    if args.plots:
        from .report import write_diagnostic_plots

        files += write_diagnostic_plots(ref, gen, params, out)
    _write_manifest(out, "evaluate",
                    {"set_a": str(args.set_a), "set_b": str(args.set_b),
                     "params": asdict(params)},
                    args.seed, [out / f for f in files])
    print(f"FID ({params.fid_space} space): {report.fid_value:.6g}")
    print(f"report tables in {out}")
    return 0


def cmd_report(args) -> int:
    from .errors import ConfigError

    indir = Path(args.eval_dir)
    if not (indir / "fid.csv").exists():
        raise ConfigError(f"{indir} does not look like an evaluate output directory")
    lines = ["# Evaluation report", ""]
    for name, title in (("features.csv", "Feature statistics (mean/std/median)"),
                        ("exceedance.csv", "Coherence exceedance per cyclic frequency"),
                        ("bands.csv", "Peak-coherence band distribution"),
                        ("fid.csv", "Frechet distance")):
        path = indir / name
        if not path.exists():
            continue
        lines.append(f"## {title}")
        with open(path) as fh:
            for row in fh:
                lines.append("    " + row.rstrip())
        lines.append("")
    text = "\n".join(lines)
    if args.out_file:
        Path(args.out_file).write_text(text)
        print(f"wrote {args.out_file}")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plcnoise",
        description="Cyclostationary powerline-noise synthesis, GAN training, "
                    "and cyclic-spectral evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI run configuration")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="pin BLAS/OpenMP threads (1 = bitwise deterministic)")

    p = sub.add_parser("synth", help="synthesize a parametric noise dataset")
    common(p)
    p.add_argument("--model", choices=["fresh", "pscgm"])
    p.add_argument("--preset", help="dataset1-like | dataset2-like | desk-fresh")
    p.add_argument("--n", type=int, help="trace count")
    p.add_argument("--length", type=int, help="samples per trace")
    p.add_argument("--normalize", action="store_true",
                   help="max-abs normalize the set into [-1, 1]")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the trace GAN on a dataset")
    common(p)
    p.add_argument("--data", help="NGTS dataset path (overrides config)")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample traces from a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n", type=int, default=100)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="compare two trace sets")
    common(p)
    p.add_argument("set_a", help="reference NGTS file")
    p.add_argument("set_b", help="generated NGTS file")
    p.add_argument("--thresh", type=float, help="coherence exceedance threshold")
    p.add_argument("--fundamental", type=float, help="cycle frequency in Hz")
    p.add_argument("--nfft", type=int)
    p.add_argument("--fid-space", choices=["features", "pca"], dest="fid_space")
    p.add_argument("--plots", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render an evaluate directory as text")
    p.add_argument("eval_dir")
    p.add_argument("--out", dest="out_file", help="write to file instead of stdout")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _set_threads(getattr(args, "threads", None))

    from . import errors

    try:
        return args.func(args)
    except (errors.ConfigError, errors.InvalidConfigError,
            errors.InvalidParamError, errors.ModeError,
            errors.InvalidRangeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, errors.FormatError, errors.LengthError, errors.ShapeError,
            errors.DegenerateInputError, errors.EmptyRangeError,
            errors.ResolutionError, errors.OutOfRangeError,
            errors.DegenerateBatchError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (errors.NumericsError, errors.RankError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
