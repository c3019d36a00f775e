"""Command-line entry point.

Exit codes: 0 ok, 2 validation failure, 3 parse error, 4 I/O error,
5 config error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import evaluation as ev
from .config import Config, ConfigError, load_config, parse_override
from .io import MotionFile, ParseError, read_motion
from .motion import MeshSequence, MotionError, validate_trajectory
from .reward import SCORE_FIELDS, ScoreReport, normalize_rewards, score_trajectory

EXIT_OK, EXIT_VALIDATION, EXIT_PARSE, EXIT_IO, EXIT_CONFIG = 0, 2, 3, 4, 5
TRAJECTORY_SUFFIXES = (".json", ".mft")
BATCH_COLUMNS = ("file", "video_id", "subject_id", "prompt_id") + SCORE_FIELDS


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _config(args) -> Config:
    try:
        cfg = load_config(getattr(args, "config", None))
        overrides = dict(parse_override(item) for item in getattr(args, "set", None) or ())
        return cfg.with_overrides(overrides) if overrides else cfg
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from None


def _load(path: str | Path) -> MotionFile:
    try:
        return read_motion(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from None
    except ParseError as exc:
        raise CliError(EXIT_PARSE, f"parse error in {path}: {exc}") from None
    except MotionError as exc:
        raise CliError(EXIT_VALIDATION, f"invalid trajectory {path}: {exc}") from None


def _load_mesh(path: str) -> tuple[MeshSequence, Optional[dict]]:
    """Mesh from a .npz (faces, vertex_frames), a mesh-only JSON, or a trajectory file."""
    p = Path(path)
    try:
        if p.suffix == ".npz":
            with np.load(p) as data:
                feet = None
                if "left_foot_vertices" in data and "right_foot_vertices" in data:
                    feet = {"left": data["left_foot_vertices"].tolist(),
                            "right": data["right_foot_vertices"].tolist()}
                return MeshSequence(data["faces"], data["vertex_frames"]), feet
        raw = p.read_bytes()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read mesh {path}: {exc.strerror or exc}") from None
    except (KeyError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"bad mesh archive {path}: {exc}") from None
    try:
        doc = json.loads(raw)
    except (UnicodeDecodeError, json.JSONDecodeError):
        doc = None
    if isinstance(doc, dict) and "faces" in doc and "vertex_frames" in doc:
        try:
            mesh = MeshSequence(np.asarray(doc["faces"], dtype=np.int64),
                                np.asarray(doc["vertex_frames"], dtype=np.float64))
        except (TypeError, ValueError) as exc:
            raise CliError(EXIT_PARSE, f"bad mesh in {path}: {exc}") from None
        return mesh, doc.get("foot_vertex_sets")
    mf = _load(path)
    if mf.mesh is None:
        raise CliError(EXIT_PARSE, f"{path} contains no mesh")
    return mf.mesh, mf.foot_vertex_sets


def score_file(path: str | Path, config: Config, mesh_path: Optional[str] = None,
               trace: bool = False) -> ScoreReport:
    mf = _load(path)
    if mesh_path is not None:
        mesh, feet = _load_mesh(mesh_path)
        mf = MotionFile(mf.trajectory, mf.joint_names, mf.parents, mesh,
                        feet if feet is not None else mf.foot_vertex_sets, mf.joint_limits)
    try:
        body = mf.body_model(config)
    except (MotionError, ValueError) as exc:
        raise CliError(EXIT_VALIDATION, f"invalid body model in {path}: {exc}") from None
    result = validate_trajectory(mf.trajectory, body, mf.mesh)
    if not result.ok:
        raise CliError(EXIT_VALIDATION, f"validation failed for {path}:\n  " + "\n  ".join(result.problems))
    try:
        return score_trajectory(mf.trajectory, body, mf.mesh, config, trace=trace)
    except (MotionError, ValueError) as exc:
        raise CliError(EXIT_VALIDATION, f"cannot score {path}: {exc}") from None


# ---------------------------------------------------------------- score


def format_report(report: ScoreReport) -> str:
    lines = [f"subject {report.subject_id or '-'}  prompt {report.prompt_id or '-'}"]
    groups = [("kinematic", ("v_vel", "v_spen", "v_lim"), "f_kin"),
              ("contact", ("v_slip", "v_gpen", "v_float", "v_bal"), "f_con"),
              ("dynamic", ("s_tau", "s_grf", "s_met"), "f_dyn")]
    for title, terms, axis in groups:
        lines.append(f"{title:<10} {axis:<9} {getattr(report, axis):.4f}")
        lines += [f"{'':<10}   {t:<7} {getattr(report, t):.4f}" for t in terms]
    lines.append(f"{'reward':<10} {'r_motion':<9} {report.r_motion:.4f}")
    if report.flags:
        lines.append("flags: " + ", ".join(report.flags))
    return "\n".join(lines)


def cmd_score(args) -> int:
    cfg = _config(args)
    report = score_file(args.file, cfg, args.mesh, trace=args.trace)
    if args.json:
        doc = report.to_dict(include_diagnostics=args.trace)
        doc["config"] = cfg.as_flat_dict()
        print(json.dumps(doc, sort_keys=False))
    else:
        print(format_report(report))
        if args.trace and report.diagnostics is not None:
            print(json.dumps(report.diagnostics))
    return EXIT_OK


# ---------------------------------------------------------------- batch


def _batch_row(job: tuple[str, Config, bool]) -> dict[str, Any]:
    path, cfg, timing = job
    p = Path(path)
    row: dict[str, Any] = {"file": p.name, "video_id": p.stem}
    start = time.perf_counter()
    try:
        report = score_file(path, cfg)
    except CliError as exc:
        row["error"] = str(exc).splitlines()[0]
    except Exception as exc:  # one bad file must not stop the batch
        row["error"] = f"{type(exc).__name__}: {exc}"
    else:
        row.update(subject_id=report.subject_id, prompt_id=report.prompt_id, **report.scores())
        row["flags"] = ";".join(report.flags)
    if timing:
        row["_seconds"] = time.perf_counter() - start
    return row


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def batch_rows(files: Sequence[Path], cfg: Config, workers: int = 1, group_by_prompt: bool = False,
               timing: bool = False) -> list[dict[str, Any]]:
    jobs = [(str(f), cfg, timing) for f in files]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_batch_row, jobs, chunksize=1))
    else:
        rows = [_batch_row(j) for j in jobs]
    if group_by_prompt:
        ok = [r for r in rows if "error" not in r]
        tilde = normalize_rewards([r["r_motion"] for r in ok], [r["prompt_id"] for r in ok],
                                  clip=cfg.advantage_clip, std_floor=cfg.std_floor)
        for r, v in zip(ok, tilde):
            r["r_tilde"] = float(v)
    return rows


def write_batch_csv(rows: list[dict[str, Any]], out, group_by_prompt: bool = False) -> None:
    columns = list(BATCH_COLUMNS) + (["r_tilde"] if group_by_prompt else []) + ["flags", "error"]
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in columns])


def cmd_batch(args) -> int:
    cfg = _config(args)
    root = Path(args.dir)
    if not root.is_dir():
        raise CliError(EXIT_IO, f"not a directory: {root}")
    files = sorted((p for p in root.iterdir() if p.suffix in TRAJECTORY_SUFFIXES and p.is_file()),
                   key=lambda p: p.name)
    start = time.perf_counter()
    rows = batch_rows(files, cfg, args.workers, args.group_by_prompt, timing=args.timing)
    wall = time.perf_counter() - start
    buf = _io.StringIO()
    write_batch_csv(rows, buf, args.group_by_prompt)
    if args.out:
        try:
            Path(args.out).write_text(buf.getvalue())
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write {args.out}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(buf.getvalue())
    failed = [r for r in rows if "error" in r]
    if failed:
        print(f"warning: {len(failed)} of {len(rows)} files failed to score", file=sys.stderr)
        for r in failed:
            print(f"  {r['file']}: {r['error']}", file=sys.stderr)
    if args.timing and rows:
        per_file = [r["_seconds"] for r in rows]
        print(f"timing: {len(rows)} files, wall {wall:.3f} s, mean per file {np.mean(per_file):.4f} s, "
              f"workers {args.workers}", file=sys.stderr)
    return EXIT_OK


# ----------------------------------------------------------------- eval


def _votes(path: str, question: Optional[Sequence[str]] = None) -> list[ev.PairwiseVote]:
    try:
        votes = ev.read_votes(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from None
    except (ValueError, KeyError) as exc:
        raise CliError(EXIT_PARSE, f"bad votes file {path}: {exc}") from None
    if question:
        votes = [v for v in votes if v.question in question]
    return votes


def _num(x: float, digits: int = 4) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.{digits}f}"


def cmd_eval(args) -> int:
    votes = _votes(args.votes)
    try:
        table = ev.read_scores(args.scores)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {args.scores}: {exc.strerror or exc}") from None
    except (ValueError, KeyError) as exc:
        raise CliError(EXIT_PARSE, f"bad scores file {args.scores}: {exc}") from None
    if args.metric:
        unknown = set(args.metric) - set(table.metrics)
        if unknown:
            raise CliError(EXIT_PARSE, f"unknown metric columns {sorted(unknown)}")
        table.metrics = [m for m in table.metrics if m in args.metric]
    rows, missing = ev.alignment_report(votes, table, args.question or None,
                                        resamples=args.bootstrap, seed=args.seed, workers=args.workers)
    for line in missing:
        print(f"join: {line}", file=sys.stderr)
    header = ["metric", "question", "n_votes", "n_videos", "agreement", "rho", "rho_std", "hard_disagreement"]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([r.metric, r.question, r.n_votes, r.n_videos, _fmt(r.agreement),
                            _fmt(r.rho), _fmt(r.rho_std), _fmt(r.hard_disagreement)])
    width = max([len(r.metric) for r in rows] + [6])
    qwidth = max([len(r.question) for r in rows] + [8])
    print(f"{'metric':<{width}}  {'question':<{qwidth}}  {'votes':>5}  {'agree':>6}  {'rho':>16}")
    for r in rows:
        rho = f"{_num(r.rho, 3)} ± {_num(r.rho_std, 3)}"
        print(f"{r.metric:<{width}}  {r.question:<{qwidth}}  {r.n_votes:>5}  {_num(r.agreement, 3):>6}  {rho:>16}")
    return EXIT_OK


def cmd_elo(args) -> int:
    votes = _votes(args.votes, args.question)
    table = ev.elo_ratings(votes, k=args.k, base=args.base, shuffle_seed=args.shuffle_seed)
    print("model,rating,games")
    for model, rating, games in table.ranked():
        print(f"{model},{rating:.4f},{games}")
    return EXIT_OK


def cmd_winmatrix(args) -> int:
    votes = _votes(args.votes, args.question)
    names, M = ev.win_matrix(votes)
    print(",".join(["model"] + names))
    for name, row in zip(names, M):
        print(",".join([name] + ["-" if math.isnan(x) else f"{x:.4f}" for x in row]))
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    from .selfcheck import run_selfcheck
    ok = run_selfcheck(print)
    return EXIT_OK if ok else 1


# ----------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motionfeas",
                                     description="Physics-grounded feasibility scores for 3D human motion.")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="TOML config file (default: $MOTIONFEAS_CONFIG)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key, e.g. contact.height_max=0.03")

    p = sub.add_parser("score", help="score one trajectory file")
    p.add_argument("file")
    with_config(p)
    p.add_argument("--mesh", help="mesh to use instead of the embedded one (.json or .npz)")
    p.add_argument("--json", action="store_true", help="print one JSON object")
    p.add_argument("--trace", action="store_true", help="include per-frame diagnostics")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("batch", help="score every trajectory file in a directory")
    p.add_argument("dir")
    with_config(p)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--group-by-prompt", action="store_true", help="add per-prompt normalized reward r_tilde")
    p.add_argument("--timing", action="store_true", help="report scoring latency on stderr")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("eval", help="agreement and rank correlation with human votes")
    p.add_argument("votes")
    p.add_argument("scores")
    p.add_argument("--question", action="append", help="restrict to a question (repeatable)")
    p.add_argument("--metric", action="append", help="restrict to a metric column (repeatable)")
    p.add_argument("--bootstrap", type=int, default=1000, help="bootstrap resamples")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="also write the table as CSV")
    p.set_defaults(func=cmd_eval)

    for name, func, text in (("elo", cmd_elo, "Elo ratings from votes"),
                             ("winmatrix", cmd_winmatrix, "pairwise win-rate matrix")):
        p = sub.add_parser(name, help=text)
        p.add_argument("votes")
        p.add_argument("--question", action="append")
        if name == "elo":
            p.add_argument("--k", type=float, default=ev.K_FACTOR)
            p.add_argument("--base", type=float, default=ev.BASE_RATING)
            p.add_argument("--shuffle-seed", type=int, default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("selfcheck", help="run the built-in fixture suite")
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
