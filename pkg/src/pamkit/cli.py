"""Command-line surface: score, distort, eval, sweep-report.

Exit codes: 0 full success, 1 configuration or input error, 2 finished with
per-item failures (details in errors.csv). Every artifact is deterministic
for a fixed config and seed, so reruns are byte-identical and diffable.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import svgplot
from .audio_io import load_wav, save_wav
from .backends import make_backend
from .bundle import canonical_json_bytes, load_bundle
from .distortions import DistortionSpec, apply_spec, sweep
from .scoring import STRATEGIES, score_batch
from .stats import RatingRecord, aggregate_mos, correlate, filter_raters, pearson

CONFIG_VERSION = 1
BUNDLE_ENV_VAR = "PAMKIT_BUNDLE"


class CliError(Exception):
    pass


def _fmt(value: float) -> str:
    return f"{value:.10g}"


def _read_csv(path: Path, required: tuple[str, ...]) -> list[dict]:
    if not path.is_file():
        raise CliError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise CliError(f"{path.name} missing required column {column!r}")
        return list(reader)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


# ------------------------------------------------------------------ config

_RUN_CONFIG_KEYS = {
    "config_version",
    "bundle_path",
    "backend",
    "strategy",
    "window_seconds",
    "hop_seconds",
    "tau_override",
    "parallelism",
    "seed",
    "output_dir",
    "store_path",
}


@dataclass(frozen=True)
class RunConfig:
    bundle_path: str
    backend: str = "mock"
    strategy: str = "pam"
    window_seconds: float | None = None
    hop_seconds: float | None = None
    tau_override: float | str | None = None
    parallelism: int = 1
    seed: int = 0
    output_dir: str = "."
    store_path: str | None = None

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise CliError(f"no such config file: {path}")
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CliError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise CliError("config must be a JSON object")

        unknown = set(obj) - _RUN_CONFIG_KEYS
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
        if obj.get("config_version") != CONFIG_VERSION:
            raise CliError(
                f"config_version must be {CONFIG_VERSION}, got {obj.get('config_version')!r}"
            )

        bundle_path = obj.get("bundle_path") or os.environ.get(BUNDLE_ENV_VAR)
        if not bundle_path:
            raise CliError(
                f"no bundle_path in config and {BUNDLE_ENV_VAR} is not set"
            )
        cfg = cls(
            bundle_path=str(bundle_path),
            backend=obj.get("backend", "mock"),
            strategy=obj.get("strategy", "pam"),
            window_seconds=obj.get("window_seconds"),
            hop_seconds=obj.get("hop_seconds"),
            tau_override=obj.get("tau_override"),
            parallelism=int(obj.get("parallelism", 1)),
            seed=int(obj.get("seed", 0)),
            output_dir=str(obj.get("output_dir", ".")),
            store_path=obj.get("store_path"),
        )
        if cfg.backend not in ("neural", "precomputed", "mock"):
            raise CliError(f"unknown backend {cfg.backend!r}")
        if cfg.strategy not in STRATEGIES:
            raise CliError(f"unknown strategy {cfg.strategy!r}")
        if cfg.parallelism < 1:
            raise CliError("parallelism must be >= 1")
        if not Path(cfg.bundle_path).exists():
            raise CliError(f"bundle path does not exist: {cfg.bundle_path}")
        if cfg.store_path is not None and not Path(cfg.store_path).exists():
            raise CliError(f"store path does not exist: {cfg.store_path}")
        return cfg


# ------------------------------------------------------------------- score

def cmd_score(args) -> int:
    cfg = RunConfig.load(args.config)
    rows = _read_csv(Path(args.manifest), required=("file_path",))
    if not rows:
        raise CliError("manifest has no rows")

    try:
        bundle = load_bundle(cfg.bundle_path)
        backend = make_backend(cfg.backend, bundle, store_path=cfg.store_path, seed=cfg.seed)
    except (ValueError, OSError) as exc:
        raise CliError(str(exc)) from exc

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    paths = [row["file_path"] for row in rows]
    results = score_batch(
        backend,
        bundle,
        paths,
        strategy=cfg.strategy,
        parallelism=cfg.parallelism,
        window_seconds=cfg.window_seconds,
        hop_seconds=cfg.hop_seconds,
        tau=cfg.tau_override,
    )

    score_rows, error_rows = [], []
    for row, item in zip(rows, results):
        item_id = row.get("item_id") or Path(item.path).stem
        system_id = row.get("system_id") or ""
        if item.result is not None:
            r = item.result
            score_rows.append(
                [item.path, item_id, system_id, _fmt(r.pam), r.strategy, _fmt(r.tau_used), len(r.per_window)]
            )
        else:
            error_rows.append([item.path, item_id, item.error])

    _write_csv(
        out_dir / "scores.csv",
        ["file_path", "item_id", "system_id", "pam", "strategy", "tau_used", "n_windows"],
        score_rows,
    )
    if error_rows:
        _write_csv(out_dir / "errors.csv", ["file_path", "item_id", "error"], error_rows)
        print(f"scored {len(score_rows)} files, {len(error_rows)} failed", file=sys.stderr)
        return 2
    return 0


# ----------------------------------------------------------------- distort

def _parse_distort_spec(path: Path) -> list[dict]:
    if not path.is_file():
        raise CliError(f"no such spec file: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"distortion spec is not valid JSON: {exc}") from exc
    entries = obj if isinstance(obj, list) else [obj]
    for entry in entries:
        if not isinstance(entry, dict) or "kind" not in entry:
            raise CliError("each distortion spec entry needs a 'kind'")
    return entries


def cmd_distort(args) -> int:
    entries = _parse_distort_spec(Path(args.spec))
    in_dir, out_dir = Path(args.input_dir), Path(args.output_dir)
    if not in_dir.is_dir():
        raise CliError(f"no such input directory: {in_dir}")
    wavs = sorted(in_dir.glob("*.wav"))
    if not wavs:
        raise CliError(f"no .wav files in {in_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)

    ladder_rows, error_rows = [], []
    for source in wavs:
        try:
            clip = load_wav(source)
        except (ValueError, OSError) as exc:
            error_rows.append([str(source), "", f"{type(exc).__name__}: {exc}"])
            continue
        for entry in entries:
            try:
                rungs = _expand_entry(clip, entry)
            except ValueError as exc:
                raise CliError(f"invalid distortion spec: {exc}") from exc
            for severity, seed, distorted in rungs:
                name = f"{source.stem}__{entry['kind']}__{severity:g}.wav"
                save_wav(distorted, out_dir / name, bit_depth="32f")
                ladder_rows.append(
                    [name, str(source), entry["kind"], _fmt(severity), seed]
                )

    _write_csv(
        out_dir / "ladder.csv",
        ["file_path", "source_path", "kind", "severity", "seed"],
        ladder_rows,
    )
    if error_rows:
        _write_csv(out_dir / "errors.csv", ["file_path", "item_id", "error"], error_rows)
        return 2
    return 0


def _expand_entry(clip, entry: dict):
    """One spec entry -> list of (severity, seed, distorted clip)."""
    unknown = set(entry) - {"kind", "severity", "severities", "mu", "bits", "seed", "base_seed"}
    if unknown:
        raise ValueError(f"unknown distortion spec keys: {sorted(unknown)}")
    kind = entry["kind"]
    mu = float(entry.get("mu", 255.0))
    if "severities" in entry or ("severity" not in entry and "bits" not in entry):
        base_seed = int(entry.get("base_seed", entry.get("seed", 0)))
        rungs = sweep(clip, kind, entry.get("severities"), base_seed=base_seed, mu=mu)
        return [
            (severity, base_seed + i, distorted)
            for i, (severity, distorted) in enumerate(rungs)
        ]
    spec = DistortionSpec.from_json_dict(entry)
    return [(spec.severity, spec.seed, apply_spec(clip, spec))]


# -------------------------------------------------------------------- eval

def _metric_column(rows: list[dict], path: Path) -> str:
    for column in ("metric_value", "pam"):
        if rows and column in rows[0]:
            return column
    raise CliError(f"{path.name} has neither a 'metric_value' nor a 'pam' column")


def _load_ratings(path: Path) -> list[RatingRecord]:
    rows = _read_csv(path, required=("rater_id", "item_id", "system_id", "score"))
    records = []
    for row in rows:
        duration = row.get("duration_seconds")
        records.append(
            RatingRecord(
                rater_id=row["rater_id"],
                item_id=row["item_id"],
                system_id=row["system_id"],
                score=float(row["score"]),
                duration_seconds=float(duration) if duration not in (None, "") else None,
            )
        )
    return records


def cmd_eval(args) -> int:
    score_rows = _read_csv(Path(args.scores), required=("item_id",))
    metric_col = _metric_column(score_rows, Path(args.scores))
    metric_by_item = {row["item_id"]: float(row[metric_col]) for row in score_rows}

    ratings = _load_ratings(Path(args.ratings))
    kept, excluded = filter_raters(ratings)
    per_item, per_system, n_dropped = aggregate_mos(
        kept, expected_item_ids=[r.item_id for r in ratings]
    )
    report = correlate(
        per_item,
        metric_by_item,
        n_excluded_raters=len(excluded),
        n_dropped_items=n_dropped,
        excluded_raters=excluded,
    )
    if not report.per_item:
        raise CliError("no items joined between scores and ratings")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_bytes(canonical_json_bytes(report.to_json_dict()))

    # per-system table, with a pooled-within-system PCC where computable
    system_rows = []
    items_of: dict[str, list[tuple[float, float]]] = {}
    for item_id, system_id, mos, metric in report.per_item:
        items_of.setdefault(system_id, []).append((mos, metric))
    for system_id, mos, metric in report.per_system:
        pairs = items_of[system_id]
        try:
            within = _fmt(pearson([p[0] for p in pairs], [p[1] for p in pairs]))
        except ValueError:
            within = ""
        system_rows.append([system_id, _fmt(mos), _fmt(metric), len(pairs), within])
    _write_csv(
        out_dir / "per_system.csv",
        ["system_id", "mos", "metric_value", "n_items", "pcc_within_system"],
        system_rows,
    )

    def _scatter(pairs, pcc, title, path):
        annotation = f"PCC = {pcc:.4f}" if pcc is not None else "PCC = n/a"
        svg = svgplot.scatter_svg(
            [p[1] for p in pairs],
            [p[0] for p in pairs],
            title=title,
            x_label="metric",
            y_label="MOS",
            annotation=annotation,
        )
        path.write_text(svg, encoding="utf-8")

    _scatter(
        [(mos, metric) for _, _, mos, metric in report.per_item],
        report.pcc_utterance,
        "MOS vs metric (utterance level)",
        out_dir / "mos_vs_metric_utterance.svg",
    )
    _scatter(
        [(mos, metric) for _, mos, metric in report.per_system],
        report.pcc_system,
        "MOS vs metric (system level)",
        out_dir / "mos_vs_metric_system.svg",
    )
    return 0


# ------------------------------------------------------------ sweep-report

def cmd_sweep_report(args) -> int:
    ladder_rows = _read_csv(Path(args.ladder), required=("file_path", "kind", "severity"))
    score_rows = _read_csv(Path(args.scores), required=("file_path",))
    metric_col = _metric_column(score_rows, Path(args.scores))
    pam_by_file = {row["file_path"]: float(row[metric_col]) for row in score_rows}
    # scores.csv may record paths with directories; ladder paths are bare names
    pam_by_name = {Path(p).name: v for p, v in pam_by_file.items()}

    grouped: dict[tuple[str, float], list[float]] = {}
    for row in ladder_rows:
        value = pam_by_file.get(row["file_path"], pam_by_name.get(Path(row["file_path"]).name))
        if value is None:
            continue
        key = (row["kind"], float(row["severity"]))
        grouped.setdefault(key, []).append(value)
    if not grouped:
        raise CliError("no files joined between ladder and scores")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    sweep_rows = []
    series: dict[str, list[tuple[float, float]]] = {}
    for (kind, severity), values in sorted(grouped.items()):
        mean_pam = sum(values) / len(values)
        sweep_rows.append([kind, _fmt(severity), _fmt(mean_pam), len(values)])
        series.setdefault(kind, []).append((severity, mean_pam))
    _write_csv(out_dir / "sweep.csv", ["kind", "severity", "mean_pam", "n_files"], sweep_rows)

    svg = svgplot.line_svg(
        series,
        title="PAM vs distortion severity",
        x_label="severity",
        y_label="mean PAM",
    )
    (out_dir / "sweep.svg").write_text(svg, encoding="utf-8")
    return 0


# -------------------------------------------------------------------- main

class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved for partial failures
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pamkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[], help="score a manifest of WAV files")
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--manifest", required=True, help="CSV with file_path[,item_id][,system_id]")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("distort", help="apply distortion ladders to a directory of WAVs")
    p.add_argument("--spec", required=True, help="distortion spec JSON")
    p.add_argument("--in", dest="input_dir", required=True)
    p.add_argument("--out", dest="output_dir", required=True)
    p.set_defaults(func=cmd_distort)

    p = sub.add_parser("eval", help="correlate metric scores against MOS ratings")
    p.add_argument("--scores", required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-report", help="summarize scores over a distortion ladder")
    p.add_argument("--ladder", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep_report)
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"pamkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
