"""Command-line front end: ``run``, ``synth`` and ``eval {ce,auc,nll}``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from . import __version__
from .compressor import Regime, WindowVerdict
from .engine import Engine
from .evalkit import conditional_entropy, read_column, roc_auc, window_nll, write_metrics
from .synthgen import AnomalySpec, GeneratorSpec, gen_stream, window_labels, write_events, \
    write_labels
from .tensor import EventReader, MalformedRow, StreamConfig, Vocabulary, WindowTensor

log = logging.getLogger("streamcube")

# flag name -> StreamConfig field
CONFIG_FLAGS = {
    "tau": "tau", "k": "n_components", "l": "queue_len", "iters": "n_iter",
    "seed": "seed", "cf_bits": "float_bits", "alpha": "alpha", "beta": "beta",
    "init_windows": "init_windows",
}
INGEST_FLAGS = ("n_attrs", "delimiter", "tick_size")


class UsageError(Exception):
    pass


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.chmod(tmp, 0o644)
    os.replace(tmp, path)


def _csv_bytes(header: Sequence[str], rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode()


def _load_config_file(path: str | None) -> tuple[dict, dict]:
    """Stream and ingest settings from a JSON config or a previous run manifest."""
    if path is None:
        return {}, {}
    data = json.loads(Path(path).read_text())
    ingest = data.get("ingest", {})
    data = data.get("config", data)
    stream = {}
    for key, value in data.items():
        field = CONFIG_FLAGS.get(key, key)
        if field not in StreamConfig.__dataclass_fields__:
            raise UsageError(f"unknown config key {key!r}")
        stream[field] = value
    return stream, ingest


def _resolve(args) -> tuple[StreamConfig, dict]:
    stream, ingest = _load_config_file(args.config)
    for flag, field in CONFIG_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            stream[field] = value
    for flag in INGEST_FLAGS:
        value = getattr(args, flag)
        if value is not None:
            ingest[flag] = value
    ingest.setdefault("delimiter", ",")
    ingest.setdefault("tick_size", 1)
    ingest.setdefault("n_attrs", None)
    try:
        return StreamConfig(**stream), ingest
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def cmd_run(args) -> int:
    src = Path(args.input)
    if not src.is_file():
        raise UsageError(f"input not found: {src}")
    config, ingest = _resolve(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    reader = EventReader(n_attrs=ingest["n_attrs"], delimiter=ingest["delimiter"],
                         tick_size=ingest["tick_size"])
    events = reader.read(src)
    first = next(events, None)
    engine = Engine(config)
    verdicts = []
    if first is not None:
        engine.vocab = reader.vocab
        verdicts = engine.feed([first])
        verdicts += engine.feed(events)
        verdicts += engine.flush()
    vocab = reader.vocab or Vocabulary(ingest["n_attrs"] or 1)

    end = (engine._last_start + config.tau) if engine._last_start is not None else 0
    starts = engine.description.segments
    seg_rows = [(t, starts[i + 1][0] if i + 1 < len(starts) else end, rid)
                for i, (t, rid) in enumerate(starts)]
    files = {
        "verdicts.csv": _csv_bytes(WindowVerdict.CSV_FIELDS, [v.csv_row() for v in verdicts]),
        "segments.csv": _csv_bytes(("t_start", "t_end", "regime_id"), seg_rows),
        "regimes.json": (json.dumps([r.to_dict() for r in engine.description.regimes]) + "\n"
                         ).encode(),
        "vocab.json": (json.dumps(vocab.to_dict(), indent=1) + "\n").encode(),
        "snapshot.bin": engine.snapshot(),
    }
    for name, data in files.items():
        _atomic_write(out / name, data)
    manifest = {
        "software": {"name": "streamcube", "version": __version__},
        "config": config.to_dict(),
        "queue_len_used": engine.queue_len,
        "ingest": ingest,
        "seed": config.seed,
        "inputs": [{"path": str(src), "sha256": _sha256(src)}],
        "outputs": [{"path": name, "sha256": hashlib.sha256(data).hexdigest()}
                    for name, data in files.items()],
        "stats": {"windows": engine.n_windows, "regimes": engine.description.n_regimes,
                  "segments": engine.description.n_segments,
                  "late_events": engine.late_events,
                  "total_bits": engine.cost().total_bits if engine.initialized else 0.0},
    }
    _atomic_write(out / "manifest.json", (json.dumps(manifest, indent=1) + "\n").encode())
    print(f"{engine.n_windows} windows, {engine.description.n_regimes} regimes, "
          f"{engine.description.n_segments} segments -> {out}")
    return 0


def cmd_synth(args) -> int:
    try:
        dims = tuple(int(d) for d in args.dims.split(","))
        anomaly = None
        if args.anomaly_rate or args.anomaly_positions:
            positions = (tuple(int(p) for p in args.anomaly_positions.split(","))
                         if args.anomaly_positions else None)
            anomaly = AnomalySpec(rate=args.anomaly_rate, width=args.anomaly_width,
                                  positions=positions, skip_head=args.anomaly_skip)
        spec = GeneratorSpec(dims=dims, n_events=args.events, pattern=args.pattern,
                             ticks_per_phase=args.ticks_per_phase, seed=args.seed,
                             anomaly=anomaly)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    events, labels = gen_stream(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_events(out / "events.csv", events, len(dims))
    write_labels(out / "labels.csv", labels)
    print(f"{len(events)} events over {spec.n_ticks} ticks, "
          f"{len(spec.phase_types)} phases -> {out}")
    return 0


def _aligned(pred_kind, pred, truth_kind, truth, tau):
    """Bring tick-level labels to window level when the other side is per window."""
    if pred_kind != truth_kind and len(pred) != len(truth):
        if tau is None:
            raise UsageError("--tau is needed to align tick labels with windows")
        if pred_kind == "labels":
            pred = window_labels(pred, tau)
        else:
            truth = window_labels(truth, tau)
    if len(pred) != len(truth):
        raise UsageError(f"length mismatch: {len(pred)} predictions vs {len(truth)} labels")
    return pred, truth


def cmd_eval_ce(args) -> int:
    pk, pred = read_column(args.pred)
    tk, truth = read_column(args.truth)
    pred, truth = _aligned(pk, pred, tk, truth, args.tau)
    ce = conditional_entropy(pred, truth)
    print(f"ce={ce!r}")
    if args.out:
        write_metrics(args.out, ce=ce)
    return 0


def _read_scores(path) -> list[float]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        fields = reader.fieldnames or []
    for col in ("score_bits_per_event", "score"):
        if col in fields:
            return [float(row[col]) for row in rows]
    raise UsageError(f"{path}: expected a 'score_bits_per_event' or 'score' column")


def cmd_eval_auc(args) -> int:
    scores = _read_scores(args.scores)
    _, labels = read_column(args.labels)
    if len(labels) != len(scores):
        if args.tau is None:
            raise UsageError(f"length mismatch: {len(scores)} scores vs {len(labels)} labels")
        labels = window_labels(labels, args.tau)
        if len(labels) != len(scores):
            raise UsageError(f"length mismatch: {len(scores)} scores vs {len(labels)} labels")
    positive = {p.strip() for p in args.positive.split(",")}
    auc = roc_auc(scores, [label in positive for label in labels])
    print(f"auc={auc!r}")
    if args.out:
        write_metrics(args.out, auc=auc)
    return 0


def cmd_eval_nll(args) -> int:
    run = Path(args.run_dir)
    manifest = json.loads((run / "manifest.json").read_text())
    regimes = [Regime.from_dict(r) for r in json.loads((run / "regimes.json").read_text())]
    if not regimes:
        raise UsageError("run has no regimes")
    if args.regime is None:
        regime = max(regimes, key=lambda r: (r.length, -r.id))
    else:
        regime = next((r for r in regimes if r.id == args.regime), None)
        if regime is None:
            raise UsageError(f"no regime {args.regime}")
    tau = manifest["config"]["tau"]
    ingest = manifest["ingest"]
    reader = EventReader(vocab=Vocabulary.load(run / "vocab.json"), n_attrs=ingest["n_attrs"],
                         delimiter=ingest["delimiter"], tick_size=ingest["tick_size"])
    windows: dict[int, WindowTensor] = {}
    origin = None
    for event in reader.read(args.events):
        if origin is None:
            origin = event.tick - event.tick % tau
        if event.tick < origin:
            continue
        start = origin + (event.tick - origin) // tau * tau
        window = windows.setdefault(start, WindowTensor(start, tau, len(event.units)))
        window.append(event)
    nll = [window_nll(windows[s], regime.theta) for s in sorted(windows)]
    print(f"regime={regime.id} windows={len(nll)} mean_nll={sum(nll) / max(len(nll), 1)!r}")
    if args.out:
        write_metrics(args.out, nll_per_window=nll, nll_window_starts=sorted(windows),
                      nll_regime=regime.id)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamcube", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="summarize an event stream")
    run.add_argument("input")
    run.add_argument("--out-dir", default="out")
    run.add_argument("--config", help="JSON config or a previous manifest.json")
    run.add_argument("--tau", type=int)
    run.add_argument("--k", type=int)
    run.add_argument("--l", type=int, help="queue length; 0 estimates it during warm-up")
    run.add_argument("--iters", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--cf-bits", type=float)
    run.add_argument("--alpha", type=float)
    run.add_argument("--beta", type=float)
    run.add_argument("--init-windows", type=int)
    run.add_argument("--n-attrs", type=int)
    run.add_argument("--delimiter")
    run.add_argument("--tick-size", type=int)
    run.set_defaults(func=cmd_run)

    synth = sub.add_parser("synth", help="generate a labelled synthetic stream")
    synth.add_argument("--pattern", default="1,2,1")
    synth.add_argument("--events", type=int, default=10_000)
    synth.add_argument("--dims", default="20,20,20")
    synth.add_argument("--ticks-per-phase", type=int, default=30)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--anomaly-rate", type=float, default=0.0)
    synth.add_argument("--anomaly-width", type=int, default=10)
    synth.add_argument("--anomaly-skip", type=int, default=0)
    synth.add_argument("--anomaly-positions")
    synth.add_argument("--out-dir", default="synth")
    synth.set_defaults(func=cmd_synth)

    ev = sub.add_parser("eval", help="metrics over run artifacts")
    evsub = ev.add_subparsers(dest="metric", required=True)
    ce = evsub.add_parser("ce", help="conditional entropy of labels given predictions")
    ce.add_argument("--pred", required=True)
    ce.add_argument("--truth", required=True)
    ce.add_argument("--tau", type=int)
    ce.add_argument("--out")
    ce.set_defaults(func=cmd_eval_ce, paths=("pred", "truth"))
    auc = evsub.add_parser("auc", help="ROC-AUC of anomaly scores")
    auc.add_argument("--scores", required=True)
    auc.add_argument("--labels", required=True)
    auc.add_argument("--positive", default="anomaly,1")
    auc.add_argument("--tau", type=int)
    auc.add_argument("--out")
    auc.set_defaults(func=cmd_eval_auc, paths=("scores", "labels"))
    nll = evsub.add_parser("nll", help="per-window negative log-likelihood")
    nll.add_argument("--events", required=True)
    nll.add_argument("--run-dir", required=True)
    nll.add_argument("--regime", type=int)
    nll.add_argument("--out")
    nll.set_defaults(func=cmd_eval_nll, paths=("events",))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for name in getattr(args, "paths", ()):
        path = getattr(args, name)
        if not Path(path).is_file():
            parser.print_usage(sys.stderr)
            print(f"streamcube: error: file not found: {path}", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"streamcube: error: {exc}", file=sys.stderr)
        return 2
    except MalformedRow as exc:
        print(f"streamcube: malformed input: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"streamcube: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
