"""Command-line surface: convert/synth/run/ablate/holdout.

Every experiment serializes its fully resolved configuration to
config.lock.json in the output directory, and rerunning from that lock
file reproduces metrics.csv byte for byte. Exit codes: 0 success,
1 configuration error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import baselines
from .embedding import EmbeddingModel
from .errors import BadConfig, BadParameter, ConfigError, DataError, ParseError, SilradError, UnknownSourceTag
from .evaluation import prequential_run, write_drift_events
from .events import LabelCounts, ParseDiagnostic, attach_labels, event_to_ndjson, load_manifest, read_stream
from .feature_select import FieldCorrelationTracker, ranking_to_json
from .learners import build_classifier
from .pipeline import DetectionPipeline
from .streams import GroundTruth, BernoulliDriftConfig, SysmonLikeConfig, synth_bernoulli_drift, synth_sysmon_like

INCREMENTAL_CLASSIFIERS = ("silrad", "arf", "ht", "nb", "lb", "oracle", "majority")
BATCH_CLASSIFIERS = ("knn", "gnb")


@dataclass
class RunConfig:
    input: str = ""
    format: str = "ndjson"
    classifier: str = "silrad"
    k: int = 5
    refresh: int = 1000
    delta: float = 0.002
    seed: int = 42
    checkpoint_every: int = 1000
    rolling_window: int = 2000
    out: str = "run_out"
    labels: str | None = None
    embedding_mode: str = "hashed"
    embedding_model: str | None = None
    embedding_dim: int = 100
    strict: bool = False
    # holdout-specific
    blocks: int = 20
    repeats: int = 10
    knn_k: int = 5
    knn_train_cap: int = 2000


def _merge_config(args: argparse.Namespace) -> RunConfig:
    """defaults < --config file < explicit flags."""
    merged = dataclasses.asdict(RunConfig())
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {config_path} is not valid JSON: {exc}") from None
        unknown = set(loaded) - set(merged)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for key in merged:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    cfg = RunConfig(**merged)
    if not cfg.input:
        raise ConfigError("an input stream is required (--input or config)")
    if cfg.format not in ("ndjson", "xml"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    return cfg


def _build_embedder(cfg: RunConfig) -> EmbeddingModel:
    if cfg.embedding_mode == "hashed":
        return EmbeddingModel(dim=cfg.embedding_dim, seed=cfg.seed)
    if cfg.embedding_mode == "trained":
        if not cfg.embedding_model:
            raise ConfigError("trained embedding mode needs --embedding-model")
        return EmbeddingModel.load(cfg.embedding_model)
    raise ConfigError(f"unknown embedding mode {cfg.embedding_mode!r}")


def _classifier_factory(cfg: RunConfig):
    name = cfg.classifier.lower()
    if name in BATCH_CLASSIFIERS:
        raise ConfigError(f"{name} is a batch classifier; use the holdout command")
    if name not in INCREMENTAL_CLASSIFIERS:
        raise ConfigError(
            f"unknown classifier {cfg.classifier!r}; expected one of "
            f"{INCREMENTAL_CLASSIFIERS + BATCH_CLASSIFIERS}"
        )
    if name in ("silrad", "arf"):
        return lambda: build_classifier(name, seed=cfg.seed, drift_delta=cfg.delta)
    if name == "lb":
        return lambda: build_classifier(name, seed=cfg.seed, drift_delta=cfg.delta)
    return lambda: build_classifier(name, seed=cfg.seed)


def _event_stream(cfg: RunConfig, on_error=None):
    stream = read_stream(cfg.input, cfg.format, strict=cfg.strict, on_error=on_error)
    if cfg.labels:
        manifest = load_manifest(cfg.labels)
        counts = LabelCounts()
        return attach_labels(stream, manifest, counts)
    return stream


def _write_lock(cfg: RunConfig, out_dir: Path) -> None:
    with open(out_dir / "config.lock.json", "w", encoding="utf-8") as fh:
        json.dump(dataclasses.asdict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- commands ---------------------------------------------------------------------


def cmd_convert(args) -> int:
    in_path = args.input
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    diag_path = args.diagnostics or f"{args.out}.diagnostics.jsonl"
    diagnostics: list[ParseDiagnostic] = []
    converted = 0
    with open(out_path, "w", encoding="utf-8") as out_fh:
        for event in read_stream(in_path, args.format, strict=args.strict, on_error=diagnostics.append):
            out_fh.write(event_to_ndjson(event) + "\n")
            converted += 1
    with open(diag_path, "w", encoding="utf-8") as diag_fh:
        for diag in diagnostics:
            diag_fh.write(diag.to_json() + "\n")
    print(f"convert: {converted} events written, {len(diagnostics)} diagnostics", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.kind == "bernoulli":
        regimes = _parse_regimes(args.regimes)
        values, changepoints = synth_bernoulli_drift(BernoulliDriftConfig(regimes=regimes, seed=args.seed))
        np.savetxt(out_dir / "values.csv", values, fmt="%.1f")
        with open(out_dir / "ground_truth.json", "w", encoding="utf-8") as fh:
            json.dump({"changepoints": changepoints, "regimes": regimes, "seed": args.seed}, fh)
        print(f"synth: {values.size} values, {len(changepoints)} changepoints", file=sys.stderr)
        return 0

    family_names = [f.strip() for f in args.families.split(",") if f.strip()]
    changepoints = tuple(int(c) for c in args.changepoints.split(",") if c.strip()) if args.changepoints else ()
    if not family_names:
        raise ConfigError("at least one family name is required")
    cfg = SysmonLikeConfig(
        n_events=args.events,
        prevalence=args.prevalence,
        initial_family=family_names[0],
        changepoints=changepoints,
        introduced_families=tuple(family_names[1:]),
        seed=args.seed,
    )
    stream, truth = synth_sysmon_like(cfg)
    with open(out_dir / "events.ndjson", "w", encoding="utf-8") as fh:
        for event in stream:
            fh.write(event_to_ndjson(event) + "\n")
    with open(out_dir / "ground_truth.json", "w", encoding="utf-8") as fh:
        fh.write(truth.to_json() + "\n")
    print(
        f"synth: {truth.n_events} events, prevalence {truth.prevalence_realized:.4f}, "
        f"{len(truth.changepoints)} changepoints",
        file=sys.stderr,
    )
    return 0


def _parse_regimes(text: str) -> list[tuple[float, int]]:
    regimes = []
    for part in text.split(";"):
        p, _, length = part.partition(":")
        regimes.append((float(p), int(length)))
    return regimes


def cmd_run(args) -> int:
    cfg = _merge_config(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_lock(cfg, out_dir)

    pipeline = DetectionPipeline(
        _build_embedder(cfg),
        _classifier_factory(cfg),
        k=cfg.k,
        refresh_period=cfg.refresh,
        stream_delta=cfg.delta,
    )
    result = prequential_run(
        _event_stream(cfg),
        pipeline,
        checkpoint_every=cfg.checkpoint_every,
        rolling_window=cfg.rolling_window,
        classifier_name=cfg.classifier,
    )
    result.series.write_csv(out_dir / "metrics.csv")
    result.series.write_jsonl(out_dir / "metrics.jsonl")
    write_drift_events(result.drift_events, out_dir / "drift_events.jsonl")
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(result.summary, fh, indent=2)
        fh.write("\n")
    if pipeline.last_ranking is not None:
        with open(out_dir / "ranking.json", "w", encoding="utf-8") as fh:
            fh.write(ranking_to_json(pipeline.last_ranking, pipeline.refresh_count, pipeline.instances_seen))
            fh.write("\n")
    print(
        f"run[{cfg.classifier}]: {result.summary['instances']} instances, "
        f"mcc {result.summary['mcc']:.4f}, accuracy {result.summary['accuracy']:.4f}",
        file=sys.stderr,
    )
    return 0


def cmd_ablate(args) -> int:
    cfg = _merge_config(args)
    k_values = [int(k) for k in args.k_list.split(",") if k.strip()]
    if not k_values:
        raise ConfigError("--k-list needs at least one value")
    base_out = Path(cfg.out)
    base_out.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in k_values:
        sub = argparse.Namespace(**vars(args))
        sub.k = k
        sub.out = str(base_out / f"k{k}")
        cmd_run(sub)
        with open(Path(sub.out) / "summary.json", "r", encoding="utf-8") as fh:
            summary = json.load(fh)
        rows.append({"k": k, **{m: summary[m] for m in ("accuracy", "precision", "recall", "f1", "mcc")}})
    with open(base_out / "ablation.csv", "w", encoding="utf-8") as fh:
        fh.write("k,accuracy,precision,recall,f1,mcc\n")
        for row in rows:
            fh.write(
                f"{row['k']},{row['accuracy']!r},{row['precision']!r},"
                f"{row['recall']!r},{row['f1']!r},{row['mcc']!r}\n"
            )
    return 0


def _featurize_for_holdout(cfg: RunConfig):
    """Fixed top-k layout from the training blocks, then one matrix pass."""
    events = list(_event_stream(cfg))
    if not events:
        raise DataError(f"no events parsed from {cfg.input}")
    for i, event in enumerate(events):
        if event.label is None:
            raise DataError(f"event {i} is unlabelled; holdout needs labels throughout")
    embedder = _build_embedder(cfg)
    train_end = baselines.block_slices(len(events), cfg.blocks)[1][1]
    tracker = FieldCorrelationTracker(embedder.dim)
    for event in events[:train_end]:
        tracker.update({n: embedder.embed_text(v) for n, v in event.fields.items()}, float(event.label))
    active = tracker.ranking(cfg.k, cfg.refresh).active_set
    dim = embedder.dim
    X = np.zeros((len(events), len(active) * dim), dtype=np.float32)
    y = np.empty(len(events), dtype=np.int64)
    for i, event in enumerate(events):
        y[i] = event.label
        for j, name in enumerate(active):
            value = event.fields.get(name)
            if value is not None:
                X[i, j * dim : (j + 1) * dim] = embedder.embed_text(value)
    return X, y, active


def cmd_holdout(args) -> int:
    cfg = _merge_config(args)
    name = cfg.classifier.lower()
    if name not in BATCH_CLASSIFIERS:
        raise ConfigError(f"holdout runs batch classifiers {BATCH_CLASSIFIERS}, got {cfg.classifier!r}")
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_lock(cfg, out_dir)

    X, y, active = _featurize_for_holdout(cfg)
    if name == "knn":
        factory = lambda: baselines.SubsampledKnn(k=cfg.knn_k, train_cap=cfg.knn_train_cap, seed=cfg.seed)
    else:
        factory = baselines.BatchGaussianNB
    plan = baselines.HoldoutPlan(block_count=cfg.blocks, repeats_per_block=cfg.repeats, seed=cfg.seed)
    result = baselines.run_holdout(factory, X, y, plan)

    with open(out_dir / "holdout.csv", "w", encoding="utf-8") as fh:
        fh.write("block,repeat,accuracy,precision,recall,f1,mcc\n")
        for row in result.rows:
            fh.write(
                f"{row['block']},{row['repeat']},{row['accuracy']!r},{row['precision']!r},"
                f"{row['recall']!r},{row['f1']!r},{row['mcc']!r}\n"
            )
    with open(out_dir / "holdout_summary.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "classifier": cfg.classifier,
                "active_fields": active,
                "block_means": {str(b): m for b, m in result.block_means.items()},
                "model_frozen": result.model_digest_before == result.model_digest_after,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    mean_mcc = float(np.mean([m["mcc"] for m in result.block_means.values()]))
    print(f"holdout[{cfg.classifier}]: mean test-block mcc {mean_mcc:.4f}", file=sys.stderr)
    return 0


# -- entry point -----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); config errors are exit 1
        raise ConfigError(message)


def _add_experiment_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; explicit flags win")
    sub.add_argument("--input", help="event stream path ('-' for stdin, tcp://host:port)")
    sub.add_argument("--format", choices=["ndjson", "xml"])
    sub.add_argument("--classifier")
    sub.add_argument("--k", type=int, help="number of selected fields")
    sub.add_argument("--refresh", type=int, help="ranking refresh period (instances)")
    sub.add_argument("--delta", type=float, help="ADWIN confidence")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    sub.add_argument("--rolling-window", dest="rolling_window", type=int)
    sub.add_argument("--out")
    sub.add_argument("--labels", help="label manifest JSON for unlabelled streams")
    sub.add_argument("--embedding-mode", dest="embedding_mode", choices=["hashed", "trained"])
    sub.add_argument("--embedding-model", dest="embedding_model")
    sub.add_argument("--embedding-dim", dest="embedding_dim", type=int)
    sub.add_argument("--strict", action="store_const", const=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="silrad", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    convert = subs.add_parser("convert", help="normalize events to canonical NDJSON")
    convert.add_argument("--input", required=True)
    convert.add_argument("--format", choices=["ndjson", "xml"], default="xml")
    convert.add_argument("--out", required=True)
    convert.add_argument("--diagnostics")
    convert.add_argument("--strict", action="store_true")
    convert.set_defaults(func=cmd_convert)

    synth = subs.add_parser("synth", help="generate synthetic streams")
    synth.add_argument("--kind", choices=["sysmon", "bernoulli"], default="sysmon")
    synth.add_argument("--events", type=int, default=200_000)
    synth.add_argument("--prevalence", type=float, default=0.105)
    synth.add_argument("--changepoints", default="50000,100000,150000")
    synth.add_argument("--families", default="quicklock,vaultworm,cryptmoth,hexviper")
    synth.add_argument("--regimes", default="0.1:500;0.9:500", help="bernoulli: p:len;p:len;...")
    synth.add_argument("--seed", type=int, default=42)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_synth)

    run = subs.add_parser("run", help="prequential experiment")
    _add_experiment_flags(run)
    run.set_defaults(func=cmd_run)

    ablate = subs.add_parser("ablate", help="feature-count sweep")
    _add_experiment_flags(ablate)
    ablate.add_argument("--k-list", dest="k_list", default="5,10,15,20,25")
    ablate.set_defaults(func=cmd_ablate)

    holdout = subs.add_parser("holdout", help="20-block hold-out protocol for batch baselines")
    _add_experiment_flags(holdout)
    holdout.add_argument("--blocks", type=int)
    holdout.add_argument("--repeats", type=int)
    holdout.add_argument("--knn-k", dest="knn_k", type=int)
    holdout.add_argument("--knn-train-cap", dest="knn_train_cap", type=int)
    holdout.set_defaults(func=cmd_holdout)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (BadConfig, BadParameter, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ParseError, UnknownSourceTag, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except SilradError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception:  # pragma: no cover - defensive
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
