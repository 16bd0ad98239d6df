import argparse
import contextlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

import pandas as pd

from .analysis import run_analysis, select_hard_subsequences
from .config import ConfigError, RunConfig, load_config
from .data import ClipDataset, SequenceStore, SynthConfig, split, synth_generate, write_dataset
from .data.split import DataSplit
from .metrics import (
    ModelPredictor,
    StaticPredictor,
    evaluate,
    gaussian_baseline,
    mean_gt_baseline,
    validation_cc,
    write_report,
)
from .models import Architecture, CropPolicy, PredictorKind
from .net import CheckpointError, Trainer, init_params, load_checkpoint, load_optimizer, save_checkpoint
from .storage.runs_db import insert_run
from .tensor import Adam

logger = logging.getLogger(__name__)

LOCK_NAME = ".driver-attention.lock"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
CHECKPOINT_NAME = "checkpoint.drvt"
LOSS_LOG_NAME = "loss_log.csv"
LEDGER_NAME = "runs.sqlite"


class LockError(RuntimeError):
    pass


@contextlib.contextmanager
def output_lock(directory: Path) -> Iterator[Path]:
    """Exclusive lock file guarding one output directory."""
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as e:
        raise LockError(f"{directory} is in use by another run (remove {lock} if stale)") from e
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield lock
    finally:
        lock.unlink(missing_ok=True)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _data_split(config: RunConfig, store: SequenceStore) -> DataSplit:
    lengths = dict(zip(store.manifest["sequence_id"], store.manifest["frames"].astype(int)))
    return split(lengths, config.test_sequences or store.default_test_ids())


def _require_dataset(config: RunConfig) -> SequenceStore:
    if not (config.dataset / "manifest.csv").is_file():
        raise FileNotFoundError(f"no dataset at {config.dataset} (run `driver-attention synth` first)")
    return SequenceStore(config.dataset)


def cmd_synth(config: RunConfig) -> Dict[str, Any]:
    synth = SynthConfig(
        sequences_per_landscape=config.sequences_per_landscape,
        frames=config.frames,
        height=config.height,
        width=config.width,
    )
    with output_lock(config.dataset):
        manifest = write_dataset(config.dataset, synth_generate(synth, config.seed))
    return {
        "dataset": str(config.dataset),
        "sequences": len(manifest),
        "frames": int(manifest["frames"].sum()),
        "test_sequences": list(manifest.loc[manifest["split"] == "test", "sequence_id"]),
    }


def cmd_train(config: RunConfig) -> Dict[str, Any]:
    store = _require_dataset(config)
    data_split = _data_split(config, store)
    net = config.net_config()
    if config.checkpoint is not None:
        params = load_checkpoint(config.checkpoint, config.architecture)
        if params.net != net:
            raise CheckpointError(f"{config.checkpoint}: network configuration differs from the requested one")
        optimizer = load_optimizer(config.checkpoint)
        logger.info(f"Resuming from {config.checkpoint} at Adam step {optimizer.step_count}")
    else:
        params = init_params(config.seed, net)
        optimizer = Adam(learning_rate=config.learning_rate)
    dataset = ClipDataset(
        store, data_split.train, net.clip_size, net.refine_size, config.policy, seed=config.seed + 1
    )
    trainer = Trainer(
        params=params,
        sampler=dataset.batch,
        optimizer=optimizer,
        batch_size=config.batch_size,
        validate=lambda p: validation_cc(p, store, data_split.validation, config.validation_clips),
    )
    with output_lock(config.out_dir):
        rows = trainer.fit(config.steps, config.log_every)
        pd.DataFrame(rows, columns=["step", "loss1", "loss2", "val_cc"]).to_csv(
            config.out_dir / LOSS_LOG_NAME, index=False, na_rep="NA", float_format="%.10f"
        )
        checkpoint = save_checkpoint(config.out_dir / CHECKPOINT_NAME, params, optimizer)
        last = rows[-1] if rows else {}
        summary = {
            "architecture": config.architecture.value,
            "steps": optimizer.step_count,
            "loss1": last.get("loss1"),
            "loss2": last.get("loss2"),
            "cc_mean": last.get("val_cc"),
            "split": "validation",
            "checkpoint": str(checkpoint),
        }
        insert_run(config.out_dir / LEDGER_NAME, summary, "train", config.seed, _now())
    return summary


def _predictor(config: RunConfig, store: SequenceStore, data_split: DataSplit):
    if config.predictor == PredictorKind.MODEL:
        if config.checkpoint is None:
            raise ConfigError("--predictor model needs --checkpoint")
        return ModelPredictor(load_checkpoint(config.checkpoint, config.architecture))
    if config.predictor == PredictorKind.GAUSSIAN:
        first = store.get(store.sequence_ids[0])
        return StaticPredictor(gaussian_baseline(first.resolution, config.sigma_fraction))
    maps = (store.get(ref.sequence_id).maps[ref.end_index] for ref in data_split.train)
    return StaticPredictor(mean_gt_baseline(maps))


def cmd_eval(config: RunConfig) -> Dict[str, Any]:
    store = _require_dataset(config)
    data_split = _data_split(config, store)
    refs = data_split.refs(config.split)
    predictor = _predictor(config, store, data_split)
    hard = {
        sequence_id: select_hard_subsequences(list(store.get(sequence_id).maps), window=config.window)
        for sequence_id in sorted({r.sequence_id for r in refs})
    }
    report = evaluate(
        predictor,
        store,
        refs,
        split_name=config.split,
        resampling=config.resampling,
        hard=hard,
        sigma_fraction=config.sigma_fraction if config.predictor == PredictorKind.GAUSSIAN else None,
    )
    with output_lock(config.out_dir):
        path = write_report(report, config.out_dir / f"report_{config.predictor.value}_{config.split}.csv")
        summary = dict(report.summary, predictor=config.predictor.value, split=config.split, report=str(path))
        insert_run(
            config.out_dir / LEDGER_NAME,
            dict(summary, architecture=config.architecture.value if config.predictor == PredictorKind.MODEL else None),
            "eval",
            config.seed,
            _now(),
        )
    return summary


def cmd_analyze(config: RunConfig) -> Dict[str, Any]:
    store = _require_dataset(config)
    params = load_checkpoint(config.checkpoint, config.architecture) if config.checkpoint else None
    with output_lock(config.out_dir):
        paths = run_analysis(
            store,
            config.out_dir,
            n_thresholds=config.n_thresholds,
            window=config.window,
            params=params,
            prediction_stride=config.prediction_stride,
        )
    return {"outputs": [str(p) for p in paths]}


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "eval": cmd_eval, "analyze": cmd_analyze}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="Flat key=value config file")
    p.add_argument("--seed", type=int, default=None, help="Random seed (required)")
    p.add_argument("--dataset", default=None, help="Dataset root (manifest.csv + sequences)")
    p.add_argument("--out-dir", default=None, help="Output directory for reports, logs and checkpoints")
    p.add_argument("--checkpoint", default=None, help="Checkpoint to load (resume, evaluate or analyze)")
    p.add_argument("--architecture", choices=[a.value for a in Architecture], default=None)
    p.add_argument("--tiny", action="store_true", default=None, help="Channels divided by 8, 64×64 clips")
    p.add_argument("--crop-policy", choices=[c.value for c in CropPolicy], default=None)
    p.add_argument("--refine-size", type=int, default=None, help="Refinement resolution R")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--log-every", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--validation-clips", type=int, default=None)
    p.add_argument("--predictor", choices=[k.value for k in PredictorKind], default=None)
    p.add_argument("--split", choices=["train", "validation", "test"], default=None)
    p.add_argument("--resampling", choices=["gt", "prediction", "none"], default=None)
    p.add_argument("--sigma-fraction", type=float, default=None)
    p.add_argument("--n-thresholds", type=int, default=None)
    p.add_argument("--window", type=int, default=None, help="Hard-subsequence window length")
    p.add_argument("--prediction-stride", type=int, default=None)
    p.add_argument("--test-sequences", default=None, help="Comma-separated test sequence ids")
    p.add_argument("--sequences-per-landscape", type=int, default=None)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--width", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driver-attention",
        description="Predict and analyze driver attention maps with a coarse-to-fine spatiotemporal network.",
    )
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synth": "Generate the synthetic driving dataset",
        "train": "Train COARSE or COARSE+FINE",
        "eval": "Evaluate a model or baseline on a split",
        "analyze": "Run the attention analyses",
    }
    for name, text in helps.items():
        _add_run_flags(sub.add_parser(name, help=text, description=text))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT, stream=sys.stderr)

    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config", "log_level")}
    try:
        config = load_config(args.config, overrides)
    except ConfigError as e:
        parser.error(str(e))
    if args.command == "eval" and config.predictor is None:
        parser.error("eval needs --predictor (model, gaussian or mean_gt)")
    if args.command == "eval" and config.predictor == PredictorKind.MODEL and config.checkpoint is None:
        parser.error("--predictor model needs --checkpoint")

    try:
        summary = COMMANDS[args.command](config)
    except (ValueError, OSError, KeyError, LockError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1

    # Print a concise summary to stdout
    print(f"{args.command.capitalize()} Summary:")
    print(json.dumps(summary, indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
