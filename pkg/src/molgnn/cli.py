"""Command-line interface.

Three subcommands cover the train/predict workflow on CSV datasets::

    molgnn classification-train -c data.csv -sc smiles -mo gcn
    molgnn regression-train -c data.csv -sc smiles -mo mpnn
    molgnn predict -c new.csv -sc smiles --checkpoint out/model.ckpt

Training writes ``metrics.json``, ``model.ckpt``, ``split.json`` and
``config.json`` into the result directory. Exit codes: 0 success, 1 usage
error, 2 data error, 3 runtime failure; every failure prints exactly one
diagnostic line to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .data import DataError, Dataset, load_csv_dataset
from .featurize import default_atom_config, default_bond_config
from .metrics import MetricError
from .models import MODEL_KINDS, ModelError, ModelSpec
from .smiles import SmilesParseError, parse_smiles
from .split import STRATEGIES, SplitError
from .training import (
    TrainConfig,
    TrainingDivergedError,
    evaluate,
    make_split_plan,
    predict_scores,
    random_search,
    train_with_early_stopping,
)


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # single-line diagnostics, exit code 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="molgnn", description="Graph neural networks for molecular property prediction")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_train(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--csv-path", required=True, help="training CSV file")
        p.add_argument("-sc", "--smiles-column", required=True, help="SMILES column header")
        p.add_argument("-mo", "--model", default="gcn", choices=MODEL_KINDS, help="model kind")
        p.add_argument("-t", "--tasks", default=None,
                       help="comma-separated task columns (default: all non-SMILES columns)")
        p.add_argument("-s", "--split", default="scaffold", choices=STRATEGIES, help="split strategy")
        p.add_argument("--fractions", default="0.8,0.1,0.1", help="train,val,test fractions")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("-ne", "--num-trials", type=int, default=1,
                       help="hyperparameter search trials (1 = no search)")
        p.add_argument("-p", "--result-path", default="results", help="output directory")
        p.add_argument("--max-epochs", type=int, default=300)
        p.add_argument("--patience", type=int, default=30)
        p.add_argument("--batch-size", type=int, default=128)
        p.add_argument("--lr", type=float, default=1e-3)
        p.add_argument("--hidden-size", type=int, default=64)
        p.add_argument("--num-rounds", type=int, default=2)
        p.add_argument("--num-heads", type=int, default=4)
        p.add_argument("--dropout", type=float, default=0.1)
        p.add_argument("--readout", default=None, help="sum, mean, max or weighted_sum")
        return p

    add_train("classification-train", "train a binary/multi-task classifier")
    add_train("regression-train", "train a regression model")

    p = sub.add_parser("predict", help="apply a trained checkpoint to a CSV")
    p.add_argument("-c", "--csv-path", required=True)
    p.add_argument("-sc", "--smiles-column", required=True)
    p.add_argument("--checkpoint", required=True, help="checkpoint file from training")
    p.add_argument("-o", "--output", default="predictions.csv", help="output CSV path")
    p.add_argument("--batch-size", type=int, default=128)
    return parser


def _float_repr(x: float) -> str:
    return repr(float(x))


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_train(args, task_type: str) -> int:
    task_columns = None
    if args.tasks:
        task_columns = [t.strip() for t in args.tasks.split(",") if t.strip()]
    dataset = load_csv_dataset(args.csv_path, args.smiles_column, task_columns)

    fractions = tuple(float(f) for f in args.fractions.split(","))
    spec = ModelSpec(
        kind=args.model,
        n_tasks=dataset.n_tasks,
        task_type=task_type,
        node_feat_dim=default_atom_config().width,
        edge_feat_dim=default_bond_config().width,
        num_rounds=args.num_rounds,
        hidden_size=args.hidden_size,
        num_heads=args.num_heads,
        readout=args.readout,
        dropout=args.dropout,
    )
    config = TrainConfig(
        spec=spec,
        split_strategy=args.split,
        fractions=fractions,
        seed=args.seed,
        max_epochs=args.max_epochs,
        patience=args.patience,
        batch_size=args.batch_size,
        lr=args.lr,
    )

    plan = make_split_plan(config, dataset)
    if args.num_trials > 1:
        result, records = random_search(
            config, dataset, trials=args.num_trials, seed=args.seed, plan=plan
        )
    else:
        result = train_with_early_stopping(config, dataset, plan=plan)
        records = []

    ckpt = result.checkpoint
    params = ckpt.tensors(requires_grad=False)
    test_metric = (
        evaluate(ckpt.spec, params, dataset, plan.test, result.config.metric, args.batch_size)
        if plan.test
        else None
    )

    os.makedirs(args.result_path, exist_ok=True)
    ckpt.provenance["task_names"] = dataset.task_names
    save_checkpoint(ckpt, os.path.join(args.result_path, "model.ckpt"))
    with open(os.path.join(args.result_path, "split.json"), "w", encoding="utf-8") as fh:
        fh.write(result.plan.to_json())
        fh.write("\n")
    _write_json(
        os.path.join(args.result_path, "config.json"),
        {
            "command": f"{task_type}-train",
            "csv_path": args.csv_path,
            "smiles_column": args.smiles_column,
            "task_columns": dataset.task_names,
            "model": args.model,
            "split": args.split,
            "fractions": list(fractions),
            "seed": args.seed,
            "num_trials": args.num_trials,
            "max_epochs": args.max_epochs,
            "patience": args.patience,
            "batch_size": args.batch_size,
            "lr": args.lr,
            "model_spec": result.checkpoint.spec.to_dict(),
        },
    )
    _write_json(
        os.path.join(args.result_path, "metrics.json"),
        {
            "metric": result.config.metric,
            "val_metric": ckpt.provenance["val_metric"],
            "test_metric": test_metric,
            "best_epoch": ckpt.provenance["best_epoch"],
            "epochs_run": ckpt.provenance["epochs_run"],
            "n_molecules": len(dataset),
            "n_dropped": dataset.n_dropped,
            "history": result.history,
            "search_records": records,
        },
    )
    label = result.config.metric
    shown = "n/a" if test_metric is None else f"{test_metric:.4f}"
    print(f"done: best epoch {ckpt.provenance['best_epoch']}, "
          f"val {label} {ckpt.provenance['val_metric']:.4f}, test {label} {shown}")
    return 0


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _run_predict(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    spec = ckpt.spec
    task_names = ckpt.provenance.get("task_names") or [
        f"task{i}" for i in range(spec.n_tasks)
    ]

    if not os.path.exists(args.csv_path):
        raise DataError(f"CSV file not found: {args.csv_path}")
    with open(args.csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"CSV file is empty: {args.csv_path}") from None
        rows = [row for row in reader if any(cell.strip() for cell in row)]
    if args.smiles_column not in header:
        raise DataError(f"smiles column '{args.smiles_column}' not found in header {header}")
    smiles_idx = header.index(args.smiles_column)

    molecules = []
    parseable: list[int] = []
    for i, row in enumerate(rows):
        text = row[smiles_idx].strip() if smiles_idx < len(row) else ""
        try:
            molecules.append(parse_smiles(text))
            parseable.append(i)
        except SmilesParseError:
            molecules.append(None)

    kept = [m for m in molecules if m is not None]
    if kept:
        mini = Dataset(
            smiles=[rows[i][smiles_idx] for i in parseable],
            molecules=kept,
            labels=np.zeros((len(kept), spec.n_tasks)),
            mask=np.zeros((len(kept), spec.n_tasks)),
            task_names=task_names,
        )
        params = ckpt.tensors(requires_grad=False)
        scores = predict_scores(spec, params, mini, range(len(kept)), args.batch_size)
        if spec.task_type == "classification":
            scores = _stable_sigmoid(scores)
    else:
        scores = np.zeros((0, spec.n_tasks))

    out_header = header + [f"pred_{name}" for name in task_names]
    score_of = {row_idx: scores[k] for k, row_idx in enumerate(parseable)}
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(out_header)
        for i, row in enumerate(rows):
            if i in score_of:
                writer.writerow(row + [_float_repr(v) for v in score_of[i]])
            else:
                writer.writerow(row + [""] * spec.n_tasks)

    n_bad = len(rows) - len(parseable)
    if n_bad:
        print(f"warning: {n_bad} SMILES could not be parsed; predictions left empty", file=sys.stderr)
    print(f"wrote {args.output} ({len(rows)} rows, {n_bad} unparseable)")
    return 0


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        if args.command == "classification-train":
            return _run_train(args, "classification")
        if args.command == "regression-train":
            return _run_train(args, "regression")
        return _run_predict(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except (DataError, SplitError, CheckpointError, SmilesParseError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return 2
    except (ModelError, MetricError, TrainingDivergedError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
