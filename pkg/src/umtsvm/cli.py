"""Command-line interface: train, cv, gridsearch, bench, predict, synth.

Exit codes: 0 success, 1 invalid input or configuration, 2 numeric failure.
Settings may come from a flat ``key = value`` file (``--config``); flags
given on the command line take precedence. ``UMTSVM_SEED`` supplies the
default seed.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import replace

import numpy as np

from . import data, evaluation, models
from .errors import ConfigurationError, NumericError, UMTSVMError, ValidationError
from .kernel import KernelSpec
from .universum import UniversumConfig, generate_universum

SEED_ENV = "UMTSVM_SEED"

# command-line spelling -> library method name
METHOD_NAMES = {
    "dmtsvm": "dmtsvm",
    "umtsvm": "umtsvm",
    "mtls-twsvm": "mtls",
    "ls-umtsvm": "ls_umtsvm",
}
DISPLAY = {v: k for k, v in METHOD_NAMES.items()}

# flag dest -> Hyperparams field
HP_FLAGS = {
    "c1": "c1",
    "c2": "c2",
    "cu": "c_u",
    "cu_star": "c_u_star",
    "mu1": "mu1",
    "mu2": "mu2",
    "eps": "epsilon",
    "delta": "delta",
    "tol": "qp_tol",
    "max_iter": "max_iter",
}
# grid keys accepted on the command line besides the Hyperparams names
GRID_ALIASES = {"cu": "c_u", "cu_star": "c_u_star", "cu-star": "c_u_star", "eps": "epsilon"}

DEFAULTS = {
    "label_col": "label",
    "task_col": "task",
    "kernel": "linear",
    "gamma": 1.0,
    "k": 5,
    "universum": "on",
    "universum_fraction": 0.5,
    "normalize": "on",
    "n_jobs": 1,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# parsing


def _add_data_flags(p, labelled=True):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--task-col", dest="task_col", help="task id column (default: task, if present)")
    if labelled:
        p.add_argument("--label-col", dest="label_col", help="label column (default: label)")
        p.add_argument("--label-map", dest="label_map", help="raw labels to +/-1, e.g. 'M:1,B:-1'")


def _add_model_flags(p, method_choices, method_required=True):
    p.add_argument("--method", required=method_required, choices=method_choices)
    p.add_argument("--config", help="flat key = value file; flags override it")
    for flag, dest in (
        ("--c1", "c1"),
        ("--c2", "c2"),
        ("--cu", "cu"),
        ("--cu-star", "cu_star"),
        ("--mu1", "mu1"),
        ("--mu2", "mu2"),
        ("--eps", "eps"),
        ("--gamma", "gamma"),
        ("--delta", "delta"),
        ("--tol", "tol"),
    ):
        p.add_argument(flag, dest=dest, type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--kernel", choices=("linear", "gaussian"))
    p.add_argument("--seed", type=int)
    p.add_argument("--universum", choices=("on", "off"), help="generate midpoint Universum (default on)")
    p.add_argument("--universum-fraction", dest="universum_fraction", type=float)
    p.add_argument("--normalize", choices=("on", "off"), help="min-max scale features (default on)")


def _add_eval_flags(p):
    p.add_argument("--k", type=int, help="number of folds (default 5)")
    p.add_argument("--csv", help="also write the table as CSV")
    p.add_argument("--hide-time", dest="hide_time", action="store_true", help="omit timings from the printed table")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="umtsvm", description="Multi-task twin SVMs with Universum data.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    single = list(METHOD_NAMES)

    p = sub.add_parser("train", help="fit one model and save it")
    _add_data_flags(p)
    _add_model_flags(p, single)
    p.add_argument("--out", required=True, help="model file to write")

    p = sub.add_parser("cv", help="k-fold cross-validation")
    _add_data_flags(p)
    _add_model_flags(p, single + ["all"])
    _add_eval_flags(p)

    p = sub.add_parser("gridsearch", help="grid search with k-fold cross-validation")
    _add_data_flags(p)
    _add_model_flags(p, single)
    _add_eval_flags(p)
    p.add_argument("--grid", nargs="+", metavar="NAME=V1,V2", help="candidate lists; default is the full range")
    p.add_argument("--n-jobs", dest="n_jobs", type=int)
    p.add_argument("--list", action="store_true", help="print the grid and exit")

    p = sub.add_parser("bench", help="compare all four methods on one dataset")
    _add_data_flags(p)
    _add_model_flags(p, ["all"], method_required=False)
    _add_eval_flags(p)
    p.add_argument("--grid", nargs="+", metavar="NAME=V1,V2", help="tune every method over this grid")
    p.add_argument("--n-jobs", dest="n_jobs", type=int)

    p = sub.add_parser("predict", help="label rows with a saved model")
    _add_data_flags(p, labelled=False)
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="predictions CSV (default: standard output)")

    p = sub.add_parser("synth", help="write a synthetic multi-task dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--tasks", type=int, default=3)
    p.add_argument("--per-class", dest="per_class", type=int, default=40)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--task-shift", dest="task_shift", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--seed", type=int)
    return parser


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{n}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if not key:
                raise ConfigurationError(f"{path}:{n}: empty key")
            out[key.replace("-", "_")] = value
    return out


def _merge(args) -> argparse.Namespace:
    """Fill unset flags from the config file, the environment and defaults."""
    file_values = read_config(args.config) if getattr(args, "config", None) else {}
    known = vars(args)
    for key in file_values:
        if key not in known or key in ("config", "command", "data", "out"):
            raise ConfigurationError(f"unknown config key {key!r}")
    merged = dict(known)
    for key, value in known.items():
        if value is not None:
            continue
        if key in file_values:
            merged[key] = file_values[key]
        elif key == "seed":
            merged[key] = os.environ.get(SEED_ENV, 0)
        elif key in DEFAULTS:
            merged[key] = DEFAULTS[key]
    return argparse.Namespace(**merged)


def _num(value, name, kind=float):
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ValidationError(f"--{name.replace('_', '-')}: {value!r} is not a valid number") from None


def _switch(value, name) -> bool:
    v = str(value).lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ValidationError(f"--{name}: expected on/off, got {value!r}")


def hyperparams_from(args) -> models.Hyperparams:
    kind = str(args.kernel)
    if kind not in ("linear", "gaussian"):
        raise ValidationError(f"--kernel: unknown kernel {kind!r}")
    fields = {}
    for dest, name in HP_FLAGS.items():
        v = getattr(args, dest, None)
        if v is not None:
            fields[name] = _num(v, dest, int if dest == "max_iter" else float)
    try:
        return models.Hyperparams(
            kernel=KernelSpec(kind, _num(args.gamma, "gamma")),
            seed=_num(args.seed, "seed", int),
            **fields,
        )
    except ValidationError as exc:
        raise ValidationError(f"{_flag_for(exc)}{exc}") from None


def _flag_for(exc) -> str:
    msg = str(exc)
    for dest, name in HP_FLAGS.items():
        if msg.startswith(name + " "):
            return f"--{dest.replace('_', '-')}: "
    if msg.startswith("gamma"):
        return "--gamma: "
    return ""


def parse_label_map(text):
    if text is None:
        return None
    out = {}
    for part in str(text).split(","):
        if ":" not in part:
            raise ValidationError(f"--label-map: expected RAW:LABEL pairs, got {part!r}")
        raw, lab = (s.strip() for s in part.rsplit(":", 1))
        out[raw] = _num(lab, "label_map", int)
    return out


def parse_grid(tokens) -> evaluation.GridSpec:
    params = {}
    for tok in tokens:
        for item in str(tok).split():
            if "=" not in item:
                raise ValidationError(f"--grid: expected NAME=V1,V2,..., got {item!r}")
            name, values = item.split("=", 1)
            name = GRID_ALIASES.get(name.strip(), name.strip().replace("-", "_"))
            params[name] = [_num(v, "grid") for v in values.split(",") if v.strip()]
    try:
        return evaluation.GridSpec(params)
    except ConfigurationError as exc:
        raise ValidationError(f"--grid: {exc}") from None


def load_dataset(args) -> data.TaskDataset:
    task_col = args.task_col
    with open(args.data, newline="", encoding="utf-8") as fh:
        header = [h.strip() for h in next(csv.reader(fh), [])]
    if task_col not in header:
        if task_col != DEFAULTS["task_col"]:
            raise ValidationError(f"--task-col: {args.data} has no column {task_col!r}")
        task_col = None
    return data.load_csv(args.data, label_column=args.label_col, task_column=task_col, label_map=parse_label_map(args.label_map))


def _universum_cfg(args):
    if not _switch(args.universum, "universum"):
        return None
    return UniversumConfig(fraction=_num(args.universum_fraction, "universum_fraction"), seed=_num(args.seed, "seed", int))


def _methods(name):
    return list(models.METHODS) if name == "all" else [METHOD_NAMES[name]]


# ---------------------------------------------------------------------------
# commands


def cmd_train(args, out) -> int:
    hp = hyperparams_from(args)
    method = METHOD_NAMES[args.method]
    ds = load_dataset(args)
    scaling = None
    if _switch(args.normalize, "normalize"):
        ds, scaling = data.normalize(ds)
    cfg = _universum_cfg(args)
    if cfg is not None and method in models.UNIVERSUM_METHODS:
        ds = generate_universum(ds, cfg)
    model = replace(models.fit(ds, hp, method), scaling=scaling)
    models.save_model(model, args.out)

    print(f"method: {args.method}  tasks: {ds.n_tasks}  labelled: {ds.n_labeled}  universum: {ds.n_universum}", file=out)
    for side in ("first", "second"):
        d = model.info[side]
        if "objective" in d:
            print(
                f"{side} problem: objective {d['objective']:.6g}  sweeps {d['iterations']}  "
                f"kkt {d['kkt_residual']:.2e}",
                file=out,
            )
        else:
            print(f"{side} problem: linear-system residual {d['residual']:.2e}", file=out)
    print(f"common planes: |u0| = {np.linalg.norm(model.u0):.6g}  |v0| = {np.linalg.norm(model.v0):.6g}", file=out)
    for i, t in enumerate(model.task_ids):
        print(f"task {t}: |u_t| = {np.linalg.norm(model.u_t[i]):.6g}  |v_t| = {np.linalg.norm(model.v_t[i]):.6g}", file=out)
    if not model.converged:
        print("warning: solver did not converge", file=out)
    print(f"model written to {args.out}", file=out)
    return 0


def _print_table(rows, args, out):
    text = evaluation.format_report_table(rows)
    if args.hide_time:
        lines = text.splitlines()
        text = "\n".join(line[:29].rstrip() + line[39:] if i != 1 else line for i, line in enumerate(lines))
    print(text, file=out)


def _write_rows(path, table):
    evaluation.write_table_csv(table, path)


def cmd_cv(args, out) -> int:
    hp = hyperparams_from(args)
    ds = load_dataset(args)
    cfg = _universum_cfg(args)
    k = _num(args.k, "k", int)
    norm = _switch(args.normalize, "normalize")
    rows, table = [], []
    for m in _methods(args.method):
        rep = evaluation.cross_validate(m, ds, hp, k=k, seed=hp.seed, universum=cfg, normalize=norm)
        rows.append((DISPLAY[m], rep))
        table.append(evaluation.table_row(DISPLAY[m], hp, rep))
    _print_table(rows, args, out)
    if args.csv:
        _write_rows(args.csv, table)
    return 0


def _grid_for(args, method) -> evaluation.GridSpec:
    if args.grid:
        return parse_grid(args.grid)
    return evaluation.paper_grid(method, str(args.kernel))


def cmd_gridsearch(args, out) -> int:
    hp = hyperparams_from(args)
    method = METHOD_NAMES[args.method]
    grid = _grid_for(args, method)
    if args.list:
        for name, values in grid.params.items():
            print(f"{name}: {len(values)} candidates ({values[0]:g} .. {values[-1]:g})", file=out)
        print(f"configurations: {grid.size}", file=out)
        return 0
    ds = load_dataset(args)
    best, rep, table = evaluation.grid_search(
        method,
        ds,
        grid,
        k=_num(args.k, "k", int),
        seed=hp.seed,
        base=hp,
        universum=_universum_cfg(args),
        normalize=_switch(args.normalize, "normalize"),
        n_jobs=_num(args.n_jobs, "n_jobs", int),
    )
    print(f"configurations evaluated: {len(table)}", file=out)
    chosen = ", ".join(f"{n}={best.kernel.gamma if n == 'gamma' else getattr(best, n):g}" for n in grid.params)
    print(f"best: {chosen}", file=out)
    _print_table([(args.method, rep)], args, out)
    if args.csv:
        _write_rows(args.csv, table)
    return 0


def cmd_bench(args, out) -> int:
    hp = hyperparams_from(args)
    ds = load_dataset(args)
    cfg = _universum_cfg(args)
    k = _num(args.k, "k", int)
    norm = _switch(args.normalize, "normalize")
    rows, table = [], []
    for m in models.METHODS:
        if args.grid:
            best, rep, _ = evaluation.grid_search(
                m, ds, parse_grid(args.grid), k=k, seed=hp.seed, base=hp, universum=cfg,
                normalize=norm, n_jobs=_num(args.n_jobs, "n_jobs", int),
            )
        else:
            best = hp
            rep = evaluation.cross_validate(m, ds, hp, k=k, seed=hp.seed, universum=cfg, normalize=norm)
        rows.append((DISPLAY[m], rep))
        table.append(evaluation.table_row(DISPLAY[m], best, rep))
    _print_table(rows, args, out)
    if args.csv:
        _write_rows(args.csv, table)
    return 0


def cmd_predict(args, out) -> int:
    model = models.load_model(args.model)
    task_col = args.task_col or DEFAULTS["task_col"]
    if os.path.getsize(args.data) == 0:
        X, task = np.empty((0, 0)), None
    else:
        X, task, _ = data.read_features(args.data, task_column=task_col, ignore=("label",))
    if task is None:
        if X.shape[0] and len(model.task_ids) != 1:
            raise ValidationError(f"{args.data}: no {task_col!r} column and the model has {len(model.task_ids)} tasks")
        task = np.full(X.shape[0], model.task_ids[0] if model.task_ids else 1)
    unknown = sorted(set(int(t) for t in task) - set(model.task_ids))
    if unknown:
        raise ValidationError(f"unknown task id {unknown[0]} (model knows {list(model.task_ids)})")
    labels = models.predict_batch(model, X, task) if X.shape[0] else np.empty(0, dtype=int)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if X.shape[0]:
        w.writerow(["task", "prediction"])
        w.writerows(zip((int(t) for t in task), (int(v) for v in labels)))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        out.write(buf.getvalue())
    return 0


def cmd_synth(args, out) -> int:
    seed = int(args.seed if args.seed is not None else os.environ.get(SEED_ENV, 0))
    ds = data.synth_multitask(args.tasks, args.per_class, args.dim, args.task_shift, args.noise, seed)
    data.write_csv(ds, args.out)
    print(f"wrote {ds.n_labeled} rows in {ds.n_tasks} tasks to {args.out}", file=out)
    return 0


COMMANDS = {
    "train": cmd_train,
    "cv": cmd_cv,
    "gridsearch": cmd_gridsearch,
    "bench": cmd_bench,
    "predict": cmd_predict,
    "synth": cmd_synth,
}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command != "synth":
            args = _merge(args)
            if args.command != "predict":
                hyperparams_from(args)  # validate before any compute
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except (UMTSVMError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
