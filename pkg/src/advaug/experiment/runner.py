"""Recipes and the file-producing commands behind the CLI.

Run directory layout (``cmd_train`` / ``cmd_distill``)::

    config.json             resolved config (``out`` left empty, so it is path independent)
    results.csv             test error per (seed, condition) plus mean rows
    timing.tsv              wall-clock seconds per epoch (not deterministic)
    seed<k>/model.ckpt      final (or early-stopped best) parameters
    seed<k>/metrics.log     per-batch losses
    seed<k>/teacher.ckpt    teacher, for the ts recipes

``cmd_sweep`` writes ``sweep.csv`` (dev error) and one
``eps<e>/seed<k>/`` directory per run. Every file except ``timing.tsv``
is a pure function of the resolved config.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

from .. import container
from ..corpus import ConditionCorpus, CorpusSpec, generate_corpus, load_corpus, save_corpus
from ..distill import ParallelData, train_epoch_ts
from ..network import ModelParams, init_params, load_checkpoint, mlp, save_checkpoint
from ..numerics import substream
from ..training import (
    METRICS_HEADER,
    EvalReport,
    LabeledData,
    evaluate,
    fit,
    format_records,
    train_epoch,
)
from .config import ConfigError, dump_config, train_config, ts_config

RESULTS_TAG = "# ADVAUG-RESULTS v1"
SWEEP_TAG = "# ADVAUG-SWEEP v1"
TIMING_TAG = "ADVAUG-TIMING v1"
RESULTS_COLUMNS = ("seed", "condition", "errors", "total", "rate")
SWEEP_COLUMNS = ("epsilon", "seed", "condition", "rate")

# recipe -> (teacher-student?, perturbation origin or None)
RECIPE_TABLE = {
    "baseline": (False, None),
    "advex": (False, "fgsm"),
    "random": (False, "random"),
    "ts": (True, None),
    "ts-advex": (True, "fgsm"),
    "ts-random": (True, "random"),
}


@dataclass
class RunResult:
    seed: int
    recipe: str
    epsilon: float | None
    params: ModelParams
    records: list
    epoch_seconds: list
    best_epoch: int
    teacher: ModelParams | None = None
    teacher_records: list | None = None


def get_corpus(cfg: dict) -> ConditionCorpus:
    """Load ``corpus_file`` if set, else generate from ``corpus``; echoes the spec into ``cfg``."""
    if cfg.get("corpus_file"):
        corpus = load_corpus(cfg["corpus_file"])
    else:
        corpus = generate_corpus(CorpusSpec.from_dict(cfg["corpus"]))
    cfg["corpus"] = corpus.spec.to_dict()
    return corpus


def model_spec(cfg: dict, corpus: ConditionCorpus):
    net = cfg["network"]
    return mlp([corpus.spec.dim, *net["hidden"], corpus.spec.n_classes], net["activation"])


def _dev_error(cfg, corpus):
    if cfg["train"]["patience"] is None:
        return None
    return lambda p: evaluate(p, corpus, "dev").average


def train_teacher(corpus: ConditionCorpus, cfg: dict, seed: int) -> tuple[ModelParams, list]:
    """Baseline recipe on the clean training set."""
    params = init_params(model_spec(cfg, corpus), substream(seed, "init", 1), "teacher")
    data = LabeledData(corpus.train_clean, corpus.train_labels, corpus.spec.n_classes)
    tcfg = train_config(cfg, seed)
    res = fit(params, tcfg, lambda p, o, e: train_epoch(p, data, tcfg, o, e), _dev_error(cfg, corpus))
    return res.params, res.records


def run_recipe(
    corpus: ConditionCorpus,
    cfg: dict,
    seed: int,
    recipe: str | None = None,
    epsilon: float | None = None,
    teacher: ModelParams | None = None,
) -> RunResult:
    """Train one model. ``recipe``/``epsilon`` default to the config values."""
    recipe = recipe or cfg["recipe"]
    if recipe not in RECIPE_TABLE:
        raise ConfigError(f"unknown recipe {recipe!r}")
    is_ts, origin = RECIPE_TABLE[recipe]
    if origin is None:
        epsilon = None
    else:
        epsilon = cfg["epsilon"] if epsilon is None else float(epsilon)
        if epsilon is None:
            raise ConfigError(f"recipe {recipe} needs epsilon")
    tcfg = train_config(cfg, seed, epsilon, origin or "fgsm")
    params = init_params(model_spec(cfg, corpus), substream(seed, "init", 0), "student" if is_ts else "generic")
    teacher_records = None
    if is_ts:
        if teacher is None and cfg.get("teacher_checkpoint"):
            teacher, _ = load_checkpoint(cfg["teacher_checkpoint"])
        if teacher is None:
            teacher, teacher_records = train_teacher(corpus, cfg, seed)
        teacher = teacher.with_role("teacher")
        data = ParallelData(corpus.train_clean, corpus.train_noisy, corpus.train_labels, corpus.spec.n_classes)
        tscfg = ts_config(cfg)

        def epoch_fn(p, o, e):
            return train_epoch_ts(teacher, p, data, tscfg, tcfg, o, e)
    else:
        data = LabeledData(corpus.train_noisy, corpus.train_labels, corpus.spec.n_classes)

        def epoch_fn(p, o, e):
            return train_epoch(p, data, tcfg, o, e)

    res = fit(params, tcfg, epoch_fn, _dev_error(cfg, corpus))
    return RunResult(seed, recipe, epsilon, res.params, res.records, res.epoch_seconds, res.best_epoch, teacher, teacher_records)


# ---------------------------------------------------------------- output


def _csv_text(tag: str, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(tag + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _write_text(path: Path, text: str) -> Path:
    return container.write_atomic(path, text.encode("utf-8"))


def results_rows(reports: dict[int, EvalReport]) -> list[tuple]:
    """Per-seed rows (conditions then ``avg``), then ``mean`` rows when there are several seeds."""
    rows = []
    for seed, rep in reports.items():
        rows.extend((seed, *r) for r in rep.rows())
    if len(reports) > 1:
        per = [rep.rows() for rep in reports.values()]
        for i, cond in enumerate(r[0] for r in per[0]):
            col = [p[i] for p in per]
            rows.append(("mean", cond, *(math.fsum(r[k] for r in col) / len(col) for k in (1, 2, 3))))
    return rows


def sweep_rows(rates: dict[float, dict[int, EvalReport]]) -> list[tuple]:
    rows = []
    for eps, by_seed in rates.items():
        for seed, rep in by_seed.items():
            rows.extend((eps, seed, c, r) for c, _, _, r in rep.rows())
        per = [rep.rows() for rep in by_seed.values()]
        for i, cond in enumerate(r[0] for r in per[0]):
            rows.append((eps, "mean", cond, math.fsum(p[i][3] for p in per) / len(per)))
    return rows


def read_csv(path) -> list[dict]:
    """Rows of a results or sweep file as dicts of strings (tag line skipped)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# ADVAUG-"):
        raise container.FormatError(f"{path} has no format tag")
    return list(csv.DictReader(lines[1:]))


def _save_run(run_dir: Path, res: RunResult) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    extra = {"recipe": res.recipe, "epsilon": res.epsilon, "best_epoch": res.best_epoch}
    save_checkpoint(run_dir / "model.ckpt", res.params, seed=res.seed, extra=extra)
    _write_text(run_dir / "metrics.log", METRICS_HEADER + format_records(res.records))
    if res.teacher is not None:
        save_checkpoint(run_dir / "teacher.ckpt", res.teacher, seed=res.seed, extra={"recipe": "baseline-clean"})
    if res.teacher_records is not None:
        _write_text(run_dir / "teacher_metrics.log", METRICS_HEADER + format_records(res.teacher_records))


def _timing_text(entries) -> str:
    lines = [TIMING_TAG, "run\tepoch\tseconds"]
    lines += [f"{name}\t{i}\t{s:.6f}" for name, secs in entries for i, s in enumerate(secs)]
    return "\n".join(lines) + "\n"


def _out_dir(cfg: dict, out) -> Path:
    out = out or cfg.get("out")
    if not out:
        raise ConfigError("no output directory given (--out or config 'out')")
    return Path(out)


# ---------------------------------------------------------------- commands


def cmd_gen_data(cfg: dict, out=None) -> Path:
    """Generate the configured corpus and save it to ``out`` (a file path)."""
    out = _out_dir(cfg, out)
    corpus = generate_corpus(CorpusSpec.from_dict(cfg["corpus"]))
    return save_corpus(out, corpus)


def cmd_train(cfg: dict, out=None, recipe: str | None = None) -> Path:
    """Run the recipe for every seed; returns the run directory."""
    out = _out_dir(cfg, out)
    recipe = recipe or cfg["recipe"]
    corpus = get_corpus(cfg)
    cfg = dict(cfg, recipe=recipe, out=None)  # the config lives in the output dir
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "config.json", dump_config(cfg))
    reports, timing = {}, []
    for seed in cfg["seeds"]:
        res = run_recipe(corpus, cfg, seed, recipe)
        _save_run(out / f"seed{seed}", res)
        reports[seed] = evaluate(res.params, corpus, "test")
        timing.append((f"seed{seed}", res.epoch_seconds))
    _write_text(out / "results.csv", _csv_text(RESULTS_TAG, RESULTS_COLUMNS, results_rows(reports)))
    _write_text(out / "timing.tsv", _timing_text(timing))
    return out


def cmd_distill(cfg: dict, out=None) -> Path:
    """``cmd_train`` restricted to the teacher-student recipes (``ts`` by default)."""
    recipe = cfg["recipe"] if cfg["recipe"].startswith("ts") else "ts"
    return cmd_train(cfg, out, recipe)


def cmd_eval(cfg: dict, out=None, split: str = "test") -> Path:
    """Re-evaluate the checkpoints in a run directory; writes ``eval_<split>.csv``."""
    out = _out_dir(cfg, out)
    corpus = get_corpus(cfg)
    reports = {}
    for seed in cfg["seeds"]:
        ckpt = out / f"seed{seed}" / "model.ckpt"
        if not ckpt.exists():
            raise FileNotFoundError(f"missing checkpoint {ckpt}")
        params, _ = load_checkpoint(ckpt)
        reports[seed] = evaluate(params, corpus, split)
    return _write_text(out / f"eval_{split}.csv", _csv_text(RESULTS_TAG, RESULTS_COLUMNS, results_rows(reports)))


def cmd_sweep(cfg: dict, out=None, epsilons=None) -> Path:
    """One AdvEx run (T/S+AdvEx for ts recipes) per (epsilon, seed), scored on dev."""
    out = _out_dir(cfg, out)
    epsilons = list(cfg["sweep_epsilons"] if epsilons is None else epsilons)
    if not epsilons:
        raise ConfigError("empty epsilon list")
    if any(not (isinstance(e, (int, float)) and e >= 0) for e in epsilons):
        raise ConfigError("epsilons must be nonnegative")
    recipe = "ts-advex" if cfg["recipe"].startswith("ts") else "advex"
    corpus = get_corpus(cfg)
    cfg = dict(cfg, recipe=recipe, sweep_epsilons=[float(e) for e in epsilons], out=None)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "config.json", dump_config(cfg))
    teachers = {}
    rates, timing = {}, []
    for eps in cfg["sweep_epsilons"]:
        rates[eps] = {}
        for seed in cfg["seeds"]:
            if recipe == "ts-advex" and seed not in teachers and not cfg.get("teacher_checkpoint"):
                teachers[seed] = train_teacher(corpus, cfg, seed)[0]
            res = run_recipe(corpus, cfg, seed, recipe, eps, teachers.get(seed))
            res.teacher_records = None
            _save_run(out / f"eps{eps!r}" / f"seed{seed}", res)
            rates[eps][seed] = evaluate(res.params, corpus, "dev")
            timing.append((f"eps{eps!r}/seed{seed}", res.epoch_seconds))
    _write_text(out / "sweep.csv", _csv_text(SWEEP_TAG, SWEEP_COLUMNS, sweep_rows(rates)))
    _write_text(out / "timing.tsv", _timing_text(timing))
    return out


def mean_curve(sweep_csv, condition: str = "avg") -> dict[float, float]:
    """Mean rate per epsilon for one condition, read back from ``sweep.csv``."""
    return {float(r["epsilon"]): float(r["rate"]) for r in read_csv(sweep_csv) if r["seed"] == "mean" and r["condition"] == condition}


def best_epsilon(sweep_csv, condition: str = "avg") -> float:
    """Epsilon with the lowest mean dev error; ties go to the smaller epsilon."""
    curve = mean_curve(sweep_csv, condition)
    return min(curve, key=lambda e: (curve[e], e))


__all__ = [
    "RunResult",
    "best_epsilon",
    "cmd_distill",
    "cmd_eval",
    "cmd_gen_data",
    "cmd_sweep",
    "cmd_train",
    "get_corpus",
    "mean_curve",
    "model_spec",
    "read_csv",
    "results_rows",
    "run_recipe",
    "sweep_rows",
    "train_teacher",
]
