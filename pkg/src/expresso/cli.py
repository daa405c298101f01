"""Command-line entry point: ``expresso <subcommand>``.

Data goes to stdout, diagnostics to stderr. Exit code 0 on success, 2 for
unreadable or malformed input, 1 for anything else that goes wrong.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Optional, Sequence

import click
import numpy as np

from . import perceptron as mlp
from . import svm as svm_mod
from .drawing import DrawingError, read_drawing, write_drawing
from .expressiveness import (
    DegenerateDrawing,
    aspects_from_outputs,
    correlation_trends,
    hand_aspects,
    line_fit,
)
from .features import INPUT_NAMES, TARGET_NAMES, Analysis, analyze
from .geometry import GeometryConfig, GeometryError
from .synth import GenSpec, extreme_injection, generate, manifest_rows

SEED_ENV = "EXPRESSO_SEED"


class InputError(click.ClickException):
    exit_code = 2


class RunError(click.ClickException):
    exit_code = 1


def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.9g}"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise click.UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def emit(rows: Sequence[dict], fmt: str, out=None) -> None:
    out = out or sys.stdout
    if not rows:
        return
    cols = list(rows[0])
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_num(r[c]) if not isinstance(r[c], str) else r[c] for c in cols])
    elif fmt == "json-lines":
        for r in rows:
            out.write(json.dumps({c: (r[c] if isinstance(r[c], str) else float(_num(r[c]))) for c in cols}) + "\n")
    else:
        cells = [[r[c] if isinstance(r[c], str) else _num(r[c]) for c in cols] for r in rows]
        widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
        out.write("  ".join(c.rjust(wd) for c, wd in zip(cols, widths)).rstrip() + "\n")
        for row in cells:
            out.write("  ".join(v.rjust(wd) for v, wd in zip(row, widths)).rstrip() + "\n")


# -- input helpers ------------------------------------------------------------


def _drawing_paths(paths: Iterable[str]) -> list[Path]:
    found: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found.extend(sorted(p.glob("*.drw")))
        elif p.exists():
            found.append(p)
        else:
            raise InputError(f"cannot read {raw}: no such file or directory")
    return found


def _load(path: Path):
    try:
        return read_drawing(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except DrawingError as exc:
        raise InputError(f"{path}: {exc}") from None


def _analyze_one(args) -> Analysis:
    path, cfg = args
    d = _load(path)
    try:
        return analyze(d, cfg)
    except (GeometryError, DegenerateDrawing) as exc:
        raise RunError(f"{path}: {exc}") from None


def _analyze_paths(paths: Sequence[Path], cfg: GeometryConfig, jobs: int = 1) -> list[Analysis]:
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_analyze_one, [(p, cfg) for p in paths]))
    else:
        results = [_analyze_one((p, cfg)) for p in paths]
    ids = [a.id for a in results]
    if len(set(ids)) != len(ids):
        raise InputError("duplicate drawing ids: " + ", ".join(sorted({i for i in ids if ids.count(i) > 1})))
    return sorted(results, key=lambda a: a.id)


def _corpus(ctx, directory: str, minimum: int = 1) -> list[Analysis]:
    paths = _drawing_paths([directory])
    if len(paths) < minimum:
        raise InputError(f"{directory}: need at least {minimum} drawing(s), found {len(paths)}")
    return _analyze_paths(paths, ctx.obj["geometry"], ctx.obj["jobs"])


def _hand(an: Analysis):
    try:
        return hand_aspects(an)
    except (DegenerateDrawing, ValueError) as exc:
        raise RunError(f"{an.id}: {exc}") from None


def _load_model(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    head = text.lstrip().split(None, 1)[0] if text.strip() else ""
    try:
        if head == "perceptron":
            return mlp.loads(text)
        if head == "svm":
            return svm_mod.loads(text)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    raise InputError(f"{path}: not a perceptron or SVM model file")


# -- commands -----------------------------------------------------------------


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--resample-step", type=float, default=1.0, show_default=True, help="Resample step in mm.")
@click.option("--theta-soft", type=float, default=5.0, show_default=True, help="Soft-bend threshold, degrees.")
@click.option("--theta-corner", type=float, default=40.0, show_default=True, help="Corner threshold, degrees.")
@click.option("--format", "fmt", type=click.Choice(["table", "csv", "json-lines"]), default=None,
              help="Output format (analyze defaults to table, the others to csv).")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker processes for corpus analysis.")
@click.version_option(package_name="expresso")
@click.pass_context
def main(ctx, resample_step, theta_soft, theta_corner, fmt, jobs):
    """Expressiveness measures for black-and-white line drawings."""
    try:
        geometry = GeometryConfig(resample_step, theta_soft, theta_corner)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    ctx.obj = {"geometry": geometry, "fmt": fmt, "jobs": jobs}


def _fmt(ctx, default: str) -> str:
    return ctx.obj["fmt"] or default


@main.command("analyze")
@click.argument("paths", nargs=-1, required=True)
@click.pass_context
def analyze_cmd(ctx, paths):
    """Measure drawing files (or directories of *.drw files)."""
    analyses = _analyze_paths(_drawing_paths(paths), ctx.obj["geometry"], ctx.obj["jobs"])
    rows = []
    for an in analyses:
        av = _hand(an)
        row = {"id": an.id}
        row.update(an.aspects.as_dict())
        row.update(zip(INPUT_NAMES, an.inputs))
        row.update(zip(TARGET_NAMES, an.targets))
        row.update(a=av.a, b=av.b, c=av.c)
        rows.append(row)
    emit(rows, _fmt(ctx, "table"))


@main.command("gen-corpus")
@click.option("--seed", type=int, default=None, help=f"Random seed (default: ${SEED_ENV} or 0).")
@click.option("--count", type=click.IntRange(min=1), default=30, show_default=True)
@click.option("--trend-mode", is_flag=True, help="Couple larger L with smaller S.")
@click.option("--soft-fraction", type=click.FloatRange(0, 1), default=0.4, show_default=True)
@click.option("--inject-extremes", "inject", type=click.IntRange(min=0), default=0,
              help="Add k extreme-(a) and k extreme-(b) drawings.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.pass_context
def gen_corpus_cmd(ctx, seed, count, trend_mode, soft_fraction, inject, out_dir):
    """Write a seeded synthetic corpus plus manifest.csv."""
    seed = _default_seed() if seed is None else seed
    geometry = ctx.obj["geometry"]
    spec = GenSpec(seed=seed, count=count, trend_mode=trend_mode, soft_fraction=soft_fraction,
                   step_mm=geometry.resample_step_mm)
    corpus = generate(spec)
    if inject:
        try:
            corpus = extreme_injection(corpus, inject, geometry)
        except ValueError as exc:
            raise click.UsageError(str(exc)) from None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for d in corpus.drawings:
        write_drawing(d, out / f"{d.id}.drw")
    buf = io.StringIO()
    emit(manifest_rows(corpus.sorted()), "csv", buf)
    (out / "manifest.csv").write_text(buf.getvalue(), encoding="utf-8")
    click.echo(f"wrote {len(corpus)} drawings to {out}", err=True)


@main.command("train-perceptron")
@click.option("--learning-set", "learning_set", required=True, type=click.Path())
@click.option("--epochs", type=click.IntRange(min=1), default=5000, show_default=True)
@click.option("--lr", type=click.FloatRange(min=0), default=0.5, show_default=True)
@click.option("--init", "init", default="paper", show_default=True, help="paper, random or random:SEED")
@click.option("--update", type=click.Choice(["per-sample", "batch"]), default="per-sample", show_default=True)
@click.option("--input-scaling", type=click.Choice(["rms", "none"]), default="rms", show_default=True)
@click.option("--history", type=click.Path(dir_okay=False), default=None,
              help="Write the per-epoch deviation to this CSV file.")
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def train_perceptron_cmd(ctx, learning_set, epochs, lr, init, update, input_scaling, history, out_file):
    """Train the 12-5-5 perceptron on a directory of drawings."""
    if init == "random":
        init = f"random:{_default_seed()}"
    try:
        cfg = mlp.TrainConfig(epochs=epochs, learning_rate=lr, init=init, update=update,
                              input_scaling=input_scaling)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    analyses = _corpus(ctx, learning_set)
    report = mlp.train([(an.inputs, an.targets) for an in analyses], cfg)
    mlp.save(report.model, out_file)
    if history:
        buf = io.StringIO()
        emit([{"epoch": i + 1, "deviation": v} for i, v in enumerate(report.deviations)], "csv", buf)
        Path(history).write_text(buf.getvalue(), encoding="utf-8")
    click.echo(
        f"trained on {len(analyses)} drawings: deviation {report.deviations[0]:.4f} after epoch 1, "
        f"{report.final_deviation:.4f} after epoch {len(report.deviations)}",
        err=True,
    )


@main.command("predict")
@click.option("--model", "model_file", required=True, type=click.Path())
@click.argument("paths", nargs=-1, required=True)
@click.pass_context
def predict_cmd(ctx, model_file, paths):
    """Perceptron outputs t1..t5 and P(a), P(b), P(c) for drawings."""
    model = _load_model(model_file)
    if not isinstance(model, mlp.PerceptronModel):
        raise InputError(f"{model_file}: expected a perceptron model")
    rows = []
    for an in _analyze_paths(_drawing_paths(paths), ctx.obj["geometry"], ctx.obj["jobs"]):
        out = mlp.forward(model, an.inputs)
        p = aspects_from_outputs(an.inputs, out)
        row = {"id": an.id}
        row.update(zip(TARGET_NAMES, out))
        row.update({"P(a)": p.a, "P(b)": p.b, "P(c)": p.c})
        rows.append(row)
    emit(rows, _fmt(ctx, "csv"))


@main.command("train-svm")
@click.option("--learning-set", "learning_set", required=True, type=click.Path())
@click.option("--aspect", type=click.Choice(["a", "b", "c"]), required=True)
@click.option("--C", "C", type=float, default=1.0, show_default=True)
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def train_svm_cmd(ctx, learning_set, aspect, C, out_file):
    """Train a linear soft-margin SVM separating large from small values of an aspect."""
    if not C > 0:
        raise click.UsageError("--C must be positive")
    analyses = _corpus(ctx, learning_set, minimum=2)
    values = [_hand(an)[aspect] for an in analyses]
    try:
        labels = svm_mod.label_by_median(values)
        fit = svm_mod.train_svm([an.inputs for an in analyses], labels, C=C, aspect=aspect)
    except svm_mod.SvmNotConverged as exc:
        raise RunError(str(exc)) from None
    except ValueError as exc:
        raise RunError(f"{learning_set}: {exc}") from None
    svm_mod.save(fit.model, out_file)
    click.echo(
        f"trained on {len(analyses)} drawings in {fit.iterations} iterations, "
        f"max KKT violation {fit.kkt_violation:.2e}",
        err=True,
    )


@main.command("svm-score")
@click.option("--model", "model_file", required=True, type=click.Path())
@click.argument("paths", nargs=-1, required=True)
@click.pass_context
def svm_score_cmd(ctx, model_file, paths):
    """Decision value <w, x> - b and class for drawings."""
    model = _load_model(model_file)
    if not isinstance(model, svm_mod.SvmModel):
        raise InputError(f"{model_file}: expected an SVM model")
    rows = []
    for an in _analyze_paths(_drawing_paths(paths), ctx.obj["geometry"], ctx.obj["jobs"]):
        score = float(svm_mod.decision(model, an.inputs))
        rows.append({"id": an.id, "aspect": model.aspect, "decision": score,
                     "class": "large" if score > 0 else "small"})
    emit(rows, _fmt(ctx, "csv"))


@main.command("correlate")
@click.argument("directory")
@click.pass_context
def correlate_cmd(ctx, directory):
    """Spearman trend table over a corpus directory."""
    analyses = _corpus(ctx, directory, minimum=5)
    for an in analyses:
        _hand(an)
    report = correlation_trends(analyses)
    rows = [{"pair": k, "rho": "undefined" if t.rho is None else _num(t.rho), "n": t.n} for k, t in report.items()]
    emit(rows, _fmt(ctx, "csv"))


@main.command("plot-data")
@click.option("--model", "model_file", required=True, type=click.Path())
@click.option("--aspect", type=click.Choice(["a", "b", "c"]), required=True)
@click.argument("directory")
@click.pass_context
def plot_data_cmd(ctx, model_file, aspect, directory):
    """Hand vs predicted aspect per drawing, with a least-squares line."""
    model = _load_model(model_file)
    if isinstance(model, svm_mod.SvmModel) and model.aspect != aspect:
        raise click.UsageError(f"SVM model was trained for aspect {model.aspect}, not {aspect}")
    analyses = _corpus(ctx, directory, minimum=2)
    rows = []
    for an in analyses:
        hand = _hand(an)[aspect]
        if isinstance(model, svm_mod.SvmModel):
            pred = float(svm_mod.decision(model, an.inputs))
        else:
            try:
                pred = aspects_from_outputs(an.inputs, mlp.forward(model, an.inputs))[aspect]
            except (DegenerateDrawing, ValueError) as exc:
                raise RunError(f"{an.id}: {exc}") from None
        rows.append({"id": an.id, "hand": hand, "predicted": pred})
    out = sys.stdout
    emit(rows, "csv", out)
    try:
        fit = line_fit([r["hand"] for r in rows], [r["predicted"] for r in rows])
        out.write(f"# fit slope={_num(fit.slope)} intercept={_num(fit.intercept)} r2={_num(fit.r2)}\n")
    except ValueError:
        out.write("# fit undefined (hand values do not vary)\n")


if __name__ == "__main__":  # pragma: no cover
    main()
