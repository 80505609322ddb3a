"""Command-line entry point for sfda-lab."""

import json
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pandas as pd
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from .adaptation import MetricsLog, adapt, adapt_baseline
from .config.loader import describe_validation_error, load_config, load_shift_config, save_config
from .config.models import LabConfig
from .curriculum import curriculum_labels, split_trustworthy
from .data import Dataset, load_dataset, pretrain
from .data.dataset import feature_columns
from .errors import ConfigurationError, DatasetParseError, NumericError, UsageError
from .experiments.manifest import MANIFEST_NAME, EvalReport, RunManifest
from .experiments.runner import (
    VARIANTS,
    ablated,
    build_benchmark,
    evaluation_for,
    probe_comparison,
    run_seeds,
    save_benchmark,
    sweep,
    sweep_checks,
)
from .model import ModelParams, accuracy, load_checkpoint, predict, save_checkpoint
from .model.network import extract_features
from .numerics import RandomSource
from .utils.logging import setup_logging

console = Console()
app = typer.Typer(
    name="sfda-lab",
    help="Source-free domain adaptation lab on synthetic domain-shift benchmarks.",
    no_args_is_help=True,
)

EXIT_USAGE = 2
EXIT_NUMERIC = 3


@contextmanager
def cli_errors() -> Iterator[None]:
    """Map library errors to exit codes 2 (usage) and 3 (numeric)."""
    try:
        yield
    except ValidationError as e:
        console.print(f"[red]✗ Invalid configuration: {describe_validation_error(e)}[/red]")
        sys.exit(EXIT_USAGE)
    except (UsageError, DatasetParseError, ConfigurationError, FileNotFoundError) as e:
        console.print(f"[red]✗ {e}[/red]")
        sys.exit(EXIT_USAGE)
    except NumericError as e:
        console.print(f"[red]✗ Numeric failure: {e}[/red]")
        sys.exit(EXIT_NUMERIC)


def parse_seeds(seeds: str) -> list[int]:
    """``"0,1,2"`` or ``"0..4"`` to a list of seeds."""
    text = seeds.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise UsageError(f"invalid seed list {seeds!r}") from e


def _resolve_config(config: str | None, log_file: Path | None = None) -> LabConfig:
    lab = load_config(config)
    if log_file is not None and lab.logging.file is None:
        lab.logging.file = str(log_file)
    setup_logging(lab.logging)
    return lab


def _per_class_table(title: str, per_class: np.ndarray) -> Table:
    table = Table(title=title)
    table.add_column("Class", justify="right")
    table.add_column("Accuracy", justify="right")
    for k, value in enumerate(per_class):
        table.add_row(str(k), "n/a" if np.isnan(value) else f"{100 * value:.2f}%")
    table.add_row("[bold]Avg[/bold]", f"[bold]{100 * np.nanmean(per_class):.2f}%[/bold]")
    return table


def evaluation_report(params: ModelParams, data: Dataset) -> EvalReport:
    return EvalReport.from_predictions(predict(params, data.inputs), data)


@app.command()
def gen(
    config: str | None = typer.Option(
        None, "--config", "-c", help="ShiftConfig or full lab config (YAML/JSON)"
    ),
    out: Path = typer.Option(Path("data"), "--out", "-o", help="Output directory"),
    seed: int | None = typer.Option(None, "--seed", help="Sampling seed override"),
) -> None:
    """Generate source, target and universal datasets."""
    with cli_errors():
        shift = load_shift_config(config) if config else LabConfig().shift
        if seed is not None:
            shift.seed = seed
        bench = build_benchmark(shift)
        outputs = save_benchmark(bench, out)
        manifest = RunManifest.for_run("gen", shift, seed=shift.seed)
        manifest.record_outputs(outputs)
        manifest.save(out / MANIFEST_NAME)

    for name, path in outputs.items():
        console.print(f"[green]✓[/green] {name}: {path} ({len(getattr(bench, name))} rows)")


@app.command("pretrain")
def pretrain_command(
    dataset: Path = typer.Argument(help="Labelled dataset CSV"),
    out: Path = typer.Option(..., "--out", "-o", help="Checkpoint path"),
    config: str | None = typer.Option(None, "--config", "-c", help="Lab config file"),
    init: Path | None = typer.Option(
        None, "--init", help="Start from this checkpoint's extractor"
    ),
    epochs: int | None = typer.Option(None, "--epochs", help="Epoch override"),
    seed: int | None = typer.Option(None, "--seed", help="Seed override"),
) -> None:
    """Pretrain a model on a labelled dataset and write a checkpoint."""
    with cli_errors():
        lab = _resolve_config(config)
        if epochs is not None:
            lab.pretrain.epochs = epochs
        if seed is not None:
            lab.pretrain.seed = seed
        data = load_dataset(dataset, lab.shift.num_classes if config else None)
        init_extractor = load_checkpoint(init).extractor if init else None
        params = pretrain(
            data,
            lab.model,
            lab.pretrain,
            RandomSource(lab.pretrain.seed),
            init_extractor=init_extractor,
        )
        save_checkpoint(params, out)
        train_acc = accuracy(params, data.inputs, data.labels)
        inputs = {"dataset": dataset} | ({"init": init} if init else {})
        manifest = RunManifest.for_run("pretrain", lab, inputs, seed=lab.pretrain.seed)
        manifest.record_outputs({"checkpoint": out})
        manifest.save(out.with_suffix(".manifest.json"))

    console.print(f"[green]✓ Checkpoint written: {out}[/green]")
    console.print(f"Train accuracy: {100 * train_acc:.2f}%")


def _adapt_one(
    lab: LabConfig,
    source: ModelParams,
    universal: ModelParams,
    target: Dataset,
    out: Path,
    baseline: bool,
    dump_splits: bool,
) -> tuple[ModelParams, MetricsLog]:
    evaluation = evaluation_for(target, lab.shift)
    view = target.unlabeled()
    if baseline:
        model, log = adapt_baseline(source, view, lab.adaptation, evaluation)
    else:
        model, log = adapt(
            source,
            universal.extractor,
            view,
            lab.adaptation,
            evaluation,
            split_dump_dir=out / "splits" if dump_splits else None,
        )
    save_checkpoint(model, out / "model.json")
    log.save(out / "metrics.csv")
    return model, log


@app.command("adapt")
def adapt_command(
    source: Path = typer.Option(..., "--source", help="Source model checkpoint"),
    universal: Path = typer.Option(..., "--universal", help="Universal model checkpoint"),
    target: Path = typer.Option(..., "--target", help="Target dataset CSV"),
    out: Path = typer.Option(Path("runs/adapt"), "--out", "-o", help="Output directory"),
    config: str | None = typer.Option(None, "--config", "-c", help="Lab config file"),
    baseline: bool = typer.Option(False, "--baseline", help="Run naive self-training"),
    ablate: list[str] = typer.Option(
        [], "--ablate", help="Disable a module: filtering, mixup or colearning"
    ),
    seed: int | None = typer.Option(None, "--seed", help="Adaptation seed override"),
    seeds: str | None = typer.Option(
        None, "--seeds", help="Run several seeds concurrently, e.g. 0,1,2 or 0..4"
    ),
    epochs: int | None = typer.Option(None, "--epochs", help="Target epochs override"),
    dump_splits: bool = typer.Option(
        False, "--dump-splits", help="Write the per-epoch split CSVs"
    ),
) -> None:
    """Adapt the source model to the target domain."""
    with cli_errors():
        lab = _resolve_config(config, out / "run.log")
        for module in ablate:
            lab.adaptation = ablated(lab.adaptation, module)
        if epochs is not None:
            lab.adaptation.epochs = epochs
        if seed is not None:
            lab.adaptation.seed = seed

        source_params = load_checkpoint(source)
        universal_params = load_checkpoint(universal)
        data = load_dataset(target, source_params.num_classes)
        inputs = {"source": source, "universal": universal, "target": target}
        command = "adapt-baseline" if baseline else "adapt"

        def run(run_seed: int, run_dir: Path) -> tuple[ModelParams, MetricsLog]:
            run_lab = lab.model_copy(deep=True)
            run_lab.adaptation.seed = run_seed
            result = _adapt_one(
                run_lab, source_params, universal_params, data, run_dir, baseline, dump_splits
            )
            manifest = RunManifest.for_run(command, run_lab, inputs, seed=run_seed)
            manifest.record_outputs(
                {"model": run_dir / "model.json", "metrics": run_dir / "metrics.csv"}
            )
            manifest.save(run_dir / MANIFEST_NAME)
            return result

        if seeds is None:
            model, log = run(lab.adaptation.seed, out)
            _print_adapt_summary(model, source_params, data)
            return
        seed_list = parse_seeds(seeds)
        results = run_seeds(lambda s: run(s, out / f"seed_{s}"), seed_list)

    table = Table(title="Final target accuracy per seed")
    table.add_column("Seed", justify="right")
    table.add_column("Accuracy", justify="right")
    for s, (_, log) in zip(seed_list, results, strict=True):
        final = log.final
        table.add_row(str(s), "n/a" if final is None else f"{100 * final.accuracy:.2f}%")
    console.print(table)


def _print_adapt_summary(model: ModelParams, source: ModelParams, data: Dataset) -> None:
    before = evaluation_report(source, data)
    after = evaluation_report(model, data)
    console.print(f"Source-only accuracy: {100 * before.accuracy:.2f}%")
    console.print(f"[green]Adapted accuracy: {100 * after.accuracy:.2f}%[/green]")
    console.print(_per_class_table("Per-class target accuracy", after.per_class_array()))


@app.command("eval")
def eval_command(
    checkpoint: Path = typer.Argument(help="Model checkpoint"),
    dataset: Path = typer.Argument(help="Labelled dataset CSV"),
    json_out: Path | None = typer.Option(None, "--json", help="Write the report as JSON"),
) -> None:
    """Report overall and per-class accuracy of a checkpoint."""
    with cli_errors():
        params = load_checkpoint(checkpoint)
        data = load_dataset(dataset, params.num_classes)
        report = evaluation_report(params, data)

    console.print(f"Accuracy: {100 * report.accuracy:.2f}% (n={report.n})")
    console.print(_per_class_table("Per-class accuracy", report.per_class_array()))
    if json_out is not None:
        json_out.parent.mkdir(parents=True, exist_ok=True)
        json_out.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        console.print(f"[green]✓ Report written: {json_out}[/green]")


@app.command("dump-features")
def dump_features(
    checkpoint: Path = typer.Argument(help="Model checkpoint"),
    dataset: Path = typer.Argument(help="Dataset CSV"),
    out: Path = typer.Option(..., "--out", "-o", help="Feature CSV path"),
    config: str | None = typer.Option(None, "--config", "-c", help="Lab config file"),
) -> None:
    """Write extractor features with the checkpoint's trustworthy/untrustworthy split."""
    with cli_errors():
        lab = _resolve_config(config)
        params = load_checkpoint(checkpoint)
        data = load_dataset(dataset, params.num_classes)
        pl, _ = curriculum_labels(params, data.unlabeled())
        split = split_trustworthy(pl, lab.adaptation.tau_norm)
        features, _, _ = extract_features(params, data.inputs)
        frame = pd.DataFrame(
            {
                "index": np.arange(len(data)),
                "label": data.labels,
                "subset": np.where(split.mask(), "tt", "ut"),
            }
        )
        frame = pd.concat(
            [frame, pd.DataFrame(features, columns=feature_columns(features.shape[1]))],
            axis=1,
        )
        out.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False, lineterminator="\n")

    console.print(f"[green]✓ Features written: {out}[/green] ({len(data)} rows)")


@app.command("sweep")
def sweep_command(
    config: str | None = typer.Option(None, "--config", "-c", help="Lab config file"),
    seeds: str = typer.Option("0..4", "--seeds", help="Seed list, e.g. 0,1,2 or 0..4"),
    variants: list[str] = typer.Option(
        list(VARIANTS), "--variant", help="Variants to run (repeatable)"
    ),
    out: Path = typer.Option(Path("runs/sweep"), "--out", "-o", help="Output directory"),
    probe: bool = typer.Option(True, "--probe/--no-probe", help="Also compare linear probes"),
) -> None:
    """Run the full pipeline and its ablations over several seeds."""
    with cli_errors():
        lab = _resolve_config(config, out / "run.log")
        seed_list = parse_seeds(seeds)
        frame = sweep(lab, seed_list, variants)
        checks = sweep_checks(frame)
        out.mkdir(parents=True, exist_ok=True)
        outputs = {"sweep": out / "sweep.csv", "checks": out / "checks.json"}
        frame.to_csv(outputs["sweep"], index=False, lineterminator="\n")
        outputs["checks"].write_text(json.dumps(checks, indent=2) + "\n", encoding="utf-8")
        if probe:
            probes = pd.DataFrame(run_seeds(lambda s: probe_comparison(lab, s), seed_list))
            outputs["probe"] = out / "probe.csv"
            probes.to_csv(outputs["probe"], index=False, lineterminator="\n")
        manifest = RunManifest.for_run("sweep", lab)
        manifest.record_outputs(outputs)
        manifest.save(out / MANIFEST_NAME)

    summary = frame.groupby("variant", sort=False)[["final_accuracy", "r_final"]].mean()
    table = Table(title=f"Mean over seeds {seed_list}")
    table.add_column("Variant")
    table.add_column("Final accuracy", justify="right")
    table.add_column("Final r", justify="right")
    for variant, row in summary.iterrows():
        table.add_row(str(variant), f"{100 * row.final_accuracy:.2f}%", f"{row.r_final:.3f}")
    console.print(table)
    for key, value in checks.items():
        console.print(f"  {key}: {value}")


@app.command()
def init_config(
    output: str = typer.Option(
        "sfda-lab.yaml",
        "--output",
        "-o",
        help="Output configuration file path",
    ),
    force: bool = typer.Option(
        False,
        "--force",
        help="Overwrite existing file",
    ),
) -> None:
    """Initialize a new configuration file with defaults."""
    output_path = Path(output)

    if output_path.exists() and not force:
        console.print(
            f"[red]File {output} already exists. Use --force to overwrite.[/red]"
        )
        sys.exit(EXIT_USAGE)

    save_config(LabConfig(), output_path)

    console.print(f"[green]✓ Configuration file created: {output}[/green]")
    console.print("Edit the file to change the benchmark or adaptation settings.")


@app.command()
def validate_config(
    config: str = typer.Argument(help="Path to configuration file to validate"),
) -> None:
    """Validate a configuration file."""
    with cli_errors():
        lab = load_config(config)
    console.print("[green]✓ Configuration is valid[/green]")

    console.print(
        f"Benchmark: K={lab.shift.num_classes}, D_in={lab.shift.input_dim}, "
        f"hard classes {lab.shift.hard_class_indices}"
    )
    console.print(
        f"Model: {lab.shift.input_dim} -> {lab.model.hidden_dims} -> "
        f"{lab.model.feature_dim} ({lab.model.activation})"
    )
    ad = lab.adaptation
    console.print(
        f"Adaptation: N={ad.epochs}, K_sub={ad.sub_epochs}, K_mix={ad.mix_epochs}, "
        f"beta {ad.beta0} -> {ad.beta_end}"
    )


if __name__ == "__main__":
    app()
