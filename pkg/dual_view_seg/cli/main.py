"""Main CLI application"""

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path

import numpy as np
import torch
import typer
from pandas import DataFrame
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.panel import Panel
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table
from torch.utils.data import Dataset

from dual_view_seg.cache import SampleCache
from dual_view_seg.config import (
    DATA_DIR,
    PRECISION_THRESHOLDS,
    RUNS_DIR,
    ModelConfig,
    TrainConfig,
    dump_settings,
    load_settings,
)
from dual_view_seg.config.constants import (
    EXIT_DIVERGED,
    EXIT_FAILURE,
    EXIT_INVALID_CONFIG,
    EXIT_MISSING_INPUT,
    EXIT_NOT_IMPLEMENTED,
    EXIT_VERIFICATION_FAILED,
)
from dual_view_seg.errors import (
    ConfigError,
    DualViewError,
    ManifestError,
    MaskFormatError,
    TrainingDivergedError,
    VariantNotImplementedError,
)
from dual_view_seg.generators.views import prepare_image_views, resize
from dual_view_seg.models import (
    PRESETS,
    AblationSwitches,
    EvalRecord,
    ManifestRecord,
    ViewBundle,
)
from dual_view_seg.network import DualViewSegmenter, count_params, predict_mask
from dual_view_seg.network.segmenter import count_params_by_module
from dual_view_seg.parsers import (
    ManifestParser,
    default_vocabulary,
    read_image,
    read_mask,
    write_image,
    write_mask,
)
from dual_view_seg.training import (
    ManifestDataset,
    MetricsReport,
    SyntheticDataset,
    Trainer,
    emit_report,
    evaluate_model,
    iou,
    load_model,
    miou,
    oiou,
    scene_spec_for,
    split_seeds,
)
from dual_view_seg.training.report import MetricSummary, precision_key
from dual_view_seg.verification import (
    GRADCHECK_TARGETS,
    ORACLES,
    run_gradcheck,
    run_oracle,
)

app = typer.Typer(
    name="dual-view-seg",
    help="Dual-view referring segmentation: train, evaluate, predict and verify.",
    add_completion=False,
    no_args_is_help=True,
)
console = Console(legacy_windows=True, force_terminal=True)

EXTRA_ARGS = {"allow_extra_args": True, "ignore_unknown_options": True}
TOY_CONFIG_FILE = DATA_DIR / "toy.cfg"
OVERFIT_OVERRIDES = {"train_samples": "16", "val_samples": "0", "max_steps": "300"}
OVERFIT_TARGET_MIOU = 0.85
RUN_CONFIG_NAME = "config.cfg"
MANIFEST_NAME = "manifest.tsv"
DEFAULT_ABLATE_VARIANTS = ["full", "only_remote", "only_close"]


@app.callback()
def main(
    verbose: bool = typer.Option(
        False, "--verbose", "-v", help="Log debug detail", show_default=True
    ),
) -> None:
    """Dual-view referring segmentation toolkit.

    Commands that take --config also accept any config key as a trailing
    `--key value` flag, e.g. `train --epochs 3 --lr 1e-4`.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


@contextmanager
def exit_codes() -> Iterator[None]:
    """Report package errors on the console and exit with their documented code"""
    try:
        yield
    except ConfigError as e:
        console.print("[red]X[/red] Invalid configuration:")
        for violation in e.violations:
            console.print(f"  - {escape(violation)}")
        raise typer.Exit(EXIT_INVALID_CONFIG) from e
    except (FileNotFoundError, ManifestError, MaskFormatError) as e:
        console.print(f"[red]X[/red] Missing input: {escape(str(e))}")
        raise typer.Exit(EXIT_MISSING_INPUT) from e
    except TrainingDivergedError as e:
        console.print(f"[red]X[/red] Training diverged: {escape(str(e))}")
        raise typer.Exit(EXIT_DIVERGED) from e
    except VariantNotImplementedError as e:
        console.print(f"[red]X[/red] {escape(str(e))}")
        raise typer.Exit(EXIT_NOT_IMPLEMENTED) from e
    except DualViewError as e:
        console.print(f"[red]X Error:[/red] {escape(str(e))}")
        raise typer.Exit(EXIT_FAILURE) from e


def parse_overrides(args: list[str]) -> dict[str, str]:
    """Trailing ``--key value`` or ``--key=value`` pairs as config overrides"""
    overrides: dict[str, str] = {}
    problems: list[str] = []
    index = 0
    while index < len(args):
        arg = args[index]
        index += 1
        if not arg.startswith("--") or arg == "--":
            problems.append(f"unexpected argument: {arg}")
            continue
        key, sep, value = arg[2:].partition("=")
        if not sep:
            if index >= len(args):
                problems.append(f"missing value for --{key}")
                break
            value = args[index]
            index += 1
        overrides[key.replace("-", "_")] = value
    if problems:
        raise ConfigError(problems)
    return overrides


def _require_file(path: Path | None, what: str) -> None:
    if path is not None and not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")


def _settings(
    ctx: typer.Context, config: Path | None
) -> tuple[ModelConfig, TrainConfig]:
    _require_file(config, "config file")
    return load_settings(config, parse_overrides(ctx.args))


def _switches(variant: str) -> AblationSwitches:
    if variant not in PRESETS:
        raise typer.BadParameter(
            f"unknown variant '{variant}', choose from: {', '.join(PRESETS)}"
        )
    return AblationSwitches.preset(variant)


def _progress() -> Progress:
    return Progress(
        TextColumn("[bold blue]{task.description}"),
        BarColumn(bar_width=40),
        TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
        TimeElapsedColumn(),
        console=console,
        transient=False,
    )


def _timestamped_run_dir(prefix: str) -> Path:
    timestamp = datetime.now().strftime("%Y-%m-%d_%H%M%S")
    return RUNS_DIR / f"{prefix}_{timestamp}"


def _manifest_records(manifest: Path) -> list[ManifestRecord]:
    records = ManifestParser(manifest).parse()
    if not records:
        raise ManifestError(f"{manifest}: no usable samples")
    return records


def _datasets(
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    manifest: Path | None,
    val_manifest: Path | None,
    use_cache: bool,
) -> tuple[Dataset[ViewBundle], Dataset[ViewBundle] | None]:
    """Manifest datasets when a manifest is given, synthetic splits otherwise"""
    vocab = default_vocabulary()
    if manifest is not None:
        train_set = ManifestDataset(_manifest_records(manifest), model_cfg, vocab)
        val_set = None
        if val_manifest is not None:
            val_set = ManifestDataset(
                _manifest_records(val_manifest), model_cfg, vocab
            )
        return train_set, val_set

    cache = SampleCache() if use_cache else None
    spec = scene_spec_for(train_cfg)
    train_seeds, val_seeds = split_seeds(model_cfg.seed, train_cfg)
    synthetic = SyntheticDataset(train_seeds, model_cfg, spec, vocab, cache)
    val_synthetic = None
    if val_seeds:
        val_synthetic = SyntheticDataset(val_seeds, model_cfg, spec, vocab, cache)
    return synthetic, val_synthetic


def _metrics_table(report: MetricsReport) -> Table:
    table = Table(title="Evaluation", show_header=True, header_style="bold magenta")
    table.add_column("Group", style="cyan")
    for threshold in PRECISION_THRESHOLDS:
        table.add_column(precision_key(threshold), justify="right")
    table.add_column("oIoU", justify="right", style="yellow")
    table.add_column("mIoU", justify="right", style="bold green")
    table.add_column("N", justify="right", style="dim")

    def add(name: str, summary: MetricSummary) -> None:
        table.add_row(
            name,
            *(f"{value:.2f}" for value in summary.precision.values()),
            f"{100 * summary.oIoU:.2f}",
            f"{100 * summary.mIoU:.2f}",
            str(summary.samples),
        )

    add("overall", report.overall)
    for name, summary in report.per_category.items():
        add(f"category: {name}", summary)
    for name, summary in report.per_size_class.items():
        add(f"size: {name}", summary)
    return table


@app.command(context_settings=EXTRA_ARGS)
def train(  # noqa: PLR0913
    ctx: typer.Context,
    config: Path | None = typer.Option(
        None,
        "--config",
        "-c",
        help="Flat `key = value` config file",
        show_default="built-in defaults",
    ),
    resume: Path | None = typer.Option(
        None, "--resume", "-r", help="Checkpoint to resume from"
    ),
    overfit: bool = typer.Option(
        False,
        "--overfit",
        help="Fit 16 synthetic samples with the toy config and report train mIoU",
        show_default=True,
    ),
    variant: str = typer.Option(
        "full", "--variant", help="Ablation preset to train", show_default=True
    ),
    run_dir: Path | None = typer.Option(
        None, "--run-dir", "-o", help="Output directory", show_default="runs/run_DATE"
    ),
    manifest: Path | None = typer.Option(
        None, "--manifest", "-m", help="Training manifest (synthetic data if absent)"
    ),
    val_manifest: Path | None = typer.Option(
        None, "--val-manifest", help="Validation manifest"
    ),
    use_cache: bool = typer.Option(
        True,
        "--cache/--no-cache",
        help="Cache rendered synthetic scenes on disk",
        show_default=True,
    ),
) -> None:
    """Train a model and write checkpoints plus the loss log."""
    console.print(Panel.fit("Dual View Seg - Training", style="bold magenta"))

    with exit_codes():
        overrides = parse_overrides(ctx.args)
        if overfit:
            config = config or TOY_CONFIG_FILE
            overrides = {**OVERFIT_OVERRIDES, **overrides}
        _require_file(config, "config file")
        _require_file(resume, "checkpoint")
        _require_file(manifest, "manifest")
        _require_file(val_manifest, "validation manifest")
        model_cfg, train_cfg = load_settings(config, overrides)
        switches = _switches(variant)

        train_set, val_set = _datasets(
            model_cfg, train_cfg, manifest, val_manifest, use_cache
        )
        run_dir = run_dir or _timestamped_run_dir("run")
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / RUN_CONFIG_NAME).write_text(
            dump_settings(model_cfg, train_cfg), encoding="utf-8"
        )

        trainer = Trainer(
            model_cfg,
            train_cfg,
            len(default_vocabulary()),
            train_set,
            run_dir,
            val_set,
            switches,
        )
        console.print(
            f"[green]OK[/green] Model '{variant}' with "
            f"[bold]{count_params(trainer.model)}[/bold] parameters, "
            f"{trainer.total_steps} steps"
        )

        with _progress() as progress:
            task = progress.add_task("[cyan]Training...", total=trainer.total_steps)

            def on_step(step: int, terms: object) -> None:
                progress.update(task, completed=step)

            result = trainer.train(resume, on_step)
            progress.update(task, description="[green]Complete!")

        console.print(
            f"\n[green]OK[/green] {result.steps} steps, "
            f"final loss {result.final_loss:.4f}"
        )
        if result.best_miou is not None:
            console.print(
                f"[green]OK[/green] Best validation mIoU {result.best_miou:.4f}"
            )
        if overfit:
            records = evaluate_model(
                trainer.model, train_set, train_cfg.batch_size, train_cfg.threshold
            )
            train_miou = miou(records)
            if train_miou < OVERFIT_TARGET_MIOU:
                console.print(
                    f"[red]X[/red] Train mIoU {train_miou:.4f} is below "
                    f"{OVERFIT_TARGET_MIOU}"
                )
                raise typer.Exit(EXIT_VERIFICATION_FAILED)
            console.print(f"[green]OK[/green] Train mIoU {train_miou:.4f}")

    console.print(f"\n[bold green]Success![/bold green] Run directory: {run_dir}")
    console.print(f"[bold]Loss log:[/bold] {result.log_path}")


@app.command(name="eval")
def evaluate(
    manifest: Path = typer.Option(
        ..., "--manifest", "-m", help="Manifest of the evaluation samples"
    ),
    checkpoint: Path | None = typer.Option(
        None, "--checkpoint", "-k", help="Checkpoint whose predictions are scored"
    ),
    pred_dir: Path | None = typer.Option(
        None,
        "--pred-dir",
        help="Score <sample_id>.png masks from this directory instead of a model",
    ),
    output: Path | None = typer.Option(
        None, "--output", "-o", help="Write the JSON report here"
    ),
    batch_size: int = typer.Option(8, "--batch-size", "-b", show_default=True),
) -> None:
    """Score predictions against a manifest and print the metrics table."""
    if (checkpoint is None) == (pred_dir is None):
        console.print("[red]X[/red] Give exactly one of --checkpoint or --pred-dir")
        raise typer.Exit(EXIT_FAILURE)

    with exit_codes():
        _require_file(manifest, "manifest")
        _require_file(checkpoint, "checkpoint")
        _require_file(pred_dir, "prediction directory")
        records = _manifest_records(manifest)

        if checkpoint is not None:
            model, header = load_model(checkpoint)
            dataset = ManifestDataset(records, header.model_cfg)
            threshold = header.train_cfg.threshold if header.train_cfg else 0.5
            with console.status("[cyan]Evaluating..."):
                results = evaluate_model(model, dataset, batch_size, threshold)
        else:
            assert pred_dir is not None
            results = [_score_file(pred_dir, record) for record in records]

        report = emit_report(
            results,
            categories={r.category for r in records if r.category},
            size_classes={r.size_class for r in records if r.size_class},
        )

    console.print(_metrics_table(report))
    for warning in report.warnings:
        console.print(f"[yellow]Warning:[/yellow] {escape(warning)}")
    if output is not None:
        report.save(output)
        console.print(f"[green]OK[/green] Report: {output}")


def _score_file(pred_dir: Path, record: ManifestRecord) -> EvalRecord:
    """IoU of a prediction file, resized to its ground truth when needed"""
    gt = read_mask(Path(record.mask_path))
    pred = read_mask(pred_dir / f"{record.sample_id}.png")
    if pred.shape != gt.shape:
        tensor = torch.from_numpy(pred.astype(np.float32))[None, None]
        pred = resize(tensor, gt.shape, mode="nearest")[0, 0].numpy()
    return iou(pred, gt, record.sample_id, record.category, record.size_class)


@app.command()
def predict(
    checkpoint: Path = typer.Option(..., "--checkpoint", "-k", help="Model checkpoint"),
    image: Path = typer.Option(..., "--image", "-i", help="Input image"),
    expression: str = typer.Option(
        ..., "--expression", "-e", help="Referring expression"
    ),
    output: Path | None = typer.Option(
        None, "--output", "-o", help="Mask PNG path", show_default="IMAGE_mask.png"
    ),
) -> None:
    """Segment the object an expression refers to and write the mask."""
    with exit_codes():
        _require_file(checkpoint, "checkpoint")
        _require_file(image, "image")
        model, header = load_model(checkpoint)
        cfg = header.model_cfg
        tokens = default_vocabulary().tokenize(expression, cfg.lang_len)
        remote, close = prepare_image_views(read_image(image), cfg)
        threshold = header.train_cfg.threshold if header.train_cfg else 0.5

        with torch.no_grad():
            state = model(
                remote[None],
                close[None],
                torch.tensor([tokens.ids], dtype=torch.long),
                torch.tensor([tokens.attn_mask], dtype=torch.bool),
            )
        mask = predict_mask(state.pred, threshold)[0].numpy().astype(np.uint8)

        output = output or image.with_name(f"{image.stem}_mask.png")
        write_mask(mask, output)

    console.print(
        f"[green]OK[/green] {mask.shape[0]}x{mask.shape[1]} mask, "
        f"{int(mask.sum())} foreground pixels: {output}"
    )


@app.command()
def gradcheck(
    target: str | None = typer.Argument(
        None, help="Target to check", show_default="all targets"
    ),
    seed: int = typer.Option(0, "--seed", "-s", show_default=True),
) -> None:
    """Compare analytic gradients with central finite differences."""
    if target is not None and target not in GRADCHECK_TARGETS:
        raise typer.BadParameter(
            f"unknown target '{target}', choose from: {', '.join(GRADCHECK_TARGETS)}"
        )
    targets = [target] if target else list(GRADCHECK_TARGETS)

    table = Table(title="Gradient check", show_header=True, header_style="bold magenta")
    table.add_column("Target", style="cyan")
    table.add_column("Group", style="dim")
    table.add_column("Rel. error", justify="right")
    table.add_column("Tolerance", justify="right", style="dim")
    table.add_column("Status", justify="center")

    failures = 0
    with _progress() as progress:
        task = progress.add_task("[cyan]Checking...", total=len(targets))
        for name in targets:
            progress.update(task, description=f"[cyan]{name}...")
            for result in run_gradcheck(name, seed):
                failures += not result.passed
                table.add_row(
                    result.target,
                    result.group,
                    f"{result.rel_error:.2e}",
                    f"{result.tolerance:.0e}",
                    "[green]OK[/green]" if result.passed else "[red]X[/red]",
                )
            progress.advance(task)
        progress.update(task, description="[green]Complete!")

    console.print(table)
    if failures:
        console.print(f"[red]X[/red] {failures} gradient groups above tolerance")
        raise typer.Exit(EXIT_VERIFICATION_FAILED)
    console.print("[green]OK[/green] All gradients match")


@app.command()
def oracle(
    which: str = typer.Argument(..., help=f"One of: {', '.join(ORACLES)}"),
    trials: int = typer.Option(50, "--trials", "-n", show_default=True),
    seed: int = typer.Option(0, "--seed", "-s", show_default=True),
) -> None:
    """Check a fast operation against its brute-force oracle."""
    if which not in ORACLES:
        raise typer.BadParameter(
            f"unknown oracle '{which}', choose from: {', '.join(ORACLES)}"
        )
    with console.status(f"[cyan]Running {which} oracle..."):
        result = run_oracle(which, trials, seed)

    if not result.passed:
        console.print(
            f"[red]X[/red] {which}: max deviation {result.max_deviation:.2e} "
            f">= {result.tolerance:.0e} over {result.trials} trials"
        )
        raise typer.Exit(EXIT_VERIFICATION_FAILED)
    console.print(
        f"[green]OK[/green] {which}: max deviation {result.max_deviation:.2e} "
        f"over {result.trials} trials"
    )


@app.command(context_settings=EXTRA_ARGS)
def ablate(  # noqa: PLR0913
    ctx: typer.Context,
    variants: list[str] | None = typer.Option(
        None,
        "--variant",
        help="Preset to compare (repeatable)",
        show_default="full, only_remote, only_close",
    ),
    seeds: list[int] | None = typer.Option(
        None, "--seed", help="Model seed (repeatable)", show_default="config seed"
    ),
    config: Path | None = typer.Option(
        None, "--config", "-c", help="Flat `key = value` config file"
    ),
    run_dir: Path | None = typer.Option(
        None,
        "--run-dir",
        "-o",
        help="Output directory",
        show_default="runs/ablate_DATE",
    ),
    use_cache: bool = typer.Option(
        True, "--cache/--no-cache", help="Cache rendered synthetic scenes on disk"
    ),
) -> None:
    """Train each variant on the same synthetic data and compare validation metrics.

    Sweeps such as close-view grid size are config overrides, e.g.
    `ablate --n_view 3`.
    """
    console.print(Panel.fit("Dual View Seg - Ablation", style="bold magenta"))
    names = variants or DEFAULT_ABLATE_VARIANTS
    for name in names:
        _switches(name)

    with exit_codes():
        model_cfg, train_cfg = _settings(ctx, config)
        train_set, val_set = _datasets(model_cfg, train_cfg, None, None, use_cache)
        eval_set = val_set
        if eval_set is None:
            console.print(
                "[yellow]Warning:[/yellow] val_samples is 0, scoring the training set"
            )
            eval_set = train_set
        run_dir = run_dir or _timestamped_run_dir("ablate")
        vocab_size = len(default_vocabulary())

        rows: list[dict[str, object]] = []
        unimplemented: list[str] = []
        runs = [(seed, name) for seed in (seeds or [model_cfg.seed]) for name in names]
        with _progress() as progress:
            task = progress.add_task("[cyan]Ablating...", total=len(runs))
            for seed, name in runs:
                progress.update(task, description=f"[cyan]{name} (seed {seed})...")
                row: dict[str, object] = {"variant": name, "seed": seed}
                try:
                    trainer = Trainer(
                        model_cfg.model_copy(update={"seed": seed}),
                        train_cfg,
                        vocab_size,
                        train_set,
                        run_dir / f"{name}_seed{seed}",
                        None,
                        AblationSwitches.preset(name),
                    )
                except VariantNotImplementedError as e:
                    unimplemented.append(name)
                    rows.append({**row, "status": str(e)})
                    progress.advance(task)
                    continue
                trainer.train()
                records = evaluate_model(
                    trainer.model, eval_set, train_cfg.batch_size, train_cfg.threshold
                )
                rows.append(
                    {
                        **row,
                        "status": "ok",
                        "params": count_params(trainer.model),
                        "oIoU": oiou(records),
                        "mIoU": miou(records),
                    }
                )
                progress.advance(task)
            progress.update(task, description="[green]Complete!")

        frame = DataFrame(
            rows, columns=["variant", "seed", "status", "params", "oIoU", "mIoU"]
        )
        run_dir.mkdir(parents=True, exist_ok=True)
        frame.to_csv(run_dir / "ablation.csv", index=False)

    table = Table(title="Ablation", show_header=True, header_style="bold magenta")
    table.add_column("Variant", style="cyan")
    table.add_column("Seed", justify="right", style="dim")
    table.add_column("Params", justify="right")
    table.add_column("oIoU", justify="right", style="yellow")
    table.add_column("mIoU", justify="right", style="bold green")
    for row in rows:
        if row["status"] != "ok":
            table.add_row(
                str(row["variant"]),
                str(row["seed"]),
                "-",
                "[red]not implemented[/red]",
                "-",
            )
            continue
        table.add_row(
            str(row["variant"]),
            str(row["seed"]),
            str(row["params"]),
            f"{100 * float(row['oIoU']):.2f}",  # type: ignore[arg-type]
            f"{100 * float(row['mIoU']):.2f}",  # type: ignore[arg-type]
        )
    console.print(table)
    console.print(f"[bold]Results:[/bold] {run_dir / 'ablation.csv'}")

    if unimplemented:
        console.print(
            f"[red]X[/red] Not implemented: {', '.join(sorted(set(unimplemented)))}"
        )
        raise typer.Exit(EXIT_NOT_IMPLEMENTED)


@app.command(context_settings=EXTRA_ARGS)
def synth(
    ctx: typer.Context,
    output: Path = typer.Option(..., "--output", "-o", help="Output directory"),
    count: int = typer.Option(16, "--count", "-n", help="Number of samples"),
    seed: int = typer.Option(0, "--seed", "-s", help="First scene seed"),
    config: Path | None = typer.Option(
        None, "--config", "-c", help="Flat `key = value` config file"
    ),
) -> None:
    """Write a synthetic split as PNG images, PNG masks and a TSV manifest.

    Scene size and tiny-target fraction come from the scene_side and
    tiny_fraction config keys.
    """
    with exit_codes():
        model_cfg, train_cfg = _settings(ctx, config)
        dataset = SyntheticDataset(
            range(seed, seed + count), model_cfg, scene_spec_for(train_cfg)
        )
        records: list[ManifestRecord] = []
        with _progress() as progress:
            task = progress.add_task("[cyan]Rendering...", total=count)
            for index in range(count):
                sample = dataset.sample(index)
                image_path = output / "images" / f"{sample.sample_id}.png"
                mask_path = output / "masks" / f"{sample.sample_id}.png"
                write_image(sample.image, image_path)
                write_mask(sample.mask, mask_path)
                records.append(
                    ManifestRecord(
                        sample_id=sample.sample_id,
                        image_path=str(image_path),
                        mask_path=str(mask_path),
                        expression=sample.expression,
                        category=sample.meta.category,
                        size_class=sample.meta.size_class,
                    )
                )
                progress.advance(task)
        ManifestParser(output / MANIFEST_NAME).export_to_manifest(records)

    console.print(
        f"[green]OK[/green] Wrote {count} samples, manifest: {output / MANIFEST_NAME}"
    )


@app.command(name="config", context_settings=EXTRA_ARGS)
def show_config(
    ctx: typer.Context,
    config: Path | None = typer.Option(
        None, "--config", "-c", help="Flat `key = value` config file"
    ),
    write: Path | None = typer.Option(
        None, "--write", "-w", help="Also write the effective config to this file"
    ),
) -> None:
    """Show the effective configuration after file values and overrides."""
    with exit_codes():
        model_cfg, train_cfg = _settings(ctx, config)

    console.print(Panel.fit("Effective Configuration", style="bold magenta"))
    if config is not None:
        console.print(f"[dim]Config file: {config}[/dim]\n")

    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Key", style="yellow")
    table.add_column("Value", style="green")
    table.add_column("Section", style="dim")
    for section, cfg in (("model", model_cfg), ("train", train_cfg)):
        for key, value in cfg.model_dump().items():
            table.add_row(key, str(value), section)
    derived = {
        "compression_channels": model_cfg.compression_channels,
        "stage_sides": model_cfg.stage_sides,
        "supervision_side": model_cfg.supervision_side,
    }
    for key, value in derived.items():
        table.add_row(key, str(value), "derived")
    console.print(table)

    if write is not None:
        write.parent.mkdir(parents=True, exist_ok=True)
        write.write_text(dump_settings(model_cfg, train_cfg), encoding="utf-8")
        console.print(f"[green]OK[/green] Written to {write}")
    console.print("[green]OK[/green] Configuration is valid")


@app.command(name="count-params", context_settings=EXTRA_ARGS)
def count_parameters(
    ctx: typer.Context,
    config: Path | None = typer.Option(
        None, "--config", "-c", help="Flat `key = value` config file"
    ),
    variant: str = typer.Option("full", "--variant", show_default=True),
) -> None:
    """Show parameter counts per top-level module."""
    switches = _switches(variant)
    with exit_codes():
        model_cfg, _ = _settings(ctx, config)
        model = DualViewSegmenter(model_cfg, len(default_vocabulary()), switches)

    table = Table(
        title=f"Parameters ({variant})", show_header=True, header_style="bold magenta"
    )
    table.add_column("Module", style="cyan")
    table.add_column("Parameters", justify="right", style="yellow")
    for name, count in count_params_by_module(model).items():
        table.add_row(name, f"{count:,}")
    table.add_row("[bold]total[/bold]", f"[bold]{count_params(model):,}[/bold]")
    console.print(table)


@app.command()
def clear_cache() -> None:
    """Clear the synthetic sample cache from data/cache/."""
    cache = SampleCache()
    size_before = cache.get_cache_size()

    cache.clear_cache()
    cache.close()
    console.print(
        f"[green]OK[/green] Cache cleared ({size_before / 1024 / 1024:.2f} MB freed)"
    )


if __name__ == "__main__":
    app()
