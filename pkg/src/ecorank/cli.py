"""Command-line interface: ingest, rank, eval, sweep, synth.

Every command writes a run manifest (resolved parameters, input digests,
toolkit version, seeds) next to its primary output, so a run can be
reproduced byte-for-byte from the manifest plus the input files.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
degeneracy.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click

from . import __version__
from .core import (
    COUNTRY,
    PRODUCT,
    MethodConfig,
    read_matrix,
    sort_matrix,
    write_matrix,
    write_pbm,
)
from .errors import (
    DegenerateInput,
    DegenerateScores,
    EcorankError,
)
from .evaluation import (
    EvaluationReport,
    correlation_report,
    extinction_area_tie_averaged,
    extinction_curve,
    extinction_report,
    noise_robustness,
    report_stem,
    volatility,
)
from .ingest import (
    CleaningConfig,
    cleaning_report_text,
    clean_dataset,
    compute_rca,
    parse_trade_records,
    read_cleaning_config,
    read_label_list,
    restrict_countries,
    threshold_to_matrix,
)
from .ranking import (
    eci,
    mr_iterate,
    rank_matrix,
    read_scores,
    write_ranking,
    write_scores,
)
from .sweep import parse_grid, run_sweep, write_sweep_table
from .synth import nested_with_noise, perfectly_nested, random_bipartite


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    primary_output: Path,
    subcommand: str,
    parameters: dict,
    inputs: list[Path],
    outputs: list[Path],
    seeds: list[int],
) -> Path:
    manifest = {
        "tool": "ecorank",
        "version": __version__,
        "subcommand": subcommand,
        "parameters": parameters,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "rng_seeds": seeds,
    }
    path = Path(str(primary_output) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _method_config(method, order, gamma, iters) -> MethodConfig:
    """Validate flag combinations before any computation."""
    if method == "mr":
        if gamma is not None:
            raise click.UsageError("--gamma applies only to --method fcm")
        if order is None:
            raise click.UsageError("--method mr requires --order")
        if order < 0 or order % 2 != 0:
            raise click.UsageError("--order must be an even integer >= 0")
        return MethodConfig.mr(order)
    if order is not None:
        raise click.UsageError("--order applies only to --method mr")
    if gamma is None:
        raise click.UsageError("--method fcm requires --gamma")
    if gamma <= 0:
        raise click.UsageError("--gamma must be positive")
    return MethodConfig.fcm(gamma, iters)


def method_options(func):
    func = click.option("--iters", type=click.IntRange(min=1), default=1000, show_default=True,
                        help="FCM iteration count.")(func)
    func = click.option("--gamma", type=float, default=None, help="FCM extremality parameter.")(func)
    func = click.option("--order", type=int, default=None, help="MR iteration order (even).")(func)
    func = click.option("--method", type=click.Choice(["mr", "fcm"]), required=True)(func)
    return func


@click.group()
@click.version_option(__version__, prog_name="ecorank")
def cli():
    """Country-product network ranking and evaluation toolkit."""


# -- synth --------------------------------------------------------------------


@cli.command("synth")
@click.option("--nested", type=int, nargs=2, default=None,
              help="Perfectly nested N-countries M-products matrix.")
@click.option("--random", "random_dims", type=int, nargs=2, default=None,
              help="Bernoulli random N M matrix (see --fill-prob).")
@click.option("--fill-prob", type=click.FloatRange(0, 1), default=0.5, show_default=True)
@click.option("--noise", type=click.FloatRange(0, 1), default=0.0, show_default=True,
              help="Fraction of cells to flip after generation.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--year", type=int, default=None)
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), required=True)
def cmd_synth(nested, random_dims, fill_prob, noise, seed, year, output):
    """Generate a synthetic matrix file."""
    if (nested is None) == (random_dims is None):
        raise click.UsageError("choose exactly one of --nested or --random")
    if nested is not None:
        n, m = nested
        if n < 1 or m < 1:
            raise click.UsageError("--nested dimensions must be >= 1")
        matrix = nested_with_noise(n, m, noise, seed, year) if noise > 0 else perfectly_nested(n, m, year)
        profile = {"profile": "nested", "n": n, "m": m, "noise": noise}
    else:
        n, m = random_dims
        if n < 1 or m < 1:
            raise click.UsageError("--random dimensions must be >= 1")
        matrix = random_bipartite(n, m, fill_prob, seed, year)
        profile = {"profile": "random", "n": n, "m": m, "fill_prob": fill_prob}
    write_matrix(matrix, output)
    _write_manifest(
        output,
        "synth",
        {**profile, "seed": seed, "year": year, "output": str(output)},
        inputs=[],
        outputs=[output],
        seeds=[seed],
    )
    click.echo(f"wrote {output} ({matrix.n_countries}x{matrix.n_products}, "
               f"{int(matrix.entries.sum())} links)")


# -- ingest -------------------------------------------------------------------


@cli.command("ingest")
@click.argument("trade_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--year", type=int, required=True, help="Year to extract.")
@click.option("--cleaning-config", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Cleaning rules file.")
@click.option("--core-countries", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Keep only these exporters (one label per line).")
@click.option("--threshold", type=float, default=1.0, show_default=True,
              help="RCA link threshold (inclusive).")
@click.option("--lenient", is_flag=True, help="Collect malformed lines instead of failing.")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False, path_type=Path),
              default=None, help="Cleaning report path (default: <output>.cleaning.txt).")
def cmd_ingest(trade_file, year, cleaning_config, core_countries, threshold, lenient, output, report_path):
    """Build a matrix file from a tab-separated trade file."""
    if threshold <= 0:
        raise click.UsageError("--threshold must be positive")
    parsed = parse_trade_records(trade_file, strict=not lenient)
    for issue in parsed.issues:
        click.echo(f"skipped line {issue.line}: {issue.message}", err=True)
    config = read_cleaning_config(cleaning_config) if cleaning_config else CleaningConfig()
    records, cleaning = clean_dataset(parsed.records, config)
    core_list = None
    if core_countries:
        core_list = read_label_list(core_countries)
        records = restrict_countries(records, core_list)
    year_records = tuple(r for r in records if r.year == year)
    if config.country_whitelist is not None:
        countries = sorted(config.country_whitelist)
        if core_list is not None:
            countries = [c for c in countries if c in set(core_list)]
    else:
        countries = sorted({r.exporter for r in year_records})
    products = sorted({r.product for r in year_records})
    if not countries or not products:
        raise EcorankError(f"no records left for year {year} after cleaning")
    rca, rca_report = compute_rca(year_records, countries, products)
    matrix, dropped = threshold_to_matrix(rca, threshold)
    write_matrix(matrix, output)
    report_path = report_path or Path(str(output) + ".cleaning.txt")
    report_path.write_text(cleaning_report_text(cleaning, rca_report, dropped), encoding="utf-8")
    inputs = [trade_file] + ([cleaning_config] if cleaning_config else []) \
        + ([core_countries] if core_countries else [])
    _write_manifest(
        output,
        "ingest",
        {
            "trade_file": str(trade_file),
            "year": year,
            "cleaning_config": str(cleaning_config) if cleaning_config else None,
            "core_countries": str(core_countries) if core_countries else None,
            "threshold": threshold,
            "lenient": lenient,
            "output": str(output),
            "report": str(report_path),
        },
        inputs=inputs,
        outputs=[output, report_path],
        seeds=[],
    )
    click.echo(
        f"wrote {output} ({matrix.n_countries} countries x {matrix.n_products} products, "
        f"year={year}); cleaning report: {report_path}"
    )


# -- rank ---------------------------------------------------------------------


@cli.command("rank")
@click.argument("matrix_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@method_options
@click.option("--standardize", is_flag=True,
              help="Also write standardized MR country scores (zero mean, unit std).")
@click.option("--sorted-matrix", "sorted_matrix_path",
              type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the ranking-sorted matrix as a PBM bitmap here.")
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render a PNG next to the sorted-matrix bitmap.")
@click.option("-o", "--output-prefix", type=click.Path(path_type=Path), required=True,
              help="Prefix for score/ranking files.")
def cmd_rank(matrix_file, method, order, gamma, iters, standardize, sorted_matrix_path,
             figures, output_prefix):
    """Rank both sides of a matrix and write score and ranking files."""
    config = _method_config(method, order, gamma, iters)
    if standardize and method != "mr":
        raise click.UsageError("--standardize applies only to --method mr")
    matrix = read_matrix(matrix_file)
    result = rank_matrix(matrix, config)
    outputs = []
    for side, scores, ranking in (
        (COUNTRY, result.country_scores, result.country_ranking),
        (PRODUCT, result.product_scores, result.product_ranking),
    ):
        outputs.append(write_scores(scores, ranking.direction,
                                    Path(f"{output_prefix}.{side}.scores.tsv")))
        outputs.append(write_ranking(ranking, Path(f"{output_prefix}.{side}.ranking.tsv")))
    if standardize:
        trajectory = mr_iterate(matrix, config.order)
        standardized = eci(trajectory, config.order)
        outputs.append(write_scores(standardized, result.country_ranking.direction,
                                    Path(f"{output_prefix}.eci.scores.tsv")))
    if sorted_matrix_path:
        ordered = sort_matrix(matrix, result.country_ranking, result.product_ranking)
        outputs.append(write_pbm(ordered, sorted_matrix_path))
        if figures:
            from .figures import save_matrix_figure

            png = Path(str(sorted_matrix_path) + ".png")
            outputs.append(save_matrix_figure(ordered, png, title=config.method_tag()))
    if result.underflow_flag:
        click.echo("warning: some scores underflowed to zero; zero tail is one tie group", err=True)
    _write_manifest(
        Path(str(output_prefix)),
        "rank",
        {
            "matrix_file": str(matrix_file),
            "method": method,
            "order": order,
            "gamma": gamma,
            "iters": iters if method == "fcm" else None,
            "standardize": standardize,
            "sorted_matrix": str(sorted_matrix_path) if sorted_matrix_path else None,
            "figures": figures,
            "output_prefix": str(output_prefix),
        },
        inputs=[matrix_file],
        outputs=outputs,
        seeds=[],
    )
    click.echo(f"wrote {len(outputs)} files with prefix {output_prefix}")


# -- eval ---------------------------------------------------------------------


@cli.group("eval")
def cmd_eval():
    """Evaluate rankings: extinction, correlation, noise, volatility."""


def _finish_report(report: EvaluationReport, stem: Path, figures: bool,
                   curves=None) -> list[Path]:
    table_path, kv_path = report.write(Path(str(stem) + ".report"))
    outputs = [table_path, kv_path]
    if figures:
        from .figures import save_extinction_figure, save_report_figure

        png = Path(str(stem) + ".png")
        if curves:
            outputs.append(save_extinction_figure(curves, png, title=report.method_tag))
        else:
            outputs.append(save_report_figure(report, png))
    return outputs


def _echo_summary(report: EvaluationReport) -> None:
    for key, value in report.summary:
        click.echo(f"{key} = {value}")


_SIDE_CHOICE = click.Choice(["countries", "products", "both"])
_SIDE_OF = {"countries": COUNTRY, "products": PRODUCT}


@cmd_eval.command("extinction")
@click.argument("matrix_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--method", type=click.Choice(["mr", "fcm"]), default=None)
@click.option("--order", type=int, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--iters", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--scores", "score_files", multiple=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Use precomputed score files instead of --method.")
@click.option("--side", type=_SIDE_CHOICE, default="both", show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=100, show_default=True,
              help="Randomized tie orders to average over.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--outdir", type=click.Path(file_okay=False, path_type=Path), default=Path("."))
@click.option("-o", "--output", "stem", type=click.Path(path_type=Path), default=None,
              help="Output stem (default: conventional report name in --outdir).")
@click.option("--figures/--no-figures", default=True, show_default=True)
def cmd_eval_extinction(matrix_file, method, order, gamma, iters, score_files, side,
                        trials, seed, outdir, stem, figures):
    """Tie-averaged extinction areas (countries removed best-first, products worst-first)."""
    matrix = read_matrix(matrix_file)
    outdir.mkdir(parents=True, exist_ok=True)
    if score_files and method:
        raise click.UsageError("give either --scores or --method, not both")
    if score_files:
        rows, summary, curves = [], [], {}
        for file in score_files:
            scores, direction = read_scores(file)
            area = extinction_area_tie_averaged(
                matrix, scores, scores.side, trials=trials, seed=seed, direction=direction)
            from .core import ranking_from_scores

            curves[scores.side] = extinction_curve(
                matrix, ranking_from_scores(scores, direction), scores.side)
            rows.append((scores.side, trials, area))
            summary.append(("E_C" if scores.side == COUNTRY else "E_P", area))
        report = EvaluationReport(
            kind="extinction",
            method_tag=";".join(read_scores(f)[0].method_tag for f in score_files),
            parameters=(("trials", str(trials)), ("seed", str(seed))),
            columns=("side", "trials", "area"),
            rows=tuple(rows),
            summary=tuple(summary),
        )
        default_stem = f"extinction_scores-{score_files[0].stem}_trials{trials}_seed{seed}"
        inputs = [matrix_file, *score_files]
    else:
        config = _method_config(method or "", order, gamma, iters) if method else None
        if config is None:
            raise click.UsageError("need --method or --scores")
        sides = (COUNTRY, PRODUCT) if side == "both" else (_SIDE_OF[side],)
        report, curves = extinction_report(matrix, config, sides, trials=trials, seed=seed)
        default_stem = report_stem("extinction", config, f"trials{trials}_seed{seed}")
        inputs = [matrix_file]
    stem = stem if stem is not None else outdir / default_stem
    outputs = _finish_report(report, stem, figures, curves=curves)
    _write_manifest(
        stem, "eval extinction",
        {
            "matrix_file": str(matrix_file),
            "method": method, "order": order, "gamma": gamma, "iters": iters,
            "scores": [str(f) for f in score_files],
            "side": side, "trials": trials, "seed": seed, "stem": str(stem),
            "figures": figures,
        },
        inputs=inputs, outputs=outputs, seeds=[seed],
    )
    _echo_summary(report)


@cmd_eval.command("correlation")
@click.argument("matrix_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@method_options
@click.option("--outdir", type=click.Path(file_okay=False, path_type=Path), default=Path("."))
@click.option("-o", "--output", "stem", type=click.Path(path_type=Path), default=None)
@click.option("--figures/--no-figures", default=True, show_default=True)
def cmd_eval_correlation(matrix_file, method, order, gamma, iters, outdir, stem, figures):
    """Spearman correlation between each side's scores and its degree."""
    config = _method_config(method, order, gamma, iters)
    matrix = read_matrix(matrix_file)
    outdir.mkdir(parents=True, exist_ok=True)
    report = correlation_report(matrix, config)
    stem = stem if stem is not None else outdir / report_stem("correlation", config)
    outputs = _finish_report(report, stem, figures)
    _write_manifest(
        stem, "eval correlation",
        {"matrix_file": str(matrix_file), "method": method, "order": order,
         "gamma": gamma, "iters": iters, "stem": str(stem), "figures": figures},
        inputs=[matrix_file], outputs=outputs, seeds=[],
    )
    _echo_summary(report)


@cmd_eval.command("noise")
@click.argument("matrix_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@method_options
@click.option("--eta", default="0.01,0.05,0.1", show_default=True,
              help="Comma-separated flip fractions.")
@click.option("--seeds", "seed_count", type=click.IntRange(min=1), default=10, show_default=True,
              help="Number of random repetitions per eta.")
@click.option("--seed", type=int, default=0, show_default=True, help="Base seed.")
@click.option("--outdir", type=click.Path(file_okay=False, path_type=Path), default=Path("."))
@click.option("-o", "--output", "stem", type=click.Path(path_type=Path), default=None)
@click.option("--figures/--no-figures", default=True, show_default=True)
def cmd_eval_noise(matrix_file, method, order, gamma, iters, eta, seed_count, seed,
                   outdir, stem, figures):
    """Ranking robustness under random cell flips."""
    config = _method_config(method, order, gamma, iters)
    try:
        etas = tuple(float(e) for e in eta.split(",") if e.strip())
    except ValueError:
        raise click.UsageError(f"bad --eta list {eta!r}") from None
    if not etas or any(not 0 <= e <= 1 for e in etas):
        raise click.UsageError("--eta values must lie in [0, 1]")
    matrix = read_matrix(matrix_file)
    outdir.mkdir(parents=True, exist_ok=True)
    seeds = [seed + i for i in range(seed_count)]
    report = noise_robustness(matrix, config, etas, seeds)
    stem = stem if stem is not None else outdir / report_stem(
        "noise", config, f"seeds{seed_count}_seed{seed}")
    outputs = _finish_report(report, stem, figures)
    _write_manifest(
        stem, "eval noise",
        {"matrix_file": str(matrix_file), "method": method, "order": order,
         "gamma": gamma, "iters": iters, "eta": list(etas), "seeds": seed_count,
         "seed": seed, "stem": str(stem), "figures": figures},
        inputs=[matrix_file], outputs=outputs, seeds=seeds,
    )
    _echo_summary(report)


@cmd_eval.command("volatility")
@click.option("--year-a", "file_a", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="Matrix file for the first year.")
@click.option("--year-b", "file_b", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="Matrix file for the following year.")
@method_options
@click.option("--outdir", type=click.Path(file_okay=False, path_type=Path), default=Path("."))
@click.option("-o", "--output", "stem", type=click.Path(path_type=Path), default=None)
@click.option("--figures/--no-figures", default=True, show_default=True)
def cmd_eval_volatility(file_a, file_b, method, order, gamma, iters, outdir, stem, figures):
    """Correlation between the rankings of two consecutive years."""
    config = _method_config(method, order, gamma, iters)
    matrix_a = read_matrix(file_a)
    matrix_b = read_matrix(file_b)
    outdir.mkdir(parents=True, exist_ok=True)
    report = volatility(matrix_a, matrix_b, config)
    stem = stem if stem is not None else outdir / report_stem("volatility", config)
    outputs = _finish_report(report, stem, figures)
    _write_manifest(
        stem, "eval volatility",
        {"year_a": str(file_a), "year_b": str(file_b), "method": method, "order": order,
         "gamma": gamma, "iters": iters, "stem": str(stem), "figures": figures},
        inputs=[file_a, file_b], outputs=outputs, seeds=[],
    )
    _echo_summary(report)


# -- sweep ----------------------------------------------------------------------


@cli.command("sweep")
@click.argument("matrix_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--method", type=click.Choice(["mr", "fcm"]), required=True)
@click.option("--grid", required=True,
              help="Parameter grid: 'a,b,c' or 'start:stop:step' (gamma for fcm, order for mr).")
@click.option("--experiments", default="extinction,correlation", show_default=True,
              help="Comma-separated subset of extinction,correlation,noise,volatility.")
@click.option("--matrix-b", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Second matrix (required for volatility).")
@click.option("--iters", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--etas", default="0.01,0.05,0.1", show_default=True)
@click.option("--noise-seeds", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
def cmd_sweep(matrix_file, method, grid, experiments, matrix_b, iters, trials, seed,
              etas, noise_seeds, output, figures):
    """Run experiments over a parameter grid; emit a long-format table."""
    try:
        grid_values = parse_grid(grid, method)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    experiment_list = tuple(e.strip() for e in experiments.split(",") if e.strip())
    if not experiment_list:
        raise click.UsageError("--experiments must name at least one experiment")
    try:
        eta_values = tuple(float(e) for e in etas.split(",") if e.strip())
    except ValueError:
        raise click.UsageError(f"bad --etas list {etas!r}") from None
    matrix = read_matrix(matrix_file)
    second = read_matrix(matrix_b) if matrix_b else None
    try:
        rows = run_sweep(
            matrix, method, grid_values, experiment_list,
            iterations=iters, trials=trials, seed=seed,
            etas=eta_values, noise_seeds=noise_seeds, matrix_b=second,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    write_sweep_table(rows, output)
    outputs = [output]
    if figures:
        from .figures import save_sweep_figure

        base = output.with_suffix("") if output.suffix else output
        for experiment in experiment_list:
            png = Path(f"{base}_{experiment}.png")
            outputs.append(save_sweep_figure(rows, experiment, png))
    _write_manifest(
        output, "sweep",
        {"matrix_file": str(matrix_file), "method": method, "grid": list(grid_values),
         "experiments": list(experiment_list), "matrix_b": str(matrix_b) if matrix_b else None,
         "iters": iters, "trials": trials, "seed": seed, "etas": list(eta_values),
         "noise_seeds": noise_seeds, "output": str(output), "figures": figures},
        inputs=[matrix_file] + ([matrix_b] if matrix_b else []),
        outputs=outputs, seeds=[seed],
    )
    click.echo(f"wrote {len(rows)} rows to {output}")


def main(argv=None) -> int:
    """Entry point with the documented exit-code discipline."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except (DegenerateScores, DegenerateInput) as exc:
        click.echo(f"degenerate: {exc}", err=True)
        return 3
    except EcorankError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
