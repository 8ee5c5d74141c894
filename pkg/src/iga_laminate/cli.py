"""Command line entry point ``iga-laminate``."""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .analysis import RunResult, run_problem, write_csv, write_json, write_outputs, archive
from .assembly import ConfigError
from .benchmarks import BENCHMARKS, run_benchmark
from .config import ProblemConfig, config_hash, json_schema, load_config, parse_config

EXIT_SCHEMA = 2
EXIT_NONCONVERGENCE = 3
EXIT_BENCH_FAIL = 1


def _load(path: str) -> ProblemConfig:
    try:
        return load_config(path)
    except ConfigError as exc:
        click.echo("config error: %s" % exc, err=True)
        sys.exit(EXIT_SCHEMA)


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter("expected a comma separated list of numbers")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log solver progress.")
def main(verbose: bool) -> None:
    """Nonlinear isogeometric analysis of laminated composite plates."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", default="results", show_default=True,
              type=click.Path(file_okay=False), help="Output directory.")
def run(config: str, out_dir: str) -> None:
    """Run the analysis described by CONFIG (YAML or JSON)."""
    cfg = _load(config)
    res = run_problem(cfg)
    write_outputs(Path(out_dir), cfg, res)
    click.echo("%d rows written to %s" % (len(res.rows), out_dir))
    if not res.complete:
        click.echo("nonconvergence: %s" % res.message, err=True)
        sys.exit(EXIT_NONCONVERGENCE)


@main.command()
@click.argument("name", type=click.Choice(BENCHMARKS))
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False),
              help="Output directory [default: bench-NAME].")
@click.option("--mesh", type=int, default=None, help="Elements per direction (default 11).")
def bench(name: str, out_dir: str | None, mesh: int | None) -> None:
    """Run a reference scenario and compare against published values."""
    res = run_benchmark(name, mesh)
    out = Path(out_dir or "bench-%s" % name)
    out.mkdir(parents=True, exist_ok=True)
    report = res.report()
    (out / "report.txt").write_text(report, encoding="utf-8")
    write_csv(out / "results.csv", res.columns, res.rows)
    write_json(out / "results.json", {
        "benchmark": name, "mesh": mesh or 11, "complete": res.complete, "message": res.message,
        "passed": res.passed, "columns": list(res.columns),
        "rows": [list(r) for r in res.rows], "runs": res.runs,
        "checks": [{"case": c.case, "label": c.label, "computed": c.computed,
                    "expected": c.expected, "tolerance": c.tol, "passed": c.passed}
                   for c in res.checks],
    })
    click.echo(report, nl=False)
    if not res.complete:
        sys.exit(EXIT_NONCONVERGENCE)
    if not res.passed:
        sys.exit(EXIT_BENCH_FAIL)


def _sweep(cfg: ProblemConfig, variants: dict, out_dir: str) -> None:
    combined = RunResult(())
    runs = {}
    for label, layup in variants.items():
        data = cfg.model_dump(mode="json")
        data["layup"] = layup
        data["name"] = "%s-%s" % (cfg.name, label)
        try:
            vcfg = parse_config(data)
        except ConfigError as exc:
            click.echo("config error: %s" % exc, err=True)
            sys.exit(EXIT_SCHEMA)
        res = run_problem(vcfg)
        combined.columns = ("variant",) + tuple(res.columns)
        combined.rows += [(label,) + tuple(r) for r in res.rows]
        combined.iterations += res.iterations
        runs[label] = {"config_hash": config_hash(vcfg), "iterations": res.iterations,
                       "complete": res.complete, "message": res.message}
        if not res.complete:
            combined.complete = False
            combined.message = "%s: %s" % (label, res.message)
            break
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "results.csv", combined.columns, combined.rows)
    data = archive(cfg, RunResult(combined.columns, [], combined.iterations, combined.complete,
                                  combined.message), {"variants": runs})
    data["rows"] = [list(r) for r in combined.rows]
    write_json(out / "results.json", data)
    click.echo("%d variants written to %s" % (len(runs), out_dir))
    if not combined.complete:
        click.echo("nonconvergence: %s" % combined.message, err=True)
        sys.exit(EXIT_NONCONVERGENCE)


def _base_material(cfg: ProblemConfig) -> str:
    return cfg.layup.material_names()[0]


@main.command("sweep-angle")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--angles", default="0,15,30,45", show_default=True,
              help="Comma separated fiber angles in degrees.")
@click.option("--out", "out_dir", default="sweep-angle", show_default=True,
              type=click.Path(file_okay=False))
def sweep_angle(config: str, angles: str, out_dir: str) -> None:
    """Run CONFIG with angle-ply layups [-t/t/-t/t] for each angle t."""
    cfg = _load(config)
    mat = _base_material(cfg)
    variants = {"theta=%g" % t: {"angles": [-t, t, -t, t], "materials": mat}
                for t in _floats(angles)}
    _sweep(cfg, variants, out_dir)


@main.command("sweep-layers")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--counts", default="1,2,3,4", show_default=True,
              help="Comma separated repeat counts N for [0/90]_N.")
@click.option("--out", "out_dir", default="sweep-layers", show_default=True,
              type=click.Path(file_okay=False))
def sweep_layers(config: str, counts: str, out_dir: str) -> None:
    """Run CONFIG with cross-ply layups [0/90]_N at constant total thickness."""
    cfg = _load(config)
    mat = _base_material(cfg)
    ns = [int(n) for n in _floats(counts)]
    if any(n < 1 for n in ns):
        raise click.BadParameter("counts must be positive", param_hint="--counts")
    variants = {"N=%d" % n: {"angles": [0.0, 90.0] * n, "materials": mat} for n in ns}
    _sweep(cfg, variants, out_dir)


@main.command()
def schema() -> None:
    """Print the configuration JSON schema."""
    click.echo(json.dumps(json_schema(), indent=2, sort_keys=True))


if __name__ == "__main__":  # pragma: no cover
    main()
