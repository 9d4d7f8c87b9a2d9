"""Command-line front end.

Exit status: 0 success, 1 a run, sweep point or check failed, 2 bad configuration.
"""
from __future__ import annotations

import json
import sys

import click

from .scenarios import config as cfgmod
from .scenarios import runner, verify as verifymod
from .scenarios.units import UnitError, parse_quantity

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2


def _load(source):
    try:
        return cfgmod.load_config(source)
    except cfgmod.ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Inverse-engineered control of open quantum systems."""


@main.command("list-scenarios")
def list_scenarios():
    """List the bundled scenarios."""
    for name in cfgmod.bundled_names():
        cfg = cfgmod.load_config(name)
        kind = f"{cfg.system}/{cfg.protocol}"
        click.echo(f"{name:26s} {kind:24s} {cfg.description}")


@main.command()
@click.argument("config")
@click.option("--out", "out_dir", envvar=runner.OUTPUT_ENV, type=click.Path(file_okay=False),
              help=f"Output directory (default ${runner.OUTPUT_ENV} or ./mise-output).")
@click.option("--svg/--no-svg", default=None, help="Also write an SVG plot.")
def run(config, out_dir, svg):
    """Synthesize and propagate one scenario (file path or bundled name)."""
    cfg = _load(config)
    try:
        report = runner.run(cfg, out_dir=out_dir, svg=svg)
    except Exception as exc:
        click.echo(f"{cfg.name}: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_CHECK)
    s = report.summary
    click.echo(f"{cfg.name}: final target population {s['final_target_population']:.10f}, "
               f"final fidelity {s['final_fidelity']:.10f}")
    if s.get("max_invariant_residual") is not None:
        click.echo(f"  max invariant residual {s['max_invariant_residual']:.2e}")
    click.echo(f"  wrote {report.csv_path}")
    if report.svg_path:
        click.echo(f"  wrote {report.svg_path}")


@main.command()
@click.argument("config")
@click.option("--param", required=True, help="Parameter to vary (e.g. tau, omega, t_f, gamma_tau, gamma_dg).")
@click.option("--values", required=True, help="Comma-separated values, units allowed: '1 us,5 us'.")
@click.option("--out", "out_dir", envvar=runner.OUTPUT_ENV, type=click.Path(file_okay=False))
@click.option("--workers", type=int, default=None, help="Worker processes (default: CPU count).")
def sweep(config, param, values, out_dir, workers):
    """Run a scenario once per value of one parameter."""
    cfg = _load(config)
    try:
        kind = cfg.parameter_kind(param)
        vals = [parse_quantity(v.strip(), None if kind == "dimensionless" else kind,
                               cfg.frequency_convention) for v in values.split(",") if v.strip()]
    except (cfgmod.ConfigError, UnitError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    report = runner.sweep(cfg, param, vals, out_dir=out_dir, workers=workers)
    for row in report.rows:
        v, status, p, f = row[:4]
        if status == "ok":
            click.echo(f"{param}={v:.6g}: 1-P = {1 - p:.3e}, fidelity {f:.10f}")
        else:
            click.echo(f"{param}={v:.6g}: {row[-1]}")
    click.echo(f"wrote {report.csv_path}")
    if report.failures:
        sys.exit(EXIT_CHECK)


@main.command()
@click.option("--tight", is_flag=True, help="Also test every check at 1e-10.")
@click.option("--inject", type=click.Choice(verifymod.MUTATIONS), default=None,
              help="Corrupt the Liouvillian first (mutation probe).")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def verify(tight, inject, as_json):
    """Run the built-in property checks."""
    results = verifymod.run_checks(tight=tight, inject=inject)
    if as_json:
        click.echo(json.dumps([r.as_dict() for r in results], indent=2))
    else:
        for r in results:
            flag = "PASS" if r.passed else "FAIL"
            extra = "  (tolerance limited)" if r.tolerance_limited else ""
            click.echo(f"{flag} {r.name:40s} {r.value:.3e} <= {r.tolerance:.0e}{extra}")
    if not all(r.passed for r in results):
        sys.exit(EXIT_CHECK)


if __name__ == "__main__":
    main()
