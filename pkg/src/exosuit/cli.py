"""Command-line front end.

Flags use kPa, mm and degrees; everything is converted to SI on entry.
Exit codes: 0 success, 1 validation failure, 2 input error, 3 numerical
failure.
"""

from __future__ import annotations

import logging
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import controller as ctl
from . import design_explorer as dx
from . import emg_pipeline as emg
from . import fileio
from . import pneumatic_sim as ps
from . import torque_model as tm
from . import validation
from .config import load_config
from .errors import ConfigError, DomainError, ExosuitError, NumericalError
from .units import deg_to_rad, kpa_to_pa, mm_to_m, pa_to_kpa

EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class _Group(click.Group):
    """Maps toolkit exceptions onto exit codes for every subcommand."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except NumericalError as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(EXIT_NUMERICAL)
        except (DomainError, ConfigError, ExosuitError) as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(EXIT_INPUT)


def format_sig3(x: float) -> str:
    """Three significant figures, with ``0`` printed as ``0.00``."""
    if x == 0:
        return "0.00"
    decimals = max(0, 2 - int(math.floor(math.log10(abs(x)))))
    return f"{x:.{decimals}f}"


def _grid(text, name):
    try:
        parts = [float(v) for v in text.split(":")]
    except ValueError:
        raise click.BadParameter(f"{name}: expected start:stop:step or a single value") from None
    if len(parts) == 1:
        return [parts[0]]
    if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
        raise click.BadParameter(f"{name}: expected start:stop:step with step > 0")
    start, stop, step = parts
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 9) for k in range(count)]


def _write(path, text):
    if path is None or str(path) == "-":
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


@click.group(cls=_Group)
@click.option("-v", "--verbose", count=True, help="Log to stderr (-v info, -vv debug).")
def cli(verbose):
    """Zone-inflated fabric pneumatic exosuit toolkit."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(name)s %(levelname)s %(message)s")


@cli.command()
@click.option("--n", "n", type=int, default=4, show_default=True, help="Number of cylindrical actuators.")
@click.option("--d-mm", type=float, default=32.0, show_default=True, help="Actuator diameter.")
@click.option("--l-dz-mm", type=float, default=60.0, show_default=True, help="Inflation-deflation zone length.")
@click.option("--p-kpa", type=float, default=100.0, show_default=True, help="Gauge pressure.")
@click.option("--theta-deg", type=float, default=80.0, show_default=True, help="Bending angle.")
@click.option("--surface", type=click.Path(dir_okay=False), help="Write the torque surface CSV here ('-' for stdout).")
@click.option("--p-grid-kpa", default="0:100:10", show_default=True, help="Surface pressures start:stop:step.")
@click.option("--theta-grid-deg", default="0:80:10", show_default=True, help="Surface angles start:stop:step.")
@click.option("--measured", type=click.Path(exists=True, dir_okay=False), help="Measured CSV to compare against.")
def torque(n, d_mm, l_dz_mm, p_kpa, theta_deg, surface, p_grid_kpa, theta_grid_deg, measured):
    """Predict the output torque at one operating point."""
    geom = tm.ActuatorGeometry(n, mm_to_m(d_mm), mm_to_m(l_dz_mm))
    op = tm.OperatingPoint(kpa_to_pa(p_kpa), deg_to_rad(theta_deg))
    click.echo(f"{format_sig3(tm.predict_torque(geom, op))} N·m")
    if not tm.is_feasible(geom, op.theta):
        click.echo(f"warning: l_dz {l_dz_mm:g} mm does not exceed the minimum "
                   f"{tm.min_dz_length(geom.d, op.theta) * 1e3:.2f} mm at {theta_deg:g} deg", err=True)
    if measured:
        for pt, pred, err in tm.compare_measurements(geom, fileio.read_measured(measured)):
            click.echo(f"theta {math.degrees(pt.theta):g} deg, p {pa_to_kpa(pt.p):g} kPa: "
                       f"measured {pt.torque_measured:g}, predicted {pred:.3f} N·m, error {err:.1%}")
    if surface:
        ps_grid = [kpa_to_pa(v) for v in _grid(p_grid_kpa, "--p-grid-kpa")]
        th_grid = [deg_to_rad(v) for v in _grid(theta_grid_deg, "--theta-grid-deg")]
        _write(surface, fileio.surface_csv(ps_grid, th_grid, tm.torque_surface(geom, ps_grid, th_grid)))


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="Toolkit JSON config (bundled defaults if omitted).")
@click.option("--out", type=click.Path(dir_okay=False), help="Candidates CSV ('-' or omitted: stdout).")
@click.option("--front-out", type=click.Path(dir_okay=False), help="Pareto-front CSV.")
@click.option("--feasible-only", is_flag=True, help="Rank only candidates passing the constraints.")
def design(config_path, out, front_out, feasible_only):
    """Enumerate (n, d) candidates and mark the Pareto front."""
    cfg = load_config(config_path)
    cands = dx.enumerate_designs(cfg.design)
    pool = dx.filter_feasible(cands, cfg.design) if feasible_only else cands
    front = dx.pareto_front(pool) if pool else []
    _write(out, fileio.candidates_csv(pool, front))
    if front_out:
        _write(front_out, fileio.candidates_csv(front, front))


@cli.group(cls=_Group)
def sim():
    """Pneumatic fill/vent simulation and valve calibration."""


def _plant(config_path, valve_path, volume_m3):
    cfg = load_config(config_path)
    chamber = cfg.plant.chamber if volume_m3 is None else ps.Chamber(volume_m3, cfg.plant.chamber.temperature)
    valve = fileio.read_valve(valve_path) if valve_path else cfg.plant.valve
    return cfg, chamber, valve


_sim_options = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False)),
    click.option("--valve", "valve_path", type=click.Path(exists=True, dir_okay=False),
                 help="Calibrated valve JSON (overrides the config valve)."),
    click.option("--volume-m3", type=float, help="Chamber volume (default: from geometry)."),
    click.option("--dt-s", type=float, help="Integration step (default from config)."),
    click.option("--t-max-s", type=float, default=2.0, show_default=True),
    click.option("--out", type=click.Path(dir_okay=False), help="Trace CSV ('-' for stdout)."),
]


def _with_sim_options(f):
    for opt in reversed(_sim_options):
        f = opt(f)
    return f


@sim.command()
@click.option("--target-kpa", type=float, default=100.0, show_default=True, help="Regulated supply pressure.")
@click.option("--initial-kpa", type=float, default=0.0, show_default=True)
@click.option("--band", type=float, default=0.10, show_default=True)
@click.option("--report-response-time", is_flag=True, help="Print the time to settle within the band.")
@_with_sim_options
def fill(target_kpa, initial_kpa, band, report_response_time, config_path, valve_path, volume_m3, dt_s, t_max_s, out):
    """Fill the inflation-deflation zone from a regulated supply."""
    cfg, chamber, valve = _plant(config_path, valve_path, volume_m3)
    scenario = ps.FillScenario(kpa_to_pa(target_kpa), kpa_to_pa(initial_kpa), band)
    trace = ps.simulate_fill(scenario, chamber, valve, dt_s or cfg.plant.dt, t_max_s)
    if out:
        _write(out, fileio.trace_csv(trace))
    if report_response_time:
        t = ps.response_time(trace, scenario.supply_pressure, band)
        click.echo(f"response time: {t:.4f} s")


@sim.command()
@click.option("--initial-kpa", type=float, default=100.0, show_default=True)
@click.option("--sink-kpa", type=float, default=0.0, show_default=True, help="Sink gauge pressure (<0 for vacuum).")
@click.option("--report-kpa", type=float, help="Print the time to fall to this gauge pressure.")
@_with_sim_options
def vent(initial_kpa, sink_kpa, report_kpa, config_path, valve_path, volume_m3, dt_s, t_max_s, out):
    """Vent the inflation-deflation zone to atmosphere or a vacuum pump."""
    cfg, chamber, valve = _plant(config_path, valve_path, volume_m3)
    scenario = ps.VentScenario(kpa_to_pa(initial_kpa), kpa_to_pa(sink_kpa))
    trace = ps.simulate_vent(scenario, chamber, valve, dt_s or cfg.plant.dt, t_max_s)
    if out:
        _write(out, fileio.trace_csv(trace))
    if report_kpa is not None:
        click.echo(f"time to {report_kpa:g} kPa: {ps.crossing_time(trace, kpa_to_pa(report_kpa)):.4f} s")


@sim.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--anchor-kpa", type=float, help="Anchor target pressure (default from config).")
@click.option("--anchor-s", type=float, help="Anchor response time (default from config).")
@click.option("--volume-m3", type=float, help="Chamber volume (default: from geometry).")
@click.option("--out", type=click.Path(dir_okay=False), help="Valve JSON ('-' or omitted: stdout).")
def calibrate(config_path, anchor_kpa, anchor_s, volume_m3, out):
    """Fit the valve conductance to a measured response time."""
    cfg, chamber, valve = _plant(config_path, None, volume_m3)
    target = kpa_to_pa(anchor_kpa) if anchor_kpa is not None else cfg.plant.anchor_target
    t_anchor = anchor_s if anchor_s is not None else cfg.plant.anchor_time
    fitted = ps.calibrate_conductance(target, t_anchor, chamber, valve, dt=cfg.plant.dt)
    _write(out, fileio.valve_json(fitted))


@cli.group(cls=_Group)
def ctrl():
    """Sit-to-stand controller replay."""


@ctrl.command("run")
@click.argument("trace_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="Command-log CSV ('-' or omitted: stdout).")
def ctrl_run(trace_path, config_path, out):
    """Replay an IMU trace (t_s,thigh_angle_deg) through the controller."""
    cfg = load_config(config_path)
    entries = ctl.run_session(fileio.read_imu(trace_path), cfg.controller)
    _write(out, ctl.format_log(entries))


@cli.group("emg", cls=_Group)
def emg_group():
    """Surface-EMG analysis."""


@emg_group.command("analyze")
@click.option("--subject", "subjects", nargs=2, multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False), metavar="WITHOUT.csv WITH.csv",
              help="One subject's recordings without and with the exosuit (repeatable).")
@click.option("--quest", "quest_path", type=click.Path(exists=True, dir_okay=False),
              help="QUEST CSV, one respondent per row.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--zero-phase", is_flag=True, default=None, help="Forward-backward filtering.")
@click.option("--out", type=click.Path(dir_okay=False), help="Report JSON path.")
def emg_analyze(subjects, quest_path, config_path, zero_phase, out):
    """Per-subject percent reduction of rectified sEMG, averaged across subjects."""
    import json

    cfg = load_config(config_path)
    spec = cfg.emg
    if zero_phase:
        spec = emg.FilterSpec(spec.order, spec.low_cut, spec.high_cut, True)
    pairs = []
    for without_path, with_path in subjects:
        pairs.append((fileio.read_emg(without_path, cfg.emg_default_fs),
                      fileio.read_emg(with_path, cfg.emg_default_fs)))
    quest = fileio.read_quest(quest_path) if quest_path else None
    report = emg.analyze_subjects(pairs, spec, quest)
    if out:
        _write(out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    click.echo(emg.summary_text(report), nl=False)


@cli.group(cls=_Group)
def validate():
    """Self-checks against reference values."""


@validate.command("paper")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable report.")
@click.option("--perturb-torque", type=float, default=1.0, show_default=True,
              help="Scale the torque-law prefactor (negative control).")
@click.pass_context
def validate_paper(ctx, as_json, perturb_torque):
    """Run every reference check; exit 1 if any fails."""
    report = validation.run_all(load_config(), torque_factor=perturb_torque)
    click.echo(report.to_json() if as_json else report.table(), nl=False)
    if not report.passed:
        ctx.exit(EXIT_VALIDATION)


def main(argv=None):
    cli.main(args=argv, prog_name="exosuit")


if __name__ == "__main__":
    main()
