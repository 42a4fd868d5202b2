"""Command line entry point: launch, config, motion, bag, lut and sim."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import yaml

from .config import ConfigServer
from .launcher import (CONFIG_ROOT_ENV, LaunchError, System, config_root,
                       data_dir, declare_default_params, parse_launch,
                       resolve_resource)
from .sim import load_scenario


@click.group()
def main():
    """Desk-scale humanoid soccer stack.

    The SOCCERBOT_CONFIG_ROOT environment variable points resource lookup
    (configs, scenarios, motions) at a directory of your own before the
    packaged data directory is searched.
    """


# -- launch ------------------------------------------------------------


@main.command()
@click.argument("launch_file", type=click.Path(exists=True))
@click.option("--duration", type=float, default=None,
              help="Override the scenario duration in simulated seconds.")
@click.option("--seed", type=int, default=None, help="Override the seed.")
@click.option("--bag", "bag_file", type=click.Path(), default=None,
              help="Record the configured topics into this bag file.")
@click.option("--report", "report_dir", type=click.Path(), default=None,
              help="Write CSV history and figures into this directory.")
@click.option("--lenient", is_flag=True,
              help="Warn about unknown launch keys instead of failing.")
def launch(launch_file, duration, seed, bag_file, report_dir, lenient):
    """Run a launch file headlessly against the simulated world."""
    try:
        spec = parse_launch(launch_file, strict=not lenient)
    except LaunchError as exc:
        raise click.ClickException(str(exc))
    if seed is not None:
        spec.seed = seed
    _run_system(spec, duration, bag_file, report_dir)


def _run_system(spec, duration, bag_file, report_dir):
    try:
        system = System(spec).start()
    except LaunchError as exc:
        raise click.ClickException(str(exc))
    try:
        result = system.run_headless(duration=duration, bag_file=bag_file)
        history = list(system.history)
    finally:
        system.stop()
    click.echo(json.dumps({k: v for k, v in result.items()}, default=str))
    if report_dir is not None:
        from .report import write_report
        paths = write_report(history, result, report_dir)
        for kind, path in sorted(paths.items()):
            click.echo(f"report {kind}: {path}")
    sys.exit(0 if result["success"] else 1)


# -- config ------------------------------------------------------------


def _flatten(prefix: str, node: dict, out: dict) -> None:
    for key, value in node.items():
        path = f"{prefix}/{key}"
        if isinstance(value, dict):
            _flatten(path, value, out)
        else:
            out[path] = value


def _load_tree(filename) -> dict:
    with open(filename) as fh:
        tree = yaml.safe_load(fh) or {}
    if not isinstance(tree, dict):
        raise click.ClickException(f"{filename}: not a mapping")
    return tree


@main.group()
def config():
    """Inspect and edit parameter files."""


@config.command("get")
@click.argument("filename", type=click.Path(exists=True))
@click.argument("path")
def config_get(filename, path):
    """Print one parameter value from a config file."""
    flat: dict = {}
    _flatten("", _load_tree(filename), flat)
    if path not in flat:
        raise click.ClickException(f"{path}: not in {filename}")
    click.echo(json.dumps(flat[path]))


@config.command("set")
@click.argument("filename", type=click.Path(exists=True))
@click.argument("path")
@click.argument("value")
def config_set(filename, path, value):
    """Set a parameter in a config file (clamped to declared limits)."""
    server = ConfigServer()
    declare_default_params(server)
    server.load(filename)
    try:
        parsed = yaml.safe_load(value)
        applied = server.set(path, parsed)
    except Exception as exc:
        raise click.ClickException(f"{path}: {exc}")
    server.save(filename)
    server.shutdown()
    click.echo(f"{path} = {applied}")


@config.command("load")
@click.argument("filename", type=click.Path(exists=True))
def config_load(filename):
    """Validate a config file against the declared parameter set."""
    server = ConfigServer()
    declare_default_params(server)
    server.load(filename)
    for warning in server.warnings:
        click.echo(f"warning: {warning}")
    for path in server.paths():
        click.echo(f"{path} = {server.get(path)}")
    server.shutdown()


@config.command("save")
@click.argument("filename", type=click.Path())
def config_save(filename):
    """Write the default parameter set to a config file."""
    server = ConfigServer()
    declare_default_params(server)
    server.save(filename)
    server.shutdown()
    click.echo(f"wrote {filename}")


# -- motion ------------------------------------------------------------


@main.group()
def motion():
    """Keyframe motion utilities."""


def _motion_files() -> list[Path]:
    dirs = [config_root() / "motions", data_dir() / "motions"]
    seen = {}
    for d in dirs:
        if d.is_dir():
            for f in sorted(d.glob("*.yaml")):
                seen.setdefault(f.stem, f)
    return list(seen.values())


@motion.command("list")
def motion_list():
    """List the available keyframe motions."""
    from .motion.player import load_motion
    for f in _motion_files():
        m = load_motion(f)
        click.echo(f"{m.name:16s} {len(m.joints):2d} joints  "
                   f"{m.duration:5.2f} s  {f}")


@motion.command("check")
@click.argument("filename", type=click.Path(exists=True))
def motion_check(filename):
    """Validate a motion file and report its planned limits."""
    from .motion.player import load_motion
    try:
        m = load_motion(filename)
        m.plan()
    except Exception as exc:
        raise click.ClickException(f"{filename}: {exc}")
    scales = m.time_scales or [1.0]
    click.echo(f"{m.name}: {len(m.keyframes)} keyframes, "
               f"duration {m.duration:.2f} s, "
               f"max time scale {max(scales):.2f}")


@motion.command("play")
@click.argument("name")
@click.option("--tick", type=float, default=0.008, show_default=True)
def motion_play(name, tick):
    """Play a motion through the lockstep control loop and report timing."""
    from . import model as robot_model
    from .control import ControlLoop, DummyInterface
    from .motion.player import MotionPlayer, load_motion

    files = {f.stem: f for f in _motion_files()}
    if name not in files:
        raise click.ClickException(
            f"unknown motion {name!r}; try: {', '.join(sorted(files))}")
    player = MotionPlayer()
    player.add(load_motion(files[name]))
    model = robot_model.load_model(data_dir() / "robot_default.yaml")
    loop = ControlLoop(model, DummyInterface(model.joint_count))
    loop.add_module("player", lambda fb, t, dt: {
        j: (p, v) for j, (p, v, _a) in (player.step(t) or {}).items()})
    loop.fade(1.0, 0.0)
    loop.step()
    q0 = dict(zip(model.joint_names, loop.last_feedback.position))
    player.play(name, q0, loop.t)
    cycles = 0
    while player.playing is not None:
        loop.step()
        cycles += 1
        if cycles > 100000:
            raise click.ClickException("motion never finished")
    click.echo(f"played {name!r}: {cycles} cycles "
               f"({cycles * tick:.2f} s at {1.0 / tick:.0f} Hz)")


# -- bag ---------------------------------------------------------------


@main.group()
def bag():
    """Bag file recording, inspection and replay."""


@bag.command("info")
@click.argument("filename", type=click.Path(exists=True))
def bag_info(filename):
    """Print bag header, topic counts and time range."""
    from .telemetry import BagError, load_bag
    try:
        b = load_bag(filename)
    except BagError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"header: {b.header}")
    if b.records:
        click.echo(f"time range: {b.records[0].stamp:.3f} .. "
                   f"{b.records[-1].stamp:.3f} s")
    counts: dict[str, int] = {}
    for rec in b.records:
        counts[rec.path] = counts.get(rec.path, 0) + 1
    for topic in sorted(counts):
        click.echo(f"{counts[topic]:6d}  {topic}")


@bag.command("replay")
@click.argument("filename", type=click.Path(exists=True))
@click.option("--realtime", is_flag=True,
              help="Pace replay at the original relative timing.")
@click.option("--speed", type=float, default=1.0, show_default=True)
def bag_replay(filename, realtime, speed):
    """Replay a bag onto a fresh bus and report delivery counts."""
    from .msgbus import MessageBus
    from .telemetry import BagError, load_bag, replay
    try:
        b = load_bag(filename)
    except BagError as exc:
        raise click.ClickException(str(exc))
    bus = MessageBus()
    topics = sorted({r.path for r in b.records})
    subs = {t: bus.subscribe(t, queue_size=len(b.records) + 1)
            for t in topics}
    n = replay(b, bus, realtime=realtime, speed=speed)
    for topic in topics:
        click.echo(f"{len(subs[topic].drain()):6d}  {topic}")
    bus.shutdown()
    click.echo(f"replayed {n} records")


@bag.command("record")
@click.argument("scenario")
@click.option("-o", "--output", type=click.Path(), required=True)
@click.option("--duration", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
def bag_record(scenario, output, duration, seed):
    """Run a scenario headlessly and record the standard topics."""
    from .launcher import LaunchSpec
    try:
        scenario_path = resolve_resource(scenario, subdir="scenarios")
    except LaunchError as exc:
        raise click.ClickException(str(exc))
    spec = LaunchSpec(scenario=str(scenario_path), seed=seed)
    spec.nodes = [n for n in spec.nodes if n != "telemetry"]
    spec.motion_files = [str(data_dir() / "motions" / f"{m}.yaml")
                         for m in spec.motions]
    system = System(spec).start()
    try:
        result = system.run_headless(duration=duration, bag_file=output)
    finally:
        system.stop()
    click.echo(f"wrote {output} (score {result['score']})")


# -- lut ---------------------------------------------------------------


@main.group()
def lut():
    """Color lookup table tools."""


@lut.command("fit")
@click.argument("samples", type=click.Path(exists=True))
@click.option("-o", "--output", type=click.Path(), required=True)
@click.option("--radius", type=float, default=45.0, show_default=True,
              help="Maximum YUV distance from a class center.")
def lut_fit(samples, output, radius):
    """Fit a YUV lookup table from labeled color samples."""
    from .vision.lut import fit_lut, load_samples
    table = fit_lut(load_samples(samples), radius=radius)
    table.save(output)
    click.echo(f"wrote {output} ({Path(output).stat().st_size} bytes)")


# -- sim ---------------------------------------------------------------


@main.group()
def sim():
    """World simulator scenarios."""


@sim.command("run")
@click.argument("scenario")
@click.option("--duration", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--bag", "bag_file", type=click.Path(), default=None)
@click.option("--report", "report_dir", type=click.Path(), default=None,
              help="Write CSV history and figures into this directory.")
def sim_run(scenario, duration, seed, bag_file, report_dir):
    """Run the full stack on a scenario; exit 0 on scenario success."""
    from .launcher import LaunchSpec
    try:
        scenario_path = resolve_resource(scenario, subdir="scenarios")
        loaded = load_scenario(scenario_path)
    except (LaunchError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    spec = LaunchSpec(scenario=str(scenario_path),
                      seed=loaded.seed if seed is None else seed,
                      duration=loaded.duration)
    spec.nodes = [n for n in spec.nodes if n != "telemetry"]
    spec.motion_files = [str(data_dir() / "motions" / f"{m}.yaml")
                         for m in spec.motions]
    _run_system(spec, duration, bag_file, report_dir)


if __name__ == "__main__":
    main()
