"""
Kasamawashi — Командная строка
Подкоманды simulate, equilibria, linearize, sweep, manifold, verify.
Коды выхода: 0 — успех, 1 — проверка не прошла или шаг интегратора
исчерпан, 2 — ошибка вызова или сценария.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np
from loguru import logger

from src.core.config import FamilyKind, ProbeDirection, settings
from src.analysis.atlas import (
    GridAxis,
    manifold_probe,
    sweep_tilted,
    sweep_vertex,
)
from src.analysis.linearization import (
    biquadratic_coeffs,
    block4_analytic,
    classify_biquadratic,
    jacobian_fd,
    tilted_stability,
    vertex_report,
)
from src.interfaces import verify, writers
from src.mechanics.equilibria import equilibrium_state, find_equilibria
from src.mechanics.errors import KasamawashiError, StepSizeUnderflowError
from src.mechanics.integrator import detect_vertex_approach, integrate_full, integrate_reduced
from src.utils.decorators import measure_time
from src.utils.validators import Scenario, ValidationError, read_scenario_json, validate_scenario

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}"


def setup_logging(level: str, log_file: bool = False) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=LOG_FORMAT)
    if log_file:
        logger.add(
            f"{settings.logs_dir}/kasamawashi_{{time}}.log",
            rotation="10 MB",
            retention="14 days",
            level="DEBUG",
        )


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, assignments: list[str]) -> dict:
    """--set params.Omega=1.5: запись по точечному пути до валидации"""
    if not isinstance(data, dict):
        return data
    for item in assignments or []:
        if "=" not in item:
            raise ValidationError([f"--set expects key=value, got '{item}'"])
        key, value = item.split("=", 1)
        target = data
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ValidationError([f"--set path '{key}' crosses a non-object"])
        target[parts[-1]] = _parse_value(value)
    return data


def load_config(args) -> Scenario:
    data = read_scenario_json(args.config)
    return validate_scenario(apply_overrides(data, args.set))


def _output_path(args, suffix: str) -> Path:
    stem = Path(args.config).stem if getattr(args, "config", None) else "kasamawashi"
    return Path(args.output or settings.output_dir) / f"{stem}_{suffix}"


# === Подкоманды ===

def cmd_simulate(args, scenario: Scenario) -> int:
    p = scenario.build_params()
    s = scenario.build_profile()
    cfg = scenario.build_integrator()

    with_attitude = args.full or (
        scenario.initial_state is not None and scenario.initial_state.attitude is not None
    )
    if with_attitude:
        traj = integrate_full(p, s, scenario.build_full_state(), cfg)
    else:
        traj = integrate_reduced(p, s, scenario.build_initial_state(), cfg)

    csv_path = writers.write_trajectory_csv(traj, _output_path(args, "trajectory.csv"))
    if args.svg:
        writers.write_trajectory_svg(traj, _output_path(args, "trajectory.svg"))

    summary = {
        "halt_reason": traj.halt_reason.value,
        "message": traj.message,
        "t_final": traj.times[-1],
        "final": traj.final.to_dict(),
        "csv": str(csv_path),
    }
    if args.vertex_eps is not None:
        event = detect_vertex_approach(traj, args.vertex_eps)
        summary["vertex_event"] = event.to_dict() if event else None
    print(writers.dumps_json(summary), end="")
    return EXIT_OK


def cmd_equilibria(args, scenario: Scenario) -> int:
    families = find_equilibria(scenario.build_params(), scenario.build_profile())
    data = [f.to_dict() for f in families]
    writers.write_json(data, _output_path(args, "equilibria.json"))
    print(writers.dumps_json(data), end="")
    return EXIT_OK


def cmd_linearize(args, scenario: Scenario) -> int:
    p = scenario.build_params()
    s = scenario.build_profile()
    families = find_equilibria(p, s)
    if not 0 <= args.family < len(families):
        raise ValidationError([f"--family {args.family} out of range (found {len(families)} families)"])
    family = families[args.family]
    omega_z = args.omega_z
    if omega_z is None:
        omega_z = scenario.initial_state.omega_z if scenario.initial_state else 0.0

    state = equilibrium_state(family, omega_z)
    block = block4_analytic(p, s, family.x1, omega_z)
    b, c = biquadratic_coeffs(block)
    spectrum = classify_biquadratic(b, c)
    J = jacobian_fd(p, s, state)
    data = {
        "family": family.to_dict(),
        "state": state.to_dict(),
        "omega_z": omega_z,
        "block": block.to_dict(),
        "fd_block_error": float(np.max(np.abs(J[:4, :4] - block.matrix()))),
        **spectrum.to_dict(),
    }
    if family.kind == FamilyKind.VERTEX:
        data["vertex"] = vertex_report(p, s.f_jet(0.0).f2, omega_z)
    if p.alpha != 0.0:
        try:
            data["tilted"] = tilted_stability(p, s, family.x1, omega_z).to_dict()
        except KasamawashiError as e:
            data["tilted"] = {"error": str(e)}

    writers.write_json(data, _output_path(args, "linearize.json"))
    print(writers.dumps_json(data), end="")
    return EXIT_OK


@measure_time
def cmd_sweep(args, scenario: Scenario) -> int:
    p = scenario.build_params()
    s = scenario.build_profile()
    spec = scenario.sweep
    omega_axis = GridAxis(*spec.omega_z_range) if spec else GridAxis(-12.0, 12.0, 201)
    Omega_axis = GridAxis(*spec.Omega_range) if spec else GridAxis(-12.0, 12.0, 201)

    if p.alpha == 0.0:
        f2_0 = spec.f2_0 if spec and spec.f2_0 is not None else s.f_jet(0.0).f2
        grid = sweep_vertex(p, f2_0, omega_axis, Omega_axis, threads=args.threads)
        title = f"vertex spectrum, f''(0) = {f2_0:g}"
    else:
        x1 = spec.x1 if spec and spec.x1 is not None else None
        if x1 is None:
            tilted = [f for f in find_equilibria(p, s) if f.kind == FamilyKind.TILTED_POINT]
            if not tilted:
                raise ValidationError(["sweep.x1 is required: no isolated tilted equilibrium found"])
            x1 = tilted[0].x1
        grid = sweep_tilted(p, s, x1, omega_axis, Omega_axis, threads=args.threads)
        title = f"tilted stability, x1 = {x1:g}"

    writers.write_grid_csv(grid, _output_path(args, "sweep.csv"))
    writers.write_grid_svg(grid, _output_path(args, "sweep.svg"), title=title)
    writers.write_json(grid.to_dict(), _output_path(args, "sweep.json"))
    print(writers.dumps_json(grid.to_dict()), end="")
    return EXIT_OK


def cmd_manifold(args, scenario: Scenario) -> int:
    probe = scenario.probe
    omega_z = args.omega_z if args.omega_z is not None else (probe.omega_z if probe else 0.0)
    which = ProbeDirection(args.which) if args.which else (probe.which if probe else ProbeDirection.STABLE)
    seed = args.seed_offset or (probe.seed_offset if probe else None)

    integrator = scenario.build_integrator() if "integrator" in scenario.model_fields_set else None
    result = manifold_probe(
        scenario.build_params(), scenario.build_profile(), omega_z, which,
        seed_offset=seed, cfg=integrator,
    )
    writers.write_trajectory_csv(result.trajectory, _output_path(args, "manifold.csv"))
    print(writers.dumps_json(result.to_dict()), end="")
    return EXIT_OK


def cmd_verify(args) -> int:
    suites = verify.SUITES
    if args.suite:
        known = {fn.__name__.removeprefix("check_"): fn for fn in verify.SUITES}
        unknown = [name for name in args.suite if name not in known]
        if unknown:
            raise ValidationError([f"unknown suite '{name}'" for name in unknown])
        suites = [known[name] for name in args.suite]

    results = verify.run_verify(suites, threads=args.threads)
    print(writers.format_table([(r.name, r.ok, r.details) for r in results]))
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAILED


# === Разбор аргументов ===

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kasamawashi",
        description="Rolling ball on a rotating surface of revolution",
    )
    parser.add_argument("--threads", type=int, default=None, help="worker threads for sweeps and verify")
    parser.add_argument("--log-level", default=settings.log_level)
    parser.add_argument("--log-file", action="store_true", help="also log to a rotating file in logs_dir")
    parser.add_argument("--output", default=None, help="output directory")

    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(name: str, help_text: str) -> argparse.ArgumentParser:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="scenario JSON file")
        cmd.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="override a scenario key, e.g. params.Omega=1.5")
        return cmd

    simulate = with_config("simulate", "integrate a trajectory and write CSV")
    simulate.add_argument("--full", action="store_true", help="integrate the attitude as well")
    simulate.add_argument("--svg", action="store_true", help="also render the x1-x2 path")
    simulate.add_argument("--vertex-eps", type=float, default=None,
                          help="report the first approach |x| < eps to the vertex")

    with_config("equilibria", "list equilibrium families")

    linearize = with_config("linearize", "linearization at an equilibrium")
    linearize.add_argument("--family", type=int, default=0, help="index into the equilibria list")
    linearize.add_argument("--omega-z", type=float, default=None)

    with_config("sweep", "stability atlas over the (omega_z, Omega) plane")

    manifold = with_config("manifold", "probe motions asymptotic to the vertex")
    manifold.add_argument("--omega-z", type=float, default=None)
    manifold.add_argument("--which", choices=[d.value for d in ProbeDirection], default=None)
    manifold.add_argument("--seed-offset", type=float, default=None)

    verify_cmd = sub.add_parser("verify", help="run the invariant suites")
    verify_cmd.add_argument("--suite", action="append", help="run only the named suite")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "linearize": cmd_linearize,
    "sweep": cmd_sweep,
    "manifold": cmd_manifold,
}


def run(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    setup_logging(args.log_level, args.log_file)
    if args.threads is not None and args.threads < 1:
        logger.error("--threads must be >= 1")
        return EXIT_USAGE

    try:
        if args.command == "verify":
            return cmd_verify(args)
        scenario = load_config(args)
        return COMMANDS[args.command](args, scenario)
    except ValidationError as e:
        for message in e.messages:
            logger.error(message)
            print(f"error: {message}", file=sys.stderr)
        return EXIT_USAGE
    except StepSizeUnderflowError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}; last state {e.state}", file=sys.stderr)
        return EXIT_FAILED
    except KasamawashiError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> int:
    return run(sys.argv[1:])
