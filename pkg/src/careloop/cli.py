"""Command-line entry points: run, serve, replay, map."""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import yaml

from . import config as config_mod
from . import memory as memory_mod
from . import sim as sim_mod
from .behaviors import ActionUnit
from .controller import ControllerMode
from .fusion import AbstractBehavior
from .motion import map_behavior
from .perception import RawSensorRecord, read_records
from .service import SupervisionService


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="careloop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a simulated session and export its logs")
    _session_args(run_p)
    run_p.add_argument("--persona", help="persona file or bundled name (default: responsive)")
    run_p.add_argument("--events", help="line-delimited sensor record file replayed instead of a persona")
    run_p.add_argument("--ticks", type=int, default=500)
    run_p.add_argument("--out", help="output directory (default: $CARELOOP_DATA_DIR or ./careloop_data)")
    run_p.add_argument("--stop-at-goal", action="store_true", help="end the session when the goal is reached")
    run_p.add_argument("--woz-script", help="scripted operator command file (wizard_of_oz mode)")

    serve_p = sub.add_parser("serve", help="run live with the supervision endpoint")
    _session_args(serve_p)
    serve_p.add_argument("--persona", help="optional persona simulating the user")
    serve_p.add_argument("--port", type=int, default=8765)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--ticks", type=int, help="stop after this many ticks")

    replay_p = sub.add_parser("replay", help="re-run a logged session and verify behavior tags")
    replay_p.add_argument("--log", required=True, help="roboticist export (manifest.json is read from the same directory)")
    replay_p.add_argument("--scenario")
    replay_p.add_argument("--robot")
    replay_p.add_argument("--user")
    replay_p.add_argument("--seed", type=int)
    replay_p.add_argument("--mode")
    replay_p.add_argument("--config")

    map_p = sub.add_parser("map", help="retarget one abstract behavior file onto a robot")
    map_p.add_argument("--behavior", required=True)
    map_p.add_argument("--robot", required=True)
    map_p.add_argument("--out")
    map_p.add_argument("--config")

    args = parser.parse_args(argv)
    handler = {"run": _cmd_run, "serve": _cmd_serve, "replay": _cmd_replay, "map": _cmd_map}[args.command]
    return handler(args)


def _session_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, help="scenario file or bundled name")
    p.add_argument("--robot", required=True, help="morphology file or bundled name")
    p.add_argument("--user", help="user profile file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--mode",
        default="autonomous",
        choices=["autonomous", "approval", "wizard_of_oz"],
    )
    p.add_argument("--config", help="app config file (tick period, parameter file paths)")


def _build(args) -> tuple[config_mod.SessionAssets, config_mod.AppConfig]:
    app = config_mod.load_app_config(getattr(args, "config", None))
    assets = config_mod.load_assets(args.scenario, args.robot, user=getattr(args, "user", None), app=app)
    return assets, app


def _cmd_run(args) -> int:
    assets, _ = _build(args)
    mode = ControllerMode(args.mode)
    controller = config_mod.build_controller(assets, seed=args.seed, mode=mode, session_id=f"seed{args.seed}")

    woz_script = sim_mod.load_woz_script(args.woz_script) if args.woz_script else None
    if args.events:
        result = _run_from_events(controller, args.events, args.ticks, woz_script)
    else:
        persona_path = config_mod._resolve(args.persona or "responsive", config_mod.bundled_personas())
        persona = sim_mod.load_persona(persona_path)
        result = sim_mod.run_session(
            persona, controller, ticks=args.ticks, seed=args.seed,
            woz_script=woz_script, stop_at_goal=args.stop_at_goal,
        )

    out = config_mod.output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    memory_mod.export(controller.log, "roboticist", out / "roboticist.jsonl")
    memory_mod.export(controller.log, "therapist", out / "therapist.csv")
    with open(out / "snapshots.jsonl", "w", encoding="utf-8") as fh:
        for snap in result.snapshots:
            fh.write(json.dumps(snap.to_dict(), sort_keys=True) + "\n")
    manifest = {
        "scenario": str(args.scenario),
        "robot": str(args.robot),
        "user": args.user,
        "seed": args.seed,
        "mode": args.mode,
        "ticks": args.ticks,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)

    summary = memory_mod.summarize(controller.log)
    if args.user:
        profile = memory_mod.update_history(assets.user, summary)
        memory_mod.save_profile(profile, out / "profiles" / f"{profile.user_id}.yaml")
    print(f"session: {len(controller.log)} ticks, goal_reached={summary.goal_reached}, "
          f"mean_engagement={summary.mean_engagement:.3f}, final_difficulty={summary.final_difficulty}")
    if controller.errors:
        print(f"{len(controller.errors)} pipeline errors (behavior suppressed on those ticks)", file=sys.stderr)
    print(f"exports written to {out}")
    return 0


def _run_from_events(controller, events_path, ticks, woz_script):
    records = read_records(events_path)
    by_tick: dict[int, list[RawSensorRecord]] = {}
    for rec in records:
        by_tick.setdefault(rec.tick, []).append(rec)
    horizon = ticks if ticks else (max(by_tick) + 1 if by_tick else 0)
    script = list(woz_script or [])
    pos = 0
    result = sim_mod.SessionResult(log=controller.log, snapshots=[])
    for t in range(horizon):
        while pos < len(script) and script[pos][0] <= t:
            controller.handle_command(script[pos][1])
            pos += 1
        if controller.stopped:
            break
        _, snapshot = controller.tick(by_tick.get(t, []))
        result.snapshots.append(snapshot)
    return result


def _cmd_serve(args) -> int:
    assets, app = _build(args)
    mode = ControllerMode(args.mode)
    controller = config_mod.build_controller(assets, seed=args.seed, mode=mode, session_id=f"live{args.seed}")
    persona = None
    if args.persona:
        persona_path = config_mod._resolve(args.persona, config_mod.bundled_personas())
        persona = sim_mod.load_persona(persona_path)
    service = SupervisionService(
        controller, persona=persona, persona_seed=args.seed,
        tick_period_ms=app.tick_period_ms, max_ticks=args.ticks,
    )
    print(f"supervision endpoint on ws://{args.host}:{args.port} (tick {app.tick_period_ms} ms)")
    try:
        asyncio.run(service.run(host=args.host, port=args.port))
    except KeyboardInterrupt:
        pass
    if service.overruns:
        print(f"{service.overruns} tick deadline overruns", file=sys.stderr)
    return 0


def _cmd_replay(args) -> int:
    log_path = Path(args.log)
    manifest = {}
    manifest_path = log_path.parent / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
    scenario = args.scenario or manifest.get("scenario")
    robot = args.robot or manifest.get("robot")
    user = args.user or manifest.get("user")
    seed = args.seed if args.seed is not None else int(manifest.get("seed", 0))
    mode = ControllerMode(args.mode or manifest.get("mode", "autonomous"))
    if not scenario or not robot:
        print("replay needs --scenario/--robot or a manifest.json next to the log", file=sys.stderr)
        return 2

    app = config_mod.load_app_config(args.config)
    assets = config_mod.load_assets(scenario, robot, user=user, app=app)
    original = memory_mod.read_roboticist(log_path)
    replayed = sim_mod.replay_session(
        original, lambda: config_mod.build_controller(assets, seed=seed, mode=mode)
    )
    original_tags = [r.behavior_tag for r in original.records]
    replayed_tags = [r.behavior_tag for r in replayed.log.records]
    if original_tags == replayed_tags:
        print(f"replay OK: {len(original_tags)} ticks, behavior tags identical")
        return 0
    first = next(i for i, (a, b) in enumerate(zip(original_tags, replayed_tags)) if a != b)
    print(f"replay MISMATCH at tick {first}: logged={original_tags[first]!r} replayed={replayed_tags[first]!r}",
          file=sys.stderr)
    return 1


def load_behavior_file(path: str | Path) -> AbstractBehavior:
    """Read a standalone abstract-behavior file (used by `map`)."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    units = tuple(
        ActionUnit(id=au_id, intensity=float(spec["intensity"]), duration=int(spec.get("duration", 5)))
        for au_id, spec in sorted((raw.get("units") or {}).items())
    )
    return AbstractBehavior(
        units=units,
        provenance={u.id: "library" for u in units},
        tag=str(raw.get("tag", Path(path).stem)),
        speech=raw.get("speech"),
        amplitude_scale=float(raw.get("amplitude_scale", 1.0)),
        speed_scale=float(raw.get("speed_scale", 1.0)),
    )


def _cmd_map(args) -> int:
    from .motion import load_morphology

    morph = load_morphology(config_mod._resolve(args.robot, config_mod.bundled_morphologies()))
    behavior = load_behavior_file(args.behavior)
    script = map_behavior(behavior, morph)
    doc = json.dumps(script.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(doc + "\n", encoding="utf-8")
        print(f"script written to {args.out}")
    else:
        print(doc)
    if script.unmapped:
        print(f"unmapped action units: {', '.join(script.unmapped)}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
