"""Command line front end.

Subcommands: plan (sketch -> plan JSON), calibrate (pins -> calibration
JSON), run (scenario -> report + figures + overlays), serve (HTTP API).
Exit codes: 0 success, 1 validation problem (bad arguments, bad content,
failed scenario assertions), 2 I/O problem.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bento import BentoParams
from .calibration import CalibrationProfile, calibrate, default_profile
from .domino import DominoParams
from .errors import GuidanceError
from .session import (
    SOURCE_SIMULATOR,
    TASK_BENTO,
    TASK_DOMINO,
    Session,
    SessionConfig,
)
from .simulator import ScenarioScript, run_script


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; here that is a validation failure
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(obj: dict, path: str | None):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def _load_profile(path: str | None) -> CalibrationProfile:
    if path is None:
        return default_profile()
    return CalibrationProfile.from_json(_load_json(path))


def _load_params(task: str, path: str | None, inline: dict | None = None):
    obj = inline
    if path is not None:
        obj = _load_json(path)
    if obj is None:
        return None
    if task == TASK_DOMINO:
        return DominoParams.from_json(obj)
    return BentoParams.from_json(obj)


def _cmd_plan(args) -> int:
    profile = _load_profile(args.calib)
    params = _load_params(args.task, args.params)
    config = SessionConfig(args.task, params, profile)
    session = Session(config)
    doc = _load_json(args.sketch)
    plan = session.submit_sketch(doc)
    _write_json(plan.to_json(), args.out)
    return 0


def _cmd_calibrate(args) -> int:
    pins = _load_json(args.pins)
    try:
        proj_cam = [(tuple(p["proj"]), tuple(p["cam"])) for p in pins["proj_cam"]]
        ws_cam = [(tuple(p["workspace"]), tuple(p["cam"])) for p in pins["workspace_cam"]]
        cam_dims = (pins["cam"]["w"], pins["cam"]["h"])
        proj_dims = (pins["proj"]["w"], pins["proj"]["h"])
        ws_dims = (pins["workspace_mm"]["w"], pins["workspace_mm"]["h"])
    except (KeyError, TypeError) as exc:
        print(f"malformed pins file: missing {exc}", file=sys.stderr)
        return 1
    profile = calibrate(proj_cam, ws_cam, cam_dims, proj_dims, ws_dims)
    _write_json(profile.to_json(), args.out)
    print(f"calibration accepted, rms {profile.rms_px:.4f} px", file=sys.stderr)
    return 0


def _cmd_run(args) -> int:
    from .report import write_run_outputs

    scenario = _load_json(args.scenario)
    if not isinstance(scenario, dict) or "task" not in scenario:
        print("scenario file needs a task field", file=sys.stderr)
        return 1
    task = scenario["task"]
    profile = _load_profile(args.calib)
    params = _load_params(task, None, scenario.get("params"))
    script = ScenarioScript.from_json(scenario)
    if args.seed is not None:
        script.seed = args.seed
    config = SessionConfig(
        task,
        params,
        profile,
        source=SOURCE_SIMULATOR,
        seed=script.seed,
        noise_sigma_mm=scenario.get("noise_sigma_mm", 2.0),
    )
    session = Session(config)
    if "sketch" in scenario:
        session.submit_sketch(scenario["sketch"])
    elif "plan" in scenario:
        _install_plan(session, scenario["plan"])
    else:
        print("scenario file needs a sketch or a plan", file=sys.stderr)
        return 1
    report, overlays = run_script(script, session)
    manifest = write_run_outputs(
        report,
        session.plan,
        overlays,
        Path(args.out),
        Path(args.overlay_dir) if args.overlay_dir else None,
    )
    print(json.dumps(manifest, indent=2))
    if report["assert_failures"]:
        print(f"{report['assert_failures']} assertion(s) failed", file=sys.stderr)
        return 1
    return 0


def _install_plan(session: Session, plan_obj: dict) -> None:
    from .bento import BentoPlan, initial_bento_state
    from .domino import DominoPlan

    if plan_obj.get("task") == TASK_BENTO:
        session.plan = BentoPlan.from_json(plan_obj)
        session._task_state = initial_bento_state(session.plan)
    else:
        session.plan = DominoPlan.from_json(plan_obj)
    session.phase = "planned"


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="sketchguide", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="turn a sketch JSON into a plan JSON")
    p.add_argument("sketch", help="sketch document JSON file")
    p.add_argument("--task", choices=[TASK_DOMINO, TASK_BENTO], required=True)
    p.add_argument("--calib", help="calibration JSON (default: axis-aligned rig)")
    p.add_argument("--params", help="task params JSON")
    p.add_argument("--out", help="write plan JSON here (default: stdout)")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("calibrate", help="fit a calibration from pin pairs")
    p.add_argument("pins", help="pins JSON file")
    p.add_argument("--out", help="write calibration JSON here (default: stdout)")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("run", help="execute a scenario against the simulator")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--calib", help="calibration JSON (default: axis-aligned rig)")
    p.add_argument("--out", default="report/report.json", help="report JSON path")
    p.add_argument("--overlay-dir", help="overlay PNG directory (default: <report dir>/overlays)")
    p.add_argument("--seed", type=int, help="override the script seed")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("serve", help="start the HTTP/stream API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"bad JSON: {exc}", file=sys.stderr)
        return 1
    except (GuidanceError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
