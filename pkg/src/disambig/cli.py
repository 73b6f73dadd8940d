"""Command-line interface: scene generation, benchmark runs, scaling
measurements, the HTTP service, and an interactive REPL."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .baselines import POLICY_NAMES
from .bench import (
    SceneSuiteConfig,
    build_suite,
    run_suite,
    scaling_csv,
    scaling_experiment,
    suite_config_from_dict,
)
from .config import RunConfig, apply_overrides, load_config
from .errors import ConfigError, DisambigError, SchemaError
from .scene import Ambiguity, Scene, SceneGenConfig, load_scene, scene_from_dict
from .session import SessionEngine
from .usersim import UserModel


def _parse_mix(text: str) -> tuple:
    """'category_only:0.5,no_prior:0.25,unambiguous:0.25' or a single class name."""
    if ":" not in text:
        return ((Ambiguity(text), 1.0),)
    mix = []
    for part in text.split(","):
        name, _, weight = part.partition(":")
        mix.append((Ambiguity(name.strip()), float(weight)))
    return tuple(mix)


def _parse_range(text: str) -> tuple[int, int]:
    if "-" in text:
        lo, _, hi = text.partition("-")
        return int(lo), int(hi)
    v = int(text)
    return v, v


def _load_run_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    return cfg


def _load_scenes_arg(path: str, seed: int) -> list[Scene]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict) and "scenes" in data:
        return [scene_from_dict(d) for d in data["scenes"]]
    if isinstance(data, dict) and "n_scenes" in data:
        return build_suite(suite_config_from_dict(data), seed)
    if isinstance(data, dict) and "objects" in data:
        return [scene_from_dict(data)]
    raise SchemaError(f"{path}: expected a scene, a scene list, or a suite config")


def _cmd_gen_scenes(args) -> int:
    lo, hi = _parse_range(args.n_objects)
    suite = SceneSuiteConfig(
        n_scenes=args.n_scenes,
        n_objects_min=lo,
        n_objects_max=hi,
        ambiguity_mix=_parse_mix(args.ambiguity),
    )
    scenes = build_suite(suite, args.seed)
    payload = {"scenes": [s.to_dict() for s in scenes]}
    text = json.dumps(payload)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_run(args) -> int:
    run_cfg = _load_run_config(args)
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    for p in policies:
        if p not in POLICY_NAMES:
            raise ConfigError(f"unknown policy {p!r}; valid policies: {', '.join(POLICY_NAMES)}")
    scenes = _load_scenes_arg(args.scenes, args.seed) if args.scenes else build_suite(
        SceneSuiteConfig(), args.seed
    )
    sink = None
    records_fh = None
    if args.records:
        records_fh = open(args.records, "w", encoding="utf-8")
        sink = lambda rec: records_fh.write(rec.to_json() + "\n")
    try:
        report = run_suite(scenes, policies, args.seed, run_cfg, record_sink=sink)
    finally:
        if records_fh:
            records_fh.close()
    if args.out:
        out = Path(args.out)
        if out.suffix == ".csv":
            out.write_text(report.to_csv(), encoding="utf-8")
        else:
            out.write_text(report.to_json(), encoding="utf-8")
    print(report.to_csv(), end="")
    return 0


def _cmd_scale(args) -> int:
    run_cfg = _load_run_config(args)
    n_values = [int(v) for v in args.n_values.split(",") if v.strip()]
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    for p in policies:
        if p not in POLICY_NAMES:
            raise ConfigError(f"unknown policy {p!r}; valid policies: {', '.join(POLICY_NAMES)}")
    rows = scaling_experiment(n_values, policies, args.seed, run_cfg, scenes_per_n=args.scenes_per_n)
    text = scaling_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def _make_engine(args, run_cfg: RunConfig) -> SessionEngine:
    return SessionEngine(
        policy_name=args.policy,
        planner_cfg=run_cfg.planner(),
        baseline_cfg=run_cfg.baseline(),
        noise=run_cfg.noise() if args.noisy else None,
        user=run_cfg.user(),
        lam=run_cfg.lam,
        weights=run_cfg.weights(),
        seed=args.seed,
    )


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    run_cfg = _load_run_config(args)
    app = create_app(_make_engine(args, run_cfg), ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _parse_gen_spec(text: str) -> SceneGenConfig:
    """'n=3,class=category_only,colors=3,categories=1,separation=0.12'"""
    kwargs: dict = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        key, value = key.strip(), value.strip()
        if key in ("n", "n_objects"):
            kwargs["n_objects"] = int(value)
        elif key in ("class", "ambiguity", "ambiguity_class"):
            kwargs["ambiguity_class"] = Ambiguity(value)
        elif key in ("colors", "n_colors"):
            kwargs["n_colors"] = int(value)
        elif key in ("categories", "n_categories"):
            kwargs["n_categories"] = int(value)
        elif key in ("separation", "min_separation"):
            kwargs["min_separation"] = float(value)
        else:
            raise ConfigError(f"unknown generator key {key!r}")
    if "n_objects" not in kwargs:
        raise ConfigError("generator spec needs n=<objects>")
    return SceneGenConfig(**kwargs)


def _cmd_repl(args, input_fn=input, print_fn=print) -> int:
    run_cfg = _load_run_config(args)
    engine = _make_engine(args, run_cfg)
    if args.scene:
        scene = load_scene(args.scene)
        payload = engine.start(scene=scene, seed=args.seed)
    else:
        payload = engine.start(generator=_parse_gen_spec(args.gen), seed=args.seed)

    scene_view = payload["scene"]
    print_fn(f"query: {scene_view['query']!r}")
    for o in scene_view["objects"]:
        from .scene import CELL_NAMES, COLOR_NAMES, nearest_cell

        color = COLOR_NAMES[max(range(10), key=lambda j: o["color_dist"][j])]
        cell = CELL_NAMES[nearest_cell(o["center"])]
        print_fn(f"  [{o['id']}] {color} {o['category']} at {cell}")

    while payload["status"] == "awaiting_answer":
        belief = ", ".join(f"{p:.3f}" for p in payload["belief"])
        print_fn(f"belief: [{belief}]")
        question = payload["question"]
        if payload["pointed_object"] is not None:
            question = f"[points at object {payload['pointed_object']}] {question}"
        print_fn(f"robot: {question}")
        try:
            text = input_fn("you: ")
        except EOFError:
            print_fn("(no answer; leaving session)")
            return 0
        payload = engine.answer(payload["session_id"], text)

    result = payload["result"]
    verdict = "correct!" if result["correct"] else f"wrong (target was object {result['target_id']})"
    print_fn(
        f"robot grasps object {result['grasped_id']} -- {verdict} "
        f"total reward {result['total_reward']:.2f} after {result['n_questions']} question(s)"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="disambig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scenes", help="generate a scene suite as JSON")
    p.add_argument("--n-scenes", type=int, default=20)
    p.add_argument("--n-objects", default="8-10", help="count or range, e.g. 8-10")
    p.add_argument("--ambiguity", default="category_only:0.5,no_prior:0.25,unambiguous:0.25")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_gen_scenes)

    p = sub.add_parser("run", help="run policies over a suite and report accuracy/questions/time")
    p.add_argument("--policies", required=True, help=f"comma-separated from: {', '.join(POLICY_NAMES)}")
    p.add_argument("--scenes", help="scene suite JSON (from gen-scenes) or suite config JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report path; .csv or .json by extension")
    p.add_argument("--records", help="write per-episode records as JSON lines")
    p.add_argument("--config", help="config file (JSON or key=value)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("scale", help="planning cost vs number of objects")
    p.add_argument("--n-values", default="5,10,20,50")
    p.add_argument("--policies", default="attr_pomdp,point_only")
    p.add_argument("--scenes-per-n", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_scale)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--policy", default="attr_pomdp")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noisy", action="store_true", help="use configured grounding noise instead of none")
    p.add_argument("--ui", help="directory with the built web client, served at /ui")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("repl", help="interactive text session (you answer the questions)")
    p.add_argument("--scene", help="scene JSON file")
    p.add_argument("--gen", default="n=3,class=category_only", help="generator spec, e.g. n=4,class=no_prior")
    p.add_argument("--policy", default="attr_pomdp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noisy", action="store_true")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_repl)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DisambigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
