"""Command-line front end: data generation, training, planning, benchmarks."""

import argparse
import logging
import os
import sys

from phyplan.adapt.loop import grid_optimum
from phyplan.bench.experiment import AGENTS, BACKENDS, ExperimentConfig, run_experiment
from phyplan.bench.zoo import load_models, train_default
from phyplan.numerics.lbfgs import LBFGSConfig
from phyplan.planner.mcts import PlannerConfig, plan
from phyplan.planner.rollout import oracle_models
from phyplan.skills.data import Dataset
from phyplan.skills.model import SkillModel, data_loss, identify_parameter, train
from phyplan.skills.spec import SKILL_NAMES, build_skill
from phyplan.worldsim.oracle import DEFAULT_PARAMS, generate_dataset
from phyplan.worldsim.sim import execute_action, write_trajectory
from phyplan.worldsim.tasks import TASK_NAMES, SimNoise, load_tasks

log = logging.getLogger("phyplan")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors as a single diagnostic line."""

    def error(self, message):
        self.exit(2, f"phyplan: error: {message}\n")


def _default_seed():
    raw = os.environ.get("PHYPLAN_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"PHYPLAN_SEED must be an integer, got {raw!r}") from None


def _key_values(items, what):
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise CliError(f"{what} must look like name=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def _floats(mapping, what):
    try:
        return {k: float(v) for k, v in mapping.items()}
    except ValueError as exc:
        raise CliError(f"{what}: {exc}") from None


def _bounds(items):
    out = {}
    for key, val in _key_values(items, "--bound").items():
        parts = val.split(",")
        if len(parts) != 2:
            raise CliError(f"--bound {key} needs two comma-separated values")
        out[key] = tuple(float(p) for p in parts)
    return out


def _skills(name):
    if name == "all":
        return SKILL_NAMES
    if name not in SKILL_NAMES:
        raise CliError(f"unknown skill {name!r}; expected one of {', '.join(SKILL_NAMES)} or all")
    return (name,)


def _tasks(text):
    if text == "all":
        return TASK_NAMES
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [t for t in names if t not in TASK_NAMES]
    if bad or not names:
        raise CliError(f"unknown tasks {bad}; expected names from {', '.join(TASK_NAMES)} or all")
    return names


def _ints(text, what):
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise CliError(f"{what} must be comma-separated integers") from None


def _out_for(args, skill, ext):
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        return os.path.join(args.out_dir, f"{skill}.{ext}")
    if args.out is None:
        raise CliError("give --out (or --out-dir)")
    return args.out


def cmd_gen_data(args):
    skills = _skills(args.skill)
    if len(skills) > 1 and not args.out_dir:
        raise CliError("--skill all needs --out-dir")
    params = _floats(_key_values(args.param, "--param"), "--param")
    for skill in skills:
        phys = {k: v for k, v in params.items() if k in DEFAULT_PARAMS[skill]}
        data = generate_dataset(skill, phys, args.n, _bounds(args.bound), args.noise, args.seed)
        path = _out_for(args, skill, "csv")
        data.to_csv(path)
        print(f"wrote {len(data)} rows to {path}")


def _spec_for(skill, args):
    spec = build_skill(skill)
    fixed = _floats(_key_values(args.param, "--param"), "--param")
    fixed = {k: v for k, v in fixed.items() if k in spec.param_values()}
    if fixed:
        spec = spec.with_params(**fixed)
    if args.data_only:
        spec = spec.data_only()
    return spec


def cmd_train(args):
    skills = _skills(args.skill)
    if len(skills) > 1 and (args.data or not args.out_dir):
        raise CliError("--skill all trains on fresh oracle data and needs --out-dir (no --data)")
    params = _floats(_key_values(args.param, "--param"), "--param")
    for skill in skills:
        if args.data:
            spec = _spec_for(skill, args)
            data = Dataset.from_csv(args.data, spec)
            cfg = LBFGSConfig(max_iterations=args.iterations or LBFGSConfig().max_iterations)
            model = train(spec, data, cfg=cfg, seed=args.seed, colloc_ratio=args.colloc_ratio)
        else:
            phys = {k: v for k, v in params.items() if k in DEFAULT_PARAMS[skill]}
            model = train_default(skill, args.seed, args.n, args.iterations, phys,
                                  data_only=args.data_only, colloc_ratio=args.colloc_ratio)
        path = _out_for(args, skill, "bin")
        model.save(path)
        r = model.report
        extra = "".join(f" {k}={v:.6g}" for k, v in model.learned_params.items())
        print(f"{skill}: L_D={r.data_loss:.3e} L_P={r.physics_loss:.3e} iterations={r.iterations} "
              f"status={r.status}{extra} -> {path}")


def cmd_eval(args):
    model = SkillModel.load(args.model)
    data = Dataset.from_csv(args.data, model.spec)
    print(f"validation MSE: {data_loss(model, data):.6e}")


def cmd_identify(args):
    spec = build_skill(args.skill)
    data = Dataset.from_csv(args.data, spec)
    model, est = identify_parameter(spec, data, LBFGSConfig(max_iterations=args.iterations), args.seed)
    for k, v in est.items():
        print(f"{k} = {v:.6g}")
    if args.out:
        model.save(args.out)


def _models_for(task, backend, models_dir):
    if backend == "skill_models":
        if not models_dir:
            raise CliError("skill_models backend needs --models DIR")
        return load_models(models_dir, sorted(set(task.skill_chain)))
    return oracle_models(task, slow=backend == "slow_oracle")


def cmd_plan(args):
    task = load_tasks(args.config)[args.task]
    models = _models_for(task, args.backend, args.models)
    cfg = PlannerConfig(D=args.D, K=args.K, seed=args.seed)
    trace = sys.stdout if args.trace else None
    if trace:
        print("iteration,path,rollout_value,best_value")
    action, value = plan(task, models, None, cfg, trace)
    _, reward, traj = execute_action(task, action, SimNoise(args.noise, args.seed))
    names = ", ".join(f"{n}={a:.6g}" for n, a in zip(task.dim_names, action))
    print(f"action: {names}")
    print(f"predicted reward: {value:.4f}")
    print(f"executed reward: {reward:.4f}")
    if args.trajectory:
        write_trajectory(args.trajectory, traj)


def cmd_bench(args):
    cfg = ExperimentConfig(
        tasks=_tasks(args.tasks),
        agents=tuple(a.strip() for a in args.agents.split(",")),
        num_attempts=args.attempts,
        seeds=_ints(args.seeds, "--seeds") if args.seeds else (args.seed,),
        noise=SimNoise(args.noise, args.seed),
        planner=PlannerConfig(D=args.D, K=args.K),
        rollout_backend=args.backend,
        grid_resolution=args.grid_resolution,
        config_path=args.config,
    )
    models = None
    if cfg.rollout_backend == "skill_models" and set(cfg.agents) - {"random"}:
        if not args.models:
            raise CliError("skill_models backend needs --models DIR (see `phyplan train --skill all`)")
        models = load_models(args.models)
    _, _, summary = run_experiment(cfg, models, args.out)
    print("task,agent,mean_final_regret,median_plan_ms")
    for (task, agent), s in summary.items():
        print(f"{task},{agent},{s['mean_final_regret']:.4f},{s['median_plan_ms']:.2f}")


def cmd_grid_opt(args):
    tasks = load_tasks(args.config)
    for name in _tasks(args.task):
        print(f"{name}: {grid_optimum(tasks[name], args.resolution):.6f}")


def build_parser():
    p = _Parser(prog="phyplan", description=__doc__)
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=None, help="defaults to $PHYPLAN_SEED or 0")
        return sp

    g = seeded(sub.add_parser("gen-data", help="sample oracle training data"))
    g.add_argument("--skill", required=True)
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--param", action="append", help="physical constant, e.g. mu=0.4")
    g.add_argument("--bound", action="append", help="input range, e.g. t_query=0,0.5")
    g.add_argument("--out")
    g.add_argument("--out-dir")
    g.set_defaults(func=cmd_gen_data)

    t = seeded(sub.add_parser("train", help="train a skill model"))
    t.add_argument("--skill", required=True)
    t.add_argument("--data", help="dataset CSV; fresh oracle data with the planner's settings when omitted")
    t.add_argument("--n", type=int, help="rows of fresh data (default per skill)")
    t.add_argument("--colloc-ratio", type=int, default=4)
    t.add_argument("--iterations", type=int, help="L-BFGS iterations (default per skill, or the optimizer default)")
    t.add_argument("--param", action="append", help="fix a physical constant, e.g. mu=0.2")
    t.add_argument("--data-only", action="store_true", help="drop the physics loss")
    t.add_argument("--out")
    t.add_argument("--out-dir")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="validation MSE of a model on a dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.set_defaults(func=cmd_eval)

    i = seeded(sub.add_parser("identify", help="estimate unknown physical parameters"))
    i.add_argument("--skill", required=True, choices=("sliding", "swinging"))
    i.add_argument("--data", required=True)
    i.add_argument("--iterations", type=int, default=1000)
    i.add_argument("--out")
    i.set_defaults(func=cmd_identify)

    def planner_args(sp):
        sp.add_argument("--backend", choices=BACKENDS, default="skill_models")
        sp.add_argument("--models", help="directory of <skill>.bin files")
        sp.add_argument("--K", type=int, default=10)
        sp.add_argument("--D", type=int, default=20)
        sp.add_argument("--noise", type=float, default=0.0)
        sp.add_argument("--config", help="task config file (defaults to the packaged one)")

    pl = seeded(sub.add_parser("plan", help="plan one action and execute it"))
    pl.add_argument("--task", required=True, choices=TASK_NAMES)
    planner_args(pl)
    pl.add_argument("--trace", action="store_true", help="print one line per search iteration")
    pl.add_argument("--trajectory", help="write the executed trajectory CSV here")
    pl.set_defaults(func=cmd_plan)

    b = seeded(sub.add_parser("bench", help="regret curves over tasks, agents and seeds"))
    b.add_argument("--tasks", default="all")
    b.add_argument("--agents", default="phyplan,random", help=f"comma list from {', '.join(AGENTS)}")
    b.add_argument("--attempts", type=int, default=20)
    b.add_argument("--seeds", help="comma-separated list (defaults to --seed)")
    b.add_argument("--grid-resolution", type=int, default=200)
    b.add_argument("--out", required=True)
    planner_args(b)
    b.set_defaults(func=cmd_bench)

    go = sub.add_parser("grid-opt", help="grid-search optimum reward per task")
    go.add_argument("--task", default="all")
    go.add_argument("--resolution", type=int, default=200)
    go.add_argument("--config")
    go.set_defaults(func=cmd_grid_opt)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        args.func(args)
    except (CliError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print("phyplan: error: " + " ".join(str(msg).split()), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
