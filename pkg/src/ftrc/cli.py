"""Command line entry point: simulate, sweep, robustness, validate-config.

Exit codes: 0 success, 1 configuration or runtime error, 2 a verification
check failed (or a robustness query came back not-robust).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .analysis import FtrcReport, hypotheses_hold, verify_ftrc
from .config import ConfigError, ScenarioConfig, apply_overrides, dump_config, from_dict, load_raw
from .graph import DEFAULT_MAX_N, Digraph, GraphError, GraphTooLarge, is_r_robust, make_k_circulant, max_robustness
from .sim import SimulationError, run

log = logging.getLogger("ftrc")

OUT_ENV = "FTRC_OUT_ROOT"
EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2


@dataclass
class RunManifest:
    config_path: str
    seeds: list[int]
    out_dir: str
    artifacts: dict[str, str] = field(default_factory=dict)
    exit_code: int = 0
    config: dict = field(default_factory=dict)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")


def _load(args) -> tuple[ScenarioConfig, str]:
    data, path = load_raw(args.config)
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if overrides:
        data = apply_overrides(data, overrides)
    cfg = from_dict(data, base_dir=path.parent)
    for w in cfg.validate():
        log.warning(w)
    return cfg, str(path)


def _out_dir(args, cfg: ScenarioConfig) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_ENV, "runs")) / cfg.name


def _fails(cfg: ScenarioConfig, report: FtrcReport) -> bool:
    # failures only count when the theorem's hypotheses are not known to be violated
    return cfg.expect == "theorem" and not report.all_pass and report.hypotheses_hold is not False


def execute(cfg: ScenarioConfig, out_dir: Path, hypotheses: bool | None) -> tuple[dict[str, str], FtrcReport | None, int]:
    """Run one scenario and write its artifacts into ``out_dir``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, str] = {}

    def emit(name: str, text: str) -> None:
        p = out_dir / name
        p.write_text(text)
        artifacts[name] = str(p)

    emit("resolved_config.yaml", dump_config(cfg))
    try:
        traj = run(cfg)
    except SimulationError as exc:
        if exc.log is not None:
            emit("trajectory.csv", exc.log.csv_text())
        log.error("run aborted: %s", exc)
        return artifacts, None, EXIT_ERROR
    emit("trajectory.csv", traj.csv_text())
    if traj.removed_mask is not None:
        emit("removed.csv", traj.removed_csv_text())
    report = verify_ftrc(traj, cfg, hypotheses)
    emit("report.txt", report.text())
    emit("report.json", report.json() + "\n")
    return artifacts, report, EXIT_CHECK if _fails(cfg, report) else EXIT_OK


def _hypotheses(cfg: ScenarioConfig, workers: int) -> bool | None:
    if not cfg.check_hypotheses:
        return None
    hyp = hypotheses_hold(cfg, workers)
    if hyp is False:
        log.warning("hypotheses do not hold (F-local and %d-robust); checks are descriptive only", 2 * cfg.F + 1)
    elif hyp is None:
        log.warning("graph exceeds the enumeration cap; hypotheses not checked")
    return hyp


def cmd_simulate(args) -> int:
    try:
        cfg, path = _load(args)
    except (ConfigError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = _out_dir(args, cfg)
    hyp = _hypotheses(cfg, args.workers)
    artifacts, report, code = execute(cfg, out, hyp)
    if report is not None:
        print(report.summary_line())
    if code == EXIT_OK and cfg.expect == "exploratory" and report is not None and not report.all_pass:
        print("exploratory scenario: checks failed, exit code not affected")
    manifest = RunManifest(path, [cfg.seed], str(out), artifacts, code, cfg.to_dict())
    manifest.artifacts["manifest.json"] = str(out / "manifest.json")
    manifest.write(out / "manifest.json")
    return code


def _sweep_job(job: tuple[dict, str, bool | None]):
    cfg_dict, out, hyp = job
    cfg = from_dict(cfg_dict)
    artifacts, report, code = execute(cfg, Path(out), hyp)
    return cfg.seed, artifacts, None if report is None else report.to_dict(), code


def cmd_sweep(args) -> int:
    try:
        cfg, path = _load(args)
    except (ConfigError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.seeds < 1:
        print("error: --seeds must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    out = _out_dir(args, cfg)
    hyp = _hypotheses(cfg, 1)
    seeds = [cfg.seed + i for i in range(args.seeds)]
    jobs = [(cfg.replace(seed=s).to_dict(), str(out / f"seed_{s}"), hyp) for s in seeds]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]

    rows = ["seed,all_pass,consensus_time,bound_T,exit_code"]
    times, passed, code = [], 0, EXIT_OK
    artifacts: dict[str, str] = {}
    for seed, arts, rep, c in results:
        for k, v in arts.items():
            artifacts[f"seed_{seed}/{k}"] = v
        if rep is None:
            rows.append(f"{seed},error,,,{c}")
            code = EXIT_ERROR if code == EXIT_OK else code
            continue
        passed += rep["all_pass"]
        if rep["consensus_time"] is not None:
            times.append(rep["consensus_time"])
        rows.append(f"{seed},{rep['all_pass']},{rep['consensus_time']},{rep['bound_T']!r},{c}")
        if c == EXIT_CHECK:
            code = EXIT_CHECK
    (out / "sweep_summary.csv").write_text("\n".join(rows) + "\n")
    summary = [f"runs: {len(seeds)}", f"all_pass: {passed}/{len(seeds)}", f"hypotheses_hold: {hyp}"]
    if times:
        summary += [
            f"consensus_time_min: {min(times):.6g}",
            f"consensus_time_median: {statistics.median(times):.6g}",
            f"consensus_time_max: {max(times):.6g}",
        ]
    (out / "sweep_summary.txt").write_text("\n".join(summary) + "\n")
    print("\n".join(summary))
    artifacts["sweep_summary.csv"] = str(out / "sweep_summary.csv")
    artifacts["sweep_summary.txt"] = str(out / "sweep_summary.txt")
    artifacts["manifest.json"] = str(out / "manifest.json")
    RunManifest(path, seeds, str(out), artifacts, code, cfg.to_dict()).write(out / "manifest.json")
    return code


def cmd_robustness(args) -> int:
    try:
        if args.circulant:
            g = make_k_circulant(*args.circulant)
        elif args.graph:
            g = Digraph.load(args.graph)
        else:
            print("error: give --circulant N K or --graph PATH", file=sys.stderr)
            return EXIT_ERROR
        if args.r is None:
            r = max_robustness(g, args.max_n, args.workers)
            print(f"n: {g.n}")
            print(f"max_robustness: {r}")
            return EXIT_OK
        cert = is_r_robust(g, args.r, args.max_n, args.workers)
    except GraphTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (GraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = cert.report()
    print(text, end="")
    if args.report:
        Path(args.report).write_text(text)
    return EXIT_OK if cert.robust else EXIT_CHECK


def cmd_validate(args) -> int:
    try:
        cfg, _ = _load(args)
    except (ConfigError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(dump_config(cfg), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftrc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        sp.add_argument("--config", required=True, help="config file or bundled scenario name")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override, e.g. simulation.dt=1e-4")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<name>, or runs/<name>)")
        sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("simulate", help="run one scenario and verify it")
    scenario_args(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="run a scenario over consecutive seeds")
    scenario_args(sp)
    sp.add_argument("--seeds", type=int, default=10)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("robustness", help="exact r-robustness of a digraph")
    sp.add_argument("--circulant", nargs=2, type=int, metavar=("N", "K"))
    sp.add_argument("--graph", help="edge-list file")
    sp.add_argument("--r", type=int)
    sp.add_argument("--max-n", type=int, default=DEFAULT_MAX_N)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--report", help="also write the certificate here")
    sp.set_defaults(func=cmd_robustness)

    sp = sub.add_parser("validate-config", help="print the resolved config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--set", action="append", metavar="KEY=VALUE")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
