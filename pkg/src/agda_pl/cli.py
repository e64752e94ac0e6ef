"""Command-line experiment harness: ``run``, ``sweep``, ``gen-data`` and ``verify``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields, replace
from pathlib import Path
from typing import Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .core import (
    SolverConfig,
    StepSchedule,
    TraceRecord,
    VrRegime,
    preset_agda_theoretical,
    preset_stoc_diminishing,
    preset_vr_agda,
)
from .diagnostics import fit_window, pl_estimate_grid, rate_fit
from .problems import (
    DatasetKind,
    MinimaxProblem,
    UnsupportedOperation,
    gen_rls_dataset,
    make_logistic_bilinear,
    make_rls,
    make_toy,
    save_rls_dataset,
)
from . import solvers

TRACE_HEADER = [f.name for f in fields(TraceRecord)]
EXIT_CONFIG = 2


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemSpec(_Strict):
    name: Literal["toy", "logistic_bilinear", "rls"]
    dataset: Literal["dataset1", "dataset3", "csv"] = "dataset1"
    dims: tuple[int, int] = (50, 20)
    data_seed: int = 0
    path: Optional[str] = None
    rank_fraction: float = 0.8
    row_scale: float = 1.0


class ScheduleSpec(_Strict):
    preset: Literal["constant", "agda_theoretical", "stoc_diminishing", "vr_agda", "one_sided_default"] = "constant"
    tau1: Optional[float] = None
    tau2: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    alpha: float = 0.05
    regime: Literal["auto", "regime1", "regime2"] = "auto"

    @model_validator(mode="after")
    def _needs(self):
        if self.preset == "constant" and (self.tau1 is None or self.tau2 is None):
            raise ValueError("constant schedule needs tau1 and tau2")
        if self.preset == "stoc_diminishing" and self.beta is None:
            raise ValueError("stoc_diminishing needs beta")
        return self


class NoiseSpec(_Strict):
    kind: Literal["component", "gaussian"]
    sigma: float = 0.0


class InitSpec(_Strict):
    x0: Optional[list[float]] = None
    y0: Optional[list[float]] = None
    random_seed: Optional[int] = None
    scale: float = 1.0

    @model_validator(mode="after")
    def _one_form(self):
        explicit = self.x0 is not None and self.y0 is not None
        if explicit == (self.random_seed is not None) or (self.x0 is None) != (self.y0 is None):
            raise ValueError("init needs either both x0 and y0 or random_seed")
        return self


class CfgSpec(_Strict):
    max_iters: int = 1000
    seed: int = Field(0, ge=0, lt=2**64)
    metrics_every: int = 1
    potential_weight: Optional[float] = None
    vr_inner_N: int = 1
    vr_outer_T: int = 1
    vr_epochs_K: int = 1
    stop_potential: Optional[float] = None


class SweepSpec(_Strict):
    tau1: list[float] = Field(min_length=1)
    tau2: list[float] = Field(min_length=1)
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)


class ExperimentConfig(_Strict):
    problem: ProblemSpec
    solver: Literal["agda", "sgda", "stoc_agda", "vr_agda", "one_sided_agda"]
    schedule: ScheduleSpec = ScheduleSpec(preset="agda_theoretical")
    noise: Optional[NoiseSpec] = None
    init: InitSpec
    cfg: CfgSpec = CfgSpec()
    output: str = "trace.csv"
    sweep: Optional[SweepSpec] = None


class ConfigError(Exception):
    pass


def load_config(path: Union[str, os.PathLike]) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        return ExperimentConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"invalid config {path}:\n{e}") from e


def build_problem(spec: ProblemSpec) -> MinimaxProblem:
    if spec.name == "toy":
        return make_toy()
    if spec.name == "logistic_bilinear":
        return make_logistic_bilinear()
    data = gen_rls_dataset(
        DatasetKind(spec.dataset), spec.dims, spec.data_seed, path=spec.path,
        rank_fraction=spec.rank_fraction, row_scale=spec.row_scale,
    )
    return make_rls(data)


def initial_point(p: MinimaxProblem, spec: InitSpec) -> tuple[np.ndarray, np.ndarray]:
    if spec.random_seed is None:
        return np.asarray(spec.x0, dtype=np.float64), np.asarray(spec.y0, dtype=np.float64)
    rng = np.random.default_rng(spec.random_seed)
    return spec.scale * rng.standard_normal(p.d1), spec.scale * rng.standard_normal(p.d2)


def _constants(p: MinimaxProblem) -> tuple[float, float, float]:
    if p.analytic_l is None or p.analytic_mu1 is None or p.analytic_mu2 is None:
        raise ConfigError(f"preset needs analytic constants, which {p.name} does not provide")
    return p.analytic_l, p.analytic_mu1, p.analytic_mu2


def execute(conf: ExperimentConfig, p: Optional[MinimaxProblem] = None) -> solvers.RunResult:
    """Run one experiment described by ``conf``."""
    p = build_problem(conf.problem) if p is None else p
    x0, y0 = initial_point(p, conf.init)
    cfg = SolverConfig(**conf.cfg.model_dump())
    sch = conf.schedule

    if conf.solver == "one_sided_agda":
        tau1, tau2 = (sch.tau1, sch.tau2) if sch.preset == "constant" else (None, None)
        return solvers.one_sided_agda_run(
            p, cfg.max_iters, x0, y0, cfg.seed, tau1, tau2, weight=cfg.weight(0.1)
        )

    if conf.solver == "vr_agda":
        if sch.preset == "vr_agda":
            l, m1, m2 = _constants(p)
            beta = 0.05 if sch.beta is None else sch.beta
            vp = preset_vr_agda(p.n_components, l, m1, m2, sch.alpha, beta, VrRegime(sch.regime))
            cfg = replace(cfg, vr_inner_N=vp.N, vr_outer_T=vp.T)
            tau1, tau2 = vp.tau1, vp.tau2
        elif sch.preset == "constant":
            tau1, tau2 = sch.tau1, sch.tau2
        else:
            raise ConfigError("vr_agda takes a constant schedule or the vr_agda preset")
        return solvers.vr_agda_run(p, tau1, tau2, x0, y0, cfg)

    if sch.preset == "constant":
        schedule = StepSchedule.constant(sch.tau1, sch.tau2)
    elif sch.preset == "agda_theoretical":
        schedule = preset_agda_theoretical(*_constants(p))
    elif sch.preset == "stoc_diminishing":
        schedule = preset_stoc_diminishing(*_constants(p), sch.beta, sch.gamma)
    else:
        raise ConfigError(f"preset {sch.preset} does not apply to {conf.solver}")

    if conf.solver == "agda":
        return solvers.agda_run(p, schedule, x0, y0, cfg)
    if conf.solver == "sgda":
        return solvers.sgda_run(p, schedule, x0, y0, cfg)
    noise = None
    if conf.noise is not None:
        noise = solvers.ComponentSampling() if conf.noise.kind == "component" else solvers.GaussianNoise(conf.noise.sigma)
    return solvers.stoc_agda_run(p, schedule, x0, y0, cfg, noise)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_trace_csv(path: Union[str, os.PathLike], trace: Sequence[TraceRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for r in trace:
            w.writerow([_fmt(getattr(r, k)) for k in TRACE_HEADER])


def read_trace_csv(path: Union[str, os.PathLike]) -> list[TraceRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != TRACE_HEADER:
        raise ValueError(f"{path}: unexpected trace header")
    out = []
    for row in rows[1:]:
        d = dict(zip(TRACE_HEADER, row))
        out.append(
            TraceRecord(
                iter=int(d["iter"]),
                grad_evals=int(d["grad_evals"]),
                a=float(d["a"]),
                b=float(d["b"]),
                potential=float(d["potential"]),
                grad_x_norm=float(d["grad_x_norm"]),
                grad_y_norm=float(d["grad_y_norm"]),
                dist_to_saddle_sq=float(d["dist_to_saddle_sq"]) if d["dist_to_saddle_sq"] else None,
            )
        )
    return out


def _finite_or_none(v: float):
    return v if math.isfinite(v) else None


def summarize(res: solvers.RunResult) -> dict:
    last = res.trace[-1]
    fit = None
    win = fit_window(res.trace)
    if win is not None:
        try:
            rf = rate_fit(res.trace, win)
            fit = {"rho_hat": rf.rho_hat, "r_squared": rf.r_squared, "window": list(rf.window)}
        except ValueError:
            fit = None
    return {
        "status": res.status.value,
        "final_potential": _finite_or_none(last.potential),
        "final_grad_norm": math.hypot(last.grad_x_norm, last.grad_y_norm),
        "iterations": last.iter,
        "grad_evals": last.grad_evals,
        "rate_fit": fit,
    }


def cmd_run(args) -> int:
    conf = load_config(args.config)
    if args.seed is not None:
        conf.cfg.seed = args.seed
    out = args.out or conf.output
    res = execute(conf)
    write_trace_csv(out, res.trace)
    summary = summarize(res)
    summary["trace"] = str(out)
    print(json.dumps(summary))
    return 0


SWEEP_HEADER = ["tau1", "tau2", "seed", "final_potential", "final_grad_norm", "rho_hat", "status", "best"]


def cmd_sweep(args) -> int:
    conf = load_config(args.config)
    if conf.sweep is None:
        raise ConfigError("sweep needs a 'sweep' block with tau1, tau2 and seeds")
    seeds = [args.seed] if args.seed is not None else conf.sweep.seeds
    cells = [(t1, t2, s) for t1 in conf.sweep.tau1 for t2 in conf.sweep.tau2 for s in seeds]
    problem = build_problem(conf.problem)
    if conf.solver == "vr_agda" or conf.schedule.preset != "constant":
        base_schedule = conf.schedule.model_copy(update={"preset": "constant"})
    else:
        base_schedule = conf.schedule

    def one(cell):
        t1, t2, s = cell
        c = conf.model_copy(deep=True)
        c.schedule = base_schedule.model_copy(update={"tau1": t1, "tau2": t2})
        c.cfg.seed = s
        summ = summarize(execute(c, problem))
        rho = summ["rate_fit"]["rho_hat"] if summ["rate_fit"] else None
        return [t1, t2, s, summ["final_potential"], summ["final_grad_norm"], rho, summ["status"]]

    rows: list[Optional[list]] = [None] * len(cells)
    lock = threading.Lock()

    def task(k):
        row = one(cells[k])
        with lock:
            rows[k] = row

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as ex:
        list(ex.map(task, range(len(cells))))

    # rank by final potential; problems without g fall back to the gradient norm
    col = 3 if any(r[3] is not None for r in rows) else 4
    best, best_val = None, math.inf
    for k, r in enumerate(rows):
        if r[6] == solvers.Status.COMPLETED.value and r[col] is not None and r[col] < best_val:
            best, best_val = k, r[col]
    out = args.out or conf.output
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER)
        for k, r in enumerate(rows):
            w.writerow([_fmt(v) for v in r] + [int(k == best)])
    print(json.dumps({"cells": len(rows), "best": None if best is None else dict(zip(SWEEP_HEADER, rows[best])), "summary": str(out)}))
    return 0


def _parse_dims(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError as e:
        raise ConfigError(f"dims must look like 'n,m', got {text!r}") from e
    return a, b


def cmd_gen_data(args) -> int:
    if not args.out:
        raise ConfigError("gen-data needs --out DIR")
    data = gen_rls_dataset(
        DatasetKind(args.dataset), _parse_dims(args.dims), args.seed if args.seed is not None else 0,
        path=args.path, rank_fraction=args.rank_fraction,
    )
    save_rls_dataset(data, args.out)
    print(json.dumps({"out": str(args.out), "A": list(data.A.shape), "C": list(data.C.shape), "lambda_reg": data.lambda_reg}))
    return 0


def cmd_verify(args) -> int:
    p = build_problem(ProblemSpec(name=args.problem))
    try:
        lo_x, hi_x, lo_y, hi_y = (float(v) for v in args.region.split(","))
    except ValueError as e:
        raise ConfigError(f"region must be 'xlo,xhi,ylo,yhi', got {args.region!r}") from e
    region = [(lo_x, hi_x)] * p.d1 + [(lo_y, hi_y)] * p.d2
    est = pl_estimate_grid(p, region, args.resolution)
    print(json.dumps(est.to_dict()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="agda-pl", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="experiment config (JSON)")
        sp.add_argument("--out", help="output path (overrides the config)")
        sp.add_argument("--seed", type=int, help="seed override")

    sp = sub.add_parser("run", help="run one experiment and write its trace CSV")
    common(sp)
    sp.set_defaults(func=cmd_run, needs_config=True)

    sp = sub.add_parser("sweep", help="grid over tau1, tau2 and seeds; writes a summary CSV")
    common(sp)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_sweep, needs_config=True)

    sp = sub.add_parser("gen-data", help="generate an RLS dataset directory")
    common(sp)
    sp.add_argument("--dataset", choices=[k.value for k in DatasetKind], default="dataset1")
    sp.add_argument("--dims", default="1000,500")
    sp.add_argument("--path", help="input CSV for --dataset csv")
    sp.add_argument("--rank-fraction", type=float, default=0.8)
    sp.set_defaults(func=cmd_gen_data, needs_config=False)

    sp = sub.add_parser("verify", help="grid estimate of the two-sided PL constants")
    common(sp)
    sp.add_argument("--problem", choices=["toy", "logistic_bilinear", "rls"], default="toy")
    sp.add_argument("--region", default="-2,2,-2,2")
    sp.add_argument("--resolution", type=int, default=101)
    sp.set_defaults(func=cmd_verify, needs_config=False)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.needs_config and not args.config:
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ValidationError, UnsupportedOperation, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
