"""Result rows and parameter sweeps shared by every CLI subcommand.

Single-point commands and sweeps build their rows with the same functions,
so a value printed by one command is the same string as the matching sweep
cell. Rows are emitted in the lexicographic order of their input
coordinates regardless of how many worker threads evaluated them.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Any, Callable, Iterable, Sequence

from bdtp.dist_core import asymptotic_full_reward_prob, tree_value_exhaustive, tree_value_selective
from bdtp.optimize import (
    _argmax,
    ConvergenceError,
    GradientConfig,
    heterogeneous_scan,
    homogeneous_scan,
    optimize_heterogeneous,
    optimize_homogeneous,
)
from bdtp.oracle_mc import AllocationMode, McConfig, mc_value
from bdtp.policy import InfeasibleError, heterogeneous_depth, homogeneous_policy, random_policy
from bdtp.reward_model import Family, make_reward_model

SIG_DIGITS = 12
MODES = ("exhaustive", "homogeneous", "heterogeneous", "random", "mc")

COLUMNS = {
    "exhaustive": ["family", "n", "b", "d", "value"],
    "selective": ["family", "n", "b", "d", "q", "value"],
    "homogeneous": ["family", "n", "C", "b", "d_prime", "q", "value", "b_star"],
    "optimize-homogeneous": ["family", "n", "C", "b_max", "b_star", "d_prime", "q", "value"],
    "heterogeneous": ["family", "n", "C", "b", "d", "q", "value", "iterations", "converged"],
    "optimize-heterogeneous": ["family", "n", "C", "b_max", "b_star", "d", "q", "value",
                               "iterations", "converged"],
    "random": ["family", "n", "C", "b", "d", "q", "value"],
    "mc": ["p", "b", "d", "C", "q", "runs", "seed", "allocation", "value", "stderr"],
    "fixed-point": ["p", "b", "value"],
    "loss-map": ["family", "n", "C", "heuristic_b", "b_star", "v_opt", "value", "loss_percent"],
}

#: failures that are recorded per point instead of aborting a sweep
POINT_ERRORS = (ValueError, ArithmeticError, ConvergenceError)


def fmt(x: Any) -> str:
    """Canonical text form of a cell: floats to 12 significant digits."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "NA"
        out = format(x, f".{SIG_DIGITS}g")
        return "0" if out == "-0" else out
    if isinstance(x, (list, tuple)):
        return "[" + ",".join(fmt(float(v)) for v in x) + "]"
    if isinstance(x, Family):
        return x.value
    return str(x)


def loss_vs_optimal(v_opt: float, v: float) -> float:
    """Percentage of the optimal value forfeited by ``v``."""
    if not v_opt > 0:
        raise ValueError(f"loss is undefined for a non-positive optimum ({v_opt!r})")
    return 100.0 * (v_opt - v) / v_opt


# -- single-point rows -------------------------------------------------------

def exhaustive_row(family, n: int, b: int, d: int) -> dict:
    model = make_reward_model(family, n)
    return {"family": model.family, "n": n, "b": b, "d": d,
            "value": float(tree_value_exhaustive(model, b, d))}


def selective_row(family, n: int, b: int, q: Sequence[float]) -> dict:
    model = make_reward_model(family, n)
    return {"family": model.family, "n": n, "b": b, "d": len(q), "q": list(q),
            "value": float(tree_value_selective(model, b, len(q), q))}


def homogeneous_rows(family, n: int, C: float, b_values: Iterable[int]) -> list[dict]:
    model = make_reward_model(family, n)
    results = homogeneous_scan(model, C, b_values)
    best = max(results, key=lambda r: r.value) if results else None
    b_star = min(r.b_star for r in results if r.value == best.value) if results else None
    return [{"family": model.family, "n": n, "C": C, "b": r.b_star, "d_prime": r.d,
             "q": r.q_star, "value": r.value, "b_star": b_star} for r in results]


def optimize_homogeneous_row(family, n: int, C: float, b_max: int) -> dict:
    model = make_reward_model(family, n)
    r = optimize_homogeneous(model, C, b_max)
    return {"family": model.family, "n": n, "C": C, "b_max": b_max, "b_star": r.b_star,
            "d_prime": r.d, "q": r.q_star, "value": r.value}


def heterogeneous_row(family, n: int, C: float, b: int, config: GradientConfig) -> dict:
    model = make_reward_model(family, n)
    (r,) = heterogeneous_scan(model, C, [b], config)
    return {"family": model.family, "n": n, "C": C, "b": b, "d": r.d, "q": r.q_star,
            "value": r.value, "iterations": r.iterations_used, "converged": r.converged}


def optimize_heterogeneous_row(family, n: int, C: float, b_max: int, config: GradientConfig) -> dict:
    model = make_reward_model(family, n)
    r = optimize_heterogeneous(model, C, b_max, config)
    return {"family": model.family, "n": n, "C": C, "b_max": b_max, "b_star": r.b_star,
            "d": r.d, "q": r.q_star, "value": r.value, "iterations": r.iterations_used,
            "converged": r.converged}


def random_row(family, n: int, C: float, b: int, d: int | None = None) -> dict:
    model = make_reward_model(family, n)
    if d is None:
        d = heterogeneous_depth(b, C)
    policy = random_policy(b, d, C)
    return {"family": model.family, "n": n, "C": C, "b": b, "d": d, "q": policy.q,
            "value": float(tree_value_selective(model, b, d, policy.q))}


def mc_row(p: float, b: int, d: int | None, q: Sequence[float] | None, runs: int, seed: int,
           hard: bool = False, C: float | None = None, workers: int = 1) -> dict:
    if C is not None:
        policy, _ = homogeneous_policy(b, C)
        if d is not None:
            policy = policy.padded(d)
        q, d = policy.q, policy.d
    if d is None:
        raise ValueError("mc needs a depth d or a capacity C")
    mode = AllocationMode.HARD_EXACT if hard else AllocationMode.AVERAGE_BERNOULLI
    est = mc_value(p, b, d, q, McConfig(runs, seed, mode, workers))
    return {"p": p, "b": b, "d": d, "C": C, "q": list(q) if q is not None else [1.0] * d,
            "runs": runs, "seed": seed, "allocation": mode.value,
            "value": est.mean, "stderr": est.stderr}


def fixed_point_row(p: float, b: int) -> dict:
    return {"p": p, "b": b, "value": asymptotic_full_reward_prob(p, b)}


def loss_rows(family, n: int, C: float, heuristics: Sequence[int], b_max: int) -> list[dict]:
    """Loss of fixed-b homogeneous heuristics against the best homogeneous b."""
    model = make_reward_model(family, n)
    scan = homogeneous_scan(model, C, range(1, max(b_max, *heuristics) + 1))
    best = _argmax(scan[:b_max])
    rows = []
    for hb in sorted(heuristics):
        value = scan[hb - 1].value
        try:
            loss = loss_vs_optimal(best.value, value)
        except ValueError:
            loss = math.nan
        rows.append({"family": model.family, "n": n, "C": C, "heuristic_b": hb,
                     "b_star": best.b_star, "v_opt": best.value, "value": value,
                     "loss_percent": loss})
    return rows


# -- sweeps ------------------------------------------------------------------

@dataclass
class SweepSpec:
    mode: str
    C: list[float] = field(default_factory=list)
    families: list[tuple[str, int]] = field(default_factory=list)
    b: list[int] = field(default_factory=list)
    d: list[int] = field(default_factory=list)
    mc_p: list[float] = field(default_factory=list)
    runs: int = 10_000
    seed: int = 0
    hard: bool = False
    heuristics: list[int] = field(default_factory=lambda: [2, 20])
    b_max: int = 40
    fd_step: float = 1e-7
    lr: float = 1e-3
    max_iters: int = 1_000_000
    tol: float = 1e-9
    out: str | None = None
    threads: int | None = None
    json: bool = False

    @classmethod
    def from_dict(cls, raw: dict, mode: str | None = None) -> "SweepSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        raw = dict(raw)
        if mode is not None:
            raw.setdefault("mode", mode)
        if "mode" not in raw:
            raise ValueError("config needs a 'mode'")
        if "families" in raw:
            raw["families"] = [(str(f), int(k)) for f, k in raw["families"]]
        spec = cls(**raw)
        spec.validate()
        return spec

    @classmethod
    def load(cls, path: str, mode: str | None = None) -> "SweepSpec":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError("config must be a JSON object")
        return cls.from_dict(raw, mode)

    def validate(self) -> None:
        if self.mode not in MODES + ("loss-map",):
            raise ValueError(f"unknown mode {self.mode!r}")
        needs = {
            "exhaustive": ("families", "b", "d"),
            "homogeneous": ("families", "C", "b"),
            "heterogeneous": ("families", "C", "b"),
            "random": ("families", "C", "b"),
            "mc": ("mc_p", "b"),
            "loss-map": ("families", "C", "heuristics"),
        }[self.mode]
        for axis in needs:
            if not getattr(self, axis):
                raise ValueError(f"mode {self.mode!r} needs a nonempty {axis!r} axis")
        if self.mode == "mc" and not (self.d or self.C):
            raise ValueError("mode 'mc' needs a 'd' or a 'C' axis")
        for fam, k in self.families:
            make_reward_model(fam, k)

    def gradient_config(self) -> GradientConfig:
        return GradientConfig(fd_step=self.fd_step, learning_rate=self.lr,
                              max_iterations=self.max_iters, value_tolerance=self.tol)

    def model_axis(self) -> list[tuple[Family, int]]:
        # n = 1 is the same model in both families: keep one copy
        seen = {}
        for fam, k in self.families:
            m = make_reward_model(fam, k)
            seen[(m.family.value, m.n)] = (m.family, m.n)
        return [seen[key] for key in sorted(seen)]


def _points(spec: SweepSpec) -> tuple[list[str], list[Callable[[], list[dict]]], list[dict]]:
    """Column names, one thunk per sweep point, and the input coordinates of each point."""
    mode = spec.mode
    thunks, coords = [], []
    Cs, bs, ds = sorted(set(spec.C)), sorted(set(spec.b)), sorted(set(spec.d))
    if mode == "exhaustive":
        for fam, n in spec.model_axis():
            for b in bs:
                for d in ds:
                    thunks.append(lambda fam=fam, n=n, b=b, d=d: [exhaustive_row(fam, n, b, d)])
                    coords.append({"family": fam, "n": n, "b": b, "d": d})
    elif mode == "homogeneous":
        for fam, n in spec.model_axis():
            for C in Cs:
                thunks.append(lambda fam=fam, n=n, C=C: homogeneous_rows(fam, n, C, bs))
                coords.append({"family": fam, "n": n, "C": C})
    elif mode == "heterogeneous":
        config = spec.gradient_config()
        for fam, n in spec.model_axis():
            for C in Cs:
                for b in bs:
                    thunks.append(lambda fam=fam, n=n, C=C, b=b: [heterogeneous_row(fam, n, C, b, config)])
                    coords.append({"family": fam, "n": n, "C": C, "b": b})
    elif mode == "random":
        for fam, n in spec.model_axis():
            for C in Cs:
                for b in bs:
                    for d in ds or [None]:
                        thunks.append(lambda fam=fam, n=n, C=C, b=b, d=d: [random_row(fam, n, C, b, d)])
                        coords.append({"family": fam, "n": n, "C": C, "b": b, "d": d})
    elif mode == "mc":
        for p in sorted(set(spec.mc_p)):
            for b in bs:
                for d in ds or [None]:
                    for C in Cs or [None]:
                        thunks.append(lambda p=p, b=b, d=d, C=C: [
                            mc_row(p, b, d, None, spec.runs, spec.seed, spec.hard, C)])
                        coords.append({"p": p, "b": b, "d": d, "C": C, "runs": spec.runs,
                                       "seed": spec.seed})
    elif mode == "loss-map":
        hs = sorted(set(spec.heuristics))
        for fam, n in spec.model_axis():
            for C in Cs:
                thunks.append(lambda fam=fam, n=n, C=C: loss_rows(fam, n, C, hs, spec.b_max))
                coords.append({"family": fam, "n": n, "C": C})
    return COLUMNS[mode], thunks, coords


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("BDTP_THREADS", "1") or 1)
    return max(1, threads)


def run_sweep(spec: SweepSpec, threads: int | None = None) -> tuple[list[str], list[dict]]:
    """Evaluate every sweep point; failed points become rows with an ``error`` cell."""
    columns, thunks, coords = _points(spec)

    def evaluate(i: int) -> list[dict]:
        try:
            return thunks[i]()
        except POINT_ERRORS as exc:
            return [dict(coords[i], error=f"{type(exc).__name__}: {exc}")]

    workers = resolve_threads(threads if threads is not None else spec.threads)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(evaluate, range(len(thunks))))
    else:
        chunks = [evaluate(i) for i in range(len(thunks))]
    rows = [row for chunk in chunks for row in chunk]
    return columns + ["error"], rows


# -- output ------------------------------------------------------------------

def render_csv(columns: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def _json_cell(x: Any) -> Any:
    if x is None or isinstance(x, bool):
        return x
    if isinstance(x, float):
        return None if math.isnan(x) else float(fmt(x))
    if isinstance(x, (list, tuple)):
        return [float(fmt(float(v))) for v in x]
    if isinstance(x, Family):
        return x.value
    return x


def render_json(columns: Sequence[str], rows: Iterable[dict]) -> str:
    records = [{c: _json_cell(row.get(c)) for c in columns} for row in rows]
    return json.dumps(records, indent=1) + "\n"


def write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


__all__ = [
    "COLUMNS", "InfeasibleError", "SweepSpec", "fmt", "loss_vs_optimal", "render_csv",
    "render_json", "run_sweep", "write_output",
]
