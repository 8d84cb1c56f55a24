"""Seeded Monte-Carlo sweeps over (m, epsilon, seed) grids.

Every cell draws its users from a stream keyed by (seed, m), so all
algorithms and budgets in a sweep see the same data; each estimator then gets
its own stream keyed by (seed, algorithm, m, epsilon).
"""
from __future__ import annotations

import csv
import json
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .baselines import all_sample_hr, one_sample_hr
from .core import as_distribution, make_rng, sample_users, tv_distance, uniform
from .estimators import REGIMES, EstimateReport, choose_regime, run_regime

ALGOS = ("auto",) + REGIMES + ("one_sample_hr", "all_sample_hr")
CSV_HEADER = ["algo", "regime", "k", "m", "n", "epsilon", "seed", "tv_error", "runtime_ms"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    k: int
    m: list
    n: int
    epsilon: list
    dist: str = "uniform"
    algos: list = field(default_factory=lambda: ["auto"])
    constants: str = "experiment"
    variant: str = "interactive"
    seeds: list = field(default_factory=lambda: [0])
    timing: bool = True

    def __post_init__(self):
        self.m = [int(v) for v in _as_list(self.m)]
        self.epsilon = [float(v) for v in _as_list(self.epsilon)]
        self.algos = [str(a) for a in _as_list(self.algos)]
        self.seeds = [int(s) for s in _as_list(self.seeds)] or [0]
        for a in self.algos:
            if a not in ALGOS:
                raise ConfigError(f"unknown algorithm {a!r}")
        if self.k < 2 or self.n < 1 or not self.m or not self.epsilon:
            raise ConfigError("need k >= 2, n >= 1 and nonempty m and epsilon lists")
        self.distribution()

    def distribution(self) -> np.ndarray:
        spec = self.dist.strip()
        if spec == "uniform":
            return uniform(self.k)
        hit = re.fullmatch(r"two-point\(\s*([0-9.eE+-]+)\s*\)", spec)
        if hit:
            if self.k != 2:
                raise ConfigError("two-point distributions need k = 2")
            q = float(hit.group(1))
            return as_distribution([q, 1 - q])
        try:
            vec = as_distribution([float(v) for v in _as_list(_parse_value(spec))])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad distribution {spec!r}: {exc}") from None
        if vec.size != self.k:
            raise ConfigError("distribution length differs from k")
        return vec

    def scaled(self, factor: float) -> "ExperimentConfig":
        return replace(self, n=max(1, int(round(self.n * factor))))


def _as_list(v) -> list:
    if isinstance(v, (list, tuple)):
        return list(v)
    return [v]


def _parse_scalar(tok: str):
    tok = tok.strip()
    for cast in (int, float):
        try:
            return cast(tok)
        except ValueError:
            pass
    if tok.lower() in ("true", "false"):
        return tok.lower() == "true"
    return tok


def _parse_value(raw: str):
    raw = raw.strip()
    if raw.startswith("[") and raw.endswith("]"):
        inner = raw[1:-1].strip()
        return [_parse_scalar(t) for t in inner.split(",")] if inner else []
    return _parse_scalar(raw)


_FIELDS = {"k", "m", "n", "epsilon", "dist", "algos", "constants", "variant", "seeds", "timing"}


def parse_config(text: str, base: Optional[dict] = None) -> ExperimentConfig:
    """Flat ``key = value`` text; lists are written ``[a, b, c]``; ``#`` starts a comment."""
    values = dict(base or {})
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown field {key!r}")
        values[key] = raw if key == "dist" else _parse_value(raw)
    missing = {"k", "m", "n", "epsilon"} - values.keys()
    if missing:
        raise ConfigError(f"missing fields: {', '.join(sorted(missing))}")
    try:
        return ExperimentConfig(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


M_GRID = [32, 64, 128, 256, 512]
SEEDS5 = [0, 1, 2, 3, 4]
BASELINES = ["auto", "one_sample_hr", "all_sample_hr"]

PRESETS = {
    "fig1-left": dict(k=2, m=M_GRID, n=9000, epsilon=[0.9], dist="two-point(0.6)",
                      algos=BASELINES, seeds=SEEDS5),
    "fig1-middle": dict(k=32, m=M_GRID, n=9000 * 32, epsilon=[0.9], algos=BASELINES, seeds=SEEDS5),
    "fig2-left": dict(k=1000, m=[20], n=600 * 1000, epsilon=[1, 2, 3, 4], algos=BASELINES,
                      seeds=SEEDS5),
    "fig2-middle": dict(k=500, m=[128], n=1200 * 500, epsilon=[1, 2, 3, 4, 5, 6],
                        algos=BASELINES, seeds=SEEDS5),
    "fig2-right": dict(k=200, m=[256], n=1200 * 200, epsilon=[1, 2, 3, 4, 5, 6],
                       algos=BASELINES, seeds=SEEDS5),
    "noninteractive-k2": dict(k=2, m=M_GRID, n=9000, epsilon=[0.9], dist="two-point(0.1)",
                              algos=BASELINES, variant="noninteractive", seeds=SEEDS5),
}
# fig1-right is read off the fig1-middle sweep as error ratios
PRESETS["fig1-right"] = PRESETS["fig1-middle"]
for _name in list(PRESETS):
    PRESETS[_name + "-small"] = dict(PRESETS[_name], n=PRESETS[_name]["n"] // 10)


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    return ExperimentConfig(**PRESETS[name])


def run_algorithm(algo: str, users, epsilon: float, rng, constants="experiment",
                  variant="interactive"):
    """Estimate with one named algorithm; returns (p_hat, regime, diagnostics)."""
    regime = choose_regime(users.k, users.m, epsilon)
    if algo == "one_sample_hr":
        return one_sample_hr(users, epsilon, rng), regime, {"user_level_private": True}
    if algo == "all_sample_hr":
        return all_sample_hr(users, epsilon, rng), regime, {"user_level_private": users.m == 1}
    name = regime if algo == "auto" else algo
    p, diag = run_regime(name, users, epsilon, rng, constants, variant)
    return p, regime, dict(diag, estimator=name)


def _eps_key(e: float) -> int:
    return int(round(e * 1_000_000))


def _run_cell(cfg: ExperimentConfig, m: int, seed: int) -> list[EstimateReport]:
    p = cfg.distribution()
    users = sample_users(p, m, cfg.n, make_rng(seed, 0, m))
    out = []
    for e in cfg.epsilon:
        for algo in cfg.algos:
            rng = make_rng(seed, 1, ALGOS.index(algo), m, _eps_key(e))
            t0 = time.perf_counter()
            p_hat, regime, diag = run_algorithm(algo, users, e, rng, cfg.constants, cfg.variant)
            ms = (time.perf_counter() - t0) * 1e3 if cfg.timing else 0.0
            out.append(EstimateReport(algo, regime, cfg.k, m, cfg.n, e, p_hat,
                                      tv_distance(p_hat, p), seed, ms, diag))
    return out


def run(cfg: ExperimentConfig, jobs: int = 1) -> list[EstimateReport]:
    """One report per (m, epsilon, algorithm, seed), in a fixed order."""
    cells = [(m, s) for m in cfg.m for s in cfg.seeds]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_cell, [cfg] * len(cells), *zip(*cells)))
    else:
        parts = [_run_cell(cfg, m, s) for m, s in cells]
    return [r for part in parts for r in part]


def _sort_key(r: EstimateReport):
    return (r.algo, r.m, r.epsilon, r.seed)


def sweep_to_csv(reports: Sequence[EstimateReport], path) -> None:
    if not reports:
        raise ValueError("no reports to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in sorted(reports, key=_sort_key):
            w.writerow([r.algo, r.regime, r.k, r.m, r.n, repr(float(r.epsilon)), r.seed,
                        repr(float(r.tv_error)), repr(round(float(r.runtime_ms), 3))])


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in ("k", "m", "n", "seed"):
            row[key] = int(row[key])
        for key in ("epsilon", "tv_error", "runtime_ms"):
            row[key] = float(row[key])
    return rows


def reports_to_json(reports: Sequence[EstimateReport]) -> str:
    return json.dumps([r.as_dict() for r in sorted(reports, key=_sort_key)], indent=1)


def summarize(rows) -> dict:
    """(algo, m, epsilon) -> (mean tv error, std over seeds)."""
    groups: dict = {}
    for r in rows:
        get = r.get if isinstance(r, dict) else r.__getattribute__
        groups.setdefault((get("algo"), get("m"), get("epsilon")), []).append(get("tv_error"))
    return {key: (float(np.mean(v)), float(np.std(v))) for key, v in sorted(groups.items())}


def summary_table(summary: dict) -> str:
    lines = [f"{'algo':<16}{'m':>6}{'epsilon':>9}{'mean_tv':>12}{'std_tv':>12}"]
    for (algo, m, e), (mu, sd) in summary.items():
        lines.append(f"{algo:<16}{m:>6}{e:>9.3g}{mu:>12.5f}{sd:>12.5f}")
    return "\n".join(lines)


def ratio_table(summary: dict, num: str, den: str) -> dict:
    """(m, epsilon) -> mean error of ``num`` over mean error of ``den``."""
    out = {}
    for (algo, m, e), (mu, _) in summary.items():
        if algo == num and (den, m, e) in summary:
            d = summary[(den, m, e)][0]
            out[(m, e)] = mu / d if d > 0 else math.inf
    return out
