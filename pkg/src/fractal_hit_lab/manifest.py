"""Experiment manifests: strict config parsing, dispatch, persistence.

A manifest is a single JSON document with a versioned schema.  Unknown keys
are errors, not warnings, and every value is validated with its dotted path
reported on failure.  Runs are deterministic: byte-identical JSONL for the
same manifest and seed regardless of worker count (wall-clock metadata goes
to a separate file that is excluded from the determinism contract).
Rationals are serialized as "p/q" strings so nothing round-trips through
floats.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from . import experiments as xp
from .cantor import (
    CantorSchedule,
    CantorTarget,
    FullCubeTarget,
    Generation,
    IntervalTarget,
    SingletonTarget,
    TargetSet,
    block_tuned_schedule,
    build_levels,
    floor_power_schedule,
    uniform_schedule,
)
from .correlation import f_and_delta
from .errors import ConfigInvalid, FractalLabError
from .grid import RationalInterval
from .models import (
    BernoulliSpec,
    PointProcessSpec,
    PowerBoundary,
    SelectionModel,
    StaircaseBoundary,
    hit_prob_log2,
)

SCHEMA_VERSION = 1

KINDS = (
    "hitprob",
    "corr",
    "hit_count_stats",
    "cover_count_stats",
    "boxdim",
    "beta_coverage",
    "cantor_counting",
)

# spec'd CLI tokens that map onto the canonical kinds
KIND_ALIASES = {
    "sn": "hit_count_stats",
    "hn": "cover_count_stats",
    "lemma23": "beta_coverage",
    "prop14-count": "cantor_counting",
}


def _fail(path: str, msg: str):
    raise ConfigInvalid(path, msg)


def _check_keys(obj: dict, path: str, allowed: set[str], required: set[str]):
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            _fail(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in obj:
            _fail(f"{path}.{key}", "missing required key")


def _rational(value: Any, path: str) -> Fraction:
    try:
        if isinstance(value, str):
            return Fraction(value)
        if isinstance(value, (int, float)):
            return Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        _fail(path, f"bad rational: {exc}")
    _fail(path, f"expected int, float, or 'p/q' string, got {type(value).__name__}")


def _int(value: Any, path: str, low: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        _fail(path, f"expected an integer, got {value!r}")
    if low is not None and value < low:
        _fail(path, f"must be >= {low}, got {value}")
    return value


def _int_list(value: Any, path: str, low: int | None = None) -> list[int]:
    if not isinstance(value, list) or not value:
        _fail(path, "expected a non-empty list of integers")
    return [_int(v, f"{path}[{i}]", low) for i, v in enumerate(value)]


def build_model(cfg: Any, path: str = "model") -> SelectionModel:
    _check_keys(cfg, path, {"kind", "gamma", "table", "boundary"}, {"kind"})
    kind = cfg["kind"]
    if kind == "bernoulli":
        if ("gamma" in cfg) == ("table" in cfg):
            _fail(path, "bernoulli needs exactly one of gamma/table")
        if "gamma" in cfg:
            return BernoulliSpec(gamma=_rational(cfg["gamma"], f"{path}.gamma"))
        table = cfg["table"]
        if not isinstance(table, dict) or not table:
            _fail(f"{path}.table", "expected a non-empty object of level: prob")
        parsed = {}
        for key, val in table.items():
            try:
                lvl = int(key)
            except ValueError:
                _fail(f"{path}.table.{key}", "level keys must be integers")
            parsed[lvl] = _rational(val, f"{path}.table.{key}")
        return BernoulliSpec(table=parsed)
    if kind == "point_process":
        if "boundary" not in cfg:
            _fail(f"{path}.boundary", "missing required key")
        bcfg = cfg["boundary"]
        bpath = f"{path}.boundary"
        _check_keys(bcfg, bpath, {"kind", "gamma0", "n_seq", "t_seq"}, {"kind"})
        if bcfg["kind"] == "power":
            if "gamma0" not in bcfg:
                _fail(f"{bpath}.gamma0", "missing required key")
            return PointProcessSpec(
                PowerBoundary(_rational(bcfg["gamma0"], f"{bpath}.gamma0"))
            )
        if bcfg["kind"] == "staircase":
            for need in ("n_seq", "t_seq"):
                if need not in bcfg:
                    _fail(f"{bpath}.{need}", "missing required key")
            n_seq = _int_list(bcfg["n_seq"], f"{bpath}.n_seq", 1)
            t_seq = [
                _rational(t, f"{bpath}.t_seq[{i}]")
                for i, t in enumerate(bcfg["t_seq"])
            ]
            return PointProcessSpec(StaircaseBoundary(tuple(n_seq), tuple(t_seq)))
        _fail(f"{bpath}.kind", f"unknown boundary kind {bcfg['kind']!r}")
    _fail(f"{path}.kind", f"unknown model kind {kind!r}")


def build_schedule(cfg: Any, path: str) -> CantorSchedule:
    _check_keys(
        cfg,
        path,
        {"kind", "children", "ratio", "depth", "t", "n_seq", "t_seq", "m1",
         "generations"},
        {"kind"},
    )
    kind = cfg["kind"]
    if kind == "uniform":
        for need in ("children", "ratio", "depth"):
            if need not in cfg:
                _fail(f"{path}.{need}", "missing required key")
        return uniform_schedule(
            _int(cfg["children"], f"{path}.children", 2),
            _rational(cfg["ratio"], f"{path}.ratio"),
            _int(cfg["depth"], f"{path}.depth", 1),
        )
    if kind == "floor_power":
        for need in ("t", "n_seq"):
            if need not in cfg:
                _fail(f"{path}.{need}", "missing required key")
        return floor_power_schedule(
            _rational(cfg["t"], f"{path}.t"),
            _int_list(cfg["n_seq"], f"{path}.n_seq", 1),
        )
    if kind == "block_tuned":
        for need in ("t_seq", "depth"):
            if need not in cfg:
                _fail(f"{path}.{need}", "missing required key")
        t_seq = [_rational(t, f"{path}.t_seq[{i}]") for i, t in enumerate(cfg["t_seq"])]
        tuned = block_tuned_schedule(
            t_seq,
            _int(cfg["depth"], f"{path}.depth", 1),
            m1=_int(cfg.get("m1", 2), f"{path}.m1", 1),
        )
        return tuned.schedule()
    if kind == "explicit":
        gens = cfg.get("generations")
        if not isinstance(gens, list) or not gens:
            _fail(f"{path}.generations", "expected a non-empty list of [count, ratio]")
        parsed = []
        for i, item in enumerate(gens):
            if not isinstance(item, list) or len(item) != 2:
                _fail(f"{path}.generations[{i}]", "expected [count, ratio]")
            parsed.append(
                Generation(
                    _int(item[0], f"{path}.generations[{i}][0]", 2),
                    _rational(item[1], f"{path}.generations[{i}][1]"),
                )
            )
        return CantorSchedule(tuple(parsed))
    _fail(f"{path}.kind", f"unknown schedule kind {kind!r}")


def build_target(cfg: Any, path: str = "target") -> TargetSet:
    _check_keys(cfg, path, {"kind", "point", "left", "right", "schedule", "depth"}, {"kind"})
    kind = cfg["kind"]
    if kind == "full":
        return FullCubeTarget()
    if kind == "singleton":
        if "point" not in cfg:
            _fail(f"{path}.point", "missing required key")
        return SingletonTarget(_rational(cfg["point"], f"{path}.point"))
    if kind == "interval":
        for need in ("left", "right"):
            if need not in cfg:
                _fail(f"{path}.{need}", "missing required key")
        return IntervalTarget(
            RationalInterval(
                _rational(cfg["left"], f"{path}.left"),
                _rational(cfg["right"], f"{path}.right"),
            )
        )
    if kind == "cantor":
        if "schedule" not in cfg:
            _fail(f"{path}.schedule", "missing required key")
        schedule = build_schedule(cfg["schedule"], f"{path}.schedule")
        depth = cfg.get("depth")
        levels = build_levels(
            schedule, _int(depth, f"{path}.depth", 1) if depth is not None else None
        )
        return CantorTarget(levels)
    _fail(f"{path}.kind", f"unknown target kind {kind!r}")


# ---------------------------------------------------------------------------


@dataclass
class ExperimentManifest:
    kind: str
    config: dict
    seed: int
    trials: int
    workers: int = 1
    out_dir: Path | None = None

    def digest(self) -> str:
        canon = json.dumps(
            {"config": self.config, "seed": self.seed, "trials": self.trials,
             "schema_version": SCHEMA_VERSION},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class ResultRecord:
    manifest_digest: str
    kind: str
    rows: list[dict]
    all_passed: bool
    duration_seconds: float


_TOP_KEYS = {
    "schema_version", "kind", "model", "target", "window", "windows", "level",
    "levels", "epsilons", "trials", "seed", "workers", "gamma0", "beta", "t",
    "n_seq", "m_seq", "t_m_seq", "depth", "epsilon", "factor_cap",
}


def load_manifest(
    path: str | Path,
    seed: int | None = None,
    trials: int | None = None,
    out_dir: str | Path | None = None,
    workers: int | None = None,
) -> ExperimentManifest:
    """Read and strictly validate a manifest file; overrides win."""
    raw = json.loads(Path(path).read_text())
    _check_keys(raw, "$", _TOP_KEYS, {"schema_version", "kind"})
    if raw["schema_version"] != SCHEMA_VERSION:
        _fail("$.schema_version", f"expected {SCHEMA_VERSION}")
    kind = KIND_ALIASES.get(raw["kind"], raw["kind"])
    if kind not in KINDS:
        _fail("$.kind", f"unknown experiment kind {raw['kind']!r}")
    man = ExperimentManifest(
        kind=kind,
        config=raw,
        seed=seed if seed is not None else _int(raw.get("seed", 0), "$.seed", 0),
        trials=(
            trials
            if trials is not None
            else _int(raw.get("trials", 10000), "$.trials", 0)
        ),
        workers=(
            workers
            if workers is not None
            else _int(raw.get("workers", 1), "$.workers", 1)
        ),
        out_dir=Path(out_dir) if out_dir is not None else None,
    )
    validate_manifest(man)
    return man


def _levels_from(cfg: dict, path: str = "$") -> list[int]:
    if "levels" in cfg:
        return _int_list(cfg["levels"], f"{path}.levels", 1)
    if "level" in cfg:
        return [_int(cfg["level"], f"{path}.level", 1)]
    _fail(f"{path}.levels", "need level or levels")


def _windows_from(cfg: dict) -> list[xp.WindowSpec]:
    out = []
    if "window" in cfg:
        w = cfg["window"]
        _check_keys(w, "$.window", {"lo", "hi"}, {"lo", "hi"})
        out.append(xp.WindowSpec(_int(w["lo"], "$.window.lo", 1), _int(w["hi"], "$.window.hi", 1)))
    if "windows" in cfg:
        ws = cfg["windows"]
        if not isinstance(ws, list) or not ws:
            _fail("$.windows", "expected a non-empty list of [lo, hi]")
        for i, w in enumerate(ws):
            if not isinstance(w, list) or len(w) != 2:
                _fail(f"$.windows[{i}]", "expected [lo, hi]")
            out.append(
                xp.WindowSpec(
                    _int(w[0], f"$.windows[{i}][0]", 1),
                    _int(w[1], f"$.windows[{i}][1]", 1),
                )
            )
    if not out:
        _fail("$.window", "need window or windows")
    return out


def validate_manifest(man: ExperimentManifest) -> None:
    """Surface config errors (including schedule side conditions) before any
    sampling starts."""
    cfg = man.config
    kind = man.kind
    if kind in ("hitprob", "corr", "hit_count_stats", "cover_count_stats"):
        if "model" not in cfg:
            _fail("$.model", "missing required key")
        build_model(cfg["model"])
    if kind in ("hitprob", "hit_count_stats", "cover_count_stats", "boxdim"):
        if "target" not in cfg:
            _fail("$.target", "missing required key")
        build_target(cfg["target"])
    if kind == "hitprob":
        _windows_from(cfg)
    if kind in ("corr", "hit_count_stats", "cover_count_stats", "boxdim"):
        _levels_from(cfg)
    if kind == "corr":
        eps = cfg.get("epsilons")
        if not isinstance(eps, list) or not eps:
            _fail("$.epsilons", "expected a non-empty list")
        for i, e in enumerate(eps):
            if _rational(e, f"$.epsilons[{i}]") <= 0:
                _fail(f"$.epsilons[{i}]", "epsilon must be > 0")
    if kind == "beta_coverage":
        for need in ("gamma0", "beta"):
            if need not in cfg:
                _fail(f"$.{need}", "missing required key")
        _levels_from(cfg)
    if kind == "cantor_counting":
        for need in ("t", "n_seq", "m_seq", "t_m_seq", "depth"):
            if need not in cfg:
                _fail(f"$.{need}", "missing required key")


# ---------------------------------------------------------------------------
# Runners


def _fmt(value: Any) -> Any:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return value
    return value


def _run_hitprob(man: ExperimentManifest) -> list[dict]:
    model = build_model(man.config["model"])
    target = build_target(man.config["target"])
    rows = []
    for w in _windows_from(man.config):
        r = xp.window_hit_probability(
            model, target, w, man.trials, man.seed, man.workers
        )
        rows.append(
            {
                "row": "window",
                "n_lo": w.n_lo,
                "n_hi": w.n_hi,
                "oracle": r.exact_oracle,
                "empirical": r.empirical,
                "radius": r.radius,
                "trials": man.trials,
                "pass": bool(r.oracle_within_radius),
            }
        )
    return rows


def _run_corr(man: ExperimentManifest) -> list[dict]:
    model = build_model(man.config["model"])
    levels = _levels_from(man.config)
    rows = []
    for e in man.config["epsilons"]:
        eps = _rational(e, "$.epsilons[]")
        rep = f_and_delta(model, levels, eps)
        for n, f, d in zip(rep.levels, rep.f_values, rep.delta_seq):
            rows.append(
                {
                    "row": "level",
                    "n": n,
                    "epsilon": _fmt(eps),
                    "f": f,
                    "log2f_over_n": d,
                    "source": rep.source,
                }
            )
        rows.append(
            {
                "row": "summary",
                "epsilon": _fmt(eps),
                "delta_est": rep.delta_est,
                "tail_window": rep.tail_window,
                "pass": True,
            }
        )
    return rows


def _run_hit_count(man: ExperimentManifest) -> list[dict]:
    model = build_model(man.config["model"])
    target = build_target(man.config["target"])
    rows = []
    for n in _levels_from(man.config):
        s = xp.hit_count_statistics(model, target, n, man.trials, man.seed, man.workers)
        rows.append(
            {
                "row": "level",
                "n": n,
                "cube_count": s.cube_count,
                "exact_mean": _fmt(s.exact_mean),
                "exact_variance": _fmt(s.exact_variance),
                "pz_bound": s.pz_bound,
                "exact_pos_prob": s.exact_pos_prob,
                "empirical_mean": s.empirical_mean,
                "empirical_pos_freq": s.empirical_pos_freq,
                "radius": s.radius,
                "pass": bool(s.pz_holds),
            }
        )
    return rows


def _run_cover_count(man: ExperimentManifest) -> list[dict]:
    model = build_model(man.config["model"])
    target = build_target(man.config["target"])
    epsilon = float(man.config.get("epsilon", 0.05))
    cap = float(man.config.get("factor_cap", 3.0))
    rows = []
    for n in _levels_from(man.config):
        s = xp.cover_count_statistic(
            model, target, n, epsilon=epsilon, factor_cap=cap
        )
        rows.append(
            {
                "row": "level",
                "n": n,
                "ball_count": s.ball_count,
                "neighbor_max": s.neighbor_max,
                "exact_mean": _fmt(s.exact_mean),
                "slope": s.slope,
                "gamma1_hat": s.gamma1_hat,
                "constant": s.constant,
                "pass": bool(s.bound_holds and s.neighbor_max <= 3),
            }
        )
    return rows


def _run_boxdim(man: ExperimentManifest) -> list[dict]:
    target = build_target(man.config["target"])
    levels = _levels_from(man.config)
    counts = [(n, target.covering_count(n)) for n in levels]
    fit = xp.box_dim_estimate(counts)
    rows = [
        {
            "row": "counts",
            "levels": list(levels),
            "counts": [c for _, c in counts],
        },
        {
            "row": "fit",
            "slope": fit.slope,
            "intercept": fit.intercept,
            "residual": fit.residual,
            "points": fit.points,
            "pass": True,
        },
    ]
    if "model" in man.config:
        model = build_model(man.config["model"])
        expected = [
            (n, float(c) * 2.0 ** hit_prob_log2(model, n)) for n, c in counts
        ]
        xs = [n for n, v in expected if v > 0]
        ys = [v for _, v in expected if v > 0]
        if len(xs) >= 3:
            import numpy as np

            slope, intercept = np.polyfit(
                np.array(xs, float), np.log2(np.array(ys)), 1
            )
            rows.append(
                {
                    "row": "expected_fit",
                    "slope": float(slope),
                    "intercept": float(intercept),
                    "pass": True,
                }
            )
    return rows


def _run_beta_coverage(man: ExperimentManifest) -> list[dict]:
    cfg = man.config
    rows = []
    for n in _levels_from(cfg):
        r = xp.beta_coverage(
            _rational(cfg["gamma0"], "$.gamma0"),
            _rational(cfg["beta"], "$.beta"),
            n,
            man.trials,
            man.seed,
            man.workers,
        )
        rows.append(
            {
                "row": "level",
                "n": n,
                "block_count": r.block_count,
                "empirical_coverage": r.empirical_coverage,
                "empirical_noncoverage": r.empirical_noncoverage,
                "radius": r.radius,
                "bound_idealized": r.bound_idealized,
                "bound_actual_count": r.bound_actual_count,
                "pass": bool(r.noncover_within_bound),
            }
        )
    return rows


def _run_cantor_counting(man: ExperimentManifest) -> list[dict]:
    cfg = man.config
    trace = xp.nested_counting(
        _rational(cfg["t"], "$.t"),
        _int_list(cfg["n_seq"], "$.n_seq", 1),
        _int_list(cfg["m_seq"], "$.m_seq", 1),
        [_rational(v, f"$.t_m_seq[{i}]") for i, v in enumerate(cfg["t_m_seq"])],
        _int(cfg["depth"], "$.depth", 1),
    )
    rows = []
    for i in range(trace.depth):
        f = trace.f_counts[i]
        g = trace.g_counts[i]
        rows.append(
            {
                "row": "generation",
                "k": i + 1,
                "f_count": f if f.bit_length() <= 256 else None,
                "f_bits": f.bit_length(),
                "g_count": g if g.bit_length() <= 256 else None,
                "g_bits": g.bit_length(),
                "ratio_f": trace.ratio_f[i],
                "ratio_g": trace.ratio_g[i],
                "pass": f > 0 and g > 0,
            }
        )
    return rows


_RUNNERS: dict[str, Callable[[ExperimentManifest], list[dict]]] = {
    "hitprob": _run_hitprob,
    "corr": _run_corr,
    "hit_count_stats": _run_hit_count,
    "cover_count_stats": _run_cover_count,
    "boxdim": _run_boxdim,
    "beta_coverage": _run_beta_coverage,
    "cantor_counting": _run_cantor_counting,
}

_COLUMN_NOTES = {
    "n": "dyadic level (dimensionless)",
    "epsilon": "correlation threshold (exact rational)",
    "f": "correlated-pair count (exact integer)",
    "log2f_over_n": "growth exponent estimate (exact-count based)",
    "oracle": "exact closed-form probability",
    "empirical": "Monte Carlo frequency",
    "radius": "3 sigma normal-approximation radius of the empirical value",
    "pz_bound": "second-moment lower bound (exact moments)",
    "exact_mean": "exact expectation (rational, as p/q)",
    "exact_variance": "exact variance (rational, as p/q)",
    "empirical_mean": "Monte Carlo mean",
    "empirical_pos_freq": "Monte Carlo frequency of a positive count",
    "pass": "assertion outcome for this row",
}


def run_manifest(man: ExperimentManifest) -> ResultRecord:
    """Validate, run, optionally persist.  Deterministic per (config, seed)."""
    validate_manifest(man)
    started = time.monotonic()
    rows = _RUNNERS[man.kind](man)
    duration = time.monotonic() - started
    passed = all(r.get("pass", True) for r in rows)
    record = ResultRecord(
        manifest_digest=man.digest(),
        kind=man.kind,
        rows=rows,
        all_passed=passed,
        duration_seconds=duration,
    )
    if man.out_dir is not None:
        write_outputs(record, man.out_dir)
    return record


def _json_default(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    raise TypeError(f"not serializable: {type(value)}")


def write_outputs(record: ResultRecord, out_dir: str | Path) -> None:
    """results.jsonl + summary.csv (deterministic) and run_meta.json (not)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.jsonl", "w") as fh:
        header = {"manifest": record.manifest_digest, "kind": record.kind}
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for row in record.rows:
            fh.write(
                json.dumps(row, sort_keys=True, separators=(",", ":"),
                           default=_json_default)
                + "\n"
            )
    columns = sorted({k for row in record.rows for k in row})
    with open(out / "summary.csv", "w", newline="") as fh:
        for col in columns:
            note = _COLUMN_NOTES.get(col, "experiment-specific field")
            fh.write(f"# {col}: {note}\n")
        writer = csv.DictWriter(fh, fieldnames=columns, restval="")
        writer.writeheader()
        for row in record.rows:
            writer.writerow({k: _fmt_csv(v) for k, v in row.items()})
    with open(out / "run_meta.json", "w") as fh:
        json.dump(
            {
                "manifest": record.manifest_digest,
                "duration_seconds": record.duration_seconds,
                "all_passed": record.all_passed,
            },
            fh,
            indent=2,
        )


def _fmt_csv(value: Any) -> str:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ";".join(_fmt_csv(v) for v in value)
    if value is None:
        return ""
    return str(value)
