"""Numerical verification harness producing tabular pass/fail reports.

Each check turns one limit statement into rows of (statistic, value,
reference, deviation, pass).  Absolute thresholds appear only where a constant
is pinned (the calibration ratio, the LCLT constant, the 0.8 total-variation
value); everything asymptotic-without-rate is checked as a trend along a
growing grid.  Reports are pure functions of (config, seed): grid cells run on
per-cell streams and reduce in index order, so the CSV bytes do not depend on
the thread count.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .enumerator import conditioned_point_mean, exact_endpoint_prob, tv_distance
from .errors import InvalidArgumentError
from .geometry import (
    PlanarPolyline,
    hausdorff_distance,
    lattice_point_count,
    tangential_distance,
    tangential_distance_to_limit,
)
from .measure import (
    KAPPA,
    calibrate,
    covariance,
    expected_endpoint,
    gaussian_density,
)
from .sampler import (
    FreeSampler,
    RngStream,
    sample_conditioned_dp,
    sample_conditioned_mixture,
)


@dataclass(frozen=True)
class ReportRow:
    check_id: str
    n1: int
    n2: int
    r: float
    statistic: str
    value: float
    reference: float
    deviation: float
    passed: bool


@dataclass
class Report:
    check_id: str
    rows: list[ReportRow]
    config: dict

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def to_csv(self) -> str:
        out = [f"# check={self.check_id}"]
        # threads deliberately left out of the echo: identical configs must
        # give identical bytes no matter how many workers ran the grid
        echo = {k: v for k, v in self.config.items() if k != "threads"}
        out.append("# config=" + json.dumps(echo, sort_keys=True, separators=(",", ":")))
        out.append("check_id,n1,n2,r,statistic,value,reference,deviation,pass")
        for row in self.rows:
            out.append(
                ",".join(
                    (
                        row.check_id,
                        str(row.n1),
                        str(row.n2),
                        _fmt(row.r),
                        row.statistic,
                        _fmt(row.value),
                        _fmt(row.reference),
                        _fmt(row.deviation),
                        "true" if row.passed else "false",
                    )
                )
            )
        return "\n".join(out) + "\n"


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def default_config() -> dict:
    return {
        "seed": 1729,
        "threads": 1,
        "calibration": {
            "grid": [[27, 27], [64, 64], [216, 216]],
            "aspect_grid": [[64, 256], [128, 512], [256, 1024]],
            "r_values": [0.5, 1.0, 2.0],
            "r_degenerate": 0.1,
            "ratio_tol": 0.05,
            "tol": 1e-10,
        },
        "lclt": {
            "grid": [[20, 20], [40, 40], [60, 60]],
            "r_values": [1.0, 2.0],
            "offcenter": [3, -2],
            "ratio_tol": 0.3,
            "tol": 1e-10,
        },
        "limit-shape": {
            "grid": [[10, 10], [20, 20], [40, 40]],
            "r_values": [0.5, 1.0, 2.0],
            "mixture": [[0.5, 1.0], [1.0, 1.0], [2.0, 1.0]],
            "free_r_values": [1.0],
            "replicas": 200,
            "free_replicas": 1000,
            "dt_threshold": 0.25,
            "prob_min": 0.9,
            "grid_step": 1e-4,
            "stream_base": 10000,
        },
        "lln": {
            "sequences": [
                {"r": 1.0, "grid": [[15, 15], [30, 30], [60, 60]], "replicas": 200, "bind_tol": True},
                {"r": 8.0, "grid": [[40, 40], [60, 60], [80, 80]], "replicas": 0, "bind_tol": False},
            ],
            "rel_tol": 0.2,
            "mc_sigma": 4.0,
            "stream_base": 20000,
        },
        "tv": {
            "extreme_n": [2, 2],
            "r_high": 1e6,
            "r_low": 1e-6,
            "extreme_tol": 1e-3,
            "trend_grid": [[2, 2], [4, 4], [6, 6]],
            "trend_r": [2.0, 1.0],
        },
        "metrics": {
            "pair_count": 10000,
            "max_edges": 8,
            "margin": 1e-9,
            "ratio_min": 100.0,
            "two_segment": {"length": 10.0, "tilt": 1e-4, "step": 1e-3},
            "stream_base": 30000,
        },
    }


def merge_config(overrides: dict | None) -> dict:
    cfg = default_config()
    if not overrides:
        return cfg
    for key, val in overrides.items():
        if isinstance(val, dict) and isinstance(cfg.get(key), dict):
            cfg[key] = {**cfg[key], **val}
        else:
            cfg[key] = val
    return cfg


def _parallel_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _trend_strict(values, decreasing: bool = True) -> bool:
    pairs = zip(values, values[1:])
    if decreasing:
        return all(a > b for a, b in pairs)
    return all(a < b for a, b in pairs)


# ---------------------------------------------------------------------------
# calibration


def check_calibration(config: dict | None = None) -> Report:
    cfg = merge_config(config)
    sub = cfg["calibration"]
    tol = sub["tol"]
    ratio_tol = sub["ratio_tol"]
    sequences = [(r, [tuple(n) for n in sub["grid"]]) for r in sub["r_values"]]
    if sub.get("r_degenerate"):
        sequences.append((sub["r_degenerate"], [tuple(n) for n in sub["grid"]]))
    sequences.append((1.0, [tuple(n) for n in sub["aspect_grid"]]))

    cells = [(r, n) for r, grid in sequences for n in grid]

    def cell(task):
        r, n = task
        a = expected_endpoint(calibrate(n, r), tol=tol)
        return a

    results = _parallel_map(cell, cells, cfg["threads"])
    by_cell = dict(zip(cells, results))

    rows: list[ReportRow] = []
    for r, grid in sequences:
        ratio_errs = {1: [], 2: []}
        refined = {1: [], 2: []}
        for n in grid:
            a = by_cell[(r, n)]
            last = n == grid[-1]
            for j in (1, 2):
                ratio = float(a[j - 1]) / n[j - 1]
                err = abs(ratio - 1.0)
                ratio_errs[j].append(err)
                rows.append(
                    ReportRow(
                        "calibration", n[0], n[1], r, f"xi{j}_ratio",
                        ratio, 1.0, err, err <= ratio_tol if last else True,
                    )
                )
                ref = (float(a[j - 1]) - n[j - 1]) / n[j - 1] ** (2.0 / 3.0)
                refined[j].append(abs(ref))
                rows.append(
                    ReportRow(
                        "calibration", n[0], n[1], r, f"xi{j}_refined",
                        ref, 0.0, abs(ref), True,
                    )
                )
        top = grid[-1]
        for j in (1, 2):
            rows.append(
                ReportRow(
                    "calibration", top[0], top[1], r, f"xi{j}_ratio_trend",
                    ratio_errs[j][-1], ratio_errs[j][0],
                    ratio_errs[j][-1] - ratio_errs[j][0],
                    _trend_strict(ratio_errs[j]),
                )
            )
            rows.append(
                ReportRow(
                    "calibration", top[0], top[1], r, f"xi{j}_refined_trend",
                    refined[j][-1], refined[j][0],
                    refined[j][-1] - refined[j][0],
                    refined[j][-1] < refined[j][0],
                )
            )
    return Report("calibration", rows, cfg)


# ---------------------------------------------------------------------------
# local CLT


def lclt_constant(n: tuple[int, int], r: float) -> float:
    """r^{1/3} kappa / (2 sqrt(3) pi) (n1 n2)^{-2/3}: the density at the center."""
    return r ** (1.0 / 3.0) * KAPPA / (2.0 * math.sqrt(3.0) * math.pi) / (n[0] * n[1]) ** (2.0 / 3.0)


def check_lclt(config: dict | None = None) -> Report:
    cfg = merge_config(config)
    sub = cfg["lclt"]
    grid = [tuple(n) for n in sub["grid"]]
    ratio_tol = sub["ratio_tol"]
    tol = sub["tol"]
    cells = [(r, n) for r in sub["r_values"] for n in grid]

    def cell(task):
        r, n = task
        params = calibrate(n, r)
        p_exact = exact_endpoint_prob(params, tol=tol)
        a = expected_endpoint(params, tol=tol)
        k = covariance(params, tol=tol)
        g = gaussian_density(a, k, n)
        return p_exact, g

    results = _parallel_map(cell, cells, cfg["threads"])
    by_cell = dict(zip(cells, results))

    rows: list[ReportRow] = []
    for r in sub["r_values"]:
        ratios = []
        for n in grid:
            p_exact, g = by_cell[(r, n)]
            last = n == grid[-1]
            dev_g = abs(p_exact / g - 1.0)
            rows.append(
                ReportRow(
                    "lclt", n[0], n[1], r, "exact_vs_gaussian",
                    p_exact, g, dev_g, dev_g <= ratio_tol if last else True,
                )
            )
            c = lclt_constant(n, r)
            ratio = p_exact / c
            ratios.append(ratio)
            rows.append(
                ReportRow(
                    "lclt", n[0], n[1], r, "corollary_ratio",
                    ratio, 1.0, abs(ratio - 1.0),
                    abs(ratio - 1.0) <= ratio_tol if last else True,
                )
            )
        top = grid[-1]
        errs = [abs(v - 1.0) for v in ratios]
        rows.append(
            ReportRow(
                "lclt", top[0], top[1], r, "corollary_ratio_trend",
                errs[-1], errs[0], errs[-1] - errs[0], _trend_strict(errs),
            )
        )
    # the theorem is uniform in m: probe one off-center point at the top size
    off = tuple(sub["offcenter"])
    top = grid[-1]
    params = calibrate(top, 1.0)
    m = (top[0] + off[0], top[1] + off[1])
    p_off = exact_endpoint_prob(params, m, tol=tol)
    g_off = gaussian_density(expected_endpoint(params, tol=tol), covariance(params, tol=tol), m)
    dev = abs(p_off / g_off - 1.0)
    rows.append(
        ReportRow(
            "lclt", m[0], m[1], 1.0, "offcenter_ratio",
            p_off / g_off, 1.0, dev, dev <= ratio_tol,
        )
    )
    return Report("lclt", rows, cfg)


# ---------------------------------------------------------------------------
# limit shape


def _dt_samples(variant, r_spec, n, replicas, stream, h) -> np.ndarray:
    if variant == "conditioned":
        lines = sample_conditioned_dp(n, r_spec, replicas, stream)
    elif variant == "mixture":
        lines = [line for _, line in sample_conditioned_mixture(n, r_spec, replicas, stream)]
    elif variant == "free":
        sampler = FreeSampler(calibrate(n, r_spec))
        gen = stream.generator()
        lines = []
        for _ in range(replicas):
            counts, _ = sampler.sample_counts(gen)
            lines.append(sampler.to_line(counts))
    else:
        raise InvalidArgumentError(f"unknown variant {variant!r}")
    return np.array([tangential_distance_to_limit(line, n, h) for line in lines])


def check_limit_shape(config: dict | None = None) -> Report:
    cfg = merge_config(config)
    sub = cfg["limit-shape"]
    grid = [tuple(n) for n in sub["grid"]]
    replicas = sub["replicas"]
    h = sub["grid_step"]
    threshold = sub["dt_threshold"]
    prob_min = sub["prob_min"]
    variants: list[tuple[str, object, float]] = []
    for r in sub["r_values"]:
        variants.append(("conditioned", float(r), float(r)))
    if sub.get("mixture"):
        prior = [(float(r), float(w)) for r, w in sub["mixture"]]
        r_label = math.fsum(r * w for r, w in prior) / math.fsum(w for _, w in prior)
        variants.append(("mixture", prior, r_label))
    for r in sub.get("free_r_values", []):
        variants.append(("free", float(r), float(r)))

    cells = [
        (vi, ni, variant, r_spec, n)
        for vi, (variant, r_spec, _) in enumerate(variants)
        for ni, n in enumerate(grid)
    ]

    def cell(task):
        vi, ni, variant, r_spec, n = task
        stream = RngStream(cfg["seed"], sub["stream_base"] + 100 * vi + ni)
        count = sub["free_replicas"] if variant == "free" else replicas
        return _dt_samples(variant, r_spec, n, count, stream, h)

    results = _parallel_map(cell, cells, cfg["threads"])

    rows: list[ReportRow] = []
    for vi, (variant, _, r_label) in enumerate(variants):
        stats = {"dt_mean": [], "dt_median": [], "dt_p90": []}
        for ni, n in enumerate(grid):
            d = results[vi * len(grid) + ni]
            mean = float(d.mean())
            median = float(np.quantile(d, 0.5))
            p90 = float(np.quantile(d, 0.9))
            stats["dt_mean"].append(mean)
            stats["dt_median"].append(median)
            stats["dt_p90"].append(p90)
            for name, value in (("dt_mean", mean), ("dt_median", median), ("dt_p90", p90)):
                rows.append(
                    ReportRow(
                        "limit-shape", n[0], n[1], r_label, f"{name}_{variant}",
                        value, 0.0, value, True,
                    )
                )
            frac = float((d <= threshold).mean())
            binding = variant != "free" and n == grid[-1]
            rows.append(
                ReportRow(
                    "limit-shape", n[0], n[1], r_label, f"dt_within_{_fmt(threshold)}_{variant}",
                    frac, prob_min, prob_min - frac,
                    frac >= prob_min if binding else True,
                )
            )
        top = grid[-1]
        for name, seq in stats.items():
            rows.append(
                ReportRow(
                    "limit-shape", top[0], top[1], r_label, f"{name}_trend_{variant}",
                    seq[-1], seq[0], seq[-1] - seq[0], _trend_strict(seq),
                )
            )
    return Report("limit-shape", rows, cfg)


# ---------------------------------------------------------------------------
# law of large numbers for the point count


def check_lln_points(config: dict | None = None) -> Report:
    """Scaled point count against r^{1/3}/kappa^2.

    The binding value per cell is the exact conditional mean from the
    derivative DP (noise-free); Monte Carlo rows then only have to agree with
    that exact mean to within mc_sigma standard errors.
    """
    cfg = merge_config(config)
    sub = cfg["lln"]
    rel_tol = sub["rel_tol"]
    sigma = sub["mc_sigma"]
    sequences = [
        (float(s["r"]), [tuple(n) for n in s["grid"]], int(s.get("replicas", 0)), bool(s.get("bind_tol", True)))
        for s in sub["sequences"]
    ]
    cells = [
        (si, ni, r, n, replicas)
        for si, (r, grid, replicas, _) in enumerate(sequences)
        for ni, n in enumerate(grid)
    ]

    def cell(task):
        si, ni, r, n, replicas = task
        scale = (n[0] * n[1]) ** (1.0 / 3.0)
        exact = conditioned_point_mean(n, r) / scale
        if replicas <= 0:
            return exact, None, None
        stream = RngStream(cfg["seed"], sub["stream_base"] + 100 * si + ni)
        lines = sample_conditioned_dp(n, r, replicas, stream)
        counts = np.array([lattice_point_count(line) for line in lines], dtype=float)
        mc = float(counts.mean() / scale)
        stderr = float(counts.std(ddof=1) / math.sqrt(replicas) / scale)
        return exact, mc, stderr

    results = _parallel_map(cell, cells, cfg["threads"])

    rows: list[ReportRow] = []
    pos = 0
    for r, grid, replicas, bind_tol in sequences:
        target = r ** (1.0 / 3.0) / KAPPA**2
        errs = []
        for n in grid:
            exact, mc, stderr = results[pos]
            pos += 1
            err = abs(exact / target - 1.0)
            errs.append(err)
            binding = bind_tol and n == grid[-1]
            rows.append(
                ReportRow(
                    "lln", n[0], n[1], r, "n_points_scaled",
                    exact, target, err, err <= rel_tol if binding else True,
                )
            )
            if mc is not None:
                z = abs(mc - exact) / stderr if stderr > 0 else math.inf
                rows.append(
                    ReportRow(
                        "lln", n[0], n[1], r, "n_points_scaled_mc",
                        mc, exact, z, z <= sigma,
                    )
                )
        top = grid[-1]
        rows.append(
            ReportRow(
                "lln", top[0], top[1], r, "n_points_scaled_trend",
                errs[-1], errs[0], errs[-1] - errs[0], _trend_strict(errs),
            )
        )
    return Report("lln", rows, cfg)


# ---------------------------------------------------------------------------
# total variation


def check_tv(config: dict | None = None) -> Report:
    cfg = merge_config(config)
    sub = cfg["tv"]
    n0 = tuple(sub["extreme_n"])
    tol = sub["extreme_tol"]
    limit = 1.0 - 1.0 / 5.0  # #Pi_(2,2) = 5 lines, one survives as r -> 0 or infinity
    rows: list[ReportRow] = []
    for name, r in (("tv_r_high_vs_uniform", sub["r_high"]), ("tv_r_low_vs_uniform", sub["r_low"])):
        value = tv_distance(n0, r, 1.0)
        rows.append(
            ReportRow(
                "tv", n0[0], n0[1], r, name,
                value, limit, abs(value - limit), abs(value - limit) <= tol,
            )
        )
    self_tv = tv_distance(n0, 1.0, 1.0)
    rows.append(
        ReportRow("tv", n0[0], n0[1], 1.0, "tv_self", self_tv, 0.0, self_tv, self_tv == 0.0)
    )
    ra, rb = sub["trend_r"]
    values = []
    for n in [tuple(v) for v in sub["trend_grid"]]:
        value = tv_distance(n, ra, rb)
        values.append(value)
        rows.append(
            ReportRow(
                "tv", n[0], n[1], ra, f"tv_r{_fmt(ra)}_vs_r{_fmt(rb)}",
                value, 0.0, value, True,
            )
        )
    top = tuple(sub["trend_grid"][-1])
    rows.append(
        ReportRow(
            "tv", top[0], top[1], ra, "tv_trend",
            values[-1], values[0], values[-1] - values[0],
            _trend_strict(values, decreasing=False),
        )
    )
    return Report("tv", rows, cfg)


# ---------------------------------------------------------------------------
# metric dominance


def random_convex_polyline(gen, max_edges: int = 8) -> PlanarPolyline:
    """Random convex polyline from the origin: sorted first-quadrant edges."""
    k = int(gen.integers(1, max_edges + 1))
    dx = gen.exponential(1.0, size=k)
    dy = gen.exponential(1.0, size=k)
    axis = gen.random(k)
    dx[axis < 0.1] = 0.0
    dy[(axis >= 0.1) & (axis < 0.2)] = 0.0
    keep = (dx > 0) | (dy > 0)
    if not keep.any():
        dx, dy, keep = np.ones(1), np.ones(1), np.ones(1, dtype=bool)
    dx, dy = dx[keep], dy[keep]
    order = np.argsort(np.arctan2(dy, dx), kind="stable")
    verts = np.concatenate(
        [np.zeros((1, 2)), np.cumsum(np.stack([dx[order], dy[order]], axis=1), axis=0)]
    )
    return PlanarPolyline(tuple(map(tuple, verts)))


def two_segment_pair(length: float, tilt: float, step: float) -> tuple[PlanarPolyline, PlanarPolyline]:
    """Nearly coincident corners whose tangential gap is the full first leg.

    The second line's first edge has slope `tilt`; for t below it the first
    line has already travelled `length`, so d_T >= length while d_H stays of
    order max(length*tilt, step).
    """
    p = PlanarPolyline(((0.0, 0.0), (length, 0.0), (length, length)))
    q = PlanarPolyline(((0.0, 0.0), (length, length * tilt), (length + step, length)))
    return p, q


def check_metric_dominance(config: dict | None = None) -> Report:
    cfg = merge_config(config)
    sub = cfg["metrics"]
    margin = sub["margin"]
    gen = RngStream(cfg["seed"], sub["stream_base"]).generator()
    worst = -math.inf
    for _ in range(sub["pair_count"]):
        p = random_convex_polyline(gen, sub["max_edges"])
        q = random_convex_polyline(gen, sub["max_edges"])
        worst = max(worst, hausdorff_distance(p, q) - tangential_distance(p, q))
    rows = [
        ReportRow(
            "metrics", 0, 0, 0.0, "dominance_max_gap",
            worst, 0.0, worst, worst <= margin,
        )
    ]
    ts = sub["two_segment"]
    p, q = two_segment_pair(ts["length"], ts["tilt"], ts["step"])
    dt = tangential_distance(p, q)
    dh = hausdorff_distance(p, q)
    rows.append(
        ReportRow(
            "metrics", 0, 0, 0.0, "two_segment_ratio",
            dt / dh, sub["ratio_min"], sub["ratio_min"] - dt / dh,
            dt / dh > sub["ratio_min"],
        )
    )
    rows.append(
        ReportRow(
            "metrics", 0, 0, 0.0, "two_segment_dt",
            dt, ts["length"], abs(dt - ts["length"]), dt >= ts["length"],
        )
    )
    same = random_convex_polyline(gen, sub["max_edges"])
    zero = max(tangential_distance(same, same), hausdorff_distance(same, same))
    rows.append(
        ReportRow("metrics", 0, 0, 0.0, "identical_pair", zero, 0.0, zero, zero == 0.0)
    )
    return Report("metrics", rows, cfg)


# ---------------------------------------------------------------------------
# dispatch

CHECKS = {
    "calibration": check_calibration,
    "lclt": check_lclt,
    "limit-shape": check_limit_shape,
    "lln": check_lln_points,
    "tv": check_tv,
    "metrics": check_metric_dominance,
}


def run_check(check_id: str, config: dict | None = None) -> Report:
    if check_id == "all":
        cfg = merge_config(config)
        rows: list[ReportRow] = []
        for name in CHECKS:
            rows.extend(CHECKS[name](config).rows)
        return Report("all", rows, cfg)
    if check_id not in CHECKS:
        raise InvalidArgumentError(
            f"unknown check {check_id!r}; expected one of {', '.join([*CHECKS, 'all'])}"
        )
    return CHECKS[check_id](config)
