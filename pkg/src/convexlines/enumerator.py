"""Exact small-n ground truth for the conditional measure P_n^r.

A DP over coprime directions computes the weights B_m^r = sum_{lines to m}
b^r(line) for every m <= n, where b^r(line) = prod_edges b_k^r.  For r = 1 all
b_k are 1, the DP counts lines exactly in big integers, and P_n^1 is uniform.
For general r the DP runs in log domain.  The same tables drive exact backward
sampling; full enumeration covers the tiny instances used as oracles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapExceededError, InvalidArgumentError
from .geometry import PolygonalLine, from_multiplicities
from .lattice import Direction, coprime_directions
from .measure import GCParams, log_partition, log_weight_bk

DEFAULT_CAP = (80, 80)
ENUM_CAP_SUM = 16


def directions_in_box(n: tuple[int, int]) -> tuple[Direction, ...]:
    """Coprime directions with x <= n componentwise, canonical order."""
    if n[0] < 0 or n[1] < 0:
        raise InvalidArgumentError("box corner must be componentwise non-negative")
    if n[0] == 0 and n[1] == 0:
        return ()
    return tuple(
        d for d in coprime_directions(n[0] + n[1]) if d.x1 <= n[0] and d.x2 <= n[1]
    )


@dataclass
class WeightTable:
    """DP grid of B_m^r for all m <= n.

    mode "exact": nested-list big integers (r = 1 only; B_m^1 = #Pi_m).
    mode "log": float64 grid of log-weights, -inf for unreachable states.
    prefixes holds the per-direction snapshots the backward sampler walks;
    it is only populated on request (memory scales with #directions).
    """

    n: tuple[int, int]
    r: float
    mode: str
    grid: object
    directions: tuple[Direction, ...]
    prefixes: list | None = None

    def log_weight(self, m: tuple[int, int] | None = None) -> float:
        """log B_m^r (default m = n)."""
        a, b = m if m is not None else self.n
        if self.mode == "exact":
            val = self.grid[a][b]
            if val == 0:
                return -math.inf
            return _log_bigint(val)
        return float(self.grid[a, b])


def _log_bigint(v: int) -> float:
    if v.bit_length() <= 900:
        return math.log(v)
    shift = v.bit_length() - 64
    return math.log(v >> shift) + shift * math.log(2.0)


def build_weight_table(
    n: tuple[int, int],
    r: float = 1.0,
    mode: str = "auto",
    cap: tuple[int, int] = DEFAULT_CAP,
    keep_prefixes: bool = False,
) -> WeightTable:
    """DP over directions: new[a][b] = sum_k b_k^r old[a - k x1][b - k x2]."""
    n1, n2 = int(n[0]), int(n[1])
    if n1 < 0 or n2 < 0:
        raise InvalidArgumentError("target must be non-negative")
    if n1 > cap[0] or n2 > cap[1]:
        raise CapExceededError(f"n={n} beyond weight-table cap {cap}")
    if mode == "auto":
        mode = "exact" if r == 1 else "log"
    if mode == "exact" and r != 1:
        raise InvalidArgumentError("exact-integer mode requires r = 1")
    if mode not in ("exact", "log"):
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    dirs = directions_in_box((n1, n2))
    if mode == "exact":
        grid = [[0] * (n2 + 1) for _ in range(n1 + 1)]
        grid[0][0] = 1
        prefixes = [] if keep_prefixes else None
        for d in dirs:
            x1, x2 = d.x1, d.x2
            # with b_k^1 = 1 the k-sum telescopes: new[a][b] = old[a][b] + new[a-x1][b-x2]
            for a in range(x1, n1 + 1):
                row = grid[a]
                src = grid[a - x1]
                for b in range(x2, n2 + 1):
                    row[b] += src[b - x2]
            if prefixes is not None:
                prefixes.append([row.copy() for row in grid])
        return WeightTable((n1, n2), float(r), "exact", grid, dirs, prefixes)

    grid = np.full((n1 + 1, n2 + 1), -np.inf)
    grid[0, 0] = 0.0
    kmax_all = max(n1, n2)
    logb = np.array([log_weight_bk(r, k) for k in range(kmax_all + 1)])
    prefixes = [] if keep_prefixes else None
    for d in dirs:
        x1, x2 = d.x1, d.x2
        kmax = min(n1 // x1 if x1 else n2, n2 // x2 if x2 else n1)
        acc = grid.copy()
        for k in range(1, kmax + 1):
            a, b = k * x1, k * x2
            np.logaddexp(acc[a:, b:], grid[: n1 + 1 - a, : n2 + 1 - b] + logb[k], out=acc[a:, b:])
        grid = acc
        if prefixes is not None:
            prefixes.append(grid)
    return WeightTable((n1, n2), float(r), "log", grid, dirs, prefixes)


@lru_cache(maxsize=8)
def _cached_exact_table(n: tuple[int, int], cap: tuple[int, int]) -> WeightTable:
    return build_weight_table(n, 1.0, "exact", cap)


def count_lines(n: tuple[int, int], cap: tuple[int, int] = DEFAULT_CAP) -> int:
    """#Pi_n, exactly (big integer)."""
    n = (int(n[0]), int(n[1]))
    table = _cached_exact_table(n, cap)
    return table.grid[n[0]][n[1]]


def enumerate_lines(n: tuple[int, int], cap_sum: int = ENUM_CAP_SUM) -> list[PolygonalLine]:
    """Every line with endpoint n, by backtracking over directions."""
    n1, n2 = int(n[0]), int(n[1])
    if n1 < 0 or n2 < 0:
        raise InvalidArgumentError("target must be non-negative")
    if n1 + n2 > cap_sum:
        raise CapExceededError(f"n1+n2={n1+n2} beyond enumeration cap {cap_sum}")
    dirs = directions_in_box((n1, n2))
    out: list[PolygonalLine] = []
    acc: list[tuple[Direction, int]] = []

    def rec(i: int, a: int, b: int) -> None:
        if a == 0 and b == 0:
            # remaining directions all take multiplicity zero
            out.append(from_multiplicities(list(acc)))
            return
        if i == len(dirs):
            return
        d = dirs[i]
        if d.x1 > a or d.x2 > b:
            rec(i + 1, a, b)
            return
        rec(i + 1, a, b)
        kmax = min(a // d.x1 if d.x1 else b, b // d.x2 if d.x2 else a)
        for k in range(1, kmax + 1):
            acc.append((d, k))
            rec(i + 1, a - k * d.x1, b - k * d.x2)
            acc.pop()

    rec(0, n1, n2)
    return out


def line_log_weight(line: PolygonalLine, r: float) -> float:
    """log b^r(line) = sum over edges of log b_k^r."""
    return math.fsum(log_weight_bk(r, k) for _, k in line.edges)


def exact_conditional(
    n: tuple[int, int], r: float, cap_sum: int = ENUM_CAP_SUM
) -> dict[PolygonalLine, float]:
    """P_n^r(line) = b^r(line)/B_n^r over the full enumeration; z never enters."""
    if not r > 0:
        raise InvalidArgumentError("r must be positive")
    lines = enumerate_lines(n, cap_sum)
    assert lines, "Pi_n cannot be empty: the axis directions always reach n"
    logs = np.array([line_log_weight(ln, r) for ln in lines])
    logs -= logs.max()
    w = np.exp(logs)
    w /= math.fsum(w)
    return {ln: float(p) for ln, p in zip(lines, w)}


def exact_endpoint_prob(
    params: GCParams,
    n: tuple[int, int] | None = None,
    tol: float = 1e-12,
    cap: tuple[int, int] = DEFAULT_CAP,
) -> float:
    """Q_z^r{xi = n} = exp(n1 ln z1 + n2 ln z2 + ln B_n^r - log_partition).

    Exact up to the log-partition tail (below tol) and the DP (exact for r=1,
    float log-sum-exp otherwise).
    """
    m = tuple(int(v) for v in (n if n is not None else params.n))
    if params.r == 1:
        logb = _cached_exact_table(m, cap).log_weight()
    else:
        logb = build_weight_table(m, params.r, "log", cap).log_weight()
    lz = -(params.alpha[0] * m[0] + params.alpha[1] * m[1])
    return math.exp(lz + logb - log_partition(params, tol))


def tv_distance(n: tuple[int, int], r1: float, r2: float, cap_sum: int = ENUM_CAP_SUM) -> float:
    """Total variation |P_n^{r1} - P_n^{r2}| = (1/2) sum |difference|."""
    p1 = exact_conditional(n, r1, cap_sum)
    p2 = exact_conditional(n, r2, cap_sum)
    return 0.5 * math.fsum(abs(p1[k] - p2[k]) for k in p1)


def conditioned_point_mean(
    n: tuple[int, int], r: float = 1.0, cap: tuple[int, int] = DEFAULT_CAP
) -> float:
    """Exact E over P_n^r of the lattice-point count N = sum of multiplicities.

    Runs a linear DP alongside the weight DP: with A_v = B_v^r and
    C_v = sum over lines of b^r(line) N(line), one direction updates
    C'[v] = sum_k b_k^r (C[v-kx] + k A[v-kx]).  Every term is non-negative,
    so both grids live in log domain; the answer is exp(ln C_n - ln A_n).
    """
    n1, n2 = int(n[0]), int(n[1])
    if n1 < 0 or n2 < 0:
        raise InvalidArgumentError("target must be non-negative")
    if n1 > cap[0] or n2 > cap[1]:
        raise CapExceededError(f"n={n} beyond weight-table cap {cap}")
    if not r > 0:
        raise InvalidArgumentError("r must be positive")
    if n1 == 0 and n2 == 0:
        return 0.0
    dirs = directions_in_box((n1, n2))
    la = np.full((n1 + 1, n2 + 1), -np.inf)
    la[0, 0] = 0.0
    lc = np.full((n1 + 1, n2 + 1), -np.inf)
    logb = np.array([log_weight_bk(r, k) for k in range(max(n1, n2) + 1)])
    for d in dirs:
        x1, x2 = d.x1, d.x2
        kmax = min(n1 // x1 if x1 else n2, n2 // x2 if x2 else n1)
        na = la.copy()
        nc = lc.copy()
        for k in range(1, kmax + 1):
            a, b = k * x1, k * x2
            src_a = la[: n1 + 1 - a, : n2 + 1 - b]
            src_c = lc[: n1 + 1 - a, : n2 + 1 - b]
            np.logaddexp(nc[a:, b:], np.logaddexp(src_c, src_a + math.log(k)) + logb[k], out=nc[a:, b:])
            np.logaddexp(na[a:, b:], src_a + logb[k], out=na[a:, b:])
        la, lc = na, nc
    return math.exp(lc[n1, n2] - la[n1, n2])


def sample_exact_conditioned(table: WeightTable, rng) -> PolygonalLine:
    """One draw from P_n^r by walking the DP backwards; exact law.

    At direction i in reverse canonical order and state (a,b), multiplicity k
    is drawn with probability b_k^r B^{(i-1)}[(a,b)-k x] / B^{(i)}[(a,b)],
    where B^{(i)} are the per-direction prefix tables.
    """
    if table.prefixes is None:
        raise InvalidArgumentError("weight table built without keep_prefixes=True")
    gen = rng.generator() if hasattr(rng, "generator") else rng
    a, b = table.n
    pairs: list[tuple[Direction, int]] = []
    for i in range(len(table.directions) - 1, -1, -1):
        d = table.directions[i]
        x1, x2 = d.x1, d.x2
        kmax = min(a // x1 if x1 else b, b // x2 if x2 else a)
        if kmax == 0:
            continue
        prev = table.prefixes[i - 1] if i > 0 else None
        if table.mode == "exact":
            weights = []
            for k in range(kmax + 1):
                aa, bb = a - k * x1, b - k * x2
                w = prev[aa][bb] if prev is not None else (1 if (aa, bb) == (0, 0) else 0)
                weights.append(w)
            total = sum(weights)
            u = gen.random() * total
            k = 0
            cum = 0
            for k, w in enumerate(weights):
                cum += w
                if u < cum or k == kmax:
                    break
        else:
            logs = np.full(kmax + 1, -np.inf)
            for k in range(kmax + 1):
                aa, bb = a - k * x1, b - k * x2
                lw = prev[aa, bb] if prev is not None else (0.0 if (aa, bb) == (0, 0) else -np.inf)
                logs[k] = log_weight_bk(table.r, k) + lw
            logs -= table.prefixes[i][a, b]
            probs = np.exp(logs)
            probs /= probs.sum()
            k = int(np.searchsorted(np.cumsum(probs), gen.random(), side="right"))
            k = min(k, kmax)
        if k:
            pairs.append((d, k))
            a -= k * x1
            b -= k * x2
    assert (a, b) == (0, 0)
    return from_multiplicities(pairs)


# ---------------------------------------------------------------------------
# table export (row-major log-weights with a small header)


def dump_weight_table(table: WeightTable, path) -> None:
    """CSV dump of log-weights, row-major, header with n, r, mode."""
    n1, n2 = table.n
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n1={n1} n2={n2} r={table.r!r} mode={table.mode}\n")
        for a in range(n1 + 1):
            row = [format(table.log_weight((a, b)), ".17g") for b in range(n2 + 1)]
            fh.write(",".join(row) + "\n")


def load_weight_table(path) -> WeightTable:
    """Inverse of dump_weight_table; always loads as a log-mode table."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# n1="):
            raise InvalidArgumentError(f"not a weight-table dump: {path}")
        fields = dict(part.split("=", 1) for part in header[2:].split())
        n = (int(fields["n1"]), int(fields["n2"]))
        r = float(fields["r"])
        grid = np.full((n[0] + 1, n[1] + 1), -np.inf)
        for a in range(n[0] + 1):
            grid[a] = [float(v) for v in fh.readline().split(",")]
    return WeightTable(n, r, "log", grid, directions_in_box(n), None)
