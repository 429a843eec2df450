"""Monte Carlo engines for the free and endpoint-conditioned measures.

Free sampling draws one negative-binomial multiplicity per direction inside a
truncation window.  A Bernoulli pre-test makes an unoccupied direction cost a
single uniform; the same uniform is reused for the conditional k >= 1 draw.
Conditioned sampling is rejection on the endpoint with early abort.  The batch
paths vectorize the inversion per direction (there the cdf is a scalar
sequence, so a searchsorted does the whole column) and carry the throughput
needed by the verification harness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .enumerator import DEFAULT_CAP, build_weight_table, sample_exact_conditioned
from .errors import BudgetExhaustedError, InvalidArgumentError
from .geometry import PolygonalLine, from_multiplicities
from .lattice import Direction, coprime_window_arrays
from .measure import (
    GCParams,
    KAPPA,
    TruncationWindow,
    calibrate,
    select_window,
)

DEFAULT_WINDOW_TOL = 1e-10


@dataclass(frozen=True)
class RngStream:
    """Named random stream: (seed, stream_id) pins the whole draw sequence.

    Distinct stream_ids under one seed spawn statistically independent
    generators.  child_generator carves reproducible sub-streams (used one per
    rejection trial, so aborting a trial early cannot shift later trials).
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if self.seed < 0 or self.stream_id < 0:
            raise InvalidArgumentError("seed and stream_id must be non-negative")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        )

    def child_generator(self, *path: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *path))
        )


@dataclass(frozen=True)
class SampleMeta:
    tries: int
    tail_bound: float
    stream_id: int


@dataclass
class SampleBatch:
    """Samples plus per-sample bookkeeping; conditioned batches hit n exactly."""

    params: GCParams
    lines: list[PolygonalLine]
    meta: list[SampleMeta] = field(default_factory=list)


def _as_generator(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return stream.generator()


def draw_negative_binomial(r: float, p: float, stream) -> int:
    """One draw with pmf(k) = b_k^r (1-p)^k p^r by sequential cdf inversion.

    pmf(k+1) = pmf(k) (1-p) (r+k)/(k+1); exact for any real r > 0.
    """
    if not r > 0:
        raise InvalidArgumentError("r must be positive")
    if not 0.0 < p < 1.0:
        raise InvalidArgumentError("p must lie in (0,1)")
    gen = _as_generator(stream)
    u = gen.random()
    q = 1.0 - p
    pk = p**r
    cum = pk
    k = 0
    while u >= cum:
        pk *= q * (r + k) / (k + 1)
        k += 1
        cum += pk
        if pk == 0.0:  # float tail exhausted; mass beyond is < 1 ulp
            break
    return k


class FreeSampler:
    """Per-direction tables for one (params, window) pair."""

    def __init__(self, params: GCParams, window: TruncationWindow | None = None):
        if window is None:
            window = select_window(params, DEFAULT_WINDOW_TOL)
        self.params = params
        self.window = window
        x1, x2 = coprime_window_arrays(window.degree_bound)
        self.x1 = x1
        self.x2 = x2
        self.zx = np.exp(-(params.alpha[0] * x1 + params.alpha[1] * x2))
        self.log1m = np.log1p(-self.zx)
        # P{nu(x) > 0} = 1 - (1-z^x)^r
        self.p_pos = -np.expm1(params.r * self.log1m)
        self.p0 = np.exp(params.r * self.log1m)

    def _conditional_count(self, i: int, u: float) -> int:
        """Smallest k >= 1 with u < cdf(k) - pmf(0), for u = pre-test uniform."""
        r = self.params.r
        zx = float(self.zx[i])
        pk = r * zx * float(self.p0[i])
        cum = pk
        k = 1
        while u >= cum:
            pk *= zx * (r + k) / (k + 1)
            k += 1
            cum += pk
            if pk == 0.0:
                break
        return k

    def sample_counts(self, gen, limit=None, early_abort: bool = False):
        """Occupied directions as {index: k}; None if early abort fires.

        Directions are scanned in canonical order (degree ascending), so with
        a limit most doomed trials die within the first few dozen entries.
        """
        counts: dict[int, int] = {}
        e1 = 0
        e2 = 0
        p_pos = self.p_pos
        for i in range(len(p_pos)):
            u = gen.random()
            if u >= p_pos[i]:
                continue
            k = self._conditional_count(i, u)
            counts[i] = k
            e1 += k * int(self.x1[i])
            e2 += k * int(self.x2[i])
            if early_abort and limit is not None and (e1 > limit[0] or e2 > limit[1]):
                return None, (e1, e2)
        return counts, (e1, e2)

    def to_line(self, counts: dict[int, int]) -> PolygonalLine:
        return from_multiplicities(
            [(Direction(int(self.x1[i]), int(self.x2[i])), k) for i, k in counts.items()]
        )


def sample_free(params: GCParams, window: TruncationWindow | None = None, stream=None) -> PolygonalLine:
    """One draw from Q_z^r restricted to the window (TV bias <= tail_bound)."""
    sampler = FreeSampler(params, window)
    counts, _ = sampler.sample_counts(_as_generator(stream))
    return sampler.to_line(counts)


def _direction_cdf(r: float, zx: float, p0: float, u_max: float) -> np.ndarray:
    """Conditional-on-positive cdf levels cdf(k)-pmf(0), k = 1,2,... until > u_max."""
    pk = r * zx * p0
    levels = [pk]
    while levels[-1] <= u_max:
        k = len(levels)
        pk *= zx * (r + k) / (k + 1)
        if pk == 0.0:
            break
        levels.append(levels[-1] + pk)
    return np.asarray(levels)


def _vector_counts(gen, sampler: FreeSampler, i: int, m: int):
    """Positions and counts of occupied draws for direction i over m trials."""
    u = gen.random(m)
    pos = np.nonzero(u < sampler.p_pos[i])[0]
    if pos.size == 0:
        return pos, pos
    uu = u[pos]
    levels = _direction_cdf(
        sampler.params.r, float(sampler.zx[i]), float(sampler.p0[i]), float(uu.max())
    )
    k = np.searchsorted(levels, uu, side="right") + 1
    np.minimum(k, len(levels), out=k)
    return pos, k


def sample_free_endpoints(
    params: GCParams,
    count: int,
    stream,
    window: TruncationWindow | None = None,
) -> np.ndarray:
    """Endpoints of `count` free samples, shape (count, 2), direction-major draws."""
    if count <= 0:
        raise InvalidArgumentError("count must be positive")
    sampler = FreeSampler(params, window)
    gen = _as_generator(stream)
    out = np.zeros((count, 2), dtype=np.int64)
    for i in range(len(sampler.p_pos)):
        pos, k = _vector_counts(gen, sampler, i, count)
        if pos.size:
            out[pos, 0] += k * int(sampler.x1[i])
            out[pos, 1] += k * int(sampler.x2[i])
    return out


def expected_tries_asymptotic(n: tuple[int, int], r: float) -> float:
    """Leading-order 1/Q_z^r{xi=n} for calibrated z: 2 sqrt(3) pi (n1 n2)^{2/3} / (r^{1/3} kappa)."""
    return 2.0 * math.sqrt(3.0) * math.pi * (n[0] * n[1]) ** (2.0 / 3.0) / (r ** (1.0 / 3.0) * KAPPA)


def sample_conditioned(
    params: GCParams,
    n: tuple[int, int] | None = None,
    stream: RngStream | None = None,
    max_tries: int = 10**6,
    window: TruncationWindow | None = None,
    early_abort: bool = True,
    trial_path: tuple[int, ...] = (),
) -> tuple[PolygonalLine, int]:
    """Rejection: free draws until the endpoint equals n exactly.

    Each trial runs on its own child stream, so early abort changes which
    uniforms a doomed trial consumes but never the accept/reject pattern.
    """
    if max_tries < 1:
        raise InvalidArgumentError("max_tries must be >= 1")
    if stream is None:
        raise InvalidArgumentError("stream is required")
    target = tuple(int(v) for v in (n if n is not None else params.n))
    sampler = FreeSampler(params, window)
    for trial in range(1, max_tries + 1):
        gen = stream.child_generator(*trial_path, trial)
        counts, endpoint = sampler.sample_counts(gen, limit=target, early_abort=early_abort)
        if counts is not None and endpoint == target:
            return sampler.to_line(counts), trial
    raise BudgetExhaustedError(
        f"no endpoint hit at n={target} in {max_tries} tries "
        f"(expected about {expected_tries_asymptotic(target, params.r):.0f} per accept)",
        tries_used=max_tries,
    )


def sample_conditioned_miscalibrated(
    params: GCParams,
    n: tuple[int, int] | None = None,
    stream: RngStream | None = None,
    max_tries: int = 10**6,
    window: TruncationWindow | None = None,
) -> tuple[PolygonalLine, int]:
    """sample_conditioned under an overridden z: same output law, other cost.

    The conditional measure does not depend on z, so this is an executable
    witness that only the acceptance rate moves when z does.
    """
    if params.calibrated:
        raise InvalidArgumentError("pass params.with_z(...) so the override is explicit")
    return sample_conditioned(params, n, stream, max_tries, window)


def sample_conditioned_batch(
    params: GCParams,
    count: int,
    stream: RngStream,
    n: tuple[int, int] | None = None,
    max_trials: int | None = None,
    chunk: int = 1 << 15,
    window: TruncationWindow | None = None,
) -> SampleBatch:
    """Vectorized rejection returning `count` conditioned lines.

    A direction outside the box x <= n exceeds one coordinate as soon as it is
    occupied, so a trial splits into an all-outside-clean Bernoulli times the
    inner-box field; only the inner counts of accepted trials survive.  Law
    identical to scalar rejection, order of magnitude faster.
    """
    if count <= 0:
        raise InvalidArgumentError("count must be positive")
    target = tuple(int(v) for v in (n if n is not None else params.n))
    sampler = FreeSampler(params, window)
    inner = np.nonzero((sampler.x1 <= target[0]) & (sampler.x2 <= target[1]))[0]
    outer_mask = np.ones(len(sampler.p_pos), dtype=bool)
    outer_mask[inner] = False
    log_clean = float(np.sum(params.r * sampler.log1m[outer_mask]))
    p_clean = math.exp(log_clean)
    if max_trials is None:
        max_trials = int(200 * count * expected_tries_asymptotic(target, params.r)) + 10**6
    gen = _as_generator(stream)
    ix1 = sampler.x1[inner]
    ix2 = sampler.x2[inner]
    lines: list[PolygonalLine] = []
    meta: list[SampleMeta] = []
    trials_done = 0
    last_accept_trial = 0
    while len(lines) < count:
        m = min(chunk, max_trials - trials_done)
        if m <= 0:
            raise BudgetExhaustedError(
                f"{len(lines)}/{count} accepts after {trials_done} trials",
                tries_used=trials_done,
            )
        counts = np.zeros((m, len(inner)), dtype=np.int64)
        for j, i in enumerate(inner):
            pos, k = _vector_counts(gen, sampler, int(i), m)
            if pos.size:
                counts[pos, j] = k
        clean = gen.random(m) < p_clean
        hits = clean & (counts @ ix1 == target[0]) & (counts @ ix2 == target[1])
        for row in np.nonzero(hits)[0]:
            if len(lines) == count:
                break
            trial_index = trials_done + int(row) + 1
            pairs = [
                (Direction(int(ix1[j]), int(ix2[j])), int(counts[row, j]))
                for j in np.nonzero(counts[row])[0]
            ]
            lines.append(from_multiplicities(pairs))
            meta.append(
                SampleMeta(
                    tries=trial_index - last_accept_trial,
                    tail_bound=sampler.window.tail_bound,
                    stream_id=stream.stream_id if isinstance(stream, RngStream) else 0,
                )
            )
            last_accept_trial = trial_index
        trials_done += m
    return SampleBatch(params, lines, meta)


@lru_cache(maxsize=6)
def _dp_table(n: tuple[int, int], r: float, cap: tuple[int, int]):
    return build_weight_table(n, r, "log", cap, keep_prefixes=True)


def sample_conditioned_dp(
    n: tuple[int, int],
    r: float,
    count: int,
    stream: RngStream,
    cap: tuple[int, int] = DEFAULT_CAP,
) -> list[PolygonalLine]:
    """`count` exact draws from P_n^r via the weight-table backward walk."""
    table = _dp_table((int(n[0]), int(n[1])), float(r), cap)
    gen = _as_generator(stream)
    return [sample_exact_conditioned(table, gen) for _ in range(count)]


def sample_conditioned_mixture(
    n: tuple[int, int],
    prior: list[tuple[float, float]],
    count: int,
    stream: RngStream,
    method: str = "exact-dp",
    max_tries: int = 10**6,
    cap: tuple[int, int] = DEFAULT_CAP,
) -> list[tuple[float, PolygonalLine]]:
    """Two-stage draw: r ~ prior (finite weighted list), then line ~ P_n^r."""
    if not prior:
        raise InvalidArgumentError("prior must be non-empty")
    rs = np.array([float(r) for r, _ in prior])
    ws = np.array([float(w) for _, w in prior])
    if (ws < 0).any() or ws.sum() <= 0 or (rs <= 0).any():
        raise InvalidArgumentError("prior needs positive r values and non-negative weights")
    ws = ws / ws.sum()
    gen = _as_generator(stream)
    picks = gen.choice(len(rs), size=count, p=ws)
    out: list[tuple[float, PolygonalLine]] = []
    for idx, pick in enumerate(picks):
        r = float(rs[pick])
        if method == "exact-dp":
            table = _dp_table((int(n[0]), int(n[1])), r, cap)
            out.append((r, sample_exact_conditioned(table, gen)))
        elif method == "rejection":
            line, _ = sample_conditioned(
                calibrate(n, r), n, stream, max_tries, trial_path=(idx,)
            )
            out.append((r, line))
        else:
            raise InvalidArgumentError(f"unknown method {method!r}")
    return out
