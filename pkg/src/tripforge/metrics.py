"""Trip characteristics, histograms, target distributions and the mismatch
objective.

The chain state caches integer bin counts per characteristic so that swapping
one trip's route updates the objective in O(characteristics): only the two
affected bins of each histogram are touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .model import Route

FULL_TIME = "full_time"
TRANSFER_TIME = "transfer_time"
ANGLE_RATIO = "angle_ratio"
CHARACTERISTICS = (FULL_TIME, TRANSFER_TIME, ANGLE_RATIO)

# 1-minute bins over [0, 180] min for full trip time, [0, 60] min for
# transfer time, 50 uniform bins over [0, 1] for the angle ratio.  Values
# beyond the top edge fold into the last bin.
DEFAULT_EDGES: dict[str, np.ndarray] = {
    FULL_TIME: np.arange(0.0, 10801.0, 60.0),
    TRANSFER_TIME: np.arange(0.0, 3601.0, 60.0),
    ANGLE_RATIO: np.linspace(0.0, 1.0, 51),
}

# Resync the cached absolute-deviation sums from the integer bin counts at
# this cadence; keeps incremental/scratch agreement well under 1e-9 even over
# very long runs.
_RESYNC_EVERY = 128


def full_trip_time(route: Route) -> float:
    """Seconds from the first boarding to the last alighting."""
    return float(route.legs[-1].alight_time - route.legs[0].board_time)


def transfer_time(route: Route) -> float:
    """Total seconds spent between legs (waiting/walking); 0 for single-leg trips."""
    legs = route.legs
    return float(sum(legs[i + 1].board_time - legs[i].alight_time for i in range(len(legs) - 1)))


def angle_ratio(route: Route) -> float:
    """Directness of a trip in [0, 1].

    With D the crow-flight origin-destination distance and S the summed leg
    distances, returns (2/pi) * arctan(D / (S - D)).  A round trip (D = 0)
    scores 0; a route no longer than the crow-flight distance (S <= D) is
    maximally direct and scores 1.
    """
    total = route.ride_distance_m()
    if total <= 0.0:
        raise ValueError("angle_ratio undefined for zero total ride distance")
    direct = route.straight_line_m()
    if direct == 0.0:
        return 0.0
    denom = total - direct
    if denom <= 0.0:
        return 1.0
    return (2.0 / math.pi) * math.atan(direct / denom)


_CHARACTERISTIC_FN = {
    FULL_TIME: full_trip_time,
    TRANSFER_TIME: transfer_time,
    ANGLE_RATIO: angle_ratio,
}


def characteristic_value(tag: str, route: Route) -> float:
    try:
        fn = _CHARACTERISTIC_FN[tag]
    except KeyError:
        raise ValueError(f"unknown characteristic {tag!r}") from None
    return fn(route)


def bin_index(edges: np.ndarray, value: float) -> int:
    """Bin of `value` under `edges`; out-of-range values fold into the end bins."""
    idx = int(np.searchsorted(edges, value, side="right")) - 1
    return min(max(idx, 0), len(edges) - 2)


@dataclass(frozen=True)
class Histogram:
    """Normalized histogram: probability mass per bin plus the sample count."""

    edges: np.ndarray
    masses: np.ndarray
    count: int

    def __post_init__(self) -> None:
        if len(self.masses) != len(self.edges) - 1:
            raise ValueError("histogram needs len(edges) - 1 masses")
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("histogram edges must be strictly increasing")
        if np.any(self.masses < 0):
            raise ValueError("histogram masses must be non-negative")
        if self.count > 0 and abs(float(self.masses.sum()) - 1.0) > 1e-9:
            raise ValueError(f"histogram masses sum to {self.masses.sum()}, expected 1")

    @classmethod
    def from_values(cls, values, edges: np.ndarray) -> "Histogram":
        values = np.asarray(values, dtype=float)
        counts = np.zeros(len(edges) - 1, dtype=np.int64)
        if values.size:
            idx = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, len(edges) - 2)
            counts = np.bincount(idx, minlength=len(edges) - 1).astype(np.int64)
        return cls.from_counts(counts, edges)

    @classmethod
    def from_counts(cls, counts: np.ndarray, edges: np.ndarray) -> "Histogram":
        counts = np.asarray(counts)
        total = int(counts.sum())
        masses = counts / total if total > 0 else np.zeros(len(counts), dtype=float)
        return cls(edges=np.asarray(edges, dtype=float), masses=masses, count=total)


@dataclass(frozen=True)
class TargetDistribution:
    """A desired distribution over one characteristic, discretized to a binning.

    kind is one of: empirical, beta, poisson, gaussian_mixture.  Parametric
    kinds are discretized with tail mass folded into the end bins.
    """

    kind: str
    edges: np.ndarray
    masses: np.ndarray
    params: tuple = ()

    def __post_init__(self) -> None:
        if len(self.masses) != len(self.edges) - 1:
            raise ValueError("target needs len(edges) - 1 masses")
        if abs(float(self.masses.sum()) - 1.0) > 1e-6:
            raise ValueError(f"target masses sum to {self.masses.sum()}, expected 1 +- 1e-6")


def empirical_target(hist: Histogram) -> TargetDistribution:
    if hist.count == 0:
        raise ValueError("cannot build an empirical target from an empty histogram")
    return TargetDistribution(kind="empirical", edges=hist.edges, masses=hist.masses.copy())


def beta_target(alpha: float, beta: float, edges: np.ndarray | None = None) -> TargetDistribution:
    if alpha <= 0 or beta <= 0:
        raise ValueError("beta target requires alpha > 0 and beta > 0")
    if edges is None:
        edges = DEFAULT_EDGES[ANGLE_RATIO]
    edges = np.asarray(edges, dtype=float)
    cdf = stats.beta.cdf(edges, alpha, beta)
    masses = np.diff(cdf)
    masses[0] += cdf[0]
    masses[-1] += 1.0 - cdf[-1]
    return TargetDistribution(kind="beta", edges=edges, masses=masses, params=(alpha, beta))


def poisson_target(lam: float, edges: np.ndarray) -> TargetDistribution:
    """Poisson over the bin index: bin i receives pmf(i), the open tail folds
    into the last bin."""
    if lam < 0:
        raise ValueError("poisson target requires lambda >= 0")
    edges = np.asarray(edges, dtype=float)
    nbins = len(edges) - 1
    masses = stats.poisson.pmf(np.arange(nbins), lam)
    masses[-1] += 1.0 - stats.poisson.cdf(nbins - 1, lam)
    return TargetDistribution(kind="poisson", edges=edges, masses=masses, params=(lam,))


def gaussian_mixture_target(
    components: list[tuple[float, float, float]], edges: np.ndarray
) -> TargetDistribution:
    """components: (weight, mean, stddev) in characteristic units."""
    if not components:
        raise ValueError("gaussian mixture needs at least one component")
    wsum = sum(w for w, _, _ in components)
    if abs(wsum - 1.0) > 1e-9:
        raise ValueError(f"mixture weights sum to {wsum}, expected 1")
    edges = np.asarray(edges, dtype=float)
    cdf = np.zeros(len(edges))
    for weight, mean, std in components:
        if std <= 0:
            raise ValueError("mixture component stddev must be positive")
        cdf += weight * stats.norm.cdf(edges, loc=mean, scale=std)
    masses = np.diff(cdf)
    masses[0] += cdf[0]
    masses[-1] += 1.0 - cdf[-1]
    return TargetDistribution(
        kind="gaussian_mixture", edges=edges, masses=masses, params=tuple(components)
    )


@dataclass(frozen=True)
class MismatchEntry:
    tag: str
    target: TargetDistribution
    weight: float = 1.0


@dataclass(frozen=True)
class MismatchSpec:
    """Ordered characteristic functions, their targets and weights."""

    entries: tuple[MismatchEntry, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("mismatch spec needs at least one characteristic")
        tags = [e.tag for e in self.entries]
        if len(set(tags)) != len(tags):
            raise ValueError(f"duplicate characteristic tags: {tags}")
        for e in self.entries:
            if e.tag not in _CHARACTERISTIC_FN:
                raise ValueError(f"unknown characteristic {e.tag!r}")

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(e.tag for e in self.entries)


def build_empirical_target(routes, tag: str, edges: np.ndarray | None = None) -> TargetDistribution:
    """Empirical target from the tagged characteristic of a route collection."""
    routes = list(routes)
    if not routes:
        raise ValueError("cannot build a target from an empty route list")
    if edges is None:
        edges = DEFAULT_EDGES[tag]
    values = [characteristic_value(tag, r) for r in routes]
    return empirical_target(Histogram.from_values(values, edges))


def l1_mismatch(h, z) -> float:
    """Sum of absolute per-bin mass differences; a metric on same-binned histograms."""
    if not np.array_equal(h.edges, z.edges):
        raise ValueError("histogram and target binnings differ")
    return float(np.abs(np.asarray(h.masses) - np.asarray(z.masses)).sum())


# ---------------------------------------------------------------------------
# Chain state with cached histograms and incremental objective updates.
# ---------------------------------------------------------------------------


class ChainState:
    """One route choice per demand plus cached histograms and error.

    Owned and mutated by exactly one sampler execution at a time.  The caches
    are integer bin counts (exact under any accept/reject sequence) plus
    per-characteristic absolute-deviation sums, periodically resynced.
    """

    __slots__ = (
        "candidate_sets",
        "spec",
        "assignment",
        "n",
        "counts",
        "cached_error",
        "weights",
        "eligible",
        "_dev_sums",
        "_scales",
        "_scaled_targets",
        "_cand_bins",
        "_flat_bins",
        "_offsets",
        "_applies",
    )

    def __init__(self, candidate_sets, spec: MismatchSpec, assignment: np.ndarray):
        candidate_sets = list(candidate_sets)
        if not candidate_sets:
            raise ValueError("need at least one candidate set")
        n = len(candidate_sets)
        assignment = np.asarray(assignment, dtype=np.int64).copy()
        if assignment.shape != (n,):
            raise ValueError("assignment length must match the number of demands")
        for j, cs in enumerate(candidate_sets):
            if not 0 <= assignment[j] < len(cs):
                raise IndexError(f"assignment[{j}] out of range for its candidate set")

        self.candidate_sets = candidate_sets
        self.spec = spec
        self.assignment = assignment
        self.n = n
        self.weights = [cs.weights for cs in candidate_sets]
        self.eligible = np.array([j for j, cs in enumerate(candidate_sets) if len(cs) >= 2],
                                 dtype=np.int64)

        k = len(spec.entries)
        # Per-demand, per-candidate bin tuples (one bin per characteristic),
        # plus flat arrays for vectorized scratch recomputation.
        cand_bins: list[list[tuple[int, ...]]] = []
        flat: list[list[int]] = [[] for _ in range(k)]
        offsets = np.zeros(n + 1, dtype=np.int64)
        for j, cs in enumerate(candidate_sets):
            per_cand = []
            for route, _ in cs.candidates:
                bins = tuple(
                    bin_index(e.target.edges, characteristic_value(e.tag, route))
                    for e in spec.entries
                )
                per_cand.append(bins)
                for ki in range(k):
                    flat[ki].append(bins[ki])
            cand_bins.append(per_cand)
            offsets[j + 1] = offsets[j] + len(per_cand)
        self._cand_bins = cand_bins
        self._flat_bins = [np.array(f, dtype=np.int64) for f in flat]
        self._offsets = offsets

        self._scales = tuple(e.weight / n for e in spec.entries)
        self._scaled_targets = [n * e.target.masses for e in spec.entries]
        self.counts = [np.zeros(len(e.target.masses), dtype=np.int64) for e in spec.entries]
        self._dev_sums = [0.0] * k
        self._applies = 0
        self.refresh_caches()

    # -- cache maintenance ---------------------------------------------------

    def _scratch_counts(self) -> list[np.ndarray]:
        chosen = self._offsets[:-1] + self.assignment
        return [
            np.bincount(fb[chosen], minlength=len(st))
            for fb, st in zip(self._flat_bins, self._scaled_targets)
        ]

    def refresh_caches(self) -> None:
        """Recompute histograms and error from scratch."""
        self.counts = [c.astype(np.int64) for c in self._scratch_counts()]
        self._resync()

    def _resync(self) -> None:
        for ki, (counts, nz) in enumerate(zip(self.counts, self._scaled_targets)):
            self._dev_sums[ki] = float(np.abs(counts - nz).sum())
        self.cached_error = float(
            sum(s * d for s, d in zip(self._scales, self._dev_sums))
        )
        self._applies = 0

    def scratch_error(self) -> float:
        """Objective recomputed from scratch, independent of the caches."""
        total = 0.0
        for scale, fresh, nz in zip(self._scales, self._scratch_counts(), self._scaled_targets):
            total += scale * float(np.abs(fresh - nz).sum())
        return total

    @property
    def cached_histograms(self) -> tuple[Histogram, ...]:
        return tuple(
            Histogram.from_counts(c, e.target.edges)
            for c, e in zip(self.counts, self.spec.entries)
        )

    def assigned_routes(self) -> list[Route]:
        return [cs.candidates[self.assignment[j]][0] for j, cs in enumerate(self.candidate_sets)]

    def copy(self) -> "ChainState":
        return ChainState(self.candidate_sets, self.spec, self.assignment)


@dataclass(frozen=True)
class HistogramDelta:
    """Undoable effect of swapping demand j to another candidate.

    Applying is O(characteristics); discarding is free.
    """

    j: int
    old_cand: int
    new_cand: int
    moves: tuple[tuple[int, int, int], ...]  # (characteristic idx, old bin, new bin)
    dev_deltas: tuple[float, ...]
    new_error: float


def total_error(state: ChainState, spec: MismatchSpec) -> float:
    """Weighted sum of L1 mismatches between cached histograms and targets."""
    _check_same_spec(state, spec)
    hists = state.cached_histograms
    return float(
        sum(e.weight * l1_mismatch(h, e.target) for h, e in zip(hists, spec.entries))
    )


def delta_error(state: ChainState, j: int, cand: int, spec: MismatchSpec | None = None):
    """New total error if demand j switched to candidate `cand`, plus the
    undoable delta. Touches only the affected bins."""
    if spec is not None:
        _check_same_spec(state, spec)
    if not 0 <= j < state.n:
        raise IndexError(f"demand index {j} out of range")
    if not 0 <= cand < len(state.candidate_sets[j]):
        raise IndexError(f"candidate index {cand} out of range for demand {j}")
    cur = int(state.assignment[j])
    if cand == cur:
        return state.cached_error, HistogramDelta(j, cur, cand, (), (), state.cached_error)

    old_bins = state._cand_bins[j][cur]
    new_bins = state._cand_bins[j][cand]
    moves = []
    dev_deltas = []
    new_error = 0.0
    for ki, scale in enumerate(state._scales):
        b_old = old_bins[ki]
        b_new = new_bins[ki]
        dev = state._dev_sums[ki]
        if b_old != b_new:
            counts = state.counts[ki]
            nz = state._scaled_targets[ki]
            c_old = counts[b_old]
            c_new = counts[b_new]
            d = (
                abs(c_old - 1 - nz[b_old])
                - abs(c_old - nz[b_old])
                + abs(c_new + 1 - nz[b_new])
                - abs(c_new - nz[b_new])
            )
            moves.append((ki, b_old, b_new))
            dev_deltas.append(float(d))
            dev += d
        new_error += scale * dev
    return float(new_error), HistogramDelta(
        j, cur, cand, tuple(moves), tuple(dev_deltas), float(new_error)
    )


def apply_delta(state: ChainState, delta: HistogramDelta) -> None:
    """Commit a proposed swap to the chain state."""
    if int(state.assignment[delta.j]) != delta.old_cand:
        raise ValueError("delta no longer matches the state")
    for (ki, b_old, b_new), dd in zip(delta.moves, delta.dev_deltas):
        state.counts[ki][b_old] -= 1
        state.counts[ki][b_new] += 1
        state._dev_sums[ki] += dd
    state.assignment[delta.j] = delta.new_cand
    state.cached_error = float(
        sum(s * d for s, d in zip(state._scales, state._dev_sums))
    )
    state._applies += 1
    if state._applies >= _RESYNC_EVERY:
        state._resync()


def _check_same_spec(state: ChainState, spec: MismatchSpec) -> None:
    if state.spec is spec:
        return
    if state.spec.tags != spec.tags:
        raise ValueError("state was built under a different mismatch spec")
    for mine, theirs in zip(state.spec.entries, spec.entries):
        if not np.array_equal(mine.target.edges, theirs.target.edges):
            raise ValueError("state binning differs from the given spec")


# ---------------------------------------------------------------------------
# Parametric fits.
# ---------------------------------------------------------------------------


def fit_beta_moments(samples) -> tuple[float, float]:
    """Method-of-moments Beta fit on samples in [0, 1].

    With m the sample mean and v the (population) variance, the common factor
    is c = m(1 - m)/v - 1, giving alpha = m*c and beta = (1 - m)*c.
    """
    x = np.clip(np.asarray(samples, dtype=float), 1e-6, 1.0 - 1e-6)
    if x.size < 2:
        raise ValueError("beta fit needs at least two samples")
    m = float(x.mean())
    v = float(x.var())
    if v <= 0.0:
        raise ValueError("beta fit undefined for zero sample variance")
    c = m * (1.0 - m) / v - 1.0
    if c <= 0.0:
        raise ValueError(f"beta fit undefined: moment factor {c} <= 0")
    return m * c, (1.0 - m) * c


def fit_poisson(samples) -> float:
    """Maximum-likelihood Poisson rate: the sample mean."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("poisson fit needs at least one sample")
    if np.any(x < 0):
        raise ValueError("poisson fit requires non-negative samples")
    return float(x.mean())
