"""TSP instances, the lane-coupling cost tensor, and route utilities.

A problem is an n-city map with a symmetric positive distance matrix. Maps
are drawn with normally distributed pair distances (mean 100, sd 17 by
default), which makes 100*n a good estimate of the mean random-tour length.
The distance-cost weight nu is calibrated per map so that constraint
penalties always dominate any two-edge path cost.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

BRUTE_FORCE_MAX_N = 10


class InvalidInstanceError(ValueError):
    """Raised for maps that violate the instance contract."""


class ConfigurationError(ValueError):
    """Raised when parameters are unusable, e.g. an uncalibrated nu."""


@dataclass(frozen=True)
class GenMeta:
    """Generation record kept with a map so files are self-describing."""

    seed: int
    mean: float
    sd: float


@dataclass(frozen=True)
class TspInstance:
    """City count plus symmetric distance matrix; immutable once built."""

    n: int
    dist: np.ndarray
    gen_meta: GenMeta | None = None

    def __post_init__(self):
        if self.n < 3:
            raise InvalidInstanceError(f"need at least 3 cities, got n={self.n}")
        d = np.asarray(self.dist, dtype=float)
        if d.shape != (self.n, self.n):
            raise InvalidInstanceError(f"distance matrix shape {d.shape} != ({self.n}, {self.n})")
        if not np.array_equal(d, d.T):
            raise InvalidInstanceError("distance matrix must be symmetric")
        if np.diagonal(d).any():
            raise InvalidInstanceError("diagonal must be zero")
        off = d[~np.eye(self.n, dtype=bool)]
        if not (off > 0).all():
            raise InvalidInstanceError("off-diagonal distances must be positive")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)


@dataclass(frozen=True)
class ParamSet:
    """Penalty weights and dynamics scales for one run.

    lam and mu penalise revisiting a city and simultaneous visits; nu weighs
    distance cost; delta bounds the uniform fluctuations; delta_out is the
    contraction unit and delta_in the constant hub leak per step.
    """

    lam: float = 0.5
    mu: float = 0.5
    nu: float = 0.0
    delta: float = 0.003
    delta_out: float = 0.001
    delta_in: float = 0.001

    def __post_init__(self):
        if self.lam <= 0 or self.mu <= 0:
            raise ConfigurationError("lam and mu must be positive")
        if self.delta < 0 or self.delta_in < 0 or self.delta_out <= 0:
            raise ConfigurationError("delta/delta_in must be >= 0, delta_out > 0")

    @classmethod
    def for_instance(cls, inst: TspInstance, **overrides) -> "ParamSet":
        """Build parameters with nu calibrated for the given map."""
        base = cls(nu=1.0, **{k: v for k, v in overrides.items() if k != "nu"})
        nu = overrides.get("nu", compute_nu(inst, base.lam, base.mu))
        return cls(lam=base.lam, mu=base.mu, nu=nu, delta=base.delta,
                   delta_out=base.delta_out, delta_in=base.delta_in)

    def is_calibrated(self, inst: TspInstance) -> bool:
        """True iff nu * (largest two-edge path) <= min(lam, mu)."""
        return self.nu > 0 and self.nu * max_two_edge_path(inst) <= min(self.lam, self.mu)


@dataclass(frozen=True)
class DecodedSolution:
    """Thresholded binary state and, when it is a permutation, the tour."""

    x_bin: np.ndarray
    tour: tuple[int, ...] | None


def generate_map(n: int, seed: int, mean: float = 100.0, sd: float = 17.0) -> TspInstance:
    """Draw a symmetric random map; nonpositive draws are resampled.

    Deterministic for a fixed (n, seed, mean, sd). Only the upper triangle
    is drawn, then mirrored.
    """
    if n < 3:
        raise InvalidInstanceError(f"need at least 3 cities, got n={n}")
    if sd < 0:
        raise InvalidInstanceError("sd must be nonnegative")
    if sd == 0 and mean <= 0:
        raise InvalidInstanceError("degenerate map needs a positive mean")
    rng = np.random.default_rng(seed)
    m = n * (n - 1) // 2
    draws = rng.normal(mean, sd, m)
    for _ in range(1000):
        bad = draws <= 0
        if not bad.any():
            break
        draws[bad] = rng.normal(mean, sd, int(bad.sum()))
    else:
        raise InvalidInstanceError("could not draw positive distances; check mean/sd")
    dist = np.zeros((n, n))
    dist[np.triu_indices(n, 1)] = draws
    dist = dist + dist.T
    return TspInstance(n=n, dist=dist, gen_meta=GenMeta(seed=seed, mean=mean, sd=sd))


def max_two_edge_path(inst: TspInstance) -> float:
    """Largest d(a,b) + d(b,c) over ordered triples of distinct cities.

    Equivalent to taking, per middle city, the two largest distances to
    distinct partners.
    """
    best = 0.0
    for mid in range(inst.n):
        row = np.delete(inst.dist[mid], mid)
        top2 = np.partition(row, -2)[-2:]
        best = max(best, float(top2.sum()))
    return best


def round_down_sigfigs(x: float, figs: int = 3) -> float:
    """Round a positive value down to the given significant figures.

    Ratios within 1e-9 of an integer count as that integer, so values that
    are exact up to float representation (0.0025 -> 250e-5) survive intact.
    """
    if x <= 0:
        raise ValueError("expected a positive value")
    exp = math.floor(math.log10(x))
    scale = 10.0 ** (exp - figs + 1)
    ratio = x / scale
    q = math.floor(ratio)
    if (q + 1) - ratio < 1e-9:
        q += 1
    return q * scale


def compute_nu(inst: TspInstance, lam: float = 0.5, mu: float = 0.5) -> float:
    """Distance-cost weight: min(lam, mu) over the worst two-edge path.

    Rounded down to 3 significant figures, so the calibration inequality
    still holds after rounding.
    """
    if lam <= 0 or mu <= 0:
        raise ConfigurationError("lam and mu must be positive")
    return round_down_sigfigs(min(lam, mu) / max_two_edge_path(inst), 3)


def cost_weight(v: int, k: int, u: int, l: int, params: ParamSet, inst: TspInstance) -> float:
    """Coupling weight between lanes (v, k) and (u, l); all indices 0-based.

    Same city at two steps costs lam; two cities at one step costs mu;
    consecutive steps (cyclically, including the closing edge) cost
    nu * distance; everything else is free.
    """
    n = inst.n
    for idx in (v, k, u, l):
        if not 0 <= idx < n:
            raise IndexError(f"lane index {idx} out of range for n={n}")
    if v == u and k != l:
        return -params.lam
    if v != u and k == l:
        return -params.mu
    if v != u and (abs(k - l) == 1 or (k == n - 1 and l == 0) or (k == 0 and l == n - 1)):
        return -params.nu * float(inst.dist[v, u])
    return 0.0


def cost_function(x_bin: np.ndarray, params: ParamSet, inst: TspInstance) -> float:
    """Quadratic assignment cost -(1/2) sum of weights over active lane pairs."""
    active = np.argwhere(np.asarray(x_bin) != 0)
    total = 0.0
    for v, k in active:
        for u, l in active:
            total += cost_weight(int(v), int(k), int(u), int(l), params, inst)
    return -0.5 * total


def decode_solution(x: np.ndarray) -> DecodedSolution:
    """Threshold branch lengths at 0.99 and extract the tour if valid.

    The boundary value 0.99 itself counts as occupied. The tour is present
    only when every row and every column holds exactly one occupied lane.
    """
    x = np.asarray(x)
    x_bin = (x >= 0.99).astype(np.int8)
    n = x_bin.shape[0]
    if (x_bin.sum(axis=0) == 1).all() and (x_bin.sum(axis=1) == 1).all():
        tour = tuple(int(np.argmax(x_bin[:, k])) for k in range(n))
        return DecodedSolution(x_bin=x_bin, tour=tour)
    return DecodedSolution(x_bin=x_bin, tour=None)


def route_length(tour, inst: TspInstance) -> float:
    """Tour length including the closing edge back to the start."""
    tour = tuple(int(c) for c in tour)
    if sorted(tour) != list(range(inst.n)):
        raise ValueError("tour must be a permutation of all cities")
    return float(sum(inst.dist[tour[k], tour[(k + 1) % inst.n]] for k in range(inst.n)))


def estimated_route_length(n: int) -> float:
    """Mean random-tour length estimate for generated maps: 100 * n."""
    if n < 3:
        raise InvalidInstanceError(f"need at least 3 cities, got n={n}")
    return 100.0 * n


def brute_force_optimum(inst: TspInstance) -> tuple[tuple[int, ...], float]:
    """Exhaustively shortest tour; refused above n=10.

    City 0 is fixed as the start and reversed duplicates are skipped, so
    (n-1)!/2 candidates are scanned. Ties resolve to the lexicographically
    first tour.
    """
    if inst.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force refused for n={inst.n} > {BRUTE_FORCE_MAX_N}")
    best_tour = None
    best_len = math.inf
    for rest in itertools.permutations(range(1, inst.n)):
        if rest[0] > rest[-1]:
            continue
        tour = (0,) + rest
        length = route_length(tour, inst)
        if length < best_len:
            best_len = length
            best_tour = tour
    return best_tour, best_len


def save_map(inst: TspInstance, path) -> None:
    """Write a map as JSON: n, row-major flat distances, generation record."""
    gen = None
    if inst.gen_meta is not None:
        gen = {"seed": inst.gen_meta.seed, "mean": inst.gen_meta.mean, "sd": inst.gen_meta.sd}
    payload = {"n": inst.n, "dist": [float(x) for x in inst.dist.ravel()], "gen": gen}
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_map(path) -> TspInstance:
    """Read a map written by save_map."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        n = int(data["n"])
        flat = data["dist"]
        gen = data.get("gen")
    except (KeyError, TypeError) as exc:
        raise InvalidInstanceError(f"malformed map file: {exc}") from exc
    if len(flat) != n * n:
        raise InvalidInstanceError(f"dist has {len(flat)} entries, expected {n * n}")
    dist = np.array(flat, dtype=float).reshape(n, n)
    meta = GenMeta(seed=int(gen["seed"]), mean=float(gen["mean"]), sd=float(gen["sd"])) if gen else None
    return TspInstance(n=n, dist=dist, gen_meta=meta)
