"""Cuckoo search: a bounded continuous maximizer with Levy-flight proposals.

Each iteration launches one heavy-tailed proposal from the incumbent best
nest, lets it displace a randomly chosen nest when fitter, regenerates the
worst fraction of nests uniformly (the single best nest is never touched),
and records best/mean fitness.  The all-time best evaluated point is
returned, so the best-so-far trajectory is non-decreasing by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OptimizationError, ValidationError


@dataclass(frozen=True)
class CsParams:
    nest_count: int = 25
    pa: float = 0.25
    max_iters: int = 200
    levy_beta: float = 1.5
    step_scale: float | None = None  # None -> 0.01 * box width per coordinate
    seed: int = 0

    def __post_init__(self):
        if self.nest_count < 2:
            raise ValidationError("nest_count must be >= 2")
        if not 0.0 < self.pa < 1.0:
            raise ValidationError("pa must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if not 1.0 < self.levy_beta <= 2.0:
            raise ValidationError("levy_beta must lie in (1, 2]")
        if self.step_scale is not None and not self.step_scale > 0:
            raise ValidationError("step_scale must be positive")


@dataclass
class CsResult:
    best_solution: np.ndarray
    best_fitness: float
    history: list[tuple[float, float]] = field(default_factory=list)
    evaluations: int = 0


def mantegna_sigma(beta: float) -> float:
    """Scale of the Gaussian numerator in Mantegna's Levy approximation."""
    num = math.gamma(1.0 + beta) * math.sin(math.pi * beta / 2.0)
    den = math.gamma((1.0 + beta) / 2.0) * beta * 2.0 ** ((beta - 1.0) / 2.0)
    return (num / den) ** (1.0 / beta)


def levy_step(dim: int, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Heavy-tailed step u / |v|^(1/beta) per coordinate (Mantegna)."""
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    if not 1.0 < beta <= 2.0:
        raise ValidationError(f"beta must lie in (1, 2], got {beta}")
    u = rng.normal(0.0, mantegna_sigma(beta), size=dim)
    v = rng.normal(0.0, 1.0, size=dim)
    return u / np.abs(v) ** (1.0 / beta)


def _as_bounds(bounds, dim: int):
    lo, hi = bounds
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,)).copy()
    if np.any(lo >= hi):
        raise ValidationError("lower bounds must be strictly below upper bounds")
    return lo, hi


def _seeded_population(rng: np.random.Generator, nest_count: int, dim: int,
                       lo: np.ndarray, hi: np.ndarray, seeds) -> np.ndarray:
    population = rng.uniform(lo, hi, size=(nest_count, dim))
    if seeds is None:
        return population
    seeds = [np.asarray(s, dtype=float) for s in seeds]
    if len(seeds) > nest_count:
        raise ValidationError(
            f"{len(seeds)} seed vectors exceed nest_count {nest_count}"
        )
    for i, s in enumerate(seeds):
        if s.shape != (dim,):
            raise ValidationError(f"seed {i} has shape {s.shape}, expected ({dim},)")
        if np.any(s < lo) or np.any(s > hi):
            raise ValidationError(f"seed {i} lies outside the bounds: {s}")
        population[i] = s
    return population


def cs_seed_population(params: CsParams, dim: int, bounds, seeds=None) -> np.ndarray:
    """Initial population with the given vectors in the leading nests and the
    remainder uniform in the box (deterministic per params.seed)."""
    lo, hi = _as_bounds(bounds, dim)
    rng = np.random.default_rng(params.seed)
    return _seeded_population(rng, params.nest_count, dim, lo, hi, seeds)


def cs_optimize(fitness, dim: int, bounds, params: CsParams,
                seeds=None) -> CsResult:
    """Maximize ``fitness`` over the box, returning the all-time best point.

    Proposals are Levy flights launched from the best nest, clamped
    coordinate-wise into the box.  Total evaluations stay within
    nest_count + max_iters * (1 + ceil(pa * nest_count)).
    """
    lo, hi = _as_bounds(bounds, dim)
    rng = np.random.default_rng(params.seed)
    alpha = (np.full(dim, params.step_scale) if params.step_scale is not None
             else 0.01 * (hi - lo))

    def evaluate(vec: np.ndarray) -> float:
        value = float(fitness(vec))
        if not math.isfinite(value):
            raise OptimizationError(f"fitness returned {value} at {vec.tolist()}")
        return value

    nests = _seeded_population(rng, params.nest_count, dim, lo, hi, seeds)
    fit = np.array([evaluate(v) for v in nests])
    evaluations = params.nest_count

    best_idx = int(np.argmax(fit))
    best_x = nests[best_idx].copy()
    best_f = float(fit[best_idx])
    n_abandon = min(math.ceil(params.pa * params.nest_count), params.nest_count - 1)
    history: list[tuple[float, float]] = []

    for _ in range(params.max_iters):
        proposal = np.clip(
            best_x + alpha * levy_step(dim, params.levy_beta, rng), lo, hi
        )
        pf = evaluate(proposal)
        evaluations += 1
        if pf > best_f:
            best_f, best_x = pf, proposal.copy()
        j = int(rng.integers(params.nest_count))
        if pf > fit[j]:
            nests[j] = proposal
            fit[j] = pf

        # abandon the worst nests, shielding the current best (elitism)
        order = np.argsort(fit)
        keep = int(np.argmax(fit))
        replaced = 0
        for idx in order:
            if replaced >= n_abandon:
                break
            if idx == keep:
                continue
            nests[idx] = rng.uniform(lo, hi)
            fit[idx] = evaluate(nests[idx])
            evaluations += 1
            if fit[idx] > best_f:
                best_f, best_x = float(fit[idx]), nests[idx].copy()
            replaced += 1

        history.append((best_f, float(fit.mean())))

    return CsResult(best_solution=best_x, best_fitness=best_f,
                    history=history, evaluations=evaluations)
