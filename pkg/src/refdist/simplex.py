"""Nelder-Mead downhill-simplex minimization.

Plain implementation of the reflect/expand/contract/shrink scheme with the
conventional coefficients (1, 2, 0.5, 0.5).  Termination requires both the
simplex diameter (max-norm distance of any vertex from the best one) to fall
under ``xtol`` and the objective spread across vertices to fall under
``ftol``.  The best vertex value is non-increasing from iteration to
iteration, and everything is deterministic for a given starting simplex.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SimplexInitError

__all__ = ["NelderMeadConfig", "SimplexResult", "nelder_mead"]


@dataclass(frozen=True)
class NelderMeadConfig:
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    max_iter: int = 2000
    xtol: float = 1e-8
    ftol: float = 1e-12
    restarts: int = 5

    def __post_init__(self):
        for name in ("reflection", "expansion", "contraction", "shrink"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.expansion > self.reflection:
            raise ValueError("expansion must exceed reflection")
        if self.max_iter < 1 or self.restarts < 1:
            raise ValueError("max_iter and restarts must be >= 1")


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool
    n_evals: int


def _default_simplex(init: np.ndarray) -> np.ndarray:
    """One vertex at init, one stepped 5% (or 0.00025 from zero) per axis."""
    n = len(init)
    simplex = np.tile(init, (n + 1, 1))
    for i in range(n):
        if simplex[i + 1, i] != 0.0:
            simplex[i + 1, i] *= 1.05
        else:
            simplex[i + 1, i] = 0.00025
    return simplex


def nelder_mead(
    objective,
    init,
    config: NelderMeadConfig = NelderMeadConfig(),
    initial_simplex: np.ndarray | None = None,
) -> SimplexResult:
    """Minimize ``objective`` (vector -> float) starting from ``init``."""
    init = np.asarray(init, dtype=float)
    if init.ndim != 1 or init.size == 0:
        raise ValueError("init must be a nonempty 1-D vector")
    if not np.all(np.isfinite(init)):
        raise SimplexInitError(f"initial point contains non-finite values: {init}")

    if initial_simplex is None:
        simplex = _default_simplex(init)
    else:
        simplex = np.array(initial_simplex, dtype=float)
        if simplex.shape != (init.size + 1, init.size):
            raise ValueError(
                f"initial_simplex must have shape {(init.size + 1, init.size)}"
            )

    values = np.array([objective(v) for v in simplex], dtype=float)
    n_evals = len(values)
    if not np.all(np.isfinite(values)):
        raise SimplexInitError("objective is not finite at an initial simplex vertex")

    alpha = config.reflection
    gamma = config.expansion
    beta = config.contraction
    delta = config.shrink

    converged = False
    iterations = 0
    for iterations in range(1, config.max_iter + 1):
        order = np.argsort(values, kind="stable")
        simplex = simplex[order]
        values = values[order]

        diameter = np.max(np.abs(simplex[1:] - simplex[0]))
        spread = values[-1] - values[0]
        if diameter < config.xtol and spread < config.ftol:
            converged = True
            break

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        reflected = centroid + alpha * (centroid - worst)
        f_reflected = objective(reflected)
        n_evals += 1

        if f_reflected < values[0]:
            expanded = centroid + gamma * (centroid - worst)
            f_expanded = objective(expanded)
            n_evals += 1
            if f_expanded < f_reflected:
                simplex[-1], values[-1] = expanded, f_expanded
            else:
                simplex[-1], values[-1] = reflected, f_reflected
        elif f_reflected < values[-2]:
            simplex[-1], values[-1] = reflected, f_reflected
        else:
            if f_reflected < values[-1]:
                contracted = centroid + beta * (reflected - centroid)
                f_contracted = objective(contracted)
                n_evals += 1
                accept = f_contracted <= f_reflected
            else:
                contracted = centroid - beta * (centroid - worst)
                f_contracted = objective(contracted)
                n_evals += 1
                accept = f_contracted < values[-1]
            if accept:
                simplex[-1], values[-1] = contracted, f_contracted
            else:
                best = simplex[0]
                for i in range(1, len(simplex)):
                    simplex[i] = best + delta * (simplex[i] - best)
                    values[i] = objective(simplex[i])
                    n_evals += 1

    best_idx = int(np.argmin(values))
    return SimplexResult(
        x=simplex[best_idx].copy(),
        value=float(values[best_idx]),
        iterations=iterations,
        converged=converged,
        n_evals=n_evals,
    )
