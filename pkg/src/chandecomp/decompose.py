"""Approximate convex decomposition of a channel into generalized extreme channels.

The target ``E`` is fitted by ``sum_i p_i E_i`` with each ``E_i`` drawn from
one ansatz family, by multi-start local optimization of the Choi-matrix
distance. Flat parameter vectors are laid out as::

    [component 0 | component 1 | ... | component c-1 | c-1 simplex angles]

and the simplex angles map to probabilities through
``p_0 = cos^2 a_0, p_1 = sin^2 a_0 cos^2 a_1, ..., p_{c-1} = prod sin^2 a_k``.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _optim
from .ansatz import (
    AnsatzSpec,
    build,
    normalize_family,
    param_count,
    param_layout,
    random_params,
)
from .channel import QuantumChannel, choi_from_kraus, convex_combine
from .metrics import DistanceReport, diamond_bound, trace_distance
from .exceptions import ValidationError
from .validation import check_probability_vector, check_random_state

__all__ = [
    "DecompositionProblem",
    "DecompositionResult",
    "decompose",
    "decode",
    "encode",
    "objective",
    "verify",
]

log = logging.getLogger(__name__)

METHODS = ("lm", "simplex")


@dataclass(frozen=True)
class DecompositionProblem:
    """What to decompose and with which budget.

    ``components`` defaults to the output dimension ``m``. ``method`` is
    ``"lm"`` (damped least squares with exact Jacobians) or ``"simplex"``
    (Nelder-Mead then finite-difference BFGS on the trace distance).
    ``workers`` caps parallel starts; by default the ``CHANDECOMP_THREADS``
    environment variable, else 1.
    """

    target: QuantumChannel
    family: str = "I"
    components: int | None = None
    starts: int = 20
    max_evals_per_start: int = 50_000
    target_error: float = 1e-5
    seed: int | None = 0
    method: str = "lm"
    refine: bool = False
    workers: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", normalize_family(self.family))
        param_layout(self.family, self.n, self.m)  # raises CapabilityError
        if self.components is None:
            object.__setattr__(self, "components", self.m)
        if self.components < 1:
            raise ValueError(f"components must be >= 1, got {self.components}")
        if self.starts < 1:
            raise ValueError(f"starts must be >= 1, got {self.starts}")
        if self.max_evals_per_start < 1:
            raise ValueError("max_evals_per_start must be >= 1")
        if not self.target_error > 0:
            raise ValueError(f"target_error must be positive, got {self.target_error}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")

    @property
    def n(self) -> int:
        return self.target.n

    @property
    def m(self) -> int:
        return self.target.m

    @property
    def component_size(self) -> int:
        return param_count(self.family, self.n, self.m)

    @property
    def n_params(self) -> int:
        return self.components * self.component_size + self.components - 1


@dataclass(frozen=True)
class DecompositionResult:
    probs: np.ndarray
    specs: tuple
    achieved_error: float
    diamond_upper_bound: float
    evals_used: int
    per_start_errors: tuple
    converged: bool
    best_start: int
    seed: int | None = None
    budgets: dict = field(default_factory=dict)

    @property
    def family(self) -> str:
        return self.specs[0].family

    def components(self):
        return [build(s) for s in self.specs]

    def channel(self) -> QuantumChannel:
        """The recomposed channel ``sum_i p_i E_i``."""
        return convex_combine([g.channel for g in self.components()], self.probs)


def decode(problem: DecompositionProblem, flat):
    """Split flat parameters into ``(probs, [component params, ...])``."""
    flat = np.asarray(flat, dtype=float)
    if flat.shape != (problem.n_params,):
        raise ValueError(f"expected {problem.n_params} parameters, got shape {flat.shape}")
    size, c = problem.component_size, problem.components
    probs = _optim.simplex_weights(flat[c * size:])
    return probs, [flat[i * size:(i + 1) * size] for i in range(c)]


def encode(probs, params) -> np.ndarray:
    """Inverse of :func:`decode`."""
    return np.concatenate([np.asarray(p, dtype=float) for p in params] + [_optim.simplex_angles(probs)])


def objective(problem: DecompositionProblem, flat) -> float:
    """Choi trace distance between the target and the mixture encoded by ``flat``."""
    flat = np.asarray(flat, dtype=float)
    if flat.shape != (problem.n_params,):
        raise ValueError(f"expected {problem.n_params} parameters, got shape {flat.shape}")
    choi = _optim.choi_of_flat(problem.family, problem.n, problem.m, problem.components, flat)
    return trace_distance(choi, choi_from_kraus(problem.target))


def _initial_point(problem, rng):
    parts = [random_params(problem.family, problem.n, problem.m, rng) for _ in range(problem.components)]
    parts.append(rng.uniform(0, np.pi / 2, problem.components - 1))
    return np.concatenate(parts)


def _worker_count(problem):
    if problem.workers is not None:
        return max(1, int(problem.workers))
    env = os.environ.get("CHANDECOMP_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        log.warning("ignoring non-integer CHANDECOMP_THREADS=%r", env)
        return 1


class _Runner:
    """One local optimization per call; holds the compiled model for the problem."""

    def __init__(self, problem):
        self.problem = problem
        self.target = choi_from_kraus(problem.target).matrix
        self.dim = problem.n * problem.m
        if problem.method == "lm":
            self.fun, self.fun_jac = _optim.residual_model(
                problem.family, problem.n, problem.m, problem.components
            )

    def _stop(self, r):
        return _optim.trace_norm_half(_optim.residual_to_matrix(r, self.dim)) < self.problem.target_error

    def _lm(self, x0, max_evals, mask=None):
        t = self.target
        return _optim.levenberg_marquardt(
            lambda x: self.fun(x, t), lambda x: self.fun_jac(x, t), x0,
            max_evals=max_evals, stop=self._stop, mask=mask,
        )

    def run(self, seed_seq):
        p = self.problem
        x0 = _initial_point(p, np.random.default_rng(seed_seq))
        if p.method == "lm":
            x, evals = self._lm(x0, p.max_evals_per_start)
        else:
            x, evals = _optim.simplex_then_quasi_newton(
                lambda v: objective(p, v), x0, max_evals=p.max_evals_per_start, target=p.target_error
            )
        return x, evals, objective(p, x)

    def refine(self, x, sweeps=2):
        """Optimize one component (plus the weights) at a time, others held fixed."""
        p = self.problem
        size, c = p.component_size, p.components
        evals = 0
        for _ in range(sweeps):
            for i in range(c):
                mask = np.zeros(p.n_params, dtype=bool)
                mask[i * size:(i + 1) * size] = True
                mask[c * size:] = True
                x, e = self._lm(x, p.max_evals_per_start, mask=mask)
                evals += e
        return x, evals


def _seed_sequence(seed):
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2**63)))
    if isinstance(seed, np.random.SeedSequence):
        return seed
    check_random_state(seed)
    return np.random.SeedSequence(seed)


def decompose(problem: DecompositionProblem) -> DecompositionResult:
    """Run up to ``problem.starts`` local optimizations and keep the best.

    Stops launching new starts once one reaches ``target_error``. If the
    budget runs out first, the best point found is returned with
    ``converged=False``.
    """
    runner = _Runner(problem)
    seeds = _seed_sequence(problem.seed).spawn(problem.starts)
    workers = min(_worker_count(problem), problem.starts)
    outcomes = []
    evals = 0

    def first_hit():
        return next((i for i, o in enumerate(outcomes) if o[2] < problem.target_error), None)

    if workers == 1:
        for s in seeds:
            outcomes.append(runner.run(s))
            evals += outcomes[-1][1]
            if first_hit() is not None:
                break
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for lo in range(0, len(seeds), workers):
                wave = list(pool.map(runner.run, seeds[lo:lo + workers]))
                outcomes.extend(wave)
                evals += sum(o[1] for o in wave)
                hit = first_hit()
                if hit is not None:
                    # later starts of the wave are dropped so the result does
                    # not depend on the number of workers
                    del outcomes[hit + 1:]
                    break

    errors = [err for _, _, err in outcomes]
    # ties closer than 1e-15 go to the earliest start
    best = next(i for i, e in enumerate(errors) if e <= min(errors) + 1e-15)
    x = outcomes[best][0]
    err = errors[best]
    if problem.refine and problem.method == "lm" and err >= problem.target_error:
        x_ref, extra = runner.refine(x)
        evals += extra
        err_ref = objective(problem, x_ref)
        if err_ref < err:
            x, err = x_ref, err_ref

    probs, params = decode(problem, x)
    specs = tuple(AnsatzSpec(problem.family, problem.n, problem.m, p) for p in params)
    result = DecompositionResult(
        probs=probs,
        specs=specs,
        achieved_error=err,
        diamond_upper_bound=2 * problem.n * err,
        evals_used=int(evals),
        per_start_errors=tuple(float(e) for e in errors),
        converged=err < problem.target_error,
        best_start=best,
        seed=problem.seed if isinstance(problem.seed, (int, type(None))) else None,
        budgets={
            "starts": problem.starts,
            "max_evals_per_start": problem.max_evals_per_start,
            "target_error": problem.target_error,
            "components": problem.components,
            "method": problem.method,
        },
    )
    log.info(
        "decomposed (%d,%d) family %s: error %.3e after %d start(s), %d evals",
        problem.n, problem.m, problem.family, err, len(errors), evals,
    )
    return result


def verify(result: DecompositionResult, target: QuantumChannel) -> DistanceReport:
    """Rebuild the mixture from ``result`` alone and recompute both distances."""
    try:
        probs = check_probability_vector(result.probs, size=len(result.specs))
    except ValueError as exc:
        raise ValidationError(f"result probabilities are not a distribution: {exc}") from exc
    comps = [build(AnsatzSpec(s.family, s.n, s.m, s.params)) for s in result.specs]
    for g in comps:
        if (g.channel.n, g.channel.m) != (target.n, target.m):
            raise ValidationError(
                f"component maps {g.channel.n}->{g.channel.m} but target maps {target.n}->{target.m}"
            )
    mixture = convex_combine([g.channel for g in comps], probs)
    return diamond_bound(choi_from_kraus(target), choi_from_kraus(mixture))
