"""Local solvers used by :mod:`chandecomp.decompose`.

The damped least-squares solver works on the Choi residual (a smooth
surrogate whose norm is the Frobenius distance); the trace distance itself
is only used for stopping and reporting. Residuals and Jacobians come from
JAX, compiled once per (family, n, m, components).
"""

from __future__ import annotations

import threading
import warnings
from functools import lru_cache

import numpy as np
import scipy.optimize

from .ansatz import kraus_operators, param_count

_SQRT2 = np.sqrt(2.0)
_jax_lock = threading.Lock()


def simplex_weights(angles, xp=np):
    """Probabilities ``cos^2(a0), sin^2(a0) cos^2(a1), ..., prod sin^2`` (len(angles) + 1 of them)."""
    s2 = xp.sin(angles) ** 2
    c2 = xp.cos(angles) ** 2
    prefix = xp.concatenate([xp.ones(1), xp.cumprod(s2)])
    return prefix * xp.concatenate([c2, xp.ones(1)])


def simplex_angles(probs) -> np.ndarray:
    """Inverse of :func:`simplex_weights` (angles in [0, pi/2])."""
    probs = np.asarray(probs, dtype=float)
    out, rest = [], 1.0
    for p in probs[:-1]:
        ratio = 1.0 if rest <= 0 else min(max(p / rest, 0.0), 1.0)
        out.append(np.arccos(np.sqrt(ratio)))
        rest -= p
    return np.array(out)


def choi_of_flat(family, n, m, components, x, xp=np):
    """Choi matrix of the convex mixture encoded by flat parameters ``x``."""
    size = param_count(family, n, m)
    w = simplex_weights(x[components * size:], xp)
    blocks = xp.reshape(x[:components * size], (components, size))
    if xp is np:
        ks = np.stack([kraus_operators(family, n, m, b) for b in blocks])
    else:
        import jax

        # vmap traces the ansatz once instead of once per component
        ks = jax.vmap(lambda b: kraus_operators(family, n, m, b, xp))(blocks)
    vecs = xp.reshape(ks, (components, ks.shape[1], -1))
    return xp.einsum("c,cka,ckb->ab", w, vecs, xp.conj(vecs)) / n


def residual_to_matrix(r, dim) -> np.ndarray:
    """Rebuild the Hermitian difference from a residual vector."""
    iu = np.triu_indices(dim, 1)
    k = len(iu[0])
    d = np.diag(r[:dim]).astype(complex)
    d[iu] = (r[dim:dim + k] + 1j * r[dim + k:]) / _SQRT2
    d[(iu[1], iu[0])] = np.conj(d[iu])
    return d


def trace_norm_half(d) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(d))))


@lru_cache(maxsize=None)
def residual_model(family, n, m, components):
    """Compiled ``(fun, fun_and_jac)`` on flat parameters; target Choi passed as second argument."""
    with _jax_lock:
        import jax
        import jax.numpy as jnp

        jax.config.update("jax_enable_x64", True)

    dim = n * m
    iu = np.triu_indices(dim, 1)
    n_params = components * param_count(family, n, m) + components - 1

    def residual(x, target):
        d = choi_of_flat(family, n, m, components, x, jnp) - target
        return jnp.concatenate(
            [jnp.real(jnp.diagonal(d)), _SQRT2 * jnp.real(d[iu]), _SQRT2 * jnp.imag(d[iu])]
        )

    jac = jax.jacfwd(residual) if n_params <= dim * dim else jax.jacrev(residual)
    fun = jax.jit(residual)
    fun_jac = jax.jit(lambda x, t: (residual(x, t), jac(x, t)))

    # the real->complex cast of the parameters makes JAX warn at trace time
    # that the cotangent's imaginary part is dropped, which is exactly right
    def f(x, target):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", np.exceptions.ComplexWarning)
            return np.asarray(fun(x, target))

    def fj(x, target):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", np.exceptions.ComplexWarning)
            r, j = fun_jac(x, target)
        return np.asarray(r), np.asarray(j)

    return f, fj


def levenberg_marquardt(fun, fun_jac, x0, *, max_evals, stop=None, mask=None,
                        gtol=1e-13, xtol=1e-13, stall_window=25, stall_rtol=1e-8):
    """Damped Gauss-Newton with Nielsen's damping update.

    ``fun(x) -> r``; ``fun_jac(x) -> (r, J)``. Each call counts as one
    evaluation. ``stop(r)`` ends the run early when it returns True.
    ``mask`` restricts the step to a subset of coordinates.
    Returns ``(x, evals)``.
    """
    x = np.array(x0, dtype=float)
    idx = np.arange(x.size) if mask is None else np.flatnonzero(mask)
    r, jac = fun_jac(x)
    evals = 1
    jac = jac[:, idx]
    cost = 0.5 * r @ r
    a, g = jac.T @ jac, jac.T @ r
    mu, nu = 1e-3 * max(np.max(np.diag(a)), 1e-12), 2.0
    history = [cost]
    while evals < max_evals:
        if stop is not None and stop(r):
            break
        if np.max(np.abs(g)) < gtol or cost < 1e-32:
            break
        try:
            step = np.linalg.solve(a + mu * np.eye(idx.size), -g)
        except np.linalg.LinAlgError:
            mu *= nu
            nu *= 2
            continue
        if np.linalg.norm(step) < xtol * (np.linalg.norm(x[idx]) + xtol):
            break
        x_new = x.copy()
        x_new[idx] += step
        r_new = fun(x_new)
        evals += 1
        cost_new = 0.5 * r_new @ r_new
        predicted = 0.5 * step @ (mu * step - g)
        rho = (cost - cost_new) / predicted if predicted > 0 else -1.0
        if rho > 0:
            x = x_new
            if evals >= max_evals:
                break
            r, jac = fun_jac(x)
            evals += 1
            jac = jac[:, idx]
            cost = 0.5 * r @ r
            a, g = jac.T @ jac, jac.T @ r
            mu *= max(1 / 3, 1 - (2 * rho - 1) ** 3)
            nu = 2.0
            history.append(cost)
            if len(history) > stall_window:
                old = history[-stall_window - 1]
                if old - cost < stall_rtol * old:
                    break
        else:
            mu *= nu
            nu *= 2
            if mu > 1e20:
                break
    return x, evals


class _BudgetExhausted(Exception):
    pass


class _Budgeted:
    """Objective wrapper that counts calls, tracks the best point and enforces a hard cap."""

    def __init__(self, fun, max_evals, target=None):
        self.fun, self.max_evals, self.target = fun, max_evals, target
        self.evals = 0
        self.best_f, self.best_x = np.inf, None

    def __call__(self, x):
        if self.evals >= self.max_evals:
            raise _BudgetExhausted
        self.evals += 1
        f = self.fun(x)
        if f < self.best_f:
            self.best_f, self.best_x = f, np.array(x, dtype=float)
            if self.target is not None and f < self.target:
                raise _BudgetExhausted
        return f


def simplex_then_quasi_newton(objective, x0, *, max_evals, target=None):
    """Nelder-Mead on ``objective`` followed by finite-difference BFGS polishing.

    Half the budget goes to the simplex stage; the total number of objective
    calls never exceeds ``max_evals``. Returns ``(x, evals)`` with the best
    point seen.
    """
    f = _Budgeted(objective, max_evals, target)
    x = np.array(x0, dtype=float)
    try:
        res = scipy.optimize.minimize(
            f, x, method="Nelder-Mead",
            options={"maxfev": max(1, max_evals // 2), "xatol": 1e-12, "fatol": 1e-14, "adaptive": True},
        )
        scipy.optimize.minimize(f, f.best_x if f.best_x is not None else res.x, method="BFGS",
                                options={"gtol": 1e-12, "maxiter": max_evals})
    except _BudgetExhausted:
        pass
    return (x if f.best_x is None else f.best_x), f.evals
