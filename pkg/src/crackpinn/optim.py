"""Adam and limited-memory BFGS with a strong-Wolfe line search."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class LineSearchError(RuntimeError):
    pass


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def adam_step(params, grad, state: AdamState):
    """One bias-corrected Adam update. Returns ``(new_params, state)``."""
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    mhat = state.m / (1.0 - state.beta1**state.t)
    vhat = state.v / (1.0 - state.beta2**state.t)
    return params - state.lr * mhat / (np.sqrt(vhat) + state.eps), state


@dataclass
class LBFGSState:
    history: int = 20
    c1: float = 1e-4
    c2: float = 0.9
    max_evals: int = 25
    s: deque = field(default_factory=deque)
    y: deque = field(default_factory=deque)
    n_steps: int = 0

    def reset(self):
        self.s.clear()
        self.y.clear()
        self.n_steps = 0


def _two_loop(grad, state: LBFGSState):
    q = grad.copy()
    alphas = []
    for s, y in zip(reversed(state.s), reversed(state.y)):
        rho = 1.0 / float(y @ s)
        a = rho * float(s @ q)
        q -= a * y
        alphas.append((rho, a))
    if state.s:
        s, y = state.s[-1], state.y[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y), (rho, a) in zip(zip(state.s, state.y), reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


def _cubic_min(a, fa, da, b, fb, db):
    lo, hi = min(a, b), max(a, b)
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if np.isfinite(disc) and disc >= 0:
        d2 = np.sign(b - a) * np.sqrt(disc)
        denom = db - da + 2.0 * d2
        if denom != 0 and np.isfinite(denom):
            x = b - (b - a) * (db + d2 - d1) / denom
            w = hi - lo
            if lo + 0.1 * w <= x <= hi - 0.1 * w:
                return x
    return 0.5 * (lo + hi)


def strong_wolfe(fun, x, f0, g0, p, alpha0=1.0, c1=1e-4, c2=0.9, max_evals=25):
    """Line search satisfying the strong Wolfe conditions.

    ``fun(x) -> (f, g)``.  Returns ``(alpha, f, g, n_evals)``; raises
    :class:`LineSearchError` when no acceptable step is found.
    """
    d0 = float(g0 @ p)
    if not d0 < 0:
        raise LineSearchError("search direction is not a descent direction")
    evals = 0
    best = None
    # sufficient decrease is judged up to rounding in f, so a converged
    # iterate does not make the search fail on noise
    slack = 8.0 * np.finfo(float).eps * abs(f0)

    def phi(a):
        nonlocal evals, best
        evals += 1
        f, g = fun(x + a * p)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            return np.inf, g, np.nan
        if f <= f0 + c1 * a * d0 + slack and (best is None or f < best[1]):
            best = (a, f, g)
        return f, g, float(g @ p)

    def zoom(lo, flo, dlo, hi, fhi, dhi):
        while evals < max_evals:
            if not np.isfinite(fhi) or not np.isfinite(dhi):
                a = 0.5 * (lo + hi)
            else:
                a = _cubic_min(lo, flo, dlo, hi, fhi, dhi)
            f, g, d = phi(a)
            if f > f0 + c1 * a * d0 + slack or f >= flo:
                hi, fhi, dhi = a, f, d
            else:
                if abs(d) <= -c2 * d0:
                    return a, f, g
                if d * (hi - lo) >= 0:
                    hi, fhi, dhi = lo, flo, dlo
                lo, flo, dlo = a, f, d
            if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
                break
        return None

    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = alpha0
    result = None
    for i in range(max_evals):
        f, g, d = phi(a)
        if f > f0 + c1 * a * d0 + slack or (i > 0 and f >= f_prev):
            result = zoom(a_prev, f_prev, d_prev, a, f, d)
            break
        if abs(d) <= -c2 * d0:
            result = (a, f, g)
            break
        if d >= 0:
            result = zoom(a, f, d, a_prev, f_prev, d_prev)
            break
        a_prev, f_prev, d_prev = a, f, d
        a *= 2.0
        if evals >= max_evals:
            break
    if result is None:
        if best is not None and best[1] <= f0:
            result = best
        else:
            raise LineSearchError(f"no acceptable step after {evals} evaluations")
    return result[0], result[1], result[2], evals


def lbfgs_step(fun, params, f, grad, state: LBFGSState):
    """One quasi-Newton step. Returns ``(new_params, f_new, g_new, state)``."""
    gnorm1 = float(np.abs(grad).sum())
    if gnorm1 == 0.0:
        return params, f, grad, state
    p = _two_loop(grad, state)
    if float(p @ grad) >= 0:
        state.reset()
        p = -grad
    alpha0 = min(1.0, 1.0 / gnorm1) if not state.s else 1.0
    alpha, f_new, g_new, _ = strong_wolfe(fun, params, f, grad, p, alpha0, state.c1, state.c2, state.max_evals)
    s = alpha * p
    y = g_new - grad
    sy = float(s @ y)
    if sy > 1e-10 * np.sqrt(float(s @ s) * float(y @ y)):
        state.s.append(s)
        state.y.append(y)
        if len(state.s) > state.history:
            state.s.popleft()
            state.y.popleft()
    state.n_steps += 1
    return params + s, f_new, g_new, state


def optimizer_step(params, grad, state, fun=None, f=None):
    """Dispatch one update on the optimizer ``state`` type.

    The quasi-Newton branch needs ``fun`` (value and gradient) and the
    current value ``f`` for its line search.
    """
    if isinstance(state, AdamState):
        return adam_step(params, grad, state)
    if isinstance(state, LBFGSState):
        if fun is None or f is None:
            raise ValueError("quasi-Newton step needs fun and f")
        new, _, _, state = lbfgs_step(fun, params, f, grad, state)
        return new, state
    raise TypeError(f"unknown optimizer state {type(state).__name__}")
