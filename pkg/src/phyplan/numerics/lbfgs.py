"""Limited-memory BFGS with a strong-Wolfe line search."""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from phyplan.numerics.autodiff import NumericError


@dataclass(frozen=True)
class LBFGSConfig:
    memory: int = 10
    max_iterations: int = 6400
    gradient_tolerance: float = 1e-9
    initial_step: float = 1.0
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    learning_rate: float = 0.01
    max_line_search: int = 30

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("memory must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if not 0.0 < self.wolfe_c1 < self.wolfe_c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.initial_step <= 0 or self.learning_rate <= 0:
            raise ValueError("step sizes must be positive")


@dataclass
class LBFGSResult:
    x: np.ndarray
    fun: float
    history: list = field(default_factory=list)
    status: str = "max_iterations"
    iterations: int = 0
    evaluations: int = 0

    def __iter__(self):
        # allows ``params, history = lbfgs_minimize(...)``
        return iter((self.x, self.history))


def _safe_eval(fun, x):
    try:
        f, g = fun(x)
    except NumericError:
        return np.inf, None
    f = float(f)
    if not np.isfinite(f) or g is None or not np.all(np.isfinite(g)):
        return np.inf, None
    return f, np.asarray(g, dtype=float)


def _cubic_min(x1, f1, g1, x2, f2, g2, lo, hi):
    """Minimizer of the cubic interpolating two points, clipped to [lo, hi]."""
    d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2)
    disc = d1 * d1 - g1 * g2
    if disc >= 0.0:
        d2 = np.sqrt(disc)
        if x1 > x2:
            d2 = -d2
        t = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        if np.isfinite(t):
            return min(max(t, lo), hi)
    return 0.5 * (lo + hi)


def strong_wolfe(fun, x, f0, g0, d, step, c1=1e-4, c2=0.9, max_evals=30):
    """Bracketing + zoom search (Nocedal & Wright, Alg. 3.5/3.6).

    Returns ``(step, f, g, evals, ok)``. On failure the lowest trial seen is
    returned with ``ok=False`` (its ``g`` may be None if it never improved).

    Close to a minimizer, decreases in f drop below rounding error; a trial
    within ``1e-12 |f0|`` of f0 that meets the curvature condition is then
    accepted (the approximate Wolfe test of Hager & Zhang).
    """
    dg0 = float(g0 @ d)
    f_slack = f0 + 1e-12 * abs(f0)
    best = (0.0, f0, g0)
    evals = 0

    def trial(t):
        nonlocal evals, best
        evals += 1
        f, g = _safe_eval(fun, x + t * d)
        if f < best[1]:
            best = (t, f, g)
        return f, g

    t_prev, f_prev, dg_prev = 0.0, f0, dg0
    t = step
    lo = hi = None
    while evals < max_evals:
        f, g = trial(t)
        if not np.isfinite(f):
            # overshot into a non-finite region: bracket against the last good point
            lo, hi = (t_prev, f_prev, dg_prev), (t, np.inf, np.nan)
            break
        dg = float(g @ d)
        if f <= f_slack and abs(dg) <= -c2 * dg0:
            return t, f, g, evals, True
        if f > f0 + c1 * t * dg0 or (evals > 1 and f >= f_prev):
            lo, hi = (t_prev, f_prev, dg_prev), (t, f, dg)
            break
        if abs(dg) <= -c2 * dg0:
            return t, f, g, evals, True
        if dg >= 0.0:
            lo, hi = (t, f, dg), (t_prev, f_prev, dg_prev)
            break
        t_next = _cubic_min(t_prev, f_prev, dg_prev, t, f, dg, t + 0.01 * (t - t_prev), 10.0 * t)
        t_prev, f_prev, dg_prev = t, f, dg
        t = t_next
    else:
        return best[0], best[1], best[2], evals, False

    # zoom: lo always satisfies sufficient decrease and has the lower value
    while evals < max_evals:
        (t_lo, f_lo, dg_lo), (t_hi, f_hi, dg_hi) = lo, hi
        a, b = min(t_lo, t_hi), max(t_lo, t_hi)
        if b - a < 1e-16 * max(1.0, b):
            break
        margin = 0.1 * (b - a)
        if np.isfinite(f_hi):
            t = _cubic_min(t_lo, f_lo, dg_lo, t_hi, f_hi, dg_hi, a + margin, b - margin)
        else:
            t = 0.5 * (a + b)
        f, g = trial(t)
        if not np.isfinite(f):
            hi = (t, np.inf, np.nan)
            continue
        dg = float(g @ d)
        if f <= f_slack and abs(dg) <= -c2 * dg0:
            return t, f, g, evals, True
        if f > f0 + c1 * t * dg0 or f >= f_lo:
            hi = (t, f, dg)
            continue
        if abs(dg) <= -c2 * dg0:
            return t, f, g, evals, True
        if dg * (t_hi - t_lo) >= 0.0:
            hi = lo
        lo = (t, f, dg)
    return best[0], best[1], best[2], evals, False


def _two_loop(g, s_hist, y_hist, rho_hist):
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def lbfgs_minimize(fun, x0, cfg=None, callback=None):
    """Minimize ``fun`` from ``x0``; ``fun(x)`` returns ``(value, gradient)``.

    ``loss_history`` holds the objective after every accepted step. The
    first iteration tries a step of ``cfg.learning_rate`` along the negative
    gradient; later iterations start from ``cfg.initial_step``. A line search
    that cannot satisfy the strong Wolfe conditions is retried once along the
    steepest-descent direction with the memory cleared; a second failure ends
    the run with status ``"line_search_failed"``.
    """
    cfg = cfg or LBFGSConfig()
    x = np.array(x0, dtype=float, copy=True)
    result = LBFGSResult(x=x, fun=np.nan)
    if cfg.max_iterations == 0:
        return result

    f, g = _safe_eval(fun, x)
    result.evaluations = 1
    if not np.isfinite(f):
        result.status = "non_finite"
        return result
    result.fun = f

    s_hist = deque(maxlen=cfg.memory)
    y_hist = deque(maxlen=cfg.memory)
    rho_hist = deque(maxlen=cfg.memory)

    result.status = "max_iterations"
    first = True
    for it in range(cfg.max_iterations):
        if np.max(np.abs(g)) <= cfg.gradient_tolerance:
            result.status = "converged"
            break
        d = _two_loop(g, s_hist, y_hist, rho_hist)
        step = cfg.learning_rate if first else cfg.initial_step
        if g @ d >= 0.0:
            s_hist.clear(), y_hist.clear(), rho_hist.clear()
            d, step = -g, cfg.learning_rate
        t, f_new, g_new, n_eval, ok = strong_wolfe(
            fun, x, f, g, d, step, cfg.wolfe_c1, cfg.wolfe_c2, cfg.max_line_search
        )
        result.evaluations += n_eval
        if not ok and s_hist:
            s_hist.clear(), y_hist.clear(), rho_hist.clear()
            d = -g
            t, f_new, g_new, n_eval, ok = strong_wolfe(
                fun, x, f, g, d, cfg.learning_rate, cfg.wolfe_c1, cfg.wolfe_c2, cfg.max_line_search
            )
            result.evaluations += n_eval
        if not ok:
            if t > 0.0 and g_new is not None and f_new < f:
                x = x + t * d
                f, g = f_new, g_new
                result.history.append(f)
                result.iterations = it + 1
            result.status = "line_search_failed"
            break
        s = t * d
        y = g_new - g
        sy = s @ y
        if sy > 1e-10 * np.sqrt((s @ s) * (y @ y)):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
        x = x + s
        f, g = f_new, g_new
        first = False
        result.history.append(f)
        result.iterations = it + 1
        if callback is not None and callback(it, x, f) is False:
            result.status = "stopped"
            break
    else:
        if np.max(np.abs(g)) <= cfg.gradient_tolerance:
            result.status = "converged"

    result.x = x
    result.fun = f
    return result
