"""Gradient-projection density compensation.

The weights minimize the exponentially weighted energy of the point spread
function over the doubled field of view,

    f0(w) = integral_{2N} exp(-sum_d |x_d| / gamma_d) |s_w(x)|^2 dx = w^T A w / 2,

over the probability simplex (``sum(w) = 1``, ``w >= 0``). The unit-sum
solution is then rescaled by ``r'`` so that the point spread function
integrates to one over a small cell ``eta`` around the origin.
"""
import logging
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _parallel
from .errors import DegeneratePsf, InvalidArgument, MemoryBudgetExceeded
from .geometry import SampleSet

__all__ = [
    "PsfConfig",
    "DensityWeights",
    "GradientOperator",
    "SolverOptions",
    "IterRecord",
    "PowerIterationResult",
    "gradient_matrix_entry",
    "build_gradient_operator",
    "objective_f0",
    "project_simplex",
    "power_iteration",
    "solve_gp",
    "compute_r_prime",
    "gp_weights",
]

logger = logging.getLogger(__name__)

DEFAULT_MEMORY_BUDGET = 2 * 1024**3
BLOCK_ROWS = 256


@dataclass(frozen=True)
class PsfConfig:
    """Geometry of the weighted least-squares problem, all in pixels.

    Attributes
    ----------
    N : tuple of float
        Half extents of the optimization domain ``[-N_1, N_1] x [-N_2, N_2]``.
    gamma : tuple of float
        Decay lengths of the exponential weighting.
    eta : tuple of float
        Widths of the cell over which the rescaled PSF integrates to one.
    """

    N: tuple
    gamma: tuple
    eta: tuple

    def __post_init__(self):
        vals = {}
        for name in ("N", "gamma", "eta"):
            v = tuple(float(x) for x in np.atleast_1d(getattr(self, name)))
            if not all(np.isfinite(v)) or min(v) <= 0:
                raise InvalidArgument(f"PsfConfig.{name} entries must be finite and > 0")
            vals[name] = v
        if not len(vals["N"]) == len(vals["gamma"]) == len(vals["eta"]):
            raise InvalidArgument("N, gamma and eta must have the same length")
        if any(e > n for e, n in zip(vals["eta"], vals["N"])):
            raise InvalidArgument("eta must not exceed N")
        for name, v in vals.items():
            object.__setattr__(self, name, v)

    @property
    def dim(self):
        return len(self.N)

    @classmethod
    def for_image(cls, width, height, gamma=None, eta=(1.0, 1.0)):
        """Config for a ``width x height`` image: ``N = (width, height)``.

        The image occupies ``[-N/2, N/2]`` and the PSF is shaped over the
        doubled box ``[-N, N]``, which is where ``g * s_w`` collects
        contributions from inside the field of view. The default decay is a
        quarter of each side, e.g. ``gamma = (52, 52)`` for a 208 x 208 image.
        """
        if gamma is None:
            gamma = (0.25 * width, 0.25 * height)
        return cls(N=(float(width), float(height)), gamma=tuple(gamma), eta=tuple(eta))


@dataclass(eq=False)
class DensityWeights:
    """Per-sample density compensation values with provenance."""

    w: np.ndarray
    method: str = "gp"
    scale_applied: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64).ravel()
        if not np.all(np.isfinite(self.w)):
            raise InvalidArgument("weights must be finite")
        if self.method not in ("gp", "voronoi", "fixed_point"):
            raise InvalidArgument(f"unknown weight method {self.method!r}")

    def __len__(self):
        return self.w.shape[0]


def _t_factors(dk, N, gamma):
    """``t_d = integral_{-N}^{N} cos(2 pi dk x) exp(-|x| / gamma) dx`` (closed form).

    Written in terms of ``|dk|`` and ``expm1`` so that the result is exactly
    symmetric in the sign of ``dk`` and stable as ``dk -> 0`` or ``gamma -> inf``.
    """
    nu = 2 * np.pi * np.abs(dk)
    a = N / gamma
    b = nu * N
    decay = np.exp(-a)
    one_minus = -np.expm1(-a) + decay * 2 * np.sin(0.5 * b) ** 2
    general = 2.0 / (1.0 + (gamma * nu) ** 2) * (gamma * one_minus + decay * gamma**2 * nu * np.sin(b))
    return np.where(dk == 0, 2 * gamma * -np.expm1(-a), general)


def gradient_matrix_entry(k_j, k_l, cfg):
    """Entry ``a_lj = 2 prod_d t_d`` of the gradient matrix.

    Equals ``2 integral_{2N} cos(2 pi (k_j - k_l) . x) exp(-sum |x_d| / gamma_d) dx``.
    """
    k_j = np.atleast_1d(np.asarray(k_j, dtype=np.float64))
    k_l = np.atleast_1d(np.asarray(k_l, dtype=np.float64))
    out = 2.0
    for d in range(cfg.dim):
        out *= float(_t_factors(k_l[d] - k_j[d], cfg.N[d], cfg.gamma[d]))
    return out


def _rows(coords, cfg, sl):
    k = coords
    blk = np.full((sl.stop - sl.start, k.shape[0]), 2.0)
    for d in range(cfg.dim):
        dk = k[sl, d][:, None] - k[None, :, d]
        blk *= _t_factors(dk, cfg.N[d], cfg.gamma[d])
    return blk


class GradientOperator:
    """The symmetric PSD matrix ``A`` with ``grad f0(w) = A w``.

    In ``dense`` mode the matrix is materialized; in ``matrix_free`` mode each
    product recomputes ``A`` in blocks of rows. Both use the same row blocks,
    so their products agree to the last bit in practice.
    """

    symmetric = True

    def __init__(self, coords, cfg, mode="dense", block=BLOCK_ROWS):
        self.coords = np.asarray(coords, dtype=np.float64)
        self.cfg = cfg
        self.mode = mode
        self.block = block
        m = self.coords.shape[0]
        self.shape = (m, m)
        self._blocks = _parallel.row_blocks(m, block)
        self.matrix = None
        if mode == "dense":
            self.matrix = np.empty((m, m))

            def fill(sl):
                self.matrix[sl] = _rows(self.coords, cfg, sl)

            _parallel.map_blocks(fill, self._blocks)

    def matvec(self, w):
        w = np.asarray(w, dtype=np.float64)
        if self.matrix is not None:
            parts = _parallel.map_blocks(lambda sl: self.matrix[sl] @ w, self._blocks)
        else:
            parts = _parallel.map_blocks(lambda sl: _rows(self.coords, self.cfg, sl) @ w, self._blocks)
        return np.concatenate(parts)

    __matmul__ = matvec

    def to_dense(self):
        if self.matrix is not None:
            return self.matrix
        return np.concatenate([_rows(self.coords, self.cfg, sl) for sl in self._blocks])

    def diagonal(self):
        return np.full(self.shape[0], gradient_matrix_entry(self.coords[0], self.coords[0], self.cfg))


def build_gradient_operator(s, cfg, mode="auto", memory_budget=DEFAULT_MEMORY_BUDGET, block=BLOCK_ROWS):
    """Build ``A`` for sample set `s`.

    `mode` is ``"dense"``, ``"matrix_free"`` or ``"auto"`` (dense when the
    ``M^2`` doubles fit in `memory_budget` bytes).
    """
    if s.dim != cfg.dim:
        raise InvalidArgument(f"sample set is {s.dim}D but PsfConfig is {cfg.dim}D")
    mode = mode.replace("-", "_")
    need = 8 * s.M**2
    if mode == "auto":
        mode = "dense" if need <= memory_budget else "matrix_free"
    if mode == "dense" and need > memory_budget:
        raise MemoryBudgetExceeded(
            f"dense gradient matrix needs {need / 2**20:.0f} MiB, budget is "
            f"{memory_budget / 2**20:.0f} MiB; use mode='matrix_free'"
        )
    if mode not in ("dense", "matrix_free"):
        raise InvalidArgument(f"unknown operator mode {mode!r}")
    return GradientOperator(s.coords, cfg, mode=mode, block=block)


def objective_f0(w, A):
    """``f0(w) = w^T A w / 2``."""
    w = np.asarray(w, dtype=np.float64)
    return 0.5 * float(w @ (A @ w))


def project_simplex(v):
    """Euclidean projection onto ``{u : u >= 0, sum(u) = 1}``.

    Sort-and-threshold: with ``v`` sorted descending, ``rho`` is the largest
    index where ``v_(rho) + (1 - sum_{i<=rho} v_(i)) / rho > 0``.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgument("project_simplex expects a non-empty vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    rho = np.nonzero(u + (1.0 - css) / j > 0)[0][-1]
    tau = (css[rho] - 1.0) / (rho + 1)
    return np.maximum(v - tau, 0.0)


class PowerIterationResult(NamedTuple):
    value: float
    n_iter: int
    converged: bool


def power_iteration(A_op, tol=1e-6, max_iter=1000, seed=0):
    """Estimate the spectral norm of a symmetric PSD operator.

    Iterates ``x <- A x / |A x|`` from a seeded random start and stops when
    successive Rayleigh quotients differ by less than ``tol`` (relative).
    If `max_iter` is reached first, the last estimate is returned with
    ``converged=False`` and a warning is issued.
    """
    n = A_op.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    prev = None
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = A_op @ x
        lam = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return PowerIterationResult(0.0, it, True)
        if prev is not None and abs(lam - prev) < tol * abs(lam):
            return PowerIterationResult(lam, it, True)
        prev = lam
        x = y / ny
    warnings.warn(f"power iteration did not converge in {max_iter} iterations", RuntimeWarning)
    return PowerIterationResult(lam, max_iter, False)


@dataclass
class SolverOptions:
    max_iter: int = 2000
    obj_tol: float = 1e-8
    seed: int = 0
    mode: str = "auto"
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    power_tol: float = 1e-6
    power_max_iter: int = 1000
    window: int = 10


class IterRecord(NamedTuple):
    iter: int
    f0: float
    step: float
    restarted: bool


_SHRINK = 0.5
_GROW = 1.25
_GROW_AFTER = 3
_MAX_BACKTRACK = 100


def _resolve_opts(opts, kwargs):
    if opts is None:
        opts = SolverOptions()
    elif isinstance(opts, dict):
        opts = SolverOptions(**opts)
    if kwargs:
        opts = SolverOptions(**{**opts.__dict__, **kwargs})
    return opts


def solve_gp(s, cfg, opts=None, A=None, callback=None, **kwargs):
    """Minimize ``f0`` over the probability simplex.

    Accelerated projected gradient (FISTA) with backtracking, started from the
    constant vector ``1/M`` with initial step ``1 / ||A||``. Momentum is reset
    whenever ``grad f0(y) . (x+ - x) > 0``; a candidate that would raise the
    objective is discarded and retried from the last iterate without
    momentum, so the recorded objective never increases.

    If given, ``callback(iteration, x)`` is called with every accepted iterate,
    including the starting point as iteration 0.

    Returns
    -------
    weights : DensityWeights
        Unit-sum solution (``scale_applied = 1``).
    trace : list of IterRecord
        One record per accepted iterate, starting with the initial point.
    """
    opts = _resolve_opts(opts, kwargs)
    m = s.M
    if m == 1:
        # the simplex is a single point
        f = 0.5 * gradient_matrix_entry(s.coords[0], s.coords[0], cfg)
        w = DensityWeights(np.ones(1), method="gp", params={"iterations": 0, "f0": f})
        if callback is not None:
            callback(0, w.w.copy())
        return w, [IterRecord(0, f, 0.0, False)]
    if A is None:
        A = build_gradient_operator(s, cfg, mode=opts.mode, memory_budget=opts.memory_budget)

    power = power_iteration(A, tol=opts.power_tol, max_iter=opts.power_max_iter, seed=opts.seed)
    step = 1.0 / power.value
    logger.info("||A|| ~= %.6g (%d power iterations)", power.value, power.n_iter)

    x = np.full(m, 1.0 / m)
    Ax = A @ x
    fx = 0.5 * float(x @ Ax)
    y, Ay, fy = x, Ax, fx
    t = 1.0
    streak = 0
    trace = [IterRecord(0, fx, step, False)]
    history = [fx]
    if callback is not None:
        callback(0, x.copy())

    for it in range(1, opts.max_iter + 1):
        g = Ay
        backtracked = False
        for _ in range(_MAX_BACKTRACK):
            xn = project_simplex(y - step * g)
            d = xn - y
            Axn = A @ xn
            fxn = 0.5 * float(xn @ Axn)
            bound = fy + float(g @ d) + float(d @ d) / (2 * step)
            if fxn <= bound + 1e-12 * abs(fy):
                break
            step *= _SHRINK
            backtracked = True
        streak = 0 if backtracked else streak + 1

        if fxn > fx:
            if y is x:
                logger.info("no further decrease at iteration %d", it)
                break
            y, Ay, fy, t = x, Ax, fx, 1.0
            continue

        restarted = float(g @ (xn - x)) > 0
        if restarted:
            t_next, beta = 1.0, 0.0
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / t_next
        if beta == 0.0:
            y, Ay = xn, Axn
        else:
            y = xn + beta * (xn - x)
            Ay = Axn + beta * (Axn - Ax)
        fy = 0.5 * float(y @ Ay)
        t = 1.0 if restarted else t_next
        x, Ax, fx = xn, Axn, fxn
        trace.append(IterRecord(it, fx, step, restarted))
        history.append(fx)
        if callback is not None:
            callback(it, x.copy())

        if streak >= _GROW_AFTER:
            step *= _GROW
            streak = 0
        if len(history) > opts.window:
            old = history[-1 - opts.window]
            if abs(old - fx) <= opts.obj_tol * abs(fx):
                break

    params = {
        "iterations": trace[-1].iter,
        "f0": fx,
        "norm_A": power.value,
        "gamma": list(cfg.gamma),
        "N": list(cfg.N),
    }
    return DensityWeights(x, method="gp", params=params), trace


def compute_r_prime(w_tilde, s, eta):
    """Scale ``r'`` making ``integral_eta s_{r' w} dx = 1`` for a unit-sum ``w``.

    ``1 / r' = sum_j w_j prod_d sin(pi k_jd eta_d) / (pi k_jd)``, each factor
    taking its limit ``eta_d`` at ``k_jd = 0``.
    """
    w = np.asarray(getattr(w_tilde, "w", w_tilde), dtype=np.float64)
    if abs(w.sum() - 1.0) > 1e-9 or np.any(w < 0):
        raise InvalidArgument("compute_r_prime expects nonnegative weights summing to 1")
    eta = np.broadcast_to(np.asarray(eta, dtype=np.float64), (s.dim,))
    cell = np.prod(eta[None, :] * np.sinc(s.coords * eta[None, :]), axis=1)
    denom = float(w @ cell)
    if abs(denom) < 1e-14:
        raise DegeneratePsf("integral of the point spread function over eta vanishes")
    return 1.0 / denom


def gp_weights(s, cfg, opts=None, return_trace=False, **kwargs):
    """Gradient-projection weights rescaled so the PSF integrates to 1 over ``eta``.

    With ``return_trace=True`` the solver trace is returned alongside.
    """
    w_tilde, trace = solve_gp(s, cfg, opts, **kwargs)
    r = compute_r_prime(w_tilde, s, cfg.eta)
    params = dict(w_tilde.params, r_prime=r, eta=list(cfg.eta))
    out = DensityWeights(r * w_tilde.w, method="gp", scale_applied=r, params=params)
    return (out, trace) if return_trace else out
