"""One-shot kernel estimation from labeled samples, plus its continuous limit.

The estimator is training-free: given samples (y_j, F_j) whose points lie on
(or near) a q-dimensional set inside R^Q, the value at x is

    Fhat_{n,alpha}(x) = (n**(q(1-alpha)) / M) * sum_j F_j
                        * Phi~_{n,q}(n**(1-alpha) * |x - y_j|)

with the compiled radial kernel from :mod:`hermloc.kernels`.  There is no
fitting step; accuracy is controlled by n, the localization exponent alpha,
and the sample budget M.

``continuous_operator_on_curve`` is the M -> infinity limit for data on a
parametrized curve (q = 1): the same kernel integrated against the
normalized arc-length measure.  It serves as the oracle against which the
Monte-Carlo estimator is checked, and is evaluated by panel-adaptive
composite Gauss-Legendre quadrature with refinement until two consecutive
doublings agree.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .kernels import KernelTable, _eval_even_series, compile_kernel

__all__ = [
    "LabeledSample",
    "Dataset",
    "EstimatorConfig",
    "estimate_at",
    "estimate_batch",
    "write_dataset_csv",
    "read_dataset_csv",
    "Curve",
    "QuadratureConvergenceError",
    "continuous_operator_on_curve",
]


@dataclass(frozen=True)
class LabeledSample:
    """A single observation: a point of R^Q and its (possibly noisy) value."""

    point: np.ndarray
    value: float


@dataclass(frozen=True)
class Dataset:
    """Sample cloud with its structural dimension q.

    ``points`` has shape (M, Q); ``values`` has shape (M,).  q is the
    dimension of the set the points are believed to lie on and is supplied
    by the caller, never inferred.
    """

    points: np.ndarray
    values: np.ndarray
    q: int

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array (M, Q)")
        if vals.shape != (pts.shape[0],):
            raise ValueError("values must have one entry per point")
        if pts.shape[0] == 0:
            raise ValueError("dataset must contain at least one sample")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(vals))):
            raise ValueError("dataset entries must be finite")
        if not isinstance(self.q, (int, np.integer)) or not 1 <= self.q <= pts.shape[1]:
            raise ValueError("q must be an integer in 1..Q")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_samples(cls, samples: Sequence[LabeledSample], q: int) -> "Dataset":
        pts = np.array([s.point for s in samples], dtype=float)
        vals = np.array([s.value for s in samples], dtype=float)
        return cls(pts, vals, q)

    def with_unit_values(self) -> "Dataset":
        """Same points, all values 1 (the density pass of two-pass use)."""
        return Dataset(self.points, np.ones(self.size), self.q)


def write_dataset_csv(ds: Dataset, path: str) -> None:
    """Serialize as CSV with header y_1..y_Q,value.

    Floats are rendered with shortest round-trip decimals (repr), so a
    write/read cycle reproduces every bit.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"y_{i + 1}" for i in range(ds.ambient_dim)] + ["value"])
        for row, val in zip(ds.points, ds.values):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(val))])


def read_dataset_csv(path: str, q: int) -> Dataset:
    """Read a dataset CSV written by :func:`write_dataset_csv`."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row")
        ncol = len(header)
        expected = [f"y_{i + 1}" for i in range(ncol - 1)] + ["value"]
        if header != expected:
            raise ValueError(f"{path}: header must be y_1..y_Q,value, got {header}")
        pts, vals = [], []
        for line in reader:
            if len(line) != ncol:
                raise ValueError(f"{path}: row with {len(line)} fields, expected {ncol}")
            nums = [float(v) for v in line]
            pts.append(nums[:-1])
            vals.append(nums[-1])
    return Dataset(np.array(pts), np.array(vals), q)


@dataclass(frozen=True)
class EstimatorConfig:
    """Degree n, localization exponent alpha in (0, 1], and compiled table."""

    n: float
    alpha: float
    table: KernelTable

    def __post_init__(self) -> None:
        if not np.isfinite(self.n) or self.n < 1:
            raise ValueError("n must be a finite real >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.table.n != self.n:
            raise ValueError("kernel table was compiled for a different n")

    @classmethod
    def build(cls, n: float, alpha: float, q: int) -> "EstimatorConfig":
        return cls(float(n), float(alpha), compile_kernel(n, q))


def _check_points(ds: Dataset, cfg: EstimatorConfig, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != ds.ambient_dim:
        raise ValueError("test points must have shape (T, Q) matching the data")
    if not np.all(np.isfinite(xs)):
        raise ValueError("test points must be finite")
    if cfg.table.q != ds.q:
        raise ValueError("kernel table q does not match dataset q")
    return xs


def estimate_batch(ds: Dataset, cfg: EstimatorConfig, xs) -> np.ndarray:
    """Evaluate the estimator at many points; one kernel pass per batch.

    Each output entry is the exact estimator sum for its point: the kernel
    value per sample, multiplied by the sample value, reduced in the fixed
    dataset order with compensated summation.  Results per point are
    identical whether the point is evaluated alone or inside any batch.
    """
    xs = _check_points(ds, cfg, xs)
    lam = cfg.n ** (1.0 - cfg.alpha)
    diff = xs[:, None, :] - ds.points[None, :, :]
    r = lam * np.sqrt(np.einsum("tmq,tmq->tm", diff, diff))
    kern = _eval_even_series(cfg.table.a, r)  # (T, M)
    factor = cfg.n ** (ds.q * (1.0 - cfg.alpha)) / ds.size
    terms = kern * ds.values[None, :]
    return np.array([factor * math.fsum(row.tolist()) for row in terms])


def estimate_at(ds: Dataset, cfg: EstimatorConfig, x) -> float:
    """Estimator value at a single point (same code path as the batch)."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(estimate_batch(ds, cfg, x)[0])


@dataclass(frozen=True)
class Curve:
    """Parametrized curve t in [t0, t1] -> R^Q with known speed |x'(t)|.

    ``chart`` maps an array of parameters to points, shape (N, Q);
    ``speed`` is either a constant or a map from parameters to |x'(t)|,
    shape (N,).
    """

    chart: Callable[[np.ndarray], np.ndarray]
    speed: float | Callable[[np.ndarray], np.ndarray]
    t0: float
    t1: float

    def speed_at(self, t: np.ndarray) -> np.ndarray:
        if callable(self.speed):
            return np.asarray(self.speed(t), dtype=float)
        return np.full(np.shape(t), float(self.speed))


class QuadratureConvergenceError(RuntimeError):
    """Raised when panel refinement does not reach the requested tolerance."""


# Piecewise-Chebyshev proxies for compiled kernels, keyed by n.  The proxy
# is only used inside the quadrature; its deviation from the exact series
# is verified at build time against an absolute budget far below the
# integration tolerance it serves.  A single global Chebyshev would need a
# degree in the thousands here, where interpolating against the series'
# own rounding floor stalls; short panels keep every degree modest.
_PROXY_CACHE: dict[float, tuple] = {}

_PROXY_TOL = 1e-9
_PANEL_WIDTH = 0.25


class _PanelProxy:
    """Kernel values on [0, rcut] from per-panel Chebyshev interpolants."""

    def __init__(self, pieces: list, width: float, rcut: float):
        self.pieces = pieces
        self.width = width
        self.rcut = rcut

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        idx = np.minimum((r / self.width).astype(int), len(self.pieces) - 1)
        out = np.empty_like(r)
        for i in np.unique(idx):
            sel = idx == i
            out[sel] = self.pieces[i](r[sel])
        return out


def _kernel_proxy(n: float):
    key = float(n)
    if key in _PROXY_CACHE:
        return _PROXY_CACHE[key]
    table = compile_kernel(n, 1)
    probe = np.linspace(0.0, 16.0, 8001)
    exact = _eval_even_series(table.a, probe)
    peak = float(np.max(np.abs(exact)))
    above = np.nonzero(np.abs(exact) >= 0.1 * _PROXY_TOL)[0]
    rcut = max(1.0, float(probe[above[-1]]) + 0.05)

    def f(r):
        return _eval_even_series(table.a, np.asarray(r, dtype=float))

    npanels = int(math.ceil(rcut / _PANEL_WIDTH))
    width = rcut / npanels
    # highest local frequency is ~sqrt(2)*n; a safety factor then super-
    # geometric panel convergence put the fit error below the series' own
    # rounding noise
    deg = max(24, int(1.3 * math.sqrt(2.0) * n * width) + 10)
    for _ in range(3):
        pieces = [
            np.polynomial.chebyshev.Chebyshev.interpolate(
                f, deg, domain=[i * width, (i + 1) * width]
            )
            for i in range(npanels)
        ]
        proxy = _PanelProxy(pieces, width, rcut)
        grid = np.linspace(0.0, rcut, max(4001, 8 * npanels * deg))
        err = float(np.max(np.abs(proxy(grid) - _eval_even_series(table.a, grid))))
        if err <= _PROXY_TOL:
            break
        deg = int(deg * 1.5)
    else:
        raise RuntimeError("kernel proxy failed to reach interpolation accuracy")
    _PROXY_CACHE[key] = (proxy, rcut, peak)
    return _PROXY_CACHE[key]


def continuous_operator_on_curve(
    curve: Curve,
    f: Callable[[np.ndarray], np.ndarray],
    n: float,
    lam: float,
    x,
    *,
    tol: float = 1e-8,
    max_panels: int = 1 << 17,
) -> float:
    """Continuous analogue of the estimator on a curve (q = 1).

        sigma_{n,lam}(x) = lam * integral Phi~_{n,1}(lam |x - y(t)|) f(y(t)) dmu(t)

    where mu is arc length normalized to total mass 1, the distribution of
    uniformly drawn samples.  The integral is evaluated with composite
    Gauss-Legendre panels, refined by doubling until two consecutive
    refinements agree to ``tol`` (absolute, relative above magnitude 1).

    ``f`` receives points of R^Q, shape (N, Q), and returns (N,) values.
    """
    if not np.isfinite(lam) or lam < 1.0:
        raise ValueError("lam must be a finite real >= 1")
    x = np.asarray(x, dtype=float).reshape(-1)
    cheb, rcut, _ = _kernel_proxy(n)
    span = curve.t1 - curve.t0
    if span <= 0:
        raise ValueError("curve must have t1 > t0")

    glx, glw = np.polynomial.legendre.leggauss(10)

    # speed scale for the initial panel count (resolve kernel oscillation)
    tprobe = np.linspace(curve.t0, curve.t1, 257)
    smax = float(np.max(curve.speed_at(tprobe)))
    panels = 32
    target = lam * math.sqrt(2.0) * n * smax * span / (2.0 * math.pi)
    while panels < min(max_panels, 2.0 * target):
        panels *= 2

    def level(p: int) -> tuple[float, float]:
        edges = np.linspace(curve.t0, curve.t1, p + 1)
        h = (edges[1:] - edges[:-1])[:, None]
        tnodes = (edges[:-1, None] + 0.5 * h * (glx[None, :] + 1.0)).ravel()
        wnodes = (0.5 * h * glw[None, :]).ravel()
        pts = curve.chart(tnodes)
        sp = curve.speed_at(tnodes)
        r = lam * np.sqrt(np.sum((pts - x[None, :]) ** 2, axis=1))
        kern = np.where(r <= rcut, cheb(np.minimum(r, rcut)), 0.0)
        mass = float(np.dot(wnodes, sp))
        integ = float(np.dot(wnodes, kern * np.asarray(f(pts), dtype=float) * sp))
        return integ, mass

    prev_val = None
    agree = 0
    p = panels
    while p <= max_panels:
        integ, mass = level(p)
        val = lam * integ / mass
        if prev_val is not None:
            if abs(val - prev_val) <= tol * max(1.0, abs(val)):
                agree += 1
                if agree >= 2:
                    return val
            else:
                agree = 0
        prev_val = val
        p *= 2
    raise QuadratureConvergenceError(
        f"no agreement to {tol} within {max_panels} panels"
    )
