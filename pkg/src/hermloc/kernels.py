"""Localized Hermite kernels and tensor-product projections.

This module builds the radial localized kernel

    Phi~_{n,q}(r) = sum_{m=0}^{floor(n^2/2)} H(sqrt(2m)/n) P_{m,q}(r)

where ``H`` is a smooth low-pass filter (1 on [0, 1/2], 0 on [1, inf)) and
``P_{m,q}`` is the radial projection polynomial of the degree-2m slice of the
q-dimensional Hermite-function frame.  The kernel is compiled once into a
coefficient table over even Hermite functions, and evaluated by a single
recurrence pass, so that one evaluation costs O(n^2).

The same degree-slice projections appear in three interchangeable forms:

* ``proj_tensor``      -- direct multi-index enumeration (oracle grade),
* ``proj_reduced``     -- two-coordinate reduction with the D-sequence,
* ``mehler_closed_form`` -- geometric generating function of the slices.

``proj_reduced(2m, q, Q, 0, x)`` equals ``P_{m,q}(|x|)``, which ties the
compiled kernel to the projection machinery and is checked in the tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import binom as _binom
from scipy.special import gammaln, gammasgn, logsumexp

from .hermite import hermite_matrix, hermite_row, psi_at_zero, psi_zero_even

__all__ = [
    "filter_h",
    "PCoeffs",
    "p_coeffs",
    "KernelTable",
    "compile_kernel",
    "eval_kernel",
    "DSequence",
    "d_sequence",
    "proj_tensor",
    "mehler_closed_form",
    "proj_reduced",
    "proj_via_extension",
    "phi_localized",
]

MAX_TABLE_LEN = 10_000_000
MAX_COMPOSITIONS = 2_000_000


def filter_h(t):
    """Smooth low-pass filter: 1 on [0, 1/2], 0 on [1, inf), C-infinity.

    On (1/2, 1) the value is s(2 - 2t) / (s(2 - 2t) + s(2t - 1)) with
    s(u) = exp(-1/u) for u > 0, which glues the two plateaus smoothly and
    satisfies filter_h(3/4 - s) + filter_h(3/4 + s) = 1.

    Accepts a scalar or an array; negative arguments are rejected.
    """
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("filter argument must be finite")
    if np.any(arr < 0):
        raise ValueError("filter argument must be nonnegative")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.zeros_like(arr)
    out[arr <= 0.5] = 1.0
    mid = (arr > 0.5) & (arr < 1.0)
    if np.any(mid):
        tm = arr[mid]
        with np.errstate(under="ignore"):
            up = np.exp(-1.0 / (2.0 - 2.0 * tm))
            down = np.exp(-1.0 / (2.0 * tm - 1.0))
        out[mid] = up / (up + down)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class PCoeffs:
    """Coefficients of P_{m,q} over even Hermite functions.

    ``coeffs[l]`` multiplies ``psi_{2l}``, l = 0 .. m.
    """

    m: int
    q: int
    coeffs: np.ndarray


def p_coeffs(m: int, q: int) -> PCoeffs:
    """Projection polynomial P_{m,q} expanded over psi_0, psi_2, .., psi_2m.

    For q = 1 the polynomial is a single term,

        P_{m,1} = psi_{2m}(0) * psi_{2m},

    and for q >= 2

        P_{m,q} = (pi**(-(2q-1)/4) / Gamma((q-1)/2))
                  * sum_l (-1)**l [Gamma((q-1)/2 + m - l) / (m-l)!]
                          [sqrt((2l)!) / (2**l l!)] psi_{2l}.

    All factorial ratios are formed in log space; the sign of coefficient l
    is (-1)**l.
    """
    if not isinstance(m, (int, np.integer)) or m < 0:
        raise ValueError("m must be a nonnegative integer")
    if not isinstance(q, (int, np.integer)) or q < 1:
        raise ValueError("q must be a positive integer")
    if q == 1:
        coeffs = np.zeros(m + 1)
        coeffs[m] = psi_at_zero(2 * m)
        return PCoeffs(int(m), 1, coeffs)

    a = (q - 1.0) / 2.0
    ell = np.arange(m + 1)
    log_mag = (
        -(2.0 * q - 1.0) / 4.0 * math.log(math.pi)
        - gammaln(a)
        + gammaln(a + m - ell)
        - gammaln(m - ell + 1.0)
        + 0.5 * gammaln(2.0 * ell + 1.0)
        - ell * math.log(2.0)
        - gammaln(ell + 1.0)
    )
    signs = np.where(ell % 2 == 0, 1.0, -1.0)
    return PCoeffs(int(m), int(q), signs * np.exp(log_mag))


@dataclass(frozen=True)
class KernelTable:
    """Compiled radial kernel: value at r is sum_l a[l] * psi_{2l}(r)."""

    n: float
    q: int
    a: np.ndarray


def compile_kernel(n: float, q: int) -> KernelTable:
    """Fold the filter into the projection coefficients once.

    The table entry l collects a_l = sum_{m >= l} H(sqrt(2m)/n) c_{m,l}
    where c_{m,l} is the psi_{2l} coefficient of P_{m,q}; entries with
    2l >= n**2 are exactly zero because the filter vanishes there.
    """
    if not np.isfinite(n) or n < 1:
        raise ValueError("n must be a finite real >= 1")
    if not isinstance(q, (int, np.integer)) or q < 1:
        raise ValueError("q must be a positive integer")
    L = int(math.floor(n * n / 2.0))
    if L > MAX_TABLE_LEN:
        raise ValueError(f"table length {L} exceeds cap {MAX_TABLE_LEN}")

    mm = np.arange(L + 1)
    hvals = filter_h(np.sqrt(2.0 * mm) / n)
    hvals = np.atleast_1d(hvals)

    if q == 1:
        a = hvals * psi_zero_even(L + 1)
    else:
        alpha = (q - 1.0) / 2.0
        ell = np.arange(L + 1)
        log_a_mag = (
            -(2.0 * q - 1.0) / 4.0 * math.log(math.pi)
            - gammaln(alpha)
            + 0.5 * gammaln(2.0 * ell + 1.0)
            - ell * math.log(2.0)
            - gammaln(ell + 1.0)
        )
        log_b = gammaln(alpha + ell) - gammaln(ell + 1.0)
        with np.errstate(divide="ignore"):
            log_h = np.log(hvals)
        # inner_l = log sum_j exp(log_h[l + j] + log_b[j]); all terms >= 0
        inner = np.full(L + 1, -np.inf)
        chunk = max(1, min(L + 1, 30_000_000 // (L + 1)))
        for start in range(0, L + 1, chunk):
            stop = min(start + chunk, L + 1)
            lblock = np.arange(start, stop)
            jmax = L - lblock  # length of each row's valid j range
            width = int(jmax.max()) + 1
            idx = lblock[:, None] + np.arange(width)[None, :]
            mat = np.where(idx <= L, log_h[np.minimum(idx, L)], -np.inf)
            mat = mat + log_b[None, : width]
            inner[start:stop] = logsumexp(mat, axis=1)
        signs = np.where(np.arange(L + 1) % 2 == 0, 1.0, -1.0)
        with np.errstate(under="ignore"):
            a = signs * np.exp(log_a_mag + inner)

    a[2 * np.arange(L + 1) >= n * n] = 0.0
    return KernelTable(float(n), int(q), a)


def _eval_even_series(a: np.ndarray, r: np.ndarray) -> np.ndarray:
    """sum_l a[l] * psi_{2l}(r) along the recurrence, no row storage.

    The accumulation order over l is fixed and elementwise, so each entry
    of the result is bitwise reproducible regardless of batch shape.
    """
    r = np.asarray(r, dtype=float)
    shape = r.shape
    x = np.ascontiguousarray(r.ravel())
    psi_prev = (math.pi ** -0.25) * np.exp(-0.5 * x * x)  # psi_0
    acc = a[0] * psi_prev
    if a.size == 1:
        return acc.reshape(shape)
    psi_cur = _sqrt2_times(x, psi_prev)  # psi_1
    kmax = 2 * (a.size - 1)
    tmp = np.empty_like(x)
    for k in range(2, kmax + 1):
        c1 = math.sqrt(2.0 / k)
        c2 = math.sqrt((k - 1.0) / k)
        np.multiply(x, psi_cur, out=tmp)
        tmp *= c1
        psi_prev *= c2
        tmp -= psi_prev
        # rotate buffers: tmp now holds psi_k
        psi_prev, psi_cur, tmp = psi_cur, tmp, psi_prev
        if k % 2 == 0:
            coef = a[k // 2]
            if coef != 0.0:
                np.multiply(psi_cur, coef, out=tmp)
                acc += tmp
    return acc.reshape(shape)


def _sqrt2_times(x: np.ndarray, psi0: np.ndarray) -> np.ndarray:
    out = x * psi0
    out *= math.sqrt(2.0)
    return out


def eval_kernel(table: KernelTable, r):
    """Evaluate the compiled kernel at radial argument(s) r >= 0."""
    arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("radial argument must be finite")
    if np.any(arr < 0):
        raise ValueError("radial argument must be nonnegative")
    out = _eval_even_series(table.a, arr)
    return float(out) if arr.ndim == 0 else out


@dataclass(frozen=True)
class DSequence:
    """Taylor coefficients of pi**(-d/2) (1 - w**2)**(-d/2) in w.

    ``values[r]`` is D_{d;r}; odd entries vanish.  For d <= 0 the sequence
    terminates (the generating function is a polynomial for even d <= 0).
    """

    d: int
    values: np.ndarray


def d_sequence(d: int, rmax: int) -> DSequence:
    if not isinstance(d, (int, np.integer)):
        raise ValueError("d must be an integer")
    if not isinstance(rmax, (int, np.integer)) or rmax < 0:
        raise ValueError("rmax must be a nonnegative integer")
    values = np.zeros(rmax + 1)
    s = np.arange(rmax // 2 + 1)  # r = 2s
    pref = math.pi ** (-d / 2.0)
    if d >= 1:
        log_mag = gammaln(d / 2.0 + s) - gammaln(d / 2.0) - gammaln(s + 1.0)
        values[2 * s] = pref * np.exp(log_mag)
    else:
        top = 1.0 - d / 2.0
        arg = top - s
        # poles of Gamma at nonpositive integers zero the coefficient
        pole = (arg <= 0) & (np.abs(arg - np.round(arg)) < 1e-12)
        safe = np.where(pole, 1.0, arg)
        log_mag = gammaln(top) - gammaln(safe) - gammaln(s + 1.0)
        sign = np.where(s % 2 == 0, 1.0, -1.0) * gammasgn(top) * gammasgn(safe)
        vals = pref * sign * np.exp(log_mag)
        vals[pole] = 0.0
        values[2 * s] = vals
    return DSequence(int(d), values)


def _compositions(total: int, parts: int):
    """All tuples of `parts` nonnegative integers summing to `total`.

    Iterative stars-and-bars enumeration (bar positions via combinations).
    """
    if parts == 1:
        yield (total,)
        return
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def proj_tensor(m: int, d: int, x, y) -> float:
    """Degree-slice projection sum_{|k|_1 = m} psi_k(x) psi_k(y), directly.

    Oracle-grade reference: enumerates multi-indices, no reductions.  The
    composition count C(m + d - 1, d - 1) is capped to keep this test-scale.
    """
    if not isinstance(m, (int, np.integer)) or m < 0:
        raise ValueError("m must be a nonnegative integer")
    if not isinstance(d, (int, np.integer)) or not 1 <= d <= 4:
        raise ValueError("d must be an integer in 1..4")
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != d or y.size != d:
        raise ValueError("x and y must have length d")
    if math.comb(m + d - 1, d - 1) > MAX_COMPOSITIONS:
        raise ValueError("composition count exceeds the test-scale cap")

    rows_x = hermite_matrix(m, x)
    rows_y = hermite_matrix(m, y)
    pair = rows_x * rows_y  # pair[i, k] = psi_k(x_i) psi_k(y_i)
    total = 0.0
    for k in _compositions(int(m), int(d)):
        prod = 1.0
        for axis, deg in enumerate(k):
            prod *= pair[axis, deg]
        total += prod
    return float(total)


def _mehler_forms(d: int, x, y, w: float) -> tuple[float, float, float]:
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != d or y.size != d:
        raise ValueError("x and y must have length d")
    if not np.isfinite(w) or abs(w) > 0.95:
        raise ValueError("|w| must be <= 0.95")
    pref = (math.pi * (1.0 - w * w)) ** (-d / 2.0)
    xx = float(x @ x)
    yy = float(y @ y)
    xy = float(x @ y)
    f1 = pref * math.exp(
        (4.0 * w * xy - (1.0 + w * w) * (xx + yy)) / (2.0 * (1.0 - w * w))
    )
    diff = float(np.sum((x - y) ** 2))
    summ = float(np.sum((x + y) ** 2))
    f2 = pref * math.exp(
        -(1.0 + w) / (1.0 - w) * diff / 4.0 - (1.0 - w) / (1.0 + w) * summ / 4.0
    )
    shift = float(np.sum((x - (2.0 * w / (1.0 + w * w)) * y) ** 2))
    f3 = pref * math.exp(
        -(1.0 + w * w) / (2.0 * (1.0 - w * w)) * shift
        - (1.0 - w * w) / (2.0 * (1.0 + w * w)) * yy
    )
    return f1, f2, f3


def mehler_closed_form(d: int, x, y, w: float) -> float:
    """Closed form of sum_m w**m Proj_{m,d}(x, y) for |w| <= 0.95.

    Three algebraically equivalent exponential forms are evaluated; they
    agree to ~1e-12 relative and the first is returned.
    """
    f1, _, _ = _mehler_forms(d, x, y, w)
    return f1


def proj_reduced(m: int, q: int, Q: int, x, y) -> float:
    """Degree-slice projection via reduction to two coordinates.

    For points of R^Q treated as carrying q-dimensional structure,

        Proj_{m,q,Q}(x, y) = sum_j Proj_{j,2}((|x|,0), (|y| cos t, |y| sin t))
                             * D_{q-2; m-j}                      (q >= 2)
        Proj_{m,1,Q}(x, y) = psi_m(|x|) psi_m(|y| cos t)         (q = 1)

    with cos t = <x, y> / (|x| |y|).  When either norm vanishes the angle is
    immaterial (the two-coordinate slice is radial in its second argument);
    it is fixed to t = 0 so norms are preserved.  For q = 1 the two points
    must be collinear.
    """
    if not isinstance(m, (int, np.integer)) or m < 0:
        raise ValueError("m must be a nonnegative integer")
    if not isinstance(q, (int, np.integer)) or not isinstance(Q, (int, np.integer)):
        raise ValueError("q and Q must be integers")
    if not 1 <= q <= Q:
        raise ValueError("need 1 <= q <= Q")
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != Q or y.size != Q:
        raise ValueError("x and y must have length Q")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("points must be finite")

    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        cos_t, sin_t = 1.0, 0.0
    else:
        cos_t = float(np.clip((x @ y) / (nx * ny), -1.0, 1.0))
        sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))

    if q == 1:
        if nx > 0.0 and ny > 0.0 and abs(abs(cos_t) - 1.0) > 1e-10:
            raise ValueError("q = 1 requires collinear points")
        u = hermite_row(m, nx).values[m]
        v = hermite_row(m, ny * cos_t).values[m]
        return float(u * v)

    rows = hermite_matrix(m, np.array([nx, ny * cos_t, 0.0, ny * sin_t]))
    u = rows[0] * rows[1]  # psi_k(|x|) psi_k(|y| cos t)
    v = rows[2] * rows[3]  # psi_k(0)  psi_k(|y| sin t)
    conv = np.convolve(u, v)[: m + 1]  # conv[j] = Proj_{j,2}(x', y')
    dvals = d_sequence(q - 2, m).values
    return float(np.dot(conv, dvals[::-1]))


def proj_via_extension(m: int, q: int, Q: int, x, y) -> float:
    """Rebuild Proj_{m,Q}(x, y) from the reduced slices.

        Proj_{m,Q} = pi**((q-Q)/2) sum_l binom((Q-q)/2 + l - 1, l)
                     Proj_{m-2l, q, Q}

    Inverse of the reduction used by :func:`proj_reduced`; binomials with
    half-integer tops are generalized binomials.
    """
    total = 0.0
    for ell in range(m // 2 + 1):
        # ell = 0 is an empty product: binom(t, 0) = 1 even at t = -1,
        # where the Gamma form underlying scipy's binom is indeterminate
        b = 1.0 if ell == 0 else float(_binom((Q - q) / 2.0 + ell - 1.0, ell))
        if b != 0.0:
            total += b * proj_reduced(m - 2 * ell, q, Q, x, y)
    return math.pi ** ((q - Q) / 2.0) * total


def phi_localized(n: float, d: int, x, y) -> float:
    """Filtered projection kernel sum_{m < n**2} H(sqrt(m)/n) Proj_{m,d}(x, y).

    Builds on :func:`proj_tensor`, so it is test-scale only (d <= 3, n <= 12).
    The radial kernel relation Phi~_{n,q}(|x|) = Phi_{n,q,Q}(0, x) makes this
    the d-dimensional cross-check for compiled tables.
    """
    if not np.isfinite(n) or n < 1 or n > 12:
        raise ValueError("n must be a real in [1, 12] at this oracle scale")
    if not isinstance(d, (int, np.integer)) or not 1 <= d <= 3:
        raise ValueError("d must be an integer in 1..3")
    mmax = int(math.ceil(n * n)) - 1
    total = 0.0
    for m in range(mmax + 1):
        h = filter_h(math.sqrt(m) / n)
        if h == 0.0:
            continue
        total += h * proj_tensor(m, d, x, y)
    return float(total)
