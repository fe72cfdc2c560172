"""Moduli and the analytic operators on them.

Covers the oscillation modulus of a step function, membership checks against a
prescribed modulus, the parabolic convex minorant, the ray-built convex
majorant, and multiplicatively mollified smooth majorants.

The oscillation supremum is exact for step functions: at a fixed window length
the variance is a concave quadratic of the window position on every span where
the endpoint pieces stay fixed, and every length at which an interior maximum
can occur is enumerated in closed form (cut differences plus anchored
stationarity roots).  The only rounding is double arithmetic.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .funcspace import DomainError, Interval, StepFunction, _prefix_integrals
from .report import VerificationReport

__all__ = [
    "Modulus",
    "OscillationProfile",
    "ConstructionError",
    "oscillation_profile",
    "stationary_lengths",
    "sup_variance_at_lengths",
    "norm_bound_check",
    "worst_ratio",
    "parabolic_convex_minorant",
    "check_companion_convex",
    "ray_convex_majorant",
    "mollified_majorant",
]

# Above this piece count the O(n^2) stationary-length enumeration is replaced
# by adjacent cut differences only; see `stationary_lengths`.
_EXACT_ENUMERATION_MAX_PIECES = 128

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class ConstructionError(RuntimeError):
    """A geometric construction ran out of admissible points."""


# ---------------------------------------------------------------------------
# Modulus representations


@dataclass(frozen=True)
class Modulus:
    """A modulus on [0, T]: continuous, non-decreasing, zero at zero.

    Three kinds are supported: ``power`` (scale * t**alpha), ``linear``
    (slope * t) and ``sampled`` (piecewise-linear interpolation of a grid).
    Power and linear carry closed-form derivatives; sampled moduli fall back
    to central differences.
    """

    horizon: float
    kind: str
    alpha: float | None = None
    scale: float | None = None
    slope: float | None = None
    grid: tuple[float, ...] | None = None
    sample_values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.kind == "power":
            if self.alpha is None or not (0.0 < self.alpha <= 1.0):
                raise ValueError(f"power modulus needs alpha in (0, 1], got {self.alpha}")
            if self.scale is None or self.scale <= 0:
                raise ValueError(f"power modulus needs scale > 0, got {self.scale}")
        elif self.kind == "linear":
            if self.slope is None or self.slope <= 0:
                raise ValueError(f"linear modulus needs slope > 0, got {self.slope}")
        elif self.kind == "sampled":
            if self.grid is None or self.sample_values is None:
                raise ValueError("sampled modulus needs grid and values")
            g = np.asarray(self.grid, dtype=float)
            v = np.asarray(self.sample_values, dtype=float)
            if len(g) != len(v) or len(g) < 2:
                raise ValueError("sampled modulus needs matching grid/values of length >= 2")
            if g[0] != 0.0:
                raise ValueError("sampled modulus grid must start at 0")
            if np.any(np.diff(g) <= 0):
                raise ValueError("sampled modulus grid must be strictly increasing")
            if v[0] != 0.0:
                raise ValueError("modulus value at 0 must be 0")
            if np.any(v < 0):
                raise ValueError("modulus values must be non-negative")
            if np.any(np.diff(v) < 0):
                raise ValueError("modulus values must be non-decreasing")
            if abs(g[-1] - self.horizon) > 1e-12 * max(1.0, abs(self.horizon)):
                raise ValueError("sampled modulus grid must end at the horizon")
        else:
            raise ValueError(f"unknown modulus kind {self.kind!r}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def power(cls, alpha: float, scale: float = 1.0, horizon: float = 1.0) -> "Modulus":
        return cls(horizon=float(horizon), kind="power", alpha=float(alpha), scale=float(scale))

    @classmethod
    def linear(cls, slope: float, horizon: float = 1.0) -> "Modulus":
        return cls(horizon=float(horizon), kind="linear", slope=float(slope))

    @classmethod
    def sampled(cls, grid: Sequence[float], values: Sequence[float]) -> "Modulus":
        g = tuple(float(x) for x in grid)
        v = tuple(float(x) for x in values)
        return cls(horizon=g[-1], kind="sampled", grid=g, sample_values=v)

    # -- evaluation ---------------------------------------------------------

    @property
    def has_closed_form_derivative(self) -> bool:
        return self.kind in ("power", "linear")

    def eval(self, t):
        """Evaluate the modulus at t (scalar or array), t in [0, T]."""
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0) or np.any(arr > self.horizon * (1 + 1e-12)):
            raise DomainError(f"argument outside [0, {self.horizon}]")
        if self.kind == "power":
            out = self.scale * np.power(arr, self.alpha)
        elif self.kind == "linear":
            out = self.slope * arr
        else:
            out = np.interp(arr, self.grid, self.sample_values)
        return float(out) if np.isscalar(t) or arr.ndim == 0 else out

    def eval_derivative(self, t):
        """Derivative at t > 0; central difference for sampled moduli."""
        arr = np.asarray(t, dtype=float)
        if np.any(arr <= 0) or np.any(arr > self.horizon * (1 + 1e-12)):
            raise DomainError(f"derivative needs argument in (0, {self.horizon}]")
        if self.kind == "power":
            out = self.scale * self.alpha * np.power(arr, self.alpha - 1.0)
        elif self.kind == "linear":
            out = np.full_like(arr, self.slope)
        else:
            h = max(1e-6 * self.horizon, 1e-9)
            hi = np.minimum(arr + h, self.horizon)
            lo = np.maximum(arr - h, 0.0)
            out = (np.interp(hi, self.grid, self.sample_values)
                   - np.interp(lo, self.grid, self.sample_values)) / (hi - lo)
        return float(out) if np.isscalar(t) or arr.ndim == 0 else out

    def companion(self, t):
        """The companion function t**2 * xi(t)**2."""
        arr = np.asarray(t, dtype=float)
        val = self.eval(arr)
        out = arr * arr * np.asarray(val) ** 2
        return float(out) if np.isscalar(t) or arr.ndim == 0 else out

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        out: dict = {"horizon": self.horizon, "kind": self.kind}
        if self.kind == "power":
            out["alpha"] = self.alpha
            out["scale"] = self.scale
        elif self.kind == "linear":
            out["slope"] = self.slope
        else:
            out["grid"] = list(self.grid)
            out["values"] = list(self.sample_values)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, data: dict) -> "Modulus":
        kind = data.get("kind")
        if kind == "power":
            return cls.power(data["alpha"], data.get("scale", 1.0), data["horizon"])
        if kind == "linear":
            return cls.linear(data["slope"], data["horizon"])
        if kind == "sampled":
            return cls.sampled(data["grid"], data["values"])
        raise ValueError(f"unknown modulus kind {kind!r}")

    @classmethod
    def from_json(cls, text: str) -> "Modulus":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class OscillationProfile:
    """Sampled oscillation modulus of a function over a length grid."""

    lengths: tuple[float, ...]
    xi_values: tuple[float, ...]
    witnesses: tuple[Interval, ...]

    def __post_init__(self):
        if np.any(np.diff(self.xi_values) < 0):
            raise AssertionError("oscillation profile must be non-decreasing")

    def as_sampled_modulus(self) -> Modulus:
        grid = (0.0, *self.lengths)
        values = (0.0, *self.xi_values)
        return Modulus.sampled(grid, values)

    def to_csv(self) -> str:
        lines = ["length,xi,witness_left,witness_right"]
        for t, xi, wit in zip(self.lengths, self.xi_values, self.witnesses):
            lines.append(f"{t:.17g},{xi:.17g},{wit.left:.17g},{wit.right:.17g}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Exact window-variance suprema


class _SigmaEvaluator:
    """Cached prefix data for repeated window-variance suprema on one function."""

    def __init__(self, sf: StepFunction):
        self.sf = sf
        self.c, self.P, self.Q = _prefix_integrals(sf)
        self.v = np.asarray(sf.values)
        self.w = self.v * self.v
        self.total = sf.domain.length
        self._c_list = self.c.tolist()
        self._P_list = self.P.tolist()
        self._Q_list = self.Q.tolist()
        self._v_list = list(sf.values)
        self._w_list = [x * x for x in sf.values]

    def batch(self, lengths) -> tuple[np.ndarray, np.ndarray]:
        """(variance_sup, witness_left) at each exact window length."""
        L = np.atleast_1d(np.asarray(lengths, dtype=float))
        total = self.total
        if np.any(L <= 0) or np.any(L > total * (1 + 1e-12)):
            raise ValueError(f"window lengths must lie in (0, {total}]")
        L = np.minimum(L, total)
        c, P, Q, v, w = self.c, self.P, self.Q, self.v, self.w
        n = len(v)

        smax = c[-1] - L
        events = np.concatenate(
            [np.broadcast_to(c, (len(L), len(c))), c[None, :] - L[:, None]], axis=1
        )
        events = np.clip(events, c[0], smax[:, None])
        events.sort(axis=1)
        left = events[:, :-1]
        right = events[:, 1:]
        mid = 0.5 * (left + right)

        def piece_of(x: np.ndarray) -> np.ndarray:
            flat = np.searchsorted(c, x.ravel(), side="right") - 1
            return np.clip(flat, 0, n - 1).reshape(x.shape)

        i = piece_of(mid)
        j = piece_of(mid + L[:, None])
        vi, vj = v[i], v[j]
        dv = vj - vi
        dw = w[j] - w[i]
        # integral of sf over [s, s+l]:  m(s) = M0 + dv*s  on each span
        M0 = P[j] - P[i] + vj * (L[:, None] - c[j]) + vi * c[i]
        Q0 = Q[j] - Q[i] + w[j] * (L[:, None] - c[j]) + w[i] * c[i]
        ell = L[:, None]

        same_piece = i == j

        def variance_at(s: np.ndarray) -> np.ndarray:
            m = M0 + dv * s
            q = Q0 + dw * s
            out = q / ell - (m / ell) ** 2
            # a window inside one piece is constant: kill the rounding noise
            return np.where(same_piece, 0.0, out)

        with np.errstate(divide="ignore", invalid="ignore"):
            s_star = (ell * (vi + vj) / 2.0 - M0) / dv
        interior_ok = np.isfinite(s_star) & (s_star >= left) & (s_star <= right)
        s_star = np.where(interior_ok, s_star, left)

        cand_s = np.stack([left, s_star, right], axis=2)
        cand_v = np.stack(
            [variance_at(left),
             np.where(interior_ok, variance_at(s_star), -np.inf),
             variance_at(right)],
            axis=2,
        )
        flat_v = cand_v.reshape(len(L), -1)
        flat_s = cand_s.reshape(len(L), -1)
        best = np.argmax(flat_v, axis=1)
        rows = np.arange(len(L))
        sup = np.maximum(flat_v[rows, best], 0.0)
        wit_left = flat_s[rows, best]
        return sup, wit_left

    def single(self, ell: float) -> float:
        """Scalar variance supremum at one exact length (no array overhead)."""
        c, P, Q, v, w = self._c_list, self._P_list, self._Q_list, self._v_list, self._w_list
        n = len(v)
        t0 = c[0]
        ell = min(float(ell), self.total)
        smax = c[-1] - ell
        ev = {t0, smax}
        for x in c:
            if t0 < x < smax:
                ev.add(x)
            y = x - ell
            if t0 < y < smax:
                ev.add(y)
        events = sorted(ev)
        best = 0.0
        for k in range(max(len(events) - 1, 1)):
            a = events[k]
            b = events[k + 1] if k + 1 < len(events) else a
            mid = 0.5 * (a + b)
            i = min(max(bisect_right(c, mid) - 1, 0), n - 1)
            j = min(max(bisect_right(c, mid + ell) - 1, 0), n - 1)
            if i == j:
                continue
            vi, vj = v[i], v[j]
            dv = vj - vi
            dw = w[j] - w[i]
            M0 = P[j] - P[i] + vj * (ell - c[j]) + vi * c[i]
            Q0 = Q[j] - Q[i] + w[j] * (ell - c[j]) + w[i] * c[i]

            def var_at(s: float) -> float:
                m = M0 + dv * s
                q = Q0 + dw * s
                return q / ell - (m / ell) ** 2

            best = max(best, var_at(a), var_at(b))
            if dv != 0.0:
                s_star = (ell * (vi + vj) / 2.0 - M0) / dv
                if a <= s_star <= b:
                    best = max(best, var_at(s_star))
        return best

    def sigma_single(self, ell: float) -> float:
        return math.sqrt(self.single(ell))


def sup_variance_at_lengths(sf: StepFunction, lengths) -> tuple[np.ndarray, np.ndarray]:
    """Exact sup of window variance at each exact window length.

    Returns (variance_sup, witness_left).  At fixed length the variance is a
    concave quadratic of the left endpoint wherever both endpoint pieces are
    fixed, so each span maximum is closed form.
    """
    return _SigmaEvaluator(sf).batch(lengths)


def stationary_lengths(sf: StepFunction, exact: bool | None = None) -> np.ndarray:
    """Window lengths at which the variance supremum can peak strictly inside.

    An interior local maximum of the window variance pins each endpoint either
    to a cut or to a point where the endpoint value matches the window
    mean-plus-deviation condition; the latter yields one closed-form length per
    (cut, piece) pair.  Together with pairwise cut differences these lengths
    make the running supremum over lengths exact.

    With ``exact=False`` (automatic above 128 pieces) only adjacent cut
    differences are produced, which keeps huge staircases cheap.
    """
    c, P, Q = _prefix_integrals(sf)
    v = np.asarray(sf.values)
    w = v * v
    n = len(v)
    total = sf.domain.length
    if exact is None:
        exact = n <= _EXACT_ENUMERATION_MAX_PIECES

    if not exact:
        out = np.diff(c)
        return np.unique(out[out > 0])

    diffs = (c[None, :] - c[:, None]).ravel()
    lengths = [diffs[diffs > 0]]

    extra: list[float] = []
    for k in range(n + 1):
        x = c[k]
        for p in range(n):
            # window [x, x+l], right endpoint inside piece p; the window must
            # straddle at least one cut, otherwise its variance is identically 0
            if c[p] > x:
                lo = c[p] - x
                hi = c[p + 1] - x
                alpha = P[p] - P[k] + v[p] * (x - c[p])
                den = (Q[p] - Q[k] + w[p] * (x - c[p])) - 2.0 * alpha * v[p]
                if den != 0.0:
                    ell = 2.0 * alpha * alpha / den
                    if lo < ell <= hi:
                        extra.append(float(ell))
            # window [x-l, x], left endpoint inside piece p
            if c[p + 1] < x:
                lo = x - c[p + 1]
                hi = x - c[p]
                alpha = P[k] - P[p] - v[p] * (x - c[p])
                den = (Q[k] - Q[p] - w[p] * (x - c[p])) - 2.0 * alpha * v[p]
                if den != 0.0:
                    ell = 2.0 * alpha * alpha / den
                    if lo < ell <= hi:
                        extra.append(float(ell))
    if extra:
        lengths.append(np.asarray(extra))
    out = np.unique(np.concatenate(lengths))
    return out[(out > 0) & (out <= total)]


def _running_supremum(cand: np.ndarray, sup: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Running max over sorted lengths plus the index where it was achieved."""
    running = np.maximum.accumulate(sup)
    is_new = np.empty(len(sup), dtype=bool)
    is_new[0] = True
    is_new[1:] = sup[1:] > running[:-1]
    idx = np.where(is_new, np.arange(len(sup)), 0)
    achieved = np.maximum.accumulate(idx)
    return running, achieved


def oscillation_profile(
    sf: StepFunction,
    lengths,
    extra_lengths=None,
    exact: bool | None = None,
) -> OscillationProfile:
    """Oscillation modulus of ``sf`` sampled on the given length grid.

    The sup over windows of length at most t is taken over an exact candidate
    set: the requested grid, all stationary lengths of ``sf``, and any
    ``extra_lengths`` (e.g. the stationary lengths of a second function when
    two profiles must share one configuration).
    """
    grid = np.asarray(lengths, dtype=float)
    total = sf.domain.length
    if grid.size == 0:
        raise ValueError("empty length grid")
    if np.any(grid <= 0) or np.any(grid > total * (1 + 1e-12)):
        raise ValueError(f"length grid must lie in (0, {total}]")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("length grid must be strictly increasing")
    pieces = [grid, stationary_lengths(sf, exact=exact)]
    if extra_lengths is not None:
        ex = np.asarray(extra_lengths, dtype=float)
        pieces.append(ex[(ex > 0) & (ex <= total)])
    cand = np.unique(np.concatenate(pieces))
    cand = np.minimum(cand, total)

    sup, wit_left = sup_variance_at_lengths(sf, cand)
    running, achieved = _running_supremum(cand, sup)

    pos = np.searchsorted(cand, grid * (1 + 1e-15), side="right") - 1
    xi = np.sqrt(running[pos])
    witnesses = []
    for p in pos:
        k = achieved[p]
        witnesses.append(Interval(float(wit_left[k]), float(wit_left[k] + cand[k])))
    return OscillationProfile(
        lengths=tuple(float(t) for t in grid),
        xi_values=tuple(float(x) for x in xi),
        witnesses=tuple(witnesses),
    )


# ---------------------------------------------------------------------------
# Membership against a prescribed modulus


def _golden_extremum(f: Callable[[float], float], a: float, b: float, iters: int = 45) -> tuple[float, float]:
    """Golden-section minimizer of f on [a, b]; returns (argmin, min)."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _default_check_lengths(sf: StepFunction) -> np.ndarray:
    total = sf.domain.length
    geo = np.geomspace(total * 1e-4, total, 129)
    lin = np.linspace(total / 128.0, total, 128)
    return np.unique(np.concatenate([geo, lin, stationary_lengths(sf)]))


def _refine_local_minima(
    values: np.ndarray,
    cand: np.ndarray,
    objective: Callable[[float], float],
    max_brackets: int = 16,
    iters: int = 48,
) -> tuple[float, float]:
    """Golden-refine every interior local minimum of the sampled objective.

    Returns the (argmin, min) over all refined brackets; the caller still owns
    the grid minimum itself.
    """
    interior = np.where((values[1:-1] <= values[:-2]) & (values[1:-1] <= values[2:]))[0] + 1
    order = interior[np.argsort(values[interior])][:max_brackets]
    best_x, best_f = float("nan"), np.inf
    for k in order:
        x, fx = _golden_extremum(objective, float(cand[k - 1]), float(cand[k + 1]), iters)
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def norm_bound_check(
    sf: StepFunction,
    xi: Modulus,
    bound: float,
    lengths=None,
    tolerance: float = 0.0,
    refine: bool = True,
) -> VerificationReport:
    """Check variance over every window J against bound**2 * xi(|J|)**2.

    The margin at a length is bound*xi - sup-deviation; the check runs over an
    exact candidate length set and golden-section refines the local margin
    minima before reporting.
    """
    total = sf.domain.length
    if xi.horizon < total * (1 - 1e-12):
        raise ValueError(f"modulus horizon {xi.horizon} smaller than domain length {total}")
    if bound < 0:
        raise ValueError("bound must be non-negative")
    cand = np.asarray(lengths, dtype=float) if lengths is not None else _default_check_lengths(sf)
    cand = np.unique(cand[(cand > 0) & (cand <= total * (1 + 1e-12))])
    cand = np.minimum(cand, total)
    if cand.size == 0:
        raise ValueError("no admissible lengths to check")

    ev = _SigmaEvaluator(sf)
    sup, wit_left = ev.batch(cand)
    sigma = np.sqrt(sup)
    margins = bound * np.asarray(xi.eval(cand)) - sigma

    worst_idx = int(np.argmin(margins))
    worst = float(margins[worst_idx])
    worst_len = float(cand[worst_idx])
    worst_window = (float(wit_left[worst_idx]), float(wit_left[worst_idx] + cand[worst_idx]))

    if refine and len(cand) >= 3:

        def margin_at(ell: float) -> float:
            return bound * xi.eval(ell) - ev.sigma_single(ell)

        x, fx = _refine_local_minima(margins, cand, margin_at)
        if fx < worst:
            worst = float(fx)
            worst_len = float(x)
            _, wl = ev.batch([x])
            worst_window = (float(wl[0]), float(wl[0] + x))

    failures = int(np.count_nonzero(margins < -tolerance))
    if failures == 0 and worst < -tolerance:
        failures = 1
    return VerificationReport(
        name="norm_bound",
        trials=int(len(cand)),
        failures=failures,
        worst_margin=worst,
        tolerance=float(tolerance),
        witness={
            "length": worst_len,
            "window_left": worst_window[0],
            "window_right": worst_window[1],
        },
    )


def worst_ratio(sf: StepFunction, xi: Modulus, lengths=None, refine: bool = True) -> float:
    """Supremum of sup-deviation(l) / xi(l) over the candidate lengths.

    This is the smallest admissible class constant for ``sf`` relative to
    ``xi`` on the checked scales; dividing the deviation of ``sf`` from its
    mean by it normalizes the class constant to one.
    """
    total = sf.domain.length
    cand = np.asarray(lengths, dtype=float) if lengths is not None else _default_check_lengths(sf)
    cand = np.unique(cand[(cand > 0) & (cand <= total * (1 + 1e-12))])
    cand = np.minimum(cand, total)
    ev = _SigmaEvaluator(sf)
    sup, _ = ev.batch(cand)
    sigma = np.sqrt(sup)
    xs = np.asarray(xi.eval(cand))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(xs > 0, sigma / xs, 0.0)
    best = float(np.max(ratios))

    if refine and len(cand) >= 3:

        def neg_ratio(ell: float) -> float:
            x = xi.eval(ell)
            if x <= 0:
                return 0.0
            return -ev.sigma_single(ell) / x

        _, fx = _refine_local_minima(-ratios, cand, neg_ratio)
        best = max(best, -fx)
    return best


# ---------------------------------------------------------------------------
# Parabolic convex minorant


def _lower_hull(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower convex hull of points sorted by x (monotone chain)."""
    hx: list[float] = []
    hy: list[float] = []
    for x, y in zip(xs, ys):
        while len(hx) >= 2:
            cross = (hx[-1] - hx[-2]) * (y - hy[-2]) - (hy[-1] - hy[-2]) * (x - hx[-2])
            if cross <= 0:
                hx.pop()
                hy.pop()
            else:
                break
        hx.append(float(x))
        hy.append(float(y))
    return np.asarray(hx), np.asarray(hy)


def parabolic_convex_minorant(grid, values) -> tuple[np.ndarray, np.ndarray]:
    """Largest g <= f on the sample grid such that s**2 g(s)**2 is convex.

    Works through the substitution F(s) = s**2 f(s)**2: the answer is the
    lower convex envelope of the F samples, mapped back by sqrt(.)/s.
    Returns (grid, g) as arrays; g(0) = 0.
    """
    s = np.asarray(grid, dtype=float)
    f = np.asarray(values, dtype=float)
    if len(s) != len(f) or len(s) < 2:
        raise ValueError("need matching grid/values with at least two samples")
    if s[0] != 0.0:
        raise ValueError("sample grid must contain 0 as its first point")
    if np.any(np.diff(s) <= 0):
        raise ValueError("sample grid must be strictly increasing")
    if np.any(f < 0):
        raise ValueError("samples must be non-negative")
    F = s * s * f * f
    hx, hy = _lower_hull(s, F)
    envelope = np.interp(s, hx, hy)
    g = np.zeros_like(s)
    pos = s > 0
    g[pos] = np.sqrt(np.maximum(envelope[pos], 0.0)) / s[pos]
    return s, g


# ---------------------------------------------------------------------------
# Convexity check for the companion function


def check_companion_convex(xi: Modulus, grid) -> bool:
    """True iff the generalized second differences of the companion function
    t**2 xi(t)**2 on the grid stay above -1e-12 times its maximum (reduces to
    plain second differences on uniform grids).
    """
    t = np.asarray(grid, dtype=float)
    if len(t) < 3:
        raise ValueError("need at least 3 grid points")
    if np.any(np.diff(t) <= 0):
        raise ValueError("grid must be strictly increasing")
    A = np.asarray(xi.companion(t))
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    chord = A[:-2] + (A[2:] - A[:-2]) * h1 / (h1 + h2)
    second = 2.0 * (chord - A[1:-1])
    tol = 1e-12 * float(np.max(np.abs(A))) if A.size else 0.0
    return bool(np.all(second >= -tol))


# ---------------------------------------------------------------------------
# Ray-built majorant with t * xi(t) convex


def ray_convex_majorant(xi: Modulus, t0: float, delta: float,
                        grid_points: int = 1025, max_rays: int = 200) -> Modulus:
    """Continuous increasing majorant of xi matching it at t0 up to delta,
    with t * majorant(t) convex.

    Works on G(t) = t*xi(t): lifts G at t0 by delta*t0, extends affinely to
    the right with a slope clearing G, then walks rays of slope xi(t0)/2**n
    from the origin leftwards, picking on each ray the admissible point of
    smallest abscissa; the final segment closes to the origin along the last
    ray.  Output is a sampled modulus on a uniform grid.
    """
    T = xi.horizon
    if not (0.0 < t0 <= T):
        raise ValueError(f"t0 must lie in (0, {T}]")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if grid_points < 3:
        raise ValueError("need at least 3 grid points")
    step = T / (grid_points - 1)
    grid = np.linspace(0.0, T, grid_points)
    # the lifted node is a kink of the construction: sample it exactly
    grid = np.unique(np.concatenate([grid, [t0]]))
    G = grid * np.asarray(xi.eval(grid))

    xi_t0 = float(xi.eval(t0))
    lift = (t0, t0 * (xi_t0 + delta))
    chord0 = xi_t0 + delta  # slope of the segment origin -> lifted point

    right = grid[grid > t0 + 1e-15]
    if right.size:
        G_right = right * np.asarray(xi.eval(right))
        slopes = (G_right - lift[1]) / (right - t0)
        # floor at the origin-chord slope so a first ray segment can still
        # undercut it (slopes must strictly decrease leftwards)
        k_prev = max(float(np.max(slopes)), chord0) + 1e-9
    else:
        k_prev = math.inf

    nodes = [lift]
    k_right = k_prev if math.isfinite(k_prev) else None
    closing_slope = None
    for n in range(1, max_rays + 1):
        prev_t, prev_g = nodes[-1]
        cand = grid[(grid > 0) & (grid < prev_t / 2.0)]
        if cand.size == 0:
            closing_slope = prev_g / prev_t
            break
        ray = xi_t0 / (2.0 ** n)
        node_g = ray * cand
        with np.errstate(divide="ignore", invalid="ignore"):
            k = (prev_g - node_g) / (prev_t - cand)
        ok = (node_g >= np.interp(cand, grid, G)) & (k < k_prev)
        if np.any(ok):
            # segment must clear G at every grid point it spans
            span = (grid[None, :] >= cand[:, None]) & (grid[None, :] <= prev_t)
            seg = node_g[:, None] + k[:, None] * (grid[None, :] - cand[:, None])
            above = np.all(np.where(span, seg - G[None, :], 0.0) >= 0.0, axis=1)
            ok &= above
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            continue
        first = idx[0]
        t_n = float(cand[first])
        nodes.append((t_n, float(node_g[first])))
        k_prev = float(k[first])
        if t_n < step * (1 + 1e-12):
            closing_slope = ray
            break
    else:
        raise ConstructionError(
            f"no admissible ray point found within {max_rays} rays; "
            "refine the grid or reduce delta"
        )
    if closing_slope is None:
        # loop broke via empty candidate set handled above; keep for safety
        closing_slope = nodes[-1][1] / nodes[-1][0]

    # assemble piecewise-linear G-tilde: origin -> nodes (ascending t) -> right ray
    xs = [0.0] + [t for t, _ in reversed(nodes)]
    ys = [0.0] + [g for _, g in reversed(nodes)]
    g_tilde = np.interp(grid, xs, ys)
    if k_right is not None:
        right_mask = grid > t0
        g_tilde[right_mask] = lift[1] + k_right * (grid[right_mask] - t0)
    values = np.zeros_like(grid)
    pos = grid > 0
    values[pos] = g_tilde[pos] / grid[pos]
    values[0] = 0.0
    # rounding guard: the analytic construction is non-decreasing
    values = np.maximum.accumulate(values)
    return Modulus.sampled(tuple(grid), tuple(values))


# ---------------------------------------------------------------------------
# Mollified smooth majorants


@lru_cache(maxsize=1)
def _bump_mass() -> float:
    val, _ = quad(lambda x: math.exp(-1.0 / (1.0 - x * x)) if abs(x) < 1 else 0.0,
                  -1.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def _bump(x: float) -> float:
    if abs(x) >= 1.0:
        return 0.0
    return math.exp(-1.0 / (1.0 - x * x))


def mollified_majorant(xi: Modulus, n: int, t: float) -> float:
    """Smooth majorant value xi_n(t) via multiplicative convolution.

    xi_n(t)**2 = t/n + integral of xi(t*u)**2 * u**2 * Psi_n(u) du, where
    Psi_n is the symmetric normalized bump supported on [1-1/(2n), 1+1/(2n)];
    symmetry about u=1 makes both moment conditions exact.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    T = xi.horizon
    probe = np.linspace(0.0, T, 257)
    if not check_companion_convex(xi, probe):
        raise ValueError("modulus fails the companion-convexity precondition")
    half = 1.0 / (2.0 * n)
    t_max = T * (1.0 - half)
    if not (0.0 < t <= t_max * (1 + 1e-12)):
        raise DomainError(f"t must lie in (0, {t_max}] for n={n}")
    norm = 2.0 * n / _bump_mass()

    def integrand(u: float) -> float:
        psi = norm * _bump((u - 1.0) / half)
        if psi == 0.0:
            return 0.0
        x = xi.eval(min(t * u, T))
        return x * x * u * u * psi

    val, _ = quad(integrand, 1.0 - half, 1.0 + half,
                  epsabs=1e-14, epsrel=1e-11, limit=200)
    return math.sqrt(t / n + val)
