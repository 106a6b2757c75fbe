"""Parallel transport of the pulled-back connection.

Two independent evaluation routes live here:

- `ode_transport`: adaptive Runge-Kutta integration of  Y' = hbar * sum_m
  A_m/(t - zeta^m) * Y  along piecewise line/arc paths in the t-plane;
- `hyperlog` / `chen_series` / `phi_regularized`: iterated-integral
  evaluation on a fixed quadrature grid of the segment [0, upper].

The iterated integrals follow the classical convention: for a word
(i_1, ..., i_r) the first letter is the innermost integration kernel
1/(s - zeta^{i_1}) and the last letter the outermost one, so a word is
admissible at upper limit 1 precisely when its last letter differs from 5
(zeta^5 = 1).  The Chen series matching the left ODE above multiplies the
residue matrices in reverse word order.

Quadrature grid: ordinary Gauss-Legendre panels away from 1, and panels in
the variable tau = -log(1 - s) near 1, where kernels with the pole at 1
become constant and the iterated logarithms become polynomials.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp

from . import operators as ops
from .connection import ZETA, residues, scalar_tail_factor, hbar

POLES = np.array([ZETA**m for m in range(1, 6)])


class PathError(ValueError):
    """Path fails continuity or pole-clearance validation."""


class DivergenceError(ValueError):
    """Iterated integral with last letter 1 requested at upper limit 1."""


@dataclass(frozen=True)
class Line:
    start: complex
    end: complex
    pole_adjacent: bool = False

    def point(self, s):
        return self.start + (self.end - self.start) * s

    def velocity(self, s):
        return self.end - self.start

    def reversed(self):
        return Line(self.end, self.start, self.pole_adjacent)

    def min_pole_distance(self, pole):
        # distance from a point to a segment
        d = self.end - self.start
        L2 = abs(d) ** 2
        if L2 == 0:
            return abs(self.start - pole)
        s = max(0.0, min(1.0, ((pole - self.start) * d.conjugate()).real / L2))
        return abs(self.start + s * d - pole)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    from_angle: float
    to_angle: float  # traversal from from_angle to to_angle; increasing = ccw
    pole_adjacent: bool = False

    def point(self, s):
        th = self.from_angle + (self.to_angle - self.from_angle) * s
        return self.center + self.radius * cmath.exp(1j * th)

    def velocity(self, s):
        th = self.from_angle + (self.to_angle - self.from_angle) * s
        return 1j * self.radius * cmath.exp(1j * th) * (self.to_angle - self.from_angle)

    def reversed(self):
        return Arc(self.center, self.radius, self.to_angle, self.from_angle,
                   self.pole_adjacent)

    def min_pole_distance(self, pole):
        w = pole - self.center
        r, phi = abs(w), cmath.phase(w)
        lo, hi = sorted((self.from_angle, self.to_angle))
        # smallest representative of phi + 2 pi Z inside [lo, hi], if any
        n0 = math.ceil((lo - phi) / (2 * math.pi))
        if phi + 2 * math.pi * n0 <= hi:
            return abs(r - self.radius)
        return min(abs(self.point(0.0) - pole), abs(self.point(1.0) - pole))


@dataclass(frozen=True)
class PathSpec:
    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        for a, b in zip(segs, segs[1:]):
            if abs(a.point(1.0) - b.point(0.0)) > 1e-12:
                raise PathError("consecutive segments do not share endpoints")

    @property
    def start(self):
        return self.segments[0].point(0.0)

    @property
    def end(self):
        return self.segments[-1].point(1.0)

    def reversed(self):
        return PathSpec(tuple(s.reversed() for s in reversed(self.segments)))

    def validate_clearance(self, clearance):
        for seg in self.segments:
            if seg.pole_adjacent:
                continue
            for pole in POLES:
                if seg.min_pole_distance(pole) < clearance:
                    raise PathError(
                        f"segment {seg} comes within {clearance} of pole {pole:.4f}"
                    )

    def to_json(self):
        out = []
        for seg in self.segments:
            if isinstance(seg, Line):
                d = {"type": "line",
                     "from": [seg.start.real, seg.start.imag],
                     "to": [seg.end.real, seg.end.imag]}
            else:
                d = {"type": "arc",
                     "center": [seg.center.real, seg.center.imag],
                     "radius": seg.radius,
                     "from_angle": seg.from_angle,
                     "to_angle": seg.to_angle}
            if seg.pole_adjacent:
                d["pole_adjacent"] = True
            out.append(d)
        return {"segments": out}

    @staticmethod
    def from_json(payload):
        segs = []
        for d in payload["segments"]:
            adj = bool(d.get("pole_adjacent", False))
            if d["type"] == "line":
                segs.append(Line(complex(*d["from"]), complex(*d["to"]), adj))
            elif d["type"] == "arc":
                segs.append(Arc(complex(*d["center"]), float(d["radius"]),
                                float(d["from_angle"]), float(d["to_angle"]), adj))
            else:
                raise PathError(f"unknown segment type {d['type']!r}")
        return PathSpec(tuple(segs))


def line_path(a, b, pole_adjacent=False):
    return PathSpec((Line(complex(a), complex(b), pole_adjacent),))


@dataclass(frozen=True)
class Word:
    """Letter sequence over the fifth roots of unity, stored as exponents.

    letters[m] = j means the m-th (innermost-first) kernel is 1/(s - zeta^j).
    """

    letters: tuple

    def __post_init__(self):
        if len(self.letters) < 1:
            raise ValueError("words have length >= 1")
        if any(not 1 <= int(l) <= 5 for l in self.letters):
            raise ValueError("letters are exponents in 1..5")
        object.__setattr__(self, "letters", tuple(int(l) for l in self.letters))

    def __len__(self):
        return len(self.letters)

    @property
    def admissible_at_one(self):
        return self.letters[-1] != 5


@dataclass(frozen=True)
class TransportSettings:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_word_len: int = 8
    quad_nodes: int = 32
    series_cutoff: float = 1e-12
    pole_clearance: float = 1e-3
    tau_max: float = 60.0

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0 or self.max_word_len < 0:
            raise ValueError("tolerances must be positive")


DEFAULT_SETTINGS = TransportSettings()


# ---------------------------------------------------------------------------
# ODE transport
# ---------------------------------------------------------------------------

def _residue_stack(k, residue_set=None, perm=None):
    rs = residue_set if residue_set is not None else residues(k)
    return np.array(rs.as_complex(perm=perm))


def ode_transport(k, path, settings=None, perm=None, residue_set=None,
                  include_scalar_tail=False, y0=None):
    """Transport matrix of  Y' = hbar sum_m A_{sigma(m)}/(t - zeta^m) Y
    along `path`, solved with DOP853 at the configured tolerances.

    `perm`, when given, relabels the residue attached to each pole (used
    for transporting along the image of a path under a deck transformation
    of the covering of the modular curve).  `include_scalar_tail` adds the
    scalar 1-form completing the exact pullback; it changes the result by
    an overall factor only.
    """
    st = settings or DEFAULT_SETTINGS
    path.validate_clearance(st.pole_clearance)
    A = _residue_stack(k, residue_set, perm)
    n = A.shape[1]
    hb = float(hbar(k))
    Y = np.eye(n, dtype=complex) if y0 is None else np.array(y0, dtype=complex)
    if all(abs(seg.velocity(0.5)) == 0 for seg in path.segments):
        return Y

    for seg in path.segments:
        def rhs(s, yflat):
            t = seg.point(s)
            dt = seg.velocity(s)
            om = np.zeros((n, n), dtype=complex)
            for m in range(5):
                om += A[m] / (t - POLES[m])
            om *= hb * dt
            if include_scalar_tail:
                om += scalar_tail_factor(t, k) * dt * np.eye(n)
            return (om @ yflat.reshape(n, n)).ravel()

        sol = solve_ivp(rhs, (0.0, 1.0), Y.ravel(), method="DOP853",
                        rtol=st.rtol, atol=st.atol, dense_output=False)
        if not sol.success:
            raise RuntimeError(f"integrator failed on segment {seg}: {sol.message}")
        Y = sol.y[:, -1].reshape(n, n)
    return Y


def transport_points(k, curve, velocity, settings=None, mats=None):
    """Transport in configuration space along s -> curve(s) in C^6.

    `curve(s)` returns the six points, `velocity(s)` their velocities.
    Used for curvature/flatness diagnostics and for path lifts that do not
    factor through the t-line.
    """
    from .connection import omega_eval

    st = settings or DEFAULT_SETTINGS
    if mats is None:
        mats = ops.all_omega_hat_matrices(k)
    n = ops.dim(k)

    def rhs(s, yflat):
        om = omega_eval(k, curve(s), velocity(s), mats=mats)
        return (om @ yflat.reshape(n, n)).ravel()

    sol = solve_ivp(rhs, (0.0, 1.0), np.eye(n, dtype=complex).ravel(),
                    method="DOP853", rtol=st.rtol, atol=st.atol)
    if not sol.success:
        raise RuntimeError(f"configuration transport failed: {sol.message}")
    return sol.y[:, -1].reshape(n, n)


# ---------------------------------------------------------------------------
# Quadrature grid for iterated integrals on [0, upper]
# ---------------------------------------------------------------------------

class _Grid:
    """Panelized grid on [0, upper] with per-panel spectral integration.

    Each panel knows the s-values of its Gauss-Legendre nodes and the
    Jacobian ds/dxi; near s = 1 panels live in tau = -log(1-s).  The
    `cumulative` method maps integrand values (g(s_q) in the *s* variable)
    to antiderivative values  int_0^{s_q} g  at every node; `total` gives
    int_0^{upper} g.
    """

    def __init__(self, upper, nodes_per_panel, tau_max):
        K = nodes_per_panel
        xi, w = leggauss(K)
        # antiderivative values of the interpolant on [-1, 1]
        P = np.zeros((K + 1, K))
        P[0] = 1.0
        P[1] = xi
        for l in range(1, K):
            P[l + 1] = ((2 * l + 1) * xi * P[l] - l * P[l - 1]) / (l + 1)
        coeff_from_vals = ((2 * np.arange(K) + 1) / 2)[:, None] * P[:K] * w
        anti = np.zeros((K, K))           # anti[q, l] = int_{-1}^{xi_q} P_l
        anti[:, 0] = xi + 1.0
        for l in range(1, K):
            anti[:, l] = (P[l + 1] - P[l - 1]) / (2 * l + 1)
        self.cum_std = anti @ coeff_from_vals   # values -> antiderivative values
        self.w_std = w
        self.K = K

        panels = []  # (s_nodes, jacobian_nodes)
        if upper >= 1.0 - 1e-14:
            s_breaks = [0.0, 0.5, 0.75, 0.875]
            for a, b in zip(s_breaks, s_breaks[1:]):
                mid, half = (a + b) / 2, (b - a) / 2
                panels.append((mid + half * xi, np.full(K, half)))
            tau0 = -math.log(1 - s_breaks[-1])
            tau_breaks = np.linspace(tau0, tau_max, 15)
            for a, b in zip(tau_breaks, tau_breaks[1:]):
                mid, half = (a + b) / 2, (b - a) / 2
                tau = mid + half * xi
                panels.append((1.0 - np.exp(-tau), half * np.exp(-tau)))
        else:
            rel = [0.0, 0.5, 0.75, 0.875, 1.0]
            for a, b in zip(rel, rel[1:]):
                a, b = a * upper, b * upper
                mid, half = (a + b) / 2, (b - a) / 2
                panels.append((mid + half * xi, np.full(K, half)))
        self.s = np.concatenate([p[0] for p in panels])
        self.jac = np.concatenate([p[1] for p in panels])
        self.n_panels = len(panels)
        self.upper = upper

    def cumulative(self, values):
        """Antiderivative from 0, sampled at all nodes; values shape (..., N)."""
        v = (values * self.jac).reshape(values.shape[:-1] + (self.n_panels, self.K))
        within = np.einsum("qk,...pk->...pq", self.cum_std, v)
        totals = np.einsum("k,...pk->...p", self.w_std, v)
        offsets = np.cumsum(totals, axis=-1) - totals
        out = within + offsets[..., None]
        return out.reshape(values.shape)

    def total(self, values):
        """int_0^upper of the integrand; values shape (..., N)."""
        v = (values * self.jac).reshape(values.shape[:-1] + (self.n_panels, self.K))
        return np.einsum("k,...pk->...p", self.w_std, v).sum(axis=-1)


_GRID_CACHE = {}


def _grid(upper, settings):
    key = (round(float(upper), 15), settings.quad_nodes, settings.tau_max)
    if key not in _GRID_CACHE:
        _GRID_CACHE[key] = _Grid(float(upper), settings.quad_nodes, settings.tau_max)
    return _GRID_CACHE[key]


class HyperlogEvaluator:
    """Evaluates iterated integrals on a fixed grid with shared prefixes.

    Prefix functions are tabulated at all grid nodes once and reused by
    every word extending the prefix.
    """

    def __init__(self, upper, settings=None):
        self.settings = settings or DEFAULT_SETTINGS
        self.upper = float(upper)
        self.grid = _grid(self.upper, self.settings)
        self._kernels = [1.0 / (self.grid.s - ZETA**j) for j in range(1, 6)]
        self._prefix = {(): np.ones_like(self.grid.s, dtype=complex)}

    def prefix_values(self, letters):
        letters = tuple(letters)
        cached = self._prefix.get(letters)
        if cached is not None:
            return cached
        inner = self.prefix_values(letters[:-1])
        vals = self.grid.cumulative(inner * self._kernels[letters[-1] - 1])
        self._prefix[letters] = vals
        return vals

    def value(self, word):
        word = word if isinstance(word, Word) else Word(tuple(word))
        if self.upper >= 1.0 - 1e-14 and not word.admissible_at_one:
            raise DivergenceError(
                "word ending in the letter at 1 diverges at upper limit 1"
            )
        inner = self.prefix_values(word.letters[:-1])
        return complex(self.grid.total(inner * self._kernels[word.letters[-1] - 1]))


_EVALUATOR_CACHE = {}


def hyperlog(word, upper, settings=None):
    """Iterated integral of the word along the segment [0, upper].

    The straight segment must avoid the fifth roots of unity except at the
    endpoint upper = 1, which is allowed only for words whose last letter
    is not 5 (the root at 1).
    """
    st = settings or DEFAULT_SETTINGS
    u = complex(upper)
    if abs(u.imag) > 0 or not 0 < u.real <= 1:
        raise ValueError("this evaluator handles real upper limits in (0, 1]")
    key = (round(u.real, 15), st.quad_nodes, st.tau_max)
    ev = _EVALUATOR_CACHE.get(key)
    if ev is None:
        ev = HyperlogEvaluator(u.real, st)
        _EVALUATOR_CACHE[key] = ev
    return ev.value(word)


def shuffles(u, v):
    """All shuffle interleavings of two tuples (with multiplicity)."""
    if not u:
        yield v
        return
    if not v:
        yield u
        return
    for w in shuffles(u[1:], v):
        yield (u[0],) + w
    for w in shuffles(u, v[1:]):
        yield (v[0],) + w


# ---------------------------------------------------------------------------
# Chen series and the regularized series at upper limit 1
# ---------------------------------------------------------------------------

def _series_terms(k, grid, max_len, perm=None, side="left", residue_set=None,
                  skip_last_at_one=False):
    """Order-r terms  hbar^r sum_{|w|=r} L_0(w|.) A_w  of the word expansion.

    side="left" multiplies a new outermost letter from the left (the sum
    then solves Y' = hbar sum A_i/(t-zeta^i) Y, matching ode_transport);
    side="right" keeps the classical word-order product A_{i_1}...A_{i_r}.
    Yields (values_at_nodes, value_at_upper) per order, the node values
    with shape (n, n, N).  With skip_last_at_one the endpoint value only
    sums words whose outermost letter differs from 5, which is the
    combination that stays finite at upper limit 1.
    """
    A = _residue_stack(k, residue_set, perm)
    n = A.shape[1]
    hb = float(hbar(k))
    kernels = np.array([1.0 / (grid.s - ZETA**m) for m in range(1, 6)])
    N = grid.s.size
    term = np.broadcast_to(np.eye(n, dtype=complex)[:, :, None], (n, n, N)).copy()
    for _ in range(max_len):
        new = np.zeros((n, n, N), dtype=complex)
        end = np.zeros((n, n), dtype=complex)
        for m in range(5):
            integrand = term * kernels[m]
            integ = grid.cumulative(integrand)
            if side == "left":
                new += np.einsum("ab,bcN->acN", A[m], integ)
            else:
                new += np.einsum("abN,bc->acN", integ, A[m])
            if not (skip_last_at_one and m == 4):
                endint = grid.total(integrand)
                end += A[m] @ endint if side == "left" else endint @ A[m]
        term = hb * new
        yield term, hb * end


def chen_series(k, x, max_len=None, settings=None, perm=None, return_tail=False):
    """Word-expansion of the transport along [0, x], truncated at max_len.

    Matches ode_transport along the same segment; the reported tail bound
    is the norm of the last included order scaled by a geometric factor
    estimated from the ratio of the last two orders.
    """
    st = settings or DEFAULT_SETTINGS
    if not 0 < x < 1:
        raise ValueError("need 0 < x < 1")
    R = st.max_word_len if max_len is None else max_len
    n = ops.dim(k)
    out = np.eye(n, dtype=complex)
    grid = _grid(x, st)
    norms = []
    if R > 0:
        for _, endval in _series_terms(k, grid, R, perm=perm, side="left"):
            norms.append(np.linalg.norm(endval))
            out += endval
    tail = 0.0
    if len(norms) >= 2 and norms[-2] > 0:
        q = min(norms[-1] / norms[-2], 0.9)
        tail = norms[-1] * q / (1 - q)
    elif norms:
        tail = norms[-1]
    return (out, tail) if return_tail else out


def phi_regularized(k, max_len=None, settings=None, perm=None, side="right",
                    return_tail=False):
    """Regularized word expansion at upper limit 1.

    Sums  hbar^r L_0(w|1) A_w  over all words whose last letter is not 5;
    inner letters may equal 5, those integrals stay finite below the
    endpoint.  side="right" uses the word-order product A_{i_1}...A_{i_r},
    side="left" the reversed product matching the left transport ODE.
    """
    st = settings or DEFAULT_SETTINGS
    R = st.max_word_len if max_len is None else max_len
    n = ops.dim(k)
    out = np.eye(n, dtype=complex)
    grid = _grid(1.0, st)
    norms = []
    if R > 0:
        for _, endval in _series_terms(k, grid, R, perm=perm, side=side,
                                       skip_last_at_one=True):
            norms.append(np.linalg.norm(endval))
            out += endval
    tail = 0.0
    if len(norms) >= 2 and norms[-2] > 0:
        q = min(norms[-1] / norms[-2], 0.9)
        tail = norms[-1] * q / (1 - q)
    elif norms:
        tail = norms[-1]
    return (out, tail) if return_tail else out
