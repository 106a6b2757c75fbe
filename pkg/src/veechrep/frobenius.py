"""Local series solutions  Y(b) = Q(b) b^{hbar A}  at the five poles.

Q is the power series with Q(0) = Id determined by the recursion

    (r - hbar ad(A)) q_r = -hbar sum_{l=1..r} S_l q_{r-l},
    S_l = sum_{j != m} A_j / (zeta^j - zeta^m)^l,

where the inverse of (r - hbar ad(A)) is applied as the geometric series
(1/r) sum_n (hbar/r)^n ad(A)^n.  The branch of b^{hbar A} is cut along the
positive real axis of the local coordinate, with arguments in (0, 2 pi).

The half-turn transport around a pole, entering at +i eps and leaving at
-i eps anticlockwise, is  Q(-i eps) exp(+i pi hbar A) Q(i eps)^{-1}; the
sign in the exponent is also pinned empirically against direct ODE
transport in the test suite.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import operators as ops
from .connection import ZETA, residues, hbar
from .transport import TransportSettings, DEFAULT_SETTINGS, _residue_stack

MIN_POLE_GAP = 2 * math.sin(math.pi / 5)  # distance between adjacent poles


class BranchCutError(ValueError):
    """Evaluation point on the branch cut or at the singular point."""


class SeriesRadiusError(ValueError):
    """Radius outside the convergence disk of the local series."""


@dataclass(frozen=True)
class BranchSpec:
    """Branch of log in the local coordinate: the ray at `cut_angle` is
    excluded and arguments live in (cut_angle, cut_angle + 2 pi)."""

    cut_angle: float = 0.0

    def log(self, b):
        b = complex(b)
        if b == 0:
            raise BranchCutError("log requested at the singular point")
        theta = (cmath.phase(b) - self.cut_angle) % (2 * math.pi)
        if theta == 0.0:
            raise BranchCutError(f"{b!r} lies on the branch cut")
        return math.log(abs(b)) + 1j * (theta + self.cut_angle)


DEFAULT_BRANCH = BranchSpec()


@dataclass(frozen=True)
class LocalSeries:
    """Series data of the regular singular point at `pole`."""

    level: int
    pole_index: int          # m with pole = zeta^m
    pole: complex
    coeffs: np.ndarray       # (N+1, n, n), coeffs[0] = Id
    radius: float            # convergence radius estimate

    @property
    def order(self):
        return self.coeffs.shape[0] - 1

    def eval(self, b):
        b = complex(b)
        acc = self.coeffs[-1].copy()
        for r in range(self.order - 1, -1, -1):
            acc = acc * b + self.coeffs[r]
        return acc

    def eval_deriv(self, b):
        b = complex(b)
        n = self.coeffs.shape[1]
        acc = np.zeros((n, n), dtype=complex)
        for r in range(self.order, 0, -1):
            acc = acc * b + r * self.coeffs[r]
        return acc


def _ad_inverse(r, hb, A, rhs, cutoff):
    """((r - hb ad(A))^{-1} rhs) via the geometric ad-series."""
    # crude spectral bound; the series needs |hb| * ||ad A|| < r
    bound = 2 * abs(hb) * np.linalg.norm(A, 2)
    if bound >= r:
        raise SeriesRadiusError(
            f"ad-series does not converge: |hbar| ||ad A|| = {bound:.3f} >= {r}"
        )
    term = rhs / r
    acc = term.copy()
    scale = hb / r
    while np.linalg.norm(term) > cutoff:
        term = scale * (A @ term - term @ A)
        acc += term
    return acc


def q_series(k, pole, order, settings=None, perm=None, residue_set=None):
    """Local series at the given pole (a fifth root of unity), to `order`.

    `perm` relabels the residues by pole as in transport.ode_transport.
    """
    st = settings or DEFAULT_SETTINGS
    rs = residue_set if residue_set is not None else residues(k)
    m = rs.pole_index(pole)
    A_by_pole = _residue_stack(k, rs, perm)   # entry j-1 sits at zeta^j
    A = A_by_pole[m - 1]
    n = A.shape[0]
    hb = float(hbar(k))

    diffs = [ZETA**j - ZETA**m for j in range(1, 6)]
    S = []
    for l in range(1, order + 1):
        Sl = np.zeros((n, n), dtype=complex)
        for j in range(1, 6):
            if j == m:
                continue
            Sl += A_by_pole[j - 1] / diffs[j - 1] ** l
        S.append(Sl)

    q = [np.eye(n, dtype=complex)]
    for r in range(1, order + 1):
        rhs = np.zeros((n, n), dtype=complex)
        for l in range(1, r + 1):
            rhs -= hb * (S[l - 1] @ q[r - l])
        q.append(_ad_inverse(r, hb, A, rhs, st.series_cutoff * 1e-3))
    return LocalSeries(level=k, pole_index=m, pole=ZETA**m,
                       coeffs=np.array(q), radius=MIN_POLE_GAP)


def local_residual(series, b, k, perm=None, residue_set=None):
    """Norm of  b Q' - hbar [A, Q] + hbar sum_j A_j b Q/((zeta^j-zeta^m)-b).

    Zero (to series truncation) exactly when Q solves the local equation.
    """
    rs = residue_set if residue_set is not None else residues(k)
    m = series.pole_index
    A_by_pole = _residue_stack(k, rs, perm)
    A = A_by_pole[m - 1]
    hb = float(hbar(k))
    Q = series.eval(b)
    Qp = series.eval_deriv(b)
    res = b * Qp - hb * (A @ Q - Q @ A)
    for j in range(1, 6):
        if j == m:
            continue
        d = ZETA**j - ZETA**m
        res += hb * (A_by_pole[j - 1] @ Q) * (b / (d - b))
    return float(np.linalg.norm(res))


def adaptive_q_series(k, pole, eval_radius, tol=1e-12, max_order=40,
                      settings=None, perm=None, residue_set=None):
    """Increase the series order until the local-equation residual at
    |b| = eval_radius drops below tol (cap at max_order)."""
    order = 8
    while True:
        series = q_series(k, pole, order, settings=settings, perm=perm,
                          residue_set=residue_set)
        worst = max(
            local_residual(series, eval_radius * cmath.exp(1j * th), k,
                           perm=perm, residue_set=residue_set)
            for th in (0.1, 1.7, 3.3, 4.9)
        )
        if worst < tol or order >= max_order:
            return series
        order = min(max_order, order + 8)


def matrix_branch_power(b, exponent, branch=DEFAULT_BRANCH):
    """b^exponent = exp(log(b) exponent) with the branch's determination."""
    logb = branch.log(b)
    return expm(logb * np.asarray(exponent, dtype=complex))


def semicircle_transport(k, pole, eps, orientation="ccw", settings=None,
                         series=None, perm=None, residue_set=None):
    """Half-turn transport around `pole` at radius eps.

    "ccw" is the transport from pole + i eps to pole - i eps along the arc
    through pole - eps:  Q(-i eps) exp(+i pi hbar A) Q(i eps)^{-1}.
    "cw" is the inverse (from pole - i eps back to pole + i eps).
    """
    if eps >= MIN_POLE_GAP / 2:
        raise SeriesRadiusError(f"eps={eps} too large for the local disk")
    rs = residue_set if residue_set is not None else residues(k)
    m = rs.pole_index(pole)
    if series is None:
        series = adaptive_q_series(k, pole, eps, settings=settings, perm=perm,
                                   residue_set=rs)
    A = _residue_stack(k, rs, perm)[m - 1]
    hb = float(hbar(k))
    half_turn = expm(1j * math.pi * hb * A)
    Qm = series.eval(-1j * eps)
    Qp = series.eval(1j * eps)
    ccw = Qm @ half_turn @ np.linalg.inv(Qp)
    if orientation == "ccw":
        return ccw
    if orientation == "cw":
        return np.linalg.inv(ccw)
    raise ValueError("orientation must be 'ccw' or 'cw'")


def loop_transport(k, pole, eps, base_angle=math.pi / 2, settings=None,
                   series=None, perm=None, residue_set=None):
    """Full anticlockwise small-loop transport based at pole + eps e^{i a}:
    Q(b) exp(2 pi i hbar A) Q(b)^{-1}."""
    rs = residue_set if residue_set is not None else residues(k)
    m = rs.pole_index(pole)
    if series is None:
        series = adaptive_q_series(k, pole, eps, settings=settings, perm=perm,
                                   residue_set=rs)
    A = _residue_stack(k, rs, perm)[m - 1]
    hb = float(hbar(k))
    b = eps * cmath.exp(1j * base_angle)
    Q = series.eval(b)
    return Q @ expm(2j * math.pi * hb * A) @ np.linalg.inv(Q)
