"""Connection data: the weight hbar, the matrix-valued 1-form on the space of
six-point configurations, Verlinde dimensions, and the five residues of the
pullback to the punctured t-line.

Pole bookkeeping. zeta = exp(2*pi*i/5); the pulled-back connection has simple
poles exactly at the fifth roots of unity zeta^1..zeta^5 (zeta^5 = 1).  The
residue attached to zeta^m is the sum of the two operators whose label pair
(a, b), 1 <= a < b <= 5, satisfies a + b = m (mod 5).  Residues are indexed
by *pole location* everywhere in this package; the subscript m is only the
exponent of the pole zeta^m.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from . import operators as ops

ZETA = cmath.exp(2j * cmath.pi / 5)

# pairs (a,b) with a < b <= 5 grouped by a+b mod 5 (residue index 1..5, 5 ~ 0)
RESIDUE_PAIRS = {
    1: ((1, 5), (2, 4)),
    2: ((2, 5), (3, 4)),
    3: ((1, 2), (3, 5)),
    4: ((1, 3), (4, 5)),
    5: ((1, 4), (2, 3)),
}


class PoleError(ValueError):
    """Coincident configuration points or an off-lattice pole request."""


def hbar(k):
    """Exact connection weight -1/(16(k+2))."""
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ops.InvalidLevelError(f"level must be a positive integer, got {k!r}")
    return Fraction(-1, 16 * (k + 2))


def verlinde_dim(g, k):
    """Dimension of the space of level-k states on a genus-g surface.

    Evaluates ((k+2)/2)^(g-1) * sum_{j=1}^{k+1} sin(j pi/(k+2))^(2-2g) and
    rounds to the nearest integer, insisting the defect is below 1e-6.
    """
    if g < 2 or k < 1:
        raise ValueError("need g >= 2 and k >= 1")
    s = sum(math.sin(j * math.pi / (k + 2)) ** (2 - 2 * g) for j in range(1, k + 2))
    value = ((k + 2) / 2) ** (g - 1) * s
    nearest = round(value)
    if abs(value - nearest) >= 1e-6:
        raise ArithmeticError(
            f"sine sum {value!r} is not integral within 1e-6 at (g={g}, k={k})"
        )
    return int(nearest)


def omega_eval(k, points, tangents, mats=None):
    """The matrix-valued 1-form on configurations, paired with a tangent.

    points: six distinct finite complex numbers; tangents: six complex
    velocities.  Returns  hbar * sum_{i<j} O^{i,j}_k (v_i - v_j)/(z_i - z_j)
    as a complex matrix.
    """
    z = np.asarray(points, dtype=complex)
    v = np.asarray(tangents, dtype=complex)
    if z.shape != (6,) or v.shape != (6,):
        raise ValueError("need six points and six tangents")
    if np.any(np.isinf(z)):
        raise PoleError("point at infinity is outside this chart")
    if mats is None:
        mats = ops.all_omega_hat_matrices(k)
    n = ops.dim(k)
    acc = np.zeros((n, n), dtype=complex)
    for (i, j), mat in mats.items():
        dz = z[i - 1] - z[j - 1]
        if dz == 0:
            raise PoleError(f"points {i} and {j} coincide")
        w = (v[i - 1] - v[j - 1]) / dz
        if w != 0:
            acc += w * mat.astype(complex)
    return float(hbar(k)) * acc


@dataclass(frozen=True)
class ResidueSet:
    """The five residue matrices of the pulled-back connection.

    `matrices[m]` (m = 1..5, exact integer entries) sits at the pole
    zeta^m; `poles[m]` is that pole's location.  Sum over m equals the sum
    of the ten operators with labels inside 1..5.
    """

    level: int
    matrices: dict  # m -> integer matrix (dtype=object)

    @property
    def poles(self):
        return {m: ZETA**m for m in range(1, 6)}

    def pole_index(self, pole, tol=1e-9):
        for m in range(1, 6):
            if abs(ZETA**m - pole) < tol:
                return m
        raise PoleError(f"{pole!r} is not a fifth root of unity")

    def at_pole(self, pole):
        """Residue matrix looked up by pole location."""
        return self.matrices[self.pole_index(pole)]

    def as_complex(self, perm=None):
        """Residues as complex matrices, listed in pole order zeta^1..zeta^5.

        `perm` optionally relabels: entry m holds the matrix of label
        perm[m].  Used for transporting the pulled-back form along paths
        whose configuration-space lift permutes the six points.
        """
        out = []
        for m in range(1, 6):
            label = perm[m] if perm is not None else m
            out.append(self.matrices[label].astype(complex))
        return out

    def to_json(self):
        return {
            "level": int(self.level),
            "poles": [
                [float((ZETA**m).real), float((ZETA**m).imag)] for m in range(1, 6)
            ],
            "residues": [
                ops.matrix_to_json(self.matrices[m], self.level) for m in range(1, 6)
            ],
        }


def residues(k, mats=None):
    """Residue set at level k via the mod-5 pair partition."""
    if mats is None:
        mats = ops.all_omega_hat_matrices(k)
    out = {}
    for m, (p1, p2) in RESIDUE_PAIRS.items():
        out[m] = mats[p1] + mats[p2]
    return ResidueSet(level=k, matrices=out)


# The embedding of the punctured t-line into configuration space: the six
# moving points are 1/(zeta^m + zeta^(-m) t) for m = 1..5 and the constant 0.
def embedding(t):
    return np.array(
        [1 / (ZETA**m + ZETA ** (-m) * t) for m in range(1, 6)] + [0.0], dtype=complex
    )


def embedding_velocity(t):
    return np.array(
        [-(ZETA ** (-m)) / (ZETA**m + ZETA ** (-m) * t) ** 2 for m in range(1, 6)]
        + [0.0],
        dtype=complex,
    )


def pullback_residue_at(k, pole, radius=0.25, nodes=512, mats=None):
    """Residue of the pulled-back form at a fifth root of unity, computed
    numerically as a contour integral and normalized by the weight hbar.

    This is independent of the mod-5 labelling: it integrates the full
    pulled-back 1-form (including its scalar part, which has no poles on
    the unit fifth roots) around a small circle.
    """
    m0 = ResidueSet(k, {}).pole_index(pole)  # validates the pole
    center = ZETA**m0
    if mats is None:
        mats = ops.all_omega_hat_matrices(k)
    n = ops.dim(k)
    acc = np.zeros((n, n), dtype=complex)
    for idx in range(nodes):
        theta = 2 * math.pi * idx / nodes
        t = center + radius * cmath.exp(1j * theta)
        dt = 1j * radius * cmath.exp(1j * theta)  # d t / d theta
        z = embedding(t)
        v = embedding_velocity(t) * dt
        acc += omega_eval(k, z, v, mats=mats)
    acc *= (2 * math.pi / nodes) / (2j * math.pi)
    return acc / float(hbar(k))


def psl2_invariance_check(k, points, tangents, a=1 + 1j, b=2.0, mats=None):
    """Differences omega - tau^*(omega) for the three generator families.

    Returns a dict with the Frobenius norms of the translation and dilation
    differences (exactly zero up to rounding), the distance of the inversion
    difference from the nearest scalar matrix, and the measured vs predicted
    inversion scalar.  The prediction uses the measured fixed-label scalar
    c2(k) (sum over pairs through a fixed label = c2 * Id):

        omega - I^*(omega) = hbar * c2(k) * (sum_m v_m / z_m) * Id.
    """
    if mats is None:
        mats = ops.all_omega_hat_matrices(k)
    z = np.asarray(points, dtype=complex)
    v = np.asarray(tangents, dtype=complex)
    base = omega_eval(k, z, v, mats=mats)
    n = base.shape[0]

    report = {}
    d_tr = base - omega_eval(k, z + a, v, mats=mats)
    report["translation_norm"] = float(np.linalg.norm(d_tr))
    d_di = base - omega_eval(k, b * z, b * v, mats=mats)
    report["dilation_norm"] = float(np.linalg.norm(d_di))

    if np.any(z == 0):
        raise PoleError("inversion test needs a configuration avoiding 0")
    d_inv = base - omega_eval(k, 1 / z, -v / z**2, mats=mats)
    scalar = np.trace(d_inv) / n
    defect = np.linalg.norm(d_inv - scalar * np.eye(n))
    denom = np.linalg.norm(d_inv)
    report["inversion_scalar_defect"] = float(defect / denom) if denom > 0 else 0.0
    report["inversion_scalar"] = complex(scalar)
    _, fixed = ops.ward_scalars(k, mats=mats)
    c2 = fixed[1]
    report["inversion_scalar_predicted"] = complex(
        float(hbar(k)) * int(c2) * np.sum(v / z)
    )
    return report


def scalar_tail_factor(t, k):
    """Pointwise value of the scalar 1-form completing the exact pullback:
    hbar * k^2 * sum_m 1/(t + zeta^(2m)).  Its primitive multiplies parallel
    transport by a global scalar only.
    """
    s = sum(1 / (t + ZETA ** (2 * m)) for m in range(1, 6))
    return float(hbar(k)) * (k**2) * s
