"""Kinematic inputs: masses and momentum invariants, the mass matrix they
define, and the (possibly analytically continued) angles attached to each
leg pair.

Conventions: leg ``i`` carries a positive mass ``m_i`` and an integer
propagator power ``nu_i >= 1``.  The invariant ``k2[j, l]`` is the squared
momentum transfer between legs ``j`` and ``l`` in mass**2 units; its diagonal
is meaningless and must be zero.  The matrix built here is

    S[i, i] = m_i**2,     S[j, l] = m_j * m_l * c_jl,
    c_jl = (m_j**2 + m_l**2 - k2[j, l]) / (2 m_j m_l),

symmetric with the squared masses on the diagonal.  Whenever every c_jl lies
in [-1, 1] the matrix is a genuine covariance matrix and the probabilistic
evaluators apply directly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveMass, OutOfRange, ValidationError

# |c| this close to 1 is snapped onto the boundary so thresholds give
# tau exactly 0 or pi instead of a spurious tiny imaginary part.
BOUNDARY_SNAP = 1e-12

# Relative pivot tolerance for the positive-definiteness classification.
PIVOT_TOL = 1e-12


class PDStatus(enum.Enum):
    POSITIVE_DEFINITE = "positive_definite"
    POSITIVE_SEMIDEFINITE = "positive_semidefinite"
    INDEFINITE = "indefinite"


class AngleBranch(enum.Enum):
    INTERIOR = "interior"                    # -1 <= c <= 1
    BELOW_PSEUDOTHRESHOLD = "below_pseudothreshold"  # c > 1
    ABOVE_THRESHOLD = "above_threshold"      # c < -1


@dataclass(frozen=True)
class KinematicConfig:
    """Masses, invariants, propagator powers and the spacetime dimension.

    ``dimension`` is the real dimension n.  When the problem is posed as
    d - 2*eps, construct with :meth:`from_d_epsilon`; ``d`` and ``epsilon``
    are then retained for the expansion machinery.
    """

    masses: tuple[float, ...]
    invariants: np.ndarray
    powers: tuple[int, ...]
    dimension: float
    d: int | None = None
    epsilon: float = 0.0
    flags: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        n_legs = len(self.masses)
        if n_legs < 1:
            raise ValidationError("at least one leg required")
        if any(m <= 0 for m in self.masses):
            raise NonPositiveMass(f"masses must be strictly positive, got {self.masses}")
        k2 = np.asarray(self.invariants, dtype=float)
        if k2.shape != (n_legs, n_legs):
            raise ValidationError(f"invariants must be {n_legs}x{n_legs}, got {k2.shape}")
        if not np.allclose(k2, k2.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(k2).max())):
            raise ValidationError("invariants matrix must be symmetric")
        if np.any(np.abs(np.diag(k2)) > 0.0):
            raise ValidationError("invariants diagonal must be zero (it is unused)")
        if len(self.powers) != n_legs:
            raise ValidationError("powers length must match number of legs")
        if any((not float(p).is_integer()) or p < 1 for p in self.powers):
            raise ValidationError(f"powers must be integers >= 1, got {self.powers}")
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        object.__setattr__(self, "powers", tuple(int(p) for p in self.powers))
        k2 = 0.5 * (k2 + k2.T)
        k2.setflags(write=False)
        object.__setattr__(self, "invariants", k2)

    @classmethod
    def from_d_epsilon(cls, masses, invariants, powers, d: int, epsilon: float = 0.0, **kw):
        return cls(masses=tuple(masses), invariants=invariants, powers=tuple(powers),
                   dimension=d - 2.0 * epsilon, d=int(d), epsilon=float(epsilon), **kw)

    @property
    def n_legs(self) -> int:
        return len(self.masses)

    @property
    def nu_total(self) -> int:
        return sum(self.powers)

    def with_dimension(self, n: float) -> "KinematicConfig":
        return KinematicConfig(self.masses, np.array(self.invariants), self.powers, float(n))

    def with_powers(self, powers) -> "KinematicConfig":
        return KinematicConfig(self.masses, np.array(self.invariants), tuple(powers), self.dimension)


@dataclass(frozen=True)
class SigmaMatrix:
    """The mass matrix with its positive-definiteness classification."""

    entries: np.ndarray
    pd_status: PDStatus

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n_legs(self) -> int:
        return self.entries.shape[0]

    @property
    def masses(self) -> np.ndarray:
        return np.sqrt(np.diag(self.entries))


@dataclass(frozen=True)
class KinematicAngle:
    c: float
    tau: complex
    branch: AngleBranch
    flags: tuple[str, ...] = field(default_factory=tuple)


def kallen(x: float, y: float, z: float) -> float:
    """x**2 + y**2 + z**2 - 2xy - 2xz - 2yz, exactly symmetric in all
    arguments (evaluation order is canonicalized before rounding)."""
    a, b, c = sorted((x, y, z))
    return a * a + b * b + c * c - 2.0 * (a * b + a * c + b * c)


def cosine(m_j: float, m_l: float, k2_jl: float) -> float:
    return (m_j * m_j + m_l * m_l - k2_jl) / (2.0 * m_j * m_l)


def _pd_classify(entries: np.ndarray, tol: float = PIVOT_TOL) -> PDStatus:
    """Classify a symmetric matrix by attempted LDL^T pivots.

    Pivots below ``tol`` relative to the largest diagonal entry count as
    zero; a genuinely negative pivot means indefinite.
    """
    a = np.array(entries, dtype=float)
    n = a.shape[0]
    scale = float(np.max(np.abs(np.diag(a)))) or 1.0
    semidefinite = False
    for k in range(n):
        piv = a[k, k]
        if piv < -tol * scale:
            return PDStatus.INDEFINITE
        if piv <= tol * scale:
            # Zero pivot: the remaining row/column must vanish too or the
            # matrix is indefinite.
            if np.any(np.abs(a[k, k + 1:]) > math.sqrt(tol) * scale):
                return PDStatus.INDEFINITE
            semidefinite = True
            continue
        v = a[k + 1:, k] / piv
        a[k + 1:, k + 1:] -= np.outer(v, a[k + 1:, k])
    return PDStatus.POSITIVE_SEMIDEFINITE if semidefinite else PDStatus.POSITIVE_DEFINITE


def build_sigma(config: KinematicConfig) -> SigmaMatrix:
    """Assemble the mass matrix from masses and invariants."""
    m = np.asarray(config.masses)
    if np.any(m <= 0):
        raise NonPositiveMass(f"masses must be strictly positive, got {config.masses}")
    n = config.n_legs
    entries = np.outer(m, m)
    c = np.ones((n, n))
    for j in range(n):
        for l in range(j + 1, n):
            c[j, l] = c[l, j] = cosine(m[j], m[l], config.invariants[j, l])
    entries *= c
    np.fill_diagonal(entries, m * m)
    return SigmaMatrix(entries=entries, pd_status=_pd_classify(entries))


def angle(c: float, lambda_value: float | None = None) -> KinematicAngle:
    """Angle attached to a cosine value, continued outside [-1, 1].

    Interior values give a real angle in [0, pi].  For c > 1 the angle is
    -i*arccosh(c); for c < -1 it is pi + i*arccosh(-c).  |c| within
    ``BOUNDARY_SNAP`` of 1 snaps exactly onto the boundary.  ``lambda_value``
    is the Kallen value of the pair; when it vanishes while c sits outside
    the interior numerically, the config is flagged rather than trusted.
    """
    flags: tuple[str, ...] = ()
    if not math.isfinite(c):
        raise OutOfRange(f"cosine value must be finite, got {c}")
    if abs(abs(c) - 1.0) <= BOUNDARY_SNAP:
        if lambda_value is not None and abs(c) > 1.0:
            flags = ("boundary_snap",)
        c_snapped = math.copysign(1.0, c)
        tau = 0.0 if c_snapped > 0 else math.pi
        return KinematicAngle(c=c, tau=complex(tau), branch=AngleBranch.INTERIOR, flags=flags)
    if -1.0 < c < 1.0:
        return KinematicAngle(c=c, tau=complex(math.acos(c)), branch=AngleBranch.INTERIOR)
    if lambda_value is not None and abs(lambda_value) == 0.0:
        flags = ("zero_kallen_outside_interior",)
    if c > 1.0:
        return KinematicAngle(c=c, tau=-1j * math.acosh(c),
                              branch=AngleBranch.BELOW_PSEUDOTHRESHOLD, flags=flags)
    return KinematicAngle(c=c, tau=math.pi + 1j * math.acosh(-c),
                          branch=AngleBranch.ABOVE_THRESHOLD, flags=flags)


def pair_angle(config: KinematicConfig, j: int, l: int) -> KinematicAngle:
    m = config.masses
    c = cosine(m[j], m[l], config.invariants[j, l])
    lam = kallen(m[j] ** 2, m[l] ** 2, config.invariants[j, l])
    return angle(c, lam)


def random_interior_config(rng: np.random.Generator, n_legs: int, n: float | None = None,
                           mass_range=(0.6, 1.6), corr_scale: float = 1.0) -> KinematicConfig:
    """Random config whose cosines all lie strictly inside (-1, 1).

    The cosine matrix is drawn as the correlation matrix of a random Gram
    matrix plus a ridge, which keeps the mass matrix positive definite.
    Used by tests, the validation command and the experiment scripts.
    """
    masses = rng.uniform(*mass_range, size=n_legs)
    a = rng.normal(size=(n_legs, n_legs))
    g = a @ a.T + n_legs * np.eye(n_legs) / max(corr_scale, 1e-3)
    dd = np.sqrt(np.diag(g))
    c = g / np.outer(dd, dd)
    k2 = np.zeros((n_legs, n_legs))
    for j in range(n_legs):
        for l in range(j + 1, n_legs):
            k2[j, l] = k2[l, j] = masses[j] ** 2 + masses[l] ** 2 - 2.0 * masses[j] * masses[l] * c[j, l]
    return KinematicConfig(masses=tuple(masses), invariants=k2,
                           powers=(1,) * n_legs,
                           dimension=float(n if n is not None else n_legs))
