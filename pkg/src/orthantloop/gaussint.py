"""Gaussian-kernel integrals with reciprocal-coordinate denominators.

These are the building blocks of every explicit N-point assembly: the
integral over d Gaussian variables with unit-diagonal correlation matrix
``rho`` and a product of 1/omega denominators over some subset of the
variables.  Everything is expressed in the normalized convention (unit
diagonals); the sqrt(2*pi/R_jj) single-leg weights are factored out and
reapplied by the assembly layer.

Closed forms exist for zero and two denominators; four denominators reduce
to three one-dimensional arcsine integrals; six denominators reduce to an
outer integral whose integrand is a weighted sum of five four-denominator
evaluations on a conditioned coefficient matrix.  All entries may be
complex (shifted-mass continuations); principal branches are used
throughout, with an optional homotopy continuity check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConditioning, NonPositiveDiagonal, OutOfRange
from .quadrature import (
    DEFAULT_SETTINGS,
    IntegralValue,
    METHOD_QUADRATURE,
    QuadratureSettings,
    adaptive_batch,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CorrelationSubmatrix:
    """A unit-diagonal correlation block with the original leg indices kept
    for bookkeeping.  Entries may be complex for shifted-mass inputs; real
    off-diagonals must sit strictly inside (-1, 1)."""

    rho: np.ndarray
    labels: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        rho = np.asarray(self.rho)
        d = rho.shape[0]
        if rho.ndim != 2 or rho.shape[1] != d or not 1 <= d <= 7:
            raise ValueError(f"need a square block of side 1..7, got {rho.shape}")
        if not np.allclose(rho, rho.T, atol=1e-12):
            raise ValueError("correlation block must be symmetric")
        if not np.allclose(np.diagonal(rho), 1.0, atol=1e-12):
            raise ValueError("correlation block must have unit diagonal")
        if not np.iscomplexobj(rho):
            off = np.abs(rho[np.triu_indices(d, 1)])
            if d > 1 and np.max(off, initial=0.0) >= 1.0:
                raise OutOfRange("real off-diagonal correlations must lie in (-1, 1)")
        rho = rho.copy()
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(d)))
        elif len(self.labels) != d:
            raise ValueError("labels length must match the block size")


def _as_rho(rho) -> np.ndarray:
    return rho.rho if isinstance(rho, CorrelationSubmatrix) else np.asarray(rho)


def i_single(r_jj: float) -> float:
    """Gaussian integral of a single leg: sqrt(2*pi / r_jj)."""
    if np.real(r_jj) <= 0.0 and not np.iscomplexobj(r_jj):
        raise NonPositiveDiagonal(f"diagonal entry must be positive, got {r_jj}")
    return np.sqrt(TWO_PI / r_jj)


def i_pair(rho_ij):
    """Two denominators: -2*pi*arcsin(rho_ij)."""
    if not np.iscomplexobj(rho_ij):
        if abs(rho_ij) >= 1.0:
            raise OutOfRange(f"|rho| must be < 1, got {rho_ij}")
        return -TWO_PI * math.asin(rho_ij)
    return -TWO_PI * np.arcsin(complex(rho_ij))


def partial_correlation(rho: np.ndarray, i: int, j: int, k: int):
    """Correlation of legs (i, j) after integrating leg k out."""
    den_i = 1.0 - rho[i, k] ** 2
    den_j = 1.0 - rho[j, k] ** 2
    if min(abs(den_i), abs(den_j)) < 1e-14:
        raise DegenerateConditioning(
            f"conditioning on leg {k} degenerate: 1-rho^2 = {den_i}, {den_j}")
    return (rho[i, j] - rho[i, k] * rho[j, k]) / np.sqrt(den_i * den_j)


def i_pair_conditional(rho, pair: tuple[int, int], conditioned: int):
    """Three legs, two denominators; leg ``conditioned`` carries a plain
    Gaussian weight.  Normalized convention: -(2*pi)**(3/2) * arcsin of the
    partial correlation."""
    rho = _as_rho(rho)
    i, j = pair
    pc = partial_correlation(rho, i, j, conditioned)
    return i_single(1.0) * i_pair(pc if np.iscomplexobj(rho) else float(np.real(pc)))


def conditioned_correlation(rho: np.ndarray, k: int) -> np.ndarray:
    """Partial-correlation matrix of all remaining legs given leg k."""
    idx = [a for a in range(rho.shape[0]) if a != k]
    sub = rho[np.ix_(idx, idx)]
    col = rho[idx, k]
    den = 1.0 - col ** 2
    if np.min(np.abs(den)) < 1e-14:
        raise DegenerateConditioning(f"conditioning on leg {k} degenerate")
    out = (sub - np.outer(col, col)) / np.sqrt(np.outer(den, den))
    if not np.iscomplexobj(out):
        np.fill_diagonal(out, 1.0)
    return out


def default_anchor(rho: np.ndarray) -> int:
    """Label with the largest total |rho| to its partners; keeps the
    |rho_ip * u| factors farthest from the endpoint singularity."""
    s = np.sum(np.abs(rho), axis=1) - np.abs(np.diag(rho))
    return int(np.argmax(s))


def _quartet_term_coeffs(rho: np.ndarray, i: int, p: int, q: int, r: int):
    """Polynomial coefficients (in u**2) of the arcsine argument for anchor
    i, partner p and denominators (q, r)."""
    a_q = (1.0 - rho[p, q] ** 2,
           2.0 * rho[i, p] * rho[i, q] * rho[p, q] - rho[i, p] ** 2 - rho[i, q] ** 2)
    a_r = (1.0 - rho[p, r] ** 2,
           2.0 * rho[i, p] * rho[i, r] * rho[p, r] - rho[i, p] ** 2 - rho[i, r] ** 2)
    a_qr = (rho[q, r] - rho[p, q] * rho[p, r],
            rho[i, p] * rho[i, q] * rho[p, r] + rho[i, p] * rho[i, r] * rho[p, q]
            - rho[i, q] * rho[i, r] - rho[i, p] ** 2 * rho[q, r])
    return a_q, a_r, a_qr


def _check_real_degeneracy(rho: np.ndarray, i: int, partners) -> None:
    for p in partners:
        if abs(rho[i, p]) >= 1.0 - 1e-14:
            raise DegenerateConditioning(f"|rho[{i},{p}]| too close to 1")


def _check_complex_degeneracy(rho: np.ndarray, i: int, partners) -> None:
    # 1 - rho**2 u**2 vanishes at u = 1/rho; reject roots sitting on (0, 1).
    for p in partners:
        rp = complex(rho[i, p])
        if rp == 0:
            continue
        z = 1.0 / rp
        if abs(z.imag) < 1e-8 and 0.0 < z.real < 1.0 + 1e-8:
            raise DegenerateConditioning(
                f"1 - rho^2 u^2 vanishes on the unit interval for pair ({i},{p})")


def quartet_batch(rhos: np.ndarray, settings: QuadratureSettings = DEFAULT_SETTINGS,
                  anchors=None):
    """Four-denominator integrals, normalized by pi**4, for a batch of
    correlation matrices.

    ``rhos`` has shape (B, 4, 4).  Returns (values, errors) arrays of length
    B.  The three partner terms of every matrix share one adaptive
    refinement, which is what makes the shifted-mass contour evaluations
    affordable; the coefficient setup is vectorized per anchor group.
    """
    rhos = np.asarray(rhos)
    B = rhos.shape[0]
    is_complex = np.iscomplexobj(rhos)
    if anchors is None:
        strength = np.abs(rhos).sum(axis=2) - np.abs(
            np.diagonal(rhos, axis1=1, axis2=2))
        anchors = np.argmax(strength, axis=1)
    else:
        anchors = np.asarray(anchors, dtype=int)
    dtype = complex if is_complex else float
    weights = np.empty((B, 3), dtype=dtype)
    coeffs = np.empty((B, 3, 6), dtype=dtype)
    for i in np.unique(anchors):
        sel = np.nonzero(anchors == i)[0]
        sub = rhos[sel]
        partners = [a for a in range(4) if a != i]
        rip_all = sub[:, i, partners]
        if is_complex:
            z = np.where(rip_all == 0, np.inf, 1.0 / rip_all)
            bad = (np.abs(z.imag) < 1e-8) & (z.real > 0.0) & (z.real < 1.0 + 1e-8)
            if np.any(bad):
                raise DegenerateConditioning(
                    "1 - rho^2 u^2 vanishes on the unit interval for an anchor pair")
        elif np.any(np.abs(rip_all) >= 1.0 - 1e-14):
            raise DegenerateConditioning("|rho| too close to 1 for the anchor leg")
        for t, p in enumerate(partners):
            q, r = [a for a in partners if a != p]
            rp = sub[:, i, p]
            rq = sub[:, i, q]
            rr = sub[:, i, r]
            pq = sub[:, p, q]
            pr = sub[:, p, r]
            qr = sub[:, q, r]
            weights[sel, t] = rp
            coeffs[sel, t, 0] = 1.0 - pq ** 2
            coeffs[sel, t, 1] = 2.0 * rp * rq * pq - rp ** 2 - rq ** 2
            coeffs[sel, t, 2] = 1.0 - pr ** 2
            coeffs[sel, t, 3] = 2.0 * rp * rr * pr - rp ** 2 - rr ** 2
            coeffs[sel, t, 4] = qr - pq * pr
            coeffs[sel, t, 5] = rp * rq * pr + rp * rr * pq - rq * rr - rp ** 2 * qr

    def integrand(u):
        u2 = u * u
        aq = coeffs[:, :, 0, None] + coeffs[:, :, 1, None] * u2
        ar = coeffs[:, :, 2, None] + coeffs[:, :, 3, None] * u2
        aqr = coeffs[:, :, 4, None] + coeffs[:, :, 5, None] * u2
        arg = aqr / np.sqrt(aq * ar)
        if not is_complex:
            arg = np.clip(arg, -1.0, 1.0)
        asin = np.arcsin(arg)
        return weights[:, :, None] * asin / np.sqrt(1.0 - (weights[:, :, None] * u) ** 2)

    vals, errs, ok, _ = adaptive_batch(integrand, 0.0, 1.0, settings.rel_tol,
                                       settings.abs_tol, settings.max_subdivisions)
    scale = 4.0 / math.pi ** 2
    values = scale * vals.sum(axis=1)
    errors = scale * errs.sum(axis=1)
    if not is_complex:
        values = np.real(values)
    return values, errors, ok


def i_quad(rho: np.ndarray, settings: QuadratureSettings = DEFAULT_SETTINGS,
           anchor: int | None = None) -> IntegralValue:
    """Four-denominator Gaussian integral divided by pi**4.

    The formula is anchored at one label and is not manifestly symmetric;
    the value is.  ``anchor=None`` picks the label that keeps the endpoint
    factors tamest.
    """
    rho = _as_rho(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"need a 4x4 matrix, got {rho.shape}")
    anchors = None if anchor is None else [anchor]
    values, errors, ok = quartet_batch(rho[None, :, :], settings, anchors)
    return IntegralValue(value=complex(values[0]), abs_error=float(errors[0]),
                         method=METHOD_QUADRATURE, converged=bool(ok),
                         flags=() if ok else ("non_converged",))


def rho_tilde(rho: np.ndarray, anchor: int, partner: int, u) -> np.ndarray:
    """Conditioned quadratic-form coefficient matrix over the four labels
    left after integrating the anchor (at interpolation parameter u) and the
    partner out.  The diagonal is not 1; normalize before reuse.

    Vectorized over u: returns shape (4, 4) for scalar u, else (len(u), 4, 4).
    """
    rho = _as_rho(rho)
    i, j = anchor, partner
    if i == j:
        raise ValueError("anchor and partner must differ")
    u = np.asarray(u)
    scalar = u.ndim == 0
    u2 = np.atleast_1d(u) ** 2
    rest = [a for a in range(rho.shape[0]) if a not in (i, j)]
    sub = rho[np.ix_(rest, rest)]
    ri = rho[rest, i]
    rj = rho[rest, j]
    den = 1.0 - rho[i, j] ** 2 * u2
    if np.min(np.abs(den)) < 1e-14:
        raise DegenerateConditioning(f"1 - rho_ij^2 u^2 vanished for pair ({i},{j})")
    g = rj[None, :] - rho[i, j] * ri[None, :] * u2[:, None]
    out = (sub[None, :, :]
           - ri[None, :, None] * ri[None, None, :] * u2[:, None, None]
           - g[:, :, None] * g[:, None, :] / den[:, None, None])
    return out[0] if scalar else out


def normalize_coefficient_matrix(m: np.ndarray) -> np.ndarray:
    """Divide entry (r, s) by sqrt(m_rr * m_ss); unit diagonal afterwards."""
    diag = np.diagonal(m, axis1=-2, axis2=-1)
    if not np.iscomplexobj(m) and np.min(diag) <= 1e-14:
        raise DegenerateConditioning("conditioned matrix lost positivity on its diagonal")
    d = np.sqrt(diag)
    return m / (d[..., :, None] * d[..., None, :])


def i_hex(rho: np.ndarray, settings: QuadratureSettings = DEFAULT_SETTINGS,
          anchor: int | None = None) -> IntegralValue:
    """Six-denominator Gaussian integral divided by pi**6.

    Outer integral over u of five partner terms, each a four-denominator
    evaluation on the conditioned coefficient matrix; fifteen double
    integrals in total.
    """
    rho = _as_rho(rho)
    if rho.shape != (6, 6):
        raise ValueError(f"need a 6x6 matrix, got {rho.shape}")
    is_complex = np.iscomplexobj(rho)
    i = default_anchor(rho) if anchor is None else int(anchor)
    partners = [a for a in range(6) if a != i]
    if is_complex:
        _check_complex_degeneracy(rho, i, partners)
    else:
        _check_real_degeneracy(rho, i, partners)
    inner_settings = settings.tighter(0.1)

    def integrand(u):
        nu = len(u)
        mats = np.empty((5, nu, 4, 4), dtype=complex if is_complex else float)
        for t, r in enumerate(partners):
            mats[t] = normalize_coefficient_matrix(rho_tilde(rho, i, r, u))
        flat = mats.reshape(5 * nu, 4, 4)
        inner_vals, _, _ = quartet_batch(flat, inner_settings)
        inner_vals = inner_vals.reshape(5, nu)
        w = np.array([rho[i, r] for r in partners])
        return w[:, None] * inner_vals / np.sqrt(1.0 - (w[:, None] * u[None, :]) ** 2)

    vals, errs, ok, _ = adaptive_batch(integrand, 0.0, 1.0, settings.rel_tol,
                                       settings.abs_tol, settings.max_subdivisions)
    value = -(2.0 / math.pi) * vals.sum()
    error = (2.0 / math.pi) * errs.sum()
    if not is_complex:
        value = np.real(value)
    return IntegralValue(value=complex(value), abs_error=float(error),
                         method=METHOD_QUADRATURE, converged=bool(ok),
                         flags=() if ok else ("non_converged",))


def homotopy_continuity_check(rho_complex: np.ndarray, evaluator, steps: int = 8,
                              jump_tol: float = 0.5) -> bool:
    """Walk from a real SPD proxy to the complex target and watch for value
    jumps, which indicate a principal-branch crossing.

    ``evaluator`` maps a correlation matrix to a complex number (for example
    a wrapped i_quad or i_hex).  Returns True when the walk looks continuous.
    """
    from .matrixops import cholesky
    from .errors import SingularMatrix

    target = np.asarray(rho_complex, dtype=complex)
    start = np.real(target)
    # Shrink the real part toward the identity until it is a valid SPD
    # correlation matrix.
    lam = 1.0
    eye = np.eye(target.shape[0])
    for _ in range(60):
        cand = eye + lam * (start - eye)
        try:
            cholesky(0.5 * (cand + cand.T))
            break
        except SingularMatrix:
            lam *= 0.8
    start = eye + lam * (start - eye)
    prev = None
    for t in np.linspace(0.0, 1.0, steps + 1):
        val = evaluator((1.0 - t) * start + t * target)
        if prev is not None:
            scale = max(abs(prev), abs(val), 1e-30)
            if abs(val - prev) > jump_tol * scale + 10.0 / steps * scale:
                return False
        prev = val
    return True
