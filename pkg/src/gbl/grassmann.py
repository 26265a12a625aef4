"""Geometry of oriented n-planes in R^(n+m).

Planes are stored as orthonormal row frames. The module provides the
Pluecker-style pairing w (a determinant), principal angles and their
singular-value decomposition, the angle-sum distance, normal geodesics,
the volume-distortion function

    v(P, P0) = 1 / w(P, P0) = prod_a sec(theta_a) = sqrt(det(I + Z Z^T)),

its Hessian in singular-value-adapted frames, and the radial chart
embedding T with |T(Z)| = v - 1.

Conventions
-----------
* A chart around P0 uses P0's own rows as the tangent basis and a fixed
  orthonormal completion as the normal basis; chart matrices Z are n x m
  and the represented plane is spanned by rows of (I | Z) in that basis.
* Principal (Jordan) angle data is ordered by descending angle.  Aligned
  bases returned by `jordan_decompose` satisfy left_i . right_j =
  cos(theta_i) delta_ij, with the left basis positively oriented.
* Repeated angles make principal bases non-unique; whichever gauge the
  SVD returns is kept, and only gauge-invariant quantities should be
  consumed downstream.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (
    CutLocus,
    DimensionMismatch,
    InversionFailure,
    OutOfChart,
    RankDeficient,
)

ORTHO_TOL = 1e-10
CHART_TOL = 1e-12
CUT_TOL = 1e-8
# singular values at least this close to 1 are snapped to exactly 1 so that
# identical planes report exactly zero angles
_SNAP_ONE = 1.0 - 5e-15
# below this angle the principal normal direction is taken from the
# orthonormal completion instead of the ill-conditioned difference formula
_ANGLE_SPLIT = 1e-5


def _orthonormalize_rows(rows: np.ndarray) -> np.ndarray:
    """Orthonormalize rows, preserving span and orientation sign."""
    q, r = np.linalg.qr(rows.T)
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return (q * signs).T


class GrassmannPoint:
    """An oriented n-plane in R^(n+m): an orthonormal n x (n+m) row frame."""

    __slots__ = ("frame", "n", "m", "_normal")

    def __init__(self, frame: np.ndarray):
        frame = np.asarray(frame, dtype=float)
        if frame.ndim != 2 or frame.shape[0] >= frame.shape[1]:
            raise DimensionMismatch(f"frame must be n x (n+m) with m >= 1, got {frame.shape}")
        n, cols = frame.shape
        gram_err = np.abs(frame @ frame.T - np.eye(n)).max()
        if gram_err > 1e-6:
            raise RankDeficient("rows are far from orthonormal; use make_point for raw spans")
        if gram_err > 1e-14:
            frame = _orthonormalize_rows(frame)
        frame = np.ascontiguousarray(frame)
        frame.flags.writeable = False
        self.frame = frame
        self.n = n
        self.m = cols - n
        self._normal = None

    @property
    def ambient(self) -> int:
        return self.n + self.m

    @property
    def normal_frame(self) -> np.ndarray:
        """Fixed orthonormal basis of the orthogonal complement (m rows)."""
        if self._normal is None:
            q, _ = np.linalg.qr(self.frame.T, mode="complete")
            normal = np.ascontiguousarray(q[:, self.n:].T)
            normal.flags.writeable = False
            self._normal = normal
        return self._normal

    def extended_basis(self) -> np.ndarray:
        """(n+m) x (n+m) orthonormal basis: plane rows then normal rows."""
        return np.vstack([self.frame, self.normal_frame])

    def __repr__(self) -> str:
        return f"GrassmannPoint(n={self.n}, m={self.m})"


def make_point(rows: np.ndarray) -> GrassmannPoint:
    """Orthonormalize raw spanning rows into a GrassmannPoint.

    Raises RankDeficient when the smallest singular value is below 1e-10.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] >= rows.shape[1]:
        raise DimensionMismatch(f"rows must be n x (n+m) with m >= 1, got {rows.shape}")
    smin = np.linalg.svd(rows, compute_uv=False)[-1]
    if smin < 1e-10:
        raise RankDeficient(f"numerical rank < {rows.shape[0]} (smallest singular value {smin:.3e})")
    return GrassmannPoint(_orthonormalize_rows(rows))


def standard_plane(n: int, m: int) -> GrassmannPoint:
    """The coordinate plane spanned by the first n basis vectors."""
    return GrassmannPoint(np.hstack([np.eye(n), np.zeros((n, m))]))


def _check_same(P: GrassmannPoint, Q: GrassmannPoint) -> None:
    if (P.n, P.m) != (Q.n, Q.m):
        raise DimensionMismatch(f"({P.n},{P.m}) vs ({Q.n},{Q.m})")


def w_pairing(P: GrassmannPoint, Q: GrassmannPoint) -> float:
    """det(P.frame Q.frame^T); lies in [-1, 1], equals 1 iff P = Q."""
    _check_same(P, Q)
    return float(np.clip(np.linalg.det(P.frame @ Q.frame.T), -1.0, 1.0))


@dataclass(frozen=True)
class JordanDecomposition:
    """Principal angles and pairwise-aligned bases between two planes.

    thetas/lambdas/mus hold the p = min(n, m) possibly-nonzero angles in
    descending order; `pair_angles` repeats them padded with the n - p
    exact zeros, matching basis row order. `orientation` is the sign of
    det W folded out of the singular values.
    """
    thetas: np.ndarray
    lambdas: np.ndarray
    mus: np.ndarray
    left_basis: np.ndarray
    right_basis: np.ndarray
    orientation: float
    pair_angles: np.ndarray


def jordan_decompose(P: GrassmannPoint, Q: GrassmannPoint) -> JordanDecomposition:
    """SVD of W = P.frame Q.frame^T, angles sorted descending."""
    _check_same(P, Q)
    n, m = P.n, P.m
    W = P.frame @ Q.frame.T
    U, s, Vh = np.linalg.svd(W)
    orientation = 1.0 if np.linalg.det(W) >= 0.0 else -1.0
    # descending angles = ascending singular values
    U = U[:, ::-1]
    s = s[::-1]
    Vh = Vh[::-1, :]
    if np.linalg.det(U) < 0.0:
        # flip one aligned pair; keeps W = U diag(s) Vh and the pairing
        U[:, -1] *= -1.0
        Vh[-1, :] *= -1.0
    s = np.clip(s, 0.0, 1.0)
    s[s >= _SNAP_ONE] = 1.0
    pair_angles = np.arccos(s)
    p = min(n, m)
    mus = s[:p].copy()
    thetas = pair_angles[:p].copy()
    with np.errstate(divide="ignore"):
        lambdas = np.where(mus > 0.0, np.sqrt(np.clip(1.0 - mus**2, 0.0, 1.0)) / np.where(mus > 0.0, mus, 1.0), np.inf)
    return JordanDecomposition(
        thetas=thetas,
        lambdas=lambdas,
        mus=mus,
        left_basis=U.T @ P.frame,
        right_basis=Vh @ Q.frame,
        orientation=orientation,
        pair_angles=pair_angles,
    )


def distance(P: GrassmannPoint, Q: GrassmannPoint) -> float:
    """Angle-sum distance sqrt(sum theta_i^2)."""
    return float(np.linalg.norm(jordan_decompose(P, Q).pair_angles))


def v_value(P: GrassmannPoint, P0: GrassmannPoint) -> float:
    """v(P, P0) = 1 / w(P, P0) = prod sec(theta_a); requires w > 0."""
    w = w_pairing(P, P0)
    if w <= CHART_TOL:
        raise OutOfChart(f"w(P, P0) = {w:.3e} <= 0; v undefined")
    return 1.0 / w


def from_chart(Z: np.ndarray, P0: GrassmannPoint) -> GrassmannPoint:
    """Plane spanned by rows of (I | Z) in P0's adapted basis."""
    Z = np.asarray(Z, dtype=float)
    if Z.shape != (P0.n, P0.m):
        raise DimensionMismatch(f"Z must be {P0.n} x {P0.m}, got {Z.shape}")
    if not np.all(np.isfinite(Z)):
        raise DimensionMismatch("chart matrix has non-finite entries")
    rows = P0.frame + Z @ P0.normal_frame
    return GrassmannPoint(_orthonormalize_rows(rows))


def to_chart(P: GrassmannPoint, P0: GrassmannPoint) -> np.ndarray:
    """Chart matrix of P around P0; inverse of `from_chart`."""
    _check_same(P, P0)
    A = P.frame @ P0.frame.T
    if np.linalg.det(A) <= CHART_TOL:
        raise OutOfChart("P is not in the chart of P0 (w <= 0)")
    return np.linalg.solve(A, P.frame @ P0.normal_frame.T)


def geodesic(Q: GrassmannPoint, P1: GrassmannPoint, t: float) -> GrassmannPoint:
    """Point at arc length t on the normal geodesic from Q towards P1.

    Each principal pair is rotated by theta_a * t / L, L = distance(Q, P1);
    the standard parameter range is t in [0, L] but any real t evaluates the
    same rotation formula. Raises CutLocus when an angle reaches pi/2 or the
    target orientation is reversed (no minimal in-chart geodesic).
    """
    dec = jordan_decompose(Q, P1)
    if dec.orientation <= 0.0:
        raise CutLocus("target plane is orientation-reversed; no minimal in-chart geodesic")
    angles = dec.pair_angles
    if np.any(angles >= np.pi / 2 - CUT_TOL):
        raise CutLocus("a principal angle reaches pi/2")
    L = float(np.linalg.norm(angles))
    if L == 0.0:
        return GrassmannPoint(dec.left_basis)
    left, right = dec.left_basis, dec.right_basis
    sines = np.sin(angles)
    u = np.zeros_like(left)
    rot = sines > 0.0
    u[rot] = (right[rot] - np.cos(angles[rot])[:, None] * left[rot]) / sines[rot][:, None]
    s = angles * (t / L)
    rows = np.cos(s)[:, None] * left + np.sin(s)[:, None] * u
    return GrassmannPoint(rows)


@dataclass(frozen=True)
class TangentVector:
    """Tangent vector at `base`, as components in an orthonormal coframe."""
    base: GrassmannPoint
    coeffs: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True)
class AdaptedFrames:
    """Frames at P aligned with the principal directions towards P0.

    tangent[c] pairs with normal[c]; the pair carries lambdas[c] = tan of
    the c-th principal angle (zero-padded past min(n, m)).
    """
    tangent: np.ndarray   # (n, n+m) rows spanning P
    normal: np.ndarray    # (m, n+m) rows spanning the complement
    lambdas: np.ndarray   # (m,)


def adapted_frames(P: GrassmannPoint, P0: GrassmannPoint) -> AdaptedFrames:
    """Singular-value-adapted tangent/normal frames of P relative to P0."""
    dec = jordan_decompose(P, P0)
    n, m = P.n, P.m
    p = min(n, m)
    tangent = dec.left_basis
    slot_angle = np.zeros(m)
    slot_angle[:p] = dec.thetas
    formula = [c for c in range(p) if dec.thetas[c] > _ANGLE_SPLIT]
    normal = np.zeros((m, n + m))
    for c in formula:
        normal[c] = (dec.right_basis[c] - dec.mus[c] * tangent[c]) / np.sin(dec.thetas[c])
    known = np.vstack([tangent] + [normal[c][None, :] for c in formula])
    q, _ = np.linalg.qr(known.T, mode="complete")
    pool = q[:, known.shape[0]:].T
    take = 0
    for c in range(m):
        if c < p and c in formula:
            continue
        normal[c] = pool[take]
        take += 1
    return AdaptedFrames(tangent=tangent, normal=normal, lambdas=np.tan(slot_angle))


def hessian_v(P: GrassmannPoint, P0: GrassmannPoint) -> np.ndarray:
    """Hessian of v(., P0) at P as an (nm) x (nm) matrix.

    The basis is the orthonormal coframe attached to `adapted_frames(P, P0)`,
    slot (i, a) flattened row-major to i*m + a.  Entry pattern: v on every
    mixed slot, (1 + 2 lambda_a^2) v on the diagonal slots (a, a), couplings
    lambda_a lambda_b v between (a,a)-(b,b) and between (a,b)-(b,a).
    """
    w = w_pairing(P, P0)
    if w <= CHART_TOL:
        raise OutOfChart("Hessian of v requires P in the chart of P0")
    v = 1.0 / w
    n, m = P.n, P.m
    lam = adapted_frames(P, P0).lambdas
    p = min(n, m)
    M = v * np.eye(n * m)
    idx = lambda i, a: i * m + a
    for c in range(p):
        M[idx(c, c), idx(c, c)] = (1.0 + 2.0 * lam[c] ** 2) * v
    for a in range(p):
        for b in range(p):
            if a == b:
                continue
            M[idx(a, a), idx(b, b)] = lam[a] * lam[b] * v
            M[idx(a, b), idx(b, a)] = lam[a] * lam[b] * v
    return M


def geodesic_velocity(Q: GrassmannPoint, P1: GrassmannPoint, frames: AdaptedFrames) -> TangentVector:
    """Unit initial velocity of the geodesic Q -> P1, in `frames` components.

    coeffs[i, a] is the pairing of the moving-frame derivative with
    frames.normal[a] when the moving frame starts at frames.tangent.
    """
    dec = jordan_decompose(Q, P1)
    if dec.orientation <= 0.0 or np.any(dec.pair_angles >= np.pi / 2 - CUT_TOL):
        raise CutLocus("no minimal in-chart geodesic towards P1")
    angles = dec.pair_angles
    L = float(np.linalg.norm(angles))
    if L == 0.0:
        return TangentVector(Q, np.zeros((Q.n, Q.m)))
    sines = np.sin(angles)
    vel = np.zeros_like(dec.left_basis)
    rot = sines > 0.0
    vel[rot] = (angles[rot] / L)[:, None] * (
        (dec.right_basis[rot] - np.cos(angles[rot])[:, None] * dec.left_basis[rot]) / sines[rot][:, None]
    )
    R = frames.tangent @ dec.left_basis.T
    return TangentVector(Q, R @ (vel @ frames.normal.T))


def in_bjx(P: GrassmannPoint, P0: GrassmannPoint) -> bool:
    """True iff every pairwise sum of principal angles to P0 is below pi/2."""
    dec = jordan_decompose(P, P0)
    if dec.thetas.size == 1:
        return bool(dec.thetas[0] < np.pi / 2)
    return bool(dec.thetas[0] + dec.thetas[1] < np.pi / 2)


def t_embedding(Z: np.ndarray) -> np.ndarray:
    """Radial chart embedding Z -> (v(Z) - 1) Z / |Z|, flattened to R^(nm)."""
    Z = np.asarray(Z, dtype=float)
    nz = float(np.linalg.norm(Z))
    if nz == 0.0:
        return np.zeros(Z.size)
    v = float(np.sqrt(np.linalg.det(np.eye(Z.shape[0]) + Z @ Z.T)))
    return ((v - 1.0) / nz) * Z.ravel()


def t_embedding_inverse(y: np.ndarray, n: int, m: int) -> np.ndarray:
    """Inverse of `t_embedding` by a monotone 1-D root-find on the radius."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size != n * m:
        raise DimensionMismatch(f"expected a vector of length {n * m}, got {y.size}")
    ny = float(np.linalg.norm(y))
    if ny == 0.0:
        return np.zeros((n, m))
    direction = y.reshape(n, m) / ny
    target = 1.0 + ny
    eye = np.eye(n)

    def grow(t: float) -> float:
        return float(np.sqrt(np.linalg.det(eye + (t * t) * (direction @ direction.T)))) - target

    # v(t * direction) >= sqrt(1 + t^2 / p) since the top singular value of a
    # unit-Frobenius matrix is at least 1/sqrt(p); this brackets the root.
    p = min(n, m)
    hi = float(np.sqrt(p) * np.sqrt(target * target - 1.0)) + 1.0
    try:
        t0 = brentq(grow, 0.0, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    except ValueError as exc:  # pragma: no cover - bracket is guaranteed
        raise InversionFailure(str(exc)) from exc
    return t0 * direction


# ---------------------------------------------------------------------------
# sampling helpers (vectorised; used by the shrinking module and the tests)

def random_point(n: int, m: int, rng: np.random.Generator) -> GrassmannPoint:
    """Haar-ish random oriented plane from a Gaussian row span."""
    return GrassmannPoint(_orthonormalize_rows(rng.standard_normal((n, n + m))))


def chart_v(Zs: np.ndarray) -> np.ndarray:
    """Batched v = sqrt(det(I + Z Z^T)) for Zs of shape (..., n, m)."""
    Zs = np.asarray(Zs, dtype=float)
    n = Zs.shape[-2]
    gram = np.eye(n) + np.einsum("...ia,...ja->...ij", Zs, Zs)
    return np.sqrt(np.linalg.det(gram))


def chart_thetas(Zs: np.ndarray) -> np.ndarray:
    """Batched principal angles to the chart center: arctan of singular values."""
    return np.arctan(np.linalg.svd(np.asarray(Zs, dtype=float), compute_uv=False))


def sample_chart_sublevel(
    n: int, m: int, v_bound: float, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Rejection-sample chart matrices with v(Z) <= v_bound, uniform in the box.

    The box |Z_ij| <= sqrt(v_bound^2 - 1) contains the whole sublevel set,
    so rejection sampling covers it without needing the invariant measure.
    """
    if v_bound < 1.0:
        raise ValueError("v_bound must be >= 1")
    half = float(np.sqrt(max(v_bound * v_bound - 1.0, 0.0)))
    if half == 0.0:
        return np.zeros((count, n, m))
    out = np.empty((count, n, m))
    filled = 0
    rate = 0.25
    while filled < count:
        draw = int(min(2_000_000, max(1024, 1.2 * (count - filled) / rate)))
        Zs = rng.uniform(-half, half, size=(draw, n, m))
        keep = Zs[chart_v(Zs) <= v_bound]
        rate = max(keep.shape[0] / draw, 1e-3)
        take = min(count - filled, keep.shape[0])
        out[filled : filled + take] = keep[:take]
        filled += take
    return out
