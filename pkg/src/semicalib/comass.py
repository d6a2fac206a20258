"""Comass computation, power forms, and calibrated-plane testing.

The comass of a degree-2 form is exact: it is the square root of the largest
eigenvalue of -A^2.  For normalized powers (1/p!) omega^p the value on a frame
equals the Pfaffian of the frame's omega-Gram matrix, and the comass is
estimated by direct maximization over random metric-orthonormal frames
followed by a shrinking-step local ascent.  The sampled estimate is a lower
bound of the true comass by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .construction import PointConstruction
from .forms import (
    Frame,
    MetricTensor,
    TwoForm,
    complement_basis,
    eval_two_form,
    gram_schmidt,
)
from .spectral import associated_endomorphism, paired_spectrum

_CHUNK = 25_000
_ASCENT_START = 0.1
_ASCENT_STOP = 1e-6
_ASCENT_PATIENCE = 20
_ASCENT_MAX_ITER = 20_000


@dataclass(frozen=True, eq=False)
class PowerForm:
    """The normalized power (1/p!) omega^p, a form of degree 2p."""

    base: TwoForm
    p: int

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("power must be a positive integer")
        if 2 * self.p > self.base.dim:
            raise ValueError(
                f"degree {2 * self.p} exceeds the ambient dimension {self.base.dim}"
            )

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def degree(self) -> int:
        return 2 * self.p


@dataclass(frozen=True, eq=False)
class CalibrationVerdict:
    """Outcome of testing one oriented plane against a form."""

    ratio: float
    calibrated: bool
    tolerance: float


@dataclass(frozen=True, eq=False)
class ComassEstimate:
    """Comass value with the frame that attains it.

    ``mode`` is "exact" (spectral, degree 2 only) or "sampled" (maximization;
    a lower bound of the true comass).
    """

    value: float
    maximizer: Frame
    samples: int
    restarts: int
    mode: str


def pfaffian(mat) -> float:
    """Pfaffian of an antisymmetric matrix by expansion along the first row."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("pfaffian needs a square matrix")
    return float(_pf_batch(mat[None])[0])


def _pf_batch(mats: np.ndarray) -> np.ndarray:
    """Pfaffians of a batch (..., k, k); recursion is fine for k <= 8."""
    k = mats.shape[-1]
    if k == 0:
        return np.ones(mats.shape[:-2])
    if k % 2:
        return np.zeros(mats.shape[:-2])
    if k == 2:
        return mats[..., 0, 1]
    total = np.zeros(mats.shape[:-2])
    for j in range(1, k):
        minor = np.delete(np.delete(mats, (0, j), axis=-2), (0, j), axis=-1)
        term = mats[..., 0, j] * _pf_batch(minor)
        total += term if (j - 1) % 2 == 0 else -term
    return total


def _form_data(form) -> tuple[np.ndarray, int]:
    if isinstance(form, PowerForm):
        return form.base.entries, form.p
    if isinstance(form, TwoForm):
        return form.entries, 1
    raise TypeError(f"expected TwoForm or PowerForm, got {type(form).__name__}")


def _eval_rows(w: np.ndarray, rows: np.ndarray) -> float:
    gram = rows @ w @ rows.T
    return float(_pf_batch(gram[None])[0])


def eval_power(power: PowerForm, frame: Frame) -> float:
    """Value of (1/p!) omega^p on a 2p-frame: the Pfaffian of [omega(f_i, f_j)]."""
    if frame.dim != power.dim:
        raise ValueError("frame and form dimensions disagree")
    if len(frame) != power.degree:
        raise ValueError(f"frame must have exactly {power.degree} vectors, got {len(frame)}")
    return _eval_rows(power.base.entries, frame.vectors)


def comass_exact(g: MetricTensor, omega: TwoForm) -> ComassEstimate:
    """Exact degree-2 comass: sqrt of the largest eigenvalue of -A^2."""
    endo = associated_endomorphism(g, omega)
    spectrum = paired_spectrum(endo, g)
    if spectrum.npairs == 0:
        return ComassEstimate(0.0, Frame.empty(g.dim), 0, 0, "exact")
    value = float(np.sqrt(spectrum.eigenvalues[0]))
    v, w = spectrum.pair(0)
    return ComassEstimate(value, Frame(np.array([v, w])), 0, 0, "exact")


def _orthonormal_frames(rng, G: np.ndarray, k: int, count: int):
    """Batch of random g-orthonormal k-frames; returns (frames, valid mask)."""
    n = G.shape[0]
    X = rng.standard_normal((count, k, n))
    F = np.empty_like(X)
    FG = np.empty_like(X)
    valid = np.ones(count, dtype=bool)
    for j in range(k):
        v = X[:, j, :].copy()
        for _ in range(2):
            for i in range(j):
                coeff = np.einsum("cn,cn->c", FG[:, i, :], v)
                v -= coeff[:, None] * F[:, i, :]
        vg = v @ G
        norm2 = np.einsum("cn,cn->c", vg, v)
        bad = norm2 <= 1e-24
        valid &= ~bad
        norm = np.sqrt(np.where(bad, 1.0, norm2))
        F[:, j, :] = v / norm[:, None]
        FG[:, j, :] = vg / norm[:, None]
    return F, valid


def _frame_values(w: np.ndarray, frames: np.ndarray) -> np.ndarray:
    gram = np.einsum("cki,ij,clj->ckl", frames, w, frames)
    return _pf_batch(gram)


def _ascend(rng, G: np.ndarray, w: np.ndarray, frames: np.ndarray):
    """Stochastic ascent of |form value| over orthonormal frames, batched.

    Proposals rotate one frame vector toward a random direction orthogonal to
    the whole frame; the step angle halves after 20 consecutive rejections and
    the candidate stops below 1e-6 radians.
    """
    F = frames.copy()
    R, k, n = F.shape
    vals = np.abs(_frame_values(w, F))
    angles = np.full(R, _ASCENT_START)
    rejects = np.zeros(R, dtype=int)
    idx = np.arange(R)
    for _ in range(_ASCENT_MAX_ITER):
        active = angles >= _ASCENT_STOP
        if not active.any():
            break
        rows = rng.integers(0, k, size=R)
        u = rng.standard_normal((R, n))
        for _ in range(2):
            for r in range(k):
                b = F[:, r, :]
                coeff = np.einsum("cn,nm,cm->c", b, G, u)
                u -= coeff[:, None] * b
        norm2 = np.einsum("cn,nm,cm->c", u, G, u)
        ok = norm2 > 1e-24
        u /= np.sqrt(np.where(ok, norm2, 1.0))[:, None]

        trial = F.copy()
        old_rows = F[idx, rows, :]
        trial[idx, rows, :] = (
            np.cos(angles)[:, None] * old_rows + np.sin(angles)[:, None] * u
        )
        new_vals = np.abs(_frame_values(w, trial))
        better = (new_vals > vals) & ok & active
        F[better] = trial[better]
        vals = np.where(better, new_vals, vals)
        rejects = np.where(better, 0, rejects + active.astype(int))
        halve = (rejects >= _ASCENT_PATIENCE) & active
        angles = np.where(halve, angles / 2, angles)
        rejects = np.where(halve, 0, rejects)
    return F, vals


def comass_bruteforce(
    g: MetricTensor,
    form,
    samples: int = 100_000,
    restarts: int = 20,
    seed: int = 0,
) -> ComassEstimate:
    """Sampled comass: random orthonormal frames plus local ascent.

    Deterministic given ``seed`` (PCG64 stream); the result is a lower bound
    of the true comass, pair it with an exact or analytic upper bound.
    Restart candidates are the best sampled frames; results merge by maximum
    with a lexicographic frame tie-break.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    w, p = _form_data(form)
    k = 2 * p
    if w.shape[0] != g.dim:
        raise ValueError("form and metric dimensions disagree")
    G = g.entries
    rng = np.random.default_rng(seed)

    top_frames = np.zeros((0, k, g.dim))
    top_vals = np.zeros(0)
    drawn = 0
    while drawn < samples:
        count = min(_CHUNK, samples - drawn)
        frames, valid = _orthonormal_frames(rng, G, k, count)
        vals = np.where(valid, np.abs(_frame_values(w, frames)), -np.inf)
        keep = min(max(restarts, 1), count)
        part = np.argpartition(-vals, keep - 1)[:keep]
        top_frames = np.concatenate([top_frames, frames[part]])
        top_vals = np.concatenate([top_vals, vals[part]])
        if top_vals.size > max(restarts, 1):
            order = np.argsort(-top_vals, kind="stable")[: max(restarts, 1)]
            top_frames, top_vals = top_frames[order], top_vals[order]
        drawn += count

    finite = np.isfinite(top_vals)
    if not finite.any():
        # all sampled frames degenerate (cannot happen for a PD metric); fall
        # back to coordinate vectors so the estimate stays well-defined
        top_frames = np.eye(g.dim)[:k][None]
        top_vals = np.abs(_frame_values(w, top_frames))
    else:
        top_frames, top_vals = top_frames[finite], top_vals[finite]
    n_restarts = top_frames.shape[0]

    if restarts > 0:
        frames, vals = _ascend(rng, G, w, top_frames)
    else:
        frames, vals = top_frames, top_vals

    best_val = -np.inf
    best_rows: np.ndarray | None = None
    for i in range(frames.shape[0]):
        polished = gram_schmidt(g, Frame(frames[i]))
        rows = np.array(polished.vectors)
        value = _eval_rows(w, rows)
        if value < 0:
            rows[[0, 1]] = rows[[1, 0]]
            value = -value
        if value > best_val or (
            value == best_val
            and best_rows is not None
            and tuple(rows.ravel()) < tuple(best_rows.ravel())
        ):
            best_val, best_rows = value, rows
    return ComassEstimate(
        value=float(best_val),
        maximizer=Frame(best_rows),
        samples=drawn,
        restarts=n_restarts,
        mode="sampled",
    )


def test_calibrated(g: MetricTensor, form, frame: Frame, tol: float = 1e-9) -> CalibrationVerdict:
    """Test whether the oriented plane spanned by a frame is calibrated.

    The frame is g-orthonormalized (orientation preserved), so the metric area
    is 1 and the ratio is the bare form value.
    """
    w, p = _form_data(form)
    if len(frame) != 2 * p:
        raise ValueError(f"frame must have exactly {2 * p} vectors, got {len(frame)}")
    if frame.dim != w.shape[0]:
        raise ValueError("frame and form dimensions disagree")
    onf = gram_schmidt(g, frame)
    ratio = _eval_rows(w, onf.vectors)
    return CalibrationVerdict(ratio=ratio, calibrated=abs(ratio - 1.0) <= tol, tolerance=tol)


def calibrated_eigenspace(pc: PointConstruction, tol: float = 1e-8) -> Frame:
    """g-orthonormal basis of the eigenvalue-1 eigenspace of -A^2.

    Every positively-oriented plane of the shape (v, Av) inside it is
    calibrated by the input form; the frame is empty when no eigenvalue
    reaches 1 (then no plane is calibrated).
    """
    rows = []
    for lam, pair in zip(pc.spectrum.eigenvalues, pc.spectrum.pair_vectors):
        if abs(float(lam) - 1.0) <= tol:
            rows.extend([pair[0], pair[1]])
    if not rows:
        return Frame.empty(pc.dim)
    return Frame(np.array(rows))


def first_cousin_residual(g: MetricTensor, omega: TwoForm, frame: Frame) -> float:
    """Largest |omega(plane vector, t)| over unit t orthogonal to the plane.

    Vanishes on calibrated planes of a unit-comass form: the form cannot be
    first-order increased by tilting a calibrated plane.
    """
    if len(frame) != 2:
        raise ValueError("first-cousin residual is defined for 2-frames")
    plane = gram_schmidt(g, frame)
    comp = complement_basis(g, plane)
    worst = 0.0
    for x in plane:
        for t in comp:
            worst = max(worst, abs(eval_two_form(omega, x, t)))
    return worst
