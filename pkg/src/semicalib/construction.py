"""Pointwise construction of the compatible triple (J, g_J, calibration).

Given a metric g and a 2-form omega at a point, the construction runs:
endomorphism -> paired spectrum -> band split -> positive square root Q on V
-> almost complex structure J = Q^{-1} A on V, rotation pairing on the
complement -> compatible metric g_J -> projected form + complement symplectic
form, summed into the induced calibration.  The result is a compatible triple:
g_J(v, w) = Omega(v, J w), J^2 = -Id, and every plane calibrated by omega in
(R^n, g) is calibrated by the induced form in (R^n, g_J).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ConstructionError, NotPositiveDefiniteError
from .forms import Frame, MetricTensor, TwoForm, gram_schmidt, orthonormality_defect, plane_area
from .spectral import (
    Endomorphism,
    PairedSpectrum,
    SpaceSplit,
    associated_endomorphism,
    infer_epsilon,
    paired_spectrum,
    split_spaces,
)

_TINY = 1e-300


@dataclass(frozen=True, eq=False)
class PointConstruction:
    """Everything the construction produces at a single point.

    ``q`` lives on V only, expressed in the paired-basis coordinates;
    ``j`` is the full almost complex structure in ambient coordinates;
    ``omega_total`` is exactly ``omega1 + omega2`` as stored.
    """

    split: SpaceSplit
    q: Endomorphism
    j: Endomorphism
    g_j: MetricTensor
    omega1: TwoForm
    omega2: TwoForm
    omega_total: TwoForm
    tframe: Frame
    residuals: dict
    endo: Endomorphism
    spectrum: PairedSpectrum

    @property
    def dim(self) -> int:
        return self.j.dim

    @property
    def epsilon(self) -> float:
        return self.split.epsilon


@dataclass(frozen=True, eq=False)
class OddLift:
    """Odd-dimensional data embedded into one extra flat dimension.

    The added direction is g-orthonormal to everything, the form does not see
    it, and all lifted data is constant along it.
    """

    original_dim: int
    lifted_g: MetricTensor
    lifted_omega: TwoForm


def sqrt_on_v(split: SpaceSplit) -> Endomorphism:
    """Positive square root of -A^2 restricted to V, in paired coordinates.

    In the paired basis the square root is exactly block diagonal with blocks
    sqrt(lambda_i) * I_2, so it is built from the split's eigenvalues instead
    of a general matrix square root.
    """
    lams = split.v_eigenvalues
    if np.any(lams <= 0.0):
        raise ConstructionError("zero eigenvalue inside V contradicts a valid split")
    return Endomorphism(np.diag(np.repeat(np.sqrt(lams), 2)))


def _basis_matrix(split: SpaceSplit) -> np.ndarray:
    """Columns: interleaved V pairs followed by the complement frame."""
    rows = np.vstack([split.v_basis.vectors, split.perp_basis.vectors])
    n = split.dim
    if rows.shape != (n, n):
        raise ConstructionError(
            f"split bases do not form a full basis (got {rows.shape[0]} vectors in dimension {n})"
        )
    return rows.T


def almost_complex_structure(endo: Endomorphism, q: Endomorphism, split: SpaceSplit) -> Endomorphism:
    """J = Q^{-1} A on V, extended by t_{2k-1} -> t_{2k} rotations on the complement."""
    n = endo.dim
    m = split.m
    k = len(split.perp_basis)
    if k % 2:
        raise ConstructionError("complement frame has odd length; cannot pair it")
    if q.dim != 2 * m:
        raise ConstructionError("square-root block does not match the split")
    P = _basis_matrix(split)
    Pinv = np.linalg.inv(P)
    coords = Pinv @ endo.matrix @ P
    jc = np.zeros((n, n))
    if m:
        jc[: 2 * m, : 2 * m] = np.linalg.solve(q.matrix, coords[: 2 * m, : 2 * m])
    for i in range(k // 2):
        a, b = 2 * m + 2 * i, 2 * m + 2 * i + 1
        jc[b, a] = 1.0   # J t_{2i+1} = t_{2i+2}
        jc[a, b] = -1.0  # J t_{2i+2} = -t_{2i+1}
    return Endomorphism(P @ jc @ Pinv)


def compatible_metric(
    omega: TwoForm,
    j: Endomorphism,
    split: SpaceSplit,
    g: MetricTensor,
    pd_tol: float = DEFAULT_TOLERANCES.pd,
) -> MetricTensor:
    """The metric omega(v, J w) on V, zero across the split, g on the complement."""
    n = g.dim
    m = split.m
    P = _basis_matrix(split)
    Pinv = np.linalg.inv(P)
    BV = split.v_basis.vectors
    T = split.perp_basis.vectors
    blocks = np.zeros((n, n))
    if m:
        mv = BV @ omega.entries @ (j.matrix @ BV.T)
        blocks[: 2 * m, : 2 * m] = (mv + mv.T) / 2
    if len(T):
        blocks[2 * m :, 2 * m :] = T @ g.entries @ T.T
    try:
        return MetricTensor(Pinv.T @ blocks @ Pinv, pd_tol)
    except NotPositiveDefiniteError as exc:
        raise ConstructionError(f"compatible metric is not positive definite: {exc}") from exc


def assemble_calibration(
    omega: TwoForm,
    split: SpaceSplit,
    g_j: MetricTensor,
    tframe: Frame,
    ortho_tol: float = DEFAULT_TOLERANCES.ortho,
) -> tuple[TwoForm, TwoForm, TwoForm]:
    """(projected form, complement symplectic form, their sum).

    The projected form agrees with omega on V x V and vanishes whenever an
    argument lies in the complement; the complement part wedges the g_J-dual
    covectors of consecutive tframe vectors, in frame order.
    """
    n = omega.dim
    if len(tframe) != n - 2 * split.m or tframe.dim != n:
        raise ValueError("tframe does not match the complement of the split")
    if len(tframe) % 2:
        raise ValueError("tframe must pair up; odd length")
    defect = orthonormality_defect(g_j, tframe)
    scale = max(float(np.abs(g_j.entries).max()), 1.0)
    if defect > ortho_tol * scale:
        raise ValueError(f"tframe is not g_J-orthonormal (defect {defect:.3g})")

    P = _basis_matrix(replace(split, perp_basis=tframe))
    Pinv = np.linalg.inv(P)
    sel = np.zeros(n)
    sel[: 2 * split.m] = 1.0
    proj = P @ np.diag(sel) @ Pinv
    omega1 = TwoForm(proj.T @ omega.entries @ proj)

    w2 = np.zeros((n, n))
    GJ = g_j.entries
    for i in range(len(tframe) // 2):
        a = GJ @ tframe[2 * i]
        b = GJ @ tframe[2 * i + 1]
        w2 += np.outer(a, b) - np.outer(b, a)
    omega2 = TwoForm(w2)
    total = TwoForm(omega1.entries + omega2.entries)
    return omega1, omega2, total


def lift_odd(g: MetricTensor, omega: TwoForm) -> OddLift:
    """Embed odd-dimensional data into n+1 flat dimensions."""
    n = g.dim
    if g.dim != omega.dim:
        raise ValueError("metric and two-form dimensions disagree")
    if n % 2 == 0:
        raise ValueError(f"dimension {n} is already even; nothing to lift")
    G = np.eye(n + 1)
    G[:n, :n] = g.entries
    W = np.zeros((n + 1, n + 1))
    W[:n, :n] = omega.entries
    return OddLift(original_dim=n, lifted_g=MetricTensor(G), lifted_omega=TwoForm(W))


def align_frame(hint: Frame, base: Frame, g: MetricTensor) -> Frame:
    """Rotate an orthonormal frame, inside its own span, closest to a hint.

    Orthogonal Procrustes: the overlap matrix between hint and base is reduced
    to its orthogonal polar factor, applied to the base rows, and the result
    re-orthonormalized.
    """
    if len(hint) != len(base):
        raise ValueError("hint and base frames have different sizes")
    if len(base) == 0:
        return base
    overlap = hint.vectors @ g.entries @ base.vectors.T
    u, _, vt = np.linalg.svd(overlap)
    rotated = (u @ vt) @ base.vectors
    return gram_schmidt(g, Frame(rotated))


def _coords_on_v(endo: Endomorphism, split: SpaceSplit) -> np.ndarray:
    P = _basis_matrix(split)
    coords = np.linalg.solve(P, endo.matrix @ P)
    return coords[: 2 * split.m, : 2 * split.m]


def _unit_comass_defect(g_j: MetricTensor, omega_total: TwoForm) -> float:
    """|comass(total form w.r.t. g_J) - 1| via the largest paired eigenvalue."""
    W, GJ = omega_total.entries, g_j.entries
    K = -W @ np.linalg.solve(GJ, W)
    K = (K + K.T) / 2
    lam_max = float(scipy.linalg.eigh(K, GJ, eigvals_only=True)[-1])
    return abs(float(np.sqrt(max(lam_max, 0.0))) - 1.0)


def _point_residuals(
    g: MetricTensor,
    omega: TwoForm,
    endo: Endomorphism,
    spectrum: PairedSpectrum,
    split: SpaceSplit,
    q: Endomorphism,
    j: Endomorphism,
    g_j: MetricTensor,
    omega_total: TwoForm,
    calibrated_tol: float,
) -> dict:
    n = g.dim
    A, G, W = endo.matrix, g.entries, omega.entries
    jm = j.matrix
    wt = omega_total.entries
    w_scale = max(float(np.abs(W).max()), 1.0)

    res: dict[str, float] = {}
    res["j_squared"] = float(np.abs(jm @ jm + np.eye(n)).max())
    res["compatibility"] = float(np.abs(g_j.entries - wt @ jm).max())
    res["j_invariance"] = float(np.abs(jm.T @ wt @ jm - wt).max())
    res["definition"] = float(np.abs(A.T @ G - W).max()) / w_scale
    res["skew_adjoint"] = float(np.abs(A.T @ G + G @ A).max()) / w_scale
    if split.m:
        av = _coords_on_v(endo, split)
        res["commutation"] = float(np.abs(q.matrix @ av - av @ q.matrix).max())
    else:
        res["commutation"] = 0.0

    basis = spectrum.basis()
    res["basis_orthonormality"] = float(np.abs(basis @ G @ basis.T - np.eye(n)).max())

    M = -(A @ A)
    m_scale = max(float(np.abs(M).max()), _TINY)
    eig_res = 0.0
    for lam, pair in zip(spectrum.eigenvalues, spectrum.pair_vectors):
        for v in pair:
            eig_res = max(eig_res, float(np.abs(M @ v - lam * v).max()))
    res["eigen_residual"] = eig_res / m_scale

    res["calibration_unit_comass"] = _unit_comass_defect(g_j, omega_total)

    preserve = 0.0
    for lam, (v, w) in zip(spectrum.eigenvalues, spectrum.pair_vectors):
        if abs(lam - 1.0) <= calibrated_tol:
            ratio = float(v @ wt @ w) / plane_area(g_j, v, w)
            preserve = max(preserve, abs(ratio - 1.0))
    res["preservation"] = preserve

    if split.m:
        BV = split.v_basis.vectors
        dom = BV @ (G - g_j.entries) @ BV.T
        res["metric_domination_min_eig"] = float(np.linalg.eigvalsh((dom + dom.T) / 2)[0])
    else:
        res["metric_domination_min_eig"] = 0.0
    return res


def construct_point(
    g: MetricTensor,
    omega: TwoForm,
    epsilon: float | None = None,
    tframe_hint: Frame | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
    calibrated_tol: float = 1e-8,
) -> PointConstruction:
    """Run the full pointwise construction.

    ``epsilon=None`` uses the automatic policy: the smallest paired eigenvalue
    of -A^2 at this point.  A spectrum with no positive eigenvalue (omega = 0)
    is accepted as the degenerate case; the whole space goes to the complement
    and the calibration is built purely from the complement frame.  A provided
    ``tframe_hint`` is aligned to instead of the default spectral frame.

    Raises :class:`GapViolation` when an eigenvalue falls between the bands.
    """
    if g.dim != omega.dim:
        raise ValueError("metric and two-form dimensions disagree")
    if g.dim % 2:
        raise ValueError(f"dimension {g.dim} is odd; lift the data first")

    endo = associated_endomorphism(g, omega)
    spectrum = paired_spectrum(endo, g, tol)
    if epsilon is None:
        inferred = infer_epsilon(spectrum)
        # Degenerate all-kernel spectrum: any positive epsilon produces the
        # same split, so a fixed sentinel keeps the output deterministic.
        epsilon = inferred if inferred is not None else 1.0
    lam_max = float(spectrum.eigenvalues[0]) if spectrum.npairs else 0.0
    split = split_spaces(spectrum, epsilon, band_slack=tol.cluster * lam_max)

    base = split.perp_basis
    if tframe_hint is not None and len(base) and len(tframe_hint) == len(base):
        tframe = align_frame(tframe_hint, base, g)
    elif len(base):
        tframe = gram_schmidt(g, base)
    else:
        tframe = base
    split = replace(split, perp_basis=tframe)

    q = sqrt_on_v(split)
    j = almost_complex_structure(endo, q, split)
    g_j = compatible_metric(omega, j, split, g, tol.pd)
    omega1, omega2, omega_total = assemble_calibration(omega, split, g_j, tframe, tol.ortho)
    residuals = _point_residuals(
        g, omega, endo, spectrum, split, q, j, g_j, omega_total, calibrated_tol
    )
    return PointConstruction(
        split=split,
        q=q,
        j=j,
        g_j=g_j,
        omega1=omega1,
        omega2=omega2,
        omega_total=omega_total,
        tframe=tframe,
        residuals=residuals,
        endo=endo,
        spectrum=spectrum,
    )
