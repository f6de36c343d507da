"""Hermiticity classification and the imaginary gauge transformation.

A lattice operator built from a static metric with nonuniform β is not
hermitian, but it satisfies η H η⁻¹ = H† with the positive diagonal metric
operator η = diag(β_n)⊗I₂ (quasi-hermiticity), which certifies a real
spectrum constructively.  The similarity S H S⁻¹ with S = diag(√β_n)⊗I₂ — a
gauge transformation with imaginary angles θ_n = (i/2)log β_n — maps it to
an explicitly hermitian matrix with the same spectrum (isospectral, not
unitarily equivalent).

The PT test (site reversal composed with a spinor rotation and complex
conjugation) is reported alongside: plain site reversal alone does not close
the algebra for site-dependent onsite profiles, so the best residual over
spinor factors {I, σ_x, σ_y, σ_z} is recorded together with which factor won.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .metric import SampledMetric
from .operator import LatticeOperator
from .spectral import SpectralDecomposition, eig_general

CLASSIFICATIONS = ("Hermitian", "QuasiHermitian", "PTPseudoHermitian", "NonHermitian")

_PT_SPINORS = {
    "I": np.eye(2, dtype=complex),
    "sigma_x": np.array([[0, 1], [1, 0]], dtype=complex),
    "sigma_y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "sigma_z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class SymmetryError(Exception):
    """Invalid input to a symmetry transformation."""


@dataclass
class SymmetryReport:
    """Residuals of the three symmetry tests and the resulting class.

    Precedence: Hermitian > QuasiHermitian > PTPseudoHermitian > NonHermitian
    (the first residual at or below ``tol`` wins).
    """

    hermitian_residual: float
    quasi_hermitian_residual: float
    pt_residual: float
    pt_spinor: str
    classification: str
    spectrum_real: bool
    tol: float

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(asdict(self), indent=indent, sort_keys=True)


def _as_matrix(H) -> np.ndarray:
    return H.matrix if isinstance(H, LatticeOperator) else np.asarray(H, dtype=complex)


def _diag_similarity(A: np.ndarray, s: np.ndarray) -> np.ndarray:
    """diag(s) A diag(s)⁻¹ with guards for horizon-divergent scale factors.

    Exactly-zero entries of A stay exactly zero (decoupled horizon rows and
    columns), and the diagonal ratio is pinned to 1, so the analytic limits
    0·inf → 0 and inf/inf → 1 are taken instead of producing NaN.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.outer(s, 1.0 / s)
        np.fill_diagonal(ratio, 1.0)
        out = np.where(A == 0.0, 0.0, A * ratio)
    if not np.all(np.isfinite(out)):
        raise SymmetryError("divergent scale factor on a coupled entry")
    return out


def imaginary_gauge(H: LatticeOperator, beta: np.ndarray) -> LatticeOperator:
    """Similarity S H S⁻¹ with S = diag(√β_n)⊗I₂ (isospectral rescaling).

    For operators built from static metrics this returns the hermitian
    partner; for the uniform Hatano-Nelson-like chain (Weyl, r=0, M=0) the
    asymmetric hoppings e^{±qa/2}/(2a) collapse to the uniform 1/(2a).
    """
    beta = np.asarray(beta, dtype=float)
    A = _as_matrix(H)
    if 2 * beta.shape[0] != A.shape[0]:
        raise SymmetryError(f"beta length {beta.shape[0]} does not match operator {A.shape}")
    if np.any(beta <= 0):
        raise SymmetryError("imaginary gauge transform requires beta > 0 at all sites")
    s = np.repeat(np.sqrt(beta), 2)
    out = _diag_similarity(A, s)
    return LatticeOperator(
        matrix=out,
        t=H.t,
        bc=H.bc,
        mass=H.mass,
        spacing=H.spacing,
        provenance=f"gauge:{H.provenance}",
    )


def _relative_residual(delta: np.ndarray, scale: float) -> float:
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(delta) / scale)


def _pt_image(A: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """P H* P with P = (site reversal) ⊗ sigma."""
    L = A.shape[0] // 2
    B = A.conj().reshape(L, 2, L, 2)[::-1, :, ::-1, :]
    return np.einsum("ab,ibjc,cd->iajd", sigma, B, sigma).reshape(2 * L, 2 * L)


def classify(
    H: LatticeOperator,
    metric: SampledMetric,
    tol: float = 1e-12,
    decomposition: SpectralDecomposition | None = None,
    spectrum_tol: float = 1e-8,
) -> SymmetryReport:
    """Classify the operator and report all three residuals.

    The quasi-hermiticity test uses the constructive metric operator
    η = diag(β_n)⊗I₂ from the sampled metric.  ``decomposition`` (when the
    caller already has one) avoids recomputing the spectrum for the
    ``spectrum_real`` field.  Always returns a report, never raises on a
    nonhermitian input.
    """
    A = _as_matrix(H)
    scale = float(np.linalg.norm(A))
    Ah = A.conj().T
    herm = _relative_residual(A - Ah, scale)
    try:
        eta = np.repeat(np.asarray(metric.beta, dtype=float), 2)
        quasi = _relative_residual(_diag_similarity(A, eta) - Ah, scale)
    except SymmetryError:
        quasi = np.inf
    pt_best, pt_name = np.inf, "I"
    for name, sigma in _PT_SPINORS.items():
        res = _relative_residual(A - _pt_image(A, sigma), scale)
        if res < pt_best:
            pt_best, pt_name = res, name
    if herm <= tol:
        label = "Hermitian"
    elif quasi <= tol:
        label = "QuasiHermitian"
    elif pt_best <= tol:
        label = "PTPseudoHermitian"
    else:
        label = "NonHermitian"
    if decomposition is None:
        decomposition = eig_general(H, compute_vectors=False)
    return SymmetryReport(
        hermitian_residual=herm,
        quasi_hermitian_residual=float(quasi),
        pt_residual=float(pt_best),
        pt_spinor=pt_name,
        classification=label,
        spectrum_real=unbroken_pt(H, decomposition, tol=spectrum_tol),
        tol=tol,
    )


def unbroken_pt(H, decomposition: SpectralDecomposition, tol: float = 1e-8) -> bool:
    """True when the spectrum is real at tolerance: max|Im E| <= tol·max|E|."""
    ev = decomposition.eigenvalues
    if ev.size == 0:
        raise SymmetryError("empty spectrum")
    return bool(np.max(np.abs(ev.imag)) <= tol * np.max(np.abs(ev)))
