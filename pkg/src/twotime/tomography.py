"""Linear-inversion tomography of density vectors.

A density vector on a d-level system has d^4 real parameters (minus
normalization).  The fixed operator family built here pins all of them
with a single complete measurement of 4 d^4 outcomes: for every ordered
pair of matrix units ``O_ij, O_kl`` the four operators::

    (O_ij + O_kl) / sqrt(8 d^3)      variant "+"
    (O_ij - O_kl) / sqrt(8 d^3)      variant "-"
    (O_ij + i O_kl) / sqrt(8 d^3)    variant "+i"
    (O_ij - i O_kl) / sqrt(8 d^3)    variant "-i"

in lexicographic (i, j, k, l) order.  The family is complete
(``sum A^dag A = I`` exactly) and its vectorized positive operators sum
to ``I / d``, so measured probabilities determine the underlying
weights up to the known overall scale ``1/d``.

Inversion ("polarization" method) is closed-form::

    eta[(i,j), (k,l)] = 2 d^2 [ (p_+ - p_-) + i (p_+i - p_-i) ]

followed by symmetrization, eigenvalue clipping to the positive cone,
and trace normalization.  A least-squares route over the explicit
forward map is available as ``method="lstsq"``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import DensityVector, KrausOperator
from .errors import MalformedDataError, PostSelectionImpossibleError, ValidationError
from .measurements import Measurement
from .probability import DENOMINATOR_EPS

__all__ = [
    "VARIANTS",
    "PSD_CLIP_TOL",
    "TomographySet",
    "build_tomography_set",
    "predict_probabilities",
    "reconstruct",
    "sampling_clip_tol",
]

#: The four variants attached to each ordered pair of matrix units.
VARIANTS = ("+", "-", "+i", "-i")

#: Reconstructions whose spectrum dips below -PSD_CLIP_TOL are rejected
#: as malformed rather than silently repaired.
PSD_CLIP_TOL = 1e-6

_VARIANT_PHASES = (1.0, -1.0, 1.0j, -1.0j)


@dataclass(frozen=True, eq=False)
class TomographySet:
    """The informationally complete measurement for one dimension.

    Attributes
    ----------
    dim : int
    measurement : Measurement
        4 d^4 detailed outcomes in lexicographic (i, j, k, l, variant)
        order.
    labels : tuple of (i, j, k, l, variant)
        The label of each outcome, aligned with ``measurement.outcomes``.
    """

    dim: int
    measurement: Measurement
    labels: tuple

    @property
    def n_outcomes(self) -> int:
        return len(self.labels)

    @cached_property
    def _stacked(self) -> np.ndarray:
        # (n_outcomes, d^2) stack of vectorized operators, for the fast
        # prediction path.
        return np.stack(
            [out.kraus[0].entries.reshape(-1) for out in self.measurement.outcomes]
        )


def build_tomography_set(dim: int) -> TomographySet:
    """Build the 4 d^4 operator family for dimension ``dim``.

    Pairs with i = k and j = l include a zero "-" operator; it is kept
    so the count, the ordering, and the per-pair completeness arithmetic
    stay uniform (a zero operator never fires and does not affect
    completeness).
    """
    if dim < 1:
        raise ValidationError(f"dimension must be a positive integer, got {dim!r}")
    d = int(dim)
    scale = 1.0 / np.sqrt(8.0 * d**3)
    ops = []
    labels = []
    for i in range(d):
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    base = np.zeros((d, d), dtype=np.complex128)
                    for phase, variant in zip(_VARIANT_PHASES, VARIANTS):
                        entries = base.copy()
                        entries[i, j] += scale
                        entries[k, l] += phase * scale
                        ops.append(KrausOperator(entries))
                        labels.append((i, j, k, l, variant))
    names = ["({},{})({},{}){}".format(*lab) for lab in labels]
    return TomographySet(
        dim=d,
        measurement=Measurement.detailed(ops, names),
        labels=tuple(labels),
    )


def predict_probabilities(eta: DensityVector, ts: TomographySet) -> np.ndarray:
    """Outcome probabilities of the tomography measurement on ``eta``.

    Equal to ``prob_density(eta, ts.measurement)``; computed through a
    stacked einsum because the family is large.
    """
    if eta.dim != ts.dim:
        raise ValidationError(f"density dim {eta.dim} != tomography dim {ts.dim}")
    v = ts._stacked
    numerators = np.einsum("ma,ab,mb->m", v, eta.mat, v.conj()).real
    numerators = np.where((numerators < 0.0) & (numerators > -1e-12), 0.0, numerators)
    total = float(numerators.sum())
    if total <= DENOMINATOR_EPS:
        raise PostSelectionImpossibleError("tomography outcome weights vanish")
    return numerators / total


def _clip_to_density(raw: np.ndarray, d: int, clip_tol: float) -> DensityVector:
    herm = (raw + raw.conj().T) / 2.0
    lam, w = np.linalg.eigh(herm)
    if float(lam[0]) < -clip_tol:
        raise MalformedDataError(
            f"reconstruction is not positive: min eigenvalue {float(lam[0]):.3e} "
            f"below -{clip_tol}"
        )
    lam = np.clip(lam, 0.0, None)
    total = float(lam.sum())
    if total <= DENOMINATOR_EPS:
        raise MalformedDataError("reconstruction has zero trace after clipping")
    mat = (w * (lam / total)) @ w.conj().T
    return DensityVector((mat + mat.conj().T) / 2.0)


def reconstruct(
    probs: np.ndarray,
    dim: int,
    method: str = "polarization",
    *,
    clip_tol: float = PSD_CLIP_TOL,
) -> DensityVector:
    """Invert tomography probabilities to a density vector.

    Parameters
    ----------
    probs : array_like
        4 d^4 outcome probabilities (or empirical frequencies), ordered
        as produced by :func:`build_tomography_set`; entries must be
        >= -1e-9 and sum to 1 within 1e-9.
    dim : int
        The system dimension d.
    method : {"polarization", "lstsq"}
        Closed-form inversion (default) or least squares over the
        explicit forward map.  On exact data both agree to machine
        precision; on noisy data both end with the same symmetrize /
        clip / renormalize repair.
    clip_tol : float
        Most-negative eigenvalue tolerated before the data is rejected
        as malformed (smaller negatives are clipped to zero).  The
        default suits exact probability lists.  Empirical frequencies
        carry sampling noise of order ``dim**2 / sqrt(successes)`` in
        the eigenvalues, so statistical callers must widen the gate
        accordingly; ``sampling_clip_tol`` computes a safe value.

    Raises
    ------
    MalformedDataError
        On wrong length, negative entries, a bad sum, or data whose
        inversion fails positivity beyond ``clip_tol``.
    """
    d = int(dim)
    if d < 1:
        raise ValidationError(f"dimension must be a positive integer, got {dim!r}")
    p = np.asarray(probs, dtype=np.float64)
    n_expected = 4 * d**4
    if p.ndim != 1 or p.size != n_expected:
        raise MalformedDataError(
            f"expected {n_expected} probabilities for dimension {d}, got shape {p.shape}"
        )
    if not np.all(np.isfinite(p)):
        raise MalformedDataError("probabilities contain non-finite entries")
    if float(p.min()) < -1e-9:
        raise MalformedDataError(f"probabilities contain negative entries (min {p.min():.3e})")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise MalformedDataError(f"probabilities sum to {total!r}, expected 1")

    if method == "polarization":
        p4 = p.reshape(d * d, d * d, 4)
        raw = 2.0 * d * d * ((p4[..., 0] - p4[..., 1]) + 1j * (p4[..., 2] - p4[..., 3]))
    elif method == "lstsq":
        v = build_tomography_set(d)._stacked
        forward = np.einsum("ma,mb->mab", v, v.conj()).reshape(v.shape[0], -1)
        sol, *_ = np.linalg.lstsq(forward, p / d, rcond=None)
        raw = sol.reshape(d * d, d * d)
    else:
        raise ValidationError(f"unknown reconstruction method {method!r}")
    return _clip_to_density(raw, d, float(clip_tol))


def sampling_clip_tol(dim: int, successes: int) -> float:
    """A positivity gate wide enough for frequencies from ``successes`` samples.

    ``10 d^2 / sqrt(successes)``: eigenvalue noise of the raw inversion
    scales like ``d^2`` times the per-outcome frequency error, and the
    factor 10 leaves generous headroom, while genuinely inconsistent
    data (entries from a different state, wrong ordering) still lands
    far outside.  Never below the exact-data default.
    """
    if successes < 1:
        raise ValidationError(f"successes must be >= 1, got {successes!r}")
    return max(PSD_CLIP_TOL, 10.0 * dim * dim / float(successes) ** 0.5)
