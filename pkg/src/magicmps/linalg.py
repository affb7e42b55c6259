"""Dense/iterative linear-algebra kernels used throughout the package.

Everything here wraps LAPACK (via numpy) or ARPACK (via scipy) behind small,
contract-tested entry points so the physics modules never talk to backends
directly.  Conventions:

* matrices are complex numpy arrays unless stated otherwise;
* "dominant" means largest modulus, ties broken towards larger real part;
* returned eigenvectors have unit 2-norm and the phase fixed so that the
  entry of largest modulus is real and positive (deterministic output for
  equivalent inputs).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse.linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator

from .errors import ConvergenceError, PreconditionError

__all__ = [
    "SpectralResult",
    "svd",
    "dominant_eig",
    "full_eig",
    "kron",
    "kron_all",
]

# Relative window within which two eigenvalue magnitudes count as tied.
_DEGENERACY_RTOL = 1e-10

# Below this size a dense np.linalg.eig is faster and more robust than ARPACK.
# 256 keeps every chi=2 quartic operator on the LAPACK path, where strongly
# non-normal similarity transforms cannot stall the iteration.
_DENSE_CUTOFF = 256

# Hard cap on full_eig problem sizes (full spectra of larger operators are
# never needed here and would silently eat the memory budget).
_FULL_EIG_CAP = 4096


@dataclass
class SpectralResult:
    """One (eigenvalue, right eigenvector) pair with solver diagnostics.

    ``left_vector`` (a row vector, ``l @ m = eigenvalue * l``) is populated
    by :func:`full_eig` and normalised so that ``l @ eigenvector == 1``;
    iterative paths leave it ``None``.  ``degenerate`` is set when another
    eigenvalue of equal modulus (within a relative window of 1e-10) exists,
    in which case "the" dominant pair is still well-defined by the
    real-part tie-break but downstream code may want to know.
    """

    eigenvalue: complex
    eigenvector: np.ndarray
    residual_norm: float
    iterations: int
    left_vector: np.ndarray | None = field(default=None, repr=False)
    degenerate: bool = False


def svd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``m = u @ diag(s) @ vh`` with a gesvd fallback.

    numpy's default driver (gesdd) very occasionally fails to converge on
    ill-conditioned inputs; scipy's gesvd is slower but does not.  Singular
    values come back descending and non-negative as usual.
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise PreconditionError(f"svd expects a matrix, got shape {m.shape}")
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate a vector's global phase so its largest-|entry| is real > 0."""
    idx = int(np.argmax(np.abs(v)))
    pivot = v[idx]
    if pivot == 0:
        return v
    return v * (abs(pivot) / pivot)


def _order_eigenvalues(w: np.ndarray) -> np.ndarray:
    """Indices sorting eigenvalues by (|w| desc, Re w desc, Im w desc)."""
    return np.lexsort((-w.imag, -w.real, -np.abs(w)))


def _as_matvec(
    op: np.ndarray | LinearOperator | Callable[[np.ndarray], np.ndarray],
    size: int | None,
) -> tuple[Callable[[np.ndarray], np.ndarray], int, np.ndarray | None]:
    """Normalise the operator argument to (matvec, size, dense_or_None)."""
    if isinstance(op, np.ndarray):
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise PreconditionError(
                f"dominant_eig expects a square operator, got shape {op.shape}"
            )
        return (lambda v: op @ v), op.shape[0], op
    if isinstance(op, LinearOperator):
        return (lambda v: op @ v), op.shape[0], None
    if callable(op):
        if size is None:
            raise PreconditionError("callable operators need an explicit size")
        return op, size, None
    raise PreconditionError(f"unsupported operator type {type(op)!r}")


def _dense_dominant(dense: np.ndarray, matvecs: int) -> SpectralResult:
    w, vr = np.linalg.eig(dense)
    order = _order_eigenvalues(w)
    lam = w[order[0]]
    vec = _fix_phase(vr[:, order[0]] / np.linalg.norm(vr[:, order[0]]))
    degenerate = len(order) > 1 and abs(
        abs(w[order[0]]) - abs(w[order[1]])
    ) <= _DEGENERACY_RTOL * max(1.0, abs(lam))
    residual = float(np.linalg.norm(dense @ vec - lam * vec))
    return SpectralResult(complex(lam), vec, residual, matvecs, degenerate=degenerate)


def _power_iteration(
    matvec: Callable[[np.ndarray], np.ndarray],
    v0: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[complex, np.ndarray, int]:
    """Plain power iteration; returns (eigenvalue, unit vector, iterations).

    The eigenvalue estimate is the (oblique) Rayleigh quotient, which for
    the non-normal operators showing up here converges at the same rate as
    the iterate itself.
    """
    v = v0 / np.linalg.norm(v0)
    lam_old = None
    for it in range(1, max_iter + 1):
        w = matvec(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # v landed in the kernel; the dominant eigenvalue is 0 only for
            # the zero operator, so restart from a perturbed vector.
            v = v + 1e-8
            v /= np.linalg.norm(v)
            continue
        lam = complex(np.vdot(v, w))
        v = w / nw
        if lam_old is not None and abs(lam - lam_old) <= tol * max(1.0, abs(lam)):
            return lam, v, it
        lam_old = lam
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps", iterations=max_iter
    )


def dominant_eig(
    op: np.ndarray | LinearOperator | Callable[[np.ndarray], np.ndarray],
    size: int | None = None,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    v0: np.ndarray | None = None,
) -> SpectralResult:
    """Dominant eigenpair of a (generally non-Hermitian) operator.

    Parameters
    ----------
    op : array, LinearOperator, or matvec callable
        The operator.  Callables must be accompanied by ``size``.
    size : int, optional
        Dimension, required when ``op`` is a bare callable.
    tol : float
        Relative accuracy target for the eigenvalue.
    max_iter : int
        Iteration budget for the Krylov/power phases.
    v0 : array, optional
        Warm-start vector (used by sweep drivers to reuse the previous
        solution; ignored by the small-dense path).

    Notes
    -----
    Dispatch: small dense matrices go straight to LAPACK; larger operators
    use ARPACK (implicitly restarted Arnoldi) and fall back to power
    iteration if ARPACK stagnates.  Ties in modulus are broken towards the
    larger real part and flagged via ``degenerate``.
    """
    matvec_raw, n, dense = _as_matvec(op, size)
    if n == 0:
        raise PreconditionError("dominant_eig of an empty operator")

    count = 0

    def matvec(v: np.ndarray) -> np.ndarray:
        nonlocal count
        count += 1
        return matvec_raw(v)

    if dense is not None and n <= _DENSE_CUTOFF:
        return _dense_dominant(dense, count)
    if n <= 3:
        # ARPACK needs k < n - 1; materialise instead.
        eye = np.eye(n, dtype=complex)
        return _dense_dominant(np.column_stack([matvec(eye[:, j]) for j in range(n)]), count)

    if v0 is None:
        # Deterministic, structureless start vector.
        rng = np.random.default_rng(7)
        start = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    else:
        start = np.asarray(v0, dtype=complex).reshape(n)

    linop = LinearOperator((n, n), matvec=matvec, dtype=complex)
    k = 2 if n >= 4 else 1  # ask for two so degeneracy can be detected
    try:
        w, vr = scipy.sparse.linalg.eigs(
            linop, k=k, which="LM", v0=start, tol=tol, maxiter=max_iter
        )
        order = _order_eigenvalues(w)
        lam = complex(w[order[0]])
        vec = vr[:, order[0]]
        degenerate = len(order) > 1 and abs(abs(w[order[0]]) - abs(w[order[1]])) <= (
            _DEGENERACY_RTOL * max(1.0, abs(lam))
        )
    except ArpackNoConvergence:
        lam, vec, _ = _power_iteration(matvec, start, tol, max_iter)
        degenerate = False

    vec = _fix_phase(vec / np.linalg.norm(vec))
    residual = float(np.linalg.norm(matvec(vec) - lam * vec))
    if residual > max(10 * tol, 1e-9) * max(1.0, abs(lam)):
        # ARPACK "converged" to something loose; refine by power iteration.
        lam, vec, _ = _power_iteration(matvec, vec, tol, max_iter)
        vec = _fix_phase(vec)
        residual = float(np.linalg.norm(matvec(vec) - lam * vec))
    return SpectralResult(lam, vec, residual, count, degenerate=degenerate)


def full_eig(m: np.ndarray) -> list[SpectralResult]:
    """Complete right *and* left eigensystem of a dense square matrix.

    Returns results sorted by descending modulus (real-part tie-break).
    Left vectors are the rows of the inverse eigenvector matrix, i.e. they
    are biorthonormal against the right vectors: ``l_i @ r_j = δ_ij``.  For
    (near-)defective inputs the inverse is still formed — the per-pair
    residual norms expose the loss of accuracy instead of failing silently.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PreconditionError(f"full_eig expects a square matrix, got {m.shape}")
    n = m.shape[0]
    if n > _FULL_EIG_CAP:
        raise PreconditionError(
            f"full_eig capped at {_FULL_EIG_CAP}, got {n}; use dominant_eig"
        )
    w, vr = np.linalg.eig(m)
    try:
        left = np.linalg.inv(vr)
    except np.linalg.LinAlgError:
        left = np.linalg.pinv(vr)

    order = _order_eigenvalues(w)
    mods = np.abs(w[order])
    results: list[SpectralResult] = []
    for rank, idx in enumerate(order):
        lam = complex(w[idx])
        r = vr[:, idx]
        l = left[idx, :]
        # Normalise: unit right vector, fixed phase, then rescale l to keep
        # the biorthonormality l @ r = 1 intact.
        nr = np.linalg.norm(r)
        r = r / nr
        phase_idx = int(np.argmax(np.abs(r)))
        phase = abs(r[phase_idx]) / r[phase_idx]
        r = r * phase
        l = l * nr / phase
        near = np.abs(mods - mods[rank]) <= _DEGENERACY_RTOL * max(1.0, mods[rank])
        residual = float(np.linalg.norm(m @ r - lam * r))
        results.append(
            SpectralResult(
                lam, r, residual, 0, left_vector=l, degenerate=int(near.sum()) > 1
            )
        )
    return results


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product (row-major convention, same as ``np.kron``)."""
    return np.kron(a, b)


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Left-folded Kronecker product of a sequence of matrices."""
    if len(mats) == 0:
        raise PreconditionError("kron_all of an empty sequence")
    out = np.asarray(mats[0])
    for m in mats[1:]:
        out = np.kron(out, m)
    return out
