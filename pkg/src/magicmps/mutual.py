"""Mixed-state SRE and the two-point mutual SRE of uniform MPS.

The mutual SRE of two sites at separation ``r`` (sites between the pair)
is ``L(r) = M̃₂(ρ_AB) − 2 M̃₂(ρ_A)``, built from the mixed-state SRE
``M̃₂(ρ) = M₂(ρ) − S₂(ρ)`` with ``M₂(ρ) = log d − log Σ_P tr(Pρ)⁴`` and
``S₂ = −log tr ρ²``.  The pair density matrix comes from transfer-matrix
powers between the two sites; expanding the transfer matrix in its
eigenmodes gives a closed-form prediction for the decay of L(r), with
per-mode constants that the correlation analysis reports.

Separation convention: ``separation`` counts the sites *between* the two
probes, so adjacent sites have separation 0 and ρ_AB involves the
``separation``-th power of the transfer matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .mps import PAULI, FixedPoints, UniformMps, fixed_points, norm_transfer, transfer_spectrum

__all__ = [
    "MixedSreResult",
    "MsreComponents",
    "TransferModes",
    "AsymptoticFit",
    "mixed_state_sre",
    "single_site_rdm",
    "two_site_rdm",
    "mutual_sre",
    "transfer_modes",
    "asymptotic_constants",
    "predicted_msre",
]

LOG2 = math.log(2.0)

_SITE_LETTERS = "abcdefgh"
_T_LETTERS = "ABCD"


@dataclass(frozen=True)
class MixedSreResult:
    """M₂, the 2-Rényi entropy and their difference for one density matrix."""

    n: int
    m2: float
    s2: float
    m2_tilde: float


def _pauli_correlations(rho: np.ndarray, n: int) -> np.ndarray:
    """tr((σ^{t₁} ⊗ … ⊗ σ^{tₙ}) ρ) for every label string, shape (4,)*n."""
    operands = []
    subs = []
    for k in range(n):
        operands.append(PAULI)
        subs.append(f"{_T_LETTERS[k]}{_SITE_LETTERS[2 * k]}{_SITE_LETTERS[2 * k + 1]}")
    rows = "".join(_SITE_LETTERS[2 * k + 1] for k in range(n))
    cols = "".join(_SITE_LETTERS[2 * k] for k in range(n))
    expr = ",".join(subs) + "," + rows + cols + "->" + _T_LETTERS[:n]
    return np.einsum(expr, *operands, rho.reshape((2,) * (2 * n)))


def mixed_state_sre(rho: np.ndarray) -> MixedSreResult:
    """Mixed-state SRE of a density matrix on up to four qubits.

    The maximally mixed state gives m2_tilde = 0 and a pure state
    reproduces its statevector M₂.  Requires a Hermitian, unit-trace
    matrix whose dimension is a power of two.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise PreconditionError("density matrix must be square")
    d = rho.shape[0]
    n = int(round(math.log2(d)))
    if 2**n != d:
        raise PreconditionError(f"dimension {d} is not a power of 2")
    if n > 4:
        raise PreconditionError(f"mixed-state SRE capped at 4 qubits, got n={n}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise PreconditionError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-8:
        raise PreconditionError("density matrix trace must be 1")

    corr = _pauli_correlations(rho, n)
    if np.max(np.abs(corr.imag)) > 1e-9:
        raise PreconditionError("Pauli correlations are not real")
    s4 = float((corr.real**4).sum())
    purity = float(np.trace(rho @ rho).real)
    m2 = n * LOG2 - math.log(s4)
    s2 = -math.log(purity)
    return MixedSreResult(n=n, m2=m2, s2=s2, m2_tilde=m2 - s2)


# ---------------------------------------------------------------------------
# reduced density matrices of the infinite chain


def single_site_rdm(
    state: UniformMps, fixed: FixedPoints | None = None
) -> np.ndarray:
    """One-site density matrix ⟨l| A^s · A^{s'}† |r⟩ of the infinite chain."""
    fp = fixed or fixed_points(state)
    a = state.tensor
    rho = np.empty((2, 2), dtype=complex)
    for s in range(2):
        for sp in range(2):
            rho[s, sp] = np.trace(fp.l @ a[s] @ fp.r @ a[sp].conj().T)
    return 0.5 * (rho + rho.conj().T)


def two_site_rdm(
    state: UniformMps, separation: int, fixed: FixedPoints | None = None
) -> np.ndarray:
    """Density matrix of two sites with ``separation`` sites between them.

    Exact for any separation: the in-between region enters through a
    matrix power of the transfer matrix (binary powering, so large
    separations stay cheap).
    """
    if separation < 0:
        raise PreconditionError(f"separation must be >= 0, got {separation}")
    fp = fixed or fixed_points(state)
    a = state.tensor
    chi = state.chi
    t = norm_transfer(state)

    # columns: vec(A^{s2} r A^{s2'}†) for the four (s2, s2') pairs
    cols = np.empty((chi * chi, 4), dtype=complex)
    for s2 in range(2):
        for sp2 in range(2):
            cols[:, 2 * s2 + sp2] = (a[s2] @ fp.r @ a[sp2].conj().T).reshape(-1)
    cols = np.linalg.matrix_power(t, separation) @ cols

    rho = np.empty((4, 4), dtype=complex)
    for s1 in range(2):
        for sp1 in range(2):
            for j in range(4):
                mid = cols[:, j].reshape(chi, chi)
                s2, sp2 = divmod(j, 2)
                rho[2 * s1 + s2, 2 * sp1 + sp2] = np.trace(
                    fp.l @ a[s1] @ mid @ a[sp1].conj().T
                )
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-8:
        raise PreconditionError(f"two-site density matrix trace {tr} is not 1")
    return rho / tr


@dataclass(frozen=True)
class MsreComponents:
    """One point of the mutual-SRE curve, split into its two parts.

    total = magic_part + entropy_part, with
    magic_part  = M₂(ρ_AB) − 2 M₂(ρ_A)  and
    entropy_part = 2 S₂(ρ_A) − S₂(ρ_AB).
    """

    separation: int
    total: float
    magic_part: float
    entropy_part: float


def mutual_sre(
    state: UniformMps, separation: int, fixed: FixedPoints | None = None
) -> MsreComponents:
    """The two-point mutual SRE L(r) and its magic/entropy split."""
    fp = fixed or fixed_points(state)
    pair = mixed_state_sre(two_site_rdm(state, separation, fixed=fp))
    one = mixed_state_sre(single_site_rdm(state, fixed=fp))
    magic = pair.m2 - 2.0 * one.m2
    entropy = 2.0 * one.s2 - pair.s2
    return MsreComponents(
        separation=separation,
        total=magic + entropy,
        magic_part=magic,
        entropy_part=entropy,
    )


# ---------------------------------------------------------------------------
# transfer-mode expansion


@dataclass
class TransferModes:
    """Eigen-decomposition of the transfer matrix, resolved into 2×2
    mode density matrices.

    ``lams[i]`` is the i-th eigenvalue (descending modulus, dominant
    first); ``rho_l[i]`` / ``rho_r[i]`` are the left-block and
    right-block matrices whose product reconstructs the two-site density
    matrix: ρ_AB(r) = Σ_i λ_i^r ρl_i ⊗ ρr_i.  The relative scale inside
    each pair is arbitrary; only products are meaningful.
    """

    lams: np.ndarray
    rho_l: list
    rho_r: list
    max_residual: float

    def pair_rdm(self, separation: int) -> np.ndarray:
        rho = np.zeros((4, 4), dtype=complex)
        for lam, bl, br in zip(self.lams, self.rho_l, self.rho_r):
            rho += lam**separation * np.kron(bl, br)
        return rho


def transfer_modes(state: UniformMps) -> TransferModes:
    fp = fixed_points(state)
    a = state.tensor
    chi = state.chi
    spectrum = transfer_spectrum(state)
    lams = np.array([m.eigenvalue for m in spectrum])
    rho_l, rho_r = [], []
    max_res = 0.0
    for mode in spectrum:
        max_res = max(max_res, mode.residual_norm)
        rmat = mode.eigenvector.reshape(chi, chi)
        lrow = mode.left_vector
        bl = np.empty((2, 2), dtype=complex)
        br = np.empty((2, 2), dtype=complex)
        for s in range(2):
            for sp in range(2):
                bl[s, sp] = np.trace(fp.l @ a[s] @ rmat @ a[sp].conj().T)
                br[s, sp] = lrow @ (a[s] @ fp.r @ a[sp].conj().T).reshape(-1)
        rho_l.append(bl)
        rho_r.append(br)
    return TransferModes(lams=lams, rho_l=rho_l, rho_r=rho_r, max_residual=max_res)


@dataclass
class AsymptoticFit:
    """Decay constants of the mutual-SRE curve.

    To leading order L(r) ≈ log(1 + 2 c_s λ₁^r) − log(1 + 2 c_m λ₁^r);
    ``c`` and ``d`` hold the per-mode first-order constants
    (L_S ≈ log(1 + 2 Σ c_i λ_i^r), L_M ≈ −log(1 + 4 Σ d_i λ_i^r),
    so c_m = 2 d₁), and ``c2``/``e2`` the second-order coefficient
    matrices used by :func:`predicted_msre`.  Eigenvalues within 1e-8 of
    the subleading modulus are treated as one degenerate group when
    forming c_s and c_m.
    """

    lambdas: np.ndarray
    c: np.ndarray
    d: np.ndarray
    c2: np.ndarray = field(repr=False)
    e2: np.ndarray = field(repr=False)
    c_s: float
    c_m: float
    lambda1_abs: float
    xi: float
    max_residual: float


def asymptotic_constants(
    state: UniformMps, modes: TransferModes | None = None
) -> AsymptoticFit:
    """Mode-resolved decay constants of L(r) from the transfer spectrum."""
    modes = modes or transfer_modes(state)
    fp = fixed_points(state)
    rho_a = single_site_rdm(state, fixed=fp)
    purity = float(np.trace(rho_a @ rho_a).real)
    tau = np.array(
        [np.trace(PAULI[p] @ rho_a) for p in range(4)], dtype=complex
    ).real
    s4 = float((tau**4).sum())

    keep = [
        i
        for i in range(1, len(modes.lams))
        if abs(modes.lams[i]) > 1e-14
    ]
    lams = modes.lams[keep]
    n_m = len(keep)
    alpha = np.empty((n_m, 4), dtype=complex)
    beta = np.empty((n_m, 4), dtype=complex)
    ovl_l = np.empty(n_m, dtype=complex)
    ovl_r = np.empty(n_m, dtype=complex)
    for row, i in enumerate(keep):
        bl, br = modes.rho_l[i], modes.rho_r[i]
        alpha[row] = [np.trace(PAULI[p] @ bl) for p in range(4)]
        beta[row] = [np.trace(PAULI[p] @ br) for p in range(4)]
        ovl_l[row] = np.trace(rho_a @ bl)
        ovl_r[row] = np.trace(rho_a @ br)

    c = ovl_l * ovl_r / purity**2
    d = (alpha @ tau**3) * (beta @ tau**3) / s4**2

    # second-order coefficients (the entropy part is then exact; the magic
    # part drops only O(λ^{3r}) terms)
    gram_l = np.empty((n_m, n_m), dtype=complex)
    gram_r = np.empty((n_m, n_m), dtype=complex)
    for i, ki in enumerate(keep):
        for j, kj in enumerate(keep):
            gram_l[i, j] = np.trace(modes.rho_l[ki] @ modes.rho_l[kj])
            gram_r[i, j] = np.trace(modes.rho_r[ki] @ modes.rho_r[kj])
    c2 = gram_l * gram_r / purity**2
    wa = alpha * tau[None, :] ** 2
    wb = beta * tau[None, :] ** 2
    e2 = 6.0 * (wa @ alpha.T) * (wb @ beta.T) / s4**2

    if n_m == 0:
        return AsymptoticFit(
            lambdas=lams, c=c, d=d, c2=c2, e2=e2,
            c_s=0.0, c_m=0.0, lambda1_abs=0.0, xi=0.0,
            max_residual=modes.max_residual,
        )
    lead = abs(lams[0])
    if lead >= 1.0 - 1e-9:
        raise PreconditionError(
            f"subleading transfer eigenvalue has modulus {lead:.6f}; the "
            "decay constants are undefined for critical or non-injective states"
        )
    group = np.abs(lams) >= lead - 1e-8
    c_s = float(c[group].sum().real)
    c_m = float(2.0 * d[group].sum().real)
    xi = -1.0 / math.log(lead)
    return AsymptoticFit(
        lambdas=lams, c=c, d=d, c2=c2, e2=e2,
        c_s=c_s, c_m=c_m, lambda1_abs=float(lead), xi=xi,
        max_residual=modes.max_residual,
    )


def predicted_msre(fit: AsymptoticFit, separation: int, order: int = 2) -> float:
    """Predicted L at a given separation from the mode constants.

    ``order=1`` keeps the per-mode linear terms only; ``order=2`` (the
    default) adds the quadratic cross terms, which makes the entropy part
    exact and leaves O(λ₁^{3r}) truncation error in the magic part.
    """
    if order not in (1, 2):
        raise PreconditionError(f"order must be 1 or 2, got {order}")
    if fit.lambdas.size == 0:
        return 0.0
    lr = fit.lambdas**separation
    ps = 2.0 * (fit.c * lr).sum()
    pm = 4.0 * (fit.d * lr).sum()
    if order == 2:
        ps = ps + lr @ fit.c2 @ lr
        pm = pm + lr @ fit.e2 @ lr
    ps, pm = ps.real, pm.real
    if ps <= -1.0 or pm <= -1.0:
        raise PreconditionError(
            f"prediction leaves its domain at separation {separation}; "
            "the expansion only applies once the mode terms are small"
        )
    return math.log1p(ps) - math.log1p(pm)
