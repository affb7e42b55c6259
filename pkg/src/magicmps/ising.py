"""Transverse-field Ising chain: ground states and the free-fermion oracle.

Two frames appear throughout.  The spin Hamiltonian handled by the iMPS
solver is

    H  = -h Σ σˣ_i - J Σ σᶻ_i σᶻ_{i+1},

while the exact solution works in the Hadamard-rotated frame

    H' = -h Σ σᶻ_i - J Σ σˣ_i σˣ_{i+1},

where a Jordan-Wigner transformation makes the model quadratic in
fermions.  The Hadamard is a Clifford rotation, so SRE-derived
quantities are identical in the two frames; correlators map x↔z.  All
fermion-oracle functions (Green's functions, correlators, symmetric
reduced density matrices) and the ED oracle report primed-frame values;
``ground_state_imps`` returns a state of the unrotated H.

The oracle route never touches a tensor network: dispersion → Green's
function integrals → Wick determinants → Z2-symmetric density matrices.
It therefore serves as an independent check on every iMPS pipeline, and
it is the only way to reach the symmetric mutual-SRE curves in the
ferromagnetic phase, where a finite-χ variational state spontaneously
breaks the spin-flip symmetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse.linalg as sparse_linalg

from .engines import BondDmrgConfig, bond_dmrg_sre
from .errors import ConvergenceError, PreconditionError
from .mps import PAULI, UniformMps, fixed_points, normalize
from .mutual import MsreComponents, mixed_state_sre, single_site_rdm, two_site_rdm

__all__ = [
    "IsingParams",
    "FermionModes",
    "GreenFns",
    "FermionCorrelators",
    "SymmetricTwoSiteRdm",
    "IsingGroundState",
    "SymmetricCurvePoint",
    "DerivativeScalingFit",
    "EdCorrelators",
    "dispersion",
    "e0_density",
    "fermion_modes",
    "free_fermion_greens",
    "fermion_correlators",
    "symmetric_single_site_rdm",
    "symmetric_two_site_rdm",
    "symmetric_msre_point",
    "symmetric_msre_curve",
    "derivative_scaling_fit",
    "plateau_constant",
    "ed_ground_state",
    "ed_correlators",
    "energy_density",
    "magnetization",
    "ground_state_imps",
    "SweepPoint",
    "sre_density_sweep",
]

_SX = PAULI[1].real
_SZ = PAULI[3].real


@dataclass(frozen=True)
class IsingParams:
    """Couplings of H = -hx Σ σˣ - j Σ σᶻσᶻ (j sets the energy unit)."""

    hx: float
    j: float = 1.0

    def __post_init__(self):
        if not (self.j > 0):
            raise PreconditionError(f"coupling j must be positive, got {self.j}")
        if self.hx < 0:
            raise PreconditionError(f"field hx must be >= 0, got {self.hx}")


def dispersion(p: IsingParams, k: np.ndarray) -> np.ndarray:
    """Quasiparticle energy ε_k = 2√(hx² + j² - 2 hx j cos k)."""
    k = np.asarray(k, dtype=float)
    return 2.0 * np.sqrt(p.hx**2 + p.j**2 - 2.0 * p.hx * p.j * np.cos(k))


def _gauss_nodes(n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on (0, π): 32-point panels."""
    per_panel = 32
    panels = max(1, n_points // per_panel)
    x, w = np.polynomial.legendre.leggauss(per_panel)
    edges = np.linspace(0.0, math.pi, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def e0_density(p: IsingParams, quad_points: int = 4096) -> float:
    """Exact ground-state energy per site, -(1/2π)∫₀^π ε_k dk.

    The integrand is smooth (even at hx = j, where ε_k = 4j sin(k/2)),
    so a modest composite rule is already at machine precision; the
    doubled-rule check guards against a caller passing too few points.
    """
    if quad_points < 64:
        raise PreconditionError("need at least 64 quadrature points")

    def value(npts: int) -> float:
        k, w = _gauss_nodes(npts)
        return -float(w @ dispersion(p, k)) / (2.0 * math.pi)

    coarse, fine = value(quad_points), value(2 * quad_points)
    if abs(fine - coarse) > 1e-10 * max(1.0, abs(fine)):
        raise ConvergenceError(
            f"energy quadrature not converged ({abs(fine - coarse):.2e}); "
            f"raise quad_points"
        )
    return fine


@dataclass(frozen=True)
class FermionModes:
    """Bogoliubov data on a momentum grid (all arrays share the grid's shape).

    y = 2j sin k and z = 2(hx - j cos k) are the pairing and kinetic
    parts, ε = √(y² + z²), and (u, v) the normalised eigenvector of the
    2×2 Bogoliubov block, |u|² + |v|² = 1.
    """

    k: np.ndarray
    y: np.ndarray
    z: np.ndarray
    eps: np.ndarray
    u: np.ndarray
    v: np.ndarray


def fermion_modes(p: IsingParams, k: np.ndarray) -> FermionModes:
    """Mode data at the given momenta (each k in the open interval (0, π))."""
    k = np.asarray(k, dtype=float)
    if np.any((k <= 0) | (k >= math.pi)):
        raise PreconditionError("momenta must lie strictly inside (0, pi)")
    y = 2.0 * p.j * np.sin(k)
    z = 2.0 * (p.hx - p.j * np.cos(k))
    eps = np.hypot(y, z)
    # Half-angle amplitudes u² = (ε+z)/2ε, |v|² = (ε−z)/2ε.  Near the band
    # edges one of ε±z is a tiny difference of near-equal numbers; evaluate it
    # as y²/(ε+|z|) instead, which is the same quantity without cancellation.
    big = eps + np.abs(z)
    small = (y * y) / big
    u = np.sqrt(np.where(z >= 0.0, big, small) / (2.0 * eps))
    v = 1j * np.sign(y) * np.sqrt(np.where(z >= 0.0, small, big) / (2.0 * eps))
    return FermionModes(k=k, y=y, z=z, eps=eps, u=u.astype(complex), v=v)


@dataclass(frozen=True)
class GreenFns:
    """Ground-state Green's functions G(d) = ⟨c_j c_{j+d}†⟩ and
    F(d) = ⟨c_j c_{j+d}⟩, tabulated for |d| ≤ max_range.

    Both depend only on the separation; G is even and F odd in d.  The
    Wick-determinant building block is M_{a,b} = δ_{a,b} - 2(G + F)(a-b).
    """

    params: IsingParams
    g: np.ndarray
    f: np.ndarray
    max_range: int
    quad_error: float

    def green(self, d: int) -> float:
        return float(self.g[abs(d)])

    def anomalous(self, d: int) -> float:
        if d == 0:
            return 0.0
        return float(math.copysign(1.0, d) * self.f[abs(d)])

    def m_entry(self, a: int, b: int) -> float:
        d = a - b
        return (1.0 if d == 0 else 0.0) - 2.0 * (self.green(d) + self.anomalous(d))

    def m_block(self, rows: range, cols: range) -> np.ndarray:
        return np.array([[self.m_entry(a, b) for b in cols] for a in rows])


def free_fermion_greens(
    p: IsingParams, max_range: int, quad_points: int = 2**14
) -> GreenFns:
    """Tabulate G and F up to max_range by composite Gauss-Legendre.

    The returned tables come from the doubled rule; ``quad_error`` is the
    largest entrywise change under doubling, and the call fails if that
    estimate exceeds 1e-8 (raise quad_points — only relevant for very
    large ranges exactly at hx = j, where the oscillatory factors need
    more resolution).
    """
    if max_range < 1:
        raise PreconditionError(f"max_range must be >= 1, got {max_range}")
    if quad_points < 2**10:
        raise PreconditionError("need at least 2^10 quadrature points")

    def tables(npts: int) -> tuple[np.ndarray, np.ndarray]:
        k, w = _gauss_nodes(npts)
        eps = dispersion(p, k)
        zk = 2.0 * (p.hx - p.j * np.cos(k))
        yk = 2.0 * p.j * np.sin(k)
        d = np.arange(max_range + 1)
        phases = np.outer(d, k)
        g = (np.cos(phases) @ (w * zk / eps)) / (2.0 * math.pi)
        f = (np.sin(phases) @ (w * yk / eps)) / (2.0 * math.pi)
        g[0] += 0.5
        return g, f

    g1, f1 = tables(quad_points)
    g2, f2 = tables(2 * quad_points)
    err = max(np.max(np.abs(g1 - g2)), np.max(np.abs(f1 - f2)))
    if err > 1e-8:
        raise ConvergenceError(
            f"Green's-function quadrature error {err:.2e} above 1e-8; "
            f"raise quad_points (was {quad_points})"
        )
    return GreenFns(params=p, g=g2, f=f2, max_range=max_range, quad_error=float(err))


@dataclass(frozen=True)
class FermionCorrelators:
    """Primed-frame spin correlators of two sites at distance j - i."""

    distance: int
    z_single: float
    zz: float
    xx: float
    yy: float


def fermion_correlators(gf: GreenFns, i: int, j: int) -> FermionCorrelators:
    """⟨σᶻ⟩, ⟨σᶻσᶻ⟩, ⟨σˣσˣ⟩, ⟨σʸσʸ⟩ between sites i ≤ j (primed frame).

    zz follows from Wick pairings of the density operators; xx and yy are
    (j-i)×(j-i) determinants over staggered index windows of
    M_{a,b} = δ - 2(G + F).
    """
    if j < i:
        i, j = j, i
    n = j - i
    if n > gf.max_range:
        raise PreconditionError(
            f"separation {n} exceeds tabulated range {gf.max_range}"
        )
    if n > 128:
        raise PreconditionError(f"determinant window {n} above the 128 cap")
    g0 = gf.green(0)
    z_single = 2.0 * (g0 - 0.5)
    if n == 0:
        return FermionCorrelators(
            distance=0, z_single=z_single, zz=1.0, xx=1.0, yy=1.0
        )
    gij = gf.green(n)
    fij = gf.anomalous(i - j)
    zz = 4.0 * (g0 - 0.5) ** 2 + 4.0 * gij * (-gij) + 4.0 * fij * fij
    xx = float(np.linalg.det(gf.m_block(range(i, j), range(i + 1, j + 1))))
    yy = float(np.linalg.det(gf.m_block(range(i + 1, j + 1), range(i, j))))
    return FermionCorrelators(distance=n, z_single=z_single, zz=zz, xx=xx, yy=yy)


# ---------------------------------------------------------------------------
# Z2-symmetric reduced density matrices and mutual-SRE curves


def symmetric_single_site_rdm(gf: GreenFns) -> np.ndarray:
    """ρ_A = (I + ⟨σᶻ⟩σᶻ)/2 in the primed frame."""
    z = 2.0 * (gf.green(0) - 0.5)
    return 0.5 * (np.eye(2, dtype=complex) + z * PAULI[3])


@dataclass(frozen=True)
class SymmetricTwoSiteRdm:
    """Two-probe density matrix of the symmetric (unbroken-Z2) ground state.

    ``pauli_table[α, β]`` holds the coefficient of σ^α ⊗ σ^β; spin-flip
    symmetry and time reversal leave only six nonzero entries (identity,
    two ⟨σᶻ⟩ cross terms, and the three diagonal correlators).
    """

    separation: int
    rho_ab: np.ndarray
    pauli_table: np.ndarray


def symmetric_two_site_rdm(
    p: IsingParams,
    separation: int,
    gf: GreenFns | None = None,
    quad_points: int = 2**14,
) -> SymmetricTwoSiteRdm:
    """Primed-frame ρ_AB for probes with ``separation`` sites between them.

    ``separation`` counts the sites strictly between the probes, so the
    underlying site distance is separation + 1.  Pass a precomputed
    ``gf`` when sweeping many separations at fixed couplings.
    """
    if separation < 0:
        raise PreconditionError(f"separation must be >= 0, got {separation}")
    distance = separation + 1
    if gf is None:
        gf = free_fermion_greens(p, max_range=distance, quad_points=quad_points)
    corr = fermion_correlators(gf, 0, distance)
    table = np.zeros((4, 4))
    table[0, 0] = 1.0
    table[0, 3] = corr.z_single
    table[3, 0] = corr.z_single
    table[1, 1] = corr.xx
    table[2, 2] = corr.yy
    table[3, 3] = corr.zz
    table *= 0.25
    rho = np.zeros((4, 4), dtype=complex)
    for a in range(4):
        for b in range(4):
            if table[a, b] != 0.0:
                rho += table[a, b] * np.kron(PAULI[a], PAULI[b])
    eigs = np.linalg.eigvalsh(rho)
    if eigs.min() < -1e-10:
        raise ConvergenceError(
            f"two-site density matrix not positive (min eigenvalue "
            f"{eigs.min():.2e}); quadrature error too large"
        )
    return SymmetricTwoSiteRdm(separation=separation, rho_ab=rho, pauli_table=table)


def symmetric_msre_point(
    p: IsingParams,
    separation: int,
    gf: GreenFns | None = None,
    quad_points: int = 2**14,
) -> MsreComponents:
    """Mutual SRE of the symmetric ground state at one separation."""
    rdm = symmetric_two_site_rdm(p, separation, gf=gf, quad_points=quad_points)
    if gf is None:
        gf = free_fermion_greens(p, max_range=separation + 1, quad_points=quad_points)
    pair = mixed_state_sre(rdm.rho_ab)
    one = mixed_state_sre(symmetric_single_site_rdm(gf))
    magic = pair.m2 - 2.0 * one.m2
    entropy = 2.0 * one.s2 - pair.s2
    return MsreComponents(
        separation=separation,
        total=magic + entropy,
        magic_part=magic,
        entropy_part=entropy,
    )


@dataclass(frozen=True)
class SymmetricCurvePoint:
    hx: float
    separation: int
    l_total: float
    l_magic: float
    l_entropy: float


def symmetric_msre_curve(
    h_values,
    separations,
    j: float = 1.0,
    quad_points: int = 2**14,
) -> list[SymmetricCurvePoint]:
    """L(ρ_AB) of the symmetric ground state over a (field, separation) grid.

    One Green's-function table per field value serves every separation.
    """
    separations = [int(r) for r in separations]
    if not separations or min(separations) < 0:
        raise PreconditionError("separations must be a non-empty list of r >= 0")
    max_d = max(separations) + 1
    points = []
    for h in h_values:
        p = IsingParams(hx=float(h), j=j)
        gf = free_fermion_greens(p, max_range=max_d, quad_points=quad_points)
        for r in separations:
            comp = symmetric_msre_point(p, r, gf=gf)
            points.append(
                SymmetricCurvePoint(
                    hx=float(h),
                    separation=r,
                    l_total=comp.total,
                    l_magic=comp.magic_part,
                    l_entropy=comp.entropy_part,
                )
            )
    return points


def plateau_constant(l_values) -> float:
    """exp of the tail average of L — the additive offset of the
    symmetric-phase curve, reported without claiming a closed form."""
    arr = np.asarray(list(l_values), dtype=float)
    if arr.size == 0:
        raise PreconditionError("no values to average")
    return float(np.exp(arr.mean()))


@dataclass(frozen=True)
class DerivativeScalingFit:
    """Linear fit of ∂L/∂(hx/j) at the critical point against log r."""

    separations: tuple[int, ...]
    derivatives: tuple[float, ...]
    slope: float
    intercept: float
    r_squared: float


def derivative_scaling_fit(
    separations,
    j: float = 1.0,
    dh: float = 0.01,
    quad_points: int = 2**14,
) -> DerivativeScalingFit:
    """Central-difference ∂L/∂(hx/j) at hx = j, fitted linearly in log r."""
    separations = sorted(int(r) for r in separations)
    if len(separations) < 3:
        raise PreconditionError("need at least three separations to fit")
    if not (0 < dh < 0.5):
        raise PreconditionError(f"dh must be in (0, 0.5), got {dh}")
    derivs = []
    hi = symmetric_msre_curve([j * (1 + dh)], separations, j=j, quad_points=quad_points)
    lo = symmetric_msre_curve([j * (1 - dh)], separations, j=j, quad_points=quad_points)
    for up, down in zip(hi, lo):
        derivs.append((up.l_total - down.l_total) / (2.0 * dh))
    x = np.log(np.asarray(separations, dtype=float))
    y = np.asarray(derivs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 0.0
    return DerivativeScalingFit(
        separations=tuple(separations),
        derivatives=tuple(float(d) for d in derivs),
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
    )


# ---------------------------------------------------------------------------
# exact diagonalisation oracle (primed frame, periodic chain)


def _ed_hamiltonian_matvec(p: IsingParams, n_sites: int):
    dim = 1 << n_sites
    states = np.arange(dim, dtype=np.int64)
    diag = np.zeros(dim)
    for i in range(n_sites):
        diag -= p.hx * (1.0 - 2.0 * ((states >> i) & 1))
    flips = [
        states ^ ((1 << i) | (1 << ((i + 1) % n_sites))) for i in range(n_sites)
    ]

    def matvec(v: np.ndarray) -> np.ndarray:
        out = diag * v
        for idx in flips:
            out -= p.j * v[idx]
        return out

    return matvec, dim


def ed_ground_state(p: IsingParams, n_sites: int) -> tuple[float, np.ndarray]:
    """Ground energy and vector of H' = -h Σ σᶻ - j Σ σˣσˣ, periodic.

    Matrix-free Lanczos on the bit-encoded basis (site i ↔ bit i,
    bit 0 meaning σᶻ = +1), so the oracle shares no code with any
    tensor-network path.
    """
    if not (2 <= n_sites <= 14):
        raise PreconditionError(f"n_sites must be in [2, 14], got {n_sites}")
    matvec, dim = _ed_hamiltonian_matvec(p, n_sites)
    op = sparse_linalg.LinearOperator((dim, dim), matvec=matvec, dtype=float)
    v0 = np.full(dim, 1.0 / math.sqrt(dim))
    vals, vecs = sparse_linalg.eigsh(op, k=1, which="SA", v0=v0, maxiter=5000)
    vec = vecs[:, 0]
    return float(vals[0]), vec / np.linalg.norm(vec)


@dataclass(frozen=True)
class EdCorrelators:
    """Primed-frame correlators of a periodic chain, translation-averaged.

    Arrays are indexed by site distance d = 0 .. max_distance.
    """

    n_sites: int
    z_single: float
    zz: np.ndarray
    xx: np.ndarray
    yy: np.ndarray


def ed_correlators(
    p: IsingParams, n_sites: int, max_distance: int
) -> EdCorrelators:
    """Spin correlators from the ED ground state (averaged over origins)."""
    if max_distance >= n_sites:
        raise PreconditionError(
            f"max_distance {max_distance} must be < n_sites {n_sites}"
        )
    _, psi = ed_ground_state(p, n_sites)
    dim = psi.size
    states = np.arange(dim, dtype=np.int64)
    sz = 1.0 - 2.0 * ((states[:, None] >> np.arange(n_sites)[None, :]) & 1)
    weights = psi * psi
    z_single = float(np.mean(weights @ sz))
    zz = np.empty(max_distance + 1)
    xx = np.empty(max_distance + 1)
    yy = np.empty(max_distance + 1)
    for d in range(max_distance + 1):
        acc_zz = acc_xx = acc_yy = 0.0
        for i in range(n_sites):
            jsite = (i + d) % n_sites
            acc_zz += float(weights @ (sz[:, i] * sz[:, jsite]))
            if d == 0:
                acc_xx += 1.0
                acc_yy += 1.0
            else:
                flipped = states ^ ((1 << i) | (1 << jsite))
                acc_xx += float(psi @ (psi[flipped]))
                acc_yy += float(psi @ (psi[flipped] * (-sz[:, i] * sz[:, jsite])))
        zz[d], xx[d], yy[d] = (
            acc_zz / n_sites,
            acc_xx / n_sites,
            acc_yy / n_sites,
        )
    return EdCorrelators(
        n_sites=n_sites, z_single=z_single, zz=zz, xx=xx, yy=yy
    )


# ---------------------------------------------------------------------------
# iMPS ground-state solver (unprimed frame)


def energy_density(state: UniformMps, p: IsingParams) -> float:
    """⟨H⟩ per site for a normalised uniform MPS."""
    fp = fixed_points(state)
    rho1 = single_site_rdm(state, fixed=fp)
    rho2 = two_site_rdm(state, 0, fixed=fp)
    zz = np.kron(_SZ, _SZ)
    return float(
        -p.hx * np.trace(rho1 @ _SX).real - p.j * np.trace(rho2 @ zz).real
    )


def magnetization(state: UniformMps, axis: str = "z") -> float:
    """Single-site ⟨σ_axis⟩ of a normalised uniform MPS."""
    ops = {"x": PAULI[1], "y": PAULI[2], "z": PAULI[3]}
    if axis not in ops:
        raise PreconditionError(f"axis must be one of x, y, z, got {axis!r}")
    rho = single_site_rdm(state)
    return float(np.trace(rho @ ops[axis]).real)


@dataclass
class IsingGroundState:
    """Converged variational ground state plus its acceptance diagnostics."""

    state: UniformMps
    params: IsingParams
    chi: int
    energy_density: float
    energy_error: float
    magnetization_z: float
    symmetry_broken: bool
    steps: int
    polished: bool
    vidal: tuple = field(default=None, repr=False)


def _two_site_gate(p: IsingParams, dtau: float) -> np.ndarray:
    h2 = -p.j * np.kron(_SZ, _SZ) - 0.5 * p.hx * (
        np.kron(_SX, np.eye(2)) + np.kron(np.eye(2), _SX)
    )
    return scipy.linalg.expm(-dtau * h2)


_ITE_SCHEDULE = (
    (0.1, 1000),
    (0.03, 1000),
    (0.01, 2000),
    (3e-3, 3000),
    (1e-3, 4000),
    (3e-4, 4000),
    (1e-4, 4000),
)


def _bond_update(
    gate: np.ndarray | None,
    gam_l: np.ndarray,
    lam_mid: np.ndarray,
    gam_r: np.ndarray,
    lam_out: np.ndarray,
    chi: int,
    h2: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """One imaginary-time update of the bond carrying ``lam_mid``.

    Returns the new (Γ_left, λ_mid, Γ_right) and the bond energy measured
    on the pre-update wavefunction.
    """
    dl, dr = gam_l.shape[1], gam_r.shape[2]
    theta = np.einsum(
        "l,slm,m,tmr,r->stlr", lam_out, gam_l, lam_mid, gam_r, lam_out
    )
    flat = theta.reshape(4, dl * dr)
    nrm2 = float(np.vdot(flat, flat).real)
    energy = float(np.vdot(flat, h2 @ flat).real / nrm2)
    if gate is not None:
        flat = gate @ flat
    mat = (
        flat.reshape(2, 2, dl, dr).transpose(2, 0, 3, 1).reshape(2 * dl, 2 * dr)
    )
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    keep = min(chi, int(np.sum(s > 1e-14 * s[0])))
    u, s, vt = u[:, :keep], s[:keep], vt[:keep]
    s /= np.linalg.norm(s)
    inv_out = np.where(lam_out > 1e-12, 1.0 / np.maximum(lam_out, 1e-300), 0.0)
    gam_l_new = (inv_out[:, None, None] * u.reshape(dl, 2, keep)).transpose(1, 0, 2)
    gam_r_new = (vt.reshape(keep, dr, 2) * inv_out[None, :, None]).transpose(
        2, 0, 1
    )
    return gam_l_new, s, gam_r_new, energy


def ground_state_imps(
    p: IsingParams,
    chi: int,
    tol: float = 1e-6,
    warm: IsingGroundState | None = None,
) -> IsingGroundState:
    """Variational ground state of H = -hx Σ σˣ - j Σ σᶻσᶻ as a uniform MPS.

    Imaginary-time evolution on alternating bonds with a decreasing step
    schedule (1e-1 → 1e-4), followed, only if the energy contract
    |e - e₀| ≤ tol is missed, by a quasi-Newton polish of the uniform
    tensor.  The initial product state carries a small σᶻ tilt, so in the
    ferromagnetic phase the evolution settles on a symmetry-broken branch
    (flagged via ``symmetry_broken``) instead of an unstable cat state.

    ``warm`` restarts from a previous solution's bond data — intended for
    parameter sweeps, where it skips the coarse evolution stages.
    """
    if chi < 2:
        raise PreconditionError(f"chi must be >= 2, got {chi}")
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    e_exact = e0_density(p)
    h2 = -p.j * np.kron(_SZ, _SZ) - 0.5 * p.hx * (
        np.kron(_SX, np.eye(2)) + np.kron(np.eye(2), _SX)
    )

    if warm is not None and warm.vidal is not None:
        gams = [g.copy() for g in warm.vidal[0]]
        lams = [v.copy() for v in warm.vidal[1]]
        schedule = [stage for stage in _ITE_SCHEDULE if stage[0] <= 0.01]
    else:
        tilt = np.array([math.cos(0.3), math.sin(0.3)])
        gams = [tilt.reshape(2, 1, 1).copy() for _ in range(2)]
        lams = [np.ones(1), np.ones(1)]
        schedule = list(_ITE_SCHEDULE)

    steps = 0
    for dtau, max_steps in schedule:
        gate = _two_site_gate(p, dtau)
        e_prev = math.inf
        for sweep in range(max_steps):
            # bond between Γ0 and Γ1 (carries λ0), then the wrapped bond
            gams[0], lams[0], gams[1], e_a = _bond_update(
                gate, gams[0], lams[0], gams[1], lams[1], chi, h2
            )
            gams[1], lams[1], gams[0], e_b = _bond_update(
                gate, gams[1], lams[1], gams[0], lams[0], chi, h2
            )
            steps += 1
            if sweep % 10 == 9:
                e_now = 0.5 * (e_a + e_b)
                if abs(e_now - e_prev) < 1e-12 * max(1.0, abs(e_now)):
                    break
                e_prev = e_now

    # uniformise: absorb √λ from both sides of Γ0; the two sublattice
    # tensors agree at convergence for this translation-invariant model
    k = min(lams[0].size, lams[1].size)
    lam_a, lam_b = lams[0][:k], lams[1][:k]
    ga = gams[0][:, :k, :k]
    tensor = (
        np.sqrt(lam_b)[None, :, None] * ga * np.sqrt(lam_a)[None, None, :]
    ).astype(complex)
    state = normalize(UniformMps(tensor))
    e_now = energy_density(state, p)
    err = abs(e_now - e_exact)
    polished = False

    if err > tol:
        shape = state.tensor.shape

        def objective(x: np.ndarray) -> float:
            cand = normalize(UniformMps(x.reshape(shape).astype(complex)))
            return energy_density(cand, p)

        res = scipy.optimize.minimize(
            objective,
            state.tensor.real.ravel(),
            method="L-BFGS-B",
            options={"maxiter": 25, "ftol": 1e-14, "gtol": 1e-12},
        )
        cand = normalize(UniformMps(res.x.reshape(shape).astype(complex)))
        e_cand = energy_density(cand, p)
        if e_cand < e_now:
            state, e_now = cand, e_cand
            err = abs(e_now - e_exact)
        polished = True
        if err > tol:
            raise ConvergenceError(
                f"ground-state energy density off by {err:.2e} (> tol {tol:.0e}) "
                f"at hx={p.hx}, chi={chi}",
                iterations=steps,
            )

    mz = magnetization(state, "z")
    return IsingGroundState(
        state=state,
        params=p,
        chi=chi,
        energy_density=e_now,
        energy_error=err,
        magnetization_z=mz,
        symmetry_broken=abs(mz) > 1e-6,
        steps=steps,
        polished=polished,
        vidal=([g.copy() for g in gams], [v.copy() for v in lams]),
    )


# ---------------------------------------------------------------------------
# SRE-density sweep across the transition


@dataclass(frozen=True)
class SweepPoint:
    """One field value of the SRE-density curve, with its diagnostics."""

    hx: float
    chi: int
    density_m2: float
    energy_error: float
    magnetization_z: float
    symmetry_broken: bool
    dmrg_sweeps: int
    truncation_weight: float


def sre_density_sweep(
    h_values,
    chi: int = 8,
    j: float = 1.0,
    kappa: int = 48,
    trunc_tol: float = 1e-4,
    eig_tol: float = 1e-9,
    gs_tol: float = 1e-4,
) -> list[SweepPoint]:
    """SRE density of the Ising ground state over a grid of fields.

    Both stages are warm-started from the previous grid point: the
    imaginary-time evolution restarts from the last bond data, and the
    bond-DMRG from the last dominant-eigenvector MPS (when the ranks
    still match — the ground state sheds bond dimension in the near
    product limits).  A point whose warm start fails to converge is
    retried cold before giving up.
    """
    cfg = BondDmrgConfig(kappa=kappa, sweeps=40, eig_tol=eig_tol, trunc_tol=trunc_tol)
    points: list[SweepPoint] = []
    prev_gs: IsingGroundState | None = None
    prev_vec = None
    for h in h_values:
        p = IsingParams(hx=float(h), j=j)
        try:
            gs = ground_state_imps(p, chi, tol=gs_tol, warm=prev_gs)
        except ConvergenceError:
            if prev_gs is None:
                raise
            gs = ground_state_imps(p, chi, tol=gs_tol)
        chi_now = gs.state.tensor.shape[1]
        warm_vec = prev_vec if prev_vec is not None and prev_vec[0] == chi_now else None
        try:
            res = bond_dmrg_sre(gs.state, cfg, initial=warm_vec[1] if warm_vec else None)
        except ConvergenceError:
            if warm_vec is None:
                raise
            res = bond_dmrg_sre(gs.state, cfg)
        points.append(
            SweepPoint(
                hx=float(h),
                chi=chi_now,
                density_m2=res.density_m2,
                energy_error=gs.energy_error,
                magnetization_z=gs.magnetization_z,
                symmetry_broken=gs.symmetry_broken,
                dmrg_sweeps=int(res.diagnostics["sweeps"]),
                truncation_weight=float(res.diagnostics["truncation_weight"]),
            )
        )
        prev_gs = gs
        prev_vec = (chi_now, res.eigenvector)
    return points
