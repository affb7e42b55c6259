"""Non-local SRE density: minimum over a shared single-site rotation.

The SRE of a state is not invariant under local basis changes; its
non-local part is the minimum of the density over one SU(2) rotation
applied to every site.  Rotations act cheaply in the Pauli frame: a
single-qubit unitary U maps the transfer-matrix family E^t to
Σ_{t'} O(U)_{tt'} E^{t'} with O the (orthogonal) adjoint representation,
so each trial rotation costs one 4×4 mixing of precomputed matrices plus
a warm-started Arnoldi solve for the dominant eigenvalue.

The minimiser is Nelder-Mead over ZYZ Euler angles with a fixed set of
restarts (identity, a Bloch-frame heuristic, and low-discrepancy points);
the identity start guarantees the reported minimum never exceeds the
unrotated density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize
from scipy.stats import qmc

from .errors import ConvergenceError, PreconditionError
from .linalg import dominant_eig
from .mps import PAULI, UniformMps, build_transfer_set, entanglement_data, normalize
from .engines import BondDmrgConfig, bond_dmrg_sre, dense_d_sre

__all__ = [
    "UnitaryParams",
    "NonlocalResult",
    "RandomEnsembleConfig",
    "EnsembleRecord",
    "EnsembleSummary",
    "euler_unitary",
    "euler_from_unitary",
    "pauli_adjoint",
    "transfer_mixing",
    "rotate_state",
    "rotated_density",
    "nonlocal_sre_density",
    "random_imps",
    "sample_random_imps",
    "ensemble_report",
    "ensemble_summary",
    "pearson_correlation",
]

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class UnitaryParams:
    """ZYZ Euler angles of a single-qubit rotation
    U = exp(iαZ/2) exp(iβY/2) exp(iγZ/2)."""

    alpha: float
    beta: float
    gamma: float

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma])


def euler_unitary(params: UnitaryParams) -> np.ndarray:
    a, b, g = params.alpha, params.beta, params.gamma
    c, s = math.cos(b / 2), math.sin(b / 2)
    return np.array(
        [
            [np.exp(0.5j * (a + g)) * c, np.exp(0.5j * (a - g)) * s],
            [-np.exp(-0.5j * (a - g)) * s, np.exp(-0.5j * (a + g)) * c],
        ]
    )


def euler_from_unitary(u: np.ndarray) -> UnitaryParams:
    """ZYZ angles of a 2×2 unitary (global phase discarded)."""
    u = np.asarray(u, dtype=complex)
    det = np.linalg.det(u)
    if abs(abs(det) - 1.0) > 1e-10:
        raise PreconditionError("matrix is not unitary")
    u = u / np.sqrt(det)
    c, s = abs(u[0, 0]), abs(u[0, 1])
    beta = 2.0 * math.atan2(s, c)
    if s < 1e-12:
        return UnitaryParams(2.0 * float(np.angle(u[0, 0])), beta, 0.0)
    if c < 1e-12:
        return UnitaryParams(2.0 * float(np.angle(u[0, 1])), beta, 0.0)
    plus = float(np.angle(u[0, 0]))
    minus = float(np.angle(u[0, 1]))
    return UnitaryParams(plus + minus, beta, plus - minus)


def pauli_adjoint(u: np.ndarray) -> np.ndarray:
    """O_{tt'} = tr(σ^t U σ^{t'} U†)/2, the real rotation of Pauli labels."""
    o = np.empty((4, 4))
    for t in range(4):
        for tp in range(4):
            val = 0.5 * np.trace(PAULI[t] @ u @ PAULI[tp] @ u.conj().T)
            o[t, tp] = val.real
    return o


# The transfer family weights A^s ⊗ Ā^{s'} by σ^t[s, s'], i.e. by the
# *transpose* of the operator acting in expectation values.  Transposition
# flips the sign of Y only, so the label mixing that implements a physical
# rotation of the stored family is S·O(U)·S with S = diag(1, 1, −1, 1).
_Y_SIGN = np.diag([1.0, 1.0, -1.0, 1.0])


def transfer_mixing(u: np.ndarray) -> np.ndarray:
    """Label mixing M with E^t ↦ Σ_{t'} M_{tt'} E^{t'} under a site rotation."""
    return _Y_SIGN @ pauli_adjoint(u) @ _Y_SIGN


def rotate_state(state: UniformMps, u: np.ndarray) -> UniformMps:
    """Apply one single-qubit unitary to the physical leg of every site."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or np.max(np.abs(u @ u.conj().T - np.eye(2))) > 1e-10:
        raise PreconditionError("rotation must be a 2x2 unitary")
    return UniformMps(np.tensordot(u, state.tensor, axes=(1, 0)))


class _RotatedDensityEvaluator:
    """Dominant eigenvalue of the rotated quartic operator, implicitly.

    Keeps the previous eigenvector as a warm start: successive trial
    rotations during a minimisation differ little, so one short Arnoldi
    cycle (a dozen matvecs) usually converges on the first try.  The
    quartic spectral gap can be mild (|λ1/λ0| up to ~0.9 for random
    states), which makes plain power iteration far too slow here.
    """

    #: Krylov depth of one Arnoldi cycle.
    _KRYLOV = 12

    def __init__(self, state: UniformMps):
        self.e = build_transfer_set(state).e
        self.chi2 = self.e.shape[1]
        self.size = self.chi2**4
        rng = np.random.default_rng(7)
        v = rng.standard_normal(self.size) + 1j * rng.standard_normal(self.size)
        self._warm = v / np.linalg.norm(v)
        self.evaluations = 0
        self.failures = 0

    def _matvec(self, ep: np.ndarray, v: np.ndarray) -> np.ndarray:
        # Apply M⊗M⊗M⊗M for all four labels at once: batched GEMM on one
        # leg, then cycle that leg to the back; four rounds restore order.
        c2 = self.chi2
        y = np.matmul(ep, v.reshape(1, c2, c2**3))
        for _ in range(3):
            y = y.reshape(4, c2, c2, c2, c2).transpose(0, 2, 3, 4, 1)
            y = np.matmul(ep, y.reshape(4, c2, c2**3))
        y = y.reshape(4, c2, c2, c2, c2).transpose(0, 2, 3, 4, 1)
        return y.sum(axis=0).reshape(-1)

    def _arnoldi(self, ep: np.ndarray, tol: float, max_cycles: int):
        """Restarted Arnoldi for the dominant eigenvalue; None if stuck."""
        n = self.size
        k = min(self._KRYLOV, n)
        v = self._warm
        basis = np.empty((k + 1, n), dtype=complex)
        for _ in range(max_cycles):
            hess = np.zeros((k + 1, k), dtype=complex)
            basis[0] = v
            m = k
            invariant = False
            for j in range(k):
                w = self._matvec(ep, basis[j])
                for i in range(j + 1):
                    hij = np.vdot(basis[i], w)
                    hess[i, j] = hij
                    w -= hij * basis[i]
                hnorm = np.linalg.norm(w)
                hess[j + 1, j] = hnorm
                if hnorm <= 1e-14 * np.abs(hess).max():
                    m = j + 1
                    invariant = True
                    break
                basis[j + 1] = w / hnorm
            evals, evecs = np.linalg.eig(hess[:m, :m])
            idx = int(np.argmax(np.abs(evals)))
            theta = complex(evals[idx])
            y = evecs[:, idx]
            vec = y @ basis[:m]
            vec /= np.linalg.norm(vec)
            residual = 0.0 if invariant else abs(hess[m, m - 1]) * abs(y[-1])
            self._warm = v = vec
            if residual <= tol * max(abs(theta), 1e-300):
                return theta
        return None

    def density(self, o: np.ndarray, tol: float = 1e-7) -> float:
        """-log λ0 - log 2 of the label-mixed quartic operator.

        ``tol`` is the relative Arnoldi residual: the loose default is
        plenty for a minimiser to navigate with; reported values should be
        re-evaluated with something near machine precision.
        """
        ep = np.ascontiguousarray(np.einsum("ts,sij->tij", o, self.e))
        lam = self._arnoldi(ep, tol, max_cycles=60)
        if lam is None:
            self.failures += 1
            res = dominant_eig(
                lambda x: self._matvec(ep, x), size=self.size, v0=self._warm
            )
            lam = res.eigenvalue
            self._warm = res.eigenvector / np.linalg.norm(res.eigenvector)
        self.evaluations += 1
        lam_r = complex(lam).real
        if lam_r <= 0:
            # Near a period-2 stabilizer frame the quartic operator carries a
            # near-degenerate ±ρ pair; when the negative member edges ahead it
            # has zero weight in the (positive) Pauli sum, and the density is
            # set by the positive branch this solver does not resolve.
            raise ConvergenceError(
                f"max-modulus eigenvalue {lam} of the rotated quartic operator "
                f"is not positive; this rotation sits on a degenerate frame"
            )
        return -math.log(lam_r) - LOG2


class _BondDmrgDensityEvaluator:
    """Trial-rotation density through the eight-site sweep (any χ).

    Rotates the site tensor and warm-starts each sweep from the previous
    eigenvector MPS.  Orders of magnitude slower than the dense route, but
    the only option above χ=3; a sweep that fails to converge scores +inf
    so the minimiser simply walks away from that rotation.
    """

    def __init__(self, state: UniformMps, cfg: BondDmrgConfig | None = None):
        self.state = state
        self.cfg = cfg or BondDmrgConfig()
        self._warm: list[np.ndarray] | None = None
        self.evaluations = 0
        self.failures = 0

    def density_at(self, x: np.ndarray) -> float:
        rotated = rotate_state(self.state, euler_unitary(UnitaryParams(*x)))
        self.evaluations += 1
        try:
            res = bond_dmrg_sre(rotated, self.cfg, initial=self._warm)
        except ConvergenceError:
            self.failures += 1
            self._warm = None
            return math.inf
        self._warm = res.eigenvector
        return res.density_m2


def rotated_density(state: UniformMps, params: UnitaryParams) -> float:
    """SRE density after rotating every site by the given unitary."""
    ev = _RotatedDensityEvaluator(state)
    return ev.density(transfer_mixing(euler_unitary(params)), tol=1e-12)


@dataclass
class NonlocalResult:
    density_m2: float
    params: UnitaryParams
    identity_density: float
    evaluations: int
    converged: bool


def _bloch_heuristic(state: UniformMps) -> UnitaryParams:
    """Rotation that diagonalises the one-site density matrix."""
    from .mutual import single_site_rdm  # local import: avoids a cycle at import time

    try:
        rho = single_site_rdm(state)
    except PreconditionError:
        return UnitaryParams(0.0, 0.0, 0.0)
    _, vecs = np.linalg.eigh(rho)
    return euler_from_unitary(vecs.conj().T)


def nonlocal_sre_density(
    state: UniformMps,
    engine: str | None = None,
    restarts: int = 12,
    tol: float = 1e-8,
    seed: int = 0,
) -> NonlocalResult:
    """Minimum SRE density over one shared single-site rotation.

    Nelder-Mead from ``restarts`` starting points: the identity, the
    Bloch-frame heuristic, and low-discrepancy Euler triples.  Because the
    identity is always included, the result is bounded above by the
    unrotated density (up to solver tolerance).

    ``engine`` is "dense" (trial rotations mix precomputed transfer
    matrices, χ ≤ 3 only) or "bond-dmrg" (each trial runs the eight-site
    sweep; any χ, much slower).  Default: dense whenever it applies.
    """
    if restarts < 1:
        raise PreconditionError("need at least one restart")
    if engine is None:
        engine = "dense" if state.chi <= 3 else "bond-dmrg"
    if engine == "dense":
        if state.chi > 3:
            raise PreconditionError(
                f"dense rotation search materialises nothing but still walks a "
                f"chi^8 quartic space; capped at chi=3 (got chi={state.chi})"
            )
        ev = _RotatedDensityEvaluator(state)

        def objective(x: np.ndarray) -> float:
            # Loose eigensolves are fine for navigation; minima get re-measured.
            # A rotation whose eigensolve fails scores +inf, same as the
            # bond-DMRG route, so the minimiser simply walks away from it.
            try:
                return ev.density(
                    transfer_mixing(euler_unitary(UnitaryParams(*x))), tol=1e-6
                )
            except ConvergenceError:
                ev.failures += 1
                return math.inf

        def measure(x: np.ndarray) -> float:
            try:
                return ev.density(
                    transfer_mixing(euler_unitary(UnitaryParams(*x))), tol=1e-12
                )
            except ConvergenceError:
                ev.failures += 1
                return math.inf

    elif engine == "bond-dmrg":
        ev = _BondDmrgDensityEvaluator(state)
        objective = measure = ev.density_at
    else:
        raise PreconditionError(f"unknown engine {engine!r}")

    starts = [np.zeros(3), _bloch_heuristic(state).as_array()]
    if restarts > 2:
        sampler = qmc.Halton(d=3, scramble=False, seed=seed)
        sampler.fast_forward(1)  # skip the origin, already covered
        pts = sampler.random(restarts - 2)
        starts.extend(pts * np.array([2 * np.pi, np.pi, 2 * np.pi]))
    starts = starts[:restarts]

    best_val = math.inf
    best_x = np.zeros(3)
    any_success = False
    identity_density = measure(np.zeros(3))
    for x0 in starts:
        res = scipy.optimize.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            # The density is quadratic around a minimum, so angle error δ
            # costs only O(δ²) in value: 3e-5 keeps values good to ~1e-9.
            options={"xatol": 3e-5, "fatol": tol * 1e-2, "maxfev": 120},
        )
        val = measure(res.x)
        if val < best_val:
            best_val = val
            best_x = res.x
            any_success = bool(res.success)
    best_val = min(best_val, identity_density)
    if not math.isfinite(best_val):
        raise ConvergenceError(
            "no trial rotation produced a certified eigenvalue"
        )
    return NonlocalResult(
        density_m2=best_val,
        params=UnitaryParams(*best_x),
        identity_density=identity_density,
        evaluations=ev.evaluations,
        converged=any_success and ev.failures == 0,
    )


# ---------------------------------------------------------------------------
# random ensembles


@dataclass(frozen=True)
class RandomEnsembleConfig:
    """Defines a reproducible ensemble of random uniform MPS.

    ``engine`` routes the per-sample density solves: "dense" (exact
    quartic eigenproblem, χ ≤ 3) or "bond-dmrg"; leaving it None picks
    dense whenever it applies.
    """

    chi: int
    samples: int
    seed: int = 0
    engine: str | None = None

    def __post_init__(self):
        if self.chi < 1:
            raise PreconditionError(f"chi must be >= 1, got {self.chi}")
        if self.samples < 1:
            raise PreconditionError("need at least one sample")
        if self.engine not in (None, "dense", "bond-dmrg"):
            raise PreconditionError(f"unknown engine {self.engine!r}")

    def resolved_engine(self) -> str:
        return self.engine or ("dense" if self.chi <= 3 else "bond-dmrg")


def random_imps(chi: int, seed) -> UniformMps:
    """One normalised uniform MPS with entries r·e^{2πiθ}, r,θ ~ U[0,1)."""
    if chi < 1:
        raise PreconditionError(f"chi must be >= 1, got {chi}")
    rng = np.random.default_rng(seed)
    radius = rng.random((2, chi, chi))
    angle = rng.random((2, chi, chi))
    return normalize(UniformMps(radius * np.exp(2j * np.pi * angle)))


def sample_random_imps(cfg: RandomEnsembleConfig) -> list[UniformMps]:
    """The ensemble's states, one per independent substream of the seed."""
    master = np.random.SeedSequence(cfg.seed)
    return [random_imps(cfg.chi, child) for child in master.spawn(cfg.samples)]


@dataclass(frozen=True)
class EnsembleRecord:
    sample_id: int
    chi: int
    seed: int
    m2: float
    m2_nonlocal: float
    entropy: float
    log_flatness: float
    converged: bool


def ensemble_report(
    cfg: RandomEnsembleConfig,
    restarts: int = 12,
) -> list[EnsembleRecord]:
    """SRE statistics over random normalised uniform MPS.

    Each sample draws from an independent substream of the master seed,
    so records are reproducible regardless of evaluation order.
    """
    engine = cfg.resolved_engine()
    master = np.random.SeedSequence(cfg.seed)
    records = []
    for i, child in enumerate(master.spawn(cfg.samples)):
        state = random_imps(cfg.chi, child)
        if engine == "dense":
            plain = dense_d_sre(state)
        else:
            plain = bond_dmrg_sre(state)
        ent = entanglement_data(state)
        nl = nonlocal_sre_density(
            state, engine=engine, restarts=restarts, seed=cfg.seed + i
        )
        records.append(
            EnsembleRecord(
                sample_id=i,
                chi=cfg.chi,
                seed=cfg.seed,
                m2=plain.density_m2,
                m2_nonlocal=nl.density_m2,
                entropy=ent.entropy,
                log_flatness=ent.log_flatness,
                converged=nl.converged,
            )
        )
    return records


@dataclass(frozen=True)
class EnsembleSummary:
    count: int
    mean_m2: float
    mean_m2_nonlocal: float
    mean_entropy: float
    pearson_nonlocal_flatness: float | None
    histogram_counts: tuple[int, ...]
    histogram_edges: tuple[float, ...]


def ensemble_summary(records: list[EnsembleRecord], bins: int = 20) -> EnsembleSummary:
    """Aggregate view of an ensemble: means, the m̃2-vs-flatness Pearson
    coefficient (None when degenerate, e.g. product ensembles), and an
    m̃2 histogram with the requested binning."""
    if not records:
        raise PreconditionError("no records to summarise")
    m2 = np.array([r.m2 for r in records])
    nl = np.array([r.m2_nonlocal for r in records])
    ent = np.array([r.entropy for r in records])
    flat = np.array([r.log_flatness for r in records])
    try:
        pearson = pearson_correlation(nl, flat)
    except PreconditionError:
        pearson = None
    counts, edges = np.histogram(nl, bins=bins)
    return EnsembleSummary(
        count=len(records),
        mean_m2=float(m2.mean()),
        mean_m2_nonlocal=float(nl.mean()),
        mean_entropy=float(ent.mean()),
        pearson_nonlocal_flatness=pearson,
        histogram_counts=tuple(int(c) for c in counts),
        histogram_edges=tuple(float(e) for e in edges),
    )


def pearson_correlation(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 2:
        raise PreconditionError("correlation needs two equal-length samples, size >= 2")
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        raise PreconditionError("correlation undefined for constant samples")
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))
