"""Matrix-product-state containers, transfer operators, and gauge routines.

Conventions used everywhere in the package:

* physical dimension is 2 (qubits); site tensors are indexed ``a[s, i, j]``
  with ``s`` the physical index and ``i → j`` the left → right bond;
* a uniform (translation-invariant, one-site cell) state is a single tensor,
  interpreted either on an infinite chain or, via ``tr(A^{s1}···A^{sn})``, on
  a periodic ring;
* a finite open chain is a translation-invariant bulk tensor plus explicit
  boundary cap tensors whose bond dimensions taper to 1 at the ends;
* the *norm transfer matrix* is ``T = Σ_s A^s ⊗ conj(A^s)`` acting on
  row-major vectorised χ×χ matrices, so ``T vec(X) = vec(Σ_s A^s X A^s†)``;
* "normalised" for a uniform state means the dominant eigenvalue of ``T``
  is 1; finite-state builders normalise ⟨ψ|ψ⟩ = 1 instead.

The single-site Pauli transfer matrices come in three flavours that differ
only by prefactor/basis:

* ``f[0..3]``: the four elementary products A⁰⊗Ā⁰, A⁰⊗Ā¹, A¹⊗Ā⁰, A¹⊗Ā¹.
* ``b[t] = Σ_{s,s'} σ^t_{s s'} A^s ⊗ conj(A^{s'})``: Pauli-weighted transfer
  matrices (``b[0]`` is the norm transfer ``T``).
* ``e[t] = b[t]/√2``: the same in the orthonormal operator basis σ^t/√2,
  which is the natural basis for stabilizer-Rényi sums.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, ParseError, PreconditionError
from .linalg import dominant_eig, full_eig

__all__ = [
    "PAULI",
    "UniformMps",
    "FiniteMps",
    "TransferSet",
    "FixedPoints",
    "CanonicalForm",
    "EntanglementData",
    "norm_transfer",
    "build_transfer_set",
    "normalize",
    "left_canonicalize",
    "right_canonicalize",
    "fixed_points",
    "transfer_spectrum",
    "correlation_length",
    "entanglement_data",
    "gauge_transform",
    "apply_site_unitary",
    "ring_statevector",
    "finite_statevector",
    "save_mps",
    "load_mps",
]

SQRT2 = float(np.sqrt(2.0))

# σ^0..σ^3 = I, X, Y, Z
PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def _as_site_tensor(tensor: np.ndarray, what: str = "tensor") -> np.ndarray:
    t = np.asarray(tensor, dtype=complex)
    if t.ndim != 3 or t.shape[0] != 2 or t.shape[1] != t.shape[2]:
        raise PreconditionError(
            f"{what} must have shape (2, chi, chi), got {t.shape}"
        )
    return t


@dataclass
class UniformMps:
    """A one-site-cell translation-invariant MPS over qubits."""

    tensor: np.ndarray  # (2, chi, chi)

    def __post_init__(self):
        self.tensor = _as_site_tensor(self.tensor)

    @property
    def chi(self) -> int:
        return self.tensor.shape[1]


@dataclass
class FiniteMps:
    """An open chain: explicit boundary caps around a repeated bulk tensor.

    ``left_caps[i]`` has shape (2, d_i, d_{i+1}) with d_0 = 1;
    ``right_caps`` taper symmetrically down to 1.  The bulk tensor fills the
    ``n - len(left_caps) - len(right_caps)`` middle sites (possibly zero of
    them).  Builders are responsible for ⟨ψ|ψ⟩ = 1.
    """

    n: int
    bulk: np.ndarray  # (2, chi, chi)
    left_caps: tuple[np.ndarray, ...]
    right_caps: tuple[np.ndarray, ...]

    def __post_init__(self):
        self.bulk = _as_site_tensor(self.bulk, "bulk")
        self.left_caps = tuple(np.asarray(c, dtype=complex) for c in self.left_caps)
        self.right_caps = tuple(np.asarray(c, dtype=complex) for c in self.right_caps)
        if self.n < 1:
            raise PreconditionError(f"chain length must be >= 1, got {self.n}")
        if self.n < len(self.left_caps) + len(self.right_caps):
            raise PreconditionError(
                f"n={self.n} too short for {len(self.left_caps)}+"
                f"{len(self.right_caps)} boundary caps"
            )
        dim = 1
        for i, cap in enumerate(self.left_caps):
            if cap.ndim != 3 or cap.shape[0] != 2 or cap.shape[1] != dim:
                raise PreconditionError(
                    f"left cap {i} has shape {cap.shape}, expected (2, {dim}, *)"
                )
            dim = cap.shape[2]
        chi = self.bulk.shape[1]
        if self.n > len(self.left_caps) + len(self.right_caps) and dim != chi:
            raise PreconditionError(
                f"left caps end at bond {dim} but bulk has chi={chi}"
            )
        dim_r = 1
        for i, cap in enumerate(reversed(self.right_caps)):
            if cap.ndim != 3 or cap.shape[0] != 2 or cap.shape[2] != dim_r:
                raise PreconditionError(
                    f"right cap {len(self.right_caps)-1-i} has shape {cap.shape}, "
                    f"expected (2, *, {dim_r})"
                )
            dim_r = cap.shape[1]

    def site_tensors(self) -> list[np.ndarray]:
        """The n site tensors in order."""
        n_bulk = self.n - len(self.left_caps) - len(self.right_caps)
        return list(self.left_caps) + [self.bulk] * n_bulk + list(self.right_caps)


@dataclass
class TransferSet:
    """The three families of single-site transfer matrices (see module doc)."""

    e: np.ndarray  # (4, chi^2, chi^2), orthonormal-basis weighted
    b: np.ndarray  # (4, chi^2, chi^2), Pauli weighted = sqrt(2) e
    f: np.ndarray  # (4, chi^2, chi^2), elementary products

    @property
    def chi(self) -> int:
        return int(round(np.sqrt(self.e.shape[1])))


@dataclass
class FixedPoints:
    """Dominant left/right transfer fixed points as χ×χ matrices.

    Both are Hermitian, positive semidefinite, and normalised so that
    ``tr(l @ r) = 1``; ``eigenvalue`` is the dominant transfer eigenvalue
    they belong to.
    """

    l: np.ndarray
    r: np.ndarray
    eigenvalue: float


@dataclass
class CanonicalForm:
    """Left-canonical tensor plus diagonal Schmidt centre.

    ``al`` satisfies Σ_s al[s]† al[s] = I; ``schmidt`` are the descending
    Schmidt probabilities p_i (Σp = 1) of a half-infinite bipartition, and
    ``c = diag(sqrt(p))``.  ``al`` is gauged so its right fixed point is
    exactly diag(p).  ``degenerate_transfer`` marks inputs whose dominant
    transfer eigenvalue is (numerically) non-unique — e.g. cat states —
    for which the Schmidt data refers to the symmetric fixed point.
    """

    al: np.ndarray
    c: np.ndarray
    schmidt: np.ndarray
    degenerate_transfer: bool = False
    iterations: int = 0


@dataclass
class EntanglementData:
    """Half-chain entanglement summary of a uniform state."""

    schmidt: np.ndarray  # descending probabilities
    entropy: float  # von Neumann, natural log
    renyi2: float
    purity: float  # tr rho^2
    tr_rho3: float
    flatness: float  # tr rho^3 - (tr rho^2)^2
    log_flatness: float  # log tr rho^3 - 2 log tr rho^2
    degenerate_transfer: bool = False


# ---------------------------------------------------------------------------
# transfer operators


def norm_transfer(state: UniformMps) -> np.ndarray:
    """T = Σ_s A^s ⊗ conj(A^s), the χ²×χ² norm transfer matrix."""
    a = state.tensor
    return np.kron(a[0], a[0].conj()) + np.kron(a[1], a[1].conj())


def build_transfer_set(state: UniformMps) -> TransferSet:
    """All twelve single-site transfer matrices of a uniform state."""
    a = state.tensor
    f = np.stack(
        [
            np.kron(a[0], a[0].conj()),
            np.kron(a[0], a[1].conj()),
            np.kron(a[1], a[0].conj()),
            np.kron(a[1], a[1].conj()),
        ]
    )
    b = np.stack(
        [
            f[0] + f[3],
            f[1] + f[2],
            -1j * f[1] + 1j * f[2],
            f[0] - f[3],
        ]
    )
    return TransferSet(e=b / SQRT2, b=b, f=f)


def _map_r(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Right action Σ_s A^s X A^s† of the transfer map on a χ×χ matrix."""
    return a[0] @ x @ a[0].conj().T + a[1] @ x @ a[1].conj().T


def _map_l(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Left action Σ_s A^s† X A^s."""
    return a[0].conj().T @ x @ a[0] + a[1].conj().T @ x @ a[1]


def _hermitize(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + x.conj().T)


def _psd_sqrt(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(sqrt, eigenvalues) of a Hermitian PSD matrix, clipping noise."""
    w, v = np.linalg.eigh(_hermitize(x))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T, w


# ---------------------------------------------------------------------------
# normalisation and canonical forms


def normalize(state: UniformMps) -> UniformMps:
    """Rescale so the dominant norm-transfer eigenvalue is exactly 1.

    The dominant eigenvalue of a completely positive transfer map is real
    and positive for any nonzero tensor; a (numerically) zero or complex
    dominant value indicates a degenerate input and is rejected.
    """
    t = norm_transfer(state)
    res = dominant_eig(t)
    lam = res.eigenvalue
    if abs(lam) < 1e-14:
        raise PreconditionError("zero dominant transfer eigenvalue; empty state")
    if abs(lam.imag) > 1e-9 * abs(lam):
        raise PreconditionError(
            f"dominant transfer eigenvalue {lam} is not real; "
            "the tensor does not define a physical state"
        )
    return UniformMps(state.tensor / np.sqrt(lam.real))


def _require_normalized(state: UniformMps, tol: float = 1e-8) -> None:
    lam = dominant_eig(norm_transfer(state)).eigenvalue
    if abs(lam - 1.0) > tol:
        raise PreconditionError(
            f"state is not normalised (dominant transfer eigenvalue {lam}); "
            "call normalize() first"
        )


def _power_fixed_point(
    apply_map, seed: np.ndarray, tol: float = 1e-13, max_iter: int = 10_000
) -> np.ndarray:
    """Power-iterate a CP map from a Hermitian seed until stationary.

    For injective tensors this converges to the unique fixed point from any
    PSD seed; for reducible ones it converges to the projection of the seed
    onto the fixed space, which is exactly the behaviour wanted for cat-like
    states (the seed carries the physical block weights).
    """
    x = _hermitize(seed)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise PreconditionError("zero seed in fixed-point iteration")
    x = x / nx
    for _ in range(max_iter):
        y = _hermitize(apply_map(x))
        ny = np.linalg.norm(y)
        if ny == 0:
            raise PreconditionError("transfer map annihilated the seed")
        y = y / ny
        if np.linalg.norm(y - x) < tol:
            return y
        x = y
    raise ConvergenceError("transfer fixed point did not converge", max_iter)


def left_canonicalize(
    state: UniformMps, tol: float = 1e-12, max_iter: int = 10_000
) -> CanonicalForm:
    """Bring a normalised uniform state to left-canonical form.

    Returns the isometric tensor ``al`` together with the diagonal Schmidt
    centre ``c``; see :class:`CanonicalForm`.  The gauge is computed by an
    iterated-QR orthonormalisation, seeded from the exact left fixed point
    when the plain iteration is slow.  The Schmidt centre is the right fixed
    point of the canonical tensor, transported from the input gauge so that
    reducible (cat-like) inputs keep their physical block weights.
    """
    _require_normalized(state)
    a = state.tensor
    chi = state.chi

    t = norm_transfer(state)
    dom = dominant_eig(t)
    degenerate = dom.degenerate

    x = np.eye(chi, dtype=complex)
    prev = None
    iterations = 0
    refined = False
    while True:
        stacked = (x[None, :, :] @ a).reshape(2 * chi, chi)
        q, r = np.linalg.qr(stacked)
        d = np.diagonal(r).copy()
        d[np.abs(d) < 1e-300] = 1.0
        phase = d / np.abs(d)
        q = q * phase.conj()
        r = phase[:, None].conj() * r
        r = r / np.linalg.norm(r)
        al = q.reshape(2, chi, chi)
        iterations += 1
        if prev is not None and np.linalg.norm(r - prev) < tol:
            x = r
            break
        prev = r
        x = r
        if iterations >= max_iter:
            if refined:
                raise ConvergenceError(
                    "left canonicalisation did not converge; the tensor may "
                    "be non-injective in a way that admits no canonical form",
                    iterations,
                )
            # Fixed-point refinement: restart from sqrt of the exact left
            # fixed point, which jumps straight to the answer for injective
            # tensors with slow transfer mixing.
            l_fp = _power_fixed_point(lambda m: _map_l(a, m), np.eye(chi))
            x, _ = _psd_sqrt(l_fp)
            x = x / np.linalg.norm(x)
            prev = None
            refined = True
            max_iter *= 2

    # Schmidt centre: right fixed point of al, seeded from the input-gauge
    # fixed point transported by the accumulated gauge x.
    r_orig = _power_fixed_point(lambda m: _map_r(a, m), np.eye(chi))
    seed = x @ r_orig @ x.conj().T
    if np.linalg.norm(seed) < 1e-14 * np.linalg.norm(r_orig):
        seed = np.eye(chi, dtype=complex)
    r_l = _power_fixed_point(lambda m: _map_r(al, m), seed)

    w, v = np.linalg.eigh(_hermitize(r_l))
    w = np.clip(w, 0.0, None)
    order = np.argsort(w)[::-1]
    p = w[order]
    p = p / p.sum()
    v = v[:, order]
    al = np.einsum("ij,sjk,kl->sil", v.conj().T, al, v)
    return CanonicalForm(
        al=al,
        c=np.diag(np.sqrt(p)).astype(complex),
        schmidt=p,
        degenerate_transfer=degenerate,
        iterations=iterations,
    )


def right_canonicalize(
    state: UniformMps, tol: float = 1e-12, max_iter: int = 10_000
) -> np.ndarray:
    """Right-canonical tensor (Σ_s ar[s] ar[s]† = I) of a normalised state."""
    mirrored = UniformMps(np.transpose(state.tensor, (0, 2, 1)))
    form = left_canonicalize(mirrored, tol=tol, max_iter=max_iter)
    return np.transpose(form.al, (0, 2, 1))


def fixed_points(state: UniformMps) -> FixedPoints:
    """Dominant left/right fixed points of the norm transfer matrix.

    Requires a normalised state with a unique dominant eigenvalue
    (injective tensor); degenerate spectra are rejected because "the" fixed
    point is then ambiguous.
    """
    _require_normalized(state)
    t = norm_transfer(state)
    res = dominant_eig(t)
    if res.degenerate:
        raise PreconditionError(
            "degenerate dominant transfer eigenvalue; fixed points are not "
            "unique (non-injective state)"
        )
    chi = state.chi
    a = state.tensor
    r = _power_fixed_point(lambda m: _map_r(a, m), np.eye(chi))
    l = _power_fixed_point(lambda m: _map_l(a, m), np.eye(chi))
    # make PSD with positive trace, then normalise the pairing
    r = _hermitize(r)
    l = _hermitize(l)
    if np.trace(r).real < 0:
        r = -r
    if np.trace(l).real < 0:
        l = -l
    pairing = np.trace(l @ r).real
    if pairing <= 0:
        raise PreconditionError("degenerate fixed-point pairing")
    l = l / pairing * np.trace(r).real
    r = r / np.trace(r).real
    return FixedPoints(l=l, r=r, eigenvalue=float(res.eigenvalue.real))


def transfer_spectrum(state: UniformMps) -> list:
    """Full norm-transfer spectrum, descending by modulus."""
    return full_eig(norm_transfer(state))


def correlation_length(state: UniformMps) -> float:
    """ξ = -1/log|λ₁/λ₀| from the two largest transfer eigenvalues.

    Returns 0.0 for χ=1 (no subleading eigenvalue at all) and +inf when the
    subleading modulus is within 1e-9 of the dominant one (critical or
    cat-like states).
    """
    if state.chi == 1:
        return 0.0
    spec = transfer_spectrum(state)
    lam0 = abs(spec[0].eigenvalue)
    lam1 = abs(spec[1].eigenvalue)
    if lam0 == 0:
        raise PreconditionError("zero transfer spectrum")
    ratio = lam1 / lam0
    if ratio >= 1.0 - 1e-9:
        return float("inf")
    if ratio == 0.0:
        return 0.0
    return -1.0 / np.log(ratio)


def entanglement_data(state: UniformMps) -> EntanglementData:
    """Half-chain Schmidt spectrum and flatness measures of a uniform state."""
    form = left_canonicalize(state)
    p = form.schmidt
    nz = p[p > 1e-16]
    entropy = float(-(nz * np.log(nz)).sum())
    tr2 = float((p**2).sum())
    tr3 = float((p**3).sum())
    return EntanglementData(
        schmidt=p,
        entropy=entropy,
        renyi2=float(-np.log(tr2)),
        purity=tr2,
        tr_rho3=tr3,
        flatness=tr3 - tr2**2,
        log_flatness=float(np.log(tr3) - 2.0 * np.log(tr2)),
        degenerate_transfer=form.degenerate_transfer,
    )


# ---------------------------------------------------------------------------
# elementary state surgery


def gauge_transform(state: UniformMps, g: np.ndarray) -> UniformMps:
    """A^s → g A^s g⁻¹ (leaves every physical quantity invariant)."""
    g = np.asarray(g, dtype=complex)
    ginv = np.linalg.inv(g)
    return UniformMps(np.einsum("ij,sjk,kl->sil", g, state.tensor, ginv))


def apply_site_unitary(state: UniformMps, u: np.ndarray) -> UniformMps:
    """Apply the same single-qubit operator to every site: A^s → Σ u_{ss'} A^{s'}."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise PreconditionError(f"site operator must be 2x2, got {u.shape}")
    return UniformMps(np.tensordot(u, state.tensor, axes=(1, 0)))


# ---------------------------------------------------------------------------
# dense statevectors (for oracles and small-n work)


def ring_statevector(state: UniformMps, n: int) -> np.ndarray:
    """⟨s₁…s_n|ψ⟩ = tr(A^{s₁}···A^{s_n}) on a periodic ring, normalised."""
    if n < 1:
        raise PreconditionError("ring length must be >= 1")
    if n > 20:
        raise PreconditionError(f"dense ring statevector capped at n=20, got {n}")
    g = state.tensor
    for _ in range(n - 1):
        g = np.einsum("...ab,sbc->...sac", g, state.tensor)
    psi = np.trace(g, axis1=-2, axis2=-1).reshape(-1)
    norm = np.linalg.norm(psi)
    if norm < 1e-300:
        raise PreconditionError("ring statevector has zero norm")
    return psi / norm


def finite_statevector(state: FiniteMps) -> np.ndarray:
    """Dense statevector of an open finite chain, normalised."""
    if state.n > 20:
        raise PreconditionError(f"dense statevector capped at n=20, got {state.n}")
    tensors = state.site_tensors()
    psi = tensors[0][:, 0, :]  # (2, d1)
    for t in tensors[1:]:
        psi = np.einsum("...a,sab->...sb", psi, t)
    psi = psi[..., 0].reshape(-1)
    norm = np.linalg.norm(psi)
    if norm < 1e-300:
        raise PreconditionError("finite statevector has zero norm")
    return psi / norm


# ---------------------------------------------------------------------------
# serialisation


_FMT_UNIFORM = "magicmps-uniform-v1"
_FMT_FINITE = "magicmps-finite-v1"


def _encode_array(a: np.ndarray) -> list:
    """Nested lists of [re, im] pairs (innermost axis)."""
    stacked = np.stack([a.real, a.imag], axis=-1)
    return stacked.tolist()


def _decode_array(data, what: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: not a numeric array") from exc
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ParseError(f"{what}: expected [re, im] pairs on the last axis")
    return arr[..., 0] + 1j * arr[..., 1]


def save_mps(state: UniformMps | FiniteMps, path: str | Path) -> None:
    """Write a state to a JSON file (complex entries as [re, im] pairs)."""
    if isinstance(state, UniformMps):
        doc = {
            "format": _FMT_UNIFORM,
            "phys_dim": 2,
            "chi": state.chi,
            "tensors": _encode_array(state.tensor),
        }
    elif isinstance(state, FiniteMps):
        doc = {
            "format": _FMT_FINITE,
            "phys_dim": 2,
            "chi": state.bulk.shape[1],
            "n": state.n,
            "tensors": _encode_array(state.bulk),
            "left_caps": [_encode_array(c) for c in state.left_caps],
            "right_caps": [_encode_array(c) for c in state.right_caps],
        }
    else:
        raise PreconditionError(f"cannot serialise {type(state)!r}")
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_mps(path: str | Path) -> UniformMps | FiniteMps:
    """Load a state written by :func:`save_mps`.

    Raises :class:`ParseError` for malformed files and lets the dataclass
    validators reject structurally inconsistent tensors.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read MPS file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("MPS file must contain a JSON object")
    fmt = doc.get("format")
    if fmt == _FMT_UNIFORM:
        required = {"tensors"}
    elif fmt == _FMT_FINITE:
        required = {"tensors", "n", "left_caps", "right_caps"}
    else:
        raise ParseError(f"unknown MPS format tag {fmt!r}")
    missing = required - doc.keys()
    if missing:
        raise ParseError(f"MPS file missing keys: {sorted(missing)}")
    if doc.get("phys_dim", 2) != 2:
        raise ParseError("only phys_dim=2 is supported")
    tensor = _decode_array(doc["tensors"], "tensors")
    try:
        if fmt == _FMT_UNIFORM:
            return UniformMps(tensor)
        left = tuple(
            _decode_array(c, f"left_caps[{i}]") for i, c in enumerate(doc["left_caps"])
        )
        right = tuple(
            _decode_array(c, f"right_caps[{i}]")
            for i, c in enumerate(doc["right_caps"])
        )
        return FiniteMps(int(doc["n"]), tensor, left, right)
    except PreconditionError as exc:
        raise ParseError(f"inconsistent tensors in MPS file: {exc}") from exc
