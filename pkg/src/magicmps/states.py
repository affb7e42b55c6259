"""Closed-form state families: product, GHZ-like, W, and Dicke states.

Each family comes in three forms that are tested against one another:

* an MPS builder (uniform ring tensor or open chain with boundary caps);
* a dense statevector oracle built directly from the definition;
* a closed-form value of the α=2 stabilizer Rényi entropy where one is
  known (product/GHZ for any angles; W; Dicke k ≤ 3 up to spin flips).

Angles follow the Bloch convention |ψ(θ,φ)⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoClosedFormError, PreconditionError
from .mps import FiniteMps, UniformMps

__all__ = [
    "NamedState",
    "single_qubit_m2",
    "max_magic_angles",
    "MAX_SINGLE_QUBIT_M2",
    "closed_form_sre",
    "build_named_mps",
    "named_statevector",
    "dicke_g_polynomial",
    "sre_density_upper_bound",
    "product_mps",
    "ghz_mps",
    "w_mps",
    "dicke_mps",
    "spin_flip",
]


def single_qubit_m2(theta: float, phi: float) -> float:
    """SRE of cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩ in closed form.

    M₂(θ,φ) = −log[cos⁸(θ/2) + sin⁸(θ/2) + (6 + cos 4φ)/8 · sin⁴θ].
    """
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    inner = c**8 + s**8 + (6.0 + math.cos(4.0 * phi)) / 8.0 * math.sin(theta) ** 4
    return -math.log(inner)


def max_magic_angles() -> tuple[float, float]:
    """(θ_m, φ_m) maximising the single-qubit SRE, evaluated lazily.

    θ_m = 2 arccos √((3−√3)/6), φ_m = π/4; the maximum value is log(3/2).
    """
    theta = 2.0 * math.acos(math.sqrt((3.0 - math.sqrt(3.0)) / 6.0))
    return theta, math.pi / 4.0


MAX_SINGLE_QUBIT_M2 = math.log(1.5)


@dataclass(frozen=True)
class NamedState:
    """Descriptor for a catalogued state family.

    kind ∈ {"product", "ghz", "w", "dicke"}; θ, φ only meaningful for
    product/GHZ, k only for Dicke.
    """

    kind: str
    n: int
    theta: float = 0.0
    phi: float = 0.0
    k: int = 1

    def __post_init__(self):
        if self.kind not in ("product", "ghz", "w", "dicke"):
            raise PreconditionError(f"unknown state kind {self.kind!r}")
        if self.n < 1:
            raise PreconditionError(f"n must be >= 1, got {self.n}")
        if self.kind in ("product", "ghz"):
            if not (0.0 <= self.theta <= math.pi + 1e-12):
                raise PreconditionError(f"theta must lie in [0, pi], got {self.theta}")
            if not (0.0 <= self.phi < 2.0 * math.pi + 1e-12):
                raise PreconditionError(f"phi must lie in [0, 2pi), got {self.phi}")
        if self.kind == "w" and self.n < 2:
            raise PreconditionError("W states need n >= 2")
        if self.kind == "dicke" and not (0 <= self.k <= self.n):
            raise PreconditionError(f"Dicke requires 0 <= k <= n, got k={self.k}")


def closed_form_sre(state: NamedState) -> float:
    """Closed-form M₂ for the catalogued families (see module docstring).

    Product states are additive (n times the single-qubit value); the GHZ
    value is n-independent and equals the single-qubit expression at the
    same angles.  Dicke states are dispatched through the spin-flip map
    k → n−k; outside k ∈ {1, 2, 3} (after flipping) no closed form is known
    and :class:`NoClosedFormError` signals the caller to use a numeric
    engine instead.
    """
    if state.kind == "product":
        return state.n * single_qubit_m2(state.theta, state.phi)
    if state.kind == "ghz":
        return single_qubit_m2(state.theta, state.phi)
    if state.kind == "w":
        return _dicke_closed_form(state.n, 1)
    k = min(state.k, state.n - state.k)
    if k not in (1, 2, 3):
        raise NoClosedFormError(
            f"no closed form for Dicke k={state.k} at n={state.n} "
            "(only k or n-k in {1,2,3}); use a numeric engine"
        )
    return _dicke_closed_form(state.n, k)


def _dicke_closed_form(n: int, k: int) -> float:
    if k == 1:
        if n < 2:
            raise PreconditionError("W/Dicke k=1 closed form needs n >= 2")
        return 3.0 * math.log(n) - math.log(7.0 * n - 6.0)
    if k == 2:
        if n < 4:
            raise PreconditionError("Dicke k=2 closed form needs n >= 4")
        return (
            3.0 * math.log(n * (n - 1))
            - math.log(91.0 * n**2 - 427.0 * n + 492.0)
            - 2.0 * math.log(2.0)
        )
    if k == 3:
        if n < 6:
            raise PreconditionError("Dicke k=3 closed form needs n >= 6")
        return (
            3.0 * math.log(n * (n - 1) * (n - 2))
            - math.log(1645.0 * n**3 - 18921.0 * n**2 + 71708.0 * n - 89244.0)
            - 2.0 * math.log(6.0)
        )
    raise NoClosedFormError(f"no closed form for Dicke k={k}")


def dicke_g_polynomial(k: int, n: int) -> int:
    """Exact integer g_k(n) with M₂(Dicke) = 4 log C(n,k) − log g_k(n).

    Known for k ∈ {1, 2, 3}; evaluated in exact integer arithmetic (the
    rational prefactors always divide out, which is asserted).
    """
    if n < 2 * k:
        raise PreconditionError(f"g polynomial needs n >= 2k, got n={n}, k={k}")
    if k == 1:
        return n * (7 * n - 6)
    if k == 2:
        num = n * (n - 1) * (91 * n**2 - 427 * n + 492)
        if num % 4:
            raise PreconditionError(f"g_2({n}) is not an integer; formula misuse")
        return num // 4
    if k == 3:
        num = n * (n - 1) * (n - 2) * (1645 * n**3 - 18921 * n**2 + 71708 * n - 89244)
        if num % 36:
            raise PreconditionError(f"g_3({n}) is not an integer; formula misuse")
        return num // 36
    raise NoClosedFormError(f"no g polynomial for k={k}")


def sre_density_upper_bound(n: int) -> float:
    """Largest possible SRE density of any n-qubit pure state."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    return (math.log(2.0**n + 1.0) - math.log(2.0)) / n


# ---------------------------------------------------------------------------
# MPS builders


def product_mps(theta: float, phi: float) -> UniformMps:
    """χ=1 uniform tensor of the single-qubit product family."""
    a = np.zeros((2, 1, 1), dtype=complex)
    a[0, 0, 0] = math.cos(theta / 2.0)
    a[1, 0, 0] = math.sin(theta / 2.0) * np.exp(1j * phi)
    return UniformMps(a)


def ghz_mps(theta: float, phi: float, n: int) -> UniformMps:
    """χ=2 ring tensor whose n-site trace is the GHZ-like cat state.

    The cos/sin amplitudes are distributed as n-th roots over the sites so
    the ring is exactly normalised at this specific n (the tensor is
    n-dependent).
    """
    if n < 1:
        raise PreconditionError("ghz ring needs n >= 1")
    c = math.cos(theta / 2.0) ** (1.0 / n)
    s = math.sin(theta / 2.0) ** (1.0 / n)
    a = np.zeros((2, 2, 2), dtype=complex)
    a[0] = np.diag([c, 0.0])
    a[1] = np.diag([0.0, s * np.exp(1j * phi / n)])
    return UniformMps(a)


def _hop_weight(c: int, amp: float) -> float:
    # the overall 1/sqrt(C(n,k)) amplitude is carried by the first raise
    return amp if c == 0 else 1.0


def dicke_mps(n: int, k: int) -> FiniteMps:
    """Open-chain MPS of the Dicke state |D_k^n⟩ (uniform weight-k superposition).

    The bond space is a (k+1)-level counter of how many |1⟩s have been
    emitted so far, truncated near both edges to the window of counts that
    can still reach exactly k by the right end.  Bulk: A⁰ = identity,
    A¹ = counter raise; k > n/2 is served through the spin-flip image.
    """
    if n < 2:
        raise PreconditionError("Dicke chain needs n >= 2")
    if not 0 <= k <= n:
        raise PreconditionError(f"Dicke requires 0 <= k <= n, got k={k}")
    if k > n - k:
        return spin_flip(dicke_mps(n, n - k))
    if k == 0:
        bulk = np.zeros((2, 1, 1), dtype=complex)
        bulk[0, 0, 0] = 1.0
        return FiniteMps(n, bulk, (), ())

    amp = 1.0 / math.sqrt(math.comb(n, k))
    dim = k + 1

    bulk = np.zeros((2, dim, dim), dtype=complex)
    bulk[0] = np.eye(dim)
    for c in range(k):
        bulk[1, c, c + 1] = _hop_weight(c, amp)

    left = []
    for i in range(1, k + 1):  # site i from the left edge; bonds i -> i+1
        cap = np.zeros((2, i, i + 1), dtype=complex)
        for c in range(i):
            cap[0, c, c] = 1.0
            cap[1, c, c + 1] = _hop_weight(c, amp)
        left.append(cap)

    right = []
    for j in range(k, 0, -1):  # j sites remain; incoming counts k-j..k
        cap = np.zeros((2, j + 1, j), dtype=complex)
        base = k - j
        for c in range(base + 1, k + 1):  # survive without another raise
            cap[0, c - base, c - base - 1] = 1.0
        for c in range(base, k):  # raise once more
            cap[1, c - base, c - base] = _hop_weight(c, amp)
        right.append(cap)

    return FiniteMps(n, bulk, tuple(left), tuple(right))


def w_mps(n: int) -> FiniteMps:
    """The W state as a Dicke k=1 chain."""
    if n < 2:
        raise PreconditionError("W states need n >= 2")
    return dicke_mps(n, 1)


def spin_flip(state: UniformMps | FiniteMps) -> UniformMps | FiniteMps:
    """Exchange |0⟩ ↔ |1⟩ on every site."""
    if isinstance(state, UniformMps):
        return UniformMps(state.tensor[::-1])
    return FiniteMps(
        state.n,
        state.bulk[::-1],
        tuple(c[::-1] for c in state.left_caps),
        tuple(c[::-1] for c in state.right_caps),
    )


def build_named_mps(state: NamedState) -> UniformMps | FiniteMps:
    """MPS form of a catalogued state (uniform ring for product/GHZ, open
    chain for W/Dicke)."""
    if state.kind == "product":
        return product_mps(state.theta, state.phi)
    if state.kind == "ghz":
        return ghz_mps(state.theta, state.phi, state.n)
    if state.kind == "w":
        return w_mps(state.n)
    return dicke_mps(state.n, state.k)


# ---------------------------------------------------------------------------
# dense statevector oracles (built from definitions, independent of the MPS)


def named_statevector(state: NamedState) -> np.ndarray:
    """Dense normalised statevector straight from the definition (n ≤ 20)."""
    n = state.n
    if n > 20:
        raise PreconditionError("dense statevectors capped at n=20")
    if state.kind == "product":
        one = np.array(
            [math.cos(state.theta / 2.0), math.sin(state.theta / 2.0) * np.exp(1j * state.phi)]
        )
        psi = one
        for _ in range(n - 1):
            psi = np.kron(psi, one)
        return psi
    if state.kind == "ghz":
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = math.cos(state.theta / 2.0)
        psi[-1] = math.sin(state.theta / 2.0) * np.exp(1j * state.phi)
        return psi
    k = 1 if state.kind == "w" else state.k
    psi = np.zeros(2**n, dtype=complex)
    for idx in range(2**n):
        if idx.bit_count() == k:
            psi[idx] = 1.0
    return psi / np.linalg.norm(psi)
