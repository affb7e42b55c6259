"""magicmps — stabilizer Rényi entropy for translation-invariant MPS.

The package computes the α=2 stabilizer Rényi entropy (SRE) and its density
for matrix-product states, both finite (open or periodic chains built from a
repeated bulk tensor) and directly in the thermodynamic limit, plus the
non-local part of the SRE (minimised over a shared single-qubit frame) and a
two-point mutual SRE with its asymptotic decay analysis.  A free-fermion
oracle for the transverse-field Ising chain is included for validation and
for symmetry-resolved scans near criticality.
"""

from __future__ import annotations

from .engines import (
    BondDmrgConfig,
    PauliImpsConfig,
    SreResult,
    bond_dmrg_sre,
    brute_force_sre,
    build_bond_mpo,
    dense_d_sre,
    finite_mps_sre,
    pauli_imps_sre,
)
from .errors import (
    ConvergenceError,
    MagicMpsError,
    NoClosedFormError,
    ParseError,
    PreconditionError,
)
from .ising import (
    IsingParams,
    e0_density,
    ed_correlators,
    ed_ground_state,
    energy_density,
    derivative_scaling_fit,
    fermion_correlators,
    free_fermion_greens,
    ground_state_imps,
    magnetization,
    sre_density_sweep,
    symmetric_msre_curve,
    symmetric_msre_point,
)
from .mps import (
    FiniteMps,
    UniformMps,
    apply_site_unitary,
    correlation_length,
    entanglement_data,
    finite_statevector,
    gauge_transform,
    load_mps,
    normalize,
    ring_statevector,
    save_mps,
)
from .mutual import (
    AsymptoticFit,
    MsreComponents,
    asymptotic_constants,
    mixed_state_sre,
    mutual_sre,
    predicted_msre,
    single_site_rdm,
    transfer_modes,
    two_site_rdm,
)
from .nonlocal_sre import (
    EnsembleRecord,
    RandomEnsembleConfig,
    ensemble_report,
    ensemble_summary,
    nonlocal_sre_density,
    random_imps,
)
from .states import (
    NamedState,
    build_named_mps,
    closed_form_sre,
    dicke_g_polynomial,
    named_statevector,
    product_mps,
    sre_density_upper_bound,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticFit",
    "BondDmrgConfig",
    "ConvergenceError",
    "EnsembleRecord",
    "FiniteMps",
    "IsingParams",
    "MagicMpsError",
    "MsreComponents",
    "NamedState",
    "NoClosedFormError",
    "ParseError",
    "PauliImpsConfig",
    "PreconditionError",
    "RandomEnsembleConfig",
    "SreResult",
    "UniformMps",
    "apply_site_unitary",
    "asymptotic_constants",
    "bond_dmrg_sre",
    "brute_force_sre",
    "build_bond_mpo",
    "build_named_mps",
    "closed_form_sre",
    "correlation_length",
    "dense_d_sre",
    "derivative_scaling_fit",
    "dicke_g_polynomial",
    "e0_density",
    "ed_correlators",
    "ed_ground_state",
    "energy_density",
    "ensemble_report",
    "ensemble_summary",
    "entanglement_data",
    "fermion_correlators",
    "finite_mps_sre",
    "finite_statevector",
    "free_fermion_greens",
    "gauge_transform",
    "ground_state_imps",
    "load_mps",
    "magnetization",
    "mixed_state_sre",
    "mutual_sre",
    "named_statevector",
    "nonlocal_sre_density",
    "normalize",
    "pauli_imps_sre",
    "predicted_msre",
    "product_mps",
    "random_imps",
    "ring_statevector",
    "save_mps",
    "single_site_rdm",
    "sre_density_sweep",
    "sre_density_upper_bound",
    "symmetric_msre_curve",
    "symmetric_msre_point",
    "transfer_modes",
    "two_site_rdm",
    "__version__",
]
