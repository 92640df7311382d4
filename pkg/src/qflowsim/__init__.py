"""qflowsim: active-space flow workbench for hydrogen-chain benchmarks."""

__version__ = "0.1.0"

from .molint import (chain_geometry, nuclear_repulsion, build_ao_integrals,
                     Geometry, AOIntegralSet)
from .scf import (rhf_solve, mo_transform, mo_transform_spatial,
                  MOHamiltonian, SpatialMOIntegrals, SCFResult)
from .fock import SectorBasis, WaveVector, ExcitationSignature
from .spectra import exact_diag, cas_ed, cas_basis
from .cc import ClusterOperator, cc_residual, cc_solve
from .flow import (ActiveSpace, AmplitudePool, FlowConfig, FlowReport,
                   enumerate_active_spaces, build_pool, qflow_run,
                   qflow_from_fcidump)
from .fcidump import fcidump_write, fcidump_read
from .workbench import RunConfig, run, table_report

__all__ = [
    "chain_geometry", "nuclear_repulsion", "build_ao_integrals",
    "Geometry", "AOIntegralSet", "rhf_solve", "mo_transform",
    "mo_transform_spatial", "MOHamiltonian", "SpatialMOIntegrals",
    "SCFResult", "SectorBasis", "WaveVector", "ExcitationSignature",
    "exact_diag", "cas_ed", "cas_basis", "ClusterOperator", "cc_residual",
    "cc_solve", "ActiveSpace", "AmplitudePool", "FlowConfig", "FlowReport",
    "enumerate_active_spaces", "build_pool", "qflow_run",
    "qflow_from_fcidump", "fcidump_write", "fcidump_read",
    "RunConfig", "run", "table_report",
]
