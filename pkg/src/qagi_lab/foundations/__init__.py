"""Executable checks of contextuality, non-locality, no-cloning and identity."""

from .chsh import (
    TSIRELSON,
    ChshSetting,
    LhvResult,
    chsh_lhv_max,
    chsh_quantum,
    correlator,
    observable,
)
from .cloning import (
    DELTA_CLONE,
    CloneResult,
    CloningVerdict,
    clone_fidelity_optimize,
    nocloning_check,
)
from .contextuality import (
    KsResult,
    RaySystem,
    ks_assignment_search,
    load_ray_system,
    ray_system_from_json,
    single_basis_system,
)
from .identity import (
    EPS_WITNESS,
    ClassicalIdentityReport,
    CopyObservationChannel,
    IndistinguishabilityReport,
    NoninjectivityResult,
    classical_identity_check,
    indistinguishability_check,
    noninjectivity_witness,
    separability_gap,
)
