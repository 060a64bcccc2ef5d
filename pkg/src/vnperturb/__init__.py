"""Explicit conjugating unitaries for close subalgebras of a matrix algebra.

Close unital *-subalgebras ``N`` and ``M`` of a matrix algebra ``L`` are
unitarily conjugate by a unitary near the identity.  This package builds the
isomorphism ``N -> M`` and the conjugating unitary explicitly, through the
basic construction and unitary averaging, and checks the quantitative bounds
along the way.
"""

from .algebra import (
    Subalgebra,
    amplify_2x2,
    contains,
    diagonal,
    full_algebra,
    generate_algebra,
    multimatrix,
    relative_commutant,
    sample_unitary,
    scalars,
)
from .basic_construction import BasicConstruction, build_basic_construction, corner_iso, gns_from_trace, jones_projection
from .dixmier import ad_norm_bound, check_commutant_near_inclusion, haar_average
from .errors import PerturbationError
from .expectation import ConditionalExpectation, apply, pp_constant, trace_expectation, verify_expectation
from .linalg import (
    ToleranceProfile,
    operator_norm,
    polar_unitary,
    projection_exchange_unitary,
    spectral_projection,
)
from .perturbation import (
    DistanceInterval,
    IsoCertificate,
    PerturbReport,
    build_isomorphism,
    conjugating_unitary,
    distance_interval,
    ek_expectation,
    map_norm_estimate,
)

__version__ = "0.1.0"
