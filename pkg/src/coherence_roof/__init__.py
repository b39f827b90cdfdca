"""l1 and relative-entropy coherence, their convex roofs, and the exact
qutrit test of whether the l1 coherence equals its convex roof."""
__version__ = "0.1.0"

from .decide import (
    DecisionReport,
    Verdict,
    decide,
    decide_equality_d3,
    peel_positive,
    qubit_decomposition,
    split_situation2,
    theorem1_check,
)
from .matcore import (
    ValidationError,
    as_density,
    eigh,
    is_psd_minors,
    perron_vector,
    phase_align_unitary,
    phase_conjugate,
)
from .measures import (
    PURE_L1,
    PURE_RELATIVE_ENTROPY,
    BlochVector,
    PureStateFunctional,
    c_l1,
    c_r,
    pure_c_l1,
    pure_c_r,
    qubit_cr,
    qubit_cr_roof,
)
from .roof import PureEnsemble, RoofResult, ensemble_average, qubit_roof_oracle, roof_upper
