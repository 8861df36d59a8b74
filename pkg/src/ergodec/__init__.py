"""Exact and Monte Carlo ergodic decomposition for symmetric-group chains on
binary configuration spaces."""

from .averaging import (
    AveragingReport,
    LimitReport,
    average_exact,
    average_mc,
    conditional_expectation_check,
    default_schedule,
    fubini_check,
    invariance_check,
    limit_average,
    tower_check,
)
from .cocycles import Cocycle, constant_one, make_rho_f, make_rn, verify_identity
from .counterexamples import (
    InvariantSetFullGroup,
    demonstrate_kolmogorov,
    measure_of_invariant_set,
    orbit_class,
    weak_strong_equivalence_check,
)
from .decomposition import (
    DecomposeConfig,
    DecomposingMeasure,
    LimitStatistic,
    almost_invariant_upgrade,
    assemble,
    barycenter_residual,
    conditional_measures_exact,
    decompose,
    ergodicity_test,
    ks_statistic,
    mes_ed_roundtrip,
    pi_phi,
)
from .dictionary import CylinderMonomial, TestDictionary
from .errors import (
    CapacityError,
    DegreeOverflowError,
    DivergentIntegralError,
    NonConvergenceError,
    ZeroMassError,
)
from .groups import (
    Config,
    Permutation,
    act,
    compose,
    enumerate_level,
    haar_sample,
)
from .measures import (
    AtomicMeasure,
    BetaExchangeable,
    Cylinder,
    Mixture,
    OrbitSigmaFinite,
    ProductBernoulli,
    ac_check,
    canonical_text,
    expectation_monomial,
    jordan_decompose,
    mass,
    rn_derivative,
    sample,
)
from .rng import RandomStream, stream_from_seed, substream
from .sigma_finite import (
    ComponentSplit,
    GeometricWeight,
    MeasureClassDescriptor,
    ProjectiveClass,
    classify_components,
    decompose_sigma_finite,
    inv_p_f,
    make_fibrewise_f,
    orbital_dichotomy,
    orbital_measure,
    p_f,
    pcl,
    reweight_decomposition,
)

__version__ = "0.1.0"
