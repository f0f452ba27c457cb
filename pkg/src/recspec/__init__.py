"""Recurrence spectra of expanding interval maps.

Symbolic dynamics (words, subshifts, induced return systems),
transfer-operator thermodynamics (pressure, equilibrium states, Bowen
dimension, open systems with holes), interval-map geometry (coding,
return times in r-neighborhoods, ball/cylinder comparison), and the
construction of explicit orbits with prescribed lower and upper
recurrence rates.
"""

__version__ = "0.1.0"

from .errors import (
    BirkhoffMiss,
    BoundaryOrbit,
    ConfigError,
    DomainError,
    EmptyAlphabet,
    EmptySurvivor,
    HorizonError,
    HorizonTooShort,
    InadmissibleWord,
    InfeasibleTarget,
    NoBranchingSymbol,
    NotExpanding,
    NotMixing,
    RecspecError,
    SourceInfeasible,
    ZeroMassCylinder,
)
from .words import Word, random_word, repetition_time, return_time_to_cylinder
from .sft import (
    ReturnAlphabet,
    SubshiftOfFiniteType,
    find_connecting_paths,
    full_shift,
    golden_mean_shift,
    induced_alphabet,
    remove_hole,
    sft_from_text,
    sft_to_text,
)
from .insertion import (
    EllSequence,
    InsertionSpec,
    build_ell_sequence,
    insert,
    required_source_length,
    verify_prescribed_repetitions,
)
from .thermo import (
    EquilibriumState,
    Potential,
    boundary_removal_schedule,
    bowen_dimension,
    bowen_dimension_diagnostic,
    equilibrium_state,
    hole_measure_decay,
    kac_check,
    pressure,
    pressure_with_holes,
    spectral_radius,
)
from .maps import (
    DistortionData,
    ExtentTable,
    ItineraryCode,
    MarkovExpandingMap,
    ball_cylinder_comparison,
    cantor_map,
    cylinder_extents,
    distortion_constants,
    doubling_map,
    golden_matching_map,
    linear_markov_map,
    map_from_config,
    perturbed_doubling_map,
    recurrence_sandwich,
    tau_r,
    tau_r_from_word,
    two_slopes_map,
)
from .spectrum import (
    ConstructedPoint,
    RecurrenceEstimate,
    SourceConfig,
    ae_rate_experiment,
    build_source,
    construct_E_point,
    dimension_ladder,
    estimate_recurrence_rate,
    higher_block_shift,
    sample_source_point,
)
