"""Room-mode simulation and single-microphone sound source localization."""
from .dictionary import (
    CandidateGrid,
    CoherenceReport,
    Dictionary,
    build_dictionary,
    build_grid,
    coherence,
    gram,
)
from .localize import (
    LocalizationResult,
    Measurement,
    SubsamplingScheme,
    localize,
    subsample,
    synthesize_measurement,
)
from .modal import (
    Mode,
    ModeIndex,
    Point3,
    RoomSpec,
    eigenfrequency,
    eigenfunction,
    eigenfunction_planewave,
    enumerate_modes_below,
    enumerate_modes_in_index_cube,
    mode_count_estimate,
    peak_height,
    rtf,
    schroeder_frequency,
)
from .sparse import SparseSolution, cosamp, least_squares_on_support, omp

__version__ = "0.1.0"
