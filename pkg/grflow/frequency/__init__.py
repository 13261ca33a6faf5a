from .params import (
    DegenerateFrequencyError,
    FrequencyConstants,
    FrequencyParams,
    HFunction,
    WindowError,
    frequency_constants,
)
from .series import (
    FrequencySeries,
    compute_series,
    hamilton_energy_check,
    i_prime_identity,
    integral_harnack_check,
    monotonicity_check,
    window_indices,
)
from .eigen import (
    EigenSolverError,
    WeightedEigenpair,
    eigenvalue_check,
    eigenvalue_series,
    weighted_eigenpair,
)
