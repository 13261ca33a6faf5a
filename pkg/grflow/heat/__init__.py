from .solvers import (
    Direction,
    HorizonError,
    ScalarEvolution,
    SolverInstabilityError,
    WeightedMeasure,
    duality_series,
    gaussian_terminal,
    mass_series,
    measure_evolution_residual,
    solve_conjugate,
    solve_heat,
    weighted_measure,
)
