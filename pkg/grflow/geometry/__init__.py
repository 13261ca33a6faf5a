from .grid import (
    DegenerateMetricError,
    GridSpec,
    MetricField,
    ScalarField,
    ShapeError,
    SymTensorField,
    Tensor3Field,
    ThreeFormField,
    UnsupportedDimensionError,
)
from .curvature import (
    christoffel,
    relative_eigenvalues,
    ricci,
    scalar_calculus,
    tensor_calculus,
    tracefree_decompose,
)
from .forms import FORM_NORM, hform_ops
from .operators import dirichlet_matrix, divergence_form, integrate, laplacian

__all__ = (
    "GridSpec",
    "ScalarField",
    "SymTensorField",
    "MetricField",
    "ThreeFormField",
    "Tensor3Field",
    "ShapeError",
    "DegenerateMetricError",
    "UnsupportedDimensionError",
    "christoffel",
    "ricci",
    "scalar_calculus",
    "tensor_calculus",
    "tracefree_decompose",
    "relative_eigenvalues",
    "hform_ops",
    "FORM_NORM",
    "laplacian",
    "divergence_form",
    "dirichlet_matrix",
    "integrate",
)
