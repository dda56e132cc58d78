"""Forward and inverse asymptotic model for AFM indentation stiffness tomography."""

__version__ = "0.1.0"

from .elastic import (  # noqa: E402
    IndenterShape,
    InclusionParams,
    MaterialParams,
    bulk_stiffness,
    contact_modulus,
    lame_constants,
    shape_constants,
    shear_modulus,
)
from .boussinesq import (  # noqa: E402
    FieldPoint,
    boussinesq_displacement,
    scaled_strain_vector,
    strain_at_inclusion,
    strain_fd_oracle,
)
from .polarization import (  # noqa: E402
    KsGs,
    PolarizationMatrix,
    cavity_ks_gs,
    polarization_matrix_spherical,
    rigid_ks_gs,
    spherical_ks_gs,
)
from .forward import (  # noqa: E402
    ContactState,
    GridSpec,
    StiffnessMap,
    indentation_curve_exact,
    m3_quadratic_form,
    m3_spherical,
    m3_spherical_general,
    m3_spherical_incompressible,
    stiffness_asymptotic,
    stiffness_map_forward,
)
from .inverse import (  # noqa: E402
    ExtractionResult,
    FitResult,
    ModelParams5,
    extract_inclusion,
    fit_map,
    initial_guess,
    model_eval,
    model_jacobian,
)
