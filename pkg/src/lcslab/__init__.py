"""Desk-scale verification kernels for locally conformally symplectic rigidity."""

from .geometry import (
    ClosedOneForm,
    CoverModel,
    FormField,
    ModelSpace,
    builtin_scalar_field,
    check_dbeta_squared,
    deck_act_cotangent,
    eval_lichnerowicz,
    load_cover_model,
    pi_g,
    product_space,
)
from .dynamics import (
    FlowConfig,
    Hamiltonian,
    LcsPair,
    SupportSpec,
    Trajectory,
    flow,
    hamiltonian_vector_field,
    lcs_two_form_matrix,
    verify_symplectized_intertwine,
)
from .lifts import (
    DiagramReport,
    HomogeneousPoint,
    LiftedHamiltonian,
    flow_homogeneous,
    lift_hamiltonian,
    liouville_L,
    liouville_L_inv,
    rho_cl,
    rho_eq,
    translate_Tc,
    twisted_Dc,
    verify_identity,
)
from .sheaf import (
    BettiVector,
    CellComplex,
    CellularSheaf,
    IntervalModule,
    IntervalSummand,
    LocallyClosedCellSet,
    betti_of_restriction,
    cohomology,
    interval_cohomology,
    load_complex_and_sheaf,
)
from .asymptotic import (
    CjEstimate,
    EquivariantSheafModel,
    build_window,
    check_domain_independence,
    estimate_cj,
    morse_novikov_oracle,
    window_betti,
)
from .tamarkin import (
    EnergyReport,
    FiberedIntervalSheaf,
    TamarkinModule,
    ball_sheaf,
    check_tau_monotone,
    energy,
    energy_fibered,
    tau_nonzero,
    verify_squeeze_bound,
)

__version__ = "0.1.0"
