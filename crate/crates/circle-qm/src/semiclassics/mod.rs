//! Semiclassical coherent-state propagator on the cylinder and the exact
//! spectral oracles it is checked against.

mod exact;
mod hamiltonian;
mod propagator;
mod trajectory;

pub use exact::{
    angle_propagator, default_window, direct_angle_sum, exact_propagator_spectral, AngleKernel, SpectralOracle,
};
pub use hamiltonian::{h_matrix_element, h_partials, HPartials, HolomorphicHamiltonian};
pub use propagator::{
    branch_contribution, free_particle_line, semiclassical_propagator, Branch, PropagatorOptions, PropagatorResult,
    SolverStats, TruncationReport,
};
pub use trajectory::{
    complex_action, default_seeds, solve_complex_bvp, stability_x, BvpOptions, ComplexTrajectory, CAUSTIC_BOUND,
};
