//! Few-boson dynamics in finite optical lattices under repeated interaction
//! quenches, by exact diagonalization in a fixed single-particle basis.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fock;
pub mod hamiltonian;
pub mod interaction;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod meanfield;
pub mod observables;
pub mod protocol;
pub mod sine;
pub mod state;

pub use error::{Error, Result};
pub use exec::Exec;
pub use fock::FockBasis;
pub use lattice::{build_wannier, solve_lowest, solve_one_body, GridSpec, SinglePartBasis, WannierSet};
pub use protocol::{Interval, PulseSchedule};
pub use hamiltonian::{ground_state, ManyBodyOperator, ManyBodySystem, SpectralOperator};
pub use interaction::InteractionTensor;
pub use state::ManyBodyState;
pub use dynamics::{evolve_collect, evolve_schedule, EvolveOptions, PropagatorKind, TrajectoryRecord};
pub use observables::{DensityProbe, MomentumGrid, MomentumProbe, NumberStateProjection, OneBodyDensity, RegionProbe, WannierProjector};
pub use analysis::{averaged_spectrum, dominant_frequency, power_law_fit, spectrum, PowerLawFit, Spectrum, SpectrumOptions};
pub use meanfield::{mf_evolve, mf_ground, CondensateOrbital};
pub use io::{CheckpointHeader, CheckpointWriter, Series};
