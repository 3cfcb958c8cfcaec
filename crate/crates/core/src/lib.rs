//! Multidimensional entanglement structure of multipartite qudit states.
//!
//! * [`tensor`]: party structures, states, partial traces, ranks, linear entropy.
//! * [`zoo`]: named states, the white-noise/dephasing test family, random states.
//! * [`rank`]: Schmidt rank and entropy vectors, feasibility, the four-party
//!   rank conjecture, the partial order on rank vectors.
//! * [`witness`]: nonlinear witnesses, certification, ensemble upper bounds.
//! * [`basis`]: local basis changes and witness optimization over them.
//! * [`sweep`]: certification over the noise simplex.
//! * [`statefile`]: JSON state and basis documents.

pub mod basis;
pub mod error;
pub mod rank;
pub mod sampling;
pub mod statefile;
pub mod sweep;
pub mod tensor;
pub mod witness;
pub mod zoo;

pub use basis::{
    apply_local_basis, apply_local_basis_pure, optimize_witness, random_local_basis, Budget,
    LocalBasis, Optimization,
};
pub use error::{Error, Result};
pub use rank::{
    compare_rank_vectors, conjecture_check_4party, dim_bound_from_entropy, entropy_vector,
    feasible_tripartite, schmidt_rank_vector, ConjectureReport, EntropyVector, OrderRelation,
    RankVector,
};
pub use tensor::{
    basis_ket, linear_entropy, numerical_rank, partial_trace, validate, DensityMatrix, MultiIndex,
    PartyStructure, PureState, ValidationReport, C64, DEFAULT_RANK_TOL,
};
pub use witness::{
    certify, default_pair_sets, ensemble_upper_bound, subtraction_term, swap_at_parties,
    witness_value, CertificationReport, PairSet, PairStrategy, WitnessConvention,
};
pub use zoo::NoiseParams;
