//! Local basis changes and derivative-free maximization of a witness over
//! them.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::{haar_unitary, seeded_rng, unit_hermitian, unitarity_deviation};
use crate::tensor::{hermitian_eigen, DensityMatrix, PartyStructure, PureState, C64, STATE_TOL};
use crate::witness::{witness_value, PairSet, WitnessConvention};

/// One unitary per party; the full basis change is their tensor product.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalBasis {
    unitaries: Vec<DMatrix<C64>>,
}

impl LocalBasis {
    pub fn new(structure: &PartyStructure, unitaries: Vec<DMatrix<C64>>) -> Result<Self> {
        if unitaries.len() != structure.parties() {
            return Err(Error::DimensionMismatch {
                expected: structure.parties(),
                found: unitaries.len(),
            });
        }
        for (party, (u, &d)) in unitaries.iter().zip(structure.dims()).enumerate() {
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::arg(format!(
                    "unitary for party {party} is {}x{}, expected {d}x{d}",
                    u.nrows(),
                    u.ncols()
                )));
            }
            let dev = unitarity_deviation(u);
            if dev > STATE_TOL {
                return Err(Error::InvalidState(format!(
                    "matrix for party {party} is not unitary (deviation {dev:.3e})"
                )));
            }
        }
        Ok(Self { unitaries })
    }

    pub fn identity(structure: &PartyStructure) -> Self {
        Self {
            unitaries: structure
                .dims()
                .iter()
                .map(|&d| DMatrix::identity(d, d))
                .collect(),
        }
    }

    pub fn unitaries(&self) -> &[DMatrix<C64>] {
        &self.unitaries
    }

    pub fn dims(&self) -> Vec<usize> {
        self.unitaries.iter().map(|u| u.nrows()).collect()
    }

    /// Largest unitarity deviation over the parties.
    pub fn deviation(&self) -> f64 {
        self.unitaries
            .iter()
            .map(unitarity_deviation)
            .fold(0.0, f64::max)
    }
}

/// `(U_party ⊗ 𝟙) · m`, acting on the row index.
fn left_apply(
    structure: &PartyStructure,
    m: &DMatrix<C64>,
    party: usize,
    u: &DMatrix<C64>,
) -> DMatrix<C64> {
    let d = structure.dims()[party];
    let stride: usize = structure.dims()[party + 1..].iter().product();
    let outer = structure.total_dim() / (d * stride);
    let mut out = DMatrix::<C64>::zeros(m.nrows(), m.ncols());
    for o in 0..outer {
        for inner in 0..stride {
            let row = |x: usize| (o * d + x) * stride + inner;
            for x in 0..d {
                for y in 0..d {
                    let coef = u[(x, y)];
                    if coef == C64::from(0.0) {
                        continue;
                    }
                    let (rx, ry) = (row(x), row(y));
                    for col in 0..m.ncols() {
                        out[(rx, col)] += coef * m[(ry, col)];
                    }
                }
            }
        }
    }
    out
}

fn left_apply_all(
    structure: &PartyStructure,
    m: &DMatrix<C64>,
    basis: &LocalBasis,
) -> DMatrix<C64> {
    basis
        .unitaries
        .iter()
        .enumerate()
        .fold(m.clone(), |acc, (party, u)| {
            left_apply(structure, &acc, party, u)
        })
}

/// `(U_1⊗…⊗U_N) ρ (U_1⊗…⊗U_N)†`.
pub fn apply_local_basis(rho: &DensityMatrix, basis: &LocalBasis) -> Result<DensityMatrix> {
    let s = rho.structure();
    if basis.dims() != s.dims() {
        return Err(Error::arg(format!(
            "basis dims {:?} do not match state dims {:?}",
            basis.dims(),
            s.dims()
        )));
    }
    let half = left_apply_all(s, rho.matrix(), basis);
    let full = left_apply_all(s, &half.adjoint(), basis).adjoint();
    DensityMatrix::from_matrix(s.clone(), full)
}

/// `(U_1⊗…⊗U_N)|ψ⟩`.
pub fn apply_local_basis_pure(psi: &PureState, basis: &LocalBasis) -> Result<PureState> {
    let s = psi.structure();
    if basis.dims() != s.dims() {
        return Err(Error::arg(format!(
            "basis dims {:?} do not match state dims {:?}",
            basis.dims(),
            s.dims()
        )));
    }
    let column = DMatrix::from_column_slice(s.total_dim(), 1, psi.amplitudes().as_slice());
    let rotated = left_apply_all(s, &column, basis);
    PureState::normalized(s.clone(), DVector::from_column_slice(rotated.as_slice()))
}

/// Independent Haar unitary per party, deterministic in `seed`.
pub fn random_local_basis(structure: &PartyStructure, seed: u64) -> LocalBasis {
    let mut rng = seeded_rng(seed, 0);
    LocalBasis {
        unitaries: structure
            .dims()
            .iter()
            .map(|&d| haar_unitary(d, &mut rng))
            .collect(),
    }
}

/// `exp(iθH)` for Hermitian `H`.
fn exp_i_hermitian(h: &DMatrix<C64>, theta: f64) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(h);
    let phases = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| C64::from_polar(1.0, theta * l)),
    );
    &vecs * DMatrix::from_diagonal(&phases) * vecs.adjoint()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Budget {
    pub restarts: usize,
    pub steps: usize,
    /// Initial size of the random anti-Hermitian step.
    pub step_scale: f64,
    /// Consecutive rejections after which the step size is halved.
    pub rejection_streak: usize,
    /// Start the first restart from the identity basis.
    pub identity_start: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            restarts: 8,
            steps: 200,
            step_scale: 0.3,
            rejection_streak: 10,
            identity_start: true,
        }
    }
}

impl Budget {
    fn check(&self) -> Result<()> {
        if self.restarts == 0 || self.steps == 0 || self.rejection_streak == 0 {
            return Err(Error::arg(
                "restarts, steps and rejection streak must be positive",
            ));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::arg(format!(
                "step scale {} must be positive",
                self.step_scale
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Optimization {
    pub best_value: f64,
    pub best_basis: LocalBasis,
    /// Witness value in the unrotated basis.
    pub initial_value: f64,
    /// Index of the restart that produced the best value.
    pub best_restart: usize,
    /// Current value of the winning restart after each step (non-decreasing).
    pub trajectory: Vec<f64>,
}

/// Multi-restart stochastic hill climbing of `W_k` over local unitaries.
/// Each step multiplies every party's unitary by `exp(i·scale·H)` with a
/// random unit-norm Hermitian `H`; the proposal is kept only if the witness
/// strictly increases. Restarts run in parallel, each with its own stream of
/// `seed`; the result depends only on the inputs.
pub fn optimize_witness(
    rho: &DensityMatrix,
    pairs: &PairSet,
    k: usize,
    convention: WitnessConvention,
    budget: &Budget,
    seed: u64,
) -> Result<Optimization> {
    budget.check()?;
    let structure = rho.structure();
    let objective = |b: &LocalBasis| -> Result<f64> {
        witness_value(&apply_local_basis(rho, b)?, pairs, k, convention)
    };
    let initial_value = objective(&LocalBasis::identity(structure))?;

    let runs = (0..budget.restarts)
        .into_par_iter()
        .map(|restart| -> Result<(f64, LocalBasis, Vec<f64>)> {
            let mut rng = seeded_rng(seed, restart as u64);
            let mut basis = if restart == 0 && budget.identity_start {
                LocalBasis::identity(structure)
            } else {
                LocalBasis {
                    unitaries: structure
                        .dims()
                        .iter()
                        .map(|&d| haar_unitary(d, &mut rng))
                        .collect(),
                }
            };
            let mut current = objective(&basis)?;
            let mut scale = budget.step_scale;
            let mut rejections = 0;
            let mut trajectory = Vec::with_capacity(budget.steps);
            for _ in 0..budget.steps {
                let proposal = LocalBasis {
                    unitaries: basis
                        .unitaries
                        .iter()
                        .map(|u| exp_i_hermitian(&unit_hermitian(u.nrows(), &mut rng), scale) * u)
                        .collect(),
                };
                let value = objective(&proposal)?;
                if value > current {
                    basis = proposal;
                    current = value;
                    rejections = 0;
                } else {
                    rejections += 1;
                    if rejections >= budget.rejection_streak {
                        scale *= 0.5;
                        rejections = 0;
                    }
                }
                trajectory.push(current);
            }
            Ok((current, basis, trajectory))
        })
        .collect::<Result<Vec<_>>>()?;

    let (best_restart, (best_value, best_basis, trajectory)) = runs
        .into_iter()
        .enumerate()
        .reduce(|best, next| if next.1 .0 > best.1 .0 { next } else { best })
        .expect("at least one restart");
    Ok(Optimization {
        best_value,
        best_basis,
        initial_value,
        best_restart,
        trajectory,
    })
}
