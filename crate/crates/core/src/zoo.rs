//! Named states, the white-noise/dephasing test family and seeded random
//! state generators.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::{complex_gaussian, seeded_rng};
use crate::tensor::{DensityMatrix, MultiIndex, PartyStructure, PureState, C64};

/// Weights of the test family `p·|ψ432⟩⟨ψ432| + q·ρ_dp + (1−p−q)·𝟙/64`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseParams {
    p: f64,
    q: f64,
}

impl NoiseParams {
    /// Slack allowed on `p + q ≤ 1` so that grid points on the dephasing edge are accepted.
    pub const SIMPLEX_SLACK: f64 = 1e-12;

    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p >= 0.0 && q >= 0.0 && p.is_finite() && q.is_finite()) {
            return Err(Error::arg(format!(
                "noise weights must be non-negative (p={p}, q={q})"
            )));
        }
        if p + q > 1.0 + Self::SIMPLEX_SLACK {
            return Err(Error::arg(format!("p + q = {} exceeds 1", p + q)));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// White-noise weight `1 − p − q`, clamped at zero.
    pub fn white(&self) -> f64 {
        (1.0 - self.p - self.q).max(0.0)
    }
}

/// Normalized superposition of the listed basis terms.
pub fn state_from_terms(
    structure: &PartyStructure,
    terms: &[(MultiIndex, C64)],
) -> Result<PureState> {
    if terms.is_empty() {
        return Err(Error::arg("at least one term is required"));
    }
    let mut amps = DVector::zeros(structure.total_dim());
    let mut seen = BTreeSet::new();
    for (idx, c) in terms {
        let f = structure.flat_index(idx)?;
        if !seen.insert(f) {
            return Err(Error::arg(format!("duplicate basis index ({idx})")));
        }
        amps[f] = *c;
    }
    PureState::normalized(structure.clone(), amps)
}

fn equal_superposition(dims: &[usize], labels: &[[usize; 3]]) -> PureState {
    let s = PartyStructure::new(dims.to_vec()).expect("static dims");
    let terms: Vec<_> = labels
        .iter()
        .map(|l| (MultiIndex::from(*l), C64::from(1.0)))
        .collect();
    state_from_terms(&s, &terms).expect("static state")
}

/// `(|000⟩+|111⟩+|122⟩)/√3` on three 7-level parties.
pub fn psi_332() -> PureState {
    equal_superposition(&[7, 7, 7], &[[0, 0, 0], [1, 1, 1], [1, 2, 2]])
}

/// `(|333⟩+|344⟩+|435⟩+|446⟩)/2` on three 7-level parties.
pub fn psi_422() -> PureState {
    equal_superposition(&[7, 7, 7], &[[3, 3, 3], [3, 4, 4], [4, 3, 5], [4, 4, 6]])
}

/// `(|000⟩+|111⟩+|012⟩+|123⟩)/2` on three 4-level parties.
pub fn psi_432() -> PureState {
    equal_superposition(&[4, 4, 4], &PSI_432_LABELS)
}

pub(crate) const PSI_432_LABELS: [[usize; 3]; 4] = [[0, 0, 0], [1, 1, 1], [0, 1, 2], [1, 2, 3]];

/// `Σ_l |l…l⟩` over the smallest local dimension, normalized.
pub fn ghz(structure: &PartyStructure) -> PureState {
    let levels = *structure.dims().iter().min().expect("nonempty");
    let terms: Vec<_> = (0..levels)
        .map(|l| {
            (
                MultiIndex::new(vec![l; structure.parties()]),
                C64::from(1.0),
            )
        })
        .collect();
    state_from_terms(structure, &terms).expect("levels within every party")
}

/// `(|00⟩+|11⟩)/√2`.
pub fn bell() -> PureState {
    ghz(&PartyStructure::new(vec![2, 2]).expect("static dims"))
}

/// Order in which `(m, n)` cells of the `r_b × r_c` grid enter the canonical
/// state: a staircase touching every row and column, then the rest
/// lexicographically.
fn canonical_cells(r_b: usize, r_c: usize) -> Vec<(usize, usize)> {
    let span = r_b.max(r_c);
    let mut cells: Vec<(usize, usize)> = (0..span)
        .map(|t| (t.min(r_b - 1), t.min(r_c - 1)))
        .collect();
    let head: BTreeSet<_> = cells.iter().cloned().collect();
    for m in 0..r_b {
        for n in 0..r_c {
            if !head.contains(&(m, n)) {
                cells.push((m, n));
            }
        }
    }
    cells
}

/// `Σ |m·r_c+n⟩|m⟩|n⟩ / √keep` over the first `keep_terms` cells, on dims
/// `[r_b·r_c, r_b, r_c]`. Its local ranks are `keep_terms`, `min(keep_terms, r_b)`
/// and `min(keep_terms, r_c)`.
pub fn canonical_rank_state(r_b: usize, r_c: usize, keep_terms: usize) -> Result<PureState> {
    if r_b == 0 || r_c == 0 {
        return Err(Error::arg("r_B and r_C must be at least 1"));
    }
    let cells = r_b * r_c;
    if keep_terms == 0 || keep_terms > cells {
        return Err(Error::arg(format!(
            "keep_terms {keep_terms} outside [1, {cells}]"
        )));
    }
    let s = PartyStructure::new(vec![cells, r_b, r_c])?;
    let terms: Vec<_> = canonical_cells(r_b, r_c)
        .into_iter()
        .take(keep_terms)
        .map(|(m, n)| (MultiIndex::new(vec![m * r_c + n, m, n]), C64::from(1.0)))
        .collect();
    state_from_terms(&s, &terms)
}

/// Zeroes every off-diagonal entry in the computational basis.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    let diag = rho.matrix().diagonal();
    DensityMatrix::from_matrix(rho.structure().clone(), DMatrix::from_diagonal(&diag))
        .expect("same shape")
}

/// `p·|ψ432⟩⟨ψ432| + q·dephase(|ψ432⟩⟨ψ432|) + (1−p−q)·𝟙/64`.
pub fn test_state(params: NoiseParams) -> DensityMatrix {
    let target = psi_432().to_density();
    let dp = dephase(&target);
    let d = target.structure().total_dim();
    let m = target.matrix() * C64::from(params.p())
        + dp.matrix() * C64::from(params.q())
        + DMatrix::<C64>::identity(d, d) * C64::from(params.white() / d as f64);
    DensityMatrix::from_matrix(target.structure().clone(), m).expect("same shape")
}

/// `p·|ψ332⟩⟨ψ332| + (1−p)·|ψ422⟩⟨ψ422|`, `p ∈ (0, 1)`.
pub fn orthogonal_mixture(p: f64) -> Result<DensityMatrix> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::arg(format!("mixing weight {p} outside (0, 1)")));
    }
    let a = psi_332().to_density();
    let b = psi_422().to_density();
    let m = a.matrix() * C64::from(p) + b.matrix() * C64::from(1.0 - p);
    DensityMatrix::from_matrix(a.structure().clone(), m)
}

/// I.i.d. complex Gaussian amplitudes on `support` (the whole space when
/// `None`), normalized. Deterministic in `seed`.
pub fn random_pure_state(
    structure: &PartyStructure,
    seed: u64,
    support: Option<&[MultiIndex]>,
) -> Result<PureState> {
    let flats: Vec<usize> = match support {
        None => (0..structure.total_dim()).collect(),
        Some([]) => return Err(Error::arg("support must be nonempty")),
        Some(idx) => {
            let set = idx
                .iter()
                .map(|i| structure.flat_index(i))
                .collect::<Result<BTreeSet<_>>>()?;
            set.into_iter().collect()
        }
    };
    let mut rng = seeded_rng(seed, 0);
    let mut amps = DVector::zeros(structure.total_dim());
    for f in flats {
        amps[f] = complex_gaussian(&mut rng);
    }
    PureState::normalized(structure.clone(), amps)
}

/// Random support of `size` distinct basis indices (flat order), deterministic in `seed`.
pub fn random_support(
    structure: &PartyStructure,
    size: usize,
    seed: u64,
) -> Result<Vec<MultiIndex>> {
    let d = structure.total_dim();
    if size == 0 || size > d {
        return Err(Error::arg(format!("support size {size} outside [1, {d}]")));
    }
    let mut rng = seeded_rng(seed, 1);
    let mut flats = rand::seq::index::sample(&mut rng, d, size).into_vec();
    flats.sort_unstable();
    flats
        .into_iter()
        .map(|f| structure.multi_index(f))
        .collect()
}

/// Mixture of `components` random pure states with random weights. When
/// `support_size` is given, every component lives on its own random support
/// of that size.
pub fn random_mixture(
    structure: &PartyStructure,
    components: usize,
    support_size: Option<usize>,
    seed: u64,
) -> Result<DensityMatrix> {
    if components == 0 {
        return Err(Error::arg("a mixture needs at least one component"));
    }
    let mut rng = seeded_rng(seed, 2);
    let weights: Vec<f64> = (0..components)
        .map(|_| rng.random::<f64>() + 1e-3)
        .collect();
    let total: f64 = weights.iter().sum();
    let d = structure.total_dim();
    let mut m = DMatrix::<C64>::zeros(d, d);
    for (i, w) in weights.iter().enumerate() {
        let sub_seed = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(i as u64 + 1);
        let support = support_size
            .map(|s| random_support(structure, s, sub_seed))
            .transpose()?;
        let psi = random_pure_state(structure, sub_seed, support.as_deref())?;
        m += psi.to_density().matrix() * C64::from(w / total);
    }
    DensityMatrix::from_matrix(structure.clone(), m)
}
