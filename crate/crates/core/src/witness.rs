//! Nonlinear witnesses lower-bounding the convex-roof entropy vector `E_k`.
//!
//! For a pair set `C` of computational-basis index pairs `{η, η'}` and a
//! slot `k`, the witness is
//!
//! ```text
//! W_k(ρ) = c(|C|) · ( Σ_{C} |⟨η|ρ|η'⟩|  −  min_{|T|=k} Σ_{s∈T} Σ_{C} √(⟨η_s|ρ|η_s⟩⟨η'_s|ρ|η'_s⟩) )
//! ```
//!
//! where `(η_s, η'_s)` is the pair with the entries of party `s` exchanged
//! and `c(n)` is `2/√n` ([`WitnessConvention::Tight`]) or `√2/√n`
//! ([`WitnessConvention::Safe`]). The party subset `T` is shared by all pairs,
//! so the minimum is the sum of the `k` smallest per-party totals. Every
//! `W_k(ρ) ≤ E_k(ρ)`, hence `⌈2/(2−W_k²)⌉` lower-bounds the `k`-th entry of
//! the Schmidt number vector.
//!
//! [`witness_value_per_pair`] evaluates the variant in which each pair picks
//! its own subset. It is not a lower bound in general and is kept for
//! comparison only.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rank::{dim_bound_from_entropy, entropy_vector};
use crate::sampling::{haar_unitary, seeded_rng};
use crate::tensor::{hermitian_eigen, DensityMatrix, MultiIndex, PartyStructure, PureState, C64};
use crate::zoo::{psi_432, PSI_432_LABELS};

/// Unordered pairs of distinct basis multiindices. Pairs are stored with the
/// smaller index first and iterate in sorted order, so the listing order of
/// the input never matters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSet {
    structure: PartyStructure,
    pairs: BTreeSet<(MultiIndex, MultiIndex)>,
}

impl PairSet {
    pub fn new(
        structure: &PartyStructure,
        pairs: impl IntoIterator<Item = (MultiIndex, MultiIndex)>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            set.insert(canonical_pair(structure, a, b)?);
        }
        Ok(Self {
            structure: structure.clone(),
            pairs: set,
        })
    }

    /// Every unordered pair of distinct entries of `indices`.
    pub fn all_pairs(structure: &PartyStructure, indices: &[MultiIndex]) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for b in &indices[i + 1..] {
                if a != b {
                    pairs.push((a.clone(), b.clone()));
                }
            }
        }
        Self::new(structure, pairs)
    }

    pub fn structure(&self) -> &PartyStructure {
        &self.structure
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(MultiIndex, MultiIndex)> {
        self.pairs.iter()
    }

    pub fn contains(&self, a: &MultiIndex, b: &MultiIndex) -> bool {
        let key = if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        self.pairs.contains(&key)
    }

    /// Copy of the set with one more pair.
    pub fn with_pair(&self, a: MultiIndex, b: MultiIndex) -> Result<Self> {
        let mut out = self.clone();
        out.pairs.insert(canonical_pair(&self.structure, a, b)?);
        Ok(out)
    }

    /// Reads the line format `η | η'` (comma-separated entries, `#` starts a
    /// comment, blank lines ignored).
    pub fn parse(structure: &PartyStructure, text: &str) -> Result<Self> {
        let mut pairs = BTreeSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let perr = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('|').collect();
            if parts.len() != 2 {
                return Err(perr(format!("expected `eta | eta'`, got {line:?}")));
            }
            let a: MultiIndex = parts[0].parse().map_err(perr)?;
            let b: MultiIndex = parts[1].parse().map_err(perr)?;
            let pair = canonical_pair(structure, a, b).map_err(|e| perr(e.to_string()))?;
            pairs.insert(pair);
        }
        Ok(Self {
            structure: structure.clone(),
            pairs,
        })
    }

    pub fn to_text(&self) -> String {
        let dims: Vec<String> = self
            .structure
            .dims()
            .iter()
            .map(|d| d.to_string())
            .collect();
        let mut out = format!("# dims {}\n", dims.join(","));
        for (a, b) in &self.pairs {
            let _ = writeln!(out, "{a} | {b}");
        }
        out
    }
}

impl Serialize for PairSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.pairs.iter().map(|(a, b)| [a, b]))
    }
}

fn canonical_pair(
    structure: &PartyStructure,
    a: MultiIndex,
    b: MultiIndex,
) -> Result<(MultiIndex, MultiIndex)> {
    structure.flat_index(&a)?;
    structure.flat_index(&b)?;
    if a == b {
        return Err(Error::arg(format!("degenerate pair ({a}) | ({b})")));
    }
    Ok(if a < b { (a, b) } else { (b, a) })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessConvention {
    /// `2/√|C|` over unordered pairs.
    #[default]
    Tight,
    /// `√2/√|C|` over unordered pairs.
    Safe,
}

impl WitnessConvention {
    pub fn prefactor(self, pairs: usize) -> f64 {
        let n = (pairs as f64).sqrt();
        match self {
            WitnessConvention::Tight => 2.0 / n,
            WitnessConvention::Safe => std::f64::consts::SQRT_2 / n,
        }
    }
}

/// `(η, η')` with their entries exchanged at every party in `parties`.
pub fn swap_at_parties(
    eta: &MultiIndex,
    eta2: &MultiIndex,
    parties: &[usize],
) -> Result<(MultiIndex, MultiIndex)> {
    if parties.is_empty() {
        return Err(Error::arg("swap needs at least one party"));
    }
    if eta.len() != eta2.len() {
        return Err(Error::DimensionMismatch {
            expected: eta.len(),
            found: eta2.len(),
        });
    }
    let (mut a, mut b) = (eta.clone(), eta2.clone());
    for &p in parties {
        if p >= eta.len() {
            return Err(Error::arg(format!("party {p} outside [0, {})", eta.len())));
        }
        let (x, y) = (a.entries()[p], b.entries()[p]);
        a.entries_mut()[p] = y;
        b.entries_mut()[p] = x;
    }
    Ok((a, b))
}

fn diag(rho: &DensityMatrix, idx: &MultiIndex) -> Result<f64> {
    let f = rho.structure().flat_index(idx)?;
    Ok(rho.matrix()[(f, f)].re.max(0.0))
}

/// `√(⟨η_s|ρ|η_s⟩⟨η'_s|ρ|η'_s⟩)` for the pair swapped at `party`.
pub fn subtraction_term(
    rho: &DensityMatrix,
    pair: (&MultiIndex, &MultiIndex),
    party: usize,
) -> Result<f64> {
    let (a, b) = swap_at_parties(pair.0, pair.1, &[party])?;
    Ok((diag(rho, &a)? * diag(rho, &b)?).sqrt())
}

/// Coherence `|⟨η|ρ|η'⟩|` and the per-party subtraction terms of one pair.
fn pair_terms(rho: &DensityMatrix, a: &MultiIndex, b: &MultiIndex) -> Result<(f64, Vec<f64>)> {
    let coherence = rho.entry(a, b)?.norm();
    let terms = (0..rho.structure().parties())
        .map(|s| subtraction_term(rho, (a, b), s))
        .collect::<Result<Vec<_>>>()?;
    Ok((coherence, terms))
}

/// Indices of the `k` smallest values (ties by index), ascending.
fn k_smallest(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut chosen: Vec<usize> = order.into_iter().take(k).collect();
    chosen.sort_unstable();
    chosen
}

fn check_witness_args(rho: &DensityMatrix, c: &PairSet, k: usize) -> Result<()> {
    let n = rho.structure().parties();
    if k == 0 || k > n {
        return Err(Error::arg(format!("slot k={k} outside [1, {n}]")));
    }
    if c.is_empty() {
        return Err(Error::arg("pair set is empty"));
    }
    if c.structure() != rho.structure() {
        return Err(Error::arg(
            "pair set and state have different party structures",
        ));
    }
    Ok(())
}

/// Intermediate quantities of a witness evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessBreakdown {
    /// `Σ_C |⟨η|ρ|η'⟩|`.
    pub coherence_sum: f64,
    /// Per party `s`: `Σ_C subtraction_term(ρ, pair, s)`.
    pub party_sums: Vec<f64>,
    /// Minimizing `k`-subset, ascending.
    pub parties: Vec<usize>,
    /// `coherence_sum − Σ_{s∈parties} party_sums[s]`.
    pub unnormalized: f64,
    pub value: f64,
}

pub fn witness_breakdown(
    rho: &DensityMatrix,
    c: &PairSet,
    k: usize,
    convention: WitnessConvention,
) -> Result<WitnessBreakdown> {
    check_witness_args(rho, c, k)?;
    let n = rho.structure().parties();
    let mut coherence_sum = 0.0;
    let mut party_sums = vec![0.0; n];
    for (a, b) in c.iter() {
        let (coh, terms) = pair_terms(rho, a, b)?;
        coherence_sum += coh;
        for (acc, t) in party_sums.iter_mut().zip(terms) {
            *acc += t;
        }
    }
    let parties = k_smallest(&party_sums, k);
    let unnormalized = coherence_sum - parties.iter().map(|&s| party_sums[s]).sum::<f64>();
    Ok(WitnessBreakdown {
        coherence_sum,
        party_sums,
        parties,
        unnormalized,
        value: convention.prefactor(c.len()) * unnormalized,
    })
}

/// `W_k(ρ)` for pair set `c`; may be negative.
pub fn witness_value(
    rho: &DensityMatrix,
    c: &PairSet,
    k: usize,
    convention: WitnessConvention,
) -> Result<f64> {
    Ok(witness_breakdown(rho, c, k, convention)?.value)
}

/// Unnormalized per-pair variant: each pair subtracts its own `k` smallest
/// terms. Returned already multiplied by the convention prefactor.
pub fn witness_value_per_pair(
    rho: &DensityMatrix,
    c: &PairSet,
    k: usize,
    convention: WitnessConvention,
) -> Result<f64> {
    check_witness_args(rho, c, k)?;
    let mut sum = 0.0;
    for (a, b) in c.iter() {
        let (coh, terms) = pair_terms(rho, a, b)?;
        let sub: f64 = k_smallest(&terms, k).iter().map(|&s| terms[s]).sum();
        sum += coh - sub;
    }
    Ok(convention.prefactor(c.len()) * sum)
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub witness_values: Vec<f64>,
    /// `⌈2/(2−max(W_k,0)²)⌉` per slot.
    pub certified: Vec<usize>,
    pub convention: WitnessConvention,
    pub pair_sets: Vec<PairSet>,
}

/// Witness values and certified dimensionality lower bounds for every slot,
/// using `sets[k-1]` for slot `k`.
pub fn certify(
    rho: &DensityMatrix,
    sets: &[PairSet],
    convention: WitnessConvention,
) -> Result<CertificationReport> {
    let n = rho.structure().parties();
    if sets.len() != n {
        return Err(Error::arg(format!(
            "expected {n} pair sets (one per slot), got {}",
            sets.len()
        )));
    }
    let witness_values = sets
        .iter()
        .enumerate()
        .map(|(i, c)| witness_value(rho, c, i + 1, convention))
        .collect::<Result<Vec<_>>>()?;
    let certified = witness_values
        .iter()
        .map(|&w| dim_bound_from_entropy(w.max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CertificationReport {
        witness_values,
        certified,
        convention,
        pair_sets: sets.to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairStrategy {
    /// The three literal sets chosen for `ψ432`: 3, 5 and 6 pairs.
    Psi432,
    /// As [`PairStrategy::Psi432`] but with all six support pairs in slot 1,
    /// which is needed to certify `r_1 ≥ 4` on the pure target.
    Psi432FullFirst,
    /// All unordered pairs of the target's support, in every slot.
    FullSupport,
}

fn labels_to_pairs(labels: &[(usize, usize)]) -> Vec<(MultiIndex, MultiIndex)> {
    labels
        .iter()
        .map(|&(i, j)| {
            (
                MultiIndex::from(PSI_432_LABELS[i]),
                MultiIndex::from(PSI_432_LABELS[j]),
            )
        })
        .collect()
}

// Positions in PSI_432_LABELS: 0 = 000, 1 = 111, 2 = 012, 3 = 123.
const C1_432: [(usize, usize); 3] = [(0, 1), (0, 3), (2, 3)];
const C2_EXTRA_432: [(usize, usize); 2] = [(0, 2), (1, 3)];
const C3_EXTRA_432: [(usize, usize); 1] = [(1, 2)];

/// The literal `ψ432` pair sets `C_1`, `C_2`, `C_3`.
pub fn psi432_pair_sets() -> [PairSet; 3] {
    let s = psi_432().structure().clone();
    let c1: Vec<_> = C1_432.to_vec();
    let c2: Vec<_> = c1.iter().chain(&C2_EXTRA_432).cloned().collect();
    let c3: Vec<_> = c2.iter().chain(&C3_EXTRA_432).cloned().collect();
    [&c1, &c2, &c3].map(|c| PairSet::new(&s, labels_to_pairs(c)).expect("static pairs"))
}

fn is_psi_432(target: &PureState) -> bool {
    let reference = psi_432();
    target.structure() == reference.structure()
        && (target.amplitudes().dotc(reference.amplitudes()).norm() - 1.0).abs() < 1e-9
}

/// One pair set per slot for `target`.
pub fn default_pair_sets(target: &PureState, strategy: PairStrategy) -> Result<Vec<PairSet>> {
    let n = target.structure().parties();
    match strategy {
        PairStrategy::Psi432 | PairStrategy::Psi432FullFirst => {
            if !is_psi_432(target) {
                return Err(Error::arg(
                    "the ψ432 pair sets require the ψ432 target state",
                ));
            }
            let mut sets = psi432_pair_sets().to_vec();
            if strategy == PairStrategy::Psi432FullFirst {
                sets[0] = sets[2].clone();
            }
            Ok(sets)
        }
        PairStrategy::FullSupport => {
            let support = target.support(1e-12);
            if support.len() < 2 {
                return Err(Error::Degenerate(
                    "support has fewer than two basis states".into(),
                ));
            }
            let all = PairSet::all_pairs(target.structure(), &support)?;
            Ok(vec![all; n])
        }
    }
}

/// Largest extra ensemble size tried on top of `rank(ρ)`.
const EXTRA_ENSEMBLE_SIZE: usize = 4;

/// Square-root ensemble `√λ_i |e_i⟩` with the eigenvectors of each
/// support-connected block of `ρ` computed separately.
fn sqrt_ensemble(rho: &DensityMatrix) -> Vec<nalgebra::DVector<C64>> {
    let m = rho.matrix();
    let d = m.nrows();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..d {
        for j in (i + 1)..d {
            if m[(i, j)].norm() > 1e-14 || m[(j, i)].norm() > 1e-14 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut blocks: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..d {
        let root = find(&mut parent, i);
        blocks.entry(root).or_default().push(i);
    }
    let mut blocks: Vec<Vec<usize>> = blocks.into_values().collect();
    blocks.sort();

    let mut pairs: Vec<(f64, nalgebra::DVector<C64>)> = Vec::new();
    for block in blocks {
        let sub = DMatrix::from_fn(block.len(), block.len(), |i, j| m[(block[i], block[j])]);
        let (vals, vecs) = hermitian_eigen(&sub);
        for (col, &lam) in vals.iter().enumerate() {
            if lam <= 0.0 {
                continue;
            }
            let mut v = nalgebra::DVector::zeros(d);
            for (r, &g) in block.iter().enumerate() {
                v[g] = vecs[(r, col)] * C64::from(lam.sqrt());
            }
            pairs.push((lam, v));
        }
    }
    let max = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    pairs.retain(|p| p.0 > 1e-12 * max);
    pairs.into_iter().map(|p| p.1).collect()
}

fn ensemble_average(
    structure: &PartyStructure,
    vectors: &[nalgebra::DVector<C64>],
    k: usize,
) -> f64 {
    vectors
        .iter()
        .filter_map(|w| {
            let weight = w.norm_squared();
            if weight <= 1e-15 {
                return None;
            }
            let psi = PureState::normalized(structure.clone(), w.clone()).ok()?;
            Some(weight * entropy_vector(&psi).values[k - 1])
        })
        .sum()
}

/// Upper bound on `E_k(ρ) = inf Σ_i p_i S_k(ψ_i)`: the minimum of the
/// ensemble average over `samples` decompositions. Sample 0 is the
/// eigen-ensemble; the rest mix the square-root ensemble with seeded Haar
/// isometries of `rank(ρ)` to `rank(ρ)+4` outputs.
pub fn ensemble_upper_bound(
    rho: &DensityMatrix,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = rho.structure().parties();
    if k == 0 || k > n {
        return Err(Error::arg(format!("slot k={k} outside [1, {n}]")));
    }
    if samples == 0 {
        return Err(Error::arg("at least one sample is required"));
    }
    let base = sqrt_ensemble(rho);
    if base.is_empty() {
        return Err(Error::Degenerate(
            "density matrix has no positive eigenvalue".into(),
        ));
    }
    let structure = rho.structure();
    let r = base.len();
    let best = (0..samples)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return ensemble_average(structure, &base, k);
            }
            let mut rng = seeded_rng(seed, i as u64);
            let m = r + (i - 1) % (EXTRA_ENSEMBLE_SIZE + 1);
            let u = haar_unitary(m, &mut rng);
            let mixed: Vec<_> = (0..m)
                .map(|j| {
                    base.iter().enumerate().fold(
                        nalgebra::DVector::zeros(structure.total_dim()),
                        |acc, (col, v)| acc + v * u[(j, col)],
                    )
                })
                .collect();
            ensemble_average(structure, &mixed, k)
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}
