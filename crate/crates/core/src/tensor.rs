//! Dense complex linear algebra over multipartite index structures.
//!
//! States live on `H_1 ⊗ … ⊗ H_N` with local dimensions given by a
//! [`PartyStructure`]. Basis multiindices are flattened row-major, party 0
//! most significant, everywhere in the crate and in the file formats.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Tolerance on the unit-norm, Hermiticity and unit-trace invariants.
pub const STATE_TOL: f64 = 1e-9;
/// Most negative eigenvalue a density matrix may have.
pub const PSD_TOL: f64 = 1e-8;
/// Default relative threshold for [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Local dimensions of the parties of a multipartite Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PartyStructure {
    dims: Vec<usize>,
    #[serde(skip)]
    total: usize,
}

impl PartyStructure {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::arg("a party structure needs at least one party"));
        }
        if let Some(p) = dims.iter().position(|&d| d == 0) {
            return Err(Error::arg(format!("party {p} has dimension 0")));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::arg("total dimension overflows"))?;
        Ok(Self { dims, total })
    }

    /// `parties` copies of a `dim`-level system.
    pub fn uniform(parties: usize, dim: usize) -> Result<Self> {
        Self::new(vec![dim; parties])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn flat_index(&self, idx: &MultiIndex) -> Result<usize> {
        if idx.len() != self.parties() {
            return Err(Error::DimensionMismatch {
                expected: self.parties(),
                found: idx.len(),
            });
        }
        let mut flat = 0;
        for (party, (&value, &dim)) in idx.entries().iter().zip(&self.dims).enumerate() {
            if value >= dim {
                return Err(Error::IndexOutOfRange { party, value, dim });
            }
            flat = flat * dim + value;
        }
        Ok(flat)
    }

    pub fn multi_index(&self, flat: usize) -> Result<MultiIndex> {
        if flat >= self.total {
            return Err(Error::arg(format!(
                "flat index {flat} outside [0, {})",
                self.total
            )));
        }
        Ok(self.decompose(flat))
    }

    fn decompose(&self, mut flat: usize) -> MultiIndex {
        let mut entries = vec![0; self.parties()];
        for (slot, &dim) in entries.iter_mut().zip(&self.dims).rev() {
            *slot = flat % dim;
            flat /= dim;
        }
        MultiIndex(entries)
    }

    /// All basis multiindices in flat order.
    pub fn indices(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.total).map(|f| self.decompose(f))
    }

    /// Sorted, deduplicated party list; rejects empty sets and out-of-range parties.
    pub(crate) fn check_parties(&self, parties: &[usize]) -> Result<Vec<usize>> {
        if parties.is_empty() {
            return Err(Error::arg("party set must be nonempty"));
        }
        let mut out = parties.to_vec();
        out.sort_unstable();
        out.dedup();
        if let Some(&bad) = out.iter().find(|&&p| p >= self.parties()) {
            return Err(Error::arg(format!(
                "party {bad} outside [0, {})",
                self.parties()
            )));
        }
        Ok(out)
    }

    /// For every flat index: (flat index within `keep`, flat index within the complement).
    fn split_table(&self, keep: &[usize]) -> (PartyStructure, Vec<(usize, usize)>) {
        let kept_dims: Vec<usize> = keep.iter().map(|&p| self.dims[p]).collect();
        let kept = PartyStructure::new(kept_dims).expect("subset of a valid structure");
        let table = self
            .indices()
            .map(|idx| {
                let (mut k, mut t) = (0, 0);
                for (p, (&v, &d)) in idx.entries().iter().zip(&self.dims).enumerate() {
                    if keep.binary_search(&p).is_ok() {
                        k = k * d + v;
                    } else {
                        t = t * d + v;
                    }
                }
                (k, t)
            })
            .collect();
        (kept, table)
    }
}

/// One computational-basis label per party.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [usize] {
        &mut self.0
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[usize; N]> for MultiIndex {
    fn from(v: [usize; N]) -> Self {
        Self(v.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let entries = s
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<usize>()
                    .map_err(|_| format!("bad multiindex entry {t:?}"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self(entries))
    }
}

/// Normalized state vector; amplitude `c_η` sits at the flat index of `η`.
#[derive(Clone, Debug)]
pub struct PureState {
    structure: PartyStructure,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Wraps an already normalized vector.
    pub fn new(structure: PartyStructure, amplitudes: DVector<C64>) -> Result<Self> {
        check_len(&structure, amplitudes.len())?;
        let norm2 = amplitudes.norm_squared();
        if (norm2 - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm {norm2} differs from 1"
            )));
        }
        Ok(Self {
            structure,
            amplitudes,
        })
    }

    /// Normalizes `amplitudes`; the zero vector is rejected.
    pub fn normalized(structure: PartyStructure, amplitudes: DVector<C64>) -> Result<Self> {
        check_len(&structure, amplitudes.len())?;
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::Degenerate("all amplitudes are zero".into()));
        }
        Ok(Self {
            structure,
            amplitudes: amplitudes / C64::from(norm),
        })
    }

    pub fn structure(&self) -> &PartyStructure {
        &self.structure
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, idx: &MultiIndex) -> Result<C64> {
        Ok(self.amplitudes[self.structure.flat_index(idx)?])
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Basis indices whose amplitude modulus exceeds `tol`.
    pub fn support(&self, tol: f64) -> Vec<MultiIndex> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > tol)
            .map(|(f, _)| self.structure.decompose(f))
            .collect()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            structure: self.structure.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// Reduced state on `keep` (parties in ascending order), computed as `M M†`
    /// with `M` the amplitude tensor reshaped to kept × traced.
    pub fn marginal(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = self.structure.check_parties(keep)?;
        let (kept, table) = self.structure.split_table(&keep);
        let traced_dim = self.structure.total_dim() / kept.total_dim();
        let mut m = DMatrix::<C64>::zeros(kept.total_dim(), traced_dim);
        for (f, &(k, t)) in table.iter().enumerate() {
            m[(k, t)] = self.amplitudes[f];
        }
        let matrix = &m * m.adjoint();
        Ok(DensityMatrix {
            structure: kept,
            matrix,
        })
    }

    /// Reorders parties: party `j` of the result is party `order[j]` of `self`.
    pub fn permute_parties(&self, order: &[usize]) -> Result<PureState> {
        let n = self.structure.parties();
        let mut seen = vec![false; n];
        if order.len() != n
            || order
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::arg(format!(
                "{order:?} is not a permutation of 0..{n}"
            )));
        }
        let dims: Vec<usize> = order.iter().map(|&p| self.structure.dims[p]).collect();
        let target = PartyStructure::new(dims)?;
        let mut amps = DVector::zeros(target.total_dim());
        for (f, c) in self.amplitudes.iter().enumerate() {
            let x = self.structure.decompose(f);
            let y = MultiIndex::new(order.iter().map(|&p| x.entries()[p]).collect());
            amps[target.flat_index(&y)?] = *c;
        }
        Ok(PureState {
            structure: target,
            amplitudes: amps,
        })
    }
}

fn check_len(structure: &PartyStructure, len: usize) -> Result<()> {
    if len != structure.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: structure.total_dim(),
            found: len,
        });
    }
    Ok(())
}

/// Computational basis state `|idx⟩`.
pub fn basis_ket(structure: &PartyStructure, idx: &MultiIndex) -> Result<PureState> {
    let flat = structure.flat_index(idx)?;
    let mut amplitudes = DVector::zeros(structure.total_dim());
    amplitudes[flat] = C64::new(1.0, 0.0);
    Ok(PureState {
        structure: structure.clone(),
        amplitudes,
    })
}

/// Dense `D × D` operator over a party structure. Construction through
/// [`DensityMatrix::from_matrix`] checks only the shape so that invalid
/// candidates can still be inspected with [`validate`].
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    structure: PartyStructure,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(structure: PartyStructure, matrix: DMatrix<C64>) -> Result<Self> {
        check_len(&structure, matrix.nrows())?;
        check_len(&structure, matrix.ncols())?;
        Ok(Self { structure, matrix })
    }

    /// Like [`DensityMatrix::from_matrix`] but rejects anything failing validation.
    pub fn new(structure: PartyStructure, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix(structure, matrix)?;
        validate(&rho).into_result()?;
        Ok(rho)
    }

    pub fn maximally_mixed(structure: &PartyStructure) -> Self {
        let d = structure.total_dim();
        Self {
            structure: structure.clone(),
            matrix: DMatrix::identity(d, d) * C64::from(1.0 / d as f64),
        }
    }

    pub fn structure(&self) -> &PartyStructure {
        &self.structure
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    /// `⟨row|ρ|col⟩`.
    pub fn entry(&self, row: &MultiIndex, col: &MultiIndex) -> Result<C64> {
        let r = self.structure.flat_index(row)?;
        let c = self.structure.flat_index(col)?;
        Ok(self.matrix[(r, c)])
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.matrix[(i, j)] * self.matrix[(j, i)]).re;
            }
        }
        acc
    }

    /// Spectrum of the Hermitian part, largest first.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        partial_trace(self, keep)
    }
}

/// Reduction of `rho` onto the parties in `keep` (ascending order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let keep = rho.structure.check_parties(keep)?;
    let (kept, table) = rho.structure.split_table(&keep);
    let traced_dim = rho.structure.total_dim() / kept.total_dim();
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); traced_dim];
    for (f, &(k, t)) in table.iter().enumerate() {
        groups[t].push((f, k));
    }
    let mut out = DMatrix::<C64>::zeros(kept.total_dim(), kept.total_dim());
    for group in &groups {
        for &(f, kf) in group {
            for &(g, kg) in group {
                out[(kf, kg)] += rho.matrix[(f, g)];
            }
        }
    }
    Ok(DensityMatrix {
        structure: kept,
        matrix: out,
    })
}

/// Number of eigenvalues above `rel_tol` times the largest one.
pub fn numerical_rank(rho: &DensityMatrix, rel_tol: f64) -> Result<usize> {
    check_rank_tol(rel_tol)?;
    Ok(rank_of_spectrum(&rho.eigenvalues(), rel_tol))
}

pub(crate) fn check_rank_tol(rel_tol: f64) -> Result<()> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::arg(format!(
            "rank tolerance {rel_tol} must lie in (0, 1)"
        )));
    }
    Ok(())
}

pub(crate) fn rank_of_spectrum(eigs: &[f64], rel_tol: f64) -> usize {
    let max = eigs.iter().cloned().fold(0.0, f64::max);
    if max <= f64::MIN_POSITIVE {
        return 0;
    }
    eigs.iter().filter(|&&e| e > rel_tol * max).count()
}

/// `√(2 (1 − Tr ρ²))`, with the bracket clamped at zero.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    (2.0 * (1.0 - rho.purity()).max(0.0)).sqrt()
}

/// Sorted descending spectrum of `(m + m†)/2`.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::from(0.5);
    let mut eigs: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().cloned().collect();
    eigs.sort_by(|a, b| b.total_cmp(a));
    eigs
}

/// Eigenpairs of the Hermitian part; columns of the matrix are eigenvectors.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let h = (m + m.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(h);
    (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Violation {
    NotHermitian(f64),
    TraceNotOne(f64),
    NotPositive(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotHermitian(d) => write!(f, "not Hermitian (max deviation {d:.3e})"),
            Violation::TraceNotOne(d) => write!(f, "trace differs from 1 by {d:.3e}"),
            Violation::NotPositive(e) => write!(f, "negative eigenvalue {e:.3e}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub hermiticity_deviation: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
}

impl ValidationReport {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        // NaN deviations count as violations.
        if self.hermiticity_deviation.is_nan() || self.hermiticity_deviation > STATE_TOL {
            out.push(Violation::NotHermitian(self.hermiticity_deviation));
        }
        if self.trace_deviation.is_nan() || self.trace_deviation > STATE_TOL {
            out.push(Violation::TraceNotOne(self.trace_deviation));
        }
        if self.min_eigenvalue.is_nan() || self.min_eigenvalue < -PSD_TOL {
            out.push(Violation::NotPositive(self.min_eigenvalue));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            return Ok(());
        }
        let msg = v
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::InvalidState(msg))
    }
}

/// Hermiticity, trace and positivity diagnostics for `rho`.
pub fn validate(rho: &DensityMatrix) -> ValidationReport {
    let m = &rho.matrix;
    let n = m.nrows();
    let mut herm: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            herm = herm.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    let trace_deviation = (m.trace() - C64::from(1.0)).norm();
    let min_eigenvalue = hermitian_eigenvalues(m).last().cloned().unwrap_or(0.0);
    ValidationReport {
        hermiticity_deviation: herm,
        trace_deviation,
        min_eigenvalue,
    }
}
