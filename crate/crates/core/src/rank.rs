//! Schmidt rank and entropy vectors of pure states, the entropy-to-rank
//! bound, tripartite rank feasibility, the four-party rank conjecture and the
//! componentwise partial order on dimensionality vectors.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::seeded_rng;
use crate::tensor::{check_rank_tol, linear_entropy, numerical_rank, PartyStructure, PureState};
use crate::zoo::{ghz, random_pure_state, random_support};

/// Marginal ranks sorted non-increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct RankVector(Vec<usize>);

impl RankVector {
    /// Sorts `ranks` non-increasing. Entries must be positive.
    pub fn from_unsorted(mut ranks: Vec<usize>) -> Result<Self> {
        if ranks.is_empty() || ranks.contains(&0) {
            return Err(Error::arg("rank vector entries must be positive"));
        }
        ranks.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self(ranks))
    }

    pub fn ranks(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn compare(&self, other: &RankVector) -> Result<OrderRelation> {
        compare_rank_vectors(self, other)
    }
}

impl fmt::Display for RankVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Single-party linear entropies sorted non-increasing, with the party
/// realizing each slot. Ties keep ascending party order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyVector {
    pub values: Vec<f64>,
    pub party_of: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderRelation {
    Equal,
    StrictlyBelow,
    StrictlyAbove,
    Incomparable,
}

/// Ranks of every single-party marginal, in party order.
pub fn marginal_ranks(psi: &PureState, rel_tol: f64) -> Result<Vec<usize>> {
    check_rank_tol(rel_tol)?;
    (0..psi.structure().parties())
        .map(|p| numerical_rank(&psi.marginal(&[p])?, rel_tol))
        .collect()
}

pub fn schmidt_rank_vector(psi: &PureState, rel_tol: f64) -> Result<RankVector> {
    RankVector::from_unsorted(marginal_ranks(psi, rel_tol)?)
}

pub fn entropy_vector(psi: &PureState) -> EntropyVector {
    let mut slots: Vec<(usize, f64)> = (0..psi.structure().parties())
        .map(|p| (p, linear_entropy(&psi.marginal(&[p]).expect("valid party"))))
        .collect();
    // stable: equal entropies stay in party order
    slots.sort_by(|a, b| b.1.total_cmp(&a.1));
    EntropyVector {
        values: slots.iter().map(|s| s.1).collect(),
        party_of: slots.iter().map(|s| s.0).collect(),
    }
}

/// Slack subtracted before the ceiling so that an entropy exactly at a
/// threshold `√(2(1−1/r))` maps to `r` despite rounding.
const CEIL_SLACK: f64 = 1e-9;

/// Smallest rank compatible with a single-party linear entropy (or a lower
/// bound on one): `⌈2/(2−E²)⌉`. Non-positive inputs give 1.
pub fn dim_bound_from_entropy(e: f64) -> Result<usize> {
    if e.is_nan() || e >= std::f64::consts::SQRT_2 {
        return Err(Error::arg(format!("entropy {e} outside [0, √2)")));
    }
    if e <= 0.0 {
        return Ok(1);
    }
    let x = 2.0 / (2.0 - e * e);
    Ok(((x - CEIL_SLACK).ceil() as usize).max(1))
}

/// Whether a tripartite pure state with these local ranks exists:
/// after sorting, `r_1 ≤ r_2·r_3`.
pub fn feasible_tripartite(r: [usize; 3]) -> Result<bool> {
    let v = RankVector::from_unsorted(r.to_vec())?;
    let s = v.ranks();
    Ok(s[0] <= s[1] * s[2])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConjectureReport {
    pub holds: bool,
    /// `r_A, r_B, r_C`.
    pub single_ranks: [usize; 3],
    /// `r_AB, r_AC, r_BC`.
    pub pair_ranks: [usize; 3],
    pub lhs: usize,
    pub rhs: usize,
}

/// Evaluates `r_AB·r_AC·r_BC ≥ r_A·r_B·r_C` on the tripartite reduction
/// (fourth party traced out) of a four-party pure state.
pub fn conjecture_check_4party(psi: &PureState, rel_tol: f64) -> Result<ConjectureReport> {
    if psi.structure().parties() != 4 {
        return Err(Error::arg(format!(
            "conjecture check needs 4 parties, got {}",
            psi.structure().parties()
        )));
    }
    check_rank_tol(rel_tol)?;
    let rank = |keep: &[usize]| numerical_rank(&psi.marginal(keep)?, rel_tol);
    let single_ranks = [rank(&[0])?, rank(&[1])?, rank(&[2])?];
    let pair_ranks = [rank(&[0, 1])?, rank(&[0, 2])?, rank(&[1, 2])?];
    Ok(conjecture_verdict(single_ranks, pair_ranks))
}

/// The inequality evaluated on given rank data.
pub fn conjecture_verdict(single_ranks: [usize; 3], pair_ranks: [usize; 3]) -> ConjectureReport {
    let lhs = pair_ranks.iter().product();
    let rhs = single_ranks.iter().product();
    ConjectureReport {
        holds: lhs >= rhs,
        single_ranks,
        pair_ranks,
        lhs,
        rhs,
    }
}

/// Local dimensions used by [`conjecture_scan`].
#[derive(Clone, Debug)]
pub enum ScanDims {
    Fixed(PartyStructure),
    /// Each party's dimension drawn uniformly from `2..=max`.
    RandomUpTo(usize),
}

#[derive(Clone, Debug)]
pub struct ScanViolation {
    pub sample: usize,
    pub report: ConjectureReport,
    pub state: PureState,
}

#[derive(Clone, Debug)]
pub struct ScanSummary {
    pub count: usize,
    pub holds: usize,
    pub equality_cases: usize,
    pub violations: Vec<ScanViolation>,
    /// Four-qubit GHZ, always evaluated alongside the random samples.
    pub ghz_probe: ConjectureReport,
}

/// Checks the four-party conjecture on `count` seeded random states whose
/// support size is drawn uniformly from `1..=D`.
pub fn conjecture_scan(
    count: usize,
    dims: &ScanDims,
    seed: u64,
    rel_tol: f64,
) -> Result<ScanSummary> {
    if count == 0 {
        return Err(Error::arg("scan count must be at least 1"));
    }
    match dims {
        ScanDims::Fixed(s) if s.parties() != 4 => {
            return Err(Error::arg("conjecture scan needs 4-party dims"))
        }
        ScanDims::RandomUpTo(m) if *m < 2 => {
            return Err(Error::arg("maximum scan dimension must be at least 2"))
        }
        _ => {}
    }
    let ghz_probe = conjecture_check_4party(&ghz(&PartyStructure::uniform(4, 2)?), rel_tol)?;

    let results = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_rng(seed, i as u64);
            let structure = match dims {
                ScanDims::Fixed(s) => s.clone(),
                ScanDims::RandomUpTo(m) => {
                    PartyStructure::new((0..4).map(|_| rng.random_range(2..=*m)).collect())?
                }
            };
            let size = rng.random_range(1..=structure.total_dim());
            let sub_seed: u64 = rng.random();
            let support = random_support(&structure, size, sub_seed)?;
            let psi = random_pure_state(&structure, sub_seed, Some(&support))?;
            let report = conjecture_check_4party(&psi, rel_tol)?;
            Ok((i, report, psi))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = ScanSummary {
        count,
        holds: 0,
        equality_cases: 0,
        violations: Vec::new(),
        ghz_probe,
    };
    for (sample, report, state) in results {
        if report.holds {
            summary.holds += 1;
            if report.lhs == report.rhs {
                summary.equality_cases += 1;
            }
        } else {
            summary.violations.push(ScanViolation {
                sample,
                report,
                state,
            });
        }
    }
    Ok(summary)
}

pub fn compare_rank_vectors(a: &RankVector, b: &RankVector) -> Result<OrderRelation> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (mut below, mut above) = (false, false);
    for (x, y) in a.ranks().iter().zip(b.ranks()) {
        match x.cmp(y) {
            Ordering::Less => below = true,
            Ordering::Greater => above = true,
            Ordering::Equal => {}
        }
    }
    Ok(match (below, above) {
        (false, false) => OrderRelation::Equal,
        (true, false) => OrderRelation::StrictlyBelow,
        (false, true) => OrderRelation::StrictlyAbove,
        (true, true) => OrderRelation::Incomparable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{basis_ket, DEFAULT_RANK_TOL};
    use crate::tensor::{MultiIndex, C64};
    use crate::zoo::{bell, canonical_rank_state, psi_332, psi_422, psi_432, state_from_terms};
    use approx::assert_abs_diff_eq;

    fn rv(v: &[usize]) -> RankVector {
        RankVector::from_unsorted(v.to_vec()).unwrap()
    }

    #[test]
    fn named_rank_vectors() {
        assert_eq!(
            schmidt_rank_vector(&psi_332(), DEFAULT_RANK_TOL).unwrap(),
            rv(&[3, 3, 2])
        );
        assert_eq!(
            schmidt_rank_vector(&psi_422(), DEFAULT_RANK_TOL).unwrap(),
            rv(&[4, 2, 2])
        );
        assert_eq!(
            schmidt_rank_vector(&psi_432(), DEFAULT_RANK_TOL).unwrap(),
            rv(&[4, 3, 2])
        );
        let s = PartyStructure::uniform(3, 2).unwrap();
        let prod = basis_ket(&s, &[0, 0, 0].into()).unwrap();
        assert_eq!(
            schmidt_rank_vector(&prod, DEFAULT_RANK_TOL).unwrap(),
            rv(&[1, 1, 1])
        );
    }

    #[test]
    fn psi432_entropy_vector() {
        let e = entropy_vector(&psi_432());
        assert_abs_diff_eq!(e.values[0], 1.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 5f64.sqrt() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[2], 1.0, epsilon = 1e-12);
        assert_eq!(e.party_of, vec![2, 1, 0]);
    }

    #[test]
    fn product_and_bell_entropy_vectors() {
        let s = PartyStructure::uniform(3, 2).unwrap();
        let prod = basis_ket(&s, &[0, 1, 0].into()).unwrap();
        assert!(entropy_vector(&prod).values.iter().all(|v| v.abs() < 1e-7));

        let h = C64::from(1.0);
        let bell0 = state_from_terms(
            &s,
            &[
                (MultiIndex::from([0, 0, 0]), h),
                (MultiIndex::from([1, 1, 0]), h),
            ],
        )
        .unwrap();
        let e = entropy_vector(&bell0);
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-12);
        assert!(e.values[2].abs() < 1e-7);
        assert_eq!(e.party_of, vec![0, 1, 2]);
    }

    #[test]
    fn entropy_bound_examples() {
        assert_eq!(dim_bound_from_entropy(0.0).unwrap(), 1);
        assert_eq!(dim_bound_from_entropy(-0.3).unwrap(), 1);
        assert_eq!(dim_bound_from_entropy(1.2).unwrap(), 4);
        assert_eq!(dim_bound_from_entropy((4.0f64 / 3.0).sqrt()).unwrap(), 3);
        assert_eq!(dim_bound_from_entropy(1.0).unwrap(), 2);
        assert_eq!(dim_bound_from_entropy(1.0 + 1e-6).unwrap(), 3);
        assert!(dim_bound_from_entropy(std::f64::consts::SQRT_2).is_err());
        assert!(dim_bound_from_entropy(f64::NAN).is_err());
    }

    #[test]
    fn feasibility_examples() {
        assert!(feasible_tripartite([4, 3, 2]).unwrap());
        assert!(!feasible_tripartite([5, 2, 2]).unwrap());
        assert!(!feasible_tripartite([2, 5, 2]).unwrap());
        assert!(feasible_tripartite([1, 1, 1]).unwrap());
        assert!(feasible_tripartite([0, 1, 1]).is_err());
    }

    #[test]
    fn canonical_states_examples() {
        let r = |b, c, k| {
            schmidt_rank_vector(&canonical_rank_state(b, c, k).unwrap(), DEFAULT_RANK_TOL).unwrap()
        };
        assert_eq!(r(2, 2, 4), rv(&[4, 2, 2]));
        assert_eq!(r(2, 2, 3), rv(&[3, 2, 2]));
        assert_eq!(r(1, 1, 1), rv(&[1, 1, 1]));
        assert_eq!(r(3, 2, 4), rv(&[4, 3, 2]));
    }

    #[test]
    fn conjecture_examples() {
        let ghz4 = ghz(&PartyStructure::uniform(4, 2).unwrap());
        let rep = conjecture_check_4party(&ghz4, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rep.single_ranks, [2, 2, 2]);
        assert_eq!(rep.pair_ranks, [2, 2, 2]);
        assert!(rep.holds && rep.lhs == 8 && rep.rhs == 8);

        let s = PartyStructure::uniform(4, 2).unwrap();
        let prod = basis_ket(&s, &[0, 0, 0, 0].into()).unwrap();
        let rep = conjecture_check_4party(&prod, DEFAULT_RANK_TOL).unwrap();
        assert!(rep.holds && rep.lhs == 1 && rep.rhs == 1);

        let bad = conjecture_verdict([2, 2, 2], [1, 1, 1]);
        assert!(!bad.holds);
        assert_eq!((bad.lhs, bad.rhs), (1, 8));

        assert!(conjecture_check_4party(&psi_432(), DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn small_scan_is_deterministic() {
        let dims = ScanDims::RandomUpTo(3);
        let a = conjecture_scan(200, &dims, 5, DEFAULT_RANK_TOL).unwrap();
        let b = conjecture_scan(200, &dims, 5, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(a.holds, b.holds);
        assert_eq!(a.equality_cases, b.equality_cases);
        assert!(a.violations.is_empty());
        assert!(conjecture_scan(0, &dims, 5, DEFAULT_RANK_TOL).is_err());
        let three = ScanDims::Fixed(PartyStructure::uniform(3, 2).unwrap());
        assert!(conjecture_scan(1, &three, 5, DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn order_relation_examples() {
        use OrderRelation::*;
        assert_eq!(
            compare_rank_vectors(&rv(&[4, 2, 2]), &rv(&[3, 3, 2])).unwrap(),
            Incomparable
        );
        assert_eq!(
            compare_rank_vectors(&rv(&[3, 3, 2]), &rv(&[4, 3, 2])).unwrap(),
            StrictlyBelow
        );
        assert_eq!(
            compare_rank_vectors(&rv(&[4, 3, 2]), &rv(&[3, 3, 2])).unwrap(),
            StrictlyAbove
        );
        assert_eq!(
            compare_rank_vectors(&rv(&[2, 2, 2]), &rv(&[2, 2, 2])).unwrap(),
            Equal
        );
        assert!(compare_rank_vectors(&rv(&[2, 2]), &rv(&[2, 2, 2])).is_err());
    }

    #[test]
    fn bipartite_case_has_equal_ranks() {
        let r = schmidt_rank_vector(&bell(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(r, rv(&[2, 2]));
    }
}
