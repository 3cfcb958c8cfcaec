//! Certification over the `(p, q)` noise simplex of the `ψ432` test family.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rank::dim_bound_from_entropy;
use crate::witness::{witness_value, PairSet, WitnessConvention};
use crate::zoo::{test_state, NoiseParams};

pub const CSV_HEADER: &str = "p,q,W1,W2,W3,r1,r2,r3";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub q: f64,
    pub witness: [f64; 3],
    pub certified: [usize; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepGrid {
    pub p_steps: usize,
    pub q_steps: usize,
    /// Row-major in `p` then `q`, only points with `p + q ≤ 1`.
    pub rows: Vec<SweepRow>,
}

fn check_sets(sets: &[PairSet]) -> Result<()> {
    if sets.len() != 3 || sets.iter().any(|s| s.structure().dims() != [4, 4, 4]) {
        return Err(Error::arg(
            "the noise sweep needs three pair sets on dims 4,4,4",
        ));
    }
    Ok(())
}

/// Witness values and certified bounds of `ρ_test(p, q)`.
pub fn evaluate_point(
    p: f64,
    q: f64,
    sets: &[PairSet],
    convention: WitnessConvention,
) -> Result<SweepRow> {
    check_sets(sets)?;
    let rho = test_state(NoiseParams::new(p, q)?);
    let mut witness = [0.0; 3];
    let mut certified = [1; 3];
    for k in 0..3 {
        witness[k] = witness_value(&rho, &sets[k], k + 1, convention)?;
        certified[k] = dim_bound_from_entropy(witness[k].max(0.0))?;
    }
    Ok(SweepRow {
        p,
        q,
        witness,
        certified,
    })
}

fn grid_coord(i: usize, steps: usize) -> f64 {
    i as f64 / (steps - 1) as f64
}

/// Uniform `p_steps × q_steps` grid over `[0,1]²` restricted to the simplex.
pub fn sweep(
    p_steps: usize,
    q_steps: usize,
    sets: &[PairSet],
    convention: WitnessConvention,
) -> Result<SweepGrid> {
    if p_steps < 2 || q_steps < 2 {
        return Err(Error::arg("sweep needs at least 2 steps per axis"));
    }
    check_sets(sets)?;
    let per_p = (0..p_steps)
        .into_par_iter()
        .map(|i| {
            let p = grid_coord(i, p_steps);
            (0..q_steps)
                .map(|j| grid_coord(j, q_steps))
                .filter(|q| p + q <= 1.0 + NoiseParams::SIMPLEX_SLACK)
                .map(|q| evaluate_point(p, q, sets, convention))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid {
        p_steps,
        q_steps,
        rows: per_p.into_iter().flatten().collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region {
    pub certified: [usize; 3],
    pub cells: usize,
    pub fraction: f64,
}

/// Distinct certified vectors, lexicographic, with their share of grid points.
pub fn region_summary(grid: &SweepGrid) -> Vec<Region> {
    let mut counts: BTreeMap<[usize; 3], usize> = BTreeMap::new();
    for row in &grid.rows {
        *counts.entry(row.certified).or_default() += 1;
    }
    let total = grid.rows.len().max(1) as f64;
    counts
        .into_iter()
        .map(|(certified, cells)| Region {
            certified,
            cells,
            fraction: cells as f64 / total,
        })
        .collect()
}

/// `x` with 12 significant digits, trailing zeros trimmed (like `%.12g`).
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let fixed = format!("{:.*}", (11 - exp) as usize, x);
    trim_zeros(&fixed).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_line(row: &SweepRow) -> String {
    let [w1, w2, w3] = row.witness.map(format_sig12);
    let [r1, r2, r3] = row.certified;
    format!(
        "{},{},{w1},{w2},{w3},{r1},{r2},{r3}",
        format_sig12(row.p),
        format_sig12(row.q)
    )
}

pub fn write_csv<W: Write>(grid: &SweepGrid, mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in &grid.rows {
        writeln!(out, "{}", csv_line(row))?;
    }
    Ok(())
}

/// One-parameter edges of the noise simplex, parametrized by `p ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseEdge {
    /// `q = 0`: target plus white noise.
    White,
    /// `q = 1 − p`: target plus dephasing, no white noise.
    Dephasing,
}

impl NoiseEdge {
    fn q(self, p: f64) -> f64 {
        match self {
            NoiseEdge::White => 0.0,
            NoiseEdge::Dephasing => (1.0 - p).max(0.0),
        }
    }
}

/// Scans `points` equally spaced values of `p` on `edge` and returns the
/// midpoint of the first grid cell across which the certified bound of slot
/// `k` rises from below `target` to at least `target`.
pub fn locate_jump(
    edge: NoiseEdge,
    points: usize,
    k: usize,
    target: usize,
    sets: &[PairSet],
    convention: WitnessConvention,
) -> Result<Option<f64>> {
    if points < 2 {
        return Err(Error::arg("edge scan needs at least 2 points"));
    }
    if !(1..=3).contains(&k) {
        return Err(Error::arg(format!("slot k={k} outside [1, 3]")));
    }
    check_sets(sets)?;
    let certified = (0..points)
        .into_par_iter()
        .map(|i| {
            let p = grid_coord(i, points);
            let rho = test_state(NoiseParams::new(p, edge.q(p))?);
            let w = witness_value(&rho, &sets[k - 1], k, convention)?;
            dim_bound_from_entropy(w.max(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(certified
        .windows(2)
        .position(|w| w[0] < target && w[1] >= target)
        .map(|i| 0.5 * (grid_coord(i, points) + grid_coord(i + 1, points))))
}
