//! JSON documents for states and local bases.
//!
//! ```json
//! {"kind": "pure", "dims": [2, 2],
//!  "entries": [{"index": [0, 0], "re": 0.7071067811865476, "im": 0.0}, …]}
//! {"kind": "density", "dims": [2],
//!  "entries": [{"row": [0], "col": [0], "re": 0.5, "im": 0.0}, …]}
//! {"kind": "local-basis", "dims": [2, 2],
//!  "unitaries": [[{"row": 0, "col": 0, "re": 1.0, "im": 0.0}, …], …]}
//! ```
//!
//! Entries are sparse; omitted ones are zero. Floats are written in their
//! shortest round-trip form, so save followed by load is exact.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::LocalBasis;
use crate::error::{Error, Result};
use crate::tensor::{DensityMatrix, MultiIndex, PartyStructure, PureState, C64};

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum Document {
    Pure {
        dims: Vec<usize>,
        entries: Vec<PureEntry>,
    },
    Density {
        dims: Vec<usize>,
        entries: Vec<DensityEntry>,
    },
    LocalBasis {
        dims: Vec<usize>,
        unitaries: Vec<Vec<MatrixEntry>>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PureEntry {
    index: Vec<usize>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityEntry {
    row: Vec<usize>,
    col: Vec<usize>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixEntry {
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

/// A loaded state file.
#[derive(Clone, Debug)]
pub enum StateData {
    Pure(PureState),
    Density(DensityMatrix),
}

impl StateData {
    pub fn structure(&self) -> &PartyStructure {
        match self {
            StateData::Pure(p) => p.structure(),
            StateData::Density(r) => r.structure(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            StateData::Pure(p) => p.to_density(),
            StateData::Density(r) => r.clone(),
        }
    }
}

impl From<PureState> for StateData {
    fn from(p: PureState) -> Self {
        StateData::Pure(p)
    }
}

impl From<DensityMatrix> for StateData {
    fn from(r: DensityMatrix) -> Self {
        StateData::Density(r)
    }
}

fn parse_document(text: &str) -> Result<Document> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

fn bad_entry(n: usize, e: Error) -> Error {
    Error::InvalidState(format!("entry {n}: {e}"))
}

/// Parses a `pure` or `density` document and validates the result.
pub fn parse_state(text: &str) -> Result<StateData> {
    match parse_document(text)? {
        Document::Pure { dims, entries } => {
            let s = PartyStructure::new(dims).map_err(|e| Error::InvalidState(e.to_string()))?;
            let mut amps = DVector::zeros(s.total_dim());
            let mut seen = BTreeSet::new();
            for (n, e) in entries.iter().enumerate() {
                let f = s
                    .flat_index(&MultiIndex::new(e.index.clone()))
                    .map_err(|err| bad_entry(n, err))?;
                if !seen.insert(f) {
                    return Err(Error::InvalidState(format!("entry {n}: duplicate index")));
                }
                amps[f] = C64::new(e.re, e.im);
            }
            Ok(StateData::Pure(PureState::new(s, amps)?))
        }
        Document::Density { dims, entries } => {
            let s = PartyStructure::new(dims).map_err(|e| Error::InvalidState(e.to_string()))?;
            let d = s.total_dim();
            let mut m = DMatrix::zeros(d, d);
            let mut seen = BTreeSet::new();
            for (n, e) in entries.iter().enumerate() {
                let r = s
                    .flat_index(&MultiIndex::new(e.row.clone()))
                    .map_err(|err| bad_entry(n, err))?;
                let c = s
                    .flat_index(&MultiIndex::new(e.col.clone()))
                    .map_err(|err| bad_entry(n, err))?;
                if !seen.insert((r, c)) {
                    return Err(Error::InvalidState(format!("entry {n}: duplicate index")));
                }
                m[(r, c)] = C64::new(e.re, e.im);
            }
            Ok(StateData::Density(DensityMatrix::new(s, m)?))
        }
        Document::LocalBasis { .. } => Err(Error::InvalidState(
            "expected a pure or density document, found local-basis".into(),
        )),
    }
}

pub fn state_to_string(state: &StateData) -> String {
    let doc = match state {
        StateData::Pure(p) => {
            let s = p.structure();
            Document::Pure {
                dims: s.dims().to_vec(),
                entries: p
                    .amplitudes()
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != C64::from(0.0))
                    .map(|(f, c)| PureEntry {
                        index: s.multi_index(f).expect("in range").entries().to_vec(),
                        re: c.re,
                        im: c.im,
                    })
                    .collect(),
            }
        }
        StateData::Density(r) => {
            let s = r.structure();
            let d = s.total_dim();
            let m = r.matrix();
            let mut entries = Vec::new();
            for i in 0..d {
                for j in 0..d {
                    let z = m[(i, j)];
                    if z != C64::from(0.0) {
                        entries.push(DensityEntry {
                            row: s.multi_index(i).expect("in range").entries().to_vec(),
                            col: s.multi_index(j).expect("in range").entries().to_vec(),
                            re: z.re,
                            im: z.im,
                        });
                    }
                }
            }
            Document::Density {
                dims: s.dims().to_vec(),
                entries,
            }
        }
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn load_state(path: &Path) -> Result<StateData> {
    parse_state(&fs::read_to_string(path)?)
}

pub fn save_state(path: &Path, state: &StateData) -> Result<()> {
    fs::write(path, state_to_string(state) + "\n")?;
    Ok(())
}

pub fn basis_to_string(basis: &LocalBasis) -> String {
    let doc = Document::LocalBasis {
        dims: basis.dims(),
        unitaries: basis
            .unitaries()
            .iter()
            .map(|u| {
                let mut entries = Vec::new();
                for i in 0..u.nrows() {
                    for j in 0..u.ncols() {
                        let z = u[(i, j)];
                        if z != C64::from(0.0) {
                            entries.push(MatrixEntry {
                                row: i,
                                col: j,
                                re: z.re,
                                im: z.im,
                            });
                        }
                    }
                }
                entries
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn parse_basis(text: &str) -> Result<LocalBasis> {
    match parse_document(text)? {
        Document::LocalBasis { dims, unitaries } => {
            let s = PartyStructure::new(dims).map_err(|e| Error::InvalidState(e.to_string()))?;
            if unitaries.len() != s.parties() {
                return Err(Error::InvalidState(format!(
                    "{} unitaries for {} parties",
                    unitaries.len(),
                    s.parties()
                )));
            }
            let mats = unitaries
                .iter()
                .zip(s.dims())
                .enumerate()
                .map(|(party, (entries, &d))| {
                    let mut m = DMatrix::zeros(d, d);
                    for e in entries {
                        if e.row >= d || e.col >= d {
                            return Err(Error::InvalidState(format!(
                                "unitary {party}: entry ({}, {}) outside {d}x{d}",
                                e.row, e.col
                            )));
                        }
                        m[(e.row, e.col)] = C64::new(e.re, e.im);
                    }
                    Ok(m)
                })
                .collect::<Result<Vec<_>>>()?;
            LocalBasis::new(&s, mats)
        }
        _ => Err(Error::InvalidState(
            "expected a local-basis document".into(),
        )),
    }
}
