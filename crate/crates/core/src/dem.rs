//! Detector error models: `H = D Ω`, `L = Oᵀ Ω` and per-column priors.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::detectors::{analyze, DetectorError, DetectorSet};
use crate::frames::{build_syndrome_matrix, enumerate_errors, SyndromeMatrix};
use crate::gf2::{BitMatrix, BitVec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DemError {
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("prior {0} outside [0, 1]")]
    BadPrior(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorErrorModel {
    /// `d x e`.
    pub h: BitMatrix,
    /// `k x e`.
    pub l: BitMatrix,
    pub priors: Vec<f64>,
    /// Original error index to current column.
    pub merge_map: Vec<usize>,
}

/// Probability that exactly one of two independent flips happens.
pub fn xor_prob(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

impl DetectorErrorModel {
    /// `H = D Ω`, `L = obs Ω` (with `obs` given over measurements).
    pub fn build(
        ds: &DetectorSet,
        sm: &SyndromeMatrix,
        obs: &BitMatrix,
        priors: &[f64],
    ) -> Result<Self, DemError> {
        let d = ds.measurement_matrix();
        let e = sm.num_errors();
        if d.cols() != sm.omega.rows() {
            return Err(DemError::Dimension(format!(
                "D has {} columns, Ω has {} rows",
                d.cols(),
                sm.omega.rows()
            )));
        }
        if obs.cols() != sm.omega.rows() {
            return Err(DemError::Dimension(format!(
                "observables have {} columns, Ω has {} rows",
                obs.cols(),
                sm.omega.rows()
            )));
        }
        let h = d.multiply(&sm.omega).expect("checked");
        let l = obs.multiply(&sm.omega).expect("checked");
        Self::from_matrices(h, l, priors.to_vec()).map(|m| {
            debug_assert_eq!(m.num_errors(), e);
            m
        })
    }

    /// Wraps explicit matrices, checking shapes and priors.
    pub fn from_matrices(h: BitMatrix, l: BitMatrix, priors: Vec<f64>) -> Result<Self, DemError> {
        let e = h.cols();
        if l.cols() != e || priors.len() != e {
            return Err(DemError::Dimension(format!(
                "H has {e} columns, L has {}, priors {}",
                l.cols(),
                priors.len()
            )));
        }
        if let Some(p) = priors.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(DemError::BadPrior(p.to_string()));
        }
        Ok(DetectorErrorModel {
            h,
            l,
            priors,
            merge_map: (0..e).collect(),
        })
    }

    /// Full pipeline for a noisy circuit with declared observables.
    pub fn from_circuit(c: &Circuit) -> Result<Self, DemError> {
        let analysis = analyze(c)?;
        let errs = enumerate_errors(c);
        let sm = build_syndrome_matrix(c, &errs);
        let priors: Vec<f64> = errs.iter().map(|e| e.prob).collect();
        Self::build(&analysis.detectors, &sm, &analysis.observable_matrix(), &priors)
    }

    pub fn num_detectors(&self) -> usize {
        self.h.rows()
    }

    pub fn num_observables(&self) -> usize {
        self.l.rows()
    }

    pub fn num_errors(&self) -> usize {
        self.h.cols()
    }

    /// `(H e, L e)`.
    pub fn syndrome(&self, e: &BitVec) -> Result<(BitVec, BitVec), DemError> {
        if e.len() != self.num_errors() {
            return Err(DemError::Dimension(format!(
                "error vector has length {}, expected {}",
                e.len(),
                self.num_errors()
            )));
        }
        Ok((
            self.h.mul_vec(e).expect("checked"),
            self.l.mul_vec(e).expect("checked"),
        ))
    }

    /// Syndrome and observable flips of a set of columns.
    pub fn syndrome_of(&self, cols: &[usize]) -> (BitVec, BitVec) {
        (self.h.sum_columns(cols), self.l.sum_columns(cols))
    }

    /// Merges columns with identical `(H, L)` columns, in first-occurrence
    /// order, combining priors with [`xor_prob`]. Zero columns are kept.
    pub fn merge_equivalent(&self) -> DetectorErrorModel {
        let ht = self.h.transpose();
        let lt = self.l.transpose();
        let mut index: HashMap<(BitVec, BitVec), usize> = HashMap::new();
        let mut keep: Vec<usize> = Vec::new();
        let mut priors: Vec<f64> = Vec::new();
        let mut col_map = vec![0usize; self.num_errors()];
        for j in 0..self.num_errors() {
            let key = (ht.row(j), lt.row(j));
            match index.get(&key) {
                Some(&k) => {
                    priors[k] = xor_prob(priors[k], self.priors[j]);
                    col_map[j] = k;
                }
                None => {
                    let k = keep.len();
                    index.insert(key, k);
                    keep.push(j);
                    priors.push(self.priors[j]);
                    col_map[j] = k;
                }
            }
        }
        DetectorErrorModel {
            h: self.h.select_columns(&keep),
            l: self.l.select_columns(&keep),
            priors,
            merge_map: self.merge_map.iter().map(|&c| col_map[c]).collect(),
        }
    }

    pub fn export(&self, format: ExportFormat) -> String {
        match format {
            ExportFormat::DemText => self.to_dem_text(),
            ExportFormat::Dot => self.to_dot(),
            ExportFormat::Json => self.to_json(),
        }
    }

    /// One `error(p) D.. L..` line per column.
    pub fn to_dem_text(&self) -> String {
        let ht = self.h.transpose();
        let lt = self.l.transpose();
        let mut s = String::new();
        for j in 0..self.num_errors() {
            write!(s, "error({})", self.priors[j]).unwrap();
            for d in ht.row(j).ones() {
                write!(s, " D{d}").unwrap();
            }
            for o in lt.row(j).ones() {
                write!(s, " L{o}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Tanner graph of `H`: bit nodes `e<j>`, check nodes `d<i>`.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph tanner {\n");
        for j in 0..self.num_errors() {
            writeln!(s, "  e{j} [shape=circle];").unwrap();
        }
        for i in 0..self.num_detectors() {
            writeln!(s, "  d{i} [shape=square];").unwrap();
        }
        let ht = self.h.transpose();
        for j in 0..self.num_errors() {
            for i in ht.row(j).ones() {
                writeln!(s, "  e{j} -- d{i};").unwrap();
            }
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> String {
        let ht = self.h.transpose();
        let lt = self.l.transpose();
        let doc = DemJson {
            num_detectors: self.num_detectors(),
            num_observables: self.num_observables(),
            errors: (0..self.num_errors())
                .map(|j| DemJsonError {
                    p: self.priors[j],
                    detectors: ht.row(j).ones(),
                    observables: lt.row(j).ones(),
                })
                .collect(),
            merge_map: self.merge_map.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, DemError> {
        let doc: DemJson =
            serde_json::from_str(text).map_err(|e| DemError::Dimension(e.to_string()))?;
        let e = doc.errors.len();
        let mut h = BitMatrix::zeros(doc.num_detectors, e);
        let mut l = BitMatrix::zeros(doc.num_observables, e);
        for (j, err) in doc.errors.iter().enumerate() {
            for &d in &err.detectors {
                if d >= doc.num_detectors {
                    return Err(DemError::Dimension(format!("detector D{d} out of range")));
                }
                h.set(d, j, true);
            }
            for &o in &err.observables {
                if o >= doc.num_observables {
                    return Err(DemError::Dimension(format!("observable L{o} out of range")));
                }
                l.set(o, j, true);
            }
        }
        let mut m = Self::from_matrices(h, l, doc.errors.iter().map(|e| e.p).collect())?;
        if doc.merge_map.iter().any(|&c| c >= e) {
            return Err(DemError::Dimension("merge_map entry out of range".into()));
        }
        m.merge_map = doc.merge_map;
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    DemText,
    Dot,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dem-text" | "dem" => Ok(ExportFormat::DemText),
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown format '{other}' (dem-text, dot, json)")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DemJson {
    num_detectors: usize,
    num_observables: usize,
    errors: Vec<DemJsonError>,
    merge_map: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct DemJsonError {
    p: f64,
    detectors: Vec<usize>,
    observables: Vec<usize>,
}
