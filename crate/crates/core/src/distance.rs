//! Exhaustive minimum-weight search for undetected errors.
//!
//! Weights are tried in increasing order. Within a weight, `(k-1)`-subsets
//! are walked in lexicographic order and the last column is found by hashing
//! the residual syndrome, so the first hit is the lexicographically smallest
//! witness of that weight.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::dem::DetectorErrorModel;
use crate::gf2::BitVec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DistanceError {
    #[error("model has no observables")]
    NoObservable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub weight: usize,
    /// Ascending column indices.
    pub columns: Vec<usize>,
}

/// Smallest set of columns with `H e = 0` and `L e != 0`, up to `max_w`.
pub fn circuit_distance(
    dem: &DetectorErrorModel,
    max_w: usize,
) -> Result<Option<Witness>, DistanceError> {
    if dem.num_observables() == 0 {
        return Err(DistanceError::NoObservable);
    }
    Ok(min_undetected_weight(dem, max_w, true))
}

/// Smallest nonzero set of columns with `H e = 0` (and `L e != 0` when
/// `require_observable_flip`), up to `max_w`.
pub fn min_undetected_weight(
    dem: &DetectorErrorModel,
    max_w: usize,
    require_observable_flip: bool,
) -> Option<Witness> {
    let ht = dem.h.transpose();
    let lt = dem.l.transpose();
    let e = dem.num_errors();
    let hcols: Vec<BitVec> = (0..e).map(|j| ht.row(j)).collect();
    let lcols: Vec<BitVec> = (0..e).map(|j| lt.row(j)).collect();
    let mut by_syndrome: HashMap<&BitVec, Vec<usize>> = HashMap::new();
    for (j, c) in hcols.iter().enumerate() {
        by_syndrome.entry(c).or_default().push(j);
    }
    let search = Search {
        hcols: &hcols,
        lcols: &lcols,
        by_syndrome: &by_syndrome,
        require: require_observable_flip,
        d: dem.num_detectors(),
    };
    (1..=max_w.min(e)).find_map(|w| search.weight(w))
}

struct Search<'a> {
    hcols: &'a [BitVec],
    lcols: &'a [BitVec],
    by_syndrome: &'a HashMap<&'a BitVec, Vec<usize>>,
    require: bool,
    d: usize,
}

impl Search<'_> {
    fn weight(&self, w: usize) -> Option<Witness> {
        let e = self.hcols.len();
        if w == 1 {
            let zero = BitVec::zeros(self.d);
            return (0..e)
                .find(|&j| self.hcols[j] == zero && (!self.require || !self.lcols[j].is_zero()))
                .map(|j| Witness {
                    weight: 1,
                    columns: vec![j],
                });
        }
        (0..e).into_par_iter().find_map_first(|first| {
            let mut prefix = vec![first];
            let s = self.hcols[first].clone();
            let o = self.lcols[first].clone();
            self.extend(&mut prefix, s, o, w)
        })
    }

    /// Depth-first lexicographic extension of `prefix` to `w` columns.
    fn extend(&self, prefix: &mut Vec<usize>, s: BitVec, o: BitVec, w: usize) -> Option<Witness> {
        let e = self.hcols.len();
        let last = *prefix.last().unwrap();
        if prefix.len() == w - 1 {
            let bucket = self.by_syndrome.get(&s)?;
            let start = bucket.partition_point(|&j| j <= last);
            for &j in &bucket[start..] {
                if !self.require || !o.xor(&self.lcols[j]).is_zero() {
                    let mut columns = prefix.clone();
                    columns.push(j);
                    return Some(Witness { weight: w, columns });
                }
            }
            return None;
        }
        let remaining = w - prefix.len();
        for j in last + 1..=e.saturating_sub(remaining) {
            prefix.push(j);
            let found = self.extend(prefix, s.xor(&self.hcols[j]), o.xor(&self.lcols[j]), w);
            prefix.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

/// Checks the defining predicates for a witness.
pub fn is_undetected_logical(dem: &DetectorErrorModel, columns: &[usize]) -> bool {
    let (s, o) = dem.syndrome_of(columns);
    s.is_zero() && !o.is_zero()
}
