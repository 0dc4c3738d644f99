//! Exhaustive minimum-weight decoding and syndrome lookup tables.

use std::collections::HashMap;

use thiserror::Error;

use crate::dem::DetectorErrorModel;
use crate::gf2::BitVec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecoderError {
    #[error("syndrome has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("lookup table needs {needed} error sets, budget is {budget}")]
    Budget { needed: u128, budget: u128 },
}

/// Default limit on the number of error sets a lookup table may enumerate.
pub const LOOKUP_BUDGET: u128 = 20_000_000;

fn log_prior(dem: &DetectorErrorModel, cols: &[usize]) -> f64 {
    cols.iter().map(|&j| dem.priors[j].ln()).sum()
}

/// Whether `a` beats the incumbent `b` of the same weight: higher prior
/// product wins; earlier (lexicographic) sets win ties because candidates are
/// visited in lexicographic order.
fn better(a: f64, b: f64) -> bool {
    a > b
}

struct Columns {
    h: Vec<BitVec>,
    by_syndrome: HashMap<BitVec, Vec<usize>>,
}

impl Columns {
    fn new(dem: &DetectorErrorModel) -> Self {
        let ht = dem.h.transpose();
        let h: Vec<BitVec> = (0..dem.num_errors()).map(|j| ht.row(j)).collect();
        let mut by_syndrome: HashMap<BitVec, Vec<usize>> = HashMap::new();
        for (j, c) in h.iter().enumerate() {
            by_syndrome.entry(c.clone()).or_default().push(j);
        }
        Columns { h, by_syndrome }
    }
}

/// Minimum-weight error set with `H e = s` and at most `max_w` columns.
/// Returns ascending column indices, or `None` if nothing within `max_w`
/// explains the syndrome.
pub fn decode_minweight(
    dem: &DetectorErrorModel,
    s: &BitVec,
    max_w: usize,
) -> Result<Option<Vec<usize>>, DecoderError> {
    if s.len() != dem.num_detectors() {
        return Err(DecoderError::Length {
            expected: dem.num_detectors(),
            got: s.len(),
        });
    }
    Ok(decode_with(dem, &Columns::new(dem), s, max_w))
}

fn decode_with(
    dem: &DetectorErrorModel,
    cols: &Columns,
    s: &BitVec,
    max_w: usize,
) -> Option<Vec<usize>> {
    if s.is_zero() {
        return Some(Vec::new());
    }
    let e = cols.h.len();
    for w in 1..=max_w.min(e) {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut prefix = Vec::with_capacity(w);
        walk(dem, cols, &mut prefix, s.clone(), w, &mut best);
        if let Some((_, set)) = best {
            return Some(set);
        }
    }
    None
}

/// Visits all `w`-subsets extending `prefix` whose syndrome equals the
/// residual `r` of the prefix, in lexicographic order.
fn walk(
    dem: &DetectorErrorModel,
    cols: &Columns,
    prefix: &mut Vec<usize>,
    r: BitVec,
    w: usize,
    best: &mut Option<(f64, Vec<usize>)>,
) {
    let e = cols.h.len();
    let start = prefix.last().map_or(0, |&l| l + 1);
    if prefix.len() == w - 1 {
        let Some(bucket) = cols.by_syndrome.get(&r) else {
            return;
        };
        let from = bucket.partition_point(|&j| j < start);
        for &j in &bucket[from..] {
            prefix.push(j);
            let lp = log_prior(dem, prefix);
            if best.as_ref().is_none_or(|(b, _)| better(lp, *b)) {
                *best = Some((lp, prefix.clone()));
            }
            prefix.pop();
        }
        return;
    }
    let remaining = w - prefix.len();
    for j in start..=e.saturating_sub(remaining) {
        prefix.push(j);
        walk(dem, cols, prefix, r.xor(&cols.h[j]), w, best);
        prefix.pop();
    }
}

/// Syndrome to decoding decision for every syndrome reachable with at most
/// `t` errors.
#[derive(Clone, Debug)]
pub struct LookupTable {
    pub t: usize,
    entries: HashMap<BitVec, LookupEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LookupEntry {
    pub columns: Vec<usize>,
    /// Predicted observable flips `L e`.
    pub observables: BitVec,
    log_prior: f64,
}

impl LookupTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, s: &BitVec) -> Option<&LookupEntry> {
        self.entries.get(s)
    }

    pub fn syndromes(&self) -> impl Iterator<Item = &BitVec> {
        self.entries.keys()
    }
}

fn binomial_sum(e: usize, t: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for k in 0..=t.min(e) {
        total = total.saturating_add(c);
        c = c.saturating_mul((e - k) as u128) / (k as u128 + 1);
    }
    total
}

/// Tabulates the decision of [`decode_minweight`] for all syndromes of
/// error sets of weight at most `t`.
pub fn build_lookup(dem: &DetectorErrorModel, t: usize) -> Result<LookupTable, DecoderError> {
    build_lookup_with_budget(dem, t, LOOKUP_BUDGET)
}

pub fn build_lookup_with_budget(
    dem: &DetectorErrorModel,
    t: usize,
    budget: u128,
) -> Result<LookupTable, DecoderError> {
    let e = dem.num_errors();
    let needed = binomial_sum(e, t);
    if needed > budget {
        return Err(DecoderError::Budget { needed, budget });
    }
    let ht = dem.h.transpose();
    let lt = dem.l.transpose();
    let h: Vec<BitVec> = (0..e).map(|j| ht.row(j)).collect();
    let l: Vec<BitVec> = (0..e).map(|j| lt.row(j)).collect();
    let mut entries: HashMap<BitVec, LookupEntry> = HashMap::new();
    entries.insert(
        BitVec::zeros(dem.num_detectors()),
        LookupEntry {
            columns: Vec::new(),
            observables: BitVec::zeros(dem.num_observables()),
            log_prior: 0.0,
        },
    );
    // Weight classes in increasing order; within a class, lexicographic.
    for w in 1..=t.min(e) {
        let mut fresh: HashMap<BitVec, LookupEntry> = HashMap::new();
        let mut idx: Vec<usize> = (0..w).collect();
        loop {
            let mut s = BitVec::zeros(dem.num_detectors());
            let mut o = BitVec::zeros(dem.num_observables());
            for &j in &idx {
                s.xor_assign(&h[j]);
                o.xor_assign(&l[j]);
            }
            if !entries.contains_key(&s) {
                let lp = log_prior(dem, &idx);
                match fresh.get(&s) {
                    Some(cur) if !better(lp, cur.log_prior) => {}
                    _ => {
                        fresh.insert(
                            s,
                            LookupEntry {
                                columns: idx.clone(),
                                observables: o,
                                log_prior: lp,
                            },
                        );
                    }
                }
            }
            let mut i = w;
            while i > 0 && idx[i - 1] == e - w + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for k in i..w {
                idx[k] = idx[k - 1] + 1;
            }
        }
        entries.extend(fresh);
    }
    Ok(LookupTable { t, entries })
}

/// Per-observable logical-error bits for a measured record:
/// `o_i^T m ⊕ (L e_inferred)_i ≠ b_i`.
pub fn logical_error(
    dem: &DetectorErrorModel,
    observed: &BitVec,
    expected: &BitVec,
    e_inferred: &[usize],
) -> BitVec {
    let (_, predicted) = dem.syndrome_of(e_inferred);
    observed.xor(&predicted).xor(expected)
}

/// Simulation form: the sampled error is known, so the comparison is between
/// `L e_sample` and `L e_inferred` (expected parity 0).
pub fn logical_error_sampled(
    dem: &DetectorErrorModel,
    e_sample: &[usize],
    e_inferred: &[usize],
) -> BitVec {
    let (_, a) = dem.syndrome_of(e_sample);
    let (_, b) = dem.syndrome_of(e_inferred);
    a.xor(&b)
}

/// Decoder choice for sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderKind {
    MinWeight { max_w: usize },
    Lookup { t: usize },
}

impl std::str::FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minweight" => Ok(DecoderKind::MinWeight { max_w: 4 }),
            "lookup" => Ok(DecoderKind::Lookup { t: 2 }),
            other => Err(format!("unknown decoder '{other}' (minweight, lookup)")),
        }
    }
}

/// A ready-to-use decoder predicting observable flips from syndromes.
pub struct Decoder<'a> {
    dem: &'a DetectorErrorModel,
    cols: Columns,
    table: Option<LookupTable>,
    max_w: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(dem: &'a DetectorErrorModel, kind: DecoderKind) -> Result<Self, DecoderError> {
        let (table, max_w) = match kind {
            DecoderKind::MinWeight { max_w } => (None, max_w),
            DecoderKind::Lookup { t } => (Some(build_lookup(dem, t)?), t.max(4)),
        };
        Ok(Decoder {
            dem,
            cols: Columns::new(dem),
            table,
            max_w,
        })
    }

    /// Predicted observable flips, or `None` on failure to decode. Lookup
    /// misses fall back to minimum-weight search.
    pub fn predict(&self, s: &BitVec) -> Option<BitVec> {
        if let Some(entry) = self.table.as_ref().and_then(|t| t.get(s)) {
            return Some(entry.observables.clone());
        }
        decode_with(self.dem, &self.cols, s, self.max_w).map(|e| self.dem.syndrome_of(&e).1)
    }
}
