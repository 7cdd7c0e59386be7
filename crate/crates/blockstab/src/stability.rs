//! Stability of cores between two time periods.
//!
//! Two fitted partitions are compared through pair-consistency indices: the
//! Rand index and the two Wallace indices, their modified variants that
//! route newcomers and departures into synthetic clusters, the closed-form
//! adjusted Rand index and a Monte-Carlo correction for chance that
//! recenters any raw index so that independent random partitions score 0
//! and identical partitions score 1.

use crate::blockmodel::Partition;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StabilityError {
    #[error("partitions cover different unit sets (e.g. `{0}` on one side only)")]
    UnitSetMismatch(String),
    #[error("{0} is undefined: {1}")]
    Undefined(&'static str, &'static str),
    #[error("adjusted Rand denominator degenerates and the partitions differ")]
    DegenerateAri,
    #[error("chance correction is degenerate: the null mean equals 1")]
    DegenerateNull,
    #[error("raw index undefined in every Monte-Carlo replicate")]
    AllReplicatesUndefined,
    #[error("replicates must be at least 1")]
    NoReplicates,
}

/// A flat clustering: unit → cluster label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatPartition {
    map: BTreeMap<String, u32>,
}

impl FlatPartition {
    pub fn new(map: BTreeMap<String, u32>) -> Self {
        FlatPartition { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn label_of(&self, unit: &str) -> Option<u32> {
        self.map.get(unit).copied()
    }

    pub fn units(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    /// Restriction to the given units.
    pub fn restricted_to(&self, units: &BTreeSet<String>) -> FlatPartition {
        FlatPartition {
            map: self
                .map
                .iter()
                .filter(|(u, _)| units.contains(*u))
                .map(|(u, &l)| (u.clone(), l))
                .collect(),
        }
    }
}

/// Two aligned partitions with their vertex turnover sets.
#[derive(Debug, Clone)]
pub struct TemporalPair {
    pub p1: Partition,
    pub p2: Partition,
    pub newcomers: BTreeSet<String>,
    pub departures: BTreeSet<String>,
    pub persistent: BTreeSet<String>,
}

/// Computes newcomers (second period only), departures (first period only)
/// and persistent vertices from the memberships of the two partitions.
pub fn align(p1: Partition, p2: Partition) -> TemporalPair {
    let v1: BTreeSet<String> = p1.vertices().cloned().collect();
    let v2: BTreeSet<String> = p2.vertices().cloned().collect();
    TemporalPair {
        newcomers: v2.difference(&v1).cloned().collect(),
        departures: v1.difference(&v2).cloned().collect(),
        persistent: v1.intersection(&v2).cloned().collect(),
        p1,
        p2,
    }
}

/// Which vertices count as the instability features routed into the
/// synthetic clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoping {
    /// Compare core membership only: units in cores in exactly one period
    /// are the features (into-cores / out-of-cores), regardless of whether
    /// they are literal newcomers or departures.
    Cores,
    /// Compare the full partitions; only literal network newcomers and
    /// departures are features.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Both,
    NewcomersOnly,
    DeparturesOnly,
}

/// Units split by how they enter the comparison, with their real labels.
struct ScopedSets {
    persistent: BTreeSet<String>,
    newcomer_side: BTreeSet<String>,
    departure_side: BTreeSet<String>,
    u_labels: BTreeMap<String, u32>,
    v_labels: BTreeMap<String, u32>,
}

fn scoped_sets(tp: &TemporalPair, scoping: Scoping) -> ScopedSets {
    let (u_labels, v_labels) = match scoping {
        Scoping::Cores => (tp.p1.core_labels(), tp.p2.core_labels()),
        Scoping::Literal => (tp.p1.full_labels(), tp.p2.full_labels()),
    };
    let in_u: BTreeSet<String> = u_labels.keys().cloned().collect();
    let in_v: BTreeSet<String> = v_labels.keys().cloned().collect();
    ScopedSets {
        persistent: in_u.intersection(&in_v).cloned().collect(),
        newcomer_side: in_v.difference(&in_u).cloned().collect(),
        departure_side: in_u.difference(&in_v).cloned().collect(),
        u_labels,
        v_labels,
    }
}

/// The modified partition pair U', V' over a shared unit set. Included
/// newcomers form the synthetic cluster on the first-period side and keep
/// their real cluster on the second-period side; departures symmetrically.
#[derive(Debug, Clone)]
pub struct ModifiedPartitionPair {
    pub u_prime: FlatPartition,
    pub v_prime: FlatPartition,
    pub mode: Mode,
}

pub fn modified_partitions(
    tp: &TemporalPair,
    mode: Mode,
    scoping: Scoping,
) -> ModifiedPartitionPair {
    let sets = scoped_sets(tp, scoping);
    let take_newcomers = matches!(mode, Mode::Both | Mode::NewcomersOnly);
    let take_departures = matches!(mode, Mode::Both | Mode::DeparturesOnly);

    let syn_u = sets.u_labels.values().max().map_or(0, |m| m + 1);
    let syn_v = sets.v_labels.values().max().map_or(0, |m| m + 1);

    let mut u_prime = BTreeMap::new();
    let mut v_prime = BTreeMap::new();
    for unit in &sets.persistent {
        u_prime.insert(unit.clone(), sets.u_labels[unit]);
        v_prime.insert(unit.clone(), sets.v_labels[unit]);
    }
    if take_newcomers {
        for unit in &sets.newcomer_side {
            u_prime.insert(unit.clone(), syn_u);
            v_prime.insert(unit.clone(), sets.v_labels[unit]);
        }
    }
    if take_departures {
        for unit in &sets.departure_side {
            u_prime.insert(unit.clone(), sets.u_labels[unit]);
            v_prime.insert(unit.clone(), syn_v);
        }
    }
    ModifiedPartitionPair {
        u_prime: FlatPartition::new(u_prime),
        v_prime: FlatPartition::new(v_prime),
        mode,
    }
}

/// Counts of unordered unit pairs by how the two partitions treat them:
/// `a` together–together, `b` together–apart, `c` apart–together,
/// `d` apart–apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }
}

fn choose2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

/// Aligned label vectors over the common (sorted) unit set.
fn aligned_labels(
    u: &FlatPartition,
    v: &FlatPartition,
) -> Result<(Vec<u32>, Vec<u32>), StabilityError> {
    if u.len() != v.len() {
        let missing = u
            .units()
            .find(|x| v.label_of(x).is_none())
            .or_else(|| v.units().find(|x| u.label_of(x).is_none()));
        return Err(StabilityError::UnitSetMismatch(
            missing.cloned().unwrap_or_default(),
        ));
    }
    let mut lu = Vec::with_capacity(u.len());
    let mut lv = Vec::with_capacity(u.len());
    for (unit, &label) in &u.map {
        let other = v
            .label_of(unit)
            .ok_or_else(|| StabilityError::UnitSetMismatch(unit.clone()))?;
        lu.push(label);
        lv.push(other);
    }
    Ok((lu, lv))
}

fn counts_from_labels(lu: &[u32], lv: &[u32]) -> PairCounts {
    debug_assert_eq!(lu.len(), lv.len());
    let n = lu.len() as u64;
    let mut cells: HashMap<(u32, u32), u64> = HashMap::new();
    let mut rows: HashMap<u32, u64> = HashMap::new();
    let mut cols: HashMap<u32, u64> = HashMap::new();
    for (&x, &y) in lu.iter().zip(lv) {
        *cells.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let a: u64 = cells.values().map(|&c| choose2(c)).sum();
    let same_u: u64 = rows.values().map(|&c| choose2(c)).sum();
    let same_v: u64 = cols.values().map(|&c| choose2(c)).sum();
    let b = same_u - a;
    let c = same_v - a;
    let d = choose2(n) - a - b - c;
    PairCounts { a, b, c, d }
}

/// Pair counts between two flat partitions over the same unit set.
pub fn pair_counts(u: &FlatPartition, v: &FlatPartition) -> Result<PairCounts, StabilityError> {
    let (lu, lv) = aligned_labels(u, v)?;
    Ok(counts_from_labels(&lu, &lv))
}

/// `RI = (a + d) / (a + b + c + d)`.
pub fn rand_index(pc: &PairCounts) -> Result<f64, StabilityError> {
    if pc.total() == 0 {
        return Err(StabilityError::Undefined("RI", "no unit pairs"));
    }
    Ok((pc.a + pc.d) as f64 / pc.total() as f64)
}

/// `WI' = a / (a + b)` — only splits lower the value.
pub fn wallace_split(pc: &PairCounts) -> Result<f64, StabilityError> {
    if pc.a + pc.b == 0 {
        return Err(StabilityError::Undefined(
            "WI'",
            "no pair shares a first-period cluster",
        ));
    }
    Ok(pc.a as f64 / (pc.a + pc.b) as f64)
}

/// `WI'' = a / (a + c)` — only merges lower the value.
pub fn wallace_merge(pc: &PairCounts) -> Result<f64, StabilityError> {
    if pc.a + pc.c == 0 {
        return Err(StabilityError::Undefined(
            "WI''",
            "no pair shares a second-period cluster",
        ));
    }
    Ok(pc.a as f64 / (pc.a + pc.c) as f64)
}

/// Closed-form adjusted Rand index (contingency form). When the denominator
/// degenerates the value is 1 for equal partitions and an error otherwise.
pub fn adjusted_rand(u: &FlatPartition, v: &FlatPartition) -> Result<f64, StabilityError> {
    let (lu, lv) = aligned_labels(u, v)?;
    let n = lu.len() as u64;
    if n < 2 {
        return Err(StabilityError::Undefined("ARI", "fewer than 2 units"));
    }
    let pc = counts_from_labels(&lu, &lv);
    let sum_cells = pc.a as f64;
    let same_u = (pc.a + pc.b) as f64;
    let same_v = (pc.a + pc.c) as f64;
    let expected = same_u * same_v / choose2(n) as f64;
    let max_index = 0.5 * (same_u + same_v);
    let denom = max_index - expected;
    if denom.abs() < 1e-12 {
        if pc.b == 0 && pc.c == 0 {
            return Ok(1.0);
        }
        return Err(StabilityError::DegenerateAri);
    }
    Ok((sum_cells - expected) / denom)
}

/// Deterministic order-independent sum.
fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Result of a Monte-Carlo chance correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McAdjusted {
    pub value: f64,
    pub null_mean: f64,
    /// Replicates where the raw index was undefined.
    pub skipped: usize,
}

/// Chance-corrects `raw_index` by the permutation null: in every replicate
/// the unit labels of each partition are independently shuffled, which
/// preserves all cluster sizes (synthetic clusters included). The adjusted
/// value is `(raw - mean) / (1 - mean)`.
pub fn mc_adjust<F>(
    raw_index: F,
    u: &FlatPartition,
    v: &FlatPartition,
    replicates: usize,
    seed: u64,
) -> Result<McAdjusted, StabilityError>
where
    F: Fn(&PairCounts) -> Result<f64, StabilityError> + Sync,
{
    if replicates == 0 {
        return Err(StabilityError::NoReplicates);
    }
    let (lu, lv) = aligned_labels(u, v)?;
    let raw = raw_index(&counts_from_labels(&lu, &lv))?;

    let samples: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut pu = lu.clone();
            let mut pv = lv.clone();
            pu.shuffle(&mut rng);
            pv.shuffle(&mut rng);
            raw_index(&counts_from_labels(&pu, &pv)).ok()
        })
        .collect();
    let defined: Vec<f64> = samples.iter().filter_map(|s| *s).collect();
    let skipped = replicates - defined.len();
    if defined.is_empty() {
        return Err(StabilityError::AllReplicatesUndefined);
    }
    let null_mean = pairwise_sum(&defined) / defined.len() as f64;
    if 1.0 - null_mean < 1e-12 {
        return Err(StabilityError::DegenerateNull);
    }
    Ok(McAdjusted {
        value: (raw - null_mean) / (1.0 - null_mean),
        null_mean,
        skipped,
    })
}

/// One index of the report: the raw value and its chance-corrected
/// counterpart, either of which may be undefined.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct IndexValue {
    pub raw: Option<f64>,
    pub adjusted: Option<f64>,
    pub skipped_replicates: usize,
}

/// The nine stability indices plus the raw pair counts behind them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub ari: IndexValue,
    pub awi_split: IndexValue,
    pub awi_merge: IndexValue,
    pub mari1: IndexValue,
    pub mawis1: IndexValue,
    pub mawim1: IndexValue,
    pub mari2: IndexValue,
    pub mawis2: IndexValue,
    pub mawim2: IndexValue,
    pub persistent_counts: Option<PairCounts>,
    pub mode1_counts: Option<PairCounts>,
    pub mode2_counts: Option<PairCounts>,
    pub scoping: Scoping,
    pub replicates: usize,
    pub seed: u64,
}

impl StabilityReport {
    /// The nine adjusted values in report column order.
    pub fn adjusted_values(&self) -> [Option<f64>; 9] {
        [
            self.ari.adjusted,
            self.awi_split.adjusted,
            self.awi_merge.adjusted,
            self.mari1.adjusted,
            self.mawis1.adjusted,
            self.mawim1.adjusted,
            self.mari2.adjusted,
            self.mawis2.adjusted,
            self.mawim2.adjusted,
        ]
    }

    pub const COLUMNS: [&'static str; 9] = [
        "ARI", "AWI_split", "AWI_merge", "MARI1", "MAWIS1", "MAWIM1", "MARI2", "MAWIS2",
        "MAWIM2",
    ];
}

fn index_value<F>(
    raw_index: F,
    u: &FlatPartition,
    v: &FlatPartition,
    replicates: usize,
    seed: u64,
) -> IndexValue
where
    F: Fn(&PairCounts) -> Result<f64, StabilityError> + Sync,
{
    let raw = pair_counts(u, v).ok().and_then(|pc| raw_index(&pc).ok());
    match mc_adjust(&raw_index, u, v, replicates, seed) {
        Ok(adj) => IndexValue {
            raw,
            adjusted: Some(adj.value),
            skipped_replicates: adj.skipped,
        },
        Err(_) => IndexValue {
            raw,
            adjusted: None,
            skipped_replicates: 0,
        },
    }
}

/// Computes the full nine-index report.
///
/// The three unmodified indices neglect turnover entirely: they compare the
/// persistent units only. The adjusted Rand index uses its closed form; the
/// Wallace indices and all modified variants are Monte-Carlo adjusted.
/// Variant 1 treats only the newcomer-side features as instability, variant
/// 2 only the departure-side features.
pub fn stability_report(
    tp: &TemporalPair,
    replicates: usize,
    seed: u64,
    scoping: Scoping,
) -> StabilityReport {
    let sets = scoped_sets(tp, scoping);
    let u_persistent = FlatPartition::new(
        sets.persistent
            .iter()
            .map(|unit| (unit.clone(), sets.u_labels[unit]))
            .collect(),
    );
    let v_persistent = FlatPartition::new(
        sets.persistent
            .iter()
            .map(|unit| (unit.clone(), sets.v_labels[unit]))
            .collect(),
    );

    let ari = IndexValue {
        raw: pair_counts(&u_persistent, &v_persistent)
            .ok()
            .and_then(|pc| rand_index(&pc).ok()),
        adjusted: adjusted_rand(&u_persistent, &v_persistent).ok(),
        skipped_replicates: 0,
    };
    let awi_split = index_value(wallace_split, &u_persistent, &v_persistent, replicates, seed);
    let awi_merge = index_value(wallace_merge, &u_persistent, &v_persistent, replicates, seed);

    let m1 = modified_partitions(tp, Mode::NewcomersOnly, scoping);
    let m2 = modified_partitions(tp, Mode::DeparturesOnly, scoping);
    let mari1 = index_value(rand_index, &m1.u_prime, &m1.v_prime, replicates, seed);
    let mawis1 = index_value(wallace_split, &m1.u_prime, &m1.v_prime, replicates, seed);
    let mawim1 = index_value(wallace_merge, &m1.u_prime, &m1.v_prime, replicates, seed);
    let mari2 = index_value(rand_index, &m2.u_prime, &m2.v_prime, replicates, seed);
    let mawis2 = index_value(wallace_split, &m2.u_prime, &m2.v_prime, replicates, seed);
    let mawim2 = index_value(wallace_merge, &m2.u_prime, &m2.v_prime, replicates, seed);

    StabilityReport {
        ari,
        awi_split,
        awi_merge,
        mari1,
        mawis1,
        mawim1,
        mari2,
        mawis2,
        mawim2,
        persistent_counts: pair_counts(&u_persistent, &v_persistent).ok(),
        mode1_counts: pair_counts(&m1.u_prime, &m1.v_prime).ok(),
        mode2_counts: pair_counts(&m2.u_prime, &m2.v_prime).ok(),
        scoping,
        replicates,
        seed,
    }
}
