//! Direct blockmodeling of a multi-core / semi-periphery / periphery
//! structure.
//!
//! The ideal structure is a pre-specified image: complete diagonal blocks
//! for the cores, null blocks everywhere else, optionally with selected
//! core-core blocks marked complete to encode bridging cores. Fitting
//! minimizes the weighted count of inconsistencies between the empirical
//! blocks and their ideal types by relocation local search with restarts,
//! after stripping isolated vertices into the periphery and optionally
//! freezing exactly structurally-equivalent cliques.

mod search;

use crate::network::{Network, NetworkError};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BlockmodelError {
    #[error("core index {index} outside 1..={k}")]
    InvalidCoreIndex { index: u32, k: u32 },
    #[error("bridging pair ({0}, {1}) must name two distinct cores")]
    BadBridgingPair(u32, u32),
    #[error("vertex `{0}` in the network is missing from the partition")]
    VertexNotInPartition(String),
    #[error("partition assigns vertex `{0}` that is not in the network")]
    ExtraVertexInPartition(String),
    #[error("vertex `{0}` has role periphery; strip the periphery before computing blocks")]
    PeripheryInBlocks(String),
    #[error("partition uses a semi-periphery position but the image has none")]
    MissingSemiPeripheryPosition,
    #[error("partition invariant violated: {0}")]
    PartitionInvariant(String),
    #[error("k = {k} exceeds the {available} free vertices + frozen groups available")]
    InfeasibleK { k: u32, available: usize },
    #[error("frozen sets overlap at vertex `{0}`")]
    FrozenOverlap(String),
    #[error("frozen vertex `{0}` is not in the network")]
    FrozenUnknownVertex(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Ideal tie pattern of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockType {
    Complete,
    Null,
}

/// A position of the blockmodel: one of the k cores or the semi-periphery.
/// The periphery never enters the blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Core(u32),
    SemiPeriphery,
}

/// Role of a cluster in a fitted partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Core(u32),
    SemiPeriphery,
    Periphery,
}

/// Pre-specified ideal block types and penalty weights for every position
/// pair.
#[derive(Debug, Clone)]
pub struct ImageSpec {
    k_cores: u32,
    has_semi_periphery: bool,
    blocks: Vec<BlockType>,
    weights: Vec<u32>,
}

impl ImageSpec {
    /// The default image: complete core diagonal blocks, null everywhere
    /// else (including all semi-periphery blocks), weight 1 throughout.
    /// Each bridging pair marks the corresponding off-diagonal core block
    /// complete on both sides.
    pub fn default_image(
        k: u32,
        bridging: &BTreeSet<(u32, u32)>,
    ) -> Result<ImageSpec, BlockmodelError> {
        assert!(k >= 1, "need at least one core");
        let p = k as usize + 1; // + semi-periphery
        let mut blocks = vec![BlockType::Null; p * p];
        for c in 0..k as usize {
            blocks[c * p + c] = BlockType::Complete;
        }
        let mut image = ImageSpec {
            k_cores: k,
            has_semi_periphery: true,
            blocks,
            weights: vec![1; p * p],
        };
        for &(i, j) in bridging {
            if i == j {
                return Err(BlockmodelError::BadBridgingPair(i, j));
            }
            image.set_block(Position::Core(i), Position::Core(j), BlockType::Complete)?;
        }
        Ok(image)
    }

    pub fn k_cores(&self) -> u32 {
        self.k_cores
    }

    pub fn has_semi_periphery(&self) -> bool {
        self.has_semi_periphery
    }

    /// Number of positions (cores plus semi-periphery when present).
    pub fn n_positions(&self) -> usize {
        self.k_cores as usize + self.has_semi_periphery as usize
    }

    fn position_index(&self, pos: Position) -> Result<usize, BlockmodelError> {
        match pos {
            Position::Core(c) => {
                if c < 1 || c > self.k_cores {
                    Err(BlockmodelError::InvalidCoreIndex {
                        index: c,
                        k: self.k_cores,
                    })
                } else {
                    Ok(c as usize - 1)
                }
            }
            Position::SemiPeriphery => {
                if self.has_semi_periphery {
                    Ok(self.k_cores as usize)
                } else {
                    Err(BlockmodelError::MissingSemiPeripheryPosition)
                }
            }
        }
    }

    pub fn position_of_index(&self, idx: usize) -> Position {
        if idx < self.k_cores as usize {
            Position::Core(idx as u32 + 1)
        } else {
            Position::SemiPeriphery
        }
    }

    pub fn block(&self, a: Position, b: Position) -> Result<BlockType, BlockmodelError> {
        let (i, j) = (self.position_index(a)?, self.position_index(b)?);
        Ok(self.blocks[i * self.n_positions() + j])
    }

    pub fn weight(&self, a: Position, b: Position) -> Result<u32, BlockmodelError> {
        let (i, j) = (self.position_index(a)?, self.position_index(b)?);
        Ok(self.weights[i * self.n_positions() + j])
    }

    /// Overrides a block type symmetrically.
    pub fn set_block(
        &mut self,
        a: Position,
        b: Position,
        ty: BlockType,
    ) -> Result<(), BlockmodelError> {
        let (i, j) = (self.position_index(a)?, self.position_index(b)?);
        let p = self.n_positions();
        self.blocks[i * p + j] = ty;
        self.blocks[j * p + i] = ty;
        Ok(())
    }

    /// Overrides a block weight symmetrically.
    pub fn set_weight(
        &mut self,
        a: Position,
        b: Position,
        w: u32,
    ) -> Result<(), BlockmodelError> {
        let (i, j) = (self.position_index(a)?, self.position_index(b)?);
        let p = self.n_positions();
        self.weights[i * p + j] = w;
        self.weights[j * p + i] = w;
        Ok(())
    }

    /// Penalty of one vertex pair placed in block (i, j) given whether the
    /// tie is present.
    pub(crate) fn pair_penalty(&self, i: usize, j: usize, tie: bool) -> u64 {
        let p = self.n_positions();
        let w = self.weights[i * p + j] as u64;
        match self.blocks[i * p + j] {
            BlockType::Complete => {
                if tie {
                    0
                } else {
                    w
                }
            }
            BlockType::Null => {
                if tie {
                    w
                } else {
                    0
                }
            }
        }
    }
}

/// A clustering of vertices with role labels per cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: BTreeMap<String, u32>,
    roles: BTreeMap<u32, Role>,
}

impl Partition {
    pub fn new(
        assignment: BTreeMap<String, u32>,
        roles: BTreeMap<u32, Role>,
    ) -> Result<Partition, BlockmodelError> {
        let mut sp = 0;
        let mut per = 0;
        let mut cores = BTreeSet::new();
        for (&cluster, role) in &roles {
            match role {
                Role::Core(c) => {
                    if !cores.insert(*c) {
                        return Err(BlockmodelError::PartitionInvariant(format!(
                            "core index {c} used by more than one cluster"
                        )));
                    }
                }
                Role::SemiPeriphery => sp += 1,
                Role::Periphery => per += 1,
            }
            let _ = cluster;
        }
        if sp > 1 {
            return Err(BlockmodelError::PartitionInvariant(
                "more than one semi-periphery cluster".into(),
            ));
        }
        if per > 1 {
            return Err(BlockmodelError::PartitionInvariant(
                "more than one periphery cluster".into(),
            ));
        }
        for (v, cluster) in &assignment {
            if !roles.contains_key(cluster) {
                return Err(BlockmodelError::PartitionInvariant(format!(
                    "vertex `{v}` assigned to unknown cluster {cluster}"
                )));
            }
        }
        Ok(Partition { assignment, roles })
    }

    pub fn cluster_of(&self, vertex: &str) -> Option<u32> {
        self.assignment.get(vertex).copied()
    }

    pub fn role_of(&self, vertex: &str) -> Option<Role> {
        self.cluster_of(vertex).map(|c| self.roles[&c])
    }

    pub fn roles(&self) -> &BTreeMap<u32, Role> {
        &self.roles
    }

    pub fn assignment(&self) -> &BTreeMap<String, u32> {
        &self.assignment
    }

    pub fn vertices(&self) -> impl Iterator<Item = &String> {
        self.assignment.keys()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Members of one cluster, sorted.
    pub fn members_of(&self, cluster: u32) -> Vec<String> {
        self.assignment
            .iter()
            .filter(|(_, &c)| c == cluster)
            .map(|(v, _)| v.clone())
            .collect()
    }

    /// (core index, cluster id) pairs sorted by core index.
    pub fn cores(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = self
            .roles
            .iter()
            .filter_map(|(&cluster, role)| match role {
                Role::Core(c) => Some((*c, cluster)),
                _ => None,
            })
            .collect();
        out.sort();
        out
    }

    /// Vertex → core index for vertices classified in cores.
    pub fn core_labels(&self) -> BTreeMap<String, u32> {
        self.assignment
            .iter()
            .filter_map(|(v, c)| match self.roles[c] {
                Role::Core(idx) => Some((v.clone(), idx)),
                _ => None,
            })
            .collect()
    }

    /// Vertex → cluster id over all vertices.
    pub fn full_labels(&self) -> BTreeMap<String, u32> {
        self.assignment.clone()
    }
}

/// Per-block inconsistency counts keyed by unordered position pair.
pub type BlockInconsistencies = BTreeMap<(Position, Position), u64>;

/// Result of a blockmodel fit.
#[derive(Debug, Clone)]
pub struct BlockmodelFit {
    pub partition: Partition,
    pub criterion_value: u64,
    pub block_inconsistencies: BlockInconsistencies,
    pub restarts_run: usize,
    pub seed: u64,
}

fn position_of_role(role: Role, vertex: &str) -> Result<Position, BlockmodelError> {
    match role {
        Role::Core(c) => Ok(Position::Core(c)),
        Role::SemiPeriphery => Ok(Position::SemiPeriphery),
        Role::Periphery => Err(BlockmodelError::PeripheryInBlocks(vertex.to_string())),
    }
}

/// Total weighted inconsistency between the empirical blocks of `p` on
/// `net` and the ideal types in `img`, plus the per-block breakdown. Each
/// unordered vertex pair is counted exactly once; diagonal cells never
/// count.
pub fn criterion(
    net: &Network,
    p: &Partition,
    img: &ImageSpec,
) -> Result<(u64, BlockInconsistencies), BlockmodelError> {
    let n = net.n();
    let mut pos_of: Vec<usize> = Vec::with_capacity(n);
    for v in net.vertices() {
        let cluster = p
            .cluster_of(v)
            .ok_or_else(|| BlockmodelError::VertexNotInPartition(v.clone()))?;
        let role = p.roles[&cluster];
        let pos = position_of_role(role, v)?;
        pos_of.push(img.position_index(pos)?);
    }
    for v in p.vertices() {
        if net.vertex_index(v).is_none() {
            return Err(BlockmodelError::ExtraVertexInPartition(v.clone()));
        }
    }

    let mut by_block = BlockInconsistencies::new();
    let mut total = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let (pi, pj) = (pos_of[i].min(pos_of[j]), pos_of[i].max(pos_of[j]));
            let tie = net.has_tie(i, j);
            let pen = img.pair_penalty(pi, pj, tie);
            let w = img.weights[pi * img.n_positions() + pj] as u64;
            let inconsistent = match img.blocks[pi * img.n_positions() + pj] {
                BlockType::Complete => !tie,
                BlockType::Null => tie,
            };
            if inconsistent {
                *by_block
                    .entry((img.position_of_index(pi), img.position_of_index(pj)))
                    .or_insert(0) += 1;
            }
            debug_assert_eq!(pen, if inconsistent { w } else { 0 });
            total += pen;
        }
    }
    Ok((total, by_block))
}

/// Removes the isolated vertices (the periphery) from the network.
pub fn strip_periphery(net: &Network) -> (Network, BTreeSet<String>) {
    let periphery = net.isolates();
    let keep: BTreeSet<String> = net
        .vertices()
        .iter()
        .filter(|v| !periphery.contains(*v))
        .cloned()
        .collect();
    let reduced = net
        .induced_subnetwork(&keep)
        .expect("keep is a subset of the vertex set");
    (reduced, periphery)
}

/// Maximal groups of at least `min_size` vertices that are pairwise adjacent
/// and have identical ties to all third parties. For adjacent vertices this
/// is exactly equality of closed neighborhoods, so the groups are the
/// closed-neighborhood classes and extraction is order-independent.
pub fn extract_exact_cores(net: &Network, min_size: usize) -> Vec<BTreeSet<String>> {
    assert!(min_size >= 2, "min_size must be at least 2");
    let n = net.n();
    let words = n.div_ceil(64);
    let mut classes: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let mut closed = vec![0u64; words];
        closed[i / 64] |= 1 << (i % 64);
        for j in 0..n {
            if net.has_tie(i, j) {
                closed[j / 64] |= 1 << (j % 64);
            }
        }
        classes.entry(closed).or_default().push(i);
    }
    let mut groups: Vec<BTreeSet<String>> = classes
        .into_values()
        .filter(|members| members.len() >= min_size)
        .map(|members| {
            members
                .into_iter()
                .map(|i| net.vertices()[i].clone())
                .collect()
        })
        .collect();
    groups.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
    groups
}

/// Options for [`fit_blockmodel`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Restarts of the local search; `None` picks 50 for networks of up to
    /// 300 vertices after stripping and 20 above.
    pub restarts: Option<usize>,
    pub seed: u64,
    /// Extract exact structurally-equivalent cliques and freeze them as the
    /// first cores before searching.
    pub freeze_cliques: bool,
    pub min_clique_size: usize,
    /// Classify isolated vertices as periphery before searching.
    pub strip_periphery: bool,
    /// Core pairs whose off-diagonal blocks are ideal-complete.
    pub bridging: BTreeSet<(u32, u32)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: None,
            seed: 20100101,
            freeze_cliques: false,
            min_clique_size: 2,
            strip_periphery: true,
            bridging: BTreeSet::new(),
        }
    }
}

fn auto_restarts(n: usize) -> usize {
    if n <= 300 {
        50
    } else {
        20
    }
}

/// Relocation local search with restarts. Every restart assigns the free
/// vertices of `net` uniformly at random to the k cores and the
/// semi-periphery (frozen sets stay on their core), then repeatedly applies
/// the best strictly improving single-vertex relocation or pairwise
/// exchange until none remains. The best restart wins; ties go to the
/// lexicographically smallest assignment vector.
pub fn local_search(
    net: &Network,
    img: &ImageSpec,
    frozen: &[(BTreeSet<String>, u32)],
    restarts: usize,
    seed: u64,
) -> Result<BlockmodelFit, BlockmodelError> {
    search::run(net, img, frozen, restarts, seed)
}

/// Full fitting pipeline: strip the periphery, optionally freeze exact
/// cliques, search, then merge the periphery back as its own cluster. Core
/// indices in the result are renumbered so that core 1 holds the smallest
/// vertex label.
pub fn fit_blockmodel(
    net: &Network,
    k: u32,
    opts: &FitOptions,
) -> Result<BlockmodelFit, BlockmodelError> {
    let (reduced, periphery) = if opts.strip_periphery {
        strip_periphery(net)
    } else {
        (net.clone(), BTreeSet::new())
    };
    let img = ImageSpec::default_image(k, &opts.bridging)?;

    let mut frozen: Vec<(BTreeSet<String>, u32)> = Vec::new();
    if opts.freeze_cliques {
        let cliques = extract_exact_cores(&reduced, opts.min_clique_size);
        for (slot, clique) in cliques.into_iter().take(k as usize).enumerate() {
            frozen.push((clique, slot as u32 + 1));
        }
    }

    let restarts = opts.restarts.unwrap_or_else(|| auto_restarts(reduced.n()));
    let fit = local_search(&reduced, &img, &frozen, restarts, opts.seed)?;

    // Renumber cores by smallest member label; empty cores keep their
    // relative order after the occupied ones.
    let mut core_order: Vec<(Option<String>, u32, u32)> = fit
        .partition
        .cores()
        .iter()
        .map(|&(idx, cluster)| {
            let members = fit.partition.members_of(cluster);
            (members.first().cloned(), idx, cluster)
        })
        .collect();
    core_order.sort_by(|a, b| match (&a.0, &b.0) {
        (Some(x), Some(y)) => x.cmp(y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.1.cmp(&b.1),
    });

    let mut assignment: BTreeMap<String, u32> = BTreeMap::new();
    let mut roles: BTreeMap<u32, Role> = BTreeMap::new();
    let mut remap: BTreeMap<u32, u32> = BTreeMap::new(); // old cluster -> new cluster
    for (new_idx, (_, _, old_cluster)) in core_order.iter().enumerate() {
        let new_core = new_idx as u32 + 1;
        remap.insert(*old_cluster, new_core);
        roles.insert(new_core, Role::Core(new_core));
    }
    let sp_cluster = k + 1;
    let periphery_cluster = k + 2;
    roles.insert(sp_cluster, Role::SemiPeriphery);
    roles.insert(periphery_cluster, Role::Periphery);
    for (v, &old_cluster) in fit.partition.assignment() {
        let new_cluster = match fit.partition.roles()[&old_cluster] {
            Role::Core(_) => remap[&old_cluster],
            Role::SemiPeriphery => sp_cluster,
            Role::Periphery => periphery_cluster,
        };
        assignment.insert(v.clone(), new_cluster);
    }
    for v in &periphery {
        assignment.insert(v.clone(), periphery_cluster);
    }
    let partition = Partition::new(assignment, roles)?;

    // Inconsistencies keyed by the renumbered cores.
    let core_remap: BTreeMap<u32, u32> = core_order
        .iter()
        .enumerate()
        .map(|(new_idx, (_, old_idx, _))| (*old_idx, new_idx as u32 + 1))
        .collect();
    let remap_pos = |pos: Position| match pos {
        Position::Core(c) => Position::Core(core_remap[&c]),
        Position::SemiPeriphery => Position::SemiPeriphery,
    };
    let block_inconsistencies = fit
        .block_inconsistencies
        .iter()
        .map(|(&(a, b), &count)| {
            let (x, y) = (remap_pos(a), remap_pos(b));
            ((x.min(y), x.max(y)), count)
        })
        .collect();

    Ok(BlockmodelFit {
        partition,
        criterion_value: fit.criterion_value,
        block_inconsistencies,
        restarts_run: fit.restarts_run,
        seed: fit.seed,
    })
}

/// Core pairs (i, j), i < j, whose off-diagonal block density reaches the
/// threshold. Pairs with an empty side never qualify.
pub fn detect_bridging_cores(
    net: &Network,
    p: &Partition,
    density_threshold: f64,
) -> Result<BTreeSet<(u32, u32)>, BlockmodelError> {
    let cores = p.cores();
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for &(idx, cluster) in &cores {
        let mut ids = Vec::new();
        for v in p.members_of(cluster) {
            let vid = net
                .vertex_index(&v)
                .ok_or_else(|| BlockmodelError::ExtraVertexInPartition(v.clone()))?;
            ids.push(vid);
        }
        members.insert(idx, ids);
    }
    let mut out = BTreeSet::new();
    for (a, &(i, _)) in cores.iter().enumerate() {
        for &(j, _) in &cores[a + 1..] {
            let (mi, mj) = (&members[&i], &members[&j]);
            if mi.is_empty() || mj.is_empty() {
                continue;
            }
            let ties: usize = mi
                .iter()
                .map(|&u| mj.iter().filter(|&&v| net.has_tie(u, v)).count())
                .sum();
            let density = ties as f64 / (mi.len() * mj.len()) as f64;
            if density >= density_threshold {
                out.insert((i, j));
            }
        }
    }
    Ok(out)
}

/// Cores appearing in bridging pairs with at least two distinct other cores.
pub fn bridging_core_indices(pairs: &BTreeSet<(u32, u32)>) -> BTreeSet<u32> {
    let mut partners: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for &(i, j) in pairs {
        partners.entry(i).or_default().insert(j);
        partners.entry(j).or_default().insert(i);
    }
    partners
        .into_iter()
        .filter(|(_, others)| others.len() >= 2)
        .map(|(core, _)| core)
        .collect()
}

/// Row of the per-discipline summary tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockmodelSummary {
    pub n: usize,
    pub n_cores: usize,
    pub pct_semi_periphery: f64,
    pub pct_periphery: f64,
    /// Mean size of the non-empty cores; 0 with `no_cores` set when the
    /// partition has none.
    pub avg_core_size: f64,
    pub no_cores: bool,
}

pub fn summarize_blockmodel(p: &Partition) -> BlockmodelSummary {
    let n = p.len();
    let mut core_sizes: BTreeMap<u32, usize> = BTreeMap::new();
    let mut semi = 0usize;
    let mut per = 0usize;
    for &cluster in p.assignment().values() {
        match p.roles()[&cluster] {
            Role::Core(idx) => *core_sizes.entry(idx).or_insert(0) += 1,
            Role::SemiPeriphery => semi += 1,
            Role::Periphery => per += 1,
        }
    }
    let n_cores = core_sizes.len();
    let pct = |count: usize| {
        if n == 0 {
            0.0
        } else {
            100.0 * count as f64 / n as f64
        }
    };
    let avg_core_size = if n_cores == 0 {
        0.0
    } else {
        core_sizes.values().sum::<usize>() as f64 / n_cores as f64
    };
    BlockmodelSummary {
        n,
        n_cores,
        pct_semi_periphery: pct(semi),
        pct_periphery: pct(per),
        avg_core_size,
        no_cores: n_cores == 0,
    }
}

/// Partition export: `{clusters: [{id, role, members}], criterion, seed}`.
pub fn partition_json(fit: &BlockmodelFit) -> serde_json::Value {
    let clusters: Vec<serde_json::Value> = fit
        .partition
        .roles()
        .iter()
        .map(|(&id, role)| {
            serde_json::json!({
                "id": id,
                "role": role,
                "members": fit.partition.members_of(id),
            })
        })
        .collect();
    serde_json::json!({
        "clusters": clusters,
        "criterion": fit.criterion_value,
        "seed": fit.seed,
    })
}

/// Reads a partition back from the JSON produced by [`partition_json`].
pub fn partition_from_json(v: &serde_json::Value) -> Result<BlockmodelFit, BlockmodelError> {
    let mut assignment = BTreeMap::new();
    let mut roles = BTreeMap::new();
    let clusters = v["clusters"]
        .as_array()
        .ok_or_else(|| BlockmodelError::PartitionInvariant("missing clusters".into()))?;
    for c in clusters {
        let id = c["id"]
            .as_u64()
            .ok_or_else(|| BlockmodelError::PartitionInvariant("missing cluster id".into()))?
            as u32;
        let role = if c["role"] == serde_json::json!("semi_periphery") {
            Role::SemiPeriphery
        } else if c["role"] == serde_json::json!("periphery") {
            Role::Periphery
        } else if let Some(core) = c["role"]["core"].as_u64() {
            Role::Core(core as u32)
        } else {
            return Err(BlockmodelError::PartitionInvariant(format!(
                "unknown role {}",
                c["role"]
            )));
        };
        roles.insert(id, role);
        for m in c["members"].as_array().into_iter().flatten() {
            if let Some(name) = m.as_str() {
                assignment.insert(name.to_string(), id);
            }
        }
    }
    let partition = Partition::new(assignment, roles)?;
    Ok(BlockmodelFit {
        partition,
        criterion_value: v["criterion"].as_u64().unwrap_or(0),
        block_inconsistencies: BTreeMap::new(),
        restarts_run: 0,
        seed: v["seed"].as_u64().unwrap_or(0),
    })
}

/// CSV of the adjacency matrix permuted into cluster order (cores by index,
/// then semi-periphery, then periphery), with cluster labels annotating the
/// boundary of every block.
pub fn blockmodel_matrix_csv(net: &Network, p: &Partition) -> Result<String, BlockmodelError> {
    let mut order: Vec<(String, String)> = Vec::new(); // (cluster label, vertex)
    let push_cluster = |label: String, cluster: u32, order: &mut Vec<(String, String)>| {
        for v in p.members_of(cluster) {
            order.push((label.clone(), v));
        }
    };
    for (idx, cluster) in p.cores() {
        push_cluster(format!("core_{idx}"), cluster, &mut order);
    }
    for (&cluster, role) in p.roles() {
        if *role == Role::SemiPeriphery {
            push_cluster("semi_periphery".into(), cluster, &mut order);
        }
    }
    for (&cluster, role) in p.roles() {
        if *role == Role::Periphery {
            push_cluster("periphery".into(), cluster, &mut order);
        }
    }
    let ids: Vec<usize> = order
        .iter()
        .map(|(_, v)| {
            net.vertex_index(v)
                .ok_or_else(|| BlockmodelError::ExtraVertexInPartition(v.clone()))
        })
        .collect::<Result<_, _>>()?;
    for v in net.vertices() {
        if p.cluster_of(v).is_none() {
            return Err(BlockmodelError::VertexNotInPartition(v.clone()));
        }
    }

    let mut out = String::new();
    out.push_str("cluster,vertex");
    for (label, _) in &order {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    out.push(',');
    for (_, v) in &order {
        out.push(',');
        out.push_str(v);
    }
    out.push('\n');
    for (row, &i) in ids.iter().enumerate() {
        out.push_str(&format!("{},{}", order[row].0, order[row].1));
        for &j in &ids {
            out.push(',');
            out.push(if i != j && net.has_tie(i, j) { '1' } else { '0' });
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
