//! Core-to-core flows between two periods: cross-tabulation, merge/split/
//! dissolution/emergence classification and static flow-diagram output.

use crate::blockmodel::{Partition, Role};
use crate::stability::TemporalPair;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransitionsError {
    #[error("share threshold {0} outside the open interval (0, 1)")]
    BadThreshold(f64),
    #[error("event classification needs a cores-only flow table")]
    NotCoresScope,
    #[error("into/out percentages undefined: no core members in period {0}")]
    EmptyCores(u8),
    #[error("flow table holds no units; nothing to draw")]
    EmptyDiagram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupRole {
    Core,
    IntoCores,
    OutOfCores,
    SemiPeriphery,
    Periphery,
    Newcomers,
    Departures,
}

impl GroupRole {
    fn is_pseudo(self) -> bool {
        !matches!(self, GroupRole::Core)
    }
}

/// One row or column group of a flow table.
#[derive(Debug, Clone, Serialize)]
pub struct FlowGroup {
    pub id: String,
    pub role: GroupRole,
    pub size: usize,
    #[serde(skip)]
    pub core_index: Option<u32>,
}

/// Cross-tabulation of group memberships across the two periods.
#[derive(Debug, Clone)]
pub struct FlowTable {
    pub rows: Vec<FlowGroup>,
    pub cols: Vec<FlowGroup>,
    counts: Vec<u64>,
}

impl FlowTable {
    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols.len() + col]
    }

    pub fn row_sum(&self, row: usize) -> u64 {
        (0..self.cols.len()).map(|c| self.count(row, c)).sum()
    }

    pub fn col_sum(&self, col: usize) -> u64 {
        (0..self.rows.len()).map(|r| self.count(r, col)).sum()
    }

    fn is_cores_scope(&self) -> bool {
        self.rows
            .iter()
            .all(|g| matches!(g.role, GroupRole::Core | GroupRole::IntoCores))
            && self
                .cols
                .iter()
                .all(|g| matches!(g.role, GroupRole::Core | GroupRole::OutOfCores))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowScope {
    /// Period cores plus into-cores / out-of-cores pseudo groups.
    CoresOnly,
    /// Every cluster plus newcomers / departures pseudo groups.
    Full,
}

fn cluster_groups(p: &Partition, extra: (&str, GroupRole, usize)) -> Vec<FlowGroup> {
    let mut groups = Vec::new();
    for (idx, cluster) in p.cores() {
        groups.push(FlowGroup {
            id: format!("core_{idx}"),
            role: GroupRole::Core,
            size: p.members_of(cluster).len(),
            core_index: Some(idx),
        });
    }
    for (&cluster, role) in p.roles() {
        let (id, group_role) = match role {
            Role::SemiPeriphery => ("semi_periphery", GroupRole::SemiPeriphery),
            Role::Periphery => ("periphery", GroupRole::Periphery),
            Role::Core(_) => continue,
        };
        groups.push(FlowGroup {
            id: id.to_string(),
            role: group_role,
            size: p.members_of(cluster).len(),
            core_index: None,
        });
    }
    let (id, role, size) = extra;
    groups.push(FlowGroup {
        id: id.to_string(),
        role,
        size,
        core_index: None,
    });
    groups
}

/// Cross-tabulates memberships between the two periods.
///
/// In `CoresOnly` scope the rows are the period-1 cores plus an into-cores
/// pseudo-row holding members of period-2 cores that were not in period-1
/// cores; the columns are the period-2 cores plus an out-of-cores
/// pseudo-column.
pub fn core_flows(tp: &TemporalPair, scope: FlowScope) -> FlowTable {
    match scope {
        FlowScope::CoresOnly => {
            let c1 = tp.p1.core_labels();
            let c2 = tp.p2.core_labels();
            let into: BTreeSet<&String> =
                c2.keys().filter(|v| !c1.contains_key(*v)).collect();
            let out: BTreeSet<&String> =
                c1.keys().filter(|v| !c2.contains_key(*v)).collect();

            let cores1 = tp.p1.cores();
            let cores2 = tp.p2.cores();
            let mut rows: Vec<FlowGroup> = cores1
                .iter()
                .map(|&(idx, _)| FlowGroup {
                    id: format!("core_{idx}"),
                    role: GroupRole::Core,
                    size: c1.values().filter(|&&c| c == idx).count(),
                    core_index: Some(idx),
                })
                .collect();
            rows.push(FlowGroup {
                id: "into_cores".into(),
                role: GroupRole::IntoCores,
                size: into.len(),
                core_index: None,
            });
            let mut cols: Vec<FlowGroup> = cores2
                .iter()
                .map(|&(idx, _)| FlowGroup {
                    id: format!("core_{idx}"),
                    role: GroupRole::Core,
                    size: c2.values().filter(|&&c| c == idx).count(),
                    core_index: Some(idx),
                })
                .collect();
            cols.push(FlowGroup {
                id: "out_of_cores".into(),
                role: GroupRole::OutOfCores,
                size: out.len(),
                core_index: None,
            });

            let row_of_core: BTreeMap<u32, usize> = cores1
                .iter()
                .enumerate()
                .map(|(i, &(idx, _))| (idx, i))
                .collect();
            let col_of_core: BTreeMap<u32, usize> = cores2
                .iter()
                .enumerate()
                .map(|(i, &(idx, _))| (idx, i))
                .collect();
            let into_row = rows.len() - 1;
            let out_col = cols.len() - 1;

            let mut counts = vec![0u64; rows.len() * cols.len()];
            for (v, &core) in &c1 {
                let row = row_of_core[&core];
                let col = match c2.get(v) {
                    Some(&core2) => col_of_core[&core2],
                    None => out_col,
                };
                counts[row * cols.len() + col] += 1;
            }
            for (v, &core2) in &c2 {
                if !c1.contains_key(v) {
                    counts[into_row * cols.len() + col_of_core[&core2]] += 1;
                }
            }
            FlowTable { rows, cols, counts }
        }
        FlowScope::Full => {
            let rows = cluster_groups(
                &tp.p1,
                ("newcomers", GroupRole::Newcomers, tp.newcomers.len()),
            );
            let cols = cluster_groups(
                &tp.p2,
                ("departures", GroupRole::Departures, tp.departures.len()),
            );
            let row_index = group_lookup(&tp.p1, rows.len() - 1);
            let col_index = group_lookup(&tp.p2, cols.len() - 1);
            let mut counts = vec![0u64; rows.len() * cols.len()];
            let all: BTreeSet<String> = tp
                .p1
                .vertices()
                .chain(tp.p2.vertices())
                .cloned()
                .collect();
            for v in &all {
                let row = tp
                    .p1
                    .cluster_of(v)
                    .map_or(rows.len() - 1, |c| row_index[&c]);
                let col = tp
                    .p2
                    .cluster_of(v)
                    .map_or(cols.len() - 1, |c| col_index[&c]);
                counts[row * cols.len() + col] += 1;
            }
            FlowTable { rows, cols, counts }
        }
    }
}

/// Cluster id → group position matching `cluster_groups` order.
fn group_lookup(p: &Partition, _pseudo: usize) -> BTreeMap<u32, usize> {
    let mut index = BTreeMap::new();
    let mut next = 0;
    for (_, cluster) in p.cores() {
        index.insert(cluster, next);
        next += 1;
    }
    for (&cluster, role) in p.roles() {
        if matches!(role, Role::SemiPeriphery | Role::Periphery) {
            index.insert(cluster, next);
            next += 1;
        }
    }
    index
}

/// Merge, split, dissolution and emergence events read off a cores-only
/// flow table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionEvents {
    /// Sets of period-1 cores mapping to one period-2 core.
    pub merges: Vec<(BTreeSet<u32>, u32)>,
    /// Period-1 cores scattering over several period-2 cores.
    pub splits: Vec<(u32, BTreeSet<u32>)>,
    /// Period-1 cores whose majority leaves the cores.
    pub dissolved: BTreeSet<u32>,
    /// Period-2 cores whose majority comes from outside the cores.
    pub emerged: BTreeSet<u32>,
}

/// Classifies transitions. A period-1 core maps to the period-2 core that
/// receives more than `share_threshold` of its members; two or more sources
/// of one target form a merge. A core splits when no target dominates
/// (none gets more than `1 - share_threshold`) but at least two targets
/// each receive `ceil(split_min_share * size)` members.
pub fn classify_events(
    ft: &FlowTable,
    share_threshold: f64,
    split_min_share: f64,
) -> Result<TransitionEvents, TransitionsError> {
    if !(share_threshold > 0.0 && share_threshold < 1.0) {
        return Err(TransitionsError::BadThreshold(share_threshold));
    }
    if !(split_min_share > 0.0 && split_min_share < 1.0) {
        return Err(TransitionsError::BadThreshold(split_min_share));
    }
    if !ft.is_cores_scope() {
        return Err(TransitionsError::NotCoresScope);
    }

    let core_rows: Vec<(usize, u32)> = ft
        .rows
        .iter()
        .enumerate()
        .filter_map(|(r, g)| g.core_index.map(|idx| (r, idx)))
        .collect();
    let core_cols: Vec<(usize, u32)> = ft
        .cols
        .iter()
        .enumerate()
        .filter_map(|(c, g)| g.core_index.map(|idx| (c, idx)))
        .collect();
    let out_col = ft.cols.iter().position(|g| g.role == GroupRole::OutOfCores);
    let into_row = ft.rows.iter().position(|g| g.role == GroupRole::IntoCores);

    let mut successor_of: BTreeMap<u32, u32> = BTreeMap::new();
    let mut dissolved = BTreeSet::new();
    let mut splits = Vec::new();
    for &(r, u_idx) in &core_rows {
        let size = ft.rows[r].size as f64;
        if size == 0.0 {
            continue;
        }
        for &(c, v_idx) in &core_cols {
            if ft.count(r, c) as f64 > share_threshold * size {
                successor_of.insert(u_idx, v_idx);
            }
        }
        if let Some(oc) = out_col {
            if ft.count(r, oc) as f64 > share_threshold * size {
                dissolved.insert(u_idx);
            }
        }
        let dominant = core_cols
            .iter()
            .any(|&(c, _)| ft.count(r, c) as f64 > (1.0 - share_threshold) * size);
        if !dominant {
            let min_members = (split_min_share * size).ceil() as u64;
            let targets: BTreeSet<u32> = core_cols
                .iter()
                .filter(|&&(c, _)| ft.count(r, c) >= min_members && ft.count(r, c) > 0)
                .map(|&(_, idx)| idx)
                .collect();
            if targets.len() >= 2 {
                splits.push((u_idx, targets));
            }
        }
    }

    let mut by_target: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for (&u_idx, &v_idx) in &successor_of {
        by_target.entry(v_idx).or_default().insert(u_idx);
    }
    let merges: Vec<(BTreeSet<u32>, u32)> = by_target
        .into_iter()
        .filter(|(_, sources)| sources.len() >= 2)
        .map(|(target, sources)| (sources, target))
        .collect();

    let mut emerged = BTreeSet::new();
    if let Some(ir) = into_row {
        for &(c, v_idx) in &core_cols {
            let size = ft.cols[c].size as f64;
            if size > 0.0 && ft.count(ir, c) as f64 > share_threshold * size {
                emerged.insert(v_idx);
            }
        }
    }

    Ok(TransitionEvents {
        merges,
        splits,
        dissolved,
        emerged,
    })
}

/// Share of core members joining and leaving the cores:
/// `pct_out` over the period-1 core population, `pct_into` over period-2's.
pub fn into_out_percentages(tp: &TemporalPair) -> Result<(f64, f64), TransitionsError> {
    let c1: BTreeSet<String> = tp.p1.core_labels().into_keys().collect();
    let c2: BTreeSet<String> = tp.p2.core_labels().into_keys().collect();
    if c1.is_empty() {
        return Err(TransitionsError::EmptyCores(1));
    }
    if c2.is_empty() {
        return Err(TransitionsError::EmptyCores(2));
    }
    let out = c1.difference(&c2).count() as f64 / c1.len() as f64;
    let into = c2.difference(&c1).count() as f64 / c2.len() as f64;
    Ok((into, out))
}

/// `{rows: [{id, role, size}], cols: [...], links: [[row, col, count]]}`
/// with links listed row-major for nonzero cells only.
pub fn emit_flow_json(ft: &FlowTable) -> serde_json::Value {
    let links: Vec<serde_json::Value> = (0..ft.rows.len())
        .flat_map(|r| {
            (0..ft.cols.len()).filter_map(move |c| {
                let count = ft.count(r, c);
                (count > 0).then(|| serde_json::json!([r, c, count]))
            })
        })
        .collect();
    serde_json::json!({
        "rows": ft.rows,
        "cols": ft.cols,
        "links": links,
    })
}

/// Geometry of the flow diagram.
#[derive(Debug, Clone)]
pub struct AlluvialStyle {
    /// Horizontal pixels per unit (group member).
    pub unit_width: f64,
    /// Gap between adjacent rectangles.
    pub gap: f64,
    pub rect_height: f64,
    /// Vertical distance between the two rows of rectangles.
    pub band_gap: f64,
    pub margin: f64,
    pub ribbon_opacity: f64,
}

impl Default for AlluvialStyle {
    fn default() -> Self {
        AlluvialStyle {
            unit_width: 6.0,
            gap: 4.0,
            rect_height: 18.0,
            band_gap: 120.0,
            margin: 10.0,
            ribbon_opacity: 0.5,
        }
    }
}

fn fill_of(role: GroupRole) -> &'static str {
    if role.is_pseudo() {
        "#999999"
    } else {
        "#000000"
    }
}

/// Renders the flow table as a standalone SVG: two rows of rectangles with
/// widths proportional to group sizes (cores black, pseudo groups gray) and
/// core-to-core ribbons with widths proportional to the flows.
pub fn emit_alluvial_svg(
    ft: &FlowTable,
    style: &AlluvialStyle,
) -> Result<String, TransitionsError> {
    let total_units: usize = ft.rows.iter().map(|g| g.size).sum::<usize>()
        + ft.cols.iter().map(|g| g.size).sum::<usize>();
    if total_units == 0 {
        return Err(TransitionsError::EmptyDiagram);
    }

    // x extents per non-empty group, packed left to right in table order.
    let layout = |groups: &[FlowGroup]| -> Vec<Option<(f64, f64)>> {
        let mut x = style.margin;
        groups
            .iter()
            .map(|g| {
                if g.size == 0 {
                    return None;
                }
                let w = g.size as f64 * style.unit_width;
                let span = (x, x + w);
                x += w + style.gap;
                Some(span)
            })
            .collect()
    };
    let top = layout(&ft.rows);
    let bottom = layout(&ft.cols);

    let row_width = |spans: &[Option<(f64, f64)>]| {
        spans
            .iter()
            .flatten()
            .map(|&(_, end)| end)
            .fold(0.0f64, f64::max)
    };
    let width = row_width(&top).max(row_width(&bottom)) + style.margin;
    let height = 2.0 * style.margin + 2.0 * style.rect_height + style.band_gap;
    let y_top = style.margin;
    let y_bottom = style.margin + style.rect_height + style.band_gap;

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.2}\" height=\"{height:.2}\" viewBox=\"0 0 {width:.2} {height:.2}\">\n"
    ));

    for (g, span) in ft.rows.iter().zip(&top) {
        if let Some((x0, x1)) = span {
            svg.push_str(&format!(
                "  <rect x=\"{x0:.2}\" y=\"{y_top:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{fill}\"><title>{id}</title></rect>\n",
                w = x1 - x0,
                h = style.rect_height,
                fill = fill_of(g.role),
                id = g.id,
            ));
        }
    }
    for (g, span) in ft.cols.iter().zip(&bottom) {
        if let Some((x0, x1)) = span {
            svg.push_str(&format!(
                "  <rect x=\"{x0:.2}\" y=\"{y_bottom:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{fill}\"><title>{id}</title></rect>\n",
                w = x1 - x0,
                h = style.rect_height,
                fill = fill_of(g.role),
                id = g.id,
            ));
        }
    }

    // Core-to-core ribbons; offsets walk along each rectangle.
    let mut top_used: Vec<f64> = vec![0.0; ft.rows.len()];
    let mut bottom_used: Vec<f64> = vec![0.0; ft.cols.len()];
    let y1 = y_top + style.rect_height;
    for (r, rg) in ft.rows.iter().enumerate() {
        if rg.role.is_pseudo() {
            continue;
        }
        for (c, cg) in ft.cols.iter().enumerate() {
            if cg.role.is_pseudo() {
                continue;
            }
            let count = ft.count(r, c);
            if count == 0 {
                continue;
            }
            let w = count as f64 * style.unit_width;
            let (tx0, _) = top[r].expect("nonzero flow from an empty group");
            let (bx0, _) = bottom[c].expect("nonzero flow into an empty group");
            let ax = tx0 + top_used[r];
            let bx = bx0 + bottom_used[c];
            top_used[r] += w;
            bottom_used[c] += w;
            svg.push_str(&format!(
                "  <path d=\"M {ax:.2} {y1:.2} L {ax2:.2} {y1:.2} L {bx2:.2} {y_bottom:.2} L {bx:.2} {y_bottom:.2} Z\" fill=\"#777777\" opacity=\"{op}\"/>\n",
                ax2 = ax + w,
                bx2 = bx + w,
                op = style.ribbon_opacity,
            ));
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
