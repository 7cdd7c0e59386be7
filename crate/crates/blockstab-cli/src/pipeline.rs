//! The staged pipeline behind every subcommand. Stages communicate through
//! files in the output directory; per-discipline failures are collected and
//! reported at the end without aborting the batch.

use crate::config::{out_path, sanitize, KSpec, RunConfig};
use blockstab::analysis::{self, regression, DisciplineInput, GapConfig};
use blockstab::blockmodel::{self, BlockmodelFit, FitOptions};
use blockstab::network::{self, Network, NetworkError, PeriodSpec, PublicationRecord};
use blockstab::stability::{self, StabilityReport};
use blockstab::transitions::{self, AlluvialStyle, FlowScope};
use rayon::prelude::*;
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Collected output of a stage: summary lines for stdout plus warnings and
/// errors for stderr. Errors flip the exit code, warnings never do.
#[derive(Debug, Default)]
pub struct Logs {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

impl Logs {
    pub fn merge(&mut self, other: Logs) {
        self.lines.extend(other.lines);
        self.warnings.extend(other.warnings);
        self.errors.extend(other.errors);
    }

    fn line(&mut self, text: String) {
        self.lines.push(text);
    }

    fn warn(&mut self, text: String) {
        self.warnings.push(text);
    }

    fn error(&mut self, text: String) {
        self.errors.push(text);
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

fn opt4(x: Option<f64>) -> String {
    x.map(f4).unwrap_or_default()
}

/// Corpus keyed by discipline; an absent discipline column maps everything
/// to one unnamed discipline called `all`.
fn load_corpus(cfg: &RunConfig) -> Result<BTreeMap<String, Vec<PublicationRecord>>, String> {
    let file = fs::File::open(&cfg.input)
        .map_err(|e| format!("cannot open input `{}`: {e}", cfg.input.display()))?;
    let corpus = network::parse_corpus(file).map_err(|e| format!("parse error: {e}"))?;
    Ok(corpus
        .into_iter()
        .map(|(disc, records)| (disc.unwrap_or_else(|| "all".to_string()), records))
        .collect())
}

fn load_roster(cfg: &RunConfig) -> Result<Option<BTreeSet<String>>, String> {
    match &cfg.roster {
        None => Ok(None),
        Some(path) => {
            let raw = fs::read_to_string(path)
                .map_err(|e| format!("cannot read roster `{}`: {e}", path.display()))?;
            Ok(Some(
                raw.lines()
                    .map(|l| l.trim().to_string())
                    .filter(|l| !l.is_empty())
                    .collect(),
            ))
        }
    }
}

fn network_path(cfg: &RunConfig, disc: &str, period: &PeriodSpec) -> PathBuf {
    out_path(
        &cfg.out,
        &[&sanitize(disc), &format!("{}.network.json", period.label)],
    )
}

fn partition_path(cfg: &RunConfig, disc: &str, period: &PeriodSpec) -> PathBuf {
    out_path(
        &cfg.out,
        &[&sanitize(disc), &format!("{}.partition.json", period.label)],
    )
}

fn load_network(cfg: &RunConfig, disc: &str, period: &PeriodSpec) -> Result<Network, String> {
    let path = network_path(cfg, disc, period);
    let raw = fs::read_to_string(&path).map_err(|_| {
        format!(
            "discipline `{disc}` period `{}`: network file `{}` not found (run `build` first)",
            period.label,
            path.display()
        )
    })?;
    let json: network::NetworkJson =
        serde_json::from_str(&raw).map_err(|e| format!("corrupt network file: {e}"))?;
    Network::from_json(&json).map_err(|e| e.to_string())
}

fn load_fit(cfg: &RunConfig, disc: &str, period: &PeriodSpec) -> Result<BlockmodelFit, String> {
    let path = partition_path(cfg, disc, period);
    let raw = fs::read_to_string(&path).map_err(|_| {
        format!(
            "discipline `{disc}` period `{}`: partition file `{}` not found (run `fit` first)",
            period.label,
            path.display()
        )
    })?;
    let json: serde_json::Value =
        serde_json::from_str(&raw).map_err(|e| format!("corrupt partition file: {e}"))?;
    blockmodel::partition_from_json(&json).map_err(|e| e.to_string())
}

pub fn cmd_build(cfg: &RunConfig) -> Result<Logs, String> {
    let corpus = load_corpus(cfg)?;
    let roster = load_roster(cfg)?;
    let results: Vec<Logs> = corpus
        .par_iter()
        .map(|(disc, records)| {
            let mut logs = Logs::default();
            for period in &cfg.periods {
                match network::build_network(records, period, roster.as_ref()) {
                    Ok(net) => {
                        let json = serde_json::to_string(&net.to_json()).expect("serializable");
                        let path = network_path(cfg, disc, period);
                        if let Err(e) = write_atomic(&path, json.as_bytes()) {
                            logs.error(format!("cannot write `{}`: {e}", path.display()));
                            continue;
                        }
                        let density = net
                            .density()
                            .map(f4)
                            .unwrap_or_else(|_| "n/a".to_string());
                        logs.line(format!(
                            "build {disc} {}: n={} ties={} density={density}",
                            period.label,
                            net.n(),
                            net.edge_count(),
                        ));
                    }
                    Err(NetworkError::EmptyNetwork(_)) => {
                        logs.warn(format!(
                            "discipline `{disc}` period `{}`: no in-period publications, skipped",
                            period.label
                        ));
                    }
                    Err(e) => logs.error(format!(
                        "discipline `{disc}` period `{}`: {e}",
                        period.label
                    )),
                }
            }
            logs
        })
        .collect();
    let mut logs = Logs::default();
    for r in results {
        logs.merge(r);
    }
    Ok(logs)
}

fn fit_cell(
    cfg: &RunConfig,
    disc: &str,
    period: &PeriodSpec,
    net: &Network,
    logs: &mut Logs,
) -> Option<BlockmodelFit> {
    let opts = FitOptions {
        restarts: cfg.restarts_option(),
        seed: cfg.seed,
        freeze_cliques: cfg.freeze_cliques,
        min_clique_size: cfg.min_clique_size,
        strip_periphery: true,
        bridging: BTreeSet::new(),
    };
    let fit_for = |k: u32| blockmodel::fit_blockmodel(net, k, &opts);

    let chosen = match cfg.k_for(disc) {
        KSpec::Fixed(k) => match fit_for(*k) {
            Ok(fit) => Some((*k, fit)),
            Err(e) => {
                logs.error(format!(
                    "discipline `{disc}` period `{}`: k={k}: {e}",
                    period.label
                ));
                None
            }
        },
        KSpec::Scan { min, max } => {
            // Indirect-clustering merge heights help the user pick k: large
            // jumps between consecutive heights suggest a cut.
            let (reduced, _) = blockmodel::strip_periphery(net);
            if reduced.n() >= 2 {
                match blockstab::equivalence::corrected_euclidean(&reduced)
                    .and_then(|d| blockstab::equivalence::ward_cluster(&d))
                {
                    Ok(dend) => {
                        let mut json = serde_json::to_string_pretty(
                            &blockstab::equivalence::dendrogram_json(&dend),
                        )
                        .expect("serializable");
                        json.push('\n');
                        let jpath = out_path(
                            &cfg.out,
                            &[&sanitize(disc), &format!("{}.dendrogram.json", period.label)],
                        );
                        if let Err(e) = write_atomic(&jpath, json.as_bytes()) {
                            logs.error(format!("cannot write `{}`: {e}", jpath.display()));
                        }
                        let tree =
                            blockstab::equivalence::render_dendrogram(&dend, reduced.vertices());
                        let tpath = out_path(
                            &cfg.out,
                            &[&sanitize(disc), &format!("{}.dendrogram.txt", period.label)],
                        );
                        if let Err(e) = write_atomic(&tpath, tree.as_bytes()) {
                            logs.error(format!("cannot write `{}`: {e}", tpath.display()));
                        }
                        let heights: Vec<String> = dend
                            .merges
                            .iter()
                            .rev()
                            .take(8)
                            .map(|m| f4(m.height))
                            .collect();
                        logs.line(format!(
                            "dendrogram {disc} {}: top merge heights {}",
                            period.label,
                            heights.join(" "),
                        ));
                    }
                    Err(e) => logs.warn(format!(
                        "discipline `{disc}` period `{}`: indirect clustering failed: {e}",
                        period.label
                    )),
                }
            }
            let mut table = String::from("k,criterion\n");
            let mut best: Option<(u32, BlockmodelFit)> = None;
            for k in *min..=*max {
                match fit_for(k) {
                    Ok(fit) => {
                        table.push_str(&format!("{k},{}\n", fit.criterion_value));
                        let better = best
                            .as_ref()
                            .is_none_or(|(_, b)| fit.criterion_value < b.criterion_value);
                        if better {
                            best = Some((k, fit));
                        }
                    }
                    Err(e) => {
                        table.push_str(&format!("{k},\n"));
                        logs.warn(format!(
                            "discipline `{disc}` period `{}`: k={k}: {e}",
                            period.label
                        ));
                    }
                }
            }
            let path = out_path(
                &cfg.out,
                &[&sanitize(disc), &format!("{}.kscan.csv", period.label)],
            );
            if let Err(e) = write_atomic(&path, table.as_bytes()) {
                logs.error(format!("cannot write `{}`: {e}", path.display()));
            }
            if best.is_none() {
                logs.error(format!(
                    "discipline `{disc}` period `{}`: no feasible k in scan",
                    period.label
                ));
            }
            best
        }
    };
    let (mut k, mut fit) = chosen?;

    if cfg.refit_bridging {
        match blockmodel::detect_bridging_cores(net, &fit.partition, cfg.bridging_density) {
            Ok(pairs) if !pairs.is_empty() => {
                let refit_opts = FitOptions {
                    bridging: pairs.clone(),
                    ..opts
                };
                match blockmodel::fit_blockmodel(net, k, &refit_opts) {
                    Ok(refit) => {
                        logs.line(format!(
                            "refit {disc} {}: bridging={:?} criterion {} -> {}",
                            period.label, pairs, fit.criterion_value, refit.criterion_value
                        ));
                        fit = refit;
                    }
                    Err(e) => logs.warn(format!(
                        "discipline `{disc}` period `{}`: bridging refit failed: {e}",
                        period.label
                    )),
                }
            }
            Ok(_) => {}
            Err(e) => logs.warn(format!(
                "discipline `{disc}` period `{}`: bridging detection failed: {e}",
                period.label
            )),
        }
        let _ = &mut k;
    }

    let json = serde_json::to_string(&blockmodel::partition_json(&fit)).expect("serializable");
    let ppath = partition_path(cfg, disc, period);
    if let Err(e) = write_atomic(&ppath, json.as_bytes()) {
        logs.error(format!("cannot write `{}`: {e}", ppath.display()));
        return None;
    }
    match blockmodel::blockmodel_matrix_csv(net, &fit.partition) {
        Ok(csv) => {
            let mpath = out_path(
                &cfg.out,
                &[&sanitize(disc), &format!("{}.matrix.csv", period.label)],
            );
            if let Err(e) = write_atomic(&mpath, csv.as_bytes()) {
                logs.error(format!("cannot write `{}`: {e}", mpath.display()));
            }
        }
        Err(e) => logs.error(format!(
            "discipline `{disc}` period `{}`: matrix export: {e}",
            period.label
        )),
    }
    let summary = blockmodel::summarize_blockmodel(&fit.partition);
    logs.line(format!(
        "fit {disc} {}: k={k} criterion={} cores={} semi={}% per={}% restarts={} seed={}",
        period.label,
        fit.criterion_value,
        summary.n_cores,
        f4(summary.pct_semi_periphery),
        f4(summary.pct_periphery),
        fit.restarts_run,
        fit.seed,
    ));
    Some(fit)
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<Logs, String> {
    let corpus = load_corpus(cfg)?;
    let roster = load_roster(cfg)?;
    let results: Vec<Logs> = corpus
        .par_iter()
        .map(|(disc, records)| {
            let mut logs = Logs::default();
            for period in &cfg.periods {
                match load_network(cfg, disc, period) {
                    Ok(net) => {
                        fit_cell(cfg, disc, period, &net, &mut logs);
                    }
                    Err(msg) => {
                        // A cell that build skipped for lack of in-period
                        // publications stays a warning; any other absence is
                        // a hard error for the cell.
                        let empty = matches!(
                            network::build_network(records, period, roster.as_ref()),
                            Err(NetworkError::EmptyNetwork(_))
                        );
                        if empty {
                            logs.warn(format!(
                                "discipline `{disc}` period `{}`: no network (no in-period publications)",
                                period.label
                            ));
                        } else {
                            logs.error(msg);
                        }
                    }
                }
            }
            logs
        })
        .collect();
    let mut logs = Logs::default();
    for r in results {
        logs.merge(r);
    }
    Ok(logs)
}

fn period_pairs(cfg: &RunConfig) -> Vec<(&PeriodSpec, &PeriodSpec)> {
    cfg.periods.windows(2).map(|w| (&w[0], &w[1])).collect()
}

fn pair_label(p1: &PeriodSpec, p2: &PeriodSpec) -> String {
    format!("{}_{}", p1.label, p2.label)
}

/// File name for per-pair outputs: unsuffixed in the common two-period case.
fn pair_file(cfg: &RunConfig, stem: &str, ext: &str, p1: &PeriodSpec, p2: &PeriodSpec) -> String {
    if cfg.periods.len() == 2 {
        format!("{stem}.{ext}")
    } else {
        format!("{stem}_{}.{ext}", pair_label(p1, p2))
    }
}

pub fn cmd_stability(cfg: &RunConfig) -> Result<Logs, String> {
    let corpus = load_corpus(cfg)?;
    if cfg.periods.len() < 2 {
        return Err("stability needs at least two periods".to_string());
    }
    type Row = (String, String, StabilityReport);
    let gathered: Vec<(Logs, Vec<Row>)> = corpus
        .par_iter()
        .map(|(disc, _)| {
            let mut logs = Logs::default();
            let mut rows: Vec<Row> = Vec::new();
            for (p1, p2) in period_pairs(cfg) {
                let fits = (load_fit(cfg, disc, p1), load_fit(cfg, disc, p2));
                let (fit1, fit2) = match fits {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(msg), _) | (_, Err(msg)) => {
                        logs.warn(msg);
                        continue;
                    }
                };
                let tp = stability::align(fit1.partition, fit2.partition);
                let report = stability::stability_report(
                    &tp,
                    cfg.replicates,
                    cfg.seed,
                    cfg.scoping,
                );
                logs.line(format!(
                    "stability {disc} {}: ARI={} MAWIS2={}",
                    pair_label(p1, p2),
                    opt4(report.ari.adjusted),
                    opt4(report.mawis2.adjusted),
                ));
                rows.push((disc.clone(), pair_label(p1, p2), report));
            }
            (logs, rows)
        })
        .collect();

    let mut logs = Logs::default();
    let mut rows = Vec::new();
    for (l, r) in gathered {
        logs.merge(l);
        rows.extend(r);
    }
    rows.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    if rows.is_empty() && !corpus.is_empty() {
        logs.error("no fitted partition pairs found (run `fit` first)".to_string());
    }

    let mut csv = String::from("discipline,pair,");
    csv.push_str(&StabilityReport::COLUMNS.join(","));
    csv.push('\n');
    for (disc, pair, report) in &rows {
        csv.push_str(disc);
        csv.push(',');
        csv.push_str(pair);
        for value in report.adjusted_values() {
            csv.push(',');
            csv.push_str(&opt4(value));
        }
        csv.push('\n');
    }
    write_atomic(&out_path(&cfg.out, &["stability.csv"]), csv.as_bytes())
        .map_err(|e| format!("cannot write stability.csv: {e}"))?;

    let json_rows: Vec<serde_json::Value> = rows
        .iter()
        .map(|(disc, pair, report)| {
            serde_json::json!({
                "discipline": disc,
                "pair": pair,
                "report": report,
            })
        })
        .collect();
    let mut json = serde_json::to_string_pretty(&json_rows).expect("serializable");
    json.push('\n');
    write_atomic(&out_path(&cfg.out, &["stability.json"]), json.as_bytes())
        .map_err(|e| format!("cannot write stability.json: {e}"))?;
    Ok(logs)
}

pub fn cmd_transitions(cfg: &RunConfig) -> Result<Logs, String> {
    let corpus = load_corpus(cfg)?;
    if cfg.periods.len() < 2 {
        return Err("transitions need at least two periods".to_string());
    }
    let results: Vec<Logs> = corpus
        .par_iter()
        .map(|(disc, _)| {
            let mut logs = Logs::default();
            for (p1, p2) in period_pairs(cfg) {
                let fits = (load_fit(cfg, disc, p1), load_fit(cfg, disc, p2));
                let (fit1, fit2) = match fits {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(msg), _) | (_, Err(msg)) => {
                        logs.warn(msg);
                        continue;
                    }
                };
                let tp = stability::align(fit1.partition, fit2.partition);
                let ft = transitions::core_flows(&tp, FlowScope::CoresOnly);

                let sdisc = sanitize(disc);
                let mut flows = serde_json::to_string_pretty(&transitions::emit_flow_json(&ft))
                    .expect("serializable");
                flows.push('\n');
                let fpath = out_path(&cfg.out, &[&sdisc, &pair_file(cfg, "flows", "json", p1, p2)]);
                if let Err(e) = write_atomic(&fpath, flows.as_bytes()) {
                    logs.error(format!("cannot write `{}`: {e}", fpath.display()));
                }

                match transitions::emit_alluvial_svg(&ft, &AlluvialStyle::default()) {
                    Ok(svg) => {
                        let spath =
                            out_path(&cfg.out, &[&sdisc, &pair_file(cfg, "flows", "svg", p1, p2)]);
                        if let Err(e) = write_atomic(&spath, svg.as_bytes()) {
                            logs.error(format!("cannot write `{}`: {e}", spath.display()));
                        }
                    }
                    Err(e) => logs.warn(format!(
                        "discipline `{disc}` pair {}: no diagram: {e}",
                        pair_label(p1, p2)
                    )),
                }

                let events =
                    transitions::classify_events(&ft, cfg.transition_share, cfg.split_min_share);
                let pct = transitions::into_out_percentages(&tp).ok();
                match events {
                    Ok(ev) => {
                        let doc = serde_json::json!({
                            "merges": ev.merges,
                            "splits": ev.splits,
                            "dissolved": ev.dissolved,
                            "emerged": ev.emerged,
                            "pct_into": pct.map(|p| p.0),
                            "pct_out": pct.map(|p| p.1),
                        });
                        let mut text =
                            serde_json::to_string_pretty(&doc).expect("serializable");
                        text.push('\n');
                        let epath = out_path(
                            &cfg.out,
                            &[&sdisc, &pair_file(cfg, "events", "json", p1, p2)],
                        );
                        if let Err(e) = write_atomic(&epath, text.as_bytes()) {
                            logs.error(format!("cannot write `{}`: {e}", epath.display()));
                        }
                        logs.line(format!(
                            "transitions {disc} {}: merges={} splits={} dissolved={} emerged={} into={} out={}",
                            pair_label(p1, p2),
                            ev.merges.len(),
                            ev.splits.len(),
                            ev.dissolved.len(),
                            ev.emerged.len(),
                            opt4(pct.map(|p| p.0)),
                            opt4(pct.map(|p| p.1)),
                        ));
                    }
                    Err(e) => logs.error(format!(
                        "discipline `{disc}` pair {}: {e}",
                        pair_label(p1, p2)
                    )),
                }
            }
            logs
        })
        .collect();
    let mut logs = Logs::default();
    for r in results {
        logs.merge(r);
    }
    Ok(logs)
}

#[derive(Deserialize)]
struct StabilityRow {
    discipline: String,
    #[allow(dead_code)]
    pair: String,
    report: StabilityReport,
}

fn load_reports(cfg: &RunConfig) -> Result<BTreeMap<String, StabilityReport>, String> {
    let path = out_path(&cfg.out, &["stability.json"]);
    let raw = fs::read_to_string(&path).map_err(|_| {
        format!(
            "stability report `{}` not found (run `stability` first)",
            path.display()
        )
    })?;
    let rows: Vec<StabilityRow> =
        serde_json::from_str(&raw).map_err(|e| format!("corrupt stability.json: {e}"))?;
    Ok(rows
        .into_iter()
        .map(|r| (r.discipline, r.report))
        .collect())
}

fn disciplines_csv(features: &[analysis::DisciplineFeatures]) -> String {
    let mut csv = String::from(
        "discipline,field,n1,n_cores1,pct_semi1,pct_per1,avg_core_size1,\
         n2,n_cores2,pct_semi2,pct_per2,avg_core_size2,\
         growth_n,density1,density2,growth_density,pct_cores,bridge_p1,pct_into,pct_out",
    );
    for name in StabilityReport::COLUMNS {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    for f in features {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f.discipline,
            f.field.as_deref().unwrap_or(""),
            f.n1,
            f.n_cores1,
            f4(f.pct_semi1),
            f4(f.pct_per1),
            f4(f.avg_core_size1),
            f.n2,
            f.n_cores2,
            f4(f.pct_semi2),
            f4(f.pct_per2),
            f4(f.avg_core_size2),
            f4(f.growth_n),
            f4(f.density1),
            f4(f.density2),
            f4(f.growth_density),
            f4(f.pct_cores),
            u8::from(f.bridge_present1),
            opt4(f.pct_into),
            opt4(f.pct_out),
        ));
        for value in f.indices {
            csv.push(',');
            csv.push_str(&opt4(value));
        }
        csv.push('\n');
    }
    csv
}

fn regression_text(
    features: &[analysis::DisciplineFeatures],
    reference_field: &str,
) -> (String, Vec<String>) {
    let mut warnings = Vec::new();
    let mut out = String::new();
    out.push_str("Least-squares models for core stability (response: MAWIS2)\n");
    out.push_str(&format!("Reference field: {reference_field}\n\n"));

    let designs = [
        ("Model 1", analysis::regression::model_design(features, false, reference_field)),
        ("Model 2", analysis::regression::model_design(features, true, reference_field)),
    ];
    for (name, design) in designs {
        out.push_str(&format!("{name}\n"));
        match design {
            Err(e) => {
                out.push_str(&format!("  not estimated: {e}\n\n"));
                warnings.push(format!("{name} not estimated: {e}"));
            }
            Ok(d) => {
                if !d.skipped.is_empty() {
                    out.push_str(&format!(
                        "  skipped (incomplete data): {}\n",
                        d.skipped.join(", ")
                    ));
                }
                match regression::ols_fit(&d.x, &d.y, &d.names) {
                    Err(e) => {
                        out.push_str(&format!("  not estimated: {e}\n\n"));
                        warnings.push(format!("{name} not estimated: {e}"));
                    }
                    Ok(fit) => {
                        out.push_str(&format!(
                            "  {:<24} {:>10} {:>10} {:>8}\n",
                            "predictor", "b", "SE(b)", "p"
                        ));
                        for j in 0..fit.column_names.len() {
                            out.push_str(&format!(
                                "  {:<24} {:>10} {:>10} {:>8}\n",
                                fit.column_names[j],
                                f4(fit.coefficients[j]),
                                f4(fit.std_errors[j]),
                                f4(fit.p_values[j]),
                            ));
                        }
                        out.push_str(&format!("  n_obs: {}\n", fit.n_obs));
                        out.push_str(&format!(
                            "  adjusted R^2: {}\n",
                            f4(fit.adj_r_squared)
                        ));
                        out.push_str(&format!(
                            "  F: {} ({}; {}) p={}\n",
                            f4(fit.f_statistic),
                            fit.f_df.0,
                            fit.f_df.1,
                            f4(fit.f_p_value),
                        ));
                        // VIF over the predictors (intercept excluded).
                        let predictors = d.x.columns(1, d.x.ncols() - 1).into_owned();
                        match regression::vif(&predictors) {
                            Ok(vifs) => {
                                let rendered: Vec<String> = vifs
                                    .iter()
                                    .zip(&d.names[1..])
                                    .map(|(v, name)| match v {
                                        regression::Vif::Finite(x) => {
                                            format!("{name}={}", f4(*x))
                                        }
                                        regression::Vif::Infinite => {
                                            format!("{name}=inf")
                                        }
                                    })
                                    .collect();
                                out.push_str(&format!("  VIF: {}\n", rendered.join(" ")));
                            }
                            Err(e) => out.push_str(&format!("  VIF: not computed ({e})\n")),
                        }
                        out.push('\n');
                    }
                }
            }
        }
    }
    (out, warnings)
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Logs, String> {
    if cfg.periods.len() != 2 {
        return Err(format!(
            "analyze needs exactly two periods, config has {}",
            cfg.periods.len()
        ));
    }
    let corpus = load_corpus(cfg)?;
    let reports = load_reports(cfg)?;
    let (p1, p2) = (&cfg.periods[0], &cfg.periods[1]);

    let mut logs = Logs::default();
    let mut inputs: Vec<DisciplineInput> = Vec::new();
    for disc in corpus.keys() {
        let loaded = (
            load_network(cfg, disc, p1),
            load_network(cfg, disc, p2),
            load_fit(cfg, disc, p1),
            load_fit(cfg, disc, p2),
        );
        let (net1, net2, fit1, fit2) = match loaded {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => (a, b, c, d),
            _ => {
                logs.warn(format!(
                    "discipline `{disc}`: missing a period, excluded from the analysis"
                ));
                continue;
            }
        };
        let Some(report) = reports.get(disc) else {
            logs.warn(format!(
                "discipline `{disc}`: no stability report, excluded from the analysis"
            ));
            continue;
        };
        let bridge_present1 =
            blockmodel::detect_bridging_cores(&net1, &fit1.partition, cfg.bridging_density)
                .map(|pairs| !blockmodel::bridging_core_indices(&pairs).is_empty())
                .unwrap_or(false);
        let summary1 = blockmodel::summarize_blockmodel(&fit1.partition);
        let summary2 = blockmodel::summarize_blockmodel(&fit2.partition);
        let tp = stability::align(fit1.partition, fit2.partition);
        let pct = transitions::into_out_percentages(&tp).ok();
        inputs.push(DisciplineInput {
            discipline: disc.clone(),
            field: cfg.fields.get(disc).cloned(),
            n1: net1.n(),
            n2: net2.n(),
            density1: net1.density().unwrap_or(0.0),
            density2: net2.density().unwrap_or(0.0),
            summary1,
            summary2,
            bridge_present1,
            pct_into: pct.map(|p| p.0),
            pct_out: pct.map(|p| p.1),
            report: report.clone(),
        });
    }

    let features = analysis::assemble_features(&inputs);
    write_atomic(
        &out_path(&cfg.out, &["disciplines.csv"]),
        disciplines_csv(&features).as_bytes(),
    )
    .map_err(|e| format!("cannot write disciplines.csv: {e}"))?;
    logs.line(format!("analyze: {} disciplines with features", features.len()));

    // Discipline clustering on the complete nine-index vectors.
    let complete: Vec<(usize, Vec<f64>)> = features
        .iter()
        .enumerate()
        .filter_map(|(i, f)| {
            let values: Option<Vec<f64>> = f.indices.iter().copied().collect();
            values.map(|v| (i, v))
        })
        .collect();
    for f in &features {
        if f.indices.iter().any(|v| v.is_none()) {
            logs.warn(format!(
                "discipline `{}`: undefined stability indices, excluded from clustering",
                f.discipline
            ));
        }
    }

    if complete.len() < 2 {
        logs.warn(
            "clustering skipped: needs at least 2 disciplines with complete index vectors"
                .to_string(),
        );
    } else {
        let matrix: Vec<Vec<f64>> = complete.iter().map(|(_, v)| v.clone()).collect();
        let order_key: Vec<f64> = matrix.iter().map(|v| v[0]).collect();
        match analysis::standardize(&matrix) {
            Err(e) => logs.error(format!("standardization failed: {e}")),
            Ok(std) => {
                if !std.zero_variance_cols.is_empty() {
                    logs.warn(format!(
                        "zero-variance index columns standardized to 0: {:?}",
                        std.zero_variance_cols
                    ));
                }
                let gap_cfg = GapConfig {
                    k_max: cfg.gap_k_max.min(complete.len().saturating_sub(1)).max(1),
                    reference_sets: cfg.gap_reference_sets,
                    seed: cfg.seed,
                };
                match analysis::cluster_disciplines(
                    &std.data,
                    &order_key,
                    cfg.analysis_k,
                    &gap_cfg,
                ) {
                    Err(e) => logs.error(format!("discipline clustering failed: {e}")),
                    Ok(clustering) => {
                        let mut csv = String::from("discipline,cluster\n");
                        for ((idx, _), cluster) in
                            complete.iter().zip(&clustering.assignments)
                        {
                            csv.push_str(&format!(
                                "{},{cluster}\n",
                                features[*idx].discipline
                            ));
                        }
                        write_atomic(&out_path(&cfg.out, &["clusters.csv"]), csv.as_bytes())
                            .map_err(|e| format!("cannot write clusters.csv: {e}"))?;

                        if let Some(gaps) = &clustering.gap_values {
                            let mut csv = String::from("k,gap\n");
                            for (i, g) in gaps.iter().enumerate() {
                                csv.push_str(&format!("{},{}\n", i + 1, f4(*g)));
                            }
                            write_atomic(&out_path(&cfg.out, &["gap.csv"]), csv.as_bytes())
                                .map_err(|e| format!("cannot write gap.csv: {e}"))?;
                        }

                        let member_features: Vec<analysis::DisciplineFeatures> = complete
                            .iter()
                            .map(|(idx, _)| features[*idx].clone())
                            .collect();
                        let summaries =
                            analysis::cluster_summary(&clustering.assignments, &member_features);
                        let mut csv = String::from(
                            "cluster,n_disciplines,pct_into,pct_out,core_size,researchers\n",
                        );
                        for s in &summaries {
                            csv.push_str(&format!(
                                "{},{},{},{},{},{}\n",
                                s.cluster,
                                s.n_members,
                                opt4(s.mean_pct_into),
                                opt4(s.mean_pct_out),
                                f4(s.mean_core_size),
                                f4(s.mean_researchers),
                            ));
                        }
                        write_atomic(
                            &out_path(&cfg.out, &["cluster_summary.csv"]),
                            csv.as_bytes(),
                        )
                        .map_err(|e| format!("cannot write cluster_summary.csv: {e}"))?;
                        logs.line(format!(
                            "analyze: {} clusters over {} disciplines",
                            clustering.k,
                            complete.len()
                        ));
                    }
                }
            }
        }
    }

    let (text, reg_warnings) = regression_text(&features, &cfg.reference_field);
    for w in reg_warnings {
        logs.warn(w);
    }
    write_atomic(&out_path(&cfg.out, &["regression.txt"]), text.as_bytes())
        .map_err(|e| format!("cannot write regression.txt: {e}"))?;
    Ok(logs)
}

pub fn cmd_all(cfg: &RunConfig) -> Result<Logs, String> {
    let mut logs = Logs::default();
    logs.merge(cmd_build(cfg)?);
    logs.merge(cmd_fit(cfg)?);
    logs.merge(cmd_stability(cfg)?);
    logs.merge(cmd_transitions(cfg)?);
    logs.merge(cmd_analyze(cfg)?);
    Ok(logs)
}
