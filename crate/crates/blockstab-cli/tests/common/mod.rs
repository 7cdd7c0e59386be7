//! Shared helpers for the CLI and acceptance suites: a deterministic
//! synthetic corpus generator, a binary runner and an output-tree reader.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

#[derive(Clone)]
pub struct DiscSpec {
    pub name: &'static str,
    pub cores: usize,
    pub core_size: (usize, usize),
    pub semi_periphery: usize,
    pub isolates: usize,
    /// Fraction of each period-1 core replaced by new authors in period 2.
    pub churn: f64,
}

struct AuthorPool {
    prefix: String,
    next: usize,
}

impl AuthorPool {
    fn new(prefix: &str) -> Self {
        AuthorPool {
            prefix: prefix.to_string(),
            next: 0,
        }
    }

    fn fresh(&mut self) -> String {
        let a = format!("{}_a{:05}", self.prefix, self.next);
        self.next += 1;
        a
    }
}

fn push_pub(rows: &mut String, disc: &str, pub_id: &str, members: &[String], year: i32) {
    for m in members {
        rows.push_str(&format!("{pub_id},{m},{year},{disc}\n"));
    }
}

/// Planted two-period corpus: complete cores (one publication per core),
/// semi-periphery authors with 1-2 ties into distinct cores, and isolated
/// solo authors. Period-2 cores keep a share of their members and fill up
/// with newcomers.
pub fn synth_corpus(specs: &[DiscSpec], seed: u64) -> String {
    let mut rows = String::from("pub_id,author_id,year,discipline\n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for spec in specs {
        let mut pool = AuthorPool::new(spec.name);
        let mut pub_no = 0usize;
        let pid = |pub_no: &mut usize| {
            let p = format!("{}_p{:05}", spec.name, *pub_no);
            *pub_no += 1;
            p
        };

        let mut p1_cores: Vec<Vec<String>> = Vec::new();
        for _ in 0..spec.cores {
            let size = rng.gen_range(spec.core_size.0..=spec.core_size.1);
            let members: Vec<String> = (0..size).map(|_| pool.fresh()).collect();
            let p = pid(&mut pub_no);
            push_pub(&mut rows, spec.name, &p, &members, 1995);
            p1_cores.push(members);
        }
        let mut p2_cores: Vec<Vec<String>> = Vec::new();
        for core in &p1_cores {
            let keep = (((1.0 - spec.churn) * core.len() as f64).ceil() as usize)
                .clamp(2, core.len());
            let mut members: Vec<String> = core[..keep].to_vec();
            while members.len() < core.len() {
                members.push(pool.fresh());
            }
            let p = pid(&mut pub_no);
            push_pub(&mut rows, spec.name, &p, &members, 2005);
            p2_cores.push(members);
        }

        for (year, cores) in [(1996, &p1_cores), (2006, &p2_cores)] {
            for _ in 0..spec.semi_periphery {
                let author = pool.fresh();
                let n_ties = rng.gen_range(1..=2usize).min(cores.len());
                let mut candidates: Vec<usize> = (0..cores.len()).collect();
                for _ in 0..n_ties {
                    let pick = rng.gen_range(0..candidates.len());
                    let core_idx = candidates.swap_remove(pick);
                    let member = cores[core_idx][rng.gen_range(0..cores[core_idx].len())].clone();
                    let p = pid(&mut pub_no);
                    push_pub(
                        &mut rows,
                        spec.name,
                        &p,
                        &[author.clone(), member],
                        year,
                    );
                }
            }
            for _ in 0..spec.isolates {
                let author = pool.fresh();
                let p = pid(&mut pub_no);
                push_pub(&mut rows, spec.name, &p, &[author], year);
            }
        }
    }
    rows
}

pub fn run_blockstab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockstab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// All files under `dir` keyed by relative path.
pub fn tree_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let entry = entry.expect("entry");
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                out.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn write_file(path: &Path, contents: &str) {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).expect("mkdir");
    }
    std::fs::write(path, contents).expect("write");
}

/// A config for the standard two-period layout.
pub fn base_config(extra: &str) -> String {
    format!(
        "input = \"corpus.csv\"\nout = \"out\"\n\n\
         [[periods]]\nlabel = \"p1\"\nstart_year = 1991\nend_year = 2000\n\n\
         [[periods]]\nlabel = \"p2\"\nstart_year = 2001\nend_year = 2010\n\n{extra}"
    )
}
