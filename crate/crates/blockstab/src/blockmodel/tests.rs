use super::*;
use crate::network::Network;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn net(vertices: &[&str], edges: &[(usize, usize)]) -> Network {
    let e: Vec<(usize, usize, u32)> = edges.iter().map(|&(i, j)| (i, j, 1)).collect();
    Network::from_edges(vertices.iter().map(|s| s.to_string()).collect(), &e).unwrap()
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i:02}")).collect()
}

fn random_net(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Network {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p) {
                edges.push((i, j, 1));
            }
        }
    }
    Network::from_edges(labels(n), &edges).unwrap()
}

/// Test-side criterion for the default image (weight 1, optional bridging):
/// counts each unordered pair against the ideal block directly.
fn oracle_criterion(
    net: &Network,
    assign: &[usize], // cluster per vertex; 0..k-1 = cores, k = semi-periphery
    k: usize,
    bridging: &BTreeSet<(u32, u32)>,
) -> u64 {
    let mut total = 0;
    for i in 0..net.n() {
        for j in (i + 1)..net.n() {
            let (a, b) = (assign[i], assign[j]);
            let complete = (a == b && a < k)
                || (a < k
                    && b < k
                    && (bridging.contains(&(a.min(b) as u32 + 1, a.max(b) as u32 + 1))));
            let tie = net.has_tie(i, j);
            if complete != tie {
                total += 1;
            }
        }
    }
    total
}

/// Minimum oracle criterion over every assignment of the non-fixed vertices
/// to the k cores and the semi-periphery.
fn exhaustive_minimum(net: &Network, k: usize) -> u64 {
    let n = net.n();
    let nc = k + 1;
    let mut assign = vec![0usize; n];
    let mut best = u64::MAX;
    let total = (nc as u64).pow(n as u32);
    let empty = BTreeSet::new();
    for code in 0..total {
        let mut c = code;
        for slot in assign.iter_mut() {
            *slot = (c % nc as u64) as usize;
            c /= nc as u64;
        }
        best = best.min(oracle_criterion(net, &assign, k, &empty));
    }
    best
}

fn partition_from_assign(net: &Network, assign: &[usize], k: usize) -> Partition {
    let mut assignment = BTreeMap::new();
    for (v, &c) in net.vertices().iter().zip(assign) {
        assignment.insert(v.clone(), c as u32 + 1);
    }
    let mut roles: BTreeMap<u32, Role> =
        (1..=k as u32).map(|c| (c, Role::Core(c))).collect();
    roles.insert(k as u32 + 1, Role::SemiPeriphery);
    Partition::new(assignment, roles).unwrap()
}

/// Clusters of a partition as a set of member sets, ignoring labels but
/// keeping the core/semi-periphery/periphery role class.
fn role_classed_clusters(p: &Partition) -> BTreeSet<(u8, Vec<String>)> {
    p.roles()
        .keys()
        .map(|&c| {
            let class = match p.roles()[&c] {
                Role::Core(_) => 0,
                Role::SemiPeriphery => 1,
                Role::Periphery => 2,
            };
            (class, p.members_of(c))
        })
        .filter(|(_, members)| !members.is_empty())
        .collect()
}

#[test]
fn default_image_blocks() {
    let img = ImageSpec::default_image(2, &BTreeSet::new()).unwrap();
    assert_eq!(
        img.block(Position::Core(1), Position::Core(1)).unwrap(),
        BlockType::Complete
    );
    assert_eq!(
        img.block(Position::Core(1), Position::Core(2)).unwrap(),
        BlockType::Null
    );
    assert_eq!(
        img.block(Position::Core(1), Position::SemiPeriphery).unwrap(),
        BlockType::Null
    );
    assert_eq!(
        img.block(Position::SemiPeriphery, Position::SemiPeriphery)
            .unwrap(),
        BlockType::Null
    );

    let img = ImageSpec::default_image(3, &BTreeSet::from([(1, 2)])).unwrap();
    assert_eq!(
        img.block(Position::Core(1), Position::Core(2)).unwrap(),
        BlockType::Complete
    );
    assert_eq!(
        img.block(Position::Core(2), Position::Core(1)).unwrap(),
        BlockType::Complete
    );
    assert_eq!(
        img.block(Position::Core(2), Position::Core(3)).unwrap(),
        BlockType::Null
    );

    let img = ImageSpec::default_image(1, &BTreeSet::new()).unwrap();
    assert_eq!(
        img.block(Position::Core(1), Position::Core(1)).unwrap(),
        BlockType::Complete
    );
    assert_eq!(
        img.block(Position::Core(1), Position::SemiPeriphery).unwrap(),
        BlockType::Null
    );

    assert!(ImageSpec::default_image(2, &BTreeSet::from([(1, 3)])).is_err());
    assert!(ImageSpec::default_image(2, &BTreeSet::from([(1, 1)])).is_err());
}

fn two_triangles() -> Network {
    net(
        &["a", "b", "c", "x", "y", "z"],
        &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)],
    )
}

#[test]
fn criterion_perfect_fit_is_zero() {
    let g = two_triangles();
    let img = ImageSpec::default_image(2, &BTreeSet::new()).unwrap();
    let p = partition_from_assign(&g, &[0, 0, 0, 1, 1, 1], 2);
    let (value, blocks) = criterion(&g, &p, &img).unwrap();
    assert_eq!(value, 0);
    assert!(blocks.is_empty());
}

#[test]
fn criterion_counts_cross_edge_once() {
    let g = net(
        &["a", "b", "c", "x", "y", "z"],
        &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (0, 3)],
    );
    let img = ImageSpec::default_image(2, &BTreeSet::new()).unwrap();
    let assign = [0, 0, 0, 1, 1, 1];
    let p = partition_from_assign(&g, &assign, 2);
    let (value, blocks) = criterion(&g, &p, &img).unwrap();
    assert_eq!(value, 1);
    assert_eq!(blocks[&(Position::Core(1), Position::Core(2))], 1);
    assert_eq!(value, oracle_criterion(&g, &assign, 2, &BTreeSet::new()));
}

#[test]
fn criterion_counts_missing_tie_in_core() {
    let g = net(&["a", "b", "c"], &[(0, 1), (1, 2)]);
    let img = ImageSpec::default_image(1, &BTreeSet::new()).unwrap();
    let assign = [0, 0, 0];
    let p = partition_from_assign(&g, &assign, 1);
    let (value, blocks) = criterion(&g, &p, &img).unwrap();
    assert_eq!(value, 1);
    assert_eq!(blocks[&(Position::Core(1), Position::Core(1))], 1);
    assert_eq!(value, oracle_criterion(&g, &assign, 1, &BTreeSet::new()));
}

#[test]
fn criterion_rejects_uncovered_vertices_and_periphery_roles() {
    let g = two_triangles();
    let img = ImageSpec::default_image(2, &BTreeSet::new()).unwrap();
    let mut assignment = BTreeMap::new();
    for v in g.vertices().iter().take(5) {
        assignment.insert(v.clone(), 1);
    }
    let roles = BTreeMap::from([(1, Role::Core(1))]);
    let p = Partition::new(assignment, roles).unwrap();
    assert!(matches!(
        criterion(&g, &p, &img),
        Err(BlockmodelError::VertexNotInPartition(_))
    ));

    let mut assignment = BTreeMap::new();
    for v in g.vertices() {
        assignment.insert(v.clone(), 1);
    }
    let p = Partition::new(assignment, BTreeMap::from([(1, Role::Periphery)])).unwrap();
    assert!(matches!(
        criterion(&g, &p, &img),
        Err(BlockmodelError::PeripheryInBlocks(_))
    ));
}

#[test]
fn criterion_zero_iff_network_matches_image() {
    // Build the ideal network for random partitions and images, assert 0;
    // flip one pair and assert nonzero.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..25 {
        let n = rng.gen_range(4..=10);
        let k = rng.gen_range(1..=3usize);
        let assign: Vec<usize> = (0..n).map(|_| rng.gen_range(0..=k)).collect();
        let bridging = if k >= 2 && rng.gen_bool(0.4) {
            BTreeSet::from([(1u32, 2u32)])
        } else {
            BTreeSet::new()
        };
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (assign[i], assign[j]);
                let complete = (a == b && a < k)
                    || (a < k
                        && b < k
                        && bridging.contains(&(a.min(b) as u32 + 1, a.max(b) as u32 + 1)));
                if complete {
                    edges.push((i, j, 1));
                }
            }
        }
        let g = Network::from_edges(labels(n), &edges).unwrap();
        let img = ImageSpec::default_image(k as u32, &bridging).unwrap();
        let p = partition_from_assign(&g, &assign, k);
        let (value, _) = criterion(&g, &p, &img).unwrap();
        assert_eq!(value, 0);

        // Perturb one pair.
        let (i, j) = (0, 1);
        let mut flipped: Vec<(usize, usize, u32)> = g
            .edges()
            .into_iter()
            .filter(|&(a, b, _)| (a, b) != (i, j))
            .collect();
        if !g.has_tie(i, j) {
            flipped.push((i, j, 1));
        }
        let g2 = Network::from_edges(labels(n), &flipped).unwrap();
        let (value2, _) = criterion(&g2, &p, &img).unwrap();
        assert_eq!(value2, 1);
    }
}

#[test]
fn criterion_invariant_under_core_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let g = random_net(&mut rng, 8, 0.4);
        let assign: Vec<usize> = (0..8).map(|_| rng.gen_range(0..=2usize)).collect();
        let img = ImageSpec::default_image(2, &BTreeSet::new()).unwrap();
        let p1 = partition_from_assign(&g, &assign, 2);
        let swapped: Vec<usize> = assign
            .iter()
            .map(|&c| match c {
                0 => 1,
                1 => 0,
                other => other,
            })
            .collect();
        let p2 = partition_from_assign(&g, &swapped, 2);
        assert_eq!(
            criterion(&g, &p1, &img).unwrap().0,
            criterion(&g, &p2, &img).unwrap().0
        );
    }
}

#[test]
fn strip_periphery_examples() {
    let g = net(&["a", "b", "c", "d", "e"], &[(0, 1), (0, 2), (1, 2)]);
    let (reduced, periphery) = strip_periphery(&g);
    assert_eq!(periphery.len(), 2);
    assert_eq!(reduced.n(), 3);

    let triangle = net(&["a", "b", "c"], &[(0, 1), (0, 2), (1, 2)]);
    let (reduced, periphery) = strip_periphery(&triangle);
    assert!(periphery.is_empty());
    assert_eq!(reduced, triangle);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let g = random_net(&mut rng, 15, 0.1);
        let (_, periphery) = strip_periphery(&g);
        let oracle: BTreeSet<String> = (0..g.n())
            .filter(|&i| g.degree(i) == 0)
            .map(|i| g.vertices()[i].clone())
            .collect();
        assert_eq!(periphery, oracle);
    }
}

#[test]
fn exact_cores_detects_only_equivalent_cliques() {
    // Disjoint clique with no external ties.
    let g = net(&["a", "b", "c", "x", "y"], &[(0, 1), (0, 2), (1, 2), (3, 4)]);
    let groups = extract_exact_cores(&g, 2);
    assert_eq!(groups.len(), 2);
    assert_eq!(
        groups[0],
        BTreeSet::from(["a".to_string(), "b".to_string(), "c".to_string()])
    );
    assert_eq!(groups[1], BTreeSet::from(["x".to_string(), "y".to_string()]));

    // An extra external tie on one member breaks the equivalence.
    let g = net(&["a", "b", "z", "w"], &[(0, 1), (0, 2), (2, 3)]);
    let groups = extract_exact_cores(&g, 2);
    assert!(groups.is_empty());
}

#[test]
fn exact_cores_match_subset_brute_force() {
    // Oracle: enumerate all vertex subsets of size 2..=4 and keep maximal
    // ones that are pairwise adjacent with identical external neighborhoods.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..30 {
        let n = rng.gen_range(4..=10);
        let g = random_net(&mut rng, n, 0.35);
        if !g.isolates().is_empty() {
            continue;
        }
        let equivalent_adjacent = |i: usize, j: usize| {
            g.has_tie(i, j)
                && (0..n)
                    .filter(|&s| s != i && s != j)
                    .all(|s| g.has_tie(i, s) == g.has_tie(j, s))
        };
        let mut qualifying: Vec<BTreeSet<usize>> = Vec::new();
        for mask in 0u32..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            if members.len() < 2 || members.len() > 4 {
                continue;
            }
            let ok = members.iter().enumerate().all(|(a, &i)| {
                members[a + 1..].iter().all(|&j| equivalent_adjacent(i, j))
            });
            if ok {
                qualifying.push(members.into_iter().collect());
            }
        }
        // Keep only maximal qualifying sets.
        let maximal: BTreeSet<BTreeSet<usize>> = qualifying
            .iter()
            .filter(|s| {
                !qualifying
                    .iter()
                    .any(|t| t.len() > s.len() && s.is_subset(t))
            })
            .cloned()
            .collect();
        let got: BTreeSet<BTreeSet<usize>> = extract_exact_cores(&g, 2)
            .into_iter()
            .filter(|s| s.len() <= 4)
            .map(|s| {
                s.iter()
                    .map(|v| g.vertex_index(v).unwrap())
                    .collect::<BTreeSet<usize>>()
            })
            .collect();
        assert_eq!(got, maximal, "n={n}");
    }
}

#[test]
fn local_search_recovers_two_triangles() {
    let g = two_triangles();
    let img = ImageSpec::default_image(2, &BTreeSet::new()).unwrap();
    let fit = local_search(&g, &img, &[], 5, 7).unwrap();
    assert_eq!(fit.criterion_value, 0);
    assert_eq!(fit.criterion_value, exhaustive_minimum(&g, 2));
    let clusters = role_classed_clusters(&fit.partition);
    assert!(clusters.contains(&(0, vec!["a".into(), "b".into(), "c".into()])));
    assert!(clusters.contains(&(0, vec!["x".into(), "y".into(), "z".into()])));
}

#[test]
fn single_edge_single_core() {
    let g = net(&["a", "b"], &[(0, 1)]);
    let img = ImageSpec::default_image(1, &BTreeSet::new()).unwrap();
    let fit = local_search(&g, &img, &[], 3, 1).unwrap();
    assert_eq!(fit.criterion_value, 0);
    assert_eq!(fit.partition.role_of("a"), Some(Role::Core(1)));
    assert_eq!(fit.partition.role_of("b"), Some(Role::Core(1)));
}

#[test]
fn noisy_planted_instance_matches_exhaustive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10 {
        // Two planted triangles plus one random noise edge, n = 6..8.
        let extra = rng.gen_range(0..=2);
        let n = 6 + extra;
        let mut edges = vec![(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)];
        let i = rng.gen_range(0..3);
        let j = rng.gen_range(3..6);
        edges.push((i, j));
        let g = Network::from_edges(
            labels(n),
            &edges.iter().map(|&(a, b)| (a, b, 1)).collect::<Vec<_>>(),
        )
        .unwrap();
        let img = ImageSpec::default_image(2, &BTreeSet::new()).unwrap();
        let fit = local_search(&g, &img, &[], 20, 3).unwrap();
        assert_eq!(fit.criterion_value, exhaustive_minimum(&g, 2));
    }
}

#[test]
fn fit_triangle_plus_isolate() {
    let g = net(&["a", "b", "c", "d"], &[(0, 1), (0, 2), (1, 2)]);
    let fit = fit_blockmodel(&g, 1, &FitOptions::default()).unwrap();
    assert_eq!(fit.criterion_value, 0);
    assert_eq!(fit.partition.role_of("a"), Some(Role::Core(1)));
    assert_eq!(fit.partition.role_of("d"), Some(Role::Periphery));
}

#[test]
fn fit_places_hangers_in_semi_periphery() {
    // Two planted 4-cliques, two sparse hangers-on, two isolates.
    let mut edges = Vec::new();
    for group in [[0, 1, 2, 3], [4, 5, 6, 7]] {
        for (a, &i) in group.iter().enumerate() {
            for &j in &group[a + 1..] {
                edges.push((i, j));
            }
        }
    }
    edges.push((8, 0)); // hanger onto clique 1
    edges.push((9, 4)); // hanger onto clique 2
    let g = net(
        &["a", "b", "c", "d", "p", "q", "r", "s", "h1", "h2", "i1", "i2"],
        &edges,
    );
    let opts = FitOptions {
        restarts: Some(30),
        seed: 11,
        ..FitOptions::default()
    };
    let fit = fit_blockmodel(&g, 2, &opts).unwrap();
    assert_eq!(fit.partition.role_of("h1"), Some(Role::SemiPeriphery));
    assert_eq!(fit.partition.role_of("h2"), Some(Role::SemiPeriphery));
    assert_eq!(fit.partition.role_of("i1"), Some(Role::Periphery));
    assert_eq!(fit.partition.role_of("a"), Some(Role::Core(1)));
    assert_eq!(fit.partition.role_of("p"), Some(Role::Core(2)));
    // Exhaustive check over the stripped network (n = 10, k = 2).
    let (reduced, _) = strip_periphery(&g);
    assert_eq!(fit.criterion_value, exhaustive_minimum(&reduced, 2));
}

#[test]
fn freezing_cliques_preserves_the_optimum_on_clean_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        // Three disjoint cliques with sizes 3..5 and a couple of isolates.
        let sizes: Vec<usize> = (0..3).map(|_| rng.gen_range(3..=5)).collect();
        let mut edges = Vec::new();
        let mut start = 0;
        for &s in &sizes {
            for i in start..start + s {
                for j in (i + 1)..start + s {
                    edges.push((i, j, 1));
                }
            }
            start += s;
        }
        let n = start + 2;
        let g = Network::from_edges(labels(n), &edges).unwrap();
        let frozen_opts = FitOptions {
            restarts: Some(10),
            seed: 5,
            freeze_cliques: true,
            ..FitOptions::default()
        };
        let plain_opts = FitOptions {
            restarts: Some(10),
            seed: 5,
            ..FitOptions::default()
        };
        let with = fit_blockmodel(&g, 3, &frozen_opts).unwrap();
        let without = fit_blockmodel(&g, 3, &plain_opts).unwrap();
        assert_eq!(with.criterion_value, 0);
        assert_eq!(with.criterion_value, without.criterion_value);
        assert_eq!(
            role_classed_clusters(&with.partition),
            role_classed_clusters(&without.partition)
        );
    }
}

#[test]
fn infeasible_k_is_reported() {
    let g = net(&["a", "b"], &[(0, 1)]);
    let img = ImageSpec::default_image(3, &BTreeSet::new()).unwrap();
    let err = local_search(&g, &img, &[], 2, 1).unwrap_err();
    assert!(matches!(err, BlockmodelError::InfeasibleK { k: 3, .. }));
}

#[test]
fn fit_is_deterministic_across_thread_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let g = random_net(&mut rng, 20, 0.25);
    let opts = FitOptions {
        restarts: Some(12),
        seed: 99,
        ..FitOptions::default()
    };
    let pool1 = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let fit1 = pool1.install(|| fit_blockmodel(&g, 3, &opts)).unwrap();
    let fit4 = pool4.install(|| fit_blockmodel(&g, 3, &opts)).unwrap();
    assert_eq!(fit1.criterion_value, fit4.criterion_value);
    assert_eq!(fit1.partition, fit4.partition);
    let again = pool4.install(|| fit_blockmodel(&g, 3, &opts)).unwrap();
    assert_eq!(fit4.partition, again.partition);
}

#[test]
fn bridging_detection_by_block_density() {
    // Cores A = {0,1}, B = {2,3}, C = {4,5}; B fully tied to both A and C.
    let mut edges = vec![(0, 1), (2, 3), (4, 5)];
    for b in [2, 3] {
        for other in [0, 1, 4, 5] {
            edges.push((b.min(other), b.max(other)));
        }
    }
    edges.sort();
    edges.dedup();
    let g = net(&["a0", "a1", "b0", "b1", "c0", "c1"], &edges);
    let p = partition_from_assign(&g, &[0, 0, 1, 1, 2, 2], 3);
    let pairs = detect_bridging_cores(&g, &p, 0.8).unwrap();
    assert_eq!(pairs, BTreeSet::from([(1, 2), (2, 3)]));
    assert_eq!(bridging_core_indices(&pairs), BTreeSet::from([2]));

    // Zero cross ties → no pairs.
    let g2 = net(&["a0", "a1", "b0", "b1"], &[(0, 1), (2, 3)]);
    let p2 = partition_from_assign(&g2, &[0, 0, 1, 1], 2);
    assert!(detect_bridging_cores(&g2, &p2, 0.8).unwrap().is_empty());

    // Threshold 1.0 with one missing cross tie → no pairs.
    let g3 = net(
        &["a0", "a1", "b0", "b1"],
        &[(0, 1), (2, 3), (0, 2), (0, 3), (1, 2)],
    );
    let p3 = partition_from_assign(&g3, &[0, 0, 1, 1], 2);
    assert!(detect_bridging_cores(&g3, &p3, 1.0).unwrap().is_empty());
    assert_eq!(
        detect_bridging_cores(&g3, &p3, 0.75).unwrap(),
        BTreeSet::from([(1, 2)])
    );
}

#[test]
fn summary_counts() {
    // 10 vertices: cores {3,3}, semi 2, periphery 2.
    let mut assignment = BTreeMap::new();
    for (i, v) in ["a", "b", "c"].iter().enumerate() {
        assignment.insert(v.to_string(), 1);
        let _ = i;
    }
    for v in ["d", "e", "f"] {
        assignment.insert(v.to_string(), 2);
    }
    for v in ["g", "h"] {
        assignment.insert(v.to_string(), 3);
    }
    for v in ["i", "j"] {
        assignment.insert(v.to_string(), 4);
    }
    let roles = BTreeMap::from([
        (1, Role::Core(1)),
        (2, Role::Core(2)),
        (3, Role::SemiPeriphery),
        (4, Role::Periphery),
    ]);
    let p = Partition::new(assignment, roles).unwrap();
    let s = summarize_blockmodel(&p);
    assert_eq!(s.n, 10);
    assert_eq!(s.n_cores, 2);
    assert!((s.pct_semi_periphery - 20.0).abs() < 1e-12);
    assert!((s.pct_periphery - 20.0).abs() < 1e-12);
    assert!((s.avg_core_size - 3.0).abs() < 1e-12);
    assert!(!s.no_cores);

    let mut assignment = BTreeMap::new();
    for v in ["a", "b"] {
        assignment.insert(v.to_string(), 1);
    }
    let p = Partition::new(assignment, BTreeMap::from([(1, Role::Periphery)])).unwrap();
    let s = summarize_blockmodel(&p);
    assert_eq!(s.n_cores, 0);
    assert!((s.pct_periphery - 100.0).abs() < 1e-12);
    assert_eq!(s.avg_core_size, 0.0);
    assert!(s.no_cores);
}

#[test]
fn partition_json_round_trip() {
    let g = net(&["a", "b", "c", "d"], &[(0, 1), (0, 2), (1, 2)]);
    let fit = fit_blockmodel(&g, 1, &FitOptions::default()).unwrap();
    let json = partition_json(&fit);
    let back = partition_from_json(&json).unwrap();
    assert_eq!(back.partition, fit.partition);
    assert_eq!(back.criterion_value, fit.criterion_value);
    assert_eq!(back.seed, fit.seed);
}

#[test]
fn matrix_csv_layout() {
    let g = net(&["a", "b", "c", "d"], &[(0, 1), (0, 2), (1, 2)]);
    let fit = fit_blockmodel(&g, 1, &FitOptions::default()).unwrap();
    let csv = blockmodel_matrix_csv(&g, &fit.partition).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2 + g.n());
    assert!(lines[0].starts_with("cluster,vertex,core_1,core_1,core_1,periphery"));
    assert!(lines[1].starts_with(",,a,b,c,d"));
    assert!(lines[2].starts_with("core_1,a,0,1,1,0"));
}

#[test]
fn partition_invariants_are_enforced() {
    let assignment = BTreeMap::from([("a".to_string(), 1)]);
    let roles = BTreeMap::from([(1, Role::SemiPeriphery), (2, Role::SemiPeriphery)]);
    assert!(Partition::new(assignment.clone(), roles).is_err());

    let roles = BTreeMap::from([(1, Role::Core(1)), (2, Role::Core(1))]);
    assert!(Partition::new(assignment.clone(), roles).is_err());

    let roles = BTreeMap::from([(2, Role::Core(1))]);
    assert!(Partition::new(assignment, roles).is_err());
}

mod props {
    use super::*;
    use proptest::prelude::{prop_assert_eq, proptest, ProptestConfig};

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// For n <= 7 and k <= 2 the search with a handful of restarts must
        /// reach the exhaustive optimum on random graphs.
        #[test]
        fn search_reaches_exhaustive_optimum(seed in 0u64..2000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(3..=7);
            let g = random_net(&mut rng, n, 0.4);
            let img = ImageSpec::default_image(2, &BTreeSet::new()).unwrap();
            let fit = local_search(&g, &img, &[], 15, seed).unwrap();
            prop_assert_eq!(fit.criterion_value, exhaustive_minimum(&g, 2));
        }

        /// The tracked criterion of the returned fit always equals a direct
        /// pair enumeration.
        #[test]
        fn fit_criterion_matches_direct_enumeration(seed in 0u64..2000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(4..=12);
            let g = random_net(&mut rng, n, 0.3);
            let opts = FitOptions { restarts: Some(4), seed, ..FitOptions::default() };
            if let Ok(fit) = fit_blockmodel(&g, 2, &opts) {
                let assign: Vec<usize> = g
                    .vertices()
                    .iter()
                    .map(|v| match fit.partition.role_of(v).unwrap() {
                        Role::Core(c) => c as usize - 1,
                        Role::SemiPeriphery | Role::Periphery => 2,
                    })
                    .collect();
                prop_assert_eq!(
                    fit.criterion_value,
                    oracle_criterion(&g, &assign, 2, &BTreeSet::new())
                );
            }
        }
    }
}
