//! Brute-force oracles shared by the integration tests. Each one computes
//! its answer from first principles (matrices, exhaustive enumeration)
//! without calling the code under test.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;

use affilkg_core::{
    normalize_label, persons_match, entities_match, AffiliationGraph, EdgeTuple, NormalizationConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random bipartite graph with `1..=max_nodes` nodes in total, at least one
/// per partition, isolated nodes allowed. Edge probability is itself random
/// so both sparse and dense graphs turn up.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> AffiliationGraph {
    let total = rng.gen_range(2..=max_nodes);
    let ni = rng.gen_range(1..total);
    let nc = total - ni;
    let p: f64 = rng.gen_range(0.05..0.7);
    let mut edges = Vec::new();
    for i in 0..ni {
        for j in 0..nc {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    AffiliationGraph::from_parts(
        (0..ni).map(|i| format!("i{i:02}")).collect(),
        (0..nc).map(|j| format!("c{j:02}")).collect(),
        edges,
    )
    .unwrap()
}

/// Dense adjacency matrix over the unified index space (individuals first).
pub fn matrix(g: &AffiliationGraph) -> Vec<Vec<bool>> {
    let ni = g.num_indiv();
    let n = g.num_nodes();
    let mut m = vec![vec![false; n]; n];
    for &(i, j) in g.edges() {
        m[i][ni + j] = true;
        m[ni + j][i] = true;
    }
    m
}

/// Components via repeated union of edge endpoints; each component is a
/// sorted member list, largest first, ties to the smallest member.
pub fn components(m: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = m.len();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for u in 0..n {
            for v in 0..n {
                if m[u][v] && label[v] < label[u] {
                    label[u] = label[v];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (u, &l) in label.iter().enumerate() {
        groups.entry(l).or_default().push(u);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    out
}

/// All-pairs hop distances by Floyd-Warshall.
pub fn floyd(m: &[Vec<bool>]) -> Vec<Vec<u64>> {
    let n = m.len();
    let inf = u64::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for u in 0..n {
        d[u][u] = 0;
        for v in 0..n {
            if m[u][v] {
                d[u][v] = 1;
            }
        }
    }
    for k in 0..n {
        for u in 0..n {
            for v in 0..n {
                if d[u][k] + d[k][v] < d[u][v] {
                    d[u][v] = d[u][k] + d[k][v];
                }
            }
        }
    }
    d
}

/// Projection adjacency onto individuals (`indiv = true`) or clubs.
pub fn projection_matrix(g: &AffiliationGraph, indiv: bool) -> Vec<Vec<bool>> {
    let (n, other) = if indiv {
        (g.num_indiv(), g.num_club())
    } else {
        (g.num_club(), g.num_indiv())
    };
    let linked = |a: usize, w: usize| {
        if indiv {
            g.contains_edge(a, w)
        } else {
            g.contains_edge(w, a)
        }
    };
    let mut m = vec![vec![false; n]; n];
    for a in 0..n {
        for b in 0..n {
            m[a][b] = a != b && (0..other).any(|w| linked(a, w) && linked(b, w));
        }
    }
    m
}

/// `(density, average clustering)` of a one-mode graph by enumerating pairs
/// and triples.
pub fn projection_stats(m: &[Vec<bool>]) -> (Option<f64>, Option<f64>) {
    let n = m.len();
    if n == 0 {
        return (None, None);
    }
    let mut edges = 0u64;
    for a in 0..n {
        for b in a + 1..n {
            edges += m[a][b] as u64;
        }
    }
    let density = (n >= 2).then(|| 2.0 * edges as f64 / (n as f64 * (n as f64 - 1.0)));
    let mut total = 0.0;
    for v in 0..n {
        let ns: Vec<usize> = (0..n).filter(|&u| m[v][u]).collect();
        let k = ns.len();
        if k < 2 {
            continue;
        }
        let mut closed = 0u64;
        for x in 0..k {
            for y in x + 1..k {
                closed += m[ns[x]][ns[y]] as u64;
            }
        }
        total += closed as f64 / (k * (k - 1) / 2) as f64;
    }
    (density, Some(total / n as f64))
}

/// Modularity numerator `sum_c (2m * L_c - D_c^2)` where `L_c` counts
/// ordered internal adjacent pairs; `Q` is this over `(2m)^2`.
pub fn modularity_numerator(m: &[Vec<bool>], community: &[usize]) -> i128 {
    let n = m.len();
    let two_m: i128 = m.iter().flatten().filter(|&&x| x).count() as i128;
    let k = community.iter().max().map_or(0, |&c| c + 1);
    let mut internal = vec![0i128; k];
    let mut degree = vec![0i128; k];
    for u in 0..n {
        for v in 0..n {
            if m[u][v] {
                degree[community[u]] += 1;
                if community[u] == community[v] {
                    internal[community[u]] += 1;
                }
            }
        }
    }
    internal.iter().zip(&degree).map(|(&l, &d)| two_m * l - d * d).sum()
}

pub fn modularity_value(m: &[Vec<bool>], community: &[usize]) -> f64 {
    let two_m = m.iter().flatten().filter(|&&x| x).count() as f64;
    modularity_numerator(m, community) as f64 / (two_m * two_m)
}

/// Agglomerative greedy modularity, recomputing the full modularity
/// numerator for every candidate merge of two communities joined by an edge.
/// Communities are named by their smallest member; ties go to the
/// lexicographically smallest pair of names. Returns the community count.
pub fn naive_cnm(m: &[Vec<bool>]) -> usize {
    let n = m.len();
    let mut community: Vec<usize> = (0..n).collect();
    loop {
        let current = modularity_numerator(m, &community);
        let mut best: Option<(i128, usize, usize)> = None;
        let names: Vec<usize> = {
            let mut v = community.clone();
            v.sort_unstable();
            v.dedup();
            v
        };
        for (x, &c) in names.iter().enumerate() {
            for &d in &names[x + 1..] {
                let adjacent = (0..n).any(|u| community[u] == c && (0..n).any(|v| community[v] == d && m[u][v]));
                if !adjacent {
                    continue;
                }
                let merged: Vec<usize> = community.iter().map(|&k| if k == d { c } else { k }).collect();
                let gain = modularity_numerator(m, &merged) - current;
                if best.is_none_or(|(b, _, _)| gain > b) {
                    best = Some((gain, c, d));
                }
            }
        }
        match best {
            Some((gain, c, d)) if gain > 0 => {
                for k in community.iter_mut() {
                    if *k == d {
                        *k = c;
                    }
                }
            }
            _ => break,
        }
    }
    let mut names = community;
    names.sort_unstable();
    names.dedup();
    names.len()
}

/// Best modularity over every partition of the nodes (restricted growth
/// strings), so only for small graphs.
pub fn optimal_modularity(m: &[Vec<bool>]) -> f64 {
    let n = m.len();
    let mut best = i128::MIN;
    let mut rgs = vec![0usize; n];
    fn rec(pos: usize, max: usize, rgs: &mut Vec<usize>, m: &[Vec<bool>], best: &mut i128) {
        if pos == rgs.len() {
            *best = (*best).max(modularity_numerator(m, rgs));
            return;
        }
        for c in 0..=max + 1 {
            rgs[pos] = c;
            rec(pos + 1, max.max(c), rgs, m, best);
        }
    }
    if n == 0 {
        return 0.0;
    }
    rec(1, 0, &mut rgs, m, &mut best);
    let two_m = m.iter().flatten().filter(|&&x| x).count() as f64;
    best as f64 / (two_m * two_m)
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

fn rmae(truth: &AffiliationGraph, g: &AffiliationGraph, top: Option<usize>) -> Option<f64> {
    let tm = matrix(truth);
    let gm = matrix(g);
    let degree_of = |m: &[Vec<bool>], ni: usize, label: &str, labels: &[String]| -> usize {
        labels
            .iter()
            .position(|l| l == label)
            .map_or(0, |j| m[ni + j].iter().filter(|&&x| x).count())
    };
    let clubs = truth.labels(affilkg_core::Partition::Club);
    let mut rows: Vec<(String, usize)> = clubs
        .iter()
        .map(|l| (l.clone(), degree_of(&tm, truth.num_indiv(), l, clubs)))
        .filter(|(_, d)| *d > 0)
        .collect();
    if rows.is_empty() {
        return None;
    }
    if let Some(k) = top {
        rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        rows.truncate(k);
    }
    let extracted = g.labels(affilkg_core::Partition::Club);
    let sum: f64 = rows
        .iter()
        .map(|(l, d)| {
            let e = degree_of(&gm, g.num_indiv(), l, extracted);
            (e as f64 - *d as f64).abs() / *d as f64
        })
        .sum();
    Some(sum / rows.len() as f64)
}

/// Every suite metric computed independently. Keys are metric names.
pub fn oracle_suite(g: &AffiliationGraph, truth: Option<&AffiliationGraph>) -> BTreeMap<&'static str, Option<f64>> {
    let m = matrix(g);
    let n = m.len();
    let ni = g.num_indiv();
    let deg = |u: usize| m[u].iter().filter(|&&x| x).count() as f64;
    let indiv_deg: Vec<f64> = (0..ni).map(deg).collect();
    let club_deg: Vec<f64> = (ni..n).map(deg).collect();
    let comps = components(&m);
    let largest = &comps[0];
    let d = floyd(&m);
    let (diameter, aspl) = if largest.len() < 2 {
        (None, None)
    } else {
        let mut mx = 0;
        let mut sum = 0u64;
        let mut pairs = 0u64;
        for (x, &u) in largest.iter().enumerate() {
            for &v in &largest[x + 1..] {
                mx = mx.max(d[u][v]);
                sum += d[u][v];
                pairs += 1;
            }
        }
        (Some(mx as f64), Some(sum as f64 / pairs as f64))
    };
    let rest = &comps[1..];
    let avg_rest = if rest.is_empty() {
        0.0
    } else {
        rest.iter().map(Vec::len).sum::<usize>() as f64 / rest.len() as f64
    };
    let edges = g.num_edges();
    let (co_d, co_c) = projection_stats(&projection_matrix(g, true));
    let (cl_d, cl_c) = projection_stats(&projection_matrix(g, false));
    let (dmi, dsi) = mean_std(&indiv_deg).unzip();
    let (dmc, dsc) = mean_std(&club_deg).unzip();
    let mut out = BTreeMap::new();
    out.insert("degree_mean_indiv", dmi);
    out.insert("degree_std_indiv", dsi);
    out.insert("degree_mean_club", dmc);
    out.insert("degree_std_club", dsc);
    out.insert("num_connected_components", Some(comps.len() as f64));
    out.insert("num_communities", (edges > 0).then(|| naive_cnm(&m) as f64));
    out.insert(
        "bipartite_density",
        (ni > 0 && n > ni).then(|| edges as f64 / (ni as f64 * (n - ni) as f64)),
    );
    out.insert("prop_largest_cc", Some(largest.len() as f64 / n as f64));
    out.insert("avg_shortest_path_largest_cc", aspl);
    out.insert("diameter_largest_cc", diameter);
    out.insert("avg_size_rest_components", Some(avg_rest));
    out.insert("rmae_all_clubs", truth.and_then(|t| rmae(t, g, None)));
    out.insert("rmae_top10_clubs", truth.and_then(|t| rmae(t, g, Some(10))));
    out.insert("comembership_density", co_d);
    out.insert("comembership_avg_clustering", co_c);
    out.insert("club_projection_density", cl_d);
    out.insert("club_projection_avg_clustering", cl_c);
    out.insert("num_nodes", Some(n as f64));
    out
}

/// Equal as integers when both are integral, else within 1e-12 relative.
pub fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => x == y || (x - y).abs() <= 1e-12 * x.abs().max(y.abs()),
        _ => false,
    }
}

/// Largest one-to-one matching between predicted and truth tuples under the
/// flexible match predicate, by exhaustive search over which truth tuples
/// are used. Duplicates (same normalized person and club) are dropped first,
/// as the evaluator does. Returns `(tp, |pred|, |truth|)` after dedup.
pub fn optimal_matching(pred: &[EdgeTuple], truth: &[EdgeTuple], cfg: &NormalizationConfig) -> (usize, usize, usize) {
    let norm = |ts: &[EdgeTuple]| {
        let mut seen = std::collections::BTreeSet::new();
        ts.iter()
            .map(|t| (normalize_label(&t.person, cfg).unwrap(), normalize_label(&t.club, cfg).unwrap()))
            .filter(|k| seen.insert(k.clone()))
            .collect::<Vec<_>>()
    };
    let p = norm(pred);
    let t = norm(truth);
    assert!(t.len() <= 20, "exhaustive matching is exponential in truth size");
    let ok: Vec<Vec<bool>> = p
        .iter()
        .map(|(pp, pc)| {
            t.iter()
                .map(|(tp, tc)| (pp == tp && pc == tc) || (persons_match(pp, tp, cfg) && entities_match(pc, tc, cfg)))
                .collect()
        })
        .collect();
    let mut memo = std::collections::HashMap::new();
    fn best(k: usize, used: u32, ok: &[Vec<bool>], memo: &mut std::collections::HashMap<(usize, u32), usize>) -> usize {
        if k == ok.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(k, used)) {
            return v;
        }
        let mut v = best(k + 1, used, ok, memo);
        for (j, &hit) in ok[k].iter().enumerate() {
            if hit && used & (1 << j) == 0 {
                v = v.max(1 + best(k + 1, used | (1 << j), ok, memo));
            }
        }
        memo.insert((k, used), v);
        v
    }
    (best(0, 0, &ok, &mut memo), p.len(), t.len())
}

/// Exact-label agreement by set intersection.
pub fn exact_overlap(pred: &[EdgeTuple], truth: &[EdgeTuple]) -> (usize, usize, usize) {
    use std::collections::BTreeSet;
    let key = |t: &EdgeTuple| (t.person.clone(), t.club.clone());
    let p: BTreeSet<_> = pred.iter().map(key).collect();
    let t: BTreeSet<_> = truth.iter().map(key).collect();
    (p.intersection(&t).count(), p.len(), t.len())
}
