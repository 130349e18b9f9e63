//! Shared helpers for the integration suite, most importantly an independent
//! path-enumeration d-separation oracle: it enumerates every simple
//! undirected path and applies the blocking rules literally (chain/fork
//! middle node conditioned, or collider with itself and all descendants
//! unconditioned), with no shared code or ideas from the library's
//! reachability implementation.
#![allow(dead_code)]

use std::collections::BTreeSet;

use fairlens::bayes::{BayesNet, Cpt};
use fairlens::data::{Attribute, Dataset, Roles, Schema};
use fairlens::graph::Dag;

/// Every subset of `items`, smallest first, deterministic order.
pub fn subsets(items: &[String]) -> Vec<BTreeSet<String>> {
    let mut out = Vec::with_capacity(1 << items.len());
    for mask in 0u32..(1 << items.len()) {
        let mut s = BTreeSet::new();
        for (i, item) in items.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.insert(item.clone());
            }
        }
        out.push(s);
    }
    out
}

/// A fixed biased cohort for the utility comparisons: three background
/// attributes depend strongly on the protected one (so destroying the
/// protected column is expensive), while every decision gap is a uniform,
/// moderate 0.18 (so the targeted repairs stay cheap). This mirrors the
/// situation in real census-style data, where many attributes correlate
/// with the protected attribute but the decision gap itself is moderate.
pub fn utility_cohort(n_rows: usize, seed: u64) -> (Dataset, Dag) {
    let attrs = ["c", "q1", "q2", "x1", "x2", "x3", "e"];
    let schema = Schema::with_roles(
        attrs
            .iter()
            .map(|name| Attribute {
                name: name.to_string(),
                domain: vec![format!("{name}0"), format!("{name}1")],
            })
            .collect(),
        Roles {
            protected: "c".into(),
            decision: "e".into(),
            positive_label: "e1".into(),
            protected_label: "c0".into(),
        },
    )
    .expect("cohort schema is valid");
    let graph = Dag::new(
        attrs.iter().map(|s| s.to_string()).collect(),
        &[
            ("c", "x1"),
            ("c", "x2"),
            ("c", "x3"),
            ("c", "e"),
            ("q1", "e"),
            ("q2", "e"),
        ],
    )
    .expect("cohort graph is acyclic");
    let skewed = vec![vec![0.85, 0.15], vec![0.15, 0.85]];
    let mut cpts = vec![
        Cpt::new("c", vec![], vec![vec![0.5, 0.5]]),
        Cpt::new("q1", vec![], vec![vec![0.5, 0.5]]),
        Cpt::new("q2", vec![], vec![vec![0.5, 0.5]]),
        Cpt::new("x1", vec!["c".into()], skewed.clone()),
        Cpt::new("x2", vec!["c".into()], skewed.clone()),
        Cpt::new("x3", vec!["c".into()], skewed),
    ];
    // Parent order (c, q1, q2), c most significant; every (q1, q2) cell
    // favors the non-protected group by exactly 0.18.
    let base = [0.35, 0.40, 0.45, 0.50];
    let mut table = Vec::with_capacity(8);
    for p in base {
        table.push(vec![1.0 - p, p]);
    }
    for p in base {
        table.push(vec![1.0 - (p + 0.18), p + 0.18]);
    }
    cpts.push(Cpt::new("e", vec!["c".into(), "q1".into(), "q2".into()], table));
    let bn = BayesNet::new(schema, graph, cpts).expect("cohort network is valid");
    let data = bn.sample(n_rows, seed).expect("sampling succeeds");
    (data, bn.graph().clone())
}

/// d-separation by brute force over all simple paths (Definition 2.1 read
/// literally). A step records the node stepped onto and whether the arc was
/// traversed parent→child (`true`) or against it.
pub fn d_separated_by_paths(g: &Dag, x: &str, y: &str, z: &BTreeSet<String>) -> bool {
    let n = g.len();
    let idx = |name: &str| g.node_index(name).expect("node exists");
    let (xi, yi) = (idx(x), idx(y));
    let z_idx: BTreeSet<usize> = z.iter().map(|s| idx(s)).collect();

    // Undirected adjacency with per-step direction flags.
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for (from, to) in g.arcs() {
        let (f, t) = (idx(&from), idx(&to));
        adj[f].push((t, true));
        adj[t].push((f, false));
    }

    // Descendant bitsets for the collider rule.
    let mut desc: Vec<BTreeSet<usize>> = Vec::with_capacity(n);
    for node in g.nodes() {
        desc.push(g.descendants(node).expect("node exists").iter().map(|d| idx(d)).collect());
    }

    // DFS over simple paths; a path is a list of (node, entered-forward),
    // carried together with its visited set.
    type PathState = (Vec<(usize, bool)>, Vec<bool>);
    let mut stack: Vec<PathState> = vec![(vec![(xi, true)], {
        let mut v = vec![false; n];
        v[xi] = true;
        v
    })];
    while let Some((path, visited)) = stack.pop() {
        let (last, _) = *path.last().expect("path nonempty");
        if last == yi {
            if !path_blocked(&path, &z_idx, &desc) {
                return false; // an active path exists
            }
            continue;
        }
        for &(next, forward) in &adj[last] {
            if !visited[next] {
                let mut p = path.clone();
                p.push((next, forward));
                let mut v = visited.clone();
                v[next] = true;
                stack.push((p, v));
            }
        }
    }
    true
}

/// Blocking per Definition 2.1: some middle node is either a non-collider
/// in Z, or a collider none of whose closure {itself + descendants} meets Z.
fn path_blocked(
    path: &[(usize, bool)],
    z: &BTreeSet<usize>,
    desc: &[BTreeSet<usize>],
) -> bool {
    for w in 1..path.len().saturating_sub(1) {
        let (m, entered_forward) = path[w];
        let (_, left_forward) = path[w + 1];
        let collider = entered_forward && !left_forward; // → m ←
        if collider {
            let opens = z.contains(&m) || desc[m].iter().any(|d| z.contains(d));
            if !opens {
                return true;
            }
        } else if z.contains(&m) {
            return true;
        }
    }
    false
}

/// F1 of a learned skeleton against the true one, on unordered node pairs.
pub fn skeleton_f1(truth: &Dag, learned: &Dag) -> f64 {
    let undirected = |g: &Dag| -> BTreeSet<(String, String)> {
        g.arcs()
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect()
    };
    let t = undirected(truth);
    let l = undirected(learned);
    let tp = t.intersection(&l).count() as f64;
    let fp = (l.len() as f64) - tp;
    let fn_ = (t.len() as f64) - tp;
    if tp == 0.0 && fp == 0.0 && fn_ == 0.0 {
        return 1.0;
    }
    2.0 * tp / (2.0 * tp + fp + fn_)
}

#[cfg(test)]
mod oracle_sanity {
    use super::*;

    #[test]
    fn oracle_handles_the_textbook_cases() {
        let chain = Dag::new(
            vec!["a".into(), "b".into(), "c".into()],
            &[("a", "b"), ("b", "c")],
        )
        .unwrap();
        let empty = BTreeSet::new();
        let just_b: BTreeSet<String> = ["b".to_string()].into();
        assert!(!d_separated_by_paths(&chain, "a", "c", &empty));
        assert!(d_separated_by_paths(&chain, "a", "c", &just_b));

        let collider = Dag::new(
            vec!["a".into(), "m".into(), "b".into(), "d".into()],
            &[("a", "m"), ("b", "m"), ("m", "d")],
        )
        .unwrap();
        assert!(d_separated_by_paths(&collider, "a", "b", &empty));
        let just_m: BTreeSet<String> = ["m".to_string()].into();
        assert!(!d_separated_by_paths(&collider, "a", "b", &just_m));
        // Conditioning on a collider's descendant also opens the path.
        let just_d: BTreeSet<String> = ["d".to_string()].into();
        assert!(!d_separated_by_paths(&collider, "a", "b", &just_d));
    }
}
