//! Reference examples and seeded synthetic generators.
//!
//! The `admissions_*` family is a small, fully worked university-admissions
//! example (gender, major, test score, admission) used throughout the docs
//! and tests: one variant whose admission rates depend only on major and
//! test score, and one whose per-(major, score) rates differ by gender.
//!
//! The `random_*` family produces seeded random DAGs, Bayesian networks, and
//! datasets for property tests and benchmarks. Everything here is
//! deterministic given the caller's RNG or seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::bayes::{BayesNet, Cpt};
use crate::data::{Attribute, Dataset, Roles, Schema};
use crate::graph::Dag;

fn attrs(spec: &[(&str, &[&str])]) -> Vec<Attribute> {
    spec.iter()
        .map(|(name, domain)| Attribute {
            name: name.to_string(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
        })
        .collect()
}

/// Schema of the admissions example: gender (protected, `female` is the
/// protected group), major, test_score, admission (decision, `yes`
/// positive).
pub fn admissions_schema() -> Schema {
    Schema::with_roles(
        attrs(&[
            ("gender", &["female", "male"]),
            ("major", &["CS", "EE"]),
            ("test_score", &["L", "H"]),
            ("admission", &["no", "yes"]),
        ]),
        Roles {
            protected: "gender".into(),
            decision: "admission".into(),
            positive_label: "yes".into(),
            protected_label: "female".into(),
        },
    )
    .expect("admissions schema is valid")
}

/// Causal graph of the admissions example: gender influences choice of
/// major; admission is decided from gender, major, and test score; test
/// score is independent of gender.
pub fn admissions_graph() -> Dag {
    Dag::new(
        vec!["gender".into(), "major".into(), "test_score".into(), "admission".into()],
        &[
            ("gender", "major"),
            ("gender", "admission"),
            ("major", "admission"),
            ("test_score", "admission"),
        ],
    )
    .expect("admissions graph is a DAG")
}

/// Cell counts: (gender, major, score, n_applicants, n_admitted).
type AdmissionCell = (u16, u16, u16, u64, u64);

fn admissions_dataset(cells: &[AdmissionCell]) -> Dataset {
    let schema = admissions_schema();
    let mut rows = Vec::new();
    for &(g, m, s, n, k) in cells {
        for i in 0..n {
            let adm = if i < k { 1 } else { 0 }; // admitted rows first
            rows.push(vec![g, m, s, adm]);
        }
    }
    Dataset::new(schema, rows).expect("admissions rows are in-domain")
}

/// The fair admissions cohort (2000 applicants): admission rates depend
/// only on (major, test score) — CS 20%/50% and EE 40%/70% for L/H scores —
/// so every per-(major, score) gender gap is exactly zero even though the
/// overall female rate (37%) trails the male rate (47%).
pub fn admissions_fair() -> Dataset {
    // (gender, major, score, applicants, admitted), grouped by score then
    // gender then major; f=0, m=1; CS=0, EE=1; L=0, H=1.
    admissions_dataset(&[
        (0, 0, 0, 450, 90),  // L female CS: 20%
        (0, 1, 0, 150, 60),  // L female EE: 40%
        (1, 0, 0, 150, 30),  // L male   CS: 20%
        (1, 1, 0, 450, 180), // L male   EE: 40%
        (0, 0, 1, 300, 150), // H female CS: 50%
        (0, 1, 1, 100, 70),  // H female EE: 70%
        (1, 0, 1, 100, 50),  // H male   CS: 50%
        (1, 1, 1, 300, 210), // H male   EE: 70%
    ])
}

/// The biased admissions cohort (2200 applicants): per-major rates look
/// nearly equal across genders (38% vs 37.6% in CS, 46.7% both in EE), but
/// the per-(major, score) gaps are +0.06/−0.10 in CS and +0.05/−0.10 in EE.
pub fn admissions_biased() -> Dataset {
    // Grouped by major then gender then score.
    admissions_dataset(&[
        (0, 0, 0, 450, 135), // CS female L: 30%
        (0, 0, 1, 300, 150), // CS female H: 50%
        (1, 0, 0, 150, 54),  // CS male   L: 36%
        (1, 0, 1, 100, 40),  // CS male   H: 40%
        (0, 1, 0, 600, 240), // EE female L: 40%
        (0, 1, 1, 300, 180), // EE female H: 60%
        (1, 1, 0, 200, 90),  // EE male   L: 45%
        (1, 1, 1, 100, 50),  // EE male   H: 50%
    ])
}

/// Uniformly random DAG: nodes `v0..v{n}`, a uniformly random topological
/// permutation, and each forward pair kept with probability `edge_prob`.
pub fn random_dag(n_nodes: usize, edge_prob: f64, rng: &mut ChaCha12Rng) -> Dag {
    let nodes: Vec<String> = (0..n_nodes).map(|i| format!("v{i}")).collect();
    let order = random_permutation(n_nodes, rng);
    let mut arcs = Vec::new();
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            if rng.random::<f64>() < edge_prob {
                arcs.push((nodes[order[i]].clone(), nodes[order[j]].clone()));
            }
        }
    }
    Dag::new(nodes, &arcs).expect("forward arcs cannot form a cycle")
}

fn random_permutation(n: usize, rng: &mut ChaCha12Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    // Fisher-Yates.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    order
}

/// Binary schema for audit-oriented nets: protected `c` (protected label
/// `c0`), decision `e` (positive `e1`), fillers `w0..`.
pub fn binary_audit_schema(n_nodes: usize) -> Schema {
    assert!(n_nodes >= 2, "need at least c and e");
    let mut a = vec![
        Attribute { name: "c".into(), domain: vec!["c0".into(), "c1".into()] },
        Attribute { name: "e".into(), domain: vec!["e0".into(), "e1".into()] },
    ];
    for i in 0..n_nodes - 2 {
        a.push(Attribute { name: format!("w{i}"), domain: vec!["0".into(), "1".into()] });
    }
    Schema::with_roles(
        a,
        Roles {
            protected: "c".into(),
            decision: "e".into(),
            positive_label: "e1".into(),
            protected_label: "c0".into(),
        },
    )
    .expect("audit schema is valid")
}

/// Random binary Bayesian network guaranteed to contain the arc `c -> e`,
/// with CPT probabilities bounded away from 0 and 1 (every event has
/// positive probability). Structure: uniformly random topological order with
/// `c` placed before `e`, each forward pair kept with probability
/// `edge_prob`, plus the mandatory `c -> e`.
pub fn random_ce_bn(n_nodes: usize, edge_prob: f64, rng: &mut ChaCha12Rng) -> BayesNet {
    let schema = binary_audit_schema(n_nodes);
    let names: Vec<String> = schema.names().map(|s| s.to_string()).collect();
    let mut order = random_permutation(n_nodes, rng);
    let pos_c = order.iter().position(|&i| i == 0).unwrap();
    let pos_e = order.iter().position(|&i| i == 1).unwrap();
    if pos_c > pos_e {
        order.swap(pos_c, pos_e);
    }
    let mut arcs = vec![("c".to_string(), "e".to_string())];
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            let (from, to) = (order[i], order[j]);
            if (from, to) != (0, 1) && rng.random::<f64>() < edge_prob {
                arcs.push((names[from].clone(), names[to].clone()));
            }
        }
    }
    let graph = Dag::new(names, &arcs).expect("forward arcs cannot form a cycle");
    let cpts = random_cpts(&schema, &graph, rng, |rng| 0.05 + 0.9 * rng.random::<f64>());
    BayesNet::new(schema, graph, cpts).expect("generated cpts are valid")
}

/// Random CPTs for every node of `graph`; `cell` draws the e1-style first
/// free parameter for binary rows. Non-binary domains get a normalized
/// positive random vector.
fn random_cpts(
    schema: &Schema,
    graph: &Dag,
    rng: &mut ChaCha12Rng,
    mut cell: impl FnMut(&mut ChaCha12Rng) -> f64,
) -> Vec<Cpt> {
    let mut cpts = Vec::new();
    for a in schema.attributes() {
        let parents = graph.parents(&a.name).expect("node exists");
        let rows: usize = parents
            .iter()
            .map(|p| schema.attribute(p).expect("parent exists").domain.len())
            .product();
        let card = a.domain.len();
        let table: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                if card == 2 {
                    let p = cell(rng);
                    vec![1.0 - p, p]
                } else {
                    let raw: Vec<f64> = (0..card).map(|_| 0.05 + rng.random::<f64>()).collect();
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(|x| x / s).collect()
                }
            })
            .collect();
        cpts.push(Cpt::new(a.name.clone(), parents, table));
    }
    cpts
}

/// Shape of a deliberately discriminatory network: how many parents `e` has
/// besides `c`, how many upstream filler nodes exist, and how far apart the
/// per-group positive rates are pushed.
#[derive(Debug, Clone, Copy)]
pub struct BiasShape {
    /// Number of `q` parents of `e` besides `c` (1 or 2 keeps subpopulation
    /// counts large enough for sampling-based checks).
    pub n_q: usize,
    /// Extra nodes that are not parents of `e`.
    pub n_extra: usize,
    /// Minimum |Pr(e1|c1,q) − Pr(e1|c0,q)| forced on at least one q cell.
    pub min_gap: f64,
}

impl Default for BiasShape {
    fn default() -> Self {
        BiasShape { n_q: 1, n_extra: 1, min_gap: 0.25 }
    }
}

/// Random network with a guaranteed discriminatory decision CPT: at least
/// one q cell's positive-rate gap is at least `shape.min_gap` (and every
/// cell keeps probabilities in [0.05, 0.95]). Non-decision CPTs stay close
/// to uniform so that every subpopulation keeps substantial mass — the
/// sampling-based checks rely on that.
pub fn random_discriminatory_bn(shape: BiasShape, rng: &mut ChaCha12Rng) -> BayesNet {
    let n_nodes = 2 + shape.n_q + shape.n_extra;
    let schema = binary_audit_schema(n_nodes);
    let names: Vec<String> = schema.names().map(|s| s.to_string()).collect();
    // Order: extras and q fillers first (so they may feed c), then c, e.
    let mut arcs = vec![("c".to_string(), "e".to_string())];
    let q_names: Vec<String> = (0..shape.n_q).map(|i| format!("w{i}")).collect();
    for q in &q_names {
        arcs.push((q.clone(), "e".to_string()));
    }
    for i in 0..shape.n_extra {
        let extra = format!("w{}", shape.n_q + i);
        // Extras influence c (and sometimes a q node), never e directly.
        if rng.random::<f64>() < 0.7 {
            arcs.push((extra.clone(), "c".to_string()));
        }
        if !q_names.is_empty() && rng.random::<f64>() < 0.4 {
            arcs.push((extra.clone(), q_names[0].clone()));
        }
    }
    let graph = Dag::new(names, &arcs).expect("construction is acyclic");
    let mut cpts = random_cpts(&schema, &graph, rng, |rng| 0.35 + 0.3 * rng.random::<f64>());
    // Rebuild e's CPT with controlled gaps. Parent order is graph.parents:
    // alphabetical here is (c, w...) — c first by declaration order.
    let e_parents = graph.parents("e").expect("e exists");
    debug_assert_eq!(e_parents[0], "c");
    let n_q_cells = 1usize << (e_parents.len() - 1);
    let mut table = vec![Vec::new(); 2 * n_q_cells];
    for q in 0..n_q_cells {
        let force = q == 0; // cell 0 always gets a full-size gap
        let gap_here = if force || rng.random::<f64>() < 0.7 {
            shape.min_gap + (0.9 - shape.min_gap - 0.1) * rng.random::<f64>()
        } else {
            0.02 * rng.random::<f64>() // essentially fair cell
        };
        let lo = 0.05 + (0.9 - gap_here) * rng.random::<f64>();
        let hi = lo + gap_here;
        let (p_c0, p_c1) = if rng.random::<f64>() < 0.5 { (lo, hi) } else { (hi, lo) };
        // Row index: c is the most significant parent bit.
        table[q] = vec![1.0 - p_c0, p_c0];
        table[n_q_cells + q] = vec![1.0 - p_c1, p_c1];
    }
    let e_cpt = Cpt::new("e", e_parents, table);
    let i = cpts.iter().position(|c| c.node == "e").expect("e cpt present");
    cpts[i] = e_cpt;
    BayesNet::new(schema, graph, cpts).expect("generated cpts are valid")
}

/// Random binary network with strong, easily detectable effects. Each CPT
/// is monotone logistic in its parents with per-parent logit weights of
/// magnitude ≥ 0.9, so every arc shifts the child's rate in the same
/// direction in every stratum — no near-cancelling parameterizations that
/// would hide a true edge from conditional-independence tests. Used for
/// structure-recovery tests.
pub fn random_strong_bn(n_nodes: usize, edge_prob: f64, rng: &mut ChaCha12Rng) -> BayesNet {
    let schema = binary_audit_schema(n_nodes);
    let names: Vec<String> = schema.names().map(|s| s.to_string()).collect();
    let order = random_permutation(n_nodes, rng);
    let mut arcs = Vec::new();
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            if rng.random::<f64>() < edge_prob {
                arcs.push((names[order[i]].clone(), names[order[j]].clone()));
            }
        }
    }
    let graph = Dag::new(names, &arcs).expect("forward arcs cannot form a cycle");
    let sigmoid = |z: f64| 1.0 / (1.0 + (-z).exp());
    let mut cpts = Vec::new();
    for a in schema.attributes() {
        let parents = graph.parents(&a.name).expect("node exists");
        let bias = 0.6 * rng.random::<f64>() - 0.3;
        let weights: Vec<f64> = parents
            .iter()
            .map(|_| {
                let magnitude = 0.9 + 0.4 * rng.random::<f64>();
                if rng.random::<f64>() < 0.5 { magnitude } else { -magnitude }
            })
            .collect();
        let rows = 1usize << parents.len();
        let table: Vec<Vec<f64>> = (0..rows)
            .map(|row| {
                let mut z = bias;
                for (bit, w) in weights.iter().enumerate() {
                    // Parent bit order matches the CPT row convention:
                    // first parent is the most significant bit.
                    let value = (row >> (parents.len() - 1 - bit)) & 1;
                    z += w * if value == 1 { 1.0 } else { -1.0 };
                }
                let p = sigmoid(z);
                vec![1.0 - p, p]
            })
            .collect();
        cpts.push(Cpt::new(a.name.clone(), parents, table));
    }
    BayesNet::new(schema, graph, cpts).expect("generated cpts are valid")
}

/// Census-scale synthetic cohort: `n_attrs` binary attributes (including
/// the protected/decision pair) over a layered random graph, sampled to
/// `n_rows`. Exists so throughput tests and benches have something with
/// realistic bulk.
pub fn census_scale_dataset(n_rows: usize, n_attrs: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let bn = random_discriminatory_bn(
        BiasShape { n_q: 2, n_extra: n_attrs.saturating_sub(4), min_gap: 0.3 },
        &mut rng,
    );
    bn.sample(n_rows, seed ^ 0x5eed).expect("n_rows >= 1")
}
