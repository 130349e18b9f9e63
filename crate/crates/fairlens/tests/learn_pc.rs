//! Structure learning end to end: CI tests on data with known
//! (in)dependencies, skeleton recovery from strongly-parameterized networks,
//! tier enforcement, the learning log, and the Q-set reader.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use fairlens::bayes::{BayesNet, Cpt};
use fairlens::data::{Attribute, Schema};
use fairlens::graph::Dag;
use fairlens::learn::{
    find_q, g2_test, pc_learn, pc_learn_with, pearson_chi2_test, PcConfig, TierSpec,
};
use fairlens::synth;

fn attr(name: &str, domain: [&str; 2]) -> Attribute {
    Attribute { name: name.into(), domain: domain.iter().map(|s| s.to_string()).collect() }
}

/// x → y → z chain with strong links, so x ⫫ z | y but x ⊥̸ z marginally.
fn chain_sample(n: usize, seed: u64) -> fairlens::data::Dataset {
    let schema = Schema::new(vec![
        attr("x", ["x0", "x1"]),
        attr("y", ["y0", "y1"]),
        attr("z", ["z0", "z1"]),
    ])
    .unwrap();
    let graph = Dag::new(
        vec!["x".into(), "y".into(), "z".into()],
        &[("x", "y"), ("y", "z")],
    )
    .unwrap();
    let cpts = vec![
        Cpt::new("x", vec![], vec![vec![0.5, 0.5]]),
        Cpt::new("y", vec!["x".into()], vec![vec![0.85, 0.15], vec![0.15, 0.85]]),
        Cpt::new("z", vec!["y".into()], vec![vec![0.85, 0.15], vec![0.15, 0.85]]),
    ];
    BayesNet::new(schema, graph, cpts).unwrap().sample(n, seed).unwrap()
}

#[test]
fn ci_tests_detect_the_chain_structure() {
    let data = chain_sample(20_000, 9);
    let none: [String; 0] = [];
    let on_y = ["y".to_string()];

    let marginal = g2_test(&data, "x", "z", &none, 0.01).unwrap();
    assert!(!marginal.independent, "x and z are linked through y");
    assert!(marginal.p_value < 1e-6);

    let screened = g2_test(&data, "x", "z", &on_y, 0.01).unwrap();
    assert!(screened.independent, "conditioning on y must screen x off z");
    assert!(screened.p_value > 0.01);

    // Pearson agrees with G² on both calls.
    assert!(!pearson_chi2_test(&data, "x", "z", &none, 0.01).unwrap().independent);
    assert!(pearson_chi2_test(&data, "x", "z", &on_y, 0.01).unwrap().independent);

    // Binary-by-binary table in one stratum has a single degree of freedom.
    assert_eq!(marginal.degrees_of_freedom, 1);
    assert_eq!(screened.degrees_of_freedom, 2);

    let bad = g2_test(&data, "x", "z", &none, 0.0);
    assert!(bad.is_err(), "alpha = 0 must be rejected");
}

#[test]
fn pc_recovers_strong_random_skeletons() {
    let mut rng = ChaCha12Rng::seed_from_u64(1106);
    let mut f1_sum = 0.0;
    let trials = 6;
    for i in 0..trials {
        let bn = synth::random_strong_bn(5, 0.5, &mut rng);
        let data = bn.sample(50_000, 4242 + i).unwrap();
        let learned = pc_learn(&data, &TierSpec::unconstrained(), 0.01).unwrap();
        f1_sum += common::skeleton_f1(bn.graph(), &learned);
    }
    let mean = f1_sum / trials as f64;
    assert!(mean >= 0.90, "mean skeleton F1 {mean} below 0.90");
}

#[test]
fn tiers_round_trip_and_forbid_backward_arcs() {
    let spec = TierSpec::new([vec!["c"], vec!["w0", "w1"], vec!["e"]]).unwrap();
    assert_eq!(spec.tiers().len(), 3);
    assert_eq!(spec.tier_of("w1"), 1);
    // Unlisted names land in the implicit final tier.
    assert_eq!(spec.tier_of("unknown"), spec.tiers().len());

    let back = TierSpec::from_json(&spec.to_json()).unwrap();
    assert_eq!(back, spec);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiers.json");
    spec.save(&path).unwrap();
    assert_eq!(TierSpec::load(&path).unwrap(), spec);

    // A name appearing in two tiers is rejected outright.
    assert!(TierSpec::new([vec!["c", "e"], vec!["e"]]).is_err());

    // Learned graphs respect the ordering: no arc may point into an
    // earlier tier.
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let bn = synth::random_discriminatory_bn(
        synth::BiasShape { n_q: 2, n_extra: 0, min_gap: 0.3 },
        &mut rng,
    );
    let data = bn.sample(40_000, 99).unwrap();
    let tiers = TierSpec::new([vec!["c"], vec!["w0", "w1"], vec!["e"]]).unwrap();
    tiers.validate_against(data.schema()).unwrap();
    let learned = pc_learn(&data, &tiers, 0.01).unwrap();
    for (from, to) in learned.arcs() {
        assert!(
            tiers.tier_of(&from) <= tiers.tier_of(&to),
            "arc {from} -> {to} points into an earlier tier"
        );
    }

    // Tier names that the schema lacks are an error.
    let stray = TierSpec::new([vec!["c"], vec!["ghost"]]).unwrap();
    assert!(stray.validate_against(data.schema()).is_err());
}

#[test]
fn learn_log_bookkeeping_is_internally_consistent() {
    let data = chain_sample(20_000, 5);
    let (graph, log) =
        pc_learn_with(&data, &TierSpec::unconstrained(), &PcConfig::default()).unwrap();

    // The chain skeleton is x—y—z; no x—z edge survives.
    assert!(graph.has_arc("x", "y") || graph.has_arc("y", "x"));
    assert!(graph.has_arc("y", "z") || graph.has_arc("z", "y"));
    assert!(!graph.has_arc("x", "z") && !graph.has_arc("z", "x"));

    let level_total: u64 = log.levels.iter().map(|l| l.tests).sum();
    assert_eq!(log.n_ci_tests, level_total);
    let removal_total: u64 = log.levels.iter().map(|l| l.removals).sum();
    assert_eq!(log.removed.len() as u64, removal_total);

    // Every removal names an edge absent from the final skeleton.
    for edge in &log.removed {
        assert!(!graph.has_arc(&edge.x, &edge.y) && !graph.has_arc(&edge.y, &edge.x));
    }
    // The x—z edge fell to the separating set {y}.
    let xz = log
        .removed
        .iter()
        .find(|e| (e.x == "x" && e.y == "z") || (e.x == "z" && e.y == "x"))
        .expect("x—z must be removed");
    assert_eq!(xz.sepset, vec!["y".to_string()]);

    // The log serializes to parseable JSON with the headline fields.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("learn_log.json");
    log.save(&path).unwrap();
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(value["alpha"].as_f64().unwrap(), log.alpha);
    assert_eq!(value["n_ci_tests"].as_u64().unwrap(), log.n_ci_tests);
    assert!(value["levels"].is_array());
    assert!(value["removed"].is_array());
}

#[test]
fn depth_cap_limits_conditioning_sets() {
    let data = chain_sample(20_000, 5);
    let shallow = PcConfig { max_depth: Some(0), ..PcConfig::default() };
    let (_, log) = pc_learn_with(&data, &TierSpec::unconstrained(), &shallow).unwrap();
    assert!(log.levels.iter().all(|l| l.depth == 0));
    assert!(log.removed.iter().all(|e| e.sepset.is_empty()));
}

#[test]
fn find_q_reads_the_decision_parents() {
    let toy = synth::admissions_graph();
    let schema = synth::admissions_schema();
    let q = find_q(&toy, &schema).unwrap();
    assert_eq!(q.members, vec!["major".to_string(), "test_score".to_string()]);
    assert!(q.arc_present, "gender → admission is in the toy graph");

    // Without the protected→decision arc the flag flips but Q is unchanged.
    let cut = toy.delete_arc("gender", "admission").unwrap();
    let q_cut = find_q(&cut, &schema).unwrap();
    assert_eq!(q_cut.members, q.members);
    assert!(!q_cut.arc_present);
}
