//! Discrimination auditing: risk differences, the certify algorithm over
//! Q = Par(E)\{C}, the exhaustive every-block-set oracle, and the relaxed
//! Chebyshev-based criterion.
//!
//! Two probability sources are supported and labeled on every report:
//! empirical ([`certify`], raw dataset count ratios — what a regulator sees)
//! and model ([`certify_model`] / [`certify_all_blocksets`], exact Bayesian-
//! network inference — what the theory is stated over). The per-set
//! equivalence (auditing Q alone decides the every-block-set verdict) holds
//! exactly in the model setting.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::bayes::BayesNet;
use crate::data::{write_text, Assignment, ContingencyTable, Dataset};
use crate::error::{Error, Result};
use crate::exec;
use crate::graph::Dag;

/// Audit parameters: the legal threshold τ on |ΔP|, the optional relaxation
/// level α, and the minimum per-(c, q) cell count for a subpopulation to be
/// evaluated rather than skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub tau: f64,
    pub alpha: Option<f64>,
    pub min_support: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig { tau: 0.05, alpha: None, min_support: 1 }
    }
}

impl AuditConfig {
    pub fn new(tau: f64) -> Result<Self> {
        AuditConfig { tau, ..Default::default() }.validated()
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = Some(alpha);
        self.validated()
    }

    pub fn with_min_support(mut self, min_support: u64) -> Result<Self> {
        self.min_support = min_support;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !self.tau.is_finite() || self.tau <= 0.0 || self.tau > 1.0 {
            return Err(Error::Config(format!("tau must be in (0, 1], got {}", self.tau)));
        }
        if let Some(a) = self.alpha {
            if !a.is_finite() || a <= 0.0 || a >= 1.0 {
                return Err(Error::Config(format!("alpha must be in (0, 1), got {a}")));
            }
        }
        if self.min_support == 0 {
            return Err(Error::Config("min_support must be at least 1".into()));
        }
        Ok(self)
    }
}

/// Which probability source produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditMode {
    /// Raw dataset count ratios.
    Empirical,
    /// Exact Bayesian-network inference.
    Model,
}

impl AuditMode {
    fn label(self) -> &'static str {
        match self {
            AuditMode::Empirical => "empirical",
            AuditMode::Model => "model",
        }
    }
}

/// One evaluated subpopulation q of Q: its risk difference, its share of the
/// evaluated population, and the raw counts behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SubpopulationFinding {
    pub q: Assignment,
    pub delta_p: f64,
    /// Pr(q), renormalized over the evaluated subpopulations.
    pub weight: f64,
    pub support: ContingencyTable,
    pub violating: bool,
}

/// The relaxed α-criterion numbers: weighted moments of ΔP over Q and the
/// Chebyshev lower bound on Pr(|ΔP| < τ).
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedReport {
    pub mean: f64,
    pub variance: f64,
    pub bound: f64,
    pub alpha: f64,
    pub claimed: bool,
}

/// Outcome of one certify run.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    /// Q = Par(E)\{C}, in graph declaration order.
    pub q_set: Vec<String>,
    pub tau: f64,
    pub mode: AuditMode,
    pub certified: bool,
    /// Evaluated subpopulations in canonical order.
    pub findings: Vec<SubpopulationFinding>,
    /// Observed subpopulations skipped for lacking per-group support.
    pub skipped: u64,
    pub relaxed: Option<RelaxedReport>,
}

impl AuditReport {
    /// Deterministic JSON rendering (sorted keys, shortest-round-trip
    /// floats). `relaxed` is `null` unless an α was configured.
    pub fn to_json(&self) -> String {
        let findings: Vec<serde_json::Value> = self
            .findings
            .iter()
            .map(|f| {
                serde_json::json!({
                    "q": f.q,
                    "delta_p": f.delta_p,
                    "n": {
                        "cn_ep": f.support.n_cn_ep,
                        "cn_en": f.support.n_cn_en,
                        "cp_ep": f.support.n_cp_ep,
                        "cp_en": f.support.n_cp_en,
                    },
                    "violating": f.violating,
                })
            })
            .collect();
        let relaxed = match &self.relaxed {
            Some(r) => serde_json::json!({
                "mean": r.mean,
                "variance": r.variance,
                "bound": r.bound,
                "alpha": r.alpha,
                "claimed": r.claimed,
            }),
            None => serde_json::Value::Null,
        };
        let v = serde_json::json!({
            "q_set": self.q_set,
            "tau": self.tau,
            "mode": self.mode.label(),
            "certified": self.certified,
            "findings": findings,
            "relaxed": relaxed,
            "skipped": self.skipped,
        });
        serde_json::to_string_pretty(&v).expect("report serialization is infallible")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json())
    }

    /// The violating subpopulations, in finding order.
    pub fn violations(&self) -> impl Iterator<Item = &SubpopulationFinding> {
        self.findings.iter().filter(|f| f.violating)
    }
}

/// ΔP within one subpopulation: the c⁺ positive rate minus the c⁻ positive
/// rate, from exact count ratios. Errors when either group cell is empty,
/// naming the empty cell.
pub fn risk_difference(dataset: &Dataset, conditioning: &Assignment) -> Result<f64> {
    let t = dataset.contingency(conditioning)?;
    delta_p_of(&t)
}

/// ΔP as one correctly rounded division of exact integer cross-products,
/// (k⁺n⁻ − k⁻n⁺) / (n⁺n⁻), rather than a difference of two divisions.
/// The single rounding keeps boundary cases honest: a subpopulation whose
/// exact risk difference is 1/20 compares equal against a τ of 0.05
/// instead of falling one ulp short.
fn delta_p_of(t: &ContingencyTable) -> Result<f64> {
    if t.n_cp() == 0 {
        return Err(Error::UndefinedProbability(format!(
            "risk difference undefined: no c+ rows in subpopulation {}",
            t.conditioning
        )));
    }
    if t.n_cn() == 0 {
        return Err(Error::UndefinedProbability(format!(
            "risk difference undefined: no c- rows in subpopulation {}",
            t.conditioning
        )));
    }
    let num = t.n_cp_ep as i128 * t.n_cn() as i128 - t.n_cn_ep as i128 * t.n_cp() as i128;
    let den = t.n_cp() as i128 * t.n_cn() as i128;
    Ok(num as f64 / den as f64)
}

/// Q = Par(E) \ {C} in graph declaration order, plus whether the audited
/// arc C -> E is present.
pub fn q_set(graph: &Dag, protected: &str, decision: &str) -> Result<(Vec<String>, bool)> {
    let parents = graph.parents(decision)?;
    graph.node_index(protected)?;
    let arc_present = parents.iter().any(|p| p == protected);
    Ok((parents.into_iter().filter(|p| p != protected).collect(), arc_present))
}

/// Certify non-discrimination on raw data counts: evaluate |ΔP|_q for every
/// observed subpopulation q of Q = Par(E)\{C} with adequate per-group
/// support; certified iff every evaluated |ΔP|_q| < τ.
///
/// Subpopulations observed in the data but failing `min_support` in either
/// group cell are skipped and counted; value assignments never observed at
/// all are not subpopulations of this dataset and appear nowhere.
pub fn certify(dataset: &Dataset, graph: &Dag, config: &AuditConfig) -> Result<AuditReport> {
    let config = config.validated()?;
    let schema = dataset.schema();
    let roles = schema.roles()?;
    for a in schema.attributes() {
        if !graph.has_node(&a.name) {
            return Err(Error::UnknownNode(a.name.clone()));
        }
    }
    let (q_names, _arc) = q_set(graph, &roles.protected, &roles.decision)?;
    for q in &q_names {
        schema.attr_index(q)?; // every Q member must carry data
    }
    let tables = grouped_tables_parallel(dataset, &q_names)?;
    let (ci, cneg, _) = schema.protected_coords()?;
    let (ei, epos, _) = schema.decision_coords()?;
    let _ = (ci, cneg, ei, epos); // coords validated; counting used them
    assemble_report(q_names, tables, AuditMode::Empirical, &config)
}

/// The audit counting core: per-subpopulation 2x2 tables, sharded across
/// row chunks and merged. Deterministic regardless of execution mode.
fn grouped_tables_parallel(
    dataset: &Dataset,
    attrs: &[String],
) -> Result<Vec<(Assignment, ContingencyTable)>> {
    let schema = dataset.schema();
    let (ci, cneg, _) = schema.protected_coords()?;
    let (ei, epos, _) = schema.decision_coords()?;
    let roles = schema.roles()?;
    let mut idxs = Vec::with_capacity(attrs.len());
    for a in attrs {
        if *a == roles.protected || *a == roles.decision {
            return Err(Error::Schema(format!(
                "grouping attribute `{a}` must not be the protected or decision attribute"
            )));
        }
        idxs.push(schema.attr_index(a)?);
    }
    idxs.sort_unstable();

    const TALLY_CHUNK: usize = 16 * 1024;
    let rows = dataset.rows();
    let partials: Vec<HashMap<Vec<u16>, [u64; 4]>> =
        exec::maybe_par_chunk_map(rows.len(), TALLY_CHUNK, |_, range| {
            let mut groups: HashMap<Vec<u16>, [u64; 4]> = HashMap::new();
            for i in range {
                let row = &rows[i];
                let key: Vec<u16> = idxs.iter().map(|&ai| row[ai]).collect();
                let slot = match (row[ci] == cneg, row[ei] == epos) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                };
                groups.entry(key).or_default()[slot] += dataset.weight(i);
            }
            vec![groups]
        });
    let mut groups: HashMap<Vec<u16>, [u64; 4]> = HashMap::new();
    for partial in partials {
        for (key, cells) in partial {
            let acc = groups.entry(key).or_default();
            for (a, c) in acc.iter_mut().zip(cells) {
                *a += c;
            }
        }
    }

    let mut keys: Vec<Vec<u16>> = groups.keys().cloned().collect();
    keys.sort_unstable();
    let out = keys
        .into_iter()
        .map(|key| {
            let cells = groups[&key];
            let mut q = Assignment::new();
            for (&ai, &v) in idxs.iter().zip(&key) {
                q.set(&schema.attributes()[ai].name, dataset.label(ai, v));
            }
            (
                q.clone(),
                ContingencyTable {
                    conditioning: q,
                    n_cn_ep: cells[0],
                    n_cn_en: cells[1],
                    n_cp_ep: cells[2],
                    n_cp_en: cells[3],
                },
            )
        })
        .collect();
    Ok(out)
}

fn assemble_report(
    q_names: Vec<String>,
    tables: Vec<(Assignment, ContingencyTable)>,
    mode: AuditMode,
    config: &AuditConfig,
) -> Result<AuditReport> {
    let mut skipped = 0u64;
    let mut evaluated: Vec<(Assignment, ContingencyTable, f64)> = Vec::new();
    for (q, t) in tables {
        if t.n_cn() < config.min_support || t.n_cp() < config.min_support {
            skipped += 1;
            continue;
        }
        let dp = delta_p_of(&t)?; // support >= 1 per group, so always defined
        evaluated.push((q, t, dp));
    }
    let total: u64 = evaluated.iter().map(|(_, t, _)| t.n()).sum();
    let findings: Vec<SubpopulationFinding> = evaluated
        .into_iter()
        .map(|(q, t, dp)| SubpopulationFinding {
            violating: dp.abs() >= config.tau,
            weight: if total == 0 { 0.0 } else { t.n() as f64 / total as f64 },
            q,
            delta_p: dp,
            support: t,
        })
        .collect();
    let certified = findings.iter().all(|f| !f.violating);
    let relaxed = match config.alpha {
        Some(alpha) if !findings.is_empty() => {
            let (mean, variance) = weighted_moments(&findings)?;
            let bound = chebyshev_bound(mean, variance, config.tau);
            Some(RelaxedReport { mean, variance, bound, alpha, claimed: bound >= alpha })
        }
        _ => None,
    };
    Ok(AuditReport {
        q_set: q_names,
        tau: config.tau,
        mode,
        certified,
        findings,
        skipped,
        relaxed,
    })
}

/// Certify against exact model probabilities: ΔP|_q = Pr(e⁺|c⁺,q) −
/// Pr(e⁺|c⁻,q) under the network's joint, for every q with positive mass in
/// both groups. Counts in the findings are scaled expected counts and exist
/// only for reporting symmetry; weights are exact Pr(q).
pub fn certify_model(bn: &BayesNet, config: &AuditConfig) -> Result<AuditReport> {
    let config = config.validated()?;
    let schema = bn.schema();
    let roles = schema.roles()?.clone();
    let (q_names, _arc) = q_set(bn.graph(), &roles.protected, &roles.decision)?;
    let joint = bn.joint()?;
    let cells = enumerate_assignments(schema, &q_names)?;
    let per_cell: Vec<Result<(Assignment, f64, f64, f64)>> =
        exec::maybe_par_map(&cells, |q| {
            let c_neg = Assignment::new().bind(&roles.protected, &roles.protected_label);
            let c_pos = Assignment::new().bind(&roles.protected, other_label(schema, &roles)?);
            let e_pos = Assignment::new().bind(&roles.decision, &roles.positive_label);
            let p_q = joint.prob(q)?;
            let p_cn = joint.prob(&q.merged(&c_neg).expect("q excludes c"))?;
            let p_cp = joint.prob(&q.merged(&c_pos).expect("q excludes c"))?;
            if p_cn <= 0.0 || p_cp <= 0.0 {
                return Ok((q.clone(), f64::NAN, p_q, f64::NAN));
            }
            let rate = |given: &Assignment| joint.query(&e_pos, given);
            let dp = rate(&q.merged(&c_pos).expect("q excludes c"))?
                - rate(&q.merged(&c_neg).expect("q excludes c"))?;
            Ok((q.clone(), dp, p_q, p_cn.min(p_cp)))
        });
    let mut skipped = 0u64;
    let mut rows: Vec<(Assignment, f64, f64)> = Vec::new();
    for r in per_cell {
        let (q, dp, p_q, _min_mass) = r?;
        if dp.is_nan() {
            skipped += 1;
            continue;
        }
        rows.push((q, dp, p_q));
    }
    let total_mass: f64 = rows.iter().map(|(_, _, w)| w).sum();
    // Scale to pseudo-counts so the findings carry a support table; the
    // weight field is the exact renormalized probability.
    const SCALE: f64 = 1e9;
    let findings: Vec<SubpopulationFinding> = rows
        .into_iter()
        .map(|(q, dp, p_q)| SubpopulationFinding {
            violating: dp.abs() >= config.tau,
            weight: if total_mass == 0.0 { 0.0 } else { p_q / total_mass },
            support: ContingencyTable {
                conditioning: q.clone(),
                n_cn_ep: 0,
                n_cn_en: 0,
                n_cp_ep: 0,
                n_cp_en: (p_q * SCALE) as u64,
            },
            q,
            delta_p: dp,
        })
        .collect();
    let certified = findings.iter().all(|f| !f.violating);
    let relaxed = match config.alpha {
        Some(alpha) if !findings.is_empty() => {
            let (mean, variance) = weighted_moments(&findings)?;
            let bound = chebyshev_bound(mean, variance, config.tau);
            Some(RelaxedReport { mean, variance, bound, alpha, claimed: bound >= alpha })
        }
        _ => None,
    };
    Ok(AuditReport {
        q_set: q_names,
        tau: config.tau,
        mode: AuditMode::Model,
        certified,
        findings,
        skipped,
        relaxed,
    })
}

fn other_label<'a>(
    schema: &'a crate::data::Schema,
    roles: &crate::data::Roles,
) -> Result<&'a str> {
    let attr = schema.attribute(&roles.protected)?;
    attr.domain
        .iter()
        .find(|l| **l != roles.protected_label)
        .map(|s| s.as_str())
        .ok_or_else(|| Error::Schema("protected attribute has a single category".into()))
}

/// All value assignments of `attrs` (canonical order: mixed-radix over the
/// attributes sorted by schema position, first attribute most significant).
fn enumerate_assignments(
    schema: &crate::data::Schema,
    attrs: &[String],
) -> Result<Vec<Assignment>> {
    let mut idxs: Vec<usize> = attrs.iter().map(|a| schema.attr_index(a)).collect::<Result<_>>()?;
    idxs.sort_unstable();
    let cards: Vec<usize> = idxs.iter().map(|&i| schema.attributes()[i].domain.len()).collect();
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut cell in 0..total {
        let mut vals = vec![0usize; cards.len()];
        for i in (0..cards.len()).rev() {
            vals[i] = cell % cards[i];
            cell /= cards[i];
        }
        let mut a = Assignment::new();
        for (&ai, &v) in idxs.iter().zip(&vals) {
            let attr = &schema.attributes()[ai];
            a.set(&attr.name, &attr.domain[v]);
        }
        out.push(a);
    }
    Ok(out)
}

/// One (block set, subpopulation) evaluation from the exhaustive oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct BlocksetFinding {
    pub members: BTreeSet<String>,
    pub b: Assignment,
    pub delta_p: f64,
    /// Exact Pr(b) under the model.
    pub weight: f64,
    pub violating: bool,
}

/// Verdict of the every-block-set audit (Theorem-level oracle).
#[derive(Debug, Clone, PartialEq)]
pub struct BlocksetReport {
    pub entries: Vec<BlocksetFinding>,
    pub n_block_sets: usize,
    pub certified: bool,
    /// (B, b) pairs skipped because one group carries no mass.
    pub skipped: u64,
}

/// The brute-force non-discrimination audit: enumerate every block set B
/// for (C, E), every subpopulation b with Pr(b) > 0, and evaluate ΔP|_b by
/// exact inference. Deliberately exponential; gated by `max_nodes`.
pub fn certify_all_blocksets(
    bn: &BayesNet,
    config: &AuditConfig,
    max_nodes: usize,
) -> Result<BlocksetReport> {
    let config = config.validated()?;
    let schema = bn.schema();
    let roles = schema.roles()?.clone();
    let block_sets = bn.graph().enumerate_block_sets(&roles.protected, &roles.decision, max_nodes)?;
    let joint = bn.joint()?;
    let c_neg = Assignment::new().bind(&roles.protected, &roles.protected_label);
    let c_pos = Assignment::new().bind(&roles.protected, other_label(schema, &roles)?);
    let e_pos = Assignment::new().bind(&roles.decision, &roles.positive_label);
    let mut entries = Vec::new();
    let mut skipped = 0u64;
    for bs in &block_sets {
        let members: Vec<String> = bs.members.iter().cloned().collect();
        for b in enumerate_assignments(schema, &members)? {
            let p_b = joint.prob(&b)?;
            if p_b <= 0.0 {
                continue;
            }
            let p_cn = joint.prob(&b.merged(&c_neg).expect("b excludes c"))?;
            let p_cp = joint.prob(&b.merged(&c_pos).expect("b excludes c"))?;
            if p_cn <= 0.0 || p_cp <= 0.0 {
                skipped += 1;
                continue;
            }
            let dp = joint.query(&e_pos, &b.merged(&c_pos).expect("b excludes c"))?
                - joint.query(&e_pos, &b.merged(&c_neg).expect("b excludes c"))?;
            entries.push(BlocksetFinding {
                members: bs.members.clone(),
                b,
                delta_p: dp,
                weight: p_b,
                violating: dp.abs() >= config.tau,
            });
        }
    }
    let certified = entries.iter().all(|e| !e.violating);
    Ok(BlocksetReport { entries, n_block_sets: block_sets.len(), certified, skipped })
}

/// Weighted mean and variance of ΔP over findings, using each finding's
/// (already renormalized) weight.
pub fn weighted_moments(findings: &[SubpopulationFinding]) -> Result<(f64, f64)> {
    if findings.is_empty() {
        return Err(Error::Config("weighted moments need at least one finding".into()));
    }
    let wsum: f64 = findings.iter().map(|f| f.weight).sum();
    if (wsum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("finding weights sum to {wsum}, expected 1")));
    }
    let mean: f64 = findings.iter().map(|f| f.weight * f.delta_p).sum();
    let variance: f64 = findings
        .iter()
        .map(|f| f.weight * (f.delta_p - mean) * (f.delta_p - mean))
        .sum();
    Ok((mean, variance))
}

/// Chebyshev lower bound on Pr(|ΔP| < τ): max(0, 1 − (σ² + μ²)/τ²).
pub fn chebyshev_bound(mean: f64, variance: f64, tau: f64) -> f64 {
    assert!(tau > 0.0, "tau must be positive");
    (1.0 - (variance + mean * mean) / (tau * tau)).max(0.0)
}

/// Outcome of the relaxed criterion: the Chebyshev bound either clears α
/// (non-discrimination claimed) or the test is inconclusive — it is a
/// sufficient condition, never proof of discrimination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaVerdict {
    Claimed,
    Inconclusive,
}

/// Apply the relaxed α-criterion to a report (using its stored relaxed
/// numbers, or computing them from the findings).
pub fn alpha_certify(report: &AuditReport, config: &AuditConfig) -> Result<AlphaVerdict> {
    let alpha = config
        .alpha
        .ok_or_else(|| Error::Config("alpha_certify requires config.alpha".into()))?;
    let bound = match &report.relaxed {
        Some(r) => r.bound,
        None => {
            let (mean, variance) = weighted_moments(&report.findings)?;
            chebyshev_bound(mean, variance, report.tau)
        }
    };
    Ok(if bound >= alpha { AlphaVerdict::Claimed } else { AlphaVerdict::Inconclusive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn cfg(tau: f64) -> AuditConfig {
        AuditConfig::new(tau).unwrap()
    }

    #[test]
    fn fair_cohort_certifies_with_exact_zeros() {
        let d = synth::admissions_fair();
        let g = synth::admissions_graph();
        let report = certify(&d, &g, &cfg(0.05)).unwrap();
        assert!(report.certified);
        assert_eq!(report.q_set, vec!["major", "test_score"]);
        assert_eq!(report.findings.len(), 4);
        assert_eq!(report.skipped, 0);
        for f in &report.findings {
            assert_eq!(f.delta_p, 0.0, "q = {}", f.q);
        }
    }

    #[test]
    fn biased_cohort_fails_with_published_gaps() {
        let d = synth::admissions_biased();
        let g = synth::admissions_graph();
        let report = certify(&d, &g, &cfg(0.05)).unwrap();
        assert!(!report.certified);
        let gaps: Vec<f64> = report.findings.iter().map(|f| f.delta_p).collect();
        // Canonical order: (CS,L), (CS,H), (EE,L), (EE,H).
        let expect = [0.06, -0.10, 0.05, -0.10];
        for (g, e) in gaps.iter().zip(expect) {
            assert!((g - e).abs() < 1e-12, "got {g}, expected {e}");
        }
        assert!(report.findings.iter().all(|f| f.violating));
    }

    #[test]
    fn risk_difference_signs_and_errors() {
        let d = synth::admissions_biased();
        let csl = Assignment::new().bind("major", "CS").bind("test_score", "L");
        let dp = risk_difference(&d, &csl).unwrap();
        assert!((dp - 0.06).abs() < 1e-12);
        // Swap the protected label: every ΔP negates.
        let mut swapped_schema = d.schema().clone();
        let mut roles = swapped_schema.roles().unwrap().clone();
        roles.protected_label = "male".into();
        swapped_schema = crate::data::Schema::with_roles(
            swapped_schema.attributes().to_vec(),
            roles,
        )
        .unwrap();
        let d2 = Dataset::new(swapped_schema, d.rows().to_vec()).unwrap();
        let dp2 = risk_difference(&d2, &csl).unwrap();
        assert!((dp + dp2).abs() < 1e-15);
    }

    #[test]
    fn min_support_skips_thin_cells() {
        let d = synth::admissions_biased();
        let g = synth::admissions_graph();
        let config = cfg(0.05).with_min_support(150).unwrap();
        let report = certify(&d, &g, &config).unwrap();
        // (CS,H) and (EE,H) have only 100 male rows; (CS,L) with 150 stays.
        assert_eq!(report.skipped, 2);
        assert_eq!(report.findings.len(), 2);
        let w: f64 = report.findings.iter().map(|f| f.weight).sum();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tau_boundary_is_a_violation() {
        let d = synth::admissions_biased();
        let g = synth::admissions_graph();
        let report = certify(&d, &g, &cfg(0.05)).unwrap();
        // (EE,L) sits exactly at |ΔP| = 0.05 = τ.
        let eel = report
            .findings
            .iter()
            .find(|f| f.q.get("major") == Some("EE") && f.q.get("test_score") == Some("L"))
            .unwrap();
        assert!(eel.violating);
        // ... and certification is monotone in tau.
        assert!(!certify(&d, &g, &cfg(0.0500000001)).unwrap().certified);
        assert!(certify(&d, &g, &cfg(0.2)).unwrap().certified);
    }

    #[test]
    fn relaxed_numbers_match_hand_weighted_sums() {
        let d = synth::admissions_biased();
        let g = synth::admissions_graph();
        let config = cfg(0.05).with_alpha(0.3).unwrap();
        let report = certify(&d, &g, &config).unwrap();
        let r = report.relaxed.as_ref().unwrap();
        let mean = (600.0 * 0.06 - 400.0 * 0.10 + 800.0 * 0.05 - 400.0 * 0.10) / 2200.0;
        assert!((r.mean - mean).abs() < 1e-12, "mean {} vs {mean}", r.mean);
        assert!(r.variance > 0.0);
        assert_eq!(r.bound, chebyshev_bound(r.mean, r.variance, 0.05));
        assert_eq!(r.claimed, r.bound >= 0.3);
        assert_eq!(
            alpha_certify(&report, &config).unwrap(),
            if r.claimed { AlphaVerdict::Claimed } else { AlphaVerdict::Inconclusive }
        );
    }

    #[test]
    fn chebyshev_bound_reference_values() {
        assert!((chebyshev_bound(0.004, 0.129 * 0.129, 0.15) - 0.2597).abs() < 0.0005);
        assert!((chebyshev_bound(0.222, 0.125 * 0.125, 0.30) - 0.2788).abs() < 0.001);
        assert_eq!(chebyshev_bound(0.0, 0.0, 0.05), 1.0);
        assert_eq!(chebyshev_bound(0.5, 0.5, 0.05), 0.0); // clamped
    }

    #[test]
    fn moments_reject_unnormalized_weights() {
        let d = synth::admissions_biased();
        let g = synth::admissions_graph();
        let report = certify(&d, &g, &cfg(0.05)).unwrap();
        let mut findings = report.findings.clone();
        assert!(weighted_moments(&findings).is_ok());
        findings[0].weight += 0.5;
        assert!(weighted_moments(&findings).is_err());
        assert!(weighted_moments(&[]).is_err());
    }

    #[test]
    fn model_and_blockset_audits_agree_on_the_examples() {
        let g = synth::admissions_graph();
        for (data, expect_certified) in
            [(synth::admissions_fair(), true), (synth::admissions_biased(), false)]
        {
            let bn = crate::bayes::fit_cpts(&data, &g).unwrap();
            let model = certify_model(&bn, &cfg(0.05)).unwrap();
            let oracle = certify_all_blocksets(&bn, &cfg(0.05), 15).unwrap();
            assert_eq!(model.certified, expect_certified);
            assert_eq!(oracle.certified, expect_certified);
            assert_eq!(oracle.n_block_sets, 2);
        }
        // On the biased fit, {major} alone stays clean in the oracle list.
        let bn = crate::bayes::fit_cpts(&synth::admissions_biased(), &g).unwrap();
        let oracle = certify_all_blocksets(&bn, &cfg(0.05), 15).unwrap();
        let major_only: Vec<&BlocksetFinding> = oracle
            .entries
            .iter()
            .filter(|e| e.members.len() == 1)
            .collect();
        assert_eq!(major_only.len(), 2);
        assert!(major_only.iter().all(|e| !e.violating));
    }

    #[test]
    fn report_json_shape_is_stable() {
        let d = synth::admissions_biased();
        let g = synth::admissions_graph();
        let config = cfg(0.05).with_alpha(0.3).unwrap();
        let report = certify(&d, &g, &config).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["tau"], 0.05);
        assert_eq!(v["certified"], false);
        assert_eq!(v["mode"], "empirical");
        assert_eq!(v["findings"].as_array().unwrap().len(), 4);
        assert_eq!(v["findings"][0]["n"]["cn_ep"], 135);
        assert!(v["relaxed"]["claimed"].is_boolean());
        assert_eq!(v["skipped"], 0);
    }

    #[test]
    fn empty_q_audits_the_whole_population() {
        // Graph where E has only C as parent: Q is empty, one global ΔP.
        let schema = synth::admissions_schema();
        let g = Dag::new(
            vec!["gender".into(), "major".into(), "test_score".into(), "admission".into()],
            &[("gender", "admission")],
        )
        .unwrap();
        let d = Dataset::new(schema, synth::admissions_fair().rows().to_vec()).unwrap();
        let report = certify(&d, &g, &cfg(0.05)).unwrap();
        assert!(report.q_set.is_empty());
        assert_eq!(report.findings.len(), 1);
        // Overall rates: 37% vs 47%.
        assert!((report.findings[0].delta_p - 0.10).abs() < 1e-12);
        assert!(!report.certified);
    }
}
