//! Discrimination removal: MGraph (quadratic-program repair of the decision
//! CPT followed by regeneration), MData (targeted seeded label flips), the
//! Naive reshuffle baseline, and the utility metrics d(P′, P), n_T, and χ².
//!
//! All three repairs are gated on a certify pass: an already-certified
//! dataset is returned untouched, so repair is the identity exactly when
//! there is nothing to repair. Randomness flows from the explicit seed
//! through per-subpopulation derived sub-seeds, so identical inputs and
//! seed give identical output bytes regardless of thread count.

use std::collections::HashMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::audit::{certify, certify_model, AuditConfig, AuditReport};
use crate::bayes::{self, fit_cpts, BayesNet, Cpt, JointDistribution, DEFAULT_JOINT_CAP};
use crate::data::{Assignment, Dataset};
use crate::error::{Error, Result};
use crate::exec;
use crate::graph::Dag;

/// Closure margin for the strict band |Pr′(e⁺|c⁺,q) − Pr′(e⁺|c⁻,q)| < τ:
/// the solver targets |x − y| ≤ τ − EPS_SLACK.
pub const EPS_SLACK: f64 = 1e-9;
/// Closure margin for the open box 0 < Pr′ < 1.
pub const EPS_INTERIOR: f64 = 1e-9;
/// Extra headroom under the band the solver aims for, so that floating-
/// point roundoff in the projection can never push a solved pair past
/// τ − EPS_SLACK. Twelve orders above one ulp, six below EPS_SLACK.
const BAND_GUARD: f64 = 1e-12;

/// Which repair strategy produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairMethod {
    MGraph,
    MData,
    Naive,
}

impl RepairMethod {
    pub fn label(self) -> &'static str {
        match self {
            RepairMethod::MGraph => "mgraph",
            RepairMethod::MData => "mdata",
            RepairMethod::Naive => "naive",
        }
    }
}

impl FromStr for RepairMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mgraph" => Ok(RepairMethod::MGraph),
            "mdata" => Ok(RepairMethod::MData),
            "naive" => Ok(RepairMethod::Naive),
            other => Err(Error::Config(format!(
                "unknown repair method `{other}` (expected mgraph, mdata, or naive)"
            ))),
        }
    }
}

/// Cost of a repair in distribution space and row space.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityReport {
    /// Euclidean distance between the exact joints of the fitted original
    /// and repaired networks.
    pub euclidean_d: f64,
    /// Rows whose values changed (MData/Naive), or the expected number of
    /// decision flips implied by the CPT change (MGraph).
    pub n_modified: u64,
    /// Pearson χ² between repaired and original joint contingency cells,
    /// over cells the original dataset actually populates.
    pub chi_squared: f64,
}

impl UtilityReport {
    pub fn zero() -> Self {
        UtilityReport { euclidean_d: 0.0, n_modified: 0, chi_squared: 0.0 }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "euclidean_d": self.euclidean_d,
            "n_modified": self.n_modified,
            "chi_squared": self.chi_squared,
        })
    }
}

/// Flips applied within one violating subpopulation by MData.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipRecord {
    pub q: Assignment,
    /// ⌈n_q^{c⁻}·(|ΔP|_q| − τ)⌉ from the audit table.
    pub requested: u64,
    /// Actually flipped, including the boundary rule's extra row.
    pub flipped: u64,
    /// Flips that could not be applied for lack of candidate rows
    /// (a safety net; zero on counts derived from the audit table).
    pub residual: u64,
}

/// Outcome of one repair run: the repaired dataset, what changed, what it
/// cost, and the recertification verdict (model-level for MGraph,
/// empirical for MData and Naive).
#[derive(Debug, Clone, PartialEq)]
pub struct RepairResult {
    pub method: RepairMethod,
    pub dataset: Dataset,
    /// The decision node's CPT after the QP (MGraph only).
    pub modified_cpt: Option<Cpt>,
    /// The fitted decision CPT the QP started from (MGraph only).
    pub original_cpt: Option<Cpt>,
    pub seed: u64,
    pub utility: UtilityReport,
    pub recertified: AuditReport,
    /// Per-subpopulation flip bookkeeping (MData only).
    pub flips: Vec<FlipRecord>,
}

// ---------------------------------------------------------------------------
// β weights
// ---------------------------------------------------------------------------

/// The quadratic objective's coefficients: for every subpopulation q and
/// group c, β_q^{c,e} = Σ over full assignments v consistent with (c, q, e)
/// of the squared product of every CPT factor except the decision node's.
/// That product equals Pr(c)·Pr(x|c)·Pr(y|c,x,e) by the chain rule, so the
/// Euclidean distance between the original joint and any joint that differs
/// only in the decision CPT is exactly Σ β_q^{c,e}·(Pr′ − Pr)².
#[derive(Debug, Clone, PartialEq)]
pub struct RepairWeights {
    /// Q attribute names in schema order.
    q_names: Vec<String>,
    q_cards: Vec<usize>,
    /// One entry per mixed-radix q configuration (first name most
    /// significant): [c⁻|c⁺][e⁻|e⁺].
    beta: Vec<[[f64; 2]; 2]>,
}

impl RepairWeights {
    pub fn q_names(&self) -> &[String] {
        &self.q_names
    }

    pub fn n_configs(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self, q_config: usize, c_pos: bool, e_pos: bool) -> f64 {
        self.beta[q_config][usize::from(c_pos)][usize::from(e_pos)]
    }

    /// w_q^c = β_q^{c,e⁺} + β_q^{c,e⁻}; zero exactly when Pr(c, q) = 0.
    pub fn weight(&self, q_config: usize, c_pos: bool) -> f64 {
        let b = &self.beta[q_config][usize::from(c_pos)];
        b[0] + b[1]
    }

    /// The q assignment a configuration index denotes.
    pub fn q_assignment(&self, q_config: usize, schema: &crate::data::Schema) -> Assignment {
        let mut rem = q_config;
        let mut vals = vec![0usize; self.q_cards.len()];
        for i in (0..self.q_cards.len()).rev() {
            vals[i] = rem % self.q_cards[i];
            rem /= self.q_cards[i];
        }
        let mut a = Assignment::new();
        for (name, &v) in self.q_names.iter().zip(&vals) {
            let attr = schema.attribute(name).expect("q name in schema");
            a.set(name, &attr.domain[v]);
        }
        a
    }
}

/// Exact β_q^{c,e} for every (q, c, e), by sharded enumeration of the full
/// assignment space (each assignment contributes the square of its joint
/// factor product with the decision node's factor left out). Gated by the
/// joint-size cap.
pub fn compute_beta(bn: &BayesNet) -> Result<RepairWeights> {
    let schema = bn.schema();
    let roles = schema.roles()?.clone();
    let (ci, _cneg, cpos) = schema.protected_coords()?;
    let (ei, epos, _eneg) = schema.decision_coords()?;
    let cards: Vec<usize> = schema.attributes().iter().map(|a| a.domain.len()).collect();
    let cells_u128: u128 = cards.iter().map(|&c| c as u128).product();
    if cells_u128 > u128::from(DEFAULT_JOINT_CAP) {
        return Err(Error::JointTooLarge { cells: cells_u128, cap: DEFAULT_JOINT_CAP });
    }
    let cells = cells_u128 as usize;

    let mut q_idx: Vec<usize> = bn
        .graph()
        .parents(&roles.decision)?
        .iter()
        .filter(|p| **p != roles.protected)
        .map(|p| schema.attr_index(p))
        .collect::<Result<_>>()?;
    q_idx.sort_unstable();
    let q_cards: Vec<usize> = q_idx.iter().map(|&i| cards[i]).collect();
    let n_configs: usize = q_cards.iter().product::<usize>().max(1);

    // Per-node factor lookup tables in schema order.
    struct Factor<'a> {
        parent_idx: Vec<usize>,
        parent_cards: Vec<usize>,
        table: &'a [Vec<f64>],
    }
    let mut factors: Vec<Factor> = Vec::with_capacity(cards.len());
    for attr in schema.attributes() {
        let cpt = bn.cpt(&attr.name)?;
        let parent_idx: Vec<usize> = cpt
            .parent_order
            .iter()
            .map(|p| schema.attr_index(p))
            .collect::<Result<_>>()?;
        let parent_cards: Vec<usize> = parent_idx.iter().map(|&i| cards[i]).collect();
        factors.push(Factor { parent_idx, parent_cards, table: &cpt.table });
    }

    const BETA_SHARD: usize = 8192;
    let partials: Vec<Vec<[[f64; 2]; 2]>> =
        exec::maybe_par_chunk_map(cells, BETA_SHARD, |_, range| {
            let mut local = vec![[[0.0f64; 2]; 2]; n_configs];
            let mut v = vec![0u16; cards.len()];
            for cell in range {
                let mut rem = cell;
                for i in (0..cards.len()).rev() {
                    v[i] = (rem % cards[i]) as u16;
                    rem /= cards[i];
                }
                let mut r = 1.0f64;
                for (i, f) in factors.iter().enumerate() {
                    if i == ei {
                        continue;
                    }
                    let mut row = 0usize;
                    for (&pi, &pc) in f.parent_idx.iter().zip(&f.parent_cards) {
                        row = row * pc + usize::from(v[pi]);
                    }
                    r *= f.table[row][usize::from(v[i])];
                    if r == 0.0 {
                        break;
                    }
                }
                if r == 0.0 {
                    continue;
                }
                let mut q_config = 0usize;
                for (&qi, &qc) in q_idx.iter().zip(&q_cards) {
                    q_config = q_config * qc + usize::from(v[qi]);
                }
                let c = usize::from(v[ci] == cpos);
                let e = usize::from(v[ei] == epos);
                local[q_config][c][e] += r * r;
            }
            vec![local]
        });
    let mut beta = vec![[[0.0f64; 2]; 2]; n_configs];
    for partial in partials {
        for (acc, add) in beta.iter_mut().zip(&partial) {
            for c in 0..2 {
                for e in 0..2 {
                    acc[c][e] += add[c][e];
                }
            }
        }
    }
    Ok(RepairWeights {
        q_names: q_idx.iter().map(|&i| schema.attributes()[i].name.clone()).collect(),
        q_cards,
        beta,
    })
}

// ---------------------------------------------------------------------------
// MGraph
// ---------------------------------------------------------------------------

/// Minimize w⁺(x − x₀)² + w⁻(y − y₀)² subject to |x − y| ≤ band and
/// lo ≤ x, y ≤ hi, by closed-form case analysis over the finite active-set
/// lattice. Returns the optimal (x, y).
pub fn solve_pair(
    w_pos: f64,
    w_neg: f64,
    x0: f64,
    y0: f64,
    band: f64,
    lo: f64,
    hi: f64,
) -> (f64, f64) {
    assert!(band >= 0.0 && lo <= hi, "degenerate feasible region");
    let mut candidates: Vec<(f64, f64)> = Vec::with_capacity(8);
    // Box projection of the unconstrained optimum (covers the identity).
    candidates.push((x0.clamp(lo, hi), y0.clamp(lo, hi)));
    // Band-active weighted projections, both signs.
    let wsum = w_pos + w_neg;
    let delta = x0 - y0;
    if wsum > 0.0 {
        if delta > band {
            let shift = delta - band;
            candidates.push((x0 - shift * w_neg / wsum, y0 + shift * w_pos / wsum));
        } else if delta < -band {
            let shift = -delta - band;
            candidates.push((x0 + shift * w_neg / wsum, y0 - shift * w_pos / wsum));
        }
    }
    // Box faces with the partner solving its restricted one-variable
    // problem in closed form (covers box-active and box∧band corners).
    for face in [lo, hi] {
        let y = y0.clamp((face - band).max(lo), (face + band).min(hi));
        candidates.push((face, y));
        let x = x0.clamp((face - band).max(lo), (face + band).min(hi));
        candidates.push((x, face));
    }
    let objective = |x: f64, y: f64| w_pos * (x - x0) * (x - x0) + w_neg * (y - y0) * (y - y0);
    let mut best: Option<(f64, f64, f64)> = None;
    for (x, y) in candidates {
        // Repair sub-ulp band overshoot from the projection arithmetic so
        // selected candidates are feasible exactly as floats: pull y toward
        // x one ulp at a time (terminates by y = x at the latest, which is
        // always feasible).
        let x = x.clamp(lo, hi);
        let mut y = y.clamp(lo, hi);
        if x - y > band {
            y = (x - band).clamp(lo, hi);
            while x - y > band {
                y = y.next_up();
            }
        } else if y - x > band {
            y = (x + band).clamp(lo, hi);
            while y - x > band {
                y = y.next_down();
            }
        }
        let f = objective(x, y);
        if best.is_none_or(|(bf, _, _)| f < bf) {
            best = Some((f, x, y));
        }
    }
    let (_, x, y) = best.expect("box projection is always feasible");
    (x, y)
}

/// Solve the repair QP and return the decision node's new CPT: every
/// subpopulation with positive mass in both groups gets its two e⁺ rows
/// projected onto |x − y| ≤ τ − EPS_SLACK with minimal β-weighted movement;
/// zero-mass subpopulations keep their fitted rows. When the audited arc
/// C → E is absent the CPT is already group-blind and is returned as-is.
pub fn mgraph_solve(bn: &BayesNet, weights: &RepairWeights, tau: f64) -> Result<Cpt> {
    if !(tau.is_finite() && tau > 2.0 * (EPS_SLACK + BAND_GUARD) && tau <= 1.0) {
        return Err(Error::Config(format!(
            "mgraph repair needs tau in (2e-9, 1], got {tau}"
        )));
    }
    let schema = bn.schema();
    let roles = schema.roles()?.clone();
    let e_attr = schema.attribute(&roles.decision)?;
    if e_attr.domain.len() != 2 {
        return Err(Error::Config("mgraph repair needs a binary decision attribute".into()));
    }
    let (_, epos, eneg) = schema.decision_coords()?;
    let (ci_schema, cneg_cat, cpos_cat) = schema.protected_coords()?;
    let _ = ci_schema;
    let mut cpt = bn.cpt(&roles.decision)?.clone();
    let Some(c_slot) = cpt.parent_order.iter().position(|p| *p == roles.protected) else {
        return Ok(cpt); // no direct arc: Pr(e|c⁺,q) ≡ Pr(e|c⁻,q) already
    };
    let parent_cards: Vec<usize> = cpt
        .parent_order
        .iter()
        .map(|p| schema.attribute(p).map(|a| a.domain.len()))
        .collect::<Result<_>>()?;
    // Map each weights configuration onto its two CPT rows by name, so the
    // solver is independent of how the graph ordered E's parents.
    let q_slots: Vec<usize> = weights
        .q_names()
        .iter()
        .map(|n| {
            cpt.parent_order
                .iter()
                .position(|p| p == n)
                .ok_or_else(|| Error::Schema(format!("`{n}` is not a parent of the decision node")))
        })
        .collect::<Result<_>>()?;
    let band = tau - EPS_SLACK - BAND_GUARD;
    let (lo, hi) = (EPS_INTERIOR, 1.0 - EPS_INTERIOR);
    for q_config in 0..weights.n_configs() {
        let w_pos = weights.weight(q_config, true);
        let w_neg = weights.weight(q_config, false);
        if w_pos == 0.0 || w_neg == 0.0 {
            continue; // Pr(c,q) = 0 for a group: constraint skipped
        }
        let mut parent_vals = vec![0u16; parent_cards.len()];
        let mut rem = q_config;
        for i in (0..weights.q_cards.len()).rev() {
            parent_vals[q_slots[i]] = (rem % weights.q_cards[i]) as u16;
            rem /= weights.q_cards[i];
        }
        parent_vals[c_slot] = cpos_cat;
        let row_pos = cpt.row_index(&parent_cards, &parent_vals);
        parent_vals[c_slot] = cneg_cat;
        let row_neg = cpt.row_index(&parent_cards, &parent_vals);
        let x0 = cpt.table[row_pos][usize::from(epos)];
        let y0 = cpt.table[row_neg][usize::from(epos)];
        let (x, y) = solve_pair(w_pos, w_neg, x0, y0, band, lo, hi);
        assert!(
            (x - y).abs() <= tau - EPS_SLACK,
            "solved pair violates the band: |{x} - {y}| > {tau} - eps"
        );
        cpt.table[row_pos][usize::from(epos)] = x;
        cpt.table[row_pos][usize::from(eneg)] = 1.0 - x;
        cpt.table[row_neg][usize::from(epos)] = y;
        cpt.table[row_neg][usize::from(eneg)] = 1.0 - y;
    }
    Ok(cpt)
}

/// Algorithm: certify; if clean, the repair is the identity. Otherwise fit
/// a network on the data, compute β, solve the QP, swap in the repaired
/// decision CPT (every other CPT untouched), and regenerate a dataset of
/// the original size by seeded ancestral sampling. The recertification in
/// the result is the exact model-level audit of the repaired network, which
/// is certified by construction.
pub fn mgraph_repair(
    dataset: &Dataset,
    g: &Dag,
    config: &AuditConfig,
    seed: u64,
) -> Result<RepairResult> {
    let config = config.validated()?;
    let report = certify(dataset, g, &config)?;
    if report.certified {
        return Ok(RepairResult {
            method: RepairMethod::MGraph,
            dataset: dataset.clone(),
            modified_cpt: None,
            original_cpt: None,
            seed,
            utility: UtilityReport::zero(),
            recertified: report,
            flips: Vec::new(),
        });
    }
    let bn = fit_cpts(dataset, g)?;
    let weights = compute_beta(&bn)?;
    let new_cpt = mgraph_solve(&bn, &weights, config.tau)?;
    let original_cpt = bn.cpt(&new_cpt.node)?.clone();
    let repaired_bn = bn.replace_cpt(&new_cpt.node, new_cpt.clone())?;
    let n = usize::try_from(dataset.total_weight())
        .map_err(|_| Error::Config("dataset too large to regenerate".into()))?;
    let regenerated = repaired_bn.sample(n, seed)?;
    let utility = utility_report(dataset, &regenerated, &bn, &repaired_bn, RepairMethod::MGraph)?;
    let recertified = certify_model(&repaired_bn, &config)?;
    Ok(RepairResult {
        method: RepairMethod::MGraph,
        dataset: regenerated,
        modified_cpt: Some(new_cpt),
        original_cpt: Some(original_cpt),
        seed,
        utility,
        recertified,
        flips: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// MData
// ---------------------------------------------------------------------------

/// Algorithm: certify; for each violating subpopulation flip
/// ⌈n_q^{c⁻}·(|ΔP|_q| − τ)⌉ seeded-random protected-group rows toward the
/// gap (e⁻→e⁺ when ΔP > τ, e⁺→e⁻ when ΔP < −τ), plus one extra row
/// whenever the recount still sits exactly on the threshold; recertify.
/// Weighted datasets are expanded to unit rows first so flips act on
/// single records.
pub fn mdata_repair(
    dataset: &Dataset,
    g: &Dag,
    config: &AuditConfig,
    seed: u64,
) -> Result<RepairResult> {
    let config = config.validated()?;
    let work = expand_if_weighted(dataset);
    let report = certify(&work, g, &config)?;
    if report.certified {
        return Ok(RepairResult {
            method: RepairMethod::MData,
            dataset: dataset.clone(),
            modified_cpt: None,
            original_cpt: None,
            seed,
            utility: UtilityReport::zero(),
            recertified: report,
            flips: Vec::new(),
        });
    }
    let schema = work.schema().clone();
    let (ci, cneg, _cpos) = schema.protected_coords()?;
    let (ei, epos, eneg) = schema.decision_coords()?;
    let mut rows = work.rows().to_vec();
    let mut flips: Vec<FlipRecord> = Vec::new();
    for (fi, finding) in report.findings.iter().enumerate() {
        if !finding.violating {
            continue;
        }
        let q_coords: Vec<(usize, u16)> = finding
            .q
            .iter()
            .map(|(name, label)| {
                Ok((schema.attr_index(name)?, schema.category_index(name, label)?))
            })
            .collect::<Result<_>>()?;
        let (from_cat, to_cat) = if finding.delta_p > 0.0 { (eneg, epos) } else { (epos, eneg) };
        let mut candidates: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, row)| {
                row[ci] == cneg
                    && row[ei] == from_cat
                    && q_coords.iter().all(|&(ai, v)| row[ai] == v)
            })
            .map(|(i, _)| i)
            .collect();
        // Candidates arrive in ascending row order (the canonical sort);
        // the per-subpopulation sub-seed then fixes the random selection.
        let mut rng = ChaCha12Rng::seed_from_u64(bayes::derive_shard_seed(seed, fi));
        candidates.shuffle(&mut rng);
        let t = finding.support.clone();
        let requested = ((finding.delta_p.abs() - config.tau) * t.n_cn() as f64).ceil() as u64;
        let mut flipped = 0u64;
        let (mut cn_ep, mut cn_en) = (t.n_cn_ep, t.n_cn_en);
        let mut next = candidates.iter();
        let mut flip_one = |rows: &mut Vec<Vec<u16>>, cn_ep: &mut u64, cn_en: &mut u64| -> bool {
            match next.next() {
                Some(&i) => {
                    rows[i][ei] = to_cat;
                    if to_cat == epos {
                        *cn_ep += 1;
                        *cn_en -= 1;
                    } else {
                        *cn_ep -= 1;
                        *cn_en += 1;
                    }
                    true
                }
                None => false,
            }
        };
        let mut exhausted = false;
        for _ in 0..requested {
            if !flip_one(&mut rows, &mut cn_ep, &mut cn_en) {
                exhausted = true;
                break;
            }
            flipped += 1;
        }
        // Recount; the boundary rule fires when the gap worked out to
        // exactly τ, and the direction check stops runaway over-correction
        // on degenerate tiny groups.
        loop {
            if exhausted {
                break;
            }
            let new_dp = exact_delta_p(t.n_cp_ep, t.n_cp(), cn_ep, cn_ep + cn_en);
            let still_violating = if finding.delta_p > 0.0 {
                new_dp >= config.tau
            } else {
                new_dp <= -config.tau
            };
            if !still_violating {
                break;
            }
            if !flip_one(&mut rows, &mut cn_ep, &mut cn_en) {
                exhausted = true;
                break;
            }
            flipped += 1;
        }
        let residual = if exhausted { requested.saturating_sub(flipped) } else { 0 };
        flips.push(FlipRecord { q: finding.q.clone(), requested, flipped, residual });
    }
    let repaired = Dataset::new(schema, rows)?;
    let recertified = certify(&repaired, g, &config)?;
    let bn_original = fit_cpts(&work, g)?;
    let bn_repaired = fit_cpts(&repaired, g)?;
    let utility = utility_report(&work, &repaired, &bn_original, &bn_repaired, RepairMethod::MData)?;
    Ok(RepairResult {
        method: RepairMethod::MData,
        dataset: repaired,
        modified_cpt: None,
        original_cpt: None,
        seed,
        utility,
        recertified,
        flips,
    })
}

/// ΔP from raw counts as a single correctly rounded division (matches the
/// audit module's arithmetic bit for bit).
fn exact_delta_p(cp_ep: u64, cp: u64, cn_ep: u64, cn: u64) -> f64 {
    let num = cp_ep as i128 * cn as i128 - cn_ep as i128 * cp as i128;
    let den = cp as i128 * cn as i128;
    num as f64 / den as f64
}

fn expand_if_weighted(dataset: &Dataset) -> Dataset {
    if dataset.rows().len() as u64 == dataset.total_weight() {
        dataset.clone()
    } else {
        dataset.expand_weights()
    }
}

// ---------------------------------------------------------------------------
// Naive
// ---------------------------------------------------------------------------

/// Baseline repair: seeded random permutation of the protected column
/// across rows — the marginal of C is exactly preserved, every association
/// with C is destroyed in expectation, and nothing is certified. Identity
/// on already-certified data like the other repairs.
pub fn naive_repair(
    dataset: &Dataset,
    g: &Dag,
    config: &AuditConfig,
    seed: u64,
) -> Result<RepairResult> {
    let config = config.validated()?;
    let work = expand_if_weighted(dataset);
    let report = certify(&work, g, &config)?;
    if report.certified {
        return Ok(RepairResult {
            method: RepairMethod::Naive,
            dataset: dataset.clone(),
            modified_cpt: None,
            original_cpt: None,
            seed,
            utility: UtilityReport::zero(),
            recertified: report,
            flips: Vec::new(),
        });
    }
    let schema = work.schema().clone();
    let (ci, _, _) = schema.protected_coords()?;
    let mut rows = work.rows().to_vec();
    let mut column: Vec<u16> = rows.iter().map(|r| r[ci]).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    column.shuffle(&mut rng);
    for (row, c) in rows.iter_mut().zip(column) {
        row[ci] = c;
    }
    let repaired = Dataset::new(schema, rows)?;
    let recertified = certify(&repaired, g, &config)?;
    let bn_original = fit_cpts(&work, g)?;
    let bn_repaired = fit_cpts(&repaired, g)?;
    let utility = utility_report(&work, &repaired, &bn_original, &bn_repaired, RepairMethod::Naive)?;
    Ok(RepairResult {
        method: RepairMethod::Naive,
        dataset: repaired,
        modified_cpt: None,
        original_cpt: None,
        seed,
        utility,
        recertified,
        flips: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Utility metrics
// ---------------------------------------------------------------------------

/// d(P′, P): Euclidean distance between two joint distributions over the
/// same schema.
pub fn euclidean_distance(p: &JointDistribution, p_prime: &JointDistribution) -> Result<f64> {
    p.euclidean_distance(p_prime)
}

/// Pearson χ² between the two datasets' joint contingency tables, summed
/// over cells the original populates (original count ≥ 1).
pub fn chi_squared(original: &Dataset, repaired: &Dataset) -> Result<f64> {
    if original.schema() != repaired.schema() {
        return Err(Error::Schema("chi-squared needs identical schemas".into()));
    }
    let mut cells: HashMap<&[u16], (u64, u64)> = HashMap::new();
    for (i, row) in original.rows().iter().enumerate() {
        cells.entry(row.as_slice()).or_default().0 += original.weight(i);
    }
    for (i, row) in repaired.rows().iter().enumerate() {
        cells.entry(row.as_slice()).or_default().1 += repaired.weight(i);
    }
    let mut keys: Vec<&&[u16]> = cells.keys().collect();
    keys.sort_unstable();
    let mut total = 0.0f64;
    for key in keys {
        let (orig, rep) = cells[*key];
        if orig >= 1 {
            let d = rep as f64 - orig as f64;
            total += d * d / orig as f64;
        }
    }
    Ok(total)
}

/// The number of rows two equally sized datasets disagree on, positionally.
fn rows_modified(original: &Dataset, repaired: &Dataset) -> Result<u64> {
    if original.n_rows() != repaired.n_rows() {
        return Err(Error::Config(format!(
            "row-difference count needs equal sizes, got {} vs {}",
            original.n_rows(),
            repaired.n_rows()
        )));
    }
    let differing = original
        .rows()
        .iter()
        .zip(repaired.rows())
        .filter(|(a, b)| a != b)
        .count();
    Ok(differing as u64)
}

/// Expected decision flips implied by a CPT change:
/// ⌈Σ_{q,c} n_q^c · |Pr′(e⁺|c,q) − Pr(e⁺|c,q)|⌉ with counts from the
/// original data.
fn expected_flips(
    original: &Dataset,
    bn_original: &BayesNet,
    bn_repaired: &BayesNet,
) -> Result<u64> {
    let schema = original.schema();
    let roles = schema.roles()?.clone();
    let (ci, _cneg, cpos) = schema.protected_coords()?;
    let (_, epos, _) = schema.decision_coords()?;
    let before = bn_original.cpt(&roles.decision)?;
    let after = bn_repaired.cpt(&roles.decision)?;
    if before.parent_order != after.parent_order {
        return Err(Error::Schema("decision CPTs disagree on parent order".into()));
    }
    let parent_idx: Vec<usize> = before
        .parent_order
        .iter()
        .map(|p| schema.attr_index(p))
        .collect::<Result<_>>()?;
    let parent_cards: Vec<usize> =
        parent_idx.iter().map(|&i| schema.attributes()[i].domain.len()).collect();
    // Tally original rows per (parent-config, c) — C may or may not be one
    // of the parents; the group split is tracked either way.
    let mut counts: HashMap<(usize, bool), u64> = HashMap::new();
    for (i, row) in original.rows().iter().enumerate() {
        let mut r = 0usize;
        for (&pi, &pc) in parent_idx.iter().zip(&parent_cards) {
            r = r * pc + usize::from(row[pi]);
        }
        *counts.entry((r, row[ci] == cpos)).or_default() += original.weight(i);
    }
    let mut keys: Vec<&(usize, bool)> = counts.keys().collect();
    keys.sort_unstable();
    let mut expected = 0.0f64;
    for key in keys {
        let n = counts[key];
        let row = key.0;
        expected +=
            n as f64 * (after.table[row][usize::from(epos)] - before.table[row][usize::from(epos)]).abs();
    }
    Ok(expected.ceil() as u64)
}

/// Assemble the three utility metrics for a repair, with n_T defined by the
/// method: positional row differences for MData/Naive, expected decision
/// flips for MGraph's regenerated data.
pub fn utility_report(
    original: &Dataset,
    repaired: &Dataset,
    bn_original: &BayesNet,
    bn_repaired: &BayesNet,
    method: RepairMethod,
) -> Result<UtilityReport> {
    if original.schema() != repaired.schema() {
        return Err(Error::Schema("utility report needs identical schemas".into()));
    }
    let euclidean_d =
        bn_original.joint()?.euclidean_distance(&bn_repaired.joint()?)?;
    let n_modified = match method {
        RepairMethod::MData | RepairMethod::Naive => rows_modified(original, repaired)?,
        RepairMethod::MGraph => expected_flips(original, bn_original, bn_repaired)?,
    };
    let chi = chi_squared(original, repaired)?;
    Ok(UtilityReport { euclidean_d, n_modified, chi_squared: chi })
}
