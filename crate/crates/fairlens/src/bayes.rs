//! Bayesian networks over categorical attributes: CPTs, the dense joint
//! distribution (factorization over the DAG), exact conditional queries, CPT
//! estimation from data, and seeded ancestral sampling.
//!
//! A [`BayesNet`] is immutable; [`BayesNet::replace_cpt`] returns a new
//! network. Queries are pure and may run concurrently. Sampling takes an
//! explicit seed and shards the work in fixed-size blocks, each block
//! deriving its own stream seed from (seed, shard index), so the output is
//! identical whether the shards run in parallel or not.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::data::{read_text, write_text, Assignment, Dataset, Schema};
use crate::error::{Error, Result};
use crate::exec;
use crate::graph::Dag;

/// Largest dense joint table `joint()` will build (number of cells).
pub const DEFAULT_JOINT_CAP: u64 = 1 << 24;

/// Rows sampled per RNG shard; fixed so parallel and sequential sampling
/// produce identical datasets.
const SAMPLE_SHARD: usize = 4096;

/// Tolerance for CPT row normalization.
const ROW_SUM_TOL: f64 = 1e-12;

/// Conditional probability table for one node: one row per full parent
/// assignment, one column per category of the node.
///
/// Row order is mixed-radix over `parent_order` with the first parent most
/// significant; within a row, columns follow the node's domain order.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Cpt {
    pub node: String,
    pub parent_order: Vec<String>,
    pub table: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new(node: impl Into<String>, parent_order: Vec<String>, table: Vec<Vec<f64>>) -> Self {
        Cpt { node: node.into(), parent_order, table }
    }

    pub fn n_rows(&self) -> usize {
        self.table.len()
    }

    /// Row index for one full parent assignment, aligned with
    /// `parent_order`; first parent most significant.
    pub fn row_index(&self, parent_cards: &[usize], parent_values: &[u16]) -> usize {
        debug_assert_eq!(parent_cards.len(), self.parent_order.len());
        mixed_radix_index(parent_cards, parent_values)
    }

    /// Inverse of [`Cpt::row_index`].
    pub fn decode_row(&self, parent_cards: &[usize], row: usize) -> Vec<u16> {
        debug_assert_eq!(parent_cards.len(), self.parent_order.len());
        mixed_radix_decode(parent_cards, row)
    }

    fn validate(&self, schema: &Schema) -> Result<()> {
        let shape_err = |msg: String| Error::CptShape { node: self.node.clone(), msg };
        let card = schema.attribute(&self.node)?.domain.len();
        let mut expected_rows = 1usize;
        for p in &self.parent_order {
            if p == &self.node {
                return Err(shape_err("node listed as its own parent".into()));
            }
            expected_rows = expected_rows
                .checked_mul(schema.attribute(p)?.domain.len())
                .ok_or_else(|| shape_err("parent configuration count overflows".into()))?;
        }
        if self.table.len() != expected_rows {
            return Err(shape_err(format!(
                "expected {expected_rows} rows for parents {:?}, found {}",
                self.parent_order,
                self.table.len()
            )));
        }
        for (r, row) in self.table.iter().enumerate() {
            if row.len() != card {
                return Err(shape_err(format!(
                    "row {r} has {} entries, node domain has {card}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for &p in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(shape_err(format!("row {r} contains invalid probability {p}")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(shape_err(format!("row {r} sums to {sum}, not 1")));
            }
        }
        Ok(())
    }

    /// Reorder `parent_order` (and the table rows) to `target` order, which
    /// must be a permutation of the current parents.
    fn normalized(self, schema: &Schema, target: &[String]) -> Result<Cpt> {
        if self.parent_order == target {
            return Ok(self);
        }
        let mut perm = Vec::with_capacity(target.len()); // target pos -> old pos
        for t in target {
            let pos = self
                .parent_order
                .iter()
                .position(|p| p == t)
                .ok_or_else(|| Error::CptShape {
                    node: self.node.clone(),
                    msg: format!("parent_order {:?} does not match graph parents {target:?}", self.parent_order),
                })?;
            perm.push(pos);
        }
        if self.parent_order.len() != target.len() {
            return Err(Error::CptShape {
                node: self.node.clone(),
                msg: format!("parent_order {:?} does not match graph parents {target:?}", self.parent_order),
            });
        }
        let old_cards: Vec<usize> = self
            .parent_order
            .iter()
            .map(|p| Ok(schema.attribute(p)?.domain.len()))
            .collect::<Result<_>>()?;
        let new_cards: Vec<usize> = perm.iter().map(|&i| old_cards[i]).collect();
        let mut table = vec![Vec::new(); self.table.len()];
        for new_row in 0..self.table.len() {
            let new_vals = mixed_radix_decode(&new_cards, new_row);
            let mut old_vals = vec![0u16; new_vals.len()];
            for (new_pos, &old_pos) in perm.iter().enumerate() {
                old_vals[old_pos] = new_vals[new_pos];
            }
            table[new_row] = self.table[mixed_radix_index(&old_cards, &old_vals)].clone();
        }
        Ok(Cpt::new(self.node, target.to_vec(), table))
    }
}

/// A causal Bayesian network: schema + DAG + one CPT per node.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    schema: Schema,
    graph: Dag,
    cpts: Vec<Cpt>, // schema attribute order; parent_order == graph.parents(node)
}

/// Per-node lookup plan: schema indices of parents plus their cardinalities,
/// in CPT parent order. Computed once per operation.
struct Plan {
    topo: Vec<usize>,             // schema indices in a topological order
    parents: Vec<Vec<usize>>,     // per schema index
    parent_cards: Vec<Vec<usize>>,
    cards: Vec<usize>,
}

impl BayesNet {
    /// Validate and assemble. CPTs may list parents in any order (the table
    /// is re-indexed to the graph's parent order); exactly one CPT per node.
    pub fn new(schema: Schema, graph: Dag, cpts: Vec<Cpt>) -> Result<Self> {
        let n = schema.attributes().len();
        if graph.len() != n {
            return Err(Error::Schema(format!(
                "graph has {} nodes, schema has {n} attributes",
                graph.len()
            )));
        }
        for a in schema.attributes() {
            if !graph.has_node(&a.name) {
                return Err(Error::UnknownNode(a.name.clone()));
            }
        }
        let mut slots: Vec<Option<Cpt>> = vec![None; n];
        for cpt in cpts {
            let i = schema.attr_index(&cpt.node)?;
            if slots[i].is_some() {
                return Err(Error::CptShape { node: cpt.node, msg: "duplicate cpt".into() });
            }
            let target = graph.parents(&cpt.node)?;
            let cpt = cpt.normalized(&schema, &target)?;
            cpt.validate(&schema)?;
            slots[i] = Some(cpt);
        }
        let mut out = Vec::with_capacity(n);
        for (i, slot) in slots.into_iter().enumerate() {
            match slot {
                Some(c) => out.push(c),
                None => {
                    return Err(Error::CptShape {
                        node: schema.attributes()[i].name.clone(),
                        msg: "missing cpt".into(),
                    })
                }
            }
        }
        Ok(BayesNet { schema, graph, cpts: out })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, node: &str) -> Result<&Cpt> {
        Ok(&self.cpts[self.schema.attr_index(node)?])
    }

    fn plan(&self) -> Plan {
        let cards: Vec<usize> =
            self.schema.attributes().iter().map(|a| a.domain.len()).collect();
        let mut parents = Vec::with_capacity(self.cpts.len());
        let mut parent_cards = Vec::with_capacity(self.cpts.len());
        for cpt in &self.cpts {
            let idx: Vec<usize> = cpt
                .parent_order
                .iter()
                .map(|p| self.schema.attr_index(p).expect("validated parent"))
                .collect();
            parent_cards.push(idx.iter().map(|&i| cards[i]).collect());
            parents.push(idx);
        }
        let topo: Vec<usize> = self
            .graph
            .topological_order()
            .iter()
            .map(|n| self.schema.attr_index(n).expect("validated node"))
            .collect();
        Plan { topo, parents, parent_cards, cards }
    }

    fn node_prob(&self, plan: &Plan, node: usize, vals: &[u16]) -> f64 {
        let cpt = &self.cpts[node];
        let pv: Vec<u16> = plan.parents[node].iter().map(|&p| vals[p]).collect();
        let row = cpt.row_index(&plan.parent_cards[node], &pv);
        cpt.table[row][vals[node] as usize]
    }

    /// Dense joint distribution per the factorization
    /// `Pr(v) = prod_X Pr(x | Par(X))`, under [`DEFAULT_JOINT_CAP`].
    pub fn joint(&self) -> Result<JointDistribution> {
        self.joint_with_cap(DEFAULT_JOINT_CAP)
    }

    pub fn joint_with_cap(&self, cap: u64) -> Result<JointDistribution> {
        let cells: u128 = self
            .schema
            .attributes()
            .iter()
            .map(|a| a.domain.len() as u128)
            .product();
        if cells > cap as u128 {
            return Err(Error::JointTooLarge { cells, cap });
        }
        let plan = self.plan();
        let strides = joint_strides(&plan.cards);
        let mut probs = vec![0.0f64; cells as usize];
        let mut vals = vec![0u16; plan.cards.len()];
        self.fill_joint(&plan, &strides, &mut vals, 0, 0, 1.0, &mut probs);
        Ok(JointDistribution { schema: self.schema.clone(), probs })
    }

    #[allow(clippy::too_many_arguments)]
    fn fill_joint(
        &self,
        plan: &Plan,
        strides: &[usize],
        vals: &mut Vec<u16>,
        depth: usize,
        idx: usize,
        p: f64,
        probs: &mut [f64],
    ) {
        if p == 0.0 {
            return; // whole subtree stays at the zero the table was filled with
        }
        if depth == plan.topo.len() {
            probs[idx] = p;
            return;
        }
        let node = plan.topo[depth];
        for v in 0..plan.cards[node] as u16 {
            vals[node] = v;
            let pv = p * self.node_prob(plan, node, vals);
            self.fill_joint(plan, strides, vals, depth + 1, idx + v as usize * strides[node], pv, probs);
        }
    }

    /// Total probability of all full assignments consistent with `fixed`
    /// (None = unbound), by restricted enumeration in topological order.
    fn sum_restricted(&self, plan: &Plan, fixed: &[Option<u16>]) -> f64 {
        let mut vals = vec![0u16; plan.cards.len()];
        self.sum_rec(plan, fixed, &mut vals, 0, 1.0)
    }

    fn sum_rec(&self, plan: &Plan, fixed: &[Option<u16>], vals: &mut Vec<u16>, depth: usize, p: f64) -> f64 {
        if p == 0.0 {
            return 0.0;
        }
        if depth == plan.topo.len() {
            return p;
        }
        let node = plan.topo[depth];
        match fixed[node] {
            Some(v) => {
                vals[node] = v;
                let pv = p * self.node_prob(plan, node, vals);
                self.sum_rec(plan, fixed, vals, depth + 1, pv)
            }
            None => {
                let mut total = 0.0;
                for v in 0..plan.cards[node] as u16 {
                    vals[node] = v;
                    let pv = p * self.node_prob(plan, node, vals);
                    total += self.sum_rec(plan, fixed, vals, depth + 1, pv);
                }
                total
            }
        }
    }

    fn fixed_from(&self, a: &Assignment) -> Result<Vec<Option<u16>>> {
        let mut fixed = vec![None; self.schema.attributes().len()];
        for (i, v) in self.schema.resolve(a)? {
            fixed[i] = Some(v);
        }
        Ok(fixed)
    }

    /// Exact conditional probability `Pr(event | given)` by summation over
    /// the unbound attributes. `given` may be empty. Errors when
    /// `Pr(given) = 0`; an event contradicting `given` has probability 0.
    pub fn query(&self, event: &Assignment, given: &Assignment) -> Result<f64> {
        let plan = self.plan();
        let fixed_given = self.fixed_from(given)?;
        self.schema.resolve(event)?; // validate names/labels even on conflict
        let denom = self.sum_restricted(&plan, &fixed_given);
        if denom == 0.0 {
            return Err(Error::UndefinedProbability(format!(
                "conditioning event {given} has probability zero under the model"
            )));
        }
        let numer = match event.merged(given) {
            Ok(both) => self.sum_restricted(&plan, &self.fixed_from(&both)?),
            Err(_) => 0.0, // event contradicts the conditioning assignment
        };
        Ok(numer / denom)
    }

    /// Unconditional probability `Pr(event)`.
    pub fn prob(&self, event: &Assignment) -> Result<f64> {
        let plan = self.plan();
        let fixed = self.fixed_from(event)?;
        Ok(self.sum_restricted(&plan, &fixed))
    }

    /// Draw `n` records by ancestral sampling in topological order.
    /// Deterministic for a fixed seed: work is split into fixed-size shards,
    /// shard `s` using a ChaCha12 stream seeded with
    /// `splitmix64(seed XOR (s+1)*0x9E3779B97F4A7C15)`, so the result does
    /// not depend on whether shards run in parallel.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        let plan = self.plan();
        let rows = exec::maybe_par_chunk_map(n, SAMPLE_SHARD, |shard, range| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_shard_seed(seed, shard));
            range.map(|_| self.sample_row(&plan, &mut rng)).collect()
        });
        Dataset::new(self.schema.clone(), rows)
    }

    fn sample_row(&self, plan: &Plan, rng: &mut ChaCha12Rng) -> Vec<u16> {
        let mut vals = vec![0u16; plan.cards.len()];
        for &node in &plan.topo {
            let cpt = &self.cpts[node];
            let pv: Vec<u16> = plan.parents[node].iter().map(|&p| vals[p]).collect();
            let row = &cpt.table[cpt.row_index(&plan.parent_cards[node], &pv)];
            let u: f64 = rng.random();
            let mut cum = 0.0;
            let mut chosen = row.len() - 1; // final category absorbs rounding
            for (v, &p) in row.iter().enumerate() {
                cum += p;
                if u < cum {
                    chosen = v;
                    break;
                }
            }
            vals[node] = chosen as u16;
        }
        vals
    }

    /// New network with exactly one CPT swapped; everything else shared.
    pub fn replace_cpt(&self, node: &str, cpt: Cpt) -> Result<BayesNet> {
        if cpt.node != node {
            return Err(Error::CptShape {
                node: node.to_string(),
                msg: format!("replacement cpt is for `{}`", cpt.node),
            });
        }
        let i = self.schema.attr_index(node)?;
        let mut cpts = self.cpts.clone();
        cpts[i] = cpt;
        BayesNet::new(self.schema.clone(), self.graph.clone(), cpts)
    }

    // ---- file format ----

    /// JSON: `{"cpts":[...],"graph":{...},"schema":{...}}` (keys sorted).
    /// Floats use shortest-round-trip formatting, so save -> load is
    /// lossless.
    pub fn to_json(&self) -> String {
        let v = serde_json::json!({
            "schema": serde_json::from_str::<serde_json::Value>(&self.schema.to_json())
                .expect("schema json is valid"),
            "graph": serde_json::from_str::<serde_json::Value>(&self.graph.to_json())
                .expect("graph json is valid"),
            "cpts": self.cpts,
        });
        serde_json::to_string_pretty(&v).expect("bn serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct BnFile {
            schema: serde_json::Value,
            graph: serde_json::Value,
            cpts: Vec<Cpt>,
        }
        let f: BnFile = serde_json::from_str(text)?;
        let schema = Schema::from_json(&f.schema.to_string())?;
        let graph = Dag::from_json(&f.graph.to_string())?;
        BayesNet::new(schema, graph, f.cpts)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&read_text(path.as_ref())?)
    }
}

/// Maximum-likelihood CPTs: each cell is (config-and-value count) /
/// (config count); parent configurations with zero observations get the
/// uniform row. Weighted rows count with their weights.
pub fn fit_cpts(dataset: &Dataset, dag: &Dag) -> Result<BayesNet> {
    fit_cpts_smoothed(dataset, dag, 0.0)
}

/// Additive smoothing: each cell is (count + pseudocount) /
/// (config count + pseudocount * domain size). `pseudocount = 0` is plain
/// maximum likelihood with the uniform fallback for empty configurations.
pub fn fit_cpts_smoothed(dataset: &Dataset, dag: &Dag, pseudocount: f64) -> Result<BayesNet> {
    if !pseudocount.is_finite() || pseudocount < 0.0 {
        return Err(Error::Config(format!("pseudocount must be finite and >= 0, got {pseudocount}")));
    }
    let schema = dataset.schema();
    let n = schema.attributes().len();
    if dag.len() != n {
        return Err(Error::Schema(format!(
            "graph has {} nodes, dataset has {n} attributes",
            dag.len()
        )));
    }
    for a in schema.attributes() {
        if !dag.has_node(&a.name) {
            return Err(Error::UnknownNode(a.name.clone()));
        }
    }
    let cards: Vec<usize> = schema.attributes().iter().map(|a| a.domain.len()).collect();
    let nodes: Vec<usize> = (0..n).collect();
    let cpts_r: Vec<Result<Cpt>> = exec::maybe_par_map(&nodes, |&i| {
        let name = &schema.attributes()[i].name;
        let parent_order = dag.parents(name)?;
        let parent_idx: Vec<usize> = parent_order
            .iter()
            .map(|p| schema.attr_index(p))
            .collect::<Result<_>>()?;
        let parent_cards: Vec<usize> = parent_idx.iter().map(|&p| cards[p]).collect();
        let n_rows: usize = parent_cards.iter().product();
        let card = cards[i];
        let mut counts = vec![vec![0.0f64; card]; n_rows];
        let mut totals = vec![0.0f64; n_rows];
        for (r, row) in dataset.rows().iter().enumerate() {
            let w = dataset.weight(r) as f64;
            let mut idx = 0usize;
            for (&p, &c) in parent_idx.iter().zip(&parent_cards) {
                idx = idx * c + row[p] as usize;
            }
            counts[idx][row[i] as usize] += w;
            totals[idx] += w;
        }
        let table: Vec<Vec<f64>> = counts
            .iter()
            .zip(&totals)
            .map(|(cnt, &tot)| {
                let denom = tot + pseudocount * card as f64;
                if denom == 0.0 {
                    vec![1.0 / card as f64; card]
                } else {
                    cnt.iter().map(|&c| (c + pseudocount) / denom).collect()
                }
            })
            .collect();
        Ok(Cpt::new(name.clone(), parent_order, table))
    });
    let cpts = cpts_r.into_iter().collect::<Result<Vec<_>>>()?;
    BayesNet::new(schema.clone(), dag.clone(), cpts)
}

/// SplitMix64 finalizer over (seed, shard): the documented derivation of
/// per-shard sampling seeds.
pub(crate) fn derive_shard_seed(seed: u64, shard: usize) -> u64 {
    let mut z = seed ^ (shard as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixed-radix index with the first position most significant.
fn mixed_radix_index(cards: &[usize], values: &[u16]) -> usize {
    debug_assert_eq!(cards.len(), values.len());
    values.iter().zip(cards).fold(0usize, |idx, (&v, &c)| idx * c + v as usize)
}

fn mixed_radix_decode(cards: &[usize], mut index: usize) -> Vec<u16> {
    let mut vals = vec![0u16; cards.len()];
    for i in (0..cards.len()).rev() {
        vals[i] = (index % cards[i]) as u16;
        index /= cards[i];
    }
    vals
}

fn joint_strides(cards: &[usize]) -> Vec<usize> {
    // First attribute most significant.
    let mut strides = vec![1usize; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * cards[i + 1];
    }
    strides
}

/// Dense, exactly-enumerated joint distribution over all attributes.
/// Cell order is mixed-radix over the schema's attribute order, first
/// attribute most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    schema: Schema,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Empirical joint of a dataset: cell mass = row weight / total weight.
    pub fn from_dataset(dataset: &Dataset) -> Result<Self> {
        let schema = dataset.schema().clone();
        let cards: Vec<usize> = schema.attributes().iter().map(|a| a.domain.len()).collect();
        let cells: u128 = cards.iter().map(|&c| c as u128).product();
        if cells > DEFAULT_JOINT_CAP as u128 {
            return Err(Error::JointTooLarge { cells, cap: DEFAULT_JOINT_CAP });
        }
        let strides = joint_strides(&cards);
        let mut probs = vec![0.0f64; cells as usize];
        let total = dataset.total_weight() as f64;
        for (r, row) in dataset.rows().iter().enumerate() {
            let idx: usize = row.iter().zip(&strides).map(|(&v, &s)| v as usize * s).sum();
            probs[idx] += dataset.weight(r) as f64 / total;
        }
        Ok(JointDistribution { schema, probs })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    fn fixed_from(&self, a: &Assignment) -> Result<Vec<Option<u16>>> {
        let mut fixed = vec![None; self.schema.attributes().len()];
        for (i, v) in self.schema.resolve(a)? {
            fixed[i] = Some(v);
        }
        Ok(fixed)
    }

    fn sum_where(&self, fixed: &[Option<u16>]) -> f64 {
        let cards: Vec<usize> =
            self.schema.attributes().iter().map(|a| a.domain.len()).collect();
        let strides = joint_strides(&cards);
        fn rec(
            probs: &[f64],
            cards: &[usize],
            strides: &[usize],
            fixed: &[Option<u16>],
            depth: usize,
            idx: usize,
        ) -> f64 {
            if depth == cards.len() {
                return probs[idx];
            }
            match fixed[depth] {
                Some(v) => rec(probs, cards, strides, fixed, depth + 1, idx + v as usize * strides[depth]),
                None => (0..cards[depth])
                    .map(|v| rec(probs, cards, strides, fixed, depth + 1, idx + v * strides[depth]))
                    .sum(),
            }
        }
        rec(&self.probs, &cards, &strides, fixed, 0, 0)
    }

    /// Marginal probability of a (possibly partial) assignment.
    pub fn prob(&self, event: &Assignment) -> Result<f64> {
        Ok(self.sum_where(&self.fixed_from(event)?))
    }

    /// Conditional `Pr(event | given)` by cell summation; errors when
    /// `Pr(given) = 0`.
    pub fn query(&self, event: &Assignment, given: &Assignment) -> Result<f64> {
        self.schema.resolve(event)?;
        let denom = self.sum_where(&self.fixed_from(given)?);
        if denom == 0.0 {
            return Err(Error::UndefinedProbability(format!(
                "conditioning event {given} has probability zero in the joint table"
            )));
        }
        let numer = match event.merged(given) {
            Ok(both) => self.sum_where(&self.fixed_from(&both)?),
            Err(_) => 0.0,
        };
        Ok(numer / denom)
    }

    /// Euclidean distance between two joint tables over the same attribute
    /// layout (roles may differ).
    pub fn euclidean_distance(&self, other: &JointDistribution) -> Result<f64> {
        if self.schema.attributes() != other.schema.attributes() {
            return Err(Error::Schema(
                "joint distributions have different attribute layouts".into(),
            ));
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}
