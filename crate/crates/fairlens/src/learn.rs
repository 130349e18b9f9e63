//! Causal structure learning: G²/Pearson conditional-independence tests and
//! the PC algorithm with temporal-tier background knowledge.
//!
//! The learner runs the classic PC schedule — skeleton search with growing
//! conditioning sets, v-structure orientation, Meek rules — then applies
//! tier constraints (an arc may never point from a later tier into an
//! earlier one) and finally orients any leftover undirected edges by
//! attribute declaration order, so the output is always a single DAG and is
//! byte-deterministic. CI tests within one skeleton level run concurrently
//! from that level's adjacency snapshot; removals are gathered and applied
//! at the level boundary in canonical edge order.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use statrs::function::gamma::gamma_ur;

use crate::data::{read_text, write_text, Dataset, Schema};
use crate::error::{Error, Result};
use crate::exec;
use crate::graph::Dag;

/// Temporal priority as an ordered list of disjoint attribute-name sets.
/// Attributes not named in any tier fall into an implicit final tier after
/// all listed ones, so listing only the earliest tier still protects it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TierSpec {
    tiers: Vec<BTreeSet<String>>,
}

impl TierSpec {
    pub fn new<I, T, S>(tiers: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut out = Vec::new();
        for tier in tiers {
            let mut set = BTreeSet::new();
            for name in tier {
                let name = name.into();
                if !seen.insert(name.clone()) {
                    return Err(Error::Schema(format!(
                        "attribute `{name}` appears in more than one tier"
                    )));
                }
                set.insert(name);
            }
            out.push(set);
        }
        Ok(TierSpec { tiers: out })
    }

    /// No temporal knowledge: every attribute shares one tier.
    pub fn unconstrained() -> Self {
        TierSpec { tiers: Vec::new() }
    }

    pub fn tiers(&self) -> &[BTreeSet<String>] {
        &self.tiers
    }

    pub fn is_empty(&self) -> bool {
        self.tiers.iter().all(BTreeSet::is_empty)
    }

    /// Tier index of an attribute; unlisted names get the implicit final
    /// tier (one past the last listed tier).
    pub fn tier_of(&self, name: &str) -> usize {
        self.tiers
            .iter()
            .position(|t| t.contains(name))
            .unwrap_or(self.tiers.len())
    }

    /// Every listed name must be a schema attribute.
    pub fn validate_against(&self, schema: &Schema) -> Result<()> {
        for tier in &self.tiers {
            for name in tier {
                schema.attr_index(name)?;
            }
        }
        Ok(())
    }

    /// JSON form: `{"tiers":[["sex","age"],["education"]]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct File {
            tiers: Vec<Vec<String>>,
        }
        let f: File = serde_json::from_str(text)?;
        Self::new(f.tiers)
    }

    pub fn to_json(&self) -> String {
        let tiers: Vec<Vec<&String>> = self.tiers.iter().map(|t| t.iter().collect()).collect();
        serde_json::to_string_pretty(&serde_json::json!({ "tiers": tiers }))
            .expect("tier serialization is infallible")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&read_text(path.as_ref())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json())
    }
}

/// Which conditional-independence statistic to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CiFamily {
    /// Likelihood-ratio G² (the default for discrete data).
    #[default]
    G2,
    /// Pearson χ².
    PearsonChi2,
}

/// One conditional-independence test outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CiTestResult {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
    /// p_value > the significance threshold the test was run with.
    pub independent: bool,
}

/// G² likelihood-ratio test of x ⫫ y given z: twice the sum of
/// observed·ln(observed/expected) over the (x, y) table within each
/// z-stratum, df = Σ over nonempty strata of (|dom x|−1)(|dom y|−1),
/// p-value from the χ² upper tail.
pub fn g2_test(
    dataset: &Dataset,
    x: &str,
    y: &str,
    z: &[String],
    alpha: f64,
) -> Result<CiTestResult> {
    ci_test(dataset, x, y, z, alpha, CiFamily::G2)
}

/// Pearson χ² variant of [`g2_test`] (same stratification and df).
pub fn pearson_chi2_test(
    dataset: &Dataset,
    x: &str,
    y: &str,
    z: &[String],
    alpha: f64,
) -> Result<CiTestResult> {
    ci_test(dataset, x, y, z, alpha, CiFamily::PearsonChi2)
}

/// Conditional-independence test of x ⫫ y given z with the chosen
/// statistic. Strata never observed in the data contribute zero to both
/// the statistic and the degrees of freedom; a test with no nonempty
/// stratum at all (or zero total df) is undefined.
pub fn ci_test(
    dataset: &Dataset,
    x: &str,
    y: &str,
    z: &[String],
    alpha: f64,
    family: CiFamily,
) -> Result<CiTestResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("significance level must be in (0, 1), got {alpha}")));
    }
    let schema = dataset.schema();
    let xi = schema.attr_index(x)?;
    let yi = schema.attr_index(y)?;
    if xi == yi {
        return Err(Error::Config(format!("CI test needs two distinct attributes, got `{x}` twice")));
    }
    let mut zi = Vec::with_capacity(z.len());
    for name in z {
        let i = schema.attr_index(name)?;
        if i == xi || i == yi {
            return Err(Error::Config(format!(
                "conditioning set must exclude the tested pair, got `{name}`"
            )));
        }
        if zi.contains(&i) {
            return Err(Error::Config(format!("duplicate conditioning attribute `{name}`")));
        }
        zi.push(i);
    }
    zi.sort_unstable();
    // Canonicalize the pair by schema position so the statistic is bitwise
    // symmetric in (x, y): the summation order never depends on which name
    // came first.
    let (ai, bi) = if xi <= yi { (xi, yi) } else { (yi, xi) };
    let (statistic, df) = strata_statistic(dataset, ai, bi, &zi, family)?;
    if df == 0 {
        return Err(Error::CiUndefined(format!(
            "test of `{x}` against `{y}` has zero degrees of freedom"
        )));
    }
    let p_value = if statistic <= 0.0 {
        1.0
    } else {
        gamma_ur(df as f64 / 2.0, statistic / 2.0)
    };
    Ok(CiTestResult { statistic, degrees_of_freedom: df, p_value, independent: p_value > alpha })
}

fn strata_statistic(
    dataset: &Dataset,
    ai: usize,
    bi: usize,
    zi: &[usize],
    family: CiFamily,
) -> Result<(f64, u64)> {
    let schema = dataset.schema();
    let da = schema.attributes()[ai].domain.len();
    let db = schema.attributes()[bi].domain.len();
    let mut strata: HashMap<Vec<u16>, Vec<u64>> = HashMap::new();
    for (i, row) in dataset.rows().iter().enumerate() {
        let key: Vec<u16> = zi.iter().map(|&k| row[k]).collect();
        let table = strata.entry(key).or_insert_with(|| vec![0u64; da * db]);
        table[usize::from(row[ai]) * db + usize::from(row[bi])] += dataset.weight(i);
    }
    let mut keys: Vec<&Vec<u16>> = strata.keys().collect();
    keys.sort_unstable();
    let mut statistic = 0.0f64;
    let mut df = 0u64;
    let mut any = false;
    for key in keys {
        let table = &strata[key];
        let n: u64 = table.iter().sum();
        if n == 0 {
            continue; // zero-weight stratum: same convention as unobserved
        }
        any = true;
        df += (da as u64 - 1) * (db as u64 - 1);
        let mut row_m = vec![0u64; da];
        let mut col_m = vec![0u64; db];
        for r in 0..da {
            for c in 0..db {
                row_m[r] += table[r * db + c];
                col_m[c] += table[r * db + c];
            }
        }
        for r in 0..da {
            for c in 0..db {
                let obs = table[r * db + c];
                let margin = row_m[r] as u128 * col_m[c] as u128;
                match family {
                    CiFamily::G2 => {
                        if obs > 0 {
                            let ratio = obs as f64 * n as f64 / margin as f64;
                            statistic += 2.0 * obs as f64 * ratio.ln();
                        }
                    }
                    CiFamily::PearsonChi2 => {
                        if margin > 0 {
                            let expected = margin as f64 / n as f64;
                            let d = obs as f64 - expected;
                            statistic += d * d / expected;
                        }
                    }
                }
            }
        }
    }
    if !any {
        return Err(Error::CiUndefined(
            "conditional independence test saw no nonempty stratum".into(),
        ));
    }
    Ok((statistic.max(0.0), df))
}

/// Knobs for [`pc_learn_with`]; [`pc_learn`] uses the significance level
/// alone with everything else at its default.
#[derive(Debug, Clone, PartialEq)]
pub struct PcConfig {
    pub alpha: f64,
    /// Cap on the conditioning-set size; `None` runs the full PC schedule.
    pub max_depth: Option<usize>,
    pub family: CiFamily,
}

impl Default for PcConfig {
    fn default() -> Self {
        PcConfig { alpha: 0.01, max_depth: None, family: CiFamily::G2 }
    }
}

/// One skeleton-search level: how many CI tests ran and how many edges the
/// level removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelLog {
    pub depth: usize,
    pub tests: u64,
    pub removals: u64,
}

/// One removed edge and the separating set that removed it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovedEdge {
    pub x: String,
    pub y: String,
    pub sepset: Vec<String>,
    pub depth: usize,
}

/// Everything the learner did, for the learning-log artifact: test counts
/// per level, separating sets, orientation bookkeeping, and which tier
/// constraints fired.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnLog {
    pub alpha: f64,
    pub max_depth: Option<usize>,
    pub n_ci_tests: u64,
    pub levels: Vec<LevelLog>,
    pub removed: Vec<RemovedEdge>,
    /// Fully-applied v-structures as [tail, collider, tail].
    pub v_structures: Vec<[String; 3]>,
    /// Arrowheads skipped because an earlier orientation already claimed
    /// the edge in the opposite direction.
    pub v_structure_conflicts: u64,
    pub meek_orientations: u64,
    /// Directed arcs reversed by the tier pass, recorded in their final
    /// (earlier-tier → later-tier) direction.
    pub tier_reversals: Vec<(String, String)>,
    /// Cross-tier undirected edges oriented earlier → later.
    pub tier_orientations: u64,
    /// Same-tier leftovers oriented by attribute declaration order.
    pub declaration_orientations: u64,
    /// True when the orientation passes produced a cycle and every skeleton
    /// edge was re-oriented by the (tier, declaration) total order instead.
    pub cycle_fallback: bool,
}

impl LearnLog {
    pub fn to_json(&self) -> String {
        let removed: Vec<serde_json::Value> = self
            .removed
            .iter()
            .map(|r| {
                serde_json::json!({
                    "x": r.x, "y": r.y, "sepset": r.sepset, "depth": r.depth,
                })
            })
            .collect();
        let levels: Vec<serde_json::Value> = self
            .levels
            .iter()
            .map(|l| serde_json::json!({"depth": l.depth, "tests": l.tests, "removals": l.removals}))
            .collect();
        let v = serde_json::json!({
            "alpha": self.alpha,
            "max_depth": self.max_depth,
            "n_ci_tests": self.n_ci_tests,
            "levels": levels,
            "removed": removed,
            "v_structures": self.v_structures,
            "v_structure_conflicts": self.v_structure_conflicts,
            "meek_orientations": self.meek_orientations,
            "tier_reversals": self.tier_reversals,
            "tier_orientations": self.tier_orientations,
            "declaration_orientations": self.declaration_orientations,
            "cycle_fallback": self.cycle_fallback,
        });
        serde_json::to_string_pretty(&v).expect("log serialization is infallible")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json())
    }
}

/// PC with tier background knowledge at significance `alpha`; returns the
/// completed DAG only. See [`pc_learn_with`] for the log and the knobs.
pub fn pc_learn(dataset: &Dataset, tiers: &TierSpec, alpha: f64) -> Result<Dag> {
    pc_learn_with(dataset, tiers, &PcConfig { alpha, ..PcConfig::default() }).map(|(g, _)| g)
}

/// Full PC run: skeleton search, v-structures, Meek rules R1–R3, tier
/// enforcement, declaration-order completion. Output is deterministic for
/// fixed inputs regardless of thread count.
pub fn pc_learn_with(
    dataset: &Dataset,
    tiers: &TierSpec,
    config: &PcConfig,
) -> Result<(Dag, LearnLog)> {
    let schema = dataset.schema();
    let names: Vec<String> = schema.attributes().iter().map(|a| a.name.clone()).collect();
    let n = names.len();
    if n < 2 {
        return Err(Error::Config(format!("structure learning needs at least 2 attributes, got {n}")));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::Config(format!(
            "significance level must be in (0, 1), got {}",
            config.alpha
        )));
    }
    tiers.validate_against(schema)?;

    let mut log = LearnLog {
        alpha: config.alpha,
        max_depth: config.max_depth,
        n_ci_tests: 0,
        levels: Vec::new(),
        removed: Vec::new(),
        v_structures: Vec::new(),
        v_structure_conflicts: 0,
        meek_orientations: 0,
        tier_reversals: Vec::new(),
        tier_orientations: 0,
        declaration_orientations: 0,
        cycle_fallback: false,
    };

    // --- Skeleton search ---------------------------------------------------
    let mut adj = vec![vec![true; n]; n];
    for (i, row) in adj.iter_mut().enumerate() {
        row[i] = false;
    }
    let mut sepsets: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut depth = 0usize;
    loop {
        if let Some(cap) = config.max_depth {
            if depth > cap {
                break;
            }
        }
        let snapshot = adj.clone();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for x in 0..n {
            for y in (x + 1)..n {
                if !snapshot[x][y] {
                    continue;
                }
                let dx = (0..n).filter(|&k| snapshot[x][k] && k != y).count();
                let dy = (0..n).filter(|&k| snapshot[y][k] && k != x).count();
                if dx >= depth || dy >= depth {
                    edges.push((x, y));
                }
            }
        }
        if edges.is_empty() {
            break;
        }
        // Each edge scans its candidate conditioning sets independently
        // against the level snapshot; removals apply at the level boundary.
        let outcomes: Vec<Result<(Option<Vec<usize>>, u64)>> =
            exec::maybe_par_map(&edges, |&(x, y)| {
                edge_separation(dataset, &snapshot, x, y, depth, config)
            });
        let mut tests = 0u64;
        let mut removals = 0u64;
        for (&(x, y), outcome) in edges.iter().zip(outcomes) {
            let (sep, ran) = outcome?;
            tests += ran;
            if let Some(s) = sep {
                adj[x][y] = false;
                adj[y][x] = false;
                removals += 1;
                log.removed.push(RemovedEdge {
                    x: names[x].clone(),
                    y: names[y].clone(),
                    sepset: s.iter().map(|&k| names[k].clone()).collect(),
                    depth,
                });
                sepsets.insert((x, y), s);
            }
        }
        log.n_ci_tests += tests;
        log.levels.push(LevelLog { depth, tests, removals });
        depth += 1;
    }

    // --- Orientation: v-structures, then Meek R1–R3 ------------------------
    // head[i][j] = edge i–j carries an arrowhead at j. Directed i→j means
    // head[i][j] without head[j][i]; first-come wins, conflicts are logged.
    let mut head = vec![vec![false; n]; n];
    for m in 0..n {
        for x in 0..n {
            if x == m || !adj[x][m] {
                continue;
            }
            for y in (x + 1)..n {
                if y == m || !adj[y][m] || adj[x][y] {
                    continue;
                }
                let key = (x.min(y), x.max(y));
                let sep = sepsets.get(&key);
                if sep.is_none_or(|s| s.contains(&m)) {
                    continue;
                }
                let mut placed = 0;
                for t in [x, y] {
                    if head[m][t] && !head[t][m] {
                        log.v_structure_conflicts += 1; // m→t already fixed
                    } else if !head[t][m] {
                        head[t][m] = true;
                        placed += 1;
                    } else {
                        placed += 1; // arrowhead already present
                    }
                }
                if placed == 2 {
                    log.v_structures.push([names[x].clone(), names[m].clone(), names[y].clone()]);
                }
            }
        }
    }
    let is_directed =
        |head: &Vec<Vec<bool>>, i: usize, j: usize| head[i][j] && !head[j][i];
    let is_undirected =
        |head: &Vec<Vec<bool>>, adj: &Vec<Vec<bool>>, i: usize, j: usize| {
            adj[i][j] && !head[i][j] && !head[j][i]
        };
    loop {
        let mut changed = false;
        // R1: a→b and b–c with a, c nonadjacent gives b→c.
        for a in 0..n {
            for b in 0..n {
                if a == b || !adj[a][b] || !is_directed(&head, a, b) {
                    continue;
                }
                for c in 0..n {
                    if c != a && is_undirected(&head, &adj, b, c) && !adj[a][c] {
                        head[b][c] = true;
                        log.meek_orientations += 1;
                        changed = true;
                    }
                }
            }
        }
        // R2: a→b→c with a–c undirected gives a→c.
        for a in 0..n {
            for c in 0..n {
                if a == c || !is_undirected(&head, &adj, a, c) {
                    continue;
                }
                let chain = (0..n).any(|b| {
                    b != a
                        && b != c
                        && is_directed(&head, a, b)
                        && is_directed(&head, b, c)
                });
                if chain {
                    head[a][c] = true;
                    log.meek_orientations += 1;
                    changed = true;
                }
            }
        }
        // R3: a–c plus two nonadjacent b, d with a–b, a–d, b→c, d→c gives a→c.
        for a in 0..n {
            for c in 0..n {
                if a == c || !is_undirected(&head, &adj, a, c) {
                    continue;
                }
                let spokes: Vec<usize> = (0..n)
                    .filter(|&b| {
                        b != a
                            && b != c
                            && is_undirected(&head, &adj, a, b)
                            && is_directed(&head, b, c)
                    })
                    .collect();
                let fired = spokes.iter().enumerate().any(|(i, &b)| {
                    spokes[i + 1..].iter().any(|&d| !adj[b][d])
                });
                if fired {
                    head[a][c] = true;
                    log.meek_orientations += 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    // --- Tier enforcement and deterministic completion ----------------------
    let tier = |i: usize| tiers.tier_of(&names[i]);
    for i in 0..n {
        for j in 0..n {
            if i != j && adj[i][j] && is_directed(&head, i, j) && tier(i) > tier(j) {
                head[i][j] = false;
                head[j][i] = true;
                log.tier_reversals.push((names[j].clone(), names[i].clone()));
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !adj[i][j] || !is_undirected(&head, &adj, i, j) {
                continue;
            }
            let (ti, tj) = (tier(i), tier(j));
            if ti < tj {
                head[i][j] = true;
                log.tier_orientations += 1;
            } else if tj < ti {
                head[j][i] = true;
                log.tier_orientations += 1;
            } else {
                head[i][j] = true; // same tier: declaration order
                log.declaration_orientations += 1;
            }
        }
    }

    let mut arcs: Vec<(String, String)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && adj[i][j] && is_directed(&head, i, j) {
                arcs.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    let arc_refs: Vec<(&str, &str)> = arcs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    match Dag::new(names.clone(), &arc_refs) {
        Ok(g) => Ok((g, log)),
        Err(Error::Cycle(_)) => {
            // Orientation passes collided; fall back to the (tier,
            // declaration) total order, which is acyclic by construction.
            log.cycle_fallback = true;
            let mut arcs: Vec<(String, String)> = Vec::new();
            for (i, row) in adj.iter().enumerate() {
                for (j, &connected) in row.iter().enumerate().skip(i + 1) {
                    if !connected {
                        continue;
                    }
                    let (u, v) = if (tier(i), i) < (tier(j), j) { (i, j) } else { (j, i) };
                    arcs.push((names[u].clone(), names[v].clone()));
                }
            }
            let arc_refs: Vec<(&str, &str)> =
                arcs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            Ok((Dag::new(names, &arc_refs)?, log))
        }
        Err(e) => Err(e),
    }
}

/// Scan this edge's candidate conditioning sets of the given size (subsets
/// of either endpoint's snapshot adjacency, canonical order) and report the
/// first separating set plus how many tests ran.
fn edge_separation(
    dataset: &Dataset,
    snapshot: &[Vec<bool>],
    x: usize,
    y: usize,
    depth: usize,
    config: &PcConfig,
) -> Result<(Option<Vec<usize>>, u64)> {
    let n = snapshot.len();
    let schema = dataset.schema();
    let names: Vec<&str> = schema.attributes().iter().map(|a| a.name.as_str()).collect();
    let pool_x: Vec<usize> = (0..n).filter(|&k| snapshot[x][k] && k != y).collect();
    let pool_y: Vec<usize> = (0..n).filter(|&k| snapshot[y][k] && k != x).collect();
    let mut tests = 0u64;
    for (side, pool) in [(0, &pool_x), (1, &pool_y)] {
        if pool.len() < depth {
            continue;
        }
        let mut combo = Combinations::new(pool.len(), depth);
        while let Some(idxs) = combo.next() {
            let set: Vec<usize> = idxs.iter().map(|&i| pool[i]).collect();
            if side == 1 && set.iter().all(|k| pool_x.contains(k)) {
                continue; // already tested from the x side
            }
            let z: Vec<String> = set.iter().map(|&k| names[k].to_string()).collect();
            let r = ci_test(dataset, names[x], names[y], &z, config.alpha, config.family)?;
            tests += 1;
            if r.independent {
                return Ok((Some(set), tests));
            }
        }
    }
    Ok((None, tests))
}

/// Lexicographic k-subset index generator.
struct Combinations {
    n: usize,
    k: usize,
    state: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let state = if k <= n { Some((0..k).collect()) } else { None };
        Combinations { n, k, state }
    }

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.state.clone()?;
        let next = {
            let mut s = current.clone();
            let mut i = self.k;
            loop {
                if i == 0 {
                    break None;
                }
                i -= 1;
                if s[i] < self.n - (self.k - i) {
                    s[i] += 1;
                    for j in (i + 1)..self.k {
                        s[j] = s[j - 1] + 1;
                    }
                    break Some(s);
                }
            }
        };
        self.state = next;
        Some(current)
    }
}

/// Q = Par(E) \ {C} found on a (typically learned) graph, plus whether the
/// audited arc C → E is actually present — absence is a warning for the
/// caller to surface, not an error, since a missing arc just means no
/// direct effect to audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSearch {
    pub members: Vec<String>,
    pub arc_present: bool,
}

pub fn find_q(graph: &Dag, schema: &Schema) -> Result<QSearch> {
    let roles = schema.roles()?;
    let parents = graph.parents(&roles.decision)?;
    let arc_present = parents.contains(&roles.protected);
    let members: Vec<String> =
        parents.into_iter().filter(|p| *p != roles.protected).collect();
    Ok(QSearch { members, arc_present })
}
