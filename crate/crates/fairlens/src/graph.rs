//! Directed acyclic graphs: d-separation, descendant sets, block sets, and
//! the {X, C, Y, Q, E, Z} topological split.
//!
//! A [`Dag`] is an immutable value; `delete_arc`/`add_arc` return new graphs.
//! Equality is structural (node set + arc set), ignoring declaration order.
//!
//! d-separation follows the usual three-path-shape definition: a path is
//! blocked by Z at a chain or fork whose middle node is in Z, or at a
//! collider whose middle node and all of that node's descendants are outside
//! Z. The implementation is a linear-time reachability traversal; the
//! exhaustive path-enumeration form is kept in the test suite as an oracle.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::Path;

use crate::data::{read_text, write_text};
use crate::error::{Error, Result};

/// Immutable DAG over named nodes.
#[derive(Debug, Clone)]
pub struct Dag {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl PartialEq for Dag {
    fn eq(&self, other: &Self) -> bool {
        let nodes_a: BTreeSet<&str> = self.nodes.iter().map(|s| s.as_str()).collect();
        let nodes_b: BTreeSet<&str> = other.nodes.iter().map(|s| s.as_str()).collect();
        nodes_a == nodes_b && self.arc_set() == other.arc_set()
    }
}
impl Eq for Dag {}

impl Dag {
    /// Build from declared nodes and arcs; rejects self-loops, undeclared
    /// endpoints, duplicate nodes/arcs, and directed cycles.
    pub fn new<S: AsRef<str>>(nodes: Vec<String>, arcs: &[(S, S)]) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::Schema("empty node name".into()));
            }
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate node `{n}`")));
            }
        }
        let mut g = Dag {
            parents: vec![Vec::new(); nodes.len()],
            children: vec![Vec::new(); nodes.len()],
            nodes,
            index,
        };
        for (from, to) in arcs {
            let (from, to) = (from.as_ref(), to.as_ref());
            let fi = g.node_index(from)?;
            let ti = g.node_index(to)?;
            if fi == ti {
                return Err(Error::Cycle(from.to_string()));
            }
            if g.children[fi].contains(&ti) {
                return Err(Error::Schema(format!("duplicate arc {from} -> {to}")));
            }
            g.children[fi].push(ti);
            g.parents[ti].push(fi);
        }
        for lists in [&mut g.parents, &mut g.children] {
            for l in lists.iter_mut() {
                l.sort_unstable();
            }
        }
        g.check_acyclic()?;
        Ok(g)
    }

    fn check_acyclic(&self) -> Result<()> {
        // Kahn's algorithm; any leftover node sits on a cycle.
        let mut indeg: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let mut queue: VecDeque<usize> =
            (0..self.nodes.len()).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0usize;
        while let Some(i) = queue.pop_front() {
            seen += 1;
            for &c in &self.children[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if seen != self.nodes.len() {
            let witness = (0..self.nodes.len()).find(|&i| indeg[i] > 0).expect("cycle witness");
            return Err(Error::Cycle(self.nodes[witness].clone()));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_node(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn node_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn node_name(&self, i: usize) -> &str {
        &self.nodes[i]
    }

    /// Arcs in deterministic (parent declaration, child declaration) order.
    pub fn arcs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (i, cs) in self.children.iter().enumerate() {
            for &c in cs {
                out.push((self.nodes[i].clone(), self.nodes[c].clone()));
            }
        }
        out
    }

    fn arc_set(&self) -> BTreeSet<(&str, &str)> {
        let mut out = BTreeSet::new();
        for (i, cs) in self.children.iter().enumerate() {
            for &c in cs {
                out.insert((self.nodes[i].as_str(), self.nodes[c].as_str()));
            }
        }
        out
    }

    pub fn n_arcs(&self) -> usize {
        self.children.iter().map(|c| c.len()).sum()
    }

    pub fn has_arc(&self, from: &str, to: &str) -> bool {
        match (self.node_index(from), self.node_index(to)) {
            (Ok(f), Ok(t)) => self.children[f].contains(&t),
            _ => false,
        }
    }

    /// Par(X): direct causes, in declaration order.
    pub fn parents(&self, node: &str) -> Result<Vec<String>> {
        let i = self.node_index(node)?;
        Ok(self.parents[i].iter().map(|&p| self.nodes[p].clone()).collect())
    }

    pub fn children(&self, node: &str) -> Result<Vec<String>> {
        let i = self.node_index(node)?;
        Ok(self.children[i].iter().map(|&c| self.nodes[c].clone()).collect())
    }

    fn reach_down(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &c in &self.children[i] {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        seen
    }

    fn reach_up(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &p in &self.parents[i] {
                if !seen[p] {
                    seen[p] = true;
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// All nodes reachable by directed paths from `node`, excluding itself
    /// (unless it lies on a cycle, which construction forbids).
    pub fn descendants(&self, node: &str) -> Result<BTreeSet<String>> {
        let i = self.node_index(node)?;
        Ok(self.named(&self.reach_down(i)))
    }

    /// All nodes with a directed path to `node`, excluding itself.
    pub fn ancestors(&self, node: &str) -> Result<BTreeSet<String>> {
        let i = self.node_index(node)?;
        Ok(self.named(&self.reach_up(i)))
    }

    fn named(&self, mask: &[bool]) -> BTreeSet<String> {
        mask.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.nodes[i].clone())
            .collect()
    }

    /// Topological order; ties broken by node declaration order.
    pub fn topological_order(&self) -> Vec<String> {
        self.topological_order_idx().into_iter().map(|i| self.nodes[i].clone()).collect()
    }

    pub(crate) fn topological_order_idx(&self) -> Vec<usize> {
        let mut indeg: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let mut ready: BTreeSet<usize> =
            (0..self.nodes.len()).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            order.push(i);
            for &c in &self.children[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        debug_assert_eq!(order.len(), self.nodes.len(), "graph is acyclic by construction");
        order
    }

    /// New graph without the arc `from -> to`; the arc must exist.
    pub fn delete_arc(&self, from: &str, to: &str) -> Result<Dag> {
        let fi = self.node_index(from)?;
        let ti = self.node_index(to)?;
        if !self.children[fi].contains(&ti) {
            return Err(Error::MissingArc { from: from.into(), to: to.into() });
        }
        let mut g = self.clone();
        g.children[fi].retain(|&c| c != ti);
        g.parents[ti].retain(|&p| p != fi);
        Ok(g)
    }

    /// New graph with the arc `from -> to` added; rejects duplicates and
    /// anything that would create a cycle.
    pub fn add_arc(&self, from: &str, to: &str) -> Result<Dag> {
        let fi = self.node_index(from)?;
        let ti = self.node_index(to)?;
        if fi == ti {
            return Err(Error::Cycle(from.into()));
        }
        if self.children[fi].contains(&ti) {
            return Err(Error::Schema(format!("duplicate arc {from} -> {to}")));
        }
        if self.reach_down(ti)[fi] {
            return Err(Error::Cycle(from.into()));
        }
        let mut g = self.clone();
        g.children[fi].push(ti);
        g.children[fi].sort_unstable();
        g.parents[ti].push(fi);
        g.parents[ti].sort_unstable();
        Ok(g)
    }

    /// d-separation test: true iff Z blocks every undirected path between
    /// `x` and `y`.
    ///
    /// Reachability over (node, entry-direction) states: an active trail may
    /// pass straight through or fork at a non-Z node, and may turn
    /// parent-ward at a node only if that node is a collider point whose
    /// membership in `An(Z)` certifies that it or one of its descendants is
    /// in Z.
    pub fn d_separated(&self, x: &str, y: &str, z: &BTreeSet<String>) -> Result<bool> {
        let xi = self.node_index(x)?;
        let yi = self.node_index(y)?;
        if xi == yi {
            return Err(Error::Schema(format!("d-separation needs distinct nodes, got `{x}` twice")));
        }
        let mut in_z = vec![false; self.nodes.len()];
        for name in z {
            let zi = self.node_index(name)?;
            if zi == xi || zi == yi {
                return Err(Error::Schema(format!(
                    "conditioning set must not contain the endpoints, found `{name}`"
                )));
            }
            in_z[zi] = true;
        }

        // An(Z): every node that is in Z or has a descendant in Z.
        let mut anc_z = in_z.clone();
        let mut stack: Vec<usize> = (0..self.nodes.len()).filter(|&i| in_z[i]).collect();
        while let Some(i) = stack.pop() {
            for &p in &self.parents[i] {
                if !anc_z[p] {
                    anc_z[p] = true;
                    stack.push(p);
                }
            }
        }

        // Direction encodes how the trail entered the node:
        // 0 = from a child (moving up), 1 = from a parent (moving down).
        let mut visited = vec![[false; 2]; self.nodes.len()];
        let mut queue = VecDeque::new();
        queue.push_back((xi, 0usize)); // start as if entered from a child
        visited[xi][0] = true;
        while let Some((i, dir)) = queue.pop_front() {
            if i == yi {
                return Ok(false);
            }
            let push = |queue: &mut VecDeque<(usize, usize)>,
                        visited: &mut Vec<[bool; 2]>,
                        j: usize,
                        d: usize| {
                if !visited[j][d] {
                    visited[j][d] = true;
                    queue.push_back((j, d));
                }
            };
            if dir == 0 {
                // Entered from a child: chain up / fork down, unless i in Z.
                if !in_z[i] {
                    for &p in &self.parents[i] {
                        push(&mut queue, &mut visited, p, 0);
                    }
                    for &c in &self.children[i] {
                        push(&mut queue, &mut visited, c, 1);
                    }
                }
            } else {
                // Entered from a parent: continue down unless i in Z; turn
                // parent-ward only if i is an activated collider point.
                if !in_z[i] {
                    for &c in &self.children[i] {
                        push(&mut queue, &mut visited, c, 1);
                    }
                }
                if anc_z[i] {
                    for &p in &self.parents[i] {
                        push(&mut queue, &mut visited, p, 0);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Block-set test for the pair (C, E) with arc C->E present: B must
    /// d-separate C from E in the cut graph G' = G minus C->E, and contain no
    /// descendant of E.
    pub fn is_block_set(&self, c: &str, e: &str, b: &BTreeSet<String>) -> Result<bool> {
        if b.contains(c) || b.contains(e) {
            return Err(Error::Schema("block-set candidate must exclude C and E".into()));
        }
        let cut = self.delete_arc(c, e)?;
        let desc_e = self.descendants(e)?;
        if b.iter().any(|n| desc_e.contains(n)) {
            return Ok(false);
        }
        cut.d_separated(c, e, b)
    }

    /// Exhaustively enumerate every block set for (C, E). Deliberately
    /// exponential and gated by `max_nodes` (default cap used by callers:
    /// 15); exists to validate the theory, not for production audits.
    ///
    /// Deterministic order: subsets of the candidate nodes (declaration
    /// order) by increasing bitmask.
    pub fn enumerate_block_sets(&self, c: &str, e: &str, max_nodes: usize) -> Result<Vec<BlockSet>> {
        let ci = self.node_index(c)?;
        let ei = self.node_index(e)?;
        if !self.children[ci].contains(&ei) {
            return Err(Error::MissingArc { from: c.into(), to: e.into() });
        }
        let desc_e = self.reach_down(ei);
        let candidates: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| i != ci && i != ei && !desc_e[i])
            .collect();
        if candidates.len() > max_nodes {
            return Err(Error::OracleTooLarge { candidates: candidates.len(), cap: max_nodes });
        }
        let cut = self.delete_arc(c, e)?;
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << candidates.len()) {
            let members: BTreeSet<String> = candidates
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &i)| self.nodes[i].clone())
                .collect();
            if cut.d_separated(c, e, &members)? {
                out.push(BlockSet { members });
            }
        }
        Ok(out)
    }

    /// Topological split {X, C, Y, Q, E, Z} with Q = Par(E)\{C} immediately
    /// before E and Z = exactly the descendants of E.
    ///
    /// Not every DAG admits this shape: a parent of E with a descendant
    /// outside `descendants(E)`, or a parent of E that is an ancestor of C,
    /// has no legal slot. In that case this returns
    /// [`Error::TopoSplitInfeasible`] naming a violating arc. The
    /// construction (X = ancestors(C), Y = the rest) is complete: whenever
    /// any valid split exists, this one is valid too, because extra X
    /// members can always be moved into Y.
    pub fn topo_split(&self, c: &str, e: &str) -> Result<TopoSplit> {
        let ci = self.node_index(c)?;
        let ei = self.node_index(e)?;
        if !self.children[ci].contains(&ei) {
            return Err(Error::MissingArc { from: c.into(), to: e.into() });
        }
        let anc_c = self.reach_up(ci);
        let desc_e = self.reach_down(ei);
        let q_set: BTreeSet<usize> = self.parents[ei].iter().copied().filter(|&p| p != ci).collect();

        let topo = self.topological_order_idx();
        let sub_order = |pred: &dyn Fn(usize) -> bool| -> Vec<usize> {
            topo.iter().copied().filter(|&i| pred(i)).collect()
        };
        let x_part = sub_order(&|i| anc_c[i]);
        let y_part = sub_order(&|i| {
            i != ci && i != ei && !anc_c[i] && !desc_e[i] && !q_set.contains(&i)
        });
        let q_part = sub_order(&|i| q_set.contains(&i));
        let z_part = sub_order(&|i| desc_e[i]);

        let mut order = Vec::with_capacity(self.nodes.len());
        order.extend(&x_part);
        order.push(ci);
        order.extend(&y_part);
        order.extend(&q_part);
        order.push(ei);
        order.extend(&z_part);
        let mut pos = vec![usize::MAX; self.nodes.len()];
        for (p, &i) in order.iter().enumerate() {
            pos[i] = p;
        }
        for (i, cs) in self.children.iter().enumerate() {
            for &ch in cs {
                if pos[i] > pos[ch] {
                    return Err(Error::TopoSplitInfeasible(format!(
                        "arc {} -> {} goes right-to-left in {{X,C,Y,Q,E,Z}}",
                        self.nodes[i], self.nodes[ch]
                    )));
                }
            }
        }

        let names = |idxs: &[usize]| idxs.iter().map(|&i| self.nodes[i].clone()).collect();
        Ok(TopoSplit {
            x_part: names(&x_part),
            c: c.to_string(),
            y_part: names(&y_part),
            q_part: names(&q_part),
            e: e.to_string(),
            z_part: names(&z_part),
        })
    }

    // ---- file formats ----

    /// JSON: `{"nodes":[...],"arcs":[["from","to"],...]}`.
    pub fn to_json(&self) -> String {
        let file = GraphFile { nodes: self.nodes.clone(), arcs: self.arcs() };
        serde_json::to_string_pretty(&file).expect("graph serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        Dag::new(file.nodes, &file.arcs)
    }

    /// Restricted DOT subset: a `digraph` block of `a -> b;` lines (bare
    /// `a;` node lines are accepted for isolated nodes).
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph g {\n");
        let connected: BTreeSet<usize> = self
            .children
            .iter()
            .enumerate()
            .flat_map(|(i, cs)| cs.iter().flat_map(move |&c| [i, c]))
            .collect();
        for i in 0..self.nodes.len() {
            if !connected.contains(&i) {
                out.push_str(&format!("  {};\n", self.nodes[i]));
            }
        }
        for (from, to) in self.arcs() {
            out.push_str(&format!("  {from} -> {to};\n"));
        }
        out.push_str("}\n");
        out
    }

    pub fn from_dot(text: &str) -> Result<Self> {
        let mut nodes: Vec<String> = Vec::new();
        let mut arcs: Vec<(String, String)> = Vec::new();
        let push_node = |nodes: &mut Vec<String>, n: &str| {
            if !nodes.iter().any(|x| x == n) {
                nodes.push(n.to_string());
            }
        };
        let mut in_block = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with("//") || line.starts_with('#') {
                continue;
            }
            if !in_block {
                if line.starts_with("digraph") && line.ends_with('{') {
                    in_block = true;
                    continue;
                }
                return Err(Error::Schema(format!(
                    "dot parse error at line {}: expected `digraph ... {{`",
                    lineno + 1
                )));
            }
            if line == "}" {
                in_block = false;
                continue;
            }
            let stmt = line.strip_suffix(';').ok_or_else(|| {
                Error::Schema(format!("dot parse error at line {}: missing `;`", lineno + 1))
            })?;
            if let Some((from, to)) = stmt.split_once("->") {
                let (from, to) = (from.trim(), to.trim());
                if from.is_empty() || to.is_empty() {
                    return Err(Error::Schema(format!("dot parse error at line {}", lineno + 1)));
                }
                push_node(&mut nodes, from);
                push_node(&mut nodes, to);
                arcs.push((from.to_string(), to.to_string()));
            } else {
                let name = stmt.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(Error::Schema(format!(
                        "dot parse error at line {}: only `a -> b;` and bare node lines are supported",
                        lineno + 1
                    )));
                }
                push_node(&mut nodes, name);
            }
        }
        if in_block {
            return Err(Error::Schema("dot parse error: unterminated digraph block".into()));
        }
        Dag::new(nodes, &arcs)
    }

    /// Load from `.json` or `.dot`, sniffing the format from the content.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = read_text(path.as_ref())?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_dot(&text)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if path.extension().is_some_and(|e| e == "dot") {
            self.to_dot()
        } else {
            self.to_json()
        };
        write_text(path, &text)
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct GraphFile {
    nodes: Vec<String>,
    arcs: Vec<(String, String)>,
}

/// A set of nodes d-separating C from E in the cut graph, containing no
/// descendant of E. Defines a meaningful partition for the audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSet {
    pub members: BTreeSet<String>,
}

/// A topological ordering of the shape {X, C, Y, Q, E, Z}: ancestors-of-C
/// prefix, the protected node, the unrelated middle, E's other parents
/// immediately before E, then exactly E's descendants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopoSplit {
    pub x_part: Vec<String>,
    pub c: String,
    pub y_part: Vec<String>,
    pub q_part: Vec<String>,
    pub e: String,
    pub z_part: Vec<String>,
}

impl TopoSplit {
    /// The concatenated (valid) topological order.
    pub fn order(&self) -> Vec<String> {
        let mut out = Vec::new();
        out.extend(self.x_part.iter().cloned());
        out.push(self.c.clone());
        out.extend(self.y_part.iter().cloned());
        out.extend(self.q_part.iter().cloned());
        out.push(self.e.clone());
        out.extend(self.z_part.iter().cloned());
        out
    }
}
