// SPDX-License-Identifier: Apache-2.0

//! Nodal analysis of resistive networks with fixed-voltage nodes.
//!
//! This is the reference solver for the crossbar: it knows nothing about
//! current dividers and simply enforces Kirchhoff's current law at every
//! node. Zero-ohm elements are collapsed into a single node before the
//! system is assembled; nodes pinned by ideal sources are eliminated
//! (Dirichlet rows), which leaves a symmetric positive definite system in
//! the free node voltages.
//!
//! Crossbar topology used by [`mna_solve`]:
//!
//! ```text
//!   V_i --R_drv-- r(i,0) --R_w-- r(i,1) --R_w-- ...            (row i)
//!                   |              |
//!                 R_ij           R_i1          unfaulted cell
//!                   |              |
//!                 c(i,0)         c(i,1)
//!                   |R_w           |R_w
//!                  ...            ...  --R_w-- sense_j (0 V)   (column j)
//! ```
//!
//! A faulted cell gets an injection node `n(i,j)` between the row wire and
//! the cell: `r(i,j) --R_sh(I)-- n(i,j) --R_ij-- c(i,j)`, with the photocurrent
//! sourced into `n(i,j)` from ground. A zero-current fault keeps the split
//! topology, so `solve(I) - solve(0)` isolates the photocurrent response.

use std::collections::{BTreeMap, VecDeque};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::crossbar::{ColumnReadout, CrossbarConfig, FaultEvent, WeightGrid};
use crate::error::{Error, Result};

/// Free-node count above which the sparse factorisation replaces dense Cholesky.
const DENSE_LIMIT: usize = 1500;

#[derive(Debug, Clone, Default)]
pub struct Netlist {
    labels: Vec<String>,
    fixed: Vec<Option<f64>>,
    resistors: Vec<(usize, usize, f64)>,
    sources: Vec<(usize, f64)>,
}

impl Netlist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, label: impl Into<String>) -> usize {
        self.labels.push(label.into());
        self.fixed.push(None);
        self.labels.len() - 1
    }

    /// A node held at `volts` by an ideal source.
    pub fn add_fixed_node(&mut self, label: impl Into<String>, volts: f64) -> usize {
        let id = self.add_node(label);
        self.fixed[id] = Some(volts);
        id
    }

    pub fn add_resistor(&mut self, a: usize, b: usize, ohms: f64) -> Result<()> {
        if a >= self.labels.len() || b >= self.labels.len() {
            return Err(Error::Input(format!("resistor references unknown node ({a}, {b})")));
        }
        if !(ohms.is_finite() && ohms >= 0.0) {
            return Err(Error::Domain(format!(
                "resistor between {} and {} has invalid value {ohms}",
                self.labels[a], self.labels[b]
            )));
        }
        self.resistors.push((a, b, ohms));
        Ok(())
    }

    /// Current source pushing `amps` into `node`, returning through ground.
    pub fn add_current_source(&mut self, node: usize, amps: f64) -> Result<()> {
        if node >= self.labels.len() {
            return Err(Error::Input(format!("current source references unknown node {node}")));
        }
        if !amps.is_finite() {
            return Err(Error::Domain("current source value must be finite".into()));
        }
        self.sources.push((node, amps));
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn solve(&self) -> Result<NodalSolution> {
        Ok(self.solve_each(&[&self.sources])?.remove(0))
    }

    /// One solution per set of current sources, sharing a single
    /// factorisation of the conductance matrix. The netlist's own sources
    /// are ignored.
    pub fn solve_each(&self, source_sets: &[&[(usize, f64)]]) -> Result<Vec<NodalSolution>> {
        let n = self.labels.len();
        for &(node, amps) in source_sets.iter().copied().flatten() {
            if node >= n || !amps.is_finite() {
                return Err(Error::Input(format!("bad current source {amps} A at node {node}")));
            }
        }
        let mut groups = UnionFind::new(n);
        for &(a, b, r) in &self.resistors {
            if r == 0.0 {
                groups.union(a, b);
            }
        }

        // Representative -> pinned voltage.
        let mut pinned: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for (node, v) in self.fixed.iter().enumerate() {
            if let Some(v) = *v {
                let root = groups.find(node);
                match pinned.get(&root) {
                    Some(&(w, other)) if w != v => {
                        return Err(Error::Solver(format!(
                            "zero-ohm path shorts {} ({w} V) to {} ({v} V)",
                            self.labels[other], self.labels[node]
                        )));
                    }
                    Some(_) => {}
                    None => {
                        pinned.insert(root, (v, node));
                    }
                }
            }
        }

        // Index the free groups.
        let mut root_of = vec![0; n];
        let mut free_index: BTreeMap<usize, usize> = BTreeMap::new();
        let mut free_repr = Vec::new();
        for (node, slot) in root_of.iter_mut().enumerate() {
            let root = groups.find(node);
            *slot = root;
            if !pinned.contains_key(&root) && !free_index.contains_key(&root) {
                free_index.insert(root, free_repr.len());
                free_repr.push(node);
            }
        }
        let nfree = free_repr.len();

        // Adjacency over groups for the floating-node check.
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b, r) in &self.resistors {
            if r > 0.0 {
                let (ra, rb) = (root_of[a], root_of[b]);
                if ra != rb {
                    adj[ra].push(rb);
                    adj[rb].push(ra);
                }
            }
        }
        let mut reached = vec![false; n];
        let mut queue: VecDeque<usize> = pinned.keys().copied().collect();
        for &r in pinned.keys() {
            reached[r] = true;
        }
        while let Some(g) = queue.pop_front() {
            for &h in &adj[g] {
                if !reached[h] {
                    reached[h] = true;
                    queue.push_back(h);
                }
            }
        }
        if let Some(&node) = free_repr.iter().find(|&&node| !reached[root_of[node]]) {
            return Err(Error::FloatingNode {
                node,
                label: self.labels[node].clone(),
            });
        }

        // Assemble G_ff v_f = i_f - G_fp v_p.
        let mut rhs = vec![0.0; nfree];
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(4 * self.resistors.len());
        for &(a, b, r) in &self.resistors {
            if r == 0.0 {
                continue;
            }
            let g = 1.0 / r;
            let (ra, rb) = (root_of[a], root_of[b]);
            if ra == rb {
                continue;
            }
            let fa = free_index.get(&ra).copied();
            let fb = free_index.get(&rb).copied();
            match (fa, fb) {
                (Some(ia), Some(ib)) => {
                    triplets.push((ia, ia, g));
                    triplets.push((ib, ib, g));
                    triplets.push((ia, ib, -g));
                    triplets.push((ib, ia, -g));
                }
                (Some(ia), None) => {
                    triplets.push((ia, ia, g));
                    rhs[ia] += g * pinned[&rb].0;
                }
                (None, Some(ib)) => {
                    triplets.push((ib, ib, g));
                    rhs[ib] += g * pinned[&ra].0;
                }
                (None, None) => {}
            }
        }
        let factor = Factor::new(nfree, &triplets)?;
        let mut is_pinned = vec![false; n];
        for &root in pinned.keys() {
            is_pinned[root] = true;
        }

        let mut out = Vec::with_capacity(source_sets.len());
        for sources in source_sets {
            let mut b = rhs.clone();
            for &(node, amps) in sources.iter() {
                if let Some(&k) = free_index.get(&root_of[node]) {
                    b[k] += amps;
                }
            }
            let free_v = factor.solve_refined(&triplets, &b)?;
            let voltages: Vec<f64> = (0..n)
                .map(|node| {
                    let root = root_of[node];
                    match pinned.get(&root) {
                        Some(&(v, _)) => v,
                        None => free_v[free_index[&root]],
                    }
                })
                .collect();
            let mut sol = NodalSolution {
                voltages,
                group: root_of.clone(),
                max_kcl_residual: 0.0,
                max_kcl_imbalance: 0.0,
                max_branch_current: 0.0,
                resistors: self.resistors.clone(),
            };
            let (rel, abs, branch) = sol.kcl(sources, &is_pinned);
            sol.max_kcl_residual = rel;
            sol.max_kcl_imbalance = abs;
            sol.max_branch_current = branch;
            out.push(sol);
        }
        Ok(out)
    }
}

/// Cholesky factor of the free-node conductance matrix: dense for small
/// systems, sparse under a fill-reducing ordering otherwise.
enum Factor {
    Empty,
    Dense(Cholesky<f64, Dyn>),
    Sparse(Llt<usize, f64>),
}

impl Factor {
    fn new(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Ok(Factor::Empty);
        }
        if n <= DENSE_LIMIT {
            let mut g = DMatrix::<f64>::zeros(n, n);
            for &(i, j, v) in triplets {
                g[(i, j)] += v;
            }
            let chol = g
                .cholesky()
                .ok_or_else(|| Error::Solver("nodal matrix is not positive definite".into()))?;
            return Ok(Factor::Dense(chol));
        }
        // Only the lower triangle is read by the factorisation.
        let lower: Vec<Triplet<usize, usize, f64>> = triplets
            .iter()
            .filter(|&&(i, j, _)| i >= j)
            .map(|&(i, j, v)| Triplet::new(i, j, v))
            .collect();
        let g = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower)
            .map_err(|e| Error::Solver(format!("sparse assembly failed: {e:?}")))?;
        let llt = g
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Solver(format!("sparse Cholesky failed: {e:?}")))?;
        Ok(Factor::Sparse(llt))
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Factor::Empty => Vec::new(),
            Factor::Dense(chol) => chol.solve(&DVector::from_column_slice(b)).iter().copied().collect(),
            Factor::Sparse(llt) => {
                let x = llt.solve(Col::<f64>::from_fn(b.len(), |k| b[k]));
                (0..b.len()).map(|k| x[k]).collect()
            }
        }
    }

    /// Solve, then refine with the residual accumulated in double-double so
    /// wide conductance spreads still converge to rounding level.
    fn solve_refined(&self, triplets: &[(usize, usize, f64)], rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let mut x = self.solve(rhs);
        for _ in 0..3 {
            let dx = self.solve(&residual_compensated(n, triplets, rhs, &x));
            let mut step: f64 = 0.0;
            let mut size: f64 = 0.0;
            for (xk, d) in x.iter_mut().zip(&dx) {
                *xk += d;
                step = step.max(d.abs());
                size = size.max(xk.abs());
            }
            if step <= f64::EPSILON * size {
                break;
            }
        }
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::Solver("nodal solve produced non-finite voltages".into()))
        }
    }
}

/// `b - A x` with error-free products and sums (sum kept as hi + lo).
fn residual_compensated(n: usize, triplets: &[(usize, usize, f64)], rhs: &[f64], x: &[f64]) -> Vec<f64> {
    let mut hi = rhs.to_vec();
    let mut lo = vec![0.0; n];
    for &(i, j, v) in triplets {
        let p = -v * x[j];
        let p_err = (-v).mul_add(x[j], -p);
        let s = hi[i] + p;
        let bb = s - hi[i];
        let s_err = (hi[i] - (s - bb)) + (p - bb);
        hi[i] = s;
        lo[i] += s_err + p_err;
    }
    hi.iter().zip(&lo).map(|(h, l)| h + l).collect()
}

#[derive(Debug, Clone)]
pub struct NodalSolution {
    voltages: Vec<f64>,
    group: Vec<usize>,
    resistors: Vec<(usize, usize, f64)>,
    max_kcl_residual: f64,
    max_kcl_imbalance: f64,
    max_branch_current: f64,
}

impl NodalSolution {
    pub fn voltage(&self, node: usize) -> f64 {
        self.voltages[node]
    }

    pub fn voltages(&self) -> &[f64] {
        &self.voltages
    }

    /// Largest componentwise KCL residual over free nodes: the current
    /// imbalance divided by the sum of `(|v_a| + |v_b|) / r` over the node's
    /// branches plus its source magnitudes.
    pub fn max_kcl_residual(&self) -> f64 {
        self.max_kcl_residual
    }

    /// Largest absolute KCL imbalance over free nodes, amperes.
    pub fn max_kcl_imbalance(&self) -> f64 {
        self.max_kcl_imbalance
    }

    pub fn max_branch_current(&self) -> f64 {
        self.max_branch_current
    }

    /// Net current flowing into the (merged) node `node` through resistors
    /// that connect it to the rest of the network.
    pub fn current_into(&self, node: usize) -> f64 {
        let g = self.group[node];
        let mut total = 0.0;
        for &(a, b, r) in &self.resistors {
            if r == 0.0 {
                continue;
            }
            let (ga, gb) = (self.group[a], self.group[b]);
            if ga == gb {
                continue;
            }
            let i_ab = (self.voltages[a] - self.voltages[b]) / r;
            if gb == g {
                total += i_ab;
            } else if ga == g {
                total -= i_ab;
            }
        }
        total
    }

    fn kcl(&self, sources: &[(usize, f64)], is_pinned: &[bool]) -> (f64, f64, f64) {
        let n = self.voltages.len();
        let mut net = vec![0.0; n];
        let mut scale = vec![0.0; n];
        let mut max_branch: f64 = 0.0;
        for &(a, b, r) in &self.resistors {
            if r == 0.0 {
                continue;
            }
            let (ga, gb) = (self.group[a], self.group[b]);
            if ga == gb {
                continue;
            }
            let (va, vb) = (self.voltages[a], self.voltages[b]);
            let i_ab = (va - vb) / r;
            let mag = (va.abs() + vb.abs()) / r;
            max_branch = max_branch.max(i_ab.abs());
            net[ga] -= i_ab;
            net[gb] += i_ab;
            scale[ga] += mag;
            scale[gb] += mag;
        }
        for &(node, amps) in sources {
            let g = self.group[node];
            net[g] += amps;
            scale[g] += amps.abs();
            max_branch = max_branch.max(amps.abs());
        }
        let mut worst_rel: f64 = 0.0;
        let mut worst_abs: f64 = 0.0;
        for node in 0..n {
            let g = self.group[node];
            if g == node && !is_pinned[g] {
                worst_abs = worst_abs.max(net[g].abs());
                if net[g] != 0.0 {
                    worst_rel = worst_rel.max(net[g].abs() / scale[g]);
                }
            }
        }
        (worst_rel, worst_abs, max_branch)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Lower index wins so representatives are deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Named nodes of a crossbar netlist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CrossbarNode {
    Ground,
    Driver { row: usize },
    Row { row: usize, col: usize },
    Column { row: usize, col: usize },
    Sense { col: usize },
    Injection { row: usize, col: usize },
}

/// Result of a full nodal crossbar solve.
#[derive(Debug, Clone)]
pub struct MnaResult {
    pub readout: ColumnReadout,
    pub solution: NodalSolution,
    nodes: BTreeMap<CrossbarNode, usize>,
}

impl MnaResult {
    pub fn voltage(&self, node: CrossbarNode) -> Option<f64> {
        self.nodes.get(&node).map(|&id| self.solution.voltage(id))
    }

    pub fn max_kcl_residual(&self) -> f64 {
        self.solution.max_kcl_residual()
    }
}

/// Build the crossbar netlist. Returns the netlist, the node map and the
/// sense node of each column.
pub fn build_crossbar_netlist(
    config: &CrossbarConfig,
    weights: &WeightGrid,
    row_voltages: &[f64],
    faults: &[FaultEvent],
) -> Result<(Netlist, BTreeMap<CrossbarNode, usize>, Vec<usize>)> {
    config.validate()?;
    if weights.rows() != config.rows || weights.cols() != config.cols {
        return Err(Error::Dimension {
            what: "weight grid",
            expected: config.rows * config.cols,
            got: weights.rows() * weights.cols(),
        });
    }
    if row_voltages.len() != config.rows {
        return Err(Error::Dimension {
            what: "row voltages",
            expected: config.rows,
            got: row_voltages.len(),
        });
    }
    let (rows, cols) = (config.rows, config.cols);

    // Faults on the same cell share one injection node.
    let mut injected: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for f in faults {
        f.validate(config)?;
        *injected.entry((f.row, f.col)).or_insert(0.0) += f.current;
    }

    let mut net = Netlist::new();
    let mut map = BTreeMap::new();
    let gnd = net.add_fixed_node("gnd", 0.0);
    map.insert(CrossbarNode::Ground, gnd);

    let mut row_node = vec![0; rows * cols];
    let mut col_node = vec![0; rows * cols];
    for i in 0..rows {
        let d = net.add_fixed_node(format!("drv{i}"), row_voltages[i]);
        map.insert(CrossbarNode::Driver { row: i }, d);
        for j in 0..cols {
            let id = net.add_node(format!("r{i}_{j}"));
            map.insert(CrossbarNode::Row { row: i, col: j }, id);
            row_node[i * cols + j] = id;
        }
        net.add_resistor(d, row_node[i * cols], config.driver_resistance)?;
        for j in 1..cols {
            net.add_resistor(row_node[i * cols + j - 1], row_node[i * cols + j], config.wire_res_per_segment)?;
        }
    }
    let mut sense = Vec::with_capacity(cols);
    for j in 0..cols {
        for i in 0..rows {
            let id = net.add_node(format!("c{i}_{j}"));
            map.insert(CrossbarNode::Column { row: i, col: j }, id);
            col_node[i * cols + j] = id;
        }
        for i in 1..rows {
            net.add_resistor(col_node[(i - 1) * cols + j], col_node[i * cols + j], config.wire_res_per_segment)?;
        }
        let s = net.add_fixed_node(format!("sense{j}"), 0.0);
        map.insert(CrossbarNode::Sense { col: j }, s);
        net.add_resistor(col_node[(rows - 1) * cols + j], s, config.wire_res_per_segment)?;
        sense.push(s);
    }

    for i in 0..rows {
        for j in 0..cols {
            let r_cell = weights.resistance(i, j) + config.selector_on_resistance;
            let (rn, cn) = (row_node[i * cols + j], col_node[i * cols + j]);
            match injected.get(&(i, j)) {
                Some(&amps) => {
                    let n = net.add_node(format!("inj{i}_{j}"));
                    map.insert(CrossbarNode::Injection { row: i, col: j }, n);
                    net.add_resistor(rn, n, config.shunt_at(amps))?;
                    net.add_resistor(n, cn, r_cell)?;
                    net.add_current_source(n, amps)?;
                }
                None => net.add_resistor(rn, cn, r_cell)?,
            }
        }
    }
    Ok((net, map, sense))
}

/// Solve the full crossbar network by nodal analysis.
pub fn mna_solve(
    config: &CrossbarConfig,
    weights: &WeightGrid,
    row_voltages: &[f64],
    faults: &[FaultEvent],
) -> Result<MnaResult> {
    let (net, nodes, sense) = build_crossbar_netlist(config, weights, row_voltages, faults)?;
    let solution = net.solve()?;
    let currents = sense.iter().map(|&s| solution.current_into(s)).collect();
    let label = if faults.is_empty() { "mna-baseline" } else { "mna-faulted" };
    Ok(MnaResult {
        readout: ColumnReadout::new(currents, label),
        solution,
        nodes,
    })
}

/// Photocurrent response per column: `solve(faults) - solve(faults at 0 A)`.
pub fn mna_fault_delta(
    config: &CrossbarConfig,
    weights: &WeightGrid,
    row_voltages: &[f64],
    faults: &[FaultEvent],
) -> Result<Vec<f64>> {
    // The dark reference keeps the lit shunt values; only the sources go.
    let (net, _, sense) = build_crossbar_netlist(config, weights, row_voltages, faults)?;
    let mut both = net.solve_each(&[&net.sources, &[]])?;
    let dark = both.pop().unwrap();
    let lit = both.pop().unwrap();
    Ok(sense
        .iter()
        .map(|&s| lit.current_into(s) - dark.current_into(s))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn voltage_divider() {
        let mut net = Netlist::new();
        let top = net.add_fixed_node("top", 1.0);
        let mid = net.add_node("mid");
        let gnd = net.add_fixed_node("gnd", 0.0);
        net.add_resistor(top, mid, 3.0).unwrap();
        net.add_resistor(mid, gnd, 1.0).unwrap();
        let sol = net.solve().unwrap();
        assert!((sol.voltage(mid) - 0.25).abs() < 1e-15);
        assert!((sol.current_into(gnd) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn floating_node_is_reported() {
        let mut net = Netlist::new();
        let gnd = net.add_fixed_node("gnd", 0.0);
        let a = net.add_node("a");
        let island = net.add_node("island");
        let other = net.add_node("island2");
        net.add_resistor(gnd, a, 10.0).unwrap();
        net.add_resistor(island, other, 10.0).unwrap();
        match net.solve() {
            Err(Error::FloatingNode { node, label }) => {
                assert_eq!(node, island);
                assert_eq!(label, "island");
            }
            other => panic!("expected floating node error, got {other:?}"),
        }
    }

    #[test]
    fn zero_ohm_short_between_sources_rejected() {
        let mut net = Netlist::new();
        let a = net.add_fixed_node("a", 1.0);
        let b = net.add_fixed_node("b", 0.0);
        net.add_resistor(a, b, 0.0).unwrap();
        assert!(matches!(net.solve(), Err(Error::Solver(_))));
    }

    #[test]
    fn zero_ohm_elements_merge_nodes() {
        let mut net = Netlist::new();
        let top = net.add_fixed_node("top", 2.0);
        let x = net.add_node("x");
        let y = net.add_node("y");
        let gnd = net.add_fixed_node("gnd", 0.0);
        net.add_resistor(top, x, 1.0).unwrap();
        net.add_resistor(x, y, 0.0).unwrap();
        net.add_resistor(y, gnd, 1.0).unwrap();
        let sol = net.solve().unwrap();
        assert_eq!(sol.voltage(x), sol.voltage(y));
        assert!((sol.voltage(x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sparse_path_matches_dense() {
        // A resistor ladder large enough to take the sparse path.
        let n = DENSE_LIMIT + 50;
        let mut net = Netlist::new();
        let src = net.add_fixed_node("src", 1.0);
        let gnd = net.add_fixed_node("gnd", 0.0);
        let mut prev = src;
        for k in 0..n {
            let node = net.add_node(format!("n{k}"));
            net.add_resistor(prev, node, 1.0).unwrap();
            net.add_resistor(node, gnd, 1e4).unwrap();
            prev = node;
        }
        net.add_current_source(prev, 1e-5).unwrap();
        let sol = net.solve().unwrap();
        assert!(sol.max_kcl_residual() < 1e-12, "{}", sol.max_kcl_residual());

        // Both solvers on one tridiagonal system.
        let mut triplets = Vec::new();
        let mut rhs = vec![0.0; n];
        for k in 0..n {
            let mut d = 1.0 + 1e-4;
            if k + 1 < n {
                d += 1.0;
                triplets.push((k, k + 1, -1.0));
                triplets.push((k + 1, k, -1.0));
            }
            triplets.push((k, k, d));
        }
        rhs[0] = 1.0;
        rhs[n - 1] += 1e-5;
        let mut g = DMatrix::<f64>::zeros(n, n);
        for &(i, j, v) in &triplets {
            g[(i, j)] += v;
        }
        let dense = Factor::Dense(g.cholesky().unwrap()).solve_refined(&triplets, &rhs).unwrap();
        let sparse = Factor::new(n, &triplets).unwrap().solve_refined(&triplets, &rhs).unwrap();
        for k in 0..n {
            assert!((dense[k] - sparse[k]).abs() < 1e-12, "node {k}");
            assert!((sol.voltage(k + 2) - sparse[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_solved_two_by_two_with_wires() {
        // 2x2 array, 1 Ohm wire segments, rows at (0.2, 0) V, all cells 1 kOhm.
        let mut cfg = CrossbarConfig::paper_linear(2, 2);
        cfg.wire_res_per_segment = 1.0;
        let w = WeightGrid::uniform(2, 2, 1e3).unwrap();
        let res = mna_solve(&cfg, &w, &[0.2, 0.0], &[]).unwrap();
        assert!(res.max_kcl_residual() < 1e-12);
        let total: f64 = res.readout.currents.iter().sum();
        // Current leaving the driver equals the current entering both senses
        // (row 1 is grounded and returns some current through its driver).
        let drv0 = res.voltage(CrossbarNode::Driver { row: 0 }).unwrap();
        assert_eq!(drv0, 0.2);
        assert!(total > 0.0 && total < 2.0 * 0.2 / 1e3);
    }
}
