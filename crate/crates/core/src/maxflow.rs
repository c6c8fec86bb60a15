//! Exact minimization of submodular pairwise energies via st-mincut.
//!
//! The reduction absorbs `sum_i min(phi_i(0), phi_i(1))` into a tracked
//! constant and encodes the rest as terminal capacities plus symmetric
//! neighbor arcs. Max flow is computed with augmenting paths grown from two
//! search trees that are repaired after each augmentation rather than
//! rebuilt, in the style of Boykov and Kolmogorov. Each solve builds its own
//! network; there is no shared state between solves.

use std::collections::VecDeque;
use std::io::Write;

use crate::constraints::ConstraintSet;
use crate::dual::CutSample;
use crate::energy::{Labeling, PairwiseEnergy};
use crate::{Error, Result};

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;

const FREE: u8 = 0;
const SOURCE: u8 = 1;
const SINK: u8 = 2;

/// Residual st-network of one energy minimization.
///
/// Single-use: build with [`FlowNetwork::from_energy`], run
/// [`FlowNetwork::max_flow`] once, then read the cut.
pub struct FlowNetwork {
    num_nodes: usize,
    first_arc: Vec<u32>,
    arc_head: Vec<u32>,
    arc_next: Vec<u32>,
    residual: Vec<f64>,
    /// Merged terminal arc per node: positive values are residual capacity
    /// from the source, negative values residual capacity to the sink.
    terminal: Vec<f64>,
    constant: f64,
    parent: Vec<u32>,
    tree: Vec<u8>,
    ts: Vec<u64>,
    dist: Vec<u32>,
    active: VecDeque<u32>,
    in_queue: Vec<bool>,
    orphans: VecDeque<u32>,
    time: u64,
    flow: f64,
}

impl FlowNetwork {
    /// Builds the st-network of `energy`. The min-cut value equals
    /// `min_x E(x) - constant()`.
    pub fn from_energy(energy: &PairwiseEnergy) -> Result<Self> {
        let n = energy.num_vars();
        let mut first_arc = vec![NONE; n];
        let arc_count = 2 * energy.edges().len();
        let mut arc_head = Vec::with_capacity(arc_count);
        let mut arc_next = Vec::with_capacity(arc_count);
        let mut residual = Vec::with_capacity(arc_count);
        for edge in energy.edges() {
            if edge.weight < 0.0 {
                return Err(Error::Submodularity(format!(
                    "edge ({}, {}) has negative weight {}",
                    edge.i, edge.j, edge.weight
                )));
            }
            let a = arc_head.len() as u32;
            arc_head.push(edge.j);
            arc_next.push(first_arc[edge.i as usize]);
            residual.push(edge.weight);
            first_arc[edge.i as usize] = a;

            arc_head.push(edge.i);
            arc_next.push(first_arc[edge.j as usize]);
            residual.push(edge.weight);
            first_arc[edge.j as usize] = a + 1;
        }
        let mut terminal = Vec::with_capacity(n);
        let mut constant = 0.0;
        for &(phi0, phi1) in energy.unary() {
            terminal.push(phi0 - phi1);
            constant += phi0.min(phi1);
        }
        Ok(FlowNetwork {
            num_nodes: n,
            first_arc,
            arc_head,
            arc_next,
            residual,
            terminal,
            constant,
            parent: vec![NONE; n],
            tree: vec![FREE; n],
            ts: vec![0; n],
            dist: vec![0; n],
            active: VecDeque::new(),
            in_queue: vec![false; n],
            orphans: VecDeque::new(),
            time: 0,
            flow: 0.0,
        })
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn flow(&self) -> f64 {
        self.flow
    }

    fn sister(arc: u32) -> u32 {
        arc ^ 1
    }

    fn push_active(&mut self, i: u32) {
        if !self.in_queue[i as usize] {
            self.in_queue[i as usize] = true;
            self.active.push_back(i);
        }
    }

    fn pop_active(&mut self) -> Option<u32> {
        let i = self.active.pop_front()?;
        self.in_queue[i as usize] = false;
        Some(i)
    }

    fn make_orphan(&mut self, i: u32) {
        self.parent[i as usize] = ORPHAN;
        self.orphans.push_back(i);
    }

    /// Computes the maximum flow and returns its value.
    pub fn max_flow(&mut self) -> f64 {
        for i in 0..self.num_nodes {
            let t = self.terminal[i];
            if t > 0.0 {
                self.tree[i] = SOURCE;
                self.parent[i] = TERMINAL;
                self.dist[i] = 1;
                self.push_active(i as u32);
            } else if t < 0.0 {
                self.tree[i] = SINK;
                self.parent[i] = TERMINAL;
                self.dist[i] = 1;
                self.push_active(i as u32);
            }
        }
        while let Some(i) = self.pop_active() {
            if self.tree[i as usize] == FREE {
                continue;
            }
            while let Some(joint) = self.grow(i) {
                self.time += 1;
                self.augment(joint);
                self.adopt();
                if self.tree[i as usize] == FREE {
                    break;
                }
            }
        }
        self.flow
    }

    /// Scans the arcs of `i`, adopting free neighbors into its tree. Returns
    /// an arc that connects the two trees (oriented source side to sink
    /// side), or `None` when the node's frontier is exhausted.
    fn grow(&mut self, i: u32) -> Option<u32> {
        let my_tree = self.tree[i as usize];
        let mut a = self.first_arc[i as usize];
        while a != NONE {
            let res = if my_tree == SOURCE {
                self.residual[a as usize]
            } else {
                self.residual[Self::sister(a) as usize]
            };
            if res > 0.0 {
                let q = self.arc_head[a as usize];
                let q_tree = self.tree[q as usize];
                if q_tree == FREE {
                    self.tree[q as usize] = my_tree;
                    self.parent[q as usize] = Self::sister(a);
                    self.ts[q as usize] = self.ts[i as usize];
                    self.dist[q as usize] = self.dist[i as usize] + 1;
                    self.push_active(q);
                } else if q_tree != my_tree {
                    return Some(if my_tree == SOURCE { a } else { Self::sister(a) });
                }
            }
            a = self.arc_next[a as usize];
        }
        None
    }

    /// Pushes the bottleneck through the path source-tree -> joint -> sink
    /// tree and queues every node whose parent arc saturated.
    fn augment(&mut self, joint: u32) {
        let s_node = self.arc_head[Self::sister(joint) as usize];
        let t_node = self.arc_head[joint as usize];

        let mut bottleneck = self.residual[joint as usize];
        let mut i = s_node;
        loop {
            let p = self.parent[i as usize];
            if p == TERMINAL {
                bottleneck = bottleneck.min(self.terminal[i as usize]);
                break;
            }
            bottleneck = bottleneck.min(self.residual[Self::sister(p) as usize]);
            i = self.arc_head[p as usize];
        }
        let mut i = t_node;
        loop {
            let p = self.parent[i as usize];
            if p == TERMINAL {
                bottleneck = bottleneck.min(-self.terminal[i as usize]);
                break;
            }
            bottleneck = bottleneck.min(self.residual[p as usize]);
            i = self.arc_head[p as usize];
        }
        debug_assert!(bottleneck > 0.0);

        self.residual[joint as usize] -= bottleneck;
        self.residual[Self::sister(joint) as usize] += bottleneck;

        let mut i = s_node;
        loop {
            let p = self.parent[i as usize];
            if p == TERMINAL {
                self.terminal[i as usize] -= bottleneck;
                if self.terminal[i as usize] <= 0.0 {
                    self.make_orphan(i);
                }
                break;
            }
            self.residual[p as usize] += bottleneck;
            let carrying = Self::sister(p) as usize;
            self.residual[carrying] -= bottleneck;
            if self.residual[carrying] <= 0.0 {
                self.make_orphan(i);
            }
            i = self.arc_head[p as usize];
        }
        let mut i = t_node;
        loop {
            let p = self.parent[i as usize];
            if p == TERMINAL {
                self.terminal[i as usize] += bottleneck;
                if self.terminal[i as usize] >= 0.0 {
                    self.make_orphan(i);
                }
                break;
            }
            self.residual[Self::sister(p) as usize] += bottleneck;
            self.residual[p as usize] -= bottleneck;
            if self.residual[p as usize] <= 0.0 {
                self.make_orphan(i);
            }
            i = self.arc_head[p as usize];
        }
        self.flow += bottleneck;
    }

    fn adopt(&mut self) {
        while let Some(i) = self.orphans.pop_front() {
            self.process_orphan(i);
        }
    }

    /// Reattaches an orphan to the closest valid parent in its own tree, or
    /// frees it and reactivates its neighborhood.
    fn process_orphan(&mut self, i: u32) {
        let my_tree = self.tree[i as usize];
        let mut best_arc = NONE;
        let mut best_dist = u32::MAX;
        let mut a = self.first_arc[i as usize];
        while a != NONE {
            let res = if my_tree == SOURCE {
                self.residual[Self::sister(a) as usize]
            } else {
                self.residual[a as usize]
            };
            if res > 0.0 {
                let q = self.arc_head[a as usize];
                if self.tree[q as usize] == my_tree {
                    if let Some(d) = self.root_distance(q) {
                        if d < best_dist {
                            best_dist = d;
                            best_arc = a;
                        }
                    }
                }
            }
            a = self.arc_next[a as usize];
        }
        if best_arc != NONE {
            self.parent[i as usize] = best_arc;
            self.ts[i as usize] = self.time;
            self.dist[i as usize] = best_dist + 1;
            return;
        }
        let mut a = self.first_arc[i as usize];
        while a != NONE {
            let q = self.arc_head[a as usize];
            if self.tree[q as usize] == my_tree {
                let res = if my_tree == SOURCE {
                    self.residual[Self::sister(a) as usize]
                } else {
                    self.residual[a as usize]
                };
                if res > 0.0 {
                    self.push_active(q);
                }
                let qp = self.parent[q as usize];
                if qp != NONE && qp != TERMINAL && qp != ORPHAN && self.arc_head[qp as usize] == i {
                    self.make_orphan(q);
                }
            }
            a = self.arc_next[a as usize];
        }
        self.tree[i as usize] = FREE;
        self.parent[i as usize] = NONE;
    }

    /// Length of the parent chain from `q` to its terminal, or `None` when
    /// the chain dead-ends in an orphan. Walked nodes are stamped with the
    /// current time so repeated checks short-circuit.
    fn root_distance(&mut self, q: u32) -> Option<u32> {
        let mut d = 0u32;
        let mut j = q;
        loop {
            if self.ts[j as usize] == self.time {
                d += self.dist[j as usize];
                break;
            }
            let p = self.parent[j as usize];
            if p == TERMINAL {
                d += 1;
                break;
            }
            if p == ORPHAN || p == NONE {
                return None;
            }
            d += 1;
            j = self.arc_head[p as usize];
        }
        let total = d;
        let mut j = q;
        let mut remaining = total;
        loop {
            if self.ts[j as usize] == self.time {
                break;
            }
            self.ts[j as usize] = self.time;
            self.dist[j as usize] = remaining;
            let p = self.parent[j as usize];
            if p == TERMINAL {
                break;
            }
            remaining -= 1;
            j = self.arc_head[p as usize];
        }
        Some(total)
    }

    /// Nodes reachable from the source in the residual graph; the minimum
    /// cut assigns them label 1 and everything else (including nodes reached
    /// from neither terminal) label 0.
    pub fn source_side(&self) -> Labeling {
        let mut visited = vec![false; self.num_nodes];
        let mut queue = VecDeque::new();
        for (i, &t) in self.terminal.iter().enumerate() {
            if t > 0.0 {
                visited[i] = true;
                queue.push_back(i as u32);
            }
        }
        while let Some(i) = queue.pop_front() {
            let mut a = self.first_arc[i as usize];
            while a != NONE {
                if self.residual[a as usize] > 0.0 {
                    let q = self.arc_head[a as usize] as usize;
                    if !visited[q] {
                        visited[q] = true;
                        queue.push_back(q as u32);
                    }
                }
                a = self.arc_next[a as usize];
            }
        }
        Labeling::new(visited)
    }

    /// Debug dump of the residual network in a DIMACS-like text form.
    pub fn dump_dimacs(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "p max {} {}",
            self.num_nodes + 2,
            self.arc_head.len() + self.num_nodes
        )?;
        for (i, &t) in self.terminal.iter().enumerate() {
            if t > 0.0 {
                writeln!(out, "a s {} {}", i, t)?;
            } else if t < 0.0 {
                writeln!(out, "a {} t {}", i, -t)?;
            }
        }
        for (a, &head) in self.arc_head.iter().enumerate() {
            let tail = self.arc_head[Self::sister(a as u32) as usize];
            writeln!(out, "a {} {} {}", tail, head, self.residual[a])?;
        }
        Ok(())
    }
}

/// Exactly minimizes a submodular pairwise energy.
///
/// Returns a minimizing labeling and its energy. Ties between minimizers are
/// broken deterministically: label 1 goes to exactly the nodes reachable from
/// the source in the final residual graph. Negative pairwise weights are
/// rejected, never clamped (they cannot arise through [`PairwiseEnergy`]'s
/// constructors, but the reduction re-checks).
pub fn minimize(energy: &PairwiseEnergy) -> Result<(Labeling, f64)> {
    let mut network = FlowNetwork::from_energy(energy)?;
    let flow = network.max_flow();
    let labeling = network.source_side();
    let value = energy.evaluate(&labeling)?;
    let cut_value = network.constant() + flow;
    assert!(
        (cut_value - value).abs() <= 1e-6 * (1.0 + value.abs() + flow.abs()),
        "max-flow/min-cut certificate failed: cut {cut_value} vs energy {value}"
    );
    Ok((labeling, value))
}

/// The dual oracle: reparameterizes the energy by the multipliers, minimizes
/// exactly, and packages the result as one hyperplane of the dual.
pub fn minimize_reparameterized(
    energy: &PairwiseEnergy,
    set: &ConstraintSet,
    lambda: &[f64],
) -> Result<CutSample> {
    let search_box = set.search_box(energy)?;
    if !search_box.contains(lambda) {
        return Err(Error::OutOfBox(format!(
            "lambda {lambda:?} outside {:?}",
            search_box.intervals()
        )));
    }
    let (reparam, slack, constant) = set.reparameterize(energy, lambda)?;
    let (labeling, reparam_value) = minimize(&reparam)?;
    let energy_value = energy.evaluate(&labeling)?;
    let stats = set.statistics(&labeling, energy)?;
    let slope = set.plane_slopes(&labeling, energy, &slack)?;
    let lagrangian =
        energy_value + lambda.iter().zip(&slope).map(|(l, g)| l * g).sum::<f64>();
    debug_assert!(
        (reparam_value + constant - lagrangian).abs() <= 1e-6 * (1.0 + lagrangian.abs()),
        "reparameterized minimum {} + {constant} disagrees with Lagrangian {lagrangian}",
        reparam_value
    );
    Ok(CutSample {
        labeling,
        energy_value,
        stats,
        slack,
        slope,
        lagrangian,
        multiplier: lambda.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Constraint;
    use crate::energy::grid_edges;
    use crate::verifier::BruteForce;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_energy(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> PairwiseEnergy {
        let unary = (0..rows * cols)
            .map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
            .collect();
        let edges = grid_edges(cols, rows)
            .into_iter()
            .map(|(i, j)| (i, j, rng.gen_range(0.0..3.0)))
            .collect();
        PairwiseEnergy::new(unary, edges).unwrap()
    }

    #[test]
    fn independent_unaries_prefer_cheaper_label() {
        let e = PairwiseEnergy::new(vec![(0.0, 1.0); 5], vec![]).unwrap();
        let (x, v) = minimize(&e).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(x.bit_string(), "00000");
    }

    #[test]
    fn two_node_instance_enumerated_by_hand() {
        // All four labelings: (0,0)=0, (0,1)=1.5, (1,0)=-1.5, (1,1)=-1.
        let e = PairwiseEnergy::new(vec![(0.0, -2.0), (0.0, 1.0)], vec![(0, 1, 0.5)]).unwrap();
        let (x, v) = minimize(&e).unwrap();
        assert_eq!(x.bit_string(), "10");
        assert_eq!(v, -1.5);
    }

    #[test]
    fn matches_exhaustive_enumeration_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let brute = BruteForce::new();
        for _ in 0..100 {
            let rows = rng.gen_range(1..=4);
            let cols = rng.gen_range(1..=4);
            let e = random_energy(&mut rng, rows, cols);
            let (_, fast) = minimize(&e).unwrap();
            let (_, slow) = brute.brute_min(&e).unwrap();
            assert_eq!(fast.to_bits(), slow.to_bits(), "rows={rows} cols={cols}");
        }
    }

    #[test]
    fn labelings_are_deterministic_across_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let e = random_energy(&mut rng, 3, 4);
            let (x1, v1) = minimize(&e).unwrap();
            let (x2, v2) = minimize(&e).unwrap();
            assert_eq!(x1, x2);
            assert_eq!(v1.to_bits(), v2.to_bits());
        }
    }

    #[test]
    fn zero_multiplier_oracle_equals_unconstrained() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let e = random_energy(&mut rng, 3, 3);
        let set = crate::constraints::ConstraintSet::new(vec![
            Constraint::size(9, 2.0, 6.0).unwrap(),
        ])
        .unwrap();
        let sample = minimize_reparameterized(&e, &set, &[0.0]).unwrap();
        let (x, v) = minimize(&e).unwrap();
        assert_eq!(sample.labeling, x);
        assert_eq!(sample.lagrangian.to_bits(), v.to_bits());
        assert_eq!(sample.energy_value.to_bits(), v.to_bits());
    }

    #[test]
    fn huge_size_multiplier_empties_the_labeling() {
        let e = PairwiseEnergy::new(vec![(0.0, -1.0); 4], grid_edges(2, 2)
            .into_iter()
            .map(|(i, j)| (i, j, 0.5))
            .collect())
        .unwrap();
        let set = crate::constraints::ConstraintSet::new(vec![
            Constraint::size(4, 0.0, 2.0)
                .unwrap()
                .with_multiplier_box(-1e7, 1e7)
                .unwrap(),
        ])
        .unwrap();
        let sample = minimize_reparameterized(&e, &set, &[1e6]).unwrap();
        assert_eq!(sample.labeling.bit_string(), "0000");
    }

    #[test]
    fn oracle_lagrangian_matches_brute_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let brute = BruteForce::new();
        for _ in 0..100 {
            let e = random_energy(&mut rng, 3, 3);
            let set = crate::constraints::ConstraintSet::new(vec![
                Constraint::size(9, 2.0, 5.0).unwrap(),
            ])
            .unwrap();
            let lambda = [rng.gen_range(-3.0..3.0)];
            let sample = minimize_reparameterized(&e, &set, &lambda).unwrap();
            let exact = brute.brute_dual(&e, &set, &lambda).unwrap();
            assert!(
                (sample.lagrangian - exact).abs() <= 1e-9 * (1.0 + exact.abs()),
                "oracle {} vs exhaustive {exact}",
                sample.lagrangian
            );
        }
    }

    #[test]
    fn oracle_rejects_multipliers_outside_the_box() {
        let e = PairwiseEnergy::new(
            vec![(0.0, 0.0); 4],
            grid_edges(2, 2).into_iter().map(|(i, j)| (i, j, 1.0)).collect(),
        )
        .unwrap();
        let set = crate::constraints::ConstraintSet::new(vec![
            Constraint::boundary_length(0.0, 4.0).unwrap(),
        ])
        .unwrap();
        assert!(matches!(
            minimize_reparameterized(&e, &set, &[-1.5]),
            Err(Error::OutOfBox(_))
        ));
    }

    #[test]
    fn dimacs_dump_is_parseable_text() {
        let e = PairwiseEnergy::new(vec![(0.0, 1.0), (2.0, 0.0)], vec![(0, 1, 0.5)]).unwrap();
        let net = FlowNetwork::from_energy(&e).unwrap();
        let mut buf = Vec::new();
        net.dump_dimacs(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("p max"));
        assert!(text.lines().count() >= 3);
    }
}
