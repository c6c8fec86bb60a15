//! Exhaustive enumeration oracle for small instances.
//!
//! Everything here deliberately walks all `2^n` labelings; it is the ground
//! truth the solver is tested against, so it stays free of clever pruning.
//! With the `parallel` feature the index range is split into blocks and
//! reduced with an order-independent merge, so results match the sequential
//! scan bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSet;
use crate::energy::{Labeling, PairwiseEnergy};
use crate::{Error, Result};

/// Exhaustive minimizer with a variable-count cap (default 20, about a
/// million labelings).
#[derive(Clone, Copy, Debug)]
pub struct BruteForce {
    cap: usize,
}

impl Default for BruteForce {
    fn default() -> Self {
        BruteForce { cap: 20 }
    }
}

/// Outcome of an exhaustive constrained minimization.
#[derive(Clone, Debug)]
pub enum ConstrainedMin {
    Optimal { labeling: Labeling, value: f64 },
    Infeasible,
}

/// Per-statistic-level table over all labelings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnumerationReport {
    /// One entry per achievable statistic vector; `None` components mark
    /// undefined ratio statistics (all-zero labeling).
    pub levels: Vec<LevelEntry>,
    pub global_min: f64,
    pub global_argmin: String,
    /// Exhaustive constrained optimum for the set's own bounds.
    pub constrained: Option<ConstrainedEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelEntry {
    pub stats: Vec<Option<f64>>,
    pub min_energy: f64,
    pub argmin: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstrainedEntry {
    pub min_energy: f64,
    pub argmin: String,
}

/// Result of checking the dual's optimality certificate against enumeration.
#[derive(Clone, Debug)]
pub struct CertificateCheck {
    /// True when no labeling with the same effective statistics has lower energy.
    pub holds: bool,
    /// Number of labelings sharing the effective statistics.
    pub class_size: u64,
    pub class_min_energy: f64,
    /// A strictly better labeling in the class, when the certificate fails.
    pub witness: Option<Labeling>,
}

impl BruteForce {
    pub fn new() -> Self {
        BruteForce::default()
    }

    pub fn with_cap(cap: usize) -> Self {
        BruteForce { cap }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    fn check_cap(&self, energy: &PairwiseEnergy) -> Result<u64> {
        let n = energy.num_vars();
        if n > self.cap {
            return Err(Error::EnumerationCap { vars: n, cap: self.cap });
        }
        Ok(1u64 << n)
    }

    /// Exact global minimum by full enumeration, breaking ties toward the
    /// lexicographically smallest labeling.
    pub fn brute_min(&self, energy: &PairwiseEnergy) -> Result<(Labeling, f64)> {
        let total = self.check_cap(energy)?;
        let best = scan(
            total,
            energy.num_vars(),
            Best::identity,
            |best, idx, x| {
                let value = energy.evaluate(x).expect("length fixed by scan");
                best.offer(value, idx);
            },
            Best::merge,
        );
        Ok(best.into_pair(energy.num_vars()))
    }

    /// Sequential twin of [`BruteForce::brute_min`]; the reference the
    /// parallel scan is compared against.
    pub fn brute_min_serial(&self, energy: &PairwiseEnergy) -> Result<(Labeling, f64)> {
        let total = self.check_cap(energy)?;
        let mut best = Best::identity();
        let mut x = Labeling::zeros(energy.num_vars());
        for idx in 0..total {
            x.assign_index(idx);
            best.offer(energy.evaluate(&x).unwrap(), idx);
        }
        Ok(best.into_pair(energy.num_vars()))
    }

    /// Exact constrained optimum over `{0,1}^n` under the set's original
    /// bounds, or `Infeasible` when no labeling satisfies them all.
    pub fn brute_constrained_min(
        &self,
        energy: &PairwiseEnergy,
        set: &ConstraintSet,
    ) -> Result<ConstrainedMin> {
        let total = self.check_cap(energy)?;
        let best = scan(
            total,
            energy.num_vars(),
            Best::identity,
            |best, idx, x| {
                let feasible = set
                    .satisfied(x, energy)
                    .expect("dimensions fixed by scan")
                    .iter()
                    .all(|&ok| ok);
                if feasible {
                    best.offer(energy.evaluate(x).unwrap(), idx);
                }
            },
            Best::merge,
        );
        Ok(match best.index {
            Some(idx) => ConstrainedMin::Optimal {
                labeling: Labeling::from_index(idx, energy.num_vars()),
                value: best.value,
            },
            None => ConstrainedMin::Infeasible,
        })
    }

    /// Exact dual value `D(lambda) = min_x E(x) + lambda . slopes(x, y*(lambda))`
    /// with the slack resolved from the multiplier signs. Unlike the mincut
    /// oracle this accepts any multiplier, submodular or not.
    pub fn brute_dual(
        &self,
        energy: &PairwiseEnergy,
        set: &ConstraintSet,
        lambda: &[f64],
    ) -> Result<f64> {
        if lambda.len() != set.len() {
            return Err(Error::Dimension {
                expected: set.len(),
                got: lambda.len(),
            });
        }
        let total = self.check_cap(energy)?;
        let slack = set.resolve_slack(lambda);
        let best = scan(
            total,
            energy.num_vars(),
            Best::identity,
            |best, idx, x| {
                let slopes = set.plane_slopes(x, energy, &slack).unwrap();
                let value = energy.evaluate(x).unwrap()
                    + lambda.iter().zip(&slopes).map(|(l, g)| l * g).sum::<f64>();
                best.offer(value, idx);
            },
            Best::merge,
        );
        Ok(best.value)
    }

    /// Tabulates, for every achievable statistic vector, the minimum energy
    /// and one argmin, plus the global and constrained optima.
    pub fn enumerate(
        &self,
        energy: &PairwiseEnergy,
        set: &ConstraintSet,
    ) -> Result<EnumerationReport> {
        let total = self.check_cap(energy)?;
        let n = energy.num_vars();
        let table = scan(
            total,
            n,
            BTreeMap::<Vec<Option<u64>>, (f64, u64)>::new,
            |table, idx, x| {
                let stats = set.statistics(x, energy).unwrap();
                let key = stats.iter().map(|s| s.map(canonical_bits)).collect();
                let value = energy.evaluate(x).unwrap();
                offer_level(table, key, value, idx);
            },
            |mut a, b| {
                for (key, (value, idx)) in b {
                    offer_level(&mut a, key, value, idx);
                }
                a
            },
        );
        let (global, constrained) = {
            let mut global = Best::identity();
            let mut best_feasible = Best::identity();
            for (key, &(value, idx)) in &table {
                global.offer(value, idx);
                let stats: Vec<Option<f64>> =
                    key.iter().map(|s| s.map(f64::from_bits)).collect();
                let feasible = set.iter().zip(&stats).all(|(c, stat)| match stat {
                    Some(h) => {
                        let (lo, hi) = c.bounds();
                        let tol = 1e-9 * (1.0 + lo.abs() + hi.abs());
                        *h >= lo - tol && *h <= hi + tol
                    }
                    None => false,
                });
                if feasible {
                    best_feasible.offer(value, idx);
                }
            }
            (global, best_feasible)
        };
        // Per-level argmins found by the grouped scan are minimal within the
        // level, but the stored index is the argmin's enumeration index.
        let levels = table
            .iter()
            .map(|(key, &(value, idx))| LevelEntry {
                stats: key.iter().map(|s| s.map(f64::from_bits)).collect(),
                min_energy: value,
                argmin: Labeling::from_index(idx, n).bit_string(),
            })
            .collect();
        Ok(EnumerationReport {
            levels,
            global_min: global.value,
            global_argmin: Labeling::from_index(global.index.unwrap_or(0), n).bit_string(),
            constrained: constrained.index.map(|idx| ConstrainedEntry {
                min_energy: constrained.value,
                argmin: Labeling::from_index(idx, n).bit_string(),
            }),
        })
    }

    /// Confirms the optimality certificate of a solution: among all labelings
    /// whose Lagrangian slopes (with the solution's own resolved slack) match
    /// the solution's, none has strictly lower energy.
    ///
    /// When the set contains ratio constraints the all-zero labeling carries
    /// no finite statistic; it only matches itself.
    pub fn check_certificate(
        &self,
        energy: &PairwiseEnergy,
        set: &ConstraintSet,
        solution: &Labeling,
        slack: &[f64],
    ) -> Result<CertificateCheck> {
        let total = self.check_cap(energy)?;
        let target = set.plane_slopes(solution, energy, slack)?;
        let target_energy = energy.evaluate(solution)?;
        let has_ratio = set
            .iter()
            .any(|c| c.kind() == crate::constraints::ConstraintKind::Ratio);
        let solution_is_zero = solution.count_ones() == 0;
        let best = scan(
            total,
            energy.num_vars(),
            Best::identity,
            |best, idx, x| {
                if has_ratio && (x.count_ones() == 0) != solution_is_zero {
                    return;
                }
                let slopes = set.plane_slopes(x, energy, slack).unwrap();
                let matches = slopes
                    .iter()
                    .zip(&target)
                    .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b.abs()));
                if matches {
                    best.offer(energy.evaluate(x).unwrap(), idx);
                }
            },
            Best::merge,
        );
        let count = best.count;
        let class_min = best.value;
        let holds = target_energy <= class_min + 1e-9 * (1.0 + class_min.abs());
        let witness = if holds {
            None
        } else {
            best.index
                .map(|idx| Labeling::from_index(idx, energy.num_vars()))
        };
        Ok(CertificateCheck {
            holds,
            class_size: count,
            class_min_energy: class_min,
            witness,
        })
    }
}

/// Normalizes -0.0 to 0.0 before keying statistics by bit pattern.
fn canonical_bits(v: f64) -> u64 {
    if v == 0.0 {
        0.0f64.to_bits()
    } else {
        v.to_bits()
    }
}

fn offer_level(
    table: &mut BTreeMap<Vec<Option<u64>>, (f64, u64)>,
    key: Vec<Option<u64>>,
    value: f64,
    idx: u64,
) {
    table
        .entry(key)
        .and_modify(|(best, best_idx)| {
            if value < *best || (value == *best && idx < *best_idx) {
                *best = value;
                *best_idx = idx;
            }
        })
        .or_insert((value, idx));
}

/// Minimum tracker whose merge is associative and tie-breaks on the smaller
/// enumeration index, so parallel splits reproduce the sequential result.
struct Best {
    value: f64,
    index: Option<u64>,
    count: u64,
}

impl Best {
    fn identity() -> Self {
        Best {
            value: f64::INFINITY,
            index: None,
            count: 0,
        }
    }

    fn offer(&mut self, value: f64, idx: u64) {
        self.count += 1;
        match self.index {
            None => {
                self.value = value;
                self.index = Some(idx);
            }
            Some(current) => {
                if value < self.value || (value == self.value && idx < current) {
                    self.value = value;
                    self.index = Some(idx);
                }
            }
        }
    }

    fn merge(a: Best, b: Best) -> Best {
        let count = a.count + b.count;
        let mut out = match (a.index, b.index) {
            (None, _) => b,
            (_, None) => a,
            (Some(ia), Some(ib)) => {
                if a.value < b.value || (a.value == b.value && ia < ib) {
                    a
                } else {
                    b
                }
            }
        };
        out.count = count;
        out
    }

    fn into_pair(self, n: usize) -> (Labeling, f64) {
        let idx = self.index.unwrap_or(0);
        (Labeling::from_index(idx, n), self.value)
    }
}

/// Folds `fold` over all labeling indices `0..total` and merges the per-block
/// results. The merge must be associative and order-independent.
fn scan<T, Fold, Merge>(total: u64, n: usize, init: impl Fn() -> T + Sync, fold: Fold, merge: Merge) -> T
where
    T: Send,
    Fold: Fn(&mut T, u64, &Labeling) + Sync,
    Merge: Fn(T, T) -> T + Sync + Send,
{
    let block = scan_block_size(total);
    let blocks: Vec<(u64, u64)> = (0..total)
        .step_by(block as usize)
        .map(|start| (start, (start + block).min(total)))
        .collect();
    run_blocks(blocks, n, &init, &fold, &merge)
}

fn scan_block_size(total: u64) -> u64 {
    // Enough blocks to keep every core busy without drowning in merges.
    (total / 256).max(1024).min(total.max(1))
}

#[cfg(feature = "parallel")]
fn run_blocks<T, Fold, Merge>(
    blocks: Vec<(u64, u64)>,
    n: usize,
    init: &(impl Fn() -> T + Sync),
    fold: &Fold,
    merge: &Merge,
) -> T
where
    T: Send,
    Fold: Fn(&mut T, u64, &Labeling) + Sync,
    Merge: Fn(T, T) -> T + Sync + Send,
{
    use rayon::prelude::*;
    blocks
        .into_par_iter()
        .map(|(start, end)| scan_range(start, end, n, init(), fold))
        .reduce_with(|a, b| merge(a, b))
        .unwrap_or_else(init)
}

#[cfg(not(feature = "parallel"))]
fn run_blocks<T, Fold, Merge>(
    blocks: Vec<(u64, u64)>,
    n: usize,
    init: &(impl Fn() -> T + Sync),
    fold: &Fold,
    merge: &Merge,
) -> T
where
    T: Send,
    Fold: Fn(&mut T, u64, &Labeling) + Sync,
    Merge: Fn(T, T) -> T + Sync + Send,
{
    blocks
        .into_iter()
        .map(|(start, end)| scan_range(start, end, n, init(), fold))
        .reduce(|a, b| merge(a, b))
        .unwrap_or_else(init)
}

fn scan_range<T>(
    start: u64,
    end: u64,
    n: usize,
    mut acc: T,
    fold: &(impl Fn(&mut T, u64, &Labeling) + Sync),
) -> T {
    let mut x = Labeling::zeros(n);
    for idx in start..end {
        x.assign_index(idx);
        fold(&mut acc, idx, &x);
    }
    acc
}
