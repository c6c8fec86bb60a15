//! Cutting-plane maximization of the Lagrangian dual.
//!
//! Every labeling `x` contributes a hyperplane `z = E(x) + lambda . g(x)` to
//! the dual; the dual itself is the pointwise minimum of those planes, so it
//! is piecewise linear and concave. The loop alternates between maximizing
//! the current plane model over the search box (a small dense LP) and calling
//! the mincut oracle at the maximizer, until the model value meets the oracle
//! value.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintSet, SearchBox, SlackResolution};
use crate::energy::{Labeling, PairwiseEnergy};
use crate::{lp, maxflow, Error, Result};

/// One oracle result: a labeling together with everything needed to replay
/// its hyperplane `z = intercept + lambda . slope`.
#[derive(Clone, Debug)]
pub struct CutSample {
    pub labeling: Labeling,
    /// `E(x)`, also the plane intercept.
    pub energy_value: f64,
    /// Raw statistic per constraint; `None` marks an undefined ratio value.
    pub stats: Vec<Option<f64>>,
    /// Slack resolved at the generating multiplier.
    pub slack: SlackResolution,
    /// Plane gradient per constraint.
    pub slope: Vec<f64>,
    /// `L(x, lambda)` at the generating multiplier.
    pub lagrangian: f64,
    /// The multiplier this sample was generated at.
    pub multiplier: Vec<f64>,
}

impl CutSample {
    pub fn plane_value_at(&self, lambda: &[f64]) -> f64 {
        self.energy_value
            + lambda
                .iter()
                .zip(&self.slope)
                .map(|(l, g)| l * g)
                .sum::<f64>()
    }

    fn matches_plane(&self, other: &CutSample) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
        close(self.energy_value, other.energy_value)
            && self
                .slope
                .iter()
                .zip(&other.slope)
                .all(|(a, b)| close(*a, *b))
    }
}

/// The master program: maximize `z` subject to `z <= intercept_k + lambda . g_k`
/// over all collected planes with `lambda` confined to the search box.
#[derive(Clone, Debug)]
pub struct MasterLp {
    pub planes: Vec<(Vec<f64>, f64)>,
    pub bounds: SearchBox,
}

impl MasterLp {
    fn from_samples(samples: &[CutSample], bounds: &SearchBox) -> Self {
        MasterLp {
            planes: samples
                .iter()
                .map(|s| (s.slope.clone(), s.energy_value))
                .collect(),
            bounds: bounds.clone(),
        }
    }
}

/// Maximizes the master program, breaking objective ties toward the
/// lexicographically smallest multiplier. Returns `(lambda, z)`.
pub fn solve_master(master: &MasterLp) -> Result<(Vec<f64>, f64)> {
    if master.planes.is_empty() {
        return Err(Error::EmptyPlaneSet);
    }
    let m = master.bounds.dim();
    let build = |objective: Vec<f64>, fixed: &[Option<f64>], z_lower: f64| -> lp::LpProblem {
        let mut rows = Vec::with_capacity(master.planes.len());
        let mut rhs = Vec::with_capacity(master.planes.len());
        for (slope, intercept) in &master.planes {
            // z - slope . lambda <= intercept
            let mut row = Vec::with_capacity(m + 1);
            row.extend(slope.iter().map(|g| -g));
            row.push(1.0);
            rows.push(row);
            rhs.push(*intercept);
        }
        let mut lower = Vec::with_capacity(m + 1);
        let mut upper = Vec::with_capacity(m + 1);
        for i in 0..m {
            let (lo, hi) = master.bounds.interval(i);
            match fixed[i] {
                Some(v) => {
                    lower.push(v);
                    upper.push(v);
                }
                None => {
                    lower.push(lo);
                    upper.push(hi);
                }
            }
        }
        lower.push(z_lower);
        upper.push(f64::INFINITY);
        lp::LpProblem {
            objective,
            rows,
            rhs,
            lower,
            upper,
        }
    };

    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let free = vec![None; m];
    let first = lp::solve(&build(objective, &free, f64::NEG_INFINITY))
        .map_err(|e| Error::Lp(e.to_string()))?;
    let z_star = first.x[m];
    if m == 0 {
        return Ok((Vec::new(), z_star));
    }

    // Lexicographic refinement on the (slightly relaxed) optimal face.
    let z_floor = z_star - 1e-9 * (1.0 + z_star.abs());
    let mut fixed: Vec<Option<f64>> = vec![None; m];
    for i in 0..m {
        let mut objective = vec![0.0; m + 1];
        objective[i] = -1.0;
        match lp::solve(&build(objective, &fixed, z_floor)) {
            Ok(sol) => fixed[i] = Some(sol.x[i]),
            Err(_) => fixed[i] = Some(first.x[i]),
        }
    }
    let lambda = fixed
        .iter()
        .zip(&first.x)
        .map(|(f, fallback)| f.unwrap_or(*fallback))
        .collect();
    Ok((lambda, z_star))
}

/// Knobs for [`maximize_dual`].
#[derive(Clone, Debug)]
pub struct DualOptions {
    /// Relative gap `z* - L <= tolerance * (1 + |z*|)` that counts as exact.
    pub tolerance: f64,
    /// Plane budget; defaults to `10 * num_vars`, a safety net that normal
    /// runs never reach.
    pub max_iterations: Option<usize>,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            tolerance: 1e-7,
            max_iterations: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// The master value met the oracle value within tolerance.
    Converged,
    /// The oracle returned an already-collected plane while a gap remained.
    NonImproving,
    /// The iteration budget ran out.
    IterationCapped,
}

/// One row of the iteration trace.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub iteration: usize,
    pub multiplier: Vec<f64>,
    pub master_value: f64,
    pub oracle_value: f64,
    pub energy: f64,
    pub stats: Vec<Option<f64>>,
    pub wall_ms: f64,
}

/// Iteration trace of one dual maximization, exportable as CSV.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub constraint_names: Vec<String>,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    fn new(constraint_names: Vec<String>) -> Self {
        Trace {
            constraint_names,
            rows: Vec::new(),
        }
    }

    /// One CSV row per iteration: the multiplier, master value, oracle value,
    /// oracle energy, statistics, and wall-clock milliseconds.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        write!(out, "k")?;
        for name in &self.constraint_names {
            write!(out, ",lambda_{name}")?;
        }
        write!(out, ",z_star,oracle_l,energy")?;
        for name in &self.constraint_names {
            write!(out, ",h_{name}")?;
        }
        writeln!(out, ",wall_ms")?;
        for row in &self.rows {
            write!(out, "{}", row.iteration)?;
            for l in &row.multiplier {
                write!(out, ",{l}")?;
            }
            write!(out, ",{},{},{}", row.master_value, row.oracle_value, row.energy)?;
            for stat in &row.stats {
                match stat {
                    Some(h) => write!(out, ",{h}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out, ",{}", row.wall_ms)?;
        }
        Ok(())
    }
}

/// Accumulated state of one cutting-plane run.
#[derive(Clone, Debug)]
pub struct DualState {
    pub samples: Vec<CutSample>,
    pub search_box: SearchBox,
    pub iterations: usize,
    pub trace: Trace,
    pub tolerance: f64,
}

/// The certificate attached to a solution: the returned labeling has minimum
/// energy among all labelings sharing its effective statistics
/// `b* = H(x*) + y*`. Whether the original bounds are met is reported
/// separately per constraint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateReport {
    pub status: Termination,
    pub iterations: usize,
    /// Final master value `z*`.
    pub dual_value: f64,
    /// Final `z* - L` gap; at or below tolerance when converged.
    pub gap: f64,
    /// Final multiplier `lambda*`.
    pub multiplier: Vec<f64>,
    /// `E(x*)`.
    pub energy: f64,
    pub constraint_names: Vec<String>,
    /// Effective statistic per constraint the optimality holds for.
    pub effective_bounds: Vec<f64>,
    /// Raw statistic of the solution per constraint (`None` = undefined).
    pub achieved: Vec<Option<f64>>,
    /// Slack resolution `y*` the certificate refers to.
    pub slack: Vec<f64>,
    /// Whether each original `[lower, upper]` bound is met.
    pub satisfied: Vec<bool>,
    /// Largest distance from a requested bound interval observed among the
    /// planes active at the dual maximum; the solution's own deviation never
    /// exceeds this.
    pub active_deviation_bound: Vec<f64>,
    /// Multiplier components resting on a non-truncation box edge, a hint
    /// that the default box magnitude was too small.
    pub box_boundary_hit: Vec<bool>,
}

/// A dual maximization outcome: the selected labeling, its certificate, and
/// the full state for inspection.
#[derive(Clone, Debug)]
pub struct DualOutcome {
    pub labeling: Labeling,
    pub certificate: CertificateReport,
    pub state: DualState,
}

/// True dual value at one multiplier via a single oracle call.
pub fn dual_value_at(
    energy: &PairwiseEnergy,
    set: &ConstraintSet,
    lambda: &[f64],
) -> Result<f64> {
    Ok(maxflow::minimize_reparameterized(energy, set, lambda)?.lagrangian)
}

/// Runs the cutting-plane loop from a `lambda = 0` seed until the master and
/// oracle values meet, a duplicate plane shows the model cannot improve, or
/// the iteration budget runs out.
pub fn maximize_dual(
    energy: &PairwiseEnergy,
    set: &ConstraintSet,
    opts: &DualOptions,
) -> Result<DualOutcome> {
    let search_box = set.search_box(energy)?;
    let m = set.len();
    let cap = opts
        .max_iterations
        .unwrap_or_else(|| 10 * energy.num_vars().max(1));
    let start = Instant::now();

    // The seed multiplier is zero, clamped into the box in case explicit
    // multiplier intervals exclude the origin.
    let seed_lambda = search_box.clamp(&vec![0.0; m]);
    let seed = maxflow::minimize_reparameterized(energy, set, &seed_lambda)?;

    let mut state = DualState {
        samples: vec![seed],
        search_box,
        iterations: 0,
        trace: Trace::new(set.names()),
        tolerance: opts.tolerance,
    };

    if set.is_empty() {
        // Unconstrained: the seed oracle call already is the optimum.
        let sample = state.samples[0].clone();
        let z = sample.lagrangian;
        let certificate = build_certificate(
            energy,
            set,
            &state,
            &sample,
            Termination::Converged,
            &seed_lambda,
            z,
            0.0,
        )?;
        return Ok(DualOutcome {
            labeling: sample.labeling,
            certificate,
            state,
        });
    }

    let mut status = Termination::IterationCapped;
    let mut final_lambda = seed_lambda;
    let mut final_z = state.samples[0].lagrangian;
    let mut final_gap = f64::INFINITY;
    let mut previous_z = f64::INFINITY;

    for k in 1..=cap {
        let master = MasterLp::from_samples(&state.samples, &state.search_box);
        let (lambda_star, z_star) = solve_master(&master)?;
        debug_assert!(
            z_star <= previous_z + 1e-9 * (1.0 + z_star.abs()),
            "master value increased: {previous_z} -> {z_star}"
        );
        previous_z = z_star;

        let sample = maxflow::minimize_reparameterized(energy, set, &lambda_star)?;
        let gap = z_star - sample.lagrangian;
        state.iterations = k;
        state.trace.rows.push(TraceRow {
            iteration: k,
            multiplier: lambda_star.clone(),
            master_value: z_star,
            oracle_value: sample.lagrangian,
            energy: sample.energy_value,
            stats: sample.stats.clone(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        final_lambda = lambda_star;
        final_z = z_star;
        final_gap = gap;

        if gap <= opts.tolerance * (1.0 + z_star.abs()) {
            state.samples.push(sample);
            status = Termination::Converged;
            break;
        }
        if state.samples.iter().any(|s| s.matches_plane(&sample)) {
            state.samples.push(sample);
            status = Termination::NonImproving;
            break;
        }
        state.samples.push(sample);
    }

    let chosen = select_solution(set, &state, &final_lambda);
    let sample = state.samples[chosen].clone();
    let certificate = build_certificate(
        energy,
        set,
        &state,
        &sample,
        status,
        &final_lambda,
        final_z,
        final_gap,
    )?;
    Ok(DualOutcome {
        labeling: sample.labeling,
        certificate,
        state,
    })
}

/// Among the samples whose plane is active at the final multiplier, picks the
/// one with the smallest total relative violation of the original bounds;
/// earlier samples win ties.
fn select_solution(set: &ConstraintSet, state: &DualState, lambda: &[f64]) -> usize {
    let values: Vec<f64> = state
        .samples
        .iter()
        .map(|s| s.plane_value_at(lambda))
        .collect();
    let min_value = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let active_tol = 1e-7 * (1.0 + min_value.abs());
    let mut best: Option<(usize, f64)> = None;
    for (idx, s) in state.samples.iter().enumerate() {
        if values[idx] > min_value + active_tol {
            continue;
        }
        let violation = total_relative_violation(set, &s.stats);
        match best {
            Some((_, best_v)) if best_v <= violation => {}
            _ => best = Some((idx, violation)),
        }
    }
    best.map(|(idx, _)| idx).unwrap_or(state.samples.len() - 1)
}

fn interval_distance(value: f64, lo: f64, hi: f64) -> f64 {
    if value < lo {
        lo - value
    } else if value > hi {
        value - hi
    } else {
        0.0
    }
}

fn total_relative_violation(set: &ConstraintSet, stats: &[Option<f64>]) -> f64 {
    set.iter()
        .zip(stats)
        .map(|(c, stat)| {
            let (lo, hi) = c.bounds();
            match stat {
                Some(h) => interval_distance(*h, lo, hi) / (1.0f64).max((lo.abs() + hi.abs()) / 2.0),
                None => 1.0,
            }
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn build_certificate(
    energy: &PairwiseEnergy,
    set: &ConstraintSet,
    state: &DualState,
    sample: &CutSample,
    status: Termination,
    lambda: &[f64],
    dual_value: f64,
    gap: f64,
) -> Result<CertificateReport> {
    let effective_bounds = set
        .iter()
        .zip(&sample.slope)
        .map(|(c, g)| g + c.effective_target())
        .collect();
    let satisfied = set.satisfied(&sample.labeling, energy)?;

    // Deviation bound measured over the planes active at the final multiplier.
    let values: Vec<f64> = state
        .samples
        .iter()
        .map(|s| s.plane_value_at(lambda))
        .collect();
    let min_value = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let active_tol = 1e-7 * (1.0 + min_value.abs());
    let mut active_deviation_bound = vec![0.0; set.len()];
    for (s, value) in state.samples.iter().zip(&values) {
        if *value > min_value + active_tol {
            continue;
        }
        for (i, (c, stat)) in set.iter().zip(&s.stats).enumerate() {
            if let Some(h) = stat {
                let (lo, hi) = c.bounds();
                let d = interval_distance(*h, lo, hi);
                if d > active_deviation_bound[i] {
                    active_deviation_bound[i] = d;
                }
            }
        }
    }

    let box_boundary_hit = set
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (lo, hi) = state.search_box.interval(i);
            let tol = 1e-9 * (1.0 + lo.abs() + hi.abs());
            let at_lower = (lambda[i] - lo).abs() <= tol;
            let at_upper = (lambda[i] - hi).abs() <= tol;
            let truncation_edge =
                c.kind() == crate::constraints::ConstraintKind::BoundaryLength && at_lower;
            (at_lower || at_upper) && !truncation_edge
        })
        .collect();

    Ok(CertificateReport {
        status,
        iterations: state.iterations,
        dual_value,
        gap,
        multiplier: lambda.to_vec(),
        energy: sample.energy_value,
        constraint_names: set.names(),
        effective_bounds,
        achieved: sample.stats.clone(),
        slack: sample.slack.clone(),
        satisfied,
        active_deviation_bound,
        box_boundary_hit,
    })
}
