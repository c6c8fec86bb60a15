//! Statistic constraints on binary labelings.
//!
//! A constraint bounds one statistic `h(x)` to `[lower, upper]` and comes in
//! three kinds:
//! - `LinearSum`: `h(x) = sum_i w_i x_i` (object size, per-tile size);
//! - `BoundaryLength`: `h(x) = sum_(i,j) |x_i - x_j|` over the energy's edges;
//! - `Ratio`: `h(x) = sum_i c_i x_i / sum_i x_i` (coordinate mean, spread
//!   around a fixed center, covariance), reduced to the linear equality
//!   `sum_i (c_i - lower - y) x_i = 0` with slack `y` in `[0, upper - lower]`.
//!
//! Inequalities become equalities through slack variables that the dual
//! resolves in closed form from the sign of the multiplier, so each oracle
//! call only needs an energy reparameterization.

use serde::{Deserialize, Serialize};

use crate::energy::{Edge, Labeling, PairwiseEnergy};
use crate::{Error, Result};

/// Tolerance used when checking bound satisfaction and box membership.
fn bound_tol(lo: f64, hi: f64) -> f64 {
    1e-9 * (1.0 + lo.abs() + hi.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    LinearSum,
    BoundaryLength,
    Ratio,
}

/// One statistic with bounds and a multiplier search interval.
#[derive(Clone, Debug)]
pub struct Constraint {
    name: String,
    kind: ConstraintKind,
    /// LinearSum: per-variable weights. Ratio: numerator coefficients.
    /// BoundaryLength: empty.
    coefficients: Vec<f64>,
    lower: f64,
    upper: f64,
    /// Requested multiplier interval; intersected with the derived default
    /// by [`ConstraintSet::search_box`]. Defaults to all of R.
    multiplier_box: (f64, f64),
}

impl Constraint {
    fn validate_bounds(name: &str, lower: f64, upper: f64) -> Result<()> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidConstraint(format!(
                "{name}: bounds must be finite, got [{lower}, {upper}]"
            )));
        }
        if lower > upper {
            return Err(Error::InvalidConstraint(format!(
                "{name}: lower bound {lower} exceeds upper bound {upper}"
            )));
        }
        Ok(())
    }

    /// Generic weighted-sum constraint `lower <= sum_i w_i x_i <= upper`.
    pub fn linear_sum(
        name: impl Into<String>,
        weights: Vec<f64>,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        let name = name.into();
        Self::validate_bounds(&name, lower, upper)?;
        if let Some(bad) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidConstraint(format!(
                "{name}: non-finite weight {bad}"
            )));
        }
        Ok(Constraint {
            name,
            kind: ConstraintKind::LinearSum,
            coefficients: weights,
            lower,
            upper,
            multiplier_box: (f64::NEG_INFINITY, f64::INFINITY),
        })
    }

    /// Object-size constraint `lower <= sum_i x_i <= upper`.
    pub fn size(num_vars: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::linear_sum("sz", vec![1.0; num_vars], lower, upper)
    }

    /// Boundary-length constraint `lower <= sum_(i,j) |x_i - x_j| <= upper`
    /// counted over the energy's edge set.
    pub fn boundary_length(lower: f64, upper: f64) -> Result<Self> {
        Self::validate_bounds("br", lower, upper)?;
        Ok(Constraint {
            name: "br".into(),
            kind: ConstraintKind::BoundaryLength,
            coefficients: Vec::new(),
            lower,
            upper,
            multiplier_box: (f64::NEG_INFINITY, f64::INFINITY),
        })
    }

    /// Ratio constraint `lower <= sum_i c_i x_i / sum_i x_i <= upper`.
    pub fn ratio(
        name: impl Into<String>,
        numerators: Vec<f64>,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        let name = name.into();
        Self::validate_bounds(&name, lower, upper)?;
        if let Some(bad) = numerators.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidConstraint(format!(
                "{name}: non-finite numerator coefficient {bad}"
            )));
        }
        Ok(Constraint {
            name,
            kind: ConstraintKind::Ratio,
            coefficients: numerators,
            lower,
            upper,
            multiplier_box: (f64::NEG_INFINITY, f64::INFINITY),
        })
    }

    /// Restricts the multiplier search interval for this constraint.
    pub fn with_multiplier_box(mut self, lo: f64, hi: f64) -> Result<Self> {
        if lo > hi || lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidConstraint(format!(
                "{}: invalid multiplier box [{lo}, {hi}]",
                self.name
            )));
        }
        self.multiplier_box = (lo, hi);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn multiplier_box(&self) -> (f64, f64) {
        self.multiplier_box
    }

    /// Slack range `s = upper - lower`; zero for equality constraints.
    pub fn slack_range(&self) -> f64 {
        self.upper - self.lower
    }

    fn check_dims(&self, x: &Labeling) -> Result<()> {
        if self.kind != ConstraintKind::BoundaryLength && self.coefficients.len() != x.len() {
            return Err(Error::Dimension {
                expected: self.coefficients.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Evaluates the statistic `h(x)`.
    ///
    /// A ratio statistic on the all-zero labeling has no value and returns
    /// [`Error::UndefinedStatistic`]; callers treat it as unsatisfiable.
    pub fn statistic(&self, x: &Labeling, energy: &PairwiseEnergy) -> Result<f64> {
        self.check_dims(x)?;
        match self.kind {
            ConstraintKind::LinearSum => Ok(weighted_sum(&self.coefficients, x)),
            ConstraintKind::BoundaryLength => Ok(cut_edge_count(energy.edges(), x) as f64),
            ConstraintKind::Ratio => {
                let ones = x.count_ones();
                if ones == 0 {
                    return Err(Error::UndefinedStatistic(self.name.clone()));
                }
                Ok(weighted_sum(&self.coefficients, x) / ones as f64)
            }
        }
    }

    /// Resolves the slack variable from the sign of the multiplier.
    ///
    /// For sum-form constraints (`h(x) + y = upper`) the slack multiplies
    /// `+lambda`, so `y = 0` for `lambda > 0` and `y = s` for `lambda < 0`.
    /// For ratio constraints the slack enters through `-(lower + y) sum x_i`,
    /// flipping the rule: `y = s` for `lambda > 0` and `y = 0` for
    /// `lambda < 0`. At `lambda = 0` any value is optimal; both rules pin a
    /// fixed choice so hyperplanes stay deterministic.
    pub fn resolve_slack(&self, lambda: f64) -> f64 {
        let s = self.slack_range();
        match self.kind {
            ConstraintKind::LinearSum | ConstraintKind::BoundaryLength => {
                if lambda < 0.0 {
                    s
                } else {
                    0.0
                }
            }
            ConstraintKind::Ratio => {
                if lambda > 0.0 {
                    s
                } else {
                    0.0
                }
            }
        }
    }

    /// Gradient of the Lagrangian term in the multiplier: the value `g` such
    /// that this constraint contributes `lambda * g` to `L(x, lambda)` once
    /// the slack is fixed at `y`.
    ///
    /// Sums are assembled in a canonical order (weighted sum first, then one
    /// multiply and subtract) so labelings with identical integer-valued
    /// partial sums produce bit-identical slopes.
    pub fn plane_slope(&self, x: &Labeling, energy: &PairwiseEnergy, y: f64) -> Result<f64> {
        self.check_dims(x)?;
        match self.kind {
            ConstraintKind::LinearSum => Ok(weighted_sum(&self.coefficients, x) + y - self.upper),
            ConstraintKind::BoundaryLength => {
                Ok(cut_edge_count(energy.edges(), x) as f64 + y - self.upper)
            }
            ConstraintKind::Ratio => {
                let ones = x.count_ones() as f64;
                Ok(weighted_sum(&self.coefficients, x) - (self.lower + y) * ones)
            }
        }
    }

    /// The target the effective statistic is measured against: `upper` for
    /// sum-form constraints (whose equality form is `h(x) + y = upper`), zero
    /// for the ratio's transformed equality.
    pub fn effective_target(&self) -> f64 {
        match self.kind {
            ConstraintKind::LinearSum | ConstraintKind::BoundaryLength => self.upper,
            ConstraintKind::Ratio => 0.0,
        }
    }

    /// Whether `h(x)` lies in `[lower, upper]`; undefined ratio statistics
    /// count as unsatisfied.
    pub fn is_satisfied(&self, x: &Labeling, energy: &PairwiseEnergy) -> Result<bool> {
        match self.statistic(x, energy) {
            Ok(h) => {
                let tol = bound_tol(self.lower, self.upper);
                Ok(h >= self.lower - tol && h <= self.upper + tol)
            }
            Err(Error::UndefinedStatistic(_)) => Ok(false),
            Err(e) => Err(e),
        }
    }
}

fn weighted_sum(weights: &[f64], x: &Labeling) -> f64 {
    weights
        .iter()
        .enumerate()
        .filter(|(i, _)| x.get(*i))
        .map(|(_, w)| w)
        .sum()
}

fn cut_edge_count(edges: &[Edge], x: &Labeling) -> usize {
    edges
        .iter()
        .filter(|e| x.get(e.i as usize) != x.get(e.j as usize))
        .count()
}

/// Per-constraint resolved slack values `y_i` in `[0, s_i]`.
pub type SlackResolution = Vec<f64>;

/// The multiplier search region `S`, a product of per-constraint intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    intervals: Vec<(f64, f64)>,
}

impl SearchBox {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &intervals {
            if lo > hi || lo.is_nan() || hi.is_nan() {
                return Err(Error::InvalidConstraint(format!(
                    "empty multiplier box [{lo}, {hi}]"
                )));
            }
        }
        Ok(SearchBox { intervals })
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        self.intervals[i]
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        lambda.len() == self.intervals.len()
            && lambda.iter().zip(&self.intervals).all(|(l, &(lo, hi))| {
                let tol = bound_tol(lo, hi);
                *l >= lo - tol && *l <= hi + tol
            })
    }

    /// Projects a point onto the box, coordinate by coordinate.
    pub fn clamp(&self, lambda: &[f64]) -> Vec<f64> {
        lambda
            .iter()
            .zip(&self.intervals)
            .map(|(l, &(lo, hi))| l.max(lo).min(hi))
            .collect()
    }
}

/// An ordered list of constraints sharing one multiplier vector.
#[derive(Clone, Debug, Default)]
pub struct ConstraintSet {
    constraints: Vec<Constraint>,
}

impl ConstraintSet {
    /// At most one boundary-length constraint is supported: several would
    /// stack pairwise offsets and the per-constraint truncation could no
    /// longer guarantee submodularity of the joint reparameterization.
    pub fn new(constraints: Vec<Constraint>) -> Result<Self> {
        let boundary = constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::BoundaryLength)
            .count();
        if boundary > 1 {
            return Err(Error::InvalidConstraint(
                "at most one boundary-length constraint is supported".into(),
            ));
        }
        Ok(ConstraintSet { constraints })
    }

    pub fn empty() -> Self {
        ConstraintSet::default()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Constraint> {
        self.constraints.iter()
    }

    pub fn get(&self, i: usize) -> &Constraint {
        &self.constraints[i]
    }

    pub fn names(&self) -> Vec<String> {
        self.constraints.iter().map(|c| c.name.clone()).collect()
    }

    /// All statistics of `x`; `None` marks an undefined ratio statistic.
    pub fn statistics(&self, x: &Labeling, energy: &PairwiseEnergy) -> Result<Vec<Option<f64>>> {
        self.constraints
            .iter()
            .map(|c| match c.statistic(x, energy) {
                Ok(h) => Ok(Some(h)),
                Err(Error::UndefinedStatistic(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    }

    pub fn resolve_slack(&self, lambda: &[f64]) -> SlackResolution {
        self.constraints
            .iter()
            .zip(lambda)
            .map(|(c, &l)| c.resolve_slack(l))
            .collect()
    }

    pub fn plane_slopes(
        &self,
        x: &Labeling,
        energy: &PairwiseEnergy,
        slack: &[f64],
    ) -> Result<Vec<f64>> {
        self.constraints
            .iter()
            .zip(slack)
            .map(|(c, &y)| c.plane_slope(x, energy, y))
            .collect()
    }

    pub fn satisfied(&self, x: &Labeling, energy: &PairwiseEnergy) -> Result<Vec<bool>> {
        self.constraints
            .iter()
            .map(|c| c.is_satisfied(x, energy))
            .collect()
    }

    /// Builds the reparameterized energy `E_lambda` with resolved slack and
    /// the additive constant such that for every labeling
    /// `evaluate(E_lambda, x) + constant = E(x) + lambda . slopes(x, y)`.
    pub fn reparameterize(
        &self,
        energy: &PairwiseEnergy,
        lambda: &[f64],
    ) -> Result<(PairwiseEnergy, SlackResolution, f64)> {
        if lambda.len() != self.constraints.len() {
            return Err(Error::Dimension {
                expected: self.constraints.len(),
                got: lambda.len(),
            });
        }
        let slack = self.resolve_slack(lambda);
        let n = energy.num_vars();
        let mut deltas = vec![0.0; n];
        let mut pair_offset = 0.0;
        let mut constant = 0.0;
        for ((c, &l), &y) in self.constraints.iter().zip(lambda).zip(&slack) {
            match c.kind {
                ConstraintKind::LinearSum => {
                    if c.coefficients.len() != n {
                        return Err(Error::Dimension {
                            expected: n,
                            got: c.coefficients.len(),
                        });
                    }
                    for (d, w) in deltas.iter_mut().zip(&c.coefficients) {
                        *d += l * w;
                    }
                    constant += l * (y - c.upper);
                }
                ConstraintKind::BoundaryLength => {
                    pair_offset += l;
                    constant += l * (y - c.upper);
                }
                ConstraintKind::Ratio => {
                    if c.coefficients.len() != n {
                        return Err(Error::Dimension {
                            expected: n,
                            got: c.coefficients.len(),
                        });
                    }
                    let shift = c.lower + y;
                    for (d, coef) in deltas.iter_mut().zip(&c.coefficients) {
                        *d += l * (coef - shift);
                    }
                }
            }
        }
        let mut reparam = energy.add_unary_offsets(&deltas)?;
        if pair_offset != 0.0 {
            reparam = reparam.add_pairwise_offset(pair_offset)?;
        }
        Ok((reparam, slack, constant))
    }

    /// The default multiplier search box for this set on `energy`.
    ///
    /// Linear and ratio constraints get `[-M, M]` with `M` scaled to the
    /// energy's magnitude; the boundary-length constraint gets
    /// `[-min_ij C_ij, M]` so every reparameterization stays submodular.
    /// Explicit per-constraint boxes are intersected in.
    pub fn search_box(&self, energy: &PairwiseEnergy) -> Result<SearchBox> {
        let max_unary_gap = energy
            .unary()
            .iter()
            .map(|&(p0, p1)| (p1 - p0).abs())
            .fold(0.0f64, f64::max);
        let mean_edge_weight = if energy.edges().is_empty() {
            0.0
        } else {
            energy.edges().iter().map(|e| e.weight).sum::<f64>() / energy.edges().len() as f64
        };
        let mut magnitude = 10.0 * (max_unary_gap + mean_edge_weight);
        if !(magnitude > 0.0) {
            magnitude = 1.0;
        }
        let mut intervals = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            let base = match c.kind {
                ConstraintKind::LinearSum | ConstraintKind::Ratio => (-magnitude, magnitude),
                ConstraintKind::BoundaryLength => {
                    let min_w = energy.min_pairwise_weight().ok_or_else(|| {
                        Error::InvalidConstraint(format!(
                            "{}: boundary-length constraint on an energy with no edges",
                            c.name
                        ))
                    })?;
                    (-min_w, magnitude)
                }
            };
            let lo = base.0.max(c.multiplier_box.0);
            let hi = base.1.min(c.multiplier_box.1);
            if lo > hi {
                return Err(Error::InvalidConstraint(format!(
                    "{}: multiplier box [{lo}, {hi}] is empty after truncation",
                    c.name
                )));
            }
            intervals.push((lo, hi));
        }
        SearchBox::new(intervals)
    }
}

/// Indicator weights of one tile of an equal `tile_rows x tile_cols` tiling
/// of a `width x height` grid, for per-tile size constraints. Tile `(tr, tc)`
/// covers rows `[tr * height / tile_rows, (tr + 1) * height / tile_rows)` and
/// the analogous column range.
pub fn tile_weights(
    width: usize,
    height: usize,
    tile_rows: usize,
    tile_cols: usize,
    tr: usize,
    tc: usize,
) -> Vec<f64> {
    let r0 = tr * height / tile_rows;
    let r1 = (tr + 1) * height / tile_rows;
    let c0 = tc * width / tile_cols;
    let c1 = (tc + 1) * width / tile_cols;
    let mut weights = vec![0.0; width * height];
    for r in r0..r1 {
        for c in c0..c1 {
            weights[r * width + c] = 1.0;
        }
    }
    weights
}
