//! Pairwise binary energies `E(x) = sum_i phi_i(x_i) + sum_(i,j) C_ij |x_i - x_j|`
//! on arbitrary graphs, with a 4-connected grid builder for images.
//!
//! Energies are immutable after construction; reparameterizations return new
//! values. All pairwise weights are non-negative, which keeps every energy
//! exactly minimizable by an st-mincut.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use crate::{Error, Result};

/// A binary assignment `x` in `{0,1}^n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Labeling {
    bits: Vec<bool>,
}

impl Labeling {
    pub fn new(bits: Vec<bool>) -> Self {
        Labeling { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Labeling { bits: vec![false; n] }
    }

    pub fn ones(n: usize) -> Self {
        Labeling { bits: vec![true; n] }
    }

    /// The labeling whose bit string `x_0 x_1 .. x_{n-1}` is the n-digit
    /// binary expansion of `index` with `x_0` as the most significant digit,
    /// so increasing indices enumerate labelings in lexicographic order.
    pub fn from_index(index: u64, n: usize) -> Self {
        let mut bits = vec![false; n];
        Self::fill_from_index(index, &mut bits);
        Labeling { bits }
    }

    pub(crate) fn fill_from_index(index: u64, bits: &mut [bool]) {
        let n = bits.len();
        for (i, bit) in bits.iter_mut().enumerate() {
            *bit = (index >> (n - 1 - i)) & 1 == 1;
        }
    }

    /// In-place variant of [`Labeling::from_index`] for enumeration loops.
    pub(crate) fn assign_index(&mut self, index: u64) {
        Self::fill_from_index(index, &mut self.bits);
    }

    pub fn to_index(&self) -> u64 {
        let n = self.bits.len();
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << (n - 1 - i)))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn hamming(&self, other: &Labeling) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Labeling({})", self.bit_string())
    }
}

/// One pairwise term `C_ij |x_i - x_j|`, stored with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: u32,
    pub j: u32,
    pub weight: f64,
}

/// Unary tables plus non-negative pairwise weights on a graph.
#[derive(Clone, Debug)]
pub struct PairwiseEnergy {
    num_vars: usize,
    unary: Vec<(f64, f64)>,
    edges: Vec<Edge>,
}

impl PairwiseEnergy {
    /// Builds an energy from per-variable `(phi(0), phi(1))` tables and
    /// `(i, j, weight)` edges. Edges are normalized to `i < j`; duplicate or
    /// self-loop edges, out-of-range indices, and negative or non-finite
    /// values are rejected.
    pub fn new(unary: Vec<(f64, f64)>, edges: Vec<(u32, u32, f64)>) -> Result<Self> {
        let n = unary.len();
        for &(a, b) in &unary {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidEnergy(format!(
                    "non-finite unary term ({a}, {b})"
                )));
            }
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (i, j, weight) in edges {
            if i == j {
                return Err(Error::InvalidEnergy(format!("self loop on variable {i}")));
            }
            let (i, j) = if i < j { (i, j) } else { (j, i) };
            if j as usize >= n {
                return Err(Error::InvalidEnergy(format!(
                    "edge ({i}, {j}) exceeds variable count {n}"
                )));
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidEnergy(format!(
                    "edge ({i}, {j}) has invalid weight {weight}"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidEnergy(format!("duplicate edge ({i}, {j})")));
            }
            normalized.push(Edge { i, j, weight });
        }
        Ok(PairwiseEnergy {
            num_vars: n,
            unary,
            edges: normalized,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn unary(&self) -> &[(f64, f64)] {
        &self.unary
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn min_pairwise_weight(&self) -> Option<f64> {
        self.edges
            .iter()
            .map(|e| e.weight)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }

    /// Evaluates `sum_i phi_i(x_i) + sum_(i,j) C_ij |x_i - x_j|`.
    pub fn evaluate(&self, labeling: &Labeling) -> Result<f64> {
        if labeling.len() != self.num_vars {
            return Err(Error::Dimension {
                expected: self.num_vars,
                got: labeling.len(),
            });
        }
        let mut total = 0.0;
        for (i, &(phi0, phi1)) in self.unary.iter().enumerate() {
            total += if labeling.get(i) { phi1 } else { phi0 };
        }
        for edge in &self.edges {
            if labeling.get(edge.i as usize) != labeling.get(edge.j as usize) {
                total += edge.weight;
            }
        }
        Ok(total)
    }

    /// Returns the energy with `deltas_i` added to each `phi_i(1)`, so that
    /// `E'(x) = E(x) + sum_i deltas_i x_i` for every labeling.
    pub fn add_unary_offsets(&self, deltas: &[f64]) -> Result<Self> {
        if deltas.len() != self.num_vars {
            return Err(Error::Dimension {
                expected: self.num_vars,
                got: deltas.len(),
            });
        }
        if let Some(bad) = deltas.iter().find(|d| !d.is_finite()) {
            return Err(Error::InvalidEnergy(format!("non-finite unary offset {bad}")));
        }
        let unary = self
            .unary
            .iter()
            .zip(deltas)
            .map(|(&(phi0, phi1), &d)| (phi0, phi1 + d))
            .collect();
        Ok(PairwiseEnergy {
            num_vars: self.num_vars,
            unary,
            edges: self.edges.clone(),
        })
    }

    /// Returns the energy with every pairwise weight shifted by `offset`, so
    /// that `E'(x) = E(x) + offset * sum_(i,j) |x_i - x_j|`.
    ///
    /// `offset` must be at least `-min_ij C_ij`; anything lower would create
    /// a negative weight and is rejected rather than clamped.
    pub fn add_pairwise_offset(&self, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::InvalidEnergy(format!("non-finite pairwise offset {offset}")));
        }
        if let Some(min_w) = self.min_pairwise_weight() {
            if offset < -min_w {
                return Err(Error::Submodularity(format!(
                    "pairwise offset {offset} below -min weight {}",
                    -min_w
                )));
            }
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                i: e.i,
                j: e.j,
                weight: e.weight + offset,
            })
            .collect();
        Ok(PairwiseEnergy {
            num_vars: self.num_vars,
            unary: self.unary.clone(),
            edges,
        })
    }

    /// Writes the line-oriented problem format: `n m`, then `n` lines
    /// `phi0 phi1`, then `m` lines `i j c`. Values round-trip exactly.
    pub fn write_problem(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.num_vars, self.edges.len())?;
        for &(phi0, phi1) in &self.unary {
            writeln!(out, "{phi0} {phi1}")?;
        }
        for edge in &self.edges {
            writeln!(out, "{} {} {}", edge.i, edge.j, edge.weight)?;
        }
        Ok(())
    }

    /// Parses the problem format produced by [`PairwiseEnergy::write_problem`].
    pub fn read_problem(input: impl BufRead) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in input.lines() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("");
            tokens.extend(body.split_whitespace().map(str::to_owned));
        }
        let mut iter = tokens.iter();
        let mut next = |what: &str| -> Result<&String> {
            iter.next()
                .ok_or_else(|| Error::Format(format!("unexpected end of problem file, wanted {what}")))
        };
        let n: usize = next("variable count")?
            .parse()
            .map_err(|e| Error::Format(format!("bad variable count: {e}")))?;
        let m: usize = next("edge count")?
            .parse()
            .map_err(|e| Error::Format(format!("bad edge count: {e}")))?;
        let parse_f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("bad real '{s}': {e}")))
        };
        let mut unary = Vec::with_capacity(n);
        for _ in 0..n {
            let phi0 = parse_f(next("phi0")?)?;
            let phi1 = parse_f(next("phi1")?)?;
            unary.push((phi0, phi1));
        }
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let i: u32 = next("edge i")?
                .parse()
                .map_err(|e| Error::Format(format!("bad edge index: {e}")))?;
            let j: u32 = next("edge j")?
                .parse()
                .map_err(|e| Error::Format(format!("bad edge index: {e}")))?;
            let w = parse_f(next("edge weight")?)?;
            edges.push((i, j, w));
        }
        if iter.next().is_some() {
            return Err(Error::Format("trailing tokens in problem file".into()));
        }
        PairwiseEnergy::new(unary, edges)
    }
}

/// Contrast-sensitive smoothness parameters for grid energies:
/// `C_ij = lambda_s + beta * exp(-(I_i - I_j)^2 / (2 sigma^2))`.
#[derive(Clone, Copy, Debug)]
pub struct SmoothParams {
    pub lambda_s: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl SmoothParams {
    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidEnergy(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.lambda_s < 0.0 || self.beta < 0.0 {
            return Err(Error::InvalidEnergy(
                "lambda_s and beta must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// 4-connected grid edges of a `width x height` image in row-major order:
/// for each pixel, the rightward edge then the downward edge.
pub fn grid_edges(width: usize, height: usize) -> Vec<(u32, u32)> {
    let mut edges = Vec::with_capacity(2 * width * height);
    for r in 0..height {
        for c in 0..width {
            let idx = (r * width + c) as u32;
            if c + 1 < width {
                edges.push((idx, idx + 1));
            }
            if r + 1 < height {
                edges.push((idx, idx + width as u32));
            }
        }
    }
    edges
}

/// Mean of `(I_i - I_j)^2` over the 4-connected grid edges; the usual source
/// for an automatic `sigma`.
pub fn mean_squared_gradient(width: usize, height: usize, intensities: &[f64]) -> f64 {
    let edges = grid_edges(width, height);
    if edges.is_empty() {
        return 0.0;
    }
    let sum: f64 = edges
        .iter()
        .map(|&(i, j)| {
            let d = intensities[i as usize] - intensities[j as usize];
            d * d
        })
        .sum();
    sum / edges.len() as f64
}

/// Builds a 4-connected grid energy over a row-major intensity image.
///
/// Unaries are `phi_i(1) = fg_nll(I_i)` and `phi_i(0) = bg_nll(I_i)` where the
/// models report negative log-likelihoods; pairwise weights follow
/// [`SmoothParams`]. Pixel `r * width + c` has horizontal coordinate `c` and
/// vertical coordinate `r`, both 0-indexed.
pub fn build_grid_energy(
    width: usize,
    height: usize,
    intensities: &[f64],
    fg_nll: impl Fn(f64) -> f64,
    bg_nll: impl Fn(f64) -> f64,
    smooth: &SmoothParams,
) -> Result<PairwiseEnergy> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidEnergy("empty image".into()));
    }
    if intensities.len() != width * height {
        return Err(Error::Dimension {
            expected: width * height,
            got: intensities.len(),
        });
    }
    smooth.validate()?;
    let unary = intensities
        .iter()
        .map(|&v| (bg_nll(v), fg_nll(v)))
        .collect::<Vec<_>>();
    let denom = 2.0 * smooth.sigma * smooth.sigma;
    let edges = grid_edges(width, height)
        .into_iter()
        .map(|(i, j)| {
            let d = intensities[i as usize] - intensities[j as usize];
            let w = smooth.lambda_s + smooth.beta * (-(d * d) / denom).exp();
            (i, j, w)
        })
        .collect();
    PairwiseEnergy::new(unary, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent re-summation used as the oracle for `evaluate`: iterates
    /// variables and edges in reverse and accumulates unary and pairwise
    /// parts separately.
    fn naive_energy(unary: &[(f64, f64)], edges: &[(u32, u32, f64)], x: &[bool]) -> f64 {
        let mut pairwise = 0.0;
        for &(i, j, w) in edges.iter().rev() {
            if x[i as usize] != x[j as usize] {
                pairwise += w;
            }
        }
        let mut unary_sum = 0.0;
        for (i, &(p0, p1)) in unary.iter().enumerate().rev() {
            unary_sum += if x[i] { p1 } else { p0 };
        }
        unary_sum + pairwise
    }

    fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> (Vec<(f64, f64)>, Vec<(u32, u32, f64)>) {
        let n = rows * cols;
        let unary = (0..n)
            .map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
            .collect();
        let edges = grid_edges(cols, rows)
            .into_iter()
            .map(|(i, j)| (i, j, rng.gen_range(0.0..3.0)))
            .collect();
        (unary, edges)
    }

    fn random_labeling(rng: &mut ChaCha8Rng, n: usize) -> Labeling {
        Labeling::new((0..n).map(|_| rng.gen_bool(0.5)).collect())
    }

    #[test]
    fn single_unary_lookup() {
        let e = PairwiseEnergy::new(vec![(0.0, 5.0)], vec![]).unwrap();
        let x = Labeling::new(vec![true]);
        assert_eq!(e.evaluate(&x).unwrap(), 5.0);
    }

    #[test]
    fn one_boundary_edge() {
        let e = PairwiseEnergy::new(vec![(0.0, 0.0), (0.0, 0.0)], vec![(0, 1, 3.0)]).unwrap();
        let x = Labeling::new(vec![false, true]);
        assert_eq!(e.evaluate(&x).unwrap(), 3.0);
    }

    #[test]
    fn evaluate_matches_naive_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (unary, edges) = random_grid(&mut rng, 3, 3);
            let e = PairwiseEnergy::new(unary.clone(), edges.clone()).unwrap();
            let x = random_labeling(&mut rng, 9);
            let got = e.evaluate(&x).unwrap();
            let want = naive_energy(&unary, &edges, x.bits());
            assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn evaluate_rejects_length_mismatch() {
        let e = PairwiseEnergy::new(vec![(0.0, 1.0)], vec![]).unwrap();
        assert!(matches!(
            e.evaluate(&Labeling::zeros(2)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn constructor_rejects_bad_edges() {
        let unary = vec![(0.0, 0.0), (0.0, 0.0)];
        assert!(PairwiseEnergy::new(unary.clone(), vec![(0, 0, 1.0)]).is_err());
        assert!(PairwiseEnergy::new(unary.clone(), vec![(0, 2, 1.0)]).is_err());
        assert!(PairwiseEnergy::new(unary.clone(), vec![(0, 1, -0.5)]).is_err());
        assert!(PairwiseEnergy::new(unary.clone(), vec![(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(PairwiseEnergy::new(unary, vec![(0, 1, f64::NAN)]).is_err());
    }

    #[test]
    fn unary_offsets_identity_and_cancellation() {
        let e = PairwiseEnergy::new(vec![(0.0, 5.0)], vec![]).unwrap();
        let same = e.add_unary_offsets(&[0.0]).unwrap();
        let x = Labeling::ones(1);
        assert_eq!(same.evaluate(&x).unwrap(), 5.0);
        let cancelled = e.add_unary_offsets(&[-5.0]).unwrap();
        assert_eq!(cancelled.evaluate(&x).unwrap(), 0.0);
    }

    #[test]
    fn unary_offsets_shift_by_linear_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (unary, edges) = random_grid(&mut rng, 3, 4);
        let e = PairwiseEnergy::new(unary, edges).unwrap();
        let deltas: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let shifted = e.add_unary_offsets(&deltas).unwrap();
        for _ in 0..20 {
            let x = random_labeling(&mut rng, 12);
            let base = e.evaluate(&x).unwrap();
            let got = shifted.evaluate(&x).unwrap();
            let linear: f64 = deltas
                .iter()
                .enumerate()
                .map(|(i, d)| if x.get(i) { *d } else { 0.0 })
                .sum();
            assert!((got - (base + linear)).abs() <= 1e-9 * (1.0 + base.abs()));
        }
    }

    #[test]
    fn pairwise_offset_identity_and_boundary() {
        let e = PairwiseEnergy::new(vec![(0.0, 0.0), (0.0, 0.0)], vec![(0, 1, 3.0)]).unwrap();
        let same = e.add_pairwise_offset(0.0).unwrap();
        assert_eq!(same.edges()[0].weight, 3.0);
        let zeroed = e.add_pairwise_offset(-3.0).unwrap();
        assert_eq!(zeroed.edges()[0].weight, 0.0);
        let x = Labeling::new(vec![false, true]);
        assert_eq!(zeroed.evaluate(&x).unwrap(), 0.0);
        assert!(matches!(
            e.add_pairwise_offset(-3.0 - 1e-9),
            Err(Error::Submodularity(_))
        ));
    }

    #[test]
    fn pairwise_offset_shifts_by_cut_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (unary, edges) = random_grid(&mut rng, 3, 3);
        let e = PairwiseEnergy::new(unary.clone(), edges.clone()).unwrap();
        let shifted = e.add_pairwise_offset(1.5).unwrap();
        for _ in 0..20 {
            let x = random_labeling(&mut rng, 9);
            let cut = edges
                .iter()
                .filter(|&&(i, j, _)| x.get(i as usize) != x.get(j as usize))
                .count() as f64;
            let want = naive_energy(&unary, &edges, x.bits()) + 1.5 * cut;
            let got = shifted.evaluate(&x).unwrap();
            assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn grid_builder_topology() {
        let one = build_grid_energy(1, 1, &[0.5], |_| 1.0, |_| 2.0, &SmoothParams {
            lambda_s: 0.1,
            beta: 1.0,
            sigma: 0.2,
        })
        .unwrap();
        assert_eq!(one.num_vars(), 1);
        assert!(one.edges().is_empty());

        let four = build_grid_energy(2, 2, &[0.0; 4], |_| 0.0, |_| 0.0, &SmoothParams {
            lambda_s: 0.1,
            beta: 1.0,
            sigma: 0.2,
        })
        .unwrap();
        assert_eq!(four.edges().len(), 4);
    }

    #[test]
    fn grid_builder_uniform_image_weights() {
        let img = vec![0.4; 6];
        let e = build_grid_energy(3, 2, &img, |_| 0.0, |_| 0.0, &SmoothParams {
            lambda_s: 0.1,
            beta: 1.0,
            sigma: 0.3,
        })
        .unwrap();
        for edge in e.edges() {
            assert!((edge.weight - 1.1).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_builder_rejects_bad_input() {
        let smooth = SmoothParams { lambda_s: 0.1, beta: 1.0, sigma: 0.2 };
        assert!(build_grid_energy(0, 3, &[], |_| 0.0, |_| 0.0, &smooth).is_err());
        let bad_sigma = SmoothParams { lambda_s: 0.1, beta: 1.0, sigma: 0.0 };
        assert!(build_grid_energy(1, 1, &[0.0], |_| 0.0, |_| 0.0, &bad_sigma).is_err());
    }

    #[test]
    fn labeling_index_round_trip_is_lexicographic() {
        let a = Labeling::from_index(0, 3);
        assert_eq!(a.bit_string(), "000");
        let b = Labeling::from_index(1, 3);
        assert_eq!(b.bit_string(), "001");
        let c = Labeling::from_index(4, 3);
        assert_eq!(c.bit_string(), "100");
        for k in 0..8 {
            assert_eq!(Labeling::from_index(k, 3).to_index(), k);
        }
    }

    #[test]
    fn problem_file_round_trip_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (unary, edges) = random_grid(&mut rng, 2, 3);
            let e = PairwiseEnergy::new(unary, edges).unwrap();
            let mut buf = Vec::new();
            e.write_problem(&mut buf).unwrap();
            let back = PairwiseEnergy::read_problem(buf.as_slice()).unwrap();
            assert_eq!(back.num_vars(), e.num_vars());
            for (a, b) in back.unary().iter().zip(e.unary()) {
                assert_eq!(a.0.to_bits(), b.0.to_bits());
                assert_eq!(a.1.to_bits(), b.1.to_bits());
            }
            for (a, b) in back.edges().iter().zip(e.edges()) {
                assert_eq!((a.i, a.j), (b.i, b.j));
                assert_eq!(a.weight.to_bits(), b.weight.to_bits());
            }
        }
    }

    #[test]
    fn problem_file_rejects_garbage() {
        assert!(PairwiseEnergy::read_problem("1".as_bytes()).is_err());
        assert!(PairwiseEnergy::read_problem("1 0\n0.0 oops".as_bytes()).is_err());
        assert!(PairwiseEnergy::read_problem("1 0\n0 1\nextra".as_bytes()).is_err());
    }

    proptest! {
        // Dyadic weights make every sum exact, so reordering edges must leave
        // evaluate bit-identical.
        #[test]
        fn evaluate_invariant_under_edge_reordering(
            seed in 0u64..1000,
            perm_seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 9usize;
            let unary: Vec<(f64, f64)> = (0..n)
                .map(|_| (
                    rng.gen_range(-512i32..512) as f64 / 256.0,
                    rng.gen_range(-512i32..512) as f64 / 256.0,
                ))
                .collect();
            let mut edges: Vec<(u32, u32, f64)> = grid_edges(3, 3)
                .into_iter()
                .map(|(i, j)| (i, j, rng.gen_range(0i32..768) as f64 / 256.0))
                .collect();
            let e1 = PairwiseEnergy::new(unary.clone(), edges.clone()).unwrap();
            let mut perm = ChaCha8Rng::seed_from_u64(perm_seed);
            for k in (1..edges.len()).rev() {
                let swap = perm.gen_range(0..=k);
                edges.swap(k, swap);
            }
            let e2 = PairwiseEnergy::new(unary, edges).unwrap();
            for idx in 0..(1u64 << n) {
                let x = Labeling::from_index(idx, n);
                prop_assert_eq!(
                    e1.evaluate(&x).unwrap().to_bits(),
                    e2.evaluate(&x).unwrap().to_bits()
                );
            }
        }

        #[test]
        fn unary_offsets_invert(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (unary, edges) = random_grid(&mut rng, 2, 3);
            let e = PairwiseEnergy::new(unary, edges).unwrap();
            let deltas: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let negated: Vec<f64> = deltas.iter().map(|d| -d).collect();
            let round = e
                .add_unary_offsets(&deltas)
                .unwrap()
                .add_unary_offsets(&negated)
                .unwrap();
            for _ in 0..10 {
                let x = random_labeling(&mut rng, 6);
                let a = e.evaluate(&x).unwrap();
                let b = round.evaluate(&x).unwrap();
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn grid_builder_output_satisfies_invariants(
            w in 1usize..6,
            h in 1usize..6,
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img: Vec<f64> = (0..w * h).map(|_| rng.gen_range(0.0..1.0)).collect();
            let e = build_grid_energy(w, h, &img, |v| -(v.max(1e-6)).ln(), |v| -((1.0 - v).max(1e-6)).ln(), &SmoothParams {
                lambda_s: 0.05,
                beta: 1.0,
                sigma: 0.25,
            })
            .unwrap();
            prop_assert_eq!(e.num_vars(), w * h);
            prop_assert_eq!(e.edges().len(), w * (h - 1) + h * (w - 1));
            for edge in e.edges() {
                prop_assert!(edge.i < edge.j);
                prop_assert!(edge.weight > 0.0);
            }
        }
    }
}
