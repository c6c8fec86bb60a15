//! Dense bounded-variable simplex for the master program.
//!
//! Sized for the cutting-plane master: a handful of variables, a few hundred
//! inequality rows. Two phases (artificials only on rows the initial bound
//! assignment violates), Bland's rule for anti-cycling, and a final refresh
//! of basic values against the transformed right-hand side to shed drift.

const RC_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-10;

/// Maximize `objective . x` subject to `rows[k] . x <= rhs[k]` and
/// `lower <= x <= upper` (infinite bounds allowed).
#[derive(Clone, Debug)]
pub(crate) struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum LpError {
    Infeasible,
    Unbounded,
    BadInput(String),
    PivotLimit,
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::Infeasible => write!(f, "infeasible"),
            LpError::Unbounded => write!(f, "unbounded"),
            LpError::BadInput(msg) => write!(f, "bad input: {msg}"),
            LpError::PivotLimit => write!(f, "pivot limit exceeded"),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    rows: usize,
    total: usize,
    structural: usize,
    /// `B^{-1} A`, row-major over all columns.
    tab: Vec<f64>,
    /// `B^{-1} b`.
    rhs_col: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.tab[r * self.total + c]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let total = self.total;
        let p = self.at(row, col);
        debug_assert!(p.abs() > 0.0);
        for j in 0..total {
            self.tab[row * total + j] /= p;
        }
        self.rhs_col[row] /= p;
        for r in 0..self.rows {
            if r == row {
                continue;
            }
            let factor = self.at(r, col);
            if factor != 0.0 {
                for j in 0..total {
                    self.tab[r * total + j] -= factor * self.tab[row * total + j];
                }
                self.rhs_col[r] -= factor * self.rhs_col[row];
            }
        }
        self.is_basic[self.basis[row]] = false;
        self.basis[row] = col;
        self.is_basic[col] = true;
    }

    /// Recomputes basic variable values from the transformed rhs so that
    /// accumulated step rounding does not leak into the reported solution.
    fn refresh_basics(&mut self) {
        for r in 0..self.rows {
            let mut v = self.rhs_col[r];
            for j in 0..self.total {
                if !self.is_basic[j] && self.x[j] != 0.0 {
                    v -= self.at(r, j) * self.x[j];
                }
            }
            self.x[self.basis[r]] = v;
        }
    }

    /// Primal simplex with Bland's rule over columns `< eligible`.
    fn optimize(&mut self, c: &[f64], eligible: usize) -> Result<(), LpError> {
        let max_pivots = 400 * (self.total + self.rows) + 1000;
        for _ in 0..max_pivots {
            let mut entering = None;
            for j in 0..eligible {
                if self.is_basic[j] || self.lower[j] == self.upper[j] {
                    continue;
                }
                let mut rc = c[j];
                for r in 0..self.rows {
                    let cb = c[self.basis[r]];
                    if cb != 0.0 {
                        rc -= cb * self.at(r, j);
                    }
                }
                let free = self.lower[j] == f64::NEG_INFINITY && self.upper[j] == f64::INFINITY;
                let direction = if free {
                    if rc > RC_TOL {
                        Some(1.0)
                    } else if rc < -RC_TOL {
                        Some(-1.0)
                    } else {
                        None
                    }
                } else if !self.at_upper[j] && rc > RC_TOL {
                    Some(1.0)
                } else if self.at_upper[j] && rc < -RC_TOL {
                    Some(-1.0)
                } else {
                    None
                };
                if let Some(sigma) = direction {
                    entering = Some((j, sigma));
                    break;
                }
            }
            let Some((e, sigma)) = entering else {
                return Ok(());
            };

            // Step limit from the entering variable's own opposite bound.
            let own_limit = if sigma > 0.0 {
                self.upper[e] - self.x[e]
            } else {
                self.x[e] - self.lower[e]
            };
            let mut best_t = own_limit.max(0.0);
            let mut best_row: Option<usize> = None;
            let mut best_var = e;
            for r in 0..self.rows {
                let d = sigma * self.at(r, e);
                let bi = self.basis[r];
                let t = if d > PIVOT_TOL {
                    if self.lower[bi] == f64::NEG_INFINITY {
                        continue;
                    }
                    (self.x[bi] - self.lower[bi]) / d
                } else if d < -PIVOT_TOL {
                    if self.upper[bi] == f64::INFINITY {
                        continue;
                    }
                    (self.upper[bi] - self.x[bi]) / (-d)
                } else {
                    continue;
                };
                let t = t.max(0.0);
                let tie = (t - best_t).abs() <= RATIO_TIE * (1.0 + best_t.abs());
                if (t < best_t && !tie) || (tie && bi < best_var) {
                    best_t = t;
                    best_row = Some(r);
                    best_var = bi;
                }
            }
            if best_t == f64::INFINITY {
                return Err(LpError::Unbounded);
            }
            if best_t > 0.0 {
                self.x[e] += sigma * best_t;
                for r in 0..self.rows {
                    let bi = self.basis[r];
                    self.x[bi] -= sigma * self.at(r, e) * best_t;
                }
            }
            match best_row {
                None => {
                    // Bound flip: the entering variable hit its opposite bound.
                    self.at_upper[e] = sigma > 0.0;
                    self.x[e] = if self.at_upper[e] {
                        self.upper[e]
                    } else {
                        self.lower[e]
                    };
                }
                Some(row) => {
                    let leaving = self.basis[row];
                    let to_upper = sigma * self.at(row, e) < 0.0;
                    self.x[leaving] = if to_upper {
                        self.upper[leaving]
                    } else {
                        self.lower[leaving]
                    };
                    self.at_upper[leaving] = to_upper && self.lower[leaving] != self.upper[leaving];
                    self.pivot(row, e);
                }
            }
        }
        Err(LpError::PivotLimit)
    }
}

pub(crate) fn solve(p: &LpProblem) -> Result<LpSolution, LpError> {
    let n = p.objective.len();
    if p.lower.len() != n || p.upper.len() != n {
        return Err(LpError::BadInput("bound arrays must match objective".into()));
    }
    if p.rows.len() != p.rhs.len() {
        return Err(LpError::BadInput("rows and rhs must match".into()));
    }
    for row in &p.rows {
        if row.len() != n {
            return Err(LpError::BadInput("row width must match objective".into()));
        }
    }
    for (lo, hi) in p.lower.iter().zip(&p.upper) {
        if lo > hi || lo.is_nan() || hi.is_nan() {
            return Err(LpError::Infeasible);
        }
    }

    let rows = p.rows.len();
    let slack_base = n;
    let total_real = n + rows;

    // Initial nonbasic values: finite lower bound first, else finite upper,
    // else zero for free variables.
    let mut x0 = Vec::with_capacity(n);
    let mut at_upper0 = vec![false; n];
    for j in 0..n {
        if p.lower[j] > f64::NEG_INFINITY {
            x0.push(p.lower[j]);
        } else if p.upper[j] < f64::INFINITY {
            x0.push(p.upper[j]);
            at_upper0[j] = true;
        } else {
            x0.push(0.0);
        }
    }
    let residuals: Vec<f64> = (0..rows)
        .map(|k| {
            let dot: f64 = p.rows[k].iter().zip(&x0).map(|(a, v)| a * v).sum();
            p.rhs[k] - dot
        })
        .collect();
    let violated: Vec<usize> = (0..rows).filter(|&k| residuals[k] < 0.0).collect();
    let total = total_real + violated.len();

    let mut tab = vec![0.0; rows * total];
    for k in 0..rows {
        for j in 0..n {
            tab[k * total + j] = p.rows[k][j];
        }
        tab[k * total + slack_base + k] = 1.0;
    }
    for (art, &k) in violated.iter().enumerate() {
        tab[k * total + total_real + art] = -1.0;
    }

    let mut lower = p.lower.clone();
    let mut upper = p.upper.clone();
    lower.extend(std::iter::repeat(0.0).take(rows + violated.len()));
    upper.extend(std::iter::repeat(f64::INFINITY).take(rows + violated.len()));

    let mut x = x0;
    x.extend(std::iter::repeat(0.0).take(rows + violated.len()));
    let mut at_upper = at_upper0;
    at_upper.extend(std::iter::repeat(false).take(rows + violated.len()));

    let mut basis = Vec::with_capacity(rows);
    let mut is_basic = vec![false; total];
    for k in 0..rows {
        basis.push(slack_base + k);
        is_basic[slack_base + k] = true;
        x[slack_base + k] = residuals[k];
    }

    let mut t = Tableau {
        rows,
        total,
        structural: n,
        tab,
        rhs_col: p.rhs.clone(),
        basis,
        is_basic,
        at_upper,
        x,
        lower,
        upper,
    };

    // Phase 1: drive the artificials of violated rows to zero.
    if !violated.is_empty() {
        for (art, &k) in violated.iter().enumerate() {
            t.x[slack_base + k] = 0.0;
            t.pivot(k, total_real + art);
            t.x[total_real + art] = -residuals[k];
        }
        let mut c1 = vec![0.0; total];
        for art in 0..violated.len() {
            c1[total_real + art] = -1.0;
        }
        t.optimize(&c1, total)?;
        t.refresh_basics();
        let infeasibility: f64 = (0..violated.len()).map(|a| t.x[total_real + a].max(0.0)).sum();
        let scale = p
            .rhs
            .iter()
            .map(|v| v.abs())
            .fold(1.0f64, f64::max);
        if infeasibility > 1e-7 * scale {
            return Err(LpError::Infeasible);
        }
        // Pin artificials at zero and pivot basic ones out where possible.
        for art in 0..violated.len() {
            t.upper[total_real + art] = 0.0;
            t.x[total_real + art] = 0.0;
        }
        for r in 0..rows {
            if t.basis[r] >= total_real {
                if let Some(col) = (0..total_real)
                    .find(|&j| !t.is_basic[j] && t.at(r, j).abs() > PIVOT_TOL)
                {
                    t.pivot(r, col);
                    t.refresh_basics();
                }
            }
        }
    }

    // Phase 2.
    let mut c2 = vec![0.0; total];
    c2[..n].copy_from_slice(&p.objective);
    t.optimize(&c2, total_real)?;
    t.refresh_basics();

    let x = t.x[..n].to_vec();
    let objective = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective })
}
