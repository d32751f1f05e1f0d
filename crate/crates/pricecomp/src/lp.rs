//! Exact linear programming over rationals.
//!
//! Two-phase dense simplex with Bland's pivoting rule: deterministic,
//! cycle-free, and exact. Instances here are desk-scale (tens of variables),
//! so the dense tableau is the right trade-off.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub bound: Rational,
}

/// maximize objective . x  subject to the constraints and x >= lower_bounds
/// (zero by default).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub lower_bounds: Option<Vec<Rational>>,
}

impl LinearProgram {
    pub fn new(objective: Vec<Rational>) -> Self {
        LinearProgram {
            objective,
            constraints: Vec::new(),
            lower_bounds: None,
        }
    }

    pub fn constrain(&mut self, coeffs: Vec<Rational>, relation: Relation, bound: Rational) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            bound,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        for (idx, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::MalformedLp(format!(
                    "constraint {idx} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
        }
        if let Some(lb) = &self.lower_bounds {
            if lb.len() != n {
                return Err(Error::MalformedLp(format!(
                    "{} lower bounds for {n} variables",
                    lb.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Variable values; empty unless status is Optimal.
    pub values: Vec<Rational>,
    pub objective_value: Rational,
}

impl LpSolution {
    fn non_optimal(status: LpStatus) -> Self {
        LpSolution {
            status,
            values: Vec::new(),
            objective_value: Rational::zero(),
        }
    }
}

/// Solves the LP. The returned point is a vertex of the feasible region and
/// is deterministic for a given input.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    Ok(lp_solve_multi(lp, std::slice::from_ref(&lp.objective))?
        .pop()
        .expect("one objective"))
}

/// Solves the same feasible region for several objectives, running phase 1
/// once. Returns one solution per objective.
pub fn lp_solve_multi(lp: &LinearProgram, objectives: &[Vec<Rational>]) -> Result<Vec<LpSolution>> {
    lp.validate()?;
    let n = lp.num_vars();
    for (k, obj) in objectives.iter().enumerate() {
        if obj.len() != n {
            return Err(Error::MalformedLp(format!(
                "objective {k} has {} coefficients, expected {n}",
                obj.len()
            )));
        }
    }

    // Shift variables so that every lower bound is zero: x = y + lb.
    let lb = lp
        .lower_bounds
        .clone()
        .unwrap_or_else(|| vec![Rational::zero(); n]);
    let mut rows: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
    for c in &lp.constraints {
        let shift: Rational = c
            .coeffs
            .iter()
            .zip(&lb)
            .map(|(a, l)| a.clone() * l.clone())
            .sum();
        rows.push((c.coeffs.clone(), c.relation, c.bound.clone() - shift));
    }

    let tableau = match Tableau::phase1(n, &rows) {
        Some(t) => t,
        None => {
            return Ok(objectives
                .iter()
                .map(|_| LpSolution::non_optimal(LpStatus::Infeasible))
                .collect())
        }
    };

    let mut out = Vec::with_capacity(objectives.len());
    for obj in objectives {
        let mut t = tableau.clone();
        match t.phase2(obj) {
            Phase2::Unbounded => out.push(LpSolution::non_optimal(LpStatus::Unbounded)),
            Phase2::Optimal => {
                let y = t.extract(n);
                let values: Vec<Rational> =
                    y.into_iter().zip(&lb).map(|(v, l)| v + l.clone()).collect();
                let objective_value: Rational = obj
                    .iter()
                    .zip(&values)
                    .map(|(c, v)| c.clone() * v.clone())
                    .sum();
                out.push(LpSolution {
                    status: LpStatus::Optimal,
                    values,
                    objective_value,
                });
            }
        }
    }
    Ok(out)
}

enum Phase2 {
    Optimal,
    Unbounded,
}

/// Simplex tableau in equality form: columns are the structural variables
/// followed by slack/surplus columns; artificials are dropped after phase 1.
#[derive(Clone)]
struct Tableau {
    /// `rows[r]` = coefficients over all columns, then the rhs.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    /// Builds a feasible tableau via phase 1, or None if infeasible.
    fn phase1(n: usize, constraints: &[(Vec<Rational>, Relation, Rational)]) -> Option<Tableau> {
        let m = constraints.len();
        // Column layout: 0..n structural, then one slack/surplus per
        // inequality, then one artificial per row that needs it.
        let mut slack_col = Vec::with_capacity(m);
        let mut num_slacks = 0usize;
        for (_, rel, _) in constraints {
            match rel {
                Relation::Le | Relation::Ge => {
                    slack_col.push(Some(n + num_slacks));
                    num_slacks += 1;
                }
                Relation::Eq => slack_col.push(None),
            }
        }
        let base_cols = n + num_slacks;

        // rows in equality form with rhs >= 0
        let mut eq_rows: Vec<Vec<Rational>> = Vec::with_capacity(m);
        let mut needs_artificial: Vec<bool> = Vec::with_capacity(m);
        for (r, (coeffs, rel, bound)) in constraints.iter().enumerate() {
            let mut row = vec![Rational::zero(); base_cols + 1];
            for (j, a) in coeffs.iter().enumerate() {
                row[j] = a.clone();
            }
            match rel {
                Relation::Le => row[slack_col[r].unwrap()] = Rational::one(),
                Relation::Ge => row[slack_col[r].unwrap()] = -Rational::one(),
                Relation::Eq => {}
            }
            row[base_cols] = bound.clone();
            if row[base_cols].is_negative() {
                for v in row.iter_mut() {
                    *v = -std::mem::take(v);
                }
            }
            // A +1 slack with nonnegative rhs can start in the basis.
            let slack_ok =
                matches!(rel, Relation::Le | Relation::Ge) && row[slack_col[r].unwrap()].is_one();
            needs_artificial.push(!slack_ok);
            eq_rows.push(row);
        }

        let num_art: usize = needs_artificial.iter().filter(|b| **b).count();
        let cols = base_cols + num_art;
        let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut art_idx = 0usize;
        for (r, mut row) in eq_rows.into_iter().enumerate() {
            let rhs = row.pop().unwrap();
            row.resize(cols, Rational::zero());
            if needs_artificial[r] {
                row[base_cols + art_idx] = Rational::one();
                basis.push(base_cols + art_idx);
                art_idx += 1;
            } else {
                basis.push(slack_col[r].unwrap());
            }
            row.push(rhs);
            rows.push(row);
        }

        let mut t = Tableau { rows, basis, cols };
        if num_art > 0 {
            // Phase-1 objective: maximize -(sum of artificials).
            let mut obj = vec![Rational::zero(); cols];
            for a in base_cols..cols {
                obj[a] = -Rational::one();
            }
            match t.simplex(&obj) {
                Phase2::Unbounded => unreachable!("phase 1 objective is bounded"),
                Phase2::Optimal => {}
            }
            // Infeasible iff some artificial is stuck at a positive value.
            let mut value = Rational::zero();
            for (r, b) in t.basis.iter().enumerate() {
                if *b >= base_cols {
                    value += t.rows[r].last().unwrap().clone();
                }
            }
            if !value.is_zero() {
                return None;
            }
            // Pivot zero-valued artificials out of the basis when possible,
            // otherwise drop their (redundant) rows.
            let mut r = 0;
            while r < t.rows.len() {
                if t.basis[r] >= base_cols {
                    let mut pivoted = false;
                    for c in 0..base_cols {
                        if !t.rows[r][c].is_zero() {
                            t.pivot(r, c);
                            pivoted = true;
                            break;
                        }
                    }
                    if !pivoted {
                        t.rows.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
                r += 1;
            }
            // Drop artificial columns.
            for row in &mut t.rows {
                row.drain(base_cols..cols);
            }
            t.cols = base_cols;
        }
        Some(t)
    }

    fn phase2(&mut self, objective: &[Rational]) -> Phase2 {
        let mut obj = vec![Rational::zero(); self.cols];
        obj[..objective.len()].clone_from_slice(objective);
        self.simplex(&obj)
    }

    /// Primal simplex with Bland's rule; the tableau must start feasible.
    fn simplex(&mut self, obj: &[Rational]) -> Phase2 {
        loop {
            // Reduced costs: c_j - c_B . B^-1 A_j.
            let mut entering = None;
            for j in 0..self.cols {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut red = obj[j].clone();
                for (r, b) in self.basis.iter().enumerate() {
                    if !obj[*b].is_zero() && !self.rows[r][j].is_zero() {
                        red -= obj[*b].clone() * self.rows[r][j].clone();
                    }
                }
                if red.is_positive() {
                    entering = Some(j);
                    break; // Bland: smallest improving index
                }
            }
            let Some(col) = entering else {
                return Phase2::Optimal;
            };
            // Ratio test; ties broken by smallest basic-variable index.
            let mut leave: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if a.is_positive() {
                    let ratio = self.rows[r].last().unwrap().clone() / a.clone();
                    match &leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < *lratio
                                || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Phase2::Unbounded;
            };
            self.pivot(row, col);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            *v = std::mem::take(v) / pivot.clone();
        }
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col].clone();
            if factor.is_zero() {
                continue;
            }
            for c in 0..self.rows[r].len() {
                let delta = factor.clone() * self.rows[row][c].clone();
                self.rows[r][c] -= delta;
            }
        }
        self.basis[row] = col;
    }

    fn extract(&self, n: usize) -> Vec<Rational> {
        let mut values = vec![Rational::zero(); n];
        for (r, b) in self.basis.iter().enumerate() {
            if *b < n {
                values[*b] = self.rows[r].last().unwrap().clone();
            }
        }
        values
    }
}
