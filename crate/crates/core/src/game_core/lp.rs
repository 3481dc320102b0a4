//! Dense tableau simplex for the small linear programs used throughout the crate.
//!
//! Two-phase primal simplex. Rows are scaled to nonnegative right-hand sides;
//! `>=` and `=` rows get artificial columns, and phase one minimises their sum.
//! A positive phase-one optimum yields a Farkas certificate from the phase-one
//! multipliers. Pivoting is deterministic: Dantzig pricing with lowest-index
//! ties and a Harris-style ratio test, switching to Bland's rule after a run of
//! degenerate pivots.

use serde::Serialize;

use super::GameError;

/// Pivot entries below this fraction of the column's largest entry are skipped.
const PIVOT_REL: f64 = 1e-9;
const COST_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-10;
const DEGENERATE_RUN: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `optimize objective·x subject to constraints, x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per original constraint, with `objective = Σ duals_i · rhs_i`.
    pub duals: Vec<f64>,
}

/// Multipliers `y` over the original constraints with `yᵀA >= 0` on every
/// variable, sign-compatible with each relation, and `yᵀb < 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FarkasCertificate {
    pub multipliers: Vec<f64>,
    pub combined_rhs: f64,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible(FarkasCertificate),
    Unbounded,
}

impl LinearProgram {
    pub fn new(n_vars: usize, sense: Sense, objective: Vec<f64>) -> Self {
        debug_assert_eq!(objective.len(), n_vars);
        Self { n_vars, sense, objective, constraints: Vec::new() }
    }

    /// Pure feasibility problem (zero objective).
    pub fn feasibility(n_vars: usize) -> Self {
        Self::new(n_vars, Sense::Minimize, vec![0.0; n_vars])
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.n_vars);
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn solve(&self) -> Result<LpOutcome, GameError> {
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut tab = Tableau::new(self);

        if !tab.artificials.is_empty() {
            let mut phase_one = vec![0.0; tab.n_cols()];
            for &a in &tab.artificials {
                phase_one[a] = 1.0;
            }
            tab.set_costs(phase_one);
            // Phase one is bounded below, so a column without a usable pivot is noise.
            tab.primal_simplex(true)?;
            let infeasibility = -tab.objective_value();
            if infeasibility > FEAS_EPS * (1.0 + tab.rhs_scale) {
                return Ok(LpOutcome::Infeasible(self.certificate(&tab)));
            }
            tab.drive_out_artificials();
            tab.barred = tab.artificials.clone();
        }

        let mut costs = vec![0.0; tab.n_cols()];
        for (c, o) in costs.iter_mut().zip(&self.objective) {
            *c = sign * o;
        }
        tab.set_costs(costs);
        if !tab.primal_simplex(false)? {
            return Ok(LpOutcome::Unbounded);
        }

        let mut x = vec![0.0; self.n_vars];
        for (r, &b) in tab.basis.iter().enumerate() {
            if b < self.n_vars {
                x[b] = tab.rhs(r).max(0.0);
            }
        }
        let duals = (0..self.constraints.len()).map(|r| sign * tab.row_sign[r] * tab.row_dual(r)).collect();
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpOutcome::Optimal(LpSolution { x, objective, duals }))
    }

    /// Phase-one multipliers `y` satisfy `yᵀA <= 0` and `yᵀb > 0` on the
    /// normalized rows; the certificate is `−y` mapped back to the original rows.
    fn certificate(&self, tab: &Tableau) -> FarkasCertificate {
        let multipliers: Vec<f64> = (0..self.constraints.len()).map(|r| -tab.row_sign[r] * tab.row_dual(r)).collect();
        let combined_rhs = multipliers.iter().zip(&self.constraints).map(|(y, c)| y * c.rhs).sum();
        FarkasCertificate { multipliers, combined_rhs }
    }
}

impl FarkasCertificate {
    /// Re-checks the certificate against the program's constraints.
    pub fn verify(&self, lp: &LinearProgram, tol: f64) -> bool {
        if self.multipliers.len() != lp.constraints.len() {
            return false;
        }
        let combined: f64 = self.multipliers.iter().zip(&lp.constraints).map(|(y, c)| y * c.rhs).sum();
        if combined >= -tol || (combined - self.combined_rhs).abs() > tol {
            return false;
        }
        let signs_ok = self.multipliers.iter().zip(&lp.constraints).all(|(y, c)| match c.relation {
            Relation::Le => *y >= -tol,
            Relation::Ge => *y <= tol,
            Relation::Eq => true,
        });
        let columns_ok = (0..lp.n_vars).all(|j| {
            let s: f64 = self.multipliers.iter().zip(&lp.constraints).map(|(y, c)| y * c.coeffs[j]).sum();
            s >= -tol
        });
        signs_ok && columns_ok
    }
}

/// Dense tableau. Column layout: structural variables, one slack or surplus
/// column per inequality, one artificial per `>=`/`=` row (after making every
/// right-hand side nonnegative), then the right-hand side.
struct Tableau {
    width: usize,
    m: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    costs: Vec<f64>,
    cost_row: Vec<f64>,
    /// `+1` or `−1`: the factor applied to each original row.
    row_sign: Vec<f64>,
    /// Column that formed the identity in row `r` at the start.
    initial: Vec<usize>,
    artificials: Vec<usize>,
    /// Columns never allowed to enter.
    barred: Vec<usize>,
    rhs_scale: f64,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.n_vars;
        let m = lp.constraints.len();
        let mut row_sign = Vec::with_capacity(m);
        let mut relations = Vec::with_capacity(m);
        for c in &lp.constraints {
            let s = if c.rhs < 0.0 { -1.0 } else { 1.0 };
            row_sign.push(s);
            relations.push(match (c.relation, s < 0.0) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            });
        }
        let n_slack = relations.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = relations.iter().filter(|r| **r != Relation::Le).count();
        let n_cols = n + n_slack + n_art;
        let width = n_cols + 1;
        let mut data = vec![0.0; m * width];
        let mut initial = vec![0; m];
        let mut artificials = Vec::with_capacity(n_art);
        let (mut next_slack, mut next_art) = (n, n + n_slack);
        let mut rhs_scale: f64 = 0.0;
        for (r, c) in lp.constraints.iter().enumerate() {
            let s = row_sign[r];
            let line = &mut data[r * width..(r + 1) * width];
            for (dst, a) in line.iter_mut().zip(&c.coeffs) {
                *dst = s * a;
            }
            line[width - 1] = s * c.rhs;
            rhs_scale = rhs_scale.max(c.rhs.abs());
            match relations[r] {
                Relation::Le => {
                    line[next_slack] = 1.0;
                    initial[r] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    line[next_slack] = -1.0;
                    next_slack += 1;
                    line[next_art] = 1.0;
                    initial[r] = next_art;
                    artificials.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    line[next_art] = 1.0;
                    initial[r] = next_art;
                    artificials.push(next_art);
                    next_art += 1;
                }
            }
        }
        Self {
            width,
            m,
            data,
            basis: initial.clone(),
            costs: Vec::new(),
            cost_row: vec![0.0; n_cols],
            row_sign,
            initial,
            artificials,
            barred: Vec::new(),
            rhs_scale,
        }
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.width - 1]
    }

    fn n_cols(&self) -> usize {
        self.width - 1
    }

    /// Internal (minimised) objective at the current basis.
    fn objective_value(&self) -> f64 {
        -(0..self.m).map(|r| self.costs[self.basis[r]] * self.rhs(r)).sum::<f64>()
    }

    /// Simplex multiplier of normalized row `r`.
    fn row_dual(&self, r: usize) -> f64 {
        let c = self.initial[r];
        self.costs[c] - self.cost_row[c]
    }

    fn set_costs(&mut self, costs: Vec<f64>) {
        let n = self.n_cols();
        self.cost_row = costs.clone();
        for r in 0..self.m {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                let row = &self.data[r * self.width..r * self.width + n];
                for (d, a) in self.cost_row.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
        self.costs = costs;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        self.data[r * w + c] = 1.0;
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        let nonzero: Vec<usize> = (0..w).filter(|&j| pivot_row[j] != 0.0).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f != 0.0 {
                let line = &mut self.data[i * w..(i + 1) * w];
                for &j in &nonzero {
                    line[j] -= f * pivot_row[j];
                }
                line[c] = 0.0;
            }
        }
        let f = self.cost_row[c];
        if f != 0.0 {
            for &j in &nonzero {
                if j < w - 1 {
                    self.cost_row[j] -= f * pivot_row[j];
                }
            }
            self.cost_row[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn iteration_cap(&self) -> usize {
        50 * (self.m + self.n_cols()) + 1000
    }

    /// Pivots basic artificials at zero level out of the basis where a usable
    /// entry exists; rows without one are redundant and keep their artificial.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if !self.artificials.contains(&self.basis[r]) {
                continue;
            }
            let row_max = (0..self.n_cols()).map(|j| self.at(r, j).abs()).fold(0.0, f64::max);
            let candidate = (0..self.n_cols())
                .filter(|j| !self.artificials.contains(j))
                .filter(|&j| self.at(r, j).abs() > PIVOT_REL * row_max.max(1.0))
                .max_by(|&a, &b| self.at(r, a).abs().total_cmp(&self.at(r, b).abs()));
            if let Some(c) = candidate {
                self.pivot(r, c);
            }
        }
    }

    /// Returns `false` when the program is unbounded. With `skip_rays`, a column
    /// with no usable pivot is barred for the rest of the pass instead.
    fn primal_simplex(&mut self, skip_rays: bool) -> Result<bool, GameError> {
        let n = self.n_cols();
        let mut degenerate_run = 0usize;
        let mut is_barred = vec![false; n];
        for &b in &self.barred {
            is_barred[b] = true;
        }
        for _ in 0..self.iteration_cap() {
            let bland = degenerate_run > DEGENERATE_RUN;
            let mut enter: Option<usize> = None;
            for (j, &d) in self.cost_row.iter().enumerate().take(n) {
                if d < -COST_EPS && !is_barred[j] {
                    if bland {
                        enter = Some(j);
                        break;
                    }
                    if enter.map_or(true, |e| d < self.cost_row[e]) {
                        enter = Some(j);
                    }
                }
            }
            let Some(c) = enter else { return Ok(true) };
            let col_max = (0..self.m).map(|r| self.at(r, c).abs()).fold(0.0, f64::max);
            let tol = PIVOT_REL * col_max.max(1e-3);
            // Harris-style two-pass ratio test: the bound with a small slack, then
            // the largest pivot among rows within it.
            let mut bound = f64::INFINITY;
            for r in 0..self.m {
                let a = self.at(r, c);
                if a > tol {
                    bound = bound.min((self.rhs(r).max(0.0) + FEAS_EPS) / a);
                }
            }
            if !bound.is_finite() {
                if skip_rays {
                    is_barred[c] = true;
                    continue;
                }
                return Ok(false);
            }
            let mut leave: Option<usize> = None;
            for r in 0..self.m {
                let a = self.at(r, c);
                if a > tol && self.rhs(r).max(0.0) / a <= bound {
                    leave = match leave {
                        None => Some(r),
                        Some(cur) if bland => Some(if self.basis[r] < self.basis[cur] { r } else { cur }),
                        Some(cur) => Some(if a > self.at(cur, c) { r } else { cur }),
                    };
                }
            }
            let Some(r) = leave else { return Ok(false) };
            let ratio = self.rhs(r).max(0.0) / self.at(r, c);
            degenerate_run = if ratio <= FEAS_EPS { degenerate_run + 1 } else { 0 };
            self.pivot(r, c);
            // Clamp drift below zero left by the relaxed ratio test.
            for i in 0..self.m {
                let idx = i * self.width + self.width - 1;
                if self.data[idx] < 0.0 {
                    self.data[idx] = 0.0;
                }
            }
        }
        Err(GameError::NumericalFailure("primal simplex iteration cap reached".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &LinearProgram) -> LpSolution {
        match lp.solve().unwrap() {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::new(2, Sense::Maximize, vec![3.0, 5.0]);
        lp.add(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add(vec![3.0, 2.0], Relation::Le, 18.0);
        let s = optimal(&lp);
        assert!((s.objective - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        let dual_objective: f64 = s.duals.iter().zip(&lp.constraints).map(|(y, c)| y * c.rhs).sum();
        assert!((dual_objective - 36.0).abs() < 1e-9);
        assert!(s.duals.iter().all(|y| *y >= -1e-12));
    }

    #[test]
    fn mixed_relations_need_phase_one() {
        // min x + y, x + y >= 2, x - y = 1 -> x = 1.5, y = 0.5
        let mut lp = LinearProgram::new(2, Sense::Minimize, vec![1.0, 1.0]);
        lp.add(vec![1.0, 1.0], Relation::Ge, 2.0);
        lp.add(vec![1.0, -1.0], Relation::Eq, 1.0);
        let s = optimal(&lp);
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!((s.x[0] - s.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_costs_with_infeasible_start() {
        // max x, x >= 1, x <= 3
        let mut lp = LinearProgram::new(1, Sense::Maximize, vec![1.0]);
        lp.add(vec![1.0], Relation::Ge, 1.0);
        lp.add(vec![1.0], Relation::Le, 3.0);
        assert!((optimal(&lp).objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_system_yields_certificate() {
        let mut lp = LinearProgram::feasibility(2);
        lp.add(vec![1.0, 1.0], Relation::Le, 1.0);
        lp.add(vec![1.0, 1.0], Relation::Ge, 2.0);
        match lp.solve().unwrap() {
            LpOutcome::Infeasible(cert) => assert!(cert.verify(&lp, 1e-9)),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(2, Sense::Maximize, vec![1.0, 0.0]);
        lp.add(vec![-1.0, 1.0], Relation::Le, 1.0);
        assert!(matches!(lp.solve().unwrap(), LpOutcome::Unbounded));
    }

    #[test]
    fn forged_certificates_are_rejected() {
        let mut lp = LinearProgram::feasibility(1);
        lp.add(vec![1.0], Relation::Le, 1.0);
        let cert = FarkasCertificate { multipliers: vec![1.0], combined_rhs: -1.0 };
        assert!(!cert.verify(&lp, 1e-9));
    }
}
