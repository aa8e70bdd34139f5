//! Linear programs for maximum-utility equilibria.
//!
//! [`solve_lp`] is a dense two-phase tableau simplex (Dantzig pricing that
//! falls back to Bland's rule while stalled on degenerate pivots). The final
//! basis is re-solved from the original data by Gaussian elimination, and a
//! dual vector from the same basis bounds the optimum from the other side.

use serde::Serialize;

use crate::equilibrium::JointDist;
use crate::error::{Error, Result};
use crate::game::Game;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
/// Degenerate pivots in a row before switching to Bland's rule.
const STALL_LIMIT: usize = 50;
/// Relative size of the right-hand-side relaxation used during pivoting.
const PERTURBATION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Serialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `max` or `min` of `objective · x` subject to `constraints`, `x >= 0`.
#[derive(Debug, Clone, Serialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub maximize: bool,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, maximize: bool) -> Self {
        Self { objective, maximize, constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    /// Appends `sum x = 1`.
    pub fn add_normalization(&mut self) {
        self.add(vec![1.0; self.num_vars()], Sense::Eq, 1.0);
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::input("LP has no variables"));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("LP objective has a non-finite coefficient"));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::input(format!(
                    "constraint {r} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("constraint {r} has a non-finite entry")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value in the LP's own sense; NaN unless optimal.
    pub value: f64,
    pub x: Vec<f64>,
    /// Objective of the dual solution read off the final basis.
    pub dual_bound: f64,
    /// Largest negative reduced cost of that dual solution (0 when dual feasible).
    pub dual_infeasibility: f64,
    /// Largest constraint or sign violation of `x`.
    pub primal_violation: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn without_optimum(status: LpStatus, n: usize, iterations: usize) -> Self {
        Self {
            status,
            value: f64::NAN,
            x: vec![0.0; n],
            dual_bound: f64::NAN,
            dual_infeasibility: f64::NAN,
            primal_violation: f64::NAN,
            iterations,
        }
    }
}

/// Standard form `A x = b`, `b >= 0`, with slack/surplus columns appended.
struct Standard {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    /// Minimization costs over all structural and slack columns.
    cost: Vec<f64>,
    /// Row starts with its slack basic (`<=` rows); otherwise needs an artificial.
    slack_basic: Vec<Option<usize>>,
}

fn standardize(lp: &LinearProgram) -> Standard {
    let n = lp.num_vars();
    let n_slack = lp.constraints.iter().filter(|c| c.sense != Sense::Eq).count();
    let cols = n + n_slack;
    let sign = if lp.maximize { -1.0 } else { 1.0 };
    let mut cost = vec![0.0; cols];
    for (j, &c) in lp.objective.iter().enumerate() {
        cost[j] = sign * c;
    }
    let mut a = Vec::with_capacity(lp.constraints.len());
    let mut b = Vec::with_capacity(lp.constraints.len());
    let mut slack_basic = Vec::with_capacity(lp.constraints.len());
    let mut next_slack = n;
    for c in &lp.constraints {
        let mut row = vec![0.0; cols];
        row[..n].copy_from_slice(&c.coeffs);
        let mut slack = None;
        if c.sense != Sense::Eq {
            row[next_slack] = if c.sense == Sense::Le { 1.0 } else { -1.0 };
            slack = Some(next_slack);
            next_slack += 1;
        }
        let mut rhs = c.rhs;
        if rhs < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
            rhs = -rhs;
        }
        // The slack can start basic only if its coefficient is +1 after the flip.
        let basic = slack.filter(|&s| row[s] > 0.0);
        a.push(row);
        b.push(rhs);
        slack_basic.push(basic);
    }
    Standard { a, b, cost, slack_basic }
}

struct Tableau {
    /// `rows x (cols + 1)`, last entry of each row is the right-hand side.
    t: Vec<Vec<f64>>,
    /// Reduced costs; last entry is minus the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Original constraint index of each tableau row.
    row_ids: Vec<usize>,
    cols: usize,
    iterations: usize,
    max_iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, s: usize) {
        let width = self.cols + 1;
        let p = self.t[r][s];
        let inv = 1.0 / p;
        let pivot_row = {
            let row = &mut self.t[r];
            row.iter_mut().for_each(|v| *v *= inv);
            row[s] = 1.0;
            row.clone()
        };
        // Only the nonzero entries of the pivot row matter for the updates.
        let nz: Vec<usize> = (0..width).filter(|&j| pivot_row[j] != 0.0).collect();
        let dense = nz.len() * 3 > width;
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[s];
            if f == 0.0 {
                continue;
            }
            if dense {
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            } else {
                for &j in &nz {
                    row[j] -= f * pivot_row[j];
                }
            }
            row[s] = 0.0;
        }
        let f = self.obj[s];
        if f != 0.0 {
            for &j in &nz {
                self.obj[j] -= f * pivot_row[j];
            }
            self.obj[s] = 0.0;
        }
        self.basis[r] = s;
        self.iterations += 1;
    }

    /// Runs the simplex method over columns `< allowed`.
    fn run(&mut self, allowed: usize) -> Result<PhaseEnd> {
        let rhs = self.cols;
        let mut stalled = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::Solver(format!("simplex hit the iteration limit ({})", self.max_iterations)));
            }
            let bland = stalled >= STALL_LIMIT;
            let entering = if bland {
                (0..allowed).find(|&j| self.obj[j] < -COST_TOL)
            } else {
                let mut best = None;
                let mut best_d = -COST_TOL;
                for j in 0..allowed {
                    if self.obj[j] < best_d {
                        best_d = self.obj[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(s) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[s];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = row[rhs].max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12 {
                            Some((i, ratio))
                        } else if ratio <= lr + 1e-12 {
                            let better = if bland {
                                self.basis[i] < self.basis[li]
                            } else {
                                a > self.t[li][s]
                            };
                            if better {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            if ratio <= 1e-12 {
                stalled += 1;
            } else {
                stalled = 0;
            }
            self.pivot(r, s);
        }
    }

    /// Replaces the perturbed right-hand side by `B^-1 b` and runs dual
    /// simplex pivots until the basis is primal feasible again. Returns
    /// `false` if the unperturbed problem is infeasible.
    fn restore_rhs(&mut self, std: &Standard, allowed: usize) -> Result<bool> {
        let rhs = self.cols;
        let bmat: Vec<Vec<f64>> =
            self.row_ids.iter().map(|&i| self.basis.iter().map(|&j| std.a[i].get(j).copied().unwrap_or(0.0)).collect()).collect();
        let b: Vec<f64> = self.row_ids.iter().map(|&i| std.b[i]).collect();
        let xb = dense_solve(bmat, b).ok_or_else(|| Error::Solver("basis became singular".into()))?;
        for (row, v) in self.t.iter_mut().zip(xb) {
            row[rhs] = v;
        }
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::Solver(format!("simplex hit the iteration limit ({})", self.max_iterations)));
            }
            let leaving = (0..self.t.len())
                .filter(|&r| self.t[r][rhs] < -1e-12)
                .min_by(|&a, &b| self.t[a][rhs].total_cmp(&self.t[b][rhs]));
            let Some(r) = leaving else {
                return Ok(true);
            };
            let row = &self.t[r];
            let mut best: Option<(usize, f64)> = None;
            for j in 0..allowed {
                let a = row[j];
                if a < -PIVOT_TOL {
                    let ratio = self.obj[j].max(0.0) / -a;
                    if best.is_none_or(|(_, br)| ratio < br) {
                        best = Some((j, ratio));
                    }
                }
            }
            match best {
                Some((s, _)) => self.pivot(r, s),
                None => return Ok(false),
            }
        }
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let rhs = self.cols;
        self.obj = vec![0.0; self.cols + 1];
        self.obj[..cost.len()].copy_from_slice(cost);
        for (i, row) in self.t.iter().enumerate() {
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb == 0.0 {
                continue;
            }
            for j in 0..=rhs {
                self.obj[j] -= cb * row[j];
            }
        }
        for &bi in &self.basis {
            self.obj[bi] = 0.0;
        }
    }
}

/// Solves `m x m` system `M z = v` by Gaussian elimination with partial pivoting.
fn dense_solve(mut m: Vec<Vec<f64>>, mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.len();
    for col in 0..n {
        let p = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[p][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, p);
        v.swap(col, p);
        let (top, rest) = m.split_at_mut(col + 1);
        let prow = &top[col];
        for (off, row) in rest.iter_mut().enumerate() {
            let f = row[col] / prow[col];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                row[j] -= f * prow[j];
            }
            v[col + 1 + off] -= f * v[col];
        }
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * z[j]).sum();
        z[i] = (v[i] - s) / m[i][i];
    }
    Some(z)
}

/// Solves a linear program. Malformed input is an input error; numerical
/// failure to meet the `1e-9` feasibility contract is a solver error.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let std = standardize(lp);
    let m = std.a.len();
    let real_cols = std.cost.len();
    let n_art = std.slack_basic.iter().filter(|s| s.is_none()).count();
    let cols = real_cols + n_art;

    let mut t = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = real_cols;
    for i in 0..m {
        let mut row = vec![0.0; cols + 1];
        row[..real_cols].copy_from_slice(&std.a[i]);
        row[cols] = std.b[i];
        // Relax `<=` rows slightly so the initial basis is not degenerate;
        // the true right-hand side is restored before refinement.
        if std.slack_basic[i].is_some() {
            let jitter = (i as f64 * 0.618_033_988_749_895).fract();
            row[cols] += PERTURBATION * (1.0 + jitter) * std.b[i].max(1.0);
        }
        match std.slack_basic[i] {
            Some(s) => basis.push(s),
            None => {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
        }
        t.push(row);
    }
    let mut tab = Tableau {
        t,
        obj: Vec::new(),
        basis,
        row_ids: (0..m).collect(),
        cols,
        iterations: 0,
        max_iterations: 100 * (m + cols) + 1000,
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        phase1[real_cols..].fill(1.0);
        tab.set_costs(&phase1);
        tab.run(cols)?;
        let infeasibility = -tab.obj[cols];
        let scale = 1.0 + std.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if infeasibility > FEAS_TOL * scale {
            return Ok(LpSolution::without_optimum(LpStatus::Infeasible, n, tab.iterations));
        }
        // Pivot remaining (zero-valued) artificials out, dropping redundant rows.
        let mut r = 0;
        while r < tab.t.len() {
            if tab.basis[r] >= real_cols {
                let col = (0..real_cols).max_by(|&a, &b| tab.t[r][a].abs().total_cmp(&tab.t[r][b].abs()));
                match col {
                    Some(j) if tab.t[r][j].abs() > PIVOT_TOL => tab.pivot(r, j),
                    _ => {
                        tab.t.remove(r);
                        tab.basis.remove(r);
                        tab.row_ids.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }
    tab.set_costs(&std.cost);
    if let PhaseEnd::Unbounded = tab.run(real_cols)? {
        return Ok(LpSolution::without_optimum(LpStatus::Unbounded, n, tab.iterations));
    }
    if !tab.restore_rhs(&std, real_cols)? {
        return Ok(LpSolution::without_optimum(LpStatus::Infeasible, n, tab.iterations));
    }
    refine(lp, &std, &tab)
}

fn refine(lp: &LinearProgram, std: &Standard, tab: &Tableau) -> Result<LpSolution> {
    let rows = &tab.row_ids;
    let n = lp.num_vars();
    let m = rows.len();
    let bmat: Vec<Vec<f64>> = rows.iter().map(|&i| tab.basis.iter().map(|&j| std.a[i][j]).collect()).collect();
    let rhs: Vec<f64> = rows.iter().map(|&i| std.b[i]).collect();
    let xb = dense_solve(bmat.clone(), rhs.clone())
        .ok_or_else(|| Error::Solver("final basis is singular".into()))?;
    let mut full = vec![0.0; std.cost.len()];
    for (r, &j) in tab.basis.iter().enumerate() {
        full[j] = xb[r];
    }
    let mut x: Vec<f64> = full[..n].to_vec();
    let mut primal_violation = x.iter().fold(0.0f64, |acc, &v| acc.max(-v));
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    for c in &lp.constraints {
        let lhs: f64 = c.coeffs.iter().zip(&x).map(|(a, b)| a * b).sum();
        let viol = match c.sense {
            Sense::Le => lhs - c.rhs,
            Sense::Ge => c.rhs - lhs,
            Sense::Eq => (lhs - c.rhs).abs(),
        };
        primal_violation = primal_violation.max(viol);
    }
    if primal_violation > FEAS_TOL {
        return Err(Error::Solver(format!("refined solution violates constraints by {primal_violation:e}")));
    }

    let bt: Vec<Vec<f64>> = (0..m).map(|c| (0..m).map(|r| bmat[r][c]).collect()).collect();
    let cb: Vec<f64> = tab.basis.iter().map(|&j| std.cost[j]).collect();
    let y = dense_solve(bt, cb).ok_or_else(|| Error::Solver("final basis is singular".into()))?;
    let mut dual_infeasibility = 0.0f64;
    for j in 0..std.cost.len() {
        let d = std.cost[j] - rows.iter().zip(&y).map(|(&i, yi)| std.a[i][j] * yi).sum::<f64>();
        dual_infeasibility = dual_infeasibility.max(-d);
    }
    let dual_min: f64 = y.iter().zip(&rhs).map(|(a, b)| a * b).sum();
    let value: f64 = lp.objective.iter().zip(&x).map(|(a, b)| a * b).sum();
    let dual_bound = if lp.maximize { -dual_min } else { dual_min };
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        x,
        dual_bound,
        dual_infeasibility,
        primal_violation,
        iterations: tab.iterations,
    })
}

fn require_optimal(sol: &LpSolution, what: &str) -> Result<()> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("{what} LP reported {:?}; a feasible point always exists", sol.status)));
    }
    Ok(())
}

fn normalized(x: &[f64]) -> Vec<f64> {
    let total: f64 = x.iter().sum();
    x.iter().map(|v| v / total).collect()
}

/// Symmetric-CCE LP over diagonal distributions.
pub fn symmetric_cce_lp(game: &Game) -> Result<LinearProgram> {
    if game.symmetric_cost_level().is_none() {
        return Err(Error::domain("the symmetric CCE LP requires symmetric costs"));
    }
    let k = game.k();
    let nf = game.n() as f64;
    let g = game.margins(0);
    let share: Vec<f64> = g.iter().map(|v| v / nf).collect();
    let mut lp = LinearProgram::new(share.clone(), true);
    for a in 0..k {
        let row = (0..k)
            .map(|p| {
                let dev = match a.cmp(&p) {
                    std::cmp::Ordering::Less => g[a],
                    std::cmp::Ordering::Equal => g[a] / nf,
                    std::cmp::Ordering::Greater => 0.0,
                };
                dev - share[p]
            })
            .collect();
        lp.add(row, Sense::Le, 0.0);
    }
    lp.add_normalization();
    Ok(lp)
}

/// Maximum per-player utility over symmetric (diagonal) CCEs.
pub fn lp_best_symmetric_cce(game: &Game) -> Result<(JointDist, f64, LpSolution)> {
    let lp = symmetric_cce_lp(game)?;
    let sol = solve_lp(&lp)?;
    require_optimal(&sol, "symmetric CCE")?;
    let dist = JointDist::diagonal(game.k(), game.n(), normalized(&sol.x))?;
    Ok((dist, sol.value, sol))
}

/// Whose utility a duopoly LP maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    P1,
    P2,
    Sum,
}

impl Objective {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "p1" | "player1" | "1" => Ok(Objective::P1),
            "p2" | "player2" | "2" => Ok(Objective::P2),
            "sum" | "total" => Ok(Objective::Sum),
            other => Err(Error::input(format!("unknown objective '{other}' (p1, p2, sum)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Objective::P1 => "p1",
            Objective::P2 => "p2",
            Objective::Sum => "sum",
        }
    }
}

/// `u[i][x1 * k + x2]`, player `i`'s utility at `(x1, x2)`.
fn duopoly_utilities(game: &Game) -> Result<[Vec<f64>; 2]> {
    if game.n() != 2 {
        return Err(Error::domain("duopoly LPs need n = 2"));
    }
    let k = game.k();
    let mut u = [vec![0.0; k * k], vec![0.0; k * k]];
    for x1 in 0..k {
        for x2 in 0..k {
            let x = [x1, x2];
            u[0][x1 * k + x2] = game.utility_unchecked(0, &x);
            u[1][x1 * k + x2] = game.utility_unchecked(1, &x);
        }
    }
    Ok(u)
}

fn duopoly_objective(u: &[Vec<f64>; 2], objective: Objective) -> Vec<f64> {
    match objective {
        Objective::P1 => u[0].clone(),
        Objective::P2 => u[1].clone(),
        Objective::Sum => u[0].iter().zip(&u[1]).map(|(a, b)| a + b).collect(),
    }
}

/// Full-support duopoly CCE LP (`k^2` variables, `2k` deviation rows).
pub fn duopoly_cce_lp(game: &Game, objective: Objective) -> Result<LinearProgram> {
    let u = duopoly_utilities(game)?;
    let k = game.k();
    let mut lp = LinearProgram::new(duopoly_objective(&u, objective), true);
    for a in 0..k {
        let row = (0..k * k).map(|idx| u[0][a * k + idx % k] - u[0][idx]).collect();
        lp.add(row, Sense::Le, 0.0);
    }
    for a in 0..k {
        let row = (0..k * k).map(|idx| u[1][(idx / k) * k + a] - u[1][idx]).collect();
        lp.add(row, Sense::Le, 0.0);
    }
    lp.add_normalization();
    Ok(lp)
}

/// Duopoly CE LP (`k^2` variables, `2k(k-1)` incentive rows).
pub fn duopoly_ce_lp(game: &Game, objective: Objective) -> Result<LinearProgram> {
    let u = duopoly_utilities(game)?;
    let k = game.k();
    let mut lp = LinearProgram::new(duopoly_objective(&u, objective), true);
    for p in 0..k {
        for alt in (0..k).filter(|&a| a != p) {
            let mut row = vec![0.0; k * k];
            for x2 in 0..k {
                row[p * k + x2] = u[0][alt * k + x2] - u[0][p * k + x2];
            }
            lp.add(row, Sense::Le, 0.0);
        }
    }
    for p in 0..k {
        for alt in (0..k).filter(|&a| a != p) {
            let mut row = vec![0.0; k * k];
            for x1 in 0..k {
                row[x1 * k + p] = u[1][x1 * k + alt] - u[1][x1 * k + p];
            }
            lp.add(row, Sense::Le, 0.0);
        }
    }
    lp.add_normalization();
    Ok(lp)
}

/// Maximum-objective duopoly CCE.
pub fn lp_best_cce_duopoly(game: &Game, objective: Objective) -> Result<(JointDist, f64, LpSolution)> {
    let sol = solve_lp(&duopoly_cce_lp(game, objective)?)?;
    require_optimal(&sol, "duopoly CCE")?;
    let dist = JointDist::dense2(game.k(), normalized(&sol.x))?;
    Ok((dist, sol.value, sol))
}

/// Maximum-objective duopoly CE.
pub fn lp_best_ce_duopoly(game: &Game, objective: Objective) -> Result<(JointDist, f64, LpSolution)> {
    let sol = solve_lp(&duopoly_ce_lp(game, objective)?)?;
    require_optimal(&sol, "duopoly CE")?;
    let dist = JointDist::dense2(game.k(), normalized(&sol.x))?;
    Ok((dist, sol.value, sol))
}
