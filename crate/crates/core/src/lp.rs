//! Dense two-phase primal simplex with Bland's anti-cycling pivot rule.
//!
//! Sized for the small programs the extreme-point designer assembles
//! (tens of variables); determinism matters more than speed here, so the
//! pivot rule and all orderings are fixed.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// minimize cost^T z  subject to  eq_lhs z = eq_rhs, ineq_lhs z <= ineq_rhs,
/// z_j >= lower_bounds[j] (use -inf for a free variable).
#[derive(Debug, Clone)]
pub struct LpProblem<R: Real> {
    pub cost: Vec<R>,
    pub eq_lhs: Matrix<R>,
    pub eq_rhs: Vec<R>,
    pub ineq_lhs: Matrix<R>,
    pub ineq_rhs: Vec<R>,
    pub lower_bounds: Vec<R>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution<R: Real> {
    pub status: LpStatus,
    pub z: Vec<R>,
    pub objective: R,
}

impl<R: Real> LpProblem<R> {
    /// All-zero problem skeleton with `n` variables bounded below by 0.
    pub fn new(n: usize) -> Self {
        LpProblem {
            cost: vec![R::zero(); n],
            eq_lhs: Matrix::zeros(0, n),
            eq_rhs: Vec::new(),
            ineq_lhs: Matrix::zeros(0, n),
            ineq_rhs: Vec::new(),
            lower_bounds: vec![R::zero(); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let check = |what: &'static str, expected: usize, actual: usize| {
            if expected != actual {
                Err(Error::DimensionMismatch {
                    what,
                    expected,
                    actual,
                })
            } else {
                Ok(())
            }
        };
        check("eq_lhs columns", n, self.eq_lhs.cols())?;
        check("ineq_lhs columns", n, self.ineq_lhs.cols())?;
        check("eq_rhs length", self.eq_lhs.rows(), self.eq_rhs.len())?;
        check("ineq_rhs length", self.ineq_lhs.rows(), self.ineq_rhs.len())?;
        check("lower_bounds length", n, self.lower_bounds.len())?;
        let finite = self.cost.iter().all(|x| x.is_finite())
            && self.eq_lhs.data().iter().all(|x| x.is_finite())
            && self.ineq_lhs.data().iter().all(|x| x.is_finite())
            && self.eq_rhs.iter().all(|x| x.is_finite())
            && self.ineq_rhs.iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::DimensionMismatch {
                what: "finite LP coefficients",
                expected: n,
                actual: 0,
            });
        }
        Ok(())
    }
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;

struct Tableau<R: Real> {
    // rows x (cols + 1); last column is the rhs
    rows: usize,
    cols: usize,
    t: Vec<R>,
    basis: Vec<usize>,
}

impl<R: Real> Tableau<R> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> R {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> R {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.cols + 1;
        let p = self.at(row, col);
        for j in 0..w {
            let v = self.t[row * w + j] / p;
            self.t[row * w + j] = v;
        }
        self.t[row * w + col] = R::one();
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let f = self.at(i, col);
            if f == R::zero() {
                continue;
            }
            for j in 0..w {
                let v = self.t[i * w + j] - f * self.t[row * w + j];
                self.t[i * w + j] = v;
            }
            self.t[i * w + col] = R::zero();
        }
        self.basis[row] = col;
    }

    /// Bland's rule simplex on the current tableau. `allowed` marks columns
    /// that may enter; returns Ok(true) on optimality, Ok(false) on
    /// unboundedness.
    fn run<F: Fn(usize) -> bool>(
        &mut self,
        cost: &[R],
        allowed: F,
        iter_cap: usize,
    ) -> Result<bool> {
        let eps = R::of(PIVOT_TOL);
        // reduced cost row kept implicitly: c_j - c_B^T B^{-1} A_j
        let mut iters = 0usize;
        loop {
            // reduced costs against the current basis
            let mut entering = None;
            for j in 0..self.cols {
                if !allowed(j) {
                    continue;
                }
                if self.basis.contains(&j) {
                    continue;
                }
                let mut red = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    red = red - cost[b] * self.at(i, j);
                }
                if red < -eps {
                    entering = Some(j); // Bland: smallest index
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(true);
            };
            // ratio test; Bland tie-break on the smallest basis index
            let mut leave: Option<(usize, R)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > eps {
                    let ratio = self.rhs(i) / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - eps
                                || (ratio < lr + eps && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false); // unbounded direction
            };
            self.pivot(row, col);
            iters += 1;
            if iters > iter_cap {
                return Err(Error::MaxIterations { iterations: iters });
            }
        }
    }
}

/// Two-phase primal simplex. The status is exact: `Optimal` carries a
/// feasible vertex, `Infeasible`/`Unbounded` are certified by phase 1 /
/// the ratio test; cycling trips `MaxIterations` instead of lying.
pub fn solve<R: Real>(lp: &LpProblem<R>) -> Result<LpSolution<R>> {
    lp.validate()?;
    let n = lp.num_vars();
    let m_eq = lp.eq_lhs.rows();
    let m_in = lp.ineq_lhs.rows();
    let m = m_eq + m_in;

    // Variable transform to y >= 0:
    //   finite lower bound l: z = y + l
    //   free variable:       z = y+ - y-   (two columns)
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n); // (plus col, minus col)
    let mut shift: Vec<R> = Vec::with_capacity(n);
    let mut ncols = 0usize;
    for j in 0..n {
        let lb = lp.lower_bounds[j];
        if lb.is_finite() {
            col_of.push((ncols, None));
            shift.push(lb);
            ncols += 1;
        } else {
            col_of.push((ncols, Some(ncols + 1)));
            shift.push(R::zero());
            ncols += 2;
        }
    }
    let nslack = m_in;
    let total = ncols + nslack + m; // structurals + slacks + artificials

    // Assemble rows: equalities then inequalities (with slack).
    let w = total + 1;
    let mut t = vec![R::zero(); m * w];
    let fill = |i: usize, row: &[R], rhs_raw: R, slack: Option<usize>, tab: &mut Vec<R>| {
        // substitute z = y + shift (or y+ - y-)
        let mut rhs = rhs_raw;
        for j in 0..n {
            let a = row[j];
            if a == R::zero() {
                continue;
            }
            rhs = rhs - a * shift[j];
            let (cp, cm) = col_of[j];
            tab[i * w + cp] = tab[i * w + cp] + a;
            if let Some(cm) = cm {
                tab[i * w + cm] = tab[i * w + cm] - a;
            }
        }
        if let Some(s) = slack {
            tab[i * w + ncols + s] = R::one();
        }
        tab[i * w + total] = rhs;
    };
    for i in 0..m_eq {
        let row: Vec<R> = lp.eq_lhs.row(i).to_vec();
        fill(i, &row, lp.eq_rhs[i], None, &mut t);
    }
    for i in 0..m_in {
        let row: Vec<R> = lp.ineq_lhs.row(i).to_vec();
        fill(m_eq + i, &row, lp.ineq_rhs[i], Some(i), &mut t);
    }

    // Make rhs nonnegative, then add artificial columns as the start basis.
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        if t[i * w + total] < R::zero() {
            for j in 0..w {
                t[i * w + j] = -t[i * w + j];
            }
        }
        let art = ncols + nslack + i;
        t[i * w + art] = R::one();
        basis.push(art);
    }

    let mut tab = Tableau {
        rows: m,
        cols: total,
        t,
        basis,
    };
    let iter_cap = 10 * (m + total) * (m + total);

    // Phase 1: drive the artificials to zero.
    let mut phase1_cost = vec![R::zero(); total];
    for c in phase1_cost.iter_mut().skip(ncols + nslack) {
        *c = R::one();
    }
    let optimal = tab.run(&phase1_cost, |_| true, iter_cap)?;
    if !optimal {
        // phase 1 is bounded below by zero; an "unbounded" verdict can only
        // come from pivot-threshold misjudgment, so refuse to certify
        return Err(Error::MaxIterations { iterations: 0 });
    }
    let art_value: R = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= ncols + nslack)
        .map(|(i, _)| tab.rhs(i))
        .sum();
    if art_value > R::of(FEAS_TOL) {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            z: vec![R::zero(); n],
            objective: R::zero(),
        });
    }
    // Pivot lingering zero-level artificials out where possible; rows that
    // are zero across all real columns are redundant and stay parked.
    for i in 0..m {
        if tab.basis[i] < ncols + nslack {
            continue;
        }
        let eps = R::of(PIVOT_TOL);
        if let Some(col) = (0..ncols + nslack).find(|&j| tab.at(i, j).abs() > eps) {
            tab.pivot(i, col);
        }
    }

    // Phase 2: original objective, artificials barred from entering.
    let mut phase2_cost = vec![R::zero(); total];
    for (&(cp, cm), &c) in col_of.iter().zip(&lp.cost) {
        phase2_cost[cp] = c;
        if let Some(cm) = cm {
            phase2_cost[cm] = -c;
        }
    }
    let limit = ncols + nslack;
    let optimal = tab.run(&phase2_cost, |j| j < limit, iter_cap)?;
    if !optimal {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            z: vec![R::zero(); n],
            objective: R::neg_infinity(),
        });
    }

    // Read the vertex back in original coordinates.
    let mut y = vec![R::zero(); total];
    for (i, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rhs(i);
    }
    let mut z = vec![R::zero(); n];
    for j in 0..n {
        let (cp, cm) = col_of[j];
        z[j] = y[cp] + shift[j];
        if let Some(cm) = cm {
            z[j] = z[j] - y[cm];
        }
    }
    let objective = lp
        .cost
        .iter()
        .zip(&z)
        .map(|(&c, &x)| c * x)
        .sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        z,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn minimize_with_lower_bound() {
        // min x s.t. x >= 3
        let mut lp = LpProblem::<f64>::new(1);
        lp.cost = vec![1.0];
        lp.lower_bounds = vec![3.0];
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.z[0], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.objective, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn textbook_simplex() {
        // min -x - y s.t. x + y <= 1, x, y >= 0  => objective -1
        let mut lp = LpProblem::<f64>::new(2);
        lp.cost = vec![-1.0, -1.0];
        lp.ineq_lhs = Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        lp.ineq_rhs = vec![1.0];
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.objective, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_system() {
        // x <= -1 with x >= 0
        let mut lp = LpProblem::<f64>::new(1);
        lp.cost = vec![0.0];
        lp.ineq_lhs = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        lp.ineq_rhs = vec![-1.0];
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        // min -x, x >= 0, no other constraints
        let mut lp = LpProblem::<f64>::new(1);
        lp.cost = vec![-1.0];
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variable_goes_negative() {
        // min x s.t. x >= -5 free encoding via -inf bound and x + 5 >= 0 row.
        let mut lp = LpProblem::<f64>::new(1);
        lp.cost = vec![1.0];
        lp.lower_bounds = vec![f64::NEG_INFINITY];
        lp.ineq_lhs = Matrix::from_vec(1, 1, vec![-1.0]).unwrap();
        lp.ineq_rhs = vec![5.0]; // -x <= 5  <=>  x >= -5
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.z[0], -5.0, epsilon = 1e-9);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        // x + y = 1 duplicated; min x
        let mut lp = LpProblem::<f64>::new(2);
        lp.cost = vec![1.0, 0.0];
        lp.eq_lhs = Matrix::from_vec(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        lp.eq_rhs = vec![1.0, 1.0];
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.objective, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.z[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn equality_with_negative_rhs() {
        let mut lp = LpProblem::<f64>::new(2);
        lp.cost = vec![1.0, 1.0];
        lp.eq_lhs = Matrix::from_vec(1, 2, vec![-1.0, -1.0]).unwrap();
        lp.eq_rhs = vec![-2.0];
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.objective, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn determinism_bitwise() {
        let mut lp = LpProblem::<f64>::new(3);
        lp.cost = vec![-1.0, -2.0, 0.5];
        lp.ineq_lhs =
            Matrix::from_vec(2, 3, vec![1.0, 1.0, 1.0, 2.0, 0.5, 1.0]).unwrap();
        lp.ineq_rhs = vec![1.0, 1.5];
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        assert_eq!(a.z, b.z);
        assert!(a.objective == b.objective);
    }
}
