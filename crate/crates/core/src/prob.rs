//! Probability data model: pmfs, column-stochastic channels, problem
//! instances, leakage budgets and perturbation vectors, plus the validity
//! predicates everything else leans on.
//!
//! Orientation is fixed globally: column `j` of a [`Channel`] is the
//! conditional pmf given the `j`-th conditioning outcome, so
//! `P_{X|Y} * P_Y = P_X` reads exactly as written.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Default tolerance for pmf / column-stochasticity checks.
pub const DEFAULT_STOCHASTIC_TOL: f64 = 1e-9;
/// Default tolerance for mixture constraints (LP solutions carry solver noise).
pub const DEFAULT_MIXTURE_TOL: f64 = 1e-8;
/// Letters with weight at or below this are treated as unused.
pub const UNUSED_WEIGHT: f64 = 1e-12;

/// Which f-divergence bounds the per-letter leakage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakageMeasure {
    /// chi-square budget; the enforced constraint is chi2 <= eps_i^2
    /// (the norm form ||L||_2 <= 1 of the perturbation analysis).
    ChiSquare,
    /// l1 budget; the enforced constraint is l1 <= eps_i (||J||_1 <= 1).
    L1,
}

impl LeakageMeasure {
    pub fn name(self) -> &'static str {
        match self {
            LeakageMeasure::ChiSquare => "chi2",
            LeakageMeasure::L1 => "l1",
        }
    }
}

/// A finite probability vector with tolerance-checked normalization.
/// Entries within `[-tol, tol]` are clamped to exact zero on construction;
/// no negative mass survives.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<R: Real> {
    values: Vec<R>,
    tol: R,
}

impl<R: Real> Pmf<R> {
    pub fn new(values: Vec<R>, tol: R) -> Result<Self> {
        let mut clamped = values;
        for (i, v) in clamped.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NegativeMass {
                    index: i,
                    value: v.as_f64(),
                });
            }
            if *v < -tol {
                return Err(Error::NegativeMass {
                    index: i,
                    value: v.as_f64(),
                });
            }
            if v.abs() <= tol {
                *v = R::zero();
            }
        }
        let sum: R = clamped.iter().copied().sum();
        if (sum - R::one()).abs() > tol {
            return Err(Error::NotNormalized { sum: sum.as_f64() });
        }
        Ok(Pmf {
            values: clamped,
            tol,
        })
    }

    /// Construct with the default stochasticity tolerance.
    pub fn with_default_tol(values: Vec<R>) -> Result<Self> {
        Pmf::new(values, R::of(DEFAULT_STOCHASTIC_TOL))
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn tol(&self) -> R {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> R {
        self.values[i]
    }

    /// Indices carrying strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.values[i] > R::zero()).collect()
    }
}

/// A column-stochastic conditional-distribution matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<R: Real> {
    matrix: Matrix<R>,
    tol: R,
}

impl<R: Real> Channel<R> {
    pub fn new(matrix: Matrix<R>, tol: R) -> Result<Self> {
        for j in 0..matrix.cols() {
            let mut sum = R::zero();
            for i in 0..matrix.rows() {
                let v = matrix[(i, j)];
                if v < -tol {
                    return Err(Error::NegativeMass {
                        index: i * matrix.cols() + j,
                        value: v.as_f64(),
                    });
                }
                sum = sum + v;
            }
            if (sum - R::one()).abs() > tol {
                return Err(Error::NotStochastic {
                    col: j,
                    sum: sum.as_f64(),
                });
            }
        }
        // clamp tiny negatives introduced by upstream arithmetic
        let mut m = matrix;
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)] < R::zero() {
                    m[(i, j)] = R::zero();
                }
            }
        }
        Ok(Channel { matrix: m, tol })
    }

    pub fn from_rows(rows: &[Vec<R>], tol: R) -> Result<Self> {
        Channel::new(Matrix::from_rows(rows)?, tol)
    }

    pub fn with_default_tol(matrix: Matrix<R>) -> Result<Self> {
        Channel::new(matrix, R::of(DEFAULT_STOCHASTIC_TOL))
    }

    pub fn matrix(&self) -> &Matrix<R> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    /// The conditional pmf given the `j`-th outcome.
    pub fn column(&self, j: usize) -> Result<Pmf<R>> {
        Pmf::new(self.matrix.col(j), self.tol)
    }

    pub fn tol(&self) -> R {
        self.tol
    }
}

/// Per-letter leakage budgets, sorted non-increasing, at least two letters.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetVector<R: Real> {
    epsilons: Vec<R>,
}

impl<R: Real> BudgetVector<R> {
    pub fn new(epsilons: Vec<R>) -> Result<Self> {
        if epsilons.len() < 2 {
            return Err(Error::SingleLetter);
        }
        if let Some(i) = epsilons.iter().position(|e| !e.is_finite()) {
            return Err(Error::NegativeMass {
                index: i,
                value: epsilons[i].as_f64(),
            });
        }
        for w in epsilons.windows(2) {
            if w[1] > w[0] {
                return Err(Error::UnsortedBudgets);
            }
        }
        if let Some(last) = epsilons.last() {
            if *last < R::zero() {
                return Err(Error::NegativeMass {
                    index: epsilons.len() - 1,
                    value: last.as_f64(),
                });
            }
        }
        Ok(BudgetVector { epsilons })
    }

    pub fn epsilons(&self) -> &[R] {
        &self.epsilons
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    pub fn get(&self, i: usize) -> R {
        self.epsilons[i]
    }

    /// Letters bound to perfect privacy (epsilon exactly zero).
    pub fn perfect_set(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.epsilons[i] == R::zero())
            .collect()
    }
}

/// Tolerances carried by a problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<R: Real> {
    pub stochastic: R,
    pub mixture: R,
}

impl<R: Real> Default for Tolerances<R> {
    fn default() -> Self {
        Tolerances {
            stochastic: R::of(DEFAULT_STOCHASTIC_TOL),
            mixture: R::of(DEFAULT_MIXTURE_TOL),
        }
    }
}

/// A complete design problem: leakage channel, useful-data marginal,
/// budgets and the divergence the budgets are measured in.
#[derive(Debug, Clone)]
pub struct ProblemInstance<R: Real> {
    pub p_x_given_y: Channel<R>,
    pub p_y: Pmf<R>,
    pub budgets: BudgetVector<R>,
    pub divergence: LeakageMeasure,
    pub tolerances: Tolerances<R>,
}

impl<R: Real> ProblemInstance<R> {
    pub fn new(
        p_x_given_y: Channel<R>,
        p_y: Pmf<R>,
        budgets: BudgetVector<R>,
        divergence: LeakageMeasure,
        tolerances: Tolerances<R>,
    ) -> Result<Self> {
        if p_y.len() != p_x_given_y.cols() {
            return Err(Error::DimensionMismatch {
                what: "P_Y length vs channel columns",
                expected: p_x_given_y.cols(),
                actual: p_y.len(),
            });
        }
        let inst = ProblemInstance {
            p_x_given_y,
            p_y,
            budgets,
            divergence,
            tolerances,
        };
        // The derived P_X must at least be a valid pmf; strict positivity is
        // enforced by marginal_x where the designers need it.
        let product = inst.p_x_given_y.matrix().mul_vec(inst.p_y.values());
        Pmf::new(product, inst.tolerances.stochastic)?;
        Ok(inst)
    }

    pub fn num_x(&self) -> usize {
        self.p_x_given_y.rows()
    }

    pub fn num_y(&self) -> usize {
        self.p_x_given_y.cols()
    }

    pub fn num_letters(&self) -> usize {
        self.budgets.len()
    }

    /// P_X = P_{X|Y} P_Y, strictly positive for designer use.
    pub fn marginal_x(&self) -> Result<Pmf<R>> {
        let product = self.p_x_given_y.matrix().mul_vec(self.p_y.values());
        let pmf = Pmf::new(product, self.tolerances.stochastic)?;
        if let Some(i) = (0..pmf.len()).find(|&i| pmf.get(i) <= R::zero()) {
            return Err(Error::ZeroMarginal { index: i });
        }
        Ok(pmf)
    }
}

/// The direction J of a conditional away from P_X, scaled by epsilon:
/// zero-sum and norm-bounded according to the leakage measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation<R: Real> {
    pub j: Vec<R>,
    /// 1-based letter index, matching the u_i naming.
    pub letter_index: usize,
}

impl<R: Real> Perturbation<R> {
    /// Validate the defining properties: sum(j) = 0 and the measure-specific
    /// unit-norm bound (`||j||_1 <= 1` for l1, `||diag(1/sqrt(P_X)) j||_2 <= 1`
    /// for chi-square).
    pub fn new(
        j: Vec<R>,
        letter_index: usize,
        measure: LeakageMeasure,
        p_x: &Pmf<R>,
        tol: R,
    ) -> Result<Self> {
        let sum: R = j.iter().copied().sum();
        if sum.abs() > tol {
            return Err(Error::MixtureMismatch {
                index: 0,
                residual: sum.as_f64(),
            });
        }
        let norm = match measure {
            LeakageMeasure::L1 => j.iter().map(|x| x.abs()).sum::<R>(),
            LeakageMeasure::ChiSquare => {
                if j.len() != p_x.len() {
                    return Err(Error::DimensionMismatch {
                        what: "perturbation length vs P_X",
                        expected: p_x.len(),
                        actual: j.len(),
                    });
                }
                let mut acc = R::zero();
                for (i, &ji) in j.iter().enumerate() {
                    let px = p_x.get(i);
                    if px <= R::zero() {
                        if ji.abs() > tol {
                            return Err(Error::ZeroMarginal { index: i });
                        }
                        continue;
                    }
                    acc = acc + ji * ji / px;
                }
                acc.sqrt()
            }
        };
        if norm > R::one() + tol {
            return Err(Error::BudgetExceeded {
                letter: letter_index,
                norm: norm.as_f64(),
                bound: 1.0,
            });
        }
        Ok(Perturbation { j, letter_index })
    }
}

/// J = (P_{X|U=u} - P_X) / eps, validated against the measure's unit bound.
pub fn perturbation_from_conditional<R: Real>(
    p_x_given_u: &Pmf<R>,
    p_x: &Pmf<R>,
    eps: R,
    letter_index: usize,
    measure: LeakageMeasure,
    tol: R,
) -> Result<Perturbation<R>> {
    assert!(eps > R::zero(), "eps must be positive");
    if p_x_given_u.len() != p_x.len() {
        return Err(Error::DimensionMismatch {
            what: "conditional vs marginal length",
            expected: p_x.len(),
            actual: p_x_given_u.len(),
        });
    }
    let j: Vec<R> = p_x_given_u
        .values()
        .iter()
        .zip(p_x.values())
        .map(|(&a, &b)| (a - b) / eps)
        .collect();
    Perturbation::new(j, letter_index, measure, p_x, tol)
}

/// Residual of the mixture constraint sum_u P_U(u) P_{Y|U=u} = P_Y;
/// columns for unused letters may be absent.
pub fn mixture_residual<R: Real>(
    p_u: &[R],
    columns: &[Option<Vec<R>>],
    p_y: &Pmf<R>,
) -> R {
    let mut worst = R::zero();
    for y in 0..p_y.len() {
        let mut acc = R::zero();
        for (u, col) in columns.iter().enumerate() {
            if let Some(col) = col {
                acc = acc + p_u[u] * col[y];
            }
        }
        worst = worst.max((acc - p_y.get(y)).abs());
    }
    worst
}

/// Recover the filter P_{U|Y}(u|y) = P_U(u) P_{Y|U}(y|u) / P_Y(y).
///
/// Requires the mixture constraint to hold within `mixture_tol`. Columns of
/// the result for outcomes with P_Y(y) = 0 and no mass flow are filled
/// uniformly; mass flowing into a zero-probability outcome is an error.
pub fn bayes_filter<R: Real>(
    p_u: &Pmf<R>,
    p_y_given_u: &Channel<R>,
    p_y: &Pmf<R>,
    mixture_tol: R,
) -> Result<Channel<R>> {
    let k = p_u.len();
    if p_y_given_u.cols() != k {
        return Err(Error::DimensionMismatch {
            what: "P_{Y|U} columns vs letters",
            expected: k,
            actual: p_y_given_u.cols(),
        });
    }
    if p_y_given_u.rows() != p_y.len() {
        return Err(Error::DimensionMismatch {
            what: "P_{Y|U} rows vs |Y|",
            expected: p_y.len(),
            actual: p_y_given_u.rows(),
        });
    }
    let cols: Vec<Option<Vec<R>>> = (0..k)
        .map(|u| Some(p_y_given_u.matrix().col(u)))
        .collect();
    let resid = mixture_residual(p_u.values(), &cols, p_y);
    if resid > mixture_tol {
        let idx = (0..p_y.len())
            .max_by(|&a, &b| {
                let ra = mixture_coord_residual(p_u, p_y_given_u, p_y, a);
                let rb = mixture_coord_residual(p_u, p_y_given_u, p_y, b);
                ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        return Err(Error::MixtureMismatch {
            index: idx,
            residual: resid.as_f64(),
        });
    }
    let mut filter = Matrix::zeros(k, p_y.len());
    for y in 0..p_y.len() {
        let py = p_y.get(y);
        if py <= R::zero() {
            let flow: R = (0..k)
                .map(|u| p_u.get(u) * p_y_given_u.matrix()[(y, u)])
                .sum();
            if flow > mixture_tol {
                return Err(Error::ZeroSupport { index: y });
            }
            let uniform = R::one() / R::of(k as f64);
            for u in 0..k {
                filter[(u, y)] = uniform;
            }
            continue;
        }
        for u in 0..k {
            filter[(u, y)] = p_u.get(u) * p_y_given_u.matrix()[(y, u)] / py;
        }
    }
    Channel::new(filter, mixture_tol.max(R::of(DEFAULT_STOCHASTIC_TOL)))
}

fn mixture_coord_residual<R: Real>(
    p_u: &Pmf<R>,
    p_y_given_u: &Channel<R>,
    p_y: &Pmf<R>,
    y: usize,
) -> R {
    let acc: R = (0..p_u.len())
        .map(|u| p_u.get(u) * p_y_given_u.matrix()[(y, u)])
        .sum();
    (acc - p_y.get(y)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pmf(v: &[f64]) -> Pmf<f64> {
        Pmf::with_default_tol(v.to_vec()).unwrap()
    }

    #[test]
    fn pmf_worked_marginal() {
        let p = Pmf::new(vec![0.5, 0.25, 0.125, 0.125], 1e-9).unwrap();
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn pmf_degenerate_single_outcome() {
        let p = Pmf::new(vec![1.0], 1e-9).unwrap();
        assert_eq!(p.values(), &[1.0]);
    }

    #[test]
    fn pmf_not_normalized() {
        assert!(matches!(
            Pmf::new(vec![0.5, 0.6], 1e-9),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn pmf_clamps_tiny_negatives_to_zero() {
        let p = Pmf::new(vec![1.0, -1e-12, 1e-12], 1e-9).unwrap();
        assert_eq!(p.get(1), 0.0);
        assert_eq!(p.get(2), 0.0);
        assert!(p.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn pmf_rejects_real_negative_mass() {
        assert!(matches!(
            Pmf::new(vec![1.1, -0.1], 1e-9),
            Err(Error::NegativeMass { index: 1, .. })
        ));
    }

    #[test]
    fn budgets_must_be_sorted() {
        assert!(matches!(
            BudgetVector::new(vec![0.01, 0.02]),
            Err(Error::UnsortedBudgets)
        ));
        assert!(BudgetVector::new(vec![0.02, 0.01]).is_ok());
    }

    #[test]
    fn single_letter_rejected() {
        assert!(matches!(
            BudgetVector::<f64>::new(vec![0.01]),
            Err(Error::SingleLetter)
        ));
    }

    fn worked_instance() -> ProblemInstance<f64> {
        let ch = Channel::from_rows(
            &[vec![0.3, 0.8, 0.5, 0.4], vec![0.7, 0.2, 0.5, 0.6]],
            1e-9,
        )
        .unwrap();
        let py = pmf(&[0.5, 0.25, 0.125, 0.125]);
        let budgets = BudgetVector::new(vec![0.01, 0.01, 0.01, 0.0]).unwrap();
        ProblemInstance::new(ch, py, budgets, LeakageMeasure::L1, Tolerances::default())
            .unwrap()
    }

    #[test]
    fn marginal_x_worked_example() {
        let inst = worked_instance();
        let px = inst.marginal_x().unwrap();
        assert_abs_diff_eq!(px.get(0), 0.4625, epsilon = 1e-12);
        assert_abs_diff_eq!(px.get(1), 0.5375, epsilon = 1e-12);
    }

    #[test]
    fn marginal_x_identity_channel() {
        let ch = Channel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1e-9).unwrap();
        let inst = ProblemInstance::new(
            ch,
            pmf(&[0.5, 0.5]),
            BudgetVector::new(vec![0.01, 0.01]).unwrap(),
            LeakageMeasure::ChiSquare,
            Tolerances::default(),
        )
        .unwrap();
        let px = inst.marginal_x().unwrap();
        assert_eq!(px.values(), &[0.5, 0.5]);
    }

    #[test]
    fn marginal_x_zero_row() {
        let ch = Channel::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]], 1e-9).unwrap();
        let inst = ProblemInstance::new(
            ch,
            pmf(&[0.5, 0.5]),
            BudgetVector::new(vec![0.01, 0.01]).unwrap(),
            LeakageMeasure::L1,
            Tolerances::default(),
        )
        .unwrap();
        assert!(matches!(
            inst.marginal_x(),
            Err(Error::ZeroMarginal { index: 1 })
        ));
    }

    #[test]
    fn perturbation_boundary_of_l1_ball() {
        let px = pmf(&[0.5, 0.5]);
        let pu = pmf(&[0.505, 0.495]);
        let p =
            perturbation_from_conditional(&pu, &px, 0.01, 1, LeakageMeasure::L1, 1e-8).unwrap();
        assert_abs_diff_eq!(p.j[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(p.j[1], -0.5, epsilon = 1e-9);
    }

    #[test]
    fn perturbation_zero_leakage() {
        let px = pmf(&[0.5, 0.5]);
        let p =
            perturbation_from_conditional(&px.clone(), &px, 0.01, 1, LeakageMeasure::L1, 1e-8)
                .unwrap();
        assert!(p.j.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn perturbation_budget_exceeded() {
        let px = pmf(&[0.5, 0.5]);
        let pu = pmf(&[0.52, 0.48]);
        assert!(matches!(
            perturbation_from_conditional(&pu, &px, 0.01, 1, LeakageMeasure::L1, 1e-8),
            Err(Error::BudgetExceeded { norm, .. }) if (norm - 4.0).abs() < 1e-9
        ));
    }

    #[test]
    fn bayes_filter_constant_u() {
        let pu = pmf(&[1.0]);
        let py = pmf(&[0.5, 0.25, 0.25]);
        let pyu = Channel::from_rows(&[vec![0.5], vec![0.25], vec![0.25]], 1e-9).unwrap();
        let f = bayes_filter(&pu, &pyu, &py, 1e-8).unwrap();
        for y in 0..3 {
            assert_abs_diff_eq!(f.matrix()[(0, y)], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bayes_filter_identity() {
        let pu = pmf(&[0.5, 0.5]);
        let py = pmf(&[0.5, 0.5]);
        let pyu = Channel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1e-9).unwrap();
        let f = bayes_filter(&pu, &pyu, &py, 1e-8).unwrap();
        assert_abs_diff_eq!(f.matrix()[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.matrix()[(1, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.matrix()[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bayes_filter_mixture_mismatch() {
        let pu = pmf(&[0.5, 0.5]);
        let py = pmf(&[0.5, 0.5]);
        // both letters concentrated on y1: mixture is (1, 0), not P_Y
        let pyu = Channel::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]], 1e-9).unwrap();
        assert!(matches!(
            bayes_filter(&pu, &pyu, &py, 1e-8),
            Err(Error::MixtureMismatch { .. })
        ));
    }

    #[test]
    fn filter_round_trip_recovers_inputs() {
        // forward: (P_U, P_{Y|U}) -> filter; back: P_U(u) = sum_y f(u|y) P_Y(y)
        let pu = pmf(&[0.25, 0.75]);
        let py = pmf(&[0.5, 0.3, 0.2]);
        let pyu = Channel::from_rows(
            &[vec![0.8, 0.4], vec![0.1, 0.366666666666666_6], vec![0.1, 0.233333333333333_4]],
            1e-9,
        )
        .unwrap();
        let f = bayes_filter(&pu, &pyu, &py, 1e-8).unwrap();
        for u in 0..2 {
            let pu_back: f64 = (0..3).map(|y| f.matrix()[(u, y)] * py.get(y)).sum();
            assert_abs_diff_eq!(pu_back, pu.get(u), epsilon = 1e-10);
            for y in 0..3 {
                let back = f.matrix()[(u, y)] * py.get(y) / pu_back;
                assert_abs_diff_eq!(back, pyu.matrix()[(y, u)], epsilon = 1e-10);
            }
        }
    }
}
