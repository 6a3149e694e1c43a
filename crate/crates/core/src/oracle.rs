//! Independent brute-force optimizer over filters P_{U|Y} for tiny
//! instances. Ground truth for the designers: enumerates column-stochastic
//! filters on a simplex grid (or samples them uniformly in random mode),
//! keeps only filters whose point-wise leakages pass the exact divergence
//! check, and returns the best survivor by exact mutual information.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mechanism::{assemble_design, DesignMode, MechanismDesign};
use crate::prob::{LeakageMeasure, Pmf, ProblemInstance, UNUSED_WEIGHT};
use crate::scalar::Real;

/// Grid-mode instance limits: beyond these, random mode is required.
pub const GRID_MAX_Y: usize = 4;
pub const GRID_MAX_K: usize = 3;

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig<R: Real> {
    /// Grid resolution; must divide 1 (e.g. 0.05, 0.02).
    pub grid_step: R,
    pub max_random_samples: usize,
    pub seed: u64,
    /// Force random mode regardless of instance size.
    pub random_mode: bool,
}

impl<R: Real> Default for OracleConfig<R> {
    fn default() -> Self {
        OracleConfig {
            grid_step: R::of(0.05),
            max_random_samples: 1_000_000,
            seed: 0,
            random_mode: false,
        }
    }
}

impl<R: Real> OracleConfig<R> {
    /// Number of grid steps making up unit mass; errors unless the step
    /// divides 1 within 1e-12.
    pub fn steps(&self) -> Result<usize> {
        let inv = (R::one() / self.grid_step).as_f64();
        let n = inv.round() as usize;
        if n == 0 || (R::of(n as f64) * self.grid_step - R::one()).abs() > R::of(1e-12) {
            return Err(Error::DimensionMismatch {
                what: "grid_step dividing 1",
                expected: 1,
                actual: n,
            });
        }
        Ok(n)
    }
}

/// Exhaustive / randomized search over filters. Deterministic for a fixed
/// config: grid mode scans lexicographically and keeps the first best;
/// random mode is seeded.
pub fn brute_force<R: Real>(
    inst: &ProblemInstance<R>,
    cfg: &OracleConfig<R>,
) -> Result<MechanismDesign<R>> {
    let k = inst.num_letters();
    let y = inst.num_y();
    let p_x = inst.marginal_x()?;

    let use_grid = !cfg.random_mode && y <= GRID_MAX_Y && k <= GRID_MAX_K;
    let mut best: Option<(R, Matrix<R>)> = None;

    let consider = |filter: &Matrix<R>, best: &mut Option<(R, Matrix<R>)>| {
        if let Some(utility) = evaluate_filter(inst, &p_x, filter) {
            match best {
                Some((bu, _)) if utility <= *bu => {}
                _ => *best = Some((utility, filter.clone())),
            }
        }
    };

    if use_grid {
        let n = cfg.steps()?;
        let columns = simplex_grid::<R>(n, k);
        // odometer over |Y| independent column choices, lexicographic
        let mut idx = vec![0usize; y];
        let mut filter = Matrix::zeros(k, y);
        loop {
            for (col, &ci) in idx.iter().enumerate() {
                for row in 0..k {
                    filter[(row, col)] = columns[ci][row];
                }
            }
            consider(&filter, &mut best);
            // advance
            let mut pos = y;
            loop {
                if pos == 0 {
                    // done
                    let (_, f) = best.ok_or(Error::NoFeasibleFilter)?;
                    return finish(inst, f);
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < columns.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        let mut filter = Matrix::zeros(k, y);
        for _ in 0..cfg.max_random_samples {
            for col in 0..y {
                let column = sample_simplex::<R>(k, &mut rng);
                for row in 0..k {
                    filter[(row, col)] = column[row];
                }
            }
            consider(&filter, &mut best);
        }
        // the constant filter is always feasible; make sure the search
        // cannot come back empty even with zero samples
        let uniform = R::one() / R::of(k as f64);
        for col in 0..y {
            for row in 0..k {
                filter[(row, col)] = uniform;
            }
        }
        consider(&filter, &mut best);
        let (_, f) = best.ok_or(Error::NoFeasibleFilter)?;
        finish(inst, f)
    }
}

/// Exact evaluation: P_U, per-letter conditionals, point-wise leakage
/// checks at 1e-12, and I(U;Y) in nats. None when any constraint fails.
fn evaluate_filter<R: Real>(
    inst: &ProblemInstance<R>,
    p_x: &Pmf<R>,
    filter: &Matrix<R>,
) -> Option<R> {
    let k = filter.rows();
    let unused = R::of(UNUSED_WEIGHT);
    let slack = R::of(1e-12);
    let mut utility = R::zero();
    for u in 0..k {
        let p_u: R = (0..inst.num_y())
            .map(|yy| filter[(u, yy)] * inst.p_y.get(yy))
            .sum();
        if p_u <= unused {
            continue;
        }
        let cond: Vec<R> = (0..inst.num_y())
            .map(|yy| filter[(u, yy)] * inst.p_y.get(yy) / p_u)
            .collect();
        let p_x_given_u: Vec<R> = inst.p_x_given_y.matrix().mul_vec(&cond);
        let eps = inst.budgets.get(u);
        let leak = match inst.divergence {
            LeakageMeasure::L1 => p_x_given_u
                .iter()
                .zip(p_x.values())
                .map(|(&a, &b)| (a - b).abs())
                .sum::<R>(),
            LeakageMeasure::ChiSquare => p_x_given_u
                .iter()
                .zip(p_x.values())
                .map(|(&a, &b)| (a - b) * (a - b) / b)
                .sum::<R>(),
        };
        let bound = match inst.divergence {
            LeakageMeasure::L1 => eps,
            LeakageMeasure::ChiSquare => eps * eps,
        };
        if leak > bound + slack {
            return None;
        }
        let mut term = R::zero();
        for (yy, &c) in cond.iter().enumerate() {
            if c > R::zero() {
                let py = inst.p_y.get(yy);
                if py <= R::zero() {
                    return None;
                }
                term = term + c * (c / py).ln();
            }
        }
        utility = utility + p_u * term;
    }
    Some(utility.max(R::zero()))
}

fn finish<R: Real>(inst: &ProblemInstance<R>, filter: Matrix<R>) -> Result<MechanismDesign<R>> {
    let k = filter.rows();
    let mut p_u = vec![R::zero(); k];
    let mut columns: Vec<Option<Vec<R>>> = vec![None; k];
    for u in 0..k {
        let w: R = (0..inst.num_y())
            .map(|yy| filter[(u, yy)] * inst.p_y.get(yy))
            .sum();
        p_u[u] = w;
        if w > R::of(UNUSED_WEIGHT) {
            columns[u] = Some(
                (0..inst.num_y())
                    .map(|yy| filter[(u, yy)] * inst.p_y.get(yy) / w)
                    .collect(),
            );
        }
    }
    assemble_design(inst, DesignMode::Oracle, p_u, columns, None, None, Vec::new())
}

/// All pmfs on `k` outcomes with masses that are multiples of 1/n,
/// lexicographic by composition.
fn simplex_grid<R: Real>(n: usize, k: usize) -> Vec<Vec<R>> {
    let mut out = Vec::new();
    let mut counts = vec![0usize; k];
    fn rec<R: Real>(pos: usize, left: usize, n: usize, counts: &mut Vec<usize>, out: &mut Vec<Vec<R>>) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            out.push(
                counts
                    .iter()
                    .map(|&c| R::of(c as f64) / R::of(n as f64))
                    .collect(),
            );
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(pos + 1, left - c, n, counts, out);
        }
    }
    rec::<R>(0, n, n, &mut counts, &mut out);
    out
}

/// Uniform sample from the probability simplex via normalized exponentials.
fn sample_simplex<R: Real>(k: usize, rng: &mut ChaCha20Rng) -> Vec<R> {
    let mut draws: Vec<R> = (0..k)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            R::of(-u.ln())
        })
        .collect();
    let total: R = draws.iter().copied().sum();
    for d in draws.iter_mut() {
        *d = *d / total;
    }
    draws
}

/// Whether the instance fits the exhaustive grid limits.
pub fn within_grid_limits<R: Real>(inst: &ProblemInstance<R>) -> bool {
    inst.num_y() <= GRID_MAX_Y && inst.num_letters() <= GRID_MAX_K
}
