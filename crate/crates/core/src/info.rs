//! Exact divergence and information quantities. Internal unit is nats;
//! callers convert to bits at the boundary. 0 log 0 = 0 by continuous
//! extension throughout, since extreme points carry exact zeros.

use crate::error::{Error, Result};
use crate::prob::{mixture_residual, Channel, LeakageMeasure, Pmf};
use crate::scalar::Real;

/// The f-divergence family used for utility evaluation and leakage audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    Kl,
    ChiSquare,
    L1,
}

impl From<LeakageMeasure> for DivergenceKind {
    fn from(m: LeakageMeasure) -> Self {
        match m {
            LeakageMeasure::ChiSquare => DivergenceKind::ChiSquare,
            LeakageMeasure::L1 => DivergenceKind::L1,
        }
    }
}

/// KL divergence in nats. Errors when p puts mass outside q's support.
pub fn kl<R: Real>(p: &Pmf<R>, q: &Pmf<R>) -> Result<R> {
    same_len(p, q)?;
    let mut acc = R::zero();
    for i in 0..p.len() {
        let pi = p.get(i);
        if pi == R::zero() {
            continue;
        }
        let qi = q.get(i);
        if qi == R::zero() {
            return Err(Error::SupportViolation { index: i });
        }
        acc = acc + pi * (pi / qi).ln();
    }
    Ok(acc.max(R::zero()))
}

/// chi-square divergence sum (p-q)^2 / q. Errors on any q(x) = 0.
pub fn chi_square<R: Real>(p: &Pmf<R>, q: &Pmf<R>) -> Result<R> {
    same_len(p, q)?;
    let mut acc = R::zero();
    for i in 0..p.len() {
        let qi = q.get(i);
        if qi == R::zero() {
            return Err(Error::ZeroReference { index: i });
        }
        let d = p.get(i) - qi;
        acc = acc + d * d / qi;
    }
    Ok(acc)
}

/// l1 distance sum |p - q|, in [0, 2].
pub fn l1<R: Real>(p: &Pmf<R>, q: &Pmf<R>) -> Result<R> {
    same_len(p, q)?;
    Ok((0..p.len()).map(|i| (p.get(i) - q.get(i)).abs()).sum())
}

/// Evaluate the divergence selected by `kind`.
pub fn divergence<R: Real>(kind: DivergenceKind, p: &Pmf<R>, q: &Pmf<R>) -> Result<R> {
    match kind {
        DivergenceKind::Kl => kl(p, q),
        DivergenceKind::ChiSquare => chi_square(p, q),
        DivergenceKind::L1 => l1(p, q),
    }
}

/// Shannon entropy in nats.
pub fn entropy<R: Real>(p: &Pmf<R>) -> R {
    let mut acc = R::zero();
    for i in 0..p.len() {
        let pi = p.get(i);
        if pi > R::zero() {
            acc = acc - pi * pi.ln();
        }
    }
    acc.max(R::zero())
}

/// I(U;Y) in nats, decomposed as sum_u P_U(u) D(P_{Y|U=u} || P_Y).
/// Requires the mixture constraint sum_u P_U(u) P_{Y|U=u} = P_Y.
pub fn mutual_information<R: Real>(
    p_u: &Pmf<R>,
    p_y_given_u: &Channel<R>,
    p_y: &Pmf<R>,
    mixture_tol: R,
) -> Result<R> {
    if p_y_given_u.cols() != p_u.len() {
        return Err(Error::DimensionMismatch {
            what: "P_{Y|U} columns vs letters",
            expected: p_u.len(),
            actual: p_y_given_u.cols(),
        });
    }
    let cols: Vec<Option<Vec<R>>> = (0..p_u.len())
        .map(|u| Some(p_y_given_u.matrix().col(u)))
        .collect();
    let resid = mixture_residual(p_u.values(), &cols, p_y);
    if resid > mixture_tol {
        return Err(Error::MixtureMismatch {
            index: 0,
            residual: resid.as_f64(),
        });
    }
    mutual_information_parts(p_u.values(), &cols, p_y)
}

/// Same decomposition over per-letter optional columns (absent = unused).
/// The mixture check is the caller's business here.
pub fn mutual_information_parts<R: Real>(
    p_u: &[R],
    columns: &[Option<Vec<R>>],
    p_y: &Pmf<R>,
) -> Result<R> {
    let mut acc = R::zero();
    for (u, col) in columns.iter().enumerate() {
        let w = p_u[u];
        if w <= R::zero() {
            continue;
        }
        let Some(col) = col else { continue };
        let cond = Pmf::new(col.clone(), p_y.tol().max(R::of(1e-7)))?;
        acc = acc + w * kl(&cond, p_y)?;
    }
    Ok(acc.max(R::zero()))
}

fn same_len<R: Real>(p: &Pmf<R>, q: &Pmf<R>) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "pmf lengths",
            expected: q.len(),
            actual: p.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::nats_to_bits;
    use approx::assert_abs_diff_eq;

    fn pmf(v: &[f64]) -> Pmf<f64> {
        Pmf::with_default_tol(v.to_vec()).unwrap()
    }

    #[test]
    fn kl_identical_is_zero() {
        let p = pmf(&[0.3, 0.7]);
        assert_eq!(kl(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_point_mass_vs_uniform() {
        let p = pmf(&[1.0, 0.0]);
        let q = pmf(&[0.5, 0.5]);
        assert_abs_diff_eq!(kl(&p, &q).unwrap(), std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn kl_support_violation() {
        let p = pmf(&[0.5, 0.5]);
        let q = pmf(&[1.0, 0.0]);
        assert!(matches!(kl(&p, &q), Err(Error::SupportViolation { index: 1 })));
    }

    #[test]
    fn chi_square_worked() {
        let p = pmf(&[0.6, 0.4]);
        let q = pmf(&[0.5, 0.5]);
        assert_abs_diff_eq!(chi_square(&p, &q).unwrap(), 0.04, epsilon = 1e-12);
    }

    #[test]
    fn chi_square_zero_reference() {
        let p = pmf(&[0.5, 0.5]);
        let q = pmf(&[1.0, 0.0]);
        assert!(matches!(chi_square(&p, &q), Err(Error::ZeroReference { index: 1 })));
    }

    #[test]
    fn l1_maximal_distance() {
        let p = pmf(&[1.0, 0.0]);
        let q = pmf(&[0.0, 1.0]);
        assert_abs_diff_eq!(l1(&p, &q).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn l1_small_shift() {
        let p = pmf(&[0.505, 0.495]);
        let q = pmf(&[0.5, 0.5]);
        assert_abs_diff_eq!(l1(&p, &q).unwrap(), 0.01, epsilon = 1e-12);
    }

    #[test]
    fn entropy_point_mass() {
        assert_eq!(entropy(&pmf(&[1.0, 0.0, 0.0])), 0.0);
    }

    #[test]
    fn entropy_fair_coin() {
        assert_abs_diff_eq!(
            entropy(&pmf(&[0.5, 0.5])),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy_extreme_point_base() {
        // H([0.675, 0.325, 0, 0]) = 0.630581 nats = 0.909736 bits, matching
        // the worked example's entropy coefficient for that vertex.
        let h = entropy(&pmf(&[0.675, 0.325, 0.0, 0.0]));
        assert_abs_diff_eq!(h, 0.6305810283860147, epsilon = 1e-12);
        assert_abs_diff_eq!(nats_to_bits(h), 0.909736122531166, epsilon = 1e-12);
    }

    #[test]
    fn mi_independent_is_zero() {
        let pu = pmf(&[0.5, 0.5]);
        let py = pmf(&[0.3, 0.7]);
        let pyu = Channel::from_rows(&[vec![0.3, 0.3], vec![0.7, 0.7]], 1e-9).unwrap();
        assert_abs_diff_eq!(
            mutual_information(&pu, &pyu, &py, 1e-8).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mi_identity_is_entropy() {
        let pu = pmf(&[0.5, 0.5]);
        let py = pmf(&[0.5, 0.5]);
        let pyu = Channel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1e-9).unwrap();
        assert_abs_diff_eq!(
            mutual_information(&pu, &pyu, &py, 1e-8).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mi_rejects_broken_mixture() {
        let pu = pmf(&[0.5, 0.5]);
        let py = pmf(&[0.5, 0.5]);
        let pyu = Channel::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]], 1e-9).unwrap();
        assert!(matches!(
            mutual_information(&pu, &pyu, &py, 1e-8),
            Err(Error::MixtureMismatch { .. })
        ));
    }
}
