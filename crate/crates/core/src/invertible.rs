//! Closed-form chi-square-budget design for square invertible leakage
//! matrices. The whole construction rides on one spectral object:
//! W = diag(1/sqrt(P_Y)) P_{X|Y}^{-1} diag(sqrt(P_X)), restricted to the
//! orthogonal complement of sqrt(P_X). Its top singular pair gives both the
//! optimal direction and the approximate utility (1/2) eps1 eps2 sigma^2.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::mechanism::{assemble_design, DesignMode, MechanismDesign};
use crate::prob::{LeakageMeasure, Perturbation, ProblemInstance};
use crate::scalar::Real;

/// The spectral data of an invertible instance.
#[derive(Debug, Clone)]
pub struct SpectralDesign<R: Real> {
    /// W = diag(1/sqrt(P_Y)) P_{X|Y}^{-1} diag(sqrt(P_X)).
    pub w: Matrix<R>,
    /// Largest singular value of W restricted to the complement of sqrt(P_X).
    pub sigma_max: R,
    /// The corresponding unit right singular vector, orthogonal to sqrt(P_X).
    pub l_star: Vec<R>,
    /// (1/2) eps1 eps2 sigma_max^2, in nats.
    pub approx_utility: R,
}

/// Build W and its constrained top singular pair.
pub fn compute_w<R: Real>(inst: &ProblemInstance<R>) -> Result<SpectralDesign<R>> {
    if inst.divergence != LeakageMeasure::ChiSquare {
        return Err(Error::UnsupportedMode {
            divergence: inst.divergence.name(),
            mode: "invertible",
        });
    }
    if inst.num_x() != inst.num_y() {
        return Err(Error::DimensionMismatch {
            what: "square leakage matrix",
            expected: inst.num_x(),
            actual: inst.num_y(),
        });
    }
    let p_x = inst.marginal_x()?;
    if let Some(i) = (0..inst.p_y.len()).find(|&i| inst.p_y.get(i) <= R::zero()) {
        return Err(Error::ZeroMarginal { index: i });
    }
    let inv = linalg::invert(inst.p_x_given_y.matrix())?;
    let sqrt_px: Vec<R> = p_x.values().iter().map(|&v| v.sqrt()).collect();
    let inv_sqrt_py: Vec<R> = inst.p_y.values().iter().map(|&v| R::one() / v.sqrt()).collect();
    let w = inv.scale_rows(&inv_sqrt_py).scale_cols(&sqrt_px);

    let projected = linalg::projected_operator(&w, &sqrt_px);
    let dec = linalg::svd(&projected)?;
    let sigma_max = dec.sigma[0];
    let mut l_star = dec.v.col(0);
    // Re-project and renormalize: harmless when already orthogonal, and
    // keeps the invariant exact when sigma_max is degenerate.
    let dot: R = l_star.iter().zip(&sqrt_px).map(|(&a, &b)| a * b).sum();
    for (l, &d) in l_star.iter_mut().zip(&sqrt_px) {
        *l = *l - dot * d;
    }
    let norm: R = l_star.iter().map(|&x| x * x).sum::<R>().sqrt();
    if norm > R::of(1e-12) {
        for l in l_star.iter_mut() {
            *l = *l / norm;
        }
    }

    let eps1 = inst.budgets.get(0);
    let eps2 = inst.budgets.get(1);
    Ok(SpectralDesign {
        w,
        sigma_max,
        l_star,
        approx_utility: R::of(0.5) * eps1 * eps2 * sigma_max * sigma_max,
    })
}

/// Closed-form design: a binary disclosed variable supported on the two
/// highest-budget letters, weights eps2/(eps1+eps2) and eps1/(eps1+eps2),
/// directions +/- L*. The conditionals are built as
/// P_{Y|U=u} = P_Y + eps P_{X|Y}^{-1} diag(sqrt(P_X)) L (the additive base
/// is P_Y; the report carries a note for square instances since the
/// alternative printed form with a P_X base is dimensionally inconsistent).
pub fn design_invertible<R: Real>(inst: &ProblemInstance<R>) -> Result<MechanismDesign<R>> {
    let spectral = compute_w(inst)?;
    let k = inst.num_letters();
    let eps1 = inst.budgets.get(0);
    let eps2 = inst.budgets.get(1);

    let mut warnings = vec![
        "conditionals use P_Y as the additive base of the closed-form filter".to_string(),
    ];

    if eps2 == R::zero() {
        // With a single positive budget the zero-mean constraint forces
        // J = 0 everywhere: the constant-U design is the only candidate.
        warnings.push(
            "degenerate budget: eps2 = 0 forces zero perturbations; returning the constant-U design"
                .to_string(),
        );
        let mut p_u = vec![R::zero(); k];
        p_u[0] = R::one();
        let mut columns: Vec<Option<Vec<R>>> = vec![None; k];
        columns[0] = Some(inst.p_y.values().to_vec());
        return assemble_design(
            inst,
            DesignMode::Invertible,
            p_u,
            columns,
            Some(R::zero()),
            None,
            warnings,
        );
    }

    let p_x = inst.marginal_x()?;
    let sqrt_px: Vec<R> = p_x.values().iter().map(|&v| v.sqrt()).collect();
    let inv = linalg::invert(inst.p_x_given_y.matrix())?;

    // direction in Y-space: P_{X|Y}^{-1} diag(sqrt(P_X)) L*
    let scaled: Vec<R> = spectral
        .l_star
        .iter()
        .zip(&sqrt_px)
        .map(|(&l, &s)| l * s)
        .collect();
    let shift = inv.mul_vec(&scaled);

    let build_column = |eps: R, sign: R| -> Result<Vec<R>> {
        let mut col = Vec::with_capacity(inst.num_y());
        for (y, &py) in inst.p_y.values().iter().enumerate() {
            let v = py + sign * eps * shift[y];
            if v < -R::of(1e-12) {
                return Err(Error::EpsilonTooLarge {
                    letter: if sign > R::zero() { 1 } else { 2 },
                    entry: v.as_f64(),
                });
            }
            col.push(v.max(R::zero()));
        }
        Ok(col)
    };

    let col1 = build_column(eps1, R::one())?;
    let col2 = build_column(eps2, -R::one())?;

    let mut p_u = vec![R::zero(); k];
    p_u[0] = eps2 / (eps1 + eps2);
    p_u[1] = eps1 / (eps1 + eps2);
    let mut columns: Vec<Option<Vec<R>>> = vec![None; k];
    columns[0] = Some(col1);
    columns[1] = Some(col2);

    assemble_design(
        inst,
        DesignMode::Invertible,
        p_u,
        columns,
        Some(spectral.approx_utility),
        None,
        warnings,
    )
}

/// The sandwich around the multi-level value from the uniform-budget bounds:
/// ((1/2) epsK^2 sigma^2, (1/2) eps1 eps2 sigma^2, (1/2) eps1^2 sigma^2),
/// in nats.
pub fn sandwich_bounds<R: Real>(inst: &ProblemInstance<R>) -> Result<(R, R, R)> {
    let spectral = compute_w(inst)?;
    let s2 = spectral.sigma_max * spectral.sigma_max;
    let half = R::of(0.5);
    let eps1 = inst.budgets.get(0);
    let eps2 = inst.budgets.get(1);
    let eps_k = inst.budgets.get(inst.num_letters() - 1);
    Ok((
        half * eps_k * eps_k * s2,
        half * eps1 * eps2 * s2,
        half * eps1 * eps1 * s2,
    ))
}

/// The perturbations realized by the closed-form design, for auditing:
/// J_{u_1} = diag(sqrt(P_X)) L*, J_{u_2} = -J_{u_1}.
pub fn design_perturbations<R: Real>(
    inst: &ProblemInstance<R>,
) -> Result<(Perturbation<R>, Perturbation<R>)> {
    let spectral = compute_w(inst)?;
    let p_x = inst.marginal_x()?;
    let j: Vec<R> = spectral
        .l_star
        .iter()
        .zip(p_x.values())
        .map(|(&l, &px)| l * px.sqrt())
        .collect();
    let neg: Vec<R> = j.iter().map(|&x| -x).collect();
    let tol = R::of(1e-8);
    Ok((
        Perturbation::new(j, 1, LeakageMeasure::ChiSquare, &p_x, tol)?,
        Perturbation::new(neg, 2, LeakageMeasure::ChiSquare, &p_x, tol)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{BudgetVector, Channel, Pmf, Tolerances};
    use approx::assert_abs_diff_eq;

    fn symmetric_instance(delta: f64, eps: Vec<f64>) -> ProblemInstance<f64> {
        let ch = Channel::from_rows(
            &[vec![1.0 - delta, delta], vec![delta, 1.0 - delta]],
            1e-9,
        )
        .unwrap();
        let py = Pmf::with_default_tol(vec![0.5, 0.5]).unwrap();
        ProblemInstance::new(
            ch,
            py,
            BudgetVector::new(eps).unwrap(),
            LeakageMeasure::ChiSquare,
            Tolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn identity_channel_spectrum() {
        let ch = Channel::<f64>::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1e-9).unwrap();
        let inst = ProblemInstance::new(
            ch,
            Pmf::with_default_tol(vec![0.5, 0.5]).unwrap(),
            BudgetVector::new(vec![0.01, 0.01]).unwrap(),
            LeakageMeasure::ChiSquare,
            Tolerances::default(),
        )
        .unwrap();
        let s = compute_w(&inst).unwrap();
        assert_abs_diff_eq!(s.sigma_max, 1.0, epsilon = 1e-10);
        // L* = (1, -1)/sqrt(2) up to sign
        assert_abs_diff_eq!(s.l_star[0].abs(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-10);
        assert_abs_diff_eq!(s.l_star[0] + s.l_star[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn symmetric_family_sigma() {
        // by hand: W = P^{-1}, eigenvectors (1,1)/sqrt2 and (1,-1)/sqrt2 with
        // values 1 and 1/(1-2 delta) = 2.5 at delta = 0.3
        let inst = symmetric_instance(0.3, vec![0.01, 0.01]);
        let s = compute_w(&inst).unwrap();
        assert_abs_diff_eq!(s.sigma_max, 2.5, epsilon = 1e-10);
        assert_abs_diff_eq!(s.l_star[0].abs(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-10);
        assert_abs_diff_eq!(s.l_star[0] + s.l_star[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn w_maps_sqrt_px_to_sqrt_py() {
        let inst = symmetric_instance(0.3, vec![0.01, 0.005]);
        let s = compute_w(&inst).unwrap();
        let px = inst.marginal_x().unwrap();
        let sqrt_px: Vec<f64> = px.values().iter().map(|v| v.sqrt()).collect();
        let out = s.w.mul_vec(&sqrt_px);
        for (y, &py) in inst.p_y.values().iter().enumerate() {
            assert_abs_diff_eq!(out[y], py.sqrt(), epsilon = 1e-9);
        }
    }

    #[test]
    fn closed_form_symmetric_design() {
        let inst = symmetric_instance(0.3, vec![0.01, 0.01]);
        let d = design_invertible(&inst).unwrap();
        assert_abs_diff_eq!(d.p_u.get(0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p_u.get(1), 0.5, epsilon = 1e-12);
        let approx = d.approx_utility_nats.unwrap();
        assert_abs_diff_eq!(approx, 3.125e-4, epsilon = 1e-12);
        // exact within 5% of the quadratic value in this regime
        let rel = (d.exact_utility_nats - approx).abs() / approx;
        assert!(rel < 0.05, "relative gap {rel}");
        d.validate(&inst).unwrap();
    }

    #[test]
    fn chi_square_leakage_sits_at_the_budget() {
        let inst = symmetric_instance(0.3, vec![0.01, 0.005]);
        let d = design_invertible(&inst).unwrap();
        for (u, entry) in d.leakages.iter().enumerate() {
            let Some(realized) = entry.realized else { continue };
            let bound = entry.budget * entry.budget;
            assert!(realized <= bound + 1e-10, "letter {u}");
            assert_abs_diff_eq!(realized, bound, epsilon = 1e-10);
        }
    }

    #[test]
    fn three_letters_collapse_to_binary() {
        let ch = Channel::from_rows(
            &[
                vec![0.8, 0.1, 0.1],
                vec![0.1, 0.8, 0.2],
                vec![0.1, 0.1, 0.7],
            ],
            1e-9,
        )
        .unwrap();
        let inst = ProblemInstance::new(
            ch,
            Pmf::with_default_tol(vec![0.4, 0.35, 0.25]).unwrap(),
            BudgetVector::new(vec![0.02, 0.01, 0.005]).unwrap(),
            LeakageMeasure::ChiSquare,
            Tolerances::default(),
        )
        .unwrap();
        let d = design_invertible(&inst).unwrap();
        assert_abs_diff_eq!(d.p_u.get(0), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p_u.get(1), 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(d.p_u.get(2), 0.0);
        assert!(d.p_y_given_u[2].is_none());
        d.validate(&inst).unwrap();
    }

    #[test]
    fn zero_budgets_mean_constant_u() {
        let inst = symmetric_instance(0.3, vec![0.0, 0.0]);
        let d = design_invertible(&inst).unwrap();
        assert_eq!(d.exact_utility_nats, 0.0);
        assert_abs_diff_eq!(d.p_u.get(0), 1.0, epsilon = 1e-12);
        // P_{X|U=u} = P_X for the single used letter
        let col = d.p_y_given_u[0].as_ref().unwrap();
        let pxu = inst.p_x_given_y.matrix().mul_vec(col.values());
        let px = inst.marginal_x().unwrap();
        for (a, b) in pxu.iter().zip(px.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn sandwich_bounds_worked() {
        let inst = symmetric_instance(0.3, vec![0.02, 0.01]);
        let (lo, mid, hi) = sandwich_bounds(&inst).unwrap();
        assert_abs_diff_eq!(lo, 3.125e-4, epsilon = 1e-12);
        assert_abs_diff_eq!(mid, 6.25e-4, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 1.25e-3, epsilon = 1e-12);
        assert!(lo <= mid && mid <= hi);
    }

    #[test]
    fn sandwich_collapses_for_uniform_budgets() {
        let inst = symmetric_instance(0.3, vec![0.01, 0.01]);
        let (lo, mid, hi) = sandwich_bounds(&inst).unwrap();
        assert_abs_diff_eq!(lo, mid, epsilon = 1e-15);
        assert_abs_diff_eq!(mid, hi, epsilon = 1e-15);
    }

    #[test]
    fn sandwich_lower_vanishes_with_zero_floor() {
        let inst = symmetric_instance(0.3, vec![0.02, 0.0]);
        let (lo, _, _) = sandwich_bounds(&inst).unwrap();
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn budget_swap_is_utility_symmetric() {
        let a = symmetric_instance(0.3, vec![0.02, 0.01]);
        let d = design_invertible(&a).unwrap();
        // Eq-9 symmetry: same approx utility as the swapped pair would give;
        // the weights mirror accordingly.
        assert_abs_diff_eq!(
            d.approx_utility_nats.unwrap(),
            0.5 * 0.02 * 0.01 * 6.25,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(d.p_u.get(0), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p_u.get(1), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn oversized_budget_rejected() {
        // eps1 so large the constructed conditional leaves the simplex
        let inst = symmetric_instance(0.3, vec![0.5, 0.5]);
        assert!(matches!(
            design_invertible(&inst),
            Err(Error::EpsilonTooLarge { .. })
        ));
    }

    #[test]
    fn l1_divergence_rejected() {
        let ch = Channel::from_rows(&[vec![0.7, 0.3], vec![0.3, 0.7]], 1e-9).unwrap();
        let inst = ProblemInstance::new(
            ch,
            Pmf::with_default_tol(vec![0.5, 0.5]).unwrap(),
            BudgetVector::new(vec![0.01, 0.01]).unwrap(),
            LeakageMeasure::L1,
            Tolerances::default(),
        )
        .unwrap();
        assert!(matches!(
            design_invertible(&inst),
            Err(Error::UnsupportedMode { .. })
        ));
    }
}
