//! The designed mechanism: marginal of U, per-letter conditionals, the
//! recovered filter, utilities and realized leakages. Shared output type of
//! both designers and the oracle.

use crate::error::{Error, Result};
use crate::info;
use crate::prob::{mixture_residual, Channel, Perturbation, Pmf, ProblemInstance, UNUSED_WEIGHT};
use crate::scalar::Real;

/// Which construction produced a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignMode {
    Invertible,
    FullRowRank,
    PseudoInverse,
    Oracle,
}

impl DesignMode {
    pub fn name(self) -> &'static str {
        match self {
            DesignMode::Invertible => "invertible",
            DesignMode::FullRowRank => "full-row-rank",
            DesignMode::PseudoInverse => "pinv",
            DesignMode::Oracle => "oracle",
        }
    }
}

/// Realized leakage of one letter against its budget. `realized` is absent
/// for unused letters (P_U(u) ~ 0), whose conditionals are undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageEntry<R: Real> {
    pub budget: R,
    pub realized: Option<R>,
}

#[derive(Debug, Clone)]
pub struct MechanismDesign<R: Real> {
    pub mode: DesignMode,
    pub p_u: Pmf<R>,
    /// Conditional P_{Y|U=u} per letter; `None` for unused letters.
    pub p_y_given_u: Vec<Option<Pmf<R>>>,
    /// The filter P_{U|Y}; rows of unused letters are zero.
    pub p_u_given_y: Channel<R>,
    /// Perturbation J per used letter with positive budget.
    pub perturbations: Vec<Option<Perturbation<R>>>,
    /// Exact I(U;Y) in nats, recomputed from the constructed mechanism.
    pub exact_utility_nats: R,
    /// The designer's approximate utility in nats (absent for the oracle).
    pub approx_utility_nats: Option<R>,
    pub leakages: Vec<LeakageEntry<R>>,
    /// Chosen extreme-point indices per letter (LP designer only), 0-based.
    pub assignment: Option<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl<R: Real> MechanismDesign<R> {
    pub fn num_letters(&self) -> usize {
        self.p_u.len()
    }

    /// Letters carrying weight above the unused threshold.
    pub fn used_letters(&self) -> Vec<usize> {
        (0..self.p_u.len())
            .filter(|&u| self.p_u.get(u) > R::of(UNUSED_WEIGHT))
            .collect()
    }

    /// Per-letter conditional columns as the mixture check expects them.
    pub fn conditional_columns(&self) -> Vec<Option<Vec<R>>> {
        self.p_y_given_u
            .iter()
            .map(|c| c.as_ref().map(|p| p.values().to_vec()))
            .collect()
    }

    /// Re-check the design invariants against its instance: mixture
    /// constraint, per-letter budgets, and the zero-sum/proper-2 residuals
    /// of the perturbations.
    pub fn validate(&self, inst: &ProblemInstance<R>) -> Result<()> {
        let cols = self.conditional_columns();
        let resid = mixture_residual(self.p_u.values(), &cols, &inst.p_y);
        if resid > inst.tolerances.mixture {
            return Err(Error::MixtureMismatch {
                index: 0,
                residual: resid.as_f64(),
            });
        }
        let leak_tol = R::of(1e-7);
        for (u, entry) in self.leakages.iter().enumerate() {
            if let Some(realized) = entry.realized {
                let bound = match inst.divergence {
                    crate::prob::LeakageMeasure::ChiSquare => entry.budget * entry.budget,
                    crate::prob::LeakageMeasure::L1 => entry.budget,
                };
                if realized > bound + leak_tol {
                    return Err(Error::LeakageViolated {
                        letter: u + 1,
                        realized: realized.as_f64(),
                        budget: bound.as_f64(),
                    });
                }
            }
        }
        // proper-1 (zero sum per letter) and proper-2 (weighted sum over letters)
        let tol = R::of(1e-7);
        let n = inst.num_x();
        let mut weighted = vec![R::zero(); n];
        for (u, pert) in self.perturbations.iter().enumerate() {
            let Some(p) = pert else { continue };
            let s: R = p.j.iter().copied().sum();
            if s.abs() > tol {
                return Err(Error::MixtureMismatch {
                    index: u,
                    residual: s.as_f64(),
                });
            }
            for (acc, &ji) in weighted.iter_mut().zip(&p.j) {
                *acc = *acc + inst.budgets.get(u) * self.p_u.get(u) * ji;
            }
        }
        if let Some(worst) = weighted
            .iter()
            .map(|x| x.abs())
            .max_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))
        {
            if worst > tol {
                return Err(Error::MixtureMismatch {
                    index: usize::MAX,
                    residual: worst.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Exact utility in bits.
    pub fn exact_utility_bits(&self) -> R {
        crate::scalar::nats_to_bits(self.exact_utility_nats)
    }

    /// Approximate utility in bits, when the designer produced one.
    pub fn approx_utility_bits(&self) -> Option<R> {
        self.approx_utility_nats.map(crate::scalar::nats_to_bits)
    }
}

/// Assemble a design from per-letter weights and conditionals: recovers the
/// filter, evaluates exact utility and realized leakages, and builds the
/// perturbation vectors for used letters with positive budgets.
pub(crate) fn assemble_design<R: Real>(
    inst: &ProblemInstance<R>,
    mode: DesignMode,
    p_u: Vec<R>,
    columns: Vec<Option<Vec<R>>>,
    approx_utility_nats: Option<R>,
    assignment: Option<Vec<usize>>,
    mut warnings: Vec<String>,
) -> Result<MechanismDesign<R>> {
    let k = p_u.len();
    let p_x = inst.marginal_x()?;
    let stoch_tol = inst.tolerances.stochastic.max(R::of(1e-7));
    let p_u = Pmf::new(p_u, stoch_tol)?;

    let mut conds: Vec<Option<Pmf<R>>> = Vec::with_capacity(k);
    let mut perts: Vec<Option<Perturbation<R>>> = Vec::with_capacity(k);
    let mut leakages: Vec<LeakageEntry<R>> = Vec::with_capacity(k);
    let unused = R::of(UNUSED_WEIGHT);

    for (u, column) in columns.iter().enumerate() {
        let budget = inst.budgets.get(u);
        if p_u.get(u) <= unused {
            conds.push(None);
            perts.push(None);
            leakages.push(LeakageEntry {
                budget,
                realized: None,
            });
            continue;
        }
        let col = column.as_ref().ok_or(Error::ZeroSupport { index: u })?;
        let cond = Pmf::new(col.clone(), stoch_tol)?;
        let p_x_given_u =
            Pmf::new(inst.p_x_given_y.matrix().mul_vec(cond.values()), stoch_tol)?;
        let realized = info::divergence(inst.divergence.into(), &p_x_given_u, &p_x)?;
        let bound = match inst.divergence {
            crate::prob::LeakageMeasure::ChiSquare => budget * budget,
            crate::prob::LeakageMeasure::L1 => budget,
        };
        if realized > bound + R::of(1e-7) {
            return Err(Error::LeakageViolated {
                letter: u + 1,
                realized: realized.as_f64(),
                budget: bound.as_f64(),
            });
        }
        let pert = if budget > R::zero() {
            Some(crate::prob::perturbation_from_conditional(
                &p_x_given_u,
                &p_x,
                budget,
                u + 1,
                inst.divergence,
                R::of(1e-6),
            )?)
        } else {
            // perfect-privacy letter: conditional must match P_X outright
            if realized > R::of(1e-9) {
                return Err(Error::LeakageViolated {
                    letter: u + 1,
                    realized: realized.as_f64(),
                    budget: 0.0,
                });
            }
            None
        };
        conds.push(Some(cond));
        perts.push(pert);
        leakages.push(LeakageEntry {
            budget,
            realized: Some(realized),
        });
    }

    let col_vecs: Vec<Option<Vec<R>>> = conds
        .iter()
        .map(|c| c.as_ref().map(|p| p.values().to_vec()))
        .collect();
    let resid = mixture_residual(p_u.values(), &col_vecs, &inst.p_y);
    if resid > inst.tolerances.mixture {
        return Err(Error::MixtureMismatch {
            index: 0,
            residual: resid.as_f64(),
        });
    }

    let exact = info::mutual_information_parts(p_u.values(), &col_vecs, &inst.p_y)?;

    // filter rows: unused letters contribute zero rows
    let mut filter = crate::linalg::Matrix::zeros(k, inst.num_y());
    for y in 0..inst.num_y() {
        let py = inst.p_y.get(y);
        if py <= R::zero() {
            let uniform = R::one() / R::of(k as f64);
            for u in 0..k {
                filter[(u, y)] = uniform;
            }
            continue;
        }
        for u in 0..k {
            if let Some(cond) = &conds[u] {
                filter[(u, y)] = p_u.get(u) * cond.get(y) / py;
            }
        }
    }
    let p_u_given_y = Channel::new(filter, stoch_tol)?;

    if warnings.iter().any(String::is_empty) {
        warnings.retain(|w| !w.is_empty());
    }

    Ok(MechanismDesign {
        mode,
        p_u,
        p_y_given_u: conds,
        p_u_given_y,
        perturbations: perts,
        exact_utility_nats: exact,
        approx_utility_nats,
        leakages,
        assignment,
        warnings,
    })
}
