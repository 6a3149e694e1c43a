//! Instance, mechanism and report file formats (JSON).

use serde::{Deserialize, Serialize};

use privdesign_core::{
    BudgetVector, Channel64, Error, LeakageMeasure, Matrix64, MechanismDesign64, Pmf64,
    ProblemInstance64, Tolerances,
};

/// Row-major matrix with explicit dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixData {
    pub fn to_matrix(&self) -> Result<Matrix64, Error> {
        Matrix64::from_vec(self.rows, self.cols, self.data.clone())
    }

    pub fn from_matrix(m: &Matrix64) -> Self {
        MatrixData {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Auto,
    Invertible,
    FullRowRank,
    Pinv,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Auto => "auto",
            Mode::Invertible => "invertible",
            Mode::FullRowRank => "full-row-rank",
            Mode::Pinv => "pinv",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToleranceOverrides {
    #[serde(default)]
    pub stochastic: Option<f64>,
    #[serde(default)]
    pub mixture: Option<f64>,
}

/// An instance file carries either the pair (p_x_given_y, p_y) or the joint
/// matrix p_xy, plus budgets and the divergence kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default)]
    pub p_x_given_y: Option<MatrixData>,
    #[serde(default)]
    pub p_y: Option<Vec<f64>>,
    #[serde(default)]
    pub p_xy: Option<MatrixData>,
    pub epsilons: Vec<f64>,
    pub divergence: String,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<(ProblemInstance64, Mode), String> {
        let mut tol = Tolerances::default();
        if let Some(t) = &self.tolerances {
            if let Some(s) = t.stochastic {
                tol.stochastic = s;
            }
            if let Some(m) = t.mixture {
                tol.mixture = m;
            }
        }

        let (channel, p_y) = match (&self.p_x_given_y, &self.p_y, &self.p_xy) {
            (Some(ch), Some(py), None) => {
                let matrix = ch
                    .to_matrix()
                    .map_err(|e| format!("field p_x_given_y: {e}"))?;
                let channel = Channel64::new(matrix, tol.stochastic)
                    .map_err(|e| format!("field p_x_given_y: {e}"))?;
                (channel, py.clone())
            }
            (None, None, Some(joint)) => {
                let j = joint.to_matrix().map_err(|e| format!("field p_xy: {e}"))?;
                // p_y from column sums, conditional by normalizing columns
                let mut p_y = vec![0.0; j.cols()];
                for (c, py) in p_y.iter_mut().enumerate() {
                    *py = (0..j.rows()).map(|r| j[(r, c)]).sum();
                }
                let mut cond = Matrix64::zeros(j.rows(), j.cols());
                for c in 0..j.cols() {
                    if p_y[c] <= 0.0 {
                        return Err(format!("field p_xy: column {c} has zero mass"));
                    }
                    for r in 0..j.rows() {
                        cond[(r, c)] = j[(r, c)] / p_y[c];
                    }
                }
                let channel = Channel64::new(cond, tol.stochastic)
                    .map_err(|e| format!("field p_xy: {e}"))?;
                (channel, p_y)
            }
            _ => {
                return Err(
                    "exactly one of {p_x_given_y + p_y} or {p_xy} must be present".to_string(),
                )
            }
        };

        let divergence = match self.divergence.as_str() {
            "chi2" => LeakageMeasure::ChiSquare,
            "l1" => LeakageMeasure::L1,
            other => {
                return Err(format!(
                    "field divergence: expected \"chi2\" or \"l1\", got \"{other}\""
                ))
            }
        };

        let p_y = Pmf64::new(p_y, tol.stochastic).map_err(|e| format!("field p_y: {e}"))?;
        let budgets =
            BudgetVector::new(self.epsilons).map_err(|e| format!("field epsilons: {e}"))?;
        let inst = ProblemInstance64::new(channel, p_y, budgets, divergence, tol)
            .map_err(|e| e.to_string())?;
        Ok((inst, self.mode.unwrap_or(Mode::Auto)))
    }
}

/// Mechanism file for `verify`: just the filter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanismFile {
    pub p_u_given_y: MatrixData,
}

impl MechanismFile {
    pub fn into_channel(self) -> Result<Channel64, Error> {
        Channel64::new(self.p_u_given_y.to_matrix()?, 1e-7)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakageReport {
    pub budget: f64,
    pub realized: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityPair {
    pub nats: f64,
    pub bits: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub status: String,
    pub mode_used: String,
    pub p_u: Vec<f64>,
    /// Per-letter conditional over Y, absent (null) for unused letters.
    pub p_y_given_u: Vec<Option<Vec<f64>>>,
    pub p_u_given_y: MatrixData,
    pub utility_nats: f64,
    pub utility_bits: f64,
    pub approx_utility: Option<UtilityPair>,
    pub leakage_per_letter: Vec<LeakageReport>,
    /// Chosen extreme-point indices per letter (1-based), LP mode only.
    pub assignment: Option<Vec<usize>>,
    pub warnings: Vec<String>,
    pub timing_ms: u64,
}

impl ReportFile {
    pub fn from_design(
        inst: &ProblemInstance64,
        design: &MechanismDesign64,
        timing_ms: u64,
    ) -> Self {
        // budgets are emitted in the same scale as the realized values:
        // eps^2 for chi-square budgets, eps for l1
        let effective = |eps: f64| match inst.divergence {
            LeakageMeasure::ChiSquare => eps * eps,
            LeakageMeasure::L1 => eps,
        };
        ReportFile {
            status: "optimal".to_string(),
            mode_used: design.mode.name().to_string(),
            p_u: design.p_u.values().to_vec(),
            p_y_given_u: design
                .p_y_given_u
                .iter()
                .map(|c| c.as_ref().map(|p| p.values().to_vec()))
                .collect(),
            p_u_given_y: MatrixData::from_matrix(design.p_u_given_y.matrix()),
            utility_nats: design.exact_utility_nats,
            utility_bits: design.exact_utility_bits(),
            approx_utility: design.approx_utility_nats.map(|n| UtilityPair {
                nats: n,
                bits: n / std::f64::consts::LN_2,
            }),
            leakage_per_letter: design
                .leakages
                .iter()
                .map(|l| LeakageReport {
                    budget: effective(l.budget),
                    realized: l.realized,
                })
                .collect(),
            assignment: design
                .assignment
                .as_ref()
                .map(|a| a.iter().map(|&i| i + 1).collect()),
            warnings: design.warnings.clone(),
            timing_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Round-trip validation: every stored matrix and pmf must re-validate
    /// at the instance's stochasticity tolerance (floored at 1e-7 to absorb
    /// solver noise).
    pub fn revalidate(&self, stochastic_tol: f64) -> Result<(), Error> {
        let tol = stochastic_tol.max(1e-7);
        Pmf64::new(self.p_u.clone(), tol)?;
        for col in self.p_y_given_u.iter().flatten() {
            Pmf64::new(col.clone(), tol)?;
        }
        Channel64::new(self.p_u_given_y.to_matrix()?, tol)?;
        Ok(())
    }
}
