//! l1-budget mechanism design for full-row-rank and arbitrary leakage
//! matrices: polytope construction through the M matrix, extreme-point
//! enumeration over column index sets, entropy linearization, one linear
//! program per extreme-point assignment, hybrid perfect-privacy letters,
//! and solution recovery.
//!
//! Geometry in one paragraph: every feasible conditional P_{Y|U=u_i} lies in
//! the polytope { y >= 0 : M y = M P_Y + eps_i M z(J_i) }, where M stacks the
//! leading right singular vectors of P_{X|Y} and z(J) is a particular
//! solution of P_{X|Y} z = J (invertible-block form when the matrix has full
//! row rank, pseudo-inverse form otherwise). Entropy minimizers sit at the
//! polytope's vertices, one per invertible column set Omega; linearizing the
//! entropy there and substituting eta_i = P_U(u_i) * vertex turns the whole
//! problem into a small LP per assignment of vertices to letters.

use log::debug;

use crate::error::{Error, Result};
use crate::info;
use crate::linalg::{self, Matrix};
use crate::lp::{self, LpProblem, LpStatus};
use crate::mechanism::{assemble_design, DesignMode, MechanismDesign};
use crate::prob::{Channel, LeakageMeasure, ProblemInstance, UNUSED_WEIGHT};
use crate::scalar::{bits_to_nats, ln_2, Real};

/// Base-vertex entries down to this are accepted and clamped to zero.
const VERTEX_FEAS_TOL: f64 = 1e-10;
/// Residual bound for the pseudo-inverse mode consistency check.
const RESIDUAL_TOL: f64 = 1e-7;
/// Two LP optima closer than this count as a tie; the first assignment in
/// enumeration order (lexicographically smallest) wins.
const TIE_TOL: f64 = 1e-9;

/// A vertex of the conditional polytope, with its entropy-linearization
/// coefficients. `omega` indexes the working (permuted) Y alphabet.
#[derive(Debug, Clone)]
pub struct ExtremePoint<R: Real> {
    pub omega: Vec<usize>,
    /// The unperturbed vertex restricted to omega: M_Omega^{-1} M P_Y.
    pub base: Vec<R>,
    /// log2 of the base entries (zero where the base is zero).
    pub l: Vec<R>,
    /// Entropy constant l . base, in bits.
    pub b: R,
    /// Linear entropy coefficient l . G, in bits.
    pub a: Vec<R>,
    /// G = M_Omega^{-1} H, the map from J to the vertex shift.
    pub g: Matrix<R>,
    /// Inverse of G (pseudo-inverse when G is singular in pinv mode).
    pub g_inv: Matrix<R>,
    /// Whether all base entries are strictly positive; the first-order
    /// entropy model is only valid at interior vertices.
    pub interior: bool,
}

/// Everything the designer derives from the instance before looking at
/// budgets: mode, column permutation, M matrix, and the vertex list.
#[derive(Debug, Clone)]
pub struct PolytopeGeometry<R: Real> {
    pub mode: DesignMode,
    /// perm[j] = original column of working column j (identity in pinv mode).
    pub perm: Vec<usize>,
    pub m: Matrix<R>,
    pub points: Vec<ExtremePoint<R>>,
    channel: Matrix<R>,
    p_y: Vec<R>,
}

/// Requested designer mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpMode {
    Auto,
    FullRowRank,
    PseudoInverse,
}

/// Column permutation placing an invertible |X| x |X| block first.
/// Columns are scanned left to right and accepted when their pivot after
/// eliminating the already-selected columns is significant, so instances
/// whose leading block is already invertible keep the identity prefix.
pub fn split_leakage_matrix<R: Real>(p: &Channel<R>) -> Result<(Matrix<R>, Vec<usize>)> {
    let a = p.matrix();
    let (x, y) = (a.rows(), a.cols());
    if x > y {
        return Err(Error::DimensionMismatch {
            what: "leakage matrix with |X| <= |Y|",
            expected: y,
            actual: x,
        });
    }
    let tol = a.max_abs() * R::of(1e-12);
    let mut work = a.clone();
    let mut row_used = vec![false; x];
    let mut selected: Vec<usize> = Vec::with_capacity(x);
    for col in 0..y {
        if selected.len() == x {
            break;
        }
        // row partial pivoting among unused rows
        let mut pivot_row = None;
        let mut pivot_val = tol;
        for r in 0..x {
            if row_used[r] {
                continue;
            }
            let v = work[(r, col)].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = Some(r);
            }
        }
        let Some(pr) = pivot_row else { continue };
        // eliminate this column from the other unused rows
        let pv = work[(pr, col)];
        for r in 0..x {
            if r == pr || row_used[r] {
                continue;
            }
            let f = work[(r, col)] / pv;
            if f == R::zero() {
                continue;
            }
            for c in col..y {
                work[(r, c)] = work[(r, c)] - f * work[(pr, c)];
            }
        }
        row_used[pr] = true;
        selected.push(col);
    }
    if selected.len() < x {
        return Err(Error::RankDeficient {
            rank: selected.len(),
            required: x,
        });
    }
    let mut perm = selected.clone();
    for j in 0..y {
        if !selected.contains(&j) {
            perm.push(j);
        }
    }
    let p1 = a.select_cols(&selected);
    Ok((p1, perm))
}

/// Build the designer geometry: mode resolution, M matrix, vertex list.
pub fn build_geometry<R: Real>(
    inst: &ProblemInstance<R>,
    requested: LpMode,
) -> Result<PolytopeGeometry<R>> {
    let x = inst.num_x();
    let y = inst.num_y();
    if x > y {
        return Err(Error::DimensionMismatch {
            what: "leakage matrix with |X| <= |Y|",
            expected: y,
            actual: x,
        });
    }

    let split = split_leakage_matrix(&inst.p_x_given_y);
    let (mode, perm, p1) = match (requested, split) {
        (LpMode::PseudoInverse, _) => (DesignMode::PseudoInverse, (0..y).collect(), None),
        (_, Ok((p1, perm))) => (DesignMode::FullRowRank, perm, Some(p1)),
        (LpMode::FullRowRank, Err(e)) => return Err(e),
        (LpMode::Auto, Err(Error::RankDeficient { .. })) => {
            (DesignMode::PseudoInverse, (0..y).collect(), None)
        }
        (LpMode::Auto, Err(e)) => return Err(e),
    };

    // Work in the permuted column order throughout.
    let channel_m = inst.p_x_given_y.matrix().select_cols(&perm);
    let p_y: Vec<R> = perm.iter().map(|&j| inst.p_y.get(j)).collect();

    let (m, _rank) = linalg::build_m_matrix(&channel_m, mode == DesignMode::FullRowRank)?;

    // H maps J to the polytope offset in M-coordinates:
    //   full row rank: M(:, 1..|X|) P1^{-1}
    //   pseudo-inverse: M pinv(P)
    let h = match mode {
        DesignMode::FullRowRank => {
            let p1 = p1.expect("full-row-rank mode carries the invertible block");
            let lead: Vec<usize> = (0..x).collect();
            m.select_cols(&lead).mul_mat(&linalg::invert(&p1)?)
        }
        DesignMode::PseudoInverse => m.mul_mat(&linalg::pseudo_inverse(&channel_m)?),
        _ => unreachable!(),
    };

    let m_p_y = m.mul_vec(&p_y);
    let feas = R::of(VERTEX_FEAS_TOL);
    // the base mass inherits P_Y's normalization error
    let mass_tol = R::of(1e-8).max(inst.tolerances.stochastic * R::of(y as f64));
    let mut points = Vec::new();
    for omega in combinations(y, x) {
        let m_omega = m.select_cols(&omega);
        let m_omega_inv = match linalg::invert(&m_omega) {
            Ok(inv) => inv,
            Err(Error::Singular { .. }) => {
                debug!("omega {omega:?} skipped: M_Omega singular");
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut base = m_omega_inv.mul_vec(&m_p_y);
        if base.iter().any(|&v| v < -feas) {
            debug!("omega {omega:?} skipped: negative base entry");
            continue;
        }
        for v in base.iter_mut() {
            if *v < R::zero() {
                *v = R::zero();
            }
        }
        let mass: R = base.iter().copied().sum();
        if (mass - R::one()).abs() > mass_tol {
            debug!("omega {omega:?} skipped: base mass {mass} != 1");
            continue;
        }
        let g = m_omega_inv.mul_mat(&h);
        let g_inv = match linalg::invert(&g) {
            Ok(inv) => inv,
            // Singular G only appears in pinv mode on rank-deficient
            // channels; the minimum-norm recovery is checked downstream
            // against the defining residual.
            Err(Error::Singular { .. }) => linalg::pseudo_inverse(&g)?,
            Err(e) => return Err(e),
        };
        let interior = base.iter().all(|&v| v > R::zero());
        let ln2 = ln_2::<R>();
        let l: Vec<R> = base
            .iter()
            .map(|&v| if v > R::zero() { v.ln() / ln2 } else { R::zero() })
            .collect();
        let b: R = l.iter().zip(&base).map(|(&li, &bi)| li * bi).sum();
        let mut a = vec![R::zero(); x];
        for (j, aj) in a.iter_mut().enumerate() {
            *aj = (0..x).map(|i| l[i] * g[(i, j)]).sum();
        }
        points.push(ExtremePoint {
            omega,
            base,
            l,
            b,
            a,
            g,
            g_inv,
            interior,
        });
    }

    Ok(PolytopeGeometry {
        mode,
        perm,
        m,
        points,
        channel: channel_m,
        p_y,
    })
}

/// All feasible extreme points of the conditional polytopes, shared by every
/// letter (the budgets only scale the perturbation term).
pub fn enumerate_extreme_points<R: Real>(
    inst: &ProblemInstance<R>,
    requested: LpMode,
) -> Result<Vec<ExtremePoint<R>>> {
    Ok(build_geometry(inst, requested)?.points)
}

/// A choice of one vertex per letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// Index into the geometry's vertex list, per letter.
    pub vertex_ids: Vec<usize>,
    /// Letters bound to perfect privacy (epsilon = 0).
    pub perfect: Vec<bool>,
}

struct VarLayout {
    /// per letter: offset of its eta block (non-perfect) or weight (perfect)
    offsets: Vec<usize>,
    x: usize,
    total: usize,
}

impl VarLayout {
    fn new(perfect: &[bool], x: usize) -> Self {
        let mut offsets = Vec::with_capacity(perfect.len());
        let mut total = 0usize;
        for &p in perfect {
            offsets.push(total);
            total += if p { 1 } else { 2 * x }; // eta block + t block
        }
        VarLayout { offsets, x, total }
    }

    fn eta(&self, letter: usize, j: usize) -> usize {
        self.offsets[letter] + j
    }

    fn t(&self, letter: usize, j: usize) -> usize {
        self.offsets[letter] + self.x + j
    }

    fn w(&self, letter: usize) -> usize {
        self.offsets[letter]
    }
}

/// The J-recovery map on eta: d = A eta with A = G^{-1} - (G^{-1} base) 1^T,
/// so that eps * P_U(u) * J = d.
fn recovery_map<R: Real>(ep: &ExtremePoint<R>) -> Matrix<R> {
    let x = ep.base.len();
    let gb = ep.g_inv.mul_vec(&ep.base);
    let mut a = ep.g_inv.clone();
    for i in 0..x {
        for j in 0..x {
            a[(i, j)] = a[(i, j)] - gb[i];
        }
    }
    a
}

/// Assemble the per-assignment linear program in the eta variables, with one
/// auxiliary variable per absolute-value term.
pub fn assemble_lp<R: Real>(
    assignment: &Assignment,
    geometry: &PolytopeGeometry<R>,
    inst: &ProblemInstance<R>,
) -> Result<LpProblem<R>> {
    let k = inst.num_letters();
    let x = geometry.m.rows();
    let y = geometry.p_y.len();
    if assignment.vertex_ids.len() != k {
        return Err(Error::DimensionMismatch {
            what: "assignment length vs letters",
            expected: k,
            actual: assignment.vertex_ids.len(),
        });
    }
    let layout = VarLayout::new(&assignment.perfect, x);
    let mut lp = LpProblem::new(layout.total);

    // cost: -l per eta coordinate (identical to -(b 1^T + a A) after the
    // eta substitution), -b per perfect weight; bits throughout
    for li in 0..k {
        let ep = &geometry.points[assignment.vertex_ids[li]];
        if assignment.perfect[li] {
            lp.cost[layout.w(li)] = -ep.b;
        } else {
            for j in 0..x {
                lp.cost[layout.eta(li, j)] = -ep.l[j];
            }
        }
    }

    // equalities: mixture (|Y| rows), proper-2 (|X| rows), zero-sum (1/letter)
    let nonperfect: Vec<usize> = (0..k).filter(|&i| !assignment.perfect[i]).collect();
    let n_eq = y + x + nonperfect.len();
    let mut eq = Matrix::zeros(n_eq, layout.total);
    let mut eq_rhs = vec![R::zero(); n_eq];
    for (row, &py) in geometry.p_y.iter().enumerate() {
        eq_rhs[row] = py;
    }
    for li in 0..k {
        let ep = &geometry.points[assignment.vertex_ids[li]];
        if assignment.perfect[li] {
            for (j, &pos) in ep.omega.iter().enumerate() {
                eq[(pos, layout.w(li))] = eq[(pos, layout.w(li))] + ep.base[j];
            }
        } else {
            for (j, &pos) in ep.omega.iter().enumerate() {
                eq[(pos, layout.eta(li, j))] = eq[(pos, layout.eta(li, j))] + R::one();
            }
        }
    }
    for (slot, &li) in nonperfect.iter().enumerate() {
        let ep = &geometry.points[assignment.vertex_ids[li]];
        let a = recovery_map(ep);
        for j in 0..x {
            for r in 0..x {
                // proper-2 block rows
                eq[(y + r, layout.eta(li, j))] = eq[(y + r, layout.eta(li, j))] + a[(r, j)];
            }
            // zero-sum row for this letter
            let colsum: R = (0..x).map(|r| a[(r, j)]).sum();
            eq[(y + x + slot, layout.eta(li, j))] = colsum;
        }
    }
    lp.eq_lhs = eq;
    lp.eq_rhs = eq_rhs;

    // inequalities: t >= |A eta| rows and the folded l1 budget per letter
    let n_in = nonperfect.len() * (2 * x + 1);
    let mut ineq = Matrix::zeros(n_in, layout.total);
    let ineq_rhs = vec![R::zero(); n_in];
    let mut row = 0usize;
    for &li in &nonperfect {
        let ep = &geometry.points[assignment.vertex_ids[li]];
        let a = recovery_map(ep);
        for r in 0..x {
            for j in 0..x {
                ineq[(row, layout.eta(li, j))] = a[(r, j)];
                ineq[(row + 1, layout.eta(li, j))] = -a[(r, j)];
            }
            ineq[(row, layout.t(li, r))] = -R::one();
            ineq[(row + 1, layout.t(li, r))] = -R::one();
            row += 2;
        }
        let eps = inst.budgets.get(li);
        for r in 0..x {
            ineq[(row, layout.t(li, r))] = R::one();
        }
        for j in 0..x {
            ineq[(row, layout.eta(li, j))] = -eps;
        }
        row += 1;
    }
    lp.ineq_lhs = ineq;
    lp.ineq_rhs = ineq_rhs;

    Ok(lp)
}

/// Rebuild the mechanism from an optimal LP point: per-letter weights and
/// vertices, perturbations, the Bayes filter, exact utility, and every
/// feasibility check the LP only enforced in linearized form.
pub fn recover_design<R: Real>(
    solution: &lp::LpSolution<R>,
    assignment: &Assignment,
    geometry: &PolytopeGeometry<R>,
    inst: &ProblemInstance<R>,
    approx_utility_nats: R,
) -> Result<MechanismDesign<R>> {
    if solution.status != LpStatus::Optimal {
        return Err(Error::NoFeasibleAssignment);
    }
    let k = inst.num_letters();
    let x = geometry.m.rows();
    let y = geometry.p_y.len();
    let layout = VarLayout::new(&assignment.perfect, x);
    let unused = R::of(UNUSED_WEIGHT);
    let feas = R::of(VERTEX_FEAS_TOL);

    let mut p_u = vec![R::zero(); k];
    let mut columns: Vec<Option<Vec<R>>> = vec![None; k];

    for li in 0..k {
        let ep = &geometry.points[assignment.vertex_ids[li]];
        let (weight, vertex): (R, Option<Vec<R>>) = if assignment.perfect[li] {
            (solution.z[layout.w(li)], Some(ep.base.clone()))
        } else {
            let eta: Vec<R> = (0..x).map(|j| solution.z[layout.eta(li, j)]).collect();
            let s: R = eta.iter().copied().sum();
            if s <= unused {
                (R::zero(), None)
            } else {
                let mut v: Vec<R> = eta.iter().map(|&e| e / s).collect();
                for entry in v.iter_mut() {
                    if *entry < -feas {
                        return Err(Error::EpsilonTooLarge {
                            letter: li + 1,
                            entry: entry.as_f64(),
                        });
                    }
                    if *entry < R::zero() {
                        *entry = R::zero();
                    }
                }
                (s, Some(v))
            }
        };
        p_u[li] = weight.max(R::zero());
        let Some(v) = vertex else { continue };
        if p_u[li] <= unused {
            continue;
        }

        // scatter to the full working alphabet, then undo the permutation
        let mut full = vec![R::zero(); y];
        for (j, &pos) in ep.omega.iter().enumerate() {
            full[pos] = v[j];
        }
        if !assignment.perfect[li] {
            // J from the eta substitution, then the defining residual check:
            // P_{X|Y} (P_{Y|U=u} - P_Y) must equal eps * J. Exact for full
            // row rank; in pinv mode it is the feasibility gate.
            let eps = inst.budgets.get(li);
            let diff: Vec<R> = v.iter().zip(&ep.base).map(|(&a, &b)| a - b).collect();
            let d = ep.g_inv.mul_vec(&diff);
            let j_vec: Vec<R> = d.iter().map(|&di| di / eps).collect();
            let shifted: Vec<R> = full
                .iter()
                .zip(&geometry.p_y)
                .map(|(&a, &b)| a - b)
                .collect();
            let realized = geometry.channel.mul_vec(&shifted);
            let mut resid = R::zero();
            for (r, &ji) in realized.iter().zip(&j_vec) {
                resid = resid.max((*r - eps * ji).abs());
            }
            if geometry.mode == DesignMode::PseudoInverse && resid > R::of(RESIDUAL_TOL) {
                return Err(Error::ResidualCheckFailed {
                    letter: li + 1,
                    residual: resid.as_f64(),
                });
            }
        }
        let mut original = vec![R::zero(); y];
        for (j, &orig) in geometry.perm.iter().enumerate() {
            original[orig] = full[j];
        }
        columns[li] = Some(original);
    }

    let assignment_out = assignment.vertex_ids.clone();
    assemble_design(
        inst,
        geometry.mode,
        p_u,
        columns,
        Some(approx_utility_nats),
        Some(assignment_out),
        Vec::new(),
    )
}

/// Canonical assignment enumeration: within each block of letters sharing
/// the same budget the vertex indices are non-decreasing (permuting equal
/// budgets only relabels letters), and assignments whose supports cannot
/// cover the support of P_Y are pruned.
fn canonical_assignments<R: Real>(
    inst: &ProblemInstance<R>,
    geometry: &PolytopeGeometry<R>,
) -> Vec<Assignment> {
    let k = inst.num_letters();
    let v = geometry.points.len();
    let perfect: Vec<bool> = (0..k).map(|i| inst.budgets.get(i) == R::zero()).collect();
    // usable vertices per letter: interior only when the letter perturbs
    let usable: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            (0..v)
                .filter(|&pid| perfect[i] || geometry.points[pid].interior)
                .collect()
        })
        .collect();
    let support: Vec<usize> = (0..geometry.p_y.len())
        .filter(|&yy| geometry.p_y[yy] > R::zero())
        .collect();

    let mut out = Vec::new();
    let mut current = vec![0usize; k];
    fn rec<R: Real>(
        letter: usize,
        k: usize,
        inst: &ProblemInstance<R>,
        usable: &[Vec<usize>],
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if letter == k {
            out.push(current.clone());
            return;
        }
        let same_block = letter > 0 && inst.budgets.get(letter) == inst.budgets.get(letter - 1);
        for &pid in &usable[letter] {
            if same_block && pid < current[letter - 1] {
                continue;
            }
            current[letter] = pid;
            rec(letter + 1, k, inst, usable, current, out);
        }
    }
    let mut raw = Vec::new();
    rec(0, k, inst, &usable, &mut current, &mut raw);

    for vertex_ids in raw {
        let mut covered = vec![false; geometry.p_y.len()];
        for &pid in &vertex_ids {
            for &pos in &geometry.points[pid].omega {
                covered[pos] = true;
            }
        }
        if support.iter().any(|&yy| !covered[yy]) {
            continue;
        }
        out.push(Assignment {
            vertex_ids,
            perfect: perfect.clone(),
        });
    }
    out
}

/// Full l1 designer: mode selection, assignment enumeration with pruning,
/// one LP per assignment, recovery checks, and the deterministic best-pick
/// (maximal approximate utility, lexicographically smallest assignment on
/// ties).
pub fn design_lp<R: Real>(inst: &ProblemInstance<R>) -> Result<MechanismDesign<R>> {
    design_lp_with_mode(inst, LpMode::Auto)
}

pub fn design_lp_with_mode<R: Real>(
    inst: &ProblemInstance<R>,
    requested: LpMode,
) -> Result<MechanismDesign<R>> {
    if inst.divergence != LeakageMeasure::L1 {
        return Err(Error::UnsupportedMode {
            divergence: inst.divergence.name(),
            mode: "extreme-point LP",
        });
    }
    inst.marginal_x()?;

    // Square invertible instances have a single vertex (base = P_Y) and a
    // provably constant first-order objective; route them to the
    // second-order construction instead of letting the LP pick an arbitrary
    // feasible point.
    if inst.num_x() == inst.num_y() {
        if let Ok(design) = square_binary_design(inst, requested) {
            return Ok(design);
        }
    }

    let geometry = build_geometry(inst, requested)?;
    if geometry.points.is_empty() {
        return Err(Error::NoFeasibleAssignment);
    }

    let h_y_bits = info::entropy(&inst.p_y) / ln_2::<R>();
    let mut best: Option<(R, MechanismDesign<R>)> = None;
    let tie = R::of(TIE_TOL);

    for assignment in canonical_assignments(inst, &geometry) {
        let lp_problem = assemble_lp(&assignment, &geometry, inst)?;
        let solution = match lp::solve(&lp_problem) {
            Ok(s) => s,
            Err(Error::MaxIterations { .. }) => {
                debug!("assignment {:?}: simplex hit the iteration cap", assignment.vertex_ids);
                continue;
            }
            Err(e) => return Err(e),
        };
        if solution.status != LpStatus::Optimal {
            continue;
        }
        let approx_bits = h_y_bits - solution.objective;
        if let Some((best_val, _)) = &best {
            if approx_bits <= *best_val + tie {
                continue;
            }
        }
        match recover_design(
            &solution,
            &assignment,
            &geometry,
            inst,
            bits_to_nats(approx_bits),
        ) {
            Ok(design) => best = Some((approx_bits, design)),
            Err(e) => {
                debug!(
                    "assignment {:?} rejected at recovery: {e}",
                    assignment.vertex_ids
                );
            }
        }
    }

    best.map(|(_, d)| d).ok_or(Error::NoFeasibleAssignment)
}

/// Second-order construction for square invertible instances: binary
/// support on the two largest budgets, direction chosen among the l1-ball
/// vertices (e_a - e_b)/2 by the quadratic utility coefficient
/// ||diag(1/sqrt(P_Y)) P^{-1} J||^2.
fn square_binary_design<R: Real>(
    inst: &ProblemInstance<R>,
    requested: LpMode,
) -> Result<MechanismDesign<R>> {
    let n = inst.num_x();
    let inv = linalg::invert(inst.p_x_given_y.matrix())?;
    let k = inst.num_letters();
    let eps1 = inst.budgets.get(0);
    let eps2 = inst.budgets.get(1);
    let mode = match requested {
        LpMode::PseudoInverse => DesignMode::PseudoInverse,
        _ => DesignMode::FullRowRank,
    };
    let mut warnings = vec![
        "square instance: first-order objective is constant, using the second-order direction rule"
            .to_string(),
    ];

    if eps2 == R::zero() {
        warnings.push(
            "degenerate budget: eps2 = 0 forces zero perturbations; returning the constant-U design"
                .to_string(),
        );
        let mut p_u = vec![R::zero(); k];
        p_u[0] = R::one();
        let mut columns: Vec<Option<Vec<R>>> = vec![None; k];
        columns[0] = Some(inst.p_y.values().to_vec());
        return assemble_design(inst, mode, p_u, columns, Some(R::zero()), Some(vec![0; k]), warnings);
    }

    // rank directions by the second-order coefficient
    let mut dirs: Vec<(R, usize, usize)> = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let mut j = vec![R::zero(); n];
            j[a] = R::of(0.5);
            j[b] = -R::of(0.5);
            let shift = inv.mul_vec(&j);
            let score: R = shift
                .iter()
                .zip(inst.p_y.values())
                .map(|(&s, &py)| s * s / py)
                .sum();
            dirs.push((score, a, b));
        }
    }
    dirs.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });

    let feas = R::of(1e-12);
    for &(score, a, b) in &dirs {
        for sign in [R::one(), -R::one()] {
            let mut j = vec![R::zero(); n];
            j[a] = sign * R::of(0.5);
            j[b] = -sign * R::of(0.5);
            let shift = inv.mul_vec(&j);
            let mut ok = true;
            let mut col1 = Vec::with_capacity(n);
            let mut col2 = Vec::with_capacity(n);
            for (yy, &py) in inst.p_y.values().iter().enumerate() {
                let v1 = py + eps1 * shift[yy];
                let v2 = py - eps2 * shift[yy];
                if v1 < -feas || v2 < -feas {
                    ok = false;
                    break;
                }
                col1.push(v1.max(R::zero()));
                col2.push(v2.max(R::zero()));
            }
            if !ok {
                continue;
            }
            let mut p_u = vec![R::zero(); k];
            p_u[0] = eps2 / (eps1 + eps2);
            p_u[1] = eps1 / (eps1 + eps2);
            let mut columns: Vec<Option<Vec<R>>> = vec![None; k];
            columns[0] = Some(col1);
            columns[1] = Some(col2);
            let approx = R::of(0.5) * eps1 * eps2 * score;
            return assemble_design(
                inst,
                mode,
                p_u,
                columns,
                Some(approx),
                Some(vec![0; k]),
                warnings,
            );
        }
    }
    Err(Error::NoFeasibleAssignment)
}

/// Lexicographic k-subsets of {0..n-1}.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
