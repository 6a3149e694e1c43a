//! The built-in worked example: a 2x4 leakage matrix with a hybrid budget
//! vector (three letters at 0.01, one perfectly private). Runs the full
//! extreme-point/LP pipeline and diffs the outcome against stored reference
//! values.

use privdesign_core::polytope::{build_geometry, LpMode};
use privdesign_core::{
    design_lp, BudgetVector, Channel64, LeakageMeasure, Pmf64, ProblemInstance64, Tolerances,
};

const EXIT_MISMATCH: u8 = 6;

/// Reference values for the bundled example.
const REF_BASES: [(&[usize], [f64; 2]); 4] = [
    (&[1, 2], [0.675, 0.325]),
    (&[1, 3], [0.1875, 0.8125]),
    (&[2, 4], [0.1563, 0.8437]),
    (&[3, 4], [0.6251, 0.3749]),
];
/// Entropy of each base vertex in bits.
const REF_B_BITS: [f64; 4] = [0.9097, 0.6962, 0.6254, 0.9544];
const REF_P_U: [f64; 4] = [0.0, 0.1488, 0.143, 0.7082];
const REF_UTILITY_BITS: f64 = 0.9109;

const TOL_BASE: f64 = 1e-4;
const TOL_B: f64 = 1e-3;
const TOL_P_U: f64 = 1e-3;
const TOL_UTILITY: f64 = 1e-3;

pub fn example_instance() -> ProblemInstance64 {
    let channel = Channel64::from_rows(
        &[vec![0.3, 0.8, 0.5, 0.4], vec![0.7, 0.2, 0.5, 0.6]],
        1e-9,
    )
    .expect("embedded channel is stochastic");
    let p_y = Pmf64::new(vec![0.5, 0.25, 0.125, 0.125], 1e-9).expect("embedded marginal");
    let budgets = BudgetVector::new(vec![0.01, 0.01, 0.01, 0.0]).expect("embedded budgets");
    ProblemInstance64::new(
        channel,
        p_y,
        budgets,
        LeakageMeasure::L1,
        Tolerances::default(),
    )
    .expect("embedded instance is valid")
}

pub fn cmd_reproduce_example() -> u8 {
    let inst = example_instance();
    let geometry = match build_geometry(&inst, LpMode::Auto) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("geometry construction failed: {e}");
            return 1;
        }
    };

    let mut diffs: Vec<String> = Vec::new();

    println!("base extreme points (support: vertex):");
    for (i, ep) in geometry.points.iter().enumerate() {
        let support: Vec<usize> = ep.omega.iter().map(|&p| p + 1).collect();
        println!(
            "  EP{}  {{{}}}: [{:.6}, {:.6}]   H = {:.6} bits",
            i + 1,
            support
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
            ep.base[0],
            ep.base[1],
            -ep.b
        );
    }

    if geometry.points.len() != REF_BASES.len() {
        diffs.push(format!(
            "extreme point count: expected {}, got {}",
            REF_BASES.len(),
            geometry.points.len()
        ));
    } else {
        for (i, (ep, (ref_support, ref_base))) in
            geometry.points.iter().zip(REF_BASES.iter()).enumerate()
        {
            let support: Vec<usize> = ep.omega.iter().map(|&p| p + 1).collect();
            if support != *ref_support {
                diffs.push(format!(
                    "EP{} support: expected {ref_support:?}, got {support:?}",
                    i + 1
                ));
            }
            for (j, (&got, &expect)) in ep.base.iter().zip(ref_base.iter()).enumerate() {
                let d = (got - expect).abs();
                if d > TOL_BASE {
                    diffs.push(format!(
                        "EP{} base[{j}]: expected {expect:.6}, got {got:.6} (|diff| {d:.2e} > {TOL_BASE:.0e})",
                        i + 1,
                    ));
                }
            }
            let d = (-ep.b - REF_B_BITS[i]).abs();
            if d > TOL_B {
                diffs.push(format!(
                    "EP{} entropy coefficient: expected {:.4}, got {:.6} (|diff| {:.2e} > {TOL_B:.0e})",
                    i + 1,
                    REF_B_BITS[i],
                    -ep.b,
                    d
                ));
            }
        }
    }

    let design = match design_lp(&inst) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("design failed: {e}");
            return 1;
        }
    };

    if let Some(assignment) = &design.assignment {
        let shown: Vec<String> = assignment.iter().map(|&i| format!("EP{}", i + 1)).collect();
        println!("chosen assignment: [{}]", shown.join(", "));
    }
    let p_u: Vec<f64> = design.p_u.values().to_vec();
    println!(
        "P_U = [{}]",
        p_u.iter()
            .map(|v| format!("{v:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("I(U;Y) = {:.6} bits", design.exact_utility_bits());

    for (i, (&got, &expect)) in p_u.iter().zip(REF_P_U.iter()).enumerate() {
        let d = (got - expect).abs();
        if d > TOL_P_U {
            diffs.push(format!(
                "P_U[u{}]: expected {:.4}, got {:.6} (|diff| {:.2e} > {TOL_P_U:.0e})",
                i + 1,
                expect,
                got,
                d
            ));
        }
    }
    let d = (design.exact_utility_bits() - REF_UTILITY_BITS).abs();
    if d > TOL_UTILITY {
        diffs.push(format!(
            "utility: expected {:.4} bits, got {:.6} bits (|diff| {:.2e} > {TOL_UTILITY:.0e})",
            REF_UTILITY_BITS,
            design.exact_utility_bits(),
            d
        ));
    }

    if diffs.is_empty() {
        println!("reference check: all values match");
        0
    } else {
        println!("reference check: {} mismatch(es)", diffs.len());
        println!("{:<72}", "mismatch");
        for line in &diffs {
            println!("  {line}");
        }
        EXIT_MISMATCH
    }
}
