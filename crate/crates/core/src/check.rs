//! Seed-free golden values: probit goldens, central intervals, precision
//! sparsity and the parking-chain round trip.

use std::fmt;

use crate::gauss::{GaussianParams, Interval, Kernel};
use crate::gbn::{
    alternating_layout, extract, precision_chain, precision_recursive, Gbn, REFERENCE_COEFFICIENTS,
    REFERENCE_VARIANCES,
};

/// `(sigma2, cdf(1), interval half-width)` from the worked nif example.
pub const PROBIT_GOLDENS: [(f64, f64, f64); 3] = [
    (0.16, 0.994, 1.095),
    (std::f64::consts::PI, 0.714, 1.890),
    (16.0, 0.599, 3.357),
];
pub const CDF_TOLERANCE: f64 = 1e-3;
pub const INTERVAL_TOLERANCE: f64 = 0.01;
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenCheck {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl GoldenCheck {
    fn new(name: String, expected: f64, actual: f64, tolerance: f64) -> Self {
        Self {
            name,
            expected,
            actual,
            tolerance,
            pass: (actual - expected).abs() <= tolerance,
        }
    }
}

impl fmt::Display for GoldenCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<34} expected {:>10.6} got {:>10.6} (tol {:.0e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.expected,
            self.actual,
            self.tolerance
        )
    }
}

/// The reference seven-node parking chain with zero means.
pub fn reference_chain() -> Gbn {
    let layout = alternating_layout(7);
    let layout: Vec<_> = layout.iter().map(|(l, m, d)| (l.as_str(), *m, *d)).collect();
    Gbn::chain(&layout, &[0.0; 7], &REFERENCE_VARIANCES, &REFERENCE_COEFFICIENTS).expect("reference chain is valid")
}

/// Run every golden check with `kernel` computing the probit.
pub fn golden_report(kernel: &Kernel) -> Vec<GoldenCheck> {
    let mut out = Vec::new();
    for (s2, p, _) in PROBIT_GOLDENS {
        let got = kernel.cdf(1.0, GaussianParams { mean: 0.0, variance: s2 });
        out.push(GoldenCheck::new(format!("cdf(1) sigma2={s2:.4}"), p, got, CDF_TOLERANCE));
    }
    for (s2, _, w) in PROBIT_GOLDENS {
        let mass = kernel.cdf(1.0, GaussianParams { mean: 0.0, variance: s2 });
        let half = match kernel.central_interval(mass, s2) {
            Interval::Bounded { hi, .. } => hi,
            _ => f64::NAN,
        };
        out.push(GoldenCheck::new(format!("interval half-width sigma2={s2:.4}"), w, half, INTERVAL_TOLERANCE));
    }

    let g = reference_chain();
    let t = precision_chain(&g).expect("chain").precision;
    let mut bad = 0usize;
    for r in 0..7usize {
        for c in 0..7 {
            let banded = r.abs_diff(c) <= 1;
            if banded != (t[(r, c)] != 0.0) {
                bad += 1;
            }
        }
    }
    out.push(GoldenCheck::new("7-node precision off-pattern entries".into(), 0.0, bad as f64, 0.0));
    let rec = precision_recursive(&g).precision;
    out.push(GoldenCheck::new(
        "recursive vs closed-form precision".into(),
        0.0,
        (rec - &t).amax(),
        1e-12,
    ));

    match extract(&precision_chain(&g).expect("chain")) {
        Ok(back) => {
            for (i, (a, b)) in back.variances().iter().zip(REFERENCE_VARIANCES).enumerate() {
                out.push(GoldenCheck::new(format!("round trip s2_{}", i + 1), b, *a, ROUND_TRIP_TOLERANCE));
            }
            for (i, (a, b)) in back.chain_coefficients().iter().zip(REFERENCE_COEFFICIENTS).enumerate() {
                out.push(GoldenCheck::new(
                    format!("round trip b{}{}", i + 2, i + 1),
                    b,
                    *a,
                    ROUND_TRIP_TOLERANCE,
                ));
            }
        }
        Err(e) => out.push(GoldenCheck {
            name: format!("round trip: {e}"),
            expected: 0.0,
            actual: f64::NAN,
            tolerance: 0.0,
            pass: false,
        }),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_kernel_passes_everything() {
        let report = golden_report(&Kernel::STANDARD);
        assert_eq!(report.len(), 3 + 3 + 2 + 13);
        for c in &report {
            assert!(c.pass, "{c}");
        }
    }

    fn skewed_erfc(x: f64) -> f64 {
        crate::gauss::erfc(x * 1.1)
    }

    #[test]
    fn perturbed_kernel_fails_the_probit_goldens() {
        let report = golden_report(&Kernel::with_erfc(skewed_erfc));
        assert!(report[..3].iter().all(|c| !c.pass));
        // Matrix checks do not involve the kernel.
        assert!(report[6..].iter().all(|c| c.pass));
    }
}
