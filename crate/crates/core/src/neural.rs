//! Decision engine behind `nif` and `nwhile`.
//!
//! A guard `x # a` with uncertainty `sigma2` is taken with probability
//! `cdf_{0,sigma2}(diff(x, a))`. The decision is realised by building the
//! central interval that holds exactly that much mass under `N(0, sigma2)`
//! and testing whether one fresh draw from the same distribution lands in it.

use std::fmt;
use std::str::FromStr;

use crate::error::RuntimeError;
use crate::gauss::{self, GaussianParams, Interval, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Gt,
    Ge,
    Lt,
    Le,
}

impl CmpOp {
    pub const ALL: [CmpOp; 4] = [CmpOp::Gt, CmpOp::Ge, CmpOp::Lt, CmpOp::Le];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }

    /// The crisp comparison this operator denotes.
    pub fn holds(self, x: f64, a: f64) -> bool {
        match self {
            CmpOp::Gt => x > a,
            CmpOp::Ge => x >= a,
            CmpOp::Lt => x < a,
            CmpOp::Le => x <= a,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for CmpOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            ">" => Ok(CmpOp::Gt),
            ">=" => Ok(CmpOp::Ge),
            "<" => Ok(CmpOp::Lt),
            "<=" => Ok(CmpOp::Le),
            other => Err(format!("unknown comparison `{other}`")),
        }
    }
}

/// Smallest representable spacing next to `a`.
///
/// Using the smaller of the two neighbouring gaps guarantees that any `x`
/// strictly on the far side of `a` still yields `x - a - eps >= 0`.
pub fn strictness_epsilon(a: f64) -> f64 {
    if !a.is_finite() {
        return 0.0;
    }
    let below = a - a.next_down();
    let above = a.next_up() - a;
    below.min(above)
}

/// Signed margin of `x # a`; non-negative exactly when the crisp comparison holds.
pub fn diff(x: f64, a: f64, op: CmpOp) -> f64 {
    match op {
        CmpOp::Gt => (x - a) - strictness_epsilon(a),
        CmpOp::Ge => x - a,
        CmpOp::Lt => (a - x) - strictness_epsilon(a),
        CmpOp::Le => a - x,
    }
}

/// Probability that the guard is taken.
pub fn branch_prob(d: f64, sigma2: f64) -> f64 {
    gauss::cdf(d, GaussianParams { mean: 0.0, variance: sigma2 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardResult {
    pub taken: bool,
    pub diff: f64,
    pub sigma2: f64,
    pub prob: f64,
    pub interval: Interval,
    pub drawn_sample: f64,
}

/// Evaluate one probabilistic guard, consuming at most one normal draw.
pub fn check(
    x: f64,
    a: f64,
    sigma2: f64,
    op: CmpOp,
    rng: &mut RngStream,
) -> Result<GuardResult, RuntimeError> {
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(RuntimeError::BadVariance(sigma2));
    }
    let d = diff(x, a, op);
    let prob = branch_prob(d, sigma2);
    if sigma2 == 0.0 {
        let taken = d >= 0.0;
        return Ok(GuardResult {
            taken,
            diff: d,
            sigma2,
            prob,
            interval: if taken { Interval::Unbounded } else { Interval::Empty },
            drawn_sample: 0.0,
        });
    }
    let interval = gauss::central_interval(prob, sigma2);
    let drawn_sample = gauss::sample(GaussianParams { mean: 0.0, variance: sigma2 }, rng);
    Ok(GuardResult {
        taken: interval.contains(drawn_sample),
        diff: d,
        sigma2,
        prob,
        interval,
        drawn_sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn diff_table() {
        assert_eq!(diff(0.0, 1.0, CmpOp::Ge), -1.0);
        assert_eq!(diff(0.0, 1.0, CmpOp::Le), 1.0);
        assert_eq!(diff(3.0, 1.0, CmpOp::Gt), 2.0 - strictness_epsilon(1.0));
        assert_eq!(diff(3.0, 1.0, CmpOp::Lt), -2.0 - strictness_epsilon(1.0));
    }

    #[test]
    fn strictness_at_equality() {
        for a in [0.0, 1.0, -1.0, 1e300, -3.7e-12, 0.1] {
            assert!(diff(a, a, CmpOp::Gt) < 0.0, "{a}");
            assert!(diff(a, a, CmpOp::Lt) < 0.0, "{a}");
            assert_eq!(diff(a, a, CmpOp::Ge), 0.0);
            assert_eq!(diff(a, a, CmpOp::Le), 0.0);
        }
    }

    #[test]
    fn strict_ops_accept_adjacent_floats() {
        // Neighbours on the far side must still count as satisfied.
        for a in [1.0, -1.0, 2.0, -2.0, 0.0, 1e-310, 5.5] {
            let up = f64::next_up(a);
            let down = f64::next_down(a);
            assert!(diff(up, a, CmpOp::Gt) >= 0.0, "{a}");
            assert!(diff(down, a, CmpOp::Lt) >= 0.0, "{a}");
        }
    }

    #[test]
    fn sign_of_diff_matches_crisp_comparison() {
        let vals = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.0 + 1e-15, 3.0];
        for &x in &vals {
            for &a in &vals {
                for op in CmpOp::ALL {
                    assert_eq!(diff(x, a, op) >= 0.0, op.holds(x, a), "{x} {op} {a}");
                }
            }
        }
    }

    #[test]
    fn branch_prob_worked_example_and_dirac() {
        assert!((branch_prob(1.0, 0.16) - 0.994).abs() < 1e-3);
        assert!((branch_prob(1.0, PI) - 0.714).abs() < 1e-3);
        assert!((branch_prob(1.0, 16.0) - 0.599).abs() < 1e-3);
        assert_eq!(branch_prob(-0.3, 0.0), 0.0);
        assert_eq!(branch_prob(0.3, 0.0), 1.0);
        assert_eq!(branch_prob(0.0, 0.0), 1.0);
    }

    #[test]
    fn branch_prob_strictly_increasing_in_diff() {
        let mut last = -1.0;
        for i in -40..=40 {
            let p = branch_prob(i as f64 * 0.05, 0.3);
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn dirac_check_is_crisp() {
        let mut rng = RngStream::new(1);
        for (x, a) in [(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)] {
            for op in CmpOp::ALL {
                let r = check(x, a, 0.0, op, &mut rng).unwrap();
                assert_eq!(r.taken, op.holds(x, a));
                let want = if r.taken { Interval::Unbounded } else { Interval::Empty };
                assert_eq!(r.interval, want);
            }
        }
    }

    #[test]
    fn check_result_is_self_consistent() {
        let mut rng = RngStream::new(5);
        for i in 0..200 {
            let r = check(0.01 * i as f64, 1.0, 0.25, CmpOp::Ge, &mut rng).unwrap();
            assert_eq!(r.taken, r.interval.contains(r.drawn_sample));
            assert_eq!(r.prob, branch_prob(r.diff, 0.25));
        }
    }

    #[test]
    fn check_rejects_bad_variance() {
        let mut rng = RngStream::new(0);
        assert!(check(0.0, 0.0, -0.1, CmpOp::Ge, &mut rng).is_err());
        assert!(check(0.0, 0.0, f64::NAN, CmpOp::Ge, &mut rng).is_err());
    }

    fn taken_rate(d: f64, sigma2: f64, n: usize, seed: u64) -> f64 {
        let mut rng = RngStream::new(seed);
        let hits = (0..n)
            .filter(|_| check(d, 0.0, sigma2, CmpOp::Ge, &mut rng).unwrap().taken)
            .count();
        hits as f64 / n as f64
    }

    #[test]
    fn empirical_rate_matches_worked_example() {
        let n = 100_000;
        for (sigma2, p) in [(0.16, branch_prob(1.0, 0.16)), (16.0, branch_prob(1.0, 16.0))] {
            let bound = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
            let rate = taken_rate(1.0, sigma2, n, 77);
            assert!((rate - p).abs() <= bound, "{sigma2}: {rate} vs {p}");
        }
    }
}
