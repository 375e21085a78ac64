//! Scalar and multivariate Gaussian kernel.
//!
//! Everything here is pure given an explicit [`RngStream`]. The error
//! function is evaluated in-house (series + continued fraction) so the
//! probit guards do not depend on platform `libm` behaviour.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{PI, SQRT_2};

use crate::error::GaussError;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Mean and variance of a univariate normal. Variance 0 is the Dirac case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self, GaussError> {
        if !mean.is_finite() {
            return Err(GaussError::NonFinite("mean"));
        }
        if !variance.is_finite() {
            return Err(GaussError::NonFinite("variance"));
        }
        if variance < 0.0 {
            return Err(GaussError::NegativeVariance(variance));
        }
        Ok(Self { mean, variance })
    }

    /// Zero-mean params, the shape every guard samples from.
    pub fn centered(variance: f64) -> Result<Self, GaussError> {
        Self::new(0.0, variance)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn is_dirac(&self) -> bool {
        self.variance == 0.0
    }
}

/// Seeded random stream. Identical seeds give bit-identical sequences.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for trial `index` under a root seed. The stream
    /// for a given index does not depend on how many trials are run.
    pub fn for_trial(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(index);
        Self { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random::<u64>()
    }
}

/// Error function, |error| below 1e-15 over the real line.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 3.0 {
        erf_series(x)
    } else {
        1.0 - erfc_continued_fraction(x)
    }
}

/// Complementary error function with good relative accuracy in the upper tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 3.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

// erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n (2x^2)^n x / (1*3*...*(2n+1)).
// All terms positive, so no cancellation for moderate x.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 || n > 500.0 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

// Modified Lentz evaluation of
// erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
fn erfc_continued_fraction(x: f64) -> f64 {
    if x > 27.3 {
        return 0.0;
    }
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..1000 {
        let a = k as f64 * 0.5;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI * (-x * x).exp() / f
}

/// Normal density. Undefined for the Dirac case.
pub fn pdf(x: f64, p: GaussianParams) -> Result<f64, GaussError> {
    if p.variance <= 0.0 {
        return Err(GaussError::DegenerateVariance);
    }
    let z2 = (x - p.mean) * (x - p.mean) / p.variance;
    Ok((-0.5 * z2).exp() / (2.0 * PI * p.variance).sqrt())
}

/// Normal CDF through the standard kernel. Step function when variance is 0,
/// with `x == mean` mapping to 1.
pub fn cdf(x: f64, p: GaussianParams) -> f64 {
    Kernel::STANDARD.cdf(x, p)
}

pub fn inv_cdf(q: f64, p: GaussianParams) -> Result<f64, GaussError> {
    Kernel::STANDARD.inv_cdf(q, p)
}

pub fn central_interval(mass: f64, sigma2: f64) -> Interval {
    Kernel::STANDARD.central_interval(mass, sigma2)
}

/// One draw. The Dirac case returns the mean without touching the stream.
pub fn sample(p: GaussianParams, rng: &mut RngStream) -> f64 {
    if p.is_dirac() {
        return p.mean;
    }
    p.mean + p.std_dev() * rng.standard_normal()
}

/// Probit kernel parameterised by its `erfc` implementation.
///
/// The production code always uses [`Kernel::STANDARD`]; other kernels exist
/// so the golden-value checker can be run against a deliberately broken one.
#[derive(Clone, Copy)]
pub struct Kernel {
    erfc: fn(f64) -> f64,
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Kernel").finish_non_exhaustive()
    }
}

impl Default for Kernel {
    fn default() -> Self {
        Self::STANDARD
    }
}

impl Kernel {
    pub const STANDARD: Kernel = Kernel { erfc };

    pub fn with_erfc(erfc: fn(f64) -> f64) -> Self {
        Self { erfc }
    }

    pub fn standard_cdf(&self, z: f64) -> f64 {
        0.5 * (self.erfc)(-z / SQRT_2)
    }

    pub fn cdf(&self, x: f64, p: GaussianParams) -> f64 {
        if p.is_dirac() {
            return if x >= p.mean { 1.0 } else { 0.0 };
        }
        self.standard_cdf((x - p.mean) / p.std_dev())
    }

    /// Standard-normal quantile: Newton on the CDF, kept inside a bracket that
    /// falls back to bisection when a step leaves it.
    fn standard_quantile(&self, q: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
        // Rational starting guess, good to about 4.5e-4.
        let t = q.min(1.0 - q).max(f64::MIN_POSITIVE);
        let g = (-2.0 * t.ln()).sqrt();
        let g = g - (2.515517 + 0.802853 * g + 0.010328 * g * g)
            / (1.0 + 1.432788 * g + 0.189269 * g * g + 0.001308 * g * g * g);
        let mut z = if q < 0.5 { -g } else { g };
        for _ in 0..200 {
            let f = self.standard_cdf(z) - q;
            if f < 0.0 {
                lo = z;
            } else {
                hi = z;
            }
            let density = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
            let mut next = z - f / density;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - z).abs() <= 1e-15 * z.abs().max(1.0) || hi - lo < 1e-13;
            z = next;
            if done {
                break;
            }
        }
        z
    }

    pub fn inv_cdf(&self, q: f64, p: GaussianParams) -> Result<f64, GaussError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(GaussError::QuantileDomain(q));
        }
        if p.is_dirac() {
            return Err(GaussError::DegenerateVariance);
        }
        Ok(p.mean + p.std_dev() * self.standard_quantile(q))
    }

    /// Symmetric interval around 0 holding `mass` under N(0, sigma2).
    pub fn central_interval(&self, mass: f64, sigma2: f64) -> Interval {
        if mass.is_nan() || mass <= 0.0 {
            return Interval::Empty;
        }
        if mass >= 1.0 {
            return Interval::Unbounded;
        }
        if sigma2 <= 0.0 {
            // A Dirac at 0 cannot split mass; the point interval holds all of it.
            return Interval::Bounded { lo: 0.0, hi: 0.0 };
        }
        // Solve on the lower tail, which keeps precision when mass is near 1.
        let tail = 0.5 * (1.0 - mass);
        let half_width = -self.standard_quantile(tail) * sigma2.sqrt();
        Interval::Bounded {
            lo: -half_width,
            hi: half_width,
        }
    }
}

/// Closed interval `[lo, hi]`, or one of the two Dirac-limit sentinels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interval {
    Empty,
    Bounded { lo: f64, hi: f64 },
    Unbounded,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Interval::Empty => false,
            Interval::Bounded { lo, hi } => lo <= x && x <= hi,
            Interval::Unbounded => true,
        }
    }

    /// Endpoints with infinities standing in for the unbounded case and NaN for empty.
    pub fn endpoints(&self) -> (f64, f64) {
        match *self {
            Interval::Empty => (f64::NAN, f64::NAN),
            Interval::Bounded { lo, hi } => (lo, hi),
            Interval::Unbounded => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Text form used in logs: `empty`, `unbounded`, or the two endpoints.
    pub fn describe(&self) -> (String, String) {
        match *self {
            Interval::Empty => ("empty".into(), "empty".into()),
            Interval::Unbounded => ("unbounded".into(), "unbounded".into()),
            Interval::Bounded { lo, hi } => (format!("{lo}"), format!("{hi}")),
        }
    }
}

/// Multivariate normal in precision form.
#[derive(Debug, Clone, PartialEq)]
pub struct Mgd {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
}

impl Mgd {
    pub fn new(mean: DVector<f64>, precision: DMatrix<f64>) -> Result<Self, GaussError> {
        let n = mean.len();
        if precision.nrows() != n || precision.ncols() != n {
            return Err(GaussError::Dimension {
                expected: n,
                found: precision.nrows(),
            });
        }
        Ok(Self { mean, precision })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Largest absolute asymmetry `|T - T^T|`.
    pub fn asymmetry(&self) -> f64 {
        let t = &self.precision;
        (t - t.transpose()).amax()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.precision.clone().cholesky().is_some()
    }

    pub fn covariance(&self) -> Result<DMatrix<f64>, GaussError> {
        self.precision
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or(GaussError::NotPositiveDefinite)
    }

    /// Density from the precision form.
    pub fn pdf(&self, x: &DVector<f64>) -> Result<f64, GaussError> {
        if x.len() != self.dim() {
            return Err(GaussError::Dimension {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let chol = self
            .precision
            .clone()
            .cholesky()
            .ok_or(GaussError::NotPositiveDefinite)?;
        let det_t = chol.determinant();
        let d = x - &self.mean;
        let mahalanobis = (d.transpose() * &self.precision * &d)[(0, 0)];
        let n = self.dim() as f64;
        Ok((det_t.sqrt() / (2.0 * PI).powf(n / 2.0)) * (-0.5 * mahalanobis).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(mean: f64, var: f64) -> GaussianParams {
        GaussianParams::new(mean, var).unwrap()
    }

    #[test]
    fn erf_reference_values() {
        // Abramowitz & Stegun table 7.1 / high-precision references.
        let cases = [
            (0.0, 0.0),
            (0.1, 0.112_462_916_018_284_9),
            (0.5, 0.520_499_877_813_046_5),
            (1.0, 0.842_700_792_949_714_9),
            (2.0, 0.995_322_265_018_952_7),
            (2.9, 0.999_958_902_121_900_5),
            (3.0, 0.999_977_909_503_001_4),
            (3.5, 0.999_999_256_901_627_7),
        ];
        for (x, want) in cases {
            assert!((erf(x) - want).abs() < 1e-15, "erf({x}) = {}", erf(x));
            assert!((erf(-x) + want).abs() < 1e-15);
        }
    }

    #[test]
    fn erfc_upper_tail_relative() {
        // erfc(5) = 1.5374597944280348e-12, erfc(10) = 2.088487583762545e-45
        assert!((erfc(5.0) / 1.537_459_794_428_034_8e-12 - 1.0).abs() < 1e-12);
        assert!((erfc(10.0) / 2.088_487_583_762_545e-45 - 1.0).abs() < 1e-12);
        assert_eq!(erfc(30.0), 0.0);
        assert!((erfc(-1.0) - (2.0 - erfc(1.0))).abs() < 1e-16);
    }

    #[test]
    fn erf_is_continuous_at_branch_switch() {
        let below = erf(3.0 - 1e-12);
        let above = erf(3.0);
        assert!((above - below).abs() < 1e-14);
    }

    #[test]
    fn pdf_at_mean_and_one_sigma() {
        assert!((pdf(0.0, p(0.0, 1.0)).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        let (mu, var) = (2.5_f64, 0.3_f64);
        let ratio = pdf(mu + var.sqrt(), p(mu, var)).unwrap() / pdf(mu, p(mu, var)).unwrap();
        assert!((ratio - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn pdf_integrates_to_one() {
        // trapezoid over [-8 sigma, 8 sigma]
        let params = p(0.7, 2.0);
        let s = params.std_dev();
        let n = 20_000;
        let (a, b) = (params.mean - 8.0 * s, params.mean + 8.0 * s);
        let h = (b - a) / n as f64;
        let mut total = 0.5 * (pdf(a, params).unwrap() + pdf(b, params).unwrap());
        for i in 1..n {
            total += pdf(a + i as f64 * h, params).unwrap();
        }
        assert!((total * h - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pdf_rejects_dirac() {
        assert_eq!(pdf(0.0, p(0.0, 0.0)), Err(GaussError::DegenerateVariance));
    }

    #[test]
    fn params_validate() {
        assert!(GaussianParams::new(0.0, -1e-3).is_err());
        assert!(GaussianParams::new(f64::NAN, 1.0).is_err());
        assert!(GaussianParams::new(0.0, 0.0).is_ok());
    }

    #[test]
    fn worked_example_cdfs() {
        assert!((cdf(1.0, p(0.0, 0.16)) - 0.994).abs() < 1e-3);
        assert!((cdf(1.0, p(0.0, PI)) - 0.714).abs() < 1e-3);
        assert!((cdf(1.0, p(0.0, 16.0)) - 0.599).abs() < 1e-3);
        for var in [1e-6, 0.3, 7.0, 1e4] {
            assert_eq!(cdf(0.0, p(0.0, var)), 0.5);
        }
    }

    #[test]
    fn dirac_cdf_is_a_step_with_closed_right_side() {
        let d = p(1.0, 0.0);
        assert_eq!(cdf(0.999, d), 0.0);
        assert_eq!(cdf(1.0, d), 1.0);
        assert_eq!(cdf(1.001, d), 1.0);
    }

    #[test]
    fn cdf_approaches_step_as_variance_shrinks() {
        for x in [-0.3, -1e-3, 2e-3, 0.5] {
            let step = if x >= 0.0 { 1.0 } else { 0.0 };
            let errs: Vec<f64> = [1e-2, 1e-6, 1e-12]
                .iter()
                .map(|&v| (cdf(x, p(0.0, v)) - step).abs())
                .collect();
            assert!(errs[0] >= errs[1] && errs[1] >= errs[2], "{x}: {errs:?}");
            assert!(errs[2] < 1e-12);
        }
    }

    #[test]
    fn inv_cdf_median_and_domain() {
        assert!(inv_cdf(0.5, p(0.0, 3.0)).unwrap().abs() < 1e-12);
        assert!(inv_cdf(0.5, p(4.0, 0.2)).unwrap() - 4.0 < 1e-12);
        assert!(matches!(inv_cdf(0.0, p(0.0, 1.0)), Err(GaussError::QuantileDomain(_))));
        assert!(matches!(inv_cdf(1.0, p(0.0, 1.0)), Err(GaussError::QuantileDomain(_))));
        assert!(inv_cdf(f64::NAN, p(0.0, 1.0)).is_err());
    }

    #[test]
    fn inv_cdf_upper_quantile() {
        // Phi^{-1}(0.997) = 2.747781385445...
        let q = inv_cdf(0.997, p(0.0, 0.16)).unwrap();
        assert!((q - 0.4 * 2.747_781_385_445_8).abs() < 1e-9);
        assert!((q - 1.095).abs() < 0.005);
    }

    #[test]
    fn inv_cdf_round_trips() {
        let mut rng = RngStream::new(11);
        let params = p(-1.3, 0.8);
        for _ in 0..50 {
            let x = params.mean + 4.0 * (rng.uniform() - 0.5) * params.std_dev();
            let back = inv_cdf(cdf(x, params), params).unwrap();
            assert!((back - x).abs() < 1e-9, "{x} -> {back}");
            assert!((cdf(back, params) - cdf(x, params)).abs() < 1e-10);
        }
    }

    #[test]
    fn central_intervals_match_worked_example() {
        for (mass, var, half) in [(0.994, 0.16, 1.095), (0.714, PI, 1.890), (0.599, 16.0, 3.357)] {
            let Interval::Bounded { lo, hi } = central_interval(mass, var) else {
                panic!("expected bounded interval");
            };
            assert_eq!(lo, -hi);
            assert!((hi - half).abs() < 0.01, "{mass} {var}: {hi}");
        }
    }

    #[test]
    fn central_interval_edges() {
        assert_eq!(central_interval(0.0, 2.0), Interval::Empty);
        assert_eq!(central_interval(1.0, 2.0), Interval::Unbounded);
        assert_eq!(central_interval(0.0, 0.0), Interval::Empty);
        assert_eq!(central_interval(1.0, 0.0), Interval::Unbounded);
        assert!(!Interval::Empty.contains(0.0));
        assert!(Interval::Unbounded.contains(f64::MAX));
    }

    #[test]
    fn central_interval_holds_its_mass() {
        let var = 0.7;
        for mass in [0.01, 0.3, 0.5, 0.9, 0.999_999] {
            let Interval::Bounded { lo, hi } = central_interval(mass, var) else {
                panic!()
            };
            let got = cdf(hi, p(0.0, var)) - cdf(lo, p(0.0, var));
            assert!((got - mass).abs() < 1e-12, "{mass}: {got}");
        }
    }

    #[test]
    fn dirac_sample_is_mean_and_draws_nothing() {
        let mut rng = RngStream::new(3);
        let before = rng.clone().next_u64();
        assert_eq!(sample(p(5.0, 0.0), &mut rng), 5.0);
        assert_eq!(rng.next_u64(), before);
    }

    #[test]
    fn same_seed_same_samples() {
        let mut a = RngStream::new(99);
        let mut b = RngStream::new(99);
        for _ in 0..100 {
            assert_eq!(
                sample(p(0.0, 1.0), &mut a).to_bits(),
                sample(p(0.0, 1.0), &mut b).to_bits()
            );
        }
    }

    #[test]
    fn trial_streams_are_distinct_and_stable() {
        let a0 = RngStream::for_trial(7, 0).next_u64();
        let a1 = RngStream::for_trial(7, 1).next_u64();
        assert_ne!(a0, a1);
        assert_eq!(a1, RngStream::for_trial(7, 1).next_u64());
    }

    #[test]
    fn sample_mean_converges() {
        let mut rng = RngStream::new(2024);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sample(p(0.0, 1.0), &mut rng)).sum::<f64>() / n as f64;
        // 3 sigma / sqrt(n) ~ 0.0095
        assert!(mean.abs() < 0.02, "{mean}");
    }

    #[test]
    fn mgd_density_matches_product_of_independent_normals() {
        let mgd = Mgd::new(
            DVector::from_vec(vec![1.0, -2.0]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / 0.5, 1.0 / 2.0])),
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.3, -1.1]);
        let want = pdf(1.3, p(1.0, 0.5)).unwrap() * pdf(-1.1, p(-2.0, 2.0)).unwrap();
        assert!((mgd.pdf(&x).unwrap() - want).abs() < 1e-14);
        assert_eq!(mgd.asymmetry(), 0.0);
        assert!(mgd.is_positive_definite());
    }
}
