//! Conjugate (normal-Wishart) updating of the joint Gaussian from traces.

use nalgebra::{DMatrix, DVector};

use crate::error::GbnError;
use crate::gauss::Mgd;

use super::{extract_banded, Gbn, Trace};

/// Prior covariance scale used when no prior model is supplied. Small against
/// any physically meaningful primitive variance, so the data dominate.
pub const DEFAULT_PRIOR_SCALE: f64 = 1e-6;

/// Hyperparameters of the joint over all primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningState {
    /// Equivalent sample size of the prior belief.
    pub v: f64,
    /// Wishart degrees of freedom, `v - 1` for a fresh prior.
    pub alpha: f64,
    pub mu: DVector<f64>,
    /// Prior scatter matrix.
    pub beta: DMatrix<f64>,
}

impl LearningState {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Prior from an existing model: `beta = v (alpha - n + 1) / (v + 1) * T^-1`.
    pub fn from_prior(prior: &Mgd, v: f64) -> Result<Self, GbnError> {
        let n = prior.dim() as f64;
        let alpha = v - 1.0;
        let margin = alpha - n + 1.0;
        if !(v >= 1.0) || margin <= 0.0 {
            return Err(GbnError::InvalidPrior(format!(
                "equivalent sample size {v} must exceed the dimension {n}"
            )));
        }
        let cov = prior.covariance()?;
        Ok(Self {
            v,
            alpha,
            mu: prior.mean.clone(),
            beta: cov * (v * margin / (v + 1.0)),
        })
    }

    /// Weakest proper prior: `v = n + 2`, mean `mu`, covariance `scale * I`.
    pub fn weak(mu: DVector<f64>, scale: f64) -> Result<Self, GbnError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(GbnError::InvalidPrior(format!("covariance scale {scale} must be > 0")));
        }
        let n = mu.len();
        let prior = Mgd {
            precision: DMatrix::identity(n, n) / scale,
            mean: mu,
        };
        Self::from_prior(&prior, n as f64 + 2.0)
    }

    /// Weak prior centred on the first trace.
    pub fn weak_from_traces(traces: &[Trace], scale: f64) -> Result<Self, GbnError> {
        let first = traces
            .first()
            .ok_or_else(|| GbnError::InvalidPrior("no traces to centre the prior on".into()))?;
        Self::weak(DVector::from_column_slice(first.values()), scale)
    }

    /// Fold `traces` into the belief. An empty batch leaves the state unchanged.
    pub fn learn_update(&self, traces: &[Trace]) -> Result<Self, GbnError> {
        let n = self.dim();
        for (i, t) in traces.iter().enumerate() {
            if t.len() != n {
                return Err(GbnError::TraceLength {
                    trace: i + 1,
                    expected: n,
                    found: t.len(),
                });
            }
        }
        let m = traces.len();
        if m == 0 {
            return Ok(self.clone());
        }
        let mf = m as f64;
        let xs: Vec<DVector<f64>> = traces.iter().map(|t| DVector::from_column_slice(t.values())).collect();
        let x_bar = xs.iter().fold(DVector::zeros(n), |acc, x| acc + x) / mf;
        let mut scatter = DMatrix::<f64>::zeros(n, n);
        for x in &xs {
            let d = x - &x_bar;
            scatter += &d * d.transpose();
        }
        let shift = &x_bar - &self.mu;
        let v = self.v;
        let beta = &self.beta + scatter + (&shift * shift.transpose()) * (v * mf / (v + mf));
        let mu = (&self.mu * v + &x_bar * mf) / (v + mf);
        let next = Self {
            v: v + mf,
            alpha: self.alpha + mf,
            mu,
            beta,
        };
        next.check_proper()?;
        Ok(next)
    }

    fn check_proper(&self) -> Result<f64, GbnError> {
        let n = self.dim() as f64;
        let margin = self.alpha - n + 1.0;
        if margin <= 0.0 {
            let needed = (n - 1.0 - self.alpha).floor() as usize + 1;
            return Err(GbnError::ImproperPosterior { margin, needed });
        }
        Ok(margin)
    }

    /// `(T*)^-1 = (v* + 1) / (v* (alpha* - n + 1)) * beta*`.
    pub fn covariance(&self) -> Result<DMatrix<f64>, GbnError> {
        let margin = self.check_proper()?;
        Ok(&self.beta * ((self.v + 1.0) / (self.v * margin)))
    }

    pub fn to_mgd(&self) -> Result<Mgd, GbnError> {
        let cov = self.covariance()?;
        let precision = cov
            .cholesky()
            .map(|c| c.inverse())
            .ok_or(crate::error::GaussError::NotPositiveDefinite)?;
        // Symmetrise away rounding from the inverse.
        let precision = (&precision + precision.transpose()) * 0.5;
        Ok(Mgd {
            mean: self.mu.clone(),
            precision,
        })
    }
}

/// Chain parameters of the current belief, with labels, motion types and
/// directions taken from `layout`.
pub fn learned_chain(state: &LearningState, layout: &Gbn) -> Result<Gbn, GbnError> {
    extract_banded(&state.to_mgd()?)?.with_layout_of(layout)
}

impl LearningState {
    /// Plain-text form: `v`, `alpha`, `mu` and one `beta` line per row, numbers
    /// written so they parse back to the same bits.
    pub fn to_text(&self) -> String {
        let row = |it: &mut dyn Iterator<Item = f64>| it.map(super::format_number).collect::<Vec<_>>().join(" ");
        let mut out = format!("v {}\nalpha {}\n", super::format_number(self.v), super::format_number(self.alpha));
        out.push_str(&format!("mu {}\n", row(&mut self.mu.iter().copied())));
        for r in 0..self.beta.nrows() {
            out.push_str(&format!("beta {}\n", row(&mut self.beta.row(r).iter().copied())));
        }
        out
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self, GbnError> {
        let bad = |line: usize, message: &str| GbnError::Csv {
            path: source.to_string(),
            row: line,
            message: message.to_string(),
        };
        let (mut v, mut alpha, mut mu, mut beta) = (None, None, None, Vec::new());
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or("");
            let nums = parts
                .map(|p| p.parse::<f64>().map_err(|_| bad(i + 1, &format!("`{p}` is not a number"))))
                .collect::<Result<Vec<_>, _>>()?;
            match key {
                "v" | "alpha" if nums.len() != 1 => return Err(bad(i + 1, "expected one number")),
                "v" => v = Some(nums[0]),
                "alpha" => alpha = Some(nums[0]),
                "mu" => mu = Some(nums),
                "beta" => beta.push(nums),
                other => return Err(bad(i + 1, &format!("unknown key `{other}`"))),
            }
        }
        let (Some(v), Some(alpha), Some(mu)) = (v, alpha, mu) else {
            return Err(bad(0, "state needs `v`, `alpha` and `mu`"));
        };
        let n = mu.len();
        if beta.len() != n || beta.iter().any(|r| r.len() != n) {
            return Err(bad(0, &format!("`beta` must be {n} rows of {n} numbers")));
        }
        Ok(Self {
            v,
            alpha,
            mu: DVector::from_vec(mu),
            beta: DMatrix::from_fn(n, n, |r, c| beta[r][c]),
        })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, GbnError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GbnError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), GbnError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| GbnError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traces(rows: &[&[f64]]) -> Vec<Trace> {
        rows.iter().map(|r| Trace(r.to_vec())).collect()
    }

    #[test]
    fn empty_batch_is_identity() {
        let s = LearningState::weak(DVector::from_vec(vec![1.0, 2.0]), 0.5).unwrap();
        assert_eq!(s.learn_update(&[]).unwrap(), s);
    }

    #[test]
    fn sample_size_bookkeeping() {
        let mut s = LearningState::weak(DVector::from_vec(vec![0.0]), 1.0).unwrap();
        s.v = 3.0;
        s.alpha = 2.0;
        let batch: Vec<Trace> = (0..7).map(|i| Trace(vec![i as f64])).collect();
        let next = s.learn_update(&batch).unwrap();
        assert_eq!(next.v, 10.0);
        assert_eq!(next.alpha, 9.0);
    }

    #[test]
    fn mean_update_is_weighted_average() {
        let s = LearningState::weak(DVector::from_vec(vec![0.0, 0.0]), 1.0).unwrap();
        // v = 4
        let next = s.learn_update(&traces(&[&[1.0, 2.0], &[3.0, 4.0]])).unwrap();
        assert!((next.mu[0] - (2.0 * 2.0) / 6.0).abs() < 1e-12);
        assert!((next.mu[1] - (2.0 * 3.0) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn prior_reproduces_its_covariance() {
        // With no data, the posterior covariance equals the prior T^-1.
        let prior = Mgd {
            mean: DVector::from_vec(vec![0.1, 0.2, 0.3]),
            precision: DMatrix::from_row_slice(3, 3, &[4.0, -1.0, 0.0, -1.0, 5.0, -2.0, 0.0, -2.0, 6.0]),
        };
        let s = LearningState::from_prior(&prior, 10.0).unwrap();
        let cov = s.covariance().unwrap();
        let want = prior.covariance().unwrap();
        assert!((cov - want).amax() < 1e-12);
    }

    #[test]
    fn split_batches_agree() {
        let all = traces(&[
            &[1.0, 0.3, -0.2],
            &[0.9, 0.1, 0.0],
            &[1.2, 0.5, -0.4],
            &[1.1, 0.2, 0.1],
            &[0.7, 0.0, 0.2],
        ]);
        let s0 = LearningState::weak_from_traces(&all, 1e-3).unwrap();
        let once = s0.learn_update(&all).unwrap();
        let twice = s0.learn_update(&all[..2]).unwrap().learn_update(&all[2..]).unwrap();
        assert!((once.beta.clone() - twice.beta.clone()).amax() < 1e-12);
        assert!((once.mu.clone() - twice.mu.clone()).amax() < 1e-12);
        assert_eq!(once.v, twice.v);
    }

    #[test]
    fn text_form_is_exact() {
        let all = traces(&[&[1.0, 0.3], &[0.9, 0.1], &[1.2, 0.5]]);
        let s = LearningState::weak_from_traces(&all, 1e-3).unwrap().learn_update(&all).unwrap();
        assert_eq!(LearningState::from_text(&s.to_text(), "s").unwrap(), s);
        assert!(LearningState::from_text("v 1\nalpha 0\nmu 1 2\nbeta 1 0\n", "s").is_err());
        assert!(LearningState::from_text("v x\n", "s").is_err());
    }

    #[test]
    fn errors() {
        let s = LearningState::weak(DVector::from_vec(vec![0.0, 0.0]), 1.0).unwrap();
        assert!(matches!(
            s.learn_update(&traces(&[&[1.0]])),
            Err(GbnError::TraceLength { trace: 1, expected: 2, found: 1 })
        ));
        let prior = Mgd {
            mean: DVector::zeros(3),
            precision: DMatrix::identity(3, 3),
        };
        assert!(LearningState::from_prior(&prior, 3.0).is_err());
        assert!(LearningState::weak(DVector::zeros(2), 0.0).is_err());

        // A state that is still short of data reports how much more it needs.
        let thin = LearningState {
            v: 1.0,
            alpha: 0.0,
            mu: DVector::zeros(3),
            beta: DMatrix::identity(3, 3),
        };
        assert!(matches!(
            thin.learn_update(&traces(&[&[0.0, 0.0, 0.0]])),
            Err(GbnError::ImproperPosterior { needed: 2, .. })
        ));
    }
}
