//! Synthetic expert demonstrations.

use crate::error::SimError;
use crate::gauss::{self, GaussianParams, RngStream};
use crate::gbn::Trace;

use super::WorldConfig;

/// Attempts made before a low acceptance rate is reported as an error.
pub const MIN_ATTEMPTS: usize = 1000;

/// `count` successful maneuvers. Each primitive deviates from its nominal
/// magnitude by `coupling * previous deviation + N(0, jitter)`; a candidate is
/// kept when its noise-free endpoint lies in the spot.
pub fn gen_expert_traces(count: usize, world: &WorldConfig, rng: &mut RngStream) -> Result<Vec<Trace>, SimError> {
    if count == 0 {
        return Err(SimError::InvalidWorld("trace count must be >= 1".into()));
    }
    let nominal = world.nominal.magnitudes();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        let mut x = Vec::with_capacity(nominal.len());
        let mut prev_dev = 0.0;
        for (i, &mu) in nominal.iter().enumerate() {
            let carry = if i == 0 { 0.0 } else { world.coupling[i] * prev_dev };
            let noise = gauss::sample(
                GaussianParams {
                    mean: 0.0,
                    variance: world.jitter[i],
                },
                rng,
            );
            prev_dev = carry + noise;
            x.push(mu + prev_dev);
        }
        let end = world.nominal.with_magnitudes(&x).endpoint(&world.start);
        if world.spot.contains(&end) {
            out.push(Trace(x));
        }
        if attempts >= MIN_ATTEMPTS && out.len() * 100 < attempts {
            return Err(SimError::LowSuccessRate {
                rate: out.len() as f64 / attempts as f64,
                accepted: out.len(),
                attempts,
            });
        }
    }
    Ok(out)
}
