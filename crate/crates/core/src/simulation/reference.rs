//! Default times of the reference names.
//!
//! `phi_j = E_j / lambda_j` with `E_j` unit exponential, moved up to the
//! next grid date. Names are independent of each other and of the members'
//! rating migration (separate random substreams).

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::cds::{CdsContract, BUSINESS_DAYS_PER_YEAR};
use crate::rng::{substream, StreamDomain};

/// Business-day offset of a default `phi` years ahead, rounded up to a
/// multiple of `step` (at least one step).
pub fn snap_to_grid(phi: f64, step: u32) -> u32 {
    let steps = (phi * BUSINESS_DAYS_PER_YEAR / step as f64).ceil().max(1.0);
    (steps * step as f64).min(u32::MAX as f64) as u32
}

/// One joint draw of the reference default days.
pub fn draw_default_days<R: Rng + ?Sized>(contracts: &[CdsContract], step: u32, rng: &mut R) -> Vec<u32> {
    contracts
        .iter()
        .map(|c| {
            let e: f64 = rng.sample(Exp1);
            snap_to_grid(e / c.lambda, step)
        })
        .collect()
}

/// Default days of draw `index` in `domain`; reproducible in isolation.
pub fn default_days_for(
    contracts: &[CdsContract],
    step: u32,
    seed: u64,
    domain: StreamDomain,
    index: u64,
) -> Vec<u32> {
    draw_default_days(contracts, step, &mut substream(seed, domain, index))
}

/// `count` independent draws; a name surviving past `horizon_days` is `None`.
pub fn sample_reference_defaults(
    contracts: &[CdsContract],
    horizon_days: u32,
    count: usize,
    seed: u64,
    step: u32,
) -> Vec<Vec<Option<u32>>> {
    (0..count as u64)
        .into_par_iter()
        .map(|k| {
            default_days_for(contracts, step, seed, StreamDomain::Reference, k)
                .into_iter()
                .map(|d| (d <= horizon_days).then_some(d))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping() {
        assert_eq!(snap_to_grid(1.0 / 252.0, 1), 1);
        assert_eq!(snap_to_grid(1.5 / 252.0, 1), 2);
        assert_eq!(snap_to_grid(1e-9, 1), 1);
        assert_eq!(snap_to_grid(2.5 / 252.0, 2), 4);
        assert_eq!(snap_to_grid(1e300, 1), u32::MAX);
    }

    #[test]
    fn large_intensity_defaults_immediately() {
        let mut c = CdsContract::study_contracts()[0].clone();
        c.lambda = 1e6;
        let draws = sample_reference_defaults(&[c], 252, 200, 5, 1);
        assert!(draws.iter().all(|d| d[0] == Some(1)));
    }

    #[test]
    fn reproducible() {
        let c = CdsContract::study_contracts();
        assert_eq!(
            sample_reference_defaults(&c, 30, 50, 11, 1),
            sample_reference_defaults(&c, 30, 50, 11, 1)
        );
    }
}
