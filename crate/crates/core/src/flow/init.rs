use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lightcone::{intrinsic_scalar_curvature, ConformalFactor};
use crate::scalar::Real;
use crate::spectral::{synthesize, HarmonicCoeffs, SphereGrid};

/// Seeded perturbations `ω = c (1 + Σ_{2≤l≤l₀} ε_{lm} Y_{lm})` with
/// `ε_{lm}` uniform in `[−amplitude/l², amplitude/l²]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomInit<T> {
    pub c: T,
    pub l0: usize,
    pub amplitude: T,
    pub max_attempts: usize,
}

impl<T: Real> Default for RandomInit<T> {
    fn default() -> Self {
        Self {
            c: T::one(),
            l0: 4,
            amplitude: T::lit(0.1),
            max_attempts: 1000,
        }
    }
}

/// Draws until the sample has `ω > 0` and `R > 0` at every node.
pub fn random_initial<T: Real>(grid: &Arc<SphereGrid<T>>, spec: &RandomInit<T>, seed: u64) -> Result<ConformalFactor<T>> {
    if spec.l0 < 2 || spec.l0 > grid.bandlimit() {
        return Err(invalid("l0", format!("must lie in [2, {}]", grid.bandlimit())));
    }
    if !(spec.c > T::zero()) || !(spec.amplitude >= T::zero()) {
        return Err(invalid("random", "c must be positive and amplitude non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..spec.max_attempts {
        let mut coeffs = HarmonicCoeffs::zeros(grid.bandlimit());
        coeffs.set(0, 0, (T::lit(4.0) * T::PI()).sqrt());
        for l in 2..=spec.l0 {
            let bound = spec.amplitude.as_f64() / (l * l) as f64;
            for m in -(l as i64)..=(l as i64) {
                let e = if bound > 0.0 { rng.gen_range(-bound..=bound) } else { 0.0 };
                coeffs.set(l, m, T::lit(e));
            }
        }
        let w = synthesize(&coeffs, grid)?.scale(spec.c);
        let Ok(w) = ConformalFactor::new(w) else { continue };
        if intrinsic_scalar_curvature(&w)?.min() > T::zero() {
            return Ok(w);
        }
    }
    Err(Error::Insufficient(format!(
        "no admissible sample with R > 0 in {} attempts",
        spec.max_attempts
    )))
}
