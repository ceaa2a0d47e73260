use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::field::{unit_axis, BoxField};
use crate::nonlinearity::linspace;
use crate::{Error, Result};

/// Seeded family `uᵢ(x′, t) = dᵢ·g(t + 4Aᵢsᵢ(x′)·t(1−t))` on `[0,1]^{N−1} × [0,1]`
/// with `g(t) = tanh((2Lt − L)/√2)`.
///
/// Each `sᵢ` is a product of sines with values in `[−1, 1]` and `Aᵢ ≤ 0.2`,
/// so every vertical line stays strictly monotone and the boundary slices are
/// exactly `dᵢ·g(0)` and `dᵢ·g(1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltParams {
    pub m: usize,
    pub base_dim: usize,
    pub base_n: usize,
    pub nv: usize,
    pub length: f64,
    pub amplitude: (f64, f64),
    pub directions: Vec<i8>,
    pub seed: u64,
}

impl TiltParams {
    /// 64 base × 128 vertical nodes, all components increasing.
    pub fn new(m: usize, seed: u64) -> Self {
        Self { m, base_dim: 1, base_n: 64, nv: 128, length: 3.0, amplitude: (0.05, 0.2), directions: vec![1; m], seed }
    }
}

pub fn tilted_field(p: &TiltParams) -> Result<BoxField> {
    if p.directions.len() != p.m || p.directions.iter().any(|d| d.abs() != 1) {
        return Err(Error::invalid("tilt directions must be ±1, one per component"));
    }
    if !(0.0 <= p.amplitude.0 && p.amplitude.0 <= p.amplitude.1 && p.amplitude.1 <= 0.25) {
        return Err(Error::invalid("tilt amplitudes must satisfy 0 ≤ lo ≤ hi ≤ 1/4"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let tilts: Vec<(f64, Vec<(f64, f64)>)> = (0..p.m)
        .map(|_| {
            let a = rng.gen_range(p.amplitude.0..=p.amplitude.1);
            let waves = (0..p.base_dim)
                .map(|_| (f64::from(rng.gen_range(1..=2u8)), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            (a, waves)
        })
        .collect();
    let l = p.length;
    let g = move |t: f64| ((2.0 * l * t - l) / std::f64::consts::SQRT_2).tanh();
    let axes = vec![linspace(0.0, 1.0, p.base_n); p.base_dim];
    BoxField::from_fn(axes, unit_axis(p.nv), p.m, |i, x, t| {
        let (a, waves) = &tilts[i];
        let s: f64 = waves.iter().zip(x).map(|((k, phi), xd)| (std::f64::consts::TAU * k * xd + phi).sin()).product();
        f64::from(p.directions[i]) * g(t + 4.0 * a * s * t * (1.0 - t))
    })
}
