use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SolgasError};
use crate::kernels::KernelSpec;
use crate::reduction::{join_coords, ReducedPoint};

/// Sampled points need every `|u^i|` at least this large.
pub const U_MIN: f64 = 1e-2;

/// Sampling region: `r` in `[−r_max, −r_min] ∪ [r_min, r_max]`, `η` in a
/// kernel box with a minimum pairwise gap.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBox {
    pub r_min: f64,
    pub r_max: f64,
    pub eta: (f64, f64),
    pub min_gap: f64,
}

impl SampleBox {
    pub fn for_kernel(kernel: &KernelSpec) -> Self {
        SampleBox {
            r_min: 0.5,
            r_max: 5.0,
            eta: kernel.eta_box,
            min_gap: kernel.min_gap,
        }
    }
}

/// Draws `count` admissible points `(r¹, η¹, …)` with a seeded ChaCha8
/// stream. A point is kept when the reduced point exists, every weight
/// clears [`U_MIN`] and `accept` agrees; rejected draws are not repaired.
pub fn sample_points(
    kernel: &KernelSpec,
    region: &SampleBox,
    n: usize,
    count: usize,
    seed: u64,
    accept: impl Fn(&[f64]) -> bool,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let max_attempts = 2000 * count.max(1);
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let eta: Vec<f64> = (0..n)
            .map(|_| rng.random_range(region.eta.0..region.eta.1))
            .collect();
        let r: Vec<f64> = (0..n)
            .map(|_| {
                let mag = rng.random_range(region.r_min..region.r_max);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let spaced = (0..n).all(|i| (i + 1..n).all(|j| (eta[i] - eta[j]).abs() >= region.min_gap));
        if !spaced {
            continue;
        }
        let Ok(point) = ReducedPoint::new(kernel, &r, &eta) else {
            continue;
        };
        if point.u.iter().any(|u| u.abs() < U_MIN) {
            continue;
        }
        let x = join_coords(&r, &eta);
        if accept(&x) {
            out.push(x);
        }
    }
    if out.len() < count {
        return Err(SolgasError::InsufficientSamples {
            required: count,
            got: out.len(),
        });
    }
    Ok(out)
}
