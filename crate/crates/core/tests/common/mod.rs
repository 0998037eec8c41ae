//! Shared scene builders for the integration suites.
#![allow(dead_code)] // each test binary uses a different subset

use mimo_doa::scene::{ArrayGeometry, SceneConfig, Source};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const MASTER_SEED: u64 = 20260808;

/// The reference two-source scene: 3×3 virtual array at half-wavelength
/// spacing, orthogonal tx/rx axes, sources (30°, 25°) and (70°, 80°).
pub fn reference_scene(noise_free: bool, snr_db: f64, num_samples: usize, seed: u64) -> SceneConfig<f64> {
    SceneConfig {
        geometry: ArrayGeometry::new(3, 3, 0.5, 90.0).unwrap(),
        sources: vec![Source::new(30.0, 25.0, 1.0), Source::new(70.0, 80.0, 1.0)],
        snr_db,
        noise_free,
        num_samples,
        seed,
    }
}

pub fn wrap_rad(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut v = x % two_pi;
    if v > std::f64::consts::PI {
        v -= two_pi;
    } else if v < -std::f64::consts::PI {
        v += two_pi;
    }
    v
}

/// Random noise-free scene with K sources on a (K+1)×(K+1) array.
/// `min_phase_sep` optionally enforces pairwise steering-phase separation on
/// both axes (rejection sampling), which keeps ratio denominators away from
/// zero for exact-recovery checks.
pub fn random_scene(k: usize, rng: &mut ChaCha8Rng, min_phase_sep: Option<f64>) -> SceneConfig<f64> {
    let geometry = ArrayGeometry::new(k + 1, k + 1, 0.5, 90.0).unwrap();
    loop {
        let sources: Vec<Source<f64>> = (0..k)
            .map(|_| {
                Source::new(
                    5.0 + 80.0 * rng.random::<f64>(),
                    360.0 * rng.random::<f64>(),
                    1.0,
                )
            })
            .collect();
        let cfg = SceneConfig {
            geometry: geometry.clone(),
            sources,
            snr_db: 0.0,
            noise_free: true,
            num_samples: 1,
            seed: 0,
        };
        if let Some(sep) = min_phase_sep {
            let eps: Vec<(f64, f64)> = cfg
                .sources
                .iter()
                .map(|s| mimo_doa::scene::steering_epsilon(s, &geometry))
                .collect();
            let mut ok = true;
            'pairs: for i in 0..k {
                for j in (i + 1)..k {
                    if wrap_rad(eps[i].0 - eps[j].0).abs() < sep
                        || wrap_rad(eps[i].1 - eps[j].1).abs() < sep
                    {
                        ok = false;
                        break 'pairs;
                    }
                }
            }
            if !ok {
                continue;
            }
        }
        return cfg;
    }
}
