//! Array geometry, source definitions, steering vectors for the MIMO virtual
//! array, snapshot synthesis with circular complex Gaussian signals/noise,
//! sample and analytic covariances, and sub-array covariance smoothing.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, CVector, Cx};
use crate::scalar::{sc, Scalar};

/// Transmit/receive uniform linear arrays forming the virtual array.
///
/// Transmitters lie along one axis; receivers along an axis rotated by
/// `phi_trx_deg`. Element spacing is `d_over_lambda` wavelengths on both.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry<T = f64> {
    pub n_tx: usize,
    pub n_rx: usize,
    pub d_over_lambda: T,
    pub phi_trx_deg: T,
}

impl<T: Scalar> ArrayGeometry<T> {
    pub fn new(n_tx: usize, n_rx: usize, d_over_lambda: T, phi_trx_deg: T) -> Result<Self> {
        let g = Self {
            n_tx,
            n_rx,
            d_over_lambda,
            phi_trx_deg,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx < 2 || self.n_rx < 2 {
            return Err(Error::InvalidConfig(format!(
                "geometry requires n_tx >= 2 and n_rx >= 2, got {}x{}",
                self.n_tx, self.n_rx
            )));
        }
        let d = self.d_over_lambda;
        if !(d > T::zero() && d <= sc(0.5)) {
            return Err(Error::InvalidConfig(format!(
                "element spacing d/lambda must lie in (0, 0.5], got {d}"
            )));
        }
        let p = self.phi_trx_deg;
        if !(p > T::zero() && p < sc(180.0)) {
            return Err(Error::InvalidConfig(format!(
                "tx/rx axis angle must lie in (0, 180) degrees, got {p}"
            )));
        }
        Ok(())
    }

    /// Virtual array size N = n_tx · n_rx.
    pub fn n_virtual(&self) -> usize {
        self.n_tx * self.n_rx
    }
}

/// Far-field source: elevation from zenith, azimuth counterclockwise from the
/// transmit axis, and signal power.
#[derive(Debug, Clone, PartialEq)]
pub struct Source<T = f64> {
    pub theta_deg: T,
    pub phi_deg: T,
    pub power: T,
}

impl<T: Scalar> Source<T> {
    pub fn new(theta_deg: T, phi_deg: T, power: T) -> Self {
        Self {
            theta_deg,
            phi_deg,
            power,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_deg >= T::zero() && self.theta_deg <= sc(90.0)) {
            return Err(Error::InvalidConfig(format!(
                "elevation must lie in [0, 90] degrees, got {}",
                self.theta_deg
            )));
        }
        if !(self.phi_deg >= T::zero() && self.phi_deg < sc(360.0)) {
            return Err(Error::InvalidConfig(format!(
                "azimuth must lie in [0, 360) degrees, got {}",
                self.phi_deg
            )));
        }
        if !(self.power > T::zero() && self.power.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "source power must be positive, got {}",
                self.power
            )));
        }
        Ok(())
    }
}

/// Ground truth for one experiment: geometry, sources, SNR and sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig<T = f64> {
    pub geometry: ArrayGeometry<T>,
    pub sources: Vec<Source<T>>,
    /// SNR in dB, counting per-dimension signal power against per-sample
    /// noise power: sigma² = mean(source power)·10^(−snr_db/10)/2.
    pub snr_db: T,
    /// Zero noise exactly; `snr_db` is ignored when set.
    pub noise_free: bool,
    pub num_samples: usize,
    pub seed: u64,
}

impl<T: Scalar> SceneConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.sources.is_empty() {
            return Err(Error::InvalidConfig("scene needs at least one source".into()));
        }
        for s in &self.sources {
            s.validate()?;
        }
        let k = self.sources.len();
        let min_n = self.geometry.n_tx.min(self.geometry.n_rx);
        if k >= min_n {
            return Err(Error::InvalidConfig(format!(
                "number of sources ({k}) must be less than min(n_tx, n_rx) = {min_n}"
            )));
        }
        if self.num_samples == 0 {
            return Err(Error::InvalidConfig("num_samples must be >= 1".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidConfig("snr_db must be finite".into()));
        }
        Ok(())
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    /// Noise variance sigma² per complex entry: zero in noise-free mode,
    /// otherwise half the mean source power divided by the linear SNR.
    pub fn noise_variance(&self) -> T {
        if self.noise_free {
            return T::zero();
        }
        let k = sc::<T>(self.sources.len() as f64);
        let mean_power = self.sources.iter().map(|s| s.power).sum::<T>() / k;
        mean_power / (sc::<T>(2.0) * sc::<T>(10.0).powf(self.snr_db / sc(10.0)))
    }
}

/// Matched-filter output samples across the virtual array.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet<T = f64> {
    pub samples: Vec<CVector<T>>,
    pub geometry: ArrayGeometry<T>,
}

impl<T: Scalar> SnapshotSet<T> {
    pub fn num_samples(&self) -> usize {
        self.samples.len()
    }
}

/// Steering phase increments (radians) along the tx and rx axes:
/// `eps_tx = −2π(d/λ)·sinθ·cosφ`, `eps_rx = −2π(d/λ)·sinθ·cos(φ−φ_trx)`.
/// With d ≤ λ/2 both already lie in [−π, π]; no wrapping is applied.
pub fn steering_epsilon<T: Scalar>(source: &Source<T>, geometry: &ArrayGeometry<T>) -> (T, T) {
    steering_epsilon_deg(source.theta_deg, source.phi_deg, geometry)
}

pub fn steering_epsilon_deg<T: Scalar>(
    theta_deg: T,
    phi_deg: T,
    geometry: &ArrayGeometry<T>,
) -> (T, T) {
    let two_pi_d = (T::PI() + T::PI()) * geometry.d_over_lambda;
    let theta = theta_deg.to_radians();
    let phi = phi_deg.to_radians();
    let phi_trx = geometry.phi_trx_deg.to_radians();
    let st = theta.sin();
    let eps_tx = -two_pi_d * st * phi.cos();
    let eps_rx = -two_pi_d * st * (phi - phi_trx).cos();
    (eps_tx, eps_rx)
}

/// One-axis steering vector with 1-based phase exponents:
/// entry i (i = 1..n) is `exp(j·i·eps)`.
pub fn steering_vector<T: Scalar>(eps: T, n: usize) -> CVector<T> {
    assert!(n >= 2, "steering vector needs n >= 2");
    CVector::new(
        (1..=n)
            .map(|i| cis(sc::<T>(i as f64) * eps))
            .collect(),
    )
}

/// Virtual-array steering vector: Kronecker product of the tx and rx vectors.
pub fn virtual_steering<T: Scalar>(source: &Source<T>, geometry: &ArrayGeometry<T>) -> CVector<T> {
    let (eps_tx, eps_rx) = steering_epsilon(source, geometry);
    steering_vector(eps_tx, geometry.n_tx).kron(&steering_vector(eps_rx, geometry.n_rx))
}

/// All K virtual steering vectors as the columns of an N×K matrix.
pub fn steering_matrix<T: Scalar>(config: &SceneConfig<T>) -> CMatrix<T> {
    let n = config.geometry.n_virtual();
    let cols: Vec<CVector<T>> = config
        .sources
        .iter()
        .map(|s| virtual_steering(s, &config.geometry))
        .collect();
    CMatrix::from_fn(n, cols.len(), |r, c| cols[c][r])
}

#[inline]
fn gauss<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    let g: f64 = StandardNormal.sample(rng);
    sc(g)
}

/// Synthesize `x(m) = A s(m) + w(m)` snapshots.
///
/// Signals and noise are circular complex Gaussian (variance per complex
/// entry: source power, sigma² respectively). Fully determined by the seed;
/// unit-variance draws are made in a fixed order and scaled afterwards, so
/// scenes differing only in SNR share the same underlying randomness.
pub fn synthesize<T: Scalar>(config: &SceneConfig<T>) -> Result<SnapshotSet<T>> {
    config.validate()?;
    let n = config.geometry.n_virtual();
    let a_cols: Vec<CVector<T>> = config
        .sources
        .iter()
        .map(|s| virtual_steering(s, &config.geometry))
        .collect();
    let amps: Vec<T> = config.sources.iter().map(|s| s.power.sqrt()).collect();
    let noise_amp = config.noise_variance().sqrt();
    let root_half = sc::<T>(0.5).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut samples = Vec::with_capacity(config.num_samples);
    for _ in 0..config.num_samples {
        let mut x = vec![Complex::new(T::zero(), T::zero()); n];
        for (col, &amp) in a_cols.iter().zip(&amps) {
            let s = Cx::new(gauss(&mut rng), gauss(&mut rng)) * (amp * root_half);
            for (xi, ai) in x.iter_mut().zip(col.as_slice()) {
                *xi = *xi + *ai * s;
            }
        }
        let w_amp = noise_amp * root_half;
        for xi in x.iter_mut() {
            let w = Cx::new(gauss(&mut rng), gauss(&mut rng)) * w_amp;
            *xi = *xi + w;
        }
        samples.push(CVector::new(x));
    }
    Ok(SnapshotSet {
        samples,
        geometry: config.geometry.clone(),
    })
}

/// Sample auto-correlation `(1/M) Σ x(m) x(m)†`, Hermitian by construction.
pub fn sample_covariance<T: Scalar>(snapshots: &SnapshotSet<T>) -> Result<CMatrix<T>> {
    let m = snapshots.samples.len();
    if m == 0 {
        return Err(Error::EmptyInput("snapshot set has no samples".into()));
    }
    let n = snapshots.geometry.n_virtual();
    let mut r = CMatrix::zeros(n, n);
    for x in &snapshots.samples {
        if x.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "snapshot length {} does not match virtual array size {n}",
                x.len()
            )));
        }
        r.add_outer(x, T::one());
    }
    r.scale_in_place(T::one() / sc(m as f64));
    Ok(r.hermitized())
}

/// Analytic covariance `R = A R_s A† + sigma² I` with diagonal `R_s`.
/// This is the oracle the noise-free tests and the noise-free benchmark mode
/// run on.
pub fn exact_covariance<T: Scalar>(config: &SceneConfig<T>) -> CMatrix<T> {
    let n = config.geometry.n_virtual();
    let mut r = CMatrix::zeros(n, n);
    for s in &config.sources {
        let a = virtual_steering(s, &config.geometry);
        r.add_outer(&a, s.power);
    }
    r.add_diag(config.noise_variance());
    r
}

/// Average of the covariances of all (K+1)×(K+1) uniform sub-arrays.
///
/// Sub-array (p, q) selects virtual indices {(i, l) : p < i ≤ p+K+1,
/// q < l ≤ q+K+1} with flat index (i−1)·n_rx + (l−1). The result is
/// (K+1)²×(K+1)² and is what the iterative estimator consumes when the
/// physical array is larger than (K+1)×(K+1).
pub fn subarray_smoothed_covariance<T: Scalar>(
    r: &CMatrix<T>,
    geometry: &ArrayGeometry<T>,
    num_sources: usize,
) -> Result<CMatrix<T>> {
    let side = num_sources + 1;
    if geometry.n_tx < side || geometry.n_rx < side {
        return Err(Error::InvalidConfig(format!(
            "sub-array smoothing needs n_tx >= {side} and n_rx >= {side}, got {}x{}",
            geometry.n_tx, geometry.n_rx
        )));
    }
    let n = geometry.n_virtual();
    if !r.is_square() || r.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}, expected {n}x{n}",
            r.rows(),
            r.cols()
        )));
    }
    let sub_n = side * side;
    let n_sa = (geometry.n_tx - num_sources) * (geometry.n_rx - num_sources);
    let mut acc = CMatrix::zeros(sub_n, sub_n);
    let mut idx = Vec::with_capacity(sub_n);
    for p in 0..(geometry.n_tx - side + 1) {
        for q in 0..(geometry.n_rx - side + 1) {
            idx.clear();
            for i in 0..side {
                for l in 0..side {
                    idx.push((p + i) * geometry.n_rx + (q + l));
                }
            }
            acc.add_assign(&r.principal_submatrix(&idx));
        }
    }
    acc.scale_in_place(T::one() / sc(n_sa as f64));
    Ok(acc)
}

/// Number of (K+1)×(K+1) sub-arrays for a geometry.
pub fn num_subarrays<T: Scalar>(geometry: &ArrayGeometry<T>, num_sources: usize) -> usize {
    geometry
        .n_tx
        .saturating_sub(num_sources)
        .saturating_mul(geometry.n_rx.saturating_sub(num_sources))
}
