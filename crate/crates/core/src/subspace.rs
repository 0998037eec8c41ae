//! Closed-form noise-subspace construction.
//!
//! For K sources on a (K+1)-element uniform axis, the one-dimensional
//! non-signal subspace vector is built recursively: E_1 = [1, −exp(jε_1)] and
//! E_k = Ẽ_{k−1} − exp(jε_k)·L·Ẽ_{k−1}, where Ẽ pads one trailing zero and L
//! is the cyclic down-shift. The Kronecker product of the tx and rx vectors is
//! orthogonal to every virtual steering vector, and splitting off the last
//! recursion level yields the four u-vectors the iterative estimator solves
//! against — no eigendecomposition anywhere.

use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, CVector, Cx};
use crate::scalar::{sc, Scalar};

/// Per-source steering phase pairs (radians) along the tx and rx axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringSet<T = f64> {
    eps_tx: Vec<T>,
    eps_rx: Vec<T>,
}

impl<T: Scalar> SteeringSet<T> {
    pub fn new(eps_tx: Vec<T>, eps_rx: Vec<T>) -> Result<Self> {
        if eps_tx.len() != eps_rx.len() {
            return Err(Error::DimensionMismatch(format!(
                "steering set has {} tx entries but {} rx entries",
                eps_tx.len(),
                eps_rx.len()
            )));
        }
        Ok(Self { eps_tx, eps_rx })
    }

    pub fn empty() -> Self {
        Self {
            eps_tx: Vec::new(),
            eps_rx: Vec::new(),
        }
    }

    pub fn from_pairs(pairs: &[(T, T)]) -> Self {
        Self {
            eps_tx: pairs.iter().map(|p| p.0).collect(),
            eps_rx: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.eps_tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps_tx.is_empty()
    }

    pub fn eps_tx(&self) -> &[T] {
        &self.eps_tx
    }

    pub fn eps_rx(&self) -> &[T] {
        &self.eps_rx
    }

    pub fn pair(&self, i: usize) -> (T, T) {
        (self.eps_tx[i], self.eps_rx[i])
    }
}

/// One-axis noise-subspace vector for the given steering phases; length
/// `eps.len() + 1`.
pub fn noise_subspace_1d<T: Scalar>(eps: &[T]) -> Result<CVector<T>> {
    if eps.is_empty() {
        return Err(Error::EmptyInput(
            "noise subspace needs at least one steering phase".into(),
        ));
    }
    let one = Cx::new(T::one(), T::zero());
    let mut e = CVector::new(vec![one, -cis(eps[0])]);
    for &epsk in &eps[1..] {
        let padded = e.with_trailing_zero();
        e = padded.sub_scaled(cis(epsk), &padded.cyclic_down_shift());
    }
    Ok(e)
}

/// Zero-padded subspace vector Ẽ. For an empty phase list this is the
/// recursion base [1, 0], which is the unique choice making the u-vector
/// decomposition reduce to E_1 on each axis.
pub fn padded_subspace<T: Scalar>(eps: &[T]) -> CVector<T> {
    if eps.is_empty() {
        CVector::new(vec![Cx::new(T::one(), T::zero()), Cx::new(T::zero(), T::zero())])
    } else {
        noise_subspace_1d(eps)
            .expect("non-empty phase list")
            .with_trailing_zero()
    }
}

/// The four Kronecker building blocks of E_K for a candidate K-th source:
/// E_K = u0 − u1·e^{jε_rx,K} − u2·e^{jε_tx,K} + u3·e^{j(ε_tx,K+ε_rx,K)}.
#[derive(Debug, Clone)]
pub struct UVectors<T = f64> {
    pub u0: CVector<T>,
    pub u1: CVector<T>,
    pub u2: CVector<T>,
    pub u3: CVector<T>,
    num_sources: usize,
}

impl<T: Scalar> UVectors<T> {
    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    /// Vector length (K+1)².
    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    /// Reassemble E_K for a candidate K-th source.
    pub fn noise_vector(&self, eps_tx_k: T, eps_rx_k: T) -> CVector<T> {
        let e_tx = cis(eps_tx_k);
        let e_rx = cis(eps_rx_k);
        self.u0
            .sub_scaled(e_rx, &self.u1)
            .sub_scaled(e_tx, &self.u2)
            .sub_scaled(-(e_tx * e_rx), &self.u3)
    }
}

/// Build u0..u3 from the K−1 known sources' steering pairs.
pub fn build_uvectors<T: Scalar>(
    partial: &SteeringSet<T>,
    num_sources: usize,
) -> Result<UVectors<T>> {
    if num_sources == 0 {
        return Err(Error::InvalidConfig("need at least one source".into()));
    }
    if partial.len() != num_sources - 1 {
        return Err(Error::InvalidConfig(format!(
            "u-vectors need exactly {} steering pairs, got {}",
            num_sources - 1,
            partial.len()
        )));
    }
    let e_tx = padded_subspace(partial.eps_tx());
    let e_rx = padded_subspace(partial.eps_rx());
    let l_tx = e_tx.cyclic_down_shift();
    let l_rx = e_rx.cyclic_down_shift();
    Ok(UVectors {
        u0: e_tx.kron(&e_rx),
        u1: e_tx.kron(&l_rx),
        u2: l_tx.kron(&e_rx),
        u3: l_tx.kron(&l_rx),
        num_sources,
    })
}

/// Norms of R applied to the three residual vectors that must lie in the
/// noise subspace when the K-th source's steering is correct:
/// r1 = ‖R(u1 − e^{jε_tx,K}u3)‖, r2 = ‖R(u2 − e^{jε_rx,K}u3)‖,
/// r3 = ‖R(u0 − e^{j(ε_tx,K+ε_rx,K)}u3)‖.
pub fn subspace_residuals<T: Scalar>(
    u: &UVectors<T>,
    r: &CMatrix<T>,
    eps_tx_k: T,
    eps_rx_k: T,
) -> Result<(T, T, T)> {
    if !r.is_square() || r.rows() != u.dim() {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}, u-vectors have length {}",
            r.rows(),
            r.cols(),
            u.dim()
        )));
    }
    let v1 = u.u1.sub_scaled(cis(eps_tx_k), &u.u3);
    let v2 = u.u2.sub_scaled(cis(eps_rx_k), &u.u3);
    let v3 = u.u0.sub_scaled(cis(eps_tx_k + eps_rx_k), &u.u3);
    Ok((
        r.mul_vec(&v1).norm(),
        r.mul_vec(&v2).norm(),
        r.mul_vec(&v3).norm(),
    ))
}

/// Trigonometric closed form of the quadratic form Ẽ† (a a†) Ẽ:
/// `4^{K−1} · Π_ι sin²((eps − hat_ι)/2)`.
pub fn sin_sq_product<T: Scalar>(eps: T, hats: &[T]) -> T {
    let half = sc::<T>(0.5);
    let four = sc::<T>(4.0);
    hats.iter().fold(T::one(), |acc, &h| {
        let s = ((eps - h) * half).sin();
        acc * four * s * s
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::czero;
    use crate::scene::{
        exact_covariance, steering_epsilon, steering_vector, ArrayGeometry, SceneConfig, Source,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    fn vi_scene(noise_free: bool, snr_db: f64) -> SceneConfig<f64> {
        SceneConfig {
            geometry: ArrayGeometry::new(3, 3, 0.5, 90.0).unwrap(),
            sources: vec![Source::new(30.0, 25.0, 1.0), Source::new(70.0, 80.0, 1.0)],
            snr_db,
            noise_free,
            num_samples: 1,
            seed: 0,
        }
    }

    #[test]
    fn base_case_single_phase() {
        let e = noise_subspace_1d(&[0.0]).unwrap();
        assert_eq!(e.as_slice(), &[c(1.0, 0.0), c(-1.0, 0.0)]);
    }

    #[test]
    fn double_root_at_zero_phase() {
        let e = noise_subspace_1d(&[0.0, 0.0]).unwrap();
        assert_eq!(e.len(), 3);
        assert!((e[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((e[1] - c(-2.0, 0.0)).norm() < 1e-15);
        assert!((e[2] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn empty_list_is_rejected() {
        assert!(matches!(
            noise_subspace_1d::<f64>(&[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn defining_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for k in 1..=4usize {
            for _ in 0..25 {
                let eps: Vec<f64> = (0..k)
                    .map(|_| (rng.random::<f64>() - 0.5) * 2.0 * std::f64::consts::PI)
                    .collect();
                let e = noise_subspace_1d(&eps).unwrap();
                for &ei in &eps {
                    let a = steering_vector(ei, k + 1);
                    let olap = a.dot_h(&e).norm();
                    assert!(olap <= 1e-12 * e.norm() * a.norm(), "overlap {olap}");
                }
            }
        }
    }

    #[test]
    fn uvectors_k1_are_standard_basis() {
        let u = build_uvectors::<f64>(&SteeringSet::empty(), 1).unwrap();
        assert_eq!(u.dim(), 4);
        for (v, hot) in [(&u.u0, 0), (&u.u1, 1), (&u.u2, 2), (&u.u3, 3)] {
            for i in 0..4 {
                let expect = if i == hot { c(1.0, 0.0) } else { czero::<f64>() };
                assert!((v[i] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn uvectors_k2_zero_phase_hand_expansion() {
        let partial = SteeringSet::new(vec![0.0], vec![0.0]).unwrap();
        let u = build_uvectors(&partial, 2).unwrap();
        // Ẽ_1 = [1, −1, 0], L·Ẽ_1 = [0, 1, −1]
        let e = [1.0, -1.0, 0.0];
        let le = [0.0, 1.0, -1.0];
        for i in 0..3 {
            for l in 0..3 {
                let idx = i * 3 + l;
                assert!((u.u0[idx] - c(e[i] * e[l], 0.0)).norm() < 1e-15);
                assert!((u.u1[idx] - c(e[i] * le[l], 0.0)).norm() < 1e-15);
                assert!((u.u2[idx] - c(le[i] * e[l], 0.0)).norm() < 1e-15);
                assert!((u.u3[idx] - c(le[i] * le[l], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn uvectors_wrong_count_is_rejected() {
        let partial = SteeringSet::new(vec![0.0], vec![0.0]).unwrap();
        assert!(matches!(
            build_uvectors(&partial, 3),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn noise_vector_identity_matches_kron_of_recursions() {
        // u-vector reassembly equals the direct Kronecker of the two 1D
        // recursions, for any candidate K-th source.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 1..=4usize {
            for _ in 0..20 {
                let tx: Vec<f64> = (0..k).map(|_| (rng.random::<f64>() - 0.5) * 6.0).collect();
                let rx: Vec<f64> = (0..k).map(|_| (rng.random::<f64>() - 0.5) * 6.0).collect();
                let partial =
                    SteeringSet::new(tx[..k - 1].to_vec(), rx[..k - 1].to_vec()).unwrap();
                let u = build_uvectors(&partial, k).unwrap();
                let direct = noise_subspace_1d(&tx)
                    .unwrap()
                    .kron(&noise_subspace_1d(&rx).unwrap());
                let rebuilt = u.noise_vector(tx[k - 1], rx[k - 1]);
                for i in 0..direct.len() {
                    assert!((direct[i] - rebuilt[i]).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn covariance_annihilates_noise_vector() {
        let cfg = vi_scene(true, 0.0);
        let r = exact_covariance(&cfg);
        let g = &cfg.geometry;
        let (tx1, rx1) = steering_epsilon(&cfg.sources[0], g);
        let (tx2, rx2) = steering_epsilon(&cfg.sources[1], g);
        let e_k = noise_subspace_1d(&[tx1, tx2])
            .unwrap()
            .kron(&noise_subspace_1d(&[rx1, rx2]).unwrap());
        let img = r.mul_vec(&e_k).norm();
        assert!(img <= 1e-12 * r.frobenius_norm() * e_k.norm());
    }

    #[test]
    fn subspace_residuals_exact_scene() {
        let cfg = vi_scene(true, 0.0);
        let r = exact_covariance(&cfg);
        let g = &cfg.geometry;
        let (tx1, rx1) = steering_epsilon(&cfg.sources[0], g);
        let (tx2, rx2) = steering_epsilon(&cfg.sources[1], g);
        let partial = SteeringSet::new(vec![tx1], vec![rx1]).unwrap();
        let u = build_uvectors(&partial, 2).unwrap();

        let (r1, r2, r3) = subspace_residuals(&u, &r, tx2, rx2).unwrap();
        let scale = r.frobenius_norm();
        assert!(r1 <= 1e-10 * scale, "r1 = {r1}");
        assert!(r2 <= 1e-10 * scale, "r2 = {r2}");
        assert!(r3 <= 1e-10 * scale, "r3 = {r3}");

        // Perturbing the candidate breaks orthogonality.
        let (p1, _, _) = subspace_residuals(&u, &r, tx2 + 0.1, rx2).unwrap();
        assert!(p1 > 1e-4 * scale);

        // Adding noise power grows the residuals linearly in sigma².
        let mut resids = Vec::new();
        for snr in [20.0, 10.0] {
            let noisy = vi_scene(false, snr);
            let rn = exact_covariance(&noisy);
            let (n1, _, _) = subspace_residuals(&u, &rn, tx2, rx2).unwrap();
            resids.push((noisy.noise_variance(), n1));
        }
        let (s_a, r_a) = resids[0];
        let (s_b, r_b) = resids[1];
        let ratio = (r_b / r_a) / (s_b / s_a);
        assert!((ratio - 1.0).abs() < 0.05, "residual growth ratio {ratio}");
    }

    #[test]
    fn quadratic_forms_match_trig_closed_forms() {
        // a = Ẽ†(a a†)Ẽ matches the sin² product; b and c acquire ±phase;
        // d equals a.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in 2..=4usize {
            for _ in 0..10 {
                let hats: Vec<f64> =
                    (0..k - 1).map(|_| (rng.random::<f64>() - 0.5) * 6.0).collect();
                let eps: f64 = (rng.random::<f64>() - 0.5) * 6.0;
                let e_pad = padded_subspace(&hats);
                let le = e_pad.cyclic_down_shift();
                let a_vec = steering_vector(eps, k + 1);

                let mut r1 = CMatrix::zeros(k + 1, k + 1);
                r1.add_outer(&a_vec, 1.0);

                let a_form = r1.quad_form(&e_pad, &e_pad).unwrap();
                let b_form = r1.quad_form(&le, &e_pad).unwrap();
                let c_form = r1.quad_form(&e_pad, &le).unwrap();
                let d_form = r1.quad_form(&le, &le).unwrap();

                let a_closed = sin_sq_product(eps, &hats);
                assert!((a_form - c(a_closed, 0.0)).norm() <= 1e-10 * (1.0 + a_closed));
                let b_closed = cis(eps) * a_closed;
                let c_closed = cis(-eps) * a_closed;
                assert!((b_form - b_closed).norm() <= 1e-10 * (1.0 + a_closed));
                assert!((c_form - c_closed).norm() <= 1e-10 * (1.0 + a_closed));
                assert!((d_form - a_form).norm() <= 1e-10 * (1.0 + a_closed));
            }
        }
    }

    #[test]
    fn full_covariance_forms_decompose_per_source() {
        // Quadratic forms of the full R decompose into per-source products of
        // the 1D closed forms; the u2†Ru3 product carries the conjugate phase
        // on the rx axis, which is what makes the ratio updates exact.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let k = 2 + (rng.random::<u32>() % 2) as usize; // K in {2,3}
            let n_axis = k + 1;
            let g = ArrayGeometry::new(n_axis, n_axis, 0.5, 90.0).unwrap();
            let sources: Vec<Source<f64>> = (0..k)
                .map(|_| {
                    Source::new(
                        5.0 + 80.0 * rng.random::<f64>(),
                        360.0 * rng.random::<f64>(),
                        0.5 + rng.random::<f64>(),
                    )
                })
                .collect();
            let cfg = SceneConfig {
                geometry: g.clone(),
                sources,
                snr_db: 0.0,
                noise_free: true,
                num_samples: 1,
                seed: 0,
            };
            let r = exact_covariance(&cfg);
            let hats_tx: Vec<f64> = (0..k - 1).map(|_| (rng.random::<f64>() - 0.5) * 6.0).collect();
            let hats_rx: Vec<f64> = (0..k - 1).map(|_| (rng.random::<f64>() - 0.5) * 6.0).collect();
            let partial = SteeringSet::new(hats_tx.clone(), hats_rx.clone()).unwrap();
            let u = build_uvectors(&partial, k).unwrap();

            let mut s11 = czero();
            let mut s13 = czero();
            let mut s22 = czero();
            let mut s23 = czero();
            for s in &cfg.sources {
                let (etx, erx) = steering_epsilon(s, &g);
                let a_tx = sin_sq_product(etx, &hats_tx);
                let a_rx = sin_sq_product(erx, &hats_rx);
                let p = s.power;
                s11 = s11 + c(p * a_tx * a_rx, 0.0);
                s13 = s13 + cis(-etx) * (p * a_tx * a_rx);
                s22 = s22 + c(p * a_tx * a_rx, 0.0);
                s23 = s23 + cis(-erx) * (p * a_tx * a_rx);
            }
            let q11 = r.quad_form(&u.u1, &u.u1).unwrap();
            let q13 = r.quad_form(&u.u1, &u.u3).unwrap();
            let q22 = r.quad_form(&u.u2, &u.u2).unwrap();
            let q23 = r.quad_form(&u.u2, &u.u3).unwrap();
            let scale = 1.0 + q11.norm();
            assert!((q11 - s11).norm() <= 1e-9 * scale);
            assert!((q13 - s13).norm() <= 1e-9 * scale);
            assert!((q22 - s22).norm() <= 1e-9 * scale);
            assert!((q23 - s23).norm() <= 1e-9 * scale);
        }
    }
}
