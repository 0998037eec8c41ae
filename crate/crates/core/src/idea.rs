//! Iterative 2D DOA estimator.
//!
//! Each update treats one source as unknown: the u-vectors built from the
//! other K−1 current estimates turn the covariance into two ratio equations
//! whose arguments are the unknown source's steering phases. The newest
//! estimate then becomes source 1 and the oldest rotates out, so a full
//! iteration refreshes all K sources. Phases are converted to angles only at
//! the end. The per-update quadratic costs are recorded; on an exact
//! covariance they decrease monotonically to zero.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix};
use crate::scalar::{sc, Scalar};
use crate::scene::{steering_epsilon_deg, ArrayGeometry};
use crate::subspace::{build_uvectors, SteeringSet, UVectors};

/// Relative floor (against ‖R‖_F) below which a ratio denominator is treated
/// as degenerate.
const DEGENERATE_REL_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct IdeaConfig<T = f64> {
    /// Number of full iterations T; each performs K updates.
    pub max_iterations: usize,
    /// K−1 initial DOAs in degrees; `None` selects the built-in spread.
    pub init_doas: Option<Vec<(T, T)>>,
    /// Early-stop threshold relative to trace(R); 0 disables early stopping
    /// and the estimator always runs the full T iterations.
    pub convergence_epsilon: T,
}

impl<T: Scalar> Default for IdeaConfig<T> {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            init_doas: None,
            convergence_epsilon: T::zero(),
        }
    }
}

impl<T: Scalar> IdeaConfig<T> {
    pub fn with_iterations(iterations: usize) -> Self {
        Self {
            max_iterations: iterations,
            ..Self::default()
        }
    }
}

/// Default initialization: K−1 DOAs spread as θ = 10°+5°(k−1), φ = 10°+15°(k−1).
pub fn default_init<T: Scalar>(num_sources: usize) -> Vec<(T, T)> {
    (0..num_sources.saturating_sub(1))
        .map(|i| {
            (
                sc::<T>(10.0 + 5.0 * i as f64),
                sc::<T>(10.0 + 15.0 * i as f64),
            )
        })
        .collect()
}

/// Diagnostics for one update of the rotation.
#[derive(Debug, Clone)]
pub struct CostRecord<T = f64> {
    /// 1-based update index τ.
    pub update: usize,
    /// 1-based full-iteration index this update belongs to.
    pub iteration: usize,
    /// Costs at the slot's previous estimate (None on the very first update,
    /// before the rotation is primed).
    pub q_tx_pre: Option<T>,
    pub q_rx_pre: Option<T>,
    /// Costs at the new estimate.
    pub q_tx: T,
    pub q_rx: T,
    /// Steering pair this update replaced, if any.
    pub prev_estimate: Option<(T, T)>,
    /// Steering pair this update produced.
    pub new_estimate: (T, T),
    /// The K−1 steering pairs the u-vectors were built from.
    pub partial: SteeringSet<T>,
}

#[derive(Debug, Clone, Default)]
pub struct CostTrace<T = f64> {
    pub records: Vec<CostRecord<T>>,
}

impl<T: Scalar> CostTrace<T> {
    /// Cost at the end of each full iteration: (iteration, Q_tx, Q_rx).
    pub fn per_iteration(&self) -> Vec<(usize, T, T)> {
        let mut out: Vec<(usize, T, T)> = Vec::new();
        for r in &self.records {
            match out.last_mut() {
                Some(last) if last.0 == r.iteration => {
                    last.1 = r.q_tx;
                    last.2 = r.q_rx;
                }
                _ => out.push((r.iteration, r.q_tx, r.q_rx)),
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult<T = f64> {
    /// Estimated (elevation, azimuth) pairs in degrees, most recent update
    /// first. Order carries no meaning; associate against ground truth.
    pub sources: Vec<(T, T)>,
    /// Final steering phases matching `sources`.
    pub steering: SteeringSet<T>,
    pub trace: CostTrace<T>,
    pub iterations_run: usize,
}

/// Solve the ratio equations for the unknown source's steering phases:
/// eps_tx = arg(u1†Ru1 / u1†Ru3), eps_rx = arg(u2†Ru2 / u2†Ru3).
///
/// Only the argument is kept: under noise the ratio is not unit-modulus, and
/// projecting onto the unit circle preserves the noise-free fixed point while
/// producing a valid steering element.
pub fn solve_steering<T: Scalar>(u: &UVectors<T>, r: &CMatrix<T>) -> Result<(T, T)> {
    let n1 = r.quad_form(&u.u1, &u.u1)?;
    let d1 = r.quad_form(&u.u1, &u.u3)?;
    let n2 = r.quad_form(&u.u2, &u.u2)?;
    let d2 = r.quad_form(&u.u2, &u.u3)?;
    let threshold = sc::<T>(DEGENERATE_REL_FLOOR) * r.frobenius_norm();
    let dmin = d1.norm().min(d2.norm());
    if dmin <= threshold {
        return Err(Error::DegenerateUpdate {
            update: 0,
            denominator: dmin.to_f64().unwrap_or(0.0),
            threshold: threshold.to_f64().unwrap_or(0.0),
        });
    }
    Ok(((n1 / d1).arg(), (n2 / d2).arg()))
}

/// Quadratic costs of a candidate steering pair:
/// Q_tx = (u1 − e^{jε_tx}u3)† R (u1 − e^{jε_tx}u3), Q_rx analogous with u2.
/// Real parts clamped at zero; the imaginary part of a Hermitian form is
/// rounding noise.
pub fn cost_functions<T: Scalar>(
    u: &UVectors<T>,
    r: &CMatrix<T>,
    eps_tx_k: T,
    eps_rx_k: T,
) -> Result<(T, T)> {
    let v_tx = u.u1.sub_scaled(cis(eps_tx_k), &u.u3);
    let v_rx = u.u2.sub_scaled(cis(eps_rx_k), &u.u3);
    let q_tx = r.quad_form(&v_tx, &v_tx)?.re;
    let q_rx = r.quad_form(&v_rx, &v_rx)?.re;
    let clamp = |q: T| if q < T::zero() { T::zero() } else { q };
    Ok((clamp(q_tx), clamp(q_rx)))
}

/// Convert steering phases back to (elevation, azimuth) in degrees.
///
/// With c = 2π·d/λ: cosφ·sinθ = −eps_tx/c and, after removing the tx/rx axis
/// rotation, sinφ·sinθ = (−eps_rx/c − cosφ_trx·(−eps_tx/c))/sinφ_trx. For a
/// 90° axis angle this is the textbook asin/acos intersection, realized here
/// as a quadrant-correct atan2.
pub fn recover_doa<T: Scalar>(
    eps_tx: T,
    eps_rx: T,
    geometry: &ArrayGeometry<T>,
) -> Result<(T, T)> {
    let c = (T::PI() + T::PI()) * geometry.d_over_lambda;
    let phi_trx = geometry.phi_trx_deg.to_radians();
    let alpha = -eps_tx / c;
    let beta = -eps_rx / c;
    let gamma = (beta - alpha * phi_trx.cos()) / phi_trx.sin();
    let sin_theta = alpha.hypot(gamma);

    if sin_theta < sc(1e-9) {
        return Err(Error::AzimuthUndefined {
            sin_theta: sin_theta.to_f64().unwrap_or(0.0),
        });
    }
    if sin_theta > T::one() + sc(1e-6) {
        return Err(Error::InconsistentSteering {
            sin_theta: sin_theta.to_f64().unwrap_or(f64::NAN),
        });
    }
    let sin_theta = sin_theta.min(T::one());
    let theta = sin_theta.asin().to_degrees();
    let mut phi = gamma.atan2(alpha).to_degrees();
    if phi < T::zero() {
        phi += sc(360.0);
    }
    if phi >= sc(360.0) {
        phi -= sc(360.0);
    }
    Ok((theta, phi))
}

/// Run the full rotating-label estimation on a (K+1)²×(K+1)² covariance.
/// Apply sub-array smoothing upstream when the physical array is larger.
pub fn run<T: Scalar>(
    r: &CMatrix<T>,
    geometry: &ArrayGeometry<T>,
    num_sources: usize,
    cfg: &IdeaConfig<T>,
) -> Result<EstimationResult<T>> {
    let k = num_sources;
    if k == 0 {
        return Err(Error::InvalidConfig("need at least one source".into()));
    }
    let side = (k + 1) * (k + 1);
    if !r.is_square() || r.rows() != side {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}, expected {side}x{side} for {k} sources",
            r.rows(),
            r.cols()
        )));
    }
    if cfg.max_iterations == 0 {
        return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
    }

    // Covariance sanity: Hermitian and not visibly indefinite.
    let fro = r.frobenius_norm();
    let trace = r.trace_re();
    if !fro.is_finite() || !trace.is_finite() {
        return Err(Error::NonFiniteCost {
            update: 0,
            detail: "covariance has non-finite entries".into(),
        });
    }
    if r.hermitian_defect() > sc::<T>(1e-8) * fro.max(T::min_positive_value())
        || r.min_diag_re() < -sc::<T>(1e-10) * trace.abs().max(T::min_positive_value())
    {
        return Err(Error::NonFiniteCost {
            update: 0,
            detail: "covariance is not Hermitian positive-semidefinite within tolerance".into(),
        });
    }

    let init = match &cfg.init_doas {
        Some(v) => v.clone(),
        None => default_init(k),
    };
    if init.len() != k - 1 {
        return Err(Error::InvalidConfig(format!(
            "initialization needs {} DOA pairs, got {}",
            k - 1,
            init.len()
        )));
    }

    // Rotation state, most recent estimate first.
    let mut rotation: VecDeque<(T, T)> = init
        .iter()
        .map(|&(th, ph)| steering_epsilon_deg(th, ph, geometry))
        .collect();

    let mut records = Vec::with_capacity(k * cfg.max_iterations);
    let mut tau = 0usize;
    let mut iterations_run = 0usize;

    for t in 1..=cfg.max_iterations {
        let mut iteration_peak = T::zero();
        for _ in 0..k {
            tau += 1;
            let partial = SteeringSet::from_pairs(
                &rotation.iter().copied().take(k - 1).collect::<Vec<_>>(),
            );
            let u = build_uvectors(&partial, k)?;
            let prev = if rotation.len() == k {
                Some(rotation[k - 1])
            } else {
                None
            };
            let (eps_tx, eps_rx) = solve_steering(&u, r).map_err(|e| match e {
                Error::DegenerateUpdate {
                    denominator,
                    threshold,
                    ..
                } => Error::DegenerateUpdate {
                    update: tau,
                    denominator,
                    threshold,
                },
                other => other,
            })?;

            let pre = match prev {
                Some((ptx, prx)) => {
                    let (a, b) = cost_functions(&u, r, ptx, prx)?;
                    (Some(a), Some(b))
                }
                None => (None, None),
            };
            let (q_tx, q_rx) = cost_functions(&u, r, eps_tx, eps_rx)?;
            if !q_tx.is_finite() || !q_rx.is_finite() {
                return Err(Error::NonFiniteCost {
                    update: tau,
                    detail: format!("Q_tx = {q_tx}, Q_rx = {q_rx}"),
                });
            }

            records.push(CostRecord {
                update: tau,
                iteration: t,
                q_tx_pre: pre.0,
                q_rx_pre: pre.1,
                q_tx,
                q_rx,
                prev_estimate: prev,
                new_estimate: (eps_tx, eps_rx),
                partial,
            });

            rotation.push_front((eps_tx, eps_rx));
            rotation.truncate(k);
            iteration_peak = iteration_peak.max(q_tx.max(q_rx));
        }
        iterations_run = t;
        if cfg.convergence_epsilon > T::zero()
            && iteration_peak < cfg.convergence_epsilon * trace
        {
            break;
        }
    }

    let pairs: Vec<(T, T)> = rotation.iter().copied().collect();
    let steering = SteeringSet::from_pairs(&pairs);
    let mut sources = Vec::with_capacity(k);
    for &(etx, erx) in &pairs {
        sources.push(recover_doa(etx, erx, geometry)?);
    }

    Ok(EstimationResult {
        sources,
        steering,
        trace: CostTrace { records },
        iterations_run,
    })
}

/// Wrap an azimuth difference into (−180°, 180°].
pub fn wrap_azimuth_error<T: Scalar>(diff_deg: T) -> T {
    let full = sc::<T>(360.0);
    let mut e = diff_deg % full;
    if e > sc(180.0) {
        e -= full;
    } else if e <= sc(-180.0) {
        e += full;
    }
    e
}
