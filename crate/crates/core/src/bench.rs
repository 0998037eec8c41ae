//! Monte-Carlo experiment harness: RMSE sweeps over SNR / sample count /
//! geometry, convergence traces, deterministic seed derivation, and CSV
//! rendering. Trials are independent jobs keyed by derived seeds; the
//! reduction is an ordered fold over trial index, so results are byte-stable
//! under any worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::idea::{self, wrap_azimuth_error, IdeaConfig};
use crate::music::{music_estimate, MusicConfig};
use crate::scene::{
    exact_covariance, sample_covariance, subarray_smoothed_covariance, synthesize, SceneConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Idea,
    Music,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Idea => "idea",
            EstimatorKind::Music => "music",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idea" => Ok(EstimatorKind::Idea),
            "music" => Ok(EstimatorKind::Music),
            other => Err(Error::InvalidConfig(format!(
                "unknown estimator '{other}' (expected 'idea' or 'music')"
            ))),
        }
    }
}

/// The variable an experiment sweeps, with its values.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepVariable {
    SnrDb(Vec<f64>),
    NumSamples(Vec<usize>),
    /// (n_tx, n_rx) pairs; spacing and axis angle come from the template.
    Geometry(Vec<(usize, usize)>),
}

impl SweepVariable {
    pub fn label(&self) -> &'static str {
        match self {
            SweepVariable::SnrDb(_) => "snr_db",
            SweepVariable::NumSamples(_) => "num_samples",
            SweepVariable::Geometry(_) => "geometry",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepVariable::SnrDb(v) => v.len(),
            SweepVariable::NumSamples(v) => v.len(),
            SweepVariable::Geometry(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn display(&self, idx: usize) -> String {
        match self {
            SweepVariable::SnrDb(v) => format!("{}", v[idx]),
            SweepVariable::NumSamples(v) => format!("{}", v[idx]),
            SweepVariable::Geometry(v) => format!("{}x{}", v[idx].0, v[idx].1),
        }
    }

    fn apply(&self, idx: usize, scene: &mut SceneConfig<f64>) {
        match self {
            SweepVariable::SnrDb(v) => scene.snr_db = v[idx],
            SweepVariable::NumSamples(v) => scene.num_samples = v[idx],
            SweepVariable::Geometry(v) => {
                scene.geometry.n_tx = v[idx].0;
                scene.geometry.n_rx = v[idx].1;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Scene template; its `seed` field is the master seed.
    pub scene: SceneConfig<f64>,
    pub sweep: SweepVariable,
    pub trials: usize,
    pub estimators: Vec<EstimatorKind>,
    pub idea: IdeaConfig<f64>,
    pub music: MusicConfig<f64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.sweep.is_empty() {
            return Err(Error::InvalidConfig("sweep must be non-empty".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one estimator must be selected".into(),
            ));
        }
        // every sweep point must yield a valid scene
        for i in 0..self.sweep.len() {
            let mut s = self.scene.clone();
            self.sweep.apply(i, &mut s);
            s.validate()?;
        }
        Ok(())
    }

    /// Stable hash of the full experiment description, for CSV provenance.
    pub fn spec_hash(&self) -> String {
        let mut desc = String::new();
        let s = &self.scene;
        desc.push_str(&format!(
            "geom={}x{} d={:?} trx={:?};snr={:?};nf={};m={};",
            s.geometry.n_tx,
            s.geometry.n_rx,
            s.geometry.d_over_lambda,
            s.geometry.phi_trx_deg,
            s.snr_db,
            s.noise_free,
            s.num_samples
        ));
        for src in &s.sources {
            desc.push_str(&format!(
                "src=({:?},{:?},{:?});",
                src.theta_deg, src.phi_deg, src.power
            ));
        }
        desc.push_str(&format!(
            "sweep={}:{:?};trials={};est=",
            self.sweep.label(),
            self.sweep,
            self.trials
        ));
        for e in &self.estimators {
            desc.push_str(e.name());
            desc.push(',');
        }
        desc.push_str(&format!(
            ";idea={:?},{:?},{:?};music={:?},{:?}",
            self.idea.max_iterations,
            self.idea.init_doas,
            self.idea.convergence_epsilon,
            self.music.theta_step_deg,
            self.music.phi_step_deg
        ));
        format!("{:016x}", fnv1a64(desc.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Per-trial seed: a splitmix64 finalizer over (master, trial index). Sweep
/// points share trial streams, so e.g. SNR points differ only in the noise
/// scaling (common random numbers).
pub fn derive_seed(master: u64, trial_index: u64) -> u64 {
    let mut z = master ^ trial_index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Truth-to-estimate assignment minimizing the total squared angular error
/// (elevation difference plus wrapped azimuth difference). Exhaustive over
/// permutations; ties resolve to the lexicographically smallest permutation.
/// Returns `perm` with `perm[i]` = estimate index assigned to truth `i`.
pub fn associate(estimated: &[(f64, f64)], truth: &[(f64, f64)]) -> Vec<usize> {
    let k = truth.len();
    assert_eq!(estimated.len(), k, "associate needs equal counts");
    assert!(k <= 6, "exhaustive association is limited to K <= 6");
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut perm: Vec<usize> = (0..k).collect();
    loop {
        let mut cost = 0.0;
        for (i, &p) in perm.iter().enumerate() {
            let dt = estimated[p].0 - truth[i].0;
            let dp = wrap_azimuth_error(estimated[p].1 - truth[i].1);
            cost += dt * dt + dp * dp;
        }
        match &best {
            Some((c, _)) if cost >= *c => {}
            _ => best = Some((cost, perm.clone())),
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best.expect("at least one permutation").1
}

/// Lexicographic next permutation; false when wrapped around.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Squared per-angle errors of one estimator run against truth, associated.
/// `out[source] = [theta_error², phi_error²]`.
fn squared_errors(estimated: &[(f64, f64)], truth: &[(f64, f64)]) -> Vec<[f64; 2]> {
    let perm = associate(estimated, truth);
    truth
        .iter()
        .enumerate()
        .map(|(i, &(tt, tp))| {
            let (et, ep) = estimated[perm[i]];
            let dt = et - tt;
            let dp = wrap_azimuth_error(ep - tp);
            [dt * dt, dp * dp]
        })
        .collect()
}

/// RMSE per sweep value, estimator, source and angle, plus failure counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseTable {
    pub sweep_label: String,
    pub sweep_values: Vec<String>,
    pub estimators: Vec<EstimatorKind>,
    pub num_sources: usize,
    /// Indexed `[sweep][estimator][source][angle]`, angle 0 = theta, 1 = phi.
    pub rmse_deg: Vec<Vec<Vec<[f64; 2]>>>,
    /// Indexed `[sweep][estimator]`.
    pub trials_ok: Vec<Vec<usize>>,
    pub trials_failed: Vec<Vec<usize>>,
    pub trials: usize,
    pub master_seed: u64,
    pub spec_hash: String,
}

impl RmseTable {
    pub fn rmse(&self, sweep_idx: usize, estimator: EstimatorKind, source: usize, angle: usize) -> f64 {
        let e = self
            .estimators
            .iter()
            .position(|&k| k == estimator)
            .expect("estimator present in table");
        self.rmse_deg[sweep_idx][e][source][angle]
    }

    pub fn failed_fraction(&self, sweep_idx: usize, estimator: EstimatorKind) -> f64 {
        let e = self
            .estimators
            .iter()
            .position(|&k| k == estimator)
            .expect("estimator present in table");
        self.trials_failed[sweep_idx][e] as f64 / self.trials as f64
    }

    /// CSV with a metadata comment header; one row per
    /// (sweep value, estimator, source, angle).
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str("# schema rmse-v1\n");
        s.push_str(&format!("# spec_hash {}\n", self.spec_hash));
        s.push_str(&format!("# master_seed {}\n", self.master_seed));
        s.push_str(&format!("# trials {}\n", self.trials));
        s.push_str("sweep_var,sweep_value,estimator,source,angle,rmse_deg,trials_ok,trials_failed\n");
        for (si, sv) in self.sweep_values.iter().enumerate() {
            for (ei, est) in self.estimators.iter().enumerate() {
                for src in 0..self.num_sources {
                    for (ai, angle) in ["theta", "phi"].iter().enumerate() {
                        s.push_str(&format!(
                            "{},{},{},{},{},{:.6},{},{}\n",
                            self.sweep_label,
                            sv,
                            est.name(),
                            src + 1,
                            angle,
                            self.rmse_deg[si][ei][src][ai],
                            self.trials_ok[si][ei],
                            self.trials_failed[si][ei]
                        ));
                    }
                }
            }
        }
        s
    }
}

/// Covariance for one estimator in one trial: noise-free scenes inject the
/// analytic covariance; the iterative estimator gets the sub-array smoothed
/// matrix whenever the array exceeds (K+1)×(K+1).
fn trial_covariances(
    scene: &SceneConfig<f64>,
    want_idea: bool,
) -> Result<(crate::linalg::CMatrix<f64>, Option<crate::linalg::CMatrix<f64>>)> {
    let full = if scene.noise_free {
        exact_covariance(scene)
    } else {
        sample_covariance(&synthesize(scene)?)?
    };
    let k = scene.num_sources();
    let idea_r = if want_idea {
        if scene.geometry.n_tx > k + 1 || scene.geometry.n_rx > k + 1 {
            Some(subarray_smoothed_covariance(&full, &scene.geometry, k)?)
        } else {
            Some(full.clone())
        }
    } else {
        None
    };
    Ok((full, idea_r))
}

type TrialOutcome = Vec<std::result::Result<Vec<[f64; 2]>, String>>;

fn run_trial(spec: &ExperimentSpec, sweep_idx: usize, trial_idx: usize) -> TrialOutcome {
    let mut scene = spec.scene.clone();
    spec.sweep.apply(sweep_idx, &mut scene);
    scene.seed = derive_seed(spec.scene.seed, trial_idx as u64);
    let truth: Vec<(f64, f64)> = scene
        .sources
        .iter()
        .map(|s| (s.theta_deg, s.phi_deg))
        .collect();
    let k = scene.num_sources();
    let want_idea = spec.estimators.contains(&EstimatorKind::Idea);

    let cov = match trial_covariances(&scene, want_idea) {
        Ok(c) => c,
        Err(e) => {
            return spec
                .estimators
                .iter()
                .map(|_| Err(e.to_string()))
                .collect()
        }
    };
    let (full_r, idea_r) = cov;

    spec.estimators
        .iter()
        .map(|est| {
            let doas = match est {
                EstimatorKind::Idea => idea::run(
                    idea_r.as_ref().expect("idea covariance prepared"),
                    &scene.geometry,
                    k,
                    &spec.idea,
                )
                .map(|r| r.sources),
                EstimatorKind::Music => {
                    music_estimate(&full_r, &scene.geometry, k, &spec.music).map(|m| m.doas)
                }
            };
            doas.map(|d| squared_errors(&d, &truth)).map_err(|e| e.to_string())
        })
        .collect()
}

/// Run the full experiment. Failed trials are excluded from the RMSE and
/// counted, never silently dropped.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RmseTable> {
    spec.validate()?;
    let n_sweep = spec.sweep.len();
    let n_est = spec.estimators.len();
    let k = spec.scene.num_sources();

    let jobs: Vec<(usize, usize)> = (0..n_sweep)
        .flat_map(|si| (0..spec.trials).map(move |ti| (si, ti)))
        .collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(si, ti)| run_trial(spec, si, ti))
        .collect();

    let mut sum_sq = vec![vec![vec![[0.0f64; 2]; k]; n_est]; n_sweep];
    let mut ok = vec![vec![0usize; n_est]; n_sweep];
    let mut failed = vec![vec![0usize; n_est]; n_sweep];
    for (job, outcome) in jobs.iter().zip(&outcomes) {
        let si = job.0;
        for (ei, res) in outcome.iter().enumerate() {
            match res {
                Ok(errors) => {
                    ok[si][ei] += 1;
                    for (src, e) in errors.iter().enumerate() {
                        sum_sq[si][ei][src][0] += e[0];
                        sum_sq[si][ei][src][1] += e[1];
                    }
                }
                Err(_) => failed[si][ei] += 1,
            }
        }
    }

    let rmse_deg = (0..n_sweep)
        .map(|si| {
            (0..n_est)
                .map(|ei| {
                    (0..k)
                        .map(|src| {
                            let n = ok[si][ei] as f64;
                            if n == 0.0 {
                                [f64::NAN, f64::NAN]
                            } else {
                                [
                                    (sum_sq[si][ei][src][0] / n).sqrt(),
                                    (sum_sq[si][ei][src][1] / n).sqrt(),
                                ]
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    Ok(RmseTable {
        sweep_label: spec.sweep.label().to_string(),
        sweep_values: (0..n_sweep).map(|i| spec.sweep.display(i)).collect(),
        estimators: spec.estimators.clone(),
        num_sources: k,
        rmse_deg,
        trials_ok: ok,
        trials_failed: failed,
        trials: spec.trials,
        master_seed: spec.scene.seed,
        spec_hash: spec.spec_hash(),
    })
}

/// Averaged per-update cost trace over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    /// (update, iteration, mean Q_tx, mean Q_rx), update 1-based.
    pub points: Vec<(usize, usize, f64, f64)>,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub master_seed: u64,
    pub spec_hash: String,
}

impl ConvergenceTrace {
    /// Trace sampled at the end of each full iteration.
    pub fn per_iteration(&self) -> Vec<(usize, f64, f64)> {
        let mut out: Vec<(usize, f64, f64)> = Vec::new();
        for &(_, iter, qtx, qrx) in &self.points {
            match out.last_mut() {
                Some(last) if last.0 == iter => {
                    last.1 = qtx;
                    last.2 = qrx;
                }
                _ => out.push((iter, qtx, qrx)),
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str("# schema convergence-v1\n");
        s.push_str(&format!("# spec_hash {}\n", self.spec_hash));
        s.push_str(&format!("# master_seed {}\n", self.master_seed));
        s.push_str(&format!(
            "# trials_ok {} trials_failed {}\n",
            self.trials_ok, self.trials_failed
        ));
        s.push_str("update,iteration,q_tx,q_rx\n");
        for &(u, it, qtx, qrx) in &self.points {
            s.push_str(&format!("{u},{it},{qtx:.6e},{qrx:.6e}\n"));
        }
        s
    }
}

/// Average the iterative estimator's cost trace over Monte-Carlo trials of a
/// scene. Early stopping is disabled so every trial contributes the full
/// K·T updates.
pub fn convergence_trace(
    scene: &SceneConfig<f64>,
    idea_cfg: &IdeaConfig<f64>,
    trials: usize,
) -> Result<ConvergenceTrace> {
    scene.validate()?;
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    let mut cfg = idea_cfg.clone();
    cfg.convergence_epsilon = 0.0;
    let k = scene.num_sources();

    let spec_for_hash = ExperimentSpec {
        scene: scene.clone(),
        sweep: SweepVariable::NumSamples(vec![scene.num_samples]),
        trials,
        estimators: vec![EstimatorKind::Idea],
        idea: cfg.clone(),
        music: MusicConfig::default(),
    };
    let spec_hash = spec_for_hash.spec_hash();

    let results: Vec<std::result::Result<Vec<(f64, f64)>, String>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut s = scene.clone();
            s.seed = derive_seed(scene.seed, trial as u64);
            let r = if s.noise_free {
                exact_covariance(&s)
            } else {
                sample_covariance(&synthesize(&s).map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?
            };
            let r = if s.geometry.n_tx > k + 1 || s.geometry.n_rx > k + 1 {
                subarray_smoothed_covariance(&r, &s.geometry, k).map_err(|e| e.to_string())?
            } else {
                r
            };
            let result = idea::run(&r, &s.geometry, k, &cfg).map_err(|e| e.to_string())?;
            Ok(result
                .trace
                .records
                .iter()
                .map(|rec| (rec.q_tx, rec.q_rx))
                .collect())
        })
        .collect();

    let n_updates = k * cfg.max_iterations;
    let mut acc = vec![(0.0f64, 0.0f64); n_updates];
    let mut ok = 0usize;
    let mut failed = 0usize;
    for res in &results {
        match res {
            Ok(trace) => {
                ok += 1;
                for (i, &(qtx, qrx)) in trace.iter().enumerate() {
                    acc[i].0 += qtx;
                    acc[i].1 += qrx;
                }
            }
            Err(_) => failed += 1,
        }
    }
    if ok == 0 {
        return Err(Error::InvalidConfig(
            "every trial failed; no trace to average".into(),
        ));
    }
    let points = acc
        .iter()
        .enumerate()
        .map(|(i, &(qtx, qrx))| (i + 1, i / k + 1, qtx / ok as f64, qrx / ok as f64))
        .collect();

    Ok(ConvergenceTrace {
        points,
        trials_ok: ok,
        trials_failed: failed,
        master_seed: scene.seed,
        spec_hash,
    })
}
