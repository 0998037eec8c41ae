//! TOML scene and benchmark spec files. Unknown keys are rejected so typos
//! fail loudly instead of silently falling back to defaults.

use mimo_doa::bench::{EstimatorKind, ExperimentSpec, SweepVariable};
use mimo_doa::idea::IdeaConfig;
use mimo_doa::music::MusicConfig;
use mimo_doa::scene::{ArrayGeometry, SceneConfig, Source};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub n_tx: usize,
    pub n_rx: usize,
    pub d_over_lambda: f64,
    pub phi_trx_deg: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceFile {
    pub theta_deg: f64,
    pub phi_deg: f64,
    #[serde(default = "default_power")]
    pub power: f64,
}

fn default_power() -> f64 {
    1.0
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct IdeaFile {
    pub iterations: Option<usize>,
    pub convergence_epsilon: Option<f64>,
    pub init_doas: Option<Vec<[f64; 2]>>,
}

impl IdeaFile {
    pub fn to_config(&self) -> IdeaConfig<f64> {
        IdeaConfig {
            max_iterations: self.iterations.unwrap_or(10),
            init_doas: self
                .init_doas
                .as_ref()
                .map(|v| v.iter().map(|p| (p[0], p[1])).collect()),
            convergence_epsilon: self.convergence_epsilon.unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MusicFile {
    pub theta_step_deg: Option<f64>,
    pub phi_step_deg: Option<f64>,
}

impl MusicFile {
    pub fn to_config(&self) -> MusicConfig<f64> {
        MusicConfig {
            theta_step_deg: self.theta_step_deg.unwrap_or(0.1),
            phi_step_deg: self.phi_step_deg.unwrap_or(0.1),
        }
    }
}

/// Standalone scene file: scene fields at the top level plus optional
/// estimator tables.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub snr_db: f64,
    pub num_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_free: bool,
    pub geometry: GeometryFile,
    pub sources: Vec<SourceFile>,
    #[serde(default)]
    pub idea: IdeaFile,
    #[serde(default)]
    pub music: MusicFile,
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("scene file: {e}")))
    }

    pub fn to_scene(&self) -> Result<SceneConfig<f64>, CliError> {
        let scene = SceneConfig {
            geometry: ArrayGeometry {
                n_tx: self.geometry.n_tx,
                n_rx: self.geometry.n_rx,
                d_over_lambda: self.geometry.d_over_lambda,
                phi_trx_deg: self.geometry.phi_trx_deg,
            },
            sources: self
                .sources
                .iter()
                .map(|s| Source::new(s.theta_deg, s.phi_deg, s.power))
                .collect(),
            snr_db: self.snr_db,
            noise_free: self.noise_free,
            num_samples: self.num_samples,
            seed: self.seed,
        };
        scene.validate()?;
        Ok(scene)
    }
}

/// Scene body inside a benchmark spec (the master seed lives at the top
/// level of the spec).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSceneFile {
    pub snr_db: f64,
    pub num_samples: usize,
    #[serde(default)]
    pub noise_free: bool,
    pub geometry: GeometryFile,
    pub sources: Vec<SourceFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub variable: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchFile {
    /// "rmse" or "convergence".
    pub kind: String,
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub estimators: Vec<String>,
    pub scene: BenchSceneFile,
    pub sweep: SweepFile,
    #[serde(default)]
    pub idea: IdeaFile,
    #[serde(default)]
    pub music: MusicFile,
}

fn value_as_f64(v: &toml::Value) -> Result<f64, CliError> {
    v.as_float()
        .or_else(|| v.as_integer().map(|i| i as f64))
        .ok_or_else(|| CliError::Validation(format!("sweep value '{v}' is not a number")))
}

fn value_as_usize(v: &toml::Value) -> Result<usize, CliError> {
    v.as_integer()
        .filter(|&i| i > 0)
        .map(|i| i as usize)
        .ok_or_else(|| CliError::Validation(format!("sweep value '{v}' is not a positive integer")))
}

impl BenchFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("bench spec: {e}")))
    }

    pub fn sweep_variable(&self) -> Result<SweepVariable, CliError> {
        match self.sweep.variable.as_str() {
            "snr_db" => Ok(SweepVariable::SnrDb(
                self.sweep
                    .values
                    .iter()
                    .map(value_as_f64)
                    .collect::<Result<_, _>>()?,
            )),
            "num_samples" => Ok(SweepVariable::NumSamples(
                self.sweep
                    .values
                    .iter()
                    .map(value_as_usize)
                    .collect::<Result<_, _>>()?,
            )),
            "geometry" => {
                let mut pairs = Vec::new();
                for v in &self.sweep.values {
                    let arr = v.as_array().ok_or_else(|| {
                        CliError::Validation(format!(
                            "geometry sweep value '{v}' must be a [n_tx, n_rx] pair"
                        ))
                    })?;
                    if arr.len() != 2 {
                        return Err(CliError::Validation(format!(
                            "geometry sweep value '{v}' must have exactly two entries"
                        )));
                    }
                    pairs.push((value_as_usize(&arr[0])?, value_as_usize(&arr[1])?));
                }
                Ok(SweepVariable::Geometry(pairs))
            }
            other => Err(CliError::Validation(format!(
                "unknown sweep variable '{other}' (expected snr_db, num_samples or geometry)"
            ))),
        }
    }

    pub fn to_experiment(&self) -> Result<ExperimentSpec, CliError> {
        let estimators: Vec<EstimatorKind> = if self.estimators.is_empty() {
            vec![EstimatorKind::Idea]
        } else {
            self.estimators
                .iter()
                .map(|s| s.parse::<EstimatorKind>().map_err(CliError::from))
                .collect::<Result<_, _>>()?
        };
        let scene = SceneConfig {
            geometry: ArrayGeometry {
                n_tx: self.scene.geometry.n_tx,
                n_rx: self.scene.geometry.n_rx,
                d_over_lambda: self.scene.geometry.d_over_lambda,
                phi_trx_deg: self.scene.geometry.phi_trx_deg,
            },
            sources: self
                .scene
                .sources
                .iter()
                .map(|s| Source::new(s.theta_deg, s.phi_deg, s.power))
                .collect(),
            snr_db: self.scene.snr_db,
            noise_free: self.scene.noise_free,
            num_samples: self.scene.num_samples,
            seed: self.master_seed,
        };
        let spec = ExperimentSpec {
            scene,
            sweep: self.sweep_variable()?,
            trials: self.trials,
            estimators,
            idea: self.idea.to_config(),
            music: self.music.to_config(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENE: &str = r#"
snr_db = 30.0
num_samples = 50
seed = 7

[geometry]
n_tx = 3
n_rx = 3
d_over_lambda = 0.5
phi_trx_deg = 90.0

[[sources]]
theta_deg = 30.0
phi_deg = 25.0

[[sources]]
theta_deg = 70.0
phi_deg = 80.0

[idea]
iterations = 6
"#;

    #[test]
    fn parses_reference_scene() {
        let f = SceneFile::parse(SCENE).unwrap();
        let scene = f.to_scene().unwrap();
        assert_eq!(scene.num_sources(), 2);
        assert_eq!(scene.seed, 7);
        assert_eq!(f.idea.to_config().max_iterations, 6);
        assert_eq!(f.music.to_config().theta_step_deg, 0.1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{SCENE}\nwavelength = 3.0\n");
        let err = SceneFile::parse(&bad).unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
    }

    #[test]
    fn source_count_constraint_is_reported() {
        let mut f = SceneFile::parse(SCENE).unwrap();
        f.sources.push(SourceFile {
            theta_deg: 50.0,
            phi_deg: 10.0,
            power: 1.0,
        });
        let err = f.to_scene().unwrap_err();
        assert!(err.message().contains("must be less than min(n_tx, n_rx)"));
    }

    #[test]
    fn bench_geometry_sweep_parses() {
        let text = r#"
kind = "rmse"
trials = 10
master_seed = 3
estimators = ["idea"]

[scene]
snr_db = 5.0
num_samples = 50
[scene.geometry]
n_tx = 3
n_rx = 3
d_over_lambda = 0.5
phi_trx_deg = 90.0
[[scene.sources]]
theta_deg = 30.0
phi_deg = 25.0
[[scene.sources]]
theta_deg = 70.0
phi_deg = 80.0

[sweep]
variable = "geometry"
values = [[3, 3], [5, 4]]

[idea]
iterations = 6
"#;
        let f = BenchFile::parse(text).unwrap();
        let spec = f.to_experiment().unwrap();
        assert_eq!(spec.sweep.len(), 2);
        assert_eq!(spec.scene.seed, 3);
    }

    #[test]
    fn bench_bad_sweep_variable_is_rejected() {
        let text = r#"
kind = "rmse"
trials = 10

[scene]
snr_db = 5.0
num_samples = 50
[scene.geometry]
n_tx = 3
n_rx = 3
d_over_lambda = 0.5
phi_trx_deg = 90.0
[[scene.sources]]
theta_deg = 30.0
phi_deg = 25.0

[sweep]
variable = "carrier"
values = [1]
"#;
        let f = BenchFile::parse(text).unwrap();
        assert!(f.to_experiment().is_err());
    }
}
