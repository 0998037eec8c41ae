//! Command implementations.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use mimo_doa::bench::{convergence_trace, run_experiment, ConvergenceTrace, SweepVariable};
use mimo_doa::complexity::{self, ComplexityInputs, SweepParam};
use mimo_doa::idea::{self, IdeaConfig};
use mimo_doa::music::{music_estimate, MusicConfig};
use mimo_doa::scene::{
    exact_covariance, sample_covariance, subarray_smoothed_covariance, synthesize, SceneConfig,
    SnapshotSet,
};
use mimo_doa::{io as snapio, CMat};

use crate::scene_file::{BenchFile, SceneFile};
use crate::svg::{line_chart, Series};
use crate::{BenchArgs, CliError, ComplexityArgs, EstimateArgs, EstimatorArg, SynthArgs};

pub const OUT_DIR_ENV: &str = "MIMO_DOA_OUT_DIR";

const PRESETS: [(&str, &str); 4] = [
    ("rmse-vs-snr", include_str!("../presets/rmse_vs_snr.toml")),
    ("rmse-vs-samples", include_str!("../presets/rmse_vs_samples.toml")),
    ("convergence", include_str!("../presets/convergence.toml")),
    ("subarray", include_str!("../presets/subarray.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

fn preset_text(name: &str) -> Result<&'static str, CliError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            CliError::Validation(format!(
                "unknown preset '{name}' (available: {})",
                preset_names().join(", ")
            ))
        })
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_scene_file(path: &Path) -> Result<SceneFile, CliError> {
    SceneFile::parse(&read_to_string(path)?)
}

fn apply_scene_overrides(scene: &mut SceneConfig<f64>, args: &SynthArgs) -> Result<(), CliError> {
    if let Some(m) = args.samples {
        scene.num_samples = m;
    }
    if let Some(snr) = args.snr {
        scene.snr_db = snr;
    }
    if let Some(seed) = args.seed {
        scene.seed = seed;
    }
    if args.noise_free {
        scene.noise_free = true;
    }
    scene.validate()?;
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let file = load_scene_file(&args.scene)?;
    let mut scene = file.to_scene()?;
    apply_scene_overrides(&mut scene, args)?;
    let snaps = synthesize(&scene)?;
    snapio::write_snapshots_file(&args.out, &snaps)?;
    println!(
        "wrote {}: {}x{} virtual array, {} snapshots, seed {}",
        args.out.display(),
        scene.geometry.n_tx,
        scene.geometry.n_rx,
        scene.num_samples,
        scene.seed
    );
    Ok(())
}

fn doas_csv(doas: &[(f64, f64)]) -> String {
    let mut out = String::from("source,theta_deg,phi_deg\n");
    for (i, &(th, ph)) in doas.iter().enumerate() {
        out.push_str(&format!("{},{th:.6},{ph:.6}\n", i + 1));
    }
    out
}

fn trace_csv(result: &idea::EstimationResult<f64>) -> String {
    let mut s = String::from("# schema trace-v1\nupdate,iteration,q_tx,q_rx\n");
    for rec in &result.trace.records {
        s.push_str(&format!(
            "{},{},{:.6e},{:.6e}\n",
            rec.update, rec.iteration, rec.q_tx, rec.q_rx
        ));
    }
    s
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let (covariance, geometry, num_sources): (CMat, _, usize) =
        match (&args.scene, &args.snapshots) {
            (Some(scene_path), None) => {
                let file = load_scene_file(scene_path)?;
                let mut scene = file.to_scene()?;
                let overrides = SynthArgs {
                    scene: scene_path.clone(),
                    out: PathBuf::new(),
                    samples: args.samples,
                    snr: args.snr,
                    seed: args.seed,
                    noise_free: args.noise_free,
                };
                apply_scene_overrides(&mut scene, &overrides)?;
                let r = if scene.noise_free {
                    exact_covariance(&scene)
                } else {
                    sample_covariance(&synthesize(&scene)?)?
                };
                (r, scene.geometry.clone(), scene.num_sources())
            }
            (None, Some(snap_path)) => {
                if args.noise_free {
                    return Err(CliError::Validation(
                        "--noise-free needs --scene; a snapshot file carries no ground truth"
                            .into(),
                    ));
                }
                let snaps: SnapshotSet<f64> = snapio::read_snapshots_file(snap_path)?;
                let k = args.sources.ok_or_else(|| {
                    CliError::Validation(
                        "--sources <K> is required when estimating from a snapshot file".into(),
                    )
                })?;
                let r = sample_covariance(&snaps)?;
                (r, snaps.geometry, k)
            }
            _ => {
                return Err(CliError::Validation(
                    "provide exactly one of --scene or --snapshots".into(),
                ))
            }
        };

    let doas = match args.estimator {
        EstimatorArg::Idea => {
            let scene_file = args.scene.as_deref().map(load_scene_file).transpose()?;
            let mut cfg: IdeaConfig<f64> = scene_file
                .as_ref()
                .map(|f| f.idea.to_config())
                .unwrap_or_default();
            if let Some(t) = args.iterations {
                cfg.max_iterations = t;
            }
            let side = num_sources + 1;
            let r_idea = if geometry.n_tx > side || geometry.n_rx > side {
                subarray_smoothed_covariance(&covariance, &geometry, num_sources)?
            } else {
                covariance.clone()
            };
            let result = idea::run(&r_idea, &geometry, num_sources, &cfg)?;
            if let Some(trace_path) = &args.trace {
                write_file(trace_path, &trace_csv(&result))?;
            }
            result.sources
        }
        EstimatorArg::Music => {
            if args.trace.is_some() {
                return Err(CliError::Validation(
                    "--trace records the iterative estimator's costs; use --estimator idea".into(),
                ));
            }
            let scene_file = args.scene.as_deref().map(load_scene_file).transpose()?;
            let mut cfg: MusicConfig<f64> = scene_file
                .as_ref()
                .map(|f| f.music.to_config())
                .unwrap_or_default();
            if let Some(step) = args.grid_step {
                cfg = MusicConfig::with_step(step);
            }
            let est = music_estimate(&covariance, &geometry, num_sources, &cfg)?;
            if let Some(spec_path) = &args.spectrum {
                let f = fs::File::create(spec_path)
                    .map_err(|e| CliError::Io(format!("cannot write {}: {e}", spec_path.display())))?;
                est.spectrum.write_csv(BufWriter::new(f))?;
            }
            est.doas
        }
    };

    let csv = doas_csv(&doas);
    print!("{csv}");
    if let Some(out) = &args.out {
        write_file(out, &csv)?;
    }
    Ok(())
}

fn resolve_out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn rmse_series(table: &mimo_doa::bench::RmseTable, angle: usize) -> Vec<Series> {
    let xs: Vec<f64> = (0..table.sweep_values.len())
        .map(|i| {
            table.sweep_values[i]
                .parse::<f64>()
                .unwrap_or((i + 1) as f64)
        })
        .collect();
    let mut series = Vec::new();
    for (ei, est) in table.estimators.iter().enumerate() {
        for src in 0..table.num_sources {
            series.push(Series {
                label: format!("{} s{}", est.name(), src + 1),
                points: xs
                    .iter()
                    .enumerate()
                    .map(|(si, &x)| (x, table.rmse_deg[si][ei][src][angle]))
                    .collect(),
            });
        }
    }
    series
}

fn subarray_summary_csv(table: &mimo_doa::bench::RmseTable) -> String {
    let mut s = String::from(
        "# schema subarray-summary-v1\nestimator,source,angle,rmse_first,rmse_second,reduction_pct\n",
    );
    for (ei, est) in table.estimators.iter().enumerate() {
        for src in 0..table.num_sources {
            for (ai, angle) in ["theta", "phi"].iter().enumerate() {
                let first = table.rmse_deg[0][ei][src][ai];
                let second = table.rmse_deg[1][ei][src][ai];
                s.push_str(&format!(
                    "{},{},{},{:.6},{:.6},{:.2}\n",
                    est.name(),
                    src + 1,
                    angle,
                    first,
                    second,
                    100.0 * (1.0 - second / first)
                ));
            }
        }
    }
    s
}

fn convergence_outputs(
    out_dir: &Path,
    label: &str,
    trace: &ConvergenceTrace,
    format: &str,
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    if format != "svg" {
        let p = out_dir.join(format!("convergence_{label}.csv"));
        write_file(&p, &trace.to_csv())?;
        written.push(p);
    }
    if format != "csv" {
        let series = vec![
            Series {
                label: "Q_tx".into(),
                points: trace
                    .points
                    .iter()
                    .map(|&(u, _, qtx, _)| (u as f64, qtx))
                    .collect(),
            },
            Series {
                label: "Q_rx".into(),
                points: trace
                    .points
                    .iter()
                    .map(|&(u, _, _, qrx)| (u as f64, qrx))
                    .collect(),
            },
        ];
        let svg = line_chart(
            &format!("cost trace ({label})"),
            "update",
            "cost",
            &series,
            true,
        );
        let p = out_dir.join(format!("convergence_{label}.svg"));
        write_file(&p, &svg)?;
        written.push(p);
    }
    Ok(written)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    if args.list_presets {
        for name in preset_names() {
            println!("{name}");
        }
        return Ok(());
    }
    if let Some(name) = &args.dump_preset {
        print!("{}", preset_text(name)?);
        return Ok(());
    }

    let text = match (&args.spec, &args.preset) {
        (Some(path), None) => read_to_string(path)?,
        (None, Some(name)) => preset_text(name)?.to_string(),
        _ => {
            return Err(CliError::Validation(
                "provide exactly one of --spec or --preset".into(),
            ))
        }
    };
    let mut file = BenchFile::parse(&text)?;
    if let Some(trials) = args.trials {
        file.trials = trials;
    }
    if let Some(seed) = args.seed {
        file.master_seed = seed;
    }
    let out_dir = resolve_out_dir(&args.out_dir);
    let format = args.format.as_str();
    let mut written: Vec<PathBuf> = Vec::new();

    match file.kind.as_str() {
        "rmse" => {
            let spec = file.to_experiment()?;
            let table = run_experiment(&spec)?;
            if format != "svg" {
                let p = out_dir.join(format!("rmse_vs_{}.csv", table.sweep_label));
                write_file(&p, &table.to_csv())?;
                written.push(p);
            }
            if format != "csv" {
                for (ai, angle) in ["theta", "phi"].iter().enumerate() {
                    let svg = line_chart(
                        &format!("RMSE ({angle}) vs {}", table.sweep_label),
                        &table.sweep_label,
                        "RMSE (deg)",
                        &rmse_series(&table, ai),
                        true,
                    );
                    let p = out_dir.join(format!("rmse_{angle}.svg"));
                    write_file(&p, &svg)?;
                    written.push(p);
                }
            }
            if matches!(spec.sweep, SweepVariable::Geometry(_)) && spec.sweep.len() == 2 {
                let p = out_dir.join("subarray_summary.csv");
                write_file(&p, &subarray_summary_csv(&table))?;
                written.push(p);
            }
        }
        "convergence" => {
            let values = match file.sweep_variable()? {
                SweepVariable::NumSamples(v) => v,
                _ => {
                    return Err(CliError::Validation(
                        "convergence experiments sweep num_samples".into(),
                    ))
                }
            };
            let spec = {
                // validate the scene once via the rmse path
                let mut clone = BenchFile::parse(&text)?;
                clone.kind = "rmse".into();
                clone.trials = file.trials;
                clone.master_seed = file.master_seed;
                clone.to_experiment()?
            };
            for m in values {
                let mut scene = spec.scene.clone();
                scene.num_samples = m;
                let trace = convergence_trace(&scene, &spec.idea, file.trials)?;
                written.extend(convergence_outputs(
                    &out_dir,
                    &format!("M{m}"),
                    &trace,
                    format,
                )?);
            }
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown experiment kind '{other}' (expected 'rmse' or 'convergence')"
            )))
        }
    }

    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn cmd_complexity(args: &ComplexityArgs) -> Result<(), CliError> {
    let k = args.sources;
    let grid_points = |span: f64| (span / args.grid_step).round().max(1.0) as u64;
    let base = ComplexityInputs {
        num_sources: k,
        num_samples: args.samples,
        num_iterations: args.iterations.unwrap_or(4 * k),
        n_tx: args.n_tx.unwrap_or(k + 1),
        n_rx: args.n_rx.unwrap_or(k + 1),
        n_theta: grid_points(90.0),
        n_phi: grid_points(360.0),
    };

    let (param, rows) = match (&args.sweep, &args.values) {
        (Some(param_name), Some(values_text)) => {
            let param: SweepParam = param_name.parse()?;
            let values: Vec<u64> = values_text
                .split(',')
                .map(|v| {
                    v.trim().parse::<u64>().map_err(|_| {
                        CliError::Validation(format!("sweep value '{v}' is not an integer"))
                    })
                })
                .collect::<Result<_, _>>()?;
            if param == SweepParam::Sources && args.t_factor.is_some() {
                let rows = complexity::gain_vs_sources(
                    &values,
                    args.t_factor.unwrap(),
                    base.num_samples,
                    base.n_theta,
                    base.n_phi,
                )?;
                (param, rows)
            } else {
                (param, complexity::sweep(param, &values, &base)?)
            }
        }
        (None, None) => {
            let rows = complexity::sweep(
                SweepParam::Sources,
                &[base.num_sources],
                &base,
            )?;
            (SweepParam::Sources, rows)
        }
        _ => {
            return Err(CliError::Validation(
                "--sweep and --values go together".into(),
            ))
        }
    };

    println!(
        "{:>14} {:>8} {:>16} {:>16} {:>9}",
        "param", "value", "idea_cost", "music_cost", "gain_db"
    );
    for (v, rep) in &rows {
        println!(
            "{:>14} {:>8} {:>16} {:>16} {:>9.3}",
            param.name(),
            v,
            rep.idea_cost,
            rep.music_cost,
            rep.gain_db
        );
    }
    if let Some(out) = &args.out {
        write_file(out, &complexity::sweep_to_csv(param, &rows))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
