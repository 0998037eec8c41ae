//! Analytic complex-multiplication cost models for the iterative estimator
//! and 2D MUSIC, plus parameter sweeps for the gain curves. Costs are exact
//! integers; floating point enters only in the dB conversion.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityInputs {
    /// Number of sources K.
    pub num_sources: u64,
    /// Number of snapshots M.
    pub num_samples: u64,
    /// Number of full iterations T.
    pub num_iterations: u64,
    pub n_tx: u64,
    pub n_rx: u64,
    /// Elevation search points.
    pub n_theta: u64,
    /// Azimuth search points.
    pub n_phi: u64,
}

impl ComplexityInputs {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [
            self.num_sources,
            self.num_samples,
            self.num_iterations,
            self.n_tx,
            self.n_rx,
            self.n_theta,
            self.n_phi,
        ]
        .iter()
        .all(|&v| v > 0);
        if !all_positive {
            return Err(Error::InvalidConfig(
                "all complexity inputs must be positive".into(),
            ));
        }
        if self.n_tx <= self.num_sources || self.n_rx <= self.num_sources {
            return Err(Error::InvalidConfig(format!(
                "complexity model needs n_tx > K and n_rx > K (at least one sub-array); got K={}, array {}x{}",
                self.num_sources, self.n_tx, self.n_rx
            )));
        }
        Ok(())
    }

    /// Number of (K+1)×(K+1) sub-arrays.
    pub fn num_subarrays(&self) -> u64 {
        (self.n_tx - self.num_sources) * (self.n_rx - self.num_sources)
    }

    /// Virtual array size N.
    pub fn n_virtual(&self) -> u64 {
        self.n_tx * self.n_rx
    }
}

/// Complex multiplications for the iterative estimator:
/// `{(K+1)²(M+1) + M²}·N_sa + 2KT{(K+1)(K+3)+1} + 4`.
pub fn idea_cost(inputs: &ComplexityInputs) -> u128 {
    let k = inputs.num_sources as u128;
    let m = inputs.num_samples as u128;
    let t = inputs.num_iterations as u128;
    let n_sa = inputs.num_subarrays() as u128;
    let k1 = k + 1;
    (k1 * k1 * (m + 1) + m * m) * n_sa + 2 * k * t * (k1 * (k + 3) + 1) + 4
}

/// Complex multiplications for 2D MUSIC:
/// `N²(M+1) + M² + 12N³ + K·NθNφ·{N(N−K)+1}`.
pub fn music_cost(inputs: &ComplexityInputs) -> u128 {
    let k = inputs.num_sources as u128;
    let m = inputs.num_samples as u128;
    let n = inputs.n_virtual() as u128;
    let grid = inputs.n_theta as u128 * inputs.n_phi as u128;
    n * n * (m + 1) + m * m + 12 * n * n * n + k * grid * (n * (n - k) + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub inputs: ComplexityInputs,
    pub idea_cost: u128,
    pub music_cost: u128,
    /// `10·log10(music_cost / idea_cost)`.
    pub gain_db: f64,
}

pub fn report(inputs: &ComplexityInputs) -> Result<ComplexityReport> {
    inputs.validate()?;
    let idea = idea_cost(inputs);
    let music = music_cost(inputs);
    Ok(ComplexityReport {
        inputs: *inputs,
        idea_cost: idea,
        music_cost: music,
        gain_db: 10.0 * ((music as f64) / (idea as f64)).log10(),
    })
}

/// Swept parameter for the cost comparison tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Sources,
    Samples,
    Iterations,
    NTx,
    NRx,
    NTheta,
    NPhi,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Sources => "num_sources",
            SweepParam::Samples => "num_samples",
            SweepParam::Iterations => "num_iterations",
            SweepParam::NTx => "n_tx",
            SweepParam::NRx => "n_rx",
            SweepParam::NTheta => "n_theta",
            SweepParam::NPhi => "n_phi",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "num_sources" | "sources" | "k" => Ok(SweepParam::Sources),
            "num_samples" | "samples" | "m" => Ok(SweepParam::Samples),
            "num_iterations" | "iterations" | "t" => Ok(SweepParam::Iterations),
            "n_tx" => Ok(SweepParam::NTx),
            "n_rx" => Ok(SweepParam::NRx),
            "n_theta" => Ok(SweepParam::NTheta),
            "n_phi" => Ok(SweepParam::NPhi),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep parameter '{other}' (expected one of: sources, samples, iterations, n_tx, n_rx, n_theta, n_phi)"
            ))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Evaluate both cost models across a single-parameter sweep.
pub fn sweep(
    param: SweepParam,
    values: &[u64],
    base: &ComplexityInputs,
) -> Result<Vec<(u64, ComplexityReport)>> {
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        let mut inputs = *base;
        match param {
            SweepParam::Sources => inputs.num_sources = v,
            SweepParam::Samples => inputs.num_samples = v,
            SweepParam::Iterations => inputs.num_iterations = v,
            SweepParam::NTx => inputs.n_tx = v,
            SweepParam::NRx => inputs.n_rx = v,
            SweepParam::NTheta => inputs.n_theta = v,
            SweepParam::NPhi => inputs.n_phi = v,
        }
        out.push((v, report(&inputs)?));
    }
    Ok(out)
}

/// Gain curve over K with the array tied to K+1 per axis and T = t_factor·K
/// (the gain comparison is usually drawn for factors 1, 2 and 4).
pub fn gain_vs_sources(
    k_values: &[u64],
    t_factor: u64,
    num_samples: u64,
    n_theta: u64,
    n_phi: u64,
) -> Result<Vec<(u64, ComplexityReport)>> {
    let mut out = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let inputs = ComplexityInputs {
            num_sources: k,
            num_samples,
            num_iterations: t_factor * k,
            n_tx: k + 1,
            n_rx: k + 1,
            n_theta,
            n_phi,
        };
        out.push((k, report(&inputs)?));
    }
    Ok(out)
}

/// CSV rows `param,value,idea_cost,music_cost,gain_db` under a versioned
/// header.
pub fn sweep_to_csv(param: SweepParam, rows: &[(u64, ComplexityReport)]) -> String {
    let mut s = String::from("# schema complexity-v1\nparam,value,idea_cost,music_cost,gain_db\n");
    for (v, rep) in rows {
        s.push_str(&format!(
            "{},{},{},{},{:.3}\n",
            param.name(),
            v,
            rep.idea_cost,
            rep.music_cost,
            rep.gain_db
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_point() -> ComplexityInputs {
        ComplexityInputs {
            num_sources: 3,
            num_samples: 50,
            num_iterations: 12,
            n_tx: 4,
            n_rx: 4,
            n_theta: 90,
            n_phi: 360,
        }
    }

    #[test]
    fn idea_cost_reference_values() {
        assert_eq!(idea_cost(&paper_point()), 5120);
        let tiny = ComplexityInputs {
            num_sources: 1,
            num_samples: 1,
            num_iterations: 1,
            n_tx: 2,
            n_rx: 2,
            n_theta: 90,
            n_phi: 360,
        };
        assert_eq!(idea_cost(&tiny), 31);
    }

    #[test]
    fn music_cost_reference_value() {
        assert_eq!(music_cost(&paper_point()), 20_379_508);
    }

    #[test]
    fn gain_reference_value() {
        let rep = report(&paper_point()).unwrap();
        assert!((rep.gain_db - 36.0).abs() <= 0.1, "gain {}", rep.gain_db);
        // exact expected value of the integer ratio
        let expect = 10.0 * (20_379_508f64 / 5120f64).log10();
        assert!((rep.gain_db - expect).abs() < 1e-12);
    }

    #[test]
    fn idea_cost_strictly_increasing_in_iterations() {
        let mut prev = 0u128;
        for t in 1..=20 {
            let mut inputs = paper_point();
            inputs.num_iterations = t;
            let c = idea_cost(&inputs);
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn music_cubic_term_dominates_at_large_n() {
        let base = ComplexityInputs {
            num_sources: 2,
            num_samples: 4,
            num_iterations: 1,
            n_tx: 32,
            n_rx: 32,
            n_theta: 2,
            n_phi: 2,
        };
        let mut doubled = base;
        doubled.n_tx = 64; // doubles N
        let ratio = music_cost(&doubled) as f64 / music_cost(&base) as f64;
        assert!((7.5..8.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn sweep_over_sources_contains_gain_point() {
        let rows = gain_vs_sources(&[2, 3, 4, 5, 6], 4, 50, 90, 360).unwrap();
        assert_eq!(rows.len(), 5);
        let gains: Vec<f64> = rows.iter().map(|(_, r)| r.gain_db).collect();
        for w in gains.windows(2) {
            assert!(w[1] > w[0], "gain curve not monotone: {gains:?}");
        }
        let g3 = rows[1].1.gain_db;
        assert!((g3 - 36.0).abs() <= 0.1);
    }

    #[test]
    fn sweep_shared_sample_terms() {
        let base = paper_point();
        let rows = sweep(SweepParam::Samples, &[10, 50, 100], &base).unwrap();
        // both models share the (M+1)/M² covariance pattern, so cost
        // differences across M match exactly between the two models up to the
        // N_sa / N² prefactors.
        for (v, rep) in &rows {
            let m = *v as u128;
            let idea_cov = (16 * (m + 1) + m * m) * rep.inputs.num_subarrays() as u128;
            let music_cov = 256 * (m + 1) + m * m;
            assert_eq!(rep.idea_cost - idea_cov, rows[0].1.idea_cost - (16 * 11 + 100));
            assert_eq!(
                rep.music_cost - music_cov,
                rows[0].1.music_cost - (256 * 11 + 100)
            );
        }
    }

    #[test]
    fn empty_sweep_is_empty() {
        let rows = sweep(SweepParam::Samples, &[], &paper_point()).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn invalid_param_name_is_rejected() {
        assert!(matches!(
            "warp_factor".parse::<SweepParam>(),
            Err(Error::InvalidConfig(_))
        ));
        assert_eq!("k".parse::<SweepParam>().unwrap(), SweepParam::Sources);
    }

    #[test]
    fn validation_rejects_array_not_exceeding_sources() {
        let mut inputs = paper_point();
        inputs.n_tx = 3;
        assert!(report(&inputs).is_err());
    }

    #[test]
    fn csv_header_is_pinned() {
        let rows = sweep(SweepParam::Iterations, &[12], &paper_point()).unwrap();
        let csv = sweep_to_csv(SweepParam::Iterations, &rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# schema complexity-v1"));
        assert_eq!(
            lines.next(),
            Some("param,value,idea_cost,music_cost,gain_db")
        );
        assert_eq!(lines.next(), Some("num_iterations,12,5120,20379508,35.999"));
    }
}
