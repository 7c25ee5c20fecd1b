//! Sweep configuration: built-in defaults per figure, overlaid by a TOML file
//! with flat keys, overlaid by command-line flags.

use std::path::{Path, PathBuf};

use pa_harq::channel::SPEED_OF_LIGHT;
use pa_harq::Protocol;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    Fig3,
    Fig4,
    Fig5,
    Headline,
    McVerify,
    Custom,
}

impl Figure {
    pub fn label(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Headline => "headline",
            Figure::McVerify => "mc-verify",
            Figure::Custom => "custom",
        }
    }
}

/// Solution path for a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Numerical optimum with the exact conditional quantile.
    Exact,
    /// Numerical optimum with the fitted Marcum approximation.
    Approx,
    /// Closed-form expressions.
    Closed,
    /// Monte Carlo simulation.
    Mc,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Approx => "approx",
            Method::Closed => "closed",
            Method::Mc => "mc",
        }
    }
}

/// Keys accepted in a config file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    figure: Option<Figure>,
    eps: Option<Vec<f64>>,
    rates: Option<Vec<f64>>,
    sigmas: Option<Vec<f64>>,
    protocols: Option<Vec<String>>,
    methods: Option<Vec<Method>>,
    speeds_kmh: Option<Vec<f64>>,
    antenna_separation_wavelengths: Option<Vec<f64>>,
    delay_s: Option<f64>,
    carrier_hz: Option<f64>,
    n_trials: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub figure: Figure,
    pub eps: Vec<f64>,
    pub rates: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub protocols: Vec<Protocol>,
    pub methods: Vec<Method>,
    pub speeds_kmh: Vec<f64>,
    /// Antenna separations in wavelengths.
    pub antenna_separation_wavelengths: Vec<f64>,
    pub delay_s: f64,
    pub carrier_hz: f64,
    pub n_trials: u64,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_trials: Option<u64>,
    pub out: Option<PathBuf>,
    pub method: Option<Method>,
}

/// `n` points spaced evenly in log10 from `10^lo` to `10^hi`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

impl SweepSpec {
    pub fn defaults(figure: Figure) -> Self {
        let base = SweepSpec {
            figure,
            eps: logspace(-5.0, -1.0, 9),
            rates: vec![0.5, 2.0],
            sigmas: vec![0.8],
            protocols: vec![Protocol::Rtd, Protocol::Inr],
            methods: vec![Method::Exact, Method::Approx, Method::Closed],
            speeds_kmh: Vec::new(),
            antenna_separation_wavelengths: vec![1.5],
            delay_s: 5e-3,
            carrier_hz: 2.68e9,
            n_trials: 100_000,
            seed: None,
            out: None,
        };
        match figure {
            Figure::Fig3 | Figure::Custom => base,
            Figure::Fig4 => SweepSpec { methods: vec![Method::Exact, Method::Closed, Method::Mc], n_trials: 1_000_000, ..base },
            Figure::Fig5 => SweepSpec {
                eps: vec![1e-3],
                rates: vec![3.0],
                sigmas: Vec::new(),
                methods: vec![Method::Exact, Method::Closed],
                speeds_kmh: (1..=50).map(|i| 5.0 * i as f64).collect(),
                antenna_separation_wavelengths: vec![1.5, 0.75],
                ..base
            },
            Figure::Headline => SweepSpec {
                eps: vec![1e-5],
                rates: vec![4.0],
                methods: vec![Method::Closed, Method::Exact],
                ..base
            },
            Figure::McVerify => SweepSpec { methods: vec![Method::Mc], n_trials: 1_000_000, ..base },
        }
    }

    /// Defaults for `figure` overlaid by the keys in `text`.
    pub fn from_toml_str(text: &str, figure: Figure) -> Result<Self, ConfigError> {
        let file: FileConfig = toml::from_str(text)?;
        if let Some(f) = file.figure {
            if f != figure && f != Figure::Custom {
                return Err(ConfigError::Invalid(format!(
                    "config is for {} but the {} subcommand was run",
                    f.label(),
                    figure.label()
                )));
            }
        }
        let mut spec = SweepSpec::defaults(figure);
        macro_rules! overlay {
            ($($field:ident),*) => { $( if let Some(v) = file.$field { spec.$field = v; } )* };
        }
        overlay!(eps, rates, sigmas, methods, speeds_kmh, antenna_separation_wavelengths, delay_s, carrier_hz, n_trials);
        if let Some(protocols) = file.protocols {
            spec.protocols = protocols
                .iter()
                .map(|p| p.parse::<Protocol>().map_err(|e| ConfigError::Invalid(e.to_string())))
                .collect::<Result<_, _>>()?;
        }
        spec.seed = file.seed;
        spec.out = file.out;
        Ok(spec)
    }

    pub fn load(path: &Path, figure: Figure) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_toml_str(&text, figure)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if let Some(n) = o.n_trials {
            self.n_trials = n;
        }
        if o.out.is_some() {
            self.out.clone_from(&o.out);
        }
        if let Some(m) = o.method {
            self.methods = vec![m];
        }
    }

    pub fn needs_seed(&self) -> bool {
        self.figure == Figure::McVerify || self.methods.contains(&Method::Mc)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let grids: [(&str, &[f64]); 2] = [("eps", &self.eps), ("rates", &self.rates)];
        for (name, grid) in grids {
            if grid.is_empty() {
                return bad(format!("{name} grid is empty"));
            }
        }
        if self.protocols.is_empty() || self.methods.is_empty() {
            return bad("protocols and methods must be non-empty".into());
        }
        if let Some(e) = self.eps.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return bad(format!("eps = {e} not in (0, 1)"));
        }
        if let Some(r) = self.rates.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
            return bad(format!("rate = {r} must be positive"));
        }
        if let Some(s) = self.sigmas.iter().find(|&&s| !(s > 0.0 && s <= 1.0)) {
            return bad(format!("sigma = {s} not in (0, 1]"));
        }
        match self.figure {
            Figure::Fig5 => {
                if self.speeds_kmh.is_empty() || self.antenna_separation_wavelengths.is_empty() {
                    return bad("fig5 needs speeds_kmh and antenna_separation_wavelengths".into());
                }
                let all_positive = self
                    .speeds_kmh
                    .iter()
                    .chain(&self.antenna_separation_wavelengths)
                    .chain([&self.delay_s, &self.carrier_hz])
                    .all(|&v| v > 0.0 && v.is_finite());
                if !all_positive {
                    return bad("speeds, separations, delay and carrier must be positive".into());
                }
            }
            _ if self.sigmas.is_empty() => return bad("sigmas grid is empty".into()),
            _ => {}
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        if self.needs_seed() && self.seed.is_none() {
            return bad("--seed is required when Monte Carlo runs".into());
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }
}
