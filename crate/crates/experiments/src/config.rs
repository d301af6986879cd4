//! Campaign configuration.
//!
//! Values come from, in increasing priority: built-in defaults, the
//! `SPINOR_PHASE_SEED` environment variable (seed only), a flat `key = value`
//! file, and command-line flags. Keys use the flag names with `-` or `_`.
//!
//! Angles accept plain radians or multiples of π such as `pi/8`, `3pi/8`,
//! `0.5*pi`. Lists are comma separated; φ_g:φ_d pairs for the cumulative
//! evolution are written `pi/8:pi/4,pi/8:pi/8`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use spinor_phase::depolarization::NoiseKind;
use spinor_phase::phase::{DEFAULT_SCAN_POINTS, MIN_SCAN_POINTS};

use crate::ExperimentError;

pub const SEED_ENV: &str = "SPINOR_PHASE_SEED";

/// Expected counts per point when Poisson noise is requested without an
/// explicit exposure.
pub const DEFAULT_NOISY_EXPOSURE: f64 = 1e4;

/// Count rate behind `exposure_preset = paper`, in counts per second.
pub const PAPER_COUNT_RATE: f64 = 150.0;

pub const DEFAULT_DWELL_SECONDS: f64 = 60.0;

pub const DEFAULT_ENSEMBLE_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Campaign {
    Geometric,
    Dynamical,
    Nonadditivity,
    Tomography,
    Scan,
}

impl Campaign {
    pub fn name(&self) -> &'static str {
        match self {
            Campaign::Geometric => "geometric",
            Campaign::Dynamical => "dynamical",
            Campaign::Nonadditivity => "nonadditivity",
            Campaign::Tomography => "tomography",
            Campaign::Scan => "scan",
        }
    }
}

impl fmt::Display for Campaign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Campaign {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "geometric" => Ok(Campaign::Geometric),
            "dynamical" => Ok(Campaign::Dynamical),
            "nonadditivity" => Ok(Campaign::Nonadditivity),
            "tomography" => Ok(Campaign::Tomography),
            "scan" => Ok(Campaign::Scan),
            other => Err(config_err(format!("unknown campaign `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub campaign: Campaign,
    /// Target purities, sorted ascending, each in (0, 1].
    pub purities: Vec<f64>,
    /// Nominal δ values for the geometric and dynamical campaigns.
    pub deltas: Vec<f64>,
    /// (φ_g, φ_d) targets for the nonadditivity campaign.
    pub utot_settings: Vec<(f64, f64)>,
    /// Expected counts at unit intensity; 0 gives exact intensities.
    pub exposure: f64,
    pub n_points: usize,
    pub seed: u64,
    pub noise_kind: NoiseKind,
    pub output_dir: PathBuf,
    /// Monte Carlo samples for the noisy first coil when `exposure > 0`.
    pub ensemble_samples: usize,
    /// Polarization of the beam entering the first coil; multiplies every purity.
    pub incident_polarization: f64,
    /// Second-coil ξ for the single-scan campaign.
    pub xi: f64,
    /// Phase-unit ζ for the single-scan campaign; `None` uses δ − π/2.
    pub zeta: Option<f64>,
    pub plot: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            campaign: Campaign::Geometric,
            purities: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            deltas: vec![FRAC_PI_8, FRAC_PI_4, 3.0 * FRAC_PI_8],
            utot_settings: vec![(FRAC_PI_8, FRAC_PI_8), (FRAC_PI_8, FRAC_PI_4)],
            exposure: 0.0,
            n_points: DEFAULT_SCAN_POINTS,
            seed: 0,
            noise_kind: NoiseKind::Uniform,
            output_dir: PathBuf::from("results"),
            ensemble_samples: DEFAULT_ENSEMBLE_SAMPLES,
            incident_polarization: 1.0,
            xi: FRAC_PI_4,
            zeta: None,
            plot: false,
        }
    }
}

/// Unparsed settings from one source; later sources override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub campaign: Option<String>,
    pub purities: Option<String>,
    pub deltas: Option<String>,
    pub utot: Option<String>,
    pub exposure: Option<String>,
    pub exposure_preset: Option<String>,
    pub dwell: Option<String>,
    pub points: Option<String>,
    pub seed: Option<String>,
    pub noise: Option<String>,
    pub out: Option<String>,
    pub plot: Option<String>,
    pub xi: Option<String>,
    pub zeta: Option<String>,
    pub ensemble_samples: Option<String>,
    pub incident_polarization: Option<String>,
}

impl Settings {
    fn slot(&mut self, key: &str) -> Option<&mut Option<String>> {
        let slot = match key.trim().replace('-', "_").to_ascii_lowercase().as_str() {
            "campaign" => &mut self.campaign,
            "purities" => &mut self.purities,
            "deltas" => &mut self.deltas,
            "utot" | "utot_settings" => &mut self.utot,
            "exposure" => &mut self.exposure,
            "exposure_preset" => &mut self.exposure_preset,
            "dwell" => &mut self.dwell,
            "points" | "n_points" => &mut self.points,
            "seed" => &mut self.seed,
            "noise" | "noise_kind" => &mut self.noise,
            "out" | "output_dir" => &mut self.out,
            "plot" => &mut self.plot,
            "xi" => &mut self.xi,
            "zeta" => &mut self.zeta,
            "ensemble_samples" => &mut self.ensemble_samples,
            "incident_polarization" => &mut self.incident_polarization,
            _ => return None,
        };
        Some(slot)
    }

    pub fn parse_file_contents(text: &str) -> Result<Self, ExperimentError> {
        let ini = Ini::load_from_str(text).map_err(|e| config_err(format!("config file: {e}")))?;
        let mut settings = Settings::default();
        for (section, props) in ini.iter() {
            if let Some(name) = section {
                if !props.is_empty() {
                    return Err(config_err(format!(
                        "config file: sections are not supported (found [{name}])"
                    )));
                }
                continue;
            }
            for (key, value) in props.iter() {
                let slot = settings
                    .slot(key)
                    .ok_or_else(|| config_err(format!("config file: unknown key `{key}`")))?;
                *slot = Some(value.trim().to_string());
            }
        }
        Ok(settings)
    }

    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse_file_contents(&text)
    }

    /// `self` with every value present in `other` replaced.
    pub fn overridden_by(mut self, other: Settings) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            campaign,
            purities,
            deltas,
            utot,
            exposure,
            exposure_preset,
            dwell,
            points,
            seed,
            noise,
            out,
            plot,
            xi,
            zeta,
            ensemble_samples,
            incident_polarization
        );
        self
    }
}

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

fn parse_number(s: &str, what: &str) -> Result<f64, ExperimentError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| config_err(format!("{what}: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(config_err(format!("{what}: `{s}` is not finite")));
    }
    Ok(v)
}

/// Radians, or a multiple of π: `pi`, `-pi/2`, `3pi/8`, `3*pi/8`, `0.25pi`.
pub fn parse_angle(s: &str) -> Result<f64, ExperimentError> {
    let t = s.trim().to_ascii_lowercase().replace('π', "pi");
    let Some(at) = t.find("pi") else {
        return parse_number(&t, "angle");
    };
    let (head, tail) = (t[..at].trim().trim_end_matches('*').trim(), t[at + 2..].trim());
    let coefficient = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => parse_number(h, "angle coefficient")?,
    };
    let divisor = match tail.strip_prefix('/') {
        Some(d) => parse_number(d, "angle divisor")?,
        None if tail.is_empty() => 1.0,
        None => return Err(config_err(format!("angle: cannot parse `{s}`"))),
    };
    if divisor == 0.0 {
        return Err(config_err(format!("angle: zero divisor in `{s}`")));
    }
    Ok(coefficient * PI / divisor)
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, ExperimentError>) -> Result<Vec<T>, ExperimentError> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(item).collect()
}

fn parse_pair(s: &str) -> Result<(f64, f64), ExperimentError> {
    let (g, d) = s
        .split_once(':')
        .ok_or_else(|| config_err(format!("utot: expected `phi_g:phi_d`, got `{s}`")))?;
    Ok((parse_angle(g)?, parse_angle(d)?))
}

fn parse_bool(s: &str) -> Result<bool, ExperimentError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => Err(config_err(format!("plot: `{other}` is not a boolean"))),
    }
}

fn parse_count(s: &str, what: &str) -> Result<usize, ExperimentError> {
    s.trim()
        .parse()
        .map_err(|_| config_err(format!("{what}: `{s}` is not a non-negative integer")))
}

fn parse_seed(s: &str, source: &str) -> Result<u64, ExperimentError> {
    s.trim()
        .parse()
        .map_err(|_| config_err(format!("seed from {source}: `{s}` is not a 64-bit unsigned integer")))
}

impl ExperimentConfig {
    /// Resolve layered settings. `env_seed` is the raw value of
    /// [`SEED_ENV`], consulted only when no seed is set elsewhere.
    pub fn resolve(settings: &Settings, env_seed: Option<&str>) -> Result<Self, ExperimentError> {
        let mut cfg = ExperimentConfig::default();
        let s = settings;
        if let Some(v) = &s.campaign {
            cfg.campaign = v.parse()?;
        }
        if let Some(v) = &s.purities {
            cfg.purities = parse_list(v, |p| parse_number(p, "purity"))?;
        }
        if let Some(v) = &s.deltas {
            cfg.deltas = parse_list(v, parse_angle)?;
        }
        if let Some(v) = &s.utot {
            cfg.utot_settings = parse_list(v, parse_pair)?;
        }
        if let Some(v) = &s.points {
            cfg.n_points = parse_count(v, "points")?;
        }
        cfg.seed = match (&s.seed, env_seed) {
            (Some(v), _) => parse_seed(v, "settings")?,
            (None, Some(v)) => parse_seed(v, SEED_ENV)?,
            (None, None) => 0,
        };
        if let Some(v) = &s.noise {
            cfg.noise_kind = v.parse().map_err(config_err)?;
        }
        if let Some(v) = &s.out {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some(v) = &s.plot {
            cfg.plot = parse_bool(v)?;
        }
        if let Some(v) = &s.xi {
            cfg.xi = parse_angle(v)?;
        }
        if let Some(v) = &s.zeta {
            cfg.zeta = Some(parse_angle(v)?);
        }
        if let Some(v) = &s.ensemble_samples {
            cfg.ensemble_samples = parse_count(v, "ensemble samples")?;
        }
        if let Some(v) = &s.incident_polarization {
            cfg.incident_polarization = parse_number(v, "incident polarization")?;
        }

        let dwell = match &s.dwell {
            Some(v) => parse_number(v, "dwell")?,
            None => DEFAULT_DWELL_SECONDS,
        };
        if dwell <= 0.0 {
            return Err(config_err(format!("dwell must be positive, got {dwell}")));
        }
        cfg.exposure = match (&s.exposure, &s.exposure_preset) {
            (Some(_), Some(_)) => return Err(config_err("exposure and exposure preset are mutually exclusive")),
            (Some(v), None) => parse_number(v, "exposure")?,
            (None, Some(p)) if p.trim().eq_ignore_ascii_case("paper") => PAPER_COUNT_RATE * dwell,
            (None, Some(p)) => return Err(config_err(format!("unknown exposure preset `{p}`"))),
            (None, None) if s.noise.is_some() => DEFAULT_NOISY_EXPOSURE,
            (None, None) => 0.0,
        };

        cfg.purities.sort_by(f64::total_cmp);
        cfg.purities.dedup();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.purities.is_empty() {
            return Err(config_err("at least one purity is required"));
        }
        if let Some(p) = self.purities.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return Err(config_err(format!("purity {p} outside (0, 1]")));
        }
        if self.purities.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("purities must be strictly increasing"));
        }
        if self.deltas.is_empty() {
            return Err(config_err("at least one δ is required"));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(0.0..FRAC_PI_2).contains(*d)) {
            return Err(config_err(format!("δ = {d} outside [0, π/2)")));
        }
        if self.campaign == Campaign::Nonadditivity && self.utot_settings.is_empty() {
            return Err(config_err(
                "the nonadditivity campaign needs at least one φ_g:φ_d setting",
            ));
        }
        for &(g, d) in &self.utot_settings {
            if g < 0.0 || d < 0.0 || !(g + d > 0.0 && g + d < FRAC_PI_2) {
                return Err(config_err(format!(
                    "setting φ_g = {g}, φ_d = {d}: need non-negative phases with 0 < φ_g + φ_d < π/2"
                )));
            }
        }
        if self.n_points < MIN_SCAN_POINTS {
            return Err(config_err(format!(
                "at least {MIN_SCAN_POINTS} η points are required, got {}",
                self.n_points
            )));
        }
        if !(self.exposure.is_finite() && self.exposure >= 0.0) {
            return Err(config_err(format!(
                "exposure must be finite and non-negative, got {}",
                self.exposure
            )));
        }
        if self.ensemble_samples == 0 {
            return Err(config_err("ensemble samples must be positive"));
        }
        if !(self.incident_polarization > 0.0 && self.incident_polarization <= 1.0) {
            return Err(config_err(format!(
                "incident polarization {} outside (0, 1]",
                self.incident_polarization
            )));
        }
        if !self.xi.is_finite() || self.zeta.is_some_and(|z| !z.is_finite()) {
            return Err(config_err("scan angles must be finite"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi/8").unwrap(), PI / 8.0);
        assert_eq!(parse_angle("3pi/8").unwrap(), 3.0 * PI / 8.0);
        assert_eq!(parse_angle(" 3 * pi / 8 ").unwrap(), 3.0 * PI / 8.0);
        assert_eq!(parse_angle("-pi").unwrap(), -PI);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert_eq!(parse_angle("π/2").unwrap(), FRAC_PI_2);
        assert!(parse_angle("pi8").is_err());
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("abc").is_err());
    }

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::resolve(&Settings::default(), None).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.exposure, 0.0);
    }

    #[test]
    fn exposure_resolution() {
        let noisy = Settings {
            noise: Some("gaussian".into()),
            ..Settings::default()
        };
        assert_eq!(
            ExperimentConfig::resolve(&noisy, None).unwrap().exposure,
            DEFAULT_NOISY_EXPOSURE
        );
        let preset = Settings {
            exposure_preset: Some("paper".into()),
            dwell: Some("2".into()),
            ..Settings::default()
        };
        assert_eq!(ExperimentConfig::resolve(&preset, None).unwrap().exposure, 300.0);
        let both = Settings {
            exposure: Some("5".into()),
            exposure_preset: Some("paper".into()),
            ..Settings::default()
        };
        assert!(ExperimentConfig::resolve(&both, None).is_err());
    }

    #[test]
    fn seed_priority() {
        let none = Settings::default();
        assert_eq!(ExperimentConfig::resolve(&none, Some("7")).unwrap().seed, 7);
        let set = Settings {
            seed: Some("3".into()),
            ..Settings::default()
        };
        assert_eq!(ExperimentConfig::resolve(&set, Some("7")).unwrap().seed, 3);
        assert!(ExperimentConfig::resolve(&none, Some("x")).is_err());
    }
}
