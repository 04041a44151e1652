//! Run configuration: flat `key = value` files, overridden by flags.

use std::path::{Path, PathBuf};

use focustwist_core::lattice::TorusOptions;
use focustwist_core::systems::{champagne_bottle, spherical_pendulum, IntegrableSystem, RegularWindow};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("system rejected: {0}")]
    System(#[from] focustwist_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative tolerance of the period quadratures.
    pub quad: f64,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    /// Admissible relative disagreement of the two torus engines.
    pub cross: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub system: String,
    pub gamma: f64,
    /// Window radii in the momentum chart; `None` means the system default.
    pub j_min: Option<f64>,
    pub j_max: Option<f64>,
    pub grid_r_in: f64,
    pub grid_r_out: f64,
    pub grid_radii: usize,
    pub grid_sectors: usize,
    pub monodromy_radius: f64,
    pub monodromy_points: usize,
    pub twistless_h: Vec<f64>,
    pub kolmogorov_ray: f64,
    pub kolmogorov_r_min: f64,
    pub kolmogorov_r_max: f64,
    pub kolmogorov_samples: usize,
    pub crosscheck_tori: usize,
    pub seed: u64,
    pub tol: Tolerances,
    pub out: PathBuf,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TorusOptions::default();
        Self {
            system: "champagne".into(),
            gamma: 0.5,
            j_min: None,
            j_max: None,
            grid_r_in: 1e-4,
            grid_r_out: 1e-2,
            grid_radii: 17,
            grid_sectors: 64,
            monodromy_radius: 0.1,
            monodromy_points: 256,
            twistless_h: vec![-0.05, -0.02, -0.01, -0.005, 0.005, 0.01, 0.02, 0.05],
            kolmogorov_ray: 1.0,
            kolmogorov_r_min: 1e-4,
            kolmogorov_r_max: 1e-2,
            kolmogorov_samples: 7,
            crosscheck_tori: 50,
            seed: 1,
            tol: Tolerances { quad: t.quad.rel_tol, ode_rtol: t.ode.rtol, ode_atol: t.ode.atol, cross: 1e-7 },
            out: PathBuf::from("out"),
            jobs: 1,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: e.to_string() })
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: reason.into() }
}

fn positive(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse(key, value)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(invalid(key, value, "must be positive"));
    }
    Ok(x)
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

impl RunConfig {
    /// Sets one key. Tolerance keys are `tol.<name>`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "system" => match v {
                "champagne" | "pendulum" => self.system = v.into(),
                _ => return Err(invalid(key, v, "expected `champagne` or `pendulum`")),
            },
            "gamma" => self.gamma = parse(key, v)?,
            "j_min" => self.j_min = Some(positive(key, v)?),
            "j_max" => self.j_max = Some(positive(key, v)?),
            "grid_r_in" => self.grid_r_in = positive(key, v)?,
            "grid_r_out" => self.grid_r_out = positive(key, v)?,
            "grid_radii" => self.grid_radii = parse(key, v)?,
            "grid_sectors" => self.grid_sectors = parse(key, v)?,
            "monodromy_radius" => self.monodromy_radius = positive(key, v)?,
            "monodromy_points" => self.monodromy_points = parse(key, v)?,
            "twistless_h" => self.twistless_h = list(key, v)?,
            "kolmogorov_ray" => self.kolmogorov_ray = parse(key, v)?,
            "kolmogorov_r_min" => self.kolmogorov_r_min = positive(key, v)?,
            "kolmogorov_r_max" => self.kolmogorov_r_max = positive(key, v)?,
            "kolmogorov_samples" => self.kolmogorov_samples = parse(key, v)?,
            "crosscheck_tori" => self.crosscheck_tori = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "tol.quad" => self.tol.quad = positive(key, v)?,
            "tol.ode_rtol" => self.tol.ode_rtol = positive(key, v)?,
            "tol.ode_atol" => self.tol.ode_atol = positive(key, v)?,
            "tol.cross" => self.tol.cross = positive(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "jobs" => self.jobs = parse(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    /// Applies a config file: UTF-8 lines `key = value`, `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { path: origin.into(), line: n + 1 })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// `--window j_min,j_max`
    pub fn set_window(&mut self, value: &str) -> Result<(), ConfigError> {
        let (a, b) = value.split_once(',').ok_or_else(|| invalid("window", value, "expected `j_min,j_max`"))?;
        self.set("j_min", a)?;
        self.set("j_max", b)
    }

    /// `--res radii,sectors`
    pub fn set_resolution(&mut self, value: &str) -> Result<(), ConfigError> {
        let (a, b) = value.split_once(',').ok_or_else(|| invalid("res", value, "expected `radii,sectors`"))?;
        self.set("grid_radii", a)?;
        self.set("grid_sectors", b)
    }

    /// Checks cross-field constraints and fills the window from the system.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        let sys = self.system_with_default_window()?;
        let w = sys.window();
        let j_min = *self.j_min.get_or_insert(w.j_min);
        let j_max = *self.j_max.get_or_insert(w.j_max);
        if j_min >= j_max {
            return Err(invalid("window", &format!("{j_min},{j_max}"), "j_min must be below j_max"));
        }
        if self.grid_r_in >= self.grid_r_out {
            return Err(invalid("grid_r_in", &self.grid_r_in.to_string(), "must be below grid_r_out"));
        }
        if self.kolmogorov_r_min >= self.kolmogorov_r_max {
            return Err(invalid("kolmogorov_r_min", &self.kolmogorov_r_min.to_string(), "must be below kolmogorov_r_max"));
        }
        if self.grid_radii < 2 || self.grid_sectors < 4 {
            return Err(invalid("res", &format!("{},{}", self.grid_radii, self.grid_sectors), "need at least 2 radii and 4 sectors"));
        }
        if self.monodromy_points < 64 {
            return Err(invalid("monodromy_points", &self.monodromy_points.to_string(), "need at least 64"));
        }
        if self.twistless_h.iter().any(|h| *h == 0.0 || !h.is_finite()) {
            return Err(invalid("twistless_h", "0", "energies must be finite and nonzero"));
        }
        if self.jobs == 0 {
            self.jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        }
        Ok(self)
    }

    fn system_with_default_window(&self) -> Result<Box<dyn IntegrableSystem>, ConfigError> {
        Ok(match self.system.as_str() {
            "pendulum" => Box::new(spherical_pendulum()),
            _ => Box::new(champagne_bottle(self.gamma)?),
        })
    }

    /// The configured system with the configured window.
    pub fn build_system(&self) -> Result<Box<dyn IntegrableSystem>, ConfigError> {
        let base = self.system_with_default_window()?.window();
        let w = RegularWindow { j_min: self.j_min.unwrap_or(base.j_min), j_max: self.j_max.unwrap_or(base.j_max) };
        Ok(match self.system.as_str() {
            "pendulum" => Box::new(spherical_pendulum().with_window(w)),
            _ => Box::new(champagne_bottle(self.gamma)?.with_window(w)),
        })
    }

    pub fn torus_options(&self) -> TorusOptions {
        let mut o = TorusOptions::default();
        o.quad.rel_tol = self.tol.quad;
        o.ode.rtol = self.tol.ode_rtol;
        o.ode.atol = self.tol.ode_atol;
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nsystem = pendulum\n\ngrid_radii = 9 # trailing\ntol.cross = 1e-8\n", "t").unwrap();
        assert_eq!(c.system, "pendulum");
        assert_eq!(c.grid_radii, 9);
        assert_eq!(c.tol.cross, 1e-8);
        c.set_resolution("5,16").unwrap();
        assert_eq!((c.grid_radii, c.grid_sectors), (5, 16));
        let r = c.resolve().unwrap();
        assert_eq!((r.j_min, r.j_max), (Some(1e-5), Some(0.2)));
    }

    #[test]
    fn rejections() {
        let mut c = RunConfig::default();
        assert!(matches!(c.set("colour", "red"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(c.set("tol.quad", "0"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(c.set("tol.cross", "-1e-3"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(c.apply_text("no equals sign", "f"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(c.set("system", "kepler").is_err());
        c.set("gamma", "3").unwrap();
        assert!(matches!(c.clone().resolve(), Err(ConfigError::System(_))));
        let mut c = RunConfig::default();
        c.set_window("0.2,0.1").unwrap();
        assert!(c.resolve().is_err());
    }

    #[test]
    fn window_reaches_the_system() {
        let mut c = RunConfig::default();
        c.set_window("0.1,0.3").unwrap();
        let sys = c.resolve().unwrap().build_system().unwrap();
        assert_eq!(sys.window().j_min, 0.1);
    }
}
