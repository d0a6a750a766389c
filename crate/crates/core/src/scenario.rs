//! Analytic initial-data profiles and applied-current sources shared by the
//! micro and macro runs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Smooth scalar function on the unit square.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude exp(-((x-x0)^2 + (y-y0)^2) / (2 width^2))`; a non-positive
    /// `width_y` drops the y-dependence.
    Gaussian {
        amplitude: f64,
        x0: f64,
        y0: f64,
        width: f64,
        #[serde(default = "default_width_y")]
        width_y: f64,
    },
    /// `offset + amplitude cos(pi kx x) cos(pi ky y)`, compatible with
    /// zero-flux boundaries.
    Cosine {
        amplitude: f64,
        kx: f64,
        ky: f64,
        #[serde(default)]
        offset: f64,
    },
}

fn default_width_y() -> f64 {
    -1.0
}

impl Profile {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => value,
            Profile::Gaussian { amplitude, x0, y0, width, width_y } => {
                let mut r = (x - x0).powi(2) / (2.0 * width * width);
                if width_y > 0.0 {
                    r += (y - y0).powi(2) / (2.0 * width_y * width_y);
                }
                amplitude * (-r).exp()
            }
            Profile::Cosine { amplitude, kx, ky, offset } => offset + amplitude * (PI * kx * x).cos() * (PI * ky * y).cos(),
        }
    }

    /// Violations as `(field, message)`.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        match *self {
            Profile::Zero => {}
            Profile::Constant { value } => {
                if !value.is_finite() {
                    out.push(("value", "must be finite".to_string()));
                }
            }
            Profile::Gaussian { amplitude, x0, y0, width, width_y } => {
                for (k, v) in [("amplitude", amplitude), ("x0", x0), ("y0", y0), ("width_y", width_y)] {
                    if !v.is_finite() {
                        out.push((k, "must be finite".to_string()));
                    }
                }
                if !(width > 0.0 && width.is_finite()) {
                    out.push(("width", format!("must be positive, got {width}")));
                }
            }
            Profile::Cosine { amplitude, kx, ky, offset } => {
                for (k, v) in [("amplitude", amplitude), ("kx", kx), ("ky", ky), ("offset", offset)] {
                    if !v.is_finite() {
                        out.push((k, "must be finite".to_string()));
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Profile::Zero)
    }
}

/// Applied current: a profile switched on over `[t_on, t_off)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub profile: Profile,
    #[serde(default)]
    pub t_on: f64,
    #[serde(default = "default_t_off")]
    pub t_off: f64,
}

fn default_t_off() -> f64 {
    f64::INFINITY
}

impl Default for Source {
    fn default() -> Self {
        Self::off()
    }
}

impl Source {
    pub fn off() -> Self {
        Self { profile: Profile::Zero, t_on: 0.0, t_off: f64::INFINITY }
    }

    pub fn always(profile: Profile) -> Self {
        Self { profile, ..Self::off() }
    }

    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        if t >= self.t_on && t < self.t_off {
            self.profile.eval(x, y)
        } else {
            0.0
        }
    }

    pub fn is_off(&self) -> bool {
        self.profile.is_zero()
    }
}

/// Initial transmembrane and gating data. The gap potential starts at
/// `v1 - v2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialData {
    pub v1: Profile,
    pub v2: Profile,
    pub w1: Profile,
    pub w2: Profile,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_evaluate() {
        assert_eq!(Profile::Zero.eval(0.3, 0.4), 0.0);
        let g = Profile::Gaussian { amplitude: 2.0, x0: 0.5, y0: 0.5, width: 0.1, width_y: -1.0 };
        assert_eq!(g.eval(0.5, 0.0), 2.0);
        let c = Profile::Cosine { amplitude: 1.0, kx: 1.0, ky: 0.0, offset: 0.5 };
        assert!((c.eval(1.0, 0.3) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn source_window() {
        let s = Source { profile: Profile::Constant { value: 1.0 }, t_on: 0.1, t_off: 0.2 };
        assert_eq!(s.eval(0.05, 0.0, 0.0), 0.0);
        assert_eq!(s.eval(0.1, 0.0, 0.0), 1.0);
        assert_eq!(s.eval(0.2, 0.0, 0.0), 0.0);
    }
}
