#![allow(dead_code)]

use std::io::Write;
use std::path::PathBuf;

use tridomain::config::{parse_config, SimConfig};
use tridomain::ionic::{eval_gap, eval_ionic, gating_rate, IonicParams};
use tridomain::scenario::Profile;

/// Writes straight to stderr so the line shows even when output is captured.
pub fn report(name: &str, passed: bool, detail: &str) {
    let line = format!("{} {name}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn load_config(name: &str) -> SimConfig {
    parse_config(&config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn gaussian_x(amplitude: f64, x0: f64) -> Profile {
    Profile::Gaussian { amplitude, x0, y0: 0.5, width: 0.15, width_y: -1.0 }
}

pub fn gaussian_xy(amplitude: f64, x0: f64, y0: f64) -> Profile {
    Profile::Gaussian { amplitude, x0, y0, width: 0.15, width_y: 0.25 }
}

/// `(v1, v2, s, w1, w2)`
pub type OdeState = [f64; 5];

/// Uniform-data reduction of the coupled system with a connected
/// extracellular phase: `s = v1 - v2` and
/// `mu1 (v1' + I1) = -mu_g (s' + g s) = -mu2 (v2' + I2)`.
pub fn coupled_rhs(y: &OdeState, mu: [f64; 2], mu_g: f64, p: &IonicParams) -> OdeState {
    let [v1, v2, s, w1, w2] = *y;
    let i1 = eval_ionic(v1, w1, p).0;
    let i2 = eval_ionic(v2, w2, p).0;
    let c = (i2 - i1 + eval_gap(s, p)) / (1.0 + mu_g / mu[0] + mu_g / mu[1]);
    let dv1 = -mu_g * c / mu[0] - i1;
    let dv2 = mu_g * c / mu[1] - i2;
    [dv1, dv2, dv1 - dv2, gating_rate(v1, w1, p), gating_rate(v2, w2, p)]
}

/// Uniform-data reduction when every extracellular piece touches a single
/// membrane: the three traces evolve independently.
pub fn decoupled_rhs(y: &OdeState, p: &IonicParams) -> OdeState {
    let [v1, v2, s, w1, w2] = *y;
    [
        -eval_ionic(v1, w1, p).0,
        -eval_ionic(v2, w2, p).0,
        -eval_gap(s, p),
        gating_rate(v1, w1, p),
        gating_rate(v2, w2, p),
    ]
}

/// Classical RK4 with `n` steps of size `dt`, returning every `stride`-th state
/// (including the initial one).
pub fn rk4(y0: OdeState, dt: f64, n: usize, stride: usize, f: impl Fn(&OdeState) -> OdeState) -> Vec<OdeState> {
    let axpy = |y: &OdeState, k: &OdeState, h: f64| -> OdeState { std::array::from_fn(|i| y[i] + h * k[i]) };
    let mut y = y0;
    let mut out = vec![y];
    for step in 1..=n {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, 0.5 * dt));
        let k3 = f(&axpy(&y, &k2, 0.5 * dt));
        let k4 = f(&axpy(&y, &k3, dt));
        y = std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        if step % stride == 0 {
            out.push(y);
        }
    }
    out
}

/// Largest deviation of the traces relative to the largest reference trace.
pub fn relative_trace_error(num: &[[f64; 3]], reference: &[OdeState]) -> f64 {
    assert_eq!(num.len(), reference.len());
    let scale = reference.iter().flat_map(|r| r[..3].iter().map(|v| v.abs())).fold(0.0, f64::max);
    let err = num
        .iter()
        .zip(reference)
        .flat_map(|(a, r)| (0..3).map(move |i| (a[i] - r[i]).abs()))
        .fold(0.0, f64::max);
    err / scale
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn first_increase(values: &[f64]) -> Option<usize> {
    tridomain::commands::first_increase(values)
}
