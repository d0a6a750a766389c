//! FitzHugh-Nagumo membrane kinetics, the passive gap-junction current, and a
//! sampling checker for the structural growth and monotonicity bounds the
//! model is expected to satisfy.

use std::fmt;

/// Parameters of the cubic membrane model and the gap junction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IonicParams {
    pub a: f64,
    pub lambda_a: f64,
    pub b_w: f64,
    pub eps0: f64,
    pub kappa: f64,
    pub g_gap: f64,
    pub r: f64,
}

impl Default for IonicParams {
    fn default() -> Self {
        Self { a: 0.1, lambda_a: 1.0, b_w: 1.0, eps0: 0.1, kappa: 1.0, g_gap: 1.0, r: 4.0 }
    }
}

impl IonicParams {
    /// Ionic currents switched off, gating still active.
    pub fn passive(g_gap: f64) -> Self {
        Self { lambda_a: 0.0, b_w: 0.0, g_gap, ..Self::default() }
    }

    /// Violations as `(field, message)` pairs. Zero `lambda_a`, `b_w` and
    /// `g_gap` are accepted so that currents can be switched off.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let finite = [
            ("a", self.a),
            ("lambda_a", self.lambda_a),
            ("b_w", self.b_w),
            ("eps0", self.eps0),
            ("kappa", self.kappa),
            ("g_gap", self.g_gap),
            ("r", self.r),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                out.push((name, format!("must be finite, got {v}")));
            }
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            out.push(("a", format!("must lie in (0, 1), got {}", self.a)));
        }
        if self.lambda_a < 0.0 {
            out.push(("lambda_a", format!("must be non-negative, got {}", self.lambda_a)));
        }
        if self.eps0 <= 0.0 {
            out.push(("eps0", format!("must be positive, got {}", self.eps0)));
        }
        if self.g_gap < 0.0 {
            out.push(("g_gap", format!("must be non-negative, got {}", self.g_gap)));
        }
        if self.r != 4.0 {
            out.push(("r", format!("the cubic model fixes r = 4, got {}", self.r)));
        }
        out
    }
}

/// `I_a(v) = lambda_a v (v - a)(v - 1)`.
pub fn i_a(v: f64, p: &IonicParams) -> f64 {
    p.lambda_a * v * (v - p.a) * (v - 1.0)
}

/// Derivative of [`i_a`].
pub fn i_a_prime(v: f64, p: &IonicParams) -> f64 {
    p.lambda_a * (3.0 * v * v - 2.0 * (1.0 + p.a) * v + p.a)
}

/// Returns `(i_ion, i_a, i_b)`.
pub fn eval_ionic(v: f64, w: f64, p: &IonicParams) -> (f64, f64, f64) {
    let ia = i_a(v, p);
    let ib = p.b_w * w;
    (ia + ib, ia, ib)
}

pub fn eval_gap(s: f64, p: &IonicParams) -> f64 {
    p.g_gap * s
}

/// Gating right-hand side `H(v, w) = eps0 (kappa v - w)`.
pub fn gating_rate(v: f64, w: f64, p: &IonicParams) -> f64 {
    p.eps0 * (p.kappa * v - w)
}

/// Exact solution of `w' = H(v, w)` over `dt` with `v` frozen.
pub fn step_gating(w: f64, v: f64, dt: f64, p: &IonicParams) -> f64 {
    let target = p.kappa * v;
    target + (w - target) * (-p.eps0 * dt).exp()
}

/// Outcome of one sampled inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Fitted or reported constants, by name.
    pub constants: Vec<(&'static str, f64)>,
    /// Sample points where the inequality failed (at most a few).
    pub witnesses: Vec<Vec<f64>>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub v_range: (f64, f64),
    pub n_samples: usize,
    pub checks: Vec<CheckOutcome>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "ionic assumption check on [{}, {}] with {} samples",
            self.v_range.0, self.v_range.1, self.n_samples
        )?;
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            write!(f, "  {status} {}", c.name)?;
            for (k, v) in &c.constants {
                write!(f, " {k}={v:.6e}")?;
            }
            if !c.note.is_empty() {
                write!(f, " ({})", c.note)?;
            }
            writeln!(f)?;
            for w in &c.witnesses {
                let pts: Vec<String> = w.iter().map(|x| format!("{x:.6}")).collect();
                writeln!(f, "      witness [{}]", pts.join(", "))?;
            }
        }
        Ok(())
    }
}

const MAX_WITNESSES: usize = 3;
/// The lower growth bound is only meaningful away from the cubic's roots.
const TAIL: f64 = 2.0;
const MONOTONE_MARGIN: f64 = 0.1;

fn samples(range: (f64, f64), n: usize) -> Vec<f64> {
    (0..n).map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64).collect()
}

/// Growth sandwich `(1/alpha1)|v|^{r-1} <= |I_a(v)| <= alpha1 (1 + |v|^{r-1})`.
/// The lower bound is tested on the tail `|v| >= 2`, beyond the cubic's roots.
fn check_growth(p: &IonicParams, vs: &[f64]) -> CheckOutcome {
    let r = p.r;
    let upper = vs.iter().map(|&v| i_a(v, p).abs() / (1.0 + v.abs().powf(r - 1.0))).fold(0.0, f64::max);
    let tail: Vec<f64> = vs.iter().copied().filter(|v| v.abs() >= TAIL).collect();
    let mut lower_ratio = f64::INFINITY;
    let mut witnesses = Vec::new();
    for &v in &tail {
        let ratio = i_a(v, p).abs() / v.abs().powf(r - 1.0);
        if ratio <= 0.0 && witnesses.len() < MAX_WITNESSES {
            witnesses.push(vec![v, i_a(v, p)]);
        }
        lower_ratio = lower_ratio.min(ratio);
    }
    let passed = !tail.is_empty() && lower_ratio > 0.0 && upper > 0.0;
    let alpha1 = if passed { upper.max(1.0 / lower_ratio) } else { f64::NAN };
    let note = if tail.is_empty() {
        format!("range does not reach |v| >= {TAIL}")
    } else if passed {
        String::new()
    } else {
        "no positive lower growth constant".to_string()
    };
    CheckOutcome { name: "growth", passed, constants: vec![("alpha1", alpha1)], witnesses, note }
}

/// `I_a(v) + beta1 v` strictly increasing on the range.
fn check_one_sided(p: &IonicParams, vs: &[f64]) -> CheckOutcome {
    let beta1 = one_sided_constant(p, vs);
    let mut witnesses = Vec::new();
    for pair in vs.windows(2) {
        let lhs = i_a(pair[1], p) + beta1 * pair[1];
        let rhs = i_a(pair[0], p) + beta1 * pair[0];
        if lhs <= rhs && witnesses.len() < MAX_WITNESSES {
            witnesses.push(vec![pair[0], pair[1]]);
        }
    }
    CheckOutcome {
        name: "one-sided-lipschitz",
        passed: witnesses.is_empty(),
        constants: vec![("beta1", beta1)],
        witnesses,
        note: String::new(),
    }
}

fn one_sided_constant(p: &IonicParams, vs: &[f64]) -> f64 {
    let min_slope = vs.iter().map(|&v| i_a_prime(v, p)).fold(f64::INFINITY, f64::min);
    (-min_slope).max(0.0) + MONOTONE_MARGIN
}

/// Two-point bound for `J(v) = I_a(v) + beta1 v`:
/// `(J(v) - J(v'))(v - v') >= (1/C)(1 + |v| + |v'|)^{r-2} |v - v'|^2`,
/// with `C` fitted over all sample pairs.
fn check_two_point(p: &IonicParams, vs: &[f64]) -> CheckOutcome {
    let beta1 = one_sided_constant(p, vs);
    let mut c = 0.0f64;
    let mut arg = vec![];
    let mut witnesses = Vec::new();
    for (k, &v1) in vs.iter().enumerate() {
        let j1 = i_a(v1, p) + beta1 * v1;
        for &v2 in &vs[k + 1..] {
            let q = (j1 - i_a(v2, p) - beta1 * v2) / (v1 - v2);
            let weight = (1.0 + v1.abs() + v2.abs()).powf(p.r - 2.0);
            if q <= 0.0 {
                if witnesses.len() < MAX_WITNESSES {
                    witnesses.push(vec![v1, v2]);
                }
                continue;
            }
            if weight / q > c {
                c = weight / q;
                arg = vec![v1, v2];
            }
        }
    }
    let passed = witnesses.is_empty();
    let note = if passed { "C attained at the listed pair".to_string() } else { String::new() };
    if passed {
        witnesses.push(arg);
    }
    CheckOutcome { name: "two-point-monotonicity", passed, constants: vec![("beta1", beta1), ("C", c)], witnesses, note }
}

/// `I_b(w) v - alpha4 H(v, w) w >= alpha5 w^2` with `alpha4 = b_w/(eps0 kappa)`,
/// plus the linear growth of `I_b` and `H`.
fn check_coupling(p: &IonicParams, vs: &[f64]) -> CheckOutcome {
    let denom = p.eps0 * p.kappa;
    let alpha4 = if denom != 0.0 { p.b_w / denom } else { 1.0 };
    let mut alpha5 = f64::INFINITY;
    let mut witnesses = Vec::new();
    for &v in vs {
        for &w in vs {
            if w == 0.0 {
                continue;
            }
            let lhs = p.b_w * w * v - alpha4 * gating_rate(v, w, p) * w;
            let q = lhs / (w * w);
            alpha5 = alpha5.min(q);
            if q <= 0.0 && witnesses.len() < MAX_WITNESSES {
                witnesses.push(vec![v, w]);
            }
        }
    }
    let alpha2 = p.b_w.abs();
    let alpha3 = p.eps0 * p.kappa.abs().max(1.0);
    let passed = alpha4 > 0.0 && alpha5 > 0.0;
    if alpha4 <= 0.0 && witnesses.is_empty() {
        witnesses.push(vec![p.b_w, p.eps0, p.kappa]);
    }
    let note = if alpha4 <= 0.0 { "alpha4 must be positive".to_string() } else { String::new() };
    CheckOutcome {
        name: "coupling",
        passed,
        constants: vec![("alpha2", alpha2), ("alpha3", alpha3), ("alpha4", alpha4), ("alpha5", alpha5)],
        witnesses,
        note,
    }
}

/// Samples the structural inequalities of the membrane model on `v_range`.
///
/// # Panics
///
/// If `n_samples < 100` or the range is empty or not finite.
pub fn check_assumptions(p: &IonicParams, v_range: (f64, f64), n_samples: usize) -> AssumptionReport {
    assert!(n_samples >= 100, "at least 100 samples are required");
    assert!(
        v_range.0.is_finite() && v_range.1.is_finite() && v_range.0 < v_range.1,
        "invalid sample range"
    );
    let vs = samples(v_range, n_samples);
    let checks = vec![
        check_growth(p, &vs),
        check_one_sided(p, &vs),
        check_two_point(p, &vs),
        check_coupling(p, &samples(v_range, 101)),
    ];
    AssumptionReport { v_range, n_samples, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots_and_arithmetic() {
        let p = IonicParams::default();
        assert_eq!(eval_ionic(0.0, 0.0, &p), (0.0, 0.0, 0.0));
        assert_eq!(eval_ionic(1.0, 0.0, &p).0, 0.0);
        assert_eq!(i_a(p.a, &p), 0.0);
        let (ion, ia, ib) = eval_ionic(0.5, 0.2, &p);
        // independent Horner evaluation of v^3 - 1.1 v^2 + 0.1 v
        let horner = ((0.5 - 1.1) * 0.5 + 0.1) * 0.5;
        assert!((ia - horner).abs() < 1e-15);
        assert!((ia + 0.1).abs() < 1e-15);
        assert!((ib - 0.2).abs() < 1e-15);
        assert!((ion - 0.1).abs() < 1e-15);
    }

    #[test]
    fn cubic_leading_coefficient() {
        let p = IonicParams { lambda_a: 2.5, ..IonicParams::default() };
        for v in [-1e3, 1e3] {
            assert!((i_a(v, &p) / v.powi(3) / 2.5 - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn gap_current() {
        let p = IonicParams { g_gap: 0.5, ..IonicParams::default() };
        assert_eq!(eval_gap(2.0, &p), 1.0);
        assert_eq!(eval_gap(0.0, &p), 0.0);
        assert_eq!(eval_gap(-3.0, &IonicParams::default()), -3.0);
    }

    #[test]
    fn gating_closed_form() {
        let p = IonicParams { eps0: 1.0, kappa: 1.0, ..IonicParams::default() };
        assert!((step_gating(0.0, 1.0, 1.0, &p) - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert_eq!(step_gating(0.7, 0.7, 0.3, &p), 0.7);
    }

    #[test]
    fn gating_small_step_matches_rate() {
        let p = IonicParams::default();
        let (v, w, dt) = (0.8, -0.3, 1e-6);
        let got = (step_gating(w, v, dt, &p) - w) / dt;
        let want = gating_rate(v, w, &p);
        assert!(((got - want) / want).abs() < 1e-5);
    }

    #[test]
    fn gating_matches_rk4() {
        let p = IonicParams { eps0: 0.7, kappa: 1.3, ..IonicParams::default() };
        let (v, w0, dt) = (0.6, -0.2, 0.5);
        let n = 100;
        let h = dt / n as f64;
        let f = |w: f64| gating_rate(v, w, &p);
        let mut w = w0;
        for _ in 0..n {
            let k1 = f(w);
            let k2 = f(w + 0.5 * h * k1);
            let k3 = f(w + 0.5 * h * k2);
            let k4 = f(w + h * k3);
            w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let exact = step_gating(w0, v, dt, &p);
        assert!(((w - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn default_parameters_pass_checker() {
        let rep = check_assumptions(&IonicParams::default(), (-3.0, 3.0), 1000);
        assert!(rep.all_passed(), "{rep}");
        let beta1 = rep.check("one-sided-lipschitz").unwrap().constants[0].1;
        assert!(beta1 > 0.0);
    }

    #[test]
    fn degenerate_parameters_fail() {
        let flat = IonicParams { lambda_a: 0.0, ..IonicParams::default() };
        let rep = check_assumptions(&flat, (-3.0, 3.0), 1000);
        assert!(!rep.check("growth").unwrap().passed);
        assert!(!rep.check("growth").unwrap().witnesses.is_empty());

        let neg = IonicParams { b_w: -1.0, ..IonicParams::default() };
        let rep = check_assumptions(&neg, (-3.0, 3.0), 1000);
        let c = rep.check("coupling").unwrap();
        assert!(!c.passed && !c.witnesses.is_empty());
    }

    #[test]
    fn validation() {
        assert!(IonicParams::default().violations().is_empty());
        assert!(IonicParams::passive(1.0).violations().is_empty());
        let bad = IonicParams { a: 1.5, eps0: 0.0, ..IonicParams::default() };
        let names: Vec<_> = bad.violations().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, vec!["a", "eps0"]);
    }
}
