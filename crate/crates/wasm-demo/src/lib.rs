//! Browser bindings for three operations of the toolkit: effective tensors of
//! a reference cell, a short homogenized run, and the ionic assumption report.
//!
//! Build with `wasm-pack build --target web crates/wasm-demo` and serve
//! `crates/wasm-demo/www` next to the generated `pkg/`.

use tridomain::cell_problems::{homogenize_phase, CELL_TOL};
use tridomain::geometry::{build_reference_cell, measures, CellGeometrySpec, Phase};
use tridomain::ionic::{check_assumptions, IonicParams};
use tridomain::macro_solver::{run_macro, MacroProblem, MacroState};
use tridomain::scenario::{InitialData, Profile};
use tridomain::{CoefficientTensor, Sym2};
use wasm_bindgen::prelude::wasm_bindgen;

fn spec(layout: &str, band_lo: f64, band_hi: f64) -> Result<CellGeometrySpec, String> {
    let s = match layout {
        "band" => CellGeometrySpec::band(band_lo, band_hi),
        "island" => CellGeometrySpec::island(band_lo, band_hi, 0.25, 0.75),
        "full_cell" => CellGeometrySpec::full_cell(),
        "laminate_x" => CellGeometrySpec::laminate_x(),
        other => return Err(format!("unknown layout {other:?}")),
    };
    s.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

fn tensors(s: &CellGeometrySpec, n: usize, conductivity: f64) -> Result<[Sym2; 3], String> {
    let cell = build_reference_cell(s, n).map_err(|e| e.to_string())?;
    let vol = measures(&cell);
    let mut out = [Sym2::ZERO; 3];
    for (k, phase) in Phase::ALL.into_iter().enumerate() {
        if vol.volume(phase) == 0.0 {
            continue;
        }
        let m = if s.layout == tridomain::Layout::LaminateX {
            CoefficientTensor::laminate_x(&cell, conductivity, 4.0 * conductivity)
        } else {
            CoefficientTensor::constant(Sym2::IDENTITY.scaled(conductivity))
        }
        .map_err(|e| e.to_string())?;
        out[k] = homogenize_phase(&cell, &m, phase, CELL_TOL).map_err(|e| e.to_string())?.energy.sym();
    }
    Ok(out)
}

/// Effective tensors of the two intracellular phases and the extracellular
/// phase as nine numbers `[m11, m12, m22]` per phase. `n` is the cell
/// resolution; band edges must fall on its grid lines.
#[wasm_bindgen]
pub fn effective_tensors(layout: &str, band_lo: f64, band_hi: f64, n: usize, conductivity: f64) -> Result<Vec<f64>, String> {
    let t = tensors(&spec(layout, band_lo, band_hi)?, n, conductivity)?;
    Ok(t.iter().flat_map(|m| [m.m11, m.m12, m.m22]).collect())
}

/// Runs the homogenized model on an `n x n` grid from a Gaussian pulse in
/// `v1` and returns `v1` at `t_end`, row-major over `(n+1)^2` nodes.
#[wasm_bindgen]
pub fn macro_pulse(layout: &str, n: usize, g_gap: f64, t_end: f64, delta: f64) -> Result<Vec<f64>, String> {
    let s = spec(layout, 0.25, 0.75)?;
    if !matches!(s.layout, tridomain::Layout::Band | tridomain::Layout::Island) {
        return Err("the homogenized run needs the band or island layout".into());
    }
    if !(2..=128).contains(&n) {
        return Err(format!("grid size must lie in 2..=128, got {n}"));
    }
    let cell = build_reference_cell(&s, 16).map_err(|e| e.to_string())?;
    let ionic = IonicParams { g_gap, ..IonicParams::default() };
    let dt = 0.01;
    let steps = (t_end / dt).round().max(1.0);
    let mut prob = MacroProblem::new(n, tensors(&s, 16, 1.0)?, &measures(&cell), ionic, dt, steps * dt);
    prob.delta = delta;
    let init = InitialData {
        v1: Profile::Gaussian { amplitude: 1.0, x0: 0.2, y0: 0.5, width: 0.1, width_y: 0.1 },
        ..Default::default()
    };
    let run = run_macro(&prob, MacroState::from_initial(&prob.grid, &init), |_, _, _| {}).map_err(|e| e.to_string())?;
    Ok(run.final_state.v1().values)
}

/// Plain-text report of the sampled ionic assumptions.
#[wasm_bindgen]
pub fn ionic_report(a: f64, lambda_a: f64, b_w: f64, eps0: f64, kappa: f64, samples: usize) -> Result<String, String> {
    let p = IonicParams { a, lambda_a, b_w, eps0, kappa, ..IonicParams::default() };
    if let Some((key, msg)) = p.violations().into_iter().next() {
        return Err(format!("{key}: {msg}"));
    }
    Ok(check_assumptions(&p, (-3.0, 3.0), samples.max(100)).to_string())
}
