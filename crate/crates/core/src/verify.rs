//! The full battery of checks for one scenario, each a named measurement
//! against a tolerance.

use std::collections::BTreeMap;

use crate::asymptotics::{asymptotic_decomposition, closed_form_reference};
use crate::error::{Error, Result};
use crate::evolution::{
    alphas_for, default_time_step, evolve, generator_residual, potential_evolution_residual,
    superpotential_time_residual, xi_evolution_residual, EvolutionKind, EvolutionSpec,
};
use crate::grid::{Grid, GridFunction, RESIDUAL_MARGIN};
use crate::hierarchy::{
    dual_l, lax_l, recursion_residual, sumrule, weighted_q, Direction, Method,
};
use crate::identities as id;
use crate::oracle::{reflection_coefficient, schrodinger_spectrum};
use crate::spectrum::Spectrum;
use crate::state::{build_state, overlap_inverse_b, SolitonState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Passes when `value <= tolerance`.
    AtMost,
    /// Passes when `value >= tolerance` (negative controls).
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub time: Option<f64>,
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> impl Iterator<Item = &Check> {
        let name = name.to_string();
        self.checks.iter().filter(move |c| c.name == name)
    }
}

/// Default tolerance of every check, by name.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("construction.linear_system", 1e-10),
    ("construction.normalization", 1e-6),
    ("construction.mirror_symmetry", 1e-8),
    ("identity.weighted_overlap", 1e-7),
    ("identity.antisymmetric_sum", 1e-7),
    ("identity.symmetric_sum", 1e-7),
    ("identity.lambda_dpsi", 1e-7),
    ("identity.gamma_psi_lambda", 1e-7),
    ("potential.superpotential_route", 1e-6),
    ("potential.determinant_route", 1e-6),
    ("superpotential.right_limit", 1e-6),
    ("superpotential.left_limit", 1e-6),
    ("bound_state.equation", 1e-5),
    ("density.equation", 1e-4),
    ("zero_energy.square", 1e-9),
    ("zero_energy.equation", 1e-5),
    ("zero_energy.left_limit", 1e-6),
    ("zero_energy.right_limit", 1e-6),
    ("scattering.equation", 1e-6),
    ("scattering.right_limit", 1e-8),
    ("overlap.inverse", 1e-8),
    ("overlap.wronskian", 1e-8),
    ("hierarchy.lax_index_zero", 1e-9),
    ("hierarchy.dual_index_zero", 1e-9),
    ("hierarchy.dual_square", 1e-9),
    ("hierarchy.closed_form_agreement", 1e-5),
    ("hierarchy.recursive_agreement", 1e-4),
    ("hierarchy.lax_recursion", 1e-4),
    ("hierarchy.dual_recursion", 1e-4),
    ("hierarchy.weighted_recursion", 1e-4),
    ("hierarchy.recursion_negative_control", 0.1),
    ("sumrule.relative", 1e-6),
    ("sumrule.closed_form", 1e-5),
    ("oracle.bound_state_count", 0.0),
    ("oracle.energies", 1e-4),
    ("oracle.reflection", 1e-6),
    ("oracle.flux", 1e-6),
    ("evolution.general", 1e-4),
    ("evolution.lax", 1e-4),
    ("evolution.dual", 1e-5),
    ("evolution.kdv", 1e-4),
    ("evolution.generator", 1e-4),
    ("evolution.superpotential_rate", 1e-4),
    ("evolution.zero_energy", 1e-4),
    ("closed_form.agreement", 1e-9),
    ("asymptotics.potential_window", 1e-3),
    ("asymptotics.eigenstate_window", 1e-3),
    ("asymptotics.zero_energy_window", 1e-3),
    ("asymptotics.center", 2.0),
    ("asymptotics.phase_shift", 1e-2),
];

/// Tolerance lookup: explicit overrides first, then the default times
/// `scale` (upper bounds only; lower bounds are never scaled).
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub scale: f64,
    pub overrides: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { scale: 1.0, overrides: BTreeMap::new() }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Spec(format!("tolerance scale must be positive, got {}", self.scale)));
        }
        for (name, v) in &self.overrides {
            if default_tolerance(name).is_none() {
                return Err(Error::Spec(format!("unknown check '{name}' in tolerance overrides")));
            }
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(Error::Spec(format!("tolerance for '{name}' must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str, bound: Bound) -> f64 {
        if let Some(v) = self.overrides.get(name) {
            return *v;
        }
        let base = default_tolerance(name).unwrap_or(0.0);
        match bound {
            Bound::AtMost => base * self.scale,
            Bound::AtLeast => base,
        }
    }
}

pub fn default_tolerance(name: &str) -> Option<f64> {
    DEFAULT_TOLERANCES.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
}

/// What to verify: a spectrum, the flow driving it and the times to check.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spectrum: Spectrum,
    pub kind: EvolutionKind,
    pub times: Vec<f64>,
    /// Grid for construction checks; default sized per time.
    pub grid: Option<Grid>,
    pub tolerances: Tolerances,
}

impl Scenario {
    pub fn new(spectrum: Spectrum, kind: EvolutionKind, times: Vec<f64>) -> Self {
        Scenario { spectrum, kind, times, grid: None, tolerances: Tolerances::default() }
    }
}

/// Wavenumbers used for reflection and scattering checks.
pub const PROBE_WAVENUMBERS: [f64; 3] = [0.5, 1.0, 2.0];

/// Grid wide enough that `U` is below the oracle's end-decay limit.
pub fn oracle_grid(gammas: &[f64], alphas: &[f64], t: f64) -> Result<Grid> {
    if gammas.is_empty() {
        return Grid::symmetric(20.0, 0.01);
    }
    let g_min = gammas.iter().cloned().fold(f64::INFINITY, f64::min);
    let g_max = gammas.iter().cloned().fold(0.0, f64::max);
    let v_max = gammas.iter().zip(alphas).map(|(g, a)| (a / g).abs()).fold(0.0, f64::max);
    Grid::symmetric(20.0 / g_min + v_max * t.abs(), 0.01 / g_max.max(1.0))
}

struct Recorder<'a> {
    tol: &'a Tolerances,
    time: Option<f64>,
    report: VerificationReport,
}

impl Recorder<'_> {
    fn add(&mut self, name: &str, value: f64, bound: Bound) {
        let tolerance = self.tol.get(name, bound);
        let passed = match bound {
            Bound::AtMost => value <= tolerance,
            Bound::AtLeast => value >= tolerance,
        };
        self.report.checks.push(Check {
            name: name.to_string(),
            time: self.time,
            value,
            tolerance,
            bound,
            passed,
        });
    }

    fn at_most(&mut self, name: &str, value: f64) {
        self.add(name, value, Bound::AtMost);
    }
}

pub fn verify(scenario: &Scenario) -> Result<VerificationReport> {
    scenario.tolerances.validate()?;
    if scenario.times.is_empty() {
        return Err(Error::Spec("at least one time is required".into()));
    }
    let gammas = scenario.spectrum.gammas();
    let alphas = alphas_for(&scenario.kind, gammas)?;
    let mut rec = Recorder { tol: &scenario.tolerances, time: None, report: VerificationReport::default() };
    for &t in &scenario.times {
        rec.time = Some(t);
        let wrap = |e: Error| Error::AtTime { time: t, source: Box::new(e) };
        let grid = match scenario.grid {
            Some(g) => g,
            None => Grid::for_solitons(gammas, &alphas, t).map_err(wrap)?,
        };
        let state = build_state(&scenario.spectrum, &alphas, t, &grid).map_err(wrap)?;
        construction_checks(&mut rec, &state).map_err(wrap)?;
        hierarchy_checks(&mut rec, &state).map_err(wrap)?;
        oracle_checks(&mut rec, &scenario.spectrum, &alphas, t).map_err(wrap)?;
        evolution_checks(&mut rec, scenario, t).map_err(wrap)?;
        asymptotic_checks(&mut rec, &scenario.spectrum, &state).map_err(wrap)?;
    }
    Ok(rec.report)
}

fn construction_checks(rec: &mut Recorder, st: &SolitonState) -> Result<()> {
    rec.at_most("construction.linear_system", id::linear_system_residual(st)?);
    rec.at_most("construction.normalization", id::normalization_residual(st));
    let grid = st.grid();
    if st.time() == 0.0 && st.spectrum().is_symmetric() && grid.x_min() == -grid.x_max() {
        rec.at_most("construction.mirror_symmetry", id::mirror_asymmetry(st.u()));
    }
    rec.at_most("identity.weighted_overlap", id::weighted_overlap_residual(st));
    let [anti, sym, ldp, gpl] = id::derivative_identity_residuals(st);
    rec.at_most("identity.antisymmetric_sum", anti);
    rec.at_most("identity.symmetric_sum", sym);
    rec.at_most("identity.lambda_dpsi", ldp);
    rec.at_most("identity.gamma_psi_lambda", gpl);
    rec.at_most("potential.superpotential_route", id::superpotential_route_residual(st)?);
    rec.at_most("potential.determinant_route", id::determinant_route_residual(st)?);
    let (right, left) = id::superpotential_limits(st);
    rec.at_most("superpotential.right_limit", right);
    rec.at_most("superpotential.left_limit", left);
    rec.at_most("bound_state.equation", id::bound_state_residual(st)?);
    rec.at_most("density.equation", id::density_equation_residual(st)?);
    rec.at_most("zero_energy.square", id::zero_energy_square_residual(st));
    rec.at_most("zero_energy.equation", id::zero_energy_equation_residual(st)?);
    let parity = if st.len() % 2 == 0 { 1.0 } else { -1.0 };
    rec.at_most("zero_energy.left_limit", (st.xi().first() - parity).abs());
    rec.at_most("zero_energy.right_limit", (st.xi().last() - 1.0).abs());
    let (eq, tail) = id::scattering_residuals(st, 1.0)?;
    rec.at_most("scattering.equation", eq);
    rec.at_most("scattering.right_limit", tail);
    let b = overlap_inverse_b(st)?;
    rec.at_most("overlap.inverse", b.inverse_residual(st));
    rec.at_most("overlap.wronskian", b.wronskian_residual(st));
    Ok(())
}

/// Fixed weights for the weighted-family recursion check.
fn sample_weights(n: usize) -> Vec<f64> {
    (0..n).map(|k| 0.3 + 0.618_033_988_75 * ((k as f64 + 1.0) * 1.618_033_988_75).fract()).collect()
}

fn hierarchy_checks(rec: &mut Recorder, st: &SolitonState) -> Result<()> {
    let u = st.u();
    // Finite-difference errors grow with the size of the functions, which
    // scales like (2γ)^(2j+1); residuals are taken relative to max(1, size).
    let diff = |a: &GridFunction, b: &GridFunction| {
        (a - b).max_abs_interior(RESIDUAL_MARGIN) / a.max_abs().max(1.0)
    };
    let rec_rel = |f: &GridFunction, g: &GridFunction, dir: Direction| -> Result<f64> {
        let size = g.derivative(1)?.max_abs().max(1.0);
        Ok(recursion_residual(u, f, g, dir)? / size)
    };
    rec.at_most("hierarchy.lax_index_zero", (&lax_l(st, 0, Method::Spectral)?.values - u).max_abs());
    rec.at_most("hierarchy.dual_index_zero", (&dual_l(st, 0)?.values - u).max_abs());
    let d1 = dual_l(st, 1)?.values;
    let xi = st.xi();
    rec.at_most(
        "hierarchy.dual_square",
        d1.zip_with(xi, |l, x| 1.0 + 2.0 * l - x * x).max_abs(),
    );
    for j in 1..=2 {
        let spectral = lax_l(st, j, Method::Spectral)?.values;
        rec.at_most("hierarchy.closed_form_agreement", diff(&spectral, &lax_l(st, j, Method::ClosedForm)?.values));
        rec.at_most("hierarchy.recursive_agreement", diff(&spectral, &lax_l(st, j, Method::Recursive)?.values));
    }
    for j in 1..=3 {
        let f = lax_l(st, j - 1, Method::Spectral)?.values;
        let g = lax_l(st, j, Method::Spectral)?.values;
        rec.at_most("hierarchy.lax_recursion", rec_rel(&f, &g, Direction::Lax)?);
    }
    for m in 1..=3 {
        let f = dual_l(st, m)?.values;
        let g = dual_l(st, m - 1)?.values;
        rec.at_most("hierarchy.dual_recursion", rec_rel(&f, &g, Direction::Dual)?);
    }
    let betas = sample_weights(st.len());
    for j in 0..=2 {
        let f = weighted_q(st, &betas, j)?.values;
        let g = weighted_q(st, &betas, j + 1)?.values;
        rec.at_most("hierarchy.weighted_recursion", rec_rel(&f, &g, Direction::Lax)?);
    }
    if !st.is_empty() {
        let unrelated = st.grid().sample(|x| x.sin());
        let control = recursion_residual(u, &unrelated, &st.grid().zeros(), Direction::Lax)?;
        rec.add("hierarchy.recursion_negative_control", control, Bound::AtLeast);
    }
    for j in 0..=2 {
        let rep = sumrule(st, j)?;
        rec.at_most("sumrule.relative", rep.rel_error);
        if let Some(cf) = rep.closed_form_integral {
            let rel = if rep.analytic_value == 0.0 {
                cf.abs()
            } else {
                (cf - rep.analytic_value).abs() / rep.analytic_value.abs()
            };
            rec.at_most("sumrule.closed_form", rel);
        }
    }
    Ok(())
}

fn oracle_checks(rec: &mut Recorder, spectrum: &Spectrum, alphas: &[f64], t: f64) -> Result<()> {
    let gammas = spectrum.gammas();
    let grid = oracle_grid(gammas, alphas, t)?;
    let st = build_state(spectrum, alphas, t, &grid)?;
    let n = gammas.len();
    let found = schrodinger_spectrum(st.u(), n + 1);
    rec.at_most("oracle.bound_state_count", (found.negative_count as f64 - n as f64).abs());
    let mut expected: Vec<f64> = spectrum.energies();
    expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rel = expected
        .iter()
        .zip(&found.energies)
        .map(|(e, f)| ((f - e) / e).abs())
        .fold(0.0, f64::max);
    rec.at_most("oracle.energies", rel);
    for k in PROBE_WAVENUMBERS {
        let rep = reflection_coefficient(st.u(), k)?;
        rec.at_most("oracle.reflection", rep.r.norm());
        rec.at_most("oracle.flux", rep.flux_defect().abs());
    }
    Ok(())
}

fn evolution_checks(rec: &mut Recorder, sc: &Scenario, t: f64) -> Result<()> {
    let alphas = alphas_for(&sc.kind, sc.spectrum.gammas())?;
    let dt = default_time_step(&alphas);
    let spec = EvolutionSpec::centered(sc.kind.clone(), t, dt)?;
    let frame_grid = match sc.grid {
        Some(g) => g,
        None => Grid::for_solitons(sc.spectrum.gammas(), &alphas, t.abs() + 2.0 * dt)?,
    };
    let frames = evolve(&sc.spectrum, &spec, &frame_grid)?;
    let res = potential_evolution_residual(&frames)?;
    rec.at_most("evolution.general", res.general);
    match sc.kind {
        EvolutionKind::Lax(_) => rec.at_most("evolution.lax", res.hierarchy.unwrap_or(0.0)),
        EvolutionKind::Dual(_) => rec.at_most("evolution.dual", res.hierarchy.unwrap_or(0.0)),
        EvolutionKind::Custom(_) => {}
    }
    if let Some(k) = res.kdv {
        rec.at_most("evolution.kdv", k);
    }
    if !matches!(sc.kind, EvolutionKind::Custom(_)) {
        rec.at_most("evolution.generator", generator_residual(&frames)?);
    }
    rec.at_most("evolution.superpotential_rate", superpotential_time_residual(&frames)?);
    if sc.kind == EvolutionKind::Dual(1) {
        rec.at_most("evolution.zero_energy", xi_evolution_residual(&frames)?);
    }
    Ok(())
}

fn asymptotic_checks(rec: &mut Recorder, spectrum: &Spectrum, st: &SolitonState) -> Result<()> {
    let n = spectrum.len();
    if (n == 1 || n == 2) && spectrum.is_symmetric() {
        let cf = closed_form_reference(spectrum.gammas(), st.alphas(), st.time(), st.grid())?;
        let mut worst = (st.u() - &cf.u).max_abs().max((st.xi() - &cf.xi).max_abs());
        for k in 0..n {
            worst = worst.max((st.psi(k) - &cf.psis[k]).max_abs());
        }
        rec.at_most("closed_form.agreement", worst);
    }
    if n < 2 || !spectrum.is_symmetric() {
        return Ok(());
    }
    let rep = match asymptotic_decomposition(st) {
        Ok(r) => r,
        Err(Error::NotAsymptotic { .. }) => return Ok(()),
        Err(e) => return Err(e),
    };
    rec.at_most("asymptotics.potential_window", rep.max_potential_error());
    rec.at_most("asymptotics.eigenstate_window", rep.max_psi_error());
    rec.at_most("asymptotics.zero_energy_window", rep.max_xi_error());
    rec.at_most("asymptotics.center", rep.max_center_error() / st.grid().step());
    let dual_like = rep
        .solitons
        .iter()
        .all(|s| (s.track.offset - s.track.delta).abs() < 1e-12);
    if dual_like {
        rec.at_most("asymptotics.phase_shift", rep.max_delta_deviation());
    }
    Ok(())
}
