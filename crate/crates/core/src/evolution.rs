//! Time dependence of the potential and its eigenstates.
//!
//! Frames are exact: every time is an independent construction with
//! `λ_k(x, t) = C_k exp(-γ_k x + α_k t)`. Time derivatives exist only to
//! check the evolution equations, by centered differences over equally
//! spaced frames.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, RESIDUAL_MARGIN};
use crate::hierarchy::{dual_l, dual_l_dx, lax_l, lax_l_dx, Method};
use crate::spectrum::Spectrum;
use crate::state::{build_state, SolitonState};

/// Which member of which hierarchy drives the evolution.
#[derive(Debug, Clone, PartialEq)]
pub enum EvolutionKind {
    /// `α_k = 4^m γ_k^{2m+1}`.
    Lax(usize),
    /// `α_k = 4^{-m} γ_k^{1-2m}`.
    Dual(usize),
    /// Arbitrary rates, one per bound state.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSpec {
    pub kind: EvolutionKind,
    pub times: Vec<f64>,
}

impl EvolutionSpec {
    pub fn new(kind: EvolutionKind, times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Spec("at least one time is required".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Spec("times must be finite".into()));
        }
        Ok(EvolutionSpec { kind, times })
    }

    /// Five frames `t - 2dt, ..., t + 2dt`, enough for the fourth-order
    /// time stencil at `t`.
    pub fn centered(kind: EvolutionKind, t: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Spec(format!("time step must be positive, got {dt}")));
        }
        EvolutionSpec::new(kind, (-2..=2).map(|i| t + i as f64 * dt).collect())
    }

    pub fn max_abs_time(&self) -> f64 {
        self.times.iter().fold(0.0, |m, t| m.max(t.abs()))
    }
}

pub fn alphas_for(kind: &EvolutionKind, gammas: &[f64]) -> Result<Vec<f64>> {
    match kind {
        EvolutionKind::Lax(m) => {
            let m = *m as i32;
            Ok(gammas.iter().map(|g| 4f64.powi(m) * g.powi(2 * m + 1)).collect())
        }
        EvolutionKind::Dual(m) => {
            let m = *m as i32;
            Ok(gammas.iter().map(|g| 4f64.powi(-m) * g.powi(1 - 2 * m)).collect())
        }
        EvolutionKind::Custom(alphas) => {
            if alphas.len() != gammas.len() {
                return Err(Error::Spec(format!(
                    "{} custom rates for {} bound states",
                    alphas.len(),
                    gammas.len()
                )));
            }
            if alphas.iter().any(|a| !a.is_finite()) {
                return Err(Error::Spec("custom rates must be finite".into()));
            }
            Ok(alphas.clone())
        }
    }
}

/// `1e-3 · min(1, 1 / max|α_k|)`.
pub fn default_time_step(alphas: &[f64]) -> f64 {
    let a_max = alphas.iter().fold(0.0, |m: f64, a| m.max(a.abs()));
    1e-3 * if a_max > 1.0 { 1.0 / a_max } else { 1.0 }
}

/// Soliton speeds `α_k / γ_k`.
pub fn speeds(gammas: &[f64], alphas: &[f64]) -> Vec<f64> {
    gammas.iter().zip(alphas).map(|(g, a)| a / g).collect()
}

#[derive(Debug, Clone)]
pub struct EvolutionFrames {
    pub spec: EvolutionSpec,
    pub alphas: Vec<f64>,
    pub states: Vec<SolitonState>,
}

pub fn evolve(spectrum: &Spectrum, spec: &EvolutionSpec, grid: &Grid) -> Result<EvolutionFrames> {
    let alphas = alphas_for(&spec.kind, spectrum.gammas())?;
    let states = spec
        .times
        .iter()
        .map(|&t| {
            build_state(spectrum, &alphas, t, grid)
                .map_err(|e| Error::AtTime { time: t, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionFrames { spec: spec.clone(), alphas, states })
}

/// Frames on the default grid for the spectrum, rates and times.
pub fn evolve_default(spectrum: &Spectrum, spec: &EvolutionSpec) -> Result<EvolutionFrames> {
    let alphas = alphas_for(&spec.kind, spectrum.gammas())?;
    let grid = Grid::for_solitons(spectrum.gammas(), &alphas, spec.max_abs_time())?;
    evolve(spectrum, spec, &grid)
}

impl EvolutionFrames {
    /// Common time step; fails unless there are at least three equally
    /// spaced frames.
    pub fn time_step(&self) -> Result<f64> {
        let t = &self.spec.times;
        if t.len() < 3 {
            return Err(Error::Spec(format!(
                "centered time differences need at least 3 frames, got {}",
                t.len()
            )));
        }
        let dt = t[1] - t[0];
        let equal = t
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300));
        if !(dt > 0.0) || !equal {
            return Err(Error::Spec("frame times must be increasing and equally spaced".into()));
        }
        Ok(dt)
    }

    /// `∂f/∂t` at frame `i` by centered differences: fourth order when two
    /// neighbours exist on each side, second order otherwise.
    pub fn time_derivative(
        &self,
        i: usize,
        field: impl Fn(&SolitonState) -> GridFunction,
    ) -> Result<GridFunction> {
        let dt = self.time_step()?;
        let n = self.states.len();
        if i == 0 || i + 1 >= n {
            return Err(Error::Spec(format!("frame {i} has no neighbours on both sides")));
        }
        let d1 = &field(&self.states[i + 1]) - &field(&self.states[i - 1]);
        if i >= 2 && i + 2 < n {
            let d2 = &field(&self.states[i + 2]) - &field(&self.states[i - 2]);
            Ok((&d1.scale(8.0) - &d2).scale(1.0 / (12.0 * dt)))
        } else {
            Ok(d1.scale(0.5 / dt))
        }
    }

    /// Frames where residuals are evaluated: those with the widest stencil.
    fn interior(&self) -> std::ops::Range<usize> {
        let n = self.states.len();
        if n >= 5 {
            2..n - 2
        } else {
            1..n - 1
        }
    }
}

/// Residuals of the potential's evolution equations, each the maximum over
/// interior grid points and interior frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialResiduals {
    /// `|∂U/∂t - 4 ∂_x Σ α_k ψ_k²|` (any rates).
    pub general: f64,
    /// `|∂U/∂t + ∂_x L_m|` (Lax) or `|∂U/∂t + ∂_x L̄_m|` (dual).
    pub hierarchy: Option<f64>,
    /// `|U_t + U_xxx - 6 U U_x|` for the Lax `m = 1` flow.
    pub kdv: Option<f64>,
}

impl PotentialResiduals {
    pub fn max(&self) -> f64 {
        [Some(self.general), self.hierarchy, self.kdv]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

pub fn potential_evolution_residual(frames: &EvolutionFrames) -> Result<PotentialResiduals> {
    frames.time_step()?;
    let mut general: f64 = 0.0;
    let mut hierarchy: Option<f64> = None;
    let mut kdv: Option<f64> = None;
    for i in frames.interior() {
        let st = &frames.states[i];
        let u_t = frames.time_derivative(i, |s| s.u().clone())?;

        let mut flux_dx = st.grid().zeros::<f64>();
        for (k, &a) in frames.alphas.iter().enumerate() {
            let d = (st.psi(k) * st.psi_dx(k)).scale(8.0 * a);
            flux_dx = &flux_dx + &d;
        }
        general = general.max((&u_t - &flux_dx).max_abs_interior(RESIDUAL_MARGIN));

        let member_dx = match frames.spec.kind {
            EvolutionKind::Lax(m) => Some(lax_l_dx(st, m)?),
            EvolutionKind::Dual(m) => Some(dual_l_dx(st, m)?),
            EvolutionKind::Custom(_) => None,
        };
        if let Some(d) = member_dx {
            let r = (&u_t + &d).max_abs_interior(RESIDUAL_MARGIN);
            hierarchy = Some(hierarchy.unwrap_or(0.0).max(r));
        }

        if frames.spec.kind == EvolutionKind::Lax(1) {
            let u = st.u();
            let u1 = u.derivative(1)?;
            let u3 = u.derivative(3)?;
            let res = GridFunction::from_parts(
                *u.grid(),
                (0..u.len())
                    .map(|j| {
                        u_t.values()[j] + u3.values()[j] - 6.0 * u.values()[j] * u1.values()[j]
                    })
                    .collect(),
            );
            let r = res.max_abs_interior(RESIDUAL_MARGIN);
            kdv = Some(kdv.unwrap_or(0.0).max(r));
        }
    }
    Ok(PotentialResiduals { general, hierarchy, kdv })
}

/// Right-hand side of the eigenstate evolution for the Lax or dual flow,
/// evaluated for `ψ_l`:
///
/// ```text
/// Lax m:  -(2γ)^{2m} ψ' + Σ_{j=1..m} (2γ)^{2j-2} (2 L_{m-j} ψ' - L_{m-j}' ψ)
/// dual m: -(2γ)^{-2m} ψ' - Σ_{j=1..m} (2γ)^{-2j} (2 L̄_{m-j+1} ψ' - L̄_{m-j+1}' ψ)
/// ```
pub fn eigenstate_generator_apply(
    state: &SolitonState,
    kind: &EvolutionKind,
    l: usize,
) -> Result<GridFunction> {
    if l >= state.len() {
        return Err(Error::Spec(format!("no bound state with index {l}")));
    }
    let two_g = 2.0 * state.gammas()[l];
    let psi = state.psi(l);
    let psi_dx = state.psi_dx(l);
    let term = |f: &GridFunction, f_dx: &GridFunction| -> GridFunction {
        GridFunction::from_parts(
            *psi.grid(),
            (0..psi.len())
                .map(|i| 2.0 * f.values()[i] * psi_dx.values()[i] - f_dx.values()[i] * psi.values()[i])
                .collect(),
        )
    };
    match *kind {
        EvolutionKind::Lax(m) => {
            let mut out = psi_dx.scale(-two_g.powi(2 * m as i32));
            for j in 1..=m {
                let f = lax_l(state, m - j, Method::Spectral)?.values;
                let f_dx = lax_l_dx(state, m - j)?;
                out = &out + &term(&f, &f_dx).scale(two_g.powi(2 * j as i32 - 2));
            }
            Ok(out)
        }
        EvolutionKind::Dual(m) => {
            let mut out = psi_dx.scale(-two_g.powi(-2 * m as i32));
            for j in 1..=m {
                let f = dual_l(state, m - j + 1)?.values;
                let f_dx = dual_l_dx(state, m - j + 1)?;
                out = &out - &term(&f, &f_dx).scale(two_g.powi(-2 * j as i32));
            }
            Ok(out)
        }
        EvolutionKind::Custom(_) => Err(Error::Spec(
            "the eigenstate generator is defined for Lax and dual flows only".into(),
        )),
    }
}

/// `max |generator(ψ_l) - ∂ψ_l/∂t|` over interior points and frames, for
/// every bound state.
pub fn generator_residual(frames: &EvolutionFrames) -> Result<f64> {
    frames.time_step()?;
    let mut worst: f64 = 0.0;
    for i in frames.interior() {
        let st = &frames.states[i];
        for l in 0..st.len() {
            let psi_t = frames.time_derivative(i, |s| s.psi(l).clone())?;
            let gen = eigenstate_generator_apply(st, &frames.spec.kind, l)?;
            worst = worst.max((&gen - &psi_t).max_abs_interior(RESIDUAL_MARGIN));
        }
    }
    Ok(worst)
}

/// `max |-4 Σ α_k ψ_k² - 2 ∂W/∂t|`.
pub fn superpotential_time_residual(frames: &EvolutionFrames) -> Result<f64> {
    frames.time_step()?;
    let mut worst: f64 = 0.0;
    for i in frames.interior() {
        let st = &frames.states[i];
        let w_t = frames.time_derivative(i, |s| s.w().clone())?;
        let mut flux = st.grid().zeros::<f64>();
        for (k, &a) in frames.alphas.iter().enumerate() {
            flux = flux.zip_with(st.psi(k), |acc, p| acc - 4.0 * a * p * p);
        }
        worst = worst.max((&flux - &w_t.scale(2.0)).max_abs_interior(RESIDUAL_MARGIN));
    }
    Ok(worst)
}

/// Residual of `ξ ∂²_x ∂_t ξ - ∂_t ξ ∂²_x ξ + ξ³ ∂_x ξ = 0` for the dual
/// `m = 1` flow.
pub fn xi_evolution_residual(frames: &EvolutionFrames) -> Result<f64> {
    if frames.spec.kind != EvolutionKind::Dual(1) {
        return Err(Error::Spec(
            "the zero-energy evolution equation applies to the dual m = 1 flow".into(),
        ));
    }
    frames.time_step()?;
    let mut worst: f64 = 0.0;
    for i in frames.interior() {
        let st = &frames.states[i];
        let xi = st.xi();
        let xi_t = frames.time_derivative(i, |s| s.xi().clone())?;
        let xi_t_xx = xi_t.derivative(2)?;
        let xi_xx = xi.derivative(2)?;
        let xi_x = xi.derivative(1)?;
        let res = GridFunction::from_parts(
            *xi.grid(),
            (0..xi.len())
                .map(|j| {
                    let v = xi.values()[j];
                    v * xi_t_xx.values()[j] - xi_t.values()[j] * xi_xx.values()[j]
                        + v * v * v * xi_x.values()[j]
                })
                .collect(),
        );
        worst = worst.max(res.max_abs_interior(RESIDUAL_MARGIN));
    }
    Ok(worst)
}
