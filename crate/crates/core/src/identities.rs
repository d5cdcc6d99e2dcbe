//! Pointwise identities satisfied by a constructed state. Each function
//! returns a max-norm residual; finite differences are used only where an
//! identity is a differential equation.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{GridFunction, RESIDUAL_MARGIN};
use crate::hierarchy::{recursion_operator_strided, recursion_stride};
use crate::state::{scattering_state, SolitonState, WaveSign};

fn pointwise(state: &SolitonState, f: impl Fn(usize) -> f64) -> f64 {
    (0..state.grid().n_points()).map(|i| f(i).abs()).fold(0.0, f64::max)
}

fn sum_k(state: &SolitonState, f: impl Fn(usize, f64) -> f64) -> f64 {
    state.gammas().iter().enumerate().map(|(k, &g)| f(k, g)).sum()
}

/// `max_k |Σ_l A_kl ψ_l - λ_k| / (1 + |λ_k|)` where `A` is representable.
pub fn linear_system_residual(state: &SolitonState) -> Result<f64> {
    let n = state.len();
    let mut worst: f64 = 0.0;
    for i in (0..state.grid().n_points()).filter(|&i| state.lambda_finite(i)) {
        let a = state.matrix_a(i);
        let psi = DVector::from_fn(n, |k, _| state.psi(k).values()[i]);
        let lam = DVector::from_fn(n, |k, _| state.log_lambda(k).values()[i].exp());
        let r = a * psi - &lam;
        for k in 0..n {
            worst = worst.max(r[k].abs() / (1.0 + lam[k].abs()));
        }
    }
    Ok(worst)
}

/// `Σ γ_k ψ_k (ψ_k - λ_k) + W²/2`.
pub fn weighted_overlap_residual(state: &SolitonState) -> f64 {
    let w = state.w().values();
    pointwise(state, |i| {
        sum_k(state, |k, g| g * (state.psi(k).values()[i].powi(2) - state.lambda_psi(k).values()[i]))
            + 0.5 * w[i] * w[i]
    })
}

/// The four first-derivative identities, in order:
/// `Σ(λψ' - ψλ') = W²`, `Σ(λψ' + ψλ') = U/2`, `Σλψ' = U/4 + W²/2`,
/// `Σγψλ = W²/2 - U/4`.
pub fn derivative_identity_residuals(state: &SolitonState) -> [f64; 4] {
    let (w, u) = (state.w().values(), state.u().values());
    let lpd = |i: usize| sum_k(state, |k, _| state.lambda_psi_dx(k).values()[i]);
    let glp = |i: usize| sum_k(state, |k, g| g * state.lambda_psi(k).values()[i]);
    [
        pointwise(state, |i| lpd(i) + glp(i) - w[i] * w[i]),
        pointwise(state, |i| lpd(i) - glp(i) - 0.5 * u[i]),
        pointwise(state, |i| lpd(i) - 0.25 * u[i] - 0.5 * w[i] * w[i]),
        pointwise(state, |i| glp(i) - 0.5 * w[i] * w[i] + 0.25 * u[i]),
    ]
}

/// `U` against `-2 W'` by finite differences, away from the ends.
pub fn superpotential_route_residual(state: &SolitonState) -> Result<f64> {
    let n = state.grid().n_points();
    let w_dx = state.w().derivative_with_asymptotes(1, state.w().values()[0], state.w().values()[n - 1])?;
    Ok((state.u() + &w_dx.scale(2.0)).max_abs_interior(RESIDUAL_MARGIN))
}

/// `U` against `-2 (ln det A)''` by finite differences, away from the ends.
pub fn determinant_route_residual(state: &SolitonState) -> Result<f64> {
    let d2 = state.ln_det_a().derivative(2)?;
    Ok((state.u() + &d2.scale(2.0)).max_abs_interior(RESIDUAL_MARGIN))
}

/// `(|W(x_max)|, |W(x_min) + 2 Σ γ_k|)`.
pub fn superpotential_limits(state: &SolitonState) -> (f64, f64) {
    let sum: f64 = state.gammas().iter().sum();
    (state.w().last().abs(), (state.w().first() + 2.0 * sum).abs())
}

/// `max_k |∫ ψ_k² - 1|`.
pub fn normalization_residual(state: &SolitonState) -> f64 {
    state
        .psis()
        .iter()
        .map(|p| (p.map(|v| v * v).integral() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `max |U(x) - U(-x)|`, pairing mirrored grid points. Only meaningful on
/// a grid symmetric about zero.
pub fn mirror_asymmetry(f: &GridFunction) -> f64 {
    let v = f.values();
    let n = v.len();
    (0..n / 2).map(|i| (v[i] - v[n - 1 - i]).abs()).fold(0.0, f64::max)
}

/// `max_k |-ψ_k'' + U ψ_k + γ_k² ψ_k|` away from the ends.
pub fn bound_state_residual(state: &SolitonState) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (k, &g) in state.gammas().iter().enumerate() {
        let psi = state.psi(k);
        let d2 = psi.derivative(2)?;
        let r = GridFunction::from_parts(
            *psi.grid(),
            (0..psi.len())
                .map(|i| -d2.values()[i] + (state.u().values()[i] + g * g) * psi.values()[i])
                .collect(),
        );
        worst = worst.max(r.max_abs_interior(RESIDUAL_MARGIN));
    }
    Ok(worst)
}

/// `max_k |(∂³ - 4U∂ - 2U') P_k - 4 γ_k² P_k'|` with `P_k = ψ_k²`.
pub fn density_equation_residual(state: &SolitonState) -> Result<f64> {
    let stride = recursion_stride(state);
    let mut worst: f64 = 0.0;
    for (k, &g) in state.gammas().iter().enumerate() {
        let p = state.psi(k).map(|v| v * v);
        let lhs = recursion_operator_strided(state.u(), &p, stride)?;
        let rhs = p.derivative_sixth_order(1, stride, 0.0, 0.0)?.scale(4.0 * g * g);
        worst = worst.max((&lhs - &rhs).max_abs_interior(RESIDUAL_MARGIN));
    }
    Ok(worst)
}

/// `max |ξ² + 2 Σ ψ_k²/γ_k - 1|`.
pub fn zero_energy_square_residual(state: &SolitonState) -> f64 {
    let xi = state.xi().values();
    pointwise(state, |i| {
        xi[i] * xi[i] + sum_k(state, |k, g| 2.0 * state.psi(k).values()[i].powi(2) / g) - 1.0
    })
}

/// `max |ξ'' - U ξ|` away from the ends.
pub fn zero_energy_equation_residual(state: &SolitonState) -> Result<f64> {
    let xi = state.xi();
    let d2 = xi.derivative_with_asymptotes(2, xi.first(), xi.last())?;
    let r = d2.zip_with(&(state.u() * xi), |a, b| a - b);
    Ok(r.max_abs_interior(RESIDUAL_MARGIN))
}

/// `(‖-ψ'' + Uψ - k²ψ‖_∞` on the interior, `|ψ - e^{±ikx}|` at `x_max`)
/// for both branches.
pub fn scattering_residuals(state: &SolitonState, k: f64) -> Result<(f64, f64)> {
    let mut eq: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for (sign, s) in [(WaveSign::Plus, 1.0), (WaveSign::Minus, -1.0)] {
        let psi = scattering_state(state, k, sign);
        let d2 = psi.derivative(2)?;
        let u = state.u().values();
        let r = GridFunction::from_parts(
            *psi.grid(),
            (0..psi.len())
                .map(|i| -d2.values()[i] + psi.values()[i] * (u[i] - k * k))
                .collect(),
        );
        eq = eq.max(r.max_abs_interior(RESIDUAL_MARGIN));
        let x = state.grid().x_max();
        tail = tail.max((psi.last() - Complex64::new(0.0, s * k * x).exp()).norm());
    }
    Ok((eq, tail))
}
