//! Construction of the reflectionless potential carrying a prescribed set of
//! bound states, together with its eigenstates, superpotential and
//! zero-energy solution, at one value of the evolution parameter.
//!
//! At each grid point the seed exponentials `λ_k = C_k exp(θ_k)`,
//! `θ_k = -γ_k x + α_k t`, define the symmetric matrix
//! `A_kl = δ_kl + λ_k λ_l / (γ_k + γ_l)` and the bound states solve
//! `A ψ = λ`. The products `λ_k λ_l` overflow far to the left, so the
//! system is solved in the row/column scaled form
//!
//! ```text
//! (S A S) (S⁻¹ ψ) = S λ,   s_k = exp(-max(θ_k, 0))
//! ```
//!
//! whose entries `s_k² δ_kl + μ_k μ_l / (γ_k + γ_l)` with `μ_k = exp(min(θ_k, 0))`
//! are bounded by one. When every `θ_k ≤ 0` this is literally `A ψ = λ`; when
//! every `θ_k ≥ 0` it is `(D⁻² + M) χ = 1` with `ψ = D⁻¹ χ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::spectrum::Spectrum;

/// Full snapshot of the construction at one time.
#[derive(Debug, Clone)]
pub struct SolitonState {
    spectrum: Spectrum,
    alphas: Vec<f64>,
    time: f64,
    grid: Grid,
    log_lambdas: Vec<GridFunction>,
    psis: Vec<GridFunction>,
    psi_dx: Vec<GridFunction>,
    lambda_psi: Vec<GridFunction>,
    lambda_psi_dx: Vec<GridFunction>,
    w: GridFunction,
    u: GridFunction,
    xi: GridFunction,
    xi_dx: GridFunction,
    ln_det_a: GridFunction,
}

/// Per-point solve in scaled form.
struct PointSolution {
    psi: Vec<f64>,
    psi_dx: Vec<f64>,
    lambda_psi: Vec<f64>,
    lambda_psi_dx: Vec<f64>,
    ln_det_a: f64,
}

fn solve_point(gammas: &[f64], thetas: &[f64], x: f64) -> Result<PointSolution> {
    let n = gammas.len();
    let s: Vec<f64> = thetas.iter().map(|&th| (-th.max(0.0)).exp()).collect();
    let mu: Vec<f64> = thetas.iter().map(|&th| th.min(0.0).exp()).collect();
    let scaled = DMatrix::from_fn(n, n, |k, l| {
        let diag = if k == l { s[k] * s[k] } else { 0.0 };
        diag + mu[k] * mu[l] / (gammas[k] + gammas[l])
    });
    let chol = scaled.cholesky().ok_or(Error::Singular { x })?;
    let ln_det_a = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
        + 2.0 * thetas.iter().map(|th| th.max(0.0)).sum::<f64>();

    let y = chol.solve(&DVector::from_column_slice(&mu));
    let lambda_psi: Vec<f64> = (0..n).map(|k| mu[k] * y[k]).collect();
    let w = -lambda_psi.iter().sum::<f64>();

    // d/dx of A ψ = λ: A ψ' = -Γλ - W λ.
    let rhs = DVector::from_fn(n, |k, _| -mu[k] * (gammas[k] + w));
    let z = chol.solve(&rhs);

    let psi: Vec<f64> = (0..n).map(|k| s[k] * y[k]).collect();
    let psi_dx: Vec<f64> = (0..n).map(|k| s[k] * z[k]).collect();
    let lambda_psi_dx: Vec<f64> = (0..n).map(|k| mu[k] * z[k]).collect();
    if psi.iter().chain(&psi_dx).chain(&lambda_psi).any(|v| !v.is_finite()) {
        return Err(Error::Range { x });
    }
    Ok(PointSolution {
        psi,
        psi_dx,
        lambda_psi,
        lambda_psi_dx,
        ln_det_a,
    })
}

/// Build the state at time `t` with seed rates `alphas` (`∂λ_k/∂t = α_k λ_k`).
pub fn build_state(spectrum: &Spectrum, alphas: &[f64], t: f64, grid: &Grid) -> Result<SolitonState> {
    let n = spectrum.len();
    if alphas.len() != n {
        return Err(Error::Spec(format!(
            "{} evolution rates for {} bound states",
            alphas.len(),
            n
        )));
    }
    if !t.is_finite() || alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::Spec("time and rates must be finite".into()));
    }
    let gammas = spectrum.gammas();
    let ln_c: Vec<f64> = spectrum.norm_constants().iter().map(|c| c.ln()).collect();
    let np = grid.n_points();

    let mut log_lambdas = vec![Vec::with_capacity(np); n];
    let mut psis = vec![Vec::with_capacity(np); n];
    let mut psi_dx = vec![Vec::with_capacity(np); n];
    let mut lambda_psi = vec![Vec::with_capacity(np); n];
    let mut lambda_psi_dx = vec![Vec::with_capacity(np); n];
    let mut w = Vec::with_capacity(np);
    let mut u = Vec::with_capacity(np);
    let mut xi = Vec::with_capacity(np);
    let mut xi_dx = Vec::with_capacity(np);
    let mut ln_det = Vec::with_capacity(np);

    let mut thetas = vec![0.0; n];
    for x in grid.xs() {
        for k in 0..n {
            thetas[k] = ln_c[k] - gammas[k] * x + alphas[k] * t;
        }
        let p = solve_point(gammas, &thetas, x)?;
        let wx = -p.lambda_psi.iter().sum::<f64>();
        let ux = -4.0 * (0..n).map(|k| gammas[k] * p.psi[k] * p.psi[k]).sum::<f64>();
        let xix = 1.0 - (0..n).map(|k| p.lambda_psi[k] / gammas[k]).sum::<f64>();
        // ξ' = -Σ (λ'ψ + λψ')/γ = -W - Σ λψ'/γ
        let xidx = -wx - (0..n).map(|k| p.lambda_psi_dx[k] / gammas[k]).sum::<f64>();
        if ![wx, ux, xix, xidx, p.ln_det_a].iter().all(|v| v.is_finite()) {
            return Err(Error::Range { x });
        }
        for k in 0..n {
            log_lambdas[k].push(thetas[k]);
            psis[k].push(p.psi[k]);
            psi_dx[k].push(p.psi_dx[k]);
            lambda_psi[k].push(p.lambda_psi[k]);
            lambda_psi_dx[k].push(p.lambda_psi_dx[k]);
        }
        w.push(wx);
        u.push(ux);
        xi.push(xix);
        xi_dx.push(xidx);
        ln_det.push(p.ln_det_a);
    }

    let wrap = |vs: Vec<Vec<f64>>| -> Vec<GridFunction> {
        vs.into_iter().map(|v| GridFunction::from_parts(*grid, v)).collect()
    };
    Ok(SolitonState {
        spectrum: spectrum.clone(),
        alphas: alphas.to_vec(),
        time: t,
        grid: *grid,
        log_lambdas: wrap(log_lambdas),
        psis: wrap(psis),
        psi_dx: wrap(psi_dx),
        lambda_psi: wrap(lambda_psi),
        lambda_psi_dx: wrap(lambda_psi_dx),
        w: GridFunction::from_parts(*grid, w),
        u: GridFunction::from_parts(*grid, u),
        xi: GridFunction::from_parts(*grid, xi),
        xi_dx: GridFunction::from_parts(*grid, xi_dx),
        ln_det_a: GridFunction::from_parts(*grid, ln_det),
    })
}

impl SolitonState {
    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn gammas(&self) -> &[f64] {
        self.spectrum.gammas()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.spectrum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectrum.is_empty()
    }

    /// `θ_k = ln λ_k`.
    pub fn log_lambda(&self, k: usize) -> &GridFunction {
        &self.log_lambdas[k]
    }

    /// `λ_k` itself; fails where it overflows.
    pub fn lambda(&self, k: usize) -> Result<GridFunction> {
        GridFunction::new(self.grid, self.log_lambdas[k].values().iter().map(|t| t.exp()).collect())
    }

    pub fn psi(&self, k: usize) -> &GridFunction {
        &self.psis[k]
    }

    pub fn psis(&self) -> &[GridFunction] {
        &self.psis
    }

    /// `∂ψ_k/∂x`, from the differentiated linear system (no differencing).
    pub fn psi_dx(&self, k: usize) -> &GridFunction {
        &self.psi_dx[k]
    }

    /// `λ_k ψ_k`, finite even where `λ_k` alone is not.
    pub fn lambda_psi(&self, k: usize) -> &GridFunction {
        &self.lambda_psi[k]
    }

    /// `λ_k ∂ψ_k/∂x`.
    pub fn lambda_psi_dx(&self, k: usize) -> &GridFunction {
        &self.lambda_psi_dx[k]
    }

    /// Superpotential `W = -Σ λ_l ψ_l = ∂_x ln det A`.
    pub fn w(&self) -> &GridFunction {
        &self.w
    }

    /// Potential `U = -4 Σ γ_k ψ_k²`.
    pub fn u(&self) -> &GridFunction {
        &self.u
    }

    /// `∂U/∂x = -8 Σ γ_k ψ_k ψ_k'`.
    pub fn u_dx(&self) -> GridFunction {
        let mut out = self.grid.zeros::<f64>();
        for (k, &g) in self.gammas().iter().enumerate() {
            let term = (&self.psis[k] * &self.psi_dx[k]).scale(-8.0 * g);
            out = &out + &term;
        }
        out
    }

    /// `U` and its first four derivatives from the densities, using
    /// `ψ'' = (U + γ²) ψ` to eliminate every second derivative of `ψ`.
    pub fn u_derivatives(&self) -> [GridFunction; 5] {
        let np = self.grid.n_points();
        let u = self.u.values();
        let mut d = [vec![0.0; np], vec![0.0; np], vec![0.0; np], vec![0.0; np], vec![0.0; np]];
        d[0].copy_from_slice(u);
        for (k, &g) in self.gammas().iter().enumerate() {
            let (p, q) = (self.psis[k].values(), self.psi_dx[k].values());
            for i in 0..np {
                let e = u[i] + g * g;
                d[1][i] += -8.0 * g * p[i] * q[i];
                d[2][i] += -8.0 * g * (q[i] * q[i] + e * p[i] * p[i]);
            }
        }
        for (k, &g) in self.gammas().iter().enumerate() {
            let (p, q) = (self.psis[k].values(), self.psi_dx[k].values());
            for i in 0..np {
                let (pq, p2, q2) = (p[i] * q[i], p[i] * p[i], q[i] * q[i]);
                let e = u[i] + g * g;
                let (u1, u2) = (d[1][i], d[2][i]);
                d[3][i] += -4.0 * g * (8.0 * e * pq + 2.0 * u1 * p2);
                d[4][i] += -4.0 * g * (12.0 * u1 * pq + 8.0 * e * q2 + 8.0 * e * e * p2 + 2.0 * u2 * p2);
            }
        }
        d.map(|v| GridFunction::from_parts(self.grid, v))
    }

    /// Zero-energy solution `ξ = 1 - Σ λ_l ψ_l / γ_l`.
    pub fn xi(&self) -> &GridFunction {
        &self.xi
    }

    pub fn xi_dx(&self) -> &GridFunction {
        &self.xi_dx
    }

    pub fn ln_det_a(&self) -> &GridFunction {
        &self.ln_det_a
    }

    /// The matrix `A` at grid index `i`. Entries overflow where the seed
    /// exponentials do.
    pub fn matrix_a(&self, i: usize) -> DMatrix<f64> {
        let g = self.gammas();
        let n = g.len();
        DMatrix::from_fn(n, n, |k, l| {
            let d = if k == l { 1.0 } else { 0.0 };
            d + (self.log_lambdas[k].values()[i] + self.log_lambdas[l].values()[i]).exp() / (g[k] + g[l])
        })
    }

    /// Sample index range where every seed exponential is representable.
    pub fn lambda_finite(&self, i: usize) -> bool {
        self.log_lambdas.iter().all(|th| th.values()[i] < 300.0)
    }
}

/// Which of the two plane-wave branches `e^{±ikx}` a scattering state uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveSign {
    Plus,
    Minus,
}

/// Positive-energy solution
/// `ψ(k², x) = e^{±ikx} (1 - Σ_l λ_l ψ_l / (γ_l ∓ ik))`.
pub fn scattering_state(state: &SolitonState, k: f64, sign: WaveSign) -> GridFunction<Complex64> {
    let sgn = match sign {
        WaveSign::Plus => 1.0,
        WaveSign::Minus => -1.0,
    };
    let gammas = state.gammas();
    let grid = *state.grid();
    let values = grid
        .xs()
        .enumerate()
        .map(|(i, x)| {
            let phase = Complex64::new(0.0, sgn * k * x).exp();
            let sum: Complex64 = gammas
                .iter()
                .enumerate()
                .map(|(l, &g)| state.lambda_psi(l).values()[i] / Complex64::new(g, -sgn * k))
                .sum();
            phase * (Complex64::new(1.0, 0.0) - sum)
        })
        .collect();
    GridFunction::from_parts(grid, values)
}

/// Zero-energy solution; the `k = 0` member of [`scattering_state`].
pub fn zero_energy_xi(state: &SolitonState) -> GridFunction {
    state.xi().clone()
}

/// Cumulative overlaps `B_lk(x) = ∫_{-∞}^x ψ_l ψ_k`, which invert `A`.
#[derive(Debug, Clone)]
pub struct OverlapInverse {
    grid: Grid,
    entries: Vec<DMatrix<f64>>,
}

impl OverlapInverse {
    pub fn at(&self, i: usize) -> &DMatrix<f64> {
        &self.entries[i]
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `max_x ‖(S A S)(S⁻¹ B S⁻¹) - I‖_∞` with `s_k = exp(-max(θ_k, 0))`:
    /// the product `A B - I` seen through a similarity transform that keeps
    /// every factor bounded where the seed exponentials are huge.
    pub fn inverse_residual(&self, state: &SolitonState) -> f64 {
        let g = state.gammas();
        let n = g.len();
        let id = DMatrix::<f64>::identity(n, n);
        (0..self.grid.n_points())
            .map(|i| {
                let th: Vec<f64> = (0..n).map(|k| state.log_lambdas[k].values()[i]).collect();
                let s: Vec<f64> = th.iter().map(|t| (-t.max(0.0)).exp()).collect();
                let mu: Vec<f64> = th.iter().map(|t| t.min(0.0).exp()).collect();
                let a = DMatrix::from_fn(n, n, |k, l| {
                    let d = if k == l { s[k] * s[k] } else { 0.0 };
                    d + mu[k] * mu[l] / (g[k] + g[l])
                });
                let b = DMatrix::from_fn(n, n, |k, l| self.entries[i][(k, l)] / (s[k] * s[l]));
                (a * b - &id).abs().max()
            })
            .fold(0.0, f64::max)
    }

    /// `max |B_lk - (ψ_l ψ_k' - ψ_l' ψ_k) / (γ_k² - γ_l²)|` over `k ≠ l`.
    pub fn wronskian_residual(&self, state: &SolitonState) -> f64 {
        let g = state.gammas();
        let n = g.len();
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.n_points() {
            for l in 0..n {
                for k in 0..n {
                    if k == l {
                        continue;
                    }
                    let wr = state.psi(l).values()[i] * state.psi_dx(k).values()[i]
                        - state.psi_dx(l).values()[i] * state.psi(k).values()[i];
                    let form = wr / (g[k] * g[k] - g[l] * g[l]);
                    worst = worst.max((self.entries[i][(l, k)] - form).abs());
                }
            }
        }
        worst
    }
}

/// Accumulate `B` from the left end; the part of the integral beyond `x_min`
/// is closed with the asymptotic decay `ψ_l ψ_k ∝ exp((γ_l + γ_k) x)`.
pub fn overlap_inverse_b(state: &SolitonState) -> Result<OverlapInverse> {
    let g = state.gammas();
    let n = g.len();
    let grid = *state.grid();
    let mut entries = vec![DMatrix::<f64>::zeros(n, n); grid.n_points()];
    for l in 0..n {
        for k in l..n {
            let product = state.psi(l) * state.psi(k);
            let tail = product.first() / (g[l] + g[k]);
            let cumulative = product.cumulative_from_left(tail);
            if !cumulative.all_finite() {
                return Err(Error::Numeric(format!("overlap B[{l}][{k}] is not finite")));
            }
            for (i, &v) in cumulative.values().iter().enumerate() {
                entries[i][(l, k)] = v;
                entries[i][(k, l)] = v;
            }
        }
    }
    Ok(OverlapInverse { grid, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_soliton() -> SolitonState {
        let s = Spectrum::symmetric(&[1.0]).unwrap();
        let grid = Grid::symmetric(15.0, 0.01).unwrap();
        build_state(&s, &[1.0], 0.0, &grid).unwrap()
    }

    #[test]
    fn one_soliton_values_at_origin() {
        let st = one_soliton();
        let mid = st.grid().n_points() / 2;
        assert!((st.u().values()[mid] + 2.0).abs() < 1e-13);
        assert!((st.psi(0).values()[mid] - 0.5f64.sqrt()).abs() < 1e-13);
        assert!((st.w().values()[mid] + 1.0).abs() < 1e-13);
        assert!(st.xi().values()[mid].abs() < 1e-13);
    }

    #[test]
    fn one_soliton_matches_sech_profile() {
        let st = one_soliton();
        for (i, x) in st.grid().xs().enumerate() {
            let sech = 1.0 / x.cosh();
            assert!((st.u().values()[i] + 2.0 * sech * sech).abs() < 1e-12);
            assert!((st.w().values()[i] - (x.tanh() - 1.0)).abs() < 1e-12);
            assert!((st.psi_dx(0).values()[i] + 0.5f64.sqrt() * sech * x.tanh()).abs() < 1e-12);
            assert!((st.ln_det_a().values()[i] - (1.0 + (-2.0 * x).exp()).ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn potential_derivatives_match_sech2() {
        let st = one_soliton();
        let d = st.u_derivatives();
        // U = -2 sech²x written with t = tanh x, s = sech²x.
        for (i, x) in st.grid().xs().enumerate() {
            let (t, s) = (x.tanh(), 1.0 / x.cosh().powi(2));
            let exact = [
                -2.0 * s,
                4.0 * s * t,
                4.0 * s * (s - 2.0 * t * t),
                16.0 * s * t.powi(3) - 32.0 * s * s * t,
            ];
            for (n, e) in exact.iter().enumerate() {
                assert!((d[n].values()[i] - e).abs() < 1e-12, "order {n} at {x}");
            }
        }
        let fd4 = st.u().derivative(4).unwrap();
        assert!((&fd4 - &d[4]).max_abs() < 1e-4);
        assert!((&st.u_dx() - &d[1]).max_abs() < 1e-14);
    }

    #[test]
    fn two_soliton_depth() {
        let s = Spectrum::symmetric(&[1.0, 2.0]).unwrap();
        let grid = Grid::symmetric(14.0, 0.01).unwrap();
        let st = build_state(&s, &[1.0, 2.0], 0.0, &grid).unwrap();
        let mid = grid.n_points() / 2;
        assert!((st.u().values()[mid] + 6.0).abs() < 1e-12);
    }

    #[test]
    fn right_tail_reduces_to_seed() {
        let s = Spectrum::symmetric(&[1.0, 2.0, 3.0]).unwrap();
        let grid = Grid::symmetric(14.0, 0.01).unwrap();
        let st = build_state(&s, &[1.0, 2.0, 3.0], 0.0, &grid).unwrap();
        let last = grid.n_points() - 1;
        let a = st.matrix_a(last);
        assert!((a - DMatrix::identity(3, 3)).abs().max() < 1e-10);
        for k in 0..3 {
            let lam = st.lambda(k).unwrap().last();
            assert!((st.psi(k).last() - lam).abs() < 1e-15);
            assert!(lam < 1e-4);
        }
    }

    #[test]
    fn far_left_survives_huge_exponents() {
        // θ reaches ~+1200 at the left end; the scaled solve must cope.
        let s = Spectrum::symmetric(&[1.0, 3.0]).unwrap();
        let grid = Grid::new(-400.0, 20.0, 4201).unwrap();
        let st = build_state(&s, &[1.0, 3.0], 0.0, &grid).unwrap();
        assert!((st.w().first() + 8.0).abs() < 1e-9);
        assert!((st.xi().first() - 1.0).abs() < 1e-9);
        assert!(st.psi(1).first().abs() < 1e-300);
        assert!(st.lambda(1).is_err());
    }

    #[test]
    fn wrong_rate_count_is_rejected() {
        let s = Spectrum::symmetric(&[1.0, 2.0]).unwrap();
        let grid = Grid::symmetric(5.0, 0.1).unwrap();
        assert!(matches!(build_state(&s, &[1.0], 0.0, &grid), Err(Error::Spec(_))));
    }

    #[test]
    fn empty_spectrum_is_free_space() {
        let s = Spectrum::symmetric(&[]).unwrap();
        let grid = Grid::symmetric(5.0, 0.1).unwrap();
        let st = build_state(&s, &[], 0.0, &grid).unwrap();
        assert_eq!(st.u().max_abs(), 0.0);
        assert!(st.xi().values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_wavenumber_scattering_state_is_xi() {
        let s = Spectrum::symmetric(&[1.0, 2.0]).unwrap();
        let grid = Grid::symmetric(12.0, 0.01).unwrap();
        let st = build_state(&s, &[1.0, 2.0], 0.0, &grid).unwrap();
        for sign in [WaveSign::Plus, WaveSign::Minus] {
            let psi0 = scattering_state(&st, 0.0, sign);
            let diff = psi0.zip_with(&zero_energy_xi(&st), |a, b| (a - b).norm());
            assert!(diff.max_abs() < 1e-15);
        }
    }

    #[test]
    fn overlap_of_single_state_reaches_one() {
        let st = one_soliton();
        let b = overlap_inverse_b(&st).unwrap();
        assert!((b.at(st.grid().n_points() - 1)[(0, 0)] - 1.0).abs() < 1e-6);
    }
}
