//! Independent checks on a sampled potential. Nothing here looks at how the
//! potential was built: only the grid and the samples are used.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Second-order finite-difference Hamiltonian `-∂² + U` (mass 1/2, ħ = 1)
/// with Dirichlet walls just outside the grid.
#[derive(Debug, Clone)]
pub struct DiscreteHamiltonian {
    grid: Grid,
    diagonal: Vec<f64>,
    off_diagonal: f64,
}

impl DiscreteHamiltonian {
    pub fn new(potential: &GridFunction) -> Self {
        let h = potential.grid().step();
        let kinetic = 1.0 / (h * h);
        DiscreteHamiltonian {
            grid: *potential.grid(),
            diagonal: potential.values().iter().map(|u| 2.0 * kinetic + u).collect(),
            off_diagonal: -kinetic,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn off_diagonal(&self) -> f64 {
        self.off_diagonal
    }

    /// Number of eigenvalues strictly below `e` (Sturm sequence count).
    pub fn count_below(&self, e: f64) -> usize {
        let b2 = self.off_diagonal * self.off_diagonal;
        let mut count = 0;
        let mut d = 1.0;
        for (i, &a) in self.diagonal.iter().enumerate() {
            d = if i == 0 { a - e } else { a - e - b2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (a.abs() + e.abs()).max(1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th eigenvalue in ascending order, by bisection.
    pub fn eigenvalue(&self, index: usize) -> f64 {
        let radius = 2.0 * self.off_diagonal.abs();
        let mut lo = self.diagonal.iter().cloned().fold(f64::INFINITY, f64::min) - radius;
        let mut hi = self.diagonal.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + radius;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Lowest eigenvalues of the discrete Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSpectrum {
    /// Ascending; `min(count, n_points)` entries.
    pub energies: Vec<f64>,
    /// How many eigenvalues are negative.
    pub negative_count: usize,
}

impl BoundSpectrum {
    pub fn bound_energies(&self) -> &[f64] {
        &self.energies[..self.negative_count.min(self.energies.len())]
    }
}

pub fn schrodinger_spectrum(potential: &GridFunction, count: usize) -> BoundSpectrum {
    let h = DiscreteHamiltonian::new(potential);
    let count = count.min(potential.len());
    BoundSpectrum {
        energies: (0..count).map(|i| h.eigenvalue(i)).collect(),
        negative_count: h.count_below(0.0),
    }
}

/// Reflection and transmission amplitudes at wavenumber `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringReport {
    pub k: f64,
    pub r: Complex64,
    pub t: Complex64,
}

impl ScatteringReport {
    /// `|R|² + |T|² - 1`.
    pub fn flux_defect(&self) -> f64 {
        self.r.norm_sqr() + self.t.norm_sqr() - 1.0
    }
}

/// Largest potential magnitude tolerated at the grid ends.
pub const END_DECAY_LIMIT: f64 = 1e-12;

/// Integrate `ψ'' = (U - k²) ψ` with Numerov's method from a pure wave
/// `e^{iqx}` at `x_min` and decompose the result as `A e^{iqx} + B e^{-iqx}`
/// at `x_max`; `R = B/A`, `T = 1/A`. `q` is the wavenumber of the discrete
/// free equation, so a vanishing potential gives `R = 0` exactly.
pub fn reflection_coefficient(potential: &GridFunction, k: f64) -> Result<ScatteringReport> {
    let grid = potential.grid();
    let h = grid.step();
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Spec(format!("wavenumber must be positive, got {k}")));
    }
    if k * h > 0.1 {
        return Err(Error::InvalidGrid(format!(
            "k h = {} exceeds 0.1; refine the grid",
            k * h
        )));
    }
    let u = potential.values();
    let n = u.len();
    for i in [0, n - 1] {
        if u[i].abs() > END_DECAY_LIMIT {
            return Err(Error::Domain { x: grid.x(i), value: u[i].abs() });
        }
    }

    let c = h * h / 12.0;
    let q = ((1.0 - 5.0 * c * k * k) / (1.0 + c * k * k)).acos() / h;
    let wave = |x: f64, s: f64| Complex64::new(0.0, s * q * x).exp();

    let f = |i: usize| u[i] - k * k;
    let mut prev = wave(grid.x(0), 1.0);
    let mut cur = wave(grid.x(1), 1.0);
    for i in 1..n - 1 {
        let next = (cur * (2.0 * (1.0 + 5.0 * c * f(i))) - prev * (1.0 - c * f(i - 1)))
            / (1.0 - c * f(i + 1));
        prev = cur;
        cur = next;
    }
    if !(cur.re.is_finite() && cur.im.is_finite()) {
        return Err(Error::Numeric("scattering integration overflowed".into()));
    }

    // Solve [e^{iqx} e^{-iqx}] [A B]ᵀ = ψ at the last two points.
    let (x0, x1) = (grid.x(n - 2), grid.x(n - 1));
    let (p0, m0, p1, m1) = (wave(x0, 1.0), wave(x0, -1.0), wave(x1, 1.0), wave(x1, -1.0));
    let det = p0 * m1 - m0 * p1;
    let a = (prev * m1 - m0 * cur) / det;
    let b = (p0 * cur - prev * p1) / det;
    Ok(ScatteringReport { k, r: b / a, t: Complex64::new(1.0, 0.0) / a })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech2_well(grid: &Grid) -> GridFunction {
        grid.sample(|x| -2.0 / x.cosh().powi(2))
    }

    #[test]
    fn hamiltonian_layout() {
        let g = Grid::new(-1.0, 1.0, 5).unwrap();
        let h = DiscreteHamiltonian::new(&g.sample(|x| x));
        assert_eq!(h.off_diagonal(), -4.0);
        assert_eq!(h.diagonal()[2], 8.0);
    }

    #[test]
    fn sech2_ground_state() {
        let g = Grid::symmetric(20.0, 0.005).unwrap();
        let spec = schrodinger_spectrum(&sech2_well(&g), 2);
        assert_eq!(spec.negative_count, 1);
        assert!((spec.energies[0] + 1.0).abs() < 1e-4, "{:?}", spec);
        assert!(spec.energies[1] > 0.0);
        assert_eq!(spec.bound_energies().len(), 1);
    }

    #[test]
    fn free_particle_has_no_bound_states() {
        let g = Grid::symmetric(10.0, 0.01).unwrap();
        let spec = schrodinger_spectrum(&g.zeros(), 3);
        assert_eq!(spec.negative_count, 0);
        assert!(spec.energies.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn eigenvalue_error_is_second_order() {
        let fine = Grid::symmetric(20.0, 0.01).unwrap();
        let coarse = Grid::symmetric(20.0, 0.02).unwrap();
        let e_fine = schrodinger_spectrum(&sech2_well(&fine), 1).energies[0] + 1.0;
        let e_coarse = schrodinger_spectrum(&sech2_well(&coarse), 1).energies[0] + 1.0;
        let ratio = e_coarse / e_fine;
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn free_space_is_exactly_reflectionless() {
        let g = Grid::symmetric(10.0, 0.01).unwrap();
        let rep = reflection_coefficient(&g.zeros(), 1.0).unwrap();
        assert!(rep.r.norm() < 1e-12);
        assert!((rep.t.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sech2_is_reflectionless() {
        let g = Grid::symmetric(20.0, 0.005).unwrap();
        for k in [0.5, 1.0, 2.0] {
            let rep = reflection_coefficient(&sech2_well(&g), k).unwrap();
            assert!(rep.r.norm() < 1e-6, "k={k} |R|={}", rep.r.norm());
            assert!(rep.flux_defect().abs() < 1e-6);
        }
    }

    #[test]
    fn square_well_reflects() {
        let g = Grid::symmetric(10.0, 0.005).unwrap();
        let well = g.sample(|x| if x.abs() < 1.0 { -1.0 } else { 0.0 });
        let rep = reflection_coefficient(&well, 1.0).unwrap();
        // Analytic: |R|² = V² sin²(2aq) / (V² sin²(2aq) + 4k²q²), q = √2, a = 1.
        let q = 2f64.sqrt();
        let s2 = (2.0 * q).sin().powi(2);
        let exact = (s2 / (s2 + 4.0 * q * q)).sqrt();
        assert!(rep.r.norm() > 1e-3);
        assert!((rep.r.norm() - exact).abs() < 1e-2, "{} vs {exact}", rep.r.norm());
        assert!(rep.flux_defect().abs() < 1e-6);
    }

    #[test]
    fn undecayed_potential_is_rejected() {
        let g = Grid::symmetric(3.0, 0.01).unwrap();
        assert!(matches!(
            reflection_coefficient(&sech2_well(&g), 1.0),
            Err(Error::Domain { .. })
        ));
    }
}
