//! Uniform one-dimensional grids and the finite-difference / quadrature
//! calculus used throughout the crate.
//!
//! Derivatives use fourth-order centered stencils everywhere. Points that
//! fall outside the grid are filled with the function's asymptotic value
//! (by default the edge sample), which is exact for the exponentially flat
//! tails of everything this crate samples.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalar types that can live on a grid.
pub trait Sample:
    Copy
    + Debug
    + Default
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn is_finite(self) -> bool;
    fn magnitude(self) -> f64;
}

impl Sample for f64 {
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Sample for Complex64 {
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Uniform grid `x_i = x_min + i h`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < 5 || n_points % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "n_points must be odd and >= 5, got {n_points}"
            )));
        }
        Ok(Grid { x_min, x_max, n_points })
    }

    /// Grid on `[-half_width, half_width]` with spacing no larger than `max_step`.
    pub fn symmetric(half_width: f64, max_step: f64) -> Result<Self> {
        if !(half_width > 0.0 && max_step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width and step must be positive, got {half_width}, {max_step}"
            )));
        }
        let half = (half_width / max_step).ceil() as usize;
        Grid::new(-half_width, half_width, 2 * half.max(2) + 1)
    }

    /// Default grid for a spectrum whose solitons move with rates `alphas`
    /// over times up to `t_abs_max`: half width `12/γ_min + v_max |t|`,
    /// spacing `0.01 / max(1, γ_max)`.
    pub fn for_solitons(gammas: &[f64], alphas: &[f64], t_abs_max: f64) -> Result<Self> {
        if gammas.is_empty() {
            return Grid::symmetric(12.0, 0.01);
        }
        let g_min = gammas.iter().cloned().fold(f64::INFINITY, f64::min);
        let g_max = gammas.iter().cloned().fold(0.0, f64::max);
        let v_max = gammas
            .iter()
            .zip(alphas)
            .map(|(g, a)| (a / g).abs())
            .fold(0.0, f64::max);
        Grid::symmetric(12.0 / g_min + v_max * t_abs_max.abs(), 0.01 / g_max.max(1.0))
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        // Anchor the last point exactly on x_max.
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.step()
        }
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Index of the grid point closest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.step()).round();
        i.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    pub fn sample<T: Sample>(&self, f: impl Fn(f64) -> T) -> GridFunction<T> {
        GridFunction {
            grid: *self,
            values: self.xs().map(f).collect(),
        }
    }

    pub fn zeros<T: Sample>(&self) -> GridFunction<T> {
        GridFunction {
            grid: *self,
            values: vec![T::default(); self.n_points],
        }
    }

    /// Sub-grid keeping every other point (same span, doubled spacing).
    pub fn coarsened(&self) -> Result<Self> {
        Grid::new(self.x_min, self.x_max, (self.n_points - 1) / 2 + 1)
    }
}

/// Values sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T = f64> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: Sample> GridFunction<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Range { x: grid.x(i) });
        }
        Ok(GridFunction { grid, values })
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> T {
        self.values[0]
    }

    pub fn last(&self) -> T {
        self.values[self.values.len() - 1]
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> GridFunction<U> {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with<U: Sample, V: Sample>(
        &self,
        other: &GridFunction<U>,
        f: impl Fn(T, U) -> V,
    ) -> GridFunction<V> {
        assert_eq!(self.grid, other.grid, "grid functions live on different grids");
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    /// Centered fourth-order derivative of the given order (1..=4); points
    /// beyond the grid take the edge values.
    pub fn derivative(&self, order: usize) -> Result<Self> {
        self.derivative_with_asymptotes(order, self.first(), self.last())
    }

    /// As [`GridFunction::derivative`], with explicit asymptotic values used
    /// for the points beyond each end of the grid.
    pub fn derivative_with_asymptotes(&self, order: usize, left: T, right: T) -> Result<Self> {
        self.derivative_strided(order, 1, left, right)
    }

    /// Centered derivative whose stencil samples every `stride`-th point,
    /// i.e. an effective step of `stride * h`. Wider steps trade truncation
    /// error for less roundoff amplification when derivatives are nested.
    pub fn derivative_strided(&self, order: usize, stride: usize, left: T, right: T) -> Result<Self> {
        let (coeffs, denom_pow, denom): (&[f64], i32, f64) = match order {
            1 => (&[1.0, -8.0, 0.0, 8.0, -1.0], 1, 12.0),
            2 => (&[-1.0, 16.0, -30.0, 16.0, -1.0], 2, 12.0),
            3 => (&[1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0], 3, 8.0),
            4 => (&[-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0], 4, 6.0),
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "derivative order must be 1..=4, got {order}"
                )))
            }
        };
        self.apply_stencil(order, coeffs, denom_pow, denom, stride, left, right)
    }

    /// Sixth-order centered first, second or third derivative, strided as in
    /// [`GridFunction::derivative_strided`].
    pub fn derivative_sixth_order(&self, order: usize, stride: usize, left: T, right: T) -> Result<Self> {
        let (coeffs, denom_pow, denom): (&[f64], i32, f64) = match order {
            1 => (&[-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0], 1, 60.0),
            2 => (&[2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0], 2, 180.0),
            3 => (&[-7.0, 72.0, -338.0, 488.0, 0.0, -488.0, 338.0, -72.0, 7.0], 3, 240.0),
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "sixth-order derivative order must be 1..=3, got {order}"
                )))
            }
        };
        self.apply_stencil(order, coeffs, denom_pow, denom, stride, left, right)
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_stencil(
        &self,
        order: usize,
        coeffs: &[f64],
        denom_pow: i32,
        denom: f64,
        stride: usize,
        left: T,
        right: T,
    ) -> Result<Self> {
        let stride = stride.max(1);
        let half = coeffs.len() / 2;
        let n = self.values.len();
        if n < coeffs.len() {
            return Err(Error::InvalidGrid(format!(
                "order-{order} stencil needs {} points, grid has {n}",
                coeffs.len()
            )));
        }
        let scale = 1.0 / (denom * (stride as f64 * self.grid.step()).powi(denom_pow));
        let at = |j: isize| -> T {
            if j < 0 {
                left
            } else if j as usize >= n {
                right
            } else {
                self.values[j as usize]
            }
        };
        let values = (0..n as isize)
            .map(|i| {
                let mut acc = T::default();
                for (o, &c) in coeffs.iter().enumerate() {
                    if c != 0.0 {
                        acc = acc + at(i + (o as isize - half as isize) * stride as isize) * c;
                    }
                }
                acc * scale
            })
            .collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    /// Composite Simpson integral over the whole grid.
    pub fn integral(&self) -> T {
        let h = self.grid.step();
        let n = self.values.len();
        let mut acc = self.values[0] + self.values[n - 1];
        for (i, &v) in self.values.iter().enumerate().take(n - 1).skip(1) {
            acc = acc + v * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * (h / 3.0)
    }

    /// Integral of `f` over the interval `[x_i, x_{i+1}]` from the quintic
    /// through the six nearest samples, or the cubic through four next to
    /// the ends.
    fn interval_integral(&self, i: usize) -> T {
        let f = &self.values;
        let n = f.len();
        let h = self.grid.step();
        if i >= 2 && i + 3 < n {
            let s = (f[i] + f[i + 1]) * 802.0 - (f[i - 1] + f[i + 2]) * 93.0 + (f[i - 2] + f[i + 3]) * 11.0;
            return s * (h / 1440.0);
        }
        let s = if i == 0 {
            f[0] * 9.0 + f[1] * 19.0 - f[2] * 5.0 + f[3]
        } else if i == n - 2 {
            f[n - 1] * 9.0 + f[n - 2] * 19.0 - f[n - 3] * 5.0 + f[n - 4]
        } else {
            (f[i] + f[i + 1]) * 13.0 - f[i - 1] - f[i + 2]
        };
        s * (h / 24.0)
    }

    /// `F(x_i) = tail + ∫_{x_min}^{x_i} f`; sixth order in the interior.
    pub fn cumulative_from_left(&self, tail: T) -> Self {
        let n = self.values.len();
        let mut out = Vec::with_capacity(n);
        let mut acc = tail;
        out.push(acc);
        for i in 0..n - 1 {
            acc = acc + self.interval_integral(i);
            out.push(acc);
        }
        GridFunction { grid: self.grid, values: out }
    }

    /// `F(x_i) = tail + ∫_{x_i}^{x_max} f`, accumulated from the right end.
    pub fn cumulative_from_right(&self, tail: T) -> Self {
        let n = self.values.len();
        let mut out = vec![T::default(); n];
        let mut acc = tail;
        out[n - 1] = acc;
        for i in (0..n - 1).rev() {
            acc = acc + self.interval_integral(i);
            out[i] = acc;
        }
        GridFunction { grid: self.grid, values: out }
    }

    /// Largest magnitude over indices `margin..n-margin`.
    pub fn max_abs_interior(&self, margin: usize) -> f64 {
        let n = self.values.len();
        if 2 * margin >= n {
            return 0.0;
        }
        self.values[margin..n - margin]
            .iter()
            .map(|v| v.magnitude())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_interior(0)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl<T: Sample> Add for &GridFunction<T> {
    type Output = GridFunction<T>;
    fn add(self, rhs: Self) -> GridFunction<T> {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<T: Sample> Sub for &GridFunction<T> {
    type Output = GridFunction<T>;
    fn sub(self, rhs: Self) -> GridFunction<T> {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &GridFunction<f64> {
    type Output = GridFunction<f64>;
    fn mul(self, rhs: Self) -> GridFunction<f64> {
        self.zip_with(rhs, |a, b| a * b)
    }
}

/// Boundary margin used by residual norms: five widths of the widest stencil.
pub const RESIDUAL_MARGIN: usize = 5 * 9;

#[cfg(test)]
mod tests {
    use super::*;

    fn sech2(x: f64) -> f64 {
        1.0 / x.cosh().powi(2)
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(-1.0, 1.0, 4).is_err());
        assert!(Grid::new(-1.0, 1.0, 6).is_err());
        assert!(Grid::new(1.0, -1.0, 11).is_err());
        assert!(Grid::new(-1.0, 1.0, 5).is_ok());
    }

    #[test]
    fn wide_stencil_needs_seven_points() {
        let g = Grid::new(-1.0, 1.0, 5).unwrap();
        let f = g.sample(|x| x);
        assert!(f.derivative(2).is_ok());
        assert!(matches!(f.derivative(3), Err(Error::InvalidGrid(_))));
        assert!(matches!(f.derivative(5), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn derivative_of_square_is_exact_inside() {
        let g = Grid::new(-1.0, 1.0, 201).unwrap();
        let d = g.sample(|x| x * x).derivative(1).unwrap();
        for i in 2..g.n_points() - 2 {
            assert!((d.values()[i] - 2.0 * g.x(i)).abs() < 1e-10);
        }
    }

    #[test]
    fn higher_stencils_are_exact_on_polynomials() {
        let g = Grid::new(-1.0, 1.0, 101).unwrap();
        let d3 = g.sample(|x| x.powi(3)).derivative(3).unwrap();
        let d4 = g.sample(|x| x.powi(4)).derivative(4).unwrap();
        for i in 3..g.n_points() - 3 {
            assert!((d3.values()[i] - 6.0).abs() < 1e-6, "{}", d3.values()[i]);
            assert!((d4.values()[i] - 24.0).abs() < 1e-4, "{}", d4.values()[i]);
        }
    }

    #[test]
    fn sech2_derivatives_at_origin() {
        let g = Grid::symmetric(20.0, 0.01).unwrap();
        let f = g.sample(sech2);
        let mid = g.n_points() / 2;
        assert!(f.derivative(1).unwrap().values()[mid].abs() < 1e-12);
        assert!((f.derivative(2).unwrap().values()[mid] + 2.0).abs() < 1e-7);
    }

    #[test]
    fn simpson_integrals() {
        let g = Grid::symmetric(20.0, 0.01).unwrap();
        assert_eq!(g.zeros::<f64>().integral(), 0.0);
        assert!((g.sample(sech2).integral() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn cumulative_integrals_match_antiderivative() {
        let g = Grid::symmetric(20.0, 0.01).unwrap();
        let f = g.sample(sech2);
        let left = f.cumulative_from_left(0.0);
        let right = f.cumulative_from_right(0.0);
        for (i, x) in g.xs().enumerate() {
            let from_left = x.tanh() - (-20.0f64).tanh();
            let from_right = 20.0f64.tanh() - x.tanh();
            assert!((left.values()[i] - from_left).abs() < 1e-12);
            assert!((right.values()[i] - from_right).abs() < 1e-12);
        }
    }

    #[test]
    fn cumulative_integral_exact_on_quintics() {
        let g = Grid::new(-1.0, 1.0, 21).unwrap();
        let f = g.sample(|x| x.powi(5) - 2.0 * x.powi(3) + x);
        let c = f.cumulative_from_left(0.0);
        let anti = |x: f64| x.powi(6) / 6.0 - x.powi(4) / 2.0 + x * x / 2.0;
        // End intervals use the cubic rule, so compare increments inside.
        for i in 3..18 {
            let want = anti(g.x(i + 1)) - anti(g.x(i));
            assert!((c.values()[i + 1] - c.values()[i] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn sixth_order_stencils_exact_on_sextics() {
        let g = Grid::new(-1.0, 1.0, 41).unwrap();
        let f = g.sample(|x| x.powi(6));
        let d1 = f.derivative_sixth_order(1, 1, 0.0, 0.0).unwrap();
        let d2 = f.derivative_sixth_order(2, 2, 0.0, 0.0).unwrap();
        for i in 8..33 {
            let x = g.x(i);
            assert!((d1.values()[i] - 6.0 * x.powi(5)).abs() < 1e-10);
            assert!((d2.values()[i] - 30.0 * x.powi(4)).abs() < 1e-9);
        }
        let d3 = g.sample(|x| x.powi(8)).derivative_sixth_order(3, 1, 0.0, 0.0).unwrap();
        for i in 4..37 {
            assert!((d3.values()[i] - 336.0 * g.x(i).powi(5)).abs() < 1e-8);
        }
        assert!(f.derivative_sixth_order(4, 1, 0.0, 0.0).is_err());
    }

    #[test]
    fn complex_samples_differentiate() {
        let g = Grid::symmetric(5.0, 0.01).unwrap();
        let f = g.sample(|x| Complex64::new(0.0, x).exp());
        let d2 = f.derivative(2).unwrap();
        let mid = g.n_points() / 2;
        assert!((d2.values()[mid] + f.values()[mid]).norm() < 1e-9);
    }
}
