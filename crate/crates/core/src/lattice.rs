//! Periodic lattice geometry on the unit interval.
//!
//! Site `i` (0-based) is the interval `(i/N, (i+1)/N]`; values attached to a
//! site are the constant value of a step function on it. All stencils wrap
//! around, so site `N` is site `0`. User-facing output (CSV files) numbers
//! sites from 1.
//!
//! Every operator is available as a matrix-free stencil on slices, used by
//! the integrators, and as an explicit dense matrix for brute-force checks.

use serde::Serialize;

use crate::{Error, Result};

/// Smallest lattice for which the centered stencils see two distinct
/// neighbours.
pub const MIN_SITES: usize = 3;

/// Default number of midpoint sub-points per site used by [`project`].
pub const DEFAULT_QUADRATURE_POINTS: usize = 16;

/// A step function on the periodic lattice of `N = values.len()` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_sites(values.len())?;
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::constant(n, 0.0)
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new((0..n).map(f).collect())
    }

    /// Number of sites.
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at site `i`, interpreted modulo `N`.
    pub fn at(&self, i: isize) -> f64 {
        self.values[wrap(i, self.n())]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The inner product `(1/N) Σ f_i g_i` inherited from `L²(0,1)`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s / self.n() as f64)
    }

    /// Cyclic shift: `(shift(f, k))_i = f_{i-k}`.
    pub fn shifted(&self, k: isize) -> Self {
        let n = self.n();
        Self {
            values: (0..n).map(|i| self.values[wrap(i as isize - k, n)]).collect(),
        }
    }

    /// Sitewise linear combination `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::Mismatch(format!(
                "lattice sizes {} and {}",
                self.n(),
                other.n()
            )));
        }
        Ok(())
    }

    fn map_stencil(&self, stencil: fn(&[f64], &mut [f64])) -> Self {
        let mut out = vec![0.0; self.n()];
        stencil(&self.values, &mut out);
        Self { values: out }
    }
}

pub(crate) fn check_sites(n: usize) -> Result<()> {
    if n < MIN_SITES {
        return Err(Error::domain(format!(
            "a periodic lattice needs at least {MIN_SITES} sites, got {n}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

#[inline]
fn neighbours(i: usize, n: usize) -> (usize, usize) {
    let prev = if i == 0 { n - 1 } else { i - 1 };
    let next = if i + 1 == n { 0 } else { i + 1 };
    (prev, next)
}

/// Bacterial transport on the cycle.
///
/// Only `ell`, `p_out` and `n` are stored; the bias, the advection velocity
/// `nu = b·ell/N` and the diffusion coefficient `ell/(2N²)` are always derived
/// from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportCoefficients {
    ell: f64,
    p_out: f64,
    n: usize,
}

impl TransportCoefficients {
    pub fn new(ell: f64, p_out: f64, n: usize) -> Result<Self> {
        check_sites(n)?;
        if !ell.is_finite() || ell < 0.0 {
            return Err(Error::domain(format!("transport rate must be finite and >= 0, got {ell}")));
        }
        if !(0.0..=1.0).contains(&p_out) {
            return Err(Error::domain(format!(
                "outward probability must lie in [0, 1], got {p_out}"
            )));
        }
        Ok(Self { ell, p_out, n })
    }

    /// Coefficients on an `n`-site lattice whose continuum limit has the
    /// given diffusion coefficient and advection velocity.
    pub fn from_continuum(diffusion: f64, nu: f64, n: usize) -> Result<Self> {
        check_sites(n)?;
        if !diffusion.is_finite() || diffusion < 0.0 || !nu.is_finite() {
            return Err(Error::domain(format!(
                "invalid continuum transport (diffusion {diffusion}, velocity {nu})"
            )));
        }
        let nf = n as f64;
        let ell = 2.0 * diffusion * nf * nf;
        let bias = if ell == 0.0 {
            if nu != 0.0 {
                return Err(Error::domain("advection without diffusion has no lattice transport"));
            }
            0.0
        } else {
            nu * nf / ell
        };
        if bias.abs() > 1.0 {
            return Err(Error::domain(format!(
                "lattice with {n} sites too coarse for velocity {nu} and diffusion {diffusion} (bias {bias})"
            )));
        }
        Self::new(ell, 0.5 * (1.0 + bias), n)
    }

    /// Same continuum diffusion and velocity on a lattice of `n` sites.
    pub fn at_resolution(&self, n: usize) -> Result<Self> {
        if n == self.n {
            return Ok(*self);
        }
        Self::from_continuum(self.diffusion(), self.nu(), n)
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn p_out(&self) -> f64 {
        self.p_out
    }

    pub fn p_in(&self) -> f64 {
        1.0 - self.p_out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `b = P_out − P_in`.
    pub fn bias(&self) -> f64 {
        2.0 * self.p_out - 1.0
    }

    /// Advection velocity `b·ell/N`.
    pub fn nu(&self) -> f64 {
        self.bias() * self.ell / self.n as f64
    }

    /// Diffusion coefficient `ell/(2N²)`.
    pub fn diffusion(&self) -> f64 {
        let nf = self.n as f64;
        self.ell / (2.0 * nf * nf)
    }
}

/// Per-site projection `f_i = N ∫_{J_i} f`, by the composite midpoint rule
/// with `quadrature_points` sub-points per site.
pub fn project(f: impl Fn(f64) -> f64, n: usize, quadrature_points: usize) -> Result<LatticeField> {
    check_sites(n)?;
    if quadrature_points == 0 {
        return Err(Error::domain("projection needs at least one quadrature point"));
    }
    let q = quadrature_points as f64;
    let nf = n as f64;
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        // accumulate deviations from the first sample so constants come back exactly
        let mut first = None;
        let mut acc = 0.0;
        for k in 0..quadrature_points {
            let x = (i as f64 + (k as f64 + 0.5) / q) / nf;
            let y = f(x);
            if !y.is_finite() {
                return Err(Error::domain(format!("projected function is not finite at x = {x}")));
            }
            let y0 = *first.get_or_insert(y);
            acc += y - y0;
        }
        values.push(first.unwrap_or(0.0) + acc / q);
    }
    LatticeField::new(values)
}

/// Averages consecutive blocks of a fine field onto a coarser lattice.
/// This is the projection of a step function on `fine.n()` sites onto the
/// coarse step functions.
pub fn restrict(fine: &LatticeField, coarse_n: usize) -> Result<LatticeField> {
    check_sites(coarse_n)?;
    if fine.n() % coarse_n != 0 {
        return Err(Error::Mismatch(format!(
            "cannot restrict {} sites onto {coarse_n}",
            fine.n()
        )));
    }
    let r = fine.n() / coarse_n;
    LatticeField::from_fn(coarse_n, |i| {
        fine.values()[i * r..(i + 1) * r].iter().sum::<f64>() / r as f64
    })
}

pub fn grad_centered_into(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let half = n as f64 / 2.0;
    for i in 0..n {
        let (p, q) = neighbours(i, n);
        out[i] = half * (f[q] - f[p]);
    }
}

pub fn grad_plus_into(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let nf = n as f64;
    for i in 0..n {
        let (_, q) = neighbours(i, n);
        out[i] = nf * (f[q] - f[i]);
    }
}

pub fn grad_minus_into(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let nf = n as f64;
    for i in 0..n {
        let (p, _) = neighbours(i, n);
        out[i] = nf * (f[i] - f[p]);
    }
}

pub fn laplace_into(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let n2 = (n * n) as f64;
    for i in 0..n {
        let (p, q) = neighbours(i, n);
        out[i] = n2 * (f[q] - 2.0 * f[i] + f[p]);
    }
}

/// `out = A_N f = −nu ∇_N f + D Δ_N f`, sitewise.
pub fn transport_apply_into(f: &[f64], tc: &TransportCoefficients, out: &mut [f64]) {
    let n = f.len();
    let nf = n as f64;
    let adv = tc.nu() * nf / 2.0;
    let dif = tc.diffusion() * nf * nf;
    for i in 0..n {
        let (p, q) = neighbours(i, n);
        out[i] = -adv * (f[q] - f[p]) + dif * (f[q] - 2.0 * f[i] + f[p]);
    }
}

pub fn grad_centered(f: &LatticeField) -> LatticeField {
    f.map_stencil(grad_centered_into)
}

pub fn grad_plus(f: &LatticeField) -> LatticeField {
    f.map_stencil(grad_plus_into)
}

pub fn grad_minus(f: &LatticeField) -> LatticeField {
    f.map_stencil(grad_minus_into)
}

pub fn laplace(f: &LatticeField) -> LatticeField {
    f.map_stencil(laplace_into)
}

pub fn transport_apply(f: &LatticeField, tc: &TransportCoefficients) -> Result<LatticeField> {
    if f.n() != tc.n() {
        return Err(Error::Mismatch(format!(
            "field has {} sites, transport coefficients are for {}",
            f.n(),
            tc.n()
        )));
    }
    let mut out = vec![0.0; f.n()];
    transport_apply_into(f.values(), tc, &mut out);
    LatticeField::new(out)
}

/// Probability that a propagule leaving site `i` lands on site `j`.
///
/// On the cycle every node has one inward and one outward edge, so the
/// normalising denominator `P_out + P_in` equals one.
pub fn transition_probabilities(tc: &TransportCoefficients, i: usize, j: usize) -> f64 {
    let n = tc.n();
    let (i, j) = (i % n, j % n);
    let (prev, next) = neighbours(i, n);
    if j == next {
        tc.p_out()
    } else if j == prev {
        tc.p_in()
    } else {
        0.0
    }
}

/// Dense row-major square matrix, used to check stencils by brute force.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] += v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).iter().zip(f).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for r in 0..self.n {
            for c in 0..self.n {
                t.data[c * self.n + r] = self.get(r, c);
            }
        }
        t
    }

    /// Builds the matrix of a three-point periodic stencil with weights
    /// `(left, centre, right)` applied to `(f_{i−1}, f_i, f_{i+1})`.
    fn three_point(n: usize, left: f64, centre: f64, right: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            let (p, q) = neighbours(i, n);
            m.add(i, p, left);
            m.add(i, i, centre);
            m.add(i, q, right);
        }
        m
    }
}

pub fn grad_centered_matrix(n: usize) -> Result<Matrix> {
    check_sites(n)?;
    let h = n as f64 / 2.0;
    Ok(Matrix::three_point(n, -h, 0.0, h))
}

pub fn grad_plus_matrix(n: usize) -> Result<Matrix> {
    check_sites(n)?;
    let nf = n as f64;
    Ok(Matrix::three_point(n, 0.0, -nf, nf))
}

pub fn grad_minus_matrix(n: usize) -> Result<Matrix> {
    check_sites(n)?;
    let nf = n as f64;
    Ok(Matrix::three_point(n, -nf, nf, 0.0))
}

pub fn laplace_matrix(n: usize) -> Result<Matrix> {
    check_sites(n)?;
    let n2 = (n * n) as f64;
    Ok(Matrix::three_point(n, n2, -2.0 * n2, n2))
}

pub fn transport_matrix(tc: &TransportCoefficients) -> Matrix {
    let n = tc.n();
    let nf = n as f64;
    let adv = tc.nu() * nf / 2.0;
    let dif = tc.diffusion() * nf * nf;
    Matrix::three_point(n, adv + dif, -2.0 * dif, -adv + dif)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn field(v: &[f64]) -> LatticeField {
        LatticeField::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_small_lattices() {
        assert!(LatticeField::new(vec![1.0, 2.0]).is_err());
        assert!(TransportCoefficients::new(1.0, 0.5, 2).is_err());
        assert!(LatticeField::new(vec![0.0; 3]).is_ok());
    }

    #[test]
    fn centered_gradient_by_hand() {
        let g = grad_centered(&field(&[0.0, 1.0, 0.0, -1.0]));
        assert_eq!(g.values(), &[4.0, 0.0, -4.0, 0.0]);
    }

    #[test]
    fn constants_are_annihilated() {
        let c = LatticeField::constant(7, 2.5).unwrap();
        let tc = TransportCoefficients::new(1.3, 0.8, 7).unwrap();
        for g in [
            grad_centered(&c),
            grad_plus(&c),
            grad_minus(&c),
            laplace(&c),
            transport_apply(&c, &tc).unwrap(),
        ] {
            assert!(g.values().iter().all(|&v| v == 0.0), "{g:?}");
        }
    }

    #[test]
    fn projection_of_step_functions_is_identity() {
        let n = 5;
        let steps = [0.3, 1.2, -0.4, 2.0, 0.0];
        let f = |x: f64| steps[((x * n as f64).floor() as usize).min(n - 1)];
        let p = project(f, n, DEFAULT_QUADRATURE_POINTS).unwrap();
        assert_eq!(p.values(), &steps);
        let c = project(|_| 0.7, 9, 3).unwrap();
        assert!(c.values().iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn projection_of_sine_matches_antiderivative() {
        let n = 4;
        let p = project(|x| (2.0 * std::f64::consts::PI * x).sin(), n, 4096).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        for i in 0..n {
            // 1-based site i+1 covers (i/4, (i+1)/4]
            let exact = (n as f64 / tau)
                * ((tau * i as f64 / n as f64).cos() - (tau * (i + 1) as f64 / n as f64).cos());
            assert_relative_eq!(p.values()[i], exact, epsilon = 1e-7);
        }
    }

    #[test]
    fn projection_rejects_non_finite_values() {
        assert!(project(|x| 1.0 / (x - 0.4375), 4, 2).is_err());
        assert!(project(|_| f64::NAN, 4, 2).is_err());
        assert!(project(|_| 1.0, 4, 0).is_err());
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let m = laplace_matrix(6).unwrap();
        for r in 0..6 {
            assert_eq!(m.row(r).iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn transport_with_symmetric_probabilities_is_pure_diffusion() {
        let tc = TransportCoefficients::new(2.0, 0.5, 8).unwrap();
        assert_eq!(tc.nu(), 0.0);
        let f = LatticeField::from_fn(8, |i| (i as f64).sin()).unwrap();
        let a = transport_apply(&f, &tc).unwrap();
        let d = laplace(&f);
        for (x, y) in a.values().iter().zip(d.values()) {
            assert_relative_eq!(*x, tc.diffusion() * y, epsilon = 1e-14);
        }
    }

    #[test]
    fn transition_probabilities_on_the_cycle() {
        let tc = TransportCoefficients::new(1.0, 0.7, 5).unwrap();
        assert_eq!(transition_probabilities(&tc, 2, 3), 0.7);
        assert_relative_eq!(transition_probabilities(&tc, 2, 1), 0.3, epsilon = 1e-15);
        assert_eq!(transition_probabilities(&tc, 4, 0), 0.7);
        assert_relative_eq!(transition_probabilities(&tc, 0, 4), 0.3, epsilon = 1e-15);
        for i in 0..5 {
            let row: f64 = (0..5).map(|j| transition_probabilities(&tc, i, j)).sum();
            assert_relative_eq!(row, 1.0, epsilon = 1e-15);
            assert_eq!(transition_probabilities(&tc, i, i), 0.0);
            assert_eq!(transition_probabilities(&tc, i, i + 2), 0.0);
        }
        let down = TransportCoefficients::new(1.0, 1.0, 5).unwrap();
        assert_eq!(transition_probabilities(&down, 1, 0), 0.0);
        assert_eq!(transition_probabilities(&down, 1, 2), 1.0);
    }

    #[test]
    fn continuum_round_trip() {
        let tc = TransportCoefficients::new(1.5, 0.7, 8).unwrap();
        let fine = tc.at_resolution(32).unwrap();
        assert_relative_eq!(fine.diffusion(), tc.diffusion(), max_relative = 1e-14);
        assert_relative_eq!(fine.nu(), tc.nu(), max_relative = 1e-14);
        assert_relative_eq!(fine.ell(), 1.5 * 16.0, max_relative = 1e-14);
        assert!(TransportCoefficients::from_continuum(0.001, 1.0, 4).is_err());
    }

    #[test]
    fn laplacian_spectrum_by_brute_force() {
        // periodic Fourier modes are eigenvectors with eigenvalue 2N²(cos(2πm/N) − 1)
        for n in 3..=32 {
            let m = laplace_matrix(n).unwrap();
            for mode in 0..n {
                let theta = 2.0 * std::f64::consts::PI * mode as f64 / n as f64;
                let re: Vec<f64> = (0..n).map(|i| (theta * i as f64).cos()).collect();
                let im: Vec<f64> = (0..n).map(|i| (theta * i as f64).sin()).collect();
                let lambda = 2.0 * (n * n) as f64 * (theta.cos() - 1.0);
                let (are, aim) = (m.apply(&re), m.apply(&im));
                let scale = (n * n) as f64;
                for i in 0..n {
                    assert!((are[i] - lambda * re[i]).abs() <= 1e-10 * scale);
                    assert!((aim[i] - lambda * im[i]).abs() <= 1e-10 * scale);
                }
            }
        }
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        (3usize..40).prop_flat_map(|n| prop::collection::vec(-10.0f64..10.0, n))
    }

    fn pair_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (3usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn centered_gradient_is_skew_adjoint((f, g) in pair_strategy()) {
            let (f, g) = (field(&f), field(&g));
            let lhs = grad_centered(&f).inner(&g).unwrap() + f.inner(&grad_centered(&g)).unwrap();
            let scale = f.n() as f64 * f.sup_norm().max(1.0) * g.sup_norm().max(1.0);
            prop_assert!(lhs.abs() <= 1e-12 * scale);
        }

        #[test]
        fn laplacian_is_symmetric_negative((f, g) in pair_strategy()) {
            let (f, g) = (field(&f), field(&g));
            let n2 = (f.n() * f.n()) as f64;
            let a = laplace(&f).inner(&g).unwrap();
            let b = f.inner(&laplace(&g)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * n2 * 100.0);
            prop_assert!(laplace(&f).inner(&f).unwrap() <= 1e-12 * n2);
        }

        #[test]
        fn laplacian_factors_through_one_sided_gradients(f in vec_strategy()) {
            let f = field(&f);
            let lap = laplace(&f);
            let pm = grad_plus(&grad_minus(&f));
            let mp = grad_minus(&grad_plus(&f));
            let scale = lap.sup_norm().max((f.n() * f.n()) as f64 * f.sup_norm()).max(1.0);
            prop_assert!(lap.max_abs_diff(&pm).unwrap() <= 1e-12 * scale);
            prop_assert!(lap.max_abs_diff(&mp).unwrap() <= 1e-12 * scale);
        }

        #[test]
        fn transport_matches_event_form(f in vec_strategy(), ell in 0.0f64..5.0, p_out in 0.0f64..=1.0) {
            // A_N f at site i = ell (f_{i-1} − f_i) P_out + ell (f_{i+1} − f_i) P_in
            let f = field(&f);
            let tc = TransportCoefficients::new(ell, p_out, f.n()).unwrap();
            let a = transport_apply(&f, &tc).unwrap();
            for i in 0..f.n() as isize {
                let ev = ell * (f.at(i - 1) - f.at(i)) * tc.p_out() + ell * (f.at(i + 1) - f.at(i)) * tc.p_in();
                prop_assert!((a.at(i) - ev).abs() <= 1e-12 * (1.0 + ell * f.sup_norm()));
            }
            let m = transport_matrix(&tc).apply(f.values());
            for (x, y) in a.values().iter().zip(&m) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + ell * f.sup_norm()));
            }
        }

        #[test]
        fn operators_commute_with_shifts(f in vec_strategy(), k in -50isize..50) {
            let f = field(&f);
            let tc = TransportCoefficients::new(0.9, 0.3, f.n()).unwrap();
            let ops: [&dyn Fn(&LatticeField) -> LatticeField; 5] = [
                &grad_centered, &grad_plus, &grad_minus, &laplace,
                &|g| transport_apply(g, &tc).unwrap(),
            ];
            for op in ops {
                let a = op(&f.shifted(k));
                let b = op(&f).shifted(k);
                prop_assert!(a.max_abs_diff(&b).unwrap() <= 1e-9);
            }
        }

        #[test]
        fn projection_is_a_sup_contraction(a in -3.0f64..3.0, b in -3.0f64..3.0, m in 1u32..6, n in 3usize..20) {
            let f = move |x: f64| a * (2.0 * std::f64::consts::PI * m as f64 * x).sin() + b * (x * x - x);
            let sup = (0..=20_000).map(|k| f(k as f64 / 20_000.0).abs()).fold(0.0, f64::max);
            let p = project(f, n, DEFAULT_QUADRATURE_POINTS).unwrap();
            prop_assert!(p.sup_norm() <= sup + 1e-9);
        }

        #[test]
        fn stencils_match_matrices(f in vec_strategy()) {
            let f = field(&f);
            let n = f.n();
            let pairs = [
                (grad_centered(&f), grad_centered_matrix(n).unwrap()),
                (grad_plus(&f), grad_plus_matrix(n).unwrap()),
                (grad_minus(&f), grad_minus_matrix(n).unwrap()),
                (laplace(&f), laplace_matrix(n).unwrap()),
            ];
            for (s, m) in pairs {
                let mv = m.apply(f.values());
                for (x, y) in s.values().iter().zip(&mv) {
                    prop_assert!((x - y).abs() <= 1e-12 * (n * n) as f64 * f.sup_norm().max(1.0));
                }
            }
            let g = grad_centered_matrix(n).unwrap();
            let gt = g.transpose();
            for r in 0..n {
                for c in 0..n {
                    prop_assert_eq!(g.get(r, c), -gt.get(r, c));
                }
            }
        }
    }
}
