//! Riemann theta functions with characteristics.
//!
//! `theta_a(z, tau) = sum_n exp(pi i (n+a')^T tau (n+a') + 2 pi i (n+a')^T (z+a''))`.
//!
//! Every evaluation first moves `z` to the reduced cell `z0 = tau x0 + y0`,
//! `x0, y0 in [-1/2, 1/2)^g`, sums there, and restores the value through the
//! functional equation.

mod lattice;
mod period;
mod symplectic;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::char_algebra::Characteristic;
use crate::error::{Error, Result};
use lattice::{truncation_radius, Bins, Form, LatticeSum, MAXG};

pub use period::{PeriodMatrix, TauJson, Tolerance, MAX_THETA_GENUS};
pub use symplectic::{automorphy_det, basis_change, siegel_reduce, symplectic_apply, SymplecticMatrix, MAX_CONDITION};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// `z = z0 + tau m_top + m_bottom` with `z0 = tau x0 + y0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedPoint {
    pub z0: Vec<C>,
    pub m_top: Vec<i64>,
    pub m_bottom: Vec<i64>,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
}

/// Fixed-size form of [`ReducedPoint`] used on hot paths.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Cell {
    pub g: usize,
    pub z0: [C; MAXG],
    pub x0: [f64; MAXG],
    pub m_top: [i64; MAXG],
    pub m_bottom: [i64; MAXG],
}

impl Cell {
    fn from_xy(tau: &PeriodMatrix, x: &[f64], y: &[f64]) -> Cell {
        let g = tau.genus();
        let mut c = Cell { g, z0: [ZERO; MAXG], x0: [0.0; MAXG], m_top: [0; MAXG], m_bottom: [0; MAXG] };
        let mut y0 = [0.0; MAXG];
        for i in 0..g {
            let mt = (x[i] + 0.5).floor();
            let mb = (y[i] + 0.5).floor();
            c.m_top[i] = mt as i64;
            c.m_bottom[i] = mb as i64;
            c.x0[i] = x[i] - mt;
            y0[i] = y[i] - mb;
        }
        let t = tau.tau();
        for i in 0..g {
            let mut s = C::new(y0[i], 0.0);
            for j in 0..g {
                s += t[(i, j)] * c.x0[j];
            }
            c.z0[i] = s;
        }
        c
    }

    fn of_z(tau: &PeriodMatrix, z: &[C]) -> Cell {
        let g = tau.genus();
        let mut x = [0.0; MAXG];
        let mut y = [0.0; MAXG];
        let yi = tau.im_inv();
        for i in 0..g {
            x[i] = (0..g).map(|j| yi[(i, j)] * z[j].im).sum();
        }
        for i in 0..g {
            y[i] = z[i].re - (0..g).map(|j| tau.re()[(i, j)] * x[j]).sum::<f64>();
        }
        let mut c = Cell::from_xy(tau, &x[..g], &y[..g]);
        // Recompute z0 by subtraction so that z = z0 + tau m' + m'' to rounding.
        let t = tau.tau();
        for i in 0..g {
            let mut s = z[i] - c.m_bottom[i] as f64;
            for j in 0..g {
                s -= t[(i, j)] * c.m_top[j] as f64;
            }
            c.z0[i] = s;
        }
        c
    }

    fn to_public(self, tau: &PeriodMatrix) -> ReducedPoint {
        let g = self.g;
        let y0 = (0..g)
            .map(|i| self.z0[i].re - (0..g).map(|j| tau.re()[(i, j)] * self.x0[j]).sum::<f64>())
            .collect();
        ReducedPoint {
            z0: self.z0[..g].to_vec(),
            m_top: self.m_top[..g].to_vec(),
            m_bottom: self.m_bottom[..g].to_vec(),
            x0: self.x0[..g].to_vec(),
            y0,
        }
    }

    /// `w = z0 + a''`.
    fn shifted(&self, a: &Characteristic) -> [C; MAXG] {
        let mut w = self.z0;
        for i in 0..self.g {
            w[i] += 0.5 * a.bottom_bit(i) as f64;
        }
        w
    }
}

fn check_dim(tau: &PeriodMatrix, z: &[C]) -> Result<()> {
    if z.len() != tau.genus() {
        return Err(Error::DimensionMismatch { expected: tau.genus(), got: z.len() });
    }
    Ok(())
}

fn check_char(tau: &PeriodMatrix, a: &Characteristic) -> Result<()> {
    if a.genus() != tau.genus() {
        return Err(Error::DimensionMismatch { expected: tau.genus(), got: a.genus() });
    }
    Ok(())
}

pub fn reduce_point(tau: &PeriodMatrix, z: &[C]) -> Result<ReducedPoint> {
    check_dim(tau, z)?;
    Ok(Cell::of_z(tau, z).to_public(tau))
}

/// `tau x + y`.
pub fn torus_point(tau: &PeriodMatrix, x: &[f64], y: &[f64]) -> Vec<C> {
    let g = tau.genus();
    (0..g)
        .map(|i| C::new(y[i], 0.0) + (0..g).map(|j| tau.tau()[(i, j)] * x[j]).sum::<C>())
        .collect()
}

/// `e_m(z, tau) = exp(-pi i m'^T tau m' - 2 pi i m'^T z)`.
pub fn e_factor(m_top: &[i64], _m_bottom: &[i64], z: &[C], tau: &PeriodMatrix) -> C {
    let g = tau.genus();
    let m: Vec<f64> = m_top.iter().map(|&v| v as f64).collect();
    let mut e = ZERO;
    for i in 0..g {
        for j in 0..g {
            e += tau.tau()[(i, j)] * (m[i] * m[j]);
        }
        e += z[i] * (2.0 * m[i]);
    }
    (-C::i() * PI * e).exp()
}

/// `eta_a(z, tau) = exp(-pi i a'^T tau a' - 2 pi i a'^T (z + a''))`.
pub fn eta_factor(a: &Characteristic, z: &[C], tau: &PeriodMatrix) -> C {
    let g = tau.genus();
    let (at, ab) = (a.top_half(), a.bottom_half());
    let mut e = ZERO;
    for i in 0..g {
        for j in 0..g {
            e += tau.tau()[(i, j)] * (at[i] * at[j]);
        }
        e += (z[i] + ab[i]) * (2.0 * at[i]);
    }
    (-C::i() * PI * e).exp()
}

/// `sqrt(((a, m))) = exp(2 pi i (a'^T m'' - m'^T a''))`, exactly.
pub fn sqrt_pairing_sign(a: &Characteristic, m_top: &[i64], m_bottom: &[i64]) -> i8 {
    let s: i64 = (0..a.genus())
        .map(|i| a.top_bit(i) as i64 * m_bottom[i] + m_top[i] * a.bottom_bit(i) as i64)
        .sum();
    if s.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Summation radius used for the tolerance and `tau`.
pub fn truncation_radius_for(tau: &PeriodMatrix, tol: Tolerance) -> f64 {
    truncation_radius(tol.eps(), tau.lambda_min())
}

pub fn theta_char(a: &Characteristic, z: &[C], tau: &PeriodMatrix, tol: Tolerance) -> Result<C> {
    theta_char_with_radius(a, z, tau, truncation_radius_for(tau, tol))
}

/// [`theta_char`] with an explicit summation radius.
pub fn theta_char_with_radius(a: &Characteristic, z: &[C], tau: &PeriodMatrix, radius: f64) -> Result<C> {
    check_dim(tau, z)?;
    check_char(tau, a)?;
    let cell = Cell::of_z(tau, z);
    let form = Form::new(tau, 1.0);
    let sum = LatticeSum::new(&form, &a.top_half(), radius, None);
    let bins = sum.sum(&cell.shifted(a), &cell.x0);
    let v: C = bins[..1 << tau.genus()].iter().sum();
    Ok(restore(a, &cell, tau, v))
}

/// Value at `z` from the value at the reduced point.
fn restore(a: &Characteristic, cell: &Cell, tau: &PeriodMatrix, v0: C) -> C {
    let g = cell.g;
    if cell.m_top[..g].iter().all(|&m| m == 0) && cell.m_bottom[..g].iter().all(|&m| m == 0) {
        return v0;
    }
    let s = sqrt_pairing_sign(a, &cell.m_top[..g], &cell.m_bottom[..g]) as f64;
    v0 * s * e_factor(&cell.m_top[..g], &cell.m_bottom[..g], &cell.z0[..g], tau)
}

/// `theta_a(0, tau)` for every even `a`.
pub fn theta_null_table(tau: &PeriodMatrix, tol: Tolerance) -> Result<BTreeMap<Characteristic, C>> {
    let ev = ThetaEvaluator::new(tau, tol);
    let z = vec![ZERO; tau.genus()];
    let cell = Cell::of_z(tau, &z);
    Ok(Characteristic::all(tau.genus())
        .filter(|a| a.is_even())
        .map(|a| (a, ev.theta_at_cell(&a, &cell)))
        .collect())
}

/// `||P||(z, tau) = exp(-pi Im(z)^T Y^{-1} Im(z))`.
pub fn p_norm(z: &[C], tau: &PeriodMatrix) -> f64 {
    log_p_norm(z, tau).exp()
}

pub fn log_p_norm(z: &[C], tau: &PeriodMatrix) -> f64 {
    let g = tau.genus();
    let yi = tau.im_inv();
    let mut s = 0.0;
    for i in 0..g {
        for j in 0..g {
            s += z[i].im * yi[(i, j)] * z[j].im;
        }
    }
    -PI * s
}

/// `(det Y)^{1/4} ||P||(z) |theta_a(z)|`.
pub fn norm_theta(a: &Characteristic, z: &[C], tau: &PeriodMatrix, tol: Tolerance) -> Result<f64> {
    check_dim(tau, z)?;
    let cell = Cell::of_z(tau, z);
    let v = theta_char(a, &cell.z0[..tau.genus()], tau, tol)?;
    Ok(tau.det_im().powf(0.25) * p_norm(&cell.z0[..tau.genus()], tau) * v.norm())
}

/// Repeated evaluation at one `tau`: tabulated sums for every top
/// characteristic and for the second-order basis.
#[derive(Clone, Debug)]
pub struct ThetaEvaluator {
    tau: PeriodMatrix,
    tol: Tolerance,
    tops: Vec<LatticeSum>,
    basis: LatticeSum,
    basis_null: Bins,
}

impl ThetaEvaluator {
    pub fn new(tau: &PeriodMatrix, tol: Tolerance) -> Self {
        let g = tau.genus();
        let form = Form::new(tau, 1.0);
        let radius = truncation_radius(tol.eps(), form.lambda_min);
        let tops = (0..1u32 << g)
            .map(|t| {
                let c: Vec<f64> = (0..g).map(|i| 0.5 * ((t >> (g - 1 - i)) & 1) as f64).collect();
                LatticeSum::new(&form, &c, radius, Some(0.5))
            })
            .collect();
        let half = Form::new(tau, 0.5);
        let basis = LatticeSum::new(&half, &[0.0; MAXG], truncation_radius(tol.eps(), half.lambda_min), Some(1.0));
        let basis_null = basis.sum(&[ZERO; MAXG], &[0.0; MAXG]);
        Self { tau: tau.clone(), tol, tops, basis, basis_null }
    }

    pub fn tau(&self) -> &PeriodMatrix {
        &self.tau
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn is_tabulated(&self) -> bool {
        self.basis.is_tabulated() && self.tops.iter().all(|t| t.is_tabulated())
    }

    pub(crate) fn cell(&self, z: &[C]) -> Cell {
        Cell::of_z(&self.tau, z)
    }

    pub(crate) fn cell_xy(&self, x: &[f64], y: &[f64]) -> Cell {
        Cell::from_xy(&self.tau, x, y)
    }

    /// `theta_a(z0)` at the reduced point of `cell`.
    pub(crate) fn theta_at_cell(&self, a: &Characteristic, cell: &Cell) -> C {
        let t = a.top_mask();
        let b = a.bottom_mask() as usize;
        let bins = self.tops[t as usize].sum(&cell.z0, &cell.x0);
        combine_bottom(&bins, self.tau.genus(), t, b as u32)
    }

    /// `theta_a(0)`.
    pub fn null(&self, a: &Characteristic) -> C {
        let zero = [ZERO; MAXG];
        self.theta_at_cell(a, &self.cell(&zero[..self.tau.genus()]))
    }

    /// Parity bins `B_r(z0)` of `theta(z0, tau/2)`.
    pub(crate) fn basis_at_cell(&self, cell: &Cell) -> Bins {
        let mut x2 = [0.0; MAXG];
        for i in 0..self.tau.genus() {
            x2[i] = 2.0 * cell.x0[i];
        }
        self.basis.sum(&cell.z0, &x2)
    }

    /// Weights `W_r` with `sum_c w_c theta_c(z)^2 = sum_r W_r B_r(z)`.
    pub(crate) fn square_weights(&self, terms: &[(Characteristic, C)]) -> Vec<C> {
        let n = 1usize << self.tau.genus();
        let mut w = vec![ZERO; n];
        for (c, coeff) in terms {
            let t = c.top_mask() as usize;
            let b = c.bottom_mask() as usize;
            for (r, slot) in w.iter_mut().enumerate() {
                let term = self.basis_null[r ^ t] * coeff;
                if (r & b).count_ones() % 2 == 0 {
                    *slot += term;
                } else {
                    *slot -= term;
                }
            }
        }
        w
    }

    /// `theta_a(z0)^2` for all `4^g` characteristics (indexed by canonical
    /// index) from one second-order lattice sum.
    pub(crate) fn squares_at_cell(&self, cell: &Cell) -> Vec<C> {
        let b = self.basis_at_cell(cell);
        self.squares_from_basis(&b)
    }

    fn squares_from_basis(&self, b: &Bins) -> Vec<C> {
        let g = self.tau.genus();
        let n = 1usize << g;
        let mut out = vec![ZERO; n * n];
        for t in 0..n {
            for bot in 0..n {
                let mut s = ZERO;
                for r in 0..n {
                    let term = self.basis_null[r ^ t] * b[r];
                    if (r & bot).count_ones() % 2 == 0 {
                        s += term;
                    } else {
                        s -= term;
                    }
                }
                out[(t << g) | bot] = s;
            }
        }
        out
    }

    pub fn theta(&self, a: &Characteristic, z: &[C]) -> Result<C> {
        check_dim(&self.tau, z)?;
        check_char(&self.tau, a)?;
        let cell = self.cell(z);
        Ok(restore(a, &cell, &self.tau, self.theta_at_cell(a, &cell)))
    }

    /// `theta_a(z)^2` for every characteristic via the second-order basis.
    pub fn theta_squares(&self, z: &[C]) -> Result<Vec<C>> {
        check_dim(&self.tau, z)?;
        let cell = self.cell(z);
        let mut sq = self.squares_at_cell(&cell);
        let g = self.tau.genus();
        if cell.m_top[..g].iter().any(|&m| m != 0) {
            let e = e_factor(&cell.m_top[..g], &cell.m_bottom[..g], &cell.z0[..g], &self.tau);
            let e2 = e * e;
            sq.iter_mut().for_each(|v| *v *= e2);
        }
        Ok(sq)
    }

    pub(crate) fn log_norm_at_cell(&self, a: &Characteristic, cell: &Cell) -> f64 {
        let g = self.tau.genus();
        0.25 * self.tau.det_im().ln() + log_p_norm(&cell.z0[..g], &self.tau) + self.theta_at_cell(a, cell).norm().ln()
    }

    pub fn norm_theta(&self, a: &Characteristic, z: &[C]) -> Result<f64> {
        check_dim(&self.tau, z)?;
        check_char(&self.tau, a)?;
        Ok(self.log_norm_at_cell(a, &self.cell(z)).exp())
    }
}

/// `theta_{t/b}(z0) = i^{t.b} sum_r (-1)^{r.b} S_r`.
fn combine_bottom(bins: &Bins, g: usize, t: u32, b: u32) -> C {
    let mut s = ZERO;
    for (r, v) in bins.iter().enumerate().take(1 << g) {
        if (r as u32 & b).count_ones() % 2 == 0 {
            s += v;
        } else {
            s -= v;
        }
    }
    match (t & b).count_ones() % 4 {
        0 => s,
        1 => s * C::i(),
        2 => -s,
        _ => -s * C::i(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_tau(rng: &mut ChaCha8Rng) -> PeriodMatrix {
        loop {
            let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-0.6..0.6));
            let im = &a * a.transpose() + DMatrix::identity(3, 3) * 0.6;
            let x = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-0.5..0.5));
            let re = (&x + x.transpose()) * 0.5;
            let t = PeriodMatrix::from_parts(&re, &im).unwrap();
            if t.lambda_min() >= 0.3 {
                return t;
            }
        }
    }

    fn random_z(rng: &mut ChaCha8Rng, g: usize, s: f64) -> Vec<C> {
        (0..g).map(|_| C::new(rng.random_range(-s..s), rng.random_range(-s..s))).collect()
    }

    fn rel(a: C, b: C) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
    }

    #[test]
    fn identity_cube_at_origin() {
        let series: f64 = (-40i32..=40).map(|n| (-PI * (n * n) as f64).exp()).sum();
        let tau = PeriodMatrix::diagonal_imaginary(&[1.0, 1.0, 1.0]).unwrap();
        let v = theta_char(&Characteristic::zero(3), &[ZERO; 3], &tau, Tolerance::default()).unwrap();
        assert!((v.re - series.powi(3)).abs() < 1e-14 && v.im.abs() < 1e-15);
        assert!((v.re - 1.2824).abs() < 1e-4);
    }

    #[test]
    fn e_factor_scalar_value() {
        let tau = PeriodMatrix::diagonal_imaginary(&[1.0]).unwrap();
        let v = e_factor(&[1], &[0], &[ZERO], &tau);
        assert!((v.re - PI.exp()).abs() < 1e-12 && v.im.abs() < 1e-12);
        assert!((v.re - 23.1407).abs() < 1e-4);
        assert_eq!(e_factor(&[0], &[5], &[C::new(0.3, 1.2)], &tau), C::new(1.0, 0.0));
    }

    #[test]
    fn reduction_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tau = random_tau(&mut rng);
        let rp = reduce_point(&tau, &[ZERO; 3]).unwrap();
        assert!(rp.m_top.iter().chain(&rp.m_bottom).all(|&m| m == 0));
        let col: Vec<C> = (0..3).map(|i| tau.tau()[(i, 0)]).collect();
        let rp = reduce_point(&tau, &col).unwrap();
        assert_eq!(rp.m_top, vec![1, 0, 0]);
        assert_eq!(rp.m_bottom, vec![0, 0, 0]);
        assert!(rp.z0.iter().all(|v| v.norm() < 1e-14));
        for _ in 0..100 {
            let z = random_z(&mut rng, 3, 4.0);
            let rp = reduce_point(&tau, &z).unwrap();
            let back = torus_point(&tau, &rp.m_top.iter().map(|&m| m as f64).collect::<Vec<_>>(),
                &rp.m_bottom.iter().map(|&m| m as f64).collect::<Vec<_>>());
            let zn: f64 = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let res: f64 = (0..3).map(|i| (z[i] - rp.z0[i] - back[i]).norm_sqr()).sum::<f64>().sqrt();
            assert!(res <= 1e-12 * (1.0 + zn));
            assert!(rp.x0.iter().chain(&rp.y0).all(|v| (-0.5 - 1e-12..0.5 + 1e-12).contains(v)));
        }
    }

    #[test]
    fn evaluator_matches_free_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tau = random_tau(&mut rng);
        let ev = ThetaEvaluator::new(&tau, Tolerance::default());
        assert!(ev.is_tabulated());
        for _ in 0..20 {
            let z = random_z(&mut rng, 3, 1.5);
            let sq = ev.theta_squares(&z).unwrap();
            for a in Characteristic::all(3) {
                let d = theta_char(&a, &z, &tau, Tolerance::default()).unwrap();
                let e = ev.theta(&a, &z).unwrap();
                let scale = d.norm().max(1e-3);
                assert!((d - e).norm() < 1e-13 * scale.max(e.norm()), "{a}");
                assert!((sq[a.index() as usize] - d * d).norm() < 1e-11 * scale * scale, "square {a}");
            }
        }
    }

    #[test]
    fn odd_nulls_vanish_and_null_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tau = random_tau(&mut rng);
        let table = theta_null_table(&tau, Tolerance::default()).unwrap();
        assert_eq!(table.len(), 36);
        let scale = table.values().map(|v| v.norm()).fold(0.0, f64::max);
        for a in Characteristic::all(3) {
            let v = theta_char(&a, &[ZERO; 3], &tau, Tolerance::default()).unwrap();
            if a.is_odd() {
                assert!(v.norm() <= 1e-13 * scale);
            } else {
                assert!((v - table[&a]).norm() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn split_point_nulls() {
        let tau = PeriodMatrix::diagonal_imaginary(&[1.0, 1.0, 1.0]).unwrap();
        let table = theta_null_table(&tau, Tolerance::default()).unwrap();
        let one = PeriodMatrix::diagonal_imaginary(&[1.0]).unwrap();
        let mut nonzero = 0;
        for (a, v) in &table {
            let mut prod = C::new(1.0, 0.0);
            for i in 0..3 {
                let ai = Characteristic::new(&[a.top_bit(i)], &[a.bottom_bit(i)]).unwrap();
                prod *= theta_char(&ai, &[ZERO], &one, Tolerance::default()).unwrap();
            }
            assert!((prod - v).norm() < 1e-13);
            if v.norm() > 1e-10 {
                nonzero += 1;
            }
        }
        assert_eq!(nonzero, 27);
    }

    #[test]
    fn functional_equation_parity_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tau = random_tau(&mut rng);
        let tol = Tolerance::default();
        let zero = Characteristic::zero(3);
        for _ in 0..100 {
            let a = Characteristic::from_index(3, rng.random_range(0..64));
            let z = random_z(&mut rng, 3, 0.6);
            let mt: Vec<i64> = (0..3).map(|_| rng.random_range(-3..=3)).collect();
            let mb: Vec<i64> = (0..3).map(|_| rng.random_range(-3..=3)).collect();
            let shift = torus_point(&tau, &mt.iter().map(|&v| v as f64).collect::<Vec<_>>(),
                &mb.iter().map(|&v| v as f64).collect::<Vec<_>>());
            let zs: Vec<C> = (0..3).map(|i| z[i] + shift[i]).collect();
            let lhs = theta_char(&a, &zs, &tau, tol).unwrap();
            let rhs = theta_char(&a, &z, &tau, tol).unwrap()
                * sqrt_pairing_sign(&a, &mt, &mb) as f64
                * e_factor(&mt, &mb, &z, &tau);
            assert!(rel(lhs, rhs) < 1e-12, "functional equation");

            let neg: Vec<C> = z.iter().map(|v| -v).collect();
            let p = theta_char(&a, &neg, &tau, tol).unwrap();
            let q = theta_char(&a, &z, &tau, tol).unwrap() * a.parity_sign() as f64;
            assert!(rel(p, q) < 1e-11, "parity");

            let tz: Vec<C> = (0..3)
                .map(|i| z[i] + torus_point(&tau, &a.top_half(), &a.bottom_half())[i])
                .collect();
            let lhs = theta_char(&zero, &tz, &tau, tol).unwrap();
            let rhs = theta_char(&a, &z, &tau, tol).unwrap() * eta_factor(&a, &z, &tau);
            assert!(rel(lhs, rhs) < 1e-11, "translation");
        }
    }

    #[test]
    fn radius_doubling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let tau = random_tau(&mut rng);
            let r = truncation_radius_for(&tau, Tolerance::default());
            for _ in 0..10 {
                let a = Characteristic::from_index(3, rng.random_range(0..64));
                let z = random_z(&mut rng, 3, 1.0);
                let v1 = theta_char_with_radius(&a, &z, &tau, r).unwrap();
                let v2 = theta_char_with_radius(&a, &z, &tau, 2.0 * r).unwrap();
                assert!((v1 - v2).norm() <= 1e-14 * v2.norm());
            }
        }
    }

    #[test]
    fn norm_periodicity_and_translate() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let tau = random_tau(&mut rng);
        let tol = Tolerance::default();
        let zero = Characteristic::zero(3);
        for _ in 0..100 {
            let a = Characteristic::from_index(3, rng.random_range(0..64));
            let z = random_z(&mut rng, 3, 1.0);
            let t = torus_point(&tau, &a.top_half(), &a.bottom_half());
            let zt: Vec<C> = (0..3).map(|i| z[i] + t[i]).collect();
            let n1 = norm_theta(&a, &z, &tau, tol).unwrap();
            let n2 = norm_theta(&zero, &zt, &tau, tol).unwrap();
            assert!((n1 - n2).abs() < 1e-11 * n1.max(n2));
            let m = torus_point(&tau, &[1.0, -2.0, 0.0], &[3.0, 0.0, -1.0]);
            let zm: Vec<C> = (0..3).map(|i| z[i] + m[i]).collect();
            let n3 = norm_theta(&a, &zm, &tau, tol).unwrap();
            assert!((n1 - n3).abs() < 1e-11 * n1);
            // direct unreduced evaluation agrees with the reduced one
            let direct = tau.det_im().powf(0.25) * p_norm(&zm, &tau) * theta_char(&a, &zm, &tau, tol).unwrap().norm();
            assert!((direct - n1).abs() < 1e-11 * n1);
        }
    }

    #[test]
    fn p_norm_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tau = random_tau(&mut rng);
        assert_eq!(p_norm(&[C::new(0.3, 0.0), C::new(-1.0, 0.0), C::new(2.0, 0.0)], &tau), 1.0);
        let x = [0.3, -0.2, 0.7];
        let z = torus_point(&tau, &x, &[0.0; 3]);
        let q: f64 = (0..3).map(|i| (0..3).map(|j| x[i] * tau.im()[(i, j)] * x[j]).sum::<f64>()).sum();
        assert!((p_norm(&z, &tau) - (-PI * q).exp()).abs() < 1e-14);
    }

    #[test]
    fn even_norms_permute_under_symplectic_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tau = random_tau(&mut rng);
        let tol = Tolerance::default();
        let mut done = 0;
        while done < 5 {
            let s = SymplecticMatrix::random(&mut rng, 3, 3);
            let z = random_z(&mut rng, 3, 0.5);
            let Ok((z2, tau2)) = symplectic_apply(&s, &z, &tau) else { continue };
            if tau2.lambda_min() < 0.1 || tau2.max_abs_entry() > 20.0 {
                continue;
            }
            let mut before: Vec<f64> = Characteristic::all(3).filter(|a| a.is_even())
                .map(|a| norm_theta(&a, &z, &tau, tol).unwrap()).collect();
            let mut after: Vec<f64> = Characteristic::all(3).filter(|a| a.is_even())
                .map(|a| norm_theta(&a, &z2, &tau2, tol).unwrap()).collect();
            before.sort_by(f64::total_cmp);
            after.sort_by(f64::total_cmp);
            for (x, y) in before.iter().zip(&after) {
                assert!((x - y).abs() <= 1e-8 * x.max(*y));
            }
            done += 1;
        }
    }
}

