use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::period::PeriodMatrix;
use crate::error::{Error, Result};

/// Largest accepted condition number of `C tau + D`.
pub const MAX_CONDITION: f64 = 1e8;

/// An element `[[A, B], [C, D]]` of `Sp(2g, Z)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticMatrix {
    a: DMatrix<i64>,
    b: DMatrix<i64>,
    c: DMatrix<i64>,
    d: DMatrix<i64>,
}

impl SymplecticMatrix {
    pub fn new(a: DMatrix<i64>, b: DMatrix<i64>, c: DMatrix<i64>, d: DMatrix<i64>) -> Result<Self> {
        let g = a.nrows();
        for m in [&a, &b, &c, &d] {
            if m.shape() != (g, g) {
                return Err(Error::DimensionMismatch { expected: g, got: m.nrows().max(m.ncols()) });
            }
        }
        let at_c = a.transpose() * &c;
        let bt_d = b.transpose() * &d;
        let unit = a.transpose() * &d - c.transpose() * &b;
        if at_c != at_c.transpose() || bt_d != bt_d.transpose() || unit != DMatrix::identity(g, g) {
            return Err(Error::NotSymplectic);
        }
        Ok(Self { a, b, c, d })
    }

    pub fn identity(g: usize) -> Self {
        let i = DMatrix::identity(g, g);
        let z = DMatrix::zeros(g, g);
        Self { a: i.clone(), b: z.clone(), c: z, d: i }
    }

    /// `tau -> tau + B` for symmetric integral `B`.
    pub fn translation(b: DMatrix<i64>) -> Result<Self> {
        let g = b.nrows();
        Self::new(DMatrix::identity(g, g), b, DMatrix::zeros(g, g), DMatrix::identity(g, g))
    }

    /// `tau -> U tau U^T` for the elementary matrix `U = I + s E_ij`.
    pub fn elementary(g: usize, i: usize, j: usize, s: i64) -> Result<Self> {
        if i == j || i >= g || j >= g {
            return Err(Error::Input(format!("bad elementary index ({i}, {j})")));
        }
        let mut u = DMatrix::identity(g, g);
        u[(i, j)] = s;
        let mut u_inv_t = DMatrix::identity(g, g);
        u_inv_t[(j, i)] = -s;
        Self::new(u, DMatrix::zeros(g, g), DMatrix::zeros(g, g), u_inv_t)
    }

    /// Inversion on the coordinates with `mask[i]` set; all set gives `-tau^{-1}`.
    pub fn partial_inversion(mask: &[bool]) -> Result<Self> {
        let g = mask.len();
        let e = DMatrix::from_fn(g, g, |i, j| (i == j && mask[i]) as i64);
        let rest = DMatrix::identity(g, g) - &e;
        Self::new(rest.clone(), -&e, e, rest)
    }

    pub fn genus(&self) -> usize {
        self.a.nrows()
    }

    pub fn blocks(&self) -> (&DMatrix<i64>, &DMatrix<i64>, &DMatrix<i64>, &DMatrix<i64>) {
        (&self.a, &self.b, &self.c, &self.d)
    }

    pub fn compose(&self, other: &SymplecticMatrix) -> SymplecticMatrix {
        SymplecticMatrix {
            a: &self.a * &other.a + &self.b * &other.c,
            b: &self.a * &other.b + &self.b * &other.d,
            c: &self.c * &other.a + &self.d * &other.c,
            d: &self.c * &other.b + &self.d * &other.d,
        }
    }

    /// A product of `steps` random generators.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, g: usize, steps: usize) -> Self {
        let mut s = Self::identity(g);
        for _ in 0..steps {
            let gen = match rng.random_range(0..3) {
                0 => {
                    let mut b = DMatrix::zeros(g, g);
                    let (i, j) = (rng.random_range(0..g), rng.random_range(0..g));
                    let v = if rng.random_bool(0.5) { 1 } else { -1 };
                    b[(i, j)] = v;
                    b[(j, i)] = v;
                    Self::translation(b)
                }
                1 if g > 1 => {
                    let i = rng.random_range(0..g);
                    let j = (i + rng.random_range(1..g)) % g;
                    Self::elementary(g, i, j, if rng.random_bool(0.5) { 1 } else { -1 })
                }
                _ => {
                    let mut mask: Vec<bool> = (0..g).map(|_| rng.random_bool(0.5)).collect();
                    if !mask.iter().any(|&m| m) {
                        mask[rng.random_range(0..g)] = true;
                    }
                    Self::partial_inversion(&mask)
                }
            };
            s = s.compose(&gen.expect("generator is symplectic"));
        }
        s
    }
}

/// `tau -> U tau U^T` for unimodular `U`.
pub fn basis_change(u: DMatrix<i64>) -> Result<SymplecticMatrix> {
    let g = u.nrows();
    let inv = u.map(|v| v as f64).try_inverse().ok_or(Error::NotSymplectic)?;
    let u_inv_t = inv.transpose().map(|v| v.round() as i64);
    SymplecticMatrix::new(u, DMatrix::zeros(g, g), DMatrix::zeros(g, g), u_inv_t)
}

/// LLL-reduces the rows of `U` against the Gram matrix `y` (`delta = 0.99`).
fn lll(y: &DMatrix<f64>) -> DMatrix<i64> {
    let g = y.nrows();
    let mut u: DMatrix<i64> = DMatrix::identity(g, g);
    let gram = |u: &DMatrix<i64>| {
        let uf = u.map(|v| v as f64);
        &uf * y * uf.transpose()
    };
    let mut k = 1;
    let mut guard = 0;
    while k < g && guard < 1000 {
        guard += 1;
        let gm = gram(&u);
        // Gram-Schmidt coefficients from the Cholesky factor
        let Some(ch) = gm.clone().cholesky() else { break };
        let l = ch.l();
        let mu = |i: usize, j: usize| l[(i, j)] / l[(j, j)];
        let mut changed = false;
        for j in (0..k).rev() {
            let q = mu(k, j).round();
            if q != 0.0 {
                let row = u.row(j).map(|v| v * q as i64);
                let mut rk = u.row_mut(k);
                rk -= row;
                changed = true;
                break;
            }
        }
        if changed {
            continue;
        }
        let bk = l[(k, k)].powi(2);
        let bk1 = l[(k - 1, k - 1)].powi(2);
        if bk < (0.99 - mu(k, k - 1).powi(2)) * bk1 {
            u.swap_rows(k, k - 1);
            k = (k - 1).max(1);
        } else {
            k += 1;
        }
    }
    u
}

/// Moves `tau` towards the Siegel fundamental domain: LLL on `Im tau`,
/// `|Re tau_ij| <= 1/2`, then inversion while `|tau_11| < 1`.
/// Returns the reduced matrix and the transformation that produced it.
pub fn siegel_reduce(tau: &PeriodMatrix) -> Result<(PeriodMatrix, SymplecticMatrix)> {
    let g = tau.genus();
    let zero = vec![Complex64::new(0.0, 0.0); g];
    let mut s = SymplecticMatrix::identity(g);
    let mut t = tau.clone();
    let mut mask = vec![false; g];
    mask[0] = true;
    let flip = SymplecticMatrix::partial_inversion(&mask)?;
    for _ in 0..64 {
        let change = basis_change(lll(t.im()))?;
        let (_, t1) = symplectic_apply(&change, &zero, &t)?;
        let shift = SymplecticMatrix::translation(t1.re().map(|v| -(v.round() as i64)))?;
        let (_, t2) = symplectic_apply(&shift, &zero, &t1)?;
        s = shift.compose(&change).compose(&s);
        t = t2;
        if t.tau()[(0, 0)].norm() >= 1.0 - 1e-12 {
            break;
        }
        let (_, t3) = symplectic_apply(&flip, &zero, &t)?;
        s = flip.compose(&s);
        t = t3;
    }
    Ok((t, s))
}

fn to_complex(m: &DMatrix<i64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v as f64, 0.0))
}

/// `(z, tau) -> ((C tau + D)^{-T} z, (A tau + B)(C tau + D)^{-1})`.
pub fn symplectic_apply(
    s: &SymplecticMatrix,
    z: &[Complex64],
    tau: &PeriodMatrix,
) -> Result<(Vec<Complex64>, PeriodMatrix)> {
    let g = tau.genus();
    if s.genus() != g {
        return Err(Error::DimensionMismatch { expected: g, got: s.genus() });
    }
    if z.len() != g {
        return Err(Error::DimensionMismatch { expected: g, got: z.len() });
    }
    let t = tau.tau();
    let m = to_complex(&s.c) * t + to_complex(&s.d);
    let sv = m.clone().singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let lu = m.lu();
    let m_inv = lu.try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))?;
    let tau_new = (to_complex(&s.a) * t + to_complex(&s.b)) * &m_inv;
    let z_new = m_inv.transpose() * nalgebra::DVector::from_column_slice(z);
    Ok((z_new.iter().cloned().collect(), PeriodMatrix::new(tau_new)?))
}

/// `det(C tau + D)`.
pub fn automorphy_det(s: &SymplecticMatrix, tau: &PeriodMatrix) -> Complex64 {
    (to_complex(&s.c) * tau.tau() + to_complex(&s.d)).determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tau() -> PeriodMatrix {
        let re = DMatrix::from_row_slice(3, 3, &[0.2, 0.1, -0.3, 0.1, -0.4, 0.2, -0.3, 0.2, 0.1]);
        let im = DMatrix::from_row_slice(3, 3, &[1.2, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.9]);
        PeriodMatrix::from_parts(&re, &im).unwrap()
    }

    #[test]
    fn generators_are_symplectic() {
        let s = SymplecticMatrix::partial_inversion(&[true, false, true]).unwrap();
        let (a, b, c, d) = s.blocks();
        assert!(SymplecticMatrix::new(a.clone(), b.clone(), c.clone(), d.clone()).is_ok());
        let mut bad = a.clone();
        bad[(0, 1)] = 5;
        assert_eq!(
            SymplecticMatrix::new(bad, b.clone(), c.clone(), d.clone()),
            Err(Error::NotSymplectic)
        );
    }

    #[test]
    fn identity_and_translation() {
        let t = tau();
        let z = vec![Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.05), Complex64::new(0.4, -0.1)];
        let (z1, t1) = symplectic_apply(&SymplecticMatrix::identity(3), &z, &t).unwrap();
        assert!((t1.tau() - t.tau()).camax() < 1e-15);
        assert!(z1.iter().zip(&z).all(|(a, b)| (a - b).norm() < 1e-15));
        let b = DMatrix::from_row_slice(3, 3, &[1, 2, 0, 2, -1, 1, 0, 1, 3]);
        let (_, t2) = symplectic_apply(&SymplecticMatrix::translation(b).unwrap(), &z, &t).unwrap();
        assert!((t2.det_im() - t.det_im()).abs() < 1e-13);
    }

    #[test]
    fn action_is_a_group_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = tau();
        let z = vec![Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.05), Complex64::new(0.4, -0.1)];
        for _ in 0..20 {
            let s1 = SymplecticMatrix::random(&mut rng, 3, 3);
            let s2 = SymplecticMatrix::random(&mut rng, 3, 3);
            let (za, ta) = symplectic_apply(&s1.compose(&s2), &z, &t).unwrap();
            let (z2, t2) = symplectic_apply(&s2, &z, &t).unwrap();
            let (zb, tb) = symplectic_apply(&s1, &z2, &t2).unwrap();
            let scale = 1.0 + ta.max_abs_entry();
            assert!((ta.tau() - tb.tau()).camax() < 1e-10 * scale);
            let zs = 1.0 + za.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(za.iter().zip(&zb).all(|(a, b)| (a - b).norm() < 1e-10 * zs));
        }
    }

    #[test]
    fn imaginary_determinant_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = tau();
        let z = vec![Complex64::new(0.0, 0.0); 3];
        for _ in 0..20 {
            let s = SymplecticMatrix::random(&mut rng, 3, 4);
            let (_, t2) = symplectic_apply(&s, &z, &t).unwrap();
            let expected = t.det_im() / automorphy_det(&s, &t).norm_sqr();
            assert!((t2.det_im() - expected).abs() < 1e-10 * expected);
        }
    }

    #[test]
    fn siegel_reduction_undoes_random_transports() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = tau();
        for _ in 0..10 {
            let s = SymplecticMatrix::random(&mut rng, 3, 10);
            let Ok((_, moved)) = symplectic_apply(&s, &[Complex64::new(0.0, 0.0); 3], &base) else { continue };
            let (red, m) = siegel_reduce(&moved).unwrap();
            assert!(red.re().iter().all(|v| v.abs() <= 0.5 + 1e-9));
            assert!(red.tau()[(0, 0)].norm() >= 1.0 - 1e-9);
            assert!(red.lambda_min() >= 0.5 * base.lambda_min(), "{}", red.lambda_min());
            assert!((red.det_im() - base.det_im()).abs() < 1e-8 * base.det_im() || red.det_im() >= base.det_im() - 1e-8);
            let (_, again) = symplectic_apply(&m, &[Complex64::new(0.0, 0.0); 3], &moved).unwrap();
            assert!((again.tau() - red.tau()).norm() < 1e-9);
        }
    }
}
