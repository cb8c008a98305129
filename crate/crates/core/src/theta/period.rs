use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest degree the numerical kernel accepts.
pub const MAX_THETA_GENUS: usize = 4;

/// A point of the Siegel upper half space with cached data on `Y = Im tau`.
#[derive(Clone, Debug)]
pub struct PeriodMatrix {
    tau: DMatrix<Complex64>,
    re: DMatrix<f64>,
    im: DMatrix<f64>,
    im_inv: DMatrix<f64>,
    chol_upper: DMatrix<f64>,
    det_im: f64,
    lambda_min: f64,
}

impl PeriodMatrix {
    /// Symmetrizes `tau` and checks that its imaginary part is positive definite.
    pub fn new(tau: DMatrix<Complex64>) -> Result<Self> {
        let g = tau.nrows();
        if tau.ncols() != g {
            return Err(Error::DimensionMismatch { expected: g, got: tau.ncols() });
        }
        if g == 0 || g > MAX_THETA_GENUS {
            return Err(Error::Input(format!("degree {g} not supported by the theta kernel")));
        }
        if tau.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Input("period matrix has non-finite entries".into()));
        }
        let tau = (&tau + tau.transpose()) * Complex64::new(0.5, 0.0);
        let re = tau.map(|v| v.re);
        let im = tau.map(|v| v.im);
        let eig = SymmetricEigen::new(im.clone());
        let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(lambda_min > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = im.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let chol_upper = chol.l().transpose();
        let det_im = chol_upper.diagonal().iter().map(|d| d * d).product();
        let im_inv = chol.inverse();
        Ok(Self { tau, re, im, im_inv, chol_upper, det_im, lambda_min })
    }

    pub fn from_parts(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::DimensionMismatch { expected: re.nrows(), got: im.nrows() });
        }
        Self::new(DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| {
            Complex64::new(re[(i, j)], im[(i, j)])
        }))
    }

    pub fn diagonal_imaginary(diag: &[f64]) -> Result<Self> {
        let g = diag.len();
        Self::from_parts(&DMatrix::zeros(g, g), &DMatrix::from_fn(g, g, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn genus(&self) -> usize {
        self.tau.nrows()
    }

    pub fn tau(&self) -> &DMatrix<Complex64> {
        &self.tau
    }

    pub fn re(&self) -> &DMatrix<f64> {
        &self.re
    }

    pub fn im(&self) -> &DMatrix<f64> {
        &self.im
    }

    pub fn im_inv(&self) -> &DMatrix<f64> {
        &self.im_inv
    }

    /// Upper triangular `R` with `Y = R^T R`.
    pub fn chol_upper(&self) -> &DMatrix<f64> {
        &self.chol_upper
    }

    pub fn det_im(&self) -> f64 {
        self.det_im
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.tau.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `tau + B` for an integer symmetric `B`.
    pub fn translate(&self, b: &DMatrix<i64>) -> Result<PeriodMatrix> {
        PeriodMatrix::new(&self.tau + b.map(|v| Complex64::new(v as f64, 0.0)))
    }

    pub fn to_json(&self) -> TauJson {
        let g = self.genus();
        let rows = |m: &DMatrix<f64>| (0..g).map(|i| (0..g).map(|j| m[(i, j)]).collect()).collect();
        TauJson { g, re: rows(&self.re), im: rows(&self.im), seed: None, k: None }
    }

    pub fn from_json(t: &TauJson) -> Result<Self> {
        let g = t.g;
        let check = |name: &str, m: &Vec<Vec<f64>>| -> Result<()> {
            if m.len() != g || m.iter().any(|r| r.len() != g) {
                return Err(Error::Input(format!("field \"{name}\" must be a {g}x{g} array")));
            }
            Ok(())
        };
        check("re", &t.re)?;
        check("im", &t.im)?;
        if g == 0 {
            return Err(Error::Input("field \"g\" must be positive".into()));
        }
        let re = DMatrix::from_fn(g, g, |i, j| t.re[i][j]);
        let im = DMatrix::from_fn(g, g, |i, j| t.im[i][j]);
        Self::from_parts(&re, &im)
    }
}

/// Serialized form `{"g":3, "re":[[..]], "im":[[..]]}`; located points may
/// also record the seed and characteristic they were found from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauJson {
    pub g: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
}

/// Relative truncation target for lattice sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    eps_trunc: f64,
}

impl Tolerance {
    pub fn new(eps_trunc: f64) -> Result<Self> {
        if !(eps_trunc > 0.0 && eps_trunc < 1e-6) {
            return Err(Error::Input(format!("tolerance {eps_trunc} outside (0, 1e-6)")));
        }
        Ok(Self { eps_trunc })
    }

    pub fn eps(&self) -> f64 {
        self.eps_trunc
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { eps_trunc: 1e-14 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_indefinite_imaginary_part() {
        let im = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = PeriodMatrix::from_parts(&DMatrix::zeros(2, 2), &im).unwrap_err();
        assert_eq!(err, Error::NotPositiveDefinite);
        assert_eq!(err.to_string(), "imaginary part not positive definite");
    }

    #[test]
    fn symmetrizes_and_caches() {
        let re = DMatrix::from_row_slice(2, 2, &[0.1, 0.3, 0.1, 0.2]);
        let im = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let t = PeriodMatrix::from_parts(&re, &im).unwrap();
        assert_eq!(t.re()[(0, 1)], t.re()[(1, 0)]);
        assert!((t.det_im() - 1.75).abs() < 1e-14);
        let r = t.chol_upper();
        assert!((r.transpose() * r - t.im()).amax() < 1e-14);
        assert!((t.im() * t.im_inv() - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn json_roundtrip_and_field_errors() {
        let t = PeriodMatrix::diagonal_imaginary(&[1.0, 2.0, 3.0]).unwrap();
        let j = serde_json::to_string(&t.to_json()).unwrap();
        let back: TauJson = serde_json::from_str(&j).unwrap();
        assert_eq!(PeriodMatrix::from_json(&back).unwrap().im(), t.im());
        let bad = TauJson { g: 3, re: vec![vec![0.0; 3]; 2], im: vec![vec![0.0; 3]; 3], seed: None, k: None };
        assert!(PeriodMatrix::from_json(&bad).unwrap_err().to_string().contains("\"re\""));
    }

    #[test]
    fn tolerance_bounds() {
        assert!(Tolerance::new(1e-5).is_err());
        assert!(Tolerance::new(0.0).is_err());
        assert_eq!(Tolerance::default().eps(), 1e-14);
    }
}
