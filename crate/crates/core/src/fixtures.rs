//! Seeded period matrices used by the CLI, the self-test and the test suites.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::char_algebra::Characteristic;
use crate::error::{Error, Result};
use crate::frobenius::{find_vanishing_even_null, locate_hyperelliptic, DEFAULT_NULL_THRESHOLD};
use crate::theta::{PeriodMatrix, ThetaEvaluator, Tolerance};

/// Smallest eigenvalue of `Im tau` accepted for random fixtures.
pub const RANDOM_LAMBDA_MIN: f64 = 0.5;

/// `Re tau` uniform symmetric in `[-1/2, 1/2]`, `Im tau = A A^T + 0.7 I`
/// with `A` uniform in `[-0.6, 0.6]`, rejected until `lambda_min >= 0.5`.
pub fn random_tau_from(rng: &mut ChaCha8Rng) -> PeriodMatrix {
    loop {
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-0.6..0.6));
        let im = &a * a.transpose() + DMatrix::identity(3, 3) * 0.7;
        let x = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-0.5..0.5));
        let t = PeriodMatrix::from_parts(&((&x + x.transpose()) * 0.5), &im).expect("positive definite by construction");
        if t.lambda_min() >= RANDOM_LAMBDA_MIN {
            return t;
        }
    }
}

pub fn random_tau(seed: u64) -> PeriodMatrix {
    random_tau_from(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// `i I_3`.
pub fn split_tau() -> PeriodMatrix {
    PeriodMatrix::diagonal_imaginary(&[1.0, 1.0, 1.0]).expect("identity is positive definite")
}

/// `i I_3` plus `eps` times a seeded symmetric off-diagonal complex perturbation.
pub fn near_split_tau(eps: f64, seed: u64) -> PeriodMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut re = DMatrix::zeros(3, 3);
    let mut im = DMatrix::identity(3, 3);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let (x, y) = (rng.random_range(-1.0..1.0) * eps, rng.random_range(-1.0..1.0) * eps);
        re[(i, j)] = x;
        re[(j, i)] = x;
        im[(i, j)] = y;
        im[(j, i)] = y;
    }
    PeriodMatrix::from_parts(&re, &im).expect("small perturbation of the identity")
}

#[derive(Clone, Debug, Serialize)]
pub struct Located {
    /// Seed of the random starting point.
    pub seed: u64,
    pub k: String,
    #[serde(skip)]
    pub tau0: PeriodMatrix,
    #[serde(skip)]
    pub tau: PeriodMatrix,
    #[serde(skip)]
    pub characteristic: Characteristic,
}

/// Runs the locator from `random_tau(seed)`, trying the even characteristics
/// by increasing `|theta(0)|`, then later seeds, until the located point has
/// exactly the targeted vanishing null and every other null stays clear of
/// the threshold by a factor `1e3`.
pub fn hyperelliptic_tau(seed: u64, tol: Tolerance) -> Result<Located> {
    for s in seed..seed + 16 {
        let tau0 = random_tau(s);
        let eval = ThetaEvaluator::new(&tau0, tol);
        let mut ks: Vec<Characteristic> = Characteristic::all(3).filter(|a| a.is_even()).collect();
        ks.sort_by(|a, b| eval.null(a).norm().total_cmp(&eval.null(b).norm()));
        for k in ks.iter().take(4) {
            let Ok(tau) = locate_hyperelliptic(&tau0, k, 50, tol) else { continue };
            if find_vanishing_even_null(&tau, tol, DEFAULT_NULL_THRESHOLD) != Ok(Some(*k)) {
                continue;
            }
            if find_vanishing_even_null(&tau, tol, 1e3 * DEFAULT_NULL_THRESHOLD) != Ok(Some(*k)) {
                continue;
            }
            return Ok(Located { seed: s, k: k.to_string(), tau0, tau, characteristic: *k });
        }
    }
    Err(Error::NoConvergence(50))
}
