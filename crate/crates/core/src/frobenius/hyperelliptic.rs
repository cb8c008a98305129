use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{FrobeniusContext, LogComplex};
use crate::char_algebra::{pair_sign, Characteristic};
use crate::error::{Error, Result};
use crate::theta::{theta_char, PeriodMatrix, ThetaEvaluator, Tolerance};

type C = Complex64;

/// Relative size (against the median even null) below which a null counts as zero.
pub const DEFAULT_NULL_THRESHOLD: f64 = 1e-10;

const NEWTON_STEP: f64 = 1e-5;
const NEWTON_TARGET: f64 = 1e-12;
const MAX_HALVINGS: usize = 40;
/// Trial points with `Im t` beyond this multiple of `Im tau0_11` are rejected.
const MAX_ESCAPE: f64 = 4.0;

pub(super) fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// The unique even `a` with `|theta_a(0)| < threshold * median`, if any.
pub(super) fn vanishing_among<'a>(
    nulls: impl Iterator<Item = (&'a Characteristic, &'a C)> + Clone,
    threshold: f64,
) -> Result<Option<Characteristic>> {
    let med = median(nulls.clone().map(|(_, v)| v.norm()).collect());
    let mut small: Vec<(Characteristic, f64)> =
        nulls.filter(|(_, v)| v.norm() < threshold * med).map(|(a, v)| (*a, v.norm())).collect();
    small.sort_by(|x, y| x.1.total_cmp(&y.1));
    match small.len() {
        0 => Ok(None),
        1 => Ok(Some(small[0].0)),
        _ => Err(Error::Ambiguous(small.iter().map(|(a, _)| a.to_string()).collect())),
    }
}

pub fn find_vanishing_even_null(tau: &PeriodMatrix, tol: Tolerance, threshold: f64) -> Result<Option<Characteristic>> {
    if tau.genus() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: tau.genus() });
    }
    let eval = ThetaEvaluator::new(tau, tol);
    let nulls: Vec<(Characteristic, C)> =
        Characteristic::all(3).filter(|a| a.is_even()).map(|a| (a, eval.null(&a))).collect();
    vanishing_among(nulls.iter().map(|(a, v)| (a, v)), threshold)
}

/// `(k, a) h_a / theta_{ka}(0)^2` with `k` the vanishing even characteristic.
pub fn psi_log(ctx: &FrobeniusContext, a: &Characteristic) -> Result<LogComplex> {
    let k = ctx.vanishing().ok_or(Error::NoVanishingNull)?;
    let ka = k ^ *a;
    if a.is_zero() || ka.is_odd() {
        return Err(Error::BadCharacteristic(a.to_string()));
    }
    let theta = LogComplex::from_complex(ctx.nulls()[&ka]);
    Ok(LogComplex::from_sign(pair_sign(&k, a)) * ctx.reduced_value(a) / theta.powi(2))
}

/// Eighth power of the product of the 35 non-vanishing even nulls.
pub fn xi_log(tau: &PeriodMatrix, tol: Tolerance) -> Result<LogComplex> {
    let eval = ThetaEvaluator::new(tau, tol);
    let nulls: Vec<(Characteristic, C)> =
        Characteristic::all(3).filter(|a| a.is_even()).map(|a| (a, eval.null(&a))).collect();
    let k = vanishing_among(nulls.iter().map(|(a, v)| (a, v)), DEFAULT_NULL_THRESHOLD)?.ok_or(Error::NoVanishingNull)?;
    Ok(nulls.iter().filter(|(a, _)| *a != k).map(|(_, v)| LogComplex::from_complex(*v).powi(8)).product())
}

/// `ln ||xi|| = ln |xi| + 70 ln det Y`.
pub fn norm_xi_log(tau: &PeriodMatrix, tol: Tolerance) -> Result<f64> {
    Ok(xi_log(tau, tol)?.logabs + 70.0 * tau.det_im().ln())
}

fn shifted(tau0: &PeriodMatrix, t: C) -> Result<PeriodMatrix> {
    let mut m: DMatrix<C> = tau0.tau().clone();
    m[(0, 0)] += t;
    PeriodMatrix::new(m)
}

/// Newton iteration on `theta_k(0, tau0 + t E_11) = 0` in `t`.
///
/// The residual is `theta_k / theta_r` with `r` the largest null sharing the
/// first top bit of `k`; both decay alike as `Im t -> inf`, so the quotient
/// has no spurious root at infinity.
pub fn locate_hyperelliptic(
    tau0: &PeriodMatrix,
    k: &Characteristic,
    max_iter: usize,
    tol: Tolerance,
) -> Result<PeriodMatrix> {
    if tau0.genus() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: tau0.genus() });
    }
    if k.genus() != 3 || k.is_odd() {
        return Err(Error::BadCharacteristic(k.to_string()));
    }
    let eval = ThetaEvaluator::new(tau0, tol);
    let r = Characteristic::all(3)
        .filter(|a| a.is_even() && *a != *k && a.top_bit(0) == k.top_bit(0))
        .max_by(|a, b| eval.null(a).norm().total_cmp(&eval.null(b).norm()))
        .expect("eleven or more candidates");
    let zero = [C::new(0.0, 0.0); 3];
    let f = |t: C| -> Result<C> {
        let tau = shifted(tau0, t)?;
        Ok(theta_char(k, &zero, &tau, tol)? / theta_char(&r, &zero, &tau, tol)?)
    };

    let mut t = C::new(0.0, 0.0);
    let mut val = f(t)?;
    if val.norm() == 0.0 || !val.is_finite() {
        return Err(Error::BadCharacteristic(k.to_string()));
    }
    for _ in 0..=max_iter {
        if val.norm() <= NEWTON_TARGET {
            return shifted(tau0, t);
        }
        let h = C::new(NEWTON_STEP, 0.0);
        let d = (f(t + h)? - f(t - h)?) / (2.0 * h);
        let mut step = -val / d;
        let mut accepted = None;
        let mut positive = false;
        for _ in 0..MAX_HALVINGS {
            let trial = t + step;
            if trial.im > MAX_ESCAPE * tau0.im()[(0, 0)] {
                step *= 0.5;
                continue;
            }
            match f(trial) {
                Ok(v) => {
                    positive = true;
                    if v.is_finite() && v.norm() < val.norm() {
                        accepted = Some(v);
                        break;
                    }
                }
                Err(Error::NotPositiveDefinite | Error::Input(_)) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
        }
        match accepted {
            Some(v) => {
                t += step;
                val = v;
            }
            None if !positive => return Err(Error::LostPositivity),
            None => return Err(Error::NoConvergence(max_iter)),
        }
    }
    Err(Error::NoConvergence(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::build_frobenius_context;
    use crate::frobenius::tests::random_tau;
    use crate::theta::torus_point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn located(seed: u64) -> (PeriodMatrix, Characteristic) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau0 = random_tau(&mut rng);
        let eval = ThetaEvaluator::new(&tau0, Tolerance::default());
        let k = Characteristic::all(3)
            .filter(|a| a.is_even())
            .min_by(|a, b| eval.null(a).norm().total_cmp(&eval.null(b).norm()))
            .unwrap();
        (locate_hyperelliptic(&tau0, &k, 50, Tolerance::default()).unwrap(), k)
    }

    #[test]
    fn random_and_split_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let tau = random_tau(&mut rng);
        assert_eq!(find_vanishing_even_null(&tau, Tolerance::default(), DEFAULT_NULL_THRESHOLD), Ok(None));
        assert_eq!(xi_log(&tau, Tolerance::default()), Err(Error::NoVanishingNull));
        let split = PeriodMatrix::diagonal_imaginary(&[1.0, 1.0, 1.0]).unwrap();
        match find_vanishing_even_null(&split, Tolerance::default(), DEFAULT_NULL_THRESHOLD) {
            Err(Error::Ambiguous(v)) => assert_eq!(v.len(), 9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hyperelliptic_point() {
        let (tau, k) = located(22);
        let tol = Tolerance::default();
        assert_eq!(find_vanishing_even_null(&tau, tol, DEFAULT_NULL_THRESHOLD), Ok(Some(k)));
        let ctx = build_frobenius_context(&tau, tol, None).unwrap();
        assert_eq!(ctx.vanishing(), Some(k));
        let med = median(ctx.nulls().values().map(|v| v.norm()).collect());
        for (a, v) in ctx.nulls() {
            if *a != k {
                assert!(v.norm() > 1e3 * DEFAULT_NULL_THRESHOLD * med);
            }
        }

        // f_k is constant and equals psi
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let psi = psi_log(&ctx, &Characteristic::from_index(3, 0b000001)).or_else(|_| {
            let a = Characteristic::all(3).find(|a| !a.is_zero() && (k ^ *a).is_even()).unwrap();
            psi_log(&ctx, &a)
        });
        let psi = psi.unwrap();
        assert!(!psi.is_zero());
        for _ in 0..10 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
            let f = ctx.f_a_value(&k, &torus_point(&tau, &x, &y)).unwrap();
            assert!((f - psi.to_complex()).norm() <= 1e-6 * f.norm(), "{f} vs {}", psi.to_complex());
        }

        let admissible: Vec<Characteristic> =
            Characteristic::all(3).filter(|a| !a.is_zero() && (k ^ *a).is_even()).take(10).collect();
        for a in &admissible {
            let p = psi_log(&ctx, a).unwrap();
            assert!((p.logabs - psi.logabs).abs() <= 1e-6);
            assert!(wrap_angle_diff(p.arg, psi.arg) <= 1e-6);
        }
        let odd = Characteristic::all(3).find(|a| (k ^ *a).is_odd()).unwrap();
        assert!(matches!(psi_log(&ctx, &odd), Err(Error::BadCharacteristic(_))));

        let xi = xi_log(&tau, tol).unwrap();
        let lhs = psi.powi(140);
        let rhs = xi.powi(7);
        assert!((lhs.logabs - rhs.logabs).abs() <= 1e-6 * rhs.logabs.abs());
        assert!(wrap_angle_diff(lhs.arg, rhs.arg) <= 1e-6);

        // h_a vanishes exactly when ka is odd
        let live = ctx.h_table().iter().skip(1).filter(|h| !h.is_zero()).map(|h| h.abs());
        let (mut big_min, mut small_max) = (f64::INFINITY, 0.0f64);
        for a in Characteristic::all(3).skip(1) {
            let h = ctx.reduced_value(&a).abs();
            if (k ^ a).is_odd() {
                small_max = small_max.max(h);
            } else {
                big_min = big_min.min(h);
            }
        }
        assert!(live.count() > 0);
        assert!(big_min >= 1e6 * small_max, "{big_min} vs {small_max}");
    }

    #[test]
    fn xi_norm_under_translation() {
        let (tau, _) = located(24);
        let tol = Tolerance::default();
        let b = DMatrix::from_row_slice(3, 3, &[1i64, 0, 1, 0, 0, -1, 1, -1, 2]);
        let shifted = tau.translate(&b).unwrap();
        let n1 = norm_xi_log(&tau, tol).unwrap();
        let n2 = norm_xi_log(&shifted, tol).unwrap();
        assert!((n1 - n2).abs() <= 1e-8 * n1.abs());
    }

    fn wrap_angle_diff(a: f64, b: f64) -> f64 {
        super::super::wrap_angle(a - b).abs()
    }
}

