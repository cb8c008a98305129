//! Curve invariants assembled from `log ||H||` and `log ||K||`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::char_algebra::Characteristic;
use crate::error::{Error, Result};
use crate::frobenius::{build_frobenius_context, norm_xi_log, FrobeniusContext};
use crate::integrator::{log_h, log_k, mean_log_fa, IntegrationResult, QmcPlan};
use crate::theta::{siegel_reduce, PeriodMatrix, Tolerance};

/// Flagged-point fraction above which a run is reported as unreliable.
pub const MAX_FLAGGED_FRACTION: f64 = 1e-4;

fn ln_2pi() -> f64 {
    (2.0 * PI).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValueErr {
    pub value: f64,
    pub err: f64,
}

/// A quantity `c_k log||K|| + c_h log||H|| + c_0`.
#[derive(Clone, Copy, Debug)]
struct Linear {
    k: f64,
    h: f64,
    c: f64,
}

impl Linear {
    fn at(&self, k: &IntegrationResult, h: &IntegrationResult) -> ValueErr {
        ValueErr {
            value: self.k * k.mean + self.h * h.mean + self.c,
            err: self.k.abs() * k.stderr + self.h.abs() * h.stderr,
        }
    }
}

fn phi_form() -> Linear {
    Linear { k: -2.0 / 3.0, h: 32.0 / 3.0, c: 8.0 * LN_2 }
}

fn delta_form() -> Linear {
    Linear { k: -4.0 / 3.0, h: -8.0 / 3.0, c: -24.0 * ln_2pi() + 16.0 * LN_2 }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantReport {
    #[serde(rename = "logH")]
    pub log_h: IntegrationResult,
    #[serde(rename = "logK")]
    pub log_k: IntegrationResult,
    pub phi_kz: ValueErr,
    pub delta: ValueErr,
    pub lambda: ValueErr,
    pub beta_rep: ValueErr,
    pub wilms_residual: f64,
    pub beta_residual: f64,
    pub flags: Vec<String>,
}

/// Assembles the report from the two integrals.
pub fn assemble(log_h: IntegrationResult, log_k: IntegrationResult, mut flags: Vec<String>) -> InvariantReport {
    let phi = phi_form().at(&log_k, &log_h);
    let delta = delta_form().at(&log_k, &log_h);
    // lambda = phi/21 + delta/12 - ln 2 pi, expanded in K and H
    let lambda = Linear {
        k: phi_form().k / 21.0 + delta_form().k / 12.0,
        h: phi_form().h / 21.0 + delta_form().h / 12.0,
        c: phi_form().c / 21.0 + delta_form().c / 12.0 - ln_2pi(),
    }
    .at(&log_k, &log_h);
    let beta = Linear { k: -4.0, h: 8.0, c: 0.0 }.at(&log_k, &log_h);
    let wilms_residual = delta.value - (-24.0 * log_h.mean + 2.0 * phi.value - 24.0 * ln_2pi());
    let beta_residual =
        beta.value - (4.0 / 3.0 * phi.value + 7.0 / 3.0 * delta.value - 48.0 * LN_2 + 56.0 * ln_2pi());
    for (name, r) in [("logH", &log_h), ("logK", &log_k)] {
        let frac = r.flagged_points as f64 / r.total() as f64;
        if frac > MAX_FLAGGED_FRACTION {
            flags.push(format!("{name}: {} clamped evaluations ({frac:.2e} of total)", r.flagged_points));
        }
    }
    InvariantReport {
        log_h,
        log_k,
        phi_kz: phi,
        delta,
        lambda,
        beta_rep: beta,
        wilms_residual,
        beta_residual,
        flags,
    }
}

pub fn invariants_report(ctx: &FrobeniusContext, plan: &QmcPlan) -> Result<InvariantReport> {
    let mut flags = Vec::new();
    if ctx.near_decomposable() {
        flags.push("near-decomposable; log||K|| diverges to -inf along this locus".to_string());
    }
    let h = log_h(ctx.evaluator(), plan)?;
    let k = log_k(ctx, plan)?;
    Ok(assemble(h, k, flags))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub vanishing: String,
    pub phi_main: ValueErr,
    pub phi_hyp: ValueErr,
    /// Standard error of `phi_main - phi_hyp`; both share the `log ||H||` sample.
    pub sigma_combined: f64,
    pub norm_xi_log: f64,
    /// `-(1/30) log ||xi||` against `-(20/30)(log ||K|| - 2 log ||H||)`.
    pub xi_route: ValueErr,
    pub psi_route: ValueErr,
    pub report: InvariantReport,
}

pub fn hyperelliptic_cross_check(ctx: &FrobeniusContext, plan: &QmcPlan) -> Result<CrossCheck> {
    let k = ctx.vanishing().ok_or(Error::NotHyperelliptic)?;
    let report = invariants_report(ctx, plan)?;
    let norm_xi = norm_xi_log(ctx.tau(), ctx.tolerance()).map_err(|_| Error::NotHyperelliptic)?;
    let h = &report.log_h;
    let phi_hyp = ValueErr {
        value: -norm_xi / 30.0 + 28.0 / 3.0 * h.mean + 8.0 * LN_2,
        err: 28.0 / 3.0 * h.stderr,
    };
    let diff = Linear { k: phi_form().k, h: phi_form().h - 28.0 / 3.0, c: 0.0 }.at(&report.log_k, h);
    let psi_route = Linear { k: -20.0 / 30.0, h: 40.0 / 30.0, c: 0.0 }.at(&report.log_k, h);
    Ok(CrossCheck {
        vanishing: k.to_string(),
        phi_main: report.phi_kz,
        phi_hyp,
        sigma_combined: diff.err,
        norm_xi_log: norm_xi,
        xi_route: ValueErr { value: -norm_xi / 30.0, err: 0.0 },
        psi_route,
        report,
    })
}

/// `2 ln |f_a(D)| - 2 int ln |f_a| mu` from a precomputed mean.
pub fn ceresa_height_with(
    a: &Characteristic,
    d: &[Complex64],
    ctx: &FrobeniusContext,
    mean: &IntegrationResult,
) -> Result<ValueErr> {
    let f = ctx.f_a_value(a, d)?;
    if f.norm() == 0.0 || !f.is_finite() {
        return Err(Error::NearPole);
    }
    Ok(ValueErr { value: 2.0 * f.norm().ln() - 2.0 * mean.mean, err: 2.0 * mean.stderr })
}

pub fn ceresa_height(a: &Characteristic, d: &[Complex64], ctx: &FrobeniusContext, plan: &QmcPlan) -> Result<ValueErr> {
    // fail fast on a pole before integrating
    ctx.f_a_value(a, d)?;
    let mean = mean_log_fa(a, ctx, plan)?;
    ceresa_height_with(a, d, ctx, &mean)
}

/// Siegel-reduces `tau`, builds a context with the default translation and
/// runs [`invariants_report`].
pub fn invariants_for(tau: &PeriodMatrix, tol: Tolerance, plan: &QmcPlan) -> Result<InvariantReport> {
    let (tau, _) = siegel_reduce(tau)?;
    invariants_report(&build_frobenius_context(&tau, tol, None)?, plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::{locate_hyperelliptic, tests::random_tau};
    use crate::theta::{symplectic_apply, torus_point, SymplecticMatrix, ThetaEvaluator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fake(mean: f64, stderr: f64) -> IntegrationResult {
        IntegrationResult { mean, stderr, n_points: 1024, n_shifts: 8, seed: 0, flagged_points: 0 }
    }

    #[test]
    fn coefficient_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let h = fake(rng.random_range(-5.0..5.0), rng.random_range(0.0..0.1));
            let k = fake(rng.random_range(-40.0..10.0), rng.random_range(0.0..0.1));
            let r = assemble(h, k, vec![]);
            assert!(r.wilms_residual.abs() <= 1e-12 * (1.0 + r.delta.value.abs()));
            assert!(r.beta_residual.abs() <= 1e-12 * (1.0 + r.beta_rep.value.abs()));
            assert_eq!(r.phi_kz.err, 2.0 / 3.0 * k.stderr + 32.0 / 3.0 * h.stderr);
            assert_eq!(r.delta.err, 4.0 / 3.0 * k.stderr + 8.0 / 3.0 * h.stderr);
            assert!((r.lambda.value - (r.phi_kz.value / 21.0 + r.delta.value / 12.0 - ln_2pi())).abs() <= 1e-12 * 50.0);
        }
        // rational coefficients behind the beta representative
        assert!((4.0 / 3.0 * (-2.0 / 3.0) + 7.0 / 3.0 * (-4.0 / 3.0) + 4.0f64).abs() < 1e-15);
        assert!((4.0 / 3.0 * (32.0 / 3.0) + 7.0 / 3.0 * (-8.0 / 3.0) - 8.0f64).abs() < 1e-14);
    }

    #[test]
    fn flagged_fraction_is_reported() {
        let mut k = fake(1.0, 0.1);
        k.flagged_points = 5;
        let r = assemble(fake(0.0, 0.1), k, vec![]);
        assert_eq!(r.flags.len(), 1);
        assert!(r.flags[0].starts_with("logK"));
    }

    fn hyperelliptic_fixture() -> FrobeniusContext {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let tau0 = random_tau(&mut rng);
        let eval = ThetaEvaluator::new(&tau0, Tolerance::default());
        let k = Characteristic::all(3)
            .filter(|a| a.is_even())
            .min_by(|a, b| eval.null(a).norm().total_cmp(&eval.null(b).norm()))
            .unwrap();
        let tau = locate_hyperelliptic(&tau0, &k, 50, Tolerance::default()).unwrap();
        build_frobenius_context(&tau, Tolerance::default(), None).unwrap()
    }

    #[test]
    fn hyperelliptic_routes_agree() {
        let ctx = hyperelliptic_fixture();
        let plan = QmcPlan::new(1 << 12, 8, 0).unwrap();
        let c = hyperelliptic_cross_check(&ctx, &plan).unwrap();
        assert!(
            (c.phi_main.value - c.phi_hyp.value).abs() <= 3.0 * c.sigma_combined,
            "{:?} vs {:?} ({})",
            c.phi_main,
            c.phi_hyp,
            c.sigma_combined
        );
        assert!((c.xi_route.value - c.psi_route.value).abs() <= 3.0 * c.psi_route.err);
        assert!(hyperelliptic_cross_check(&build_frobenius_context(&random_tau(&mut ChaCha8Rng::seed_from_u64(3)), Tolerance::default(), None).unwrap(), &plan)
            .is_err_and(|e| e == Error::NotHyperelliptic));
    }

    #[test]
    fn height_vanishes_at_weierstrass_characteristic() {
        let ctx = hyperelliptic_fixture();
        let k = ctx.vanishing().unwrap();
        let plan = QmcPlan::new(1 << 10, 4, 1).unwrap();
        let mean = mean_log_fa(&k, &ctx, &plan).unwrap();
        assert!(mean.stderr <= 1e-6 * mean.mean.abs().max(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
            let d = torus_point(ctx.tau(), &x, &y);
            let h = ceresa_height_with(&k, &d, &ctx, &mean).unwrap();
            assert!(h.value.abs() <= 1e-6, "{h:?}");
        }
    }

    #[test]
    fn height_is_even_and_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ctx = build_frobenius_context(&random_tau(&mut rng), Tolerance::default(), None).unwrap();
        let a: Characteristic = "010/110".parse().unwrap();
        let mean = mean_log_fa(&a, &ctx, &QmcPlan::new(1 << 10, 4, 0).unwrap()).unwrap();
        // a + b even keeps D off the divisor of theta_a
        let b: Characteristic = "100/000".parse().unwrap();
        let d = torus_point(ctx.tau(), &b.top_half(), &b.bottom_half());
        let h1 = ceresa_height_with(&a, &d, &ctx, &mean).unwrap();
        let neg: Vec<Complex64> = d.iter().map(|v| -v).collect();
        let h2 = ceresa_height_with(&a, &neg, &ctx, &mean).unwrap();
        assert!(h1.value.is_finite());
        assert!((h1.value - h2.value).abs() <= 1e-10 * h1.value.abs().max(1.0));
        // odd a: theta_a vanishes at the origin
        let odd: Characteristic = "100/100".parse().unwrap();
        assert_eq!(ctx.f_a_value(&odd, &[Complex64::new(0.0, 0.0); 3]), Err(Error::NearPole));
    }

    #[test]
    fn symplectic_invariance_of_phi_and_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tau = random_tau(&mut rng);
        let plan = QmcPlan::new(1 << 11, 8, 3).unwrap();
        let r0 = invariants_for(&tau, Tolerance::default(), &plan).unwrap();
        let mut done = 0;
        while done < 2 {
            let s = SymplecticMatrix::random(&mut rng, 3, 3);
            let Ok((_, tau2)) = symplectic_apply(&s, &[Complex64::new(0.0, 0.0); 3], &tau) else { continue };
            if tau2.lambda_min() < 0.3 || tau2.max_abs_entry() > 8.0 {
                continue;
            }
            let r1 = invariants_for(&tau2, Tolerance::default(), &plan).unwrap();
            for (a, b) in [(r0.phi_kz, r1.phi_kz), (r0.delta, r1.delta)] {
                assert!((a.value - b.value).abs() <= 3.0 * (a.err * a.err + b.err * b.err).sqrt());
            }
            done += 1;
        }
    }
}
