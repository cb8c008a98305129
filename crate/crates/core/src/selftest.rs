//! The acceptance battery, parameterized by a computational budget.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::char_algebra::{
    build_fundamental_system, decompositions, difference_representation_count, enumerate_by_parity,
    pencil_representatives, pencil_statistics, Characteristic,
};
use crate::error::Result;
use crate::fixtures::{hyperelliptic_tau, random_tau, split_tau};
use crate::frobenius::{build_frobenius_context, psi_log, wrap_angle, xi_log, FrobeniusContext};
use crate::integrator::{integrate_torus, log_h, log_k, IntegrandId, QmcPlan, Target};
use crate::invariants::hyperelliptic_cross_check;
use crate::theta::{
    e_factor, eta_factor, siegel_reduce, sqrt_pairing_sign, symplectic_apply, theta_char, theta_char_with_radius, torus_point,
    truncation_radius_for, PeriodMatrix, SymplecticMatrix, ThetaEvaluator, Tolerance,
};

type C = Complex64;

#[derive(Clone, Debug)]
pub struct Budget {
    pub seed: u64,
    pub kernel_cases: usize,
    pub random_taus: usize,
    pub norm_plan: QmcPlan,
    pub hyper_plan: QmcPlan,
    pub pointwise_transports: usize,
    pub integral_transports: usize,
    pub modular_plan: QmcPlan,
    pub decomposable_points: usize,
}

impl Budget {
    /// The budgets the criteria are stated at.
    pub fn full(seed: u64) -> Self {
        Self {
            seed,
            kernel_cases: 100,
            random_taus: 3,
            norm_plan: QmcPlan { n_points: 1 << 20, n_shifts: 8, seed },
            hyper_plan: QmcPlan { n_points: 1 << 20, n_shifts: 8, seed },
            pointwise_transports: 20,
            integral_transports: 2,
            modular_plan: QmcPlan { n_points: 1 << 14, n_shifts: 8, seed },
            decomposable_points: 100,
        }
    }

    /// Same checks and tolerances with smaller integrals and sample counts.
    pub fn reduced(seed: u64) -> Self {
        Self {
            seed,
            kernel_cases: 30,
            random_taus: 1,
            norm_plan: QmcPlan { n_points: 1 << 14, n_shifts: 8, seed },
            hyper_plan: QmcPlan { n_points: 1 << 14, n_shifts: 8, seed },
            pointwise_transports: 5,
            integral_transports: 1,
            modular_plan: QmcPlan { n_points: 1 << 11, n_shifts: 8, seed },
            decomposable_points: 20,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub pass: bool,
    pub criteria: Vec<Outcome>,
}

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "combinatorics"),
    (2, "theta kernel"),
    (3, "normalization integral"),
    (4, "two-torsion identity"),
    (5, "quartic vanishing at the origin"),
    (6, "choice independence"),
    (7, "decomposable vanishing"),
    (8, "hyperelliptic suite"),
    (9, "invariant assembly"),
    (10, "modular invariance"),
    (11, "determinism"),
];

pub fn run(budget: &Budget) -> SelftestReport {
    let criteria: Vec<Outcome> = CRITERIA.iter().map(|(id, _)| run_criterion(*id, budget)).collect();
    SelftestReport { seed: budget.seed, pass: criteria.iter().all(|c| c.pass), criteria }
}

pub fn run_criterion(id: u8, budget: &Budget) -> Outcome {
    let name = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1);
    let result = match id {
        1 => combinatorics(),
        2 => kernel(budget),
        3 => normalization(budget),
        4 => two_torsion(budget),
        5 => quartic(budget),
        6 => choice_independence(budget),
        7 => decomposable(budget),
        8 => hyperelliptic(budget),
        9 => assembly(budget),
        10 => modular(budget),
        11 => determinism(budget),
        _ => Ok((false, json!({"error": "no such criterion"}))),
    };
    let (pass, detail) = result.unwrap_or_else(|e| (false, json!({"error": e.to_string()})));
    Outcome { id, name, pass, detail }
}

fn tol() -> Tolerance {
    Tolerance::default()
}

fn rng_for(budget: &Budget, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(budget.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

fn random_z(rng: &mut ChaCha8Rng, s: f64) -> Vec<C> {
    (0..3).map(|_| C::new(rng.random_range(-s..s), rng.random_range(-s..s))).collect()
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm().max(a.norm())
}

fn combinatorics() -> Result<(bool, Value)> {
    let (even, odd) = enumerate_by_parity(3);
    let diff_ok = Characteristic::all(3)
        .all(|a| difference_representation_count(&a) == if a.is_zero() { 0 } else { 16 });
    let base = build_fundamental_system()?;
    let stats = pencil_statistics(&base)?;
    let distinct: BTreeSet<Vec<Characteristic>> = stats
        .translates
        .iter()
        .map(|f| {
            let mut m = f.members().to_vec();
            m.sort();
            m
        })
        .collect();
    let reps = pencil_representatives(&base)?;
    let ks: BTreeSet<Characteristic> = reps.iter().map(|f| f.k()).collect();
    let evens: BTreeSet<Characteristic> = even.iter().copied().collect();
    let pass = even.len() == 36
        && odd.len() == 28
        && diff_ok
        && distinct.len() == 64
        && stats.seven_odd_count == 8
        && stats.three_odd_count == 56
        && reps.len() == 36
        && ks == evens;
    Ok((
        pass,
        json!({
            "even": even.len(), "odd": odd.len(), "diff_reps_ok": diff_ok,
            "pencil_systems": distinct.len(), "seven_odd": stats.seven_odd_count,
            "three_odd": stats.three_odd_count, "representatives": reps.len(), "distinct_k": ks.len(),
        }),
    ))
}

/// Plain theta series over a box around the dominant term; no reduction.
pub fn theta_series(a: &Characteristic, z: &[C], tau: &PeriodMatrix) -> C {
    let t = tau.tau();
    let (at, ab) = (a.top_half(), a.bottom_half());
    let yz: Vec<f64> = z.iter().map(|v| v.im).collect();
    let centre: Vec<f64> = (0..3).map(|i| -(0..3).map(|j| tau.im_inv()[(i, j)] * yz[j]).sum::<f64>() - at[i]).collect();
    let half = ((40.0 / (PI * tau.lambda_min())).sqrt()).ceil() as i64 + 1;
    let mut s = C::new(0.0, 0.0);
    for n0 in -half..=half {
        for n1 in -half..=half {
            for n2 in -half..=half {
                let n = [n0, n1, n2];
                let v: Vec<f64> = (0..3).map(|i| (centre[i].round() as i64 + n[i]) as f64 + at[i]).collect();
                let mut e = C::new(0.0, 0.0);
                for i in 0..3 {
                    for j in 0..3 {
                        e += t[(i, j)] * (v[i] * v[j]);
                    }
                    e += (z[i] + ab[i]) * (2.0 * v[i]);
                }
                s += (C::i() * PI * e).exp();
            }
        }
    }
    s
}

fn kernel(budget: &Budget) -> Result<(bool, Value)> {
    let tau = random_tau(budget.seed);
    let mut rng = rng_for(budget, 2);
    let zero = Characteristic::zero(3);
    let (mut fe, mut par, mut tr) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..budget.kernel_cases {
        let a = Characteristic::from_index(3, rng.random_range(0..64));
        let z = random_z(&mut rng, 0.6);
        let mt: Vec<i64> = (0..3).map(|_| rng.random_range(-1..=1)).collect();
        let mb: Vec<i64> = (0..3).map(|_| rng.random_range(-3..=3)).collect();
        let shift = torus_point(&tau, &mt.iter().map(|&v| v as f64).collect::<Vec<_>>(), &mb.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let zs: Vec<C> = (0..3).map(|i| z[i] + shift[i]).collect();
        let rhs = theta_char(&a, &z, &tau, tol())? * sqrt_pairing_sign(&a, &mt, &mb) as f64 * e_factor(&mt, &mb, &z, &tau);
        fe = fe.max(rel(theta_series(&a, &zs, &tau), rhs));

        let neg: Vec<C> = z.iter().map(|v| -v).collect();
        let direct = theta_series(&a, &z, &tau);
        par = par.max(rel(theta_char(&a, &neg, &tau, tol())?, direct * a.parity_sign() as f64));

        let p = torus_point(&tau, &a.top_half(), &a.bottom_half());
        let zt: Vec<C> = (0..3).map(|i| z[i] + p[i]).collect();
        tr = tr.max(rel(theta_char(&zero, &zt, &tau, tol())?, direct * eta_factor(&a, &z, &tau)));
    }
    // radius doubling at the lower end of the supported range
    let scaled = PeriodMatrix::from_parts(tau.re(), &(tau.im() * (0.3 / tau.lambda_min())))?;
    let r = truncation_radius_for(&scaled, tol());
    let mut dbl = 0.0f64;
    for _ in 0..budget.kernel_cases.min(20) {
        let a = Characteristic::from_index(3, rng.random_range(0..64));
        let z = random_z(&mut rng, 1.0);
        let v1 = theta_char_with_radius(&a, &z, &scaled, r)?;
        let v2 = theta_char_with_radius(&a, &z, &scaled, 2.0 * r)?;
        dbl = dbl.max((v1 - v2).norm() / v2.norm());
    }
    let pass = fe <= 1e-12 && par <= 1e-11 && tr <= 1e-11 && dbl <= 1e-12;
    Ok((pass, json!({"functional": fe, "parity": par, "translation": tr, "radius_doubling": dbl})))
}

fn normalization(budget: &Budget) -> Result<(bool, Value)> {
    let eval = ThetaEvaluator::new(&random_tau(budget.seed), tol());
    let r = integrate_torus(&IntegrandId::NormThetaSquared, Target::Theta(&eval), &budget.norm_plan)?;
    let target = 2f64.powf(-1.5);
    let pass = (r.mean - target).abs() <= 3.0 * r.stderr && r.stderr <= 5e-4 && r.flagged_points == 0;
    Ok((pass, json!({"result": r, "target": target, "deviation": r.mean - target})))
}

/// Largest relative residual of the two-torsion identity; the origin is
/// measured against the largest right-hand side.
pub fn two_torsion_residual(ctx: &FrobeniusContext) -> Result<f64> {
    let zero = [C::new(0.0, 0.0); 3];
    let mut rows = Vec::new();
    for a in Characteristic::all(3) {
        let z = torus_point(ctx.tau(), &a.top_half(), &a.bottom_half());
        let eta = eta_factor(&a, &zero, ctx.tau());
        rows.push((ctx.phi(&z)?, ctx.reduced_value(&a).to_complex() * eta * eta));
    }
    let scale = rows.iter().map(|r| r.1.norm()).fold(0.0, f64::max);
    Ok(rows.iter().map(|(l, r)| (l - r).norm() / r.norm().max(if r.norm() == 0.0 { scale } else { 0.0 })).fold(0.0, f64::max))
}

fn two_torsion(budget: &Budget) -> Result<(bool, Value)> {
    let mut worst = Vec::new();
    for i in 0..budget.random_taus as u64 {
        let ctx = build_frobenius_context(&random_tau(budget.seed + 100 + i), tol(), None)?;
        worst.push(two_torsion_residual(&ctx)?);
    }
    Ok((worst.iter().all(|&w| w <= 1e-8), json!({"max_relative_residual": worst})))
}

fn quartic(budget: &Budget) -> Result<(bool, Value)> {
    let ctx = build_frobenius_context(&random_tau(budget.seed), tol(), None)?;
    let mut rng = rng_for(budget, 5);
    let eps = 2f64.powi(-7);
    let mut ratios = Vec::new();
    for _ in 0..10 {
        let v = random_z(&mut rng, 1.0);
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let z1: Vec<C> = v.iter().map(|c| c * (eps / n)).collect();
        let z2: Vec<C> = z1.iter().map(|c| c * 2.0).collect();
        ratios.push(ctx.phi(&z1)?.norm() / ctx.phi(&z2)?.norm());
    }
    let pass = ratios.iter().all(|r| (r * 16.0 - 1.0).abs() <= 0.25);
    Ok((pass, json!({"ratios": ratios, "target": 1.0 / 16.0})))
}

fn choice_independence(budget: &Budget) -> Result<(bool, Value)> {
    let ctx = build_frobenius_context(&random_tau(budget.seed + 1), tol(), None)?;
    let mut rng = rng_for(budget, 6);
    let k2 = ctx
        .reps()
        .iter()
        .map(|f| f.k())
        .filter(|k| *k != ctx.k_star())
        .max_by(|a, b| ctx.nulls()[a].norm().total_cmp(&ctx.nulls()[b].norm()))
        .expect("35 other pencils");
    let b2 = Characteristic::from_index(3, rng.random_range(1..64));
    let mut phi_dev = 0.0f64;
    for _ in 0..10 {
        let z = random_z(&mut rng, 0.7);
        phi_dev = phi_dev.max(rel(ctx.phi_with(&k2, &b2, &z)?, ctx.phi(&z)?));
    }
    let mut h_dev = 0.0f64;
    for a in Characteristic::all(3).filter(|a| !a.is_zero()) {
        let h = ctx.reduced_value(&a).to_complex();
        for k in Characteristic::all(3).filter(|k| k.is_even() && (*k ^ a).is_even()) {
            for d in decompositions(&a, &k, ctx.reps()) {
                h_dev = h_dev.max(rel(ctx.reduced_value_from(&d, &a).to_complex(), h));
            }
        }
    }
    Ok((
        phi_dev <= 1e-8 && h_dev <= 1e-10,
        json!({"k_star": ctx.k_star().to_string(), "k": k2.to_string(), "b": b2.to_string(), "phi": phi_dev, "h": h_dev}),
    ))
}

fn decomposable(budget: &Budget) -> Result<(bool, Value)> {
    let ctx = build_frobenius_context(&split_tau(), tol(), None)?;
    let mut rng = rng_for(budget, 7);
    // size the reduced values would have if no factor vanished
    let h_scale = ctx.nulls().values().map(|v| v.norm()).fold(0.0, f64::max).powi(16);
    let k0 = ctx.nulls()[&ctx.k_star()].norm_sqr();
    let mut worst = 0.0f64;
    for _ in 0..budget.decomposable_points {
        let z = random_z(&mut rng, 0.8);
        let mut weight = 0.0;
        for lambda in ctx.system().members() {
            weight += ctx.evaluator().theta(&(ctx.k_star() ^ *lambda), &z)?.norm_sqr();
        }
        worst = worst.max(ctx.phi(&z)?.norm() / (h_scale * weight / k0));
    }
    Ok((
        worst <= 1e-10 && ctx.near_decomposable(),
        json!({"max_relative_phi": worst, "h_scale": h_scale, "near_decomposable": ctx.near_decomposable()}),
    ))
}

fn hyperelliptic(budget: &Budget) -> Result<(bool, Value)> {
    let loc = hyperelliptic_tau(budget.seed, tol())?;
    let ctx = build_frobenius_context(&loc.tau, tol(), None)?;
    let k = loc.characteristic;
    let mut nulls: Vec<f64> = ctx.nulls().values().map(|v| v.norm()).collect();
    nulls.sort_by(f64::total_cmp);
    let null_ratio = ctx.nulls()[&k].norm() / nulls[nulls.len() / 2];

    let mut rng = rng_for(budget, 8);
    let mut values = Vec::new();
    while values.len() < 10 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
        if let Ok(f) = ctx.f_a_value(&k, &torus_point(&loc.tau, &x, &y)) {
            values.push(f);
        }
    }
    let spread = values.iter().map(|f| rel(*f, values[0])).fold(0.0, f64::max);

    let a = Characteristic::all(3).find(|a| !a.is_zero() && (k ^ *a).is_even()).expect("admissible a");
    let psi = psi_log(&ctx, &a)?.powi(140);
    let xi = xi_log(&loc.tau, tol())?.powi(7);
    let log_dev = (psi.logabs - xi.logabs).abs() / xi.logabs.abs();
    let arg_dev = wrap_angle(psi.arg - xi.arg).abs();

    let (mut live, mut dead) = (f64::INFINITY, 0.0f64);
    for a in Characteristic::all(3).filter(|a| !a.is_zero()) {
        let h = ctx.reduced_value(&a).abs();
        if (k ^ a).is_odd() {
            dead = dead.max(h);
        } else {
            live = live.min(h);
        }
    }
    let gap = live / dead;
    let pass = null_ratio <= 1e-12 && spread <= 1e-6 && log_dev <= 1e-6 && arg_dev <= 1e-6 && gap >= 1e6;
    Ok((
        pass,
        json!({
            "located": loc, "null_ratio": null_ratio, "f_k_spread": spread,
            "psi140_xi7_logabs": log_dev, "psi140_xi7_arg": arg_dev, "h_gap": gap,
        }),
    ))
}

fn assembly(budget: &Budget) -> Result<(bool, Value)> {
    let loc = hyperelliptic_tau(budget.seed, tol())?;
    // same curve, cheaper lattice sums
    let (tau, _) = siegel_reduce(&loc.tau)?;
    let ctx = build_frobenius_context(&tau, tol(), None)?;
    let c = hyperelliptic_cross_check(&ctx, &budget.hyper_plan)?;
    let diff = (c.phi_main.value - c.phi_hyp.value).abs();
    let pass = c.report.wilms_residual.abs() <= 1e-12
        && c.report.beta_residual.abs() <= 1e-12
        && diff <= 3.0 * c.sigma_combined;
    Ok((
        pass,
        json!({
            "wilms_residual": c.report.wilms_residual, "beta_residual": c.report.beta_residual,
            "phi_main": c.phi_main, "phi_hyp": c.phi_hyp, "difference": diff,
            "sigma_combined": c.sigma_combined,
        }),
    ))
}

fn transport(
    rng: &mut ChaCha8Rng,
    tau: &PeriodMatrix,
    z: &[C],
    lambda_floor: f64,
    max_entry: f64,
) -> (Vec<C>, PeriodMatrix) {
    loop {
        let s = SymplecticMatrix::random(rng, 3, 3);
        if let Ok((z2, t2)) = symplectic_apply(&s, z, tau) {
            if t2.lambda_min() >= lambda_floor && t2.max_abs_entry() <= max_entry {
                return (z2, t2);
            }
        }
    }
}

fn modular(budget: &Budget) -> Result<(bool, Value)> {
    let tau = random_tau(budget.seed + 2);
    let ctx = build_frobenius_context(&tau, tol(), None)?;
    let mut rng = rng_for(budget, 10);
    let mut pointwise = 0.0f64;
    for _ in 0..budget.pointwise_transports {
        let z = random_z(&mut rng, 0.6);
        let (z2, tau2) = transport(&mut rng, &tau, &z, 0.1, 20.0);
        let ctx2 = build_frobenius_context(&tau2, tol(), None)?;
        let (n1, n2) = (ctx.norm_phi(&z)?, ctx2.norm_phi(&z2)?);
        pointwise = pointwise.max((n1 - n2).abs() / n1);
    }
    let plan = &budget.modular_plan;
    let (h0, k0) = (log_h(ctx.evaluator(), plan)?, log_k(&ctx, plan)?);
    let mut sigmas = Vec::new();
    for _ in 0..budget.integral_transports {
        let (_, tau2) = transport(&mut rng, &tau, &[C::new(0.0, 0.0); 3], 0.3, 8.0);
        let ctx2 = build_frobenius_context(&tau2, tol(), None)?;
        for (a, b) in [(h0, log_h(ctx2.evaluator(), plan)?), (k0, log_k(&ctx2, plan)?)] {
            sigmas.push((a.mean - b.mean).abs() / (a.stderr.powi(2) + b.stderr.powi(2)).sqrt());
        }
    }
    let pass = pointwise <= 1e-7 && sigmas.iter().all(|&s| s <= 3.0);
    Ok((pass, json!({"pointwise": pointwise, "integral_deviation_in_sigma": sigmas})))
}

fn determinism(budget: &Budget) -> Result<(bool, Value)> {
    let ctx = build_frobenius_context(&random_tau(budget.seed), tol(), None)?;
    let plan = QmcPlan { n_points: 1 << 10, n_shifts: 4, seed: budget.seed };
    let once = crate::json::to_string(&log_k(&ctx, &plan)?);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| crate::error::Error::Input(e.to_string()))?;
    let again = pool.install(|| log_k(&ctx, &plan).map(|r| crate::json::to_string(&r)))?;
    Ok((once == again, json!({"bytes": once.len(), "identical": once == again})))
}
