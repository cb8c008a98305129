//! Randomly shifted quasi-Monte Carlo integration over the torus
//! `C^3 / (Z^3 + tau Z^3)` against its normalized Haar measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::char_algebra::Characteristic;
use crate::error::{Error, Result};
use crate::frobenius::FrobeniusContext;
use crate::theta::{log_p_norm, Cell, ThetaEvaluator};

pub const DIM: usize = 6;
const BITS: usize = 32;
const CHUNK: usize = 1 << 12;

/// Log arguments below this are clamped and the point is flagged.
pub const LOG_FLOOR: f64 = 1e-300;

/// `(degree s, coefficients a, initial m_1..m_s)` for dimensions 2..=6.
const DIRECTIONS: [(u32, u32, &[u32]); DIM - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
];

/// Sobol points in `[0,1)^6`, visited in Gray-code order.
#[derive(Clone, Debug)]
pub struct Sobol {
    v: [[u32; BITS]; DIM],
}

impl Default for Sobol {
    fn default() -> Self {
        Self::new()
    }
}

impl Sobol {
    pub fn new() -> Self {
        let mut v = [[0u32; BITS]; DIM];
        for (k, slot) in v[0].iter_mut().enumerate() {
            *slot = 1 << (BITS - 1 - k);
        }
        for (d, (s, a, m)) in DIRECTIONS.iter().enumerate() {
            let s = *s as usize;
            let row = &mut v[d + 1];
            for k in 0..s {
                row[k] = m[k] << (BITS - 1 - k);
            }
            for k in s..BITS {
                let mut x = row[k - s] ^ (row[k - s] >> s);
                for j in 1..s {
                    if (a >> (s - 1 - j)) & 1 == 1 {
                        x ^= row[k - j];
                    }
                }
                row[k] = x;
            }
        }
        Self { v }
    }

    /// Integer state of the `i`-th point in Gray-code order.
    pub fn state(&self, i: u64) -> [u32; DIM] {
        let gray = i ^ (i >> 1);
        let mut x = [0u32; DIM];
        for k in 0..BITS {
            if (gray >> k) & 1 == 1 {
                for d in 0..DIM {
                    x[d] ^= self.v[d][k];
                }
            }
        }
        x
    }

    /// Advances the state from point `i` to point `i + 1`.
    pub fn step(&self, x: &mut [u32; DIM], i: u64) {
        let k = (!i).trailing_zeros() as usize;
        for d in 0..DIM {
            x[d] ^= self.v[d][k];
        }
    }

    pub fn point(&self, i: u64) -> [f64; DIM] {
        to_unit(&self.state(i))
    }
}

fn to_unit(x: &[u32; DIM]) -> [f64; DIM] {
    let mut u = [0.0; DIM];
    for d in 0..DIM {
        u[d] = x[d] as f64 * (1.0 / 4294967296.0);
    }
    u
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QmcPlan {
    pub n_points: usize,
    pub n_shifts: usize,
    pub seed: u64,
}

impl Default for QmcPlan {
    fn default() -> Self {
        Self { n_points: 1 << 20, n_shifts: 8, seed: 0 }
    }
}

impl QmcPlan {
    pub fn new(n_points: usize, n_shifts: usize, seed: u64) -> Result<Self> {
        if n_points < 1 << 10 || !n_points.is_power_of_two() || n_points > 1 << 32 {
            return Err(Error::InvalidPlan(format!("n_points = {n_points} must be a power of two >= 1024")));
        }
        if n_shifts < 4 {
            return Err(Error::InvalidPlan(format!("n_shifts = {n_shifts} must be at least 4")));
        }
        Ok(Self { n_points, n_shifts, seed })
    }

    /// Cranley-Patterson shifts drawn from ChaCha8 seeded with `seed`.
    pub fn shifts(&self) -> Vec<[f64; DIM]> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_shifts).map(|_| std::array::from_fn(|_| rng.random::<f64>())).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegrationResult {
    pub mean: f64,
    pub stderr: f64,
    pub n_points: usize,
    pub n_shifts: usize,
    pub seed: u64,
    #[serde(rename = "flagged")]
    pub flagged_points: u64,
}

impl IntegrationResult {
    pub fn total(&self) -> u64 {
        (self.n_points * self.n_shifts) as u64
    }
}

/// Integrates `f(u)` over `[0,1)^6`; `f` returns the value and whether it was clamped.
pub fn integrate_with<F>(plan: &QmcPlan, f: F) -> IntegrationResult
where
    F: Fn(&[f64; DIM]) -> (f64, bool) + Sync,
{
    let sobol = Sobol::new();
    let chunks = plan.n_points.div_ceil(CHUNK);
    let mut means = Vec::with_capacity(plan.n_shifts);
    let mut flagged = 0u64;
    for shift in plan.shifts() {
        let partial: Vec<(f64, u64)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = (c * CHUNK) as u64;
                let end = ((c + 1) * CHUNK).min(plan.n_points) as u64;
                let mut state = sobol.state(start);
                let (mut sum, mut bad) = (0.0, 0u64);
                for i in start..end {
                    let mut u = to_unit(&state);
                    for d in 0..DIM {
                        u[d] += shift[d];
                        if u[d] >= 1.0 {
                            u[d] -= 1.0;
                        }
                    }
                    let (v, clamped) = f(&u);
                    sum += v;
                    bad += clamped as u64;
                    sobol.step(&mut state, i);
                }
                (sum, bad)
            })
            .collect();
        let total: f64 = partial.iter().map(|p| p.0).sum();
        flagged += partial.iter().map(|p| p.1).sum::<u64>();
        means.push(total / plan.n_points as f64);
    }
    let s = means.len() as f64;
    let mean = means.iter().sum::<f64>() / s;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (s - 1.0);
    IntegrationResult {
        mean,
        stderr: (var / s).sqrt(),
        n_points: plan.n_points,
        n_shifts: plan.n_shifts,
        seed: plan.seed,
        flagged_points: flagged,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegrandId {
    LogNormTheta(Characteristic),
    LogNormPhi,
    NormThetaSquared,
    LogAbsFa(Characteristic),
}

/// What an integrand is evaluated against.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Theta(&'a ThetaEvaluator),
    Frobenius(&'a FrobeniusContext),
}

impl<'a> Target<'a> {
    fn evaluator(&self) -> &'a ThetaEvaluator {
        match self {
            Target::Theta(e) => e,
            Target::Frobenius(c) => c.evaluator(),
        }
    }
}

fn clamped_ln(v: f64) -> (f64, bool) {
    if v < LOG_FLOOR {
        (LOG_FLOOR.ln(), true)
    } else {
        (v.ln(), false)
    }
}

/// Integrand value at the point `tau x + y`, `u = (x, y)`.
pub fn evaluate(id: &IntegrandId, target: Target<'_>, u: &[f64; DIM]) -> Result<(f64, bool)> {
    let eval = target.evaluator();
    let tau = eval.tau();
    let cell = eval.cell_xy(&u[..3], &u[3..]);
    let base = |c: &Cell| log_p_norm(&c.z0[..3], tau);
    let ln_det = tau.det_im().ln();
    Ok(match id {
        IntegrandId::LogNormTheta(a) => {
            let (l, bad) = clamped_ln(eval.theta_at_cell(a, &cell).norm());
            (0.25 * ln_det + base(&cell) + l, bad)
        }
        IntegrandId::NormThetaSquared => {
            let th = eval.theta_at_cell(&Characteristic::zero(3), &cell);
            ((0.5 * ln_det + 2.0 * base(&cell)).exp() * th.norm_sqr(), false)
        }
        IntegrandId::LogNormPhi => {
            let Target::Frobenius(ctx) = target else { return Err(Error::MissingContext) };
            let (l, bad) = clamped_ln(ctx.phi_at_cell(&cell).norm());
            (4.0 * ln_det + 2.0 * base(&cell) + l, bad)
        }
        IntegrandId::LogAbsFa(a) => {
            let Target::Frobenius(ctx) = target else { return Err(Error::MissingContext) };
            let (lp, b1) = clamped_ln(ctx.phi_at_cell(&cell).norm());
            let (lt, b2) = clamped_ln(eval.theta_at_cell(a, &cell).norm());
            (lp - 2.0 * lt, b1 || b2)
        }
    })
}

pub fn integrate_torus(id: &IntegrandId, target: Target<'_>, plan: &QmcPlan) -> Result<IntegrationResult> {
    if target.evaluator().tau().genus() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: target.evaluator().tau().genus() });
    }
    // surfaces MissingContext before any work
    evaluate(id, target, &[0.5; DIM])?;
    Ok(integrate_with(plan, |u| evaluate(id, target, u).expect("checked above")))
}

/// `log ||H|| = int log ||theta_0|| mu`.
pub fn log_h(eval: &ThetaEvaluator, plan: &QmcPlan) -> Result<IntegrationResult> {
    integrate_torus(&IntegrandId::LogNormTheta(Characteristic::zero(3)), Target::Theta(eval), plan)
}

/// `log ||K|| = int log ||phi|| mu`; diverges near the decomposable locus,
/// which `ctx.near_decomposable()` reports.
pub fn log_k(ctx: &FrobeniusContext, plan: &QmcPlan) -> Result<IntegrationResult> {
    integrate_torus(&IntegrandId::LogNormPhi, Target::Frobenius(ctx), plan)
}

pub fn mean_log_fa(a: &Characteristic, ctx: &FrobeniusContext, plan: &QmcPlan) -> Result<IntegrationResult> {
    integrate_torus(&IntegrandId::LogAbsFa(*a), Target::Frobenius(ctx), plan)
}
