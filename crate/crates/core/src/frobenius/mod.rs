//! Reduced values `h_a`, Frobenius' theta function `phi` and the quotients
//! `f_a = phi / theta_a^2` in degree three.

mod hyperelliptic;
mod log_complex;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::char_algebra::{
    build_fundamental_system, decompositions, pair_sign, pencil_representatives, Characteristic,
    Decomposition, FundamentalSystem, HalfIntVector,
};
use crate::error::{Error, Result};
use crate::theta::{eta_factor, log_p_norm, torus_point, Cell, PeriodMatrix, ThetaEvaluator, Tolerance};

pub use hyperelliptic::{
    find_vanishing_even_null, locate_hyperelliptic, norm_xi_log, psi_log, xi_log, DEFAULT_NULL_THRESHOLD,
};
pub use log_complex::{wrap_angle, LogComplex};

type C = Complex64;

/// `||theta_a||` below this marks `z` as lying on the divisor of `theta_a`.
pub const POLE_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct FrobeniusContext {
    eval: ThetaEvaluator,
    reps: Vec<FundamentalSystem>,
    nulls: BTreeMap<Characteristic, C>,
    k_star: Characteristic,
    system: usize,
    h_table: Vec<LogComplex>,
    b: Characteristic,
    /// `(k b lambda, (k b lambda, b lambda) h_{b lambda} / theta_k(0)^2)`.
    terms: Vec<(Characteristic, C)>,
    weights: Vec<C>,
    near_decomposable: bool,
    vanishing: Option<Characteristic>,
    phi_scale: f64,
}

pub fn build_frobenius_context(
    tau: &PeriodMatrix,
    tol: Tolerance,
    b: Option<Characteristic>,
) -> Result<FrobeniusContext> {
    if tau.genus() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: tau.genus() });
    }
    let b = b.unwrap_or_else(|| Characteristic::zero(3));
    if b.genus() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: b.genus() });
    }
    let eval = ThetaEvaluator::new(tau, tol);
    let reps = pencil_representatives(&build_fundamental_system()?)?;
    let nulls: BTreeMap<Characteristic, C> =
        Characteristic::all(3).filter(|a| a.is_even()).map(|a| (a, eval.null(&a))).collect();

    let mut system = 0;
    for (i, f) in reps.iter().enumerate() {
        if nulls[&f.k()].norm() > nulls[&reps[system].k()].norm() {
            system = i;
        }
    }
    let k_star = reps[system].k();
    let (vanishing, near_decomposable) = match hyperelliptic::vanishing_among(nulls.iter(), DEFAULT_NULL_THRESHOLD) {
        Ok(v) => (v, false),
        Err(_) => (None, true),
    };

    let mut ctx = FrobeniusContext {
        eval,
        reps,
        nulls,
        k_star,
        system,
        h_table: Vec::new(),
        b,
        terms: Vec::new(),
        weights: Vec::new(),
        near_decomposable,
        vanishing,
        phi_scale: 0.0,
    };
    ctx.h_table = Characteristic::all(3)
        .map(|a| if a.is_zero() { Ok(LogComplex::ZERO) } else { ctx.reduced_value_with(&a, &ctx.default_k(&a)) })
        .collect::<Result<_>>()?;

    ctx.terms = ctx.formula_terms_for(&k_star, &b)?;
    ctx.weights = ctx.eval.square_weights(&ctx.terms);
    ctx.phi_scale = Characteristic::all(3)
        .map(|a| ctx.two_torsion_log_norm(&a))
        .fold(f64::NEG_INFINITY, f64::max)
        .exp();
    Ok(ctx)
}

impl FrobeniusContext {
    pub fn tau(&self) -> &PeriodMatrix {
        self.eval.tau()
    }

    pub fn evaluator(&self) -> &ThetaEvaluator {
        &self.eval
    }

    pub fn tolerance(&self) -> Tolerance {
        self.eval.tolerance()
    }

    pub fn reps(&self) -> &[FundamentalSystem] {
        &self.reps
    }

    pub fn nulls(&self) -> &BTreeMap<Characteristic, C> {
        &self.nulls
    }

    pub fn k_star(&self) -> Characteristic {
        self.k_star
    }

    /// The fundamental system whose odd members sum to `k*`.
    pub fn system(&self) -> &FundamentalSystem {
        &self.reps[self.system]
    }

    pub fn b(&self) -> Characteristic {
        self.b
    }

    pub fn h_table(&self) -> &[LogComplex] {
        &self.h_table
    }

    pub fn near_decomposable(&self) -> bool {
        self.near_decomposable
    }

    /// The single vanishing even null, if exactly one falls below the default threshold.
    pub fn vanishing(&self) -> Option<Characteristic> {
        self.vanishing
    }

    /// Largest `||phi||` over the 64 two-torsion points.
    pub fn phi_scale(&self) -> f64 {
        self.phi_scale
    }

    pub fn reduced_value(&self, a: &Characteristic) -> LogComplex {
        self.h_table[a.index() as usize]
    }

    /// First even `k` in canonical order with `ka` even.
    fn default_k(&self, a: &Characteristic) -> Characteristic {
        Characteristic::all(3)
            .find(|k| k.is_even() && (*k ^ *a).is_even())
            .expect("every class has an admissible k")
    }

    fn check_pair(a: &Characteristic, k: &Characteristic) -> Result<()> {
        if a.is_zero() || k.is_odd() || (*k ^ *a).is_odd() {
            return Err(Error::BadCharacteristic(format!("a = {a}, k = {k}")));
        }
        Ok(())
    }

    /// `h_a` computed from the representative with odd sum `k`.
    pub fn reduced_value_with(&self, a: &Characteristic, k: &Characteristic) -> Result<LogComplex> {
        Self::check_pair(a, k)?;
        let d = decompositions(a, k, &self.reps)
            .into_iter()
            .next()
            .ok_or_else(|| Error::NoDecomposition { a: a.to_string(), k: k.to_string() })?;
        Ok(self.reduced_value_from(&d, a))
    }

    /// `(j, a) prod theta_{k beta gamma delta eps}(0) ...` for one split of the system.
    pub fn reduced_value_from(&self, d: &Decomposition, a: &Characteristic) -> LogComplex {
        let sign = d.j.pair_sign(&a.to_half_int());
        let product: LogComplex = h_arguments(d)
            .iter()
            .map(|v| {
                let c = v.class();
                LogComplex::from_complex(self.nulls[&c] * v.representative_sign() as f64)
            })
            .product();
        LogComplex::from_sign(sign) * product
    }

    /// Classes of the 16 theta constants entering `h_a` for the pair `(a, k)`.
    pub fn h_characteristics(&self, a: &Characteristic, k: &Characteristic) -> Result<Vec<Characteristic>> {
        Self::check_pair(a, k)?;
        let d = decompositions(a, k, &self.reps)
            .into_iter()
            .next()
            .ok_or_else(|| Error::NoDecomposition { a: a.to_string(), k: k.to_string() })?;
        let mut v: Vec<Characteristic> = h_arguments(&d).iter().map(|v| v.class()).collect();
        v.sort();
        Ok(v)
    }

    /// The eight terms `(k b lambda, coefficient)` of the explicit formula.
    pub fn formula_terms(&self) -> &[(Characteristic, C)] {
        &self.terms
    }

    /// Terms `(k b lambda, (k b lambda, b lambda) h_{b lambda} / theta_k(0)^2)`
    /// over the members of the representative with odd sum `k`.
    pub fn formula_terms_for(&self, k: &Characteristic, b: &Characteristic) -> Result<Vec<(Characteristic, C)>> {
        let system = self
            .reps
            .iter()
            .find(|f| f.k() == *k)
            .ok_or_else(|| Error::BadCharacteristic(k.to_string()))?;
        let theta_k2 = self.nulls[k] * self.nulls[k];
        if theta_k2.norm() == 0.0 {
            return Err(Error::BadCharacteristic(k.to_string()));
        }
        Ok(system
            .members()
            .iter()
            .map(|lambda| {
                let bl = *b ^ *lambda;
                let c = *k ^ bl;
                let coeff = self.h_table[bl.index() as usize].to_complex() * pair_sign(&c, &bl) as f64 / theta_k2;
                (c, coeff)
            })
            .collect())
    }

    fn phi_from_terms(&self, terms: &[(Characteristic, C)], z: &[C]) -> Result<C> {
        let mut s = C::new(0.0, 0.0);
        for (c, coeff) in terms {
            let t = self.eval.theta(c, z)?;
            s += coeff * t * t;
        }
        Ok(s)
    }

    /// `phi(z)` from the explicit formula with one theta evaluation per term.
    pub fn phi(&self, z: &[C]) -> Result<C> {
        self.phi_from_terms(&self.terms, z)
    }

    /// `phi(z)` from the formula with another admissible pair `(k, b)`.
    pub fn phi_with(&self, k: &Characteristic, b: &Characteristic, z: &[C]) -> Result<C> {
        self.phi_from_terms(&self.formula_terms_for(k, b)?, z)
    }

    /// `phi(z)` through the second-order basis; agrees with [`Self::phi`].
    pub fn phi_fast(&self, z: &[C]) -> Result<C> {
        if z.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: z.len() });
        }
        let cell = self.eval.cell(z);
        let v = self.phi_at_cell(&cell);
        if cell.m_top[..3].iter().all(|&m| m == 0) {
            return Ok(v);
        }
        let e = crate::theta::e_factor(&cell.m_top[..3], &cell.m_bottom[..3], &cell.z0[..3], self.tau());
        Ok(v * e * e)
    }

    pub(crate) fn phi_at_cell(&self, cell: &Cell) -> C {
        let b = self.eval.basis_at_cell(cell);
        self.weights.iter().zip(b.iter()).map(|(w, v)| w * v).sum()
    }

    pub(crate) fn log_norm_phi_at_cell(&self, cell: &Cell) -> f64 {
        4.0 * self.tau().det_im().ln() + 2.0 * log_p_norm(&cell.z0[..3], self.tau()) + self.phi_at_cell(cell).norm().ln()
    }

    /// `(det Y)^4 ||P||(z)^2 |phi(z)|`.
    pub fn norm_phi(&self, z: &[C]) -> Result<f64> {
        if z.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: z.len() });
        }
        Ok(self.log_norm_phi_at_cell(&self.eval.cell(z)).exp())
    }

    /// `f_a(z) = phi(z) / theta_a(z)^2`, evaluated in the reduced cell.
    pub fn f_a_value(&self, a: &Characteristic, z: &[C]) -> Result<C> {
        if z.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: z.len() });
        }
        let cell = self.eval.cell(z);
        self.f_a_at_cell(a, &cell)
    }

    pub(crate) fn f_a_at_cell(&self, a: &Characteristic, cell: &Cell) -> Result<C> {
        let th = self.eval.theta_at_cell(a, cell);
        let log_norm = 0.25 * self.tau().det_im().ln() + log_p_norm(&cell.z0[..3], self.tau()) + th.norm().ln();
        if !(log_norm >= POLE_THRESHOLD.ln()) {
            return Err(Error::NearPole);
        }
        Ok(self.phi_at_cell(cell) / (th * th))
    }

    /// `ln ||phi||` at `tau a' + a''` from `h_a eta_a(0)^2`.
    fn two_torsion_log_norm(&self, a: &Characteristic) -> f64 {
        let z = torus_point(self.tau(), &a.top_half(), &a.bottom_half());
        let zero = [C::new(0.0, 0.0); 3];
        let cell = self.eval.cell(&z);
        4.0 * self.tau().det_im().ln()
            + 2.0 * log_p_norm(&cell.z0[..3], self.tau())
            + self.h_table[a.index() as usize].logabs
            + 2.0 * eta_factor(a, &zero, self.tau()).norm().ln()
    }

    /// JSON with the 36 nulls and 64 reduced values as `[logabs, arg]` pairs.
    pub fn dump(&self) -> Value {
        let nulls: BTreeMap<String, LogComplex> =
            self.nulls.iter().map(|(a, v)| (a.to_string(), LogComplex::from_complex(*v))).collect();
        let h: BTreeMap<String, LogComplex> =
            Characteristic::all(3).map(|a| (a.to_string(), self.h_table[a.index() as usize])).collect();
        json!({
            "k_star": self.k_star.to_string(),
            "b": self.b.to_string(),
            "near_decomposable": self.near_decomposable,
            "vanishing": self.vanishing.map(|k| k.to_string()),
            "nulls": nulls,
            "h": h,
        })
    }
}

/// Raw representatives `k + three of {alpha, beta, gamma, delta} + eps`,
/// with `k` the unreduced sum of the odd members.
fn h_arguments(d: &Decomposition) -> Vec<HalfIntVector> {
    let k_raw = d.system.odd_sum_raw();
    let mut out = Vec::with_capacity(16);
    for eps in &d.rest {
        for drop in 0..4 {
            let mut v = k_raw.add_char(eps);
            for (i, q) in d.quad.iter().enumerate() {
                if i != drop {
                    v = v.add_char(q);
                }
            }
            out.push(v);
        }
    }
    out
}

pub fn reduced_value(a: &Characteristic, ctx: &FrobeniusContext) -> LogComplex {
    ctx.reduced_value(a)
}

pub fn frobenius_phi(z: &[C], ctx: &FrobeniusContext) -> Result<C> {
    ctx.phi(z)
}

pub fn norm_phi(z: &[C], ctx: &FrobeniusContext) -> Result<f64> {
    ctx.norm_phi(z)
}

pub fn f_a_value(a: &Characteristic, z: &[C], ctx: &FrobeniusContext) -> Result<C> {
    ctx.f_a_value(a, z)
}
