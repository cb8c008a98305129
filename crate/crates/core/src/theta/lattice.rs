//! Truncated lattice sums
//!
//! `S_r(w) = sum_{n = r mod 2} exp(pi i (n+c)^T T (n+c) + 2 pi i (n+c)^T w)`
//!
//! over the ellipsoid `(n+c+x)^T Im T (n+c+x) <= R^2`, where `x = (Im T)^{-1} Im w`.
//! The ellipsoid is walked Fincke-Pohst style on the Cholesky factor with
//! coordinate 0 innermost, so every row is a contiguous run of integers.
//!
//! Two row kernels exist. The direct one starts each row with one complex
//! exponential and advances by the ratio recurrence. The tabulated one keeps
//! `exp(pi i p^T T p)` for a box covering every admissible `x`, and only needs
//! per-coordinate factors per evaluation; it is used when the table entries
//! and factors stay inside the binary64 exponent range.

use std::f64::consts::PI;

use num_complex::Complex64 as C;

use super::period::{PeriodMatrix, MAX_THETA_GENUS};

pub(crate) const MAXG: usize = MAX_THETA_GENUS;
pub(crate) const MAXBINS: usize = 1 << MAXG;

/// Keeps table magnitudes well inside `exp(+-708)`.
const EXP_BUDGET: f64 = 600.0;

pub(crate) type Bins = [C; MAXBINS];

const ZERO: C = C::new(0.0, 0.0);

/// Quadratic form data for `T = s * tau`.
#[derive(Clone, Debug)]
pub(crate) struct Form {
    pub g: usize,
    pub t: [[C; MAXG]; MAXG],
    pub im: [[f64; MAXG]; MAXG],
    /// `q[i][i] = r_ii^2`, `q[i][j] = r_ij / r_ii` for `j > i`.
    q: [[f64; MAXG]; MAXG],
    /// `sqrt(((Im T)^{-1})_ii)`: extent of the unit ellipsoid along axis `i`.
    axis: [f64; MAXG],
    pub lambda_min: f64,
}

impl Form {
    pub fn new(tau: &PeriodMatrix, s: f64) -> Self {
        let g = tau.genus();
        let r = tau.chol_upper();
        let mut f = Form {
            g,
            t: [[ZERO; MAXG]; MAXG],
            im: [[0.0; MAXG]; MAXG],
            q: [[0.0; MAXG]; MAXG],
            axis: [0.0; MAXG],
            lambda_min: s * tau.lambda_min(),
        };
        for i in 0..g {
            for j in 0..g {
                f.t[i][j] = tau.tau()[(i, j)] * s;
                f.im[i][j] = tau.im()[(i, j)] * s;
            }
            let rii = r[(i, i)] * s.sqrt();
            f.q[i][i] = rii * rii;
            for j in i + 1..g {
                f.q[i][j] = r[(i, j)] * s.sqrt() / rii;
            }
            f.axis[i] = (tau.im_inv()[(i, i)] / s).sqrt();
        }
        f
    }

    /// Calls `row(n, lo, hi)` for every row of the ellipsoid centred at
    /// `-shift` with squared radius `r2`; `n[1..g]` hold the outer indices.
    fn for_each_row(&self, shift: &[f64; MAXG], r2: f64, row: &mut impl FnMut(&[i64; MAXG], i64, i64)) {
        let mut n = [0i64; MAXG];
        let mut v = [0f64; MAXG];
        self.descend(self.g - 1, &mut n, &mut v, r2, shift, row);
    }

    fn descend(
        &self,
        i: usize,
        n: &mut [i64; MAXG],
        v: &mut [f64; MAXG],
        rem: f64,
        shift: &[f64; MAXG],
        row: &mut impl FnMut(&[i64; MAXG], i64, i64),
    ) {
        let mut t = 0.0;
        for j in i + 1..self.g {
            t += self.q[i][j] * v[j];
        }
        let centre = -shift[i] - t;
        let half = (rem / self.q[i][i]).sqrt();
        let lo = ceil_i64(centre - half);
        let hi = floor_i64(centre + half);
        if i == 0 {
            if lo <= hi {
                row(n, lo, hi);
            }
            return;
        }
        for ni in lo..=hi {
            n[i] = ni;
            v[i] = ni as f64 + shift[i];
            let d = v[i] + t;
            let left = rem - self.q[i][i] * d * d;
            if left >= 0.0 {
                self.descend(i - 1, n, v, left, shift, row);
            }
        }
    }
}

/// `R = sqrt(max(1, -ln eps) / (pi lambda_min)) + 2.5`.
pub(crate) fn truncation_radius(eps: f64, lambda_min: f64) -> f64 {
    ((-eps.ln()).max(1.0) / (PI * lambda_min)).sqrt() + 2.5
}

#[derive(Clone, Debug)]
struct Table {
    lo: [i64; MAXG],
    len: [usize; MAXG],
    stride: [usize; MAXG],
    q: Vec<C>,
    /// Offsets of the per-coordinate factor runs inside one scratch vector.
    voff: [usize; MAXG + 1],
}

/// A lattice sum for fixed `T` and fixed top shift `c`.
#[derive(Clone, Debug)]
pub(crate) struct LatticeSum {
    form: Form,
    c: [f64; MAXG],
    r2: f64,
    /// `exp(2 pi i T_00)`.
    step00: C,
    table: Option<Table>,
}

impl LatticeSum {
    /// `x_bound`, when given, bounds `|x_i|` over all points that will be
    /// summed and enables the tabulated kernel.
    pub fn new(form: &Form, c: &[f64], radius: f64, x_bound: Option<f64>) -> Self {
        let mut cc = [0.0; MAXG];
        cc[..form.g].copy_from_slice(&c[..form.g]);
        let mut s = LatticeSum {
            form: form.clone(),
            c: cc,
            r2: radius * radius,
            step00: (C::i() * (2.0 * PI) * form.t[0][0]).exp(),
            table: None,
        };
        if let Some(h) = x_bound {
            s.table = s.build_table(radius, h);
        }
        s
    }

    pub fn is_tabulated(&self) -> bool {
        self.table.is_some()
    }

    fn build_table(&self, radius: f64, h: f64) -> Option<Table> {
        let f = &self.form;
        let g = f.g;
        let mut lo = [0i64; MAXG];
        let mut len = [1usize; MAXG];
        let mut stride = [0usize; MAXG];
        let mut voff = [0usize; MAXG + 1];
        let mut total = 1usize;
        let mut factor_budget = 0.0;
        for i in 0..g {
            let ext = h + radius * f.axis[i] + 1.0;
            lo[i] = (-self.c[i] - ext).floor() as i64;
            let hi = (-self.c[i] + ext).ceil() as i64;
            len[i] = (hi - lo[i] + 1) as usize;
            stride[i] = total;
            total = total.checked_mul(len[i])?;
            voff[i + 1] = voff[i] + len[i];
            let pmax = (lo[i] as f64 + self.c[i]).abs().max((hi as f64 + self.c[i]).abs());
            let im_row: f64 = (0..g).map(|j| f.im[i][j].abs()).sum();
            factor_budget += 2.0 * PI * pmax * h * im_row;
        }
        if total > 1 << 22 || factor_budget > EXP_BUDGET {
            return None;
        }
        // Entries with sqrt(p^T Y p) beyond `reach` are never visited.
        let spread: f64 = (0..g).flat_map(|i| (0..g).map(move |j| (i, j))).map(|(i, j)| f.im[i][j].abs()).sum();
        let reach = radius + h * spread.sqrt() + 0.5;
        if PI * reach * reach > EXP_BUDGET {
            return None;
        }
        let mut q = vec![ZERO; total];
        let mut p = [0f64; MAXG];
        for (idx, slot) in q.iter_mut().enumerate() {
            let mut r = idx;
            for i in 0..g {
                p[i] = (lo[i] + (r % len[i]) as i64) as f64 + self.c[i];
                r /= len[i];
            }
            let e = quad(f, &p);
            if -e.re <= PI * reach * reach {
                *slot = e.exp();
            }
        }
        Some(Table { lo, len, stride, q, voff })
    }

    /// Parity-binned sums; bin bits follow the characteristic layout
    /// (coordinate `i` at bit `g - 1 - i`).
    pub fn sum(&self, w: &[C; MAXG], x: &[f64; MAXG]) -> Bins {
        let g = self.form.g;
        let mut shift = [0.0; MAXG];
        for i in 0..g {
            shift[i] = self.c[i] + x[i];
        }
        let mut bins = [ZERO; MAXBINS];
        let top_bit = 1usize << (g - 1);
        let outer_mask = |n: &[i64; MAXG]| -> usize {
            (1..g).map(|i| ((n[i] & 1) as usize) << (g - 1 - i)).sum()
        };
        match &self.table {
            Some(t) => {
                let factors = self.factors(t, w);
                let mut walk = Walk { t, v: &factors, shift: &shift, n: [0; MAXG], vv: [0.0; MAXG], bins: &mut bins };
                if self.walk_table(&mut walk, g - 1, self.r2, 0, C::new(1.0, 0.0), 0) {
                    return bins;
                }
                // Some row left the table box: redo everything directly.
                bins = [ZERO; MAXBINS];
                self.form.for_each_row(&shift, self.r2, &mut |n, lo, hi| {
                    let m = outer_mask(n);
                    let acc = self.direct_row(n, lo, hi, w);
                    bins[m] += acc[0];
                    bins[m | top_bit] += acc[1];
                });
            }
            None => {
                self.form.for_each_row(&shift, self.r2, &mut |n, lo, hi| {
                    let m = outer_mask(n);
                    let acc = self.direct_row(n, lo, hi, w);
                    bins[m] += acc[0];
                    bins[m | top_bit] += acc[1];
                });
            }
        }
        bins
    }

    fn factors(&self, t: &Table, w: &[C; MAXG]) -> Vec<C> {
        let mut v = vec![ZERO; t.voff[self.form.g]];
        for i in 0..self.form.g {
            let tw = C::i() * (2.0 * PI) * w[i];
            let run = &mut v[t.voff[i]..t.voff[i + 1]];
            // Anchor at the entry with p closest to zero.
            let k0 = ((-(t.lo[i] as f64) - self.c[i]).round().max(0.0) as usize).min(run.len() - 1);
            run[k0] = (tw * (t.lo[i] as f64 + k0 as f64 + self.c[i])).exp();
            let step = tw.exp();
            for k in k0 + 1..run.len() {
                run[k] = run[k - 1] * step;
            }
            let back = (-tw).exp();
            for k in (0..k0).rev() {
                run[k] = run[k + 1] * back;
            }
        }
        v
    }

    /// Tabulated walk over the ellipsoid carrying the partial table offset,
    /// row factor and parity mask; returns false if a row leaves the table.
    fn walk_table(&self, k: &mut Walk, i: usize, rem: f64, base: usize, fac: C, mask: usize) -> bool {
        let f = &self.form;
        let g = f.g;
        let mut tt = 0.0;
        for j in i + 1..g {
            tt += f.q[i][j] * k.vv[j];
        }
        let centre = -k.shift[i] - tt;
        let half = (rem / f.q[i][i]).sqrt();
        let lo = ceil_i64(centre - half);
        let hi = floor_i64(centre + half);
        if lo > hi {
            return true;
        }
        let t = k.t;
        let k0 = lo - t.lo[i];
        let k1 = hi - t.lo[i];
        if k0 < 0 || k1 >= t.len[i] as i64 {
            return false;
        }
        let (k0, k1) = (k0 as usize, k1 as usize);
        if i == 0 {
            let (e, o) = dot_split(&t.q[base + k0..=base + k1], &k.v[k0..=k1]);
            let (even, odd) = if lo & 1 == 0 { (e, o) } else { (o, e) };
            k.bins[mask] += even * fac;
            k.bins[mask | 1 << (g - 1)] += odd * fac;
            return true;
        }
        let bit = 1usize << (g - 1 - i);
        for (off, ni) in (lo..=hi).enumerate() {
            let vi = ni as f64 + k.shift[i];
            let d = vi + tt;
            let left = rem - f.q[i][i] * d * d;
            if left < 0.0 {
                continue;
            }
            k.vv[i] = vi;
            k.n[i] = ni;
            let ki = k0 + off;
            let m = if ni & 1 == 0 { mask } else { mask | bit };
            let fac_i = fac * k.v[t.voff[i] + ki];
            if !self.walk_table(k, i - 1, left, base + ki * t.stride[i], fac_i, m) {
                return false;
            }
        }
        true
    }

    /// Starts at the middle of the row, where the exponent is smallest, and
    /// recurs outward so phase rounding does not grow with the row length.
    fn direct_row(&self, n: &[i64; MAXG], lo: i64, hi: i64, w: &[C; MAXG]) -> [C; 2] {
        let f = &self.form;
        let g = f.g;
        let mid = lo + (hi - lo) / 2;
        let mut p = [0f64; MAXG];
        p[0] = mid as f64 + self.c[0];
        for i in 1..g {
            p[i] = n[i] as f64 + self.c[i];
        }
        let mut u0 = ZERO;
        for j in 0..g {
            u0 += f.t[0][j] * p[j];
        }
        let mut lin = ZERO;
        for i in 0..g {
            lin += w[i] * p[i];
        }
        let ipi = C::i() * PI;
        let centre = (quad(f, &p) + ipi * 2.0 * lin).exp();
        let mut acc = [ZERO; 2];

        let mut term = centre;
        let mut ratio = (ipi * (u0 * 2.0 + f.t[0][0] + w[0] * 2.0)).exp();
        for k in mid..=hi {
            acc[(k & 1) as usize] += term;
            term *= ratio;
            ratio *= self.step00;
        }
        let mut term = centre;
        let mut back = (-ipi * (u0 * 2.0 - f.t[0][0] + w[0] * 2.0)).exp();
        for k in (lo..mid).rev() {
            term *= back;
            back *= self.step00;
            acc[(k & 1) as usize] += term;
        }
        acc
    }
}

/// `floor` without the libm call the baseline target would emit.
#[inline]
fn floor_i64(x: f64) -> i64 {
    let t = x as i64;
    if (t as f64) > x {
        t - 1
    } else {
        t
    }
}

#[inline]
fn ceil_i64(x: f64) -> i64 {
    let t = x as i64;
    if (t as f64) < x {
        t + 1
    } else {
        t
    }
}

struct Walk<'a> {
    t: &'a Table,
    v: &'a [C],
    shift: &'a [f64; MAXG],
    n: [i64; MAXG],
    vv: [f64; MAXG],
    bins: &'a mut Bins,
}

/// Sums of `q[j] v[j]` over even and odd `j` separately.
#[inline]
fn dot_split(q: &[C], v: &[C]) -> (C, C) {
    let (mut er, mut ei, mut or, mut oi) = (0.0, 0.0, 0.0, 0.0);
    let mut qc = q.chunks_exact(2);
    let mut vc = v.chunks_exact(2);
    for (a, b) in (&mut qc).zip(&mut vc) {
        er += a[0].re * b[0].re - a[0].im * b[0].im;
        ei += a[0].re * b[0].im + a[0].im * b[0].re;
        or += a[1].re * b[1].re - a[1].im * b[1].im;
        oi += a[1].re * b[1].im + a[1].im * b[1].re;
    }
    if let ([a], [b]) = (qc.remainder(), vc.remainder()) {
        er += a.re * b.re - a.im * b.im;
        ei += a.re * b.im + a.im * b.re;
    }
    (C::new(er, ei), C::new(or, oi))
}

/// `pi i p^T T p`.
fn quad(f: &Form, p: &[f64; MAXG]) -> C {
    let mut s = ZERO;
    for i in 0..f.g {
        let mut row = ZERO;
        for j in 0..f.g {
            row += f.t[i][j] * p[j];
        }
        s += row * p[i];
    }
    C::i() * PI * s
}
