//! Command-line front end. Every subcommand prints one JSON document.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::char_algebra::{
    build_fundamental_system, difference_representation_count, enumerate_by_parity, pencil_representatives,
    pencil_statistics, Characteristic,
};
use crate::error::{Error, Result};
use crate::fixtures::{random_tau, RANDOM_LAMBDA_MIN};
use crate::frobenius::{build_frobenius_context, locate_hyperelliptic, psi_log, xi_log, FrobeniusContext, LogComplex};
use crate::integrator::{mean_log_fa, QmcPlan};
use crate::invariants::{ceresa_height_with, hyperelliptic_cross_check, invariants_report};
use crate::selftest::{self, two_torsion_residual, Budget};
use crate::theta::{siegel_reduce, PeriodMatrix, TauJson, ThetaEvaluator, Tolerance};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_SELFTEST: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "arakelov-theta", version, about = "Genus-three theta functions and Arakelov invariants")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Period matrix as JSON: {"g":3,"re":[[..]],"im":[[..]]}
    #[arg(long, global = true)]
    pub tau: Option<PathBuf>,
    /// Quasi-Monte Carlo points per shift (power of two, at least 1024)
    #[arg(long, global = true, default_value_t = 1 << 20)]
    pub points: usize,
    /// Random shifts (at least 4)
    #[arg(long, global = true, default_value_t = 8)]
    pub shifts: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Truncation tolerance for lattice sums
    #[arg(long, global = true, default_value_t = 1e-14)]
    pub tol: f64,
    /// Worker threads; results do not depend on it
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Translation characteristic b of the explicit formula, e.g. 010/110
    #[arg(long = "frobenius-b", global = true)]
    pub frobenius_b: Option<String>,
    /// Write JSON here instead of stdout
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Counts of even and odd characteristics and difference representations
    Chars {
        #[arg(long, default_value_t = 3)]
        genus: usize,
        /// Also print the parity table and the representation histogram
        #[arg(long)]
        tables: bool,
    },
    /// Base fundamental system, pencil statistics and the 36 representatives
    Fundsys,
    /// theta_a(z) and its norm
    Theta {
        #[arg(long)]
        a: String,
        /// [[re,im],[re,im],[re,im]] or [x,y,z]
        #[arg(long)]
        z: String,
    },
    /// phi(z), ||phi||(z) and the two-torsion residual
    Frobenius {
        #[arg(long)]
        z: Option<String>,
        /// Include the 36 nulls and 64 reduced values
        #[arg(long)]
        dump_context: bool,
    },
    /// log||H||, log||K|| and the assembled invariants
    Invariants,
    /// Locate a hyperelliptic point from --tau (or a random one from --seed)
    Hyperelliptic {
        /// Target even characteristic; default tries the smallest nulls first
        #[arg(long)]
        k: Option<String>,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        /// Skip the two torus integrals of the cross-check
        #[arg(long)]
        no_cross_check: bool,
    },
    /// Height pairing 2 log|f_a(D)| - 2 int log|f_a|
    Height {
        #[arg(long)]
        a: String,
        #[arg(long = "D")]
        d: String,
    },
    /// The acceptance battery at reduced budget
    Selftest,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::DimensionMismatch { .. }
        | Error::NonDistinct
        | Error::WrongCount { .. }
        | Error::InvalidCharacteristic(_)
        | Error::NotPositiveDefinite
        | Error::NotSymplectic
        | Error::BadCharacteristic(_)
        | Error::InvalidPlan(_)
        | Error::Input(_) => EXIT_INPUT,
        _ => EXIT_NUMERICAL,
    }
}

fn complex_json(c: Complex64) -> Value {
    json!([c.re, c.im])
}

pub fn parse_char(s: &str) -> Result<Characteristic> {
    s.parse::<Characteristic>()
}

/// `[[re,im],..]` or plain reals.
pub fn parse_vector(s: &str) -> Result<Vec<Complex64>> {
    let v: Value = serde_json::from_str(s).map_err(|e| Error::Input(format!("vector: {e}")))?;
    let arr = v.as_array().ok_or_else(|| Error::Input("vector must be a JSON array".into()))?;
    arr.iter()
        .map(|e| match e {
            Value::Number(n) => n.as_f64().map(|x| Complex64::new(x, 0.0)),
            Value::Array(p) if p.len() == 2 => Some(Complex64::new(p[0].as_f64()?, p[1].as_f64()?)),
            _ => None,
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Input("vector entries must be numbers or [re, im] pairs".into()))
}

pub fn read_tau(path: &PathBuf) -> Result<PeriodMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let raw: TauJson = serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    PeriodMatrix::from_json(&raw)
}

struct Session {
    cfg: CliConfig,
    tol: Tolerance,
}

impl Session {
    fn tau(&self) -> Result<PeriodMatrix> {
        let path = self.cfg.tau.as_ref().ok_or_else(|| Error::Input("--tau is required".into()))?;
        read_tau(path)
    }

    fn plan(&self) -> Result<QmcPlan> {
        QmcPlan::new(self.cfg.points, self.cfg.shifts, self.cfg.seed)
    }

    fn b(&self) -> Result<Option<Characteristic>> {
        self.cfg.frobenius_b.as_deref().map(parse_char).transpose()
    }

    fn context(&self, tau: &PeriodMatrix) -> Result<FrobeniusContext> {
        build_frobenius_context(tau, self.tol, self.b()?)
    }

    fn dispatch(&self) -> Result<(Value, i32)> {
        match &self.cfg.command {
            Command::Chars { genus, tables } => chars(*genus, *tables).map(|v| (v, 0)),
            Command::Fundsys => fundsys().map(|v| (v, 0)),
            Command::Theta { a, z } => {
                let tau = self.tau()?;
                let a = parse_char(a)?;
                let z = parse_vector(z)?;
                let eval = ThetaEvaluator::new(&tau, self.tol);
                let v = eval.theta(&a, &z)?;
                Ok((json!({"a": a.to_string(), "z": z.iter().map(|c| complex_json(*c)).collect::<Vec<_>>(),
                    "theta": complex_json(v), "norm": eval.norm_theta(&a, &z)?}), 0))
            }
            Command::Frobenius { z, dump_context } => {
                let b = self.b()?;
                let tau = self.tau()?;
                let z = z.as_deref().map(parse_vector).transpose()?;
                let ctx = build_frobenius_context(&tau, self.tol, b)?;
                let mut out = json!({
                    "k_star": ctx.k_star().to_string(),
                    "b": ctx.b().to_string(),
                    "near_decomposable": ctx.near_decomposable(),
                    "vanishing": ctx.vanishing().map(|k| k.to_string()),
                    "two_torsion_max_relative_residual": two_torsion_residual(&ctx)?,
                });
                if let Some(z) = z {
                    out["phi"] = complex_json(ctx.phi(&z)?);
                    out["norm_phi"] = json!(ctx.norm_phi(&z)?);
                }
                if *dump_context {
                    out["context"] = ctx.dump();
                }
                Ok((out, 0))
            }
            Command::Invariants => {
                let plan = self.plan()?;
                let (tau, _) = siegel_reduce(&self.tau()?)?;
                let ctx = self.context(&tau)?;
                Ok((serde_json::to_value(invariants_report(&ctx, &plan)?).expect("plain data"), 0))
            }
            Command::Hyperelliptic { k, max_iter, no_cross_check } => {
                self.hyperelliptic(k.as_deref(), *max_iter, *no_cross_check).map(|v| (v, 0))
            }
            Command::Height { a, d } => {
                let plan = self.plan()?;
                let a = parse_char(a)?;
                let d = parse_vector(d)?;
                let ctx = self.context(&self.tau()?)?;
                ctx.f_a_value(&a, &d)?;
                let mean = mean_log_fa(&a, &ctx, &plan)?;
                let h = ceresa_height_with(&a, &d, &ctx, &mean)?;
                Ok((json!({"a": a.to_string(), "height": h, "mean_log_fa": mean}), 0))
            }
            Command::Selftest => {
                let report = selftest::run(&Budget::reduced(self.cfg.seed));
                let code = if report.pass { 0 } else { EXIT_SELFTEST };
                Ok((serde_json::to_value(report).expect("plain data"), code))
            }
        }
    }

    fn hyperelliptic(&self, k: Option<&str>, max_iter: usize, no_cross_check: bool) -> Result<Value> {
        let tau0 = match &self.cfg.tau {
            Some(p) => read_tau(p)?,
            None => random_tau(self.cfg.seed),
        };
        if tau0.lambda_min() < RANDOM_LAMBDA_MIN {
            return Err(Error::Input(format!("starting point needs lambda_min(Im tau) >= {RANDOM_LAMBDA_MIN}")));
        }
        let candidates: Vec<Characteristic> = match k {
            Some(k) => vec![parse_char(k)?],
            None => {
                let eval = ThetaEvaluator::new(&tau0, self.tol);
                let mut ks: Vec<Characteristic> = Characteristic::all(3).filter(|a| a.is_even()).collect();
                ks.sort_by(|a, b| eval.null(a).norm().total_cmp(&eval.null(b).norm()));
                ks.truncate(4);
                ks
            }
        };
        let mut last = Error::NoConvergence(max_iter);
        let mut found = None;
        for k in candidates {
            match locate_hyperelliptic(&tau0, &k, max_iter, self.tol) {
                Ok(t) => {
                    found = Some((k, t));
                    break;
                }
                Err(e) => last = e,
            }
        }
        let (k, tau) = found.ok_or(last)?;
        let ctx = self.context(&tau)?;
        if ctx.vanishing() != Some(k) {
            return Err(Error::NotHyperelliptic);
        }
        let a = Characteristic::all(3).find(|a| !a.is_zero() && (k ^ *a).is_even()).expect("admissible a");
        let psi = psi_log(&ctx, &a)?;
        let xi = xi_log(&tau, self.tol)?;
        let mut tau_json = tau.to_json();
        if self.cfg.tau.is_none() {
            tau_json.seed = Some(self.cfg.seed);
        }
        tau_json.k = Some(k.to_string());
        let p140: LogComplex = psi.powi(140);
        let x7: LogComplex = xi.powi(7);
        let mut out = json!({
            "k": k.to_string(),
            "tau": tau_json,
            "psi": psi,
            "xi": xi,
            "psi140_minus_xi7": {"logabs": p140.logabs - x7.logabs, "arg": crate::frobenius::wrap_angle(p140.arg - x7.arg)},
        });
        if !no_cross_check {
            let reduced = self.context(&siegel_reduce(&tau)?.0)?;
            out["cross_check"] = serde_json::to_value(hyperelliptic_cross_check(&reduced, &self.plan()?)?).expect("plain data");
        }
        Ok(out)
    }
}

fn chars(g: usize, tables: bool) -> Result<Value> {
    if g == 0 || g > 8 {
        return Err(Error::Input(format!("genus {g} outside 1..=8")));
    }
    let (even, odd) = enumerate_by_parity(g);
    let counts: Vec<usize> = Characteristic::all(g).skip(1).map(|a| difference_representation_count(&a)).collect();
    let uniform = counts.iter().all(|&c| c == counts[0]);
    let mut out = json!({"even": even.len(), "odd": odd.len(), "diff_reps": if uniform { json!(counts[0]) } else { Value::Null }});
    if tables {
        let mut hist = std::collections::BTreeMap::new();
        for a in Characteristic::all(g) {
            *hist.entry(difference_representation_count(&a).to_string()).or_insert(0usize) += 1;
        }
        out["histogram"] = json!(hist);
        out["parity"] = json!(Characteristic::all(g).map(|a| (a.to_string(), a.parity_sign())).collect::<std::collections::BTreeMap<_, _>>());
    }
    Ok(out)
}

fn fundsys() -> Result<Value> {
    let base = build_fundamental_system()?;
    let stats = pencil_statistics(&base)?;
    let reps = pencil_representatives(&base)?;
    let names = |m: &[Characteristic]| m.iter().map(|c| c.to_string()).collect::<Vec<_>>();
    Ok(json!({
        "base": {"members": names(base.members()), "k": base.k().to_string(), "odd": base.odd_count()},
        "pencil": {"systems": stats.translates.len(), "seven_odd": stats.seven_odd_count, "three_odd": stats.three_odd_count},
        "representatives": reps.iter().map(|f| json!({"k": f.k().to_string(), "members": names(f.members())})).collect::<Vec<_>>(),
    }))
}

/// Parses `args`, runs the subcommand and writes JSON to `out` (or the
/// `--output` file); diagnostics go to `err`. Returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    let tol = match Tolerance::new(cfg.tol) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    if let Some(n) = cfg.threads {
        if n == 0 {
            let _ = writeln!(err, "error: --threads must be positive");
            return EXIT_INPUT;
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let output = cfg.output.clone();
    let session = Session { cfg, tol };
    if let Err(e) = session.plan().and(session.b()) {
        let _ = writeln!(err, "error: {e}");
        return exit_code(&e);
    }
    match session.dispatch() {
        Ok((value, code)) => {
            let text = crate::json::to_string(&value) + "\n";
            let written = match output {
                Some(p) => std::fs::write(&p, text).map_err(|e| e.to_string()),
                None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: {e}");
                return EXIT_INPUT;
            }
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
