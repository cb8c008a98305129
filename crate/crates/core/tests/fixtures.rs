//! The shipped fixture files match their generators byte for byte.
//! Set `REGENERATE_FIXTURES=1` to rewrite them.

use std::path::PathBuf;

use arakelov_theta::fixtures::{hyperelliptic_tau, near_split_tau, random_tau};
use arakelov_theta::frobenius::{build_frobenius_context, find_vanishing_even_null, DEFAULT_NULL_THRESHOLD};
use arakelov_theta::json;
use arakelov_theta::theta::{PeriodMatrix, TauJson, Tolerance};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn check(name: &str, tau: TauJson) -> PeriodMatrix {
    let text = json::to_string(&tau) + "\n";
    let path = dir().join(name);
    if std::env::var_os("REGENERATE_FIXTURES").is_some() {
        std::fs::create_dir_all(dir()).unwrap();
        std::fs::write(&path, &text).unwrap();
    }
    let shipped = std::fs::read_to_string(&path).unwrap();
    assert_eq!(shipped, text, "{name} is stale");
    PeriodMatrix::from_json(&serde_json::from_str(&shipped).unwrap()).unwrap()
}

#[test]
fn random_fixture() {
    let mut t = random_tau(0).to_json();
    t.seed = Some(0);
    let tau = check("random.json", t);
    let ctx = build_frobenius_context(&tau, Tolerance::default(), None).unwrap();
    assert!(!ctx.near_decomposable() && ctx.vanishing().is_none());
}

#[test]
fn near_split_fixture() {
    let mut t = near_split_tau(1e-4, 0).to_json();
    t.seed = Some(0);
    let tau = check("near_split.json", t);
    assert!(tau.max_abs_entry() < 1.0 + 1e-3);
}

#[test]
fn hyperelliptic_fixture() {
    let loc = hyperelliptic_tau(0, Tolerance::default()).unwrap();
    let mut t = loc.tau.to_json();
    t.seed = Some(loc.seed);
    t.k = Some(loc.k.clone());
    let tau = check("hyperelliptic.json", t);
    let k = find_vanishing_even_null(&tau, Tolerance::default(), DEFAULT_NULL_THRESHOLD).unwrap();
    assert_eq!(k.map(|k| k.to_string()), Some(loc.k));
}
