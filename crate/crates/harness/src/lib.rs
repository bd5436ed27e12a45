//! Command-line harness for `opinion-core`: scenario files, attention sweeps,
//! figure presets and SVG output.

pub mod error;
pub mod reproduce;
pub mod scenario;
pub mod svg;
pub mod sweep;

use opinion_core::dynamics::ModelParams;
use opinion_core::graph::{BalanceCertificate, SignedGraph};
use opinion_core::spectral::leading_eigenpair;
use serde_json::{json, Value};

pub use error::HarnessError;

/// Connectivity, balance certificate, spectrum and thresholds.
pub fn analyze_report(g: &SignedGraph, p: &ModelParams) -> Value {
    let balance = match g.balance_certificate() {
        BalanceCertificate::Balanced(theta) => json!({
            "balanced": true,
            "switching_set": theta.switching_set().iter().map(|i| i + 1).collect::<Vec<_>>(),
        }),
        BalanceCertificate::Unbalanced(cycle) => json!({
            "balanced": false,
            "witness": {
                "vertices": cycle.vertices.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "signs": cycle.signs,
            },
        }),
    };
    let mut report = json!({
        "n": g.n(),
        "edges": g.edges().len(),
        "strongly_connected": g.is_strongly_connected(),
        "all_positive": g.is_all_positive(),
        "balance": balance,
    });
    match leading_eigenpair(g) {
        Ok(spec) => {
            report["spectrum"] = serde_json::to_value(&spec).expect("spectrum serializes");
            report["cubic_coefficient"] = json!(spec.cubic_coefficient());
            match p.thresholds(&spec) {
                Ok(th) => report["thresholds"] = serde_json::to_value(&th).expect("thresholds serialize"),
                Err(e) => report["thresholds_error"] = json!(e.to_string()),
            }
        }
        Err(e) => report["spectral_error"] = json!(e.to_string()),
    }
    report
}
