//! CSV and JSON renderings of diagnostics. Numbers carry 17 significant
//! digits; nothing time- or host-dependent is written.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::space::{fmt17, num17};

use super::multivariate::{MultivariateDiagnostics, GAMMA_TARGET_NOTE};
use super::sequence::{DiagnosticsReport, SequenceDiagnostics, Verdict, FOOTER};

pub const TOOL_NAME: &str = "poisson-chaos";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance written at the top of every report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunInfo {
    pub command: String,
    /// Family name or kernel document the run was built from.
    pub source: String,
    pub seed: Option<u64>,
    pub rng: Option<String>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    /// Truncation levels and certified tail bounds, when exact expectations were used.
    pub truncation: Option<String>,
}

impl RunInfo {
    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert(
            "tool".into(),
            json!({"name": TOOL_NAME, "version": TOOL_VERSION}),
        );
        m.insert("command".into(), Value::from(self.command.clone()));
        m.insert("source".into(), Value::from(self.source.clone()));
        m.insert("seed".into(), self.seed.map_or(Value::Null, Value::from));
        m.insert(
            "rng".into(),
            self.rng.clone().map_or(Value::Null, Value::from),
        );
        m.insert(
            "samples".into(),
            self.samples.map_or(Value::Null, |s| Value::from(s as u64)),
        );
        m.insert("tol".into(), self.tol.map_or(Value::Null, num17));
        m.insert(
            "truncation".into(),
            self.truncation.clone().map_or(Value::Null, Value::from),
        );
        Value::Object(m)
    }

    /// `# key: value` lines for CSV preambles.
    pub fn csv_preamble(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tool: {TOOL_NAME} {TOOL_VERSION}");
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# source: {}", self.source);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "# seed: {seed}");
        }
        if let Some(rng) = &self.rng {
            let _ = writeln!(s, "# rng: {rng}");
        }
        if let Some(n) = self.samples {
            let _ = writeln!(s, "# samples: {n}");
        }
        if let Some(t) = self.tol {
            let _ = writeln!(s, "# tol: {}", fmt17(t));
        }
        if let Some(t) = &self.truncation {
            let _ = writeln!(s, "# truncation: {t}");
        }
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt17)
}

/// Report columns with the formula each one evaluates.
fn columns(p: usize) -> Vec<(String, String)> {
    let mut c = vec![
        ("index".into(), "sequence index n".into()),
        ("n_atoms".into(), "number of atoms of the space at index n".into()),
        ("order".into(), "chaos order p of F_n = I_p(f_n)".into()),
        ("second_moment".into(), "E[F^2] = p! ||f||^2".into()),
        (
            "fourth_moment".into(),
            "E[F^4] = (p!||f||^2)^2 + 2(p!)^2||f||^4 + sum_{m=1}^{2p-1} (2p-m)! ||h_{2p-m}||^2 + (p!)^2 sum_{r=1}^{p-1} C(p,r)^2 ||f (x)_r f||^2".into(),
        ),
        ("fourth_cumulant_excess".into(), "E[F^4] - 3 E[F^2]^2".into()),
    ];
    for m in 1..2 * p {
        c.push((
            format!("h_norm_m{m}"),
            format!("||h_{{{}}}||, h_{{2p-m}} = sum_s (p!)^2/((p-s)!^2 (2s-m)! (m-s)!) (f star_s^{{m-s}} f)~", 2 * p - m),
        ));
    }
    for r in 1..p {
        c.push((
            format!("contraction_norm_r{r}"),
            format!("||f (x)_{r} f||, {r} arguments integrated"),
        ));
    }
    c.extend([
        (
            "var_gamma".into(),
            "Var Gamma(F,F) = 1/4 sum_{m=1}^{2p-1} m^2 (2p-m)! ||h_{2p-m}||^2".into(),
        ),
        ("var_gamma_normalized".into(), "Var(Gamma(F,F)/p)".into()),
        (
            "wasserstein_bound".into(),
            "(sqrt(2/pi) + 2) sqrt(E[F^4] - 3), when E[F^2] = 1".into(),
        ),
        (
            "kolmogorov_bound".into(),
            "15.6 sqrt(E[F^4] - 3), when E[F^2] = 1".into(),
        ),
        (
            "mc_ks_distance".into(),
            "sup_x |empirical CDF of F - Phi(x)| over Monte Carlo samples".into(),
        ),
        (
            "lower_sandwich_slack".into(),
            "((2p-1)^2/(4p^2)) (E[F^4] - 3E[F^2]^2) - Var(Gamma/p), nonnegative".into(),
        ),
        (
            "upper_sandwich_slack".into(),
            "(6/p) Var Gamma - (E[F^4] - 3E[F^2]^2), nonnegative".into(),
        ),
    ]);
    c
}

fn row(r: &DiagnosticsReport) -> Vec<String> {
    let mut v = vec![
        r.index.to_string(),
        r.n_atoms.to_string(),
        r.order.to_string(),
        fmt17(r.second_moment),
        fmt17(r.fourth_moment),
        fmt17(r.fourth_cumulant_excess),
    ];
    v.extend(r.h_norms.values().map(|&x| fmt17(x)));
    v.extend(r.contraction_norms.values().map(|&x| fmt17(x)));
    v.extend([
        fmt17(r.var_gamma),
        fmt17(r.var_gamma_normalized()),
        opt(r.wasserstein_bound),
        opt(r.kolmogorov_bound),
        opt(r.mc_ks_distance),
        fmt17(r.lower_sandwich_slack),
        fmt17(r.upper_sandwich_slack),
    ]);
    v
}

fn report_value(r: &DiagnosticsReport) -> Value {
    let norms = |m: &std::collections::BTreeMap<usize, f64>| {
        Value::Object(m.iter().map(|(k, &v)| (k.to_string(), num17(v))).collect())
    };
    let o = |x: Option<f64>| x.map_or(Value::Null, num17);
    json!({
        "index": r.index,
        "n_atoms": r.n_atoms,
        "order": r.order,
        "second_moment": num17(r.second_moment),
        "fourth_moment": num17(r.fourth_moment),
        "fourth_cumulant_excess": num17(r.fourth_cumulant_excess),
        "h_norms": norms(&r.h_norms),
        "contraction_norms": norms(&r.contraction_norms),
        "var_gamma": num17(r.var_gamma),
        "var_gamma_normalized": num17(r.var_gamma_normalized()),
        "wasserstein_bound": o(r.wasserstein_bound),
        "kolmogorov_bound": o(r.kolmogorov_bound),
        "mc_ks_distance": o(r.mc_ks_distance),
        "lower_sandwich_slack": num17(r.lower_sandwich_slack),
        "upper_sandwich_slack": num17(r.upper_sandwich_slack),
    })
}

fn verdict_value(v: &Verdict) -> Value {
    json!({
        "condition": v.condition.label(),
        "quantity": v.condition.quantity(),
        "slope": v.slope.map_or(Value::Null, num17),
        "terminal": v.terminal.map_or(Value::Null, num17),
        "verdict": v.label(),
        "note": v.note,
    })
}

fn verdict_line(v: &Verdict) -> String {
    format!(
        "# verdict {}: {} (quantity {}; slope {}; terminal {}; {})",
        v.condition.label(),
        v.label(),
        v.condition.quantity(),
        v.slope.map_or_else(|| "n/a".into(), fmt17),
        v.terminal.map_or_else(|| "n/a".into(), fmt17),
        v.note
    )
}

fn csv_table(reports: &[DiagnosticsReport], out: &mut String) {
    let p = reports.first().map_or(1, |r| r.order);
    let cols = columns(p);
    for (name, formula) in &cols {
        let _ = writeln!(out, "# column {name}: {formula}");
    }
    let _ = writeln!(
        out,
        "{}",
        cols.iter()
            .map(|(n, _)| n.as_str())
            .collect::<Vec<_>>()
            .join(",")
    );
    for r in reports {
        let _ = writeln!(out, "{}", row(r).join(","));
    }
}

fn sequence_trailer(d: &SequenceDiagnostics, out: &mut String) {
    for v in &d.verdicts {
        let _ = writeln!(out, "{}", verdict_line(v));
    }
    let _ = writeln!(
        out,
        "# overall: {}",
        if d.consistent() {
            "consistent with convergence"
        } else {
            "not consistent"
        }
    );
    let _ = writeln!(
        out,
        "# audit violations (sandwich inequalities): {:?}",
        d.audit_violations
    );
    for w in &d.warnings {
        let _ = writeln!(out, "# warning: {w}");
    }
}

pub fn sequence_csv(d: &SequenceDiagnostics, info: &RunInfo) -> String {
    let mut out = info.csv_preamble();
    let _ = writeln!(out, "# threshold: {}", fmt17(d.options.threshold));
    let _ = writeln!(
        out,
        "# target_variance: {}",
        fmt17(d.options.target_variance)
    );
    csv_table(&d.reports, &mut out);
    sequence_trailer(d, &mut out);
    for f in FOOTER {
        let _ = writeln!(out, "# note: {f}");
    }
    out
}

fn sequence_body(d: &SequenceDiagnostics) -> Map<String, Value> {
    let p = d.reports.first().map_or(1, |r| r.order);
    let mut m = Map::new();
    m.insert(
        "columns".into(),
        Value::Object(
            columns(p)
                .into_iter()
                .map(|(k, v)| (k, Value::from(v)))
                .collect(),
        ),
    );
    m.insert("threshold".into(), num17(d.options.threshold));
    m.insert("target_variance".into(), num17(d.options.target_variance));
    m.insert(
        "reports".into(),
        d.reports.iter().map(report_value).collect(),
    );
    m.insert(
        "verdicts".into(),
        d.verdicts.iter().map(verdict_value).collect(),
    );
    m.insert("consistent".into(), Value::from(d.consistent()));
    m.insert(
        "audit_violations".into(),
        d.audit_violations
            .iter()
            .map(|&i| Value::from(i as u64))
            .collect(),
    );
    m.insert(
        "warnings".into(),
        d.warnings.iter().map(|w| Value::from(w.clone())).collect(),
    );
    m
}

pub fn sequence_json(d: &SequenceDiagnostics, info: &RunInfo) -> String {
    let mut m = sequence_body(d);
    m.insert("run".into(), info.to_value());
    m.insert(
        "footer".into(),
        FOOTER.iter().map(|&s| Value::from(s)).collect(),
    );
    to_pretty(&Value::Object(m))
}

fn matrix_value(m: &[Vec<f64>]) -> Value {
    m.iter()
        .map(|r| r.iter().map(|&x| num17(x)).collect::<Value>())
        .collect()
}

pub fn multivariate_csv(d: &MultivariateDiagnostics, info: &RunInfo) -> String {
    let mut out = info.csv_preamble();
    let dim = d.target.len();
    let _ = writeln!(
        out,
        "# target: {}",
        serde_json::to_string(&matrix_value(&d.target)).expect("serializable")
    );
    let _ = writeln!(
        out,
        "# column sigma_i_j: p_i! <f_i, f_j> if p_i = p_j, else 0"
    );
    let _ = writeln!(
        out,
        "# column max_deviation: max_ij |Sigma_n(i,j) - V(i,j)|"
    );
    let _ = writeln!(
        out,
        "# column min_eigenvalue: smallest eigenvalue of Sigma_n"
    );
    let mut header = vec!["index".to_string()];
    for i in 0..dim {
        for j in 0..dim {
            header.push(format!("sigma_{}_{}", i + 1, j + 1));
        }
    }
    header.extend(["max_deviation".into(), "min_eigenvalue".into()]);
    let _ = writeln!(out, "{}", header.join(","));
    for r in &d.reports {
        let mut v = vec![r.index.to_string()];
        v.extend(r.covariance.iter().flatten().map(|&x| fmt17(x)));
        v.extend([fmt17(r.max_deviation), fmt17(r.min_eigenvalue)]);
        let _ = writeln!(out, "{}", v.join(","));
    }
    let _ = writeln!(
        out,
        "{}",
        verdict_line(&d.covariance_verdict).replacen("variance", "covariance", 1)
    );
    for (k, c) in d.coordinates.iter().enumerate() {
        let _ = writeln!(
            out,
            "# coordinate {} (order {}, target variance {})",
            k + 1,
            d.reports[0].orders[k],
            fmt17(c.options.target_variance)
        );
        csv_table(&c.reports, &mut out);
        sequence_trailer(c, &mut out);
    }
    let _ = writeln!(
        out,
        "# overall: {}",
        if d.consistent() {
            "consistent with convergence"
        } else {
            "not consistent"
        }
    );
    for w in &d.warnings {
        let _ = writeln!(out, "# warning: {w}");
    }
    for f in FOOTER.iter().chain([&GAMMA_TARGET_NOTE]) {
        let _ = writeln!(out, "# note: {f}");
    }
    out
}

pub fn multivariate_json(d: &MultivariateDiagnostics, info: &RunInfo) -> String {
    let reports: Vec<Value> = d
        .reports
        .iter()
        .map(|r| {
            json!({
                "index": r.index,
                "orders": r.orders,
                "covariance": matrix_value(&r.covariance),
                "max_deviation": num17(r.max_deviation),
                "min_eigenvalue": num17(r.min_eigenvalue),
            })
        })
        .collect();
    let coords: Vec<Value> = d
        .coordinates
        .iter()
        .map(|c| Value::Object(sequence_body(c)))
        .collect();
    let footer: Vec<Value> = FOOTER
        .iter()
        .chain([&GAMMA_TARGET_NOTE])
        .map(|&s| Value::from(s))
        .collect();
    let doc = json!({
        "run": info.to_value(),
        "target": matrix_value(&d.target),
        "covariance_columns": {
            "covariance": "Sigma_n(i,j) = p_i! <f_i, f_j> if p_i = p_j, else 0",
            "max_deviation": "max_ij |Sigma_n(i,j) - V(i,j)|",
            "min_eigenvalue": "smallest eigenvalue of Sigma_n",
        },
        "reports": reports,
        "covariance_verdict": verdict_value(&d.covariance_verdict),
        "coordinates": coords,
        "consistent": d.consistent(),
        "warnings": d.warnings,
        "footer": footer,
    });
    to_pretty(&doc)
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::families::{BlockTensorFamily, KernelFamily};
    use crate::diagnostics::sequence::{diagnose_sequence, DiagnoseOptions};

    #[test]
    fn csv_has_one_row_per_index_and_matching_widths() {
        let fam = BlockTensorFamily { block: 1 };
        let ks: Vec<_> = (1..=4).map(|n| (n, fam.kernel(n).unwrap())).collect();
        let d = diagnose_sequence(&ks, &DiagnoseOptions::default()).unwrap();
        let csv = sequence_csv(&d, &RunInfo::default());
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 5);
        let width = rows[0].split(',').count();
        assert!(rows.iter().all(|r| r.split(',').count() == width));
        assert!(rows[0].contains("h_norm_m3") && rows[0].contains("contraction_norm_r1"));
    }

    #[test]
    fn json_document_parses() {
        let fam = BlockTensorFamily { block: 2 };
        let ks: Vec<_> = (1..=3).map(|n| (n, fam.kernel(n).unwrap())).collect();
        let d = diagnose_sequence(&ks, &DiagnoseOptions::default()).unwrap();
        let v: Value = serde_json::from_str(&sequence_json(&d, &RunInfo::default())).unwrap();
        assert_eq!(v["reports"].as_array().unwrap().len(), 3);
        assert_eq!(v["run"]["tool"]["version"], TOOL_VERSION);
    }
}
