//! Per-index diagnostics along a kernel sequence and trend verdicts for the
//! conditions of the fourth moment theorem.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::SymKernel;

use super::moments::FourthMomentParts;
use super::normality::mc_normality;

/// `sqrt(2/π) + 2`, the Wasserstein constant.
pub const WASSERSTEIN_CONSTANT: f64 = 2.797_884_560_802_865_4;
pub const KOLMOGOROV_CONSTANT: f64 = 15.6;
/// Bounds are only reported when `|E[F²] − 1|` is at most this.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Series whose top-half values all sit below this are numerically zero
/// (the monitored quantities are normalized, so this is rounding level).
pub const VANISHING: f64 = 1e-12;

/// Diagnostics of `F_n = I_p(f_n)` at one index.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub index: usize,
    pub order: usize,
    pub n_atoms: usize,
    pub second_moment: f64,
    pub fourth_moment: f64,
    /// `E[F⁴] − 3 E[F²]²`.
    pub fourth_cumulant_excess: f64,
    /// `r ↦ ‖f ⊗_r f‖`, `r = 1..p−1`.
    pub contraction_norms: BTreeMap<usize, f64>,
    /// `m ↦ ‖h_{2p−m}‖`, `m = 1..2p−1`.
    pub h_norms: BTreeMap<usize, f64>,
    /// `Var Γ(F,F)`.
    pub var_gamma: f64,
    pub wasserstein_bound: Option<f64>,
    pub kolmogorov_bound: Option<f64>,
    pub mc_ks_distance: Option<f64>,
    /// `((2p−1)²/4p²)(E F⁴ − 3(E F²)²) − Var(Γ/p)`.
    pub lower_sandwich_slack: f64,
    /// `(6/p) Var Γ − (E F⁴ − 3(E F²)²)`.
    pub upper_sandwich_slack: f64,
}

impl DiagnosticsReport {
    /// `Var(Γ/p)`.
    pub fn var_gamma_normalized(&self) -> f64 {
        self.var_gamma / (self.order * self.order) as f64
    }

    pub fn max_h_norm(&self) -> f64 {
        self.h_norms.values().cloned().fold(0.0, f64::max)
    }

    pub fn max_contraction_norm(&self) -> Option<f64> {
        self.contraction_norms.values().cloned().reduce(f64::max)
    }

    /// Sandwich slacks may dip below zero by rounding only.
    pub fn sandwich_ok(&self) -> bool {
        let scale = self.fourth_cumulant_excess.abs().max(self.var_gamma) * 1e-12;
        self.lower_sandwich_slack >= -scale && self.upper_sandwich_slack >= -scale
    }
}

/// Knobs for [`diagnose_sequence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnoseOptions {
    /// Terminal value a vanishing quantity must fall below.
    pub threshold: f64,
    /// Limit of `E[F_n²]` (1 for the univariate theorem).
    pub target_variance: f64,
    /// `(samples, seed)` for the Kolmogorov–Smirnov surrogate of convergence in law.
    pub monte_carlo: Option<(usize, u64)>,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            threshold: 0.05,
            target_variance: 1.0,
            monte_carlo: None,
        }
    }
}

/// Computes every diagnostic of `I_p(f)` at one index.
pub fn diagnose_kernel(
    index: usize,
    f: &SymKernel,
    opts: &DiagnoseOptions,
) -> Result<DiagnosticsReport> {
    if f.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Refused(format!(
            "kernel at index {index} has non-finite entries"
        )));
    }
    let parts = FourthMomentParts::compute(f)?;
    let p = parts.order as f64;
    let e2 = parts.second_moment;
    let e4 = parts.fourth_moment();
    let excess = parts.excess();
    let var_gamma = parts.var_gamma();
    let normalized = (e2 - 1.0).abs() <= NORMALIZATION_TOL && e4 - 3.0 >= 0.0;
    let root = (e4 - 3.0).max(0.0).sqrt();
    let mc_ks_distance = match opts.monte_carlo {
        Some((samples, seed)) => Some(mc_normality(f, samples, seed)?),
        None => None,
    };
    Ok(DiagnosticsReport {
        index,
        order: parts.order,
        n_atoms: f.n_atoms(),
        second_moment: e2,
        fourth_moment: e4,
        fourth_cumulant_excess: excess,
        var_gamma,
        wasserstein_bound: normalized.then_some(WASSERSTEIN_CONSTANT * root),
        kolmogorov_bound: normalized.then_some(KOLMOGOROV_CONSTANT * root),
        mc_ks_distance,
        lower_sandwich_slack: (2.0 * p - 1.0).powi(2) / (4.0 * p * p) * excess
            - var_gamma / (p * p),
        upper_sandwich_slack: 6.0 / p * var_gamma - excess,
        contraction_norms: parts.contraction_norms,
        h_norms: parts.h_norms,
    })
}

/// The conditions whose trend is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    /// `E[F_n²] → V`.
    Variance,
    /// (ii) `E[F_n⁴] − 3 E[F_n²]² → 0`.
    FourthMoment,
    /// (iii) `‖h_{2p−m}‖ → 0` for `m = 1..2p−1`.
    HNorms,
    /// (iv) `Γ(F_n,F_n)/p → V` in L².
    Gamma,
    /// (v) `‖f_n ⊗_r f_n‖ → 0` for `r = 1..p−1`.
    Contractions,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::Variance,
        Condition::FourthMoment,
        Condition::HNorms,
        Condition::Gamma,
        Condition::Contractions,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Condition::Variance => "variance",
            Condition::FourthMoment => "(ii) fourth moment",
            Condition::HNorms => "(iii) h norms",
            Condition::Gamma => "(iv) carre du champ",
            Condition::Contractions => "(v) contraction norms",
        }
    }

    /// The monitored quantity, on the quadratic scale of the kernels.
    pub fn quantity(self) -> &'static str {
        match self {
            Condition::Variance => "|E[F^2] - V|",
            Condition::FourthMoment => "|E[F^4] - 3 E[F^2]^2|",
            Condition::HNorms => "max_m ||h_{2p-m}||^2",
            Condition::Gamma => "E[(Gamma(F,F)/p - V)^2] = Var(Gamma/p) + (E[F^2] - V)^2",
            Condition::Contractions => "max_r ||f (x)_r f||^2",
        }
    }

    /// Value of the quantity on one report; `None` when the condition is
    /// vacuous at this order (no contractions for `p = 1`).
    pub fn value(self, r: &DiagnosticsReport, target_variance: f64) -> Option<f64> {
        let dv = r.second_moment - target_variance;
        match self {
            Condition::Variance => Some(dv.abs()),
            Condition::FourthMoment => Some(r.fourth_cumulant_excess.abs()),
            Condition::HNorms => Some(r.max_h_norm().powi(2)),
            Condition::Gamma => Some(r.var_gamma_normalized() + dv * dv),
            Condition::Contractions => r.max_contraction_norm().map(|x| x * x),
        }
    }
}

/// Trend evidence for one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub condition: Condition,
    /// Least-squares slope of `log(quantity)` against `log(n)` over the top
    /// half of the indices; `None` when the quantity vanishes or is vacuous.
    pub slope: Option<f64>,
    pub terminal: Option<f64>,
    pub consistent: bool,
    pub note: &'static str,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        if self.consistent {
            "consistent with convergence"
        } else {
            "not consistent"
        }
    }
}

fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .map(|&(n, q)| (n.ln(), q.max(f64::MIN_POSITIVE).ln()))
        .unzip();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Applies the verdict rule to `(index, value)` pairs sorted by index.
pub fn judge(condition: Condition, series: &[(usize, Option<f64>)], threshold: f64) -> Verdict {
    let half = series.len().div_ceil(2).max(2).min(series.len());
    let top = &series[series.len() - half..];
    let terminal = series.last().and_then(|&(_, v)| v);
    if top.iter().all(|(_, v)| v.is_none()) {
        return Verdict {
            condition,
            slope: None,
            terminal,
            consistent: true,
            note: "vacuous at this order",
        };
    }
    let points: Vec<(f64, f64)> = top
        .iter()
        .filter_map(|&(n, v)| v.map(|v| (n as f64, v)))
        .collect();
    if points.iter().all(|&(_, v)| v <= VANISHING) {
        return Verdict {
            condition,
            slope: None,
            terminal,
            consistent: true,
            note: "vanishes over the top half of indices",
        };
    }
    let slope = log_log_slope(&points);
    let below = terminal.is_some_and(|t| t < threshold);
    let decreasing = slope.is_some_and(|s| s < 0.0);
    let note = match (decreasing, below) {
        (true, true) => "negative slope, terminal value below threshold",
        (true, false) => "negative slope, terminal value above threshold",
        (false, true) => "terminal value below threshold without a decreasing trend",
        (false, false) => "no decreasing trend",
    };
    Verdict {
        condition,
        slope,
        terminal,
        consistent: decreasing && below,
        note,
    }
}

/// Footer statements attached to every diagnostics document.
pub const FOOTER: [&str; 4] = [
    "Verdicts are trend evidence from a finite run: the log-log slope of each quantity over the top half of the indices must be negative and its value at the largest index below the threshold.",
    "Uniform integrability of (F_n^4) has no finite-sample test, so convergence in law (i) is never used to infer E[F_n^4] -> 3 (ii); only the direction (i) <= (ii)-(v) is supported.",
    "The requirement E[F_n^4] < infinity in condition (iv) holds automatically on finite atomic spaces and is not tested.",
    "The Wasserstein and Kolmogorov bounds are reported only when |E[F_n^2] - 1| <= 1e-6.",
];

/// Diagnostics of a whole sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDiagnostics {
    pub reports: Vec<DiagnosticsReport>,
    pub verdicts: Vec<Verdict>,
    pub options: DiagnoseOptions,
    /// Indices where a sandwich inequality fails beyond rounding.
    pub audit_violations: Vec<usize>,
    pub warnings: Vec<String>,
}

impl SequenceDiagnostics {
    pub fn consistent(&self) -> bool {
        self.verdicts.iter().all(|v| v.consistent)
    }

    pub fn verdict(&self, c: Condition) -> &Verdict {
        self.verdicts
            .iter()
            .find(|v| v.condition == c)
            .expect("every condition is judged")
    }
}

/// Diagnoses `F_n = I_p(f_n)` over `(index, kernel)` pairs.
pub fn diagnose_sequence(
    kernels: &[(usize, SymKernel)],
    opts: &DiagnoseOptions,
) -> Result<SequenceDiagnostics> {
    if kernels.is_empty() {
        return Err(Error::Validation("no indices to diagnose".into()));
    }
    if opts.threshold.is_nan()
        || opts.threshold <= 0.0
        || opts.target_variance.is_nan()
        || opts.target_variance <= 0.0
    {
        return Err(Error::Validation(
            "threshold and target variance must be > 0".into(),
        ));
    }
    let mut sorted: Vec<&(usize, SymKernel)> = kernels.iter().collect();
    sorted.sort_by_key(|(n, _)| *n);
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Validation("duplicate sequence index".into()));
    }
    let reports: Vec<DiagnosticsReport> = sorted
        .par_iter()
        .map(|(n, f)| diagnose_kernel(*n, f, opts))
        .collect::<Result<_>>()?;
    Ok(assemble(reports, *opts))
}

pub(crate) fn assemble(
    reports: Vec<DiagnosticsReport>,
    options: DiagnoseOptions,
) -> SequenceDiagnostics {
    let v = options.target_variance;
    let verdicts: Vec<Verdict> = Condition::ALL
        .iter()
        .map(|&c| {
            let series: Vec<(usize, Option<f64>)> =
                reports.iter().map(|r| (r.index, c.value(r, v))).collect();
            judge(c, &series, options.threshold)
        })
        .collect();
    let audit_violations = reports
        .iter()
        .filter(|r| !r.sandwich_ok())
        .map(|r| r.index)
        .collect();
    let mut warnings = Vec::new();
    let last = reports.last().expect("non-empty");
    if (last.second_moment - v).abs() > 0.1 {
        warnings.push(format!(
            "E[F_n^2] = {} at the largest index is far from the target variance {v}",
            last.second_moment
        ));
    }
    let h = verdicts.iter().find(|x| x.condition == Condition::HNorms);
    let c = verdicts
        .iter()
        .find(|x| x.condition == Condition::Contractions);
    if let (Some(h), Some(c)) = (h, c) {
        if h.consistent && !c.consistent {
            warnings.push(
                "h norms vanish but contraction norms do not: the implication (iii) => (v) is not reflected in the computed quantities".into(),
            );
        }
    }
    SequenceDiagnostics {
        reports,
        verdicts,
        options,
        audit_violations,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::families::{KernelFamily, UniformFamily};

    #[test]
    fn wasserstein_constant() {
        let c = (2.0 / std::f64::consts::PI).sqrt() + 2.0;
        assert!((WASSERSTEIN_CONSTANT - c).abs() < 1e-15);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (5..20).map(|n| (n as f64, 3.0 / (n * n) as f64)).collect();
        assert!((log_log_slope(&pts).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_not_consistent() {
        let s: Vec<(usize, Option<f64>)> = (1..=10).map(|n| (n, Some(0.5))).collect();
        let v = judge(Condition::FourthMoment, &s, 0.05);
        assert!(!v.consistent);
    }

    #[test]
    fn uniform_family_small_run() {
        let fam = UniformFamily { mass: 1.0 };
        let ks: Vec<(usize, SymKernel)> = (1..=10).map(|n| (n, fam.kernel(n).unwrap())).collect();
        let d = diagnose_sequence(
            &ks,
            &DiagnoseOptions {
                threshold: 0.2,
                ..Default::default()
            },
        )
        .unwrap();
        for r in &d.reports {
            assert!((r.fourth_cumulant_excess - 1.0 / r.index as f64).abs() < 1e-14);
        }
        assert!(d.consistent());
        assert!(d.audit_violations.is_empty());
        assert!(d.verdict(Condition::Contractions).slope.is_none());
    }
}
