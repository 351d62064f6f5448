//! Read-only checks of convergence, complexity and identification
//! guarantees over a recorded [`Trace`].
//!
//! Every check compares a measured quantity with its theoretical bound and
//! reports the margin `bound - measured`; a negative margin is a failure.
//! Checks that depend on the gradient, the Lipschitz metadata or `f_min` are
//! reported as skipped when the problem does not carry them.
#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::criticality::{chi, stationarity_report};
use crate::error::{Error, Result};
use crate::params::SolverParams;
use crate::problem::{LipschitzInfo, Problem};
use crate::solver::Trace;

/// Absolute slack on the stepsize and Lyapunov inequalities.
pub const ABS_SLACK: f64 = 1e-12;
/// Relative tolerance on `Δ_{k+1} = θΔ_k` after an unsuccessful iteration.
pub const CONTRACTION_RTOL: f64 = 1e-12;
/// Relative slack on the criticality bound.
pub const CHI_RTOL: f64 = 1e-9;
/// Largest stationarity residual accepted for a reference solution.
pub const REFERENCE_RESIDUAL_TOL: f64 = 1e-8;

/// `η = γ(δ(1-δ))² / 2`, the midpoint of its admissible range.
pub fn default_eta(params: &SolverParams) -> f64 {
    0.5 * eta_upper(params)
}

fn eta_upper(params: &SolverParams) -> f64 {
    let s = params.delta * (1.0 - params.delta);
    params.gamma * s * s
}

/// `c₁ = min{γc², γ(δ(1-δ))² - η, η(1-θ²)/θ²}`, after checking
/// `0 < η < γ(δ(1-δ))²`.
pub fn lyapunov_c1(params: &SolverParams, eta: f64) -> Result<f64> {
    let upper = eta_upper(params);
    if !(eta > 0.0 && eta < upper) {
        return Err(Error::InvalidParameter(format!(
            "eta must lie in (0, {upper:e}), got {eta:e}"
        )));
    }
    let theta_sq = params.theta * params.theta;
    Ok((params.gamma * params.c * params.c)
        .min(upper - eta)
        .min(eta * (1.0 - theta_sq) / theta_sq))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremConstants {
    pub eta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub gamma: f64,
    pub delta: f64,
    pub theta: f64,
    pub c: f64,
    pub n: usize,
    pub l: f64,
    pub l_max: f64,
    pub m_g: f64,
}

pub fn constants(
    params: &SolverParams,
    n: usize,
    lipschitz: Option<&LipschitzInfo>,
    eta: Option<f64>,
) -> Result<TheoremConstants> {
    let lip =
        lipschitz.ok_or_else(|| Error::MissingMetadata("constants require L, Lmax, M_g".into()))?;
    let eta = eta.unwrap_or_else(|| default_eta(params));
    let c1 = lyapunov_c1(params, eta)?;
    let (gamma, delta, theta) = (params.gamma, params.delta, params.theta);
    let sqrt_n = (n as f64).sqrt();
    let c3 = (gamma + lip.l_max + lip.m_g) / theta;
    let success = (gamma + lip.l) / delta + lip.l * sqrt_n + lip.m_g / theta;
    let c2 = sqrt_n * success.max(c3);
    Ok(TheoremConstants {
        eta,
        c1,
        c2,
        c3,
        gamma,
        delta,
        theta,
        c: params.c,
        n,
        l: lip.l,
        l_max: lip.l_max,
        m_g: lip.m_g,
    })
}

impl TheoremConstants {
    /// Factor multiplying `Δ_{k+1}` in the bound on `χ(x_k)`.
    pub fn chi_factor(&self, success: bool) -> f64 {
        let sqrt_n = (self.n as f64).sqrt();
        if success {
            sqrt_n * ((self.gamma + self.l) / self.delta + self.l * sqrt_n + self.m_g / self.theta)
        } else {
            sqrt_n * self.c3
        }
    }

    /// Bound on the number of iterations with `χ(x_k) >= ε`.
    pub fn k_eps_bound(&self, phi0: f64, f_min: f64, eps: f64) -> f64 {
        (self.c2 * self.c2 * (phi0 - f_min) / self.c1 / (eps * eps)).floor()
    }

    /// Bound on the first iteration with `χ(x_k) < ε`.
    pub fn j_eps_bound(&self, phi0: f64, f_min: f64, eps: f64) -> f64 {
        (self.n as f64 * self.c3 * self.c3 * (phi0 - f_min) / self.c1 / (eps * eps)).floor()
    }

    /// Bound on the evaluations spent before the first iteration with
    /// `χ(x_k) < ε`.
    pub fn nf_bound(&self, phi0: f64, f0: f64, f_min: f64, eps: f64) -> f64 {
        let n = self.n as f64;
        let ratio = self.delta / (1.0 - self.delta);
        let expansion = 1.0f64.max(ratio * ratio);
        let success_evals = (n * self.c3 * self.c3 * (f0 - f_min) / (self.gamma * self.c * self.c)
            * expansion
            / (eps * eps))
            .floor();
        2.0 * n * self.j_eps_bound(phi0, f_min, eps) + success_evals
    }
}

/// `(f(x_k), Δ_k)` for every state whose stepsizes are known: each record's
/// entry state, plus the final state when it follows the last record.
fn states(trace: &Trace) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = trace
        .records
        .iter()
        .map(|r| (r.f_before, r.delta))
        .collect();
    if terminal_follows(trace) {
        out.push((trace.terminal.f, trace.terminal.delta));
    }
    out
}

fn terminal_follows(trace: &Trace) -> bool {
    trace.terminal.iterations as usize == trace.records.len()
        && trace.records.last().is_none_or(|r| r.complete)
}

/// `Δ_{k+1}` for record `k`, when known.
fn next_delta(trace: &Trace, k: usize) -> Option<f64> {
    if !trace.records[k].complete {
        return None;
    }
    match trace.records.get(k + 1) {
        Some(r) => Some(r.delta),
        None => terminal_follows(trace).then_some(trace.terminal.delta),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiSequence {
    /// `Φ_k = f(x_k) + ηΔ_k²`.
    pub values: Vec<f64>,
    /// `Φ_k - Φ_{k-1}` for `k >= 1`, computed from differences of `f` and
    /// `Δ²` to avoid cancellation.
    pub drops: Vec<f64>,
    pub deltas: Vec<f64>,
}

pub fn phi_sequence(trace: &Trace, eta: f64) -> PhiSequence {
    let st = states(trace);
    let values = st.iter().map(|&(f, d)| f + eta * d * d).collect();
    let drops = st
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) + eta * (w[1].1 * w[1].1 - w[0].1 * w[0].1))
        .collect();
    PhiSequence {
        values,
        drops,
        deltas: st.iter().map(|s| s.1).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComplexityCounters {
    /// `|K_ε|`, the number of recorded iterates with `χ(x_k) >= ε`.
    pub k_eps: usize,
    /// First index with `χ(x_k) < ε`, if any.
    pub j_eps: Option<usize>,
    /// Evaluations spent to produce `x_{j_ε}`.
    pub nf_at_j_eps: Option<u64>,
}

/// Counts over `χ(x_0), χ(x_1), ...`. `chi_values` has one entry per record,
/// optionally followed by one for the final iterate.
pub fn complexity_counters(
    trace: &Trace,
    chi_values: &[f64],
    eps: f64,
) -> Result<ComplexityCounters> {
    let n_rec = trace.records.len();
    if chi_values.len() != n_rec && chi_values.len() != n_rec + 1 {
        return Err(Error::LengthMismatch(format!(
            "{} criticality values for {n_rec} records",
            chi_values.len()
        )));
    }
    let k_eps = chi_values.iter().filter(|&&v| v >= eps).count();
    let j_eps = chi_values.iter().position(|&v| v < eps);
    let nf_at_j_eps = j_eps.map(|j| {
        trace
            .records
            .get(j)
            .map_or(trace.terminal.evaluations, |r| r.evals_before)
    });
    Ok(ComplexityCounters {
        k_eps,
        j_eps,
        nf_at_j_eps,
    })
}

/// `χ` at every recorded iterate, plus the final iterate when it follows the
/// last record. Requires a gradient.
pub fn chi_values(trace: &Trace, problem: &Problem) -> Result<Vec<f64>> {
    let grad = |x: &[f64]| {
        problem
            .gradient(x)
            .ok_or_else(|| Error::MissingMetadata("criticality requires a gradient".into()))
    };
    let mut out = Vec::with_capacity(trace.records.len() + 1);
    for r in &trace.records {
        out.push(chi(&r.x_before, &grad(&r.x_before)?, problem.bounds())?);
    }
    if terminal_follows(trace) {
        let x = &trace.terminal.x;
        out.push(chi(x, &grad(x)?, problem.bounds())?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "kebab-case")]
pub enum CheckStatus {
    Passed,
    Failed,
    Skipped(String),
    Vacuous(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    /// Number of inequalities tested.
    pub checked: usize,
    pub failures: usize,
    /// Index of the first failing record, if any.
    pub first_failure: Option<usize>,
    /// Smallest `bound - measured` seen.
    pub worst_margin: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn skipped(name: &str, why: &str) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Skipped(why.into()),
            checked: 0,
            failures: 0,
            first_failure: None,
            worst_margin: None,
            detail: String::new(),
        }
    }

    fn vacuous(name: &str, why: &str) -> Self {
        Self {
            status: CheckStatus::Vacuous(why.into()),
            ..Self::skipped(name, why)
        }
    }

    fn from_margins(name: &str, margins: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut checked = 0;
        let mut failures = 0;
        let mut first_failure = None;
        let mut worst: Option<f64> = None;
        for (k, m) in margins {
            checked += 1;
            worst = Some(worst.map_or(m, |w| w.min(m)));
            if !(m >= 0.0) {
                failures += 1;
                first_failure.get_or_insert(k);
            }
        }
        if checked == 0 {
            return Self::vacuous(name, "insufficient records");
        }
        Self {
            name: name.into(),
            status: if failures == 0 {
                CheckStatus::Passed
            } else {
                CheckStatus::Failed
            },
            checked,
            failures,
            first_failure,
            worst_margin: worst,
            detail: String::new(),
        }
    }

    fn single(name: &str, measured: f64, bound: f64) -> Self {
        let mut r = Self::from_margins(name, [(0, bound - measured)]);
        r.detail = format!("measured {measured} <= bound {bound:e}");
        r
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Failed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
    pub constants: Option<TheoremConstants>,
}

impl VerificationReport {
    /// True when no enabled check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match &c.status {
                CheckStatus::Passed => "PASS".to_string(),
                CheckStatus::Failed => "FAIL".to_string(),
                CheckStatus::Skipped(why) => format!("SKIP ({why})"),
                CheckStatus::Vacuous(why) => format!("VACUOUS ({why})"),
            };
            let mut line = format!("{:<28} {status}", c.name);
            if c.checked > 0 {
                let _ = write!(line, "  checked={} failures={}", c.checked, c.failures);
                if let Some(m) = c.worst_margin {
                    let _ = write!(line, " worst_margin={m:e}");
                }
                if let Some(k) = c.first_failure {
                    let _ = write!(line, " first_failure=k{k}");
                }
            }
            if !c.detail.is_empty() {
                let _ = write!(line, "  [{}]", c.detail);
            }
            writeln!(f, "{line}")?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Runs every check that the problem's metadata allows.
///
/// `eps_list` selects the thresholds for the complexity bounds.
pub fn check_trace(
    trace: &Trace,
    problem: &Problem,
    params: &SolverParams,
    eps_list: &[f64],
) -> Result<VerificationReport> {
    let n = problem.dim();
    let eta = default_eta(params);
    let c1 = lyapunov_c1(params, eta)?;
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    if trace.truncated_by_budget() {
        notes.push(format!(
            "run stopped by {}; counters over a truncated run only lower-bound the infinite-run quantities",
            trace.terminal.reason.as_str()
        ));
    }

    let pairs: Vec<usize> = (0..trace.records.len())
        .filter(|&k| next_delta(trace, k).is_some())
        .collect();

    checks.push(CheckResult::from_margins(
        "stepsize-dynamics",
        pairs.iter().map(|&k| {
            let r = &trace.records[k];
            let next = next_delta(trace, k).unwrap();
            let margin = if r.success {
                next - r.delta + ABS_SLACK
            } else {
                let target = params.theta * r.delta;
                CONTRACTION_RTOL * target - (next - target).abs()
            };
            (k, margin)
        }),
    ));

    let phi = phi_sequence(trace, eta);
    checks.push(CheckResult::from_margins(
        "lyapunov-decrease",
        phi.drops.iter().enumerate().map(|(j, &drop)| {
            let d = phi.deltas[j + 1];
            (j + 1, -c1 * d * d + ABS_SLACK - drop)
        }),
    ));

    checks.push(CheckResult::from_margins(
        "evaluation-accounting",
        trace.records.iter().enumerate().map(|(k, r)| {
            let accepted: u64 = r.accepted_probes.iter().map(|&a| a as u64).sum();
            let bound = 2 * n as u64 + accepted;
            let used = r.evals_cumulative - r.evals_before;
            (k, bound as f64 - used as f64)
        }),
    ));

    let consts = match constants(params, n, problem.lipschitz(), Some(eta)) {
        Ok(c) => Some(c),
        Err(Error::MissingMetadata(_)) => None,
        Err(e) => return Err(e),
    };
    let chis = if problem.has_gradient() {
        Some(chi_values(trace, problem)?)
    } else {
        None
    };

    match (&consts, &chis) {
        (Some(cst), Some(chis)) => {
            let mut r = CheckResult::from_margins(
                "criticality-bound",
                pairs.iter().map(|&k| {
                    let rec = &trace.records[k];
                    let bound = cst.chi_factor(rec.success)
                        * next_delta(trace, k).unwrap()
                        * (1.0 + CHI_RTOL);
                    (k, bound - chis[k])
                }),
            );
            r.detail = "chi(x_k) vs factor * Delta_{k+1}".into();
            checks.push(r);
        }
        _ => checks.push(CheckResult::skipped(
            "criticality-bound",
            "requires gradient and Lipschitz metadata",
        )),
    }

    let f_min = problem.f_min();
    for &eps in eps_list {
        let names = [
            format!("k-eps-bound[{eps:e}]"),
            format!("j-eps-bound[{eps:e}]"),
            format!("nf-bound[{eps:e}]"),
        ];
        let (Some(cst), Some(chis), Some(f_min)) = (&consts, &chis, f_min) else {
            for name in &names {
                checks.push(CheckResult::skipped(
                    name,
                    "requires gradient, Lipschitz metadata and f_min",
                ));
            }
            continue;
        };
        if trace.records.is_empty() {
            for name in &names {
                checks.push(CheckResult::vacuous(name, "insufficient records"));
            }
            continue;
        }
        let counters = complexity_counters(trace, chis, eps)?;
        let phi0 = phi.values[0];
        let f0 = trace.records[0].f_before;

        let mut k_check = CheckResult::single(
            &names[0],
            counters.k_eps as f64,
            cst.k_eps_bound(phi0, f_min, eps),
        );
        if trace.truncated_by_budget() {
            k_check
                .detail
                .push_str("; truncated run, count is a lower bound");
        }
        checks.push(k_check);

        match counters.j_eps {
            None => {
                checks.push(CheckResult::vacuous(&names[1], "j_eps not reached"));
                checks.push(CheckResult::vacuous(&names[2], "j_eps not reached"));
            }
            Some(0) => {
                checks.push(CheckResult::vacuous(
                    &names[1],
                    "chi(x_0) already below eps",
                ));
                checks.push(CheckResult::vacuous(
                    &names[2],
                    "chi(x_0) already below eps",
                ));
            }
            Some(j) => {
                let mut jc =
                    CheckResult::single(&names[1], j as f64, cst.j_eps_bound(phi0, f_min, eps));
                jc.detail = format!("j_eps={j}; {}", jc.detail);
                checks.push(jc);
                let nf = counters.nf_at_j_eps.unwrap();
                let mut nc =
                    CheckResult::single(&names[2], nf as f64, cst.nf_bound(phi0, f0, f_min, eps));
                nc.detail = format!("Nf={nf}; {}", nc.detail);
                checks.push(nc);
            }
        }
    }
    if consts.is_none() || chis.is_none() {
        notes.push("metadata missing: criticality and complexity checks skipped".into());
    }

    Ok(VerificationReport {
        checks,
        notes,
        constants: consts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identification {
    /// No strict-active coordinates at the reference point.
    Vacuous,
    /// The trace never settles on the strict-active bounds.
    Never,
    /// First iteration `k̄` after which every record sits on the bounds.
    At(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationReport {
    pub reference_point: Vec<f64>,
    pub active_set: Vec<usize>,
    pub strict_active: Vec<usize>,
    pub zeta: Option<f64>,
    pub first_identified_iteration: Identification,
}

impl IdentificationReport {
    pub fn describe(&self) -> String {
        match self.first_identified_iteration {
            Identification::Vacuous => {
                "no strict-active coordinates; identification vacuous".to_string()
            }
            Identification::Never => format!(
                "strict-active set {:?} never identified within the trace",
                self.strict_active
            ),
            Identification::At(k) => format!(
                "strict-active set {:?} identified from iteration {k} on (zeta={:e})",
                self.strict_active,
                self.zeta.unwrap_or(f64::NAN)
            ),
        }
    }
}

/// Finds the first iteration after which every strict-active coordinate of
/// the problem's known solution stays exactly on its bound.
pub fn identification_report(trace: &Trace, problem: &Problem) -> Result<IdentificationReport> {
    let x_star = problem
        .known_solution()
        .ok_or_else(|| Error::MissingMetadata("identification requires a known solution".into()))?
        .to_vec();
    let g_star = problem
        .gradient(&x_star)
        .ok_or_else(|| Error::MissingMetadata("identification requires a gradient".into()))?;
    let report = stationarity_report(&x_star, &g_star, problem.bounds());
    if report.max_residual() > REFERENCE_RESIDUAL_TOL {
        return Err(Error::NotStationary(report.max_residual()));
    }

    let targets: Vec<(usize, u64)> = report
        .strict_active_set
        .iter()
        .map(|&i| {
            let b = if x_star[i] == problem.bounds().lower()[i] {
                problem.bounds().lower()[i]
            } else {
                problem.bounds().upper()[i]
            };
            (i, b.to_bits())
        })
        .collect();

    let first = if targets.is_empty() {
        Identification::Vacuous
    } else {
        let on_bounds = |x: &[f64]| targets.iter().all(|&(i, bits)| x[i].to_bits() == bits);
        let mut start = None;
        for r in trace.records.iter().rev() {
            if on_bounds(&r.x_after) {
                start = Some(r.k);
            } else {
                break;
            }
        }
        start.map_or(Identification::Never, Identification::At)
    };

    Ok(IdentificationReport {
        reference_point: x_star,
        active_set: report.active_set,
        strict_active: report.strict_active_set,
        zeta: report.zeta,
        first_identified_iteration: first,
    })
}
