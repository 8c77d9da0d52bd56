//! Deterministic, parallel trial harness: SER/BER estimates with
//! Clopper-Pearson confidence intervals, per-round aliasing statistics,
//! coupling audits and power reports.
//!
//! Determinism contract: results are a pure function of (plan, config).
//! Trials are split into fixed-size chunks of consecutive indices; chunks
//! are simulated in parallel (rayon), collected in chunk order and folded
//! sequentially, so the report is bit-identical for any worker count. The
//! per-trial tapes come from one ChaCha stream per trial index, so a
//! trial's randomness does not depend on scheduling either. Tapes are
//! regenerated into reusable buffers; memory stays flat at any trial
//! count.

use crate::schemes::{
    Mode, NoiseTape, NoisyFbScheme, PowerAccumulator, PowerReport, RoundTrace, SchemeParams,
    SkScheme, SystemParams, TracePair, TrialOutcome,
};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// What a plan simulates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SimTarget {
    /// The noisy-feedback modulo scheme (optionally its coupled twin).
    NoisyFeedback {
        sys: SystemParams,
        rate: f64,
        target_pe: f64,
        mode: Mode,
    },
    /// The noiseless-feedback baseline (N = 1 is plain PAM over AWGN).
    SchalkwijkKailath { sys: SystemParams, rate: f64 },
}

impl SimTarget {
    pub fn n_rounds(&self) -> usize {
        match self {
            SimTarget::NoisyFeedback { sys, .. } => sys.n_rounds,
            SimTarget::SchalkwijkKailath { sys, .. } => sys.n_rounds,
        }
    }
}

/// A reproducible batch of trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialPlan {
    pub master_seed: u64,
    pub trials: u64,
    pub target: SimTarget,
    /// Zero the noise entries of every tape (dithers keep their draw).
    #[serde(default)]
    pub zero_noise: bool,
    /// Wilson-vs-exact has no knob: intervals are Clopper-Pearson at this
    /// two-sided confidence (default 0.95).
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

fn default_confidence() -> f64 {
    0.95
}

const CHUNK: u64 = 1 << 14;

/// A binomial estimate with its two-sided Clopper-Pearson interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub events: u64,
    pub trials: u64,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Aggregated result of a plan.
#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub trials: u64,
    pub symbol_errors: u64,
    pub bit_errors: u64,
    pub bits_per_trial: u32,
    /// Modulo-aliasing counts per feedback round (length N-1); from the
    /// real system when it runs, else from the coupled one.
    pub per_round_alias_counts: Vec<u64>,
    /// Trials where any aliasing or final-interval event fired.
    pub union_events: u64,
    pub ser: Estimate,
    pub ber: Estimate,
    pub power: PowerReport,
    /// Coupled-system statistics when both systems ran.
    pub coupled: Option<CoupledStats>,
    /// Wall-clock seconds; excluded from serialized reports so that
    /// outputs stay byte-identical across worker counts and machines.
    #[serde(skip)]
    pub wallclock: f64,
}

/// Statistics of the coupled twin in a both-systems run.
#[derive(Debug, Clone, Serialize)]
pub struct CoupledStats {
    pub symbol_errors: u64,
    pub union_events: u64,
    pub per_round_alias_counts: Vec<u64>,
    /// Per-round sum of squared coupled-system errors (for variance
    /// checks against the closed-form recursion).
    pub error_sum_sq: Vec<f64>,
    pub coupling_violations: u64,
    pub first_violation: Option<u64>,
}

#[derive(Clone)]
struct Partial {
    trials: u64,
    symbol_errors: u64,
    bit_errors: u64,
    alias_counts: Vec<u64>,
    union_events: u64,
    power: PowerAccumulator,
    coupled_symbol_errors: u64,
    coupled_union: u64,
    coupled_alias_counts: Vec<u64>,
    coupled_err_sq: Vec<f64>,
    violations: u64,
    first_violation: Option<u64>,
}

impl Partial {
    fn new(n: usize) -> Partial {
        Partial {
            trials: 0,
            symbol_errors: 0,
            bit_errors: 0,
            alias_counts: vec![0; n.saturating_sub(1)],
            union_events: 0,
            power: PowerAccumulator::default(),
            coupled_symbol_errors: 0,
            coupled_union: 0,
            coupled_alias_counts: vec![0; n.saturating_sub(1)],
            coupled_err_sq: vec![0.0; n],
            violations: 0,
            first_violation: None,
        }
    }

    fn fold(mut self, other: &Partial) -> Partial {
        self.trials += other.trials;
        self.symbol_errors += other.symbol_errors;
        self.bit_errors += other.bit_errors;
        for (a, b) in self.alias_counts.iter_mut().zip(&other.alias_counts) {
            *a += b;
        }
        self.union_events += other.union_events;
        self.power.merge(&other.power);
        self.coupled_symbol_errors += other.coupled_symbol_errors;
        self.coupled_union += other.coupled_union;
        for (a, b) in self.coupled_alias_counts.iter_mut().zip(&other.coupled_alias_counts) {
            *a += b;
        }
        for (a, b) in self.coupled_err_sq.iter_mut().zip(&other.coupled_err_sq) {
            *a += b;
        }
        self.violations += other.violations;
        self.first_violation = match (self.first_violation, other.first_violation) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }
}

enum Runner {
    Noisy(Box<NoisyFbScheme>, Mode),
    Sk(Box<SkScheme>),
}

fn build_runner(target: &SimTarget) -> Result<Runner> {
    match target {
        SimTarget::NoisyFeedback { sys, rate, target_pe, mode } => {
            let params = crate::analysis::derive_scheme_params(sys, *target_pe, None)?;
            Ok(Runner::Noisy(Box::new(NoisyFbScheme::new(sys, &params, *rate)?), *mode))
        }
        SimTarget::SchalkwijkKailath { sys, rate } => {
            Ok(Runner::Sk(Box::new(SkScheme::new(sys, *rate)?)))
        }
    }
}

fn sys_of(target: &SimTarget) -> &SystemParams {
    match target {
        SimTarget::NoisyFeedback { sys, .. } => sys,
        SimTarget::SchalkwijkKailath { sys, .. } => sys,
    }
}

/// Run a plan and aggregate exactly.
pub fn estimate(plan: &TrialPlan) -> Result<McReport> {
    if plan.trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    if !(plan.confidence > 0.0 && plan.confidence < 1.0) {
        return Err(Error::Config(format!("confidence must be in (0,1), got {}", plan.confidence)));
    }
    let runner = build_runner(&plan.target)?;
    let sys = sys_of(&plan.target);
    let n = sys.n_rounds;
    let bits = match &runner {
        Runner::Noisy(s, _) => s.message_bits(),
        Runner::Sk(s) => s.message_bits(),
    };
    let start = Instant::now();

    let chunks = plan.trials.div_ceil(CHUNK);
    let partials: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(plan.trials);
            let mut part = Partial::new(n);
            let mut tape = NoiseTape::default();
            let mut errs = vec![0.0f64; n];
            for trial in lo..hi {
                tape.regenerate(plan.master_seed, trial, n, bits);
                if plan.zero_noise {
                    tape.silence_noise();
                }
                match &runner {
                    Runner::Noisy(scheme, mode) => {
                        let out = if *mode == Mode::Both {
                            scheme.run_observed(&tape, *mode, &mut errs)
                        } else {
                            scheme.run(&tape, *mode)
                        };
                        record_noisy(&mut part, &out, trial, *mode, &errs);
                    }
                    Runner::Sk(scheme) => {
                        let out = scheme.run(&tape, None);
                        part.trials += 1;
                        part.symbol_errors += out.decision_error as u64;
                        part.bit_errors += out.bit_errors as u64;
                        part.union_events += out.union_event() as u64;
                        part.power.record(&out);
                    }
                }
            }
            part
        })
        .collect();

    let folded = partials
        .into_iter()
        .fold(Partial::new(n), |acc, p| acc.fold(&p));

    let alpha = 1.0 - plan.confidence;
    let ser = clopper_pearson(folded.symbol_errors, folded.trials, alpha)?;
    let total_bits = folded.trials * bits as u64;
    let ber = clopper_pearson(folded.bit_errors, total_bits, alpha)?;
    let coupled = matches!(runner, Runner::Noisy(_, Mode::Both)).then(|| CoupledStats {
        symbol_errors: folded.coupled_symbol_errors,
        union_events: folded.coupled_union,
        per_round_alias_counts: folded.coupled_alias_counts.clone(),
        error_sum_sq: folded.coupled_err_sq.clone(),
        coupling_violations: folded.violations,
        first_violation: folded.first_violation,
    });
    Ok(McReport {
        trials: folded.trials,
        symbol_errors: folded.symbol_errors,
        bit_errors: folded.bit_errors,
        bits_per_trial: bits,
        per_round_alias_counts: folded.alias_counts,
        union_events: folded.union_events,
        ser,
        ber,
        power: folded.power.report(sys),
        coupled,
        wallclock: start.elapsed().as_secs_f64(),
    })
}

fn record_noisy(part: &mut Partial, out: &TrialOutcome, trial: u64, mode: Mode, errs: &[f64]) {
    part.trials += 1;
    // headline statistics come from the real system when it ran
    let primary = out.modulo.as_ref().or(out.coupled.as_ref()).expect("some system ran");
    part.symbol_errors += primary.decision_error as u64;
    part.bit_errors += primary.bit_errors as u64;
    part.union_events += primary.union_event() as u64;
    part.power.record(primary);
    let mut mask = primary.alias_mask;
    while mask != 0 {
        let k = mask.trailing_zeros() as usize;
        part.alias_counts[k] += 1;
        mask &= mask - 1;
    }
    if mode == Mode::Both {
        let coupled = out.coupled.as_ref().expect("both mode");
        part.coupled_symbol_errors += coupled.decision_error as u64;
        part.coupled_union += coupled.union_event() as u64;
        let mut mask = coupled.alias_mask;
        while mask != 0 {
            let k = mask.trailing_zeros() as usize;
            part.coupled_alias_counts[k] += 1;
            mask &= mask - 1;
        }
        for (acc, e) in part.coupled_err_sq.iter_mut().zip(errs) {
            *acc += e * e;
        }
        let check = out.coupling.expect("both mode");
        if !check.ok() {
            part.violations += 1;
            part.first_violation = Some(part.first_violation.map_or(trial, |t| t.min(trial)));
        }
    }
}

/// Audit outcome of a paired (modulo/coupled) run.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub trials: u64,
    /// Trials violating union-event equality or pre-aliasing sample-path
    /// identity. Any violation is a finding, not an error.
    pub violations: u64,
    /// First violating trial index, for replay.
    pub first_violation: Option<u64>,
    pub report: McReport,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Run the per-trial coupling audit: (a) union-of-events equality, (b)
/// bit-identity of the errors up to the first aliasing round.
pub fn coupling_audit(plan: &TrialPlan) -> Result<AuditReport> {
    let mut plan = plan.clone();
    match &mut plan.target {
        SimTarget::NoisyFeedback { mode, .. } => *mode = Mode::Both,
        _ => return Err(Error::Config("coupling audit needs the noisy-feedback target".into())),
    }
    let report = estimate(&plan)?;
    let coupled = report.coupled.as_ref().expect("both mode ran");
    Ok(AuditReport {
        trials: report.trials,
        violations: coupled.coupling_violations,
        first_violation: coupled.first_violation,
        report,
    })
}

/// Negative control for the audit harness: runs the two systems on
/// deliberately mismatched tapes (the coupled system sees the next trial's
/// tape) and reports how many trials still satisfied both checks. A
/// healthy harness detects violations on essentially every trial.
pub fn coupling_audit_negative_control(plan: &TrialPlan) -> Result<AuditReport> {
    let (sys, rate, pe) = match &plan.target {
        SimTarget::NoisyFeedback { sys, rate, target_pe, .. } => (sys, *rate, *target_pe),
        _ => return Err(Error::Config("negative control needs the noisy-feedback target".into())),
    };
    let params = crate::analysis::derive_scheme_params(sys, pe, None)?;
    let scheme = NoisyFbScheme::new(sys, &params, rate)?;
    let n = sys.n_rounds;
    let bits = scheme.message_bits();
    let mut violations = 0u64;
    let mut first = None;
    for trial in 0..plan.trials {
        let mut tape = NoiseTape::generate(plan.master_seed, trial, n, bits);
        let mismatched = NoiseTape::generate(plan.master_seed, trial + 1, n, bits);
        let out_real = scheme.run(&tape, Mode::Modulo).modulo.unwrap();
        tape.z = mismatched.z;
        tape.z_fb = mismatched.z_fb;
        let out_coupled = scheme.run(&tape, Mode::Coupled).coupled.unwrap();
        if out_real.union_event() != out_coupled.union_event()
            || out_real.alias_mask != out_coupled.alias_mask
        {
            violations += 1;
            first.get_or_insert(trial);
        }
    }
    let report = estimate(plan)?;
    Ok(AuditReport { trials: plan.trials, violations, first_violation: first, report })
}

/// Reproduce a single trial bit-exactly, with full traces.
pub fn replay(master_seed: u64, trial_index: u64, target: &SimTarget) -> Result<ReplayRecord> {
    let runner = build_runner(target)?;
    let sys = sys_of(target);
    match runner {
        Runner::Noisy(scheme, mode) => {
            let tape =
                NoiseTape::generate(master_seed, trial_index, sys.n_rounds, scheme.message_bits());
            let mut traces = TracePair::default();
            let outcome = scheme.run_traced(&tape, mode, &mut traces);
            Ok(ReplayRecord {
                master_seed,
                trial_index,
                outcome,
                modulo_trace: (mode != Mode::Coupled).then(|| traces.modulo.clone()),
                coupled_trace: (mode != Mode::Modulo).then(|| traces.coupled.clone()),
            })
        }
        Runner::Sk(scheme) => {
            let tape =
                NoiseTape::generate(master_seed, trial_index, sys.n_rounds, scheme.message_bits());
            let out = scheme.run(&tape, None);
            Ok(ReplayRecord {
                master_seed,
                trial_index,
                outcome: TrialOutcome { modulo: Some(out), coupled: None, coupling: None },
                modulo_trace: None,
                coupled_trace: None,
            })
        }
    }
}

/// A replayed trial with its traces.
#[derive(Debug, Clone, Serialize)]
pub struct ReplayRecord {
    pub master_seed: u64,
    pub trial_index: u64,
    pub outcome: TrialOutcome,
    pub modulo_trace: Option<RoundTrace>,
    pub coupled_trace: Option<RoundTrace>,
}

/// Two-sided Clopper-Pearson interval by bisection on the regularized
/// incomplete beta function. Chosen over the normal approximation because
/// the target error rates sit at 1e-6 with few events.
pub fn clopper_pearson(events: u64, trials: u64, alpha: f64) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::Domain("clopper_pearson needs trials > 0".into()));
    }
    if events > trials {
        return Err(Error::Domain(format!("events {events} > trials {trials}")));
    }
    let k = events as f64;
    let n = trials as f64;
    let lower = if events == 0 {
        0.0
    } else {
        // p with BetaCdf(p; k, n-k+1) = 1 - alpha/2
        beta_quantile(alpha / 2.0, k, n - k + 1.0)
    };
    let upper = if events == trials {
        1.0
    } else {
        beta_quantile(1.0 - alpha / 2.0, k + 1.0, n - k)
    };
    Ok(Estimate { events, trials, rate: k / n, lower, upper })
}

/// Quantile of the Beta(a, b) distribution by bisection on the
/// regularized incomplete beta.
fn beta_quantile(q: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if statrs::function::beta::beta_reg(a, b, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}
