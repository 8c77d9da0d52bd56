//! Executable protocol state machines: the noiseless-feedback
//! Schalkwijk-Kailath baseline, the noisy-feedback scalar modulo scheme,
//! its coupled (modulo-free) twin sharing the same sample paths, and the
//! interlaced block scheme.
//!
//! # Error-coordinate simulation
//!
//! The runners track the estimation error `eps_n = theta_hat_n - theta`
//! directly instead of the absolute estimate. The two are equivalent:
//! with the dither identities, Terminal B's transmission is
//! `x_fb = [v' + gamma eps] mod d` for an effective dither `v'` that is
//! uniform and independent of everything else, and Terminal A's recovery
//! is `[gamma eps + z_fb] mod d`. The error coordinates stay O(1) for any
//! constellation size, which keeps the simulation exact in f64 even at
//! 76-bit messages where absolute constellation coordinates are below
//! machine resolution. It also makes the sample-path coupling exact: when
//! no aliasing has occurred, the modulo system computes literally the same
//! floating-point operations as the coupled system, so their errors are
//! bit-identical.
//!
//! Timing: round 1 is feedforward only; rounds 2..N are each preceded by
//! one feedback use, so a message takes N forward and N-1 feedback uses,
//! and rate accounting divides by N.

use crate::lattice::{CubicLattice, ScalarModulo};
use crate::modulation::PamConstellation;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Physical setup: powers, noise variances, round count.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SystemParams {
    /// Terminal A (feedforward) average power constraint.
    pub forward_power: f64,
    /// Terminal B (feedback) average power constraint.
    pub feedback_power: f64,
    /// Feedforward noise variance.
    pub forward_noise_var: f64,
    /// Feedback noise variance.
    pub feedback_noise_var: f64,
    /// Number of interaction rounds N.
    pub n_rounds: usize,
}

impl SystemParams {
    pub fn new(
        forward_power: f64,
        feedback_power: f64,
        forward_noise_var: f64,
        feedback_noise_var: f64,
        n_rounds: usize,
    ) -> Result<SystemParams> {
        let sys = SystemParams {
            forward_power,
            feedback_power,
            forward_noise_var,
            feedback_noise_var,
            n_rounds,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Unit-noise-variance setup from SNRs in dB.
    pub fn from_snr_db(snr_db: f64, dsnr_db: f64, n_rounds: usize) -> Result<SystemParams> {
        let snr = 10f64.powf(snr_db / 10.0);
        let snr_fb = 10f64.powf((snr_db + dsnr_db) / 10.0);
        SystemParams::new(snr, snr_fb, 1.0, 1.0, n_rounds)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("forward_power", self.forward_power),
            ("feedback_power", self.feedback_power),
            ("forward_noise_var", self.forward_noise_var),
            ("feedback_noise_var", self.feedback_noise_var),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_rounds == 0 {
            return Err(Error::Config("n_rounds must be at least 1".into()));
        }
        if self.n_rounds > 64 {
            return Err(Error::Config(format!(
                "n_rounds is limited to 64, got {}",
                self.n_rounds
            )));
        }
        if !(self.dsnr() > 1.0) {
            return Err(Error::Config(format!(
                "feedback channel must be better than the feedforward one (dsnr = {} <= 1)",
                self.dsnr()
            )));
        }
        Ok(())
    }

    pub fn snr(&self) -> f64 {
        self.forward_power / self.forward_noise_var
    }

    pub fn snr_fb(&self) -> f64 {
        self.feedback_power / self.feedback_noise_var
    }

    /// Excess SNR of the feedback channel over the feedforward one.
    pub fn dsnr(&self) -> f64 {
        self.snr_fb() / self.snr()
    }
}

/// Derived protocol coefficients of the noisy-feedback scheme.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Looseness L: feedback power over the modulo-argument variance.
    pub looseness: f64,
    /// Modulo interval `d = sqrt(12 feedback_power)`.
    pub modulo_interval: f64,
    /// Terminal A's scaling of the recovered error (alpha).
    pub forward_gain: f64,
    /// Wiener coefficients; entry `n-1` scales `y_{n+1}` in the update of
    /// round n+1, for n = 1..N-1.
    pub estimator_gain: Vec<f64>,
    /// Terminal B's modulo amplification per feedback round, n = 1..N-1.
    pub feedback_gain: Vec<f64>,
    /// Coupled-system error standard deviations sigma_n, n = 1..N.
    pub error_std: Vec<f64>,
}

impl SchemeParams {
    /// Coefficient sequences for a given looseness, in the scalar scheme's
    /// unit-message normalization (sigma_1 = 1/sqrt(snr)).
    pub fn from_looseness(sys: &SystemParams, looseness: f64) -> Result<SchemeParams> {
        let snr = sys.snr();
        let (alpha, beta, gamma, sigma) =
            coefficient_sequences(sys, looseness, 1.0 / snr.sqrt())?;
        Ok(SchemeParams {
            looseness,
            modulo_interval: (12.0 * sys.feedback_power).sqrt(),
            forward_gain: alpha,
            estimator_gain: beta,
            feedback_gain: gamma,
            error_std: sigma,
        })
    }

    pub fn validate(&self, sys: &SystemParams) -> Result<()> {
        if sys.n_rounds >= 2 && !(self.looseness < sys.snr_fb()) {
            return Err(Error::Infeasible(format!(
                "looseness {} must be below the feedback snr {}",
                self.looseness,
                sys.snr_fb()
            )));
        }
        let all = self
            .error_std
            .iter()
            .chain(&self.estimator_gain)
            .chain(&self.feedback_gain);
        for v in all {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::Infeasible(format!("non-positive coefficient {v}")));
            }
        }
        if self.error_std.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Infeasible("error std sequence must decrease".into()));
        }
        Ok(())
    }
}

/// Common recursion coefficients. `sigma1` fixes the normalization of the
/// message space: `1/sqrt(snr)` for the unit-power scalar scheme, the raw
/// noise std for the block scheme whose codewords carry the power.
fn coefficient_sequences(
    sys: &SystemParams,
    looseness: f64,
    sigma1: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = sys.n_rounds;
    let snr = sys.snr();
    let snr_fb = sys.snr_fb();
    let dsnr = sys.dsnr();
    if n >= 2 && !(looseness < snr_fb) {
        return Err(Error::Infeasible(format!(
            "looseness {looseness} must be below the feedback snr {snr_fb}"
        )));
    }
    if !(looseness > 0.0 && looseness.is_finite()) {
        return Err(Error::Domain(format!("looseness must be positive, got {looseness}")));
    }
    let alpha = (looseness * sys.forward_power / sys.feedback_power).sqrt();
    // per-round error contraction of the coupled system
    let omega = 1.0 + snr * (1.0 - looseness / snr_fb) / (1.0 + looseness / dsnr);
    let sigma: Vec<f64> = (0..n).map(|k| sigma1 * omega.powi(-(k as i32)).sqrt()).collect();
    let gain = (sys.feedback_power / looseness - sys.feedback_noise_var).sqrt();
    let gamma: Vec<f64> = sigma[..n - 1].iter().map(|s| gain / s).collect();
    let beta_scale =
        (snr * (1.0 - looseness / snr_fb)).sqrt() / (1.0 + snr) / sys.forward_noise_var.sqrt();
    let beta: Vec<f64> = sigma[..n - 1].iter().map(|s| s * beta_scale).collect();
    Ok((alpha, beta, gamma, sigma))
}

/// Unit-variate noise record for one trial. Fully determined by
/// `(master_seed, trial_index)`; reusable across scheme variants so that
/// different systems can be coupled on the same sample path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NoiseTape {
    /// Message as a Gray label of `message_bits` bits.
    pub message: u128,
    /// Standard normal feedforward noises, rounds 1..N.
    pub z: Vec<f64>,
    /// Standard normal feedback noises, rounds 1..N-1.
    pub z_fb: Vec<f64>,
    /// Uniform dithers on [-1/2, 1/2), rounds 1..N-1.
    pub dither: Vec<f64>,
}

impl NoiseTape {
    /// Counter-based per-trial generator: one ChaCha stream per trial
    /// index, so trial i's tape is identical no matter which worker runs
    /// it or in what order.
    pub fn rng_for_trial(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(trial_index);
        rng
    }

    pub fn generate(
        master_seed: u64,
        trial_index: u64,
        n_rounds: usize,
        message_bits: u32,
    ) -> NoiseTape {
        let mut tape = NoiseTape::default();
        tape.regenerate(master_seed, trial_index, n_rounds, message_bits);
        tape
    }

    /// Refill in place (no reallocation in steady state). Draw order is
    /// fixed: message, forward noises, feedback noises, dithers.
    pub fn regenerate(
        &mut self,
        master_seed: u64,
        trial_index: u64,
        n_rounds: usize,
        message_bits: u32,
    ) {
        debug_assert!(message_bits >= 1 && message_bits <= 120);
        let mut rng = Self::rng_for_trial(master_seed, trial_index);
        let mask = (1u128 << message_bits) - 1;
        self.message = rng.random::<u128>() & mask;
        self.z.clear();
        self.z
            .extend((0..n_rounds).map(|_| rng.sample::<f64, _>(StandardNormal)));
        self.z_fb.clear();
        self.z_fb
            .extend((0..n_rounds - 1).map(|_| rng.sample::<f64, _>(StandardNormal)));
        self.dither.clear();
        self.dither
            .extend((0..n_rounds - 1).map(|_| rng.random::<f64>() - 0.5));
    }

    /// All-zero noises and dithers with a fixed message.
    pub fn zeroed(n_rounds: usize, message: u128) -> NoiseTape {
        NoiseTape {
            message,
            z: vec![0.0; n_rounds],
            z_fb: vec![0.0; n_rounds - 1],
            dither: vec![0.0; n_rounds - 1],
        }
    }

    /// Zero out the noise entries, keeping message and dithers.
    pub fn silence_noise(&mut self) {
        self.z.iter_mut().for_each(|v| *v = 0.0);
        self.z_fb.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Which system(s) a run simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The real protocol with modulo operations at both terminals.
    Modulo,
    /// The modulo-free thought-experiment twin (jointly Gaussian,
    /// violates Terminal B's power constraint by design).
    Coupled,
    /// Both on the same tape, with per-trial coupling checks.
    Both,
}

/// Per-system result of one trial.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SystemOutcome {
    /// Minimum-distance decode differed from the message.
    pub decision_error: bool,
    /// Hamming distance between decoded and true Gray labels.
    pub bit_errors: u32,
    /// Modulo-aliasing events, bit n-1 for round n (1..N-1).
    pub alias_mask: u64,
    /// Final error left the half-minimum-distance interval (the decoding
    /// error event of the union bound; decision_error implies this, not
    /// conversely, because edge points absorb outward noise).
    pub final_error_event: bool,
    /// Sum of squared Terminal A inputs over the N forward uses.
    pub power_forward_sum: f64,
    /// Sum of squared Terminal B inputs over the N-1 feedback uses.
    pub power_feedback_sum: f64,
}

impl SystemOutcome {
    /// Union of the per-round aliasing events and the final-error event.
    pub fn union_event(&self) -> bool {
        self.alias_mask != 0 || self.final_error_event
    }
}

/// Result of one trial of the noisy-feedback scheme.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct TrialOutcome {
    pub modulo: Option<SystemOutcome>,
    pub coupled: Option<SystemOutcome>,
    /// Coupling checks, present in [`Mode::Both`].
    pub coupling: Option<CouplingCheck>,
}

/// Per-trial sample-path coupling verification.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CouplingCheck {
    /// The union events of the two systems agreed.
    pub union_equal: bool,
    /// All errors up to (and including) the first aliasing round were
    /// bit-identical between the systems.
    pub pre_alias_identical: bool,
}

impl CouplingCheck {
    pub fn ok(&self) -> bool {
        self.union_equal && self.pre_alias_identical
    }
}

/// Per-round record of all signals in a simulation run of one system.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RoundTrace {
    /// True if this trace records the coupled (modulo-free) system.
    pub coupled_system: bool,
    /// Terminal A channel inputs, rounds 1..N.
    pub x: Vec<f64>,
    /// Terminal B channel outputs, rounds 1..N.
    pub y: Vec<f64>,
    /// Terminal B channel inputs (feedback), rounds 1..N-1.
    pub x_fb: Vec<f64>,
    /// Terminal A channel outputs (feedback), rounds 1..N-1.
    pub y_fb: Vec<f64>,
    /// Estimation errors eps_n, rounds 1..N.
    pub eps: Vec<f64>,
    /// Recovered scaled errors at Terminal A, rounds 1..N-1.
    pub eps_fb: Vec<f64>,
    /// Terminal B estimates (f64-resolution view; exact only while the
    /// constellation is small enough to resolve).
    pub theta_hat: Vec<f64>,
    /// Aliasing event flags, rounds 1..N-1.
    pub alias: Vec<bool>,
    /// Final error event (error outside half the minimum distance).
    pub final_error_event: bool,
    /// Message and decoded Gray labels (decimal strings: u128 range).
    pub message: String,
    pub decoded: String,
    pub decision_error: bool,
}

impl RoundTrace {
    fn reset(&mut self, coupled: bool) {
        self.coupled_system = coupled;
        self.x.clear();
        self.y.clear();
        self.x_fb.clear();
        self.y_fb.clear();
        self.eps.clear();
        self.eps_fb.clear();
        self.theta_hat.clear();
        self.alias.clear();
        self.final_error_event = false;
        self.message.clear();
        self.decoded.clear();
        self.decision_error = false;
    }
}

/// Trace pair for [`Mode::Both`] runs (either side may be unused).
#[derive(Debug, Clone, Default, Serialize)]
pub struct TracePair {
    pub modulo: RoundTrace,
    pub coupled: RoundTrace,
}

/// Prepared runner for the noisy-feedback scalar scheme.
#[derive(Debug, Clone)]
pub struct NoisyFbScheme {
    n_rounds: usize,
    sqrt_p: f64,
    sigma: f64,
    sigma_fb: f64,
    modulo: ScalarModulo,
    alpha: f64,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    constellation: PamConstellation,
}

impl NoisyFbScheme {
    pub fn new(sys: &SystemParams, params: &SchemeParams, rate: f64) -> Result<NoisyFbScheme> {
        sys.validate()?;
        params.validate(sys)?;
        let bits = message_bits(sys.n_rounds, rate)?;
        Ok(NoisyFbScheme {
            n_rounds: sys.n_rounds,
            sqrt_p: sys.forward_power.sqrt(),
            sigma: sys.forward_noise_var.sqrt(),
            sigma_fb: sys.feedback_noise_var.sqrt(),
            modulo: ScalarModulo::new(params.modulo_interval)?,
            alpha: params.forward_gain,
            beta: params.estimator_gain.clone(),
            gamma: params.feedback_gain.clone(),
            constellation: PamConstellation::new(bits)?,
        })
    }

    pub fn n_rounds(&self) -> usize {
        self.n_rounds
    }

    pub fn message_bits(&self) -> u32 {
        self.constellation.bits_per_symbol()
    }

    pub fn constellation(&self) -> &PamConstellation {
        &self.constellation
    }

    /// Run one trial. With `Mode::Both` the two systems advance in
    /// lockstep over the identical tape and the coupling checks are
    /// evaluated per round.
    pub fn run(&self, tape: &NoiseTape, mode: Mode) -> TrialOutcome {
        self.run_internal(tape, mode, None, None)
    }

    /// Run one trial capturing full signal traces.
    pub fn run_traced(&self, tape: &NoiseTape, mode: Mode, traces: &mut TracePair) -> TrialOutcome {
        self.run_internal(tape, mode, Some(traces), None)
    }

    /// Run one trial additionally writing the coupled-system error of each
    /// round into `coupled_errors` (used by variance audits).
    pub fn run_observed(
        &self,
        tape: &NoiseTape,
        mode: Mode,
        coupled_errors: &mut [f64],
    ) -> TrialOutcome {
        self.run_internal(tape, mode, None, Some(coupled_errors))
    }

    fn run_internal(
        &self,
        tape: &NoiseTape,
        mode: Mode,
        mut traces: Option<&mut TracePair>,
        mut coupled_errors: Option<&mut [f64]>,
    ) -> TrialOutcome {
        let n = self.n_rounds;
        debug_assert!(tape.z.len() >= n && tape.z_fb.len() >= n - 1 && tape.dither.len() >= n - 1);
        let run_modulo = mode != Mode::Coupled;
        let run_coupled = mode != Mode::Modulo;
        let d = self.modulo.interval();

        let w = tape.message;
        let point = self.constellation.point_index(w).expect("message fits constellation");
        let theta = self.constellation.amplitude(point);

        if let Some(tr) = traces.as_deref_mut() {
            tr.modulo.reset(false);
            tr.coupled.reset(true);
        }

        // round 1: x_1 = sqrt(P) theta, theta_hat_1 = y_1/sqrt(P)
        let x1 = self.sqrt_p * theta;
        let eps1 = self.sigma * tape.z[0] / self.sqrt_p;
        let mut eps_m = eps1;
        let mut eps_c = eps1;
        let x1_sq = x1 * x1;
        let mut pow_a_m = x1_sq;
        let mut pow_a_c = x1_sq;
        let mut pow_b_m = 0.0;
        let mut pow_b_c = 0.0;
        let mut alias_m = 0u64;
        let mut alias_c = 0u64;
        let mut identical = true;
        if let Some(tr) = traces.as_deref_mut() {
            for (trace, eps) in [(&mut tr.modulo, eps_m), (&mut tr.coupled, eps_c)] {
                trace.x.push(x1);
                trace.y.push(x1 + self.sigma * tape.z[0]);
                trace.eps.push(eps);
                trace.theta_hat.push(theta + eps);
                trace.message = w.to_string();
            }
        }

        for k in 0..n - 1 {
            let z_fb = self.sigma_fb * tape.z_fb[k];
            let z_next = self.sigma * tape.z[k + 1];
            let gamma = self.gamma[k];
            let beta = self.beta[k];

            let mut x_m = 0.0;
            let mut x_c = 0.0;
            if run_modulo {
                let s = gamma * eps_m + z_fb;
                let in_cell = self.modulo.in_cell(s);
                // mod_d(s) = s when in the cell; the explicit branch keeps
                // the no-aliasing path bit-identical to the coupled system
                let recovered = if in_cell { s } else { self.modulo.reduce(s) };
                if !in_cell {
                    alias_m |= 1 << k;
                }
                let x_fb = self.modulo.reduce(tape.dither[k] * d + gamma * eps_m);
                pow_b_m += x_fb * x_fb;
                x_m = self.alpha * recovered;
                pow_a_m += x_m * x_m;
                if let Some(tr) = traces.as_deref_mut() {
                    tr.modulo.x_fb.push(x_fb);
                    tr.modulo.y_fb.push(x_fb + z_fb);
                    tr.modulo.eps_fb.push(recovered);
                    tr.modulo.alias.push(!in_cell);
                    tr.modulo.x.push(x_m);
                    tr.modulo.y.push(x_m + z_next);
                }
                eps_m -= beta * (x_m + z_next);
                if let Some(tr) = traces.as_deref_mut() {
                    tr.modulo.eps.push(eps_m);
                    tr.modulo.theta_hat.push(theta + eps_m);
                }
            }
            if run_coupled {
                let s = gamma * eps_c + z_fb;
                if !self.modulo.in_cell(s) {
                    alias_c |= 1 << k;
                }
                // Terminal B sends unclipped; its "power" is the thought
                // experiment's, recorded for completeness
                let x_fb = gamma * (theta + eps_c) + tape.dither[k] * d;
                pow_b_c += x_fb * x_fb;
                x_c = self.alpha * s;
                pow_a_c += x_c * x_c;
                if let Some(tr) = traces.as_deref_mut() {
                    tr.coupled.x_fb.push(x_fb);
                    tr.coupled.y_fb.push(x_fb + z_fb);
                    tr.coupled.eps_fb.push(s);
                    tr.coupled.alias.push(!self.modulo.in_cell(s));
                    tr.coupled.x.push(x_c);
                    tr.coupled.y.push(x_c + z_next);
                }
                eps_c -= beta * (x_c + z_next);
                if let Some(tr) = traces.as_deref_mut() {
                    tr.coupled.eps.push(eps_c);
                    tr.coupled.theta_hat.push(theta + eps_c);
                }
                if let Some(errs) = coupled_errors.as_deref_mut() {
                    errs[k + 1] = eps_c;
                }
            }
            let _ = (x_m, x_c);
            if mode == Mode::Both && alias_m == 0 && eps_m.to_bits() != eps_c.to_bits() {
                identical = false;
            }
        }
        if let Some(errs) = coupled_errors.as_deref_mut() {
            errs[0] = eps1;
        }

        let eta = self.constellation.eta();
        let finish = |eps: f64, alias: u64, pow_a: f64, pow_b: f64| -> SystemOutcome {
            let decoded = self.constellation.decode_relative(point, eps);
            SystemOutcome {
                decision_error: decoded != w,
                bit_errors: (decoded ^ w).count_ones(),
                alias_mask: alias,
                final_error_event: !(-eta..eta).contains(&eps),
                power_forward_sum: pow_a,
                power_feedback_sum: pow_b,
            }
        };

        let modulo = run_modulo.then(|| finish(eps_m, alias_m, pow_a_m, pow_b_m));
        let coupled = run_coupled.then(|| finish(eps_c, alias_c, pow_a_c, pow_b_c));
        if let Some(tr) = traces.as_deref_mut() {
            if let Some(o) = &modulo {
                tr.modulo.final_error_event = o.final_error_event;
                tr.modulo.decision_error = o.decision_error;
                tr.modulo.decoded = self.constellation.decode_relative(point, eps_m).to_string();
            }
            if let Some(o) = &coupled {
                tr.coupled.final_error_event = o.final_error_event;
                tr.coupled.decision_error = o.decision_error;
                tr.coupled.decoded = self.constellation.decode_relative(point, eps_c).to_string();
            }
        }
        let coupling = (mode == Mode::Both).then(|| CouplingCheck {
            union_equal: modulo.as_ref().map(|m| m.union_event())
                == coupled.as_ref().map(|c| c.union_event()),
            pre_alias_identical: identical,
        });
        TrialOutcome { modulo, coupled, coupling }
    }
}

/// Prepared runner for the classic S-K scheme over noiseless feedback.
#[derive(Debug, Clone)]
pub struct SkScheme {
    n_rounds: usize,
    sqrt_p: f64,
    sigma: f64,
    /// alpha_n = sqrt(P)/sigma_n, rounds 1..N-1.
    forward_gain: Vec<f64>,
    /// beta_{n+1}, rounds 1..N-1.
    estimator_gain: Vec<f64>,
    /// sigma_n = sqrt(1/(snr (1+snr)^{n-1})), rounds 1..N.
    error_std: Vec<f64>,
    constellation: PamConstellation,
}

impl SkScheme {
    pub fn new(sys: &SystemParams, rate: f64) -> Result<SkScheme> {
        sys.validate()?;
        let bits = message_bits(sys.n_rounds, rate)?;
        let snr = sys.snr();
        let n = sys.n_rounds;
        let error_std: Vec<f64> =
            (0..n).map(|k| (snr * (1.0 + snr).powi(k as i32)).sqrt().recip()).collect();
        let sqrt_p = sys.forward_power.sqrt();
        let forward_gain: Vec<f64> = error_std[..n - 1].iter().map(|s| sqrt_p / s).collect();
        let beta_scale = snr.sqrt() / (1.0 + snr) / sys.forward_noise_var.sqrt();
        let estimator_gain: Vec<f64> =
            error_std[..n - 1].iter().map(|s| s * beta_scale).collect();
        Ok(SkScheme {
            n_rounds: n,
            sqrt_p,
            sigma: sys.forward_noise_var.sqrt(),
            forward_gain,
            estimator_gain,
            error_std,
            constellation: PamConstellation::new(bits)?,
        })
    }

    pub fn message_bits(&self) -> u32 {
        self.constellation.bits_per_symbol()
    }

    pub fn constellation(&self) -> &PamConstellation {
        &self.constellation
    }

    /// Ensemble error variance after round n (1-based), `sigma_n^2`.
    pub fn theoretical_error_var(&self, round: usize) -> f64 {
        let s = self.error_std[round - 1];
        s * s
    }

    /// Run one trial; only the message and forward noises of the tape are
    /// consumed (the feedback is noiseless).
    pub fn run(&self, tape: &NoiseTape, mut errors: Option<&mut [f64]>) -> SystemOutcome {
        let n = self.n_rounds;
        let w = tape.message;
        let point = self.constellation.point_index(w).expect("message fits constellation");
        let theta = self.constellation.amplitude(point);
        let x1 = self.sqrt_p * theta;
        let mut pow_a = x1 * x1;
        let mut pow_b = 0.0;
        let mut eps = self.sigma * tape.z[0] / self.sqrt_p;
        if let Some(e) = errors.as_deref_mut() {
            e[0] = eps;
        }
        for k in 0..n - 1 {
            // Terminal B feeds back its estimate; A recovers eps exactly
            let theta_hat = theta + eps;
            pow_b += theta_hat * theta_hat;
            let x = self.forward_gain[k] * eps;
            pow_a += x * x;
            let y = x + self.sigma * tape.z[k + 1];
            eps -= self.estimator_gain[k] * y;
            if let Some(e) = errors.as_deref_mut() {
                e[k + 1] = eps;
            }
        }
        let eta = self.constellation.eta();
        let decoded = self.constellation.decode_relative(point, eps);
        SystemOutcome {
            decision_error: decoded != w,
            bit_errors: (decoded ^ w).count_ones(),
            alias_mask: 0,
            final_error_event: !(-eta..eta).contains(&eps),
            power_forward_sum: pow_a,
            power_feedback_sum: pow_b,
        }
    }
}

/// `N * rate` as a whole number of message bits.
pub fn message_bits(n_rounds: usize, rate: f64) -> Result<u32> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Config(format!("rate must be positive, got {rate}")));
    }
    let bits = n_rounds as f64 * rate;
    let rounded = bits.round();
    if (bits - rounded).abs() > 1e-9 || rounded < 1.0 {
        return Err(Error::Config(format!(
            "n_rounds * rate must be a whole number of bits >= 1, got {bits}"
        )));
    }
    if rounded > 120.0 {
        return Err(Error::Config(format!(
            "message size {rounded} bits exceeds the supported 120"
        )));
    }
    Ok(rounded as u32)
}

/// Accumulated per-terminal power statistics over an ensemble of trials.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PowerAccumulator {
    pub trials: u64,
    pub forward_sum: f64,
    pub feedback_sum: f64,
}

impl PowerAccumulator {
    pub fn record(&mut self, outcome: &SystemOutcome) {
        self.trials += 1;
        self.forward_sum += outcome.power_forward_sum;
        self.feedback_sum += outcome.power_feedback_sum;
    }

    pub fn merge(&mut self, other: &PowerAccumulator) {
        self.trials += other.trials;
        self.forward_sum += other.forward_sum;
        self.feedback_sum += other.feedback_sum;
    }

    pub fn report(&self, sys: &SystemParams) -> PowerReport {
        let n = sys.n_rounds as f64;
        let t = (self.trials as f64).max(1.0);
        let forward_avg = self.forward_sum / (t * n);
        let feedback_active = if sys.n_rounds > 1 {
            self.feedback_sum / (t * (n - 1.0))
        } else {
            0.0
        };
        PowerReport {
            trials: self.trials,
            forward_avg_per_round: forward_avg,
            forward_excess_db: 10.0 * (forward_avg / sys.forward_power).log10(),
            feedback_avg_per_active_round: feedback_active,
            feedback_avg_per_round: self.feedback_sum / (t * n),
            expected_forward: sys.forward_power,
            expected_feedback_per_active_round: sys.feedback_power,
        }
    }
}

/// Empirical average power per terminal.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerReport {
    pub trials: u64,
    /// Terminal A, averaged over the N forward uses.
    pub forward_avg_per_round: f64,
    /// dB of measured over constraint at Terminal A.
    pub forward_excess_db: f64,
    /// Terminal B, averaged over its N-1 active rounds.
    pub feedback_avg_per_active_round: f64,
    /// Terminal B, averaged over all N rounds (silent in the last).
    pub feedback_avg_per_round: f64,
    pub expected_forward: f64,
    pub expected_feedback_per_active_round: f64,
}

/// Report of per-terminal average powers of an outcome ensemble.
pub fn measure_power<'a>(
    outcomes: impl IntoIterator<Item = &'a SystemOutcome>,
    sys: &SystemParams,
) -> PowerReport {
    let mut acc = PowerAccumulator::default();
    for o in outcomes {
        acc.record(o);
    }
    acc.report(sys)
}

// ---------------------------------------------------------------------------
// Interlaced block scheme
// ---------------------------------------------------------------------------

/// A Gaussian codebook for the block scheme: `2^bits` i.i.d. codewords of
/// per-symbol power `power`, fixed by seed.
#[derive(Debug, Clone)]
pub struct BlockCodebook {
    dim: usize,
    power: f64,
    codewords: Vec<Vec<f64>>,
}

impl BlockCodebook {
    pub fn gaussian(dim: usize, bits: u32, power: f64, seed: u64) -> Result<BlockCodebook> {
        if bits == 0 || bits > 20 {
            return Err(Error::Config(format!(
                "block codebook limited to 1..=20 bits, got {bits}"
            )));
        }
        if dim == 0 {
            return Err(Error::Config("codeword dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = power.sqrt();
        let codewords = (0..1usize << bits)
            .map(|_| (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        Ok(BlockCodebook { dim, power, codewords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn codeword(&self, w: usize) -> &[f64] {
        &self.codewords[w]
    }

    /// Maximum-likelihood decoding over the AWGN channel: the codeword
    /// nearest to `y` in Euclidean distance, by exhaustive search.
    pub fn ml_decode(&self, y: &[f64]) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (w, c) in self.codewords.iter().enumerate() {
            let d: f64 = c.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best_d {
                best_d = d;
                best = w;
            }
        }
        best
    }
}

/// Noise record for one interlaced trial: two independent streams.
#[derive(Debug, Clone)]
pub struct BlockNoiseTape {
    /// Per stream: message index into the codebook.
    pub message: [usize; 2],
    /// Per stream: K blocks of forward noise, flattened K*dim.
    pub z: [Vec<f64>; 2],
    /// Per stream: K-1 blocks of feedback noise.
    pub z_fb: [Vec<f64>; 2],
    /// Per stream: K-1 blocks of dither in [-1/2, 1/2) units.
    pub dither: [Vec<f64>; 2],
}

impl BlockNoiseTape {
    pub fn generate(
        master_seed: u64,
        trial_index: u64,
        k_rounds: usize,
        dim: usize,
        codebook_len: usize,
    ) -> BlockNoiseTape {
        let mut rng = NoiseTape::rng_for_trial(master_seed, trial_index);
        let stream = |rng: &mut ChaCha8Rng| {
            let message = (rng.random::<u64>() as usize) % codebook_len;
            let z = (0..k_rounds * dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let z_fb = (0..(k_rounds - 1) * dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let dither =
                (0..(k_rounds - 1) * dim).map(|_| rng.random::<f64>() - 0.5).collect();
            (message, z, z_fb, dither)
        };
        let (m0, z0, f0, d0) = stream(&mut rng);
        let (m1, z1, f1, d1) = stream(&mut rng);
        BlockNoiseTape {
            message: [m0, m1],
            z: [z0, z1],
            z_fb: [f0, f1],
            dither: [d0, d1],
        }
    }

    pub fn zeroed(k_rounds: usize, dim: usize, message: [usize; 2]) -> BlockNoiseTape {
        BlockNoiseTape {
            message,
            z: [vec![0.0; k_rounds * dim], vec![0.0; k_rounds * dim]],
            z_fb: [
                vec![0.0; (k_rounds - 1) * dim],
                vec![0.0; (k_rounds - 1) * dim],
            ],
            dither: [
                vec![0.0; (k_rounds - 1) * dim],
                vec![0.0; (k_rounds - 1) * dim],
            ],
        }
    }
}

/// One block-timeline slot of the interlaced schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockSlot {
    /// Position on the shared channel timeline, 1-based.
    pub time_block: usize,
    pub stream: usize,
    /// Protocol round the slot carries.
    pub round: usize,
    /// True for Terminal A to B, false for the feedback direction.
    pub forward: bool,
}

/// Outcome of one stream of the interlaced block scheme.
#[derive(Debug, Clone, Serialize)]
pub struct BlockStreamOutcome {
    pub message: usize,
    pub decoded: usize,
    pub decision_error: bool,
    /// Rounds in which any component left the Voronoi cell.
    pub alias_mask: u64,
    /// Sum of squared feedback-signal components over the K-1 feedback blocks.
    pub power_feedback_sum: f64,
    /// Final per-dimension errors (coupled-system values in coupled mode).
    pub final_errors: Vec<f64>,
}

/// Outcome of one interlaced trial: both streams plus the timeline.
#[derive(Debug, Clone, Serialize)]
pub struct InterlacedOutcome {
    pub streams: [BlockStreamOutcome; 2],
    pub schedule: Vec<BlockSlot>,
}

/// The interlaced block scheme: two identical block protocols in
/// alternating blocks so neither terminal idles, each running the modulo
/// recursion with vector signals and a scaled cubic lattice, decoded by
/// exhaustive maximum likelihood against the codebook.
#[derive(Debug, Clone)]
pub struct BlockScheme {
    sys: SystemParams,
    lattice: CubicLattice,
    codebook: BlockCodebook,
    k_rounds: usize,
    alpha: f64,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    error_std: Vec<f64>,
}

impl BlockScheme {
    /// `sys.n_rounds` is reused as the round count K; the lattice second
    /// moment must equal the feedback power.
    pub fn new(
        sys: &SystemParams,
        lattice: CubicLattice,
        codebook: BlockCodebook,
        looseness: f64,
    ) -> Result<BlockScheme> {
        sys.validate()?;
        if codebook.dim() != lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: lattice.dim(),
                got: codebook.dim(),
            });
        }
        if (lattice.second_moment() - sys.feedback_power).abs()
            > 1e-9 * sys.feedback_power
        {
            return Err(Error::Config(format!(
                "lattice second moment {} must equal the feedback power {}",
                lattice.second_moment(),
                sys.feedback_power
            )));
        }
        // block normalization: codewords carry the power, so sigma_1 is
        // the raw forward noise std
        let (alpha, beta, gamma, error_std) =
            coefficient_sequences(sys, looseness, sys.forward_noise_var.sqrt())?;
        Ok(BlockScheme {
            sys: *sys,
            lattice,
            codebook,
            k_rounds: sys.n_rounds,
            alpha,
            beta,
            gamma,
            error_std,
        })
    }

    pub fn k_rounds(&self) -> usize {
        self.k_rounds
    }

    pub fn codebook(&self) -> &BlockCodebook {
        &self.codebook
    }

    /// Theoretical coupled-system per-dimension error variance after
    /// round k (1-based).
    pub fn theoretical_error_var(&self, round: usize) -> f64 {
        let s = self.error_std[round - 1];
        s * s
    }

    /// The Fig.-6 style alternating schedule over 2K blocks.
    pub fn schedule(&self) -> Vec<BlockSlot> {
        let k = self.k_rounds;
        let mut slots = Vec::new();
        for round in 1..=k {
            slots.push(BlockSlot { time_block: 2 * round - 1, stream: 0, round, forward: true });
            slots.push(BlockSlot { time_block: 2 * round, stream: 1, round, forward: true });
        }
        for round in 1..=k.saturating_sub(1) {
            slots.push(BlockSlot { time_block: 2 * round, stream: 0, round, forward: false });
            slots.push(BlockSlot { time_block: 2 * round + 1, stream: 1, round, forward: false });
        }
        slots.sort_by_key(|s| (s.time_block, s.stream, !s.forward));
        slots
    }

    /// Run both interlaced streams of one trial.
    pub fn run(&self, tape: &BlockNoiseTape, mode: Mode) -> InterlacedOutcome {
        let s0 = self.run_stream(0, tape, mode);
        let s1 = self.run_stream(1, tape, mode);
        InterlacedOutcome { streams: [s0, s1], schedule: self.schedule() }
    }

    fn run_stream(&self, stream: usize, tape: &BlockNoiseTape, mode: Mode) -> BlockStreamOutcome {
        let dim = self.lattice.dim();
        let k_rounds = self.k_rounds;
        let sigma = self.sys.forward_noise_var.sqrt();
        let sigma_fb = self.sys.feedback_noise_var.sqrt();
        let cell = self.lattice.scalar();
        let d = cell.interval();
        let use_modulo = mode != Mode::Coupled;

        let w = tape.message[stream];
        let z = &tape.z[stream];
        let z_fb = &tape.z_fb[stream];
        let dither = &tape.dither[stream];

        // eps_1 = z_1 (block units: theta_hat_1 = y_1)
        let mut eps: Vec<f64> = (0..dim).map(|i| sigma * z[i]).collect();
        let mut alias_mask = 0u64;
        let mut power_feedback = 0.0;
        for k in 0..k_rounds - 1 {
            let gamma = self.gamma[k];
            let beta = self.beta[k];
            let mut any_alias = false;
            for i in 0..dim {
                let zf = sigma_fb * z_fb[k * dim + i];
                let s = gamma * eps[i] + zf;
                let in_cell = cell.in_cell(s);
                any_alias |= !in_cell;
                let recovered = if use_modulo && !in_cell { cell.reduce(s) } else { s };
                let x_fb = cell.reduce(dither[k * dim + i] * d + gamma * eps[i]);
                power_feedback += x_fb * x_fb;
                let x = self.alpha * recovered;
                let y = x + sigma * z[(k + 1) * dim + i];
                eps[i] -= beta * y;
            }
            if any_alias {
                alias_mask |= 1 << k;
            }
        }

        // theta_hat_K = theta + eps_K, ML decode over the codebook
        let cw = self.codebook.codeword(w);
        let theta_hat: Vec<f64> = cw.iter().zip(&eps).map(|(t, e)| t + e).collect();
        let decoded = self.codebook.ml_decode(&theta_hat);
        BlockStreamOutcome {
            message: w,
            decoded,
            decision_error: decoded != w,
            alias_mask,
            power_feedback_sum: power_feedback,
            final_errors: eps,
        }
    }
}
