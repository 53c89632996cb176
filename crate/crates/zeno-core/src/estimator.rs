//! Measurement campaigns and inversion of the readout statistics.
//!
//! A campaign is Q independent rounds. Each round runs N cycles on a fresh
//! ancilla, so its survival is one Bernoulli draw at the N-cycle branch
//! probability, and — conditioned on survival — the conjugate-basis readout
//! is a second draw at `sin^2(N phi)`. Rounds draw from per-round RNG
//! streams keyed by `(seed, round index)`, so records are reproducible and
//! independent of any execution order.
//!
//! Inversion: `N phi = arcsin(sqrt(p_minus))`, valid on `[0, pi/2]`, then
//! `DH_ee = sqrt(4 |phi| / (tau^2 sin nu))`. The readout determines only
//! the magnitude of the phase (its sign is fixed to negative by the
//! second-order theory). Confidence intervals are Wilson score intervals on
//! the minus-fraction pushed through the monotone inversion.
//!
//! The adaptive estimator needs no prior: it starts at an N that is safe for
//! the rigorous worst case `DH <= sqrt(d-1) * omega_bar`, doubles N while
//! the minus-fraction stays below 1/2, guards every doubling with the Wilson
//! upper bound on `N phi` so it never queries an aliased N, and spends the
//! remaining budget refining at the final N.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::models::{summarize, GenericModel};
use crate::protocol::{
    compute_cycle_amplitudes, exact_survival_one_cycle, readout_probabilities, run_postselected,
    second_order_pe, second_order_phi, snr, CycleAmplitudes, ProtocolParams,
};
use crate::rng::{derive_seed, round_rng};

/// 97.5% normal quantile (two-sided 95%).
const Z95: f64 = 1.959_963_984_540_054;
/// `choose_n` refuses cycle counts beyond this.
const N_OVERFLOW_GUARD: f64 = 1e30;
/// First adaptive stage targets `N * phi_worstcase` at this value.
const ADAPTIVE_START_TARGET: f64 = 0.1;
/// Doubling stops once the worst-case `N phi` after doubling could exceed
/// this (safety factor below pi/2).
const ADAPTIVE_NPHI_CAP: f64 = 0.45 * core::f64::consts::PI;

/// Conjugate-basis readout result of a surviving round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutOutcome {
    Plus,
    Minus,
}

/// One campaign round; `outcome` is present iff the round survived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Round {
    pub survived: bool,
    pub outcome: Option<ReadoutOutcome>,
}

/// Outcome record of a campaign, with the seed and parameters echoed.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub rounds: Vec<Round>,
    pub seed: u64,
    pub params: ProtocolParams,
}

impl MeasurementRecord {
    pub fn survived_rounds(&self) -> u64 {
        self.rounds.iter().filter(|r| r.survived).count() as u64
    }

    pub fn minus_count(&self) -> u64 {
        self.rounds
            .iter()
            .filter(|r| r.outcome == Some(ReadoutOutcome::Minus))
            .count() as u64
    }

    pub fn plus_count(&self) -> u64 {
        self.rounds
            .iter()
            .filter(|r| r.outcome == Some(ReadoutOutcome::Plus))
            .count() as u64
    }
}

/// Which analytic coupling the transition strength maps back to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// Two-level system: `DH_ee` is the Rabi coupling itself.
    TwoLevelRabi,
    /// Discretized continuum: `DH_ee = sqrt(sum |V_i|^2)`.
    ContinuumRms,
}

/// Model coupling derived from the estimated transition strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoupling {
    pub kind: CouplingKind,
    pub value: f64,
}

/// Estimate of the accumulated phase and transition strength.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    /// `arcsin(sqrt(p_minus_hat))`, in [0, pi/2].
    pub n_phi_hat: f64,
    /// Per-cycle phase magnitude, `n_phi_hat / N`.
    pub phi_hat: f64,
    /// Estimated transition strength.
    pub delta_h_hat: f64,
    /// Coupling interpretation, when the model family is known.
    pub derived: Option<DerivedCoupling>,
    pub survived_rounds: u64,
    pub total_rounds: u64,
    /// 95% Wilson interval pushed through the inversion.
    pub ci95_delta_h: (f64, f64),
    /// N the estimate was taken at.
    pub n_cycles_used: f64,
    /// False when the adaptive schedule ran out of budget with unresolved
    /// signal, or the estimate sits on the pi/2 inversion boundary.
    pub converged: bool,
}

impl EstimationResult {
    /// Tags the estimate with the model-family interpretation of `DH_ee`.
    pub fn with_derived(mut self, kind: CouplingKind) -> Self {
        self.derived = Some(DerivedCoupling {
            kind,
            value: self.delta_h_hat,
        });
        self
    }
}

/// Runs Q rounds: per round one survival draw at the exact N-cycle branch
/// probability, then (if survived) one readout draw; the ancilla is reset to
/// the equal superposition between rounds.
pub fn run_campaign(model: &GenericModel, params: &ProtocolParams) -> Result<MeasurementRecord> {
    let cycle = compute_cycle_amplitudes(model, params.tau(), params.nu())?;
    run_campaign_with_cycle(&cycle, params)
}

/// [`run_campaign`] with precomputed cycle amplitudes.
pub fn run_campaign_with_cycle(
    cycle: &CycleAmplitudes,
    params: &ProtocolParams,
) -> Result<MeasurementRecord> {
    let report = run_postselected(cycle, params)?;
    let p_survive = libm::exp(report.log_survival);
    let (_, p_minus) = readout_probabilities(&report.ancilla_state);

    let mut rounds = Vec::with_capacity(params.q_rounds() as usize);
    for round in 0..params.q_rounds() {
        let mut rng = round_rng(params.seed(), round);
        let survived = rng.gen::<f64>() < p_survive;
        let outcome = if survived {
            Some(if rng.gen::<f64>() < p_minus {
                ReadoutOutcome::Minus
            } else {
                ReadoutOutcome::Plus
            })
        } else {
            None
        };
        rounds.push(Round { survived, outcome });
    }
    Ok(MeasurementRecord {
        rounds,
        seed: params.seed(),
        params: params.clone(),
    })
}

/// Inverts the readout statistics of a record at its fixed N.
///
/// The caller guarantees N was chosen with `N |phi|` in `(0, pi/2)`.
pub fn estimate_fixed_n(record: &MeasurementRecord) -> Result<EstimationResult> {
    let survived = record.survived_rounds();
    if survived == 0 {
        return Err(Error::NoSurvivors);
    }
    let minus = record.minus_count();
    if minus == survived {
        return Err(Error::DegenerateInversion);
    }
    Ok(invert_counts(
        minus,
        survived,
        record.rounds.len() as u64,
        record.params.n_cycles(),
        record.params.tau(),
        record.params.nu(),
        true,
    ))
}

/// Shared inversion: counts -> phase -> transition strength, with the
/// Wilson interval mapped through.
fn invert_counts(
    minus: u64,
    survived: u64,
    total: u64,
    n_cycles: f64,
    tau: f64,
    nu: f64,
    converged: bool,
) -> EstimationResult {
    let p_hat = minus as f64 / survived as f64;
    let n_phi_hat = libm::asin(libm::sqrt(p_hat));
    let phi_hat = n_phi_hat / n_cycles;
    let delta_h_hat = delta_h_from_p(p_hat, n_cycles, tau, nu);
    let (p_lo, p_hi) = wilson_interval(minus, survived);
    let ci95_delta_h = (
        delta_h_from_p(p_lo, n_cycles, tau, nu),
        delta_h_from_p(p_hi, n_cycles, tau, nu),
    );
    EstimationResult {
        n_phi_hat,
        phi_hat,
        delta_h_hat,
        derived: None,
        survived_rounds: survived,
        total_rounds: total,
        ci95_delta_h,
        n_cycles_used: n_cycles,
        converged,
    }
}

/// `DH(p) = sqrt(4 arcsin(sqrt(p)) / (N tau^2 sin nu))`; monotone in p.
fn delta_h_from_p(p: f64, n_cycles: f64, tau: f64, nu: f64) -> f64 {
    let phi = libm::asin(libm::sqrt(p.clamp(0.0, 1.0))) / n_cycles;
    libm::sqrt(4.0 * phi / (tau * tau * libm::sin(nu)))
}

/// 95% Wilson score interval for `successes / trials`; always contains the
/// point estimate.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // At the degenerate counts the analytic endpoints are exactly 0 and 1;
    // pin them so roundoff cannot push the interval off the point estimate.
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// N targeting `N |phi| = pi/4`, the maximum-sensitivity point of the
/// `cos^2` readout, for a prior transition strength.
pub fn choose_n(tau: f64, nu: f64, delta_h_prior: f64) -> Result<f64> {
    if !(delta_h_prior.is_finite() && delta_h_prior >= 0.0) {
        return Err(Error::InvalidParams("prior must be non-negative and finite"));
    }
    let phi = second_order_phi(tau, nu, delta_h_prior);
    if phi == 0.0 {
        return Err(Error::Overflow);
    }
    let n = libm::round(core::f64::consts::FRAC_PI_4 / libm::fabs(phi));
    if !(n.is_finite() && n <= N_OVERFLOW_GUARD) {
        return Err(Error::Overflow);
    }
    Ok(n.max(1.0))
}

/// Survival forecast for a whole campaign: `p_all = P_e^{N Q}` from the
/// exact one-cycle survival, plus the `tau -> 0` asymptote `e^{-Q/SNR}`.
pub fn predicted_survival(params: &ProtocolParams, cycle: &CycleAmplitudes) -> (f64, f64) {
    let (log_p1, _) = exact_survival_one_cycle(cycle, params.ancilla());
    per_cycle_to_campaign(log_p1, params)
}

/// [`predicted_survival`] with the second-order per-cycle deficit instead of
/// the exact amplitudes.
pub fn predicted_survival_second_order(params: &ProtocolParams, delta_h_ee: f64) -> (f64, f64) {
    let deficit = second_order_pe(params.tau(), params.nu(), delta_h_ee);
    let log_p1 = if deficit >= 1.0 {
        f64::NEG_INFINITY
    } else {
        libm::log1p(-deficit)
    };
    per_cycle_to_campaign(log_p1, params)
}

fn per_cycle_to_campaign(log_p1: f64, params: &ProtocolParams) -> (f64, f64) {
    let p_all = libm::exp(params.n_cycles() * params.q_rounds() as f64 * log_p1);
    let asymptote = libm::exp(-(params.q_rounds() as f64) / snr(params.nu()));
    (p_all, asymptote)
}

/// Why the adaptive doubling loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StopReason {
    MinusFractionReached,
    AliasGuard,
    BudgetAllowance,
    NoSurvivorsAtStage,
}

/// Doubling-schedule record: every queried N with the worst-case `N phi`
/// bound in force when it was queried.
#[derive(Debug, Clone, Default)]
pub(crate) struct AdaptiveTrace {
    pub queried: Vec<(f64, f64)>,
}

/// Prior-free estimation under a total round budget.
///
/// Stage rounds are a small slice of the budget; at least half the budget is
/// reserved for refinement at the final N. Returns a non-converged result
/// (never an error) when the budget runs out with unresolved signal.
pub fn estimate_adaptive(
    model: &GenericModel,
    tau: f64,
    nu: f64,
    round_budget: u64,
    seed: u64,
) -> Result<EstimationResult> {
    estimate_adaptive_traced(model, tau, nu, round_budget, seed).map(|(result, _)| result)
}

pub(crate) fn estimate_adaptive_traced(
    model: &GenericModel,
    tau: f64,
    nu: f64,
    round_budget: u64,
    seed: u64,
) -> Result<(EstimationResult, AdaptiveTrace)> {
    if round_budget < 16 {
        return Err(Error::InvalidParams("adaptive budget must be >= 16"));
    }
    model.require_shifted()?;
    let summary = summarize(model);
    let cycle = compute_cycle_amplitudes(model, tau, nu)?;
    let mut trace = AdaptiveTrace::default();

    // Rigorous worst case: DH^2 = sum_{i != e} |H_ie|^2 <= (d-1) omega_bar^2.
    let dh_max = libm::sqrt((summary.dim.saturating_sub(1)).max(1) as f64) * summary.omega_bar;
    let phi_worst = libm::fabs(second_order_phi(tau, nu, dh_max));
    if phi_worst >= core::f64::consts::FRAC_PI_2 {
        // Even a single cycle could alias; the operating point is outside
        // the inversion's domain.
        return Err(Error::InvalidParams(
            "worst-case per-cycle phase reaches pi/2; reduce tau",
        ));
    }
    if phi_worst == 0.0 {
        // No couplings at all: every outcome is plus at any N.
        let params = ProtocolParams::new(tau, nu, 1.0, round_budget, derive_seed(seed, 0))?;
        let record = run_campaign_with_cycle(&cycle, &params)?;
        trace.queried.push((1.0, 0.0));
        let result = invert_counts(
            record.minus_count(),
            record.survived_rounds(),
            round_budget,
            1.0,
            tau,
            nu,
            true,
        );
        return Ok((result, trace));
    }

    let stage_rounds = (round_budget / 25).max(8);
    let refine_reserve = round_budget / 2;

    let mut n = libm::round(ADAPTIVE_START_TARGET / phi_worst).max(1.0);
    let mut phi_upper = phi_worst;
    let mut spent = 0u64;
    let mut stage = 0u64;
    let mut stage_minus;
    let mut stage_survived;
    let mut total_survived = 0u64;
    let reason;

    loop {
        let params = ProtocolParams::new(tau, nu, n, stage_rounds, derive_seed(seed, stage))?;
        trace.queried.push((n, phi_upper));
        let record = run_campaign_with_cycle(&cycle, &params)?;
        spent += stage_rounds;
        stage_survived = record.survived_rounds();
        stage_minus = record.minus_count();
        total_survived += stage_survived;

        if stage_survived == 0 {
            reason = StopReason::NoSurvivorsAtStage;
            break;
        }
        let p_hat = stage_minus as f64 / stage_survived as f64;
        if p_hat >= 0.5 {
            reason = StopReason::MinusFractionReached;
            break;
        }
        // Data-driven aliasing guard: with 95% confidence the accumulated
        // phase at this N is below n_phi_upper, so doubling is safe only
        // while 2 * n_phi_upper stays under the cap.
        let (_, p_hi) = wilson_interval(stage_minus, stage_survived);
        let n_phi_upper = libm::asin(libm::sqrt(p_hi));
        phi_upper = phi_upper.min(n_phi_upper / n);
        if 2.0 * n * phi_upper > ADAPTIVE_NPHI_CAP {
            reason = StopReason::AliasGuard;
            break;
        }
        if spent + stage_rounds > round_budget.saturating_sub(refine_reserve) {
            reason = StopReason::BudgetAllowance;
            break;
        }
        n *= 2.0;
        stage += 1;
    }

    // Refine at the final N with everything left, pooling the rounds of the
    // stopping stage (same N, disjoint streams).
    let refine_rounds = round_budget - spent;
    let (mut minus, mut survived) = (stage_minus, stage_survived);
    if refine_rounds > 0 {
        let params = ProtocolParams::new(
            tau,
            nu,
            n,
            refine_rounds,
            derive_seed(seed, stage | 1 << 32),
        )?;
        trace.queried.push((n, phi_upper));
        let record = run_campaign_with_cycle(&cycle, &params)?;
        minus += record.minus_count();
        survived += record.survived_rounds();
        total_survived += record.survived_rounds();
    }
    if survived == 0 {
        return Err(Error::NoSurvivors);
    }

    let schedule_converged = match reason {
        StopReason::MinusFractionReached | StopReason::AliasGuard => true,
        // Out of budget with every outcome plus is a clean null result;
        // unresolved partial signal is not.
        StopReason::BudgetAllowance => minus == 0,
        StopReason::NoSurvivorsAtStage => false,
    };
    let boundary = minus == survived;
    let mut result = invert_counts(
        minus,
        survived,
        spent + refine_rounds,
        n,
        tau,
        nu,
        schedule_converged && !boundary,
    );
    result.survived_rounds = total_survived;
    Ok((result, trace))
}
