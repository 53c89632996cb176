//! Built-in reference-point check.
//!
//! Operating point: two-level model with equal Rabi coupling and detuning
//! (reference units), tau = 1e-8, nu = pi - 1e-4, Q = 100 rounds,
//! N = ceil(1/|phi|) cycles per round. At this point the whole-campaign
//! survival is ~0.99 and the estimated coupling ratio is ~1. The command
//! computes the analytic forecasts (exact and second-order, against the
//! e^{-Q/SNR} asymptote), then samples a few thousand seeded campaigns and
//! checks the recovered coupling and the pooled campaign-survival fraction
//! against fixed acceptance windows. Same seed, same bytes.

use serde::{Deserialize, Serialize};

use zeno_core::estimator::{
    estimate_fixed_n, predicted_survival, predicted_survival_second_order, run_campaign_with_cycle,
};
use zeno_core::models::{build_shifted, ModelDescriptor, TwoLevelModel};
use zeno_core::protocol::{
    compute_cycle_amplitudes, second_order_phi, snr, validity_margin, ProtocolParams,
};

use crate::{classify_core, Failure};

const TAU: f64 = 1e-8;
const GAP: f64 = 1e-4; // pi - nu
const Q_ROUNDS: u64 = 100;
const CAMPAIGNS: u64 = 2000;

const ANALYTIC_WINDOW: (f64, f64) = (0.985, 0.995);
const ASYMPTOTE_TOL: f64 = 1e-3;
const RATIO_WINDOW: (f64, f64) = (0.95, 1.05);
const SURVIVAL_WINDOW: (f64, f64) = (0.975, 0.998);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub omega: f64,
    pub delta: f64,
    pub tau: f64,
    pub nu: f64,
    pub pi_minus_nu: f64,
    pub n_cycles: f64,
    pub q_rounds: u64,
    pub campaigns: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analytic {
    pub p_all_exact: f64,
    pub p_all_second_order: f64,
    pub asymptote: f64,
    pub exact_vs_asymptote: f64,
    pub second_order_vs_asymptote: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampled {
    pub mean_coupling_ratio: f64,
    pub pooled_campaign_survival: f64,
    pub survived_rounds: u64,
    pub total_rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub analytic_exact_in_window: bool,
    pub analytic_second_order_in_window: bool,
    pub asymptote_agreement: bool,
    pub mean_ratio_in_window: bool,
    pub survival_in_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperCheckReport {
    pub scenario: Scenario,
    pub margin: f64,
    pub snr: f64,
    pub analytic: Analytic,
    pub sampled: Sampled,
    pub checks: Checks,
    pub pass: bool,
}

pub fn run(seed: u64) -> Result<PaperCheckReport, Failure> {
    let nu = core::f64::consts::PI - GAP;
    let model = build_shifted(&ModelDescriptor::TwoLevel(TwoLevelModel {
        omega: 1.0,
        delta: 1.0,
    }))
    .map_err(classify_core)?;
    let delta_h = 1.0;
    let n_cycles = (1.0 / second_order_phi(TAU, nu, delta_h).abs()).ceil();
    let cycle = compute_cycle_amplitudes(&model, TAU, nu).map_err(classify_core)?;

    let probe = ProtocolParams::new(TAU, nu, n_cycles, Q_ROUNDS, seed).map_err(classify_core)?;
    let (p_exact, asymptote) = predicted_survival(&probe, &cycle);
    let (p_second, _) = predicted_survival_second_order(&probe, delta_h);

    let mut ratio_sum = 0.0;
    let mut fully_survived = 0u64;
    let mut survived_rounds = 0u64;
    for campaign in 0..CAMPAIGNS {
        let params = ProtocolParams::new(TAU, nu, n_cycles, Q_ROUNDS, seed.wrapping_add(campaign))
            .map_err(classify_core)?;
        let record = run_campaign_with_cycle(&cycle, &params).map_err(classify_core)?;
        let survived = record.survived_rounds();
        survived_rounds += survived;
        if survived == Q_ROUNDS {
            fully_survived += 1;
        }
        let est = estimate_fixed_n(&record).map_err(classify_core)?;
        ratio_sum += est.delta_h_hat / model_delta(); // omega_hat / delta
    }
    let mean_ratio = ratio_sum / CAMPAIGNS as f64;
    let survival_fraction = fully_survived as f64 / CAMPAIGNS as f64;

    let analytic = Analytic {
        p_all_exact: p_exact,
        p_all_second_order: p_second,
        asymptote,
        exact_vs_asymptote: (p_exact - asymptote).abs(),
        second_order_vs_asymptote: (p_second - asymptote).abs(),
    };
    let checks = Checks {
        analytic_exact_in_window: in_window(p_exact, ANALYTIC_WINDOW),
        analytic_second_order_in_window: in_window(p_second, ANALYTIC_WINDOW),
        asymptote_agreement: analytic.exact_vs_asymptote <= ASYMPTOTE_TOL
            && analytic.second_order_vs_asymptote <= ASYMPTOTE_TOL,
        mean_ratio_in_window: in_window(mean_ratio, RATIO_WINDOW),
        survival_in_window: in_window(survival_fraction, SURVIVAL_WINDOW),
    };
    let pass = checks.analytic_exact_in_window
        && checks.analytic_second_order_in_window
        && checks.asymptote_agreement
        && checks.mean_ratio_in_window
        && checks.survival_in_window;

    Ok(PaperCheckReport {
        scenario: Scenario {
            omega: 1.0,
            delta: model_delta(),
            tau: TAU,
            nu,
            pi_minus_nu: GAP,
            n_cycles,
            q_rounds: Q_ROUNDS,
            campaigns: CAMPAIGNS,
            seed,
        },
        margin: validity_margin(TAU, nu, 1.0).margin,
        snr: snr(nu),
        analytic,
        sampled: Sampled {
            mean_coupling_ratio: mean_ratio,
            pooled_campaign_survival: survival_fraction,
            survived_rounds,
            total_rounds: CAMPAIGNS * Q_ROUNDS,
        },
        checks,
        pass,
    })
}

fn model_delta() -> f64 {
    1.0
}

fn in_window(v: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&v)
}

pub fn render_text(r: &PaperCheckReport) -> String {
    let mark = |ok: bool| if ok { "ok " } else { "FAIL" };
    format!(
        "reference-point check (seed {seed})\n\
         operating point: tau = {tau:.1e}, pi - nu = {gap:.1e}, N = {n:.6e}, Q = {q}\n\
         margin |pi-nu|/sqrt(tau*coupling) = {margin:.6}, SNR = {snr:.4e}\n\
         analytic survival  exact        = {pe:.9}   [{w0}, {w1}]  {m1}\n\
         analytic survival  second-order = {ps:.9}   [{w0}, {w1}]  {m2}\n\
         asymptote e^-Q/SNR = {asym:.9}  (deviations {d1:.2e} / {d2:.2e} <= {tol:.0e})  {m3}\n\
         sampled ({c} campaigns): mean coupling ratio = {ratio:.4}   [{r0}, {r1}]  {m4}\n\
         sampled campaign-survival fraction = {surv:.4}   [{s0}, {s1}]  {m5}\n\
         overall: {overall}\n",
        seed = r.scenario.seed,
        tau = r.scenario.tau,
        gap = r.scenario.pi_minus_nu,
        n = r.scenario.n_cycles,
        q = r.scenario.q_rounds,
        margin = r.margin,
        snr = r.snr,
        pe = r.analytic.p_all_exact,
        ps = r.analytic.p_all_second_order,
        asym = r.analytic.asymptote,
        d1 = r.analytic.exact_vs_asymptote,
        d2 = r.analytic.second_order_vs_asymptote,
        tol = ASYMPTOTE_TOL,
        w0 = ANALYTIC_WINDOW.0,
        w1 = ANALYTIC_WINDOW.1,
        r0 = RATIO_WINDOW.0,
        r1 = RATIO_WINDOW.1,
        s0 = SURVIVAL_WINDOW.0,
        s1 = SURVIVAL_WINDOW.1,
        c = r.scenario.campaigns,
        ratio = r.sampled.mean_coupling_ratio,
        surv = r.sampled.pooled_campaign_survival,
        m1 = mark(r.checks.analytic_exact_in_window),
        m2 = mark(r.checks.analytic_second_order_in_window),
        m3 = mark(r.checks.asymptote_agreement),
        m4 = mark(r.checks.mean_ratio_in_window),
        m5 = mark(r.checks.survival_in_window),
        overall = if r.pass { "PASS" } else { "FAIL" },
    )
}
