//! The measurement-cycle engine.
//!
//! One cycle: the system, starting in `|e>`, evolves freely for `tau/2`, a
//! conditional gate applies `M` to the ancilla unless the system is in
//! `|e>`, the system evolves another `tau/2`, and a projective measurement
//! checks for `|e>`. Conditioned on success, the system is back in `|e>`
//! exactly and the ancilla has been acted on by `A = K_ee^2 I + DK_ee^2 M`,
//! where `K_ee = <e|K(tau/2)|e>` and `DK_ee^2 = sum_{i != e} K_ei K_ie`.
//! With `M = diag(e^{i nu}, e^{-i nu})` in the `|+->` basis, `A` is diagonal
//! with eigenvalues `lambda_pm = K_ee^2 + e^{+-i nu} DK_ee^2`, so N cycles
//! reduce to `lambda_pm^N` — evaluated in (log-modulus, phase) form, which
//! is what makes cycle counts of order 1e21 tractable and exact.
//!
//! Numerical ground rule: at the interesting operating points every quantity
//! sits within one ulp of 1.0, so nothing here ever forms `1 + eps`. The
//! per-cycle scalars are kept as increments (`u = K_ee - 1`,
//! `lambda - 1`, ...), deficits come out of `-2 Re z - |z|^2`, and
//! N-th powers live in log space. `DK_ee^2` is summed over explicit
//! intermediate states — each factor is O(tau) — never by subtracting
//! near-unit numbers.
//!
//! All operations are pure; every type is immutable and shareable across
//! threads. Independent parameter points may be evaluated concurrently.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimator::{MeasurementRecord, ReadoutOutcome, Round};
use crate::linalg::{
    abs_c, evolution_operator, phase_increment, spectral_decompose, ComplexMatrix, StateVector,
    C64,
};
use crate::models::GenericModel;
use crate::rng::round_rng;

/// Cycle-count ceiling for the explicit composite simulation.
pub const COMPOSITE_GUARD: f64 = 1e6;
/// Sub-unitarity slack on per-cycle amplitudes.
const UNITARITY_TOL: f64 = 1e-12;

/// Protocol parameters for a run of `n_cycles` cycles, repeated over
/// `q_rounds` independent rounds.
///
/// `n_cycles` is a real-valued whole number: the operating points of
/// interest need N ~ 1e21, beyond exact 64-bit integers. Above 2^53 every
/// representable double is a whole number, so no precision is lost.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    tau: f64,
    nu: f64,
    n_cycles: f64,
    q_rounds: u64,
    seed: u64,
    ancilla: StateVector,
}

impl ProtocolParams {
    /// Validates `tau > 0`, `0 < nu < pi`, whole `n_cycles >= 1`,
    /// `q_rounds >= 1`. The ancilla starts in the equal superposition
    /// `(|+> + |->)/sqrt(2)`.
    pub fn new(tau: f64, nu: f64, n_cycles: f64, q_rounds: u64, seed: u64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParams("tau must be positive and finite"));
        }
        if !(nu.is_finite() && nu > 0.0 && nu < core::f64::consts::PI) {
            return Err(Error::InvalidParams("nu must lie in (0, pi)"));
        }
        if !(n_cycles.is_finite() && n_cycles >= 1.0) {
            return Err(Error::InvalidParams("n_cycles must be >= 1"));
        }
        if n_cycles != libm::round(n_cycles) {
            return Err(Error::InvalidParams("n_cycles must be a whole number"));
        }
        if q_rounds == 0 {
            return Err(Error::InvalidParams("q_rounds must be >= 1"));
        }
        Ok(Self {
            tau,
            nu,
            n_cycles,
            q_rounds,
            seed,
            ancilla: equal_superposition(),
        })
    }

    /// Replaces the initial ancilla state (must be a normalized qubit).
    pub fn with_ancilla(mut self, ancilla: StateVector) -> Result<Self> {
        if ancilla.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: ancilla.dim(),
            });
        }
        if !ancilla.is_normalized() {
            return Err(Error::InvalidParams("ancilla must be normalized"));
        }
        self.ancilla = ancilla;
        Ok(self)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn n_cycles(&self) -> f64 {
        self.n_cycles
    }

    pub fn q_rounds(&self) -> u64 {
        self.q_rounds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ancilla(&self) -> &StateVector {
        &self.ancilla
    }
}

/// `(|+> + |->)/sqrt(2)` in the `|+->` basis.
pub fn equal_superposition() -> StateVector {
    let inv = core::f64::consts::FRAC_1_SQRT_2;
    StateVector::new(vec![C64::new(inv, 0.0), C64::new(inv, 0.0)]).expect("unit norm")
}

/// Per-cycle scalars, stored as increments from 1.
///
/// `lambda_pm - 1 = 2u + u^2 + e^{+-i nu} delta_k2` holds exactly by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleAmplitudes {
    /// `K_ee(tau/2) - 1`.
    pub u: C64,
    /// `DK_ee^2 = sum_{i != e} K_ei K_ie` over the half-period propagator.
    pub delta_k2: C64,
    /// `lambda_+ - 1`.
    pub lambda_plus_inc: C64,
    /// `lambda_- - 1`.
    pub lambda_minus_inc: C64,
}

impl CycleAmplitudes {
    /// Branch increments as a `[plus, minus]` pair.
    pub fn branch_incs(&self) -> [C64; 2] {
        [self.lambda_plus_inc, self.lambda_minus_inc]
    }

    /// `|lambda|^2 - 1 = 2 Re z + |z|^2` for a branch increment `z`.
    ///
    /// Clamped to non-positive: `|lambda| <= 1` physically, and a stray
    /// positive ulp would explode once raised to the N-th power.
    #[inline]
    pub fn modulus_sqr_inc(z: C64) -> f64 {
        let m = 2.0 * z.re + z.norm_sqr();
        m.min(0.0)
    }

    /// Per-branch survival deficit `1 - |lambda|^2`.
    #[inline]
    pub fn branch_deficit(z: C64) -> f64 {
        -Self::modulus_sqr_inc(z)
    }

    /// `arg lambda` for a branch increment `z`.
    #[inline]
    pub fn branch_arg(z: C64) -> f64 {
        libm::atan2(z.im, 1.0 + z.re)
    }
}

/// Exact per-cycle amplitudes of the shifted model at period `tau` and
/// conditional phase `nu`.
///
/// `u` is a weighted sum of [`phase_increment`] terms; `delta_k2` sums the
/// explicit products `K_ei K_ie`, where each factor is itself a pure
/// increment sum (the completeness part cancels exactly since `<g_i|e> = 0`).
pub fn compute_cycle_amplitudes(model: &GenericModel, tau: f64, nu: f64) -> Result<CycleAmplitudes> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParams("tau must be positive and finite"));
    }
    if !nu.is_finite() {
        return Err(Error::InvalidParams("nu must be finite"));
    }
    model.require_shifted()?;
    let decomp = spectral_decompose(model.hamiltonian())?;
    let e = model.initial_index();
    let d = model.dim();
    let half = 0.5 * tau;

    let incs: Vec<C64> = decomp
        .eigenvalues()
        .iter()
        .map(|&energy| phase_increment(-energy * half))
        .collect();

    let mut u = C64::new(0.0, 0.0);
    for k in 0..d {
        u += decomp.amplitude(e, k).norm_sqr() * incs[k];
    }

    let mut delta_k2 = C64::new(0.0, 0.0);
    for i in 0..d {
        if i == e {
            continue;
        }
        let mut k_ie = C64::new(0.0, 0.0);
        let mut k_ei = C64::new(0.0, 0.0);
        for k in 0..d {
            let cross = decomp.amplitude(i, k) * decomp.amplitude(e, k).conj();
            k_ie += cross * incs[k];
            k_ei += cross.conj() * incs[k];
        }
        delta_k2 += k_ei * k_ie;
    }

    let two_u = 2.0 * u + u * u; // K_ee^2 - 1
    let m_phase = C64::new(libm::cos(nu), libm::sin(nu));
    let lambda_plus_inc = two_u + m_phase * delta_k2;
    let lambda_minus_inc = two_u + m_phase.conj() * delta_k2;

    let cycle = CycleAmplitudes {
        u,
        delta_k2,
        lambda_plus_inc,
        lambda_minus_inc,
    };
    debug_assert!(abs_c(C64::new(1.0, 0.0) + cycle.u) <= 1.0 + UNITARITY_TOL);
    debug_assert!(
        abs_c(C64::new(1.0, 0.0) + cycle.lambda_plus_inc) <= 1.0 + UNITARITY_TOL
            && abs_c(C64::new(1.0, 0.0) + cycle.lambda_minus_inc) <= 1.0 + UNITARITY_TOL
    );
    Ok(cycle)
}

/// Residual of the completeness identity
/// `sum_{i != e} K_ei K_ie = <e|K(tau)|e> - K_ee^2`,
/// with the two sides computed by independent routes.
pub fn variance_identity_residual(model: &GenericModel, tau: f64) -> Result<f64> {
    let decomp = spectral_decompose(model.hamiltonian())?;
    let e = model.initial_index();
    let half_k = evolution_operator(&decomp, 0.5 * tau);
    let full_k = evolution_operator(&decomp, tau);
    let d = model.dim();

    let mut lhs = C64::new(0.0, 0.0);
    for i in 0..d {
        if i != e {
            lhs += half_k.get(e, i) * half_k.get(i, e);
        }
    }
    let k_ee = half_k.get(e, e);
    let rhs = full_k.get(e, e) - k_ee * k_ee;
    Ok(abs_c(lhs - rhs))
}

/// Survival probability of one cycle for a given ancilla state, as
/// `(log P_e, 1 - P_e)`; neither path ever materializes `1 - eps`.
///
/// `P_e = |a_+|^2 |lambda_+|^2 + |a_-|^2 |lambda_-|^2` (the conditional gate
/// is diagonal in the `|+->` basis). The ancilla must be a normalized qubit
/// expressed in that basis.
pub fn exact_survival_one_cycle(cycle: &CycleAmplitudes, ancilla: &StateVector) -> (f64, f64) {
    assert_eq!(ancilla.dim(), 2, "ancilla must be a qubit");
    assert!(ancilla.is_normalized(), "ancilla must be normalized");
    let w_plus = ancilla.amplitudes()[0].norm_sqr();
    let w_minus = ancilla.amplitudes()[1].norm_sqr();
    let deficit = w_plus * CycleAmplitudes::branch_deficit(cycle.lambda_plus_inc)
        + w_minus * CycleAmplitudes::branch_deficit(cycle.lambda_minus_inc);
    let log_p = if deficit >= 1.0 {
        f64::NEG_INFINITY
    } else {
        libm::log1p(-deficit)
    };
    (log_p, deficit)
}

/// Post-selected branch after N cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchReport {
    /// Final normalized ancilla state in the `|+->` basis.
    pub ancilla_state: StateVector,
    /// Relative phase per cycle, `(arg lambda_+ - arg lambda_-) / 2`.
    pub phi_exact_per_cycle: f64,
    /// Unobservable common phase per cycle, `(arg lambda_+ + arg lambda_-) / 2`.
    pub common_phase_per_cycle: f64,
    /// Natural log of the probability that all N projective measurements
    /// succeed.
    pub log_survival: f64,
    /// `1 - exp(log_survival)`, exact even when far below one ulp of 1.
    pub survival_deficit: f64,
}

/// Evolves the post-selected branch for `params.n_cycles` cycles in closed
/// form: amplitudes `a_pm lambda_pm^N`, with the N-th powers taken as
/// `N log lambda` in (log-modulus, phase) representation.
pub fn run_postselected(cycle: &CycleAmplitudes, params: &ProtocolParams) -> Result<BranchReport> {
    let n = params.n_cycles();
    let ancilla = params.ancilla();
    let amps = ancilla.amplitudes();
    let incs = cycle.branch_incs();

    let raw = [amps[0].norm_sqr(), amps[1].norm_sqr()];
    let total = raw[0] + raw[1];
    let weights = [raw[0] / total, raw[1] / total];
    let mod_incs = [
        CycleAmplitudes::modulus_sqr_inc(incs[0]),
        CycleAmplitudes::modulus_sqr_inc(incs[1]),
    ];

    // log |lambda_pm|^{2N}; a fully dark branch contributes -inf.
    let branch_logs = [
        n * log1p_or_neg_inf(mod_incs[0]),
        n * log1p_or_neg_inf(mod_incs[1]),
    ];
    let args = [
        CycleAmplitudes::branch_arg(incs[0]),
        CycleAmplitudes::branch_arg(incs[1]),
    ];

    // 1 - sum_i w_i |lambda_i|^{2N}, assembled from per-branch deficits so
    // no cancellation ever happens; exact down to ~1e-300 and saturating at
    // 1 for fully decayed branches.
    let survival_deficit = (weights[0] * -libm::expm1(branch_logs[0])
        + weights[1] * -libm::expm1(branch_logs[1]))
    .min(1.0);

    // log survival: the deficit route is exact while survival is of order
    // one; deep decay instead needs the log-sum-exp route, where the
    // O(1e-16) weight-log roundoff is negligible against |log|.
    let terms = [
        log_weighted(weights[0], branch_logs[0]),
        log_weighted(weights[1], branch_logs[1]),
    ];
    let log_survival = if survival_deficit < 0.5 {
        libm::log1p(-survival_deficit)
    } else {
        log_sum_exp(terms[0], terms[1]).min(0.0)
    };
    if log_survival == f64::NEG_INFINITY {
        return Err(Error::BranchAnnihilated);
    }

    // Normalized final amplitudes: |a_i| lambda_i^N / sqrt(survival).
    let mut final_amps = [C64::new(0.0, 0.0); 2];
    for i in 0..2 {
        if terms[i] == f64::NEG_INFINITY {
            continue;
        }
        let log_mod = 0.5 * (terms[i] - log_survival);
        let modulus = libm::exp(log_mod);
        let theta = libm::fmod(n * args[i], core::f64::consts::TAU) + amps[i].arg();
        final_amps[i] = C64::new(modulus * libm::cos(theta), modulus * libm::sin(theta));
    }
    let ancilla_state = StateVector::new(vec![final_amps[0], final_amps[1]])?;

    Ok(BranchReport {
        ancilla_state,
        phi_exact_per_cycle: 0.5 * (args[0] - args[1]),
        common_phase_per_cycle: 0.5 * (args[0] + args[1]),
        log_survival,
        survival_deficit,
    })
}

#[inline]
fn log1p_or_neg_inf(m: f64) -> f64 {
    if 1.0 + m <= 0.0 {
        f64::NEG_INFINITY
    } else {
        libm::log1p(m)
    }
}

#[inline]
fn log_weighted(w: f64, log_x: f64) -> f64 {
    if w == 0.0 {
        f64::NEG_INFINITY
    } else {
        libm::log(w) + log_x
    }
}

/// `log(e^a + e^b)` without overflow or needless cancellation.
#[inline]
fn log_sum_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + libm::log1p(libm::exp(lo - hi))
}

/// How the explicit composite simulation treats each projective measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositeMode {
    /// Keep the surviving branch and renormalize, accumulating its
    /// log-probability.
    Postselect,
    /// Draw a Bernoulli outcome per cycle and abort the round on failure.
    Sample,
}

/// Brute-force oracle: evolves the full `(dim x 2)`-dimensional composite
/// state cycle by cycle — `K(tau/2) (x) I`, conditional `M`, `K(tau/2) (x) I`,
/// projection onto `|e>` — with no closed-form shortcuts.
///
/// Guarded to `n_cycles <= 1e6`. The [`BranchReport`] always describes the
/// post-selected branch over the full N cycles; the returned record holds
/// one round whose outcome reflects `mode` (in `Sample` mode survival is
/// drawn per cycle, and a surviving round ends with a readout draw).
pub fn run_full_composite(
    model: &GenericModel,
    params: &ProtocolParams,
    mode: CompositeMode,
) -> Result<(BranchReport, MeasurementRecord)> {
    let n_real = params.n_cycles();
    if n_real > COMPOSITE_GUARD {
        return Err(Error::GuardExceeded {
            n_cycles: n_real,
            guard: COMPOSITE_GUARD,
        });
    }
    let n = n_real as usize;
    model.require_shifted()?;
    let decomp = spectral_decompose(model.hamiltonian())?;
    let half_k = evolution_operator(&decomp, 0.5 * params.tau());
    let d = model.dim();
    let e = model.initial_index();
    let m_phase = C64::new(libm::cos(params.nu()), libm::sin(params.nu()));
    let m_diag = [m_phase, m_phase.conj()];

    // State as d rows (system) of ancilla pairs.
    let mut psi: Vec<[C64; 2]> = vec![[C64::new(0.0, 0.0); 2]; d];
    psi[e] = [params.ancilla().amplitudes()[0], params.ancilla().amplitudes()[1]];

    let mut rng = round_rng(params.seed(), 0);
    let mut log_survival = 0.0f64;
    let mut survived = true;

    let mut scratch: Vec<[C64; 2]> = vec![[C64::new(0.0, 0.0); 2]; d];
    for _cycle in 0..n {
        // K(tau/2) (x) I
        apply_system(&half_k, &psi, &mut scratch);
        // conditional M on every system row except |e>
        for (i, row) in scratch.iter_mut().enumerate() {
            if i != e {
                row[0] *= m_diag[0];
                row[1] *= m_diag[1];
            }
        }
        // K(tau/2) (x) I
        apply_system(&half_k, &scratch, &mut psi);

        // Projective measurement onto |e>.
        let p = psi[e][0].norm_sqr() + psi[e][1].norm_sqr();
        if p <= 0.0 {
            return Err(Error::BranchAnnihilated);
        }
        if mode == CompositeMode::Sample && survived {
            let draw: f64 = rng.gen();
            if draw >= p {
                survived = false;
            }
        }
        log_survival += libm::log(p);
        let inv = 1.0 / libm::sqrt(p);
        let kept = [psi[e][0] * inv, psi[e][1] * inv];
        for row in psi.iter_mut() {
            *row = [C64::new(0.0, 0.0); 2];
        }
        psi[e] = kept;
    }

    let final_ancilla = StateVector::new(vec![psi[e][0], psi[e][1]])?;
    let p_plus_cycle = {
        // Per-cycle branch phases from the closed-form amplitudes; the
        // composite state itself carries them implicitly.
        let cycle = compute_cycle_amplitudes(model, params.tau(), params.nu())?;
        let args = [
            CycleAmplitudes::branch_arg(cycle.lambda_plus_inc),
            CycleAmplitudes::branch_arg(cycle.lambda_minus_inc),
        ];
        (args[0], args[1])
    };

    let outcome = if survived {
        let (p_plus, _p_minus) = readout_probabilities(&final_ancilla);
        let draw: f64 = rng.gen();
        Some(if draw < p_plus {
            ReadoutOutcome::Plus
        } else {
            ReadoutOutcome::Minus
        })
    } else {
        None
    };
    let record = MeasurementRecord {
        rounds: vec![Round { survived, outcome }],
        seed: params.seed(),
        params: params.clone(),
    };

    let report = BranchReport {
        ancilla_state: final_ancilla,
        phi_exact_per_cycle: 0.5 * (p_plus_cycle.0 - p_plus_cycle.1),
        common_phase_per_cycle: 0.5 * (p_plus_cycle.0 + p_plus_cycle.1),
        log_survival,
        survival_deficit: -libm::expm1(log_survival),
    };
    Ok((report, record))
}

fn apply_system(k: &ComplexMatrix, input: &[[C64; 2]], out: &mut [[C64; 2]]) {
    let d = input.len();
    for i in 0..d {
        let mut acc = [C64::new(0.0, 0.0); 2];
        for j in 0..d {
            let kij = k.get(i, j);
            acc[0] += kij * input[j][0];
            acc[1] += kij * input[j][1];
        }
        out[i] = acc;
    }
}

/// Second-order per-cycle phase, `-tau^2 DH_ee^2 sin(nu) / 4`.
pub fn second_order_phi(tau: f64, nu: f64, delta_h_ee: f64) -> f64 {
    -0.25 * tau * tau * delta_h_ee * delta_h_ee * libm::sin(nu)
}

/// Second-order per-cycle survival deficit,
/// `tau^2 DH_ee^2 (1 + cos nu) / 2`.
///
/// `1 + cos nu` is evaluated as `2 sin^2((pi - nu)/2)`, exact arbitrarily
/// close to `nu = pi`.
pub fn second_order_pe(tau: f64, nu: f64, delta_h_ee: f64) -> f64 {
    let s = libm::sin(0.5 * (core::f64::consts::PI - nu));
    tau * tau * delta_h_ee * delta_h_ee * s * s
}

/// Signal-to-noise ratio `sin(nu) / (2 (1 + cos nu))`, computed as
/// `tan(nu/2) / 2` for stability near `nu = pi`.
pub fn snr(nu: f64) -> f64 {
    0.5 * libm::tan(0.5 * nu)
}

/// Quality margin of the second-order regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityMargin {
    /// `|pi - nu| / sqrt(tau * omega_bar)`; the protocol is in its sweet
    /// spot when this is large.
    pub margin: f64,
    /// Dimensionless `tau * omega_bar`.
    pub tau_omega_bar: f64,
}

/// Computes the validity margin for the given operating point.
pub fn validity_margin(tau: f64, nu: f64, omega_bar: f64) -> ValidityMargin {
    let tau_omega_bar = tau * omega_bar;
    ValidityMargin {
        margin: libm::fabs(core::f64::consts::PI - nu) / libm::sqrt(tau_omega_bar),
        tau_omega_bar,
    }
}

/// Readout probabilities in the conjugate basis `(|+> +- |->)/sqrt(2)`:
/// `(p_plus, p_minus) = (|a_+ + a_-|^2 / 2, |a_+ - a_-|^2 / 2)`.
///
/// For the ideal N-cycle state these are `cos^2(N phi)` and `sin^2(N phi)`.
pub fn readout_probabilities(ancilla: &StateVector) -> (f64, f64) {
    assert_eq!(ancilla.dim(), 2, "ancilla must be a qubit");
    assert!(ancilla.is_normalized(), "ancilla must be normalized");
    let a = ancilla.amplitudes();
    let p_plus = 0.5 * (a[0] + a[1]).norm_sqr();
    let p_minus = 0.5 * (a[0] - a[1]).norm_sqr();
    (p_plus, p_minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        build_generic, build_shifted, ContinuumModel, ModelDescriptor, TwoLevelModel,
    };
    
    const PI: f64 = core::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_level(omega: f64, delta: f64) -> GenericModel {
        build_shifted(&ModelDescriptor::TwoLevel(TwoLevelModel { omega, delta })).unwrap()
    }

    fn rel_err(got: f64, want: f64) -> f64 {
        ((got - want) / want).abs()
    }

    #[test]
    fn frozen_model_has_no_dynamics() {
        let model = two_level(0.0, 2.0);
        let cycle = compute_cycle_amplitudes(&model, 0.37, PI / 3.0).unwrap();
        assert_eq!(cycle.u, c(0.0, 0.0));
        assert_eq!(cycle.delta_k2, c(0.0, 0.0));
        assert_eq!(cycle.lambda_plus_inc, c(0.0, 0.0));
    }

    #[test]
    fn reference_point_amplitudes_to_leading_order() {
        // Omega = delta = 1, tau = 1e-8: Re u = -tau^2/8 <e|H^2|e>,
        // delta_k2 = -tau^2/4 <e|H^2|e>, both with <e|H^2|e> = 1.
        let model = two_level(1.0, 1.0);
        let tau = 1e-8;
        let cycle = compute_cycle_amplitudes(&model, tau, PI - 1e-4).unwrap();
        assert!(rel_err(cycle.u.re, -tau * tau / 8.0) <= 1e-10, "{:e}", cycle.u.re);
        assert!(
            rel_err(cycle.delta_k2.re, -tau * tau / 4.0) <= 1e-10,
            "{:e}",
            cycle.delta_k2.re
        );
        // Im u = tau^3 <e|H^3|e> / 48 with <e|H^3|e> = 1; summation noise
        // allows only a loose check of the scale here.
        assert!(cycle.u.im.abs() < 1e-24);
    }

    #[test]
    fn rabi_half_turn_amplitudes() {
        // Omega = 1, delta = 0, tau = pi: K(pi/2) = -iX, so K_ee = 0,
        // u = -1, delta_k2 = <e|K(pi)|e> = cos(pi) = -1.
        let model = two_level(1.0, 0.0);
        let cycle = compute_cycle_amplitudes(&model, PI, PI / 2.0).unwrap();
        assert!((cycle.u.re + 1.0).abs() <= 1e-14);
        assert!(cycle.u.im.abs() <= 1e-14);
        assert!((cycle.delta_k2.re + 1.0).abs() <= 1e-13);
        assert!(cycle.delta_k2.im.abs() <= 1e-13);
    }

    #[test]
    fn lambda_construction_identity_is_exact() {
        let model = two_level(1.3, 0.4);
        let nu = 2.0;
        let cycle = compute_cycle_amplitudes(&model, 0.21, nu).unwrap();
        let two_u = 2.0 * cycle.u + cycle.u * cycle.u;
        let m = c(libm::cos(nu), libm::sin(nu));
        assert_eq!(cycle.lambda_plus_inc, two_u + m * cycle.delta_k2);
        assert_eq!(cycle.lambda_minus_inc, two_u + m.conj() * cycle.delta_k2);
    }

    #[test]
    fn lambdas_are_eigenvalues_of_the_branch_map() {
        // (K_ee^2 I + DK^2 M) |pm> = lambda_pm |pm>, checked against the
        // explicit 2x2 matrix action at moderate tau.
        let model = two_level(0.8, 0.5);
        let nu = 1.1;
        let cycle = compute_cycle_amplitudes(&model, 0.3, nu).unwrap();
        let k2 = c(1.0, 0.0) + 2.0 * cycle.u + cycle.u * cycle.u;
        let m = [c(libm::cos(nu), libm::sin(nu)), c(libm::cos(nu), -libm::sin(nu))];
        for (idx, &inc) in cycle.branch_incs().iter().enumerate() {
            let action = k2 + cycle.delta_k2 * m[idx]; // A e_idx = (K^2 + DK^2 m) e_idx
            let lambda = c(1.0, 0.0) + inc;
            assert!(abs_c(action - lambda) <= 1e-14);
        }
    }

    #[test]
    fn variance_identity_examples() {
        // Diagonal Hamiltonian: both sides vanish identically.
        let diag = build_shifted(&ModelDescriptor::TwoLevel(TwoLevelModel {
            omega: 0.0,
            delta: 2.0,
        }))
        .unwrap();
        assert_eq!(variance_identity_residual(&diag, 0.9).unwrap(), 0.0);

        // Closed-form Rabi check at tau = pi/2: both sides equal -1/2.
        let model = two_level(1.0, 0.0);
        let tau = PI / 2.0;
        let decomp = spectral_decompose(model.hamiltonian()).unwrap();
        let half_k = evolution_operator(&decomp, 0.5 * tau);
        let lhs = half_k.get(0, 1) * half_k.get(1, 0);
        assert!(abs_c(lhs - c(-0.5, 0.0)) <= 1e-14);
        assert!(variance_identity_residual(&model, tau).unwrap() <= 1e-13);
    }

    #[test]
    fn survival_one_cycle_examples() {
        let frozen = CycleAmplitudes {
            u: c(0.0, 0.0),
            delta_k2: c(0.0, 0.0),
            lambda_plus_inc: c(0.0, 0.0),
            lambda_minus_inc: c(0.0, 0.0),
        };
        let (log_p, deficit) = exact_survival_one_cycle(&frozen, &equal_superposition());
        assert_eq!(log_p, 0.0);
        assert_eq!(deficit, 0.0);

        // Reference operating point: deficit matches the second-order formula to ~1e-9.
        let model = two_level(1.0, 1.0);
        let tau = 1e-8;
        let nu = PI - 1e-4;
        let cycle = compute_cycle_amplitudes(&model, tau, nu).unwrap();
        let (_, deficit) = exact_survival_one_cycle(&cycle, &equal_superposition());
        let second = second_order_pe(tau, nu, 1.0);
        assert!(rel_err(deficit, second) <= 1e-6, "{deficit:e} vs {second:e}");
        assert!(rel_err(deficit, 2.5e-25) <= 1e-4);

        // nu = 0: deficit ~ tau^2 DH^2, twice the (1 + cos nu)/2 = 1/2 scale.
        let cycle0 = compute_cycle_amplitudes(&model, tau, 0.0).unwrap();
        let (_, deficit0) = exact_survival_one_cycle(&cycle0, &equal_superposition());
        assert!(rel_err(deficit0, tau * tau) <= 1e-6);
    }

    #[test]
    fn postselected_single_cycle_state_structure() {
        let model = two_level(1.0, 1.0);
        let tau = 1e-8;
        let nu = PI - 1e-4;
        let cycle = compute_cycle_amplitudes(&model, tau, nu).unwrap();
        let params = ProtocolParams::new(tau, nu, 1.0, 1, 0).unwrap();
        let report = run_postselected(&cycle, &params).unwrap();

        let amps = report.ancilla_state.amplitudes();
        let inv = core::f64::consts::FRAC_1_SQRT_2;
        assert!((amps[0].norm() - inv).abs() <= 1e-12);
        assert!((amps[1].norm() - inv).abs() <= 1e-12);
        // Relative phase between the branches is 2 phi.
        let rel = (amps[0] * amps[1].conj()).arg();
        assert!(
            (rel - 2.0 * report.phi_exact_per_cycle).abs() <= 1e-15,
            "{rel:e}"
        );
        let second = second_order_phi(tau, nu, 1.0);
        assert!(rel_err(report.phi_exact_per_cycle, second) <= 1e-6);
    }

    #[test]
    fn postselected_identity_branch() {
        let frozen = CycleAmplitudes {
            u: c(0.0, 0.0),
            delta_k2: c(0.0, 0.0),
            lambda_plus_inc: c(0.0, 0.0),
            lambda_minus_inc: c(0.0, 0.0),
        };
        let params = ProtocolParams::new(1.0, 1.0, 1e15, 3, 9).unwrap();
        let report = run_postselected(&frozen, &params).unwrap();
        assert_eq!(report.log_survival, 0.0);
        assert_eq!(report.survival_deficit, 0.0);
        assert_eq!(report.phi_exact_per_cycle, 0.0);
        let amps = report.ancilla_state.amplitudes();
        assert!(abs_c(amps[0] - amps[1]) <= 1e-15);
        assert!((report.ancilla_state.norm_sqr() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn postselected_at_extreme_cycle_count() {
        // N = ceil(1/|phi|) ~ 4e20: relative phase N phi ~ 1 rad and
        // log survival ~ -1e-4. Explicit looping is impossible here; the
        // closed form is exact.
        let model = two_level(1.0, 1.0);
        let tau = 1e-8;
        let nu = PI - 1e-4;
        let cycle = compute_cycle_amplitudes(&model, tau, nu).unwrap();
        let phi = second_order_phi(tau, nu, 1.0);
        let n = libm::ceil(1.0 / phi.abs());
        let params = ProtocolParams::new(tau, nu, n, 1, 0).unwrap();
        let report = run_postselected(&cycle, &params).unwrap();

        assert!(rel_err(n * report.phi_exact_per_cycle, -1.0) <= 1e-6);
        assert!(rel_err(report.log_survival, -1.0000000033e-4) <= 1e-4);
        assert!(rel_err(report.survival_deficit, 9.99950002e-5) <= 1e-4);
        let (p_plus, p_minus) = readout_probabilities(&report.ancilla_state);
        assert!(rel_err(p_minus, libm::sin(1.0) * libm::sin(1.0)) <= 1e-6);
        assert!((p_plus + p_minus - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn branch_annihilated_when_both_branches_dark() {
        // d = 3 model with eigenvalues {-1, 0, 1} all at weight 1/3 seen
        // from |e>: K_ee(tau/2) = (1 + 2 cos(s tau/2))/3 vanishes at
        // s tau/2 = 2pi/3 together with K_ee(tau), so K_ee^2 = DK^2 = 0.
        let f = 1.0 / libm::sqrt(3.0);
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let mut v = ComplexMatrix::zeros(3, 3);
        for row in 0..3 {
            for col in 0..3 {
                let ph = w.powu((row * col) as u32);
                v.set(row, col, f * ph);
            }
        }
        // H = V diag(-1, 0, 1) V^dag
        let mut h = ComplexMatrix::zeros(3, 3);
        let energies = [-1.0, 0.0, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = c(0.0, 0.0);
                for k in 0..3 {
                    acc += energies[k] * v.get(i, k) * v.get(j, k).conj();
                }
                h.set(i, j, acc);
            }
        }
        let model = GenericModel::new(h, 0).unwrap();
        let (model, _) = crate::models::shift_energy_zero(&model);
        let tau = 4.0 * PI / 3.0;
        let cycle = compute_cycle_amplitudes(&model, tau, 1.0).unwrap();
        assert!(abs_c(c(1.0, 0.0) + cycle.u) <= 1e-13, "K_ee != 0");
        assert!(abs_c(cycle.delta_k2) <= 1e-13, "DK^2 != 0");
        // Force the exact dark point so the error path is deterministic.
        let dark = CycleAmplitudes {
            u: c(-1.0, 0.0),
            delta_k2: c(0.0, 0.0),
            lambda_plus_inc: c(-1.0, 0.0),
            lambda_minus_inc: c(-1.0, 0.0),
        };
        let params = ProtocolParams::new(tau, 1.0, 10.0, 1, 0).unwrap();
        assert_eq!(
            run_postselected(&dark, &params).unwrap_err(),
            Error::BranchAnnihilated
        );
    }

    #[test]
    fn composite_matches_closed_form_on_a_moderate_point() {
        let model = two_level(1.0, 1.0);
        let tau = 1e-2;
        let nu = PI / 2.0;
        let params = ProtocolParams::new(tau, nu, 100.0, 1, 5).unwrap();
        let cycle = compute_cycle_amplitudes(&model, tau, nu).unwrap();
        let fast = run_postselected(&cycle, &params).unwrap();
        let (slow, _) = run_full_composite(&model, &params, CompositeMode::Postselect).unwrap();

        let fa = fast.ancilla_state.amplitudes();
        let sa = slow.ancilla_state.amplitudes();
        assert!(abs_c(fa[0] - sa[0]) <= 1e-10, "{fa:?} vs {sa:?}");
        assert!(abs_c(fa[1] - sa[1]) <= 1e-10);
        assert!((fast.log_survival - slow.log_survival).abs() <= 1e-10);

        // Internal consistency of the report: the two survival encodings
        // describe the same number.
        assert!(fast.survival_deficit > 1e-8);
        let recon = libm::exp(fast.log_survival) + fast.survival_deficit;
        assert!(((recon - 1.0) / 1.0).abs() <= 1e-10);
    }

    #[test]
    fn composite_frozen_model_survives_everything() {
        let model = two_level(0.0, 1.0);
        let params = ProtocolParams::new(0.3, 1.2, 50.0, 1, 3).unwrap();
        let (report, record) = run_full_composite(&model, &params, CompositeMode::Sample).unwrap();
        // Brute-force route: zero only up to eigensolver roundoff.
        assert!(report.log_survival.abs() <= 1e-12);
        assert!(record.rounds[0].survived);
        let amps = report.ancilla_state.amplitudes();
        assert!(abs_c(amps[0] - amps[1]) <= 1e-12);
    }

    #[test]
    fn composite_sampling_is_deterministic() {
        let model = two_level(1.0, 0.3);
        let params = ProtocolParams::new(0.4, 2.0, 200.0, 1, 11).unwrap();
        let (_, r1) = run_full_composite(&model, &params, CompositeMode::Sample).unwrap();
        let (_, r2) = run_full_composite(&model, &params, CompositeMode::Sample).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn composite_guard() {
        let model = two_level(1.0, 1.0);
        let params = ProtocolParams::new(1e-8, 1.0, 1e7, 1, 0).unwrap();
        assert!(matches!(
            run_full_composite(&model, &params, CompositeMode::Postselect),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn nu_at_pi_is_allowed_at_the_amplitude_layer() {
        // The quality condition degrades towards nu = pi but the branch map
        // stays well defined: lambda_pm = K_ee^2 - DK_ee^2 for both signs.
        let model = two_level(1.0, 0.0);
        let cycle = compute_cycle_amplitudes(&model, PI, PI).unwrap();
        // K_ee = 0, DK^2 = -1: lambda_pm = +1, survival stays 1.
        assert!(abs_c(cycle.lambda_plus_inc) <= 1e-13);
        assert!(abs_c(cycle.lambda_minus_inc) <= 1e-13);
        let (_, deficit) = exact_survival_one_cycle(&cycle, &equal_superposition());
        assert!(deficit <= 1e-13);
        // The round-parameter type keeps its stated domain.
        assert!(ProtocolParams::new(PI, PI, 1.0, 1, 0).is_err());
    }

    #[test]
    fn second_order_formula_values() {
        assert!(rel_err(second_order_phi(1e-8, PI - 1e-4, 1.0), -2.4999999958e-21) <= 1e-9);
        assert_eq!(second_order_phi(0.1, 0.0, 1.0), -0.0);
        assert!(rel_err(second_order_phi(1e-2, PI / 2.0, 1.0), -2.5e-5) <= 1e-12);

        assert!(second_order_pe(1e-3, PI, 1.0).abs() <= 1e-40);
        assert!(rel_err(second_order_pe(1e-8, PI - 1e-4, 1.0), 2.5e-25) <= 1e-8);
        assert!(rel_err(second_order_pe(1e-2, 0.0, 1.0), 1e-4) <= 1e-12);
    }

    #[test]
    fn snr_values() {
        assert!((snr(PI / 2.0) - 0.5).abs() <= 1e-15);
        assert!(snr(1e-9) <= 1e-9);
        let near_pi = snr(PI - 1e-4);
        assert!(rel_err(near_pi, 1.0 / (2.0 * libm::tan(5e-5))) <= 1e-10);
        assert!(rel_err(near_pi, 1e4) <= 1e-8);
    }

    #[test]
    fn validity_margin_values() {
        let m = validity_margin(1e-8, PI - 1e-4, 1.0);
        assert!(rel_err(m.margin, 1.0) <= 1e-10);
        assert_eq!(validity_margin(0.3, PI, 2.0).margin, 0.0);
        assert!(rel_err(validity_margin(1e-12, PI - 1e-3, 1.0).margin, 1e3) <= 1e-10);
    }

    #[test]
    fn readout_probability_examples() {
        let (p, m) = readout_probabilities(&equal_superposition());
        assert!((p - 1.0).abs() <= 1e-15);
        assert!(m.abs() <= 1e-15);

        let phase = |t: f64| {
            StateVector::new(vec![
                C64::from_polar(core::f64::consts::FRAC_1_SQRT_2, t),
                C64::from_polar(core::f64::consts::FRAC_1_SQRT_2, -t),
            ])
            .unwrap()
        };
        let (p, m) = readout_probabilities(&phase(PI / 4.0));
        assert!((p - 0.5).abs() <= 1e-15);
        assert!((m - 0.5).abs() <= 1e-15);

        let (p, m) = readout_probabilities(&phase(1.0));
        assert!(rel_err(p, libm::cos(1.0) * libm::cos(1.0)) <= 1e-12);
        assert!(rel_err(m, libm::sin(1.0) * libm::sin(1.0)) <= 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(ProtocolParams::new(0.0, 1.0, 1.0, 1, 0).is_err());
        assert!(ProtocolParams::new(1.0, PI, 1.0, 1, 0).is_err());
        assert!(ProtocolParams::new(1.0, 1.0, 1.5, 1, 0).is_err());
        assert!(ProtocolParams::new(1.0, 1.0, 0.0, 1, 0).is_err());
        assert!(ProtocolParams::new(1.0, 1.0, 1.0, 0, 0).is_err());
        assert!(ProtocolParams::new(1.0, 1.0, 4e20, 100, 0).is_ok());
    }

    #[test]
    fn continuum_with_mode_mode_couplings_keeps_exact_engine() {
        // g-g couplings are allowed in GenericModel; the engine handles them
        // exactly and delta_h_ee still only sees the |e> row.
        let mut h = build_generic(&ModelDescriptor::Continuum(ContinuumModel {
            omegas: vec![1.0, 2.0],
            couplings: vec![c(0.6, 0.0), c(0.8, 0.0)],
        }))
        .unwrap()
        .hamiltonian()
        .clone();
        h.set(1, 2, c(0.5, 0.2));
        h.set(2, 1, c(0.5, -0.2));
        let model = GenericModel::new(h, 0).unwrap();
        let (model, _) = crate::models::shift_energy_zero(&model);
        assert_eq!(crate::models::delta_h_ee(&model).unwrap(), 1.0);
        assert!(variance_identity_residual(&model, 0.7).unwrap() <= 1e-12);
    }
}
