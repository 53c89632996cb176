//! Survival scan over a (tau, pi - nu) grid.
//!
//! For every cell the cycle count comes from `choose_n` at the model's true
//! transition strength, and the campaign survival `p_all` is evaluated twice:
//! from the exact per-cycle amplitudes and from the second-order formula.
//! Cells are independent and evaluated on a worker pool; output is assembled
//! in grid order, so the CSV and SVG bytes do not depend on the parallelism
//! degree.
//!
//! CSV schema: `tau,nu,pi_minus_nu,margin,snr,n_used,p_all_exact,
//! p_all_second_order,abs_diff`, every number with 17 significant digits so
//! doubles round-trip losslessly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use zeno_core::estimator::{
    choose_n, predicted_survival, predicted_survival_second_order,
};
use zeno_core::models::{build_shifted, delta_h_ee, summarize};
use zeno_core::protocol::{compute_cycle_amplitudes, snr, validity_margin, ProtocolParams};

use crate::descriptor::ModelFile;
use crate::Failure;

/// Which survival heatmaps to emit (the CSV always carries both columns).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    Exact,
    SecondOrder,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    pub model: ModelFile,
    /// Inter-measurement periods (in units of the model's reference
    /// frequency). Log-spaced default when omitted.
    #[serde(default)]
    pub tau_grid: Option<Vec<f64>>,
    /// Grid in pi - nu. Log-spaced default when omitted.
    #[serde(default)]
    pub pi_minus_nu_grid: Option<Vec<f64>>,
    #[serde(default = "default_q")]
    pub q_rounds: u64,
    #[serde(default = "default_mode")]
    pub mode: ScanMode,
    /// Output paths; command-line flags take precedence.
    #[serde(default)]
    pub out_csv: Option<String>,
    #[serde(default)]
    pub out_svg_exact: Option<String>,
    #[serde(default)]
    pub out_svg_second_order: Option<String>,
}

fn default_q() -> u64 {
    100
}

fn default_mode() -> ScanMode {
    ScanMode::Both
}

pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..points)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
        .collect()
}

impl ScanConfig {
    /// The built-in grid: tau in [1e-9, 1e-1] and pi - nu in [1e-6, 1],
    /// 25 log steps each, straddling the margin = 1 boundary.
    pub fn default_for(model: ModelFile) -> Self {
        ScanConfig {
            model,
            tau_grid: None,
            pi_minus_nu_grid: None,
            q_rounds: 100,
            mode: ScanMode::Both,
            out_csv: None,
            out_svg_exact: None,
            out_svg_second_order: None,
        }
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).map_err(|e| anyhow::anyhow!("scan config: {e}"))
    }

    pub fn taus(&self) -> Vec<f64> {
        self.tau_grid
            .clone()
            .unwrap_or_else(|| log_spaced(1e-9, 1e-1, 25))
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.pi_minus_nu_grid
            .clone()
            .unwrap_or_else(|| log_spaced(1e-6, 1.0, 25))
    }

    fn validate(&self) -> anyhow::Result<()> {
        let taus = self.taus();
        let gaps = self.gaps();
        if taus.is_empty() || gaps.is_empty() {
            anyhow::bail!("invalid config: empty grid");
        }
        if let Some(bad) = taus.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            anyhow::bail!("invalid config: tau_grid entry {bad} must be positive");
        }
        if let Some(bad) = gaps
            .iter()
            .find(|g| !(g.is_finite() && **g > 0.0 && **g < core::f64::consts::PI))
        {
            anyhow::bail!(
                "invalid config: pi_minus_nu_grid entry {bad} must lie in (0, pi)"
            );
        }
        if self.q_rounds == 0 {
            anyhow::bail!("invalid config: q_rounds must be >= 1");
        }
        Ok(())
    }
}

/// One evaluated grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanCell {
    pub tau: f64,
    pub nu: f64,
    pub pi_minus_nu: f64,
    pub margin: f64,
    pub snr: f64,
    pub n_used: f64,
    pub p_all_exact: f64,
    pub p_all_second_order: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub taus: Vec<f64>,
    pub gaps: Vec<f64>,
    /// Row-major over (tau index, gap index).
    pub cells: Vec<ScanCell>,
}

/// Evaluates the whole grid; cells run on the rayon pool and are collected
/// in grid order.
pub fn run_scan(config: &ScanConfig) -> Result<ScanResult, Failure> {
    config.validate().map_err(Failure::Usage)?;
    let descriptor = config.model.to_descriptor().map_err(Failure::Usage)?;
    let model = build_shifted(&descriptor).map_err(crate::classify_core)?;
    let delta_h = delta_h_ee(&model).map_err(crate::classify_core)?;
    let omega_bar = summarize(&model).omega_bar;

    let taus = config.taus();
    let gaps = config.gaps();
    let points: Vec<(f64, f64)> = taus
        .iter()
        .flat_map(|&t| gaps.iter().map(move |&g| (t, g)))
        .collect();

    let cells: Result<Vec<ScanCell>, zeno_core::Error> = points
        .par_iter()
        .map(|&(tau, gap)| {
            let nu = core::f64::consts::PI - gap;
            let cycle = compute_cycle_amplitudes(&model, tau, nu)?;
            // A zero-strength model has no finite pi/4 target; any N gives
            // survival 1, so pin N = 1.
            let n = if delta_h == 0.0 {
                1.0
            } else {
                choose_n(tau, nu, delta_h)?
            };
            let params = ProtocolParams::new(tau, nu, n, config.q_rounds, 0)?;
            let (p_exact, _) = predicted_survival(&params, &cycle);
            let (p_second, _) = predicted_survival_second_order(&params, delta_h);
            let v = validity_margin(tau, nu, omega_bar);
            Ok(ScanCell {
                tau,
                nu,
                pi_minus_nu: gap,
                margin: v.margin,
                snr: snr(nu),
                n_used: n,
                p_all_exact: p_exact,
                p_all_second_order: p_second,
                abs_diff: (p_exact - p_second).abs(),
            })
        })
        .collect();
    let cells = cells.map_err(crate::classify_core)?;

    Ok(ScanResult { taus, gaps, cells })
}

impl ScanResult {
    /// CSV with 17-significant-digit numbers, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "tau,nu,pi_minus_nu,margin,snr,n_used,p_all_exact,p_all_second_order,abs_diff\n",
        );
        for c in &self.cells {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                c.tau,
                c.nu,
                c.pi_minus_nu,
                c.margin,
                c.snr,
                c.n_used,
                c.p_all_exact,
                c.p_all_second_order,
                c.abs_diff
            ));
        }
        out
    }

    fn cell(&self, i: usize, j: usize) -> &ScanCell {
        &self.cells[i * self.gaps.len() + j]
    }

    pub fn svg_exact(&self) -> String {
        crate::svg::heatmap(
            "Campaign survival, exact per-cycle amplitudes",
            "tau (reference units)",
            "pi - nu",
            &self.taus,
            &self.gaps,
            |i, j| self.cell(i, j).p_all_exact,
        )
    }

    pub fn svg_second_order(&self) -> String {
        crate::svg::heatmap(
            "Campaign survival, second-order formula",
            "tau (reference units)",
            "pi - nu",
            &self.taus,
            &self.gaps,
            |i, j| self.cell(i, j).p_all_second_order,
        )
    }
}
