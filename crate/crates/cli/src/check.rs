//! Reference constants recomputed from the library.

use fading_core::blockfade::delayed_quantized_boundary;
use fading_core::channel::{CsiSpec, Csir, Csit, FadingLaw};
use fading_core::gmi::gmi_adaptive_csir;
use fading_core::numerics::{bisect_root, db, golden_max, wideband_metrics};
use fading_core::power::{
    estimate_law, heuristic_policy, oof_partial_csit_powers, quad_waterfill, quantized_csit_capacity, quantized_csit_powers, waterfill, OofMode, PowerPolicy,
};
use fading_core::specfun::exp_integral_e1;
use fading_core::Quadrature;

const LN2: f64 = std::f64::consts::LN_2;
const H: f64 = 1e-3;

pub struct ConstCheck {
    pub name: &'static str,
    /// Scenario whose summary shows this check.
    pub scenario: &'static str,
    pub unit: &'static str,
    pub target: f64,
    pub tol: f64,
    compute: fn(&Quadrature) -> f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub unit: &'static str,
    pub value: f64,
    pub target: f64,
    pub tol: f64,
}

impl CheckResult {
    pub fn pass(&self) -> bool {
        (self.value - self.target).abs() <= self.tol
    }

    pub fn line(&self) -> String {
        format!(
            "{:<44} {:>10.4} {:<4} target {:>8} ± {:<6} {}",
            self.name,
            self.value,
            self.unit,
            self.target,
            self.tol,
            if self.pass() { "PASS" } else { "FAIL" }
        )
    }
}

impl ConstCheck {
    pub fn run(&self, q: &Quadrature) -> CheckResult {
        CheckResult { name: self.name, unit: self.unit, value: (self.compute)(q), target: self.target, tol: self.tol }
    }
}

fn wb<F: Fn(f64) -> f64>(f: F) -> fading_core::WidebandMetrics {
    wideband_metrics(|p: f64| if p == 0.0 { 0.0 } else { f(p) }, H)
}

fn onoff_k1(q: &Quadrature) -> f64 {
    wb(|p| gmi_adaptive_csir(&FadingLaw::OnOff, &CsiSpec::none(), &PowerPolicy::constant(p), q).map(|r| r.nats).unwrap_or(f64::NAN)).ebn0_min_db
}

fn onoff_full_csit(q: &Quadrature) -> f64 {
    wb(|p| waterfill(&FadingLaw::OnOff, p, q).map(|r| r.2.nats).unwrap_or(f64::NAN)).ebn0_min_db
}

fn oof(mode: OofMode) -> f64 {
    wb(|p| oof_partial_csit_powers(0.1, p, mode).map(|r| r.2).unwrap_or(f64::NAN)).ebn0_min_db
}

fn delta_c_bits(_: &Quadrature) -> f64 {
    let p = 1e4;
    let r = oof_partial_csit_powers(0.1, p, OofMode::BestCsir).map(|r| r.2).unwrap_or(f64::NAN);
    (r - 0.5 * (2.0 * p).ln_1p()) / LN2
}

fn csitatr(q: &Quadrature, p: f64) -> f64 {
    let Ok(est) = estimate_law(&FadingLaw::OnOff, &CsiSpec { csir: Csir::NoisyFlip(0.1), csit: Csit::EqualsSr }) else {
        return f64::NAN;
    };
    quad_waterfill(&est, p, q).map(|r| r.2.nats).unwrap_or(f64::NAN)
}

fn heur(q: &Quadrature, csir: Csir, a: f64, t: f64, p: f64) -> f64 {
    heuristic_policy(&FadingLaw::Rayleigh, csir, a, t, p, q).map(|r| r.1.nats).unwrap_or(f64::NAN)
}

fn tcp_opt(q: &Quadrature) -> (f64, f64) {
    let (t, neg) = golden_max(|t: f64| -wb(|p| heur(q, Csir::None, 0.0, t, p)).ebn0_min_db, 0.05, 1.0, 1e-5);
    (t, -neg)
}

fn tci_t() -> f64 {
    bisect_root(|t: f64| 2.0 * t * t.exp() * exp_integral_e1(t).unwrap_or(f64::NAN) - 1.0, (0.1, 2.0), 1e-12).unwrap_or(f64::NAN)
}

fn tcp_indicator(q: &Quadrature) -> (f64, f64) {
    golden_max(|t: f64| heur(q, Csir::IndicatorGain(t), 0.0, t, 1e9) / LN2, 0.01, 1.0, 1e-6)
}

fn quant_gain(q: &Quadrature, delta: f64) -> f64 {
    let law = FadingLaw::Rayleigh;
    let w = wb(|p| {
        quantized_csit_powers(&law, delta, p, 0.0, q)
            .and_then(|(_, pol)| quantized_csit_capacity(&law, delta, 0.0, &pol, q))
            .map(|r| r.nats)
            .unwrap_or(f64::NAN)
    });
    db(LN2) - w.ebn0_min_db
}

fn quant_noisy(q: &Quadrature) -> f64 {
    let law = FadingLaw::Rayleigh;
    wb(|p| {
        quantized_csit_powers(&law, 1.0, p, 0.1, q)
            .and_then(|(_, pol)| quantized_csit_capacity(&law, 1.0, 0.1, &pol, q))
            .map(|r| r.nats)
            .unwrap_or(f64::NAN)
    })
    .ebn0_min_db
}

pub fn constants() -> Vec<ConstCheck> {
    vec![
        ConstCheck { name: "min Eb/N0 of log(1+P)", scenario: "fig1-onoff-nocsir", unit: "dB", target: -1.59, tol: 0.02, compute: |_| wb(|p| p.ln_1p()).ebn0_min_db },
        ConstCheck { name: "on-off K=1 GMI min Eb/N0", scenario: "fig1-onoff-nocsir", unit: "dB", target: 1.42, tol: 0.02, compute: onoff_k1 },
        ConstCheck { name: "on-off full CSIT min Eb/N0", scenario: "fig3-onoff-fullcsit-nocsir", unit: "dB", target: -4.60, tol: 0.02, compute: onoff_full_csit },
        ConstCheck { name: "on-off partial CSIT high-SNR gain", scenario: "fig2-onoff-fullcsir-partialcsit", unit: "bits", target: 0.27, tol: 0.01, compute: delta_c_bits },
        ConstCheck { name: "on-off best CSIR min Eb/N0 (eps=0.1)", scenario: "fig2-onoff-fullcsir-partialcsit", unit: "dB", target: -4.14, tol: 0.03, compute: |_| oof(OofMode::BestCsir) },
        ConstCheck { name: "on-off forward GMI min Eb/N0 (eps=0.1)", scenario: "fig2-onoff-fullcsir-partialcsit", unit: "dB", target: -3.74, tol: 0.03, compute: |_| oof(OofMode::ForwardGmi) },
        ConstCheck { name: "on-off CSIT@R min Eb/N0", scenario: "fig4-onoff-csitatr", unit: "dB", target: -3.69, tol: 0.03, compute: |q| wb(|p| csitatr(q, p)).ebn0_min_db },
        ConstCheck { name: "on-off CSIT@R K=1 saturation", scenario: "fig4-onoff-csitatr", unit: "bits", target: 1.74, tol: 0.01, compute: |q| csitatr(q, 1e8) / LN2 },
        ConstCheck { name: "quantized CSIT gain, threshold 1", scenario: "fig1-rayleigh-quantized-csit", unit: "dB", target: 3.0, tol: 0.05, compute: |q| quant_gain(q, 1.0) },
        ConstCheck { name: "quantized CSIT gain, threshold 2", scenario: "fig1-rayleigh-quantized-csit", unit: "dB", target: 4.8, tol: 0.05, compute: |q| quant_gain(q, 2.0) },
        ConstCheck { name: "quantized CSIT gain, threshold 1/2", scenario: "fig1-rayleigh-quantized-csit", unit: "dB", target: 1.8, tol: 0.05, compute: |q| quant_gain(q, 0.5) },
        ConstCheck { name: "noisy quantized CSIT min Eb/N0 (eps=0.1)", scenario: "fig2-rayleigh-noisy-csit-bestcsir", unit: "dB", target: -4.01, tol: 0.03, compute: quant_noisy },
        ConstCheck { name: "TCP best low-SNR threshold", scenario: "fig4-rayleigh-fullcsit-nocsir", unit: "", target: 0.283, tol: 0.005, compute: |q| tcp_opt(q).0 },
        ConstCheck { name: "TCP min Eb/N0", scenario: "fig4-rayleigh-fullcsit-nocsir", unit: "dB", target: -0.90, tol: 0.03, compute: |q| tcp_opt(q).1 },
        ConstCheck { name: "TCP saturation", scenario: "fig4-rayleigh-fullcsit-nocsir", unit: "bits", target: 2.22, tol: 0.01, compute: |q| heur(q, Csir::None, 0.0, 0.0, 1e9) / LN2 },
        ConstCheck { name: "TMF min Eb/N0", scenario: "fig5-rayleigh-fullcsit-nocsir-lowsnr", unit: "dB", target: -1.59, tol: 0.02, compute: |q| wb(|p| heur(q, Csir::None, 1.0, 0.0, p)).ebn0_min_db },
        ConstCheck { name: "TMF saturation", scenario: "fig4-rayleigh-fullcsit-nocsir", unit: "bits", target: 1.0, tol: 0.005, compute: |q| heur(q, Csir::None, 1.0, 0.0, 1e9) / LN2 },
        ConstCheck { name: "TCI best low-SNR threshold", scenario: "fig5-rayleigh-fullcsit-nocsir-lowsnr", unit: "", target: 0.61, tol: 0.01, compute: |_| tci_t() },
        ConstCheck { name: "TCI min Eb/N0", scenario: "fig5-rayleigh-fullcsit-nocsir-lowsnr", unit: "dB", target: 0.194, tol: 0.02, compute: |q| wb(|p| heur(q, Csir::None, -1.0, tci_t(), p)).ebn0_min_db },
        ConstCheck { name: "TCP with S_R=1(G>=t): best threshold", scenario: "fig6-rayleigh-fullcsit-indicator", unit: "", target: 0.163, tol: 0.01, compute: |q| tcp_indicator(q).0 },
        ConstCheck { name: "TCP with S_R=1(G>=t): saturation", scenario: "fig6-rayleigh-fullcsit-indicator", unit: "bits", target: 2.35, tol: 0.02, compute: |q| tcp_indicator(q).1 },
        ConstCheck {
            name: "L=3 delayed CSIT regime boundary",
            scenario: "fig8-delayed-quantized",
            unit: "dB",
            target: -2.97,
            tol: 0.1,
            compute: |q| delayed_quantized_boundary(3, 1.0, q).map(|r| r.1).unwrap_or(f64::NAN),
        },
    ]
}

pub fn run_checks(scenario: Option<&str>, q: &Quadrature) -> Vec<CheckResult> {
    constants().iter().filter(|c| scenario.is_none_or(|s| s == c.scenario)).map(|c| c.run(q)).collect()
}
