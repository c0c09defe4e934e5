//! Scenario ids, their methods and default grids.

use fading_core::blockfade::{rayleigh_delayed_quantized, rayleigh_output_feedback_best};
use fading_core::channel::{Bits, CsiSpec, Csir, Csit, FadingLaw};
use fading_core::gmi::{
    caire_bound, gmi_adaptive_csir, gmi_k2, gmi_kinf_forward, gmi_reverse, k2_schedule, mi_monte_carlo, mi_monte_carlo_flash, tci_low_snr_schedule,
    K2Scenario,
};
use fading_core::numerics::golden_max;
use fading_core::power::{
    estimate_law, heuristic_policy, oof_partial_csit_powers, optimal_policy_fixed_point, quad_waterfill, quad_waterfill_conventional,
    quantized_csit_capacity, quantized_csit_powers, tmmse_optimize, waterfill, EstimateLaw, OofMode, PowerPolicy,
};
use fading_core::{GmiError, Quadrature, RateResult};

const EPS: f64 = 0.1;

/// Shared evaluation settings.
pub struct Ctx {
    pub q: Quadrature,
    pub mc_n: u64,
}

type Eval = Box<dyn Fn(f64, &Ctx, u64) -> Result<RateResult, GmiError> + Send + Sync>;

pub struct Method {
    pub label: String,
    /// Monte Carlo estimate: the value depends on the seed.
    pub mc: bool,
    /// Also emit the upper concave envelope as `<label>-hull`.
    pub hull: bool,
    eval: Eval,
}

impl Method {
    fn exact<F>(label: &str, f: F) -> Self
    where
        F: Fn(f64, &Ctx) -> Result<RateResult, GmiError> + Send + Sync + 'static,
    {
        Self { label: label.to_string(), mc: false, hull: false, eval: Box::new(move |p, c, _| f(p, c)) }
    }

    fn mc<F>(label: &str, f: F) -> Self
    where
        F: Fn(f64, &Ctx, u64) -> Result<RateResult, GmiError> + Send + Sync + 'static,
    {
        Self { label: label.to_string(), mc: true, hull: false, eval: Box::new(f) }
    }

    fn with_hull(mut self) -> Self {
        self.hull = true;
        self
    }

    pub fn eval(&self, p: f64, ctx: &Ctx, seed: u64) -> Result<RateResult, GmiError> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(GmiError::Usage(format!("budget P = {p} must be positive")));
        }
        (self.eval)(p, ctx, seed)
    }
}

pub struct Scenario {
    pub id: &'static str,
    pub description: &'static str,
    /// Default SNR grid in dB: `(lo, hi, steps)`.
    pub snr_db: (f64, f64, usize),
    pub methods: fn() -> Vec<Method>,
}

pub const CONST_CHECK: &str = "const-check";

pub fn registry() -> Vec<Scenario> {
    vec![
        Scenario { id: "fig1-onoff-nocsir", description: "On-off fading, no CSIR and no CSIT: capacity bound, MI, GMIs, flash", snr_db: (-15.0, 30.0, 19), methods: fig1_onoff },
        Scenario { id: "fig2-onoff-fullcsir-partialcsit", description: "On-off fading, full CSIR, CSIT flipped with probability 0.1", snr_db: (-15.0, 30.0, 19), methods: fig2_onoff },
        Scenario { id: "fig3-onoff-fullcsit-nocsir", description: "On-off fading, full CSIT, no CSIR: K=1 and K=2 GMIs", snr_db: (-15.0, 30.0, 19), methods: fig3_onoff },
        Scenario { id: "fig4-onoff-csitatr", description: "On-off fading, partial CSIR (flip 0.1) and CSIT at the receiver", snr_db: (-15.0, 40.0, 23), methods: fig4_onoff },
        Scenario { id: "fig1-rayleigh-quantized-csit", description: "Rayleigh, full CSIR, one-bit quantized CSIT at thresholds 0.5, 1, 2", snr_db: (-20.0, 20.0, 17), methods: fig1_rayleigh },
        Scenario { id: "fig2-rayleigh-noisy-csit-bestcsir", description: "Rayleigh, S_R = H sqrt(P(S_T)), noisy one-bit CSIT", snr_db: (-20.0, 20.0, 17), methods: fig2_rayleigh },
        Scenario { id: "fig3-rayleigh-noisy-csit-gmi", description: "Rayleigh, S_R = H, noisy one-bit CSIT: forward GMI with optimized powers", snr_db: (-20.0, 20.0, 17), methods: fig3_rayleigh },
        Scenario { id: "fig4-rayleigh-fullcsit-nocsir", description: "Rayleigh, full CSIT, no CSIR: TCP, TMF, TCI, TMMSE, optimal policy, K=2", snr_db: (-10.0, 40.0, 21), methods: fig4_rayleigh },
        Scenario { id: "fig5-rayleigh-fullcsit-nocsir-lowsnr", description: "Rayleigh, full CSIT, no CSIR at low SNR", snr_db: (-30.0, 0.0, 13), methods: fig5_rayleigh },
        Scenario { id: "fig6-rayleigh-fullcsit-indicator", description: "Rayleigh, full CSIT, CSIR S_R = 1(G >= t)", snr_db: (-10.0, 40.0, 21), methods: fig6_rayleigh },
        Scenario { id: "fig7-rayleigh-lmmse-csitatr", description: "Rayleigh, LMMSE CSIR and CSIT at the receiver: quadratic vs conventional waterfilling", snr_db: (-20.0, 20.0, 17), methods: fig7_rayleigh },
        Scenario { id: "fig8-delayed-quantized", description: "Rayleigh block fading, L = 1, 2, 3 with one-bit CSIT delayed by L-1", snr_db: (-20.0, 20.0, 17), methods: fig8_block },
        Scenario { id: "fig9-output-feedback", description: "Rayleigh block fading, L = 10, 20, 100 with one-bit output feedback", snr_db: (-25.0, 10.0, 15), methods: fig9_block },
    ]
}

pub fn find(id: &str) -> Option<Scenario> {
    registry().into_iter().find(|s| s.id == id)
}

fn none() -> CsiSpec {
    CsiSpec::none()
}

fn spec(csir: Csir, csit: Csit) -> CsiSpec {
    CsiSpec::new(csir, csit).expect("registry CSI specs are valid")
}

fn onoff_fullcsit_policy(p: f64) -> PowerPolicy {
    PowerPolicy::tabulated(vec![(0.0, 0.0), (2.0, 2.0 * p)], p)
}

fn forward_oof_policy(p: f64) -> Result<PowerPolicy, GmiError> {
    let (p0, p2, _) = oof_partial_csit_powers(EPS, p, OofMode::ForwardGmi)?;
    Ok(PowerPolicy::tabulated(vec![(0.0, p0), (2.0, p2)], p))
}

fn no_csit_rayleigh(p: f64, c: &Ctx) -> Result<RateResult, GmiError> {
    let r = FadingLaw::Rayleigh.expect_gain(|g| (g * p).ln_1p(), &c.q)?;
    Ok(RateResult::exact(r, p))
}

fn fig1_onoff() -> Vec<Method> {
    vec![
        Method::exact("FullCSIR-cap", |p, _| Ok(RateResult::exact(0.5 * (2.0 * p).ln_1p(), p))),
        Method::mc("MI-Gauss", move |p, c, s| mi_monte_carlo(&FadingLaw::OnOff, &none(), &PowerPolicy::constant(p), c.mc_n, s)),
        Method::exact("GMI-K1", move |p, c| gmi_adaptive_csir(&FadingLaw::OnOff, &none(), &PowerPolicy::constant(p), &c.q)),
        Method::exact("GMI-K2", |p, c| gmi_k2(K2Scenario::OnOffNoCsi, p, k2_schedule(K2Scenario::OnOffNoCsi, p).1, &c.q)),
        Method::exact("rGMI", move |p, c| gmi_reverse(&FadingLaw::OnOff, &none(), &PowerPolicy::constant(p), &c.q)),
        Method::exact("GMI-Kinf", move |p, c| gmi_kinf_forward(&FadingLaw::OnOff, &none(), &PowerPolicy::constant(p), &c.q)),
        Method::exact("caire", move |p, c| caire_bound(&FadingLaw::OnOff, p, &c.q)),
        Method::mc("flash-p0.05", move |p, c, s| mi_monte_carlo_flash(&FadingLaw::OnOff, 0.05, p, c.mc_n, s)),
    ]
}

fn fig2_onoff() -> Vec<Method> {
    let csi = spec(Csir::FullH, Csit::NoisyFlip(EPS));
    vec![
        Method::exact("BestCSIR-cap", |p, _| Ok(RateResult::exact(oof_partial_csit_powers(EPS, p, OofMode::BestCsir)?.2, p))),
        Method::exact("FullCSIT-cap", move |p, c| Ok(waterfill(&FadingLaw::OnOff, p, &c.q)?.2)),
        Method::exact("NoCSIT-cap", |p, _| Ok(RateResult::exact(0.5 * (2.0 * p).ln_1p(), p))),
        Method::mc("MI-Gauss", move |p, c, s| mi_monte_carlo(&FadingLaw::OnOff, &csi, &forward_oof_policy(p)?, c.mc_n, s)),
        Method::exact("rGMI", move |p, c| gmi_reverse(&FadingLaw::OnOff, &csi, &forward_oof_policy(p)?, &c.q)),
        Method::exact("GMI-K1", move |p, c| gmi_adaptive_csir(&FadingLaw::OnOff, &csi, &forward_oof_policy(p)?, &c.q)),
    ]
}

fn fig3_onoff() -> Vec<Method> {
    let csi = spec(Csir::None, Csit::FullH);
    vec![
        Method::exact("FullCSIR-cap", move |p, c| Ok(waterfill(&FadingLaw::OnOff, p, &c.q)?.2)),
        Method::mc("MI-Gauss", move |p, c, s| mi_monte_carlo(&FadingLaw::OnOff, &csi, &onoff_fullcsit_policy(p), c.mc_n, s)),
        Method::exact("GMI-K1", move |p, c| gmi_adaptive_csir(&FadingLaw::OnOff, &csi, &onoff_fullcsit_policy(p), &c.q)),
        Method::exact("GMI-K2", |p, c| gmi_k2(K2Scenario::OnOffFullCsit, p, k2_schedule(K2Scenario::OnOffFullCsit, p).1, &c.q)),
    ]
}

fn csitatr_est() -> EstimateLaw {
    estimate_law(&FadingLaw::OnOff, &spec(Csir::NoisyFlip(EPS), Csit::EqualsSr)).expect("on-off CSIT@R estimate law")
}

fn fig4_onoff() -> Vec<Method> {
    let csi = spec(Csir::NoisyFlip(EPS), Csit::EqualsSr);
    vec![
        Method::exact("BestCSIR-cap", |p, _| Ok(RateResult::exact(oof_partial_csit_powers(EPS, p, OofMode::BestCsir)?.2, p))),
        Method::mc("MI-Gauss", move |p, c, s| mi_monte_carlo(&FadingLaw::OnOff, &csi, &quad_waterfill(&csitatr_est(), p, &c.q)?.1, c.mc_n, s)),
        Method::exact("GMI-K1", |p, c| Ok(quad_waterfill(&csitatr_est(), p, &c.q)?.2)),
        Method::exact("GMI-K2", |p, c| {
            let (p0, p2, _) = oof_partial_csit_powers(EPS, p, OofMode::BestCsir)?;
            let s = K2Scenario::OnOffCsitAtR { eps: EPS, p0, p2 };
            gmi_k2(s, p, k2_schedule(s, p).1, &c.q)
        }),
    ]
}

fn quantized(delta: f64, eps: f64, p: f64, c: &Ctx) -> Result<RateResult, GmiError> {
    let law = FadingLaw::Rayleigh;
    let (_, pol) = quantized_csit_powers(&law, delta, p, eps, &c.q)?;
    quantized_csit_capacity(&law, delta, eps, &pol, &c.q)
}

fn fig1_rayleigh() -> Vec<Method> {
    vec![
        Method::exact("NoCSIT-cap", no_csit_rayleigh),
        Method::exact("Quant-D0.5", |p, c| quantized(0.5, 0.0, p, c)),
        Method::exact("Quant-D1", |p, c| quantized(1.0, 0.0, p, c)),
        Method::exact("Quant-D2", |p, c| quantized(2.0, 0.0, p, c)),
        Method::exact("FullCSIT-cap", |p, c| Ok(waterfill(&FadingLaw::Rayleigh, p, &c.q)?.2)),
    ]
}

fn fig2_rayleigh() -> Vec<Method> {
    let mut v = vec![Method::exact("NoCSIT-cap", no_csit_rayleigh)];
    for eps in [0.0, 0.1, 0.2] {
        v.push(Method::exact(&format!("BestCSIR-eps{eps}"), move |p, c| quantized(1.0, eps, p, c)));
    }
    v
}

/// Forward GMI with `S_R = H` and noisy one-bit CSIT, maximized over the
/// split of the budget between the two cells.
fn noisy_quantized_gmi(delta: f64, eps: f64, p: f64, c: &Ctx) -> Result<RateResult, GmiError> {
    let law = FadingLaw::Rayleigh;
    let csi = CsiSpec::new(Csir::FullH, Csit::QuantGain { bits: Bits::One, delta, flip: eps })?;
    let e_d = (-delta).exp();
    let pr0 = (1.0 - eps) - (1.0 - 2.0 * eps) * e_d;
    let pr1 = 1.0 - pr0;
    let policy = |share: f64| {
        let table = vec![(0.5 * delta, if pr0 > 0.0 { share * p / pr0 } else { 0.0 }), (1.5 * delta, if pr1 > 0.0 { (1.0 - share) * p / pr1 } else { 0.0 })];
        PowerPolicy::tabulated(table, p)
    };
    let rate = |share: f64| gmi_adaptive_csir(&law, &csi, &policy(share), &c.q).map(|r| r.nats).unwrap_or(f64::NEG_INFINITY);
    let (mut best, mut r_best) = (0.0, rate(0.0));
    for i in 1..=20 {
        let s = i as f64 / 20.0;
        let r = rate(s);
        if r > r_best {
            (best, r_best) = (s, r);
        }
    }
    let (s, _) = golden_max(rate, (best - 0.05f64).max(0.0), (best + 0.05f64).min(1.0), 1e-7);
    let s = if rate(s) >= r_best { s } else { best };
    gmi_adaptive_csir(&law, &csi, &policy(s), &c.q)
}

fn fig3_rayleigh() -> Vec<Method> {
    let mut v = vec![Method::exact("NoCSIT-cap", no_csit_rayleigh)];
    for eps in [0.1, 0.2] {
        v.push(Method::exact(&format!("BestCSIR-eps{eps}"), move |p, c| quantized(1.0, eps, p, c)));
        v.push(Method::exact(&format!("GMI-eps{eps}"), move |p, c| noisy_quantized_gmi(1.0, eps, p, c)));
    }
    v
}

/// Best heuristic rate over the threshold `t`, searched on a log scale.
fn heuristic_best(csir_of_t: fn(f64) -> Csir, a: f64, p: f64, c: &Ctx) -> Result<RateResult, GmiError> {
    let law = FadingLaw::Rayleigh;
    let rate = |u: f64| {
        let t = 10f64.powf(u);
        heuristic_policy(&law, csir_of_t(t), a, t, p, &c.q).map(|r| r.1.nats).unwrap_or(f64::NEG_INFINITY)
    };
    let (mut u0, mut r0) = (f64::NAN, f64::NEG_INFINITY);
    for i in 0..=28 {
        let u = -6.0 + 0.25 * i as f64;
        let r = rate(u);
        if r > r0 {
            (u0, r0) = (u, r);
        }
    }
    if !r0.is_finite() {
        return Err(GmiError::Usage("no threshold gives a finite rate".into()));
    }
    let (u, _) = golden_max(rate, u0 - 0.25, u0 + 0.25, 1e-6);
    let u = if rate(u) >= r0 { u } else { u0 };
    let t = 10f64.powf(u);
    let mut best = heuristic_policy(&law, csir_of_t(t), a, t, p, &c.q)?.1;
    // t = 0 is allowed whenever the policy is finite there
    if a >= 0.0 {
        let zero = heuristic_policy(&law, csir_of_t(0.0), a, 0.0, p, &c.q)?.1;
        if zero.nats > best.nats {
            best = zero;
        }
    }
    Ok(best)
}

fn no_csir(_: f64) -> Csir {
    Csir::None
}

fn indicator(t: f64) -> Csir {
    Csir::IndicatorGain(t)
}

fn tci_policy(t: f64, p: f64, c: &Ctx) -> Result<PowerPolicy, GmiError> {
    Ok(heuristic_policy(&FadingLaw::Rayleigh, Csir::None, -1.0, t, p, &c.q)?.0)
}

fn k1_heuristics(v: &mut Vec<Method>, csir_of_t: fn(f64) -> Csir) {
    v.push(Method::exact("TCP-K1", move |p, c| heuristic_best(csir_of_t, 0.0, p, c)));
    v.push(Method::exact("TMF-K1", move |p, c| heuristic_best(csir_of_t, 1.0, p, c)));
    v.push(Method::exact("TCI-K1", move |p, c| heuristic_best(csir_of_t, -1.0, p, c)));
}

fn fig4_rayleigh() -> Vec<Method> {
    let csi = spec(Csir::None, Csit::FullH);
    let mut v = Vec::new();
    k1_heuristics(&mut v, no_csir);
    v.push(Method::exact("TMMSE-K1", move |p, c| Ok(tmmse_optimize(&FadingLaw::Rayleigh, Csir::None, p, &c.q)?.1)));
    v.push(Method::exact("GMI-opt", move |p, c| Ok(optimal_policy_fixed_point(&FadingLaw::Rayleigh, Csir::None, p, &c.q, 0.5, 2000)?.1)));
    v.push(Method::mc("MI-TCI", move |p, c, s| mi_monte_carlo(&FadingLaw::Rayleigh, &csi, &tci_policy(p.powf(-0.4), p, c)?, c.mc_n, s)));
    v.push(Method::exact("GMI-K2-TCI", |p, c| {
        let (t, tr) = k2_schedule(K2Scenario::RayleighTci { t: 0.0 }, p);
        gmi_k2(K2Scenario::RayleighTci { t }, p, tr, &c.q)
    }));
    v
}

fn low_snr_t(p: f64) -> Result<f64, GmiError> {
    let t = -(p / 1.4).ln();
    if t > 0.0 {
        Ok(t)
    } else {
        Err(GmiError::Usage(format!("the low-SNR threshold -log(P/1.4) needs P < 1.4, got {p}")))
    }
}

fn fig5_rayleigh() -> Vec<Method> {
    let csi = spec(Csir::None, Csit::FullH);
    let mut v = Vec::new();
    k1_heuristics(&mut v, no_csir);
    v.push(Method::exact("TMMSE-K1", move |p, c| Ok(tmmse_optimize(&FadingLaw::Rayleigh, Csir::None, p, &c.q)?.1)));
    v.push(Method::mc("MI-TCI", move |p, c, s| mi_monte_carlo(&FadingLaw::Rayleigh, &csi, &tci_policy(low_snr_t(p)?, p, c)?, c.mc_n, s)));
    v.push(Method::exact("rGMI-TCI", move |p, c| gmi_reverse(&FadingLaw::Rayleigh, &csi, &tci_policy(low_snr_t(p)?, p, c)?, &c.q)));
    v.push(Method::exact("GMI-K2-TCI", |p, c| {
        low_snr_t(p)?;
        let (t, tr) = tci_low_snr_schedule(p, 1.4);
        gmi_k2(K2Scenario::RayleighTci { t }, p, tr, &c.q)
    }));
    v
}

fn tmmse_indicator_best(p: f64, c: &Ctx) -> Result<(f64, RateResult), GmiError> {
    let law = FadingLaw::Rayleigh;
    let rate = |u: f64| tmmse_optimize(&law, Csir::IndicatorGain(10f64.powf(u)), p, &c.q).map(|r| r.1.nats).unwrap_or(f64::NEG_INFINITY);
    let (mut u0, mut r0) = (f64::NAN, f64::NEG_INFINITY);
    for i in 0..=16 {
        let u = -4.0 + 0.25 * i as f64;
        let r = rate(u);
        if r > r0 {
            (u0, r0) = (u, r);
        }
    }
    if !r0.is_finite() {
        return Err(GmiError::Usage("no threshold gives a finite TMMSE rate".into()));
    }
    let (u, _) = golden_max(rate, u0 - 0.25, u0 + 0.25, 1e-5);
    let u = if rate(u) >= r0 { u } else { u0 };
    let t = 10f64.powf(u);
    Ok((t, tmmse_optimize(&law, Csir::IndicatorGain(t), p, &c.q)?.1))
}

fn fig6_rayleigh() -> Vec<Method> {
    let mut v = Vec::new();
    k1_heuristics(&mut v, indicator);
    v.push(Method::exact("TMMSE-K1", |p, c| Ok(tmmse_indicator_best(p, c)?.1)));
    v.push(Method::exact("GMI-opt", move |p, c| {
        let (t, _) = tmmse_indicator_best(p, c)?;
        Ok(optimal_policy_fixed_point(&FadingLaw::Rayleigh, Csir::IndicatorGain(t), p, &c.q, 0.5, 2000)?.1)
    }));
    v
}

fn fig7_rayleigh() -> Vec<Method> {
    let mut v = vec![Method::exact("FullCSIR-cap", |p, c| Ok(waterfill(&FadingLaw::Rayleigh, p, &c.q)?.2))];
    for eps in [0.1, 0.2] {
        let est = EstimateLaw::RayleighLmmse { eps };
        let est2 = est.clone();
        v.push(Method::exact(&format!("q-waterfill-eps{eps}"), move |p, c| Ok(quad_waterfill(&est, p, &c.q)?.2)));
        v.push(Method::exact(&format!("c-waterfill-eps{eps}"), move |p, c| Ok(quad_waterfill_conventional(&est2, p, &c.q)?.2)));
    }
    v
}

fn fig8_block() -> Vec<Method> {
    let mut v = vec![Method::exact("NoCSIT-cap", no_csit_rayleigh)];
    for l in [1usize, 2, 3] {
        v.push(Method::exact(&format!("L={l}"), move |p, c| Ok(rayleigh_delayed_quantized(l, 1.0, p, &c.q)?.capacity)));
    }
    v
}

fn fig9_block() -> Vec<Method> {
    let mut v = vec![Method::exact("NoCSIT-cap", no_csit_rayleigh)];
    for l in [10usize, 20, 100] {
        v.push(Method::exact(&format!("L={l}"), move |p, c| Ok(rayleigh_output_feedback_best(l, p, &c.q)?.0)).with_hull());
    }
    v
}
