//! Block fading with in-block feedback.

use crate::channel::{Complex, CsiSpec, CsiValue, Csir, Csit, FadingLaw};
use crate::error::{GmiError, NumError};
use crate::gmi::{adaptive_stats_discrete, gmi_adaptive_csir, RateResult};
use crate::numerics::{golden_max, integrate, integrate_exp_weighted, wideband_metrics};
use crate::Quadrature;
use crate::power::{log_gain_range, ratio_gain_range, solve_lambda, PowerPolicy};
use crate::specfun::{i0e, marcum_unchecked};
use crate::WidebandMetrics;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feedback {
    /// Quantized gain with `B` bits and threshold `Δ`, delayed by `D` symbols.
    DelayedGain { bits: u32, delta: f64 },
    /// One-bit quantized first channel output with threshold `Δ`.
    OutputQuantized { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSpec {
    pub l: usize,
    pub d: usize,
    pub feedback: Feedback,
    pub p: f64,
}

impl BlockSpec {
    pub fn new(l: usize, d: usize, feedback: Feedback, p: f64) -> Result<Self, GmiError> {
        if l == 0 || d > l {
            return Err(GmiError::Usage(format!("block needs L >= 1 and 0 <= D <= L, got L={l}, D={d}")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(GmiError::Usage("per-symbol budget must be > 0".into()));
        }
        Ok(Self { l, d, feedback, p })
    }
}

/// Power split and capacity for on-off fading with CSIT delayed by `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayedOnOff {
    pub p1: f64,
    pub p_d1: f64,
    pub rate: RateResult,
    pub wideband: WidebandMetrics,
}

fn onoff_delayed_split(l: usize, d: usize, p: f64) -> (f64, f64, f64) {
    let (lf, df) = (l as f64, d as f64);
    if d == l {
        return (p, p, 0.5 * (2.0 * p).ln_1p());
    }
    let (p1, pd) = if p >= (lf - df) / (4.0 * lf) {
        (p - (lf - df) / (4.0 * lf), 2.0 * p + df / (2.0 * lf))
    } else {
        (0.0, 2.0 * lf * p / (lf - df))
    };
    let r = df / (2.0 * lf) * (2.0 * p1).ln_1p() + (lf - df) / (2.0 * lf) * (2.0 * pd).ln_1p();
    (p1, pd, r)
}

pub fn onoff_delayed_capacity(l: usize, d: usize, p: f64) -> Result<DelayedOnOff, GmiError> {
    BlockSpec::new(l, d, Feedback::DelayedGain { bits: 1, delta: 1.0 }, p)?;
    let (p1, p_d1, r) = onoff_delayed_split(l, d, p);
    let wideband = wideband_metrics(|x: f64| onoff_delayed_split(l, d, x).2, 1e-4);
    Ok(DelayedOnOff { p1, p_d1, rate: RateResult::exact(r, p), wideband })
}

/// Rayleigh capacity with `S_{TL} = q(G)` (one bit, threshold `Δ`) and no
/// CSIT before symbol `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayedQuantized {
    pub lambda: f64,
    /// `P_1 = … = P_{L−1}`.
    pub p1: f64,
    /// `(P_L(Δ/2), P_L(3Δ/2))`.
    pub p_last: (f64, f64),
    pub capacity: RateResult,
}

fn cell_power(law: &FadingLaw, lambda: f64, lo: f64, hi: f64, pr: f64, q: &Quadrature) -> f64 {
    let j = |ps: f64| ratio_gain_range(law, ps, lo, hi, q).unwrap_or(f64::NAN) / pr;
    if pr <= 0.0 || j(0.0) <= lambda {
        return 0.0;
    }
    let (mut a, mut b) = (0.0, 1.0 / lambda);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if j(mid) > lambda {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn delayed_quantized_powers(l: usize, delta: f64, lambda: f64, q: &Quadrature) -> (f64, f64, f64, f64) {
    let law = FadingLaw::Rayleigh;
    let below = 1.0 - (-delta).exp();
    let p1 = if l > 1 { cell_power(&law, lambda, 0.0, f64::INFINITY, 1.0, q) } else { 0.0 };
    let pa = cell_power(&law, lambda, 0.0, delta, below, q);
    let pb = cell_power(&law, lambda, delta, f64::INFINITY, 1.0 - below, q);
    (p1, pa, pb, below)
}

pub fn rayleigh_delayed_quantized(l: usize, delta: f64, p: f64, q: &Quadrature) -> Result<DelayedQuantized, GmiError> {
    BlockSpec::new(l, l - 1, Feedback::DelayedGain { bits: 1, delta }, p)?;
    if !(delta > 0.0) {
        return Err(GmiError::Usage("quantizer Δ must be > 0".into()));
    }
    let lf = l as f64;
    let budget = |lam: f64| {
        let (p1, pa, pb, below) = delayed_quantized_powers(l, delta, lam, q);
        ((lf - 1.0) * p1 + below * pa + (1.0 - below) * pb) / lf
    };
    let lambda = solve_lambda(budget, p)?;
    let (p1, pa, pb, _) = delayed_quantized_powers(l, delta, lambda, q);
    let law = FadingLaw::Rayleigh;
    let c = (lf - 1.0) / lf * log_gain_range(&law, p1, 0.0, f64::INFINITY, q)?
        + (log_gain_range(&law, pa, 0.0, delta, q)? + log_gain_range(&law, pb, delta, f64::INFINITY, q)?) / lf;
    Ok(DelayedQuantized { lambda, p1, p_last: (pa, pb), capacity: RateResult::exact(c, p) })
}

/// Budget `P` and Eb/N0 (dB) where the uniform powers `P_1` switch on (`λ = 1`).
pub fn delayed_quantized_boundary(l: usize, delta: f64, q: &Quadrature) -> Result<(f64, f64), GmiError> {
    if l < 2 {
        return Err(GmiError::Usage("the P_1 regime needs L >= 2".into()));
    }
    let lf = l as f64;
    let (_, pa, pb, below) = delayed_quantized_powers(l, delta, 1.0, q);
    let p = (below * pa + (1.0 - below) * pb) / lf;
    let law = FadingLaw::Rayleigh;
    let c = (log_gain_range(&law, pa, 0.0, delta, q)? + log_gain_range(&law, pb, delta, f64::INFINITY, q)?) / lf;
    Ok((p, RateResult::exact(c, p).ebn0_db))
}

/// `h(Y_1 | |H|² = g) − log(πe)` for a constant-modulus pilot of power `P_1`.
fn pilot_mi_given_gain(g: f64, p1: f64, q: &Quadrature) -> Result<f64, NumError> {
    let a = (g * p1).sqrt();
    // −log(π p) = (r − a)² − log i0e(2ra) with p the Rice density of Y_1
    let f = |r: f64| {
        let x = 2.0 * r * a;
        let k = i0e(x);
        2.0 * r * (-(r - a) * (r - a)).exp() * k * ((r - a) * (r - a) - k.ln())
    };
    let lo = (a - 12.0).max(0.0);
    let h = integrate(f, lo, a + 12.0, q)?;
    Ok(h - 1.0)
}

/// Achievable rate with a phase-random pilot `X_1` and one-bit feedback of `|Y_1| >= Δ`.
pub fn rayleigh_output_feedback_rate(l: usize, delta: f64, p1: f64, p2: f64, q: &Quadrature) -> Result<RateResult, GmiError> {
    if l < 2 || !(delta >= 0.0 && p1 >= 0.0 && p2 >= 0.0) {
        return Err(GmiError::Usage("output feedback needs L >= 2 and nonnegative Δ, P_1, P_2".into()));
    }
    let lf = l as f64;
    let p = (p1 + (lf - 1.0) * p2) / lf;
    let first = if p1 > 0.0 {
        let gl = Quadrature::gauss_laguerre(64)?;
        let s = integrate_exp_weighted(|g: f64| pilot_mi_given_gain(g, p1, q).unwrap_or(f64::NAN), 0.0, f64::INFINITY, &gl)?;
        s.max(0.0)
    } else {
        0.0
    };
    let pr_e = (-delta * delta / (p1 + 1.0)).exp();
    let b = 2f64.sqrt() * delta;
    let second = if p2 > 0.0 {
        integrate_exp_weighted(|g: f64| marcum_unchecked((2.0 * g * p1).sqrt(), b) * (g * p2 / pr_e).ln_1p(), 0.0, f64::INFINITY, q)?
    } else {
        0.0
    };
    Ok(RateResult::exact(first / lf + (lf - 1.0) / lf * second, p))
}

/// Best output-feedback rate over a grid of pilot fractions and thresholds,
/// each refined by golden-section search on `Δ`.
pub fn rayleigh_output_feedback_best(l: usize, p: f64, q: &Quadrature) -> Result<(RateResult, f64, f64), GmiError> {
    let lf = l as f64;
    let mut best: Option<(RateResult, f64, f64)> = None;
    for k in 0..=20 {
        // pilot share of the block energy
        let frac = k as f64 / 20.0;
        let p1 = frac * lf * p;
        let p2 = (lf * p - p1) / (lf - 1.0);
        let rate = |dl: f64| rayleigh_output_feedback_rate(l, dl, p1, p2, q).map(|r| r.nats).unwrap_or(f64::NEG_INFINITY);
        let hi = 3.0 * (p1 + 1.0).sqrt() + 3.0;
        let (d0, _) = (0..=24).map(|i| hi * i as f64 / 24.0).map(|d| (d, rate(d))).fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let step = hi / 24.0;
        let (dl, _) = golden_max(rate, (d0 - step).max(0.0), d0 + step, 1e-6);
        let r = rayleigh_output_feedback_rate(l, dl, p1, p2, q)?;
        if best.as_ref().map_or(true, |b| r.nats > b.0.nats) {
            best = Some((r, p1, dl));
        }
    }
    Ok(best.unwrap())
}

/// One symbol of a block: its CSI structure and power policy.
#[derive(Debug, Clone)]
pub struct BlockSymbol {
    pub csi: CsiSpec,
    pub policy: PowerPolicy,
}

fn block_budget(symbols: &[BlockSymbol]) -> Result<f64, GmiError> {
    if symbols.is_empty() {
        return Err(GmiError::Usage("block needs at least one symbol".into()));
    }
    Ok(symbols.iter().map(|s| s.policy.budget).sum::<f64>() / symbols.len() as f64)
}

/// Scalar block GMI: the mean of the per-symbol adaptive GMIs.
pub fn block_gmi_scalar(law: &FadingLaw, symbols: &[BlockSymbol], q: &Quadrature) -> Result<RateResult, GmiError> {
    let p = block_budget(symbols)?;
    let mut r = 0.0;
    for s in symbols {
        r += gmi_adaptive_csir(law, &s.csi, &s.policy, q)?.nats;
    }
    Ok(RateResult::exact(r / symbols.len() as f64, p))
}

/// `E[log(1 + E[G P(S_T) | S_R])]` for one symbol.
fn conditional_power_bound(law: &FadingLaw, csi: &CsiSpec, policy: &PowerPolicy, q: &Quadrature) -> Result<f64, GmiError> {
    if law.is_discrete() {
        return Ok(adaptive_stats_discrete(law, csi, policy)?.iter().map(|b| b.prob * b.ey2.ln()).sum());
    }
    let st_of = |k: f64| match csi.csit {
        Csit::EqualsSr => CsiValue::Complex(Complex::new(k.sqrt(), 0.0)),
        Csit::FunctionOfSr(f) => f(&CsiValue::Complex(Complex::new(k.sqrt(), 0.0))),
        _ => CsiValue::None,
    };
    match csi.csir {
        Csir::FullHP => Ok(crate::channel::expect_states(law, csi, Some(policy), |h, st, _| (h.norm_sqr() * policy.power(st)).ln_1p(), q)?),
        Csir::FullH => {
            let b = crate::channel::breakpoints(csi, Some(policy));
            let mut s = 0.0;
            for w in b.windows(2) {
                s += integrate_exp_weighted(
                    |g: f64| match crate::channel::csi_given_h(csi, law, Some(policy), Complex::new(g.sqrt(), 0.0)) {
                        Ok(list) => list.iter().map(|(p, st, _)| p * g * policy.power(st)).sum::<f64>().ln_1p(),
                        Err(_) => f64::NAN,
                    },
                    w[0],
                    w[1],
                    q,
                )?;
            }
            Ok(s)
        }
        Csir::LmmseEstimate(eps) => Ok(integrate_exp_weighted(|k: f64| (((1.0 - eps) * k + eps) * policy.power(&st_of(k))).ln_1p(), 0.0, f64::INFINITY, q)?),
        Csir::None | Csir::IndicatorGain(_) => {
            let cells: Vec<(f64, f64, CsiValue)> = match csi.csir {
                Csir::IndicatorGain(t) => vec![(0.0, t, CsiValue::Real(0.0)), (t, f64::INFINITY, CsiValue::Real(1.0))],
                _ => vec![(0.0, f64::INFINITY, CsiValue::None)],
            };
            let mut r = 0.0;
            for (lo, hi, sv) in cells {
                let pr = law.expect_gain_range(|_| 1.0, lo, hi, q)?;
                if pr <= 0.0 {
                    continue;
                }
                let egp = crate::channel::expect_states(law, csi, Some(policy), |h, st, sr| if *sr == sv { h.norm_sqr() * policy.power(st) } else { 0.0 }, q)?;
                r += pr * (egp / pr).ln_1p();
            }
            Ok(r)
        }
        Csir::NoisyFlip(_) => Err(GmiError::Usage("flip CSIR needs a two-point law".into())),
    }
}

/// Capacity upper bound `Σ_ℓ E[log(1 + E[G P_ℓ | S_R])] / L`; the
/// conditioning is on the CSIR only, so no output history enters.
pub fn block_capacity_upper_bound(law: &FadingLaw, symbols: &[BlockSymbol], q: &Quadrature) -> Result<RateResult, GmiError> {
    let p = block_budget(symbols)?;
    let mut r = 0.0;
    for s in symbols {
        r += conditional_power_bound(law, &s.csi, &s.policy, q)?;
    }
    Ok(RateResult::exact(r / symbols.len() as f64, p))
}

/// Upper concave envelope through the origin of `(P, rate)` points sorted by `P`.
pub fn time_sharing_hull(points: &[(f64, f64)]) -> Vec<f64> {
    let mut pts = vec![(0.0, 0.0)];
    pts.extend_from_slice(points);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if (b.1 - a.1) * (pt.0 - a.0) <= (pt.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    points
        .iter()
        .map(|&(x, _)| {
            let i = hull.iter().position(|h| h.0 >= x).unwrap_or(hull.len() - 1);
            if i == 0 || hull[i].0 == x {
                return hull[i].1;
            }
            let (a, b) = (hull[i - 1], hull[i]);
            a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Bits;
    use crate::power::{quantized_csit_capacity, quantized_csit_powers, waterfill};

    fn q() -> Quadrature {
        Quadrature::adaptive(1e-10).unwrap()
    }

    #[test]
    fn delayed_onoff_split() {
        let r = onoff_delayed_capacity(4, 1, 2.0).unwrap();
        assert!((r.p1 - (2.0 - 3.0 / 16.0)).abs() < 1e-15);
        assert!((r.p_d1 - (4.0 + 1.0 / 8.0)).abs() < 1e-15);
        // budget: D P_1 + (L−D) P_{D+1}/2 = L P
        assert!((1.0 * r.p1 + 3.0 * r.p_d1 / 2.0 - 4.0 * 2.0).abs() < 1e-12);
        let full = onoff_delayed_capacity(3, 3, 0.7).unwrap();
        assert!((full.rate.nats - 0.5 * 2.4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn delayed_onoff_low_snr_gain() {
        let a = onoff_delayed_capacity(2, 1, 1e-3).unwrap();
        let b = onoff_delayed_capacity(2, 2, 1e-3).unwrap();
        assert!((a.wideband.ebn0_min_db - (b.wideband.ebn0_min_db - 3.0103)).abs() < 0.01);
    }

    #[test]
    fn delayed_quantized_l1_is_quantized_csit() {
        let p = 0.8;
        let a = rayleigh_delayed_quantized(1, 1.0, p, &q()).unwrap();
        let (_, pol) = quantized_csit_powers(&FadingLaw::Rayleigh, 1.0, p, 0.0, &q()).unwrap();
        let b = quantized_csit_capacity(&FadingLaw::Rayleigh, 1.0, 0.0, &pol, &q()).unwrap();
        assert!((a.capacity.nats - b.nats).abs() < 1e-8);
    }

    #[test]
    fn delayed_quantized_budget() {
        let r = rayleigh_delayed_quantized(3, 1.0, 2.0, &q()).unwrap();
        let below = 1.0 - (-1f64).exp();
        let used = (2.0 * r.p1 + below * r.p_last.0 + (1.0 - below) * r.p_last.1) / 3.0;
        assert!((used - 2.0).abs() < 1e-8);
    }

    #[test]
    fn output_feedback_trivial_cases() {
        let qq = q();
        // Δ = 0: always transmit
        let r = rayleigh_output_feedback_rate(4, 0.0, 0.0, 1.0, &qq).unwrap();
        let c = log_gain_range(&FadingLaw::Rayleigh, 1.0, 0.0, f64::INFINITY, &qq).unwrap();
        assert!((r.nats - 0.75 * c).abs() < 1e-9);
        // pilot off: Pr(E | g) = e^{−Δ²}
        let d: f64 = 0.8;
        let r = rayleigh_output_feedback_rate(4, d, 0.0, 1.0, &qq).unwrap();
        let pe = (-d * d).exp();
        let c = log_gain_range(&FadingLaw::Rayleigh, 1.0 / pe, 0.0, f64::INFINITY, &qq).unwrap();
        assert!((r.nats - 0.75 * pe * c).abs() < 1e-9);
    }

    #[test]
    fn pilot_mi_limits() {
        let qq = q();
        // no fading information: g → 0 gives zero
        assert!(pilot_mi_given_gain(1e-12, 1.0, &qq).unwrap().abs() < 1e-6);
        // strong pilot: Y_1 is a ring of radius a with unit-variance radial noise
        let a2: f64 = 1e4;
        let v = pilot_mi_given_gain(a2, 1.0, &qq).unwrap();
        let approx = 0.5 * (4.0 * std::f64::consts::PI * a2 / std::f64::consts::E).ln();
        assert!((v - approx).abs() < 0.01, "{v} {approx}");
    }

    #[test]
    fn block_l1_and_symmetry() {
        let csi = CsiSpec::new(Csir::FullH, Csit::QuantGain { bits: Bits::Inf, delta: 1.0, flip: 0.0 }).unwrap();
        let (_, pol, cap) = waterfill(&FadingLaw::Rayleigh, 1.0, &q()).unwrap();
        let sym = BlockSymbol { csi, policy: pol };
        let one = block_gmi_scalar(&FadingLaw::Rayleigh, &[sym.clone()], &q()).unwrap();
        let three = block_gmi_scalar(&FadingLaw::Rayleigh, &[sym.clone(), sym.clone(), sym.clone()], &q()).unwrap();
        assert!((one.nats - cap.nats).abs() < 1e-8);
        assert!((one.nats - three.nats).abs() < 1e-14);
        let ub = block_capacity_upper_bound(&FadingLaw::Rayleigh, &[sym], &q()).unwrap();
        assert!((ub.nats - cap.nats).abs() < 1e-8);
    }

    #[test]
    fn upper_bound_no_fading() {
        let law = FadingLaw::discrete(vec![(Complex::new(1.0, 0.0), 1.0)]).unwrap();
        let sym = BlockSymbol { csi: CsiSpec::none(), policy: PowerPolicy::constant(3.0) };
        let ub = block_capacity_upper_bound(&law, &[sym], &q()).unwrap();
        assert!((ub.nats - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn hull_is_concave_envelope() {
        let pts = [(1.0, 0.1), (2.0, 1.0), (3.0, 1.2)];
        let h = time_sharing_hull(&pts);
        assert!((h[0] - 0.5).abs() < 1e-15);
        assert_eq!(h[1], 1.0);
        assert_eq!(h[2], 1.2);
    }
}
