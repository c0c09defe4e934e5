//! GMI and mutual information: forward CSCG models, K-partitions, adaptive
//! symbols with CSIR, reverse-model and K=∞ GMIs, and Monte Carlo MI.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{cn, csi_given_h, cscg_density, expect_states, output_mixture, Complex, CsiSpec, CsiValue, Csir, Csit, FadingLaw, SrBlock};
use crate::error::{GmiError, NumError};
use crate::numerics::{ebn0_of, integrate_exp_weighted, mc_mean, McEstimate};
use crate::Quadrature;
use crate::power::PowerPolicy;
use crate::specfun::{i0e, marcum_unchecked};

/// Floor applied to conditional variances.
pub const VAR_FLOOR: f64 = 1e-14;

/// Rayleigh gain nodes per cell for output mixtures.
pub const MIXTURE_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    pub nats: f64,
    pub bits: f64,
    pub p_avg: f64,
    pub ebn0_db: f64,
    pub uncertainty: McEstimate,
}

impl RateResult {
    pub fn exact(nats: f64, p_avg: f64) -> Self {
        Self { nats, bits: nats / LN_2, p_avg, ebn0_db: ebn0_db(p_avg, nats), uncertainty: McEstimate::exact(nats) }
    }

    pub fn from_mc(est: McEstimate, p_avg: f64) -> Self {
        Self { nats: est.mean, bits: est.mean / LN_2, p_avg, ebn0_db: ebn0_db(p_avg, est.mean), uncertainty: est }
    }

    /// 95% half-width in bits (0 for deterministic values).
    pub fn ci_bits(&self) -> f64 {
        self.uncertainty.ci_half_width / LN_2
    }
}

fn ebn0_db(p: f64, nats: f64) -> f64 {
    ebn0_of(p, nats).unwrap_or(f64::INFINITY)
}

/// Second-order statistics of `(X, Y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderStats {
    /// `E[Y X*]`.
    pub e_yx_conj: Complex,
    /// `E|Y|²`.
    pub e_abs_y2: f64,
    /// `E|X|²`.
    pub e_abs_x2: f64,
}

impl SecondOrderStats {
    pub fn h_tilde(&self) -> Complex {
        self.e_yx_conj / self.e_abs_x2
    }

    pub fn sigma2_tilde(&self) -> f64 {
        self.e_abs_y2 - self.h_tilde().norm_sqr() * self.e_abs_x2
    }

    /// `E|Y − hX|²`.
    pub fn err2(&self, h: Complex) -> f64 {
        self.e_abs_y2 - 2.0 * (h.conj() * self.e_yx_conj).re + h.norm_sqr() * self.e_abs_x2
    }

    /// Channel `Y = hX + Z` with `Z ~ CN(0, n0)` and `E|X|² = p`.
    pub fn matched(h: Complex, p: f64, n0: f64) -> Self {
        Self { e_yx_conj: h * p, e_abs_y2: h.norm_sqr() * p + n0, e_abs_x2: p }
    }
}

/// `log(1 + |h̃|²P/σ̃²)` with LMMSE parameters.
pub fn gmi_forward_cscg(stats: &SecondOrderStats) -> Result<RateResult, GmiError> {
    if !(stats.e_abs_x2 > 0.0) {
        return Err(GmiError::Usage("forward GMI needs P > 0".into()));
    }
    let s2 = stats.sigma2_tilde();
    if !(s2 > 0.0) {
        return Err(NumError::Degenerate(format!("mismatch variance {s2} (infinite SNR)")).into());
    }
    let snr = stats.h_tilde().norm_sqr() * stats.e_abs_x2 / s2;
    Ok(RateResult::exact(snr.ln_1p(), stats.e_abs_x2))
}

/// GMI for a caller-chosen model `(h, σ²)` and Gallager parameter `s`.
pub fn gmi3(stats: &SecondOrderStats, h: Complex, sigma2: f64, s: f64) -> Result<f64, GmiError> {
    if !(sigma2 > 0.0 && s > 0.0) {
        return Err(GmiError::Usage("GMI model needs σ² > 0 and s > 0".into()));
    }
    let ns = sigma2 / s;
    let hp = h.norm_sqr() * stats.e_abs_x2;
    Ok((hp / ns).ln_1p() + stats.e_abs_y2 / (ns + hp) - stats.err2(h) / ns)
}

/// GMI with `σ²/s` tuned to a given `h`: `log(E|Y|² / E|Y − hX|²)`.
pub fn gmi3h(stats: &SecondOrderStats, h: Complex) -> Result<f64, GmiError> {
    let e = stats.err2(h);
    if !(stats.e_abs_y2 > e && e > 0.0) {
        return Err(GmiError::Usage("needs E|Y|² > E|Y − hX|² > 0".into()));
    }
    Ok((stats.e_abs_y2 / e).ln())
}

/// Statistics of one partition subset `E_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetStats {
    pub prob: f64,
    /// Moments conditioned on `E_k`.
    pub cond: SecondOrderStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxSubset {
    pub h: Complex,
    pub sigma2: f64,
}

/// Piecewise CSCG auxiliary model on a K-partition.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxModel {
    pub subsets: Vec<AuxSubset>,
    pub s: f64,
}

impl AuxModel {
    /// LMMSE parameters per subset.
    pub fn lmmse(stats: &[SubsetStats]) -> Self {
        let subsets = stats
            .iter()
            .map(|st| {
                let h = if st.cond.e_abs_x2 > 0.0 { st.cond.h_tilde() } else { Complex::new(0.0, 0.0) };
                AuxSubset { h, sigma2: (st.cond.e_abs_y2 - h.norm_sqr() * st.cond.e_abs_x2).max(VAR_FLOOR) }
            })
            .collect();
        Self { subsets, s: 1.0 }
    }
}

/// K-partition GMI with input power `p`.
pub fn gmi_k_partition(stats: &[SubsetStats], aux: &AuxModel, p: f64) -> Result<RateResult, GmiError> {
    if stats.len() != aux.subsets.len() || stats.is_empty() {
        return Err(GmiError::Usage("one auxiliary model per subset is required".into()));
    }
    let total: f64 = stats.iter().map(|s| s.prob).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(GmiError::Usage(format!("subset probabilities sum to {total}")));
    }
    let mut r = 0.0;
    for (st, m) in stats.iter().zip(&aux.subsets) {
        if st.prob <= 0.0 {
            return Err(GmiError::Usage("empty subset in the partition".into()));
        }
        let ns = m.sigma2 / aux.s;
        let hp = m.h.norm_sqr() * p;
        let err = st.cond.e_abs_y2 - 2.0 * (m.h.conj() * st.cond.e_yx_conj).re + m.h.norm_sqr() * st.cond.e_abs_x2;
        r += st.prob * ((hp / ns).ln_1p() + st.cond.e_abs_y2 / (ns + hp) - err / ns);
    }
    Ok(RateResult::exact(r, p))
}

/// Scenarios with closed-form K=2 subset moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum K2Scenario {
    /// On-off, no CSI, `X ~ CN(0, P)`, model `h_2 = √2`.
    OnOffNoCsi,
    /// On-off, full CSIT, no CSIR, `P(√2) = 2P`, model `h_2 X̄ = √(4P) U`.
    OnOffFullCsit,
    /// On-off, `S_T = S_R` flipped w.p. `eps`, powers `P(0)`, `P(√2)`.
    OnOffCsitAtR { eps: f64, p0: f64, p2: f64 },
    /// Rayleigh TCI with threshold `t`, no CSIR.
    RayleighTci { t: f64 },
}

/// One CSIR block of a K=2 computation: the output in the block is a
/// mixture of `CN(0, 1)` (weight `w0`) and `CN(0, 1 + a)` (weight `w1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K2Moments {
    pub block_prob: f64,
    pub a: f64,
    pub pr_e2: f64,
    /// `E[|Y|² | E_2]`.
    pub ey2: f64,
    /// `E[|Y − h_2 X̄|² | E_2]`.
    pub eerr: f64,
}

impl K2Moments {
    pub fn gmi(&self) -> f64 {
        if self.pr_e2 <= 0.0 {
            return 0.0;
        }
        self.block_prob * self.pr_e2 * (self.a.ln_1p() + self.ey2 / (1.0 + self.a) - self.eerr)
    }
}

fn two_point_moments(block_prob: f64, w0: f64, w1: f64, a: f64, t_r: f64, q: &Quadrature) -> Result<K2Moments, GmiError> {
    let e0 = (-t_r).exp();
    let e1 = (-t_r / (1.0 + a)).exp();
    let pr = w0 * e0 + w1 * e1;
    if pr <= 0.0 || a <= 0.0 {
        return Ok(K2Moments { block_prob, a, pr_e2: 0.0, ey2: 0.0, eerr: 0.0 });
    }
    let ey2 = (w0 * e0 * (t_r + 1.0) + w1 * e1 * (t_r + 1.0 + a)) / pr;
    let b = (2.0 * t_r / a).sqrt();
    let j = if w1 > 0.0 { integrate_exp_weighted(|g: f64| g * marcum_unchecked((2.0 * g / a).sqrt(), b), 0.0, f64::INFINITY, q)? } else { 0.0 };
    let eerr = (w0 * e0 * (t_r + 1.0 + a) + w1 * j) / pr;
    Ok(K2Moments { block_prob, a, pr_e2: pr, ey2, eerr })
}

/// Subset moments of `E_2 = {|Y|² >= t_R}` per CSIR block.
pub fn k2_subset_moments(scn: K2Scenario, p: f64, t_r: f64, q: &Quadrature) -> Result<Vec<K2Moments>, GmiError> {
    if !(p > 0.0 && t_r >= 0.0) {
        return Err(GmiError::Usage("K=2 moments need P > 0 and t_R >= 0".into()));
    }
    match scn {
        K2Scenario::OnOffNoCsi => Ok(vec![two_point_moments(1.0, 0.5, 0.5, 2.0 * p, t_r, q)?]),
        K2Scenario::OnOffFullCsit => Ok(vec![two_point_moments(1.0, 0.5, 0.5, 4.0 * p, t_r, q)?]),
        K2Scenario::OnOffCsitAtR { eps, p0, p2 } => {
            if !(0.0..=0.5).contains(&eps) {
                return Err(GmiError::Usage("flip ε must lie in [0, 1/2]".into()));
            }
            Ok(vec![
                two_point_moments(0.5, 1.0 - eps, eps, 2.0 * p0, t_r, q)?,
                two_point_moments(0.5, eps, 1.0 - eps, 2.0 * p2, t_r, q)?,
            ])
        }
        K2Scenario::RayleighTci { t } => {
            if !(t > 0.0) {
                return Err(GmiError::Usage("TCI needs t > 0".into()));
            }
            let p_hat = p / crate::specfun::e1(t);
            let w1 = (-t).exp();
            Ok(vec![two_point_moments(1.0, 1.0 - w1, w1, p_hat, t_r, q)?])
        }
    }
}

/// High-SNR threshold schedules `(t, t_R)`; `t` is only used by TCI.
pub fn k2_schedule(scn: K2Scenario, p: f64) -> (f64, f64) {
    match scn {
        K2Scenario::OnOffNoCsi => (0.0, p.powf(0.4) + 3.0),
        K2Scenario::OnOffFullCsit => (0.0, p.sqrt() + 3.0),
        K2Scenario::OnOffCsitAtR { .. } => (0.0, p.powf(0.4)),
        K2Scenario::RayleighTci { .. } => {
            let t = p.powf(-0.4);
            (t, (p / crate::specfun::e1(t)).powf(0.4))
        }
    }
}

/// Low-SNR TCI schedule `t = −log(P/c)`, `t_R = P̂`.
pub fn tci_low_snr_schedule(p: f64, c: f64) -> (f64, f64) {
    let t = -(p / c).ln();
    (t, p / crate::specfun::e1(t))
}

/// K=2 GMI summed over CSIR blocks.
pub fn gmi_k2(scn: K2Scenario, p: f64, t_r: f64, q: &Quadrature) -> Result<RateResult, GmiError> {
    let m = k2_subset_moments(scn, p, t_r, q)?;
    Ok(RateResult::exact(m.iter().map(|b| b.gmi()).sum::<f64>(), p))
}

/// Per-CSIR statistics used by the adaptive-symbol forward GMI.
#[derive(Debug, Clone, PartialEq)]
pub struct SrStats {
    pub prob: f64,
    pub s_r: CsiValue,
    /// `P̃(s_R)`.
    pub p_tilde: f64,
    /// `E[|Y|² | s_R]`.
    pub ey2: f64,
    /// `(Pr(s_T | s_R), |E[Y U(s_T)* | s_T, s_R]|)` per `s_T`.
    pub per_st: Vec<(f64, f64)>,
}

fn same_key(a: &CsiValue, b: &CsiValue) -> bool {
    match (a, b) {
        (CsiValue::Complex(x), CsiValue::Complex(y)) => (x - y).norm() <= 1e-12 * (1.0 + x.norm()),
        (CsiValue::Real(x), CsiValue::Real(y)) => (x - y).abs() <= 1e-12 * (1.0 + x.abs()),
        _ => a == b,
    }
}

/// `E[Y U(s_T)*|s_T, s_R] = E[H|s_T, s_R] √P(s_T)`; full CSIT removes the phase.
fn cross_term(csi: &CsiSpec, h: Complex) -> Complex {
    if csi.csit == Csit::FullH {
        Complex::new(h.norm(), 0.0)
    } else {
        h
    }
}

/// Second-order statistics per CSIR value for discrete laws.
pub fn adaptive_stats_discrete(law: &FadingLaw, csi: &CsiSpec, policy: &PowerPolicy) -> Result<Vec<SrStats>, GmiError> {
    let pts = law.points().ok_or_else(|| GmiError::Usage("discrete law expected".into()))?;
    // per s_R: (prob, Σ w g P, list of (s_T, prob, Σ w cross))
    let mut blocks: Vec<(CsiValue, f64, f64, Vec<(CsiValue, f64, Complex)>)> = Vec::new();
    for (h, w) in pts {
        for (p, st, sr) in csi_given_h(csi, law, Some(policy), h)? {
            let wt = w * p;
            let pw = policy.power(&st);
            let idx = match blocks.iter().position(|b| same_key(&b.0, &sr)) {
                Some(i) => i,
                None => {
                    blocks.push((sr, 0.0, 0.0, Vec::new()));
                    blocks.len() - 1
                }
            };
            let b = &mut blocks[idx];
            b.1 += wt;
            b.2 += wt * h.norm_sqr() * pw;
            let c = cross_term(csi, h) * wt;
            match b.3.iter_mut().find(|e| same_key(&e.0, &st)) {
                Some(e) => {
                    e.1 += wt;
                    e.2 += c;
                }
                None => b.3.push((st, wt, c)),
            }
        }
    }
    let mut out = Vec::new();
    for (sr, prob, egp, sts) in blocks {
        if prob <= 0.0 {
            continue;
        }
        let per_st: Vec<(f64, f64)> = sts
            .iter()
            .filter(|e| e.1 > 0.0)
            .map(|(st, pst, c)| (pst / prob, (c / pst).norm() * policy.power(st).max(0.0).sqrt()))
            .collect();
        let m: f64 = per_st.iter().map(|(p, a)| p * a).sum();
        out.push(SrStats { prob, s_r: sr, p_tilde: m * m, ey2: 1.0 + egp / prob, per_st });
    }
    Ok(out)
}

fn term(p_tilde: f64, ey2: f64) -> Result<f64, GmiError> {
    let den = ey2 - p_tilde;
    if den < -1e-9 * ey2 {
        return Err(GmiError::Consistency(format!("P̃ = {p_tilde} exceeds E|Y|² = {ey2}")));
    }
    Ok((p_tilde / den.max(VAR_FLOOR)).ln_1p())
}

/// Forward-model GMI for an adaptive symbol with CSIR and optimal phases.
pub fn gmi_adaptive_csir(law: &FadingLaw, csi: &CsiSpec, policy: &PowerPolicy, q: &Quadrature) -> Result<RateResult, GmiError> {
    let p_avg = policy.budget;
    if law.is_discrete() {
        let mut r = 0.0;
        for b in adaptive_stats_discrete(law, csi, policy)? {
            r += b.prob * term(b.p_tilde, b.ey2)?;
        }
        return Ok(RateResult::exact(r, p_avg));
    }
    let r = match csi.csir {
        Csir::FullHP => expect_states(law, csi, Some(policy), |h, st, _| (h.norm_sqr() * policy.power(st)).ln_1p(), q)?,
        Csir::FullH => {
            // S_R = H: per h the states s_T are those of csi_given_h
            let bad = std::cell::Cell::new(false);
            let b = crate::channel::breakpoints(csi, Some(policy));
            let mut s = 0.0;
            for w in b.windows(2) {
                s += integrate_exp_weighted(
                    |g: f64| {
                        let h = Complex::new(g.sqrt(), 0.0);
                        match csi_given_h(csi, law, Some(policy), h) {
                            Ok(list) => {
                                let m: f64 = list.iter().map(|(p, st, _)| p * (g * policy.power(st)).sqrt()).sum();
                                let e: f64 = list.iter().map(|(p, st, _)| p * g * policy.power(st)).sum();
                                match term(m * m, 1.0 + e) {
                                    Ok(v) => v,
                                    Err(_) => {
                                        bad.set(true);
                                        0.0
                                    }
                                }
                            }
                            Err(_) => f64::NAN,
                        }
                    },
                    w[0],
                    w[1],
                    q,
                )?;
            }
            if bad.get() {
                return Err(GmiError::Consistency("P̃ exceeds E|Y|² under full CSIR".into()));
            }
            s
        }
        Csir::LmmseEstimate(eps) => {
            let lo = policy.breakpoints().first().copied().unwrap_or(0.0);
            let eb = 1.0 - eps;
            integrate_exp_weighted(
                |k: f64| {
                    let st = match csi.csit {
                        Csit::EqualsSr => CsiValue::Complex(Complex::new(k.sqrt(), 0.0)),
                        Csit::FunctionOfSr(f) => f(&CsiValue::Complex(Complex::new(k.sqrt(), 0.0))),
                        _ => CsiValue::None,
                    };
                    let pw = policy.power(&st);
                    (eb * k * pw / (1.0 + eps * pw)).ln_1p()
                },
                lo,
                f64::INFINITY,
                q,
            )?
        }
        Csir::None | Csir::IndicatorGain(_) => {
            // Rayleigh phases are uniform unless the transmitter removes them
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
                let ind = |sr: &CsiValue| if *sr == sv { 1.0 } else { 0.0 };
                let egp = expect_states(law, csi, Some(policy), |h, st, sr| ind(sr) * h.norm_sqr() * policy.power(st), q)? / pr;
                let m = if csi.csit == Csit::FullH {
                    expect_states(law, csi, Some(policy), |h, st, sr| ind(sr) * (h.norm_sqr() * policy.power(st)).sqrt(), q)? / pr
                } else {
                    0.0
                };
                r += pr * term(m * m, 1.0 + egp)?;
            }
            r
        }
        Csir::NoisyFlip(_) => return Err(GmiError::Usage("flip CSIR needs a two-point law".into())),
    };
    Ok(RateResult::exact(r, p_avg))
}

/// Conditional moments of `U` given `|y|² = r` within one CSIR block:
/// `(|E[U|y]|², E[|U|²|y])`.
fn block_moments(comps: &[crate::channel::Component], r: f64) -> (f64, f64) {
    let mut wsum = 0.0;
    let mut m = Complex::new(0.0, 0.0);
    let mut eu2 = 0.0;
    // log-domain posterior weights
    let lmax = comps.iter().map(|c| c.w.ln() - r / c.var() - c.var().ln()).fold(f64::NEG_INFINITY, f64::max);
    for c in comps {
        let v = c.var();
        let pw = (c.w.ln() - r / v - v.ln() - lmax).exp();
        wsum += pw;
        if c.coherent {
            m += c.amp.conj() * (pw / v);
        }
        eu2 += pw * (1.0 / v + c.amp.norm_sqr() * r / (v * v));
    }
    (r * (m / wsum).norm_sqr(), eu2 / wsum)
}

fn block_expect<F: Fn(f64) -> f64>(blk: &SrBlock, f: F, q: &Quadrature) -> Result<f64, GmiError> {
    let mut s = 0.0;
    for c in &blk.comps {
        let v = c.var();
        s += c.w * integrate_exp_weighted(|x: f64| f(v * x), 0.0, f64::INFINITY, q)?;
    }
    Ok(s)
}

/// Reverse-model GMI `E[−log Var(U | Y, S_R)]`.
pub fn gmi_reverse(law: &FadingLaw, csi: &CsiSpec, policy: &PowerPolicy, q: &Quadrature) -> Result<RateResult, GmiError> {
    let blocks = output_mixture(law, csi, policy, MIXTURE_NODES)?;
    let mut total = 0.0;
    for blk in &blocks {
        let bad = std::cell::Cell::new(false);
        let v = block_expect(
            blk,
            |r| {
                let (m2, eu2) = block_moments(&blk.comps, r);
                let var = eu2 - m2;
                if var <= 0.0 {
                    bad.set(true);
                }
                -var.max(VAR_FLOOR).ln()
            },
            q,
        )?;
        if bad.get() {
            return Err(GmiError::Consistency("conditional variance of U is not positive".into()));
        }
        total += blk.prob * v;
    }
    Ok(RateResult::exact(total, policy.budget))
}

/// Forward GMI with one LMMSE model per output value (K = ∞).
pub fn gmi_kinf_forward(law: &FadingLaw, csi: &CsiSpec, policy: &PowerPolicy, q: &Quadrature) -> Result<RateResult, GmiError> {
    let blocks = output_mixture(law, csi, policy, MIXTURE_NODES)?;
    let mut total = 0.0;
    for blk in &blocks {
        let v = block_expect(
            blk,
            |r| {
                let (m2, eu2) = block_moments(&blk.comps, r);
                let var = (eu2 - m2).max(VAR_FLOOR);
                (m2 / (eu2 * var)).ln_1p() - m2 * (1.0 / eu2 - 1.0) / (var + m2 / eu2)
            },
            q,
        )?;
        total += blk.prob * v;
    }
    Ok(RateResult::exact(total, policy.budget))
}

/// `max(0, E[log(1 + GP)] − log(1 + Var(H) P))`.
pub fn caire_bound(law: &FadingLaw, p: f64, q: &Quadrature) -> Result<RateResult, GmiError> {
    let c = crate::power::log_gain_range(law, p, 0.0, f64::INFINITY, q)?;
    Ok(RateResult::exact((c - (law.var_h() * p).ln_1p()).max(0.0), p))
}

/// One subchannel of a product channel.
#[derive(Debug, Clone)]
pub struct ProductDim {
    pub law: FadingLaw,
    pub csi: CsiSpec,
    pub policy: PowerPolicy,
}

/// Sum of per-dimension adaptive GMIs for a diagonal (product) channel.
pub fn gmi_mimo_product(dims: &[ProductDim], q: &Quadrature) -> Result<RateResult, GmiError> {
    let mut r = 0.0;
    let mut p = 0.0;
    for d in dims {
        r += gmi_adaptive_csir(&d.law, &d.csi, &d.policy, q)?.nats;
        p += d.policy.budget;
    }
    Ok(RateResult::exact(r, p))
}

/// Vector GMI `log det(I + Q_Z̃⁻¹ H̃ Q_X H̃†)` from second-order statistics.
pub fn gmi_vector(q_y: &DMatrix<Complex64>, e_yx: &DMatrix<Complex64>, q_x: &DMatrix<Complex64>) -> Result<f64, GmiError> {
    let qx_inv = q_x.clone().try_inverse().ok_or_else(|| GmiError::Usage("Q_X must be invertible".into()))?;
    let h = e_yx * &qx_inv;
    let sig = &h * q_x * h.adjoint();
    let qz = q_y - &sig;
    let n = q_y.nrows();
    let qz_inv = qz.try_inverse().ok_or_else(|| NumError::Degenerate("Q_Z̃ is singular".into()))?;
    let m = DMatrix::<Complex64>::identity(n, n) + qz_inv * sig;
    let d = m.determinant();
    Ok(d.re.ln())
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Monte Carlo `I(A; Y | S_R)` for a CSCG adaptive symbol.
pub fn mi_monte_carlo(law: &FadingLaw, csi: &CsiSpec, policy: &PowerPolicy, n: u64, seed: u64) -> Result<RateResult, GmiError> {
    let blocks = output_mixture(law, csi, policy, MIXTURE_NODES)?;
    let cum: Vec<f64> = blocks
        .iter()
        .scan(0.0, |a, b| {
            *a += b.prob;
            Some(*a)
        })
        .collect();
    let pick = |u: f64, cum: &[f64]| cum.iter().position(|c| u < *c).unwrap_or(cum.len() - 1);
    let comp_cum: Vec<Vec<f64>> = blocks
        .iter()
        .map(|b| {
            b.comps
                .iter()
                .scan(0.0, |a, c| {
                    *a += c.w;
                    Some(*a)
                })
                .collect()
        })
        .collect();
    // per component: (log w − log v, 1/v, log w, |amp|)
    let pre: Vec<Vec<(f64, f64, f64, f64)>> = blocks
        .iter()
        .map(|b| b.comps.iter().map(|c| (c.w.ln() - c.var().ln(), 1.0 / c.var(), c.w.ln(), c.amp.norm())).collect())
        .collect();
    let est = mc_mean(
        |rng| {
            let bi = pick(rng.random::<f64>() * cum.last().copied().unwrap_or(1.0), &cum);
            let blk = &blocks[bi];
            let ci = pick(rng.random::<f64>(), &comp_cum[bi]);
            let c = blk.comps[ci];
            let u = cn(rng, 1.0);
            let amp = if c.coherent {
                c.amp
            } else {
                let th: f64 = rng.random::<f64>() * 2.0 * PI;
                c.amp * Complex::from_polar(1.0, th)
            };
            let y = amp * u + cn(rng, 1.0);
            let r = y.norm_sqr();
            // log p(y | u, s_R) − log p(y | s_R), both without the 1/π factor
            let (sr, un) = (r.sqrt(), u.norm());
            let mut num = Vec::with_capacity(blk.comps.len());
            let mut den = Vec::with_capacity(blk.comps.len());
            for (c, &(lwv, iv, lw, a)) in blk.comps.iter().zip(&pre[bi]) {
                den.push(lwv - r * iv);
                if c.coherent {
                    num.push(lw - (y - c.amp * u).norm_sqr());
                } else {
                    num.push(lw - (sr - a * un).powi(2));
                }
            }
            // i0e <= 1, so terms far below the largest cannot matter
            let top = num.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for ((x, c), pc) in num.iter_mut().zip(&blk.comps).zip(&pre[bi]) {
                if !c.coherent {
                    *x = if *x < top - 40.0 { f64::NEG_INFINITY } else { *x + i0e(2.0 * sr * pc.3 * un).ln() };
                }
            }
            log_sum_exp(&num) - log_sum_exp(&den)
        },
        n,
        seed,
    )?;
    Ok(RateResult::from_mc(est, policy.budget))
}

/// Monte Carlo `I(X; Y)` for flash input on a discrete law without CSI.
pub fn mi_monte_carlo_flash(law: &FadingLaw, flash_p: f64, p: f64, n: u64, seed: u64) -> Result<RateResult, GmiError> {
    let pts = law.points().ok_or_else(|| GmiError::Usage("flash MI needs a discrete law".into()))?;
    let input = crate::channel::FlashInput::new(flash_p, p)?;
    let zero = Complex::new(0.0, 0.0);
    let est = mc_mean(
        |rng| {
            let h = law.sample_h(rng);
            let x = input.sample(rng);
            let y = h * x + cn(rng, 1.0);
            let num: f64 = pts.iter().map(|(hh, w)| w * cscg_density(y, hh * x, 1.0)).sum();
            let den: f64 = pts
                .iter()
                .map(|(hh, w)| w * ((1.0 - flash_p) * cscg_density(y, zero, 1.0) + flash_p * cscg_density(y, zero, 1.0 + hh.norm_sqr() * p / flash_p)))
                .sum();
            (num / den).ln()
        },
        n,
        seed,
    )?;
    Ok(RateResult::from_mc(est, p))
}
