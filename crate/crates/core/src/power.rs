//! Power control policies and their optimizers.

use crate::channel::{CsiSpec, CsiValue, Csir, Csit, FadingLaw};
use crate::error::{GmiError, NumError};
use crate::gmi::RateResult;
use crate::numerics::{golden_max, integrate_exp_weighted, wideband_metrics};
use crate::Quadrature;
use crate::specfun::{e1, e1_scaled, gamma_upper, int_t2_over_tpy_sq, int_t_over_tpy, int_t_over_tpy_sq};
use crate::WidebandMetrics;

const KEY_TOL: f64 = 1e-9;

/// Estimate quality per CSI value: `g̃ = |E[H|s]|²`, `σ̃² = Var(H|s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimateStats {
    pub g_tilde: f64,
    pub sigma2: f64,
}

/// Law of the estimate statistics over `S_T` (which determines `S_R`).
#[derive(Debug, Clone, PartialEq)]
pub enum EstimateLaw {
    /// `(probability, key of s_T, stats)`.
    Discrete(Vec<(f64, f64, ChannelEstimateStats)>),
    /// Rayleigh with LMMSE CSIR `H = √(1−ε) S_R + √ε Z_R`, keyed by `|S_R|²`.
    RayleighLmmse { eps: f64 },
}

impl EstimateLaw {
    pub fn stats(&self, key: f64) -> Option<ChannelEstimateStats> {
        match self {
            EstimateLaw::Discrete(v) => v.iter().find(|(_, k, _)| (k - key).abs() <= KEY_TOL * (1.0 + key.abs())).map(|e| e.2),
            EstimateLaw::RayleighLmmse { eps } => Some(ChannelEstimateStats { g_tilde: (1.0 - eps) * key, sigma2: *eps }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    Constant,
    /// `P(g) = (1/λ − 1/g)^+`.
    Waterfill { lambda: f64 },
    /// Quadratic waterfilling on estimate statistics; `conventional` ignores `σ̃²`
    /// when setting powers.
    QuadWaterfill { lambda: f64, stats: EstimateLaw, conventional: bool },
    /// `P̂ g^a 1(g >= t)`.
    Heuristic { a: f64, t: f64, p_hat: f64 },
    /// `√P = α √g / (λ + β g)` for `g >= t`, else 0.
    Tmmse { alpha: f64, beta: f64, lambda: f64, t: f64 },
    /// Two-branch form for `S_R = 1(G >= t)`: index 0 for `g < t`, 1 otherwise.
    Branched { t: f64, alpha: [f64; 2], beta: [f64; 2], lambda: f64 },
    /// Powers by CSI key; unknown keys get 0.
    Tabulated(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerPolicy {
    pub kind: PolicyKind,
    pub budget: f64,
}

/// Quadratic waterfilling power for one state. With `s2 = 0` this is
/// exactly `(1/λ − 1/g)^+`.
pub fn quad_power(lambda: f64, g: f64, s2: f64) -> f64 {
    if !(g > 0.0) {
        return 0.0;
    }
    let c = (1.0 / lambda - 1.0 / g).max(0.0);
    if s2 == 0.0 || c == 0.0 {
        return c;
    }
    let d = g + 2.0 * s2;
    let x = 4.0 * s2 * c * g * (g + s2) / (d * d);
    2.0 * c * g / (d * ((1.0 + x).sqrt() + 1.0))
}

impl PowerPolicy {
    pub fn constant(p: f64) -> Self {
        Self { kind: PolicyKind::Constant, budget: p }
    }

    pub fn tabulated(table: Vec<(f64, f64)>, budget: f64) -> Self {
        Self { kind: PolicyKind::Tabulated(table), budget }
    }

    /// Heuristic `P̂ g^a 1(g >= t)` with `P̂` normalized for `law`.
    pub fn heuristic(law: &FadingLaw, a: f64, t: f64, p: f64, q: &Quadrature) -> Result<Self, GmiError> {
        let norm = gain_moment(law, a, t, f64::INFINITY, q)?;
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(NumError::Degenerate(format!("heuristic normalizer E[G^a 1(G>=t)] = {norm}")).into());
        }
        Ok(Self { kind: PolicyKind::Heuristic { a, t, p_hat: p / norm }, budget: p })
    }

    pub fn power_key(&self, k: f64) -> f64 {
        match &self.kind {
            PolicyKind::Constant => self.budget,
            PolicyKind::Waterfill { lambda } => quad_power(*lambda, k, 0.0),
            PolicyKind::QuadWaterfill { lambda, stats, conventional } => match stats.stats(k) {
                Some(s) => quad_power(*lambda, s.g_tilde, if *conventional { 0.0 } else { s.sigma2 }),
                None => 0.0,
            },
            PolicyKind::Heuristic { a, t, p_hat } => {
                if k < *t || (*a < 0.0 && k == 0.0) {
                    0.0
                } else {
                    p_hat * k.powf(*a)
                }
            }
            PolicyKind::Tmmse { alpha, beta, lambda, t } => {
                if k < *t {
                    0.0
                } else {
                    mmse_power(*alpha, *beta, *lambda, k)
                }
            }
            PolicyKind::Branched { t, alpha, beta, lambda } => {
                let i = usize::from(k >= *t);
                mmse_power(alpha[i], beta[i], *lambda, k)
            }
            PolicyKind::Tabulated(tab) => tab.iter().find(|(key, _)| (key - k).abs() <= KEY_TOL * (1.0 + k.abs())).map_or(0.0, |e| e.1),
        }
    }

    /// `P(s_T)`.
    pub fn power(&self, s: &CsiValue) -> f64 {
        self.power_key(s.key())
    }

    pub fn power_at_gain(&self, g: f64) -> f64 {
        self.power_key(g)
    }

    /// Gains where the policy is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PolicyKind::Waterfill { lambda } => vec![*lambda],
            PolicyKind::QuadWaterfill { lambda, stats: EstimateLaw::RayleighLmmse { eps }, .. } if *eps < 1.0 => vec![lambda / (1.0 - eps)],
            PolicyKind::Heuristic { t, .. } | PolicyKind::Tmmse { t, .. } | PolicyKind::Branched { t, .. } => vec![*t],
            _ => vec![],
        }
    }

    /// `P̂` of a heuristic policy; the budget for a constant policy.
    pub fn p_hat(&self) -> f64 {
        match &self.kind {
            PolicyKind::Heuristic { p_hat, .. } => *p_hat,
            PolicyKind::Constant => self.budget,
            _ => f64::NAN,
        }
    }

    /// `E[P(S_T)]`.
    pub fn average(&self, law: &FadingLaw, csi: &CsiSpec, q: &Quadrature) -> Result<f64, GmiError> {
        if let Csir::LmmseEstimate(_) = csi.csir {
            if matches!(csi.csit, Csit::None) {
                return Ok(self.power_key(0.0));
            }
            if csi.csit != Csit::EqualsSr {
                return Err(GmiError::Usage("LMMSE CSIR average needs S_T = S_R".into()));
            }
            let mut b = vec![0.0];
            b.extend(self.breakpoints());
            b.push(f64::INFINITY);
            let mut s = 0.0;
            for w in b.windows(2) {
                s += integrate_exp_weighted(|k| self.power_key(k), w[0], w[1], q)?;
            }
            return Ok(s);
        }
        Ok(crate::channel::expect_states(law, csi, Some(self), |_, st, _| self.power(st), q)?)
    }
}

fn mmse_power(alpha: f64, beta: f64, lambda: f64, g: f64) -> f64 {
    let den = lambda + beta * g;
    if g <= 0.0 || den <= 0.0 {
        return 0.0;
    }
    let a = alpha * g.sqrt() / den;
    a * a
}

/// `E[G^e 1(lo <= G < hi)]`; infinite if `e < 0` and mass sits at 0.
pub fn gain_moment(law: &FadingLaw, e: f64, lo: f64, hi: f64, q: &Quadrature) -> Result<f64, GmiError> {
    if hi <= lo {
        return Ok(0.0);
    }
    match law {
        FadingLaw::Rayleigh => {
            if e <= -1.0 && lo == 0.0 {
                return Ok(f64::INFINITY);
            }
            let up = |x: f64| -> Result<f64, GmiError> {
                if x.is_infinite() {
                    Ok(0.0)
                } else {
                    Ok(gamma_upper(e + 1.0, x)?)
                }
            };
            Ok(up(lo)? - up(hi)?)
        }
        _ => {
            let pts = law.points().unwrap();
            let mut s = 0.0;
            for (h, w) in pts {
                let g = h.norm_sqr();
                if g >= lo && g < hi && w > 0.0 {
                    if g == 0.0 && e < 0.0 {
                        return Ok(f64::INFINITY);
                    }
                    s += w * g.powf(e);
                }
            }
            let _ = q;
            Ok(s)
        }
    }
}

/// Bisection on the decreasing map `λ ↦ budget(λ)` in log space, seeded
/// from the no-fading solution `λ = 1/(1+P)`.
pub(crate) fn solve_lambda<F: Fn(f64) -> f64>(budget: F, p: f64) -> Result<f64, NumError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(NumError::Usage("power budget must be > 0".into()));
    }
    let seed = 1.0 / (1.0 + p);
    let (mut lo, mut hi) = (seed, seed);
    let mut k = 0;
    while !(budget(lo) >= p) {
        lo *= 0.5;
        k += 1;
        if k > 1000 {
            return Err(NumError::NoRoot { lo, hi: seed });
        }
    }
    k = 0;
    while budget(hi) > p {
        hi *= 2.0;
        k += 1;
        if k > 1000 {
            return Err(NumError::NoRoot { lo: seed, hi });
        }
    }
    for _ in 0..300 {
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if budget(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the side whose budget is closer
    let (bl, bh) = (budget(lo), budget(hi));
    Ok(if (bl - p).abs() <= (bh - p).abs() { lo } else { hi })
}

fn ln_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        x.ln_1p()
    } else {
        0.0
    }
}

/// `∫_x^∞ e^{-g} log(1 + g P) dg`.
pub(crate) fn rayleigh_log_tail(x: f64, p: f64) -> f64 {
    if x.is_infinite() || p <= 0.0 {
        return 0.0;
    }
    let ex = (-x).exp();
    ex * ln_or_zero(x * p) + ex * e1_scaled(x + 1.0 / p)
}

/// `E[log(1 + G P) 1(lo <= G < hi)]`.
pub(crate) fn log_gain_range(law: &FadingLaw, p: f64, lo: f64, hi: f64, q: &Quadrature) -> Result<f64, GmiError> {
    match law {
        FadingLaw::Rayleigh => Ok(rayleigh_log_tail(lo, p) - rayleigh_log_tail(hi, p)),
        _ => Ok(law.expect_gain_range(|g| ln_or_zero(g * p), lo, hi, q)?),
    }
}

/// `E[G/(1 + G P) 1(lo <= G < hi)]`.
pub(crate) fn ratio_gain_range(law: &FadingLaw, p: f64, lo: f64, hi: f64, q: &Quadrature) -> Result<f64, GmiError> {
    match law {
        FadingLaw::Rayleigh => {
            let tail = |x: f64| {
                if x.is_infinite() {
                    0.0
                } else if p == 0.0 {
                    (1.0 + x) * (-x).exp()
                } else {
                    int_t_over_tpy(x, 1.0 / p) / p
                }
            };
            Ok(tail(lo) - tail(hi))
        }
        _ => Ok(law.expect_gain_range(|g| g / (1.0 + g * p), lo, hi, q)?),
    }
}

fn waterfill_budget(law: &FadingLaw, lambda: f64, q: &Quadrature) -> f64 {
    match law {
        FadingLaw::Rayleigh => (-lambda).exp() / lambda - e1(lambda),
        _ => law.expect_gain_range(|g| quad_power(lambda, g, 0.0), 0.0, f64::INFINITY, q).unwrap_or(f64::NAN),
    }
}

/// Waterfilling on the gain (`S_T = G`, full CSIR).
pub fn waterfill(law: &FadingLaw, p: f64, q: &Quadrature) -> Result<(f64, PowerPolicy, RateResult), GmiError> {
    if !(p > 0.0) {
        return Err(NumError::Usage("waterfill needs P > 0".into()).into());
    }
    let lambda = match law {
        FadingLaw::Rayleigh => solve_lambda(|l| waterfill_budget(law, l, q), p)?,
        _ => {
            let est = EstimateLaw::Discrete(
                law.points()
                    .unwrap()
                    .into_iter()
                    .map(|(h, w)| (w, h.norm_sqr(), ChannelEstimateStats { g_tilde: h.norm_sqr(), sigma2: 0.0 }))
                    .collect(),
            );
            solve_lambda(|l| discrete_quad_budget(&est, l, false), p)?
        }
    };
    let cap = match law {
        FadingLaw::Rayleigh => e1(lambda),
        _ => law.expect_gain_range(|g| ln_or_zero(g * quad_power(lambda, g, 0.0)), 0.0, f64::INFINITY, q)?,
    };
    Ok((lambda, PowerPolicy { kind: PolicyKind::Waterfill { lambda }, budget: p }, RateResult::exact(cap, p)))
}

/// Rayleigh waterfilling closed forms at a given `λ`: `(P, C)`.
pub fn rayleigh_waterfill_at(lambda: f64) -> (f64, f64) {
    ((-lambda).exp() / lambda - e1(lambda), e1(lambda))
}

fn discrete_quad_budget(est: &EstimateLaw, lambda: f64, conventional: bool) -> f64 {
    match est {
        EstimateLaw::Discrete(v) => v.iter().map(|(w, _, s)| w * quad_power(lambda, s.g_tilde, if conventional { 0.0 } else { s.sigma2 })).sum(),
        _ => f64::NAN,
    }
}

/// Estimate statistics of `H` given `S_R` for a discrete law; `S_T = S_R`.
pub fn estimate_law(law: &FadingLaw, csi: &CsiSpec) -> Result<EstimateLaw, GmiError> {
    if let Csir::LmmseEstimate(eps) = csi.csir {
        if *law != FadingLaw::Rayleigh {
            return Err(GmiError::Usage("LMMSE CSIR is defined for Rayleigh fading".into()));
        }
        return Ok(EstimateLaw::RayleighLmmse { eps });
    }
    let pts = law.points().ok_or_else(|| GmiError::Usage("estimate statistics need a discrete law or LMMSE CSIR".into()))?;
    // (prob, key, Σ w h, Σ w |h|²)
    let mut acc: Vec<(f64, f64, crate::channel::Complex, f64)> = Vec::new();
    for (h, w) in pts {
        let sub = CsiSpec { csir: csi.csir, csit: Csit::None };
        for (p, _, sr) in crate::channel::csi_given_h(&sub, law, None, h)? {
            let k = sr.key();
            let wt = w * p;
            match acc.iter_mut().find(|e| (e.1 - k).abs() <= KEY_TOL * (1.0 + k.abs())) {
                Some(e) => {
                    e.0 += wt;
                    e.2 += h * wt;
                    e.3 += wt * h.norm_sqr();
                }
                None => acc.push((wt, k, h * wt, wt * h.norm_sqr())),
            }
        }
    }
    Ok(EstimateLaw::Discrete(
        acc.into_iter()
            .filter(|e| e.0 > 0.0)
            .map(|(p, k, m, g)| {
                let gt = (m / p).norm_sqr();
                (p, k, ChannelEstimateStats { g_tilde: gt, sigma2: (g / p - gt).max(0.0) })
            })
            .collect(),
    ))
}

fn lmmse_budget(eps: f64, lambda: f64, conventional: bool, q: &Quadrature) -> f64 {
    let eb = 1.0 - eps;
    if eb <= 0.0 {
        return 0.0;
    }
    let s2 = if conventional { 0.0 } else { eps };
    integrate_exp_weighted(|k| quad_power(lambda, eb * k, s2), lambda / eb, f64::INFINITY, q).unwrap_or(f64::NAN)
}

fn quad_rate(est: &EstimateLaw, pol: &PowerPolicy, q: &Quadrature) -> Result<f64, GmiError> {
    let term = |s: ChannelEstimateStats, p: f64| ln_or_zero(s.g_tilde * p / (1.0 + s.sigma2 * p));
    match est {
        EstimateLaw::Discrete(v) => Ok(v.iter().map(|(w, k, s)| w * term(*s, pol.power_key(*k))).sum()),
        EstimateLaw::RayleighLmmse { .. } => {
            let lo = pol.breakpoints().first().copied().unwrap_or(0.0);
            Ok(integrate_exp_weighted(|k| term(est.stats(k).unwrap(), pol.power_key(k)), lo, f64::INFINITY, q)?)
        }
    }
}

fn quad_waterfill_impl(est: &EstimateLaw, p: f64, q: &Quadrature, conventional: bool) -> Result<(f64, PowerPolicy, RateResult), GmiError> {
    let lambda = match est {
        EstimateLaw::Discrete(_) => solve_lambda(|l| discrete_quad_budget(est, l, conventional), p)?,
        EstimateLaw::RayleighLmmse { eps } => solve_lambda(|l| lmmse_budget(*eps, l, conventional, q), p)?,
    };
    let pol = PowerPolicy { kind: PolicyKind::QuadWaterfill { lambda, stats: est.clone(), conventional }, budget: p };
    let rate = quad_rate(est, &pol, q)?;
    Ok((lambda, pol, RateResult::exact(rate, p)))
}

/// Quadratic waterfilling for CSIT@R with estimate statistics per state; the
/// rate is `E[log(1 + g̃P/(1 + σ̃²P))]`.
pub fn quad_waterfill(est: &EstimateLaw, p: f64, q: &Quadrature) -> Result<(f64, PowerPolicy, RateResult), GmiError> {
    quad_waterfill_impl(est, p, q, false)
}

/// Powers from conventional waterfilling on `g̃`, rate with the true `σ̃²`.
pub fn quad_waterfill_conventional(est: &EstimateLaw, p: f64, q: &Quadrature) -> Result<(f64, PowerPolicy, RateResult), GmiError> {
    quad_waterfill_impl(est, p, q, true)
}

/// One-bit gain quantizer cells with report flips.
fn cell_weights(eps: f64) -> [(f64, f64); 2] {
    // (weight for g < Δ, weight for g >= Δ)
    [(1.0 - eps, eps), (eps, 1.0 - eps)]
}

/// Powers for one-bit quantized CSIT (`Δ`, report flip `ε`) with full CSIR.
/// The policy is tabulated on the labels `Δ/2`, `3Δ/2`.
pub fn quantized_csit_powers(law: &FadingLaw, delta: f64, p: f64, eps: f64, q: &Quadrature) -> Result<(f64, PowerPolicy), GmiError> {
    if !(delta > 0.0) {
        return Err(NumError::Usage("quantizer Δ must be > 0".into()).into());
    }
    if !(0.0..=0.5).contains(&eps) {
        return Err(NumError::Usage("flip ε must lie in [0, 1/2]".into()).into());
    }
    let cw = cell_weights(eps);
    let j = |s: usize, ps: f64| -> f64 {
        let a = ratio_gain_range(law, ps, 0.0, delta, q).unwrap_or(f64::NAN);
        let b = ratio_gain_range(law, ps, delta, f64::INFINITY, q).unwrap_or(f64::NAN);
        cw[s].0 * a + cw[s].1 * b
    };
    let below = law.expect_gain_range(|_| 1.0, 0.0, delta, q)?;
    let pst = [cw[0].0 * below + cw[0].1 * (1.0 - below), cw[1].0 * below + cw[1].1 * (1.0 - below)];
    let cell_power = |s: usize, lambda: f64| -> f64 {
        if pst[s] <= 0.0 || j(s, 0.0) / pst[s] <= lambda {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0 / lambda);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if j(s, mid) / pst[s] > lambda {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let budget = |l: f64| pst[0] * cell_power(0, l) + pst[1] * cell_power(1, l);
    let lambda = solve_lambda(budget, p)?;
    let p0 = cell_power(0, lambda);
    let p1 = cell_power(1, lambda);
    Ok((lambda, PowerPolicy::tabulated(vec![(0.5 * delta, p0), (1.5 * delta, p1)], p)))
}

/// `E[log(1 + G P(S_T))]` for one-bit quantized CSIT and full CSIR.
pub fn quantized_csit_capacity(law: &FadingLaw, delta: f64, eps: f64, pol: &PowerPolicy, q: &Quadrature) -> Result<RateResult, GmiError> {
    let cw = cell_weights(eps);
    let mut c = 0.0;
    for (s, label) in [0.5 * delta, 1.5 * delta].iter().enumerate() {
        let ps = pol.power_key(*label);
        c += cw[s].0 * log_gain_range(law, ps, 0.0, delta, q)? + cw[s].1 * log_gain_range(law, ps, delta, f64::INFINITY, q)?;
    }
    Ok(RateResult::exact(c, pol.budget))
}

/// Per-CSIR-cell moments of a heuristic policy: `(Pr, E[√(G^{1+a})|cell], E[G^{1+a}|cell])`
/// restricted to `G >= t`.
fn heuristic_cells(law: &FadingLaw, csir: Csir, a: f64, t: f64, q: &Quadrature) -> Result<Vec<(f64, f64, f64)>, GmiError> {
    let cells: Vec<(f64, f64)> = match csir {
        Csir::None => vec![(0.0, f64::INFINITY)],
        Csir::IndicatorGain(tr) => vec![(0.0, tr), (tr, f64::INFINITY)],
        _ => return Err(GmiError::Usage("heuristic policies take CSIR none or 1(G >= t)".into())),
    };
    let mut out = Vec::new();
    for (lo, hi) in cells {
        let pr = gain_moment(law, 0.0, lo, hi, q)?;
        if pr <= 0.0 {
            continue;
        }
        let l = lo.max(t);
        let m = gain_moment(law, 0.5 * (1.0 + a), l, hi, q)? / pr;
        let v = gain_moment(law, 1.0 + a, l, hi, q)? / pr;
        out.push((pr, m, v));
    }
    Ok(out)
}

/// Forward GMI with full CSIT and CSIR none or `1(G >= t_R)` for a heuristic
/// policy `P̂ g^a 1(g >= t)`, with its wideband metrics.
pub fn heuristic_policy(law: &FadingLaw, csir: Csir, a: f64, t: f64, p: f64, q: &Quadrature) -> Result<(PowerPolicy, RateResult, WidebandMetrics), GmiError> {
    let pol = PowerPolicy::heuristic(law, a, t, p, q)?;
    let norm = p / pol.p_hat();
    let cells = heuristic_cells(law, csir, a, t, q)?;
    let rate_at = |pp: f64| -> f64 {
        let ph = pp / norm;
        cells.iter().map(|(pr, m, v)| pr * ln_or_zero(ph * m * m / (1.0 + ph * (v - m * m).max(0.0)))).sum()
    };
    let rate = rate_at(p);
    let wb = wideband_metrics(rate_at, 1e-3);
    Ok((pol, RateResult::exact(rate, p), wb))
}

/// Rayleigh TMMSE integrals over `[t, ∞)` for `√P = √g/(b + g)`:
/// `(E[P], E[√(GP)], E[G P])`.
fn tmmse_integrals(law: &FadingLaw, b: f64, lo: f64, hi: f64, q: &Quadrature) -> Result<(f64, f64, f64), GmiError> {
    if hi <= lo {
        return Ok((0.0, 0.0, 0.0));
    }
    match law {
        FadingLaw::Rayleigh => {
            let tail = |x: f64| {
                if x.is_infinite() {
                    (0.0, 0.0, 0.0)
                } else {
                    (int_t_over_tpy_sq(x, b), int_t_over_tpy(x, b), int_t2_over_tpy_sq(x, b))
                }
            };
            let (a0, a1, a2) = tail(lo);
            let (b0, b1, b2) = tail(hi);
            Ok((a0 - b0, a1 - b1, a2 - b2))
        }
        _ => Ok((
            law.expect_gain_range(|g| g / ((b + g) * (b + g)), lo, hi, q)?,
            law.expect_gain_range(|g| g / (b + g), lo, hi, q)?,
            law.expect_gain_range(|g| g * g / ((b + g) * (b + g)), lo, hi, q)?,
        )),
    }
}

/// TMMSE GMI for `√P = α√g/(b+g)·1(g >= t)` with `α` set by the budget.
fn tmmse_rate(law: &FadingLaw, csir: Csir, b: f64, t: f64, p: f64, q: &Quadrature) -> Result<(f64, f64), GmiError> {
    let (i4, _, _) = tmmse_integrals(law, b, t, f64::INFINITY, q)?;
    if !(i4 > 0.0) {
        return Ok((0.0, 0.0));
    }
    let a2 = p / i4;
    let cells: Vec<(f64, f64)> = match csir {
        Csir::None => vec![(0.0, f64::INFINITY)],
        Csir::IndicatorGain(tr) => vec![(0.0, tr), (tr, f64::INFINITY)],
        _ => return Err(GmiError::Usage("TMMSE takes CSIR none or 1(G >= t)".into())),
    };
    let mut r = 0.0;
    for (lo, hi) in cells {
        let pr = gain_moment(law, 0.0, lo, hi, q)?;
        if pr <= 0.0 {
            continue;
        }
        let (_, m, v) = tmmse_integrals(law, b, lo.max(t), hi, q)?;
        let (m, v) = (a2.sqrt() * m / pr, a2 * v / pr);
        r += pr * ln_or_zero(m * m / (1.0 + (v - m * m).max(0.0)));
    }
    Ok((r, a2.sqrt()))
}

/// TMMSE search over `(b, t)` with `√P = α√g/(b + g)`; for `S_R = 1(G >= t)`
/// the truncation equals the CSIR threshold.
pub fn tmmse_optimize(law: &FadingLaw, csir: Csir, p: f64, q: &Quadrature) -> Result<(PowerPolicy, RateResult), GmiError> {
    if !(p > 0.0) {
        return Err(NumError::Usage("TMMSE needs P > 0".into()).into());
    }
    let ts: Vec<f64> = match csir {
        Csir::None => (0..32).map(|i| 3.0 * i as f64 / 31.0).collect(),
        Csir::IndicatorGain(t) => vec![t],
        _ => return Err(GmiError::Usage("TMMSE takes CSIR none or 1(G >= t)".into())),
    };
    let lb = |i: usize| -6.0 + 12.0 * i as f64 / 31.0;
    let f = |lnb: f64, t: f64| tmmse_rate(law, csir, 10f64.powf(lnb), t, p, q).map(|x| x.0).unwrap_or(f64::NEG_INFINITY);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &t in &ts {
        for i in 0..32 {
            let v = f(lb(i), t);
            if v > best.0 {
                best = (v, lb(i), t);
            }
        }
    }
    let step_b = 12.0 / 31.0;
    let step_t = if ts.len() > 1 { ts[1] - ts[0] } else { 0.0 };
    let (mut lnb, mut t) = (best.1, best.2);
    for _ in 0..4 {
        lnb = golden_max(|x| f(x, t), lnb - step_b, lnb + step_b, 1e-7).0;
        if step_t > 0.0 {
            t = golden_max(|x| f(lnb, x), (t - step_t).max(0.0), t + step_t, 1e-7).0;
        }
    }
    let (mut r, _) = tmmse_rate(law, csir, 10f64.powf(lnb), t, p, q)?;
    if r < best.0 {
        lnb = best.1;
        t = best.2;
        r = best.0;
    }
    let b = 10f64.powf(lnb);
    let (_, alpha) = tmmse_rate(law, csir, b, t, p, q)?;
    let pol = PowerPolicy { kind: PolicyKind::Tmmse { alpha, beta: 1.0, lambda: b, t }, budget: p };
    Ok((pol, RateResult::exact(r, p)))
}

/// Per-cell `(Pr, P̃, E|Y|²)` of a full-CSIT policy for CSIR none / `1(G >= t)`.
fn policy_cell_stats(law: &FadingLaw, csir: Csir, pol: &PowerPolicy, q: &Quadrature) -> Result<Vec<(f64, f64, f64)>, GmiError> {
    let cells: Vec<(f64, f64)> = match csir {
        Csir::None => vec![(0.0, f64::INFINITY)],
        Csir::IndicatorGain(t) => vec![(0.0, t), (t, f64::INFINITY)],
        _ => return Err(GmiError::Usage("unsupported CSIR for the optimal policy".into())),
    };
    let mut out = Vec::new();
    for (lo, hi) in cells {
        let pr = gain_moment(law, 0.0, lo, hi, q)?;
        if pr <= 0.0 {
            out.push((0.0, 0.0, 1.0));
            continue;
        }
        let m = expect_piecewise(law, |g| (g * pol.power_key(g)).sqrt(), lo, hi, pol, q)? / pr;
        let v = expect_piecewise(law, |g| g * pol.power_key(g), lo, hi, pol, q)? / pr;
        out.push((pr, m * m, 1.0 + v));
    }
    Ok(out)
}

fn expect_piecewise<F: Fn(f64) -> f64>(law: &FadingLaw, f: F, lo: f64, hi: f64, pol: &PowerPolicy, q: &Quadrature) -> Result<f64, GmiError> {
    let mut b = vec![lo];
    b.extend(pol.breakpoints().into_iter().filter(|x| *x > lo && *x < hi));
    b.push(hi);
    let mut s = 0.0;
    for w in b.windows(2) {
        s += law.expect_gain_range(&f, w[0], w[1], q)?;
    }
    Ok(s)
}

fn gmi_from_cells(cells: &[(f64, f64, f64)]) -> f64 {
    cells.iter().map(|(pr, pt, ey2)| pr * ln_or_zero(pt / (ey2 - pt).max(1e-300))).sum()
}

/// Fixed point of the GMI-optimal full-CSIT policy `√P(h) = α|h|/(λ + β|h|²)`
/// for CSIR none or `1(G >= t)`, where `α, β` depend on `s_R` only.
pub fn optimal_policy_fixed_point(law: &FadingLaw, csir: Csir, p: f64, q: &Quadrature, damping: f64, max_iter: usize) -> Result<(PowerPolicy, RateResult), GmiError> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(GmiError::Usage("damping must lie in (0, 1]".into()));
    }
    let t = match csir {
        Csir::None => f64::INFINITY,
        Csir::IndicatorGain(t) => t,
        _ => return Err(GmiError::Usage("optimal policy is implemented for CSIR none or 1(G >= t)".into())),
    };
    let calibrate = |alpha: [f64; 2], beta: [f64; 2]| -> Result<PowerPolicy, GmiError> {
        let mk = |l: f64| PowerPolicy { kind: PolicyKind::Branched { t, alpha, beta, lambda: l }, budget: p };
        let lambda = solve_lambda(|l| mk(l).average_gain_law(law, q).unwrap_or(f64::NAN), p)?;
        Ok(mk(lambda))
    };
    // start from TMF in both branches
    let mut pol = calibrate([1.0, 1.0], [0.0, 0.0])?;
    let mut d = damping;
    let mut last_change = f64::INFINITY;
    for _ in 0..max_iter {
        let cells = policy_cell_stats(law, csir, &pol, q)?;
        let coef = |i: usize| -> (f64, f64) {
            let (_, pt, ey2) = cells[i.min(cells.len() - 1)];
            if pt <= 0.0 {
                return (0.0, 0.0);
            }
            let den = (ey2 - pt).max(1e-300);
            (pt.sqrt() / den, pt / (den * ey2))
        };
        let (a0, b0) = coef(0);
        let (a1, b1) = if cells.len() > 1 { coef(1) } else { coef(0) };
        let (oa, ob) = match &pol.kind {
            PolicyKind::Branched { alpha, beta, .. } => (*alpha, *beta),
            _ => unreachable!(),
        };
        let mix = |old: f64, new: f64| (1.0 - d) * old + d * new;
        let na = [mix(oa[0], a0), mix(oa[1], a1)];
        let nb = [mix(ob[0], b0), mix(ob[1], b1)];
        let next = calibrate(na, nb)?;
        let change = sup_change(&pol, &next);
        if change > last_change * 1.5 {
            d = (d * 0.5).max(1e-3);
        }
        last_change = change;
        pol = next;
        if change < 1e-8 {
            let cells = policy_cell_stats(law, csir, &pol, q)?;
            let r = gmi_from_cells(&cells);
            let pol = if t.is_infinite() {
                match pol.kind {
                    PolicyKind::Branched { alpha, beta, lambda, .. } => PowerPolicy { kind: PolicyKind::Tmmse { alpha: alpha[0], beta: beta[0], lambda, t: 0.0 }, budget: p },
                    _ => unreachable!(),
                }
            } else {
                pol
            };
            return Ok((pol, RateResult::exact(r, p)));
        }
    }
    Err(GmiError::NoConvergence(format!("optimal policy fixed point after {max_iter} iterations (last change {last_change:e})")))
}

fn sup_change(a: &PowerPolicy, b: &PowerPolicy) -> f64 {
    // compare √P on a log-spaced gain grid
    (0..200)
        .map(|i| 10f64.powf(-4.0 + 7.0 * i as f64 / 199.0))
        .map(|g| (a.power_key(g).sqrt() - b.power_key(g).sqrt()).abs())
        .fold(0.0, f64::max)
}

impl PowerPolicy {
    /// `E[P(G)]` for a policy keyed by the gain.
    pub fn average_gain_law(&self, law: &FadingLaw, q: &Quadrature) -> Result<f64, GmiError> {
        expect_piecewise(law, |g| self.power_key(g), 0.0, f64::INFINITY, self, q)
    }
}

/// Selects the on-off partial-CSIT policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OofMode {
    /// `S_R = H√P(S_T)`: waterfilling on the flip-noisy report.
    BestCsir,
    /// `S_R = H`: maximize the forward GMI.
    ForwardGmi,
}

/// On-off fading with CSIT flipped w.p. `ε`: `(P(0), P(2), rate in nats)`.
pub fn oof_partial_csit_powers(eps: f64, p: f64, mode: OofMode) -> Result<(f64, f64, f64), GmiError> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(NumError::Usage("flip ε must lie in [0, 1/2]".into()).into());
    }
    if !(p >= 0.0) {
        return Err(NumError::Usage("P must be >= 0".into()).into());
    }
    let eb = 1.0 - eps;
    match mode {
        OofMode::BestCsir => {
            let p0 = (2.0 * eps * p - 0.5 * (eb - eps)).max(0.0);
            let p2 = 2.0 * p - p0;
            let r = 0.5 * (eb * ln_or_zero(2.0 * p2) + eps * ln_or_zero(2.0 * p0));
            Ok((p0, p2, r))
        }
        OofMode::ForwardGmi => {
            let rate = |th: f64| {
                let (s0, s2) = ((2.0 * p).sqrt() * th.sin(), (2.0 * p).sqrt() * th.cos());
                let snr = 2.0 * (eps * s0 + eb * s2).powi(2) / (1.0 + 2.0 * eps * eb * (s2 - s0).powi(2));
                0.5 * ln_or_zero(snr)
            };
            let (th, r) = golden_max(rate, 0.0, std::f64::consts::FRAC_PI_4, 1e-12);
            let (th, r) = if rate(0.0) >= r { (0.0, rate(0.0)) } else { (th, r) };
            Ok((2.0 * p * th.sin().powi(2), 2.0 * p * th.cos().powi(2), r))
        }
    }
}
