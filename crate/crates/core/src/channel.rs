//! Fading laws, CSI maps, the gain quantizer, sampling and output densities.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::ChannelError;
use crate::numerics::{gauss_legendre, integrate_exp_weighted};
use crate::Quadrature;
use crate::power::PowerPolicy;
use crate::specfun::i0e;

pub type Complex = Complex64;

const SUM_TOL: f64 = 1e-9;

/// Distribution of the fading coefficient `H`, normalized to `E|H|² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum FadingLaw {
    /// `H ∈ {0, √2}` with probability ½ each.
    OnOff,
    /// `H ~ CN(0, 1)`.
    Rayleigh,
    DiscreteGrid(Vec<(Complex, f64)>),
}

impl FadingLaw {
    pub fn discrete(points: Vec<(Complex, f64)>) -> Result<Self, ChannelError> {
        if points.is_empty() {
            return Err(ChannelError::Domain("empty fading grid".into()));
        }
        if points.iter().any(|(h, p)| !(p.is_finite() && *p >= 0.0) || !h.norm_sqr().is_finite()) {
            return Err(ChannelError::Domain("grid probabilities must be finite and nonnegative".into()));
        }
        let total: f64 = points.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(ChannelError::Domain(format!("grid probabilities sum to {total}")));
        }
        let eg: f64 = points.iter().map(|(h, p)| p * h.norm_sqr()).sum();
        if (eg - 1.0).abs() > SUM_TOL {
            return Err(ChannelError::Domain(format!("E|H|^2 = {eg}, expected 1")));
        }
        Ok(FadingLaw::DiscreteGrid(points))
    }

    /// Support points for discrete laws.
    pub fn points(&self) -> Option<Vec<(Complex, f64)>> {
        match self {
            FadingLaw::OnOff => Some(vec![(Complex::new(0.0, 0.0), 0.5), (Complex::new(SQRT_2, 0.0), 0.5)]),
            FadingLaw::Rayleigh => None,
            FadingLaw::DiscreteGrid(p) => Some(p.clone()),
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, FadingLaw::Rayleigh)
    }

    pub fn mean_h(&self) -> Complex {
        match self.points() {
            Some(p) => p.iter().map(|(h, w)| h * *w).sum(),
            None => Complex::new(0.0, 0.0),
        }
    }

    /// `Var(H) = E|H|² − |E H|²`.
    pub fn var_h(&self) -> f64 {
        1.0 - self.mean_h().norm_sqr()
    }

    /// `E[f(G) 1(lo <= G < hi)]`.
    pub fn expect_gain_range<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64, q: &Quadrature) -> Result<f64, ChannelError> {
        match self.points() {
            Some(p) => Ok(p
                .iter()
                .filter(|(h, _)| {
                    let g = h.norm_sqr();
                    g >= lo && g < hi
                })
                .map(|(h, w)| w * f(h.norm_sqr()))
                .sum()),
            None => Ok(integrate_exp_weighted(f, lo.max(0.0), hi, q)?),
        }
    }

    /// `E[f(G)]`.
    pub fn expect_gain<F: Fn(f64) -> f64>(&self, f: F, q: &Quadrature) -> Result<f64, ChannelError> {
        self.expect_gain_range(f, 0.0, f64::INFINITY, q)
    }

    pub fn sample_h(&self, rng: &mut ChaCha8Rng) -> Complex {
        match self {
            FadingLaw::Rayleigh => cn(rng, 1.0),
            _ => {
                let p = self.points().unwrap();
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (h, w) in &p {
                    acc += w;
                    if u < acc {
                        return *h;
                    }
                }
                p.last().unwrap().0
            }
        }
    }
}

/// Draw from `CN(0, var)`.
pub fn cn(rng: &mut ChaCha8Rng, var: f64) -> Complex {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(s * re, s * im)
}

/// Quantizer resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bits {
    Zero,
    One,
    Inf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Csir {
    None,
    FullH,
    /// `S_R = H √P(S_T)`; needs a policy at draw time.
    FullHP,
    /// `S_R = 1(G >= t)`.
    IndicatorGain(f64),
    /// Two-point laws: `S_R = H` w.p. `1−ε`, the other point w.p. `ε`.
    NoisyFlip(f64),
    /// Rayleigh: `H = √(1−ε) S_R + √ε Z_R` with `S_R, Z_R ~ CN(0,1)`.
    LmmseEstimate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(unpredictable_function_pointer_comparisons)]
pub enum Csit {
    None,
    /// Quantized gain; with `flip > 0` the reported cell is the other one
    /// with that probability (one-bit quantizer only).
    QuantGain { bits: Bits, delta: f64, flip: f64 },
    FullH,
    NoisyFlip(f64),
    EqualsSr,
    FunctionOfSr(fn(&CsiValue) -> CsiValue),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiSpec {
    pub csir: Csir,
    pub csit: Csit,
}

impl CsiSpec {
    pub fn new(csir: Csir, csit: Csit) -> Result<Self, ChannelError> {
        let eps_ok = |e: f64, hi: f64| e.is_finite() && (0.0..=hi).contains(&e);
        match csir {
            Csir::NoisyFlip(e) if !eps_ok(e, 0.5) => return Err(ChannelError::Domain("CSIR flip ε must lie in [0, 1/2]".into())),
            Csir::LmmseEstimate(e) if !eps_ok(e, 1.0) => return Err(ChannelError::Domain("LMMSE ε must lie in [0, 1]".into())),
            Csir::IndicatorGain(t) if !(t.is_finite() && t >= 0.0) => return Err(ChannelError::Domain("indicator threshold must be >= 0".into())),
            _ => {}
        }
        match csit {
            Csit::NoisyFlip(e) if !eps_ok(e, 0.5) => return Err(ChannelError::Domain("CSIT flip ε must lie in [0, 1/2]".into())),
            Csit::QuantGain { delta, flip, bits } => {
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(ChannelError::Domain("quantizer Δ must be > 0".into()));
                }
                if !eps_ok(flip, 0.5) || (flip > 0.0 && bits != Bits::One) {
                    return Err(ChannelError::Domain("quantizer flip needs B = 1 and ε in [0, 1/2]".into()));
                }
            }
            _ => {}
        }
        if csir == Csir::FullHP && matches!(csit, Csit::EqualsSr | Csit::FunctionOfSr(_)) {
            return Err(ChannelError::Usage("S_R = H√P(S_T) cannot also determine S_T".into()));
        }
        Ok(Self { csir, csit })
    }

    pub fn none() -> Self {
        Self { csir: Csir::None, csit: Csit::None }
    }

    fn threshold_points(&self) -> Vec<f64> {
        let mut v = Vec::new();
        if let Csir::IndicatorGain(t) = self.csir {
            v.push(t);
        }
        if let Csit::QuantGain { bits: Bits::One, delta, .. } = self.csit {
            v.push(delta);
        }
        v
    }
}

/// A CSI realization, tagged so discrete values can be bucketed exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CsiValue {
    None,
    Real(f64),
    Complex(Complex),
}

impl CsiValue {
    /// Key used by tabulated policies: the label for real values and the
    /// gain `|s|²` for complex values.
    pub fn key(&self) -> f64 {
        match self {
            CsiValue::None => 0.0,
            CsiValue::Real(x) => *x,
            CsiValue::Complex(h) => h.norm_sqr(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw {
    pub h: Complex,
    pub g: f64,
    pub s_r: CsiValue,
    pub s_t: CsiValue,
}

/// Uniform one-bit (or trivial / identity) gain quantizer. Returns the
/// reconstruction label and the cell `[lo, hi)`.
pub fn quantize_gain(g: f64, bits: Bits, delta: f64) -> Result<(f64, (f64, f64)), ChannelError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ChannelError::Domain("quantizer Δ must be > 0".into()));
    }
    if !(g >= 0.0) {
        return Err(ChannelError::Domain("gain must be >= 0".into()));
    }
    Ok(match bits {
        Bits::Zero => (delta / 2.0, (0.0, f64::INFINITY)),
        Bits::One if g < delta => (delta / 2.0, (0.0, delta)),
        Bits::One => (1.5 * delta, (delta, f64::INFINITY)),
        Bits::Inf => (g, (g, g)),
    })
}

fn other_point(law: &FadingLaw, h: Complex) -> Result<Complex, ChannelError> {
    let pts = law.points().filter(|p| p.len() == 2).ok_or_else(|| ChannelError::Usage("noisy flip needs a two-point fading law".into()))?;
    Ok(if (pts[0].0 - h).norm() < 1e-12 { pts[1].0 } else { pts[0].0 })
}

/// Distribution of `(S_T, S_R)` given `H = h` as weighted pairs.
///
/// Not available for LMMSE CSIR, where `H` is drawn from `S_R`.
pub fn csi_given_h(csi: &CsiSpec, law: &FadingLaw, policy: Option<&PowerPolicy>, h: Complex) -> Result<Vec<(f64, CsiValue, CsiValue)>, ChannelError> {
    let g = h.norm_sqr();
    // S_T marginal given h, before S_R coupling
    let st_list: Vec<(f64, CsiValue)> = match csi.csit {
        Csit::None => vec![(1.0, CsiValue::None)],
        Csit::FullH => vec![(1.0, CsiValue::Complex(h))],
        Csit::QuantGain { bits, delta, flip } => {
            let (s, _) = quantize_gain(g, bits, delta)?;
            if flip > 0.0 {
                let other = if s < delta { 1.5 * delta } else { 0.5 * delta };
                vec![(1.0 - flip, CsiValue::Real(s)), (flip, CsiValue::Real(other))]
            } else {
                vec![(1.0, CsiValue::Real(s))]
            }
        }
        Csit::NoisyFlip(e) => {
            let o = other_point(law, h)?;
            vec![(1.0 - e, CsiValue::Complex(h)), (e, CsiValue::Complex(o))]
        }
        Csit::EqualsSr | Csit::FunctionOfSr(_) => vec![(1.0, CsiValue::None)],
    };
    let sr_list: Vec<(f64, CsiValue)> = match csi.csir {
        Csir::None => vec![(1.0, CsiValue::None)],
        Csir::FullH => vec![(1.0, CsiValue::Complex(h))],
        Csir::IndicatorGain(t) => vec![(1.0, CsiValue::Real(if g >= t { 1.0 } else { 0.0 }))],
        Csir::NoisyFlip(e) => {
            let o = other_point(law, h)?;
            vec![(1.0 - e, CsiValue::Complex(h)), (e, CsiValue::Complex(o))]
        }
        Csir::FullHP => vec![(1.0, CsiValue::None)],
        Csir::LmmseEstimate(_) => return Err(ChannelError::Usage("LMMSE CSIR has no finite S_R|H law".into())),
    };
    let mut out = Vec::new();
    for (pt, st) in &st_list {
        for (pr, sr) in &sr_list {
            let w = pt * pr;
            if w == 0.0 {
                continue;
            }
            let (st, sr) = match (csi.csit, csi.csir) {
                (Csit::EqualsSr, _) => (*sr, *sr),
                (Csit::FunctionOfSr(f), _) => (f(sr), *sr),
                (_, Csir::FullHP) => {
                    let p = policy.ok_or_else(|| ChannelError::Usage("S_R = H√P(S_T) needs a policy".into()))?;
                    (*st, CsiValue::Complex(h * p.power(st).sqrt()))
                }
                _ => (*st, *sr),
            };
            out.push((w, st, sr));
        }
    }
    Ok(out)
}

/// One joint draw of `(H, S_R, S_T)`.
pub fn sample_draw(law: &FadingLaw, csi: &CsiSpec, policy: Option<&PowerPolicy>, rng: &mut ChaCha8Rng) -> Result<ChannelDraw, ChannelError> {
    if let Csir::LmmseEstimate(e) = csi.csir {
        if *law != FadingLaw::Rayleigh {
            return Err(ChannelError::Usage("LMMSE CSIR is defined for Rayleigh fading".into()));
        }
        let s = cn(rng, 1.0);
        let z = cn(rng, 1.0);
        let h = s * (1.0 - e).sqrt() + z * e.sqrt();
        let sr = CsiValue::Complex(s);
        let st = match csi.csit {
            Csit::EqualsSr => sr,
            Csit::FunctionOfSr(f) => f(&sr),
            Csit::None => CsiValue::None,
            _ => return Err(ChannelError::Usage("LMMSE CSIR supports CSIT none or S_T = f(S_R)".into())),
        };
        return Ok(ChannelDraw { h, g: h.norm_sqr(), s_r: sr, s_t: st });
    }
    let h = law.sample_h(rng);
    let opts = csi_given_h(csi, law, policy, h)?;
    let (mut st, mut sr) = (opts[0].1, opts[0].2);
    if opts.len() > 1 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (w, t, r) in &opts {
            acc += w;
            st = *t;
            sr = *r;
            if u < acc {
                break;
            }
        }
    }
    Ok(ChannelDraw { h, g: h.norm_sqr(), s_r: sr, s_t: st })
}

/// `y = h x + z` with `z ~ CN(0, 1)`.
pub fn awgn_output(h: Complex, x: Complex, rng: &mut ChaCha8Rng) -> Complex {
    h * x + cn(rng, 1.0)
}

/// CSCG density `CN(y; mean, var)`.
pub fn cscg_density(y: Complex, mean: Complex, var: f64) -> f64 {
    (-(y - mean).norm_sqr() / var).exp() / (PI * var)
}

/// Flash input: `0` w.p. `1−p`, else `CN(0, P/p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlashInput {
    pub p: f64,
    pub power: f64,
}

impl FlashInput {
    pub fn new(p: f64, power: f64) -> Result<Self, ChannelError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(ChannelError::Domain("flash p must lie in (0, 1]".into()));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(ChannelError::Domain("flash power must be > 0".into()));
        }
        Ok(Self { p, power })
    }

    pub fn mass_at_zero(&self) -> f64 {
        1.0 - self.p
    }

    /// Density of the continuous component, `p · CN(x; 0, P/p)`.
    pub fn density(&self, x: Complex) -> f64 {
        self.p * cscg_density(x, Complex::new(0.0, 0.0), self.power / self.p)
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Complex {
        let u: f64 = rng.random();
        if u < self.p {
            cn(rng, self.power / self.p)
        } else {
            Complex::new(0.0, 0.0)
        }
    }
}

pub fn flash_density(p: f64, power: f64, x: Complex) -> Result<f64, ChannelError> {
    Ok(FlashInput::new(p, power)?.density(x))
}

/// `min(|Y|, 1 + |S_T|(|X| − 1))`.
pub fn cardinality_bound(sizes: (usize, usize, usize)) -> usize {
    let (y, st, x) = sizes;
    y.min(1 + st * x.saturating_sub(1))
}

/// Conditioning event for [`density_y`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conditioning {
    Marginal,
    GivenX(Complex),
    GivenH(Complex),
    /// Adaptive symbol `U = u` and `H = h`.
    GivenAH { u: Complex, h: Complex },
    GivenSr(CsiValue),
    GivenXSr(Complex, CsiValue),
}

/// Gain cells for Rayleigh integrals: split points from CSI and policy.
pub(crate) fn breakpoints(csi: &CsiSpec, policy: Option<&PowerPolicy>) -> Vec<f64> {
    let mut b = vec![0.0];
    b.extend(csi.threshold_points());
    if let Some(p) = policy {
        b.extend(p.breakpoints());
    }
    b.retain(|x| x.is_finite() && *x >= 0.0);
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    b.dedup_by(|a, c| (*a - *c).abs() < 1e-15);
    b.push(f64::INFINITY);
    b
}

/// `E[f(h, s_T, s_R)]` over the joint law (Rayleigh: `h = √g`, real).
pub fn expect_states<F>(law: &FadingLaw, csi: &CsiSpec, policy: Option<&PowerPolicy>, f: F, q: &Quadrature) -> Result<f64, ChannelError>
where
    F: Fn(Complex, &CsiValue, &CsiValue) -> f64,
{
    match law.points() {
        Some(pts) => {
            let mut s = 0.0;
            for (h, w) in pts {
                for (p, st, sr) in csi_given_h(csi, law, policy, h)? {
                    s += w * p * f(h, &st, &sr);
                }
            }
            Ok(s)
        }
        None => {
            // surface structural errors before integrating
            csi_given_h(csi, law, policy, Complex::new(1.0, 0.0))?;
            let b = breakpoints(csi, policy);
            let mut total = 0.0;
            for win in b.windows(2) {
                total += integrate_exp_weighted(
                    |g: f64| {
                        let h = Complex::new(g.sqrt(), 0.0);
                        match csi_given_h(csi, law, policy, h) {
                            Ok(list) => list.iter().map(|(p, st, sr)| p * f(h, st, sr)).sum(),
                            Err(_) => f64::NAN,
                        }
                    },
                    win[0],
                    win[1],
                    q,
                )?;
            }
            Ok(total)
        }
    }
}

/// One output-mixture component: `Y | component ~ CN(0, 1 + |amp|²)` and,
/// when `coherent`, `E[U | y, component] = conj(amp) y / (1 + |amp|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub w: f64,
    pub amp: Complex,
    pub coherent: bool,
}

impl Component {
    pub fn var(&self) -> f64 {
        1.0 + self.amp.norm_sqr()
    }
}

/// Output mixture conditioned on one CSIR value.
#[derive(Debug, Clone, PartialEq)]
pub struct SrBlock {
    pub prob: f64,
    pub s_r: CsiValue,
    pub comps: Vec<Component>,
}

fn amp_of(csi: &CsiSpec, policy: &PowerPolicy, h: Complex, st: &CsiValue) -> Complex {
    let p = policy.power(st).max(0.0);
    match csi.csit {
        // transmitter removes the phase of H
        Csit::FullH => Complex::new(h.norm() * p.sqrt(), 0.0),
        _ => h * p.sqrt(),
    }
}

/// The law of `Y` given `S_R` as a CSCG mixture per CSIR block, for an
/// adaptive symbol `X = √P(S_T) e^{jφ(S_T)} U`. Rayleigh gains are
/// discretized with `nodes` Gauss–Legendre points per probability cell.
pub fn output_mixture(law: &FadingLaw, csi: &CsiSpec, policy: &PowerPolicy, nodes: usize) -> Result<Vec<SrBlock>, ChannelError> {
    let mut states: Vec<(f64, Complex, CsiValue, CsiValue)> = Vec::new();
    let coherent_phase = law.is_discrete() || matches!(csi.csir, Csir::FullH | Csir::FullHP) || csi.csit == Csit::FullH;
    match law.points() {
        Some(pts) => {
            for (h, w) in pts {
                for (p, st, sr) in csi_given_h(csi, law, Some(policy), h)? {
                    states.push((w * p, h, st, sr));
                }
            }
        }
        None => {
            let b = breakpoints(csi, Some(policy));
            let (x, w) = gauss_legendre(nodes.max(4));
            for win in b.windows(2) {
                let u0 = 1.0 - (-win[0]).exp();
                let u1 = if win[1].is_infinite() { 1.0 } else { 1.0 - (-win[1]).exp() };
                let half = 0.5 * (u1 - u0);
                if half <= 0.0 {
                    continue;
                }
                for (xi, wi) in x.iter().zip(&w) {
                    let u = u0 + half * (xi + 1.0);
                    let g = -(-u).ln_1p();
                    let h = Complex::new(g.sqrt(), 0.0);
                    for (p, st, sr) in csi_given_h(csi, law, Some(policy), h)? {
                        states.push((half * wi * p, h, st, sr));
                    }
                }
            }
        }
    }
    let mut blocks: Vec<SrBlock> = Vec::new();
    for (w, h, st, sr) in states {
        if w == 0.0 {
            continue;
        }
        let amp = amp_of(csi, policy, h, &st);
        let comp = Component { w, amp, coherent: coherent_phase };
        let blk = match blocks.iter_mut().find(|b| b.s_r == sr) {
            Some(b) => b,
            None => {
                blocks.push(SrBlock { prob: 0.0, s_r: sr, comps: Vec::new() });
                blocks.last_mut().unwrap()
            }
        };
        blk.prob += w;
        match blk.comps.iter_mut().find(|c| (c.amp - amp).norm() <= 1e-12 * (1.0 + amp.norm())) {
            Some(c) => c.w += w,
            None => blk.comps.push(comp),
        }
    }
    for b in &mut blocks {
        for c in &mut b.comps {
            c.w /= b.prob;
        }
    }
    Ok(blocks)
}

impl SrBlock {
    /// `p(y | s_R)`.
    pub fn density(&self, y: Complex) -> f64 {
        self.comps.iter().map(|c| c.w * cscg_density(y, Complex::new(0.0, 0.0), c.var())).sum()
    }
}

fn rice_average(y: Complex, x: Complex, lo: f64, hi: f64, q: &Quadrature) -> Result<f64, ChannelError> {
    // E over g in [lo, hi) with uniform phase of CN(y; h x, 1), unnormalized by Pr(cell)
    let r = y.norm();
    let ax = x.norm();
    Ok(integrate_exp_weighted(
        |g: f64| {
            let m = g.sqrt() * ax;
            let z = 2.0 * r * m;
            (-(r - m) * (r - m)).exp() * i0e(z) / PI
        },
        lo,
        hi,
        q,
    )?)
}

/// Output density `p(y | conditioning)` for a CSCG adaptive symbol with
/// powers from `policy`.
pub fn density_y(law: &FadingLaw, policy: &PowerPolicy, csi: &CsiSpec, y: Complex, cond: Conditioning, q: &Quadrature) -> Result<f64, ChannelError> {
    let zero = Complex::new(0.0, 0.0);
    let lmmse = matches!(csi.csir, Csir::LmmseEstimate(_));
    if lmmse {
        return Err(ChannelError::Usage("densities with LMMSE CSIR are not supported".into()));
    }
    match cond {
        Conditioning::Marginal => Ok(expect_states(
            law,
            csi,
            Some(policy),
            |h, st, _| cscg_density(y, zero, 1.0 + h.norm_sqr() * policy.power(st)),
            q,
        )?),
        Conditioning::GivenH(h) => Ok(csi_given_h(csi, law, Some(policy), h)?
            .iter()
            .map(|(p, st, _)| p * cscg_density(y, zero, 1.0 + h.norm_sqr() * policy.power(st)))
            .sum()),
        Conditioning::GivenAH { u, h } => Ok(csi_given_h(csi, law, Some(policy), h)?
            .iter()
            .map(|(p, st, _)| p * cscg_density(y, amp_of(csi, policy, h, st) * u, 1.0))
            .sum()),
        Conditioning::GivenX(x) => {
            if csi.csit != Csit::None {
                return Err(ChannelError::Usage("p(y|x) needs an input independent of H (no CSIT)".into()));
            }
            match law.points() {
                Some(pts) => Ok(pts.iter().map(|(h, w)| w * cscg_density(y, h * x, 1.0)).sum()),
                None => Ok(cscg_density(y, zero, 1.0 + x.norm_sqr())),
            }
        }
        Conditioning::GivenSr(s) => match (law.is_discrete(), csi.csir) {
            (false, Csir::FullH) => {
                let h = match s {
                    CsiValue::Complex(h) => h,
                    _ => return Err(ChannelError::Usage("S_R = H needs a complex CSIR value".into())),
                };
                density_y(law, policy, csi, y, Conditioning::GivenH(h), q)
            }
            (_, Csir::FullHP) if !law.is_discrete() => Err(ChannelError::Usage("p(y|s_R) for S_R = H√P(S_T) on a continuous law".into())),
            _ => {
                let num = expect_states(
                    law,
                    csi,
                    Some(policy),
                    |h, st, sr| if *sr == s { cscg_density(y, zero, 1.0 + h.norm_sqr() * policy.power(st)) } else { 0.0 },
                    q,
                )?;
                let den = expect_states(law, csi, Some(policy), |_, _, sr| if *sr == s { 1.0 } else { 0.0 }, q)?;
                if den <= 0.0 {
                    return Err(ChannelError::Usage("conditioning on a CSIR value of probability zero".into()));
                }
                Ok(num / den)
            }
        },
        Conditioning::GivenXSr(x, s) => {
            if csi.csit != Csit::None {
                return Err(ChannelError::Usage("p(y|x,s_R) needs an input independent of H (no CSIT)".into()));
            }
            match law.points() {
                Some(pts) => {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for (h, w) in pts {
                        for (p, _, sr) in csi_given_h(csi, law, None, h)? {
                            if sr == s {
                                num += w * p * cscg_density(y, h * x, 1.0);
                                den += w * p;
                            }
                        }
                    }
                    if den <= 0.0 {
                        return Err(ChannelError::Usage("conditioning on a CSIR value of probability zero".into()));
                    }
                    Ok(num / den)
                }
                None => match (csi.csir, s) {
                    (Csir::FullH, CsiValue::Complex(h)) => Ok(cscg_density(y, h * x, 1.0)),
                    (Csir::None, _) => Ok(cscg_density(y, zero, 1.0 + x.norm_sqr())),
                    (Csir::IndicatorGain(t), CsiValue::Real(b)) => {
                        let (lo, hi) = if b >= 0.5 { (t, f64::INFINITY) } else { (0.0, t) };
                        let pr = (-lo).exp() - if hi.is_infinite() { 0.0 } else { (-hi).exp() };
                        Ok(rice_average(y, x, lo, hi, q)? / pr)
                    }
                    _ => Err(ChannelError::Usage("unsupported CSIR for p(y|x,s_R)".into())),
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_radial, stream_rng};

    fn q() -> Quadrature {
        Quadrature::adaptive(1e-10).unwrap()
    }

    #[test]
    fn quantizer_cells() {
        assert_eq!(quantize_gain(0.4, Bits::One, 1.0).unwrap(), (0.5, (0.0, 1.0)));
        assert_eq!(quantize_gain(7.0, Bits::One, 1.0).unwrap(), (1.5, (1.0, f64::INFINITY)));
        assert_eq!(quantize_gain(3.3, Bits::Inf, 2.0).unwrap().0, 3.3);
        assert_eq!(quantize_gain(3.3, Bits::Zero, 2.0).unwrap().1, (0.0, f64::INFINITY));
        assert!(quantize_gain(1.0, Bits::One, 0.0).is_err());
    }

    #[test]
    fn rayleigh_cell_probability_and_moments() {
        let law = FadingLaw::Rayleigh;
        for d in [0.5, 1.0, 2.0] {
            let p = law.expect_gain_range(|_| 1.0, d, f64::INFINITY, &q()).unwrap();
            assert!((p - (-d as f64).exp()).abs() < 1e-10);
            let m1 = law.expect_gain_range(|g| g, d, f64::INFINITY, &q()).unwrap() / p;
            let m2 = law.expect_gain_range(|g| g * g, d, f64::INFINITY, &q()).unwrap() / p;
            assert!((m1 - (1.0 + d)).abs() < 1e-9);
            assert!((m2 - (2.0 + 2.0 * d + d * d)).abs() < 1e-8);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(FadingLaw::discrete(vec![(Complex::new(1.0, 0.0), 1.0)]).is_ok());
        assert!(FadingLaw::discrete(vec![(Complex::new(2.0, 0.0), 1.0)]).is_err());
        assert!(FadingLaw::discrete(vec![(Complex::new(1.0, 0.0), 0.7)]).is_err());
        assert!((FadingLaw::OnOff.var_h() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cardinality() {
        assert_eq!(cardinality_bound((4, 2, 2)), 3);
        assert_eq!(cardinality_bound((2, 2, 2)), 2);
        assert_eq!(cardinality_bound((100, 1, 5)), 5);
    }

    #[test]
    fn onoff_draw_frequencies() {
        let law = FadingLaw::OnOff;
        let csi = CsiSpec::new(Csir::FullH, Csit::NoisyFlip(0.1)).unwrap();
        let mut rng = stream_rng(7, 0);
        let n = 1_000_000;
        let (mut on, mut flipped) = (0u32, 0u32);
        for _ in 0..n {
            let d = sample_draw(&law, &csi, None, &mut rng).unwrap();
            assert_eq!(d.s_r, CsiValue::Complex(d.h));
            if d.g > 1.0 {
                on += 1;
            }
            if d.s_t.key() != d.g {
                flipped += 1;
            }
        }
        let nf = n as f64;
        let sd = (0.25 / nf).sqrt();
        assert!((on as f64 / nf - 0.5).abs() < 3.0 * sd);
        let sd = (0.09 / nf).sqrt();
        assert!((flipped as f64 / nf - 0.1).abs() < 3.0 * sd);
    }

    #[test]
    fn lmmse_zero_error_is_exact() {
        let csi = CsiSpec::new(Csir::LmmseEstimate(0.0), Csit::None).unwrap();
        let mut rng = stream_rng(1, 3);
        for _ in 0..100 {
            let d = sample_draw(&FadingLaw::Rayleigh, &csi, None, &mut rng).unwrap();
            assert_eq!(d.s_r, CsiValue::Complex(d.h));
        }
    }

    #[test]
    fn full_hp_needs_policy() {
        let csi = CsiSpec::new(Csir::FullHP, Csit::FullH).unwrap();
        let mut rng = stream_rng(1, 0);
        assert!(sample_draw(&FadingLaw::OnOff, &csi, None, &mut rng).is_err());
        let pol = PowerPolicy::constant(2.0);
        let d = sample_draw(&FadingLaw::OnOff, &csi, Some(&pol), &mut rng).unwrap();
        assert_eq!(d.s_r, CsiValue::Complex(d.h * 2f64.sqrt()));
    }

    #[test]
    fn awgn_moments_and_determinism() {
        let n = 1_000_000;
        let mut rng = stream_rng(11, 0);
        let mut s0 = 0.0;
        let mut s0sq = 0.0;
        let mut s1 = 0.0;
        let mut s1sq = 0.0;
        for _ in 0..n {
            let a = awgn_output(Complex::new(0.0, 0.0), Complex::new(1.0, 0.0), &mut rng).norm_sqr();
            s0 += a;
            s0sq += a * a;
            let x = cn(&mut rng, 1.0);
            let b = awgn_output(Complex::new(SQRT_2, 0.0), x, &mut rng).norm_sqr();
            s1 += b;
            s1sq += b * b;
        }
        let nf = n as f64;
        let (m0, m1) = (s0 / nf, s1 / nf);
        let sd0 = ((s0sq / nf - m0 * m0) / nf).sqrt();
        let sd1 = ((s1sq / nf - m1 * m1) / nf).sqrt();
        assert!((m0 - 1.0).abs() < 3.0 * sd0);
        assert!((m1 - 3.0).abs() < 3.0 * sd1);
        let y1 = awgn_output(Complex::new(1.0, 0.0), Complex::new(0.3, 0.1), &mut stream_rng(5, 9));
        let y2 = awgn_output(Complex::new(1.0, 0.0), Complex::new(0.3, 0.1), &mut stream_rng(5, 9));
        assert_eq!(y1, y2);
    }

    #[test]
    fn flash_moments() {
        let f = FlashInput::new(0.05, 1.0).unwrap();
        let mut rng = stream_rng(2, 0);
        let n = 1_000_000;
        let (mut s, mut s2, mut zeros) = (0.0, 0.0, 0u32);
        for _ in 0..n {
            let x = f.sample(&mut rng);
            let e = x.norm_sqr();
            s += e;
            s2 += e * e;
            if e == 0.0 {
                zeros += 1;
            }
        }
        let nf = n as f64;
        let m = s / nf;
        let sd = ((s2 / nf - m * m) / nf).sqrt();
        assert!((m - 1.0).abs() < 3.0 * sd);
        let pz = zeros as f64 / nf;
        assert!((pz - 0.95).abs() < 3.0 * (0.95 * 0.05 / nf).sqrt());
        assert!(FlashInput::new(0.0, 1.0).is_err());
        let pure = flash_density(1.0, 2.0, Complex::new(0.5, 0.5)).unwrap();
        assert!((pure - cscg_density(Complex::new(0.5, 0.5), Complex::new(0.0, 0.0), 2.0)).abs() < 1e-15);
    }

    #[test]
    fn density_spot_values() {
        let pol = PowerPolicy::constant(1.0);
        let none = CsiSpec::none();
        let v = density_y(&FadingLaw::OnOff, &pol, &none, Complex::new(0.0, 0.0), Conditioning::Marginal, &q()).unwrap();
        assert!((v - (1.0 + 1.0 / 3.0) / (2.0 * PI)).abs() < 1e-14);
        let v = density_y(&FadingLaw::Rayleigh, &pol, &none, Complex::new(1.0, 0.0), Conditioning::GivenX(Complex::new(1.0, 0.0)), &q()).unwrap();
        assert!((v - (-0.5f64).exp() / (2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn tci_density_is_two_component_mixture() {
        let t = 2f64.ln();
        let pol = PowerPolicy::heuristic(&FadingLaw::Rayleigh, -1.0, t, 3.0, &q()).unwrap();
        let csi = CsiSpec::new(Csir::None, Csit::FullH).unwrap();
        let blocks = output_mixture(&FadingLaw::Rayleigh, &csi, &pol, 32).unwrap();
        assert_eq!(blocks.len(), 1);
        let comps = &blocks[0].comps;
        assert_eq!(comps.len(), 2);
        for c in comps {
            assert!((c.w - 0.5).abs() < 1e-12);
        }
        let y = Complex::new(0.7, -0.2);
        let d = density_y(&FadingLaw::Rayleigh, &pol, &csi, y, Conditioning::Marginal, &q()).unwrap();
        let p_hat = pol.p_hat();
        let expect = 0.5 * cscg_density(y, Complex::new(0.0, 0.0), 1.0) + 0.5 * cscg_density(y, Complex::new(0.0, 0.0), 1.0 + p_hat);
        assert!((d - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn densities_integrate_to_one() {
        let qr = Quadrature::adaptive(1e-9).unwrap();
        let pol = PowerPolicy::constant(2.0);
        let cases: Vec<(FadingLaw, CsiSpec, Conditioning)> = vec![
            (FadingLaw::OnOff, CsiSpec::none(), Conditioning::Marginal),
            (FadingLaw::Rayleigh, CsiSpec::none(), Conditioning::Marginal),
            (FadingLaw::Rayleigh, CsiSpec::none(), Conditioning::GivenX(Complex::new(1.2, 0.0))),
            (FadingLaw::OnOff, CsiSpec::new(Csir::NoisyFlip(0.1), Csit::EqualsSr).unwrap(), Conditioning::GivenSr(CsiValue::Complex(Complex::new(0.0, 0.0)))),
            (FadingLaw::Rayleigh, CsiSpec::new(Csir::IndicatorGain(0.5), Csit::None).unwrap(), Conditioning::GivenXSr(Complex::new(0.8, 0.0), CsiValue::Real(1.0))),
            (FadingLaw::Rayleigh, CsiSpec::new(Csir::FullH, Csit::QuantGain { bits: Bits::One, delta: 1.0, flip: 0.1 }).unwrap(), Conditioning::GivenH(Complex::new(1.1, 0.0))),
        ];
        for (law, csi, cond) in cases {
            let total = integrate_radial(|r| density_y(&law, &pol, &csi, Complex::new(r, 0.0), cond, &qr).unwrap(), &qr).unwrap();
            assert!((total - 1.0).abs() < 1e-6, "{law:?} {cond:?}: {total}");
        }
    }
}
