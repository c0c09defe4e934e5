//! Quadrature, root finding, Monte Carlo means and wideband derivatives.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::NumError;
use crate::Real;

fn c<T: Real>(x: f64) -> T {
    T::from_f64(x).unwrap()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme<T> {
    /// Fixed `n`-point Gauss–Laguerre rule for `∫_lo^∞ e^{-g} f(g) dg`.
    GaussLaguerre { n: usize, nodes: Vec<T>, weights: Vec<T> },
    /// Globally adaptive Gauss–Kronrod (7/15) with a relative tolerance;
    /// infinite ranges are mapped onto `[0, 1)`.
    Adaptive { tol: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature<T> {
    pub scheme: Scheme<T>,
}

impl<T: Real> Quadrature<T> {
    pub fn adaptive(tol: T) -> Result<Self, NumError> {
        if !(tol > T::zero() && tol <= c(1e-4)) {
            return Err(NumError::Usage("quadrature tol must lie in (0, 1e-4]".into()));
        }
        Ok(Self { scheme: Scheme::Adaptive { tol } })
    }

    pub fn gauss_laguerre(n: usize) -> Result<Self, NumError> {
        if n < 16 {
            return Err(NumError::Usage("Gauss-Laguerre needs n >= 16".into()));
        }
        let (x, w) = laguerre_rule(n);
        Ok(Self {
            scheme: Scheme::GaussLaguerre {
                n,
                nodes: x.into_iter().map(c).collect(),
                weights: w.into_iter().map(c).collect(),
            },
        })
    }

    /// Relative tolerance this rule aims for; fixed rules report `1e-8`.
    pub fn tol(&self) -> T {
        match &self.scheme {
            Scheme::Adaptive { tol } => *tol,
            Scheme::GaussLaguerre { .. } => c(1e-8),
        }
    }

    /// A copy with the tolerance tightened by `factor` (clamped below at 1e-14).
    pub fn tightened(&self, factor: T) -> Self {
        match &self.scheme {
            Scheme::Adaptive { tol } => Self { scheme: Scheme::Adaptive { tol: (*tol * factor).max(c(1e-14)) } },
            _ => self.clone(),
        }
    }
}

impl Default for Quadrature<f64> {
    fn default() -> Self {
        Self::adaptive(1e-10).unwrap()
    }
}

// Golub-Welsch free construction by Newton iteration on L_n
pub(crate) fn laguerre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n {
        if i == 0 {
            z = 3.0 / (1.0 + 2.4 * nf);
        } else if i == 1 {
            z += 15.0 / (1.0 + 2.5 * nf);
        } else {
            let ai = (i - 1) as f64;
            z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2]);
        }
        let mut pp = 0.0;
        let mut p2 = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = (nf * p1 - nf * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        w[i] = -1.0 / (pp * nf * p2);
    }
    (x, w)
}

/// `n`-point Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Result<(T, T), NumError> {
    let half = c::<T>(0.5);
    let center = half * (a + b);
    let hl = half * (b - a);
    let eval = |x: T| -> Result<T, NumError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NumError::Integration { at: x.to_f64().unwrap_or(f64::NAN) })
        }
    };
    let fc = eval(center)?;
    let mut resk = fc * c(WGK[7]);
    let mut resg = fc * c(WG[3]);
    for j in 0..7 {
        let dx = hl * c(XGK[j]);
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        resk = resk + (f1 + f2) * c(WGK[j]);
        if j % 2 == 1 {
            resg = resg + (f1 + f2) * c(WG[j / 2]);
        }
    }
    let val = resk * hl;
    let err = ((resk - resg) * hl).abs();
    Ok((val, err))
}

fn adaptive_finite<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> Result<T, NumError> {
    if a == b {
        return Ok(T::zero());
    }
    let pieces = 8usize;
    let mut segs: Vec<(T, T, T, T)> = Vec::with_capacity(64);
    let step = (b - a) / T::from_usize(pieces).unwrap();
    for i in 0..pieces {
        let lo = a + step * T::from_usize(i).unwrap();
        let hi = if i + 1 == pieces { b } else { lo + step };
        let (v, e) = gk15(f, lo, hi)?;
        segs.push((lo, hi, v, e));
    }
    let floor = T::epsilon() * c(50.0);
    for _ in 0..20_000 {
        let total: T = segs.iter().fold(T::zero(), |s, x| s + x.2);
        let err: T = segs.iter().fold(T::zero(), |s, x| s + x.3);
        if err <= tol.max(floor) * total.abs() || err == T::zero() {
            return Ok(total);
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, be), (i, s)| if s.3 > be { (i, s.3) } else { (bi, be) });
        let (lo, hi, _, _) = segs[idx];
        let mid = c::<T>(0.5) * (lo + hi);
        if !(mid > lo && mid < hi) {
            // interval exhausted at machine precision
            segs[idx].3 = T::zero();
            continue;
        }
        let (v1, e1) = gk15(f, lo, mid)?;
        let (v2, e2) = gk15(f, mid, hi)?;
        segs[idx] = (lo, mid, v1, e1);
        segs.push((mid, hi, v2, e2));
    }
    Ok(segs.iter().fold(T::zero(), |s, x| s + x.2))
}

/// `∫_lo^hi f(x) dx` with `hi` possibly `+∞`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, q: &Quadrature<T>) -> Result<T, NumError> {
    let tol = match &q.scheme {
        Scheme::Adaptive { tol } => *tol,
        Scheme::GaussLaguerre { .. } => c(1e-10),
    };
    if hi < lo {
        return Ok(-integrate(f, hi, lo, q)?);
    }
    if hi.is_infinite() {
        let g = |u: T| {
            let one_m = T::one() - u;
            let x = lo + u / one_m;
            let v = f(x);
            if v == T::zero() {
                T::zero()
            } else {
                v / (one_m * one_m)
            }
        };
        adaptive_finite(&g, T::zero(), T::one(), tol)
    } else {
        adaptive_finite(&f, lo, hi, tol)
    }
}

/// `∫_lo^hi e^{-g} f(g) dg` for `lo >= 0`.
pub fn integrate_exp_weighted<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, q: &Quadrature<T>) -> Result<T, NumError> {
    if lo < T::zero() {
        return Err(NumError::Usage("integrate_exp_weighted needs lo >= 0".into()));
    }
    match &q.scheme {
        Scheme::GaussLaguerre { nodes, weights, .. } if hi.is_infinite() => {
            let mut s = T::zero();
            for (x, w) in nodes.iter().zip(weights) {
                let v = f(lo + *x);
                if !v.is_finite() {
                    return Err(NumError::Integration { at: (lo + *x).to_f64().unwrap_or(f64::NAN) });
                }
                s = s + *w * v;
            }
            Ok(s * (-lo).exp())
        }
        _ => integrate(
            |g: T| {
                let w = (-g).exp();
                if w == T::zero() {
                    T::zero()
                } else {
                    w * f(g)
                }
            },
            lo,
            hi,
            q,
        ),
    }
}

/// `∫_{ℂ} f(|y|) dy = ∫_0^∞ f(r) 2π r dr` for circularly symmetric integrands.
pub fn integrate_radial<T: Real, F: Fn(T) -> T>(f: F, q: &Quadrature<T>) -> Result<T, NumError> {
    let two_pi = c::<T>(2.0 * std::f64::consts::PI);
    integrate(|r: T| f(r) * two_pi * r, T::zero(), T::infinity(), q)
}

/// Bisection on `[a, b]`, expanding the upper end geometrically (×4, at most
/// 60 times) until the sign changes.
pub fn bisect_root<T: Real, F: Fn(T) -> T>(f: F, bracket: (T, T), tol: T) -> Result<T, NumError> {
    let (a, mut b) = bracket;
    let fa = f(a);
    if fa == T::zero() {
        return Ok(a);
    }
    let mut fb = f(b);
    let four = c::<T>(4.0);
    let mut expansions = 0;
    while fa.signum() == fb.signum() && fb != T::zero() {
        if expansions >= 60 {
            return Err(NumError::NoRoot { lo: a.to_f64().unwrap_or(f64::NAN), hi: b.to_f64().unwrap_or(f64::NAN) });
        }
        b = a + (b - a) * four;
        fb = f(b);
        expansions += 1;
    }
    if fb == T::zero() {
        return Ok(b);
    }
    let (mut lo, mut hi) = (a, b);
    let mut flo = fa;
    for _ in 0..400 {
        let mid = c::<T>(0.5) * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == T::zero() || fm.abs() <= tol * T::epsilon() {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(c::<T>(0.5) * (lo + hi))
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> (T, T) {
    let r = c::<T>(0.618_033_988_749_894_8);
    let (mut a, mut b) = (a, b);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Deterministic random stream for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// 95% confidence half-width from the sample variance.
    pub ci_half_width: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub n_nonfinite: u64,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        Self { mean: value, ci_half_width: 0.0, n_samples: 0, seed: 0, n_nonfinite: 0 }
    }
}

const CHUNK: u64 = 8192;

#[derive(Clone)]
struct Acc {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    bad: u64,
}

impl Acc {
    fn merge(a: Acc, b: Acc) -> Acc {
        if a.n == 0 {
            return Acc { bad: a.bad + b.bad, ..b };
        }
        if b.n == 0 {
            return Acc { bad: a.bad + b.bad, ..a };
        }
        let n = a.n + b.n;
        let (na, nb) = (a.n as f64, b.n as f64);
        let mut mean = a.mean.clone();
        let mut m2 = a.m2.clone();
        for k in 0..mean.len() {
            let d = b.mean[k] - a.mean[k];
            mean[k] = a.mean[k] + d * nb / n as f64;
            m2[k] = a.m2[k] + b.m2[k] + d * d * na * nb / n as f64;
        }
        Acc { n, mean, m2, bad: a.bad + b.bad }
    }
}

fn tree_reduce(mut v: Vec<Acc>) -> Acc {
    while v.len() > 1 {
        let mut next = Vec::with_capacity(v.len().div_ceil(2));
        let mut it = v.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(Acc::merge(a, b)),
                None => next.push(a),
            }
        }
        v = next;
    }
    v.pop().unwrap()
}

/// Monte Carlo means of `k` statistics produced together by `sampler`.
///
/// Samples are split into fixed chunks; chunk `j` draws from stream `j` of
/// the seed, and partial results are merged by a pairwise tree in chunk
/// order, so the result does not depend on thread scheduling. A sample with
/// any non-finite statistic is dropped and counted.
pub fn mc_means<F>(sampler: F, k: usize, n: u64, seed: u64) -> Result<Vec<McEstimate>, NumError>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    if n < 1000 {
        return Err(NumError::Usage("monte carlo needs n >= 1000".into()));
    }
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Acc> = (0..chunks)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(seed, j);
            let len = CHUNK.min(n - j * CHUNK);
            let mut acc = Acc { n: 0, mean: vec![0.0; k], m2: vec![0.0; k], bad: 0 };
            let mut buf = vec![0.0; k];
            for _ in 0..len {
                sampler(&mut rng, &mut buf);
                if buf.iter().any(|v| !v.is_finite()) {
                    acc.bad += 1;
                    continue;
                }
                acc.n += 1;
                let nf = acc.n as f64;
                for i in 0..k {
                    let d = buf[i] - acc.mean[i];
                    acc.mean[i] += d / nf;
                    acc.m2[i] += d * (buf[i] - acc.mean[i]);
                }
            }
            acc
        })
        .collect();
    let total = tree_reduce(parts);
    if total.bad as f64 > 1e-4 * n as f64 {
        return Err(NumError::NonFinite { bad: total.bad, n });
    }
    let m = total.n.max(1) as f64;
    Ok((0..k)
        .map(|i| {
            let var = if total.n > 1 { total.m2[i] / (m - 1.0) } else { 0.0 };
            McEstimate {
                mean: total.mean[i],
                ci_half_width: 1.96 * (var.max(0.0) / m).sqrt(),
                n_samples: total.n,
                seed,
                n_nonfinite: total.bad,
            }
        })
        .collect())
}

/// Monte Carlo mean of a scalar sampler. See [`mc_means`].
pub fn mc_mean<F>(sampler: F, n: u64, seed: u64) -> Result<McEstimate, NumError>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    Ok(mc_means(|rng, out| out[0] = sampler(rng), 1, n, seed)?[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidebandMetrics<T> {
    pub ebn0_min_db: T,
    /// Bits per 3 dB.
    pub slope_s: T,
    pub c_dot: T,
    pub c_ddot: T,
    pub degenerate: bool,
}

/// Minimum Eb/N0 and slope from one-sided differences of `rate_fn` at 0,
/// Richardson-extrapolated over steps `h`, `h/2`, `h/4`.
pub fn wideband_metrics<T: Real, F: Fn(T) -> T>(rate_fn: F, h: T) -> WidebandMetrics<T> {
    let half = c::<T>(0.5);
    let two = c::<T>(2.0);
    let c0 = rate_fn(T::zero());
    let hs = [h, h * half, h * half * half];
    let vals: Vec<T> = hs.iter().map(|&x| rate_fn(x) - c0).collect();
    let v2h = rate_fn(two * h) - c0;
    let d: Vec<T> = vals.iter().zip(hs.iter()).map(|(&v, &x)| v / x).collect();
    let r1a = two * d[1] - d[0];
    let r1b = two * d[2] - d[1];
    let c_dot = (c::<T>(4.0) * r1b - r1a) / c::<T>(3.0);
    // second forward differences at h, h/2, h/4
    let s = |v2: T, v1: T, x: T| (v2 - two * v1) / (x * x);
    let s0 = s(v2h, vals[0], hs[0]);
    let s1 = s(vals[0], vals[1], hs[1]);
    let s2 = s(vals[1], vals[2], hs[2]);
    let q1a = two * s1 - s0;
    let q1b = two * s2 - s1;
    let c_ddot = (c::<T>(4.0) * q1b - q1a) / c::<T>(3.0);
    let ln2 = c::<T>(std::f64::consts::LN_2);
    let ten = c::<T>(10.0);
    let tiny = c::<T>(1e-12);
    if !(c_dot > tiny) || !c_dot.is_finite() {
        return WidebandMetrics { ebn0_min_db: T::infinity(), slope_s: T::zero(), c_dot, c_ddot, degenerate: true };
    }
    let ebn0_min_db = ten * (ln2 / c_dot).log10();
    if !(c_ddot < T::zero()) {
        return WidebandMetrics { ebn0_min_db, slope_s: T::infinity(), c_dot, c_ddot, degenerate: true };
    }
    WidebandMetrics { ebn0_min_db, slope_s: two * c_dot * c_dot / (-c_ddot), c_dot, c_ddot, degenerate: false }
}

/// `Eb/N0 = P log 2 / R` in dB for a rate in nats.
pub fn ebn0_of<T: Real>(p: T, rate_nats: T) -> Result<T, NumError> {
    if !(rate_nats > T::zero()) {
        return Err(NumError::Degenerate("Eb/N0 undefined for a zero rate".into()));
    }
    if !(p > T::zero()) {
        return Err(NumError::Usage("Eb/N0 needs P > 0".into()));
    }
    Ok(c::<T>(10.0) * (p * c::<T>(std::f64::consts::LN_2) / rate_nats).log10())
}

pub fn db<T: Real>(x: T) -> T {
    c::<T>(10.0) * x.log10()
}

pub fn from_db<T: Real>(x: T) -> T {
    c::<T>(10.0).powf(x / c::<T>(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::e1;
    use rand::Rng;

    #[test]
    fn exp_weighted_family() {
        let q = Quadrature::<f64>::adaptive(1e-10).unwrap();
        let v = integrate_exp_weighted(|g| (1.0 + g).ln(), 0.0, f64::INFINITY, &q).unwrap();
        assert!((v - std::f64::consts::E * e1(1.0)).abs() < 1e-10 * v);
        let m = integrate_exp_weighted(|g| g, 0.0, f64::INFINITY, &q).unwrap();
        assert!((m - 1.0).abs() < 1e-10);
        let r = integrate_exp_weighted(|g| g / (1.0 + g), 0.0, f64::INFINITY, &q).unwrap();
        assert!((r - (1.0 - std::f64::consts::E * e1(1.0))).abs() < 1e-10);
    }

    #[test]
    fn gauss_laguerre_rule() {
        let q = Quadrature::<f64>::gauss_laguerre(32).unwrap();
        let m = integrate_exp_weighted(|g| g * g, 0.0, f64::INFINITY, &q).unwrap();
        assert!((m - 2.0).abs() < 1e-11);
        let v = integrate_exp_weighted(|g| (1.0 + g).ln(), 0.0, f64::INFINITY, &q).unwrap();
        assert!((v - std::f64::consts::E * e1(1.0)).abs() < 1e-6);
        assert!(Quadrature::<f64>::gauss_laguerre(8).is_err());
        assert!(Quadrature::<f64>::adaptive(1e-2).is_err());
    }

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_legendre(20);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
        assert!((m - 2.0 / 7.0).abs() < 1e-13);
    }

    #[test]
    fn radial_integrals() {
        let q = Quadrature::<f64>::default();
        let one = integrate_radial(|r| (-r * r).exp() / std::f64::consts::PI, &q).unwrap();
        assert!((one - 1.0).abs() < 1e-10);
        let s2 = 2.5;
        let h = integrate_radial(
            |r| {
                let p = (-r * r / s2).exp() / (std::f64::consts::PI * s2);
                if p > 0.0 {
                    -p * p.ln()
                } else {
                    0.0
                }
            },
            &q,
        )
        .unwrap();
        let expect = (std::f64::consts::PI * std::f64::consts::E * s2).ln();
        assert!((h - expect).abs() < 1e-8);
    }

    #[test]
    fn non_finite_integrand_reports_location() {
        let q = Quadrature::<f64>::default();
        let e = integrate(|x: f64| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, &q).unwrap_err();
        assert!(matches!(e, NumError::Integration { .. }));
    }

    #[test]
    fn roots() {
        let r = bisect_root(|x: f64| x - 2.0, (0.0, 5.0), 1e-14).unwrap();
        assert!((r - 2.0).abs() < 1e-13);
        let t = bisect_root(|t: f64| 2.0 * t * t.exp() * e1(t) - 1.0, (0.1, 2.0), 1e-14).unwrap();
        assert!((t - 0.61).abs() < 0.01);
        let eps = 0.1;
        let d = bisect_root(|d: f64| (-d).exp() - eps / (1.0 - 2.0 * eps) * (d - 1.0), (1.0, 2.0), 1e-14).unwrap();
        assert!(d > 1.0);
        assert!(bisect_root(|x: f64| x * x + 1.0, (0.0, 1.0), 1e-10).is_err());
        // bracket expansion
        let r = bisect_root(|x: f64| x - 100.0, (0.0, 1.0), 1e-12).unwrap();
        assert!((r - 100.0).abs() < 1e-9);
    }

    #[test]
    fn golden_section() {
        let (x, fx) = golden_max(|x: f64| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8 && fx <= 0.0);
    }

    #[test]
    fn mc_constant_and_reproducible() {
        let e = mc_mean(|_| 3.0, 10_000, 1).unwrap();
        assert_eq!(e.mean, 3.0);
        assert_eq!(e.ci_half_width, 0.0);
        let a = mc_mean(|r| r.random::<f64>(), 100_000, 42).unwrap();
        let b = mc_mean(|r| r.random::<f64>(), 100_000, 42).unwrap();
        assert_eq!(a, b);
        assert!((a.mean - 0.5).abs() < 3.0 * a.ci_half_width);
        assert!(mc_mean(|_| 1.0, 10, 1).is_err());
    }

    #[test]
    fn mc_nonfinite_policy() {
        let ok = mc_mean(|r| if r.random::<f64>() < 1e-6 { f64::NAN } else { 1.0 }, 100_000, 3).unwrap();
        assert_eq!(ok.mean, 1.0);
        let bad = mc_mean(|r| if r.random::<f64>() < 0.01 { f64::NAN } else { 1.0 }, 100_000, 3);
        assert!(matches!(bad, Err(NumError::NonFinite { .. })));
    }

    #[test]
    fn wideband_known_curves() {
        let w = wideband_metrics(|p: f64| (1.0 + p).ln(), 1e-3);
        assert!((w.ebn0_min_db - (-1.591_745)).abs() < 1e-3);
        assert!((w.slope_s - 2.0).abs() < 1e-4);
        let w2 = wideband_metrics(|p: f64| 0.5 * (1.0 + 2.0 * p).ln(), 1e-3);
        assert!((w2.slope_s - 1.0).abs() < 1e-4);
        let w3 = wideband_metrics(|p: f64| (1.0 + p / (2.0 + p)).ln(), 1e-3);
        assert!((w3.ebn0_min_db - 1.418).abs() < 2e-3);
        assert!((w3.slope_s - 2.0 / 3.0).abs() < 1e-4);
        let flat = wideband_metrics(|p: f64| p * p, 1e-3);
        assert!(flat.degenerate && flat.ebn0_min_db.is_infinite());
    }

    #[test]
    fn ebn0_arithmetic() {
        assert!(ebn0_of(1.0, std::f64::consts::LN_2).unwrap().abs() < 1e-12);
        let v = ebn0_of(std::f64::consts::LN_2, std::f64::consts::LN_2).unwrap();
        assert!((v - 10.0 * std::f64::consts::LN_2.log10()).abs() < 1e-12);
        let d: f64 = ebn0_of(2.0f64, 0.3).unwrap() - ebn0_of(1.0, 0.3).unwrap();
        assert!((d - 3.0103).abs() < 1e-4);
        assert!(ebn0_of(1.0, 0.0).is_err());
    }
}
