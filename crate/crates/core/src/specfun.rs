//! Exponential integral, incomplete gamma, Bessel I0 and Marcum Q1.

use crate::error::SpecError;
use crate::Real;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn c<T: Real>(x: f64) -> T {
    T::from_f64(x).unwrap()
}

fn check_nonneg<T: Real>(x: T, name: &'static str) -> Result<(), SpecError> {
    if x.is_nan() || x < T::zero() {
        return Err(SpecError::Domain(name));
    }
    Ok(())
}

/// `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
pub fn exp_integral_e1<T: Real>(x: T) -> Result<T, SpecError> {
    if x.is_nan() || x <= T::zero() {
        return Err(SpecError::Domain("exp_integral_e1 requires x > 0"));
    }
    Ok(e1(x))
}

/// `e^x E1(x)`, finite for large `x` where `E1` alone underflows.
pub fn exp_integral_e1_scaled<T: Real>(x: T) -> Result<T, SpecError> {
    if x.is_nan() || x <= T::zero() {
        return Err(SpecError::Domain("exp_integral_e1_scaled requires x > 0"));
    }
    Ok(e1_scaled(x))
}

pub(crate) fn e1<T: Real>(x: T) -> T {
    if x < T::one() {
        e1_series(x)
    } else {
        e1_cf_scaled(x) * (-x).exp()
    }
}

pub(crate) fn e1_scaled<T: Real>(x: T) -> T {
    if x < T::one() {
        e1_series(x) * x.exp()
    } else {
        e1_cf_scaled(x)
    }
}

fn e1_series<T: Real>(x: T) -> T {
    let eps = T::epsilon();
    let mut sum = T::zero();
    let mut term = T::one();
    let mut k = 1usize;
    loop {
        let kf = T::from_usize(k).unwrap();
        term = -term * x / kf;
        let add = term / kf;
        sum = sum + add;
        if add.abs() <= eps * sum.abs().max(eps) || k > 200 {
            break;
        }
        k += 1;
    }
    -c::<T>(EULER_GAMMA) - x.ln() - sum
}

// modified Lentz evaluation of the continued fraction for e^x E1(x)
fn e1_cf_scaled<T: Real>(x: T) -> T {
    let tiny = c::<T>(1e-300).max(T::min_positive_value());
    let eps = T::epsilon();
    let two = c::<T>(2.0);
    let mut b = x + T::one();
    let mut cc = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..10_000usize {
        let fi = T::from_usize(i).unwrap();
        let an = -fi * fi;
        b = b + two;
        d = T::one() / (an * d + b);
        cc = b + an / cc;
        let del = cc * d;
        h = h * del;
        if (del - T::one()).abs() <= eps {
            break;
        }
    }
    h
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `log Γ(s)` for `s > 0`.
pub fn ln_gamma<T: Real>(s: T) -> T {
    let half = c::<T>(0.5);
    if s < half {
        let pi = c::<T>(std::f64::consts::PI);
        return (pi / (pi * s).sin()).ln() - ln_gamma(T::one() - s);
    }
    let s = s - T::one();
    let mut a = c::<T>(LANCZOS[0]);
    let t = s + c::<T>(LANCZOS_G) + half;
    for (i, &coef) in LANCZOS.iter().enumerate().skip(1) {
        a = a + c::<T>(coef) / (s + T::from_usize(i).unwrap());
    }
    c::<T>(0.5 * (2.0 * std::f64::consts::PI).ln()) + (s + half) * t.ln() - t + a.ln()
}

/// `Γ(s)` for `s > 0`.
pub fn gamma<T: Real>(s: T) -> T {
    ln_gamma(s).exp()
}

// Σ t^n / (s (s+1) ... (s+n)); times t^s e^{-t} this is γ(s, t)
fn lower_series_sum<T: Real>(s: T, t: T) -> T {
    let eps = T::epsilon();
    let mut ap = s;
    let mut del = T::one() / s;
    let mut sum = del;
    for _ in 0..100_000 {
        ap = ap + T::one();
        del = del * t / ap;
        sum = sum + del;
        if del.abs() < sum.abs() * eps {
            break;
        }
    }
    sum
}

// Lentz continued fraction; times t^s e^{-t} this is Γ(s, t) for t > s + 1
fn upper_cf_sum<T: Real>(s: T, t: T) -> T {
    let tiny = c::<T>(1e-300).max(T::min_positive_value());
    let eps = T::epsilon();
    let two = c::<T>(2.0);
    let mut b = t + T::one() - s;
    let mut cc = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..100_000usize {
        let fi = T::from_usize(i).unwrap();
        let an = -fi * (fi - s);
        b = b + two;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        cc = b + an / cc;
        if cc.abs() < tiny {
            cc = tiny;
        }
        d = T::one() / d;
        let del = d * cc;
        h = h * del;
        if (del - T::one()).abs() <= eps {
            break;
        }
    }
    h
}

fn lower_series<T: Real>(s: T, t: T) -> T {
    lower_series_sum(s, t) * (-t + s * t.ln()).exp()
}

fn upper_cf<T: Real>(s: T, t: T) -> T {
    upper_cf_sum(s, t) * (-t + s * t.ln()).exp()
}

/// Regularized upper incomplete gamma `Γ(s, t) / Γ(s)` for `s > 0`.
pub fn gamma_q<T: Real>(s: T, t: T) -> Result<T, SpecError> {
    check_nonneg(t, "gamma_q requires t >= 0")?;
    if s.is_nan() || s <= T::zero() {
        return Err(SpecError::Domain("gamma_q requires s > 0"));
    }
    Ok(regularized_q(s, t))
}

pub(crate) fn regularized_q<T: Real>(s: T, t: T) -> T {
    if t == T::zero() {
        return T::one();
    }
    let pre = (-t + s * t.ln() - ln_gamma(s)).exp();
    if t < s + T::one() {
        T::one() - pre * lower_series_sum(s, t)
    } else {
        pre * upper_cf_sum(s, t)
    }
}

/// Upper incomplete gamma `Γ(s, t) = ∫_t^∞ e^{-g} g^{s-1} dg`.
///
/// `s = 0` is accepted for `t > 0` and returns `E1(t)`.
pub fn gamma_upper<T: Real>(s: T, t: T) -> Result<T, SpecError> {
    check_nonneg(s, "gamma_upper requires s >= 0")?;
    check_nonneg(t, "gamma_upper requires t >= 0")?;
    if s == T::zero() {
        if t == T::zero() {
            return Err(SpecError::Domain("gamma_upper(0, 0) is infinite"));
        }
        return Ok(e1(t));
    }
    Ok(upper_unchecked(s, t))
}

/// Lower incomplete gamma `γ(s, t) = ∫_0^t e^{-g} g^{s-1} dg`.
pub fn gamma_lower<T: Real>(s: T, t: T) -> Result<T, SpecError> {
    check_nonneg(t, "gamma_lower requires t >= 0")?;
    if s.is_nan() || s <= T::zero() {
        return Err(SpecError::Domain("gamma_lower requires s > 0"));
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    if t < s + T::one() {
        Ok(lower_series(s, t))
    } else {
        Ok(gamma(s) - upper_cf(s, t))
    }
}

pub(crate) fn upper_unchecked<T: Real>(s: T, t: T) -> T {
    if s == T::zero() {
        return e1(t);
    }
    if t == T::zero() {
        return gamma(s);
    }
    if t < s + T::one() {
        gamma(s) - lower_series(s, t)
    } else {
        upper_cf(s, t)
    }
}

/// Exponentially scaled Bessel function `e^{-x} I0(x)`.
pub fn bessel_i0e<T: Real>(x: T) -> Result<T, SpecError> {
    check_nonneg(x, "bessel_i0e requires x >= 0")?;
    Ok(i0e(x))
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0<T: Real>(x: T) -> Result<T, SpecError> {
    check_nonneg(x, "bessel_i0 requires x >= 0")?;
    Ok(i0e(x) * x.exp())
}

pub(crate) fn i0e<T: Real>(x: T) -> T {
    if x <= c::<T>(30.0) {
        let q = x * x / c::<T>(4.0);
        let mut term = T::one();
        let mut sum = T::one();
        let mut k = 1usize;
        loop {
            let kf = T::from_usize(k).unwrap();
            term = term * q / (kf * kf);
            sum = sum + term;
            if term < sum * T::epsilon() || k > 500 {
                break;
            }
            k += 1;
        }
        sum * (-x).exp()
    } else {
        // asymptotic series, truncated at its smallest term
        let eight_x = c::<T>(8.0) * x;
        let mut term = T::one();
        let mut sum = T::one();
        for k in 1..200usize {
            let odd = T::from_usize(2 * k - 1).unwrap();
            let next = term * odd * odd / (T::from_usize(k).unwrap() * eight_x);
            if next >= term {
                break;
            }
            term = next;
            sum = sum + term;
            if term < sum * T::epsilon() {
                break;
            }
        }
        sum / (c::<T>(2.0 * std::f64::consts::PI) * x).sqrt()
    }
}

/// Marcum Q-function of order 1.
///
/// Evaluated as the Poisson(a²/2)-weighted sum of regularized upper gamma
/// functions `Q(k+1, b²/2)`, summed outward from the Poisson mode.
pub fn marcum_q1<T: Real>(a: T, b: T) -> Result<T, SpecError> {
    check_nonneg(a, "marcum_q1 requires a >= 0")?;
    check_nonneg(b, "marcum_q1 requires b >= 0")?;
    Ok(marcum_unchecked(a, b))
}

pub(crate) fn marcum_unchecked<T: Real>(a: T, b: T) -> T {
    let half = c::<T>(0.5);
    if b == T::zero() {
        return T::one();
    }
    let lam = half * a * a;
    let x = half * b * b;
    if lam == T::zero() {
        return (-x).exp();
    }
    let cut = c::<T>(1e-17);
    let mode = lam.floor();
    let m = mode.to_usize().unwrap();
    let mf = mode;
    let w_m = (-lam + mf * lam.ln() - ln_gamma(mf + T::one())).exp();
    // Q(m+1, x) = Pr{Poisson(x) <= m}
    let q_m = regularized_q(mf + T::one(), x);
    let t_m = poisson_pmf(m, x);

    let mut sum = w_m * q_m;
    // upward
    let (mut w, mut q, mut t) = (w_m, q_m, t_m);
    let mut k = m;
    loop {
        k += 1;
        let kf = T::from_usize(k).unwrap();
        w = w * lam / kf;
        t = t * x / kf;
        q = (q + t).min(T::one());
        sum = sum + w * q;
        if w < cut && kf > lam {
            break;
        }
        if k > m + 100_000 {
            break;
        }
    }
    // downward
    let (mut w, mut q, mut t) = (w_m, q_m, t_m);
    let mut k = m;
    while k > 0 {
        let kf = T::from_usize(k).unwrap();
        w = w * kf / lam;
        q = (q - t).max(T::zero());
        t = t * kf / x;
        k -= 1;
        sum = sum + w * q;
        if w < cut {
            break;
        }
    }
    sum.min(T::one()).max(T::zero())
}

fn poisson_pmf<T: Real>(k: usize, x: T) -> T {
    let kf = T::from_usize(k).unwrap();
    if k == 0 {
        return (-x).exp();
    }
    (-x + kf * x.ln() - ln_gamma(kf + T::one())).exp()
}

/// The five closed-form exponentially weighted integrals built from `E1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralKind {
    /// `∫_x^∞ e^{-t} log t dt`
    LogT,
    /// `∫_x^∞ e^{-t} / t² dt`
    InvT2,
    /// `∫_x^∞ e^{-t} t/(t+y) dt`
    TOverTpy,
    /// `∫_x^∞ e^{-t} t/(t+y)² dt`
    TOverTpySq,
    /// `∫_x^∞ e^{-t} t²/(t+y)² dt`
    T2OverTpySq,
}

impl std::str::FromStr for IntegralKind {
    type Err = SpecError;
    fn from_str(s: &str) -> Result<Self, SpecError> {
        match s {
            "log_t" => Ok(Self::LogT),
            "inv_t2" => Ok(Self::InvT2),
            "t_over_tpy" => Ok(Self::TOverTpy),
            "t_over_tpy_sq" => Ok(Self::TOverTpySq),
            "t2_over_tpy_sq" => Ok(Self::T2OverTpySq),
            _ => Err(SpecError::Usage(format!("unknown integral kind '{s}'"))),
        }
    }
}

/// Closed forms for `∫_x^∞ e^{-t} f(t) dt` with `f` selected by `kind`.
/// `y` is ignored by the first two kinds.
pub fn exp_weighted_integral<T: Real>(kind: IntegralKind, x: T, y: T) -> Result<T, SpecError> {
    check_nonneg(x, "exp_weighted_integral requires x >= 0")?;
    check_nonneg(y, "exp_weighted_integral requires y >= 0")?;
    let ex = (-x).exp();
    match kind {
        IntegralKind::LogT => {
            if x == T::zero() {
                Ok(-c::<T>(EULER_GAMMA))
            } else {
                Ok(e1(x) + ex * x.ln())
            }
        }
        IntegralKind::InvT2 => {
            if x == T::zero() {
                return Err(SpecError::Domain("inv_t2 diverges at x = 0"));
            }
            Ok(ex / x - e1(x))
        }
        IntegralKind::TOverTpy => Ok(int_t_over_tpy(x, y)),
        IntegralKind::TOverTpySq => {
            if x + y == T::zero() {
                return Err(SpecError::Domain("t_over_tpy_sq diverges at x = y = 0"));
            }
            Ok(int_t_over_tpy_sq(x, y))
        }
        IntegralKind::T2OverTpySq => Ok(int_t2_over_tpy_sq(x, y)),
    }
}

// Past this `x + y` the E1 forms cancel badly; a Laguerre rule in `t − x`
// is exact to rounding there since the pole at `−y` is far from the axis.
const CANCEL_Z: f64 = 4.0;

fn laguerre48() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| crate::numerics::laguerre_rule(48))
}

fn shifted_laguerre<T: Real>(x: T, f: impl Fn(T) -> T) -> T {
    let (nodes, weights) = laguerre48();
    let mut s = T::zero();
    for (u, w) in nodes.iter().zip(weights) {
        s = s + c::<T>(*w) * f(x + c::<T>(*u));
    }
    (-x).exp() * s
}

pub(crate) fn int_t_over_tpy<T: Real>(x: T, y: T) -> T {
    let ex = (-x).exp();
    if y == T::zero() {
        return ex;
    }
    if x + y > c(CANCEL_Z) {
        return shifted_laguerre(x, |t| t / (t + y));
    }
    ex * (T::one() - y * e1_scaled(x + y))
}

pub(crate) fn int_t_over_tpy_sq<T: Real>(x: T, y: T) -> T {
    let ex = (-x).exp();
    if y == T::zero() {
        return e1(x);
    }
    if x + y > c(CANCEL_Z) {
        return shifted_laguerre(x, |t| t / ((t + y) * (t + y)));
    }
    ex * ((y + T::one()) * e1_scaled(x + y) - y / (x + y))
}

pub(crate) fn int_t2_over_tpy_sq<T: Real>(x: T, y: T) -> T {
    let ex = (-x).exp();
    if y == T::zero() {
        return ex;
    }
    if x + y > c(CANCEL_Z) {
        return shifted_laguerre(x, |t| t * t / ((t + y) * (t + y)));
    }
    let two = c::<T>(2.0);
    ex * (T::one() + y * y / (x + y) - y * (y + two) * e1_scaled(x + y))
}
