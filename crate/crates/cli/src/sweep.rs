//! Grid sweeps over registered methods.

use fading_core::blockfade::time_sharing_hull;
use fading_core::numerics::{db, from_db, wideband_metrics};
use fading_core::{GmiError, RateResult};
use rayon::prelude::*;

use crate::output::{sort_rows, CsvRow};
use crate::registry::{Ctx, Method};

/// Rows plus notes on errors, turn-back regions and unreachable targets.
#[derive(Debug, Default)]
pub struct SweepOutput {
    pub rows: Vec<CsvRow>,
    pub notes: Vec<String>,
    pub errors: usize,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one (method, budget) cell, independent of evaluation order.
pub fn cell_seed(seed: u64, method: usize, p: f64) -> u64 {
    splitmix(seed ^ splitmix(method as u64 ^ splitmix(p.to_bits())))
}

fn row(p: f64, r: &RateResult, label: &str) -> CsvRow {
    CsvRow { p, snr_db: db(p), ebn0_db: r.ebn0_db, rate_bits: r.bits, rate_nats: r.nats, ci_bits: r.ci_bits(), method: label.to_string() }
}

fn error_row(p: f64, label: &str) -> CsvRow {
    CsvRow { p, snr_db: db(p), ebn0_db: f64::NAN, rate_bits: f64::NAN, rate_nats: f64::NAN, ci_bits: f64::NAN, method: format!("{label} (error)") }
}

fn eval_all(methods: &[Method], ps: &[f64], ctx: &Ctx, seed: u64) -> Vec<(usize, f64, Result<RateResult, GmiError>)> {
    let jobs: Vec<(usize, f64)> = (0..methods.len()).flat_map(|m| ps.iter().map(move |&p| (m, p))).collect();
    jobs.into_par_iter().map(|(m, p)| (m, p, methods[m].eval(p, ctx, cell_seed(seed, m, p)))).collect()
}

fn hull_rows(label: &str, pts: &[(f64, f64)]) -> Vec<CsvRow> {
    let mut pts: Vec<(f64, f64)> = pts.iter().copied().filter(|x| x.1.is_finite()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let h = time_sharing_hull(&pts);
    pts.iter().zip(h).map(|(&(p, _), r)| row(p, &RateResult::exact(r, p), &format!("{label}-hull"))).collect()
}

/// Evaluates every method at every budget.
pub fn sweep_power(methods: &[Method], ps: &[f64], ctx: &Ctx, seed: u64) -> SweepOutput {
    let mut out = SweepOutput::default();
    let results = eval_all(methods, ps, ctx, seed);
    for (m, p, r) in &results {
        let label = &methods[*m].label;
        match r {
            Ok(r) => out.rows.push(row(*p, r, label)),
            Err(e) => {
                out.errors += 1;
                out.notes.push(format!("error: {label} at P={p}: {e}"));
                out.rows.push(error_row(*p, label));
            }
        }
    }
    for (i, m) in methods.iter().enumerate() {
        if m.hull {
            let pts: Vec<(f64, f64)> = results.iter().filter(|x| x.0 == i).filter_map(|x| x.2.as_ref().ok().map(|r| (x.1, r.nats))).collect();
            out.rows.extend(hull_rows(&m.label, &pts));
        }
    }
    sort_rows(&mut out.rows);
    out
}

/// Solves `Eb/N0(P) = target` on the scan grid; every crossing is reported,
/// and more than one marks a turn-back region.
pub fn sweep_ebn0(methods: &[Method], targets: &[f64], scan: &[f64], ctx: &Ctx, seed: u64) -> SweepOutput {
    let mut out = SweepOutput::default();
    let results = eval_all(methods, scan, ctx, seed);
    for (mi, m) in methods.iter().enumerate() {
        let mut curve: Vec<(f64, f64)> = results
            .iter()
            .filter(|x| x.0 == mi)
            .filter_map(|x| x.2.as_ref().ok().filter(|r| r.ebn0_db.is_finite()).map(|r| (x.1, r.ebn0_db)))
            .collect();
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        let failed = results.iter().filter(|x| x.0 == mi && x.2.is_err()).count();
        if failed > 0 {
            out.errors += failed;
            out.notes.push(format!("error: {} failed at {failed} scan points", m.label));
        }
        let mut pts = Vec::new();
        for &e in targets {
            let mut roots = Vec::new();
            for w in curve.windows(2) {
                let (a, b) = (w[0].1 - e, w[1].1 - e);
                if a == 0.0 || a * b < 0.0 {
                    roots.push(refine(m, ctx, seed, mi, e, w[0], w[1]));
                }
            }
            if let Some(&(p, v)) = curve.last() {
                if v == e {
                    roots.push(Ok(p));
                }
            }
            match roots.len() {
                0 => out.notes.push(format!("unreachable: {} never attains Eb/N0 = {e} dB on the scan grid", m.label)),
                1 => {}
                n => out.notes.push(format!("turn-back: {} attains Eb/N0 = {e} dB at {n} budgets", m.label)),
            }
            for p in roots {
                match p.and_then(|p| m.eval(p, ctx, cell_seed(seed, mi, p)).map(|r| (p, r))) {
                    Ok((p, r)) => {
                        pts.push((p, r.nats));
                        out.rows.push(row(p, &r, &m.label));
                    }
                    Err(err) => {
                        out.errors += 1;
                        out.notes.push(format!("error: {} at Eb/N0 = {e} dB: {err}", m.label));
                        out.rows.push(error_row(f64::NAN, &m.label));
                    }
                }
            }
        }
        if m.hull {
            out.rows.extend(hull_rows(&m.label, &pts));
        }
    }
    sort_rows(&mut out.rows);
    out
}

fn refine(m: &Method, ctx: &Ctx, seed: u64, mi: usize, target: f64, a: (f64, f64), b: (f64, f64)) -> Result<f64, GmiError> {
    // linear in log P between the bracketing scan points
    let (la, lb) = (a.0.ln(), b.0.ln());
    let frac = (target - a.1) / (b.1 - a.1);
    let guess = (la + frac * (lb - la)).exp();
    if m.mc {
        return Ok(guess);
    }
    let f = |lp: f64| -> Result<f64, GmiError> { Ok(m.eval(lp.exp(), ctx, cell_seed(seed, mi, lp.exp()))?.ebn0_db - target) };
    let (mut lo, mut hi) = (la, lb);
    let mut flo = a.1 - target;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid.exp());
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Low-SNR metrics for a deterministic method, `None` when not computable.
pub fn wideband(m: &Method, ctx: &Ctx) -> Option<(f64, f64)> {
    if m.mc {
        return None;
    }
    let w = wideband_metrics(|p: f64| if p == 0.0 { 0.0 } else { m.eval(p, ctx, 0).map(|r| r.nats).unwrap_or(f64::NAN) }, 1e-3);
    (w.ebn0_min_db.is_finite()).then_some((w.ebn0_min_db, w.slope_s))
}

/// Budgets for a dB grid.
pub fn budgets(snr_db: &[f64]) -> Vec<f64> {
    snr_db.iter().map(|&x| from_db(x)).collect()
}
