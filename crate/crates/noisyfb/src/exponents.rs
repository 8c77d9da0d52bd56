//! Analytic reliability machinery: Gallager AWGN exponents with their
//! region boundaries, the Poltyrev exponent, the per-round SNR recursion
//! of the block scheme, the feedback error-exponent optimization, its
//! zero-rate high-SNR asymptotics, and the zero-rate comparison against
//! the concatenated linear-feedback construction.
//!
//! Unit discipline: every exponent is computed and returned in nats per
//! channel use; rates are accepted in bits per channel use and converted
//! internally.

use crate::{numerics, Error, Result};
use serde::Serialize;

const LN_2: f64 = std::f64::consts::LN_2;

/// Rate-region boundaries of the AWGN reliability curve, in bits per use.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentRegions {
    pub capacity: f64,
    pub critical_rate: f64,
    pub expurgation_rate: f64,
}

/// Which branch of the reliability curve a rate falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    Expurgated,
    RandomCoding,
    SpherePacking,
    AboveCapacity,
}

pub fn regions(snr: f64) -> Result<ExponentRegions> {
    check_snr(snr)?;
    let s = (1.0 + snr * snr / 4.0).sqrt();
    Ok(ExponentRegions {
        capacity: numerics::capacity(snr)?,
        critical_rate: 0.5 * (0.5 + snr / 4.0 + 0.5 * s).log2(),
        expurgation_rate: 0.5 * (0.5 + 0.5 * s).log2(),
    })
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::Domain(format!("snr must be positive, got {snr}")));
    }
    Ok(())
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::Domain(format!("rate must be nonnegative, got {rate}")));
    }
    Ok(())
}

/// Sphere-packing exponent (nats). Zero at capacity, `snr/2` as the rate
/// vanishes; an upper bound on the reliability function.
pub fn e_sp(snr: f64, rate_bits: f64) -> Result<f64> {
    check_snr(snr)?;
    check_rate(rate_bits)?;
    if rate_bits == 0.0 {
        return Ok(snr / 2.0);
    }
    let beta = (2.0 * rate_bits * LN_2).exp();
    let bm1 = beta - 1.0;
    let x = 4.0 * beta / (snr * bm1);
    // sqrt(1+x) - 1 without cancellation: the naive form loses enough
    // precision at snr ~ 1e13 to corrupt the feedback-exponent solver
    let qm1 = x / ((1.0 + x).sqrt() + 1.0);
    let t1 = (snr / (4.0 * beta)) * (2.0 - bm1 * qm1);
    let t2 = 0.5 * (beta - (snr * bm1 / 2.0) * qm1).ln();
    Ok(t1 + t2)
}

/// Random-coding exponent in the straight-line region (nats):
/// `E_sp(R_cr) + (R_cr - R)` with rates in nats. Continuous with the
/// sphere-packing branch at the critical rate by construction and with
/// the expurgated branch at the expurgation rate by tangency.
pub fn e_rc(snr: f64, rate_bits: f64) -> Result<f64> {
    check_snr(snr)?;
    check_rate(rate_bits)?;
    let r_cr = regions(snr)?.critical_rate;
    Ok(e_sp(snr, r_cr)? + (r_cr - rate_bits) * LN_2)
}

/// Expurgated exponent (nats): `(snr/4)(1 - sqrt(1 - 2^(-2R)))`;
/// equals `snr/4` at zero rate.
pub fn e_ex(snr: f64, rate_bits: f64) -> Result<f64> {
    check_snr(snr)?;
    check_rate(rate_bits)?;
    // 1 - 2^{-2R} = -expm1(-2R ln 2), stable for small rates
    let one_minus = -(-2.0 * rate_bits * LN_2).exp_m1();
    Ok(snr / 4.0 * (1.0 - one_minus.max(0.0).sqrt()))
}

/// The AWGN reliability lower bound with its region, dispatching between
/// the expurgated, random-coding and sphere-packing branches. Rates at or
/// above capacity return a zero exponent flagged [`Region::AboveCapacity`].
pub fn e_r_with_region(snr: f64, rate_bits: f64) -> Result<(f64, Region)> {
    check_snr(snr)?;
    if !(rate_bits > 0.0) {
        return Err(Error::Domain(format!("rate must be positive, got {rate_bits}")));
    }
    Ok(e_r_dispatch(snr, rate_bits, &regions(snr)?))
}

/// [`e_r_with_region`] without the region tag.
pub fn e_r(snr: f64, rate_bits: f64) -> Result<f64> {
    Ok(e_r_with_region(snr, rate_bits)?.0)
}

fn e_r_dispatch(snr: f64, rate_bits: f64, reg: &ExponentRegions) -> (f64, Region) {
    if rate_bits >= reg.capacity {
        return (0.0, Region::AboveCapacity);
    }
    if rate_bits > reg.critical_rate {
        (e_sp(snr, rate_bits).unwrap_or(0.0).max(0.0), Region::SpherePacking)
    } else if rate_bits > reg.expurgation_rate {
        (e_rc(snr, rate_bits).unwrap_or(0.0), Region::RandomCoding)
    } else {
        (e_ex(snr, rate_bits).unwrap_or(0.0), Region::Expurgated)
    }
}

/// Internal total form used by the feedback optimization: rate zero is
/// admitted (expurgated limit `snr/4`).
fn e_r_total(snr: f64, rate_bits: f64, reg: &ExponentRegions) -> f64 {
    if rate_bits == 0.0 {
        snr / 4.0
    } else {
        e_r_dispatch(snr, rate_bits, reg).0
    }
}

/// Poltyrev exponent for volume-to-noise ratio (over `2 pi e`) `x >= 1`.
pub fn poltyrev_ep(x: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return Err(Error::Domain(format!("poltyrev_ep needs x >= 1, got {x}")));
    }
    Ok(if x <= 2.0 {
        0.5 * (x - 1.0 - x.ln())
    } else if x <= 4.0 {
        0.5 * (x.ln() + 1.0 - (4f64).ln())
    } else {
        x / 8.0
    })
}

/// Coupled-system end-to-end SNR after `k` blocks:
/// `snr (1 + snr (1 - L/snr_fb)/(1 + L/dsnr))^(k-1)`.
pub fn snr_k(looseness: f64, k: usize, snr: f64, dsnr: f64) -> Result<f64> {
    check_snr(snr)?;
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let snr_fb = snr * dsnr;
    if !(1.0 <= looseness && looseness <= snr_fb) {
        return Err(Error::Infeasible(format!(
            "looseness {looseness} outside [1, snr_fb = {snr_fb}]"
        )));
    }
    let omega = 1.0 + snr * (1.0 - looseness / snr_fb) / (1.0 + looseness / dsnr);
    Ok(snr * omega.powi(k as i32 - 1))
}

/// The feedback error exponent value with its optimizing point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentResult {
    pub rate_bits: f64,
    /// The optimized exponent, nats per channel use.
    pub value: f64,
    pub k_star: usize,
    pub l_star: f64,
    /// Channel-coding exponent at the optimum (nats, before the 1/2K).
    pub e_r_at_opt: f64,
    /// Poltyrev exponent at the optimum (nats, before the 1/2K).
    pub e_p_at_opt: f64,
}

/// The interlaced-scheme error exponent: maximize over the round count K
/// and the looseness L the balanced
/// `min(E_r(snr_K(L), K R), E_p(L)) / (2K)`.
///
/// For each K the inner objective is unimodal in L (the Poltyrev term
/// strictly increases from zero, the coding term is non-increasing), so
/// the optimizer bisects for the crossing and falls back to the better
/// endpoint when none exists.
pub fn e_fb(rate_bits: f64, snr: f64, dsnr: f64, k_max: usize) -> Result<ExponentResult> {
    check_snr(snr)?;
    check_rate(rate_bits)?;
    if !(dsnr > 1.0) {
        return Err(Error::Domain(format!("dsnr must exceed 1, got {dsnr}")));
    }
    if k_max == 0 {
        return Err(Error::Domain("k_max must be at least 1".into()));
    }
    let capacity = numerics::capacity(snr)?;
    let mut best = ExponentResult {
        rate_bits,
        value: 0.0,
        k_star: 1,
        l_star: f64::NAN,
        e_r_at_opt: 0.0,
        e_p_at_opt: 0.0,
    };
    if rate_bits >= capacity {
        return Ok(best);
    }
    let snr_fb = snr * dsnr;
    let lo = 1.0 + 1e-6;
    let hi = snr_fb * (1.0 - 1e-6);
    if hi <= lo {
        return Ok(best);
    }
    for k in 1..=k_max {
        let kr = k as f64 * rate_bits;
        let eval = |l: f64| -> (f64, f64) {
            let s = snr_k(l, k, snr, dsnr).expect("looseness within bracket");
            let reg = regions(s).expect("positive snr");
            (e_r_total(s, kr, &reg), poltyrev_ep(l).expect("l >= 1"))
        };
        let (er_lo, ep_lo) = eval(lo);
        let (er_hi, ep_hi) = eval(hi);
        let (l_star, er, ep) = if ep_lo >= er_lo {
            (lo, er_lo, ep_lo)
        } else if ep_hi <= er_hi {
            (hi, er_hi, ep_hi)
        } else {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let (er_m, ep_m) = eval(m);
                if ep_m >= er_m {
                    b = m;
                } else {
                    a = m;
                }
            }
            let m = 0.5 * (a + b);
            let (er_m, ep_m) = eval(m);
            (m, er_m, ep_m)
        };
        let value = er.min(ep) / (2.0 * k as f64);
        if value > best.value {
            best = ExponentResult {
                rate_bits,
                value,
                k_star: k,
                l_star,
                e_r_at_opt: er,
                e_p_at_opt: ep,
            };
        }
    }
    Ok(best)
}

/// Closed-form zero-rate operating point in the high-SNR expurgation
/// regime, and the feedback exponent's value at it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZeroRateAsymptotics {
    pub k_star: usize,
    pub l_star: f64,
    /// The balanced feasible point's exponent, via the exact formulas.
    pub balanced_value: f64,
    /// The closed-form bound `snr dsnr / (16 K (1 + (dsnr/2)^(1/K)))`.
    pub closed_form_bound: f64,
    /// Both exponents sit in their expurgation branches at the point.
    pub regime_ok: bool,
}

/// Zero-rate asymptotics: `K* = round(0.78 ln(dsnr/2))` (at least 2),
/// `L* = snr_fb / (1 + (dsnr/2)^(1/K*))`, and the value of the balanced
/// point. Reports (rather than silently computes through) a regime
/// violation when the point leaves the expurgation branches.
pub fn e_fb_zero_rate_asymptotics(snr: f64, dsnr: f64) -> Result<ZeroRateAsymptotics> {
    check_snr(snr)?;
    if !(dsnr > 2.0) {
        return Err(Error::Domain(format!(
            "zero-rate asymptotics need dsnr > 2, got {dsnr}"
        )));
    }
    let k_star = ((0.78 * (dsnr / 2.0).ln()).round() as usize).max(2);
    let snr_fb = snr * dsnr;
    let l_star = snr_fb / (1.0 + (dsnr / 2.0).powf(1.0 / k_star as f64));
    let s = snr_k(l_star, k_star, snr, dsnr)?;
    let er = s / 4.0; // zero rate: expurgated limit
    let ep = poltyrev_ep(l_star)?;
    let balanced_value = er.min(ep) / (2.0 * k_star as f64);
    let closed_form_bound =
        snr * dsnr / (16.0 * k_star as f64 * (1.0 + (dsnr / 2.0).powf(1.0 / k_star as f64)));
    // expurgation regimes: Poltyrev x/8 branch needs L* > 4; E_r at zero
    // rate is expurgated by definition
    let regime_ok = l_star > 4.0;
    Ok(ZeroRateAsymptotics { k_star, l_star, balanced_value, closed_form_bound, regime_ok })
}

/// Zero-rate exponent of the concatenated linear-feedback construction:
/// `(snr/4)(1 + dsnr snr/(1+snr))`.
pub fn chance_love_zero_rate(snr: f64, dsnr: f64) -> Result<f64> {
    check_snr(snr)?;
    if !(dsnr >= 0.0) {
        return Err(Error::Domain(format!("dsnr must be nonnegative, got {dsnr}")));
    }
    Ok(snr / 4.0 * (1.0 + dsnr * snr / (1.0 + snr)))
}

/// Upper bound on the ratio of that construction's shut-off rate to
/// capacity; tends to 1/2 as the snr grows at fixed dsnr.
pub fn rth_ratio_bound(snr: f64, dsnr: f64) -> Result<f64> {
    if !(snr > 1.0) {
        return Err(Error::Domain(format!("ratio bound needs snr > 1, got {snr}")));
    }
    if !(dsnr > 0.0) {
        return Err(Error::Domain(format!("dsnr must be positive, got {dsnr}")));
    }
    let log2_snr = snr.log2();
    // (1+snr)/snr^2 = 1/snr + 1/snr^2, written to survive huge snr
    let inv = 1.0 / snr;
    let tail = (inv + inv * inv) * std::f64::consts::LOG2_E / (2.0 * dsnr * log2_snr);
    Ok(0.5 * (1.0 + (1.0 + (1.0 + dsnr).log2()) / log2_snr + tail))
}

/// One row of an exponent sweep at fixed snr and dsnr.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentRow {
    pub rate_bits: f64,
    pub e_sp: f64,
    pub e_r: f64,
    pub e_fb: f64,
    pub k_star: usize,
    pub l_star: f64,
    pub above_capacity: bool,
}

/// Evaluate the exponent triple over a rate grid (bits per use).
pub fn exponent_sweep(
    snr: f64,
    dsnr: f64,
    rates: &[f64],
    k_max: usize,
) -> Result<Vec<ExponentRow>> {
    let reg = regions(snr)?;
    rates
        .iter()
        .map(|&rate| {
            let above = rate >= reg.capacity;
            let fb = e_fb(rate, snr, dsnr, k_max)?;
            Ok(ExponentRow {
                rate_bits: rate,
                e_sp: if above { 0.0 } else { e_sp(snr, rate)? },
                e_r: e_r_total(snr, rate, &reg),
                e_fb: fb.value,
                k_star: fb.k_star,
                l_star: fb.l_star,
                above_capacity: above,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_ordering() {
        for &snr in &[0.5, 1.0, 10.0, 100.0, 1e4] {
            let r = regions(snr).unwrap();
            assert!(0.0 < r.expurgation_rate);
            assert!(r.expurgation_rate < r.critical_rate);
            assert!(r.critical_rate < r.capacity, "snr={snr}");
        }
    }

    #[test]
    fn e_sp_zero_at_capacity() {
        for &snr in &[1.0, 10.0, 100.0] {
            let c = numerics::capacity(snr).unwrap();
            assert!(e_sp(snr, c).unwrap().abs() <= 1e-9, "snr={snr}");
        }
    }

    #[test]
    fn e_ex_known_values() {
        // zero rate: snr/4
        assert!((e_ex(8.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        // rate -> 0 limit through e_r dispatch
        assert!((e_r(8.0, 1e-12).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn reliability_curve_continuity_at_boundaries() {
        for &snr in &[1.0, 10.0, 100.0] {
            let r = regions(snr).unwrap();
            let d_cr = (e_sp(snr, r.critical_rate).unwrap()
                - e_rc(snr, r.critical_rate).unwrap())
            .abs();
            let d_ex = (e_ex(snr, r.expurgation_rate).unwrap()
                - e_rc(snr, r.expurgation_rate).unwrap())
            .abs();
            assert!(d_cr <= 1e-9, "snr={snr}: E_sp/E_rc gap {d_cr:e}");
            assert!(d_ex <= 1e-9, "snr={snr}: E_rc/E_ex gap {d_ex:e}");
        }
    }

    #[test]
    fn e_r_decreasing_and_dominated_by_sphere_packing() {
        let snr = 100.0;
        let c = numerics::capacity(snr).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..40 {
            let rate = c * i as f64 / 40.0;
            let (er, region) = e_r_with_region(snr, rate).unwrap();
            assert!(er < prev, "not decreasing at {rate}");
            assert!(e_sp(snr, rate).unwrap() >= er - 1e-12, "sp below r at {rate}");
            assert_ne!(region, Region::AboveCapacity);
            prev = er;
        }
        let (v, region) = e_r_with_region(snr, c * 1.01).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(region, Region::AboveCapacity);
        assert!(e_r(snr, 0.0).is_err());
    }

    #[test]
    fn poltyrev_branches() {
        assert_eq!(poltyrev_ep(1.0).unwrap(), 0.0);
        // right endpoint of the first branch
        assert!((poltyrev_ep(2.0).unwrap() - 0.15342640972002736).abs() < 1e-15);
        // both middle-branch endpoints
        let mid_left = 0.5 * (2.0f64.ln() + 1.0 - 4.0f64.ln());
        assert!((poltyrev_ep(2.0 + 1e-14).unwrap() - mid_left - 0.0).abs() < 1e-12);
        assert!((poltyrev_ep(4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((poltyrev_ep(4.0 + 1e-14).unwrap() - 0.5).abs() < 1e-12);
        assert!(poltyrev_ep(0.99).is_err());
        // strictly increasing above 1
        let mut prev = 0.0;
        for i in 1..100 {
            let v = poltyrev_ep(1.0 + 0.2 * i as f64).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn snr_k_limits() {
        // k = 1: snr for any feasible looseness
        assert!((snr_k(3.0, 1, 10.0, 50.0).unwrap() - 10.0).abs() < 1e-12);
        // l -> 1, dsnr -> inf recovers the noiseless recursion snr(1+snr)^{k-1}
        let v = snr_k(1.0, 4, 10.0, 1e12).unwrap();
        assert!((v / (10.0 * 11f64.powi(3)) - 1.0).abs() < 1e-9);
        assert!(snr_k(0.5, 2, 10.0, 50.0).is_err());
        assert!(snr_k(1e9, 2, 10.0, 50.0).is_err());
    }

    #[test]
    fn snr_k_matches_scalar_recursion() {
        // the block recursion and the scalar scheme's recursion agree
        let snr = 316.0;
        let dsnr = 100.0;
        let l = 10.32;
        let sys = crate::schemes::SystemParams::new(snr, snr * dsnr, 1.0, 1.0, 19).unwrap();
        let params = crate::schemes::SchemeParams::from_looseness(&sys, l).unwrap();
        for n in 1..=19 {
            let via_sigma = 1.0 / (params.error_std[n - 1] * params.error_std[n - 1]);
            let via_snr_k = snr_k(l, n, snr, dsnr).unwrap();
            assert!((via_sigma / via_snr_k - 1.0).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn e_fb_dominates_half_e_r() {
        let snr = 100.0;
        let c = numerics::capacity(snr).unwrap();
        for dsnr_db in [20.0, 30.0] {
            let dsnr = 10f64.powf(dsnr_db / 10.0);
            for i in 1..=20 {
                let rate = c * i as f64 / 21.0;
                let fb = e_fb(rate, snr, dsnr, 64).unwrap();
                let reg = regions(snr).unwrap();
                let er = e_r_total(snr, rate, &reg);
                assert!(
                    fb.value >= er / 2.0 - 1e-9,
                    "dsnr {dsnr_db} rate {rate}: {} < {}",
                    fb.value,
                    er / 2.0
                );
                assert!(
                    (fb.value - fb.e_r_at_opt.min(fb.e_p_at_opt) / (2.0 * fb.k_star as f64))
                        .abs()
                        < 1e-12
                );
            }
        }
    }

    #[test]
    fn e_fb_beats_sphere_packing_with_good_feedback() {
        let snr = 100.0;
        let c = numerics::capacity(snr).unwrap();
        // dsnr = 30 dB: beats sphere packing across [0.1C, 0.8C]
        for i in 2..=16 {
            let rate = c * i as f64 / 20.0;
            let fb = e_fb(rate, snr, 1000.0, 64).unwrap();
            let sp = e_sp(snr, rate).unwrap();
            assert!(fb.value > sp, "rate {rate}: {} <= {sp}", fb.value);
        }
        // dsnr = 20 dB: beats it somewhere
        let mut wins = 0;
        for i in 1..=19 {
            let rate = c * i as f64 / 20.0;
            let fb = e_fb(rate, snr, 100.0, 64).unwrap();
            if fb.value > e_sp(snr, rate).unwrap() {
                wins += 1;
            }
        }
        assert!(wins >= 1, "no rate beats sphere packing at dsnr = 20 dB");
    }

    #[test]
    fn e_fb_monotone_in_rate_and_dsnr() {
        let snr = 100.0;
        let c = numerics::capacity(snr).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=10 {
            let rate = c * i as f64 / 11.0;
            let v = e_fb(rate, snr, 100.0, 32).unwrap().value;
            assert!(v <= prev + 1e-12, "rate {rate}");
            prev = v;
        }
        let mut prev = 0.0;
        for dsnr_db in [12.0, 15.0, 18.0, 21.0, 24.0, 27.0, 30.0] {
            let v = e_fb(0.5 * c, snr, 10f64.powf(dsnr_db / 10.0), 32).unwrap().value;
            assert!(v >= prev - 1e-12, "dsnr {dsnr_db}");
            prev = v;
        }
    }

    #[test]
    fn e_fb_inner_solution_balances_when_interior() {
        let fb = e_fb(0.5, 100.0, 100.0, 32).unwrap();
        // interior optimum: the two exponents cross to solver tolerance
        if fb.l_star > 1.01 && fb.l_star < 100.0 * 100.0 * 0.99 {
            assert!(
                (fb.e_r_at_opt - fb.e_p_at_opt).abs() <= 1e-8 * fb.e_r_at_opt.max(1.0),
                "imbalance: {} vs {}",
                fb.e_r_at_opt,
                fb.e_p_at_opt
            );
        }
    }

    #[test]
    fn e_fb_above_capacity_is_zero() {
        let snr = 100.0;
        let c = numerics::capacity(snr).unwrap();
        let fb = e_fb(c + 0.1, snr, 100.0, 16).unwrap();
        assert_eq!(fb.value, 0.0);
    }

    #[test]
    fn zero_rate_asymptotics_at_published_point() {
        // dsnr = 20 dB: K* = round(0.78 ln 50) = 3
        let z = e_fb_zero_rate_asymptotics(1e4, 100.0).unwrap();
        assert_eq!(z.k_star, 3);
        assert!(z.regime_ok);
        // balanced point equals the closed form when the Poltyrev side binds
        assert!((z.balanced_value / z.closed_form_bound - 1.0).abs() < 1e-9);
        // the optimizer dominates any feasible point
        let opt = e_fb(0.0, 1e4, 100.0, 64).unwrap();
        assert!(opt.value >= z.balanced_value - 1e-9);
    }

    #[test]
    fn zero_rate_ratio_grows_with_dsnr() {
        let snr = 1e4;
        let sp0 = e_sp(snr, 0.0).unwrap();
        let mut prev = 0.0;
        for dsnr_db in [10.0, 20.0, 30.0] {
            let v = e_fb(0.0, snr, 10f64.powf(dsnr_db / 10.0), 64).unwrap().value / sp0;
            assert!(v > prev, "ratio not growing at dsnr {dsnr_db}");
            prev = v;
        }
    }

    #[test]
    fn chance_love_values() {
        // no feedback advantage: reduces to the expurgated zero-rate snr/4
        assert!((chance_love_zero_rate(8.0, 0.0).unwrap() - 2.0).abs() < 1e-12);
        // at snr = 10 dB, dsnr = 23 dB the concatenated construction beats
        // the interlaced exponent at zero rate
        let snr = 10.0;
        let dsnr = 10f64.powf(2.3);
        let cl = chance_love_zero_rate(snr, dsnr).unwrap();
        let fb = e_fb(0.0, snr, dsnr, 64).unwrap();
        assert!(cl > fb.value, "{cl} <= {}", fb.value);
    }

    #[test]
    fn rth_ratio_limit() {
        // frozen from direct evaluation
        let v = rth_ratio_bound(1e10, 100.0).unwrap();
        assert!((v - 0.6152675684723421).abs() < 1e-12);
        // decreasing toward 1/2 as snr grows
        let seq: Vec<f64> = [1e10, 1e20, 1e50, 1e100, 1e300]
            .iter()
            .map(|&s| rth_ratio_bound(s, 100.0).unwrap())
            .collect();
        for w in seq.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!((seq[4] - 0.5).abs() < 0.005, "{}", seq[4]);
        assert!(rth_ratio_bound(0.9, 100.0).is_err());
    }

    #[test]
    fn sweep_rows_are_consistent() {
        let snr = 100.0;
        let c = numerics::capacity(snr).unwrap();
        let rates: Vec<f64> = (1..=12).map(|i| c * i as f64 / 10.0).collect();
        let rows = exponent_sweep(snr, 100.0, &rates, 32).unwrap();
        for row in &rows {
            if row.above_capacity {
                assert_eq!(row.e_fb, 0.0);
                assert_eq!(row.e_r, 0.0);
            } else {
                assert!(row.e_fb >= row.e_r / 2.0 - 1e-9);
            }
        }
        assert!(rows.iter().filter(|r| r.above_capacity).count() >= 2);
    }
}
