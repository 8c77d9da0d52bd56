//! Scalar numeric primitives shared by every other module: Gaussian tail
//! function and its inverse, decibel conversion, AWGN capacity and the
//! capacity gap.
//!
//! `qfunc` is evaluated by an error-function series in the central region
//! and a Mills-ratio continued fraction in the tail, giving relative error
//! below 1e-12 for outputs down to 1e-300. `qinv` is bracketed bisection
//! followed by a Newton polish. Rates are bits per channel use throughout
//! the crate.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// A value in decibels, `x_db = 10 log10(x)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Decibel(pub f64);

impl Decibel {
    pub fn from_linear(x: f64) -> Decibel {
        Decibel(10.0 * x.log10())
    }

    pub fn linear(self) -> f64 {
        10f64.powf(self.0 / 10.0)
    }

    pub fn db(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for Decibel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} dB", self.0)
    }
}

/// A probability, validated to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(p: f64) -> Result<Probability> {
        if (0.0..=1.0).contains(&p) {
            Ok(Probability(p))
        } else {
            Err(Error::Domain(format!("probability out of [0,1]: {p}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(p: f64) -> Result<Probability> {
        Probability::new(p)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Standard normal density.
fn gauss_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// erf by its Taylor series; adequate (relative error ~1e-14 after the
/// 0.5 - erf/2 cancellation) for arguments up to qfunc's tail switch.
fn erf_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = z; // z^{2n+1} / n!
    let mut sum = z;
    let mut n = 1.0;
    while term.abs() > 1e-20 && n < 200.0 {
        term *= -z2 / n;
        sum += term / (2.0 * n + 1.0);
        n += 1.0;
    }
    FRAC_2_SQRT_PI * sum
}

/// Mills ratio Q(x)/phi(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))) by the
/// modified Lentz algorithm. Used for x above the series region, where it
/// converges in well under 500 terms.
fn mills_ratio_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..2000u32 {
        let a = if n == 1 { 1.0 } else { (n - 1) as f64 };
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    f
}

/// The Gaussian Q-function, the upper tail of the standard normal.
///
/// Total on finite reals; satisfies `qfunc(-x) = 1 - qfunc(x)`.
pub fn qfunc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 1.0 - qfunc(-x);
    }
    if x <= 2.5 {
        0.5 - 0.5 * erf_series(x / SQRT_2)
    } else {
        gauss_density(x) * mills_ratio_cf(x)
    }
}

/// Functional inverse of [`qfunc`] on (0, 1).
///
/// Bracketed bisection over [-40, 40] (covering all probabilities
/// representable above ~1e-300) with a Newton polish.
pub fn qinv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("qinv: p must be in (0,1), got {p}")));
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..70 {
        let mid = 0.5 * (lo + hi);
        if qfunc(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let density = gauss_density(x);
        if density < f64::MIN_POSITIVE {
            break;
        }
        x += (qfunc(x) - p) / density;
    }
    Ok(x)
}

/// Shannon capacity of the AWGN channel, in bits per channel use.
pub fn capacity(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::Domain(format!("capacity: snr must be >= 0, got {snr}")));
    }
    Ok(0.5 * snr.ln_1p() / std::f64::consts::LN_2)
}

/// The excess SNR a scheme at `rate` needs over the Shannon-limit SNR,
/// `snr / (2^(2 rate) - 1)`, in dB.
pub fn capacity_gap(snr: f64, rate: f64) -> Result<Decibel> {
    if !(snr > 0.0) {
        return Err(Error::Domain(format!("capacity_gap: snr must be > 0, got {snr}")));
    }
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("capacity_gap: rate must be > 0, got {rate}")));
    }
    Ok(Decibel::from_linear(snr / shannon_snr(rate)))
}

/// Minimal SNR for reliable communication at `rate`, `2^(2 rate) - 1`.
pub fn shannon_snr(rate: f64) -> f64 {
    (2.0 * rate * std::f64::consts::LN_2).exp_m1()
}

/// Capacity gap of uncoded PAM at symbol error probability `pe`:
/// `(1/3) [qinv(pe/2)]^2`, in dB.
pub fn gamma0(pe: f64) -> Result<Decibel> {
    let x = qinv(pe / 2.0)?;
    Ok(Decibel::from_linear(x * x / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: Q(x) = phi(x) * int_0^inf exp(-x t - t^2/2) dt
    /// (substitute u = x + t), integrated by adaptive Simpson. Never calls
    /// the erf/continued-fraction path.
    fn qfunc_oracle(x: f64) -> f64 {
        if x < 0.0 {
            return 1.0 - qfunc_oracle(-x);
        }
        let f = |t: f64| (-x * t - 0.5 * t * t).exp();
        let upper = -x + (x * x + 100.0).sqrt();
        gauss_density(x) * adaptive_simpson(&f, 0.0, upper, 1e-15, 48)
    }

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        fn recurse(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            m: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let left = simpson(f, a, lm, m);
            let right = simpson(f, m, rm, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol * whole.abs().max(1e-308) {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, lm, m, left, tol / 2.0, depth - 1)
                    + recurse(f, m, rm, b, right, tol / 2.0, depth - 1)
            }
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, b, simpson(f, a, m, b), tol, depth)
    }

    fn assert_rel(actual: f64, expected: f64, tol: f64, what: &str) {
        let rel = (actual / expected - 1.0).abs();
        assert!(
            rel <= tol,
            "{what}: got {actual:e}, expected {expected:e} (rel err {rel:e} > {tol:e})"
        );
    }

    #[test]
    fn qfunc_at_zero_is_half() {
        assert_eq!(qfunc(0.0), 0.5);
    }

    #[test]
    fn qfunc_frozen_value() {
        // oracle (adaptive quadrature of the Gaussian density): Q(4.891638)
        assert_rel(qfunc(4.891638), 5.000012086920940e-7, 1e-12, "Q(4.891638)");
    }

    #[test]
    fn qfunc_matches_quadrature_oracle() {
        for &x in &[
            0.05, 0.3, 0.7, 1.0, 1.5, 2.0, 2.4999, 2.5001, 3.0, 3.5, 4.0, 4.891638, 5.566, 7.0,
            10.0, 15.0, 20.0, 27.0, 33.0, 37.0,
        ] {
            let oracle = qfunc_oracle(x);
            assert_rel(qfunc(x), oracle, 1e-12, &format!("Q({x})"));
        }
        // deep tail magnitude check: outputs down to 1e-300 stay normal
        assert!(qfunc(37.0) > 1e-300 && qfunc(37.0) < 1e-297);
    }

    #[test]
    fn qfunc_reflection_identity() {
        let mut x = -40.0;
        while x <= 40.0 {
            assert!(
                (qfunc(x) + qfunc(-x) - 1.0).abs() <= 1e-12,
                "reflection at {x}"
            );
            x += 0.37;
        }
    }

    #[test]
    fn qinv_round_trips_decades() {
        for k in 1..=12 {
            let p = 10f64.powi(-k);
            let x = qinv(p).unwrap();
            assert_rel(qfunc(x), p, 1e-10, &format!("Q(qinv(1e-{k}))"));
        }
    }

    #[test]
    fn qinv_frozen_values() {
        assert!(qinv(0.5).unwrap().abs() < 1e-12);
        // bisection against the quadrature oracle (values frozen from mpmath)
        assert_rel(qinv(5.0e-7).unwrap(), 4.891638475698590, 1e-9, "qinv(5e-7)");
        // this is Q^{-1}(P_e/4N) for P_e = 1e-6, N = 19
        assert_rel(
            qinv(1.3158e-8).unwrap(),
            5.564331014458622,
            1e-9,
            "qinv(1.3158e-8)",
        );
    }

    #[test]
    fn qinv_is_monotone_decreasing() {
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let x = qinv(k as f64 / 40.0).unwrap();
            assert!(x < prev);
            prev = x;
        }
    }

    #[test]
    fn qinv_rejects_out_of_domain() {
        assert!(qinv(0.0).is_err());
        assert!(qinv(1.0).is_err());
        assert!(qinv(-0.1).is_err());
        assert!(qinv(1.1).is_err());
    }

    #[test]
    fn capacity_known_points() {
        assert!((capacity(3.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(capacity(0.0).unwrap(), 0.0);
        assert!((capacity(15.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(capacity(-0.5).is_err());
    }

    #[test]
    fn capacity_increasing_and_concave() {
        let grid: Vec<f64> = (0..200).map(|i| 0.05 * i as f64).collect();
        let c: Vec<f64> = grid.iter().map(|&s| capacity(s).unwrap()).collect();
        for w in c.windows(3) {
            assert!(w[1] > w[0], "not increasing");
            assert!(w[2] - w[1] < w[1] - w[0], "not concave");
        }
    }

    #[test]
    fn capacity_gap_known_points() {
        assert!(capacity_gap(3.0, 1.0).unwrap().db().abs() < 1e-12);
        assert!((capacity_gap(30.0, 1.0).unwrap().db() - 10.0).abs() < 1e-12);
        for &r in &[0.5, 1.0, 2.0, 4.0] {
            let snr = shannon_snr(r);
            assert!(
                capacity_gap(snr, r).unwrap().db().abs() < 1e-12,
                "gap at Shannon limit, R={r}"
            );
        }
        assert!(capacity_gap(-1.0, 1.0).is_err());
        assert!(capacity_gap(1.0, 0.0).is_err());
    }

    #[test]
    fn gamma0_known_points() {
        // paper: capacity gap of uncoded PAM at 1e-6 is 9 dB
        assert!((gamma0(1e-6).unwrap().db() - 9.017874499356541).abs() < 1e-9);
        // makes qinv(pe/2) = sqrt(3), so gamma0 = 1 (0 dB)
        let pe = 2.0 * qfunc(3f64.sqrt());
        assert!(gamma0(pe).unwrap().db().abs() < 1e-9);
        // via the qinv oracle
        assert!((gamma0(1e-4).unwrap().db() - 7.029100988052952).abs() < 1e-9);
        assert!(gamma0(0.0).is_err());
    }

    #[test]
    fn decibel_round_trip() {
        for &x in &[1e-9, 0.02, 1.0, 3.0, 313.2, 1e12] {
            assert_rel(Decibel::from_linear(x).linear(), x, 1e-12, "db round trip");
        }
    }

    #[test]
    fn probability_bounds() {
        assert!(Probability::new(0.0).is_ok());
        assert!(Probability::new(1.0).is_ok());
        assert!(Probability::new(-0.01).is_err());
        assert!(Probability::new(1.01).is_err());
    }
}
