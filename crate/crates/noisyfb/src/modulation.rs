//! PAM constellation construction, Gray bit labeling, minimum-distance
//! decoding, and the analytic PAM error bounds.
//!
//! Constellations are unit mean-square by construction; the power factor is
//! applied by the transmission scheme, not here. Message indices are the
//! Gray labels themselves, carried as `u128` so that constellations up to
//! 2^120 points (e.g. 76-bit messages at 19 rounds x rate 4) are exact.
//! Points are never materialized as a list for large constellations;
//! amplitudes are computed from the sorted point index.

use crate::{numerics, Error, Result};

/// Binary-reflected Gray label of sorted point index `i`.
pub fn gray(i: u128) -> u128 {
    i ^ (i >> 1)
}

/// Inverse of [`gray`]: sorted point index carrying label `g`.
pub fn gray_inverse(g: u128) -> u128 {
    let mut i = g;
    i ^= i >> 1;
    i ^= i >> 2;
    i ^= i >> 4;
    i ^= i >> 8;
    i ^= i >> 16;
    i ^= i >> 32;
    i ^= i >> 64;
    i
}

/// A PAM constellation with Gray labeling over amplitude-sorted points
/// `{±eta, ±3 eta, ...}`, normalized to unit mean square.
#[derive(Debug, Clone)]
pub struct PamConstellation {
    bits_per_symbol: u32,
    eta: f64,
}

impl PamConstellation {
    /// Build a `2^bits_per_symbol`-point constellation. Sizes up to
    /// 2^120 points are supported exactly through index arithmetic.
    pub fn new(bits_per_symbol: u32) -> Result<PamConstellation> {
        if bits_per_symbol == 0 || bits_per_symbol > 120 {
            return Err(Error::Config(format!(
                "bits_per_symbol must be in 1..=120, got {bits_per_symbol}"
            )));
        }
        // eta = sqrt(3 / (2^(2R') - 1)); exp_m1 keeps small R' exact and
        // large R' away from overflow
        let eta = (3.0 / (2.0 * bits_per_symbol as f64 * std::f64::consts::LN_2).exp_m1()).sqrt();
        Ok(PamConstellation { bits_per_symbol, eta })
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    /// Number of constellation points, `2^bits_per_symbol`.
    pub fn size(&self) -> u128 {
        1u128 << self.bits_per_symbol
    }

    /// Normalization factor eta.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Minimum distance between points, `2 eta`.
    pub fn min_distance(&self) -> f64 {
        2.0 * self.eta
    }

    /// Amplitude of the point at sorted index `i`: `(2i - M + 1) eta`.
    pub fn amplitude(&self, i: u128) -> f64 {
        let m = self.size();
        // offset from the center in half-steps; the amplitude is O(1) even
        // when the index itself exceeds f64 integer resolution
        let offset = 2.0 * (i as f64) - (m as f64) + 1.0;
        offset * self.eta
    }

    /// Amplitudes in sorted order. Only for small constellations.
    pub fn points(&self) -> Vec<f64> {
        assert!(self.bits_per_symbol <= 20, "points() is for small constellations");
        (0..self.size()).map(|i| self.amplitude(i)).collect()
    }

    /// Map a message (Gray label) to its amplitude.
    pub fn map(&self, w: u128) -> Result<f64> {
        if w >= self.size() {
            return Err(Error::Domain(format!("message index {w} out of range")));
        }
        Ok(self.amplitude(gray_inverse(w)))
    }

    /// Sorted index of the message's point.
    pub fn point_index(&self, w: u128) -> Result<u128> {
        if w >= self.size() {
            return Err(Error::Domain(format!("message index {w} out of range")));
        }
        Ok(gray_inverse(w))
    }

    /// Minimum-distance decode: Gray label of the nearest point. Midpoint
    /// ties resolve to the larger amplitude (round half up).
    pub fn decode(&self, theta_hat: f64) -> u128 {
        let m = self.size();
        // nearest index = round((theta/eta + M - 1) / 2), half up
        let t = 0.5 * (theta_hat / self.eta + (m as f64) - 1.0);
        let i = (t + 0.5).floor();
        let i = if i < 0.0 {
            0
        } else if i >= m as f64 {
            m - 1
        } else {
            i as u128
        };
        gray(i)
    }

    /// Decode expressed as a signed index offset from a known transmitted
    /// point: the nearest point to `point + err` is `point_index + offset`.
    /// This is the form the scheme simulator uses; it stays exact for
    /// constellations far beyond f64 resolution of absolute amplitudes.
    pub fn decode_offset(&self, err: f64) -> i128 {
        let t = err / (2.0 * self.eta);
        // round half up, saturating well inside i128 range
        (t + 0.5).floor().clamp(-1.0e30, 1.0e30) as i128
    }

    /// Decode relative to a known transmitted point index; returns the
    /// decoded Gray label.
    pub fn decode_relative(&self, point_index: u128, err: f64) -> u128 {
        let m = self.size();
        let j = (point_index as i128).saturating_add(self.decode_offset(err));
        let j = j.clamp(0, (m - 1) as i128) as u128;
        gray(j)
    }
}

/// Union bound on the PAM symbol error probability,
/// `2 Q(sqrt(3 snr / (2^(2 rate) - 1)))`.
pub fn pam_ser_bound(snr: f64, rate: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::Domain(format!("pam_ser_bound: snr must be > 0, got {snr}")));
    }
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("pam_ser_bound: rate must be > 0, got {rate}")));
    }
    Ok(2.0 * numerics::qfunc((3.0 * snr / numerics::shannon_snr(rate)).sqrt()))
}

/// Gray-labeled PAM bit error probability bound,
/// `(2/R) Q(arg) + 2 Q(3 arg)` with `arg = sqrt(3 snr / (2^(2R) - 1))`;
/// approximately `pe / R` for small `pe`.
pub fn pam_ber_bound(snr: f64, rate: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::Domain(format!("pam_ber_bound: snr must be > 0, got {snr}")));
    }
    if !(rate >= 1.0) {
        return Err(Error::Domain(format!("pam_ber_bound: rate must be >= 1, got {rate}")));
    }
    let arg = (3.0 * snr / numerics::shannon_snr(rate)).sqrt();
    Ok(2.0 / rate * numerics::qfunc(arg) + 2.0 * numerics::qfunc(3.0 * arg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{qfunc, qinv};

    #[test]
    fn two_pam_maps_to_unit_points() {
        let c = PamConstellation::new(1).unwrap();
        assert_eq!(c.map(0).unwrap(), -1.0);
        assert_eq!(c.map(1).unwrap(), 1.0);
    }

    #[test]
    fn four_pam_points_and_unit_mean_square() {
        let c = PamConstellation::new(2).unwrap();
        let eta = (3.0f64 / 15.0).sqrt();
        let expected = [-3.0 * eta, -eta, eta, 3.0 * eta];
        for (p, e) in c.points().iter().zip(expected) {
            assert!((p - e).abs() < 1e-15);
        }
        for w in 0..4u128 {
            let a = c.map(w).unwrap();
            assert!(expected.iter().any(|e| (a - e).abs() < 1e-15));
        }
        let ms: f64 = c.points().iter().map(|p| p * p).sum::<f64>() / 4.0;
        assert!((ms - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn unit_mean_square_at_r6() {
        let c = PamConstellation::new(6).unwrap();
        let ms: f64 = c.points().iter().map(|p| p * p).sum::<f64>() / 64.0;
        assert!((ms - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn gray_adjacency_all_widths() {
        for r in 1..=16u32 {
            let m = 1u128 << r;
            for i in 0..m - 1 {
                let h = (gray(i) ^ gray(i + 1)).count_ones();
                assert_eq!(h, 1, "R'={r}, i={i}");
            }
        }
    }

    #[test]
    fn gray_inverse_round_trip() {
        for r in [1u32, 3, 8, 16] {
            let step = 1.max((1usize << r) / 4096) as u128;
            let mut i = 0u128;
            while i < 1u128 << r {
                assert_eq!(gray_inverse(gray(i)), i);
                i += step;
            }
        }
        // wide labels
        for w in [0u128, 1, (1 << 75) + 12345, (1 << 120) - 1] {
            assert_eq!(gray(gray_inverse(w)), w);
        }
    }

    #[test]
    fn noiseless_round_trip() {
        for r in [1u32, 2, 3, 8, 12, 16] {
            let c = PamConstellation::new(r).unwrap();
            let step = 1.max((1usize << r) / 4096) as u128;
            let mut w = 0;
            while w < c.size() {
                assert_eq!(c.decode(c.map(w).unwrap()), w, "R'={r} w={w}");
                w += step;
            }
        }
    }

    #[test]
    fn decode_simple_point() {
        let c = PamConstellation::new(1).unwrap();
        assert_eq!(c.decode(0.9), 1);
        assert_eq!(c.decode(-0.9), 0);
    }

    #[test]
    fn midpoints_resolve_to_larger_amplitude() {
        // enumerate all midpoints at R'=3: the tie goes to the point with
        // the larger amplitude (round half up)
        let c = PamConstellation::new(3).unwrap();
        let pts = c.points();
        for i in 0..pts.len() - 1 {
            let mid = 0.5 * (pts[i] + pts[i + 1]);
            assert_eq!(c.decode(mid), gray((i + 1) as u128), "midpoint {i}");
        }
        // decision boundaries partition the line: just inside each midpoint
        for i in 0..pts.len() - 1 {
            let mid = 0.5 * (pts[i] + pts[i + 1]);
            assert_eq!(c.decode(mid - 1e-9), gray(i as u128));
            assert_eq!(c.decode(mid + 1e-9), gray((i + 1) as u128));
        }
        // beyond the edges clamps to the outermost points
        assert_eq!(c.decode(-100.0), gray(0));
        assert_eq!(c.decode(100.0), gray(7));
    }

    #[test]
    fn decode_relative_agrees_with_absolute() {
        let c = PamConstellation::new(8).unwrap();
        let mut w = 0u128;
        while w < c.size() {
            let i = c.point_index(w).unwrap();
            let theta = c.map(w).unwrap();
            for &err in &[0.0, 0.004, -0.004, 0.02, -0.02, 0.3, -0.3, 5.0, -5.0] {
                assert_eq!(
                    c.decode_relative(i, err),
                    c.decode(theta + err),
                    "w={w} err={err}"
                );
            }
            w += 7;
        }
    }

    #[test]
    fn ser_bound_known_points() {
        // qfunc oracle value: 2 Q(sqrt(3)) at the Shannon-limit snr for R=1
        assert!((pam_ser_bound(3.0, 1.0).unwrap() - 0.08326451666355040).abs() < 1e-15);
        // inverting the gamma0 relation: snr = gamma0(pe) * (2^{2R} - 1) gives pe back
        for &r in &[1.0, 2.0, 4.0] {
            let pe = 1e-6;
            let snr = crate::numerics::gamma0(pe).unwrap().linear() * numerics::shannon_snr(r);
            assert!((pam_ser_bound(snr, r).unwrap() / pe - 1.0).abs() < 1e-9, "R={r}");
        }
        assert!(pam_ser_bound(-1.0, 1.0).is_err());
    }

    #[test]
    fn ser_bound_monotone() {
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let b = pam_ser_bound(0.5 * i as f64, 2.0).unwrap();
            assert!(b < prev);
            prev = b;
        }
        let mut prev = 0.0;
        for i in 1..20 {
            let b = pam_ser_bound(20.0, 0.25 * i as f64).unwrap();
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn ber_bound_known_points() {
        // high-snr point giving pe = 1e-6 at R=4: ber ~ pe/R = 2.5e-7
        let r = 4.0;
        let x = qinv(0.5e-6).unwrap();
        let snr = x * x / 3.0 * numerics::shannon_snr(r);
        let ber = pam_ber_bound(snr, r).unwrap();
        assert!((ber / 2.5e-7 - 1.0).abs() < 1e-3, "ber={ber:e}");
        // R = 1: first ser term plus the 2Q(3 arg) correction
        let snr = 3.0;
        let arg = (3.0f64 * snr / 3.0).sqrt();
        let expected = 2.0 * qfunc(arg) + 2.0 * qfunc(3.0 * arg);
        assert!((pam_ber_bound(snr, 1.0).unwrap() - expected).abs() < 1e-16);
        assert!(pam_ber_bound(3.0, 0.5).is_err());
    }
}
