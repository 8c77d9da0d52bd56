//! Scalar modulo arithmetic, dither generation, the dithered modulo
//! encode/decode pair for joint source-channel coding with side
//! information, and a scaled cubic lattice for the block scheme.
//!
//! Round-half-up is the global rounding convention, so `mod_d` maps onto
//! `[-d/2, d/2)` with the half point wrapping to the lower edge. Aliasing
//! (the argument leaving the fundamental cell) is a semantic event reported
//! by the schemes' traces, never an error return: the protocol keeps
//! running through it.

use crate::{Error, Result};
use rand::Rng;

/// Reduction onto a centered interval `[-d/2, d/2)` with round-half-up.
#[derive(Debug, Clone, Copy)]
pub struct ScalarModulo {
    d: f64,
    half: f64,
}

impl ScalarModulo {
    pub fn new(d: f64) -> Result<ScalarModulo> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Domain(format!("modulo interval must be positive, got {d}")));
        }
        Ok(ScalarModulo { d, half: 0.5 * d })
    }

    pub fn interval(&self) -> f64 {
        self.d
    }

    /// Second moment of a uniform dither on the cell, `d^2 / 12`.
    pub fn second_moment(&self) -> f64 {
        self.d * self.d / 12.0
    }

    /// `x - d round(x/d)`, with round(k + 1/2) = k + 1. The result is
    /// forced into `[-d/2, d/2)` even when the quotient rounding lands a
    /// half-ulp outside.
    #[inline]
    pub fn reduce(&self, x: f64) -> f64 {
        let k = (x / self.d + 0.5).floor();
        let mut r = x - k * self.d;
        if r < -self.half {
            r += self.d;
        } else if r >= self.half {
            r -= self.d;
        }
        r
    }

    /// Whether `x` lies inside the fundamental cell (no aliasing).
    #[inline]
    pub fn in_cell(&self, x: f64) -> bool {
        (-self.half..self.half).contains(&x)
    }

    /// Uniform dither on `[-d/2, d/2)`.
    pub fn sample_dither<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (rng.random::<f64>() - 0.5) * self.d
    }
}

/// Free-function form of the scalar modulo; validates `d` per call.
pub fn mod_d(x: f64, d: f64) -> Result<f64> {
    Ok(ScalarModulo::new(d)?.reduce(x))
}

/// Terminal B's dithered modulo transmission for conveying an estimate
/// with side information at the far end: `[gamma theta_hat + v] mod d`.
pub fn jscc_si_encode(theta_hat: f64, gamma: f64, dither: f64, modulo: &ScalarModulo) -> f64 {
    modulo.reduce(gamma * theta_hat + dither)
}

/// Terminal A's recovery of the scaled estimation error:
/// `[y_tilde - gamma theta - v] mod d`. Equals `gamma eps + z_fb` exactly
/// when that sum lies in the cell; otherwise it is off by a nonzero
/// multiple of `d` (a modulo-aliasing event).
pub fn jscc_si_decode(
    y_tilde: f64,
    theta: f64,
    gamma: f64,
    dither: f64,
    modulo: &ScalarModulo,
) -> f64 {
    modulo.reduce(y_tilde - gamma * theta - dither)
}

/// Probability that a Gaussian modulo argument of variance `d^2/(12 L)`
/// leaves the cell: `2 Q(sqrt(3 L))`.
pub fn pmod_scalar(looseness: f64) -> Result<f64> {
    if !(looseness > 0.0) {
        return Err(Error::Domain(format!("looseness must be > 0, got {looseness}")));
    }
    Ok(2.0 * crate::numerics::qfunc((3.0 * looseness).sqrt()))
}

/// A cubic lattice `d_c Z^n` scaled so its per-dimension second moment
/// matches a target power: `sigma^2(Lambda) = d_c^2 / 12`.
#[derive(Debug, Clone)]
pub struct CubicLattice {
    dim: usize,
    cell: ScalarModulo,
}

impl CubicLattice {
    pub fn new(dim: usize, cell_side: f64) -> Result<CubicLattice> {
        if dim == 0 {
            return Err(Error::Config("lattice dimension must be positive".into()));
        }
        Ok(CubicLattice { dim, cell: ScalarModulo::new(cell_side)? })
    }

    /// Cubic lattice whose Voronoi cell carries second moment `power`
    /// per dimension.
    pub fn with_second_moment(dim: usize, power: f64) -> Result<CubicLattice> {
        if !(power > 0.0) {
            return Err(Error::Domain(format!("second moment must be > 0, got {power}")));
        }
        CubicLattice::new(dim, (12.0 * power).sqrt())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_side(&self) -> f64 {
        self.cell.interval()
    }

    /// Per-dimension second moment, `d_c^2 / 12`.
    pub fn second_moment(&self) -> f64 {
        self.cell.second_moment()
    }

    /// Normalized second moment G(Lambda); 1/12 for any cube.
    pub fn normalized_second_moment(&self) -> f64 {
        1.0 / 12.0
    }

    /// log2 of the cell volume, `dim * log2(d_c)`.
    pub fn log2_volume(&self) -> f64 {
        self.dim as f64 * self.cell.interval().log2()
    }

    /// Volume-to-noise ratio against noise of variance `noise_var`:
    /// `Vol^(2/n) / noise_var = d_c^2 / noise_var`.
    pub fn vnr(&self, noise_var: f64) -> Result<f64> {
        if !(noise_var > 0.0) {
            return Err(Error::Domain(format!("noise variance must be > 0, got {noise_var}")));
        }
        let d = self.cell.interval();
        Ok(d * d / noise_var)
    }

    pub fn scalar(&self) -> &ScalarModulo {
        &self.cell
    }

    /// Componentwise reduction onto the fundamental Voronoi cell.
    pub fn reduce(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(x.iter().map(|&v| self.cell.reduce(v)).collect())
    }

    /// In-place variant of [`reduce`](Self::reduce).
    pub fn reduce_in_place(&self, x: &mut [f64]) -> Result<()> {
        self.check_dim(x)?;
        for v in x.iter_mut() {
            *v = self.cell.reduce(*v);
        }
        Ok(())
    }

    /// Whether the vector lies inside the fundamental cell.
    pub fn in_cell(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(x.iter().all(|&v| self.cell.in_cell(v)))
    }

    /// Uniform dither on the fundamental cell.
    pub fn sample_dither<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim).map(|_| self.cell.sample_dither(rng)).collect()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }
}
