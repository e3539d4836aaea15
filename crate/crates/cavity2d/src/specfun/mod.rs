//! Special functions: cylinder Bessel/Hankel functions and all Green's
//! function kernels (free-space and half-space) with their directional
//! derivatives. Every routine here is a pure function of its arguments.

mod bessel;
mod kernels;

pub use bessel::{cyl_bessel_pair, hankel1};
pub use kernels::{greens_free, kernel, kernel_from_difference, KernelKind, Space};

pub(crate) use bessel::hankel_pair;

use num_complex::Complex64;
use thiserror::Error;

/// Complex field amplitude.
pub type Cplx = Complex64;

/// Wavenumber context. The angular frequency and material constants of the
/// physical problem are folded into the single positive wavenumber `k`.
#[derive(Debug, Clone, Copy)]
pub struct WaveContext {
    pub k: f64,
    /// Proximity guard for the hypersingular kernel: evaluation with
    /// `|x - y| < t_guard` is an error. The formulation never needs T
    /// on-surface, so this is a tripwire, not a quadrature rule; callers
    /// building operators set it to `1e-12 * scene diameter`.
    pub t_guard: f64,
}

impl WaveContext {
    pub fn new(k: f64) -> Result<Self, SpecFunError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(SpecFunError::InvalidWavenumber(k));
        }
        Ok(WaveContext { k, t_guard: 0.0 })
    }

    pub fn with_t_guard(mut self, guard: f64) -> Self {
        self.t_guard = guard;
        self
    }

    /// Wavelength `2 pi / k`.
    pub fn wavelength(&self) -> f64 {
        std::f64::consts::TAU / self.k
    }
}

#[derive(Debug, Error)]
pub enum SpecFunError {
    #[error("wavenumber must be positive and finite, got {0}")]
    InvalidWavenumber(f64),
    #[error("bessel order {0} not supported (only 0 and 1)")]
    UnsupportedOrder(u8),
    #[error("argument {0} outside the function domain")]
    Domain(f64),
    #[error("argument {0} beyond the reliable asymptotic range")]
    OutOfRange(f64),
    #[error("coincident source and target points")]
    CoincidentPoints,
    #[error("hypersingular kernel evaluated at r = {r:.3e}, inside the proximity guard {guard:.3e}")]
    NearSingular { r: f64, guard: f64 },
}
