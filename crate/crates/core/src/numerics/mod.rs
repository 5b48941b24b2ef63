//! Special functions, quadrature and spectral transforms.

mod bessel;
mod erf;
mod marcum;
pub mod quadrature;
pub mod spectral;

pub use bessel::{bessel_i0, bessel_i0e, bessel_j0, j0_unchecked};
pub(crate) use bessel::i0e_unchecked;
pub use erf::{erf, erfc};
pub(crate) use erf::erf_unchecked;
pub use marcum::{marcum_q1, marcum_q1_complement};
pub use quadrature::{
    gauss_legendre_nodes, integrate_1d, integrate_2d, CancelToken, Estimate, QuadValue,
    QuadratureRule, QuadratureSpec, Rect,
};
pub use spectral::{fft_psd, Spectrum, Taper, UniformGrid};
