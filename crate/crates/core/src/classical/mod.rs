//! Classical single- and multi-frame demodulators, plus the shared
//! arctangent and FFT plumbing.

pub mod fft;
pub mod ft;
pub mod phase;
pub mod ps;
pub mod wft;

pub use fft::{dft2, idft2, to_complex, CGrid, Fft2};
pub use ft::{demod_ft, FtParams};
pub use phase::{modulation_mask, phase_from_phasor};
pub use ps::{background_ps, demod_ps};
pub use wft::{carrier_omega, demod_wft, wft_coefficients, WftParams};
