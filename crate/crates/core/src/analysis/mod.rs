//! Decay exponents, exponent conditions, discrete weighted norms and
//! power-law fits.

mod config;
mod decay;
mod fit;
mod norms;

pub use config::{rate_exponents, rate_exponents_exact, validate_config, Check, ConfigReport, DecayRates, ExponentConfig, WeightConfig};
pub use decay::{decay_reports, decay_samples, decay_targets, localized_height, DecaySample, DecayTargets};
pub use norms::{pushforward_norms, weighted_norms, NormReport};
pub use fit::{fit_decay, fractional_time_norm, weighted_lp, weighted_sup, DecayFit, DecayReport};
