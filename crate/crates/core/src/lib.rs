//! Regulatory mechanisms for licensing AI providers on categorical evidence.
//!
//! A regulator fixes a credal set of "unsafe" evidence distributions, an entry
//! fee `C` and a cap `R`, and issues payout vectors (licenses) whose expected
//! value under every unsafe distribution is at most `C`.

pub mod betting;
pub mod credal;
pub mod error;
pub mod evidence;
pub mod experiments;
pub mod license;
pub mod lp;
pub mod market;
pub mod projection;
pub mod sampling;
pub mod simplex;

pub use credal::{CredalSet, ParityRegion};
pub use error::{Error, Result};
pub use evidence::{Categorical, Divergence, EvidenceSpace};
pub use license::{License, MechanismParams, OptimalLicenseResult};
