//! Index-modulated OAM mode hopping (IM-MH) and double-serial mode hopping
//! (IM-DSMH) for anti-jamming links.
//!
//! The crate is split the same way the link is:
//!
//! * [`hopping`]: mode universe, combination (un)ranking, keyed hop patterns
//!   and bit accounting.
//! * [`channel`]: line-of-sight OAM gains, Rician mixing, estimation error.
//! * [`phy`]: constellation mapping, UCA synthesis, jammer, de-hopping and
//!   ML detection.
//! * [`analytics`]: closed-form pairwise error probabilities, jamming
//!   probabilities, union-bound ABER and spectrum-efficiency bounds.
//! * [`sim`]: Monte Carlo engine and parameter sweeps.
//! * [`validate`]: the built-in oracle suite used by `oamhop validate`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod channel;
pub mod config;
pub mod error;
pub mod hopping;
pub mod phy;
pub mod sim;
pub mod validate;

pub use num_complex::Complex64;

pub use analytics::{AberResult, JamVariant, PepContext, PepSlot, SeResult};
pub use channel::{ChannelRealization, EstimatedChannel, Geometry};
pub use config::{Csi, JamKnowledge, LosModel, Modulation, Scheme, SystemConfig};
pub use error::{Error, Result};
pub use hopping::{BitBudget, HopPattern, HopScheme, KeyStream, ModeSet};
pub use phy::{Constellation, DehoppedSignals, ElementFrame, JammerDraw, SymbolVector};
pub use sim::{BerEstimate, SweepAxis, SweepRow, TrialPlan};
