//! Coded caching for a shared broadcast link: closed-form rates, bit-exact
//! simulators for the centralized and decentralized schemes, and numerical
//! certification of the gap between them.
//!
//! The analytic layer ([`rate_model`], [`gap`]) is generic over the scalar
//! type; the simulators work on bits and report rates in `f64`.

pub mod bits;
pub mod centralized;
pub mod decentralized;
pub mod gap;
pub mod library;
pub mod rate_model;
pub mod rng;
pub mod scalar;
pub mod subsets;
pub mod transcript;

pub use bits::BitString;
pub use centralized::{Branch, CentralizedSystem, MemorySharedSystem};
pub use decentralized::{Procedure, RandomCacheState, RlcConfig, VSegments};
pub use gap::{GapReport, SweepGrid, SweepSummary};
pub use library::{DemandVector, FileLibrary, SchemeError};
pub use rate_model::{
    centralized_rate, centralized_rate_corner, centralized_rate_piecewise, decentralized_rate,
    gap_ratio, r_c, r_d, r_tilde_c, uncoded_rate, MemoryGeometry, PiecewiseCase, RateError,
    SystemParams,
};
pub use scalar::Scalar;
pub use subsets::SubsetMask;
pub use transcript::{DeliveryTranscript, SegmentLabel};

pub type Params = SystemParams<f64>;
pub type Params32 = SystemParams<f32>;
pub type Geometry = MemoryGeometry<f64>;
pub type Gap = GapReport<f64>;
