//! No-arbitrage certification: quantitative constants per segment and for
//! the large market, and equivalent martingale measures per segment.

mod emm;
mod na;

pub use emm::{emm_segment, MartingaleCertificate, MIN_WEIGHT};
pub use na::{
    large_split, na_constant_large, na_constant_segment, na_constant_segment_with_hint, na_constants, q_from_atoms,
    segment_constants, LargeConstant, LossProfile, NAConstants, NaOptions, SegmentConstant,
};
