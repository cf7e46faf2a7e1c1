//! Exploratory landscape analysis on uniform samples: y-distribution,
//! meta-model, dispersion, information content and nearest-better
//! clustering features, aggregated by median over sampling replications.

mod dispersion;
mod distr;
mod features;
mod ic;
mod meta;
mod nbc;
mod sample;

pub use dispersion::{dispersion, DispersionFeatures, DISPERSION_QUANTILES};
pub use distr::{ela_distr, DistrFeatures};
pub use features::{
    compute_features, compute_features_with, sample_features, select_features, FeatureVector, FEATURE_NAMES,
    SELECTED_FEATURES,
};
pub use ic::{information_content, IcFeatures, IcSettings};
pub use meta::{ela_meta, MetaFeatures};
pub use nbc::{nearest_better, NbcFeatures};
pub use sample::{uniform_sample, SampleSet};
