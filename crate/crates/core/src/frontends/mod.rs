//! Randomly weighted CNN front-ends and the MFCC baseline.
//!
//! Every front-end maps one clip to a feature vector made of the global
//! average of each feature map, concatenated in layer order, then filter
//! shape order within a layer, then channel order.

mod extractor;
mod spec;

pub use extractor::{build_frontend, FeatureExtractor, FeatureVector, FrontEndInput};
pub use spec::{feature_dimension, Allocation, ArchId, Capacity, FrontEndSpec, InputKind};
