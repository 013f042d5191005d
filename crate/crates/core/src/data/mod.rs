//! Schemas, datasets, preprocessing, synthetic data and counterfactual
//! perturbation of the sensitive feature.

mod dataset;
mod perturb;
mod preprocess;
mod schema;
mod split;
mod synth;

pub use dataset::{load_csv, write_csv, Dataset};
pub use perturb::{perturb, Partition, PerturbedDataset};
pub use preprocess::{apply_preprocess, fit_preprocess, FeatureStats, PreprocessStats};
pub use schema::{
    load_schema, write_schema, FeatureDescriptor, FeatureKind, FeatureSpec, Schema,
    SchemaDescriptor, Task,
};
pub use split::split;
pub use synth::{generate_proxy_variant, generate_synthetic, proxy_schema, synthetic_schema};
