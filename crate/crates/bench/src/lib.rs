//! Shared fixtures for the pipeline benchmarks.

use std::collections::BTreeSet;

use fairsel_core::dataset::{
    generate_synthetic, preprocess, stratified_split, FeatureMatrix, ProtectedAttr, SyntheticSpec,
};
use fairsel_core::Dataset;

/// The canonical 530-paper synthetic corpus.
pub fn canonical_dataset(seed: u64) -> Dataset {
    generate_synthetic(&SyntheticSpec::default(), seed).expect("default spec is valid")
}

/// Encoded features for the canonical corpus.
pub fn canonical_features(dataset: &Dataset) -> FeatureMatrix {
    let attrs: BTreeSet<ProtectedAttr> = [ProtectedAttr::Race, ProtectedAttr::Country]
        .into_iter()
        .collect();
    preprocess(dataset, &attrs).expect("dataset encodes")
}

/// An 80/20 split of the canonical corpus.
pub fn canonical_split(fm: &FeatureMatrix, seed: u64) -> (FeatureMatrix, FeatureMatrix) {
    stratified_split(fm, 0.8, seed).expect("split succeeds")
}
