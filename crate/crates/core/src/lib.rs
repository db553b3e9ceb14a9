//! Extraction of text embedded in Bitcoin and Ethereum transactions, sentiment
//! and topic features over it, and a next-day price-movement classifier
//! harness.

pub mod dataset;
pub mod ml;
pub mod pipeline;
pub mod sentiment;
pub mod textprep;
pub mod topics;
pub mod txdecoder;
