//! Population-level label distribution learning.
//!
//! Each item carries a handful of crowd votes, so its empirical label
//! distribution is a noisy estimate of what the whole annotator population
//! would say. This crate sharpens those estimates by *pooling*: items that
//! look alike share their votes, and each item gets the distribution of its
//! pool's merged votes (its *refined* distribution).
//!
//! * [`nbp`] pools every item with the items within a divergence radius.
//! * [`clustering`] pools by a hard clustering in label space (multinomial
//!   mixture, Gaussian mixture, k-means, LDA).
//! * [`samplers`] draws synthetic label sets shaped like a dataset.
//! * [`selection`] compares a pooling's training loss with its losses on
//!   synthetic sets and uses the standardized difference to choose the
//!   cluster count or the radius.
//! * [`predict`] trains a softmax regressor on refined distributions.
//!
//! ```
//! use pldl::{Dataset, LabelSpace};
//! use pldl::nbp::{build_nbp_pooling, NbpConfig};
//!
//! let labels = LabelSpace::new(["yes", "no"]).unwrap();
//! let data = Dataset::from_counts(labels, vec![vec![4, 1], vec![5, 0], vec![0, 5]]).unwrap();
//! let (pooling, stats) = build_nbp_pooling(&data, &NbpConfig::new(0.5)).unwrap();
//! assert_eq!(pooling.num_pools(), 3);
//! assert_eq!(pooling.pools()[0], vec![0, 1]);
//! assert_eq!(stats.maximum, 2);
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clustering;
pub mod dataset;
pub mod divergence;
pub mod error;
pub mod io;
pub mod labels;
pub mod nbp;
pub mod pooling;
pub mod predict;
pub mod report;
pub mod rng;
pub mod samplers;
pub mod selection;

pub use clustering::{ClusterFit, ClusterModelKind, FitConfig};
pub use dataset::{DataItem, Dataset, SplitRatios};
pub use divergence::DivergenceKind;
pub use error::{Error, Result};
pub use labels::{LabelCounts, LabelDistribution, LabelSpace};
pub use pooling::Pooling;
pub use selection::{Loss, LossKind, SelectionReport};
