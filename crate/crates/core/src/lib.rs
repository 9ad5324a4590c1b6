pub mod affinity;
pub mod cli;
pub mod cluster_pool;
pub mod domset;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod scheme;

pub use affinity::{AffinityMatrix, FeatureMatrix};
pub use cluster_pool::{PoolMode, PoolStructure, StructureKind};
pub use domset::{DomSetConfig, Partition};
pub use error::{Error, Result};
pub use scheme::ClusteringHierarchy;
