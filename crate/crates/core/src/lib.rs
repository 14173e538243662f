//! Multilinear low-rank tensors on graphs.
//!
//! Dense tensors with mode-0-fastest storage, kNN graphs and their
//! Laplacian eigenbases, graph spectral diagnostics, and the solvers that
//! work on the small graph core tensor instead of the full data: GCTP,
//! GMLSVD and TRPCAG, next to a plain MLSVD baseline.
//!
//! Modes are numbered from 0 throughout the library.

pub mod error;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod prox;
pub mod spectral;
pub mod synth;
pub mod tensor;

pub use error::{MlrtgError, Result};
pub use graph::{
    cartesian_product_laplacian, combinatorial_laplacian, eigen_gap, graph_basis, knn_graph, smallest_eigs,
    tensor_mode_bases, EigenMethod, GraphBasis, WeightedGraph,
};
pub use metrics::{alignment_diag, recon_error, singular_value_error, subspace_angle};
pub use prox::{
    gctp, gmlsvd, mlsvd, mode_weights, prox_l1_dataterm, trpcag, weighted_svt, SolverOptions, SolverReport,
    SvdFactors, TrpcagOutput, WeightVector,
};
pub use spectral::{
    energy_concentration, expand_core, gsc, project_gct, stationarity_ratio, GctDecomposition, GscMatrix,
};
pub use synth::{add_gaussian_noise, add_sparse_noise, method1, method2, SynthMethod, SynthOutput, SynthSpec};
pub use tensor::{
    fold, matricize, mode_product, mode_product_transposed, multilinear_transform, DenseTensor, ModeMatrix,
};

pub use nalgebra::{DMatrix, DVector};
