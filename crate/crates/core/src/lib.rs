//! Community detection in directed networks whose row nodes may belong to
//! several communities while column nodes belong to exactly one.
//!
//! The crate provides the generative models ([`model`]), the spectral
//! estimators ONA and ODCNA ([`fit`]), the error criteria used to score them
//! ([`metrics`]), and a seeded simulation harness ([`experiments`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod io;
pub mod kmeans;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod seed;
pub mod sp;

pub use error::{Error, Result};
pub use fit::{fit_odcna, fit_ona, DiagnosticBundle, FitResult, Method};
pub use linalg::{row_normalize, top_k_svd, MatrixOperator, SpectralTriple};
pub use metrics::{f_c_error, hamm, mhamm, ErrorReport};
pub use model::{
    build_omega, sample_adjacency, sample_column_degrees, validate_dconm_params,
    validate_onm_params, BiAdjacency, ColumnLabels, ConnectivityMatrix, DegreeRole, DegreeVector,
    Degrees, ModelKind, PopulationMatrix, RowMembership,
};
pub use sp::{successive_projection, CornerSet};
