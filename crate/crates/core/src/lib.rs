//! Shewhart X̄ charts built from Phase-I subgroups of unequal size.
//!
//! Location and scale are estimated per subgroup with classical or robust
//! estimators (mean/SD, median/MAD, Hodges-Lehmann/Shamos) and pooled with
//! one of four schemes, including the best linear unbiased (BLUE) weighting
//! driven by tabulated small-sample factors.
//!
//! ```
//! use robust_xbar::{control_limits, phase1_estimate, FactorTable, Method, PoolingType, Subgroup};
//!
//! let samples = vec![
//!     Subgroup::new("1", vec![74.030, 74.002, 74.019, 73.992, 74.008]).unwrap(),
//!     Subgroup::new("2", vec![73.995, 73.992, 74.001]).unwrap(),
//!     Subgroup::new("3", vec![73.988, 74.024, 74.021, 74.005]).unwrap(),
//! ];
//! let est = phase1_estimate(&samples, Method::III, PoolingType::C, FactorTable::builtin()).unwrap();
//! let limits = control_limits(&est, 5, 3.0).unwrap();
//! assert!(limits.lcl < limits.cl && limits.cl < limits.ucl);
//! ```

pub mod charts;
pub mod error;
pub mod estimators;
pub mod factors;
pub mod io;
pub mod normal;
pub mod parallel;
pub mod pooling;
pub mod simulation;
pub mod svg;

pub use charts::{
    control_limits, monitor, phase1_estimate, sensitivity_sweep, signal_probability, ControlLimits, Method,
    PhaseIEstimate, RunLength, SensitivityRow, SensitivitySweepSpec, SweepPlacement, DEFAULT_G,
};
pub use error::{Error, Result};
pub use estimators::{HlVariant, LocationKind, ScaleKind, Scratch, Subgroup};
pub use factors::{build_table, c4, load_table, save_table, Estimator, FactorEntry, FactorTable};
pub use pooling::{pool_location, pool_scale, pool_scale_pooled_data, PooledEstimate, PoolingType};
