//! Scoring, surface reconstruction, and sphere metrology.

pub mod compare;
pub mod error;
pub mod height;
pub mod metrology;
pub mod sphere;

pub use compare::{
    aggregate_mae, compare_methods, comparison_csv, CompareConfig, ComparisonRow, DirectContext,
    Method, NeuralContext, DEFAULT_MODULATION_THRESHOLD,
};
pub use error::{phase_error, ErrorReport, EVAL_MARGIN};
pub use height::{phase_to_height, HeightModel, Point3};
pub use metrology::{
    metrology_ps, sphere_metrology, MetrologyReport, TwoSphereData, TwoSphereScene,
};
pub use sphere::{fit_sphere, SphereFit};
