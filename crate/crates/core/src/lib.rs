//! Classifier-agnostic lower bounds on multiclass adversarial risk.
//!
//! A labeled point cloud and an adversarial budget ε define a family of
//! feasible interactions: sets of points with distinct labels that fit in one
//! ε-ball. The minimum total mass of a measure that dominates every class
//! after the adversary merges such sets is a linear program over those
//! interactions, and one minus its value lower-bounds the risk of every
//! classifier. Capping the interaction order at a level `L` keeps the LP
//! tractable and only lowers the bound.
//!
//! ```
//! use advbound::data::triangle_fixture;
//! use advbound::lp::{assemble_lp, solve_lp, LpOptions};
//! use advbound::sinkhorn::{entropic_solve, CostModel, EntropicOptions};
//! use advbound::{build_complex, ComplexOptions, Metric};
//!
//! let cloud = triangle_fixture();
//! let complex = build_complex(&cloud, 0.8, Metric::L2, 3, &ComplexOptions::default())?;
//! let exact = solve_lp(&assemble_lp(&complex, &cloud)?, &LpOptions::default())?;
//! assert!((exact.risk_lower_bound - 1.0 / 3.0).abs() < 1e-9);
//!
//! let model = CostModel::adversarial(&complex, &cloud)?;
//! let (_, report) = entropic_solve(&cloud, &complex, &model, 0.1, &EntropicOptions::default())?;
//! assert!((report.risk_lower_bound - exact.risk_lower_bound).abs() <= 0.1);
//! # Ok::<(), advbound::Error>(())
//! ```

pub mod cloud;
pub mod complex;
pub mod data;
pub mod error;
pub mod lp;
pub mod metric;
pub mod numeric;
pub mod oracle;
pub mod sinkhorn;
pub mod truncation;

pub use cloud::LabeledPointCloud;
pub use complex::{build_complex, ComplexOptions, InteractionComplex};
pub use error::{Error, Result};
pub use metric::Metric;
