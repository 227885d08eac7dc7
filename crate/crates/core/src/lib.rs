//! Verification and falsification of ReLU neural barrier certificates.
//!
//! A certificate `h` is a ReLU network; the pipeline enumerates the linear
//! regions that meet its zero level set and decides, region by region,
//! whether the vector field points into `{h >= 0}` and whether the initial
//! and unsafe sets stay on the correct sides.

pub mod config;
pub mod dynamics;
pub mod enumeration;
pub mod error;
pub mod invariance;
pub mod numeric;
pub mod polyhedron;
pub mod relu_net;
pub mod smt_export;

pub use config::Config;
pub use dynamics::{DynamicsSystem, Expr, Interval};
pub use enumeration::{EnumerationResult, ValidRegion};
pub use error::{Error, Result};
pub use invariance::{
    verify_certificate, Certification, ConditionVerdict, RegionVerdict, SetKind, Status, Witness,
};
pub use polyhedron::{Polyhedron, SlicePolyhedron, Tolerances};
pub use relu_net::{ActivationIndicator, RegionAffine, ReluNetwork};
pub use smt_export::{SmtMode, SmtQuery};
