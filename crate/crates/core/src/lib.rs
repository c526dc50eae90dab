//! Binary classification by star-shaped polyhedral sets supported on a fixed
//! complete simplicial fan.
//!
//! The class-0 region of a parameter vector `a > 0` is the star
//! `{x : <[x], a> <= 1}`, where `[x]` is the coefficient vector of `x` in the
//! cone of the fan containing it. The crate covers the coefficient map
//! ([`fan`]), classification ([`star`]), the 0/1 and log-likelihood losses
//! ([`loss`]), a concave maximum-likelihood trainer ([`optim`]), chamber
//! enumeration and landscape scans ([`arrangement`]), and synthetic data
//! ([`datagen`]).

pub mod arrangement;
pub mod datagen;
pub mod error;
pub mod fan;
pub mod loss;
pub mod lp;
pub mod numeric;
pub mod optim;
pub mod star;

pub use error::{Error, Result};
pub use fan::{CoefficientVector, Fan};
pub use loss::{DataMatrix, LabeledDataset, LossReport};
pub use star::{ParamVector, TranslatedStar};
