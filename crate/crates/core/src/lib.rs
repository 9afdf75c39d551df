//! Heisenberg-group geometry, two-power-weighted Morrey norms, and the sharp
//! constants of the m-linear Hardy–Littlewood–Pólya and Hilbert operators,
//! each closed form paired with an independent numerical oracle.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub mod cli;
pub mod constants;
pub mod error;
pub mod hgroup;
pub mod morrey;
pub mod operators;
pub mod params;
pub mod profile;
pub mod quad;
pub mod report;
pub mod specfun;

pub use error::{Error, Result};
pub use hgroup::{ball_volume_constant, GroupParams, HPoint};
pub use params::{ExponentSet, ParamSet, Violation};
pub use profile::RadialProfile;
pub use quad::{McSpec, QuadratureSpec};
pub use report::VerificationReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Hlp,
    Hilbert,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorKind::Hlp => "hlp",
            OperatorKind::Hilbert => "hilbert",
        })
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hlp" => Ok(OperatorKind::Hlp),
            "hilbert" => Ok(OperatorKind::Hilbert),
            other => Err(Error::InvalidInput(format!("unknown operator kind '{other}' (expected hlp or hilbert)"))),
        }
    }
}
