//! The guide under `book/`, compiled so that its code samples run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/forms.md")]
pub mod forms {}

#[doc = include_str!("../../../book/src/counting.md")]
pub mod counting {}

#[doc = include_str!("../../../book/src/volume.md")]
pub mod volume {}

#[doc = include_str!("../../../book/src/minima.md")]
pub mod minima {}

#[doc = include_str!("../../../book/src/theta.md")]
pub mod theta {}

#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
