//! Maximum-weight online perfect bipartite matching with i.i.d. arrivals.
//!
//! A known set of `n` workers is matched, one arrival at a time, to `n` jobs
//! whose types are drawn independently from a known distribution. The
//! [`dispatch`] module implements the DISPATCH policy: solve the fractional
//! transportation problem on the expectation graph ([`transport`]), sample a
//! preferred worker in proportion to the optimal flow, and fall back to a
//! uniformly random available worker. DISPATCH is 1/2-competitive, and no
//! online policy does better.
//!
//! The remaining modules exist to check that claim:
//!
//! * [`oracle`] computes offline optima and exact expectations (a subset DP
//!   over availability sets and an enumeration over arrival-count vectors).
//! * [`harness`] runs seeded Monte Carlo replications with common random
//!   numbers, paired ratio estimates, and the lemma and lower-bound checks.
//! * [`cli`] wires everything into the `dispatch` binary.
//!
//! The guide in `book/` walks through each piece; its code listings are
//! compiled and run as doctests of this crate.

pub mod cli;
pub mod dispatch;
mod error;
pub mod example;
pub mod format;
pub mod harness;
pub mod instance;
mod mcf;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use instance::{ArrivalSequence, ExpectationGraph, Matching};
pub use transport::FlowSolution;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/transportation.md")]
    mod transportation {}
    #[doc = include_str!("../../../book/src/dispatch.md")]
    mod dispatch {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
