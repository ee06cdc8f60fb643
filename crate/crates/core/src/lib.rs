//! Lower bounds for independent sets and cuts in large-girth regular graphs.
//!
//! Two routes to the same numbers:
//!
//! * [`evolution`] integrates the degree-distribution dynamics of the
//!   contraction-based independent-set processes (3- and 4-regular) and
//!   of the red/green/white cut process (3-regular).
//! * [`independent`] and [`cut`] run the corresponding local algorithms
//!   on finite configuration-model graphs ([`graph`]), checked against
//!   the exhaustive solvers in [`oracle`].

// NaN must fail range guards, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cut;
pub mod evolution;
pub mod graph;
pub mod independent;
pub mod oracle;
pub mod par;
pub mod report;
