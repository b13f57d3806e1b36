//! Certified real arithmetic.
//!
//! Two layers: [`Interval`] is a fast double-precision enclosure used in hot
//! loops, and [`Enclosure`] carries exact rational endpoints for anything that
//! needs more than 53 bits. [`RealScalar`] ties an enclosure to a source that
//! can be asked for more precision.

mod enclosure;
mod interval;
mod real;

pub use enclosure::{ln_biguint, ln_rational, rat_to_interval, round_down, round_up, Enclosure};
pub use interval::{Interval, IntervalSum};
pub use real::{
    eval_linear_form, int_sign, parse_decimal, precision_cap, rational_size, set_precision_cap, ExactSource,
    FixedSource, LinearFormSource, LiteralSource, RealScalar, RealSource, SurdSource,
};
