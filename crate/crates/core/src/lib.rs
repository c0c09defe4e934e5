//! Information rates for fading AWGN channels: capacity bounds, generalized
//! mutual information (GMI) and power control under partial channel state
//! information at the receiver (CSIR) and transmitter (CSIT).
//!
//! All rates are in nats unless a name says otherwise.

pub mod blockfade;
pub mod channel;
pub mod error;
pub mod gmi;
pub mod numerics;
pub mod power;
pub mod specfun;

pub use error::{ChannelError, GmiError, NumError, SpecError};

/// Scalar type accepted by the generic special functions and solvers.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + num_traits::ToPrimitive + Send + Sync + std::fmt::Debug + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

pub type Quadrature = numerics::Quadrature<f64>;
pub type Quadrature32 = numerics::Quadrature<f32>;
pub type WidebandMetrics = numerics::WidebandMetrics<f64>;

pub use gmi::RateResult;
pub use numerics::McEstimate;
