use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};

/// Scalar type the crate is generic over. Implemented for `f32` and `f64`;
/// training typically runs in `f32`, invariant tests in `f64`.
pub trait Real:
    Float
    + FloatConst
    + NumAssignOps
    + FromPrimitive
    + Sum
    + Display
    + LowerExp
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` constant into this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable")
    }

    fn usize(v: usize) -> Self {
        Self::from_usize(v).expect("count not representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
