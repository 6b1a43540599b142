//! Numeric traits the retrieval and modelling code is generic over.
//!
//! Floating-point code (embeddings, cosine, policy probabilities, the rating
//! model) is written against [`Real`]; rank-fusion arithmetic only needs
//! field operations and is written against [`RankScore`], which is also
//! satisfied by exact rationals such as [`num_rational::BigRational`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar used for vectors and probabilities.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + Serialize + DeserializeOwned + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Score type for ranked lists and rank fusion.
pub trait RankScore: Num + FromPrimitive + Clone + PartialOrd + Debug {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// `numerator / denominator`, computed in the score type itself so exact
    /// types stay exact.
    fn ratio(numerator: usize, denominator: usize) -> Self {
        Self::from_count(numerator) / Self::from_count(denominator)
    }
}

impl<T: Num + FromPrimitive + Clone + PartialOrd + Debug> RankScore for T {}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn ratio_is_exact_for_rationals() {
        let third = <BigRational as RankScore>::ratio(1, 3);
        assert_eq!(third.clone() + third.clone() + third, BigRational::from_integer(1.into()));
    }

    #[test]
    fn lit_round_trips() {
        assert_eq!(<f32 as Real>::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Real>::from_count(7), 7.0);
    }
}
