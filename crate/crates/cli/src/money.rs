use std::fmt;
use std::str::FromStr;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Currency amount with exactly two fraction digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(Decimal);

impl Money {
    /// Rounds a computed amount half-to-even to whole pennies.
    pub fn from_f64(x: f64) -> Option<Self> {
        let d = Decimal::from_f64_retain(x)?;
        Some(Self::normalized(d.round_dp_with_strategy(2, RoundingStrategy::MidpointNearestEven)))
    }

    /// Parses an input amount; more than two fraction digits is an error.
    pub fn parse(s: &str) -> Result<Self, String> {
        let d = Decimal::from_str_exact(s.trim()).map_err(|e| format!("not a decimal amount: {e}"))?;
        if d.scale() > 2 {
            return Err(format!("amount {s} has more than two fraction digits"));
        }
        Ok(Self::normalized(d))
    }

    fn normalized(mut d: Decimal) -> Self {
        d.rescale(2);
        if d.is_zero() {
            d.set_sign_positive(true);
        }
        Money(d)
    }

    pub fn to_f64(self) -> f64 {
        use rust_decimal::prelude::ToPrimitive;
        self.0.to_f64().expect("two-digit amount fits in f64")
    }

    pub fn is_negative(self) -> bool {
        self.0.is_sign_negative()
    }

    pub fn abs(self) -> Self {
        Money(self.0.abs())
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Money {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Money::parse(s)
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Money::parse(&s).map_err(serde::de::Error::custom)
    }
}
