//! Fixed-point energy and power.
//!
//! Energies are integer picojoules so that per-node ledgers balance exactly
//! over a simulated year; every event cost in the model is a whole number of
//! picojoules.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::time::Duration;

use serde::{Deserialize, Serialize};

const PJ_PER_J: f64 = 1e12;

/// Serializes as a bare picojoule count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Energy(u64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub const fn from_picojoules(pj: u64) -> Self {
        Energy(pj)
    }

    pub const fn from_microjoules_exact(uj: u64) -> Self {
        Energy(uj * 1_000_000)
    }

    /// Rounds to the nearest picojoule. Negative and non-finite inputs map to
    /// zero.
    pub fn from_joules(j: f64) -> Self {
        if j.is_finite() && j > 0.0 {
            Energy((j * PJ_PER_J).round() as u64)
        } else {
            Energy(0)
        }
    }

    pub fn from_microjoules(uj: f64) -> Self {
        Self::from_joules(uj * 1e-6)
    }

    pub const fn picojoules(self) -> u64 {
        self.0
    }

    pub fn joules(self) -> f64 {
        self.0 as f64 / PJ_PER_J
    }

    pub fn microjoules(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn saturating_sub(self, other: Energy) -> Energy {
        Energy(self.0.saturating_sub(other.0))
    }

    pub fn checked_sub(self, other: Energy) -> Option<Energy> {
        self.0.checked_sub(other.0).map(Energy)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

/// Panics on underflow, like integer subtraction.
impl Sub for Energy {
    type Output = Energy;
    fn sub(self, rhs: Energy) -> Energy {
        Energy(self.0 - rhs.0)
    }
}

impl Mul<u64> for Energy {
    type Output = Energy;
    fn mul(self, rhs: u64) -> Energy {
        Energy(self.0 * rhs)
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, Add::add)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j = self.joules();
        if j >= 1.0 {
            write!(f, "{j} J")
        } else if j >= 1e-3 {
            write!(f, "{} mJ", j * 1e3)
        } else {
            write!(f, "{} uJ", self.microjoules())
        }
    }
}

/// Power in integer picowatts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Power(u64);

impl Power {
    pub const ZERO: Power = Power(0);

    pub const fn from_picowatts(pw: u64) -> Self {
        Power(pw)
    }

    pub fn from_watts(w: f64) -> Self {
        if w.is_finite() && w > 0.0 {
            Power((w * PJ_PER_J).round() as u64)
        } else {
            Power(0)
        }
    }

    pub fn from_microwatts(uw: f64) -> Self {
        Self::from_watts(uw * 1e-6)
    }

    pub const fn picowatts(self) -> u64 {
        self.0
    }

    pub fn watts(self) -> f64 {
        self.0 as f64 / PJ_PER_J
    }

    pub fn microwatts(self) -> f64 {
        self.0 as f64 / 1e6
    }

    /// Energy drawn over `d`, rounded to the nearest picojoule. Exact for
    /// whole seconds.
    pub fn over(self, d: Duration) -> Energy {
        let pj = self.0 as u128 * d.as_nanos();
        Energy(((pj + 500_000_000) / 1_000_000_000) as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joule_round_trips() {
        assert_eq!(Energy::from_microjoules(338.30).picojoules(), 338_300_000);
        assert_eq!(Energy::from_microjoules(951.16).picojoules(), 951_160_000);
        assert_eq!(Energy::from_joules(466.2).picojoules(), 466_200_000_000_000);
        assert_eq!(Energy::from_joules(-1.0), Energy::ZERO);
        assert_eq!(Energy::from_joules(f64::NAN), Energy::ZERO);
    }

    #[test]
    fn power_over_duration_is_exact_for_whole_seconds() {
        let sleep = Power::from_microwatts(7.84);
        assert_eq!(sleep.picowatts(), 7_840_000);
        assert_eq!(sleep.over(Duration::from_secs(60)).picojoules(), 470_400_000);
        assert_eq!(Power::from_picowatts(3).over(Duration::from_millis(500)).picojoules(), 2);
    }

    #[test]
    fn display_picks_a_unit() {
        assert_eq!(Energy::from_joules(466.2).to_string(), "466.2 J");
        assert_eq!(Energy::from_microjoules(3220.0).to_string(), "3.22 mJ");
        assert_eq!(Energy::from_microjoules(338.3).to_string(), "338.3 uJ");
    }
}
