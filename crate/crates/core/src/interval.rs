use serde::{Deserialize, Serialize};

/// A closed-or-open real interval `[lo, hi]`. Endpoint openness is not
/// tracked: every use in this crate is under a Lebesgue integral.
///
/// Infinite endpoints are allowed and serialize as JSON `null`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[Option<f64>; 2]", into = "[Option<f64>; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Lebesgue measure; zero for empty intervals.
    pub fn len(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.is_empty() || (other.lo >= self.lo && other.hi <= self.hi)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// `self \ other` as at most two pieces.
    pub fn difference(&self, other: &Interval) -> Vec<Interval> {
        let cut = self.intersect(other);
        if cut.is_empty() {
            return if self.is_empty() { vec![] } else { vec![*self] };
        }
        [Interval::new(self.lo, cut.lo), Interval::new(cut.hi, self.hi)]
            .into_iter()
            .filter(|piece| !piece.is_empty())
            .collect()
    }
}

impl From<[Option<f64>; 2]> for Interval {
    fn from([lo, hi]: [Option<f64>; 2]) -> Self {
        Interval::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))
    }
}

impl From<Interval> for [Option<f64>; 2] {
    fn from(iv: Interval) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        [finite(iv.lo), finite(iv.hi)]
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
