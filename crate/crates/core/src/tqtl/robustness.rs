use std::cmp::Ordering;
use std::fmt;
use std::ops::Neg;

/// Extended-real quality value: `NegInf < Finite(v) < PosInf`.
///
/// Finite values are ordered with `f64::total_cmp`, so `-0.0 < 0.0` and
/// equality is bitwise. `Finite` never holds NaN or an infinity.
#[derive(Debug, Clone, Copy)]
pub enum Robustness {
    NegInf,
    Finite(f64),
    PosInf,
}

impl Robustness {
    /// Maps infinities onto the dedicated variants.
    ///
    /// # Panics
    /// On NaN.
    pub fn from_f64(v: f64) -> Robustness {
        assert!(!v.is_nan(), "robustness cannot be NaN");
        if v == f64::INFINITY {
            Robustness::PosInf
        } else if v == f64::NEG_INFINITY {
            Robustness::NegInf
        } else {
            Robustness::Finite(v)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Robustness::NegInf => f64::NEG_INFINITY,
            Robustness::Finite(v) => v,
            Robustness::PosInf => f64::INFINITY,
        }
    }

    pub fn from_bool(b: bool) -> Robustness {
        if b {
            Robustness::PosInf
        } else {
            Robustness::NegInf
        }
    }

    pub fn is_positive(self) -> bool {
        self.to_f64() > 0.0
    }

    pub fn is_negative(self) -> bool {
        self.to_f64() < 0.0
    }

    /// Exactly `Finite(±0.0)`.
    pub fn is_zero(self) -> bool {
        self.to_f64() == 0.0
    }

    fn rank(self) -> u8 {
        match self {
            Robustness::NegInf => 0,
            Robustness::Finite(_) => 1,
            Robustness::PosInf => 2,
        }
    }
}

impl Neg for Robustness {
    type Output = Robustness;

    fn neg(self) -> Robustness {
        match self {
            Robustness::NegInf => Robustness::PosInf,
            Robustness::Finite(v) => Robustness::Finite(-v),
            Robustness::PosInf => Robustness::NegInf,
        }
    }
}

impl Ord for Robustness {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Robustness::Finite(a), Robustness::Finite(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Robustness {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Robustness {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Robustness {}

impl fmt::Display for Robustness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Robustness::NegInf => f.write_str("-inf"),
            Robustness::Finite(v) => write!(f, "{v}"),
            Robustness::PosInf => f.write_str("+inf"),
        }
    }
}

/// Satisfaction verdict; satisfaction requires strictly positive robustness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Sat,
    Unsat,
    /// Robustness exactly zero.
    Inconclusive,
}

impl Verdict {
    pub fn from_robustness(r: Robustness) -> Verdict {
        if r.is_positive() {
            Verdict::Sat
        } else if r.is_negative() {
            Verdict::Unsat
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Sat => "SAT",
            Verdict::Unsat => "UNSAT",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
