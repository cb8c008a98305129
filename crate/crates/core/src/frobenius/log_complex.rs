use std::f64::consts::PI;
use std::ops::{Div, Mul};

use num_complex::Complex64;
use serde::ser::{Serialize, SerializeTuple, Serializer};

/// A complex number stored as `(ln |w|, arg w)`, `arg` in `(-pi, pi]`.
/// `logabs = -inf` is exact zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogComplex {
    pub logabs: f64,
    pub arg: f64,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex { logabs: f64::NEG_INFINITY, arg: 0.0 };
    pub const ONE: LogComplex = LogComplex { logabs: 0.0, arg: 0.0 };

    pub fn new(logabs: f64, arg: f64) -> Self {
        if logabs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self { logabs, arg: wrap_angle(arg) }
    }

    pub fn from_complex(w: Complex64) -> Self {
        if w.re == 0.0 && w.im == 0.0 {
            return Self::ZERO;
        }
        Self { logabs: w.norm().ln(), arg: w.arg() }
    }

    pub fn from_sign(s: i8) -> Self {
        if s >= 0 {
            Self::ONE
        } else {
            Self { logabs: 0.0, arg: PI }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.logabs == f64::NEG_INFINITY
    }

    /// Underflows to 0 and overflows to infinity outside the binary64 range.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.logabs.exp(), self.arg)
    }

    pub fn powi(&self, n: i64) -> Self {
        if self.is_zero() {
            return if n == 0 { Self::ONE } else { Self::ZERO };
        }
        Self::new(self.logabs * n as f64, self.arg * n as f64)
    }

    pub fn inv(&self) -> Self {
        Self::new(-self.logabs, -self.arg)
    }

    pub fn abs(&self) -> f64 {
        self.logabs.exp()
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;

    fn mul(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() || rhs.is_zero() {
            return LogComplex::ZERO;
        }
        LogComplex::new(self.logabs + rhs.logabs, self.arg + rhs.arg)
    }
}

impl Div for LogComplex {
    type Output = LogComplex;

    fn div(self, rhs: LogComplex) -> LogComplex {
        self * rhs.inv()
    }
}

impl std::iter::Product for LogComplex {
    fn product<I: Iterator<Item = LogComplex>>(iter: I) -> Self {
        iter.fold(LogComplex::ONE, |a, b| a * b)
    }
}

/// Serialized as `[logabs, arg]`; exact zero has `logabs = null`.
impl Serialize for LogComplex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        if self.is_zero() {
            t.serialize_element(&Option::<f64>::None)?;
        } else {
            t.serialize_element(&self.logabs)?;
        }
        t.serialize_element(&self.arg)?;
        t.end()
    }
}
