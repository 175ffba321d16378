//! Arithmetic backends for the Sturm recursion: native doubles or software floats.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::error::{Error, Result};

/// Mantissa width of `f64`.
pub const NATIVE_BITS: usize = 53;
/// Largest mantissa width accepted by the software backend.
pub const MAX_PRECISION_BITS: usize = 4096;

const RM: RoundingMode = RoundingMode::ToEven;

pub fn check_precision(bits: usize) -> Result<()> {
    if bits == 0 || bits > MAX_PRECISION_BITS {
        return Err(Error::PrecisionUnsupported { requested: bits, limit: MAX_PRECISION_BITS });
    }
    Ok(())
}

/// Field operations needed by bisection.
pub(crate) trait Scalar: Clone {
    fn from_f64(x: f64, bits: usize) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn is_negative(&self) -> bool;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    fn half(&self) -> Self;
    fn less_than(&self, o: &Self) -> bool {
        self.sub(o).is_negative()
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64, _bits: usize) -> Self {
        x
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn is_negative(&self) -> bool {
        *self < 0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn half(&self) -> Self {
        0.5 * self
    }
    fn less_than(&self, o: &Self) -> bool {
        self < o
    }
}

/// Software float carrying its own working precision.
#[derive(Debug, Clone)]
pub(crate) struct Ext {
    v: BigFloat,
    p: usize,
}

impl Ext {
    pub fn from_u64(x: u64, bits: usize) -> Self {
        Ext { v: BigFloat::from_u64(x, bits), p: bits }
    }

    pub fn sqrt(&self) -> Self {
        Ext { v: self.v.sqrt(self.p, RM), p: self.p }
    }

    /// `self^y` for positive `self`.
    pub fn powf(&self, y: f64, cc: &mut Consts) -> Self {
        let e = BigFloat::from_f64(y, self.p);
        Ext { v: self.v.pow(&e, self.p, RM, cc), p: self.p }
    }
}

pub(crate) fn consts() -> Consts {
    Consts::new().expect("constant cache allocation")
}

impl Scalar for Ext {
    fn from_f64(x: f64, bits: usize) -> Self {
        Ext { v: BigFloat::from_f64(x, bits), p: bits }
    }
    fn add(&self, o: &Self) -> Self {
        Ext { v: self.v.add(&o.v, self.p, RM), p: self.p }
    }
    fn sub(&self, o: &Self) -> Self {
        Ext { v: self.v.sub(&o.v, self.p, RM), p: self.p }
    }
    fn mul(&self, o: &Self) -> Self {
        Ext { v: self.v.mul(&o.v, self.p, RM), p: self.p }
    }
    fn div(&self, o: &Self) -> Self {
        Ext { v: self.v.div(&o.v, self.p, RM), p: self.p }
    }
    fn is_negative(&self) -> bool {
        self.v.is_negative() && !self.v.is_zero()
    }
    fn is_zero(&self) -> bool {
        self.v.is_zero()
    }
    fn to_f64(&self) -> f64 {
        big_to_f64(&self.v)
    }
    fn half(&self) -> Self {
        let h = BigFloat::from_f64(0.5, self.p);
        Ext { v: self.v.mul(&h, self.p, RM), p: self.p }
    }
}

fn big_to_f64(v: &BigFloat) -> f64 {
    if v.is_nan() {
        return f64::NAN;
    }
    if v.is_inf_pos() {
        return f64::INFINITY;
    }
    if v.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if v.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, exp, _)) = v.as_raw_parts() else {
        return f64::NAN;
    };
    // Value is 0.m * 2^exp with the most significant word last.
    let len = words.len() as i32;
    let mant: f64 = words
        .iter()
        .enumerate()
        .rev()
        .take(3)
        .map(|(i, &w)| w as f64 * 2f64.powi(64 * (i as i32 - len)))
        .sum();
    let x = libm::ldexp(mant, exp);
    if sign == Sign::Neg {
        -x
    } else {
        x
    }
}
