//! Arithmetic in prime fields `F_q`.
//!
//! [`FieldSpec`] carries the modulus and exposes raw `u32` operations that the
//! counting kernels use directly. [`FieldElement`] is the checked, self-describing
//! value type used at API boundaries.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible modulus. Products of two residues stay below 2^32.
pub const MAX_MODULUS: u64 = 1 << 16;

/// A validated prime modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    q: u32,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            return false;
        }
        p += 1;
    }
    true
}

impl FieldSpec {
    pub fn new(q: u64) -> Result<Self> {
        if !(2..=MAX_MODULUS).contains(&q) {
            return Err(Error::ModulusOutOfRange(q));
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(FieldSpec { q: q as u32 })
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn element(&self, value: u64) -> FieldElement {
        FieldElement {
            value: (value % self.q as u64) as u32,
            q: self.q,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    /// Checks that `value` is already a canonical residue.
    pub fn canonical(&self, value: u64) -> Result<FieldElement> {
        if value >= self.q as u64 {
            return Err(Error::CoordinateOutOfRange { value, q: self.q });
        }
        Ok(FieldElement {
            value: value as u32,
            q: self.q,
        })
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let q = self.q as u64;
        let mut base = a as u64 % q;
        let mut acc = 1 % q;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % q;
            }
            base = base * base % q;
            e >>= 1;
        }
        acc as u32
    }

    /// Inverse by Fermat: `a^(q-2)`.
    pub fn inv(&self, a: u32) -> Result<u32> {
        if a % self.q == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, self.q as u64 - 2))
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

/// Operation selector for [`arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    /// Unary; the second operand is ignored apart from the field check.
    Neg,
    /// Raises `a` to the canonical integer value of `b`.
    Pow,
}

/// An element of `F_q` in canonical form `0 <= value < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldElement {
    value: u32,
    q: u32,
}

impl FieldElement {
    #[inline]
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> FieldSpec {
        FieldSpec { q: self.q }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &FieldElement) -> Result<FieldSpec> {
        if self.q != other.q {
            return Err(Error::FieldMismatch {
                left: self.q,
                right: other.q,
            });
        }
        Ok(self.field())
    }

    fn wrap(&self, value: u32) -> FieldElement {
        FieldElement { value, q: self.q }
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement> {
        let f = self.same_field(other)?;
        Ok(self.wrap(f.add(self.value, other.value)))
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement> {
        let f = self.same_field(other)?;
        Ok(self.wrap(f.sub(self.value, other.value)))
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement> {
        let f = self.same_field(other)?;
        Ok(self.wrap(f.mul(self.value, other.value)))
    }

    pub fn neg(&self) -> FieldElement {
        self.wrap(self.field().neg(self.value))
    }

    pub fn pow(&self, e: u64) -> FieldElement {
        self.wrap(self.field().pow(self.value, e))
    }

    pub fn inv(&self) -> Result<FieldElement> {
        Ok(self.wrap(self.field().inv(self.value)?))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Binary dispatch over [`ArithOp`]; both operands must live in the same field.
pub fn arith(a: FieldElement, b: FieldElement, op: ArithOp) -> Result<FieldElement> {
    a.same_field(&b)?;
    match op {
        ArithOp::Add => a.add(&b),
        ArithOp::Sub => a.sub(&b),
        ArithOp::Mul => a.mul(&b),
        ArithOp::Neg => Ok(a.neg()),
        ArithOp::Pow => Ok(a.pow(b.value as u64)),
    }
}
