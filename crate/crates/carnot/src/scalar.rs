//! Exact scalars: rationals and real quadratic field elements `a + b√d`.
//!
//! All algebra modules compute over these scalars so verdicts never depend
//! on floating point. Numeric embeddings are available for reporting and
//! for the simulation layer.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// Coefficient field tag: `Q` or `Q(√d)` with `d` squarefree, `d > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Rational,
    Quadratic(u64),
}

impl Field {
    pub fn is_quadratic(&self) -> bool {
        matches!(self, Field::Quadratic(_))
    }

    /// Common field of two operands. Rational promotes into any quadratic field.
    pub fn join(self, other: Field) -> Result<Field, ScalarError> {
        match (self, other) {
            (Field::Rational, f) | (f, Field::Rational) => Ok(f),
            (Field::Quadratic(d1), Field::Quadratic(d2)) => {
                if d1 == d2 {
                    Ok(Field::Quadratic(d1))
                } else {
                    Err(ScalarError::FieldMismatch(d1, d2))
                }
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScalarError {
    #[error("cannot mix Q(√{0}) with Q(√{1})")]
    FieldMismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("d = {0} is not a squarefree integer > 1")]
    BadRadicand(u64),
    #[error("cannot parse scalar from {0:?}")]
    Parse(String),
}

/// Exact element `a + b√d` of `Q` (`b = 0`, no radicand) or `Q(√d)`.
#[derive(Debug, Clone)]
pub struct Scalar {
    pub a: BigRational,
    pub b: BigRational,
    pub field: Field,
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn is_squarefree(d: u64) -> bool {
    if d < 2 {
        return false;
    }
    let mut k = 2u64;
    while k * k <= d {
        if d % (k * k) == 0 {
            return false;
        }
        k += 1;
    }
    true
}

impl Scalar {
    pub fn rational(r: BigRational) -> Scalar {
        Scalar {
            a: r,
            b: BigRational::zero(),
            field: Field::Rational,
        }
    }

    pub fn from_int(n: i64) -> Scalar {
        Scalar::rational(big(n))
    }

    pub fn ratio(num: i64, den: i64) -> Scalar {
        assert!(den != 0);
        Scalar::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero() -> Scalar {
        Scalar::from_int(0)
    }

    pub fn one() -> Scalar {
        Scalar::from_int(1)
    }

    pub fn quadratic(a: BigRational, b: BigRational, d: u64) -> Result<Scalar, ScalarError> {
        if !is_squarefree(d) {
            return Err(ScalarError::BadRadicand(d));
        }
        Ok(Scalar {
            a,
            b,
            field: Field::Quadratic(d),
        })
    }

    /// `√d` itself.
    pub fn sqrt_of(d: u64) -> Result<Scalar, ScalarError> {
        Scalar::quadratic(BigRational::zero(), BigRational::one(), d)
    }

    /// `a + b√d` with small integer parts, panicking on a bad radicand.
    pub fn quad_int(a: i64, b: i64, d: u64) -> Scalar {
        Scalar::quadratic(big(a), big(b), d).expect("bad radicand")
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    /// True when the element lies in `Q` (irrational part vanishes).
    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn radicand(&self) -> Option<u64> {
        match self.field {
            Field::Rational => None,
            Field::Quadratic(d) => Some(d),
        }
    }

    fn promote(x: &Scalar, y: &Scalar) -> (Scalar, Scalar, Field) {
        let f = x
            .field
            .join(y.field)
            .expect("scalar arithmetic across distinct quadratic fields");
        let mut a = x.clone();
        let mut b = y.clone();
        a.field = f;
        b.field = f;
        (a, b, f)
    }

    pub fn galois_conjugate(&self) -> Scalar {
        Scalar {
            a: self.a.clone(),
            b: -self.b.clone(),
            field: self.field,
        }
    }

    /// Exact sign in the principal embedding (√d > 0): -1, 0 or 1.
    pub fn sign(&self) -> i8 {
        let sa = rational_sign(&self.a);
        let sb = rational_sign(&self.b);
        if sb == 0 {
            return sa;
        }
        let d = BigRational::from_integer(BigInt::from(
            self.radicand().expect("irrational part in Q scalar"),
        ));
        if sa == 0 {
            return sb;
        }
        if sa == sb {
            return sa;
        }
        // a and b√d have opposite signs: compare a² against d·b².
        let a2 = &self.a * &self.a;
        let db2 = &d * &self.b * &self.b;
        match a2.cmp(&db2) {
            std::cmp::Ordering::Greater => sa,
            std::cmp::Ordering::Less => sb,
            // a² = d·b² with d squarefree forces a = b = 0, handled above.
            std::cmp::Ordering::Equal => 0,
        }
    }

    /// Exact sign in the conjugate embedding (√d < 0).
    pub fn sign_conjugate(&self) -> i8 {
        self.galois_conjugate().sign()
    }

    pub fn abs(&self) -> Scalar {
        if self.sign() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn inv(&self) -> Result<Scalar, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        if self.b.is_zero() {
            return Ok(Scalar {
                a: BigRational::one() / self.a.clone(),
                b: BigRational::zero(),
                field: self.field,
            });
        }
        let d = BigRational::from_integer(BigInt::from(self.radicand().unwrap()));
        // (a + b√d)⁻¹ = (a − b√d)/(a² − d b²); the norm is nonzero for d squarefree.
        let norm = &self.a * &self.a - &d * &self.b * &self.b;
        Ok(Scalar {
            a: self.a.clone() / norm.clone(),
            b: -self.b.clone() / norm,
            field: self.field,
        })
    }

    pub fn pow(&self, k: i64) -> Scalar {
        if k < 0 {
            return self.inv().expect("pow of zero with negative exponent").pow(-k);
        }
        let mut acc = Scalar {
            a: BigRational::one(),
            b: BigRational::zero(),
            field: self.field,
        };
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Principal numeric embedding.
    pub fn to_f64(&self) -> f64 {
        let a = rational_to_f64(&self.a);
        match self.radicand() {
            None => a,
            Some(d) => a + rational_to_f64(&self.b) * (d as f64).sqrt(),
        }
    }

    pub fn to_f64_conjugate(&self) -> f64 {
        self.galois_conjugate().to_f64()
    }

    /// True when `a` and `b` are both integers (algebraic integer for the
    /// purposes of the lattice certificates; `Z[√d]` integrality).
    pub fn is_z_sqrt_d_integral(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }

    /// Exact comparison in the principal embedding.
    pub fn cmp_real(&self, other: &Scalar) -> std::cmp::Ordering {
        let diff = self - other;
        match diff.sign() {
            s if s < 0 => std::cmp::Ordering::Less,
            0 => std::cmp::Ordering::Equal,
            _ => std::cmp::Ordering::Greater,
        }
    }

    /// Parse the exact string form `"a/b"` or `"a/b+c/e*r"` in the given field.
    pub fn parse(s: &str, field: Field) -> Result<Scalar, ScalarError> {
        let s = s.trim();
        let (a_str, b_str) = match s.strip_suffix("*r") {
            Some(head) => {
                // Split the radical coefficient off at the last '+' so that
                // negative coefficients like "1/2+-3/4*r" parse.
                let mut it = head.rsplitn(2, '+');
                let b_part = it.next().ok_or_else(|| ScalarError::Parse(s.into()))?;
                let a_part = it.next().ok_or_else(|| ScalarError::Parse(s.into()))?;
                (a_part.to_string(), Some(b_part.to_string()))
            }
            None => (s.to_string(), None),
        };
        let a = parse_ratio(&a_str).ok_or_else(|| ScalarError::Parse(s.into()))?;
        match b_str {
            None => Ok(Scalar {
                a,
                b: BigRational::zero(),
                field,
            }),
            Some(bs) => {
                let d = match field {
                    Field::Quadratic(d) => d,
                    Field::Rational => return Err(ScalarError::Parse(s.into())),
                };
                let b = parse_ratio(&bs).ok_or_else(|| ScalarError::Parse(s.into()))?;
                Scalar::quadratic(a, b, d)
            }
        }
    }
}

fn rational_sign(r: &BigRational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    let n = r.numer();
    let d = r.denom();
    // Good enough for the magnitudes appearing here.
    let nf = n.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let df = d.to_string().parse::<f64>().unwrap_or(f64::NAN);
    nf / df
}

fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let mut it = s.splitn(2, '/');
    let num = BigInt::from_str(it.next()?.trim()).ok()?;
    match it.next() {
        None => Some(BigRational::from_integer(num)),
        Some(den) => {
            let den = BigInt::from_str(den.trim()).ok()?;
            if den.is_zero() {
                None
            } else {
                Some(BigRational::new(num, den))
            }
        }
    }
}

fn fmt_ratio(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", fmt_ratio(&self.a))
        } else {
            write!(f, "{}+{}*r", fmt_ratio(&self.a), fmt_ratio(&self.b))
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Scalar) -> bool {
        if self.field.join(other.field).is_err() {
            return self.b.is_zero() && other.b.is_zero() && self.a == other.a;
        }
        self.a == other.a && self.b == other.b
    }
}
impl Eq for Scalar {}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                let f: fn(&Scalar, &Scalar) -> Scalar = $body;
                f(self, rhs)
            }
        }
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                $trait::$method(&self, &rhs)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                $trait::$method(&self, rhs)
            }
        }
    };
}

impl_binop!(Add, add, |x, y| {
    let (x, y, f) = Scalar::promote(x, y);
    Scalar {
        a: x.a + y.a,
        b: x.b + y.b,
        field: f,
    }
});

impl_binop!(Sub, sub, |x, y| {
    let (x, y, f) = Scalar::promote(x, y);
    Scalar {
        a: x.a - y.a,
        b: x.b - y.b,
        field: f,
    }
});

impl_binop!(Mul, mul, |x, y| {
    let (x, y, f) = Scalar::promote(x, y);
    match f {
        Field::Rational => Scalar {
            a: x.a * y.a,
            b: BigRational::zero(),
            field: f,
        },
        Field::Quadratic(d) => {
            let d = BigRational::from_integer(BigInt::from(d));
            Scalar {
                a: &x.a * &y.a + &d * &x.b * &y.b,
                b: &x.a * &y.b + &x.b * &y.a,
                field: f,
            }
        }
    }
});

impl_binop!(Div, div, |x, y| {
    let inv = y.inv().expect("scalar division by zero");
    x * &inv
});

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            a: -self.a.clone(),
            b: -self.b.clone(),
            field: self.field,
        }
    }
}
impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}
