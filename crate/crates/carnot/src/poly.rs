//! Exact multivariate polynomials and polynomial vector fields.

use crate::linalg::{SMat, SVec};
use crate::scalar::Scalar;
use std::collections::BTreeMap;

/// Sparse multivariate polynomial: exponent tuple → nonzero coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct MPoly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, Scalar>,
}

impl MPoly {
    pub fn zero(nvars: usize) -> MPoly {
        MPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Scalar) -> MPoly {
        let mut p = MPoly::zero(nvars);
        p.insert_term(vec![0; nvars], c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> MPoly {
        assert!(i < nvars);
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = MPoly::zero(nvars);
        p.insert_term(e, Scalar::one());
        p
    }

    /// Add `c · x^expts` to the polynomial.
    pub fn insert_term(&mut self, expts: Vec<u32>, c: Scalar) {
        assert_eq!(expts.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(expts);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> MPoly {
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Scalar) -> MPoly {
        if s.is_zero() {
            return MPoly::zero(self.nvars);
        }
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = MPoly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.insert_term(e, c1 * c2);
            }
        }
        out
    }

    /// ∂/∂x_m, exact.
    pub fn partial(&self, m: usize) -> MPoly {
        assert!(m < self.nvars);
        let mut out = MPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[m] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[m] -= 1;
            out.insert_term(e2, c * &Scalar::from_int(e[m] as i64));
        }
        out
    }

    pub fn eval(&self, x: &[Scalar]) -> Scalar {
        assert_eq!(x.len(), self.nvars);
        let mut acc = Scalar::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (i, &p) in e.iter().enumerate() {
                if p > 0 {
                    term = &term * &x[i].pow(p as i64);
                }
            }
            acc = acc + term;
        }
        acc
    }

    /// Numeric evaluation for the simulation layer.
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars);
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut term = c.to_f64();
            for (i, &p) in e.iter().enumerate() {
                if p > 0 {
                    term *= x[i].powi(p as i32);
                }
            }
            acc += term;
        }
        acc
    }

    /// Freeze the coefficients into f64 for repeated numeric evaluation.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let factors = e
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0)
                        .map(|(i, &p)| (i, p))
                        .collect();
                    (c.to_f64(), factors)
                })
                .collect(),
        }
    }

    /// Substitute x_i ↦ args[i].
    pub fn compose(&self, args: &[MPoly]) -> MPoly {
        assert_eq!(args.len(), self.nvars);
        let nv = if args.is_empty() { self.nvars } else { args[0].nvars };
        let mut acc = MPoly::zero(nv);
        for (e, c) in &self.terms {
            let mut term = MPoly::constant(nv, c.clone());
            for (i, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    term = term.mul(&args[i]);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// p(x + a): translate the origin to −a.
    pub fn shift(&self, a: &[Scalar]) -> MPoly {
        let args: Vec<MPoly> = (0..self.nvars)
            .map(|i| {
                let mut p = MPoly::var(self.nvars, i);
                p.insert_term(vec![0; self.nvars], a[i].clone());
                p
            })
            .collect();
        self.compose(&args)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }
}

impl std::fmt::Display for MPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &p) in e.iter().enumerate() {
                if p == 1 {
                    write!(f, "*x{}", i + 1)?;
                } else if p > 1 {
                    write!(f, "*x{}^{}", i + 1, p)?;
                }
            }
        }
        Ok(())
    }
}

/// Flattened sparse polynomial with f64 coefficients: the exact→float
/// conversion happens once at compile time instead of on every evaluation,
/// which is what tight simulation loops need.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    /// (coefficient, nonzero factors (variable, exponent)).
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, factors) in &self.terms {
            let mut term = *c;
            for &(i, p) in factors {
                let v = x[i];
                for _ in 0..p {
                    term *= v;
                }
            }
            acc += term;
        }
        acc
    }

    /// Evaluate on the split argument list (x, y) without concatenating.
    pub fn eval2(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let mut acc = 0.0;
        for (c, factors) in &self.terms {
            let mut term = *c;
            for &(i, p) in factors {
                let v = if i < n { x[i] } else { y[i - n] };
                for _ in 0..p {
                    term *= v;
                }
            }
            acc += term;
        }
        acc
    }
}

/// Polynomial vector field Σ_k components[k] ∂_k on R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVectorField {
    pub n: usize,
    pub components: Vec<MPoly>,
}

impl PolyVectorField {
    pub fn new(components: Vec<MPoly>) -> PolyVectorField {
        let n = components.len();
        assert!(components.iter().all(|c| c.nvars == n));
        PolyVectorField { n, components }
    }

    pub fn zero(n: usize) -> PolyVectorField {
        PolyVectorField::new((0..n).map(|_| MPoly::zero(n)).collect())
    }

    /// The coordinate field ∂_j.
    pub fn coordinate(n: usize, j: usize) -> PolyVectorField {
        let mut f = PolyVectorField::zero(n);
        f.components[j] = MPoly::constant(n, Scalar::one());
        f
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &PolyVectorField) -> PolyVectorField {
        assert_eq!(self.n, other.n);
        PolyVectorField::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        )
    }

    pub fn scale(&self, s: &Scalar) -> PolyVectorField {
        PolyVectorField::new(self.components.iter().map(|c| c.scale(s)).collect())
    }

    /// Multiply by a polynomial function.
    pub fn mul_poly(&self, p: &MPoly) -> PolyVectorField {
        PolyVectorField::new(self.components.iter().map(|c| c.mul(p)).collect())
    }

    /// Lie bracket: [X,Y]^k = Σ_m (X^m ∂_m Y^k − Y^m ∂_m X^k).
    pub fn lie_bracket(&self, other: &PolyVectorField) -> PolyVectorField {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = PolyVectorField::zero(n);
        for k in 0..n {
            let mut acc = MPoly::zero(n);
            for m in 0..n {
                if !self.components[m].is_zero() {
                    acc = acc.add(&self.components[m].mul(&other.components[k].partial(m)));
                }
                if !other.components[m].is_zero() {
                    acc = acc.sub(&other.components[m].mul(&self.components[k].partial(m)));
                }
            }
            out.components[k] = acc;
        }
        out
    }

    pub fn eval(&self, x: &[Scalar]) -> SVec {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// Field in translated coordinates y = x − a (components evaluated at y + a).
    pub fn shift(&self, a: &[Scalar]) -> PolyVectorField {
        PolyVectorField::new(self.components.iter().map(|c| c.shift(a)).collect())
    }

    /// Field in linear coordinates y = M⁻¹x: X'(y) = M⁻¹ X(My).
    pub fn linear_change(&self, m: &SMat, m_inv: &SMat) -> PolyVectorField {
        let n = self.n;
        assert_eq!((m.rows, m.cols), (n, n));
        // substitute x_j ↦ Σ_i m[j][i]·y_i into each component
        let args: Vec<MPoly> = (0..n)
            .map(|j| {
                let mut p = MPoly::zero(n);
                for i in 0..n {
                    if !m[(j, i)].is_zero() {
                        let mut e = vec![0; n];
                        e[i] = 1;
                        p.insert_term(e, m[(j, i)].clone());
                    }
                }
                p
            })
            .collect();
        let composed: Vec<MPoly> = self.components.iter().map(|c| c.compose(&args)).collect();
        PolyVectorField::new(
            (0..n)
                .map(|k| {
                    let mut acc = MPoly::zero(n);
                    for j in 0..n {
                        if !m_inv[(k, j)].is_zero() {
                            acc = acc.add(&composed[j].scale(&m_inv[(k, j)]));
                        }
                    }
                    acc
                })
                .collect(),
        )
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.components.iter().filter_map(|c| c.total_degree()).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    /// Heisenberg model pair: X = ∂₁, Y = ∂₂ + x₁∂₃.
    pub fn heisenberg_pair() -> (PolyVectorField, PolyVectorField) {
        let x = PolyVectorField::coordinate(3, 0);
        let mut y = PolyVectorField::coordinate(3, 1);
        y.components[2] = MPoly::var(3, 0);
        (x, y)
    }

    #[test]
    fn arithmetic_and_partials() {
        // p = x1² x2 + 2 x2
        let x1 = MPoly::var(3, 0);
        let x2 = MPoly::var(3, 1);
        let p = x1.mul(&x1).mul(&x2).add(&x2.scale(&s(2)));
        assert_eq!(p.partial(0), x1.mul(&x2).scale(&s(2)));
        assert_eq!(p.partial(1), x1.mul(&x1).add(&MPoly::constant(3, s(2))));
        assert!(p.partial(2).is_zero());
        assert_eq!(p.eval(&[s(2), s(3), s(0)]), s(18));
        assert_eq!(p.total_degree(), Some(3));
    }

    #[test]
    fn compiled_eval_matches_exact() {
        // p = x1² x2 − 3/2 x3 + 5
        let x1 = MPoly::var(3, 0);
        let x2 = MPoly::var(3, 1);
        let x3 = MPoly::var(3, 2);
        let p = x1
            .mul(&x1)
            .mul(&x2)
            .add(&x3.scale(&Scalar::ratio(-3, 2)))
            .add(&MPoly::constant(3, s(5)));
        let c = p.compile();
        for pt in [[0.5, -1.25, 3.0], [0.0, 0.0, 0.0], [2.0, 7.0, -0.5]] {
            assert_eq!(c.eval(&pt), p.eval_f64(&pt));
            assert_eq!(c.eval2(&pt[..1], &pt[1..]), p.eval_f64(&pt));
        }
    }

    #[test]
    fn heisenberg_bracket_is_center() {
        let (x, y) = heisenberg_pair();
        let b = x.lie_bracket(&y);
        assert_eq!(b, PolyVectorField::coordinate(3, 2));
        // antisymmetry
        assert_eq!(y.lie_bracket(&x), b.scale(&s(-1)));
        // [X, [X,Y]] = 0: 2-step
        assert!(x.lie_bracket(&b).is_zero());
    }

    #[test]
    fn jacobi_for_fields() {
        // polynomial fields satisfy Jacobi identically
        let (x, y) = heisenberg_pair();
        let mut z = PolyVectorField::coordinate(3, 2);
        z.components[0] = MPoly::var(3, 1).mul(&MPoly::var(3, 1));
        let j = x
            .lie_bracket(&y)
            .lie_bracket(&z)
            .add(&y.lie_bracket(&z).lie_bracket(&x))
            .add(&z.lie_bracket(&x).lie_bracket(&y));
        assert!(j.is_zero());
    }

    #[test]
    fn shift_and_linear_change() {
        // Y = ∂₂ + x₁∂₃ translated so that p = (1/2, 0, 0) becomes the origin
        let (_, y) = heisenberg_pair();
        let p = vec![Scalar::ratio(1, 2), s(0), s(0)];
        let shifted = y.shift(&p);
        // at the new origin the x₃ component is 1/2
        assert_eq!(
            shifted.eval(&[s(0), s(0), s(0)]),
            vec![s(0), s(1), Scalar::ratio(1, 2)]
        );

        // rescaling x₃ by 2 divides the ∂₃ coefficient by... conjugation check:
        // M = diag(1,1,2): X'(y) = M⁻¹X(My)
        let m = SMat::diagonal(&[s(1), s(1), s(2)]);
        let minv = m.inverse().unwrap();
        let y2 = y.linear_change(&m, &minv);
        assert_eq!(
            y2.eval(&[s(1), s(0), s(0)]),
            vec![s(0), s(1), Scalar::ratio(1, 2)]
        );
    }

    #[test]
    fn compose_expands_binomials() {
        // (x1)² composed with x1 + 1 → x1² + 2x1 + 1
        let p = MPoly::var(1, 0).mul(&MPoly::var(1, 0));
        let shifted = p.shift(&[s(1)]);
        assert_eq!(shifted.eval(&[s(3)]), s(16));
        assert_eq!(shifted.terms.len(), 3);
    }
}
