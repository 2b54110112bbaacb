//! Univariate polynomials over [`Scalar`] with exact Sturm-sequence real
//! root counting and isolation. Signs are decided exactly in a chosen real
//! embedding of the coefficient field.

use crate::scalar::Scalar;

/// Which real embedding of `Q(√d)` decides signs. Irrelevant over `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Embedding {
    Principal,
    Conjugate,
}

fn sgn(x: &Scalar, _emb: Embedding) -> i8 {
    x.sign()
}

/// Coefficients low to high; the zero polynomial is an empty vector.
#[derive(Debug, Clone, PartialEq)]
pub struct UPoly {
    pub coeffs: Vec<Scalar>,
}

impl UPoly {
    pub fn new(mut coeffs: Vec<Scalar>) -> UPoly {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UPoly { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = Scalar::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn derivative(&self) -> UPoly {
        if self.coeffs.len() <= 1 {
            return UPoly::new(vec![]);
        }
        UPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * &Scalar::from_int(i as i64))
                .collect(),
        )
    }

    /// Remainder of self divided by other (field coefficients, exact).
    pub fn rem(&self, other: &UPoly) -> UPoly {
        assert!(!other.is_zero());
        let d = other.degree();
        let lead_inv = other.coeffs[d].inv().unwrap();
        let mut r = self.coeffs.clone();
        loop {
            while r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
            if r.len() <= d {
                break;
            }
            let k = r.len() - 1 - d;
            let factor = &r[r.len() - 1] * &lead_inv;
            for i in 0..=d {
                r[k + i] = &r[k + i] - &(&other.coeffs[i] * &factor);
            }
            r.pop();
        }
        UPoly::new(r)
    }

    /// Divide out the largest power of x (returns the cofactor and the power).
    pub fn strip_zero_roots(&self) -> (UPoly, usize) {
        let k = self
            .coeffs
            .iter()
            .position(|c| !c.is_zero())
            .unwrap_or(self.coeffs.len());
        (UPoly::new(self.coeffs[k..].to_vec()), k)
    }

    /// Sturm chain of the squarefree-ish sequence p, p', -rem...
    pub fn sturm_chain(&self) -> Vec<UPoly> {
        let mut chain = vec![self.clone(), self.derivative()];
        while !chain.last().unwrap().is_zero() {
            let n = chain.len();
            let r = chain[n - 2].rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(UPoly::new(r.coeffs.iter().map(|c| -c).collect()));
        }
        chain
    }

    fn sign_changes_at(chain: &[UPoly], x: &Scalar, emb: Embedding) -> usize {
        let mut count = 0;
        let mut last = 0i8;
        for p in chain {
            let s = sgn(&p.eval(x), emb);
            if s != 0 {
                if last != 0 && s != last {
                    count += 1;
                }
                last = s;
            }
        }
        count
    }

    /// Image of the polynomial under coefficient-wise Galois conjugation.
    /// Root counting in the conjugate embedding reduces to counting roots of
    /// the conjugated polynomial in the principal embedding.
    pub fn embedded(&self, emb: Embedding) -> UPoly {
        match emb {
            Embedding::Principal => self.clone(),
            Embedding::Conjugate => {
                UPoly::new(self.coeffs.iter().map(|c| c.galois_conjugate()).collect())
            }
        }
    }

    /// Number of distinct real roots in the open interval (lo, hi), in the
    /// given embedding; the endpoints are real numbers via the principal
    /// embedding (use rational endpoints for clarity).
    ///
    /// Requires p(lo) ≠ 0 and p(hi) ≠ 0 in that embedding.
    pub fn count_real_roots_between(&self, lo: &Scalar, hi: &Scalar, emb: Embedding) -> usize {
        let p = self.embedded(emb);
        let chain = p.sturm_chain();
        assert!(sgn(&p.eval(lo), emb) != 0 && sgn(&p.eval(hi), emb) != 0);
        UPoly::sign_changes_at(&chain, lo, emb) - UPoly::sign_changes_at(&chain, hi, emb)
    }

    /// An exact bound B with all real roots in (-B, B) (Cauchy bound).
    pub fn root_bound(&self, emb: Embedding) -> Scalar {
        let p = self.embedded(emb);
        assert!(!p.is_zero());
        let lead_abs_inv = p.coeffs.last().unwrap().abs().inv().unwrap();
        let mut max = Scalar::zero();
        for c in &p.coeffs[..p.coeffs.len() - 1] {
            let ratio = (c * &lead_abs_inv).abs();
            if (&ratio - &max).sign() > 0 {
                max = ratio;
            }
        }
        &max + &Scalar::one()
    }

    /// Count of real nonzero roots (distinct).
    pub fn count_real_nonzero_roots(&self, emb: Embedding) -> usize {
        let (p, _) = self.embedded(emb).strip_zero_roots();
        let emb = Embedding::Principal;
        if p.degree() == 0 {
            return 0;
        }
        let bound = p.root_bound(emb);
        let zero = Scalar::zero();
        // p(0) ≠ 0 after stripping; count in (-B, 0) and (0, B).
        p.count_real_roots_between(&-bound.clone(), &zero, emb)
            + p.count_real_roots_between(&zero, &bound, emb)
    }

    /// Isolating interval (lo, hi) for one real nonzero root, with 0 ∉ [lo, hi].
    /// Returns `None` when there is no real nonzero root.
    pub fn isolate_real_nonzero_root(&self, emb: Embedding) -> Option<(Scalar, Scalar)> {
        let (p, _) = self.embedded(emb).strip_zero_roots();
        let emb = Embedding::Principal;
        if p.degree() == 0 {
            return None;
        }
        let bound = p.root_bound(emb);
        let zero = Scalar::zero();
        let mut lo;
        let mut hi;
        if p.count_real_roots_between(&zero, &bound, emb) > 0 {
            lo = zero;
            hi = bound;
        } else if p.count_real_roots_between(&-bound.clone(), &zero, emb) > 0 {
            lo = -bound;
            hi = zero;
        } else {
            return None;
        }
        // Bisect until exactly one root lies strictly inside and neither
        // endpoint is 0 or a root.
        loop {
            let count = p.count_real_roots_between(&lo, &hi, emb);
            if count == 1 && !lo.is_zero() && !hi.is_zero() {
                return Some((lo, hi));
            }
            let mid = &(&lo + &hi) / &Scalar::from_int(2);
            if sgn(&p.eval(&mid), emb) == 0 {
                // mid is itself a representable root (nonzero since p(0) ≠ 0):
                // shrink an interval around it until it isolates exactly it.
                let mut eps = &(&hi - &lo) / &Scalar::from_int(4);
                loop {
                    let lo2 = &mid - &eps;
                    let hi2 = &mid + &eps;
                    if sgn(&p.eval(&lo2), emb) != 0
                        && sgn(&p.eval(&hi2), emb) != 0
                        && !lo2.is_zero()
                        && !hi2.is_zero()
                        && sgn(&lo2, emb) == sgn(&hi2, emb)
                        && p.count_real_roots_between(&lo2, &hi2, emb) == 1
                    {
                        return Some((lo2, hi2));
                    }
                    eps = &eps / &Scalar::from_int(2);
                }
            }
            if p.count_real_roots_between(&lo, &mid, emb) > 0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    fn poly(c: &[i64]) -> UPoly {
        UPoly::new(c.iter().map(|&n| s(n)).collect())
    }

    #[test]
    fn eval_and_derivative() {
        let p = poly(&[1, -4, 1]); // x² - 4x + 1
        assert_eq!(p.eval(&s(0)), s(1));
        assert_eq!(p.eval(&s(4)), s(1));
        assert_eq!(p.derivative(), poly(&[-4, 2]));
    }

    #[test]
    fn sturm_counts_roots_of_quadratic() {
        // roots 2±√3, both positive
        let p = poly(&[1, -4, 1]);
        assert_eq!(p.count_real_nonzero_roots(Embedding::Principal), 2);
        // x² + 1: no real roots
        assert_eq!(poly(&[1, 0, 1]).count_real_nonzero_roots(Embedding::Principal), 0);
        // x³ - x = x(x-1)(x+1): two nonzero real roots
        assert_eq!(poly(&[0, -1, 0, 1]).count_real_nonzero_roots(Embedding::Principal), 2);
        // x²: only a zero root
        assert_eq!(poly(&[0, 0, 1]).count_real_nonzero_roots(Embedding::Principal), 0);
    }

    #[test]
    fn isolation_brackets_one_root() {
        let p = poly(&[1, -4, 1]);
        let (lo, hi) = p.isolate_real_nonzero_root(Embedding::Principal).unwrap();
        assert_eq!(p.count_real_roots_between(&lo, &hi, Embedding::Principal), 1);
        assert!(!(lo.sign() <= 0 && hi.sign() >= 0)); // 0 outside
        assert!(poly(&[1, 0, 1]).isolate_real_nonzero_root(Embedding::Principal).is_none());
    }

    #[test]
    fn embeddings_differ_over_quadratic_fields() {
        // x - √3 has a positive root in the principal embedding and a
        // negative one in the conjugate embedding.
        let r3 = Scalar::quad_int(0, 1, 3);
        let p = UPoly::new(vec![-r3, Scalar::one()]);
        let zero = Scalar::zero();
        let four = s(4);
        assert_eq!(p.count_real_roots_between(&zero, &four, Embedding::Principal), 1);
        assert_eq!(p.count_real_roots_between(&zero, &four, Embedding::Conjugate), 0);
        assert_eq!(p.count_real_roots_between(&-four.clone(), &zero, Embedding::Conjugate), 1);
    }
}
