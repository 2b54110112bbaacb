//! Nilpotent Lie algebras given by exact structure constants, gradings and
//! dilations.

use crate::linalg::{in_span, vec_add, vec_is_zero, vec_scale, SMat, SVec};
use crate::scalar::{Field, Scalar};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum LieError {
    #[error("vector has length {got}, algebra dimension is {want}")]
    DimensionMismatch { want: usize, got: usize },
    #[error("dilation parameter must be nonzero")]
    ZeroDilation,
    #[error("bracket index ({0}, {1}) out of range or not i < j")]
    BadBracketIndex(usize, usize),
    #[error("grading layers must partition {{1..n}}: {0}")]
    BadGrading(String),
}

/// A Lie algebra on basis e_1..e_n given by sparse structure constants
/// c_{ij} = [e_i, e_j] for i < j; antisymmetry is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebraSpec {
    pub dim: usize,
    pub basis_names: Vec<String>,
    /// (i, j) with 0-based i < j  →  coefficient vector of [e_i, e_j].
    pub brackets: BTreeMap<(usize, usize), SVec>,
}

impl LieAlgebraSpec {
    pub fn new(dim: usize) -> LieAlgebraSpec {
        LieAlgebraSpec {
            dim,
            basis_names: (1..=dim).map(|i| format!("e{i}")).collect(),
            brackets: BTreeMap::new(),
        }
    }

    pub fn with_names(dim: usize, names: Vec<String>) -> LieAlgebraSpec {
        assert_eq!(names.len(), dim);
        LieAlgebraSpec {
            dim,
            basis_names: names,
            brackets: BTreeMap::new(),
        }
    }

    /// Register [e_i, e_j] = Σ coeffs_k e_k (0-based, i < j).
    pub fn set_bracket(&mut self, i: usize, j: usize, coeffs: SVec) -> Result<(), LieError> {
        if i >= j || j >= self.dim || coeffs.len() != self.dim {
            return Err(LieError::BadBracketIndex(i, j));
        }
        if vec_is_zero(&coeffs) {
            self.brackets.remove(&(i, j));
        } else {
            self.brackets.insert((i, j), coeffs);
        }
        Ok(())
    }

    /// Convenience: [e_i, e_j] = c·e_k.
    pub fn set_bracket_single(&mut self, i: usize, j: usize, k: usize, c: Scalar) {
        let mut v = vec![Scalar::zero(); self.dim];
        v[k] = c;
        self.set_bracket(i, j, v).unwrap();
    }

    /// Structure-constant vector [e_i, e_j] for arbitrary i, j.
    pub fn basis_bracket(&self, i: usize, j: usize) -> SVec {
        if i == j {
            return vec![Scalar::zero(); self.dim];
        }
        if i < j {
            self.brackets
                .get(&(i, j))
                .cloned()
                .unwrap_or_else(|| vec![Scalar::zero(); self.dim])
        } else {
            self.basis_bracket(j, i).iter().map(|c| -c).collect()
        }
    }

    /// Bilinear extension of the structure constants.
    pub fn bracket_of(&self, x: &[Scalar], y: &[Scalar]) -> Result<SVec, LieError> {
        for v in [x, y] {
            if v.len() != self.dim {
                return Err(LieError::DimensionMismatch {
                    want: self.dim,
                    got: v.len(),
                });
            }
        }
        let mut out = vec![Scalar::zero(); self.dim];
        for (&(i, j), c) in &self.brackets {
            if (x[i].is_zero() || y[j].is_zero()) && (x[j].is_zero() || y[i].is_zero()) {
                continue;
            }
            let w = &(&x[i] * &y[j]) - &(&x[j] * &y[i]);
            if !w.is_zero() {
                out = vec_add(&out, &vec_scale(c, &w));
            }
        }
        Ok(out)
    }

    /// Check the Jacobi identity on all basis triples i < j < k.
    pub fn check_jacobi(&self) -> JacobiVerdict {
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                for k in j + 1..self.dim {
                    let mut ei = vec![Scalar::zero(); self.dim];
                    ei[i] = Scalar::one();
                    let mut ej = vec![Scalar::zero(); self.dim];
                    ej[j] = Scalar::one();
                    let mut ek = vec![Scalar::zero(); self.dim];
                    ek[k] = Scalar::one();
                    let t1 = self.bracket_of(&self.basis_bracket(i, j), &ek).unwrap();
                    let t2 = self.bracket_of(&self.basis_bracket(j, k), &ei).unwrap();
                    let t3 = self.bracket_of(&self.basis_bracket(k, i), &ej).unwrap();
                    let residual = vec_add(&vec_add(&t1, &t2), &t3);
                    if !vec_is_zero(&residual) {
                        return JacobiVerdict::Counterexample {
                            i,
                            j,
                            k,
                            residual,
                        };
                    }
                }
            }
        }
        JacobiVerdict::Ok
    }

    /// Dimensions of the lower central series C⁰ ⊇ C¹ ⊇ … until stabilization.
    pub fn lower_central_series(&self) -> Vec<usize> {
        let mut dims = vec![self.dim];
        // C⁰ spanned by all basis vectors.
        let mut current: Vec<SVec> = (0..self.dim)
            .map(|i| {
                let mut v = vec![Scalar::zero(); self.dim];
                v[i] = Scalar::one();
                v
            })
            .collect();
        loop {
            let mut next: Vec<SVec> = Vec::new();
            for v in &current {
                for j in 0..self.dim {
                    let mut ej = vec![Scalar::zero(); self.dim];
                    ej[j] = Scalar::one();
                    let b = self.bracket_of(v, &ej).unwrap();
                    if !vec_is_zero(&b) && !in_span(&next, &b) {
                        next.push(b);
                    }
                }
            }
            let d = crate::linalg::span_rank(&next);
            dims.push(d);
            if d == 0 || d == *dims[dims.len() - 2..].first().unwrap() {
                break;
            }
            current = next;
        }
        dims
    }

    pub fn is_nilpotent(&self) -> bool {
        *self.lower_central_series().last().unwrap() == 0
    }

    /// The coefficient field the structure constants live in.
    pub fn field(&self) -> Field {
        for c in self.brackets.values().flatten() {
            if let Field::Quadratic(d) = c.field {
                return Field::Quadratic(d);
            }
        }
        Field::Rational
    }

    /// Conjugated algebra with brackets [x, y]' = P⁻¹[Px, Py].
    pub fn change_basis(&self, p: &SMat) -> LieAlgebraSpec {
        assert_eq!(p.rows, self.dim);
        let pinv = p.inverse().expect("change of basis must be invertible");
        let mut out = LieAlgebraSpec::new(self.dim);
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                let b = self.bracket_of(&p.col(i), &p.col(j)).unwrap();
                out.set_bracket(i, j, pinv.mul_vec(&b)).unwrap();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum JacobiVerdict {
    Ok,
    Counterexample {
        i: usize,
        j: usize,
        k: usize,
        residual: SVec,
    },
}

impl JacobiVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, JacobiVerdict::Ok)
    }
}

/// Ordered partition of the basis indices into layers L_0..L_r.
/// Layer i carries weight i+1.
#[derive(Debug, Clone, PartialEq)]
pub struct Grading {
    pub layers: Vec<Vec<usize>>,
}

impl Grading {
    pub fn new(layers: Vec<Vec<usize>>, dim: usize) -> Result<Grading, LieError> {
        let mut seen = vec![false; dim];
        for layer in &layers {
            if layer.is_empty() {
                return Err(LieError::BadGrading("empty layer".into()));
            }
            for &i in layer {
                if i >= dim {
                    return Err(LieError::BadGrading(format!("index {i} out of range")));
                }
                if seen[i] {
                    return Err(LieError::BadGrading(format!("index {i} repeated")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(LieError::BadGrading("layers do not cover {1..n}".into()));
        }
        Ok(Grading { layers })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Weight of layer i is i+1.
    pub fn weight_of_layer(&self, i: usize) -> i64 {
        (i + 1) as i64
    }

    /// The layer a basis index belongs to.
    pub fn layer_of(&self, index: usize) -> usize {
        self.layers
            .iter()
            .position(|l| l.contains(&index))
            .expect("index not in grading")
    }

    /// Layer dimensions d_0, …, d_r.
    pub fn layer_dims(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.len()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradedAlgebra {
    pub algebra: LieAlgebraSpec,
    pub grading: Grading,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GradingVerdict {
    Graded,
    GradedCarnot,
    Violation {
        layer_i: usize,
        layer_j: usize,
        description: String,
    },
}

impl GradingVerdict {
    pub fn is_graded(&self) -> bool {
        matches!(self, GradingVerdict::Graded | GradingVerdict::GradedCarnot)
    }

    pub fn is_carnot(&self) -> bool {
        matches!(self, GradingVerdict::GradedCarnot)
    }
}

impl GradedAlgebra {
    pub fn new(algebra: LieAlgebraSpec, grading: Grading) -> GradedAlgebra {
        GradedAlgebra { algebra, grading }
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim
    }

    fn layer_span(&self, layer: usize) -> Vec<SVec> {
        self.grading.layers[layer]
            .iter()
            .map(|&i| {
                let mut v = vec![Scalar::zero(); self.dim()];
                v[i] = Scalar::one();
                v
            })
            .collect()
    }

    /// Weight-additivity of brackets and, on top of that, the Carnot
    /// condition ([L_0, L_i] spans L_{i+1}).
    pub fn verify_grading(&self) -> GradingVerdict {
        let r = self.grading.num_layers();
        for li in 0..r {
            for lj in li..r {
                let target = li + lj + 1; // weights (li+1)+(lj+1) land in layer li+lj+1
                let target_span = if target < r {
                    self.layer_span(target)
                } else {
                    Vec::new() // must vanish beyond the top layer
                };
                for &i in &self.grading.layers[li] {
                    for &j in &self.grading.layers[lj] {
                        let b = self.algebra.basis_bracket(i, j);
                        if vec_is_zero(&b) {
                            continue;
                        }
                        if target >= r || !in_span(&target_span, &b) {
                            return GradingVerdict::Violation {
                                layer_i: li,
                                layer_j: lj,
                                description: format!(
                                    "[{}, {}] does not lie in layer {}",
                                    self.algebra.basis_names[i],
                                    self.algebra.basis_names[j],
                                    target,
                                ),
                            };
                        }
                    }
                }
            }
        }
        // Carnot: brackets of L_0 with L_i span L_{i+1}.
        for li in 0..r.saturating_sub(1) {
            let mut generated: Vec<SVec> = Vec::new();
            for &i in &self.grading.layers[0] {
                for &j in &self.grading.layers[li] {
                    let b = self.algebra.basis_bracket(i, j);
                    if !vec_is_zero(&b) {
                        generated.push(b);
                    }
                }
            }
            if crate::linalg::span_rank(&generated) != self.grading.layers[li + 1].len() {
                return GradingVerdict::Graded;
            }
        }
        GradingVerdict::GradedCarnot
    }

    /// Weight of the layer containing basis index `i` (i.e. layer + 1).
    pub fn weight_of_index(&self, i: usize) -> i64 {
        self.grading.weight_of_layer(self.grading.layer_of(i))
    }

    /// Diagonal dilation δ_s acting as s^{i+1} on layer i.
    pub fn dilation_matrix(&self, s: &Scalar) -> Result<SMat, LieError> {
        if s.is_zero() {
            return Err(LieError::ZeroDilation);
        }
        let n = self.dim();
        let mut m = SMat::zero(n, n);
        for (layer, idxs) in self.grading.layers.iter().enumerate() {
            let power = s.pow(self.grading.weight_of_layer(layer));
            for &i in idxs {
                m[(i, i)] = power.clone();
            }
        }
        Ok(m)
    }

    /// Grading derivation δ = (i+1)·Id on layer i.
    pub fn grading_derivation(&self) -> SMat {
        let n = self.dim();
        let mut m = SMat::zero(n, n);
        for (layer, idxs) in self.grading.layers.iter().enumerate() {
            for &i in idxs {
                m[(i, i)] = Scalar::from_int(self.grading.weight_of_layer(layer));
            }
        }
        m
    }

    /// Conjugate the algebra by a layer-preserving block matrix.
    pub fn change_basis(&self, p: &SMat) -> GradedAlgebra {
        GradedAlgebra::new(self.algebra.change_basis(p), self.grading.clone())
    }
}

/// The 3-dimensional Heisenberg algebra [e1, e2] = e3 with its Carnot grading.
pub fn heisenberg3() -> GradedAlgebra {
    let mut alg = LieAlgebraSpec::new(3);
    alg.set_bracket_single(0, 1, 2, Scalar::one());
    GradedAlgebra::new(alg, Grading::new(vec![vec![0, 1], vec![2]], 3).unwrap())
}

/// The Heisenberg algebra H^{2n+1}: [x_i, y_i] = z.
pub fn heisenberg(n: usize) -> GradedAlgebra {
    let dim = 2 * n + 1;
    let mut names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    names.extend((1..=n).map(|i| format!("y{i}")));
    names.push("z".into());
    let mut alg = LieAlgebraSpec::with_names(dim, names);
    for i in 0..n {
        alg.set_bracket_single(i, n + i, 2 * n, Scalar::one());
    }
    GradedAlgebra::new(
        alg,
        Grading::new(vec![(0..2 * n).collect(), vec![2 * n]], dim).unwrap(),
    )
}

/// The exceptional filiform algebra with parameter r: basis
/// (y0, z0, y1, …, y_{r+1}), brackets [z0, y_i] = y_{i+1} for 0 ≤ i ≤ r and
/// [y_i, y_{r-i}] = (-1)^i y_{r+1} for 0 ≤ i ≤ r; grading
/// L_0 = {y0, z0}, L_i = {y_i}.
pub fn filiform(r: usize) -> GradedAlgebra {
    let dim = r + 3;
    // index map: y_i ↦ 0 for i=0 then 2 + i - 1 for i ≥ 1; z0 ↦ 1.
    let y = |i: usize| if i == 0 { 0 } else { i + 1 };
    let z0 = 1usize;
    let mut names = vec!["y0".to_string(), "z0".to_string()];
    names.extend((1..=r + 1).map(|i| format!("y{i}")));
    let mut alg = LieAlgebraSpec::with_names(dim, names);
    for i in 0..=r {
        let (a, b) = (z0, y(i));
        let sign = if a < b { Scalar::one() } else { -Scalar::one() };
        let (a, b) = (a.min(b), a.max(b));
        let mut v = vec![Scalar::zero(); dim];
        v[y(i + 1)] = sign;
        // accumulate: [y_i, y_{r-i}] may collide with [z0, ·] only if indices match
        alg.set_bracket(a, b, v).unwrap();
    }
    for i in 0..=r {
        let j = r - i;
        let (a, b) = (y(i), y(j));
        if a >= b {
            continue; // each unordered pair once, using the i < j representative
        }
        let sign = if i % 2 == 0 { Scalar::one() } else { -Scalar::one() };
        let mut v = alg.basis_bracket(a, b);
        v[y(r + 1)] = &v[y(r + 1)] + &sign;
        alg.set_bracket(a, b, v).unwrap();
    }
    let mut layers = vec![vec![0, 1]];
    layers.extend((1..=r + 1).map(|i| vec![y(i)]));
    GradedAlgebra::new(alg, Grading::new(layers, dim).unwrap())
}

/// Direct sum g ⊕ g with the block-shifted brackets and merged layers.
pub fn product_algebra(g: &GradedAlgebra) -> GradedAlgebra {
    let n = g.dim();
    let mut alg = LieAlgebraSpec::new(2 * n);
    for (&(i, j), c) in &g.algebra.brackets {
        let mut v = vec![Scalar::zero(); 2 * n];
        for k in 0..n {
            v[k] = c[k].clone();
        }
        alg.set_bracket(i, j, v).unwrap();
        let mut w = vec![Scalar::zero(); 2 * n];
        for k in 0..n {
            w[n + k] = c[k].clone();
        }
        alg.set_bracket(n + i, n + j, w).unwrap();
    }
    let layers = g
        .grading
        .layers
        .iter()
        .map(|l| {
            let mut m: Vec<usize> = l.clone();
            m.extend(l.iter().map(|&i| n + i));
            m
        })
        .collect();
    GradedAlgebra::new(alg, Grading::new(layers, 2 * n).unwrap())
}
