//! Nilmanifold Anosov systems: exact truncated BCH group law, product
//! systems with Galois-diagonal lattices, fundamental-domain reduction,
//! Γ-periodic perturbations and QR/Benettin Lyapunov estimation.
//!
//! Construction and certificates are exact (`Scalar`); trajectory
//! simulation runs in doubles.

use crate::autgroup::{is_graded_automorphism, AutoCheck};
use crate::lie::{heisenberg3, product_algebra, GradedAlgebra, Grading, LieAlgebraSpec};
use crate::linalg::{SMat, SVec};
use crate::poly::{CompiledPoly, MPoly};
use crate::scalar::{Field, Scalar};
use crate::spectra::{group_numeric, SpectrumReport, SpectrumSource};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum NilError {
    #[error("unsupported nilpotency step {0} (BCH table bound is 6)")]
    UnsupportedStep(usize),
    #[error("bad input: {0}")]
    Input(String),
    #[error("certificate failed: {0}")]
    Certificate(String),
    #[error("map in lattice basis has non-integral entry {value} at ({row}, {col})")]
    NonIntegral {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("numerical blowup at iteration {iteration}")]
    Blowup { iteration: usize },
}

/// Maximum nilpotency step supported by the BCH expansion.
pub const MAX_STEP: usize = 6;

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product::<i64>().max(1)
}

/// Bracket of two vectors with polynomial components, extended bilinearly
/// from the structure constants.
fn bracket_poly(alg: &LieAlgebraSpec, u: &[MPoly], v: &[MPoly]) -> Vec<MPoly> {
    let nvars = u[0].nvars;
    let mut out = vec![MPoly::zero(nvars); alg.dim];
    for (&(i, j), c) in &alg.brackets {
        let term = u[i].mul(&v[j]).sub(&u[j].mul(&v[i]));
        if term.is_zero() {
            continue;
        }
        for (k, ck) in c.iter().enumerate() {
            if !ck.is_zero() {
                out[k] = out[k].add(&term.scale(ck));
            }
        }
    }
    out
}

/// The Dynkin expansion of log(exp x · exp y) truncated at the given order,
/// as a vector of polynomials in the 2n variables (x_0..x_{n-1}, y_0..y_{n-1}).
///
/// Terms are indexed by sequences of blocks (r_i, s_i) with Σ(r_i + s_i) ≤
/// order; each contributes the right-nested bracket of the word
/// x^{r_1} y^{s_1} ⋯ x^{r_m} y^{s_m} with coefficient
/// (−1)^{m−1} / (m · Σ(r_i+s_i) · Π r_i! s_i!).
fn dynkin_bch(alg: &LieAlgebraSpec, order: usize) -> Vec<MPoly> {
    let n = alg.dim;
    let nvars = 2 * n;
    let xv: Vec<MPoly> = (0..n).map(|k| MPoly::var(nvars, k)).collect();
    let yv: Vec<MPoly> = (0..n).map(|k| MPoly::var(nvars, n + k)).collect();
    let mut out = vec![MPoly::zero(nvars); n];

    // Enumerate all block sequences with total degree ≤ order.
    let mut seqs: Vec<Vec<(u32, u32)>> = vec![vec![]];
    let mut i = 0;
    while i < seqs.len() {
        let used: u32 = seqs[i].iter().map(|&(r, s)| r + s).sum();
        let budget = order as u32 - used;
        for r in 0..=budget {
            for s in 0..=(budget - r) {
                if r + s == 0 {
                    continue;
                }
                let mut next = seqs[i].clone();
                next.push((r, s));
                seqs.push(next);
            }
        }
        i += 1;
    }

    for seq in seqs.iter().filter(|s| !s.is_empty()) {
        // Letters of the word: false = x, true = y.
        let mut letters: Vec<bool> = Vec::new();
        for &(r, s) in seq {
            letters.extend(std::iter::repeat(false).take(r as usize));
            letters.extend(std::iter::repeat(true).take(s as usize));
        }
        let len = letters.len();
        // The innermost bracket [w, w] of a repeated last letter vanishes.
        if len >= 2 && letters[len - 1] == letters[len - 2] {
            continue;
        }
        let pick = |l: bool| if l { &yv } else { &xv };
        let mut value: Vec<MPoly> = pick(letters[len - 1]).clone();
        for &l in letters[..len - 1].iter().rev() {
            value = bracket_poly(alg, pick(l), &value);
            if value.iter().all(|p| p.is_zero()) {
                break;
            }
        }
        if value.iter().all(|p| p.is_zero()) {
            continue;
        }
        let m = seq.len() as i64;
        let mut den = m * len as i64;
        for &(r, s) in seq {
            den *= factorial(r) * factorial(s);
        }
        let num = if seq.len() % 2 == 1 { 1 } else { -1 };
        let coeff = Scalar::ratio(num, den);
        for k in 0..n {
            if !value[k].is_zero() {
                out[k] = out[k].add(&value[k].scale(&coeff));
            }
        }
    }
    out
}

/// A simply connected nilpotent group in exponential coordinates: the group
/// law is the BCH series, which truncates exactly at order = step.
#[derive(Debug, Clone)]
pub struct NilGroupModel {
    pub algebra: GradedAlgebra,
    pub step: usize,
    pub bch_order: usize,
    bch: Vec<MPoly>,
    /// Compiled f64 group law and its partials ∂(bch_k)/∂x_j and
    /// ∂(bch_k)/∂y_j (indexed [k][j]), for the simulation loops.
    bch_f64: Vec<CompiledPoly>,
    jac_first_f64: Vec<Vec<CompiledPoly>>,
    jac_second_f64: Vec<Vec<CompiledPoly>>,
}

impl NilGroupModel {
    pub fn new(algebra: GradedAlgebra) -> Result<NilGroupModel, NilError> {
        let dims = algebra.algebra.lower_central_series();
        let step = match dims.iter().position(|&d| d == 0) {
            Some(s) => s,
            None => return Err(NilError::Input("algebra is not nilpotent".into())),
        };
        if step > MAX_STEP {
            return Err(NilError::UnsupportedStep(step));
        }
        let n = algebra.dim();
        let bch = dynkin_bch(&algebra.algebra, step);
        let jac_first_f64: Vec<Vec<CompiledPoly>> = bch
            .iter()
            .map(|p| (0..n).map(|j| p.partial(j).compile()).collect())
            .collect();
        let jac_second_f64: Vec<Vec<CompiledPoly>> = bch
            .iter()
            .map(|p| (0..n).map(|j| p.partial(n + j).compile()).collect())
            .collect();
        Ok(NilGroupModel {
            bch_f64: bch.iter().map(MPoly::compile).collect(),
            jac_first_f64,
            jac_second_f64,
            algebra,
            step,
            bch_order: step,
            bch,
        })
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    /// Exact group product x · y.
    pub fn multiply(&self, x: &[Scalar], y: &[Scalar]) -> SVec {
        let mut args = x.to_vec();
        args.extend_from_slice(y);
        self.bch.iter().map(|p| p.eval(&args)).collect()
    }

    /// Double-precision group product for the simulation layer.
    pub fn multiply_f64(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.bch_f64.iter().map(|p| p.eval2(x, y)).collect()
    }

    /// Group inverse: −x in exponential coordinates.
    pub fn inverse(&self, x: &[Scalar]) -> SVec {
        x.iter().map(|v| -v).collect()
    }

    /// Derivative of the left translation y ↦ g · y at y, in exponential
    /// coordinates: J_{kj} = ∂(bch_k)/∂y_j evaluated at (g, y).
    pub fn left_translation_jacobian_f64(&self, g: &[f64], y: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |k, j| self.jac_second_f64[k][j].eval2(g, y))
    }

    /// Derivative of the right translation x ↦ x · g at x.
    pub fn right_translation_jacobian_f64(&self, x: &[f64], g: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |k, j| self.jac_first_f64[k][j].eval2(x, g))
    }
}

/// H³ with the full-flag grading (weights 1, 2, 3 on e1, e2, e3); this is
/// the grading whose dilation δ_λ = diag(λ, λ², λ³) gives the Borel/Smale
/// automorphism on the product.
pub fn smale_factor() -> GradedAlgebra {
    let h = heisenberg3();
    GradedAlgebra::new(
        h.algebra,
        Grading::new(vec![vec![0], vec![1], vec![2]], 3).unwrap(),
    )
}

/// An Anosov system on (N × N)/Γ: the map is δ_λ ⊕ δ_{λ^σ} on the product
/// algebra, and Γ is generated by the Galois-diagonal vectors
/// e_k + e_{n+k} and √d (e_k − e_{n+k}).
#[derive(Debug, Clone)]
pub struct ProductAnosovSystem {
    pub factor: NilGroupModel,
    /// Product group N × N.
    pub model: NilGroupModel,
    pub lambda: Scalar,
    /// 2n × 2n matrix δ_λ ⊕ δ_{λ^σ} in the standard basis.
    pub map: SMat,
    /// Columns are the 2n lattice generators, ordered by ascending layer.
    pub lattice_basis: SMat,
    /// The map expressed in the lattice basis; integrality certificate.
    pub map_in_lattice: SMat,
    /// Layer of each lattice-basis column (Malcev reduction order).
    pub column_layers: Vec<usize>,
    map_f64: DMatrix<f64>,
    lattice_f64: DMatrix<f64>,
    lattice_inv_f64: DMatrix<f64>,
}

impl ProductAnosovSystem {
    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn map_f64(&self) -> &DMatrix<f64> {
        &self.map_f64
    }

    /// Column indices of the layer-0 lattice generators.
    pub fn layer0_columns(&self) -> Vec<usize> {
        self.column_layers
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == 0)
            .map(|(t, _)| t)
            .collect()
    }
}

/// Build the product Anosov system for a rational graded algebra and a
/// quadratic unit-like λ with |λ| > 1 > |λ^σ|. All three certificates
/// (graded automorphism, lattice integrality, no unit-modulus eigenvalue)
/// are verified exactly at construction.
pub fn build_product_anosov(
    factor: &GradedAlgebra,
    lambda: &Scalar,
) -> Result<ProductAnosovSystem, NilError> {
    let d = match lambda.field {
        Field::Quadratic(d) => d,
        Field::Rational => {
            return Err(NilError::Input(
                "λ must lie in a real quadratic field Q(√d)".into(),
            ))
        }
    };
    if lambda.is_rational() {
        return Err(NilError::Input("λ must be irrational".into()));
    }
    let one = Scalar::one();
    if (&lambda.abs() - &one).sign() <= 0 {
        return Err(NilError::Input(format!("|λ| = |{lambda}| ≤ 1")));
    }
    let sigma = lambda.galois_conjugate();
    if (&sigma.abs() - &one).sign() >= 0 {
        return Err(NilError::Input(format!("|λ^σ| = |{sigma}| ≥ 1")));
    }
    for c in factor.algebra.brackets.values().flatten() {
        if !c.is_rational() {
            return Err(NilError::Input(
                "structure constants must be rational (Galois-fixed)".into(),
            ));
        }
    }

    let n = factor.dim();
    let product = product_algebra(factor);
    let d_lam = factor
        .dilation_matrix(lambda)
        .map_err(|e| NilError::Input(e.to_string()))?;
    let d_sig = factor.dilation_matrix(&sigma).unwrap();
    let map = SMat::from_fn(2 * n, 2 * n, |i, j| {
        if i < n && j < n {
            d_lam[(i, j)].clone()
        } else if i >= n && j >= n {
            d_sig[(i - n, j - n)].clone()
        } else {
            Scalar::zero()
        }
    });

    // Certificate 1: graded automorphism of the product algebra.
    if let AutoCheck::No { reason, .. } = is_graded_automorphism(&product, &map) {
        return Err(NilError::Certificate(format!(
            "map is not a graded automorphism: {reason}"
        )));
    }

    // Galois-diagonal lattice, columns ordered by ascending layer.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&k| factor.grading.layer_of(k));
    let sqrt_d = Scalar::sqrt_of(d).map_err(|e| NilError::Input(e.to_string()))?;
    let mut lattice = SMat::zero(2 * n, 2 * n);
    let mut column_layers = Vec::with_capacity(2 * n);
    for (t, &k) in order.iter().enumerate() {
        lattice[(k, 2 * t)] = Scalar::one();
        lattice[(n + k, 2 * t)] = Scalar::one();
        lattice[(k, 2 * t + 1)] = sqrt_d.clone();
        lattice[(n + k, 2 * t + 1)] = -&sqrt_d;
        let layer = factor.grading.layer_of(k);
        column_layers.push(layer);
        column_layers.push(layer);
    }

    // Certificate 2: the map preserves Γ — integer matrix in the lattice basis.
    let lattice_inv = lattice
        .inverse()
        .expect("Galois-diagonal lattice basis is invertible");
    let map_in_lattice = lattice_inv.mul(&map).mul(&lattice);
    for i in 0..2 * n {
        for j in 0..2 * n {
            let e = &map_in_lattice[(i, j)];
            if !e.is_rational() || !e.a.is_integer() {
                return Err(NilError::NonIntegral {
                    row: i,
                    col: j,
                    value: e.to_string(),
                });
            }
        }
    }

    // Certificate 3: no eigenvalue of modulus 1. The map is diagonal, so
    // the char-poly roots are exactly the diagonal entries.
    for i in 0..2 * n {
        if (&map[(i, i)].abs() - &one).sign() == 0 {
            return Err(NilError::Certificate(format!(
                "eigenvalue of modulus 1 on coordinate {i}"
            )));
        }
    }

    let map_f64 = map.to_f64();
    let lattice_f64 = lattice.to_f64();
    let lattice_inv_f64 = lattice_inv.to_f64();
    Ok(ProductAnosovSystem {
        factor: NilGroupModel::new(factor.clone())?,
        model: NilGroupModel::new(product)?,
        lambda: lambda.clone(),
        map,
        lattice_basis: lattice,
        map_in_lattice,
        column_layers,
        map_f64,
        lattice_f64,
        lattice_inv_f64,
    })
}

/// The Borel/Smale system: H³ × H³ with λ = 2 + √3 and the Z[√3]
/// Galois-diagonal lattice; the map is diag(λ, λ², λ³, λ⁻¹, λ⁻², λ⁻³).
pub fn build_smale_system() -> ProductAnosovSystem {
    build_product_anosov(&smale_factor(), &Scalar::quad_int(2, 1, 3))
        .expect("the Smale system certificates hold")
}

fn lattice_coordinate_f64(system: &ProductAnosovSystem, row: usize, x: &[f64]) -> f64 {
    (0..x.len())
        .map(|j| system.lattice_inv_f64[(row, j)] * x[j])
        .sum()
}

/// Reduce a point into the fundamental box: right-multiply by integer
/// powers of the lattice generators, lowest layer first, so every Malcev
/// coordinate lands in [0, 1). Right multiplication by a generator shifts
/// its own coordinate and corrects only strictly higher layers, so one
/// pass in layer order suffices.
pub fn malcev_reduce(system: &ProductAnosovSystem, x: &[f64]) -> Vec<f64> {
    let dim = system.dim();
    let mut x = x.to_vec();
    for i in 0..dim {
        let c = lattice_coordinate_f64(system, i, &x);
        let m = c.floor();
        if m != 0.0 {
            let g: Vec<f64> = (0..dim).map(|r| -m * system.lattice_f64[(r, i)]).collect();
            x = system.model.multiply_f64(&x, &g);
        }
    }
    x
}

fn exact_floor(s: &Scalar) -> i64 {
    let mut m = s.to_f64().floor() as i64;
    while (s - &Scalar::from_int(m)).sign() < 0 {
        m -= 1;
    }
    while (s - &Scalar::from_int(m + 1)).sign() >= 0 {
        m += 1;
    }
    m
}

/// Exact Malcev reduction for rational/quadratic inputs. Returns the
/// reduced point and the integer generator powers m_i applied, so that
/// reduced = x · g_0^{−m_0} ⋯ g_{2n−1}^{−m_{2n−1}} exactly.
pub fn malcev_reduce_exact(system: &ProductAnosovSystem, x: &[Scalar]) -> (SVec, Vec<i64>) {
    let dim = system.dim();
    let lattice_inv = system.lattice_basis.inverse().unwrap();
    let mut x = x.to_vec();
    let mut powers = Vec::with_capacity(dim);
    for i in 0..dim {
        let c = lattice_inv.row(i).iter().zip(&x).fold(
            Scalar::zero(),
            |acc, (l, v)| &acc + &(l * v),
        );
        let m = exact_floor(&c);
        powers.push(m);
        if m != 0 {
            let g: SVec = (0..dim)
                .map(|r| &system.lattice_basis[(r, i)] * &Scalar::from_int(-m))
                .collect();
            x = system.model.multiply(&x, &g);
        }
    }
    (x, powers)
}

/// QR/Benettin estimator: iterates x ← malcev_reduce(map(x)), accumulates
/// QR factorizations of the derivative cocycle and reports running-mean
/// log diagonals of R. The error bound is the largest oscillation of the
/// running means over the final 10% of iterations.
pub fn qr_lyapunov_estimate(
    system: &ProductAnosovSystem,
    map: &dyn Fn(&[f64]) -> Vec<f64>,
    dmap: &dyn Fn(&[f64]) -> DMatrix<f64>,
    x0: &[f64],
    iterations: usize,
    seed: u64,
) -> Result<SpectrumReport, NilError> {
    if iterations == 0 {
        return Err(NilError::Input("iterations must be ≥ 1".into()));
    }
    let dim = system.dim();
    if x0.len() != dim {
        return Err(NilError::Input("x0 has the wrong dimension".into()));
    }
    let tail_start = iterations - (iterations / 10).max(1) + 1;
    let mut x = malcev_reduce(system, x0);
    let mut q = DMatrix::<f64>::identity(dim, dim);
    let mut sums = vec![0.0; dim];
    let mut tail_min = vec![f64::INFINITY; dim];
    let mut tail_max = vec![f64::NEG_INFINITY; dim];
    for t in 1..=iterations {
        let j = dmap(&x);
        let m = &j * &q;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(NilError::Blowup { iteration: t });
        }
        let (qq, r) = m.qr().unpack();
        for i in 0..dim {
            let diag = r[(i, i)].abs();
            if !diag.is_finite() || diag == 0.0 {
                return Err(NilError::Blowup { iteration: t });
            }
            sums[i] += diag.ln();
        }
        q = qq;
        x = malcev_reduce(system, &map(&x));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NilError::Blowup { iteration: t });
        }
        if t >= tail_start {
            for i in 0..dim {
                let mean = sums[i] / t as f64;
                tail_min[i] = tail_min[i].min(mean);
                tail_max[i] = tail_max[i].max(mean);
            }
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / iterations as f64).collect();
    let error_bound = (0..dim)
        .map(|i| tail_max[i] - tail_min[i])
        .fold(0.0f64, f64::max);
    Ok(SpectrumReport {
        exponents: group_numeric(means, 1e-12),
        source: SpectrumSource::QrEstimate { iterations, seed },
        error_bound,
    })
}

/// A Γ-periodic perturbation of the automorphism: after applying the
/// linear map, left-multiply by exp(δ) where
/// δ(y) = ε Σ_j sin(2π f_j c_j(y)) g_j over layer-0 lattice generators
/// g_j with Malcev coordinates c_j. The c_j shift by integers under right
/// multiplication by Γ (layer-0 coordinates are abelian), so the map
/// descends to the quotient; its Jacobian is analytic.
#[derive(Debug, Clone)]
pub struct PeriodicPerturbation {
    model: NilGroupModel,
    map_f64: DMatrix<f64>,
    lattice_f64: DMatrix<f64>,
    lattice_inv_f64: DMatrix<f64>,
    layer0_cols: Vec<usize>,
    pub eps: f64,
    /// Integer frequency per layer-0 generator, drawn from the seed.
    pub freqs: Vec<f64>,
}

pub fn make_periodic_perturbation(
    system: &ProductAnosovSystem,
    eps: f64,
    seed: u64,
) -> Result<PeriodicPerturbation, NilError> {
    if !(0.0..=0.1).contains(&eps) {
        return Err(NilError::Input(format!(
            "amplitude ε = {eps} outside [0, 0.1]"
        )));
    }
    let layer0_cols = system.layer0_columns();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs: Vec<f64> = layer0_cols
        .iter()
        .map(|_| rng.gen_range(1..=3) as f64)
        .collect();
    Ok(PeriodicPerturbation {
        model: system.model.clone(),
        map_f64: system.map_f64.clone(),
        lattice_f64: system.lattice_f64.clone(),
        lattice_inv_f64: system.lattice_inv_f64.clone(),
        layer0_cols,
        eps,
        freqs,
    })
}

impl PeriodicPerturbation {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn displacement(&self, y: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let mut delta = vec![0.0; dim];
        for (t, &col) in self.layer0_cols.iter().enumerate() {
            let c: f64 = (0..dim).map(|j| self.lattice_inv_f64[(col, j)] * y[j]).sum();
            let s = self.eps * (std::f64::consts::TAU * self.freqs[t] * c).sin();
            for (r, d) in delta.iter_mut().enumerate() {
                *d += s * self.lattice_f64[(r, col)];
            }
        }
        delta
    }

    pub fn map(&self, x: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = (&self.map_f64 * DMatrix::from_column_slice(self.dim(), 1, x))
            .iter()
            .copied()
            .collect();
        let delta = self.displacement(&y);
        self.model.multiply_f64(&delta, &y)
    }

    /// Exact analytic Jacobian: with y = Ax and B(u, v) the BCH product,
    /// dF = (∂_u B · dδ/dy + ∂_v B)|_{(δ(y), y)} · A.
    pub fn dmap(&self, x: &[f64]) -> DMatrix<f64> {
        let dim = self.dim();
        let y: Vec<f64> = (&self.map_f64 * DMatrix::from_column_slice(dim, 1, x))
            .iter()
            .copied()
            .collect();
        let delta = self.displacement(&y);
        let j_first = DMatrix::from_fn(dim, dim, |k, j| {
            self.model.jac_first_f64[k][j].eval2(&delta, &y)
        });
        let j_second = DMatrix::from_fn(dim, dim, |k, j| {
            self.model.jac_second_f64[k][j].eval2(&delta, &y)
        });
        let mut d_delta = DMatrix::<f64>::zeros(dim, dim);
        for (t, &col) in self.layer0_cols.iter().enumerate() {
            let c: f64 = (0..dim).map(|j| self.lattice_inv_f64[(col, j)] * y[j]).sum();
            let w = std::f64::consts::TAU * self.freqs[t];
            let ds = self.eps * w * (w * c).cos();
            for r in 0..dim {
                for j in 0..dim {
                    d_delta[(r, j)] +=
                        ds * self.lattice_f64[(r, col)] * self.lattice_inv_f64[(col, j)];
                }
            }
        }
        (j_first * d_delta + j_second) * &self.map_f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::filiform;
    use crate::linalg::vec_is_zero;

    const LOG_LAMBDA: f64 = 1.3169578969248166; // ln(2 + √3)

    fn e(n: usize, i: usize) -> SVec {
        let mut v = vec![Scalar::zero(); n];
        v[i] = Scalar::one();
        v
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> SVec {
        (0..n)
            .map(|_| Scalar::ratio(rng.gen_range(-8..=8), rng.gen_range(1..=4)))
            .collect()
    }

    #[test]
    fn h3_bch_is_the_closed_form() {
        let model = NilGroupModel::new(heisenberg3()).unwrap();
        assert_eq!(model.step, 2);
        let p = model.multiply(&e(3, 0), &e(3, 1));
        assert_eq!(p[0], Scalar::one());
        assert_eq!(p[1], Scalar::one());
        assert_eq!(p[2], Scalar::ratio(1, 2));
        // x·y = x + y + ½[x,y] for any step-2 algebra.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = random_vec(3, &mut rng);
            let y = random_vec(3, &mut rng);
            let br = model.algebra.algebra.bracket_of(&x, &y).unwrap();
            let expect: SVec = (0..3)
                .map(|k| &(&x[k] + &y[k]) + &(&br[k] * &Scalar::ratio(1, 2)))
                .collect();
            assert_eq!(model.multiply(&x, &y), expect);
        }
    }

    #[test]
    fn bch_matches_the_order_three_series() {
        // Step-3 model: z = x + y + ½[x,y] + 1/12 [x,[x,y]] + 1/12 [y,[y,x]].
        let g = filiform(1);
        let model = NilGroupModel::new(g.clone()).unwrap();
        assert_eq!(model.step, 3);
        let alg = &g.algebra;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x = random_vec(4, &mut rng);
            let y = random_vec(4, &mut rng);
            let xy = alg.bracket_of(&x, &y).unwrap();
            let xxy = alg.bracket_of(&x, &xy).unwrap();
            let yx: SVec = xy.iter().map(|v| -v).collect();
            let yyx = alg.bracket_of(&y, &yx).unwrap();
            let twelfth = Scalar::ratio(1, 12);
            let expect: SVec = (0..4)
                .map(|k| {
                    let lin = &x[k] + &y[k];
                    let quad = &xy[k] * &Scalar::ratio(1, 2);
                    let cub = &(&xxy[k] + &yyx[k]) * &twelfth;
                    &(&lin + &quad) + &cub
                })
                .collect();
            assert_eq!(model.multiply(&x, &y), expect);
        }
    }

    #[test]
    fn inverse_law_on_the_filiform_model() {
        let model = NilGroupModel::new(filiform(3)).unwrap();
        assert_eq!(model.step, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x = random_vec(6, &mut rng);
            let inv = model.inverse(&x);
            assert!(vec_is_zero(&model.multiply(&x, &inv)));
            assert!(vec_is_zero(&model.multiply(&inv, &x)));
        }
    }

    #[test]
    fn bch_is_associative_on_h3_and_filiform() {
        for (g, samples) in [(heisenberg3(), 100), (filiform(3), 100)] {
            let n = g.dim();
            let model = NilGroupModel::new(g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            for _ in 0..samples {
                let x = random_vec(n, &mut rng);
                let y = random_vec(n, &mut rng);
                let z = random_vec(n, &mut rng);
                let left = model.multiply(&model.multiply(&x, &y), &z);
                let right = model.multiply(&x, &model.multiply(&y, &z));
                assert_eq!(left, right);
            }
        }
    }

    #[test]
    fn step_cap_is_enforced() {
        let err = NilGroupModel::new(filiform(5)).unwrap_err();
        assert!(matches!(err, NilError::UnsupportedStep(7)));
    }

    #[test]
    fn smale_system_certificates() {
        let sys = build_smale_system();
        let lam = Scalar::quad_int(2, 1, 3);
        // Unstable block diag(λ, λ², λ³); stable block the conjugates.
        for k in 0..3 {
            assert_eq!(sys.map[(k, k)], lam.pow(k as i64 + 1));
            assert_eq!(
                sys.map[(3 + k, 3 + k)],
                lam.galois_conjugate().pow(k as i64 + 1)
            );
        }
        assert!(sys.map.det().is_one());
        // Integer lattice blocks with traces λ^k + (λ^σ)^k = 4, 14, 52.
        for (t, expect) in [(0usize, 4i64), (1, 14), (2, 52)] {
            let tr = &sys.map_in_lattice[(2 * t, 2 * t)] + &sys.map_in_lattice[(2 * t + 1, 2 * t + 1)];
            assert_eq!(tr, Scalar::from_int(expect));
        }
        for i in 0..6 {
            for j in 0..6 {
                let e = &sys.map_in_lattice[(i, j)];
                assert!(e.is_rational() && e.a.is_integer());
            }
        }
        assert!(is_graded_automorphism(&sys.model.algebra, &sys.map).is_yes());
        // Unstable exponents {log λ, 2 log λ, 3 log λ}.
        let spec = crate::spectra::lyapunov_spectrum(&sys.map).unwrap();
        let expanded = spec.expanded();
        let expect = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0].map(|k| k * LOG_LAMBDA);
        for (a, b) in expanded.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn product_anosov_reproduces_the_smale_system() {
        let sys = build_product_anosov(&smale_factor(), &Scalar::quad_int(2, 1, 3)).unwrap();
        let smale = build_smale_system();
        assert_eq!(sys.map, smale.map);
        assert_eq!(sys.lattice_basis, smale.lattice_basis);
        assert_eq!(sys.map_in_lattice, smale.map_in_lattice);
    }

    #[test]
    fn product_anosov_accepts_one_plus_sqrt2() {
        // λ = 1 + √2: λλ^σ = −1, and all powers are algebraic integers.
        let sys = build_product_anosov(&smale_factor(), &Scalar::quad_int(1, 1, 2)).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let e = &sys.map_in_lattice[(i, j)];
                assert!(e.is_rational() && e.a.is_integer());
            }
        }
        assert!(sys.map.det().is_one());
    }

    #[test]
    fn product_anosov_rejects_non_integral_lambda() {
        // 3/2 + √3 is not an algebraic integer; Γ is not preserved.
        let lam = Scalar::quadratic(
            num_rational::BigRational::new(3.into(), 2.into()),
            num_rational::BigRational::from_integer(1.into()),
            3,
        )
        .unwrap();
        let err = build_product_anosov(&smale_factor(), &lam).unwrap_err();
        match err {
            NilError::NonIntegral { value, .. } => assert!(value.contains("/2")),
            other => panic!("expected NonIntegral, got {other:?}"),
        }
    }

    #[test]
    fn product_anosov_rejects_bad_moduli_and_fields() {
        // √2 has |λ^σ| = √2 > 1.
        let err = build_product_anosov(&smale_factor(), &Scalar::quad_int(0, 1, 2)).unwrap_err();
        assert!(matches!(err, NilError::Input(_)));
        // Rational λ has no Galois pair.
        let err = build_product_anosov(&smale_factor(), &Scalar::from_int(2)).unwrap_err();
        assert!(matches!(err, NilError::Input(_)));
    }

    #[test]
    fn malcev_reduce_fixed_cases() {
        let sys = build_smale_system();
        // A lattice generator reduces to the identity.
        let g: Vec<f64> = (0..6).map(|r| sys.lattice_f64[(r, 0)]).collect();
        let red = malcev_reduce(&sys, &g);
        assert!(red.iter().all(|v| v.abs() < 1e-12));
        // A point already in the box is untouched.
        let inside = [0.1, 0.2, 0.05, 0.0, 0.1, 0.3];
        let c: Vec<f64> = (0..6)
            .map(|i| lattice_coordinate_f64(&sys, i, &inside))
            .collect();
        if c.iter().all(|v| (0.0..1.0).contains(v)) {
            assert_eq!(malcev_reduce(&sys, &inside), inside.to_vec());
        } else {
            // Coordinates are taken in the lattice basis; build a point from
            // in-box lattice coordinates instead.
            let mut p = vec![0.0; 6];
            for (i, v) in [0.1, 0.2, 0.05, 0.3, 0.15, 0.4].iter().enumerate() {
                for r in 0..6 {
                    p[r] += v * sys.lattice_f64[(r, i)];
                }
            }
            // Not exact (the box is not linear above layer 0), so only check
            // idempotence of reduction.
            let red = malcev_reduce(&sys, &p);
            let again = malcev_reduce(&sys, &red);
            for (a, b) in red.iter().zip(&again) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn malcev_reduce_exact_certificate() {
        let sys = build_smale_system();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let x = random_vec(6, &mut rng);
            let (reduced, powers) = malcev_reduce_exact(&sys, &x);
            // reduced = x · γ with γ the recorded product of generator powers,
            // so x⁻¹ · reduced = γ ∈ Γ.
            let mut gamma = vec![Scalar::zero(); 6];
            for (i, &m) in powers.iter().enumerate() {
                if m == 0 {
                    continue;
                }
                let gen: SVec = (0..6)
                    .map(|r| &sys.lattice_basis[(r, i)] * &Scalar::from_int(-m))
                    .collect();
                gamma = sys.model.multiply(&gamma, &gen);
            }
            assert_eq!(sys.model.multiply(&x, &gamma), reduced);
            let in_gamma = sys.model.multiply(&sys.model.inverse(&x), &reduced);
            assert_eq!(in_gamma, gamma);
            // All Malcev coordinates of the reduced point lie in [0, 1).
            let lattice_inv = sys.lattice_basis.inverse().unwrap();
            let coords = lattice_inv.mul_vec(&reduced);
            for c in &coords {
                assert!(c.sign() >= 0);
                assert!((c - &Scalar::one()).sign() < 0);
            }
        }
    }

    #[test]
    fn qr_estimate_exact_automorphism() {
        let sys = build_smale_system();
        let a = sys.map_f64().clone();
        let map = move |x: &[f64]| {
            (0..6)
                .map(|i| (0..6).map(|j| a[(i, j)] * x[j]).sum())
                .collect::<Vec<f64>>()
        };
        let a2 = sys.map_f64().clone();
        let dmap = move |_x: &[f64]| a2.clone();
        let x0 = [0.3, 0.7, 0.21, 0.11, 0.52, 0.08];
        let report = qr_lyapunov_estimate(&sys, &map, &dmap, &x0, 10_000, 1).unwrap();
        let expect = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0].map(|k| k * LOG_LAMBDA);
        let got = report.expanded();
        assert_eq!(got.len(), 6);
        for (g, e) in got.iter().zip(expect.iter()) {
            assert!((g - e).abs() < 1e-8, "got {g}, expected {e}");
        }
        assert!(report.error_bound < 1e-8);
        assert_eq!(
            report.source,
            SpectrumSource::QrEstimate {
                iterations: 10_000,
                seed: 1
            }
        );
    }

    #[test]
    fn qr_estimate_identity_map() {
        let sys = build_smale_system();
        let map = |x: &[f64]| x.to_vec();
        let dmap = |_: &[f64]| DMatrix::<f64>::identity(6, 6);
        let x0 = [0.2; 6];
        let report = qr_lyapunov_estimate(&sys, &map, &dmap, &x0, 200, 0).unwrap();
        assert_eq!(report.exponents, vec![(0.0, 6)]);
        assert_eq!(report.error_bound, 0.0);
    }

    #[test]
    fn qr_estimate_affine_perturbation() {
        // map(x) = g₀ · A(x): the derivative cocycle is (I + unipotent)·A
        // with the same exponents as A.
        let sys = build_smale_system();
        let g0 = [0.37, -0.21, 0.5, 0.11, -0.43, 0.07];
        let a = sys.map_f64().clone();
        let model = sys.model.clone();
        let map = {
            let a = a.clone();
            let model = model.clone();
            move |x: &[f64]| {
                let y: Vec<f64> = (0..6)
                    .map(|i| (0..6).map(|j| a[(i, j)] * x[j]).sum())
                    .collect();
                model.multiply_f64(&g0, &y)
            }
        };
        let dmap = {
            let a = a.clone();
            let model = model.clone();
            move |x: &[f64]| {
                let y: Vec<f64> = (0..6)
                    .map(|i| (0..6).map(|j| a[(i, j)] * x[j]).sum())
                    .collect();
                model.left_translation_jacobian_f64(&g0, &y) * &a
            }
        };
        let x0 = [0.3, 0.7, 0.21, 0.11, 0.52, 0.08];
        // The running mean starts before Q has reordered the increasing
        // diagonal (λ, λ², λ³), so the estimate carries an O(1/N) transient
        // with constant ≈ a few · log λ; N = 5·10⁵ brings it near 1e-5.
        let report = qr_lyapunov_estimate(&sys, &map, &dmap, &x0, 500_000, 2).unwrap();
        let expect = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0].map(|k| k * LOG_LAMBDA);
        for (g, e) in report.expanded().iter().zip(expect.iter()) {
            assert!((g - e).abs() < 5e-5, "got {g}, expected {e}");
        }
    }

    #[test]
    fn perturbation_eps_zero_is_the_automorphism() {
        let sys = build_smale_system();
        let p = make_periodic_perturbation(&sys, 0.0, 3).unwrap();
        let x = [0.31, 0.68, 0.22, 0.13, 0.55, 0.07];
        let ax: Vec<f64> = (0..6)
            .map(|i| (0..6).map(|j| sys.map_f64()[(i, j)] * x[j]).sum())
            .collect();
        assert_eq!(p.map(&x), ax);
        let d = p.dmap(&x);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(d[(i, j)], sys.map_f64()[(i, j)]);
            }
        }
    }

    #[test]
    fn perturbation_amplitude_is_bounded() {
        let sys = build_smale_system();
        assert!(matches!(
            make_periodic_perturbation(&sys, 0.2, 0).unwrap_err(),
            NilError::Input(_)
        ));
    }

    #[test]
    fn perturbation_jacobian_matches_finite_differences() {
        let sys = build_smale_system();
        let p = make_periodic_perturbation(&sys, 1e-3, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = 1e-4;
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let analytic = p.dmap(&x);
            let mut max_rel = 0.0f64;
            for j in 0..6 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fp = p.map(&xp);
                let fm = p.map(&xm);
                for i in 0..6 {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    let rel = (analytic[(i, j)] - fd).abs() / (1.0 + analytic[(i, j)].abs());
                    max_rel = max_rel.max(rel);
                }
            }
            assert!(max_rel <= 1e-6, "finite-difference mismatch {max_rel}");
        }
    }

    #[test]
    fn estimated_exponents_sum_to_mean_log_det() {
        let sys = build_smale_system();
        let p = make_periodic_perturbation(&sys, 1e-2, 5).unwrap();
        let x0 = [0.3, 0.7, 0.21, 0.11, 0.52, 0.08];
        let n = 2_000usize;
        let map = |x: &[f64]| p.map(x);
        let dmap = |x: &[f64]| p.dmap(x);
        let report = qr_lyapunov_estimate(&sys, &map, &dmap, &x0, n, 0).unwrap();
        let sum: f64 = report
            .exponents
            .iter()
            .map(|(v, m)| v * *m as f64)
            .sum();
        // Replay the orbit and average log |det dmap| independently.
        let mut x = malcev_reduce(&sys, &x0);
        let mut acc = 0.0;
        for _ in 0..n {
            acc += p.dmap(&x).determinant().abs().ln();
            x = malcev_reduce(&sys, &p.map(&x));
        }
        assert!((sum - acc / n as f64).abs() < 1e-6);
    }
}
