//! Lyapunov spectra of linear maps and verifiers for the spectral
//! statements: arithmeticity, subadditivity, Heisenberg additivity, block
//! structure and dominated splitting.

use crate::lie::GradedAlgebra;
use crate::linalg::SMat;
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum SpectraError {
    #[error("matrix is singular")]
    Singular,
    #[error("bad input: {0}")]
    Input(String),
}

/// Default tolerance for exact-source spectra.
pub const EXACT_TOL: f64 = 1e-8;
/// Default tolerance for QR-estimated spectra.
pub const QR_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumSource {
    ExactEigenvalues,
    QrEstimate { iterations: usize, seed: u64 },
    NumericEigenvalues,
}

/// Sorted Lyapunov exponents with multiplicities; multiplicities always sum
/// to the dimension.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub exponents: Vec<(f64, usize)>,
    pub source: SpectrumSource,
    pub error_bound: f64,
}

impl SpectrumReport {
    pub fn dimension(&self) -> usize {
        self.exponents.iter().map(|(_, m)| m).sum()
    }

    /// Exponents expanded by multiplicity, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (v, m) in &self.exponents {
            out.extend(std::iter::repeat(*v).take(*m));
        }
        out
    }
}

fn is_triangular(a: &SMat) -> bool {
    let n = a.rows;
    let upper = (0..n).all(|i| (0..i).all(|j| a[(i, j)].is_zero()));
    let lower = (0..n).all(|i| (i + 1..n).all(|j| a[(i, j)].is_zero()));
    upper || lower
}

fn group_exact(moduli: Vec<Scalar>) -> Vec<(f64, usize)> {
    let mut groups: Vec<(Scalar, usize)> = Vec::new();
    for m in moduli {
        if let Some(g) = groups.iter_mut().find(|(v, _)| *v == m) {
            g.1 += 1;
        } else {
            groups.push((m, 1));
        }
    }
    let mut out: Vec<(f64, usize)> = groups
        .into_iter()
        .map(|(v, m)| (v.to_f64().ln(), m))
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

pub(crate) fn group_numeric(mut values: Vec<f64>, tol: f64) -> Vec<(f64, usize)> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some((w, m)) if (v - *w).abs() <= tol * (1.0 + w.abs()) => *m += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Log-moduli of the eigenvalues of an invertible matrix.
///
/// Exact when the matrix is triangular (eigenvalues are the diagonal
/// entries) or when the characteristic polynomial has degree ≤ 2 over the
/// field; otherwise eigenvalues are computed numerically with a reported
/// error bound.
pub fn lyapunov_spectrum(a: &SMat) -> Result<SpectrumReport, SpectraError> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    if a.det().is_zero() {
        return Err(SpectraError::Singular);
    }
    if is_triangular(a) {
        let moduli = (0..n).map(|i| a[(i, i)].abs()).collect();
        return Ok(SpectrumReport {
            exponents: group_exact(moduli),
            source: SpectrumSource::ExactEigenvalues,
            error_bound: 0.0,
        });
    }
    if n <= 2 {
        let cp = a.char_poly(); // low-to-high, monic
        if n == 1 {
            return Ok(SpectrumReport {
                exponents: vec![(cp[0].abs().to_f64().ln(), 1)],
                source: SpectrumSource::ExactEigenvalues,
                error_bound: 0.0,
            });
        }
        // x² + bx + c
        let b = cp[1].to_f64();
        let c = &cp[0];
        let disc = b * b - 4.0 * c.to_f64();
        if disc < 0.0 {
            // conjugate pair: modulus² = c, one entry, doubled multiplicity
            let log_mod = 0.5 * c.abs().to_f64().ln();
            return Ok(SpectrumReport {
                exponents: vec![(log_mod, 2)],
                source: SpectrumSource::ExactEigenvalues,
                error_bound: 0.0,
            });
        }
        let sq = disc.sqrt();
        let roots = [(-b - sq) / 2.0, (-b + sq) / 2.0];
        let logs: Vec<f64> = roots.iter().map(|r| r.abs().ln()).collect();
        return Ok(SpectrumReport {
            exponents: group_numeric(logs, 1e-12),
            source: SpectrumSource::ExactEigenvalues,
            error_bound: 1e-12,
        });
    }
    // numeric fallback
    let eigs = a.to_f64().complex_eigenvalues();
    let logs: Vec<f64> = eigs.iter().map(|z| z.norm_sqr().sqrt().ln()).collect();
    Ok(SpectrumReport {
        exponents: group_numeric(logs, 1e-9),
        source: SpectrumSource::NumericEigenvalues,
        error_bound: 1e-8,
    })
}

/// Arithmetic-progression fit of the spectrum to the grading weights.
#[derive(Debug, Clone)]
pub struct ArithmeticityVerdict {
    pub holds: bool,
    pub lambda: f64,
    /// (k·log λ, d_{k−1}) for k = 1..r+1.
    pub expected: Vec<(f64, usize)>,
    pub max_deviation: f64,
}

/// Per-layer exponents of a layer-block-triangular matrix, ascending within
/// each layer.
/// Per-layer Lyapunov exponent lists of a layer-preserving map: exact from
/// the diagonal blocks when the map is block-upper-triangular with respect
/// to the grading, otherwise the sorted global spectrum split by layer
/// dimensions.
pub fn layer_exponents(a: &SMat, g: &GradedAlgebra) -> Result<Vec<Vec<f64>>, SpectraError> {
    match check_block_structure(a, g) {
        BlockStructure::BlockUpperTriangular {
            diagonal_blocks, ..
        } => diagonal_blocks
            .iter()
            .map(|b| Ok(lyapunov_spectrum(b)?.expanded()))
            .collect(),
        BlockStructure::Violation { .. } => {
            // fall back: sorted global spectrum split by layer dimensions
            let all = lyapunov_spectrum(a)?.expanded();
            let mut out = Vec::new();
            let mut at = 0;
            for d in g.grading.layer_dims() {
                out.push(all[at..at + d].to_vec());
                at += d;
            }
            Ok(out)
        }
    }
}

/// Does the spectrum follow the pattern k·log λ with multiplicity d_{k−1}?
/// λ is fitted as exp(mean of the layer-0 exponents).
pub fn verify_arithmeticity(
    a: &SMat,
    g: &GradedAlgebra,
    tol: f64,
) -> Result<ArithmeticityVerdict, SpectraError> {
    if a.rows != g.dim() {
        return Err(SpectraError::Input("matrix/algebra dimension mismatch".into()));
    }
    let per_layer = layer_exponents(a, g)?;
    let layer0 = &per_layer[0];
    let log_lambda = layer0.iter().sum::<f64>() / layer0.len() as f64;
    let expected: Vec<(f64, usize)> = per_layer
        .iter()
        .enumerate()
        .map(|(i, l)| ((i + 1) as f64 * log_lambda, l.len()))
        .collect();
    let mut max_dev: f64 = 0.0;
    for (i, level) in per_layer.iter().enumerate() {
        for &x in level {
            max_dev = max_dev.max((x - (i + 1) as f64 * log_lambda).abs());
        }
    }
    Ok(ArithmeticityVerdict {
        holds: max_dev <= tol,
        lambda: log_lambda.exp(),
        expected,
        max_deviation: max_dev,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubadditivityVerdict {
    Holds,
    /// Violating level and global 1-based exponent index.
    Violation { level: usize, index: usize },
}

/// Two-sided bound (i+1)·log λ₁ ≤ log λ_j ≤ (i+1)·log λ_{n₀} for every
/// level i and every exponent in that level.
pub fn verify_subadditivity(levels: &[Vec<f64>], tol: f64) -> SubadditivityVerdict {
    if levels.is_empty() || levels[0].is_empty() {
        return SubadditivityVerdict::Holds;
    }
    let l1 = levels[0][0];
    let ln0 = *levels[0].last().unwrap();
    let mut global = 0usize;
    for (i, level) in levels.iter().enumerate() {
        let k = (i + 1) as f64;
        for &x in level {
            global += 1;
            if x < k * l1 - tol || x > k * ln0 + tol {
                return SubadditivityVerdict::Violation {
                    level: i,
                    index: global,
                };
            }
        }
    }
    SubadditivityVerdict::Holds
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeisenbergAdditivity {
    Holds { n: usize },
    Fails { deviation: f64 },
}

/// Σ of the first 2n exponents equals n · (center exponent), within tol.
pub fn verify_heisenberg_additivity(
    exponents: &[f64],
    tol: f64,
) -> Result<HeisenbergAdditivity, SpectraError> {
    if exponents.len() % 2 == 0 || exponents.is_empty() {
        return Err(SpectraError::Input(
            "need an odd number of exponents (2n horizontal + 1 center)".into(),
        ));
    }
    let n = (exponents.len() - 1) / 2;
    let sum: f64 = exponents[..2 * n].iter().sum();
    let deviation = (sum - n as f64 * exponents[2 * n]).abs();
    if deviation <= tol {
        Ok(HeisenbergAdditivity::Holds { n })
    } else {
        Ok(HeisenbergAdditivity::Fails { deviation })
    }
}

#[derive(Debug, Clone)]
pub enum BlockStructure {
    BlockUpperTriangular {
        diagonal_blocks: Vec<SMat>,
        /// When layer 0 is diagonal: do higher diagonal entries equal the
        /// products predicted by the bracket provenance? `None` when the
        /// prediction is not applicable.
        predicted_products_ok: Option<bool>,
    },
    Violation {
        entry: (usize, usize),
    },
}

/// Verify block upper-triangularity w.r.t. the layer decomposition and
/// extract the diagonal blocks; when layer 0 acts diagonally, additionally
/// predict higher diagonal entries as products of layer-0 values along the
/// bracket provenance.
pub fn check_block_structure(a: &SMat, g: &GradedAlgebra) -> BlockStructure {
    let n = g.dim();
    assert_eq!(a.rows, n);
    for i in 0..n {
        for j in 0..n {
            if g.grading.layer_of(i) > g.grading.layer_of(j) && !a[(i, j)].is_zero() {
                return BlockStructure::Violation { entry: (i, j) };
            }
        }
    }
    let diagonal_blocks: Vec<SMat> = g
        .grading
        .layers
        .iter()
        .map(|l| a.submatrix(l, l))
        .collect();
    // product prediction along bracket provenance
    let layer0 = &g.grading.layers[0];
    let layer0_diagonal = layer0
        .iter()
        .all(|&i| layer0.iter().all(|&j| i == j || a[(i, j)].is_zero()));
    let predicted_products_ok = if layer0_diagonal {
        let mut predicted: Vec<Option<Scalar>> = vec![None; n];
        for &i in layer0 {
            predicted[i] = Some(a[(i, i)].clone());
        }
        let mut ok = Some(true);
        for layer in 1..g.grading.num_layers() {
            for &m in &g.grading.layers[layer] {
                // find a bracket [e_i, e_j] with a nonzero e_m coefficient
                // and both sources already predicted
                let mut found = None;
                'search: for (&(i, j), c) in &g.algebra.brackets {
                    if !c[m].is_zero() {
                        if let (Some(vi), Some(vj)) = (&predicted[i], &predicted[j]) {
                            found = Some(vi * vj);
                            break 'search;
                        }
                    }
                }
                match found {
                    Some(v) => {
                        if a[(m, m)] != v {
                            ok = Some(false);
                        }
                        predicted[m] = Some(v);
                    }
                    None => {
                        ok = None;
                    }
                }
                if ok != Some(true) {
                    break;
                }
            }
            if ok != Some(true) {
                break;
            }
        }
        ok
    } else {
        None
    };
    BlockStructure::BlockUpperTriangular {
        diagonal_blocks,
        predicted_products_ok,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DominatedSplitting {
    Satisfied,
    Violated { t: f64 },
}

/// Finite-horizon check of ‖α_t|E‖·‖α_{−t}|F‖ ≤ C·λ^t at sampled times.
pub fn check_dominated_splitting(
    e_norms: impl Fn(f64) -> f64,
    f_conorms: impl Fn(f64) -> f64,
    c: f64,
    lambda: f64,
    horizon: f64,
    step: f64,
) -> Result<DominatedSplitting, SpectraError> {
    if !(lambda > 0.0 && lambda < 1.0) || c <= 0.0 || step <= 0.0 || horizon < 0.0 {
        return Err(SpectraError::Input(
            "need 0 < lambda < 1, C > 0, step > 0, horizon >= 0".into(),
        ));
    }
    let mut t = 0.0;
    while t <= horizon {
        let product = e_norms(t) * f_conorms(t);
        let bound = c * lambda.powf(t);
        if product > bound * (1.0 + 1e-12) {
            return Ok(DominatedSplitting::Violated { t });
        }
        t += step;
    }
    Ok(DominatedSplitting::Satisfied)
}
