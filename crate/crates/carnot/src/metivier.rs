//! From a polynomial horizontal distribution on R^n to its tangent-cone
//! Carnot algebra: bracket filtration, genericity, weighted degrees,
//! homogeneous parts and exact structure constants.

use crate::lie::{GradedAlgebra, Grading, LieAlgebraSpec};
use crate::linalg::{in_span, span_rank, SMat, SVec};
use crate::poly::PolyVectorField;
use crate::scalar::Scalar;

/// Symbolic blowup guards.
pub const DEGREE_CAP: u32 = 12;

#[derive(Debug, thiserror::Error)]
pub enum MetivierError {
    #[error("fields and point must share one ambient dimension")]
    DimensionMismatch,
    #[error("filtration never reaches full dimension; achieved dims {0:?}")]
    NotHorizontal(Vec<usize>),
    #[error("bracket polynomial degree {0} exceeds the cap {DEGREE_CAP}")]
    DegreeCap(u32),
    #[error("distribution is not generic at the base point; witness {0:?}")]
    NonGeneric(Vec<String>),
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),
}

/// The bracket filtration E⁰(p) ⊆ … ⊆ E^r(p) = R^n at a point, with the
/// partition floor function derived from its dimensions.
#[derive(Debug, Clone)]
pub struct Filtration {
    pub point: SVec,
    /// Exact basis of E^i(p), for each level i.
    pub spaces: Vec<Vec<SVec>>,
    /// n_0 ≤ n_1 ≤ … ≤ n_r = n.
    pub dims: Vec<usize>,
    /// floor[i] = k+1 exactly when n_{k-1} < i+1 ≤ n_k (0-based index i).
    pub floor: Vec<i64>,
}

fn floor_from_dims(dims: &[usize]) -> Vec<i64> {
    let n = *dims.last().unwrap();
    let mut floor = Vec::with_capacity(n);
    for i in 1..=n {
        let k = dims.iter().position(|&d| i <= d).unwrap();
        floor.push((k + 1) as i64);
    }
    floor
}

/// All left-nested bracket words over the generators, by level; level 1 is
/// the generators themselves. Returns (word, field) pairs.
fn bracket_levels(
    fields: &[PolyVectorField],
    max_depth: usize,
) -> Result<Vec<Vec<(Vec<usize>, PolyVectorField)>>, MetivierError> {
    let mut levels: Vec<Vec<(Vec<usize>, PolyVectorField)>> = vec![fields
        .iter()
        .enumerate()
        .map(|(i, f)| (vec![i], f.clone()))
        .collect()];
    for _ in 1..max_depth {
        let prev = levels.last().unwrap();
        let mut next = Vec::new();
        for (word, f) in prev {
            for (g, gen) in fields.iter().enumerate() {
                let b = f.lie_bracket(gen);
                if let Some(d) = b.max_degree() {
                    if d > DEGREE_CAP {
                        return Err(MetivierError::DegreeCap(d));
                    }
                }
                let mut w = word.clone();
                w.push(g);
                next.push((w, b));
            }
        }
        levels.push(next);
    }
    Ok(levels)
}

/// Filtration dimensions at `q`, one entry per bracket depth, stopping once
/// full dimension is reached or `max_levels` levels are recorded.
fn dims_at(fields: &[PolyVectorField], q: &[Scalar], max_levels: usize) -> Vec<usize> {
    let n = fields[0].n;
    let levels = match bracket_levels(fields, max_levels) {
        Ok(l) => l,
        Err(_) => return vec![0],
    };
    let mut basis: Vec<SVec> = Vec::new();
    let mut dims = Vec::new();
    for level in &levels {
        for (_, f) in level {
            let v = f.eval(q);
            if !crate::linalg::vec_is_zero(&v) && !in_span(&basis, &v) {
                basis.push(v);
            }
        }
        dims.push(span_rank(&basis));
        if dims.last() == Some(&n) {
            break;
        }
    }
    dims
}

/// Evaluate the bracket filtration at `p`; errors if E^{max_step}(p) ≠ R^n.
pub fn evaluate_filtration(
    fields: &[PolyVectorField],
    p: &[Scalar],
    max_step: usize,
) -> Result<Filtration, MetivierError> {
    if fields.is_empty() || max_step < 1 {
        return Err(MetivierError::DimensionMismatch);
    }
    let n = fields[0].n;
    if fields.iter().any(|f| f.n != n) || p.len() != n {
        return Err(MetivierError::DimensionMismatch);
    }
    let depth = (max_step + 1).min(n.max(1));
    let levels = bracket_levels(fields, depth)?;
    let mut basis: Vec<SVec> = Vec::new();
    let mut spaces = Vec::new();
    let mut dims = Vec::new();
    for level in &levels {
        for (_, f) in level {
            let v = f.eval(p);
            if !crate::linalg::vec_is_zero(&v) && !in_span(&basis, &v) {
                basis.push(v);
            }
        }
        dims.push(basis.len());
        spaces.push(basis.clone());
        if basis.len() == n {
            break;
        }
    }
    if *dims.last().unwrap() != n {
        return Err(MetivierError::NotHorizontal(dims));
    }
    let floor = floor_from_dims(&dims);
    Ok(Filtration {
        point: p.to_vec(),
        spaces,
        dims,
        floor,
    })
}

/// Sample-based genericity verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum GenericityVerdict {
    Generic { order: usize, vacuous: bool },
    NonGeneric { witness: SVec, dims: Vec<usize> },
}

impl GenericityVerdict {
    pub fn is_generic(&self) -> bool {
        matches!(self, GenericityVerdict::Generic { .. })
    }
}

/// Compare filtration dimension vectors at `p` and at each sample point.
/// Sound only up to the sample set: a false "generic" is caught downstream
/// by the tangent-cone consistency check.
pub fn genericity_check(
    fields: &[PolyVectorField],
    p: &[Scalar],
    samples: &[SVec],
) -> Result<GenericityVerdict, MetivierError> {
    let n = fields[0].n;
    let base = evaluate_filtration(fields, p, n)?;
    for q in samples {
        let dims = dims_at(fields, q, base.dims.len());
        if dims != base.dims {
            return Ok(GenericityVerdict::NonGeneric {
                witness: q.clone(),
                dims,
            });
        }
    }
    Ok(GenericityVerdict::Generic {
        order: base.dims.len(),
        vacuous: samples.is_empty(),
    })
}

/// Default rational sample cloud: ±(1/8)e_i plus one diagonal point.
pub fn default_samples(n: usize) -> Vec<SVec> {
    let mut out = Vec::new();
    let eighth = Scalar::ratio(1, 8);
    for i in 0..n {
        for sign in [1i64, -1] {
            let mut v = vec![Scalar::zero(); n];
            v[i] = &eighth * &Scalar::from_int(sign);
            out.push(v);
        }
    }
    out.push((0..n).map(|i| Scalar::ratio(1, 8 * (i as i64 + 2))).collect());
    out
}

/// Weighted degree of a field: max over monomial terms of
/// [j] − Σ α_m [i_m]; `None` for the zero field.
pub fn weighted_degree(x: &PolyVectorField, filt: &Filtration) -> Option<i64> {
    let mut best: Option<i64> = None;
    for (j, comp) in x.components.iter().enumerate() {
        for e in comp.terms.keys() {
            let d = filt.floor[j]
                - e.iter()
                    .enumerate()
                    .map(|(m, &a)| a as i64 * filt.floor[m])
                    .sum::<i64>();
            best = Some(best.map_or(d, |b: i64| b.max(d)));
        }
    }
    best
}

/// Sum of the monomial terms of weighted degree exactly `q`.
pub fn homogeneous_part(x: &PolyVectorField, filt: &Filtration, q: i64) -> PolyVectorField {
    let mut out = PolyVectorField::zero(x.n);
    for (j, comp) in x.components.iter().enumerate() {
        for (e, c) in &comp.terms {
            let d = filt.floor[j]
                - e.iter()
                    .enumerate()
                    .map(|(m, &a)| a as i64 * filt.floor[m])
                    .sum::<i64>();
            if d == q {
                out.components[j].insert_term(e.clone(), c.clone());
            }
        }
    }
    out
}

/// A graded moving frame of iterated brackets, in adapted coordinates, with
/// the bracket word that produced each field.
#[derive(Debug, Clone)]
pub struct GradedFrame {
    pub fields: Vec<PolyVectorField>,
    pub words: Vec<Vec<usize>>,
}

/// Tangent-cone computation result: the Carnot algebra of the cone, the
/// graded frame and the filtration at the (adapted) base point.
#[derive(Debug, Clone)]
pub struct TangentCone {
    pub cone: GradedAlgebra,
    pub frame: GradedFrame,
    pub filtration: Filtration,
    /// Homogeneous degree-one-pattern hat fields X̂_k in adapted coordinates.
    pub hat_fields: Vec<PolyVectorField>,
}

/// The Métivier correspondence at `p`: structure constants of the tangent
/// cone of the distribution, with the grading induced by the filtration.
pub fn tangent_cone(
    fields: &[PolyVectorField],
    p: &[Scalar],
    samples: &[SVec],
) -> Result<TangentCone, MetivierError> {
    match genericity_check(fields, p, samples)? {
        GenericityVerdict::Generic { .. } => {}
        GenericityVerdict::NonGeneric { witness, .. } => {
            return Err(MetivierError::NonGeneric(
                witness.iter().map(|s| s.to_string()).collect(),
            ));
        }
    }
    let n = fields[0].n;
    // adapt: translate p to the origin
    let shifted: Vec<PolyVectorField> = fields.iter().map(|f| f.shift(p)).collect();
    let origin = vec![Scalar::zero(); n];
    // greedy graded frame: bracket words in length-then-lex order, keeping
    // the ones that increase the span at the origin
    let levels = bracket_levels(&shifted, n)?;
    let mut frame_fields = Vec::new();
    let mut frame_words = Vec::new();
    let mut basis: Vec<SVec> = Vec::new();
    let mut dims = Vec::new();
    'outer: for level in &levels {
        for (word, f) in level {
            let v = f.eval(&origin);
            if !crate::linalg::vec_is_zero(&v) && !in_span(&basis, &v) {
                basis.push(v);
                frame_fields.push(f.clone());
                frame_words.push(word.clone());
            }
        }
        dims.push(basis.len());
        if basis.len() == n {
            break 'outer;
        }
    }
    if basis.len() != n {
        return Err(MetivierError::NotHorizontal(dims));
    }
    // linear adaptation: send Y_k(0) to ∂_k
    let m = SMat::from_fn(n, n, |i, k| basis[k][i].clone());
    let m_inv = m
        .inverse()
        .ok_or_else(|| MetivierError::InternalConsistency("frame matrix singular".into()))?;
    let adapted: Vec<PolyVectorField> = frame_fields
        .iter()
        .map(|f| f.linear_change(&m, &m_inv))
        .collect();
    let floor = floor_from_dims(&dims);
    let filtration = Filtration {
        point: origin.clone(),
        spaces: dims
            .iter()
            .map(|&d| {
                (0..d)
                    .map(|i| {
                        let mut v = vec![Scalar::zero(); n];
                        v[i] = Scalar::one();
                        v
                    })
                    .collect()
            })
            .collect(),
        dims: dims.clone(),
        floor: floor.clone(),
    };
    // hat fields: homogeneous part at the frame weight
    let hat: Vec<PolyVectorField> = adapted
        .iter()
        .enumerate()
        .map(|(k, f)| homogeneous_part(f, &filtration, floor[k]))
        .collect();
    // structure constants by exact polynomial-coefficient matching
    let mut alg = LieAlgebraSpec::new(n);
    for k in 0..n {
        for l in k + 1..n {
            let b = hat[k].lie_bracket(&hat[l]);
            let coeffs = express_in_frame(&b, &hat).ok_or_else(|| {
                MetivierError::InternalConsistency(format!(
                    "bracket of hat fields {k},{l} is not a constant combination of the frame"
                ))
            })?;
            alg.set_bracket(k, l, coeffs)
                .map_err(|e| MetivierError::InternalConsistency(e.to_string()))?;
        }
    }
    // grading layers from the floor function
    let num_layers = dims.len();
    let mut layers: Vec<Vec<usize>> = vec![Vec::new(); num_layers];
    for (k, &w) in floor.iter().enumerate() {
        layers[(w - 1) as usize].push(k);
    }
    if layers.iter().any(|l| l.is_empty()) {
        return Err(MetivierError::InternalConsistency(
            "filtration dimensions are not strictly increasing".into(),
        ));
    }
    let grading = Grading::new(layers, n)
        .map_err(|e| MetivierError::InternalConsistency(e.to_string()))?;
    let cone = GradedAlgebra::new(alg, grading);
    // output invariants: Jacobi, nilpotency, Carnot grading
    if !cone.algebra.check_jacobi().is_ok() {
        return Err(MetivierError::InternalConsistency(
            "cone fails the Jacobi identity".into(),
        ));
    }
    if !cone.algebra.is_nilpotent() {
        return Err(MetivierError::InternalConsistency(
            "cone is not nilpotent".into(),
        ));
    }
    if !cone.verify_grading().is_carnot() {
        return Err(MetivierError::InternalConsistency(
            "cone grading is not Carnot".into(),
        ));
    }
    Ok(TangentCone {
        cone,
        frame: GradedFrame {
            fields: adapted,
            words: frame_words,
        },
        filtration,
        hat_fields: hat,
    })
}

/// Write `b` as a constant-coefficient combination Σ c_m · frame_m by
/// matching every (component, monomial) coefficient exactly.
fn express_in_frame(b: &PolyVectorField, frame: &[PolyVectorField]) -> Option<SVec> {
    let n = b.n;
    let mut keys: Vec<(usize, Vec<u32>)> = Vec::new();
    let mut push_keys = |f: &PolyVectorField| {
        for (j, comp) in f.components.iter().enumerate() {
            for e in comp.terms.keys() {
                if !keys.contains(&(j, e.clone())) {
                    keys.push((j, e.clone()));
                }
            }
        }
    };
    push_keys(b);
    for f in frame {
        push_keys(f);
    }
    let a = SMat::from_fn(keys.len(), frame.len(), |row, m| {
        let (j, ref e) = keys[row];
        frame[m].components[j]
            .terms
            .get(e)
            .cloned()
            .unwrap_or_else(Scalar::zero)
    });
    let rhs: SVec = keys
        .iter()
        .map(|(j, e)| {
            b.components[*j]
                .terms
                .get(e)
                .cloned()
                .unwrap_or_else(Scalar::zero)
        })
        .collect();
    let _ = n;
    a.solve(&rhs)
}
