//! Finite vector systems and their frame-theoretic quantities.
//!
//! A [`VectorSystem`] is an ordered family `{f_k}` in `ℂ^d`, optionally
//! weighted (`{a_k f_k}`). Everything here is computed from the synthesis
//! matrix `U = [a_1 f_1 | … | a_N f_N]`: optimal bounds are squared
//! singular values of `U`, the frame operator is `U U*`, and the synthesis
//! kernel is the null space of `U`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{self, Matrix, Operator, Vector, C64};

/// Relative cutoff on `σ²/B_opt` used when no tolerance is given.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Index set of an orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexModel {
    /// `n = 0, 1, 2, …`
    Natural,
    /// `n ∈ ℤ` modelled by one period of an operator with `T^p = I`.
    Periodic { period: usize },
}

/// Where an orbit system came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub operator: Operator,
    pub generators: Vec<Vector>,
    pub index_model: IndexModel,
    /// Orbit length per generator.
    pub horizon: usize,
}

/// Ordered finite family `{f_k}` with optional nonzero weights.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSystem {
    dim: usize,
    vectors: Vec<Vector>,
    weights: Option<Vec<C64>>,
    provenance: Option<Provenance>,
}

impl VectorSystem {
    pub fn new(vectors: Vec<Vector>) -> Result<Self> {
        let dim = match vectors.first() {
            Some(v) if !v.is_empty() => v.len(),
            Some(_) => return Err(Error::InvalidInput("vectors must be non-empty".into())),
            None => return Err(Error::InvalidInput("a system needs at least one vector".into())),
        };
        if let Some(k) = vectors.iter().position(|v| v.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "vector {k} has dimension {} but the system has dimension {dim}",
                vectors[k].len()
            )));
        }
        if vectors.iter().any(|v| v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::InvalidInput("vectors must have finite entries".into()));
        }
        Ok(Self {
            dim,
            vectors,
            weights: None,
            provenance: None,
        })
    }

    /// System whose vectors are the columns of `m`.
    pub fn from_columns(m: &Matrix) -> Result<Self> {
        Self::new(m.column_iter().map(|c| c.into_owned()).collect())
    }

    pub fn with_weights(mut self, weights: Vec<C64>) -> Result<Self> {
        if weights.len() != self.vectors.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} vectors",
                weights.len(),
                self.vectors.len()
            )));
        }
        if let Some(k) = weights.iter().position(|a| !(a.norm() > 0.0) || !a.norm().is_finite()) {
            return Err(Error::InvalidInput(format!(
                "weight a_{k} = {} must be a nonzero finite scalar",
                weights[k]
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn weights(&self) -> Option<&[C64]> {
        self.weights.as_deref()
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn weight(&self, k: usize) -> C64 {
        self.weights.as_ref().map_or(numkit::real(1.0), |w| w[k])
    }

    /// `a_k f_k`.
    pub fn weighted_vector(&self, k: usize) -> Vector {
        self.vectors[k].scale(1.0).map(|z| z * self.weight(k))
    }

    /// The first `n` members (weights kept, provenance dropped).
    pub fn prefix(&self, n: usize) -> Result<VectorSystem> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidInput(format!(
                "prefix length {n} out of range 1..={}",
                self.len()
            )));
        }
        let sys = VectorSystem::new(self.vectors[..n].to_vec())?;
        match &self.weights {
            Some(w) => sys.with_weights(w[..n].to_vec()),
            None => Ok(sys),
        }
    }

    /// Weighted system with the weights folded into the vectors.
    pub fn folded(&self) -> VectorSystem {
        VectorSystem {
            dim: self.dim,
            vectors: (0..self.len()).map(|k| self.weighted_vector(k)).collect(),
            weights: None,
            provenance: None,
        }
    }
}

/// Synthesis matrix `U` (`dim × N`); column `k` is `a_k f_k`.
pub fn synthesis(sys: &VectorSystem) -> Matrix {
    let cols: Vec<Vector> = (0..sys.len()).map(|k| sys.weighted_vector(k)).collect();
    Matrix::from_columns(&cols)
}

/// Gram matrix `U* U`.
pub fn gram(sys: &VectorSystem) -> Matrix {
    let u = synthesis(sys);
    u.adjoint() * u
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Frame,
    FrameSequence,
    BesselOnly,
    RieszSequence,
    RieszBasis,
}

impl Classification {
    pub fn is_riesz(self) -> bool {
        matches!(self, Classification::RieszSequence | Classification::RieszBasis)
    }

    /// Spans the ambient space (a Riesz basis is also a frame).
    pub fn is_ambient_frame(self) -> bool {
        matches!(self, Classification::Frame | Classification::RieszBasis)
    }
}

/// Optimal bounds and classification of a system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub a_opt: f64,
    pub b_opt: f64,
    pub rank: usize,
    pub spans_ambient: bool,
    pub classification: Classification,
    /// Cutoff applied to squared singular values.
    pub tol: f64,
}

/// Optimal frame/Riesz constants.
///
/// `B_opt = σ_max(U)²`. With `ambient` the lower constant is `σ_d(U)²`
/// (zero unless the system spans `ℂ^d`); otherwise it is the smallest
/// squared singular value above the cutoff, i.e. the bound on the span
/// (which is `σ_N²` for a Riesz sequence). `tol` defaults to
/// `1e−10·B_opt`.
pub fn frame_bounds(sys: &VectorSystem, ambient: bool, tol: Option<f64>) -> Result<BoundsReport> {
    let sv = numkit::singular_values(&synthesis(sys))?;
    let squares: Vec<f64> = sv.iter().map(|s| s * s).collect();
    let b_opt = squares[0];
    let tol = tol.unwrap_or(DEFAULT_REL_TOL * b_opt);
    let rank = squares.iter().filter(|&&s| s > tol).count();
    let dim = sys.dim();
    let n = sys.len();
    let spans_ambient = rank == dim;
    let classification = if rank == 0 {
        Classification::BesselOnly
    } else if rank == n && n == dim {
        Classification::RieszBasis
    } else if rank == n {
        Classification::RieszSequence
    } else if spans_ambient {
        Classification::Frame
    } else {
        Classification::FrameSequence
    };
    let a_opt = if ambient {
        if spans_ambient {
            squares[dim - 1]
        } else {
            0.0
        }
    } else if rank == 0 {
        0.0
    } else {
        squares[rank - 1]
    };
    Ok(BoundsReport {
        a_opt,
        b_opt,
        rank,
        spans_ambient,
        classification,
        tol,
    })
}

/// Frame operator `S = U U* = Σ a_k f_k (a_k f_k)*`.
pub fn frame_operator(sys: &VectorSystem) -> Matrix {
    let u = synthesis(sys);
    &u * u.adjoint()
}

/// Canonical dual `{S^† a_k f_k}` (pseudo-inverse on the span).
pub fn canonical_dual(sys: &VectorSystem, tol: Option<f64>) -> Result<VectorSystem> {
    let report = frame_bounds(sys, false, tol)?;
    if report.rank == 0 || report.a_opt <= report.tol {
        return Err(Error::NotAFrame {
            lower_bound: report.a_opt,
            tol: report.tol,
        });
    }
    let s_pinv = numkit::pinv(&frame_operator(sys), Some(report.tol))?;
    let u = synthesis(sys);
    VectorSystem::from_columns(&(s_pinv * u))
}

/// Mixed frame operator `T f = Σ ⟨f, g_k⟩ f_k`, i.e. `U_F U_G*`.
pub fn mixed_frame_operator(f: &VectorSystem, g: &VectorSystem) -> Result<Matrix> {
    if f.dim() != g.dim() || f.len() != g.len() {
        return Err(Error::InvalidInput(format!(
            "systems differ in shape: {}×{} vs {}×{}",
            f.dim(),
            f.len(),
            g.dim(),
            g.len()
        )));
    }
    Ok(synthesis(f) * synthesis(g).adjoint())
}

/// Orthonormal basis of the synthesis kernel `𝒩_U`.
#[derive(Clone, Debug)]
pub struct KernelBasis {
    pub basis: Vec<Vector>,
    pub tol: f64,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.basis.is_empty()
    }

    /// Basis as columns of an `N × k` matrix.
    pub fn as_matrix(&self, n: usize) -> Matrix {
        if self.basis.is_empty() {
            Matrix::zeros(n, 0)
        } else {
            Matrix::from_columns(&self.basis)
        }
    }
}

/// Null space of `U`, with rank decided at `tol·σ_max`.
pub fn kernel_synthesis(sys: &VectorSystem, tol: f64) -> Result<KernelBasis> {
    let k = numkit::null_space_basis(&synthesis(sys), tol)?;
    Ok(KernelBasis {
        basis: k.column_iter().map(|c| c.into_owned()).collect(),
        tol,
    })
}

/// `A_n = σ_min(U_{1..n})²` for every prefix: the optimal lower Riesz
/// bound of the first `n` vectors (zero once `n > dim`).
pub fn lower_riesz_profile(sys: &VectorSystem) -> Result<Vec<f64>> {
    let u = synthesis(sys);
    (1..=sys.len())
        .map(|n| {
            if n > sys.dim() {
                return Ok(0.0);
            }
            let sv = numkit::singular_values(&u.columns(0, n).into_owned())?;
            Ok(sv[n - 1] * sv[n - 1])
        })
        .collect()
}

/// `{T e_k}` for an orthonormal basis `{e_k}`; every Bessel sequence has
/// this form, with optimal bound `‖T‖²`.
pub fn bessel_from_operator(t: &Operator, basis: &VectorSystem) -> Result<VectorSystem> {
    require_onb(basis, t.dim())?;
    VectorSystem::new(basis.vectors().iter().map(|e| t.apply(e)).collect())
}

pub(crate) fn require_onb(basis: &VectorSystem, dim: usize) -> Result<()> {
    if basis.dim() != dim || basis.len() != dim {
        return Err(Error::InvalidInput(format!(
            "expected an orthonormal basis of ℂ^{dim}, got {} vectors in ℂ^{}",
            basis.len(),
            basis.dim()
        )));
    }
    let defect = (basis.vectors().iter().enumerate())
        .flat_map(|(i, u)| {
            basis.vectors().iter().enumerate().map(move |(j, v)| {
                let target = if i == j { 1.0 } else { 0.0 };
                (v.dotc(u) - numkit::real(target)).norm()
            })
        })
        .fold(0.0_f64, f64::max);
    if defect > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "basis is not orthonormal (Gram defect {defect:e})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{basis_vector, real, real_matrix, real_vector};

    fn e(d: usize, k: usize) -> Vector {
        basis_vector(d, k)
    }

    fn sys(vs: Vec<Vector>) -> VectorSystem {
        VectorSystem::new(vs).unwrap()
    }

    fn three_in_c2() -> VectorSystem {
        sys(vec![e(2, 0), e(2, 1), e(2, 0) + e(2, 1)])
    }

    #[test]
    fn synthesis_examples() {
        assert_eq!(synthesis(&sys(vec![e(2, 0), e(2, 1)])), Matrix::identity(2, 2));
        assert_eq!(synthesis(&three_in_c2()), real_matrix(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]));
        let weighted = sys(vec![e(3, 0), e(3, 1), e(3, 2)])
            .with_weights(vec![real(1.0), real(0.5), real(0.25)])
            .unwrap();
        let expected = real_matrix(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.25]);
        assert_eq!(synthesis(&weighted), expected);
    }

    #[test]
    fn rejects_bad_systems() {
        assert!(VectorSystem::new(vec![]).is_err());
        assert!(VectorSystem::new(vec![e(2, 0), e(3, 0)]).is_err());
        let zero_weight = sys(vec![e(2, 0), e(2, 1)]).with_weights(vec![real(1.0), real(0.0)]);
        assert!(matches!(zero_weight, Err(Error::InvalidInput(_))));
        assert!(sys(vec![e(2, 0)]).with_weights(vec![real(1.0), real(2.0)]).is_err());
    }

    #[test]
    fn bounds_examples() {
        let onb = sys((0..4).map(|k| e(4, k)).collect());
        let r = frame_bounds(&onb, true, None).unwrap();
        assert!((r.a_opt - 1.0).abs() < 1e-14 && (r.b_opt - 1.0).abs() < 1e-14);
        assert_eq!(r.classification, Classification::RieszBasis);

        let r = frame_bounds(&three_in_c2(), true, None).unwrap();
        assert!((r.a_opt - 1.0).abs() < 1e-13 && (r.b_opt - 3.0).abs() < 1e-13);
        assert_eq!(r.classification, Classification::Frame);

        let scaled = sys(vec![e(3, 0), e(3, 1).scale(0.5), e(3, 2).scale(0.25)]);
        let r = frame_bounds(&scaled, true, None).unwrap();
        assert!((r.a_opt - 1.0 / 16.0).abs() < 1e-14 && (r.b_opt - 1.0).abs() < 1e-14);
        assert_eq!(r.classification, Classification::RieszBasis);
        assert_eq!(r.rank, 3);
    }

    #[test]
    fn bounds_span_versus_ambient() {
        // Orbit of a nilpotent shift with a zero tail.
        let s = sys(vec![e(3, 0), e(3, 1), Vector::zeros(3)]);
        let amb = frame_bounds(&s, true, None).unwrap();
        let span = frame_bounds(&s, false, None).unwrap();
        assert_eq!(amb.classification, Classification::FrameSequence);
        assert_eq!(amb.a_opt, 0.0);
        assert!((span.a_opt - 1.0).abs() < 1e-14);
        assert!(!span.spans_ambient);

        let riesz_seq = sys(vec![e(3, 0), e(3, 1)]);
        assert_eq!(
            frame_bounds(&riesz_seq, false, None).unwrap().classification,
            Classification::RieszSequence
        );
        let zero = sys(vec![Vector::zeros(2)]);
        let r = frame_bounds(&zero, true, None).unwrap();
        assert_eq!(r.classification, Classification::BesselOnly);
        assert_eq!((r.a_opt, r.b_opt), (0.0, 0.0));
    }

    #[test]
    fn frame_operator_examples() {
        let onb = sys(vec![e(2, 0), e(2, 1)]);
        assert_eq!(frame_operator(&onb), Matrix::identity(2, 2));
        assert_eq!(frame_operator(&three_in_c2()), real_matrix(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        let d = 6;
        let scaled = sys((0..d).map(|k| e(d, k).scale((1.0 - 0.5f64.powi(k as i32 + 1)).sqrt())).collect());
        let s = frame_operator(&scaled);
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 - 0.5f64.powi(i as i32 + 1) } else { 0.0 };
                assert!((s[(i, j)].re - want).abs() <= 1e-15 && s[(i, j)].im == 0.0);
            }
        }
    }

    #[test]
    fn canonical_dual_examples() {
        let onb = sys(vec![e(2, 0), e(2, 1)]);
        let dual = canonical_dual(&onb, None).unwrap();
        assert_eq!(dual.vectors(), onb.vectors());

        let twice = sys(vec![e(1, 0), e(1, 0)]);
        let dual = canonical_dual(&twice, None).unwrap();
        for v in dual.vectors() {
            assert!((v[0].re - 0.5).abs() < 1e-15);
        }

        let f = three_in_c2();
        let dual = canonical_dual(&f, None).unwrap();
        for x in [real_vector(&[0.3, -1.7]), real_vector(&[2.0, 0.5])] {
            let rec: Vector = f
                .vectors()
                .iter()
                .zip(dual.vectors())
                .map(|(fk, gk)| fk * gk.dotc(&x))
                .fold(Vector::zeros(2), |a, b| a + b);
            assert!((rec - x).norm() < 1e-12);
        }
    }

    #[test]
    fn canonical_dual_of_zero_system_fails() {
        let zero = sys(vec![Vector::zeros(2), Vector::zeros(2)]);
        assert!(matches!(canonical_dual(&zero, None), Err(Error::NotAFrame { .. })));
    }

    #[test]
    fn mixed_frame_operator_examples() {
        let onb = sys(vec![e(2, 0), e(2, 1)]);
        assert_eq!(mixed_frame_operator(&onb, &onb).unwrap(), Matrix::identity(2, 2));
        let swapped = sys(vec![e(2, 1), e(2, 0)]);
        assert_eq!(
            mixed_frame_operator(&swapped, &onb).unwrap(),
            real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])
        );
        let stretched = sys(vec![e(2, 0).scale(2.0), e(2, 1)]);
        assert_eq!(
            mixed_frame_operator(&stretched, &onb).unwrap(),
            real_matrix(2, 2, &[2.0, 0.0, 0.0, 1.0])
        );
        assert!(mixed_frame_operator(&onb, &three_in_c2()).is_err());
    }

    #[test]
    fn kernel_examples() {
        assert!(kernel_synthesis(&sys(vec![e(2, 0), e(2, 1)]), 1e-10).unwrap().is_trivial());

        let k = kernel_synthesis(&three_in_c2(), 1e-10).unwrap();
        assert_eq!(k.dim(), 1);
        let c = &k.basis[0];
        let phase = c[0] / c[0].norm();
        let c = c.map(|z| z / phase);
        let want = real_vector(&[1.0, 1.0, -1.0]).unscale(3f64.sqrt());
        assert!((c - want).norm() < 1e-12);

        let k = kernel_synthesis(&sys(vec![e(1, 0), e(1, 0)]), 1e-10).unwrap();
        assert_eq!(k.dim(), 1);
        let c = &k.basis[0];
        assert!((c[0] + c[1]).norm() < 1e-12 && (c.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn riesz_profile_examples() {
        let onb = sys((0..3).map(|k| e(3, k)).collect());
        assert!(lower_riesz_profile(&onb).unwrap().iter().all(|a| (a - 1.0).abs() < 1e-14));
        let p = lower_riesz_profile(&three_in_c2()).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-14 && (p[1] - 1.0).abs() < 1e-14 && p[2] == 0.0);
        // σ_min² of [[1,1],[0,0.1]]: (2.01 − √(2.01² − 4·0.01)) / 2.
        let p = lower_riesz_profile(&sys(vec![e(2, 0), e(2, 0) + e(2, 1).scale(0.1)])).unwrap();
        let oracle = (2.01 - (2.01f64 * 2.01 - 0.04).sqrt()) / 2.0;
        assert!((p[1] - oracle).abs() < 1e-12);
        assert!((p[1] - 0.00497).abs() < 5e-5);
    }

    #[test]
    fn bessel_from_operator_examples() {
        let onb = sys(vec![e(2, 0), e(2, 1)]);
        let id = bessel_from_operator(&Operator::identity(2), &onb).unwrap();
        assert_eq!(id.vectors(), onb.vectors());

        let t = Operator::real_diagonal(&[0.5, 0.75]).unwrap();
        let b = bessel_from_operator(&t, &onb).unwrap();
        assert_eq!(b.vectors()[1], e(2, 1).scale(0.75));
        let r = frame_bounds(&b, true, None).unwrap();
        assert!((r.b_opt - 9.0 / 16.0).abs() < 1e-14);
        assert!((r.b_opt - t.norm().powi(2)).abs() < 1e-10);

        let swap = Operator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let b = bessel_from_operator(&swap, &onb).unwrap();
        assert_eq!(b.vectors(), &[e(2, 1), e(2, 0)]);

        let not_onb = sys(vec![e(2, 0), e(2, 0) + e(2, 1)]);
        assert!(bessel_from_operator(&swap, &not_onb).is_err());
    }
}
