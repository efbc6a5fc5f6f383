//! Perturbation certificates for orbit frames and Riesz sequences.
//!
//! Each certificate evaluates a hypothesis as a signed margin (positive
//! means satisfied) and, alongside it, the frame bounds of the perturbed
//! system so the conclusion can be checked independently. All quantities
//! are computed on prefixes `n < N`; geometric tails are bounded
//! analytically and added to the proof sums, which keeps verdicts on the
//! conservative side.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynsamp::{orbit, OrbitSpec, WeightSpec};
use crate::error::{Error, Result};
use crate::frames::{self, BoundsReport, VectorSystem};
use crate::numkit::{self, Matrix, Operator, Vector};
use crate::sampling;

/// Tolerance for orthonormality of subspace bases and membership tests.
pub const SUBSPACE_TOL: f64 = 1e-10;

/// An invariant subspace `V` on which `T` contracts by `mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionData {
    pub t: Operator,
    /// Orthonormal columns spanning `V`.
    pub v_basis: Matrix,
    pub mu: f64,
    /// `‖(I − P_V) T P_V‖`
    pub invariance_defect: f64,
}

impl ContractionData {
    pub fn projector(&self) -> Matrix {
        &self.v_basis * self.v_basis.adjoint()
    }

    /// Distance of `x` from `V`.
    pub fn distance(&self, x: &Vector) -> f64 {
        (x - self.projector() * x).norm()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.distance(x) <= SUBSPACE_TOL * x.norm().max(1.0)
    }
}

/// Validates `V` and measures the contraction factor of `T` on it.
pub fn contraction_data(t: &Operator, v_basis: &Matrix, tol: f64) -> Result<ContractionData> {
    let d = t.dim();
    if v_basis.nrows() != d || v_basis.ncols() == 0 || v_basis.ncols() > d {
        return Err(Error::InvalidInput(format!(
            "subspace basis of shape {}×{} for an operator on ℂ^{d}",
            v_basis.nrows(),
            v_basis.ncols()
        )));
    }
    let k = v_basis.ncols();
    let ortho = (v_basis.adjoint() * v_basis - Matrix::identity(k, k)).norm();
    if ortho > SUBSPACE_TOL {
        return Err(Error::InvalidInput(format!(
            "subspace basis is not orthonormal (defect {ortho:e})"
        )));
    }
    let tv = t.matrix() * v_basis;
    let leak = &tv - v_basis * (v_basis.adjoint() * &tv);
    let invariance_defect = numkit::operator_norm(&leak);
    if invariance_defect > tol {
        return Err(Error::InvalidHypothesis(format!(
            "subspace is not invariant (‖(I − P_V)TP_V‖ = {invariance_defect:e})"
        )));
    }
    let mu = numkit::operator_norm(&tv);
    if mu >= 1.0 {
        return Err(Error::InvalidHypothesis(format!(
            "operator does not contract on the subspace (μ = {mu})"
        )));
    }
    Ok(ContractionData {
        t: t.clone(),
        v_basis: v_basis.clone(),
        mu,
        invariance_defect,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateName {
    RieszOrbitPerturbation,
    WeightedFramePerturbation,
    ScaledGeneratorPerturbation,
    MultiGeneratorRiesz,
    /// The stated inequality `2‖φ‖ < √(A(1−λ²))`.
    TwoOperatorFrame,
    /// The operative inequality `Σ‖Tⁿφ − Wⁿφ‖² < A` used in its proof.
    TwoOperatorSum,
    TwoOperatorRieszSum,
}

impl CertificateName {
    pub const ALL: [CertificateName; 7] = [
        CertificateName::RieszOrbitPerturbation,
        CertificateName::WeightedFramePerturbation,
        CertificateName::ScaledGeneratorPerturbation,
        CertificateName::MultiGeneratorRiesz,
        CertificateName::TwoOperatorFrame,
        CertificateName::TwoOperatorSum,
        CertificateName::TwoOperatorRieszSum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CertificateName::RieszOrbitPerturbation => "riesz_orbit_perturbation",
            CertificateName::WeightedFramePerturbation => "weighted_frame_perturbation",
            CertificateName::ScaledGeneratorPerturbation => "scaled_generator_perturbation",
            CertificateName::MultiGeneratorRiesz => "multi_generator_riesz",
            CertificateName::TwoOperatorFrame => "two_operator_frame",
            CertificateName::TwoOperatorSum => "two_operator_sum",
            CertificateName::TwoOperatorRieszSum => "two_operator_riesz_sum",
        }
    }

    /// Whether the conclusion is a Riesz-sequence claim.
    pub fn concludes_riesz(self) -> bool {
        matches!(
            self,
            CertificateName::RieszOrbitPerturbation
                | CertificateName::MultiGeneratorRiesz
                | CertificateName::TwoOperatorRieszSum
        )
    }
}

impl fmt::Display for CertificateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CertificateName {
    type Err = Error;

    /// Accepts snake_case or kebab-case.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        CertificateName::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| Error::InvalidInput(format!("unknown certificate '{s}'")))
    }
}

/// Evaluated hypothesis of a perturbation result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: CertificateName,
    pub hypothesis_values: BTreeMap<String, f64>,
    /// Positive exactly when the hypothesis holds; `+∞` for a vanishing
    /// perturbation with a degenerate Bessel bound.
    pub margin: f64,
    pub verdict: bool,
    /// Bounds of the perturbed (or target) system at the same horizon.
    pub conclusion_check: Option<BoundsReport>,
}

impl Certificate {
    fn new(name: CertificateName, values: &[(&str, f64)], margin: f64, conclusion: Option<BoundsReport>) -> Self {
        Certificate {
            name,
            hypothesis_values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            margin,
            verdict: margin > 0.0,
            conclusion_check: conclusion,
        }
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.hypothesis_values.get(key).copied()
    }

    /// Whether the conclusion check shows the claimed structure.
    pub fn conclusion_holds(&self) -> Option<bool> {
        self.conclusion_check.map(|b| {
            if self.name.concludes_riesz() {
                b.classification.is_riesz()
            } else {
                b.a_opt > 0.0
            }
        })
    }
}

fn single_orbit(t: &Operator, phi: &Vector, horizon: usize, weights: Option<&WeightSpec>) -> Result<VectorSystem> {
    let mut spec = OrbitSpec::new(t.clone(), phi.clone(), horizon);
    if let Some(w) = weights {
        spec = spec.weighted(w.clone());
    }
    orbit(&spec)
}

/// Lower Riesz bound of a prefix system, or an error naming the hypothesis.
fn riesz_lower_bound(sys: &VectorSystem, what: &str) -> Result<(f64, BoundsReport)> {
    let b = frames::frame_bounds(sys, false, None)?;
    if !b.classification.is_riesz() {
        return Err(Error::HypothesisViolated(format!(
            "{what} is not a Riesz sequence at horizon (rank {} of {})",
            b.rank,
            sys.len()
        )));
    }
    Ok((b.a_opt, b))
}

/// Ambient lower bound when the system spans, otherwise the lower bound on
/// its span.
fn frame_lower_bound(sys: &VectorSystem, what: &str) -> Result<(f64, BoundsReport)> {
    let b = frames::frame_bounds(sys, sys_spans(sys)?, None)?;
    if b.a_opt <= b.tol {
        return Err(Error::HypothesisViolated(format!("{what} is not a frame at horizon")));
    }
    Ok((b.a_opt, b))
}

fn sys_spans(sys: &VectorSystem) -> Result<bool> {
    Ok(frames::frame_bounds(sys, false, None)?.spans_ambient)
}

fn require_in(cd: &ContractionData, x: &Vector, what: &str) -> Result<()> {
    if x.len() != cd.t.dim() {
        return Err(Error::InvalidInput(format!("{what} has the wrong dimension")));
    }
    if !cd.contains(x) {
        return Err(Error::InvalidHypothesis(format!(
            "{what} is not in the invariant subspace (distance {:e})",
            cd.distance(x)
        )));
    }
    Ok(())
}

/// `‖ψ‖ < (1−μ)√A` for `ψ ∈ V` and a Riesz orbit `{Tⁿφ}`. Also reports the
/// sum `Σ‖Tⁿψ‖·‖S^†Tⁿφ‖`; the perturbed prefix then has lower Riesz bound
/// at least `A(1 − sum)²`.
pub fn riesz_perturbation_certificate(
    cd: &ContractionData,
    phi: &Vector,
    psi: &Vector,
    horizon: usize,
) -> Result<Certificate> {
    require_in(cd, psi, "ψ")?;
    let base = single_orbit(&cd.t, phi, horizon, None)?;
    let (a, _) = riesz_lower_bound(&base, "{Tⁿφ}")?;
    let s_pinv = numkit::pinv(&frames::frame_operator(&base), None)?;
    let mu = cd.mu;
    let psi_norm = psi.norm();
    let threshold = (1.0 - mu) * a.sqrt();

    let mut finite = 0.0;
    let mut tn_psi = psi.clone();
    for (n, f) in base.vectors().iter().enumerate() {
        if n > 0 {
            tn_psi = cd.t.apply(&tn_psi);
        }
        finite += tn_psi.norm() * (&s_pinv * f).norm();
    }
    let tail = mu.powi(horizon as i32) * psi_norm / ((1.0 - mu) * a.sqrt());
    let total = finite + tail;

    let perturbed = single_orbit(&cd.t, &(phi + psi), horizon, None)?;
    let conclusion = frames::frame_bounds(&perturbed, false, None)?;
    Ok(Certificate::new(
        CertificateName::RieszOrbitPerturbation,
        &[
            ("lower_riesz_bound", a),
            ("mu", mu),
            ("psi_norm", psi_norm),
            ("threshold", threshold),
            ("proof_sum_finite", finite),
            ("proof_sum_tail", tail),
            ("proof_sum", total),
            ("predicted_lower_bound", a * (1.0 - finite).max(0.0).powi(2)),
        ],
        threshold - psi_norm,
        Some(conclusion),
    ))
}

/// `sup|aₙ|·‖ψ‖ < √(A(1−μ²))` for `ψ ∈ V` and a frame `{aₙTⁿφ}`.
///
/// When the base orbit does not span, `A` is its lower bound on the span
/// and the conclusion is checked on the span of the perturbed orbit.
pub fn weighted_frame_perturbation_certificate(
    cd: &ContractionData,
    phi: &Vector,
    psi: &Vector,
    weights: &WeightSpec,
    horizon: usize,
) -> Result<Certificate> {
    require_in(cd, psi, "ψ")?;
    let base = single_orbit(&cd.t, phi, horizon, Some(weights))?;
    let ambient = sys_spans(&base)?;
    let (a, _) = frame_lower_bound(&base, "{aₙTⁿφ}")?;
    let sup_a = weights.weights(horizon)?.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let mu = cd.mu;
    let psi_norm = psi.norm();
    let threshold = (a * (1.0 - mu * mu)).sqrt();

    let perturbed = single_orbit(&cd.t, &(phi + psi), horizon, Some(weights))?;
    let conclusion = frames::frame_bounds(&perturbed, ambient, None)?;
    let span_bound = frames::frame_bounds(&perturbed, false, None)?.a_opt;
    Ok(Certificate::new(
        CertificateName::WeightedFramePerturbation,
        &[
            ("lower_frame_bound", a),
            ("ambient", if ambient { 1.0 } else { 0.0 }),
            ("mu", mu),
            ("sup_weight", sup_a),
            ("psi_norm", psi_norm),
            ("threshold", threshold),
            ("perturbed_span_lower_bound", span_bound),
        ],
        threshold - sup_a * psi_norm,
        Some(conclusion),
    ))
}

/// `sup|aₙ/aₙ₊₁| < √(A/B)` with `A` the lower bound of `{aₙTⁿφ}` and `B`
/// the Bessel bound of `{aₙ₊₁Tⁿψ}`.
pub fn scaled_generator_perturbation_certificate(
    t: &Operator,
    phi: &Vector,
    psi: &Vector,
    weights: &WeightSpec,
    horizon: usize,
) -> Result<Certificate> {
    if psi.len() != t.dim() {
        return Err(Error::InvalidInput("ψ has the wrong dimension".into()));
    }
    let base = single_orbit(t, phi, horizon, Some(weights))?;
    let bounds = frames::frame_bounds(&base, true, None)?;
    if !bounds.spans_ambient {
        return Err(Error::HypothesisViolated("{aₙTⁿφ} is not a frame at horizon".into()));
    }
    let a = bounds.a_opt;
    let w = weights.weights(horizon + 1)?;
    let shifted = WeightSpec::Explicit(w[1..].to_vec());
    let b = if psi.norm() == 0.0 {
        0.0
    } else {
        frames::frame_bounds(&single_orbit(t, psi, horizon, Some(&shifted))?, false, None)?.b_opt
    };
    let sup_ratio = (0..horizon).map(|n| (w[n] / w[n + 1]).norm()).fold(0.0, f64::max);
    let threshold = if b == 0.0 { f64::INFINITY } else { (a / b).sqrt() };
    let perturbed = single_orbit(t, &(phi + psi), horizon, Some(weights))?;
    let conclusion = frames::frame_bounds(&perturbed, true, None)?;
    let predicted = (a.sqrt() - sup_ratio * b.sqrt()).max(0.0).powi(2);
    Ok(Certificate::new(
        CertificateName::ScaledGeneratorPerturbation,
        &[
            ("lower_frame_bound", a),
            ("bessel_bound", b),
            ("sup_ratio", sup_ratio),
            ("threshold", threshold),
            ("predicted_lower_bound", predicted),
        ],
        threshold - sup_ratio,
        Some(conclusion),
    ))
}

/// `Σ‖g_j‖² < (1−λ²)/(2‖S^†‖)` with `S` the frame operator of
/// `{Wⁿg_j}`. The proof sum `Σ_j Σ_n ‖Wⁿg_j − Tⁿg_j‖·‖S^†Wⁿg_j‖` (plus a
/// geometric tail) is reported against 1.
pub fn multi_generator_riesz_certificate(
    cd_w: &ContractionData,
    cd_t: &ContractionData,
    generators: &[Vector],
    horizon: usize,
) -> Result<Certificate> {
    if cd_w.t.dim() != cd_t.t.dim() {
        return Err(Error::InvalidInput("operators act on different spaces".into()));
    }
    if generators.is_empty() {
        return Err(Error::InvalidInput("no generators".into()));
    }
    for g in generators {
        require_in(cd_w, g, "generator")?;
        require_in(cd_t, g, "generator")?;
    }
    let base = orbit(&OrbitSpec::multi(cd_w.t.clone(), generators.to_vec(), horizon))?;
    let base_bounds = frames::frame_bounds(&base, false, None)?;
    if base_bounds.a_opt <= 0.0 {
        return Err(Error::HypothesisViolated("{Wⁿg_j} vanishes".into()));
    }
    let s_pinv = numkit::pinv(&frames::frame_operator(&base), None)?;
    let s_pinv_norm = 1.0 / base_bounds.a_opt;
    let lambda = cd_w.mu.max(cd_t.mu);
    let energy: f64 = generators.iter().map(|g| g.norm_squared()).sum();
    let threshold = (1.0 - lambda * lambda) / (2.0 * s_pinv_norm);

    let mut finite = 0.0;
    for g in generators {
        let (mut wg, mut tg) = (g.clone(), g.clone());
        for n in 0..horizon {
            if n > 0 {
                wg = cd_w.t.apply(&wg);
                tg = cd_t.t.apply(&tg);
            }
            finite += (&wg - &tg).norm() * (&s_pinv * &wg).norm();
        }
    }
    let tail = 2.0 * s_pinv_norm * lambda.powi(2 * horizon as i32) * energy / (1.0 - lambda * lambda);

    let target = orbit(&OrbitSpec::multi(cd_t.t.clone(), generators.to_vec(), horizon))?;
    let conclusion = frames::frame_bounds(&target, false, None)?;
    Ok(Certificate::new(
        CertificateName::MultiGeneratorRiesz,
        &[
            ("lambda", lambda),
            ("pinv_norm", s_pinv_norm),
            ("generator_energy", energy),
            ("threshold", threshold),
            ("base_is_riesz", if base_bounds.classification.is_riesz() { 1.0 } else { 0.0 }),
            ("proof_sum_finite", finite),
            ("proof_sum_tail", tail),
            ("proof_sum", finite + tail),
        ],
        threshold - energy,
        Some(conclusion),
    ))
}

struct TwoOperatorSetup {
    a: f64,
    ambient: bool,
    lambda: f64,
    phi_norm: f64,
    sum_finite: f64,
    sum_tail: f64,
}

fn two_operator_setup(
    cd_t: &ContractionData,
    cd_w: &ContractionData,
    phi: &Vector,
    horizon: usize,
    riesz: bool,
) -> Result<TwoOperatorSetup> {
    if cd_w.t.dim() != cd_t.t.dim() {
        return Err(Error::InvalidInput("operators act on different spaces".into()));
    }
    require_in(cd_t, phi, "φ")?;
    require_in(cd_w, phi, "φ")?;
    let base = single_orbit(&cd_t.t, phi, horizon, None)?;
    let ambient = sys_spans(&base)?;
    let (a, _) = if riesz {
        riesz_lower_bound(&base, "{Tⁿφ}")?
    } else {
        frame_lower_bound(&base, "{Tⁿφ}")?
    };
    let lambda = cd_t.mu.max(cd_w.mu);
    let (mut tp, mut wp) = (phi.clone(), phi.clone());
    let mut sum_finite = 0.0;
    for n in 0..horizon {
        if n > 0 {
            tp = cd_t.t.apply(&tp);
            wp = cd_w.t.apply(&wp);
        }
        sum_finite += (&tp - &wp).norm_squared();
    }
    let sum_tail = 4.0 * phi.norm_squared() * lambda.powi(2 * horizon as i32) / (1.0 - lambda * lambda);
    Ok(TwoOperatorSetup {
        a,
        ambient,
        lambda,
        phi_norm: phi.norm(),
        sum_finite,
        sum_tail,
    })
}

/// The stated inequality `2‖φ‖ < √(A(1−λ²))` and the operative
/// `Σ‖Tⁿφ − Wⁿφ‖² < A`, each with the bounds of `{Wⁿφ}` as conclusion.
pub fn two_operator_certificates(
    cd_t: &ContractionData,
    cd_w: &ContractionData,
    phi: &Vector,
    horizon: usize,
) -> Result<(Certificate, Certificate)> {
    let s = two_operator_setup(cd_t, cd_w, phi, horizon, false)?;
    let target = single_orbit(&cd_w.t, phi, horizon, None)?;
    let conclusion = frames::frame_bounds(&target, s.ambient, None)?;
    let threshold = (s.a * (1.0 - s.lambda * s.lambda)).sqrt();
    let frame = Certificate::new(
        CertificateName::TwoOperatorFrame,
        &[
            ("lower_frame_bound", s.a),
            ("lambda", s.lambda),
            ("phi_norm", s.phi_norm),
            ("threshold", threshold),
        ],
        threshold - 2.0 * s.phi_norm,
        Some(conclusion),
    );
    let sum = s.sum_finite + s.sum_tail;
    let predicted = (s.a.sqrt() - s.sum_finite.sqrt()).max(0.0).powi(2);
    let sum_cert = Certificate::new(
        CertificateName::TwoOperatorSum,
        &[
            ("lower_frame_bound", s.a),
            ("ambient", if s.ambient { 1.0 } else { 0.0 }),
            ("lambda", s.lambda),
            ("difference_sum_finite", s.sum_finite),
            ("difference_sum_tail", s.sum_tail),
            ("difference_sum", sum),
            ("predicted_lower_bound", predicted),
        ],
        s.a - sum,
        Some(conclusion),
    );
    Ok((frame, sum_cert))
}

/// Riesz variant: `‖φ‖ < √(A(1−λ²))` with `A` the lower Riesz bound of
/// `{Tⁿφ}`; the conclusion concerns `{Tⁿφ + Wⁿφ}`.
pub fn two_operator_riesz_certificate(
    cd_t: &ContractionData,
    cd_w: &ContractionData,
    phi: &Vector,
    horizon: usize,
) -> Result<Certificate> {
    let s = two_operator_setup(cd_t, cd_w, phi, horizon, true)?;
    let (mut tp, mut wp) = (phi.clone(), phi.clone());
    let mut combined = Vec::with_capacity(horizon);
    for n in 0..horizon {
        if n > 0 {
            tp = cd_t.t.apply(&tp);
            wp = cd_w.t.apply(&wp);
        }
        combined.push(&tp + &wp);
    }
    let conclusion = frames::frame_bounds(&VectorSystem::new(combined)?, false, None)?;
    let threshold = (s.a * (1.0 - s.lambda * s.lambda)).sqrt();
    let sum = s.sum_finite + s.sum_tail;
    Ok(Certificate::new(
        CertificateName::TwoOperatorRieszSum,
        &[
            ("lower_riesz_bound", s.a),
            ("lambda", s.lambda),
            ("phi_norm", s.phi_norm),
            ("threshold", threshold),
            ("difference_sum", sum),
            // {Tⁿφ + Wⁿφ} = {2Tⁿφ} + {Wⁿφ − Tⁿφ}
            ("operative_margin", 2.0 * s.a.sqrt() - sum.sqrt()),
        ],
        threshold - s.phi_norm,
        Some(conclusion),
    ))
}

/// One evaluated instance of the block-contraction gallery.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GalleryEntry {
    pub label: String,
    pub horizon: usize,
    pub certificate: Certificate,
    /// The same instance at twice the horizon (frame certificates only).
    pub doubled: Option<Certificate>,
}

/// `shift_k ⊕ diag(tail)` with `V` spanned by the coordinates of the tail.
fn block_contraction(k: usize, tail: &[f64]) -> Result<(Operator, Matrix)> {
    let t = Operator::block_diag(&[Operator::nilpotent_shift(k), Operator::real_diagonal(tail)?])?;
    let d = k + tail.len();
    let v = Matrix::from_fn(d, tail.len(), |i, j| numkit::real(if i == k + j { 1.0 } else { 0.0 }));
    Ok((t, v))
}

/// Curated instances of every certificate on block contractions, with
/// perturbation sizes on both sides of each threshold.
pub fn gallery() -> Result<Vec<GalleryEntry>> {
    let mut out = Vec::new();
    let e = numkit::basis_vector;

    let (t, v) = block_contraction(2, &[0.5])?;
    let cd = contraction_data(&t, &v, SUBSPACE_TOL)?;
    for s in [0.0, 0.1, 0.25, 0.4, 0.45, 0.6] {
        out.push(GalleryEntry {
            label: format!("riesz shift2+1/2 φ=δ1 ψ={s}δ3"),
            horizon: 2,
            certificate: riesz_perturbation_certificate(&cd, &e(3, 0), &e(3, 2).scale(s), 2)?,
            doubled: None,
        });
    }

    let (t, v) = block_contraction(3, &[0.3, -0.6])?;
    let cd = contraction_data(&t, &v, SUBSPACE_TOL)?;
    let phi = numkit::real_vector(&[1.0, 0.5, 0.25, 0.0, 0.0]);
    let dir = numkit::real_vector(&[0.0, 0.0, 0.0, 0.6, 0.8]);
    for s in [0.05, 0.1, 0.2, 0.5] {
        out.push(GalleryEntry {
            label: format!("riesz shift3+diag(0.3,-0.6) ψ={s}·u"),
            horizon: 3,
            certificate: riesz_perturbation_certificate(&cd, &phi, &dir.scale(s), 3)?,
            doubled: None,
        });
    }

    // Spanning frame cases: diag(1/2) ⊕ diag(0.3) with V = span{δ₂}.
    let t = Operator::real_diagonal(&[0.5, 0.3])?;
    let v = Matrix::from_fn(2, 1, |i, _| numkit::real(if i == 1 { 1.0 } else { 0.0 }));
    let cd = contraction_data(&t, &v, SUBSPACE_TOL)?;
    let phi = numkit::real_vector(&[1.0, 1.0]);
    for (w, wl) in [(WeightSpec::Constant(numkit::real(1.0)), "a≡1"), (WeightSpec::Geometric(0.9), "a=0.9ⁿ")] {
        for s in [0.0, 0.05, 0.1, 0.5] {
            let psi = e(2, 1).scale(s);
            out.push(GalleryEntry {
                label: format!("weighted diag(1/2,0.3) {wl} ψ={s}δ2"),
                horizon: 16,
                certificate: weighted_frame_perturbation_certificate(&cd, &phi, &psi, &w, 16)?,
                doubled: Some(weighted_frame_perturbation_certificate(&cd, &phi, &psi, &w, 32)?),
            });
        }
    }

    let shift = Operator::nilpotent_shift(2);
    let ones = WeightSpec::Constant(numkit::real(1.0));
    for s in [0.0, 0.1, 0.5, 1.0] {
        out.push(GalleryEntry {
            label: format!("scaled shift2 φ=δ1 ψ={s}δ1"),
            horizon: 2,
            certificate: scaled_generator_perturbation_certificate(&shift, &e(2, 0), &e(2, 0).scale(s), &ones, 2)?,
            doubled: Some(scaled_generator_perturbation_certificate(&shift, &e(2, 0), &e(2, 0).scale(s), &ones, 4)?),
        });
    }

    let half = Operator::real_diagonal(&[0.5])?;
    let quarter = Operator::real_diagonal(&[0.25])?;
    let whole = Matrix::identity(1, 1);
    let cd_t = contraction_data(&half, &whole, SUBSPACE_TOL)?;
    let cd_w = contraction_data(&quarter, &whole, SUBSPACE_TOL)?;
    let (frame, sum) = two_operator_certificates(&cd_t, &cd_w, &e(1, 0), 60)?;
    let (frame2, sum2) = two_operator_certificates(&cd_t, &cd_w, &e(1, 0), 120)?;
    out.push(GalleryEntry {
        label: "two-operator T=1/2 W=1/4 φ=1 (stated)".into(),
        horizon: 60,
        certificate: frame,
        doubled: Some(frame2),
    });
    out.push(GalleryEntry {
        label: "two-operator T=1/2 W=1/4 φ=1 (operative)".into(),
        horizon: 60,
        certificate: sum,
        doubled: Some(sum2),
    });
    for s in [0.5, 1.0] {
        out.push(GalleryEntry {
            label: format!("multi-generator W=1/2 T=1/4 g={s}"),
            horizon: 1,
            certificate: multi_generator_riesz_certificate(&cd_t, &cd_w, &[e(1, 0).scale(s)], 1)?,
            doubled: None,
        });
    }
    Ok(out)
}

/// One instance with positive margin found by [`satisfiability_search`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchInstance {
    pub trial: u64,
    pub dim: usize,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub certificate: CertificateName,
    pub tried: u64,
    pub satisfying_instances: Vec<SearchInstance>,
    /// Trials whose sampled instance violated a base hypothesis.
    pub rejected: u64,
    /// Largest margin among evaluated trials.
    pub max_margin: f64,
}

/// Random contraction of the given norm on `ℂ^k`.
fn contraction<R: Rng + ?Sized>(rng: &mut R, k: usize, norm: f64) -> Matrix {
    sampling::matrix_with_norm(rng, k, norm)
}

/// `Q (A ⊕ B) Q*` with `A` on the first `k` coordinates.
fn conjugated_block(q: &Matrix, a: &Matrix, b: &Matrix) -> Result<Operator> {
    let d = q.nrows();
    let k = a.nrows();
    let mut m = Matrix::zeros(d, d);
    m.view_mut((0, 0), (k, k)).copy_from(a);
    m.view_mut((k, k), (d - k, d - k)).copy_from(b);
    Operator::new(q * m * q.adjoint())
}

fn vector_in<R: Rng + ?Sized>(rng: &mut R, v: &Matrix, norm: f64) -> Vector {
    let c = sampling::gaussian_vector(rng, v.ncols());
    let x = v * c;
    let n = x.norm();
    x.scale(norm / n)
}

fn search_trial(name: CertificateName, seed: u64, trial: u64) -> (usize, Result<Certificate>) {
    let mut rng = sampling::substream(seed, trial);
    let d: usize = rng.random_range(2..=8);
    let q = sampling::random_unitary(&mut rng, d);
    let cert = (|| -> Result<Certificate> {
        match name {
            CertificateName::RieszOrbitPerturbation | CertificateName::WeightedFramePerturbation => {
                // shift_k ⊕ contraction on V, hidden by a unitary change of basis.
                let k = rng.random_range(1..d);
                let mu = rng.random_range(0.0..0.95);
                let a = Operator::nilpotent_shift(k).into_matrix();
                let b = contraction(&mut rng, d - k, mu);
                let t = conjugated_block(&q, &a, &b)?;
                let v = q.columns(k, d - k).into_owned();
                let cd = contraction_data(&t, &v, 1e-9)?;
                let mut head = sampling::gaussian_vector(&mut rng, k).scale(0.3);
                head[0] = numkit::real(1.0);
                let mut local = Vector::zeros(d);
                local.rows_mut(0, k).copy_from(&head);
                let phi = &q * local;
                let psi_norm = rng.random_range(0.0..1.0);
                let psi = vector_in(&mut rng, &v, psi_norm);
                if name == CertificateName::RieszOrbitPerturbation {
                    riesz_perturbation_certificate(&cd, &phi, &psi, k)
                } else {
                    let w = WeightSpec::Geometric(rng.random_range(0.5..1.0));
                    weighted_frame_perturbation_certificate(&cd, &(phi + sampling::gaussian_vector(&mut rng, d)), &psi, &w, 2 * d)
                }
            }
            CertificateName::ScaledGeneratorPerturbation => {
                let norm = rng.random_range(0.1..0.95);
                let t = Operator::new(contraction(&mut rng, d, norm))?;
                let phi = sampling::gaussian_vector(&mut rng, d);
                let size = rng.random_range(0.0..0.5);
                let psi = sampling::gaussian_vector(&mut rng, d).scale(size);
                let w = WeightSpec::Geometric(rng.random_range(0.5..1.5));
                scaled_generator_perturbation_certificate(&t, &phi, &psi, &w, 2 * d)
            }
            _ => {
                // Two contractions sharing the invariant block V = first k columns of Q.
                let k = rng.random_range(1..=d);
                let (mu_w, mu_t) = (rng.random_range(0.0..0.95), rng.random_range(0.0..0.95));
                let (aw, at) = (contraction(&mut rng, k, mu_w), contraction(&mut rng, k, mu_t));
                let (bw, bt) = (
                    sampling::gaussian_matrix(&mut rng, d - k, d - k),
                    sampling::gaussian_matrix(&mut rng, d - k, d - k),
                );
                let w_op = conjugated_block(&q, &aw, &bw)?;
                let t_op = conjugated_block(&q, &at, &bt)?;
                let v = q.columns(0, k).into_owned();
                let cd_w = contraction_data(&w_op, &v, 1e-9)?;
                let cd_t = contraction_data(&t_op, &v, 1e-9)?;
                let scale = 10f64.powf(rng.random_range(-2.0..1.0));
                match name {
                    CertificateName::MultiGeneratorRiesz => {
                        let m = rng.random_range(1..=k.min(2));
                        let gens: Vec<Vector> = (0..m).map(|_| vector_in(&mut rng, &v, scale)).collect();
                        multi_generator_riesz_certificate(&cd_w, &cd_t, &gens, (k / m).max(1))
                    }
                    CertificateName::TwoOperatorRieszSum => {
                        let phi = vector_in(&mut rng, &v, scale);
                        two_operator_riesz_certificate(&cd_t, &cd_w, &phi, k)
                    }
                    _ => {
                        let phi = vector_in(&mut rng, &v, scale);
                        let horizon = rng.random_range(1..=2 * d);
                        let (frame, sum) = two_operator_certificates(&cd_t, &cd_w, &phi, horizon)?;
                        Ok(if name == CertificateName::TwoOperatorFrame { frame } else { sum })
                    }
                }
            }
        }
    })();
    (d, cert)
}

/// Samples `trials` random instances (dimension ≤ 8, random contractions,
/// invariant subspaces and generators) and returns those with positive
/// margin. Trial `i` draws from substream `i` of `seed`, so the result
/// does not depend on scheduling.
pub fn satisfiability_search(name: CertificateName, trials: u64, seed: u64) -> Result<SearchReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let results: Vec<(u64, usize, Result<Certificate>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (d, c) = search_trial(name, seed, i);
            (i, d, c)
        })
        .collect();
    let mut report = SearchReport {
        certificate: name,
        tried: trials,
        satisfying_instances: Vec::new(),
        rejected: 0,
        max_margin: f64::NEG_INFINITY,
    };
    for (trial, dim, cert) in results {
        match cert {
            Ok(c) => {
                report.max_margin = report.max_margin.max(c.margin);
                if c.verdict {
                    report.satisfying_instances.push(SearchInstance {
                        trial,
                        dim,
                        margin: c.margin,
                    });
                }
            }
            Err(_) => report.rejected += 1,
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::Classification;
    use crate::numkit::{basis_vector as e, real};
    use proptest::prelude::*;

    fn block() -> ContractionData {
        let (t, v) = block_contraction(2, &[0.5]).unwrap();
        contraction_data(&t, &v, 1e-12).unwrap()
    }

    fn scalar(x: f64) -> ContractionData {
        contraction_data(&Operator::real_diagonal(&[x]).unwrap(), &Matrix::identity(1, 1), 1e-12).unwrap()
    }

    #[test]
    fn contraction_data_examples() {
        let cd = block();
        assert!((cd.mu - 0.5).abs() < 1e-15);
        assert_eq!(cd.invariance_defect, 0.0);

        let t = Operator::real_diagonal(&[0.3, -0.7]).unwrap();
        let cd = contraction_data(&t, &Matrix::identity(2, 2), 1e-12).unwrap();
        assert!((cd.mu - t.norm()).abs() < 1e-15);

        let v = Matrix::from_fn(2, 1, |i, _| real(if i == 0 { 1.0 } else { 0.0 }));
        assert!(matches!(
            contraction_data(&Operator::nilpotent_shift(2), &v, 1e-12),
            Err(Error::InvalidHypothesis(_))
        ));
        let skew = Matrix::from_fn(2, 1, |_, _| real(1.0));
        assert!(matches!(
            contraction_data(&t, &skew, 1e-12),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn riesz_certificate_examples() {
        let cd = block();
        let c = riesz_perturbation_certificate(&cd, &e(3, 0), &e(3, 2).scale(0.4), 2).unwrap();
        assert!((c.margin - 0.1).abs() < 1e-14);
        assert!(c.verdict);
        assert!((c.value("proof_sum_finite").unwrap() - 0.6).abs() < 1e-14);
        assert!((c.value("proof_sum_tail").unwrap() - 0.2).abs() < 1e-14);
        assert!(c.value("proof_sum").unwrap() < 1.0);
        let b = c.conclusion_check.unwrap();
        assert_eq!(b.classification, Classification::RieszSequence);
        // Oracle: Gram matrix [[1.16, 0.08], [0.08, 1.04]] of (δ₁+0.4δ₃, δ₂+0.2δ₃).
        let (p, q, r) = (1.16, 0.08, 1.04);
        let lmin = (p + r) / 2.0 - (((p - r) / 2.0f64).powi(2) + q * q).sqrt();
        assert!((b.a_opt - lmin).abs() < 1e-12);
        assert!(b.a_opt >= 0.16 - 1e-8);

        let c = riesz_perturbation_certificate(&cd, &e(3, 0), &Vector::zeros(3), 2).unwrap();
        assert!((c.margin - 0.5).abs() < 1e-15);
        assert!((c.conclusion_check.unwrap().a_opt - 1.0).abs() < 1e-14);

        let c = riesz_perturbation_certificate(&cd, &e(3, 0), &e(3, 2).scale(0.6), 2).unwrap();
        assert!((c.margin + 0.1).abs() < 1e-14);
        assert!(!c.verdict);

        assert!(matches!(
            riesz_perturbation_certificate(&cd, &e(3, 0), &e(3, 2), 3),
            Err(Error::HypothesisViolated(_))
        ));
        assert!(matches!(
            riesz_perturbation_certificate(&cd, &e(3, 0), &e(3, 0), 2),
            Err(Error::InvalidHypothesis(_))
        ));
    }

    #[test]
    fn weighted_frame_examples() {
        let cd = block();
        let ones = WeightSpec::Constant(real(1.0));
        let threshold = 0.75f64.sqrt();
        for (t, ok) in [(0.5, true), (0.86, true), (0.87, false)] {
            let c = weighted_frame_perturbation_certificate(&cd, &e(3, 0), &e(3, 2).scale(t), &ones, 2).unwrap();
            assert!((c.margin - (threshold - t)).abs() < 1e-14);
            assert_eq!(c.verdict, ok);
        }
        let c = weighted_frame_perturbation_certificate(&cd, &e(3, 0), &e(3, 2).scale(0.5), &ones, 2).unwrap();
        // SVD oracle: perturbed synthesis has columns (1,0,0.5), (0,1,0.25).
        let u = numkit::real_matrix(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.25]);
        let sv = numkit::singular_values(&u).unwrap();
        assert!((c.conclusion_check.unwrap().a_opt - sv[1] * sv[1]).abs() < 1e-12);
        assert!(c.value("perturbed_span_lower_bound").unwrap() > 0.0);

        let c = weighted_frame_perturbation_certificate(&cd, &e(3, 0), &Vector::zeros(3), &ones, 2).unwrap();
        assert!((c.margin - threshold).abs() < 1e-14);

        let geo = WeightSpec::Geometric(0.5);
        let c = weighted_frame_perturbation_certificate(&cd, &e(3, 0), &e(3, 2).scale(2.0), &geo, 2).unwrap();
        assert_eq!(c.value("sup_weight"), Some(1.0));
        assert!(!c.verdict);
    }

    #[test]
    fn scaled_generator_examples() {
        let t = Operator::nilpotent_shift(2);
        let ones = WeightSpec::Constant(real(1.0));
        let c = scaled_generator_perturbation_certificate(&t, &e(2, 0), &e(2, 0).scale(0.1), &ones, 2).unwrap();
        assert!((c.value("bessel_bound").unwrap() - 0.01).abs() < 1e-15);
        assert!((c.margin - 9.0).abs() < 1e-12);
        let b = c.conclusion_check.unwrap();
        assert!((b.a_opt - 1.21).abs() < 1e-12 && (b.b_opt - 1.21).abs() < 1e-12);
        assert!(b.classification.is_ambient_frame());

        let c = scaled_generator_perturbation_certificate(&t, &e(2, 0), &Vector::zeros(2), &ones, 2).unwrap();
        assert_eq!(c.margin, f64::INFINITY);
        assert!(c.verdict);
        assert!((c.conclusion_check.unwrap().a_opt - 1.0).abs() < 1e-14);

        let c = scaled_generator_perturbation_certificate(&t, &e(2, 0), &e(2, 0), &ones, 2).unwrap();
        assert!(c.margin <= 0.0);

        assert!(matches!(
            scaled_generator_perturbation_certificate(&t, &e(2, 1), &e(2, 0), &ones, 2),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn multi_generator_examples() {
        let cd = scalar(0.5);
        let c = multi_generator_riesz_certificate(&cd, &cd, &[e(1, 0).scale(0.2)], 1).unwrap();
        assert_eq!(c.value("proof_sum_finite"), Some(0.0));

        // W = 1/2, T = 1/4, g = t: the infinite-orbit margin is −t²/2.
        let (w, t) = (scalar(0.5), scalar(0.25));
        for s in [0.3, 1.0, 2.0] {
            let c = multi_generator_riesz_certificate(&w, &t, &[e(1, 0).scale(s)], 80).unwrap();
            assert!((c.margin + s * s / 2.0).abs() < 1e-12 * s * s.max(1.0));
            assert!(!c.verdict);
            assert_eq!(c.value("base_is_riesz"), Some(0.0));
        }

        let (tb, vb) = block_contraction(2, &[0.5]).unwrap();
        let cdb = contraction_data(&tb, &vb, 1e-12).unwrap();
        assert!(matches!(
            multi_generator_riesz_certificate(&cdb, &cdb, &[e(3, 0)], 1),
            Err(Error::InvalidHypothesis(_))
        ));
    }

    #[test]
    fn two_operator_scalar_instance() {
        let (t, w) = (scalar(0.5), scalar(0.25));
        let (frame, sum) = two_operator_certificates(&t, &w, &e(1, 0), 60).unwrap();
        assert!((frame.value("lower_frame_bound").unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((frame.value("threshold").unwrap() - 1.0).abs() < 1e-12);
        assert!((frame.margin + 1.0).abs() < 1e-12);
        assert!(!frame.verdict);

        let expected = 4.0 / 3.0 - 16.0 / 7.0 + 16.0 / 15.0;
        assert!((sum.value("difference_sum").unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.11429).abs() < 1e-5);
        assert!(sum.verdict);
        let b = sum.conclusion_check.unwrap();
        assert!((b.a_opt - 16.0 / 15.0).abs() < 1e-12);
        let a = sum.value("lower_frame_bound").unwrap();
        assert!(b.a_opt >= (a.sqrt() - expected.sqrt()).powi(2) - 1e-8);

        let (_, same) = two_operator_certificates(&t, &t, &e(1, 0), 10).unwrap();
        assert_eq!(same.value("difference_sum_finite"), Some(0.0));
    }

    #[test]
    fn two_operator_riesz_variant() {
        let (t, w) = (scalar(0.5), scalar(0.25));
        let c = two_operator_riesz_certificate(&t, &w, &e(1, 0).scale(0.5), 1).unwrap();
        assert!((c.value("lower_riesz_bound").unwrap() - 0.25).abs() < 1e-15);
        assert!((c.margin - (0.25f64 * 0.75).sqrt() + 0.5).abs() < 1e-15);
        assert!(!c.verdict);
        assert!(matches!(
            two_operator_riesz_certificate(&t, &w, &e(1, 0), 2),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn certificate_names_round_trip() {
        for c in CertificateName::ALL {
            assert_eq!(c.as_str().parse::<CertificateName>().unwrap(), c);
            assert_eq!(c.as_str().replace('_', "-").parse::<CertificateName>().unwrap(), c);
        }
        assert!("nope".parse::<CertificateName>().is_err());
    }

    #[test]
    fn gallery_conclusions_hold() {
        for g in gallery().unwrap() {
            let c = &g.certificate;
            assert_eq!(c.verdict, c.margin > 0.0, "{}", g.label);
            if c.verdict {
                assert_eq!(c.conclusion_holds(), Some(true), "{}", g.label);
            }
        }
    }

    #[test]
    fn search_is_deterministic() {
        let a = satisfiability_search(CertificateName::RieszOrbitPerturbation, 60, 11).unwrap();
        let b = satisfiability_search(CertificateName::RieszOrbitPerturbation, 60, 11).unwrap();
        assert_eq!(a, b);
        assert!(!a.satisfying_instances.is_empty());
        assert!(satisfiability_search(CertificateName::TwoOperatorFrame, 0, 1).is_err());
    }

    #[test]
    fn searched_riesz_instances_satisfy_the_perturbation_bound() {
        for i in 0..200 {
            let (_, c) = search_trial(CertificateName::RieszOrbitPerturbation, 5, i);
            let Ok(c) = c else { continue };
            if !c.verdict {
                continue;
            }
            let sum = c.value("proof_sum").unwrap();
            let a = c.value("lower_riesz_bound").unwrap();
            assert!(sum < 1.0);
            assert!(c.conclusion_check.unwrap().a_opt >= a * (1.0 - sum).powi(2) - 1e-8);
        }
    }

    #[test]
    fn scaled_generator_verdict_implies_frame() {
        let mut checked = 0;
        for i in 0..200 {
            let (_, c) = search_trial(CertificateName::ScaledGeneratorPerturbation, 3, i);
            let Ok(c) = c else { continue };
            if c.verdict {
                checked += 1;
                let b = c.conclusion_check.unwrap();
                assert!(b.classification.is_ambient_frame());
                assert!(b.a_opt >= c.value("predicted_lower_bound").unwrap() - 1e-8);
            }
        }
        assert!(checked > 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn halving_the_perturbation_keeps_a_true_verdict(
            s in 0.0f64..1.0,
            mu in 0.0f64..0.95,
            x in -1.0f64..1.0,
            r in 0.5f64..1.0,
        ) {
            let (t, v) = block_contraction(2, &[mu]).unwrap();
            let cd = contraction_data(&t, &v, 1e-12).unwrap();
            let phi = numkit::real_vector(&[1.0, x, 0.0]);
            let psi = e(3, 2).scale(s);
            let half = psi.scale(0.5);
            let c1 = riesz_perturbation_certificate(&cd, &phi, &psi, 2).unwrap();
            let c2 = riesz_perturbation_certificate(&cd, &phi, &half, 2).unwrap();
            prop_assert!(!c1.verdict || c2.verdict);
            let w = WeightSpec::Geometric(r);
            let c1 = weighted_frame_perturbation_certificate(&cd, &phi, &psi, &w, 2).unwrap();
            let c2 = weighted_frame_perturbation_certificate(&cd, &phi, &half, &w, 2).unwrap();
            prop_assert!(!c1.verdict || c2.verdict);

            let sh = Operator::nilpotent_shift(2);
            let p2 = numkit::real_vector(&[1.0, x]);
            let q2 = numkit::real_vector(&[s, x * s]);
            let c1 = scaled_generator_perturbation_certificate(&sh, &p2, &q2, &w, 2).unwrap();
            let c2 = scaled_generator_perturbation_certificate(&sh, &p2, &q2.scale(0.5), &w, 2).unwrap();
            prop_assert!(!c1.verdict || c2.verdict);

            let (ct, cw) = (scalar(mu), scalar(mu * r));
            let g = e(1, 0).scale(s + 0.01);
            let (f1, s1) = two_operator_certificates(&ct, &cw, &g, 8).unwrap();
            let (f2, s2) = two_operator_certificates(&ct, &cw, &g.scale(0.5), 8).unwrap();
            prop_assert!(!f1.verdict || f2.verdict);
            prop_assert!(!s1.verdict || s2.verdict);
            let m1 = multi_generator_riesz_certificate(&cw, &ct, std::slice::from_ref(&g), 1).unwrap();
            let m2 = multi_generator_riesz_certificate(&cw, &ct, &[g.scale(0.5)], 1).unwrap();
            prop_assert!(!m1.verdict || m2.verdict);
        }
    }
}
