//! Operator orbits `{aₙTⁿφ}` and checkers for their frame properties.
//!
//! Infinite `ℕ₀`-orbits are represented two ways: exactly, through the
//! Stein solution `S = Σ Tⁿφφ*T*ⁿ` when `ρ(T) < 1`, and by truncation at
//! a horizon with an explicit tail bound. `ℤ`-orbits are modelled by
//! periodic operators (`T^p = I`) over one period, where the identities
//! `TST* = S` and unitarity of `S^{-1/2}TS^{1/2}` hold exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{self, BoundsReport, IndexModel, Provenance, VectorSystem};
use crate::numkit::{self, Matrix, Operator, SteinSolution, Vector, C64};
use crate::sampling;

/// `⟨u, v⟩`, linear in the first argument.
pub fn inner(u: &Vector, v: &Vector) -> C64 {
    v.dotc(u)
}

/// Scalar sequence `{aₙ}` attached to an orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    /// `aₙ = c`
    Constant(C64),
    /// `aₙ = rⁿ`
    Geometric(f64),
    Explicit(Vec<C64>),
}

impl WeightSpec {
    /// `a_0, …, a_{n−1}`; every entry must be nonzero.
    pub fn weights(&self, n: usize) -> Result<Vec<C64>> {
        let w: Vec<C64> = match self {
            WeightSpec::Constant(c) => vec![*c; n],
            WeightSpec::Geometric(r) => (0..n).map(|k| numkit::real(r.powi(k as i32))).collect(),
            WeightSpec::Explicit(v) => {
                if v.len() < n {
                    return Err(Error::InvalidInput(format!(
                        "{} explicit weights for horizon {n}",
                        v.len()
                    )));
                }
                v[..n].to_vec()
            }
        };
        if let Some(k) = w.iter().position(|a| !(a.norm() > 0.0) || !a.norm().is_finite()) {
            return Err(Error::InvalidInput(format!(
                "weight a_{k} = {} violates the nonzero-scalar hypothesis",
                w[k]
            )));
        }
        Ok(w)
    }
}

/// An orbit `{aₙTⁿφ : φ ∈ 𝒢, 0 ≤ n < horizon}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSpec {
    pub operator: Operator,
    pub generators: Vec<Vector>,
    pub weights: Option<WeightSpec>,
    pub horizon: usize,
    pub index_model: IndexModel,
}

impl OrbitSpec {
    pub fn new(operator: Operator, generator: Vector, horizon: usize) -> Self {
        Self::multi(operator, vec![generator], horizon)
    }

    pub fn multi(operator: Operator, generators: Vec<Vector>, horizon: usize) -> Self {
        Self {
            operator,
            generators,
            weights: None,
            horizon,
            index_model: IndexModel::Natural,
        }
    }

    pub fn weighted(mut self, weights: WeightSpec) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn periodic(mut self, period: usize) -> Self {
        self.index_model = IndexModel::Periodic { period };
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.operator.dim();
        if self.horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        if self.generators.is_empty() {
            return Err(Error::InvalidInput("an orbit needs at least one generator".into()));
        }
        if let Some(g) = self.generators.iter().find(|g| g.len() != d) {
            return Err(Error::InvalidInput(format!(
                "generator of dimension {} for an operator on ℂ^{d}",
                g.len()
            )));
        }
        if let IndexModel::Periodic { period } = self.index_model {
            check_periodic(&self.operator, period)?;
        }
        Ok(())
    }
}

/// Requires `‖T^p − I‖_F ≤ 1e−10`.
pub fn check_periodic(t: &Operator, period: usize) -> Result<()> {
    if period == 0 {
        return Err(Error::InvalidInput("period must be at least 1".into()));
    }
    let d = t.dim();
    let defect = (t.pow(period).matrix() - Matrix::identity(d, d)).norm();
    if defect > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "operator is not periodic with period {period} (‖T^p − I‖_F = {defect:e})"
        )));
    }
    Ok(())
}

/// Smallest `p ≤ max_period` with `T^p = I`, if any.
pub fn find_period(t: &Operator, max_period: usize) -> Option<usize> {
    let d = t.dim();
    let id = Matrix::identity(d, d);
    let mut p = t.matrix().clone();
    for k in 1..=max_period {
        if (&p - &id).norm() <= 1e-10 {
            return Some(k);
        }
        p = &p * t.matrix();
    }
    None
}

/// Orbit system, generator-major: `a₀φ_j, a₁Tφ_j, …, a_{N−1}T^{N−1}φ_j`
/// for each generator in turn.
pub fn orbit(spec: &OrbitSpec) -> Result<VectorSystem> {
    spec.validate()?;
    let n = spec.horizon;
    let mut vectors = Vec::with_capacity(n * spec.generators.len());
    for g in &spec.generators {
        let mut v = g.clone();
        for k in 0..n {
            if k > 0 {
                v = spec.operator.apply(&v);
            }
            vectors.push(v.clone());
        }
    }
    let mut sys = VectorSystem::new(vectors)?;
    if let Some(ws) = &spec.weights {
        let w = ws.weights(n)?;
        let all = spec.generators.iter().flat_map(|_| w.iter().copied()).collect();
        sys = sys.with_weights(all)?;
    }
    Ok(sys.with_provenance(Provenance {
        operator: spec.operator.clone(),
        generators: spec.generators.clone(),
        index_model: spec.index_model,
        horizon: n,
    }))
}

/// `‖φ‖²/(1 − ‖T‖²)`, an upper frame bound for the infinite orbit of a
/// strict contraction.
pub fn bessel_bound_contractive(t: &Operator, phi: &Vector) -> Result<f64> {
    let norm = t.norm();
    if norm >= 1.0 {
        return Err(Error::HypothesisViolated(format!(
            "‖T‖ = {norm} is not below 1"
        )));
    }
    Ok(phi.norm_squared() / (1.0 - norm * norm))
}

/// Frame operator of the infinite orbit `{Tⁿφ}_{n≥0}`, the solution of
/// `S − TST* = φφ*`.
pub fn orbit_frame_operator_exact(t: &Operator, phi: &Vector) -> Result<SteinSolution> {
    orbit_frame_operator_exact_multi(t, std::slice::from_ref(phi))
}

/// Same as [`orbit_frame_operator_exact`] for several generators: `C = Σ φ_jφ_j*`.
pub fn orbit_frame_operator_exact_multi(t: &Operator, generators: &[Vector]) -> Result<SteinSolution> {
    let d = t.dim();
    let mut c = Matrix::zeros(d, d);
    for g in generators {
        if g.len() != d {
            return Err(Error::InvalidInput("generator dimension mismatch".into()));
        }
        c += g * g.adjoint();
    }
    numkit::solve_stein(t, &c, numkit::DEFAULT_STEIN_TOL)
}

/// Rank of the Krylov matrix `[φ, Tφ, …, T^{d−1}φ]` at relative tolerance.
pub fn controllability_rank(t: &Operator, phi: &Vector, rel_tol: f64) -> Result<usize> {
    let sys = orbit(&OrbitSpec::new(t.clone(), phi.clone(), t.dim()))?;
    let sv = numkit::singular_values(&frames::synthesis(&sys))?;
    Ok(sv.iter().filter(|&&s| s > rel_tol * sv[0]).count())
}

/// Analytic bound on `‖Σ_{n≥N} Tⁿφφ*T*ⁿ‖_F`: `‖T‖^{2N}‖φ‖²/(1 − ‖T‖²)`.
/// Infinite when `‖T‖ ≥ 1`.
pub fn truncation_tail_bound(t: &Operator, phi: &Vector, horizon: usize) -> f64 {
    let norm = t.norm();
    if norm >= 1.0 {
        return f64::INFINITY;
    }
    norm.powi(2 * horizon as i32) * phi.norm_squared() / (1.0 - norm * norm)
}

/// Values and verdicts of the four surjectivity criteria.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurjectivityReport {
    /// First `n ≥ 1` with `|⟨Tⁿφ, S⁻¹φ⟩| > tol`.
    pub witness: Option<usize>,
    /// `max_{1≤n≤horizon} |⟨Tⁿφ, S⁻¹φ⟩|`
    pub criterion_i: f64,
    /// `‖(I − TT^†)φ‖`
    pub criterion_ii: f64,
    /// `‖T*S⁻¹φ‖`
    pub criterion_iii: f64,
    /// `|‖S^{-1/2}φ‖ − 1|`
    pub criterion_iv: f64,
    /// Verdict of each criterion, `true` meaning "surjective".
    pub verdicts: [bool; 4],
    pub ground_truth_surjective: bool,
    pub consistent: bool,
    /// `(Σ_{n=1}^{horizon} |⟨S⁻¹φ, Tⁿφ⟩|²)^{1/2}`
    pub tail_coefficient_norm: f64,
    /// `‖Σ_{n=1}^{horizon} ⟨S⁻¹φ, Tⁿφ⟩ Tⁿφ‖`
    pub tail_synthesis_norm: f64,
    pub horizon: usize,
    pub tol: f64,
}

/// Evaluates the four surjectivity criteria for an orbit frame with
/// frame operator `s`, against the ground truth `rank T = d`.
pub fn surjectivity_report(
    t: &Operator,
    phi: &Vector,
    s: &Matrix,
    horizon: usize,
    tol: f64,
) -> Result<SurjectivityReport> {
    let d = t.dim();
    if phi.len() != d || s.nrows() != d || s.ncols() != d {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let eig = numkit::eig_hermitian(s)?;
    if eig.min() <= tol {
        return Err(Error::NotAFrame {
            lower_bound: eig.min(),
            tol,
        });
    }
    let s_inv = eig.map(|l| 1.0 / l);
    let s_inv_sqrt = eig.map(|l| 1.0 / l.sqrt());
    let dual = &s_inv * phi;

    let mut witness = None;
    let mut criterion_i = 0.0_f64;
    let mut coeff_sq = 0.0;
    let mut synth = Vector::zeros(d);
    let mut tn_phi = phi.clone();
    for n in 1..=horizon {
        tn_phi = t.apply(&tn_phi);
        let c = inner(&tn_phi, &dual);
        criterion_i = criterion_i.max(c.norm());
        if witness.is_none() && c.norm() > tol {
            witness = Some(n);
        }
        coeff_sq += c.norm_sqr();
        synth += &tn_phi * c.conj();
    }

    let t_svd = numkit::svd(t.matrix())?;
    let rank_tol = tol * t_svd.max().max(1.0);
    let t_pinv = numkit::pinv(t.matrix(), Some(rank_tol))?;
    let projector = t.matrix() * t_pinv;
    let criterion_ii = (phi - &projector * phi).norm();
    let criterion_iii = (t.matrix().adjoint() * &dual).norm();
    let criterion_iv = ((&s_inv_sqrt * phi).norm() - 1.0).abs();
    let ground_truth_surjective = t_svd.rank_above(rank_tol) == d;

    let verdicts = [
        criterion_i > tol,
        criterion_ii <= tol,
        criterion_iii > tol,
        criterion_iv > tol,
    ];
    let consistent = verdicts.iter().all(|&v| v == ground_truth_surjective);
    Ok(SurjectivityReport {
        witness,
        criterion_i,
        criterion_ii,
        criterion_iii,
        criterion_iv,
        verdicts,
        ground_truth_surjective,
        consistent,
        tail_coefficient_norm: coeff_sq.sqrt(),
        tail_synthesis_norm: synth.norm(),
        horizon,
        tol,
    })
}

/// Comparison of `range(T)` with `span{Tⁿφ_j : n ≥ 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeComparison {
    pub equal: bool,
    /// Sine of the largest principal angle.
    pub gap: f64,
    pub range_rank: usize,
    pub tail_rank: usize,
}

/// Compares the column space of `T` with the span of the orbit tail.
pub fn range_span_check(t: &Operator, sys: &VectorSystem, tol: f64) -> Result<RangeComparison> {
    let prov = sys
        .provenance()
        .ok_or_else(|| Error::InvalidInput("range check needs an orbit system".into()))?;
    let d = t.dim();
    let n = prov.horizon;
    let tail: Vec<Vector> = sys
        .vectors()
        .iter()
        .enumerate()
        .filter(|(k, _)| k % n != 0)
        .map(|(_, v)| v.clone())
        .collect();
    let range = numkit::range_basis(t.matrix(), tol)?;
    let tail_basis = if tail.is_empty() {
        Matrix::zeros(d, 0)
    } else {
        let m = Matrix::from_columns(&tail);
        if m.norm() == 0.0 {
            Matrix::zeros(d, 0)
        } else {
            numkit::range_basis(&m, tol)?
        }
    };
    let gap = numkit::subspace_gap(&range, &tail_basis);
    Ok(RangeComparison {
        equal: gap <= tol,
        gap,
        range_rank: range.ncols(),
        tail_rank: tail_basis.ncols(),
    })
}

/// `{T^{1/2} e_k}` for a positive invertible `T`; its frame operator is `T`.
pub fn frame_from_positive_operator(t: &Operator, basis: &VectorSystem, tol: f64) -> Result<VectorSystem> {
    frames::require_onb(basis, t.dim())?;
    let eig = numkit::eig_hermitian(t.matrix())?;
    if eig.min() < tol || eig.min() <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "operator is not positive definite (smallest eigenvalue {:e})",
            eig.min()
        )));
    }
    let root = numkit::sqrt_psd(t.matrix())?;
    VectorSystem::new(basis.vectors().iter().map(|e| &root * e).collect())
}

/// The diagonal operator `diag(1 − 2^{-k})_{k=1..d}`.
pub fn aldroubi_operator(dim: usize) -> Operator {
    let diag: Vec<f64> = (1..=dim).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect();
    Operator::real_diagonal(&diag).expect("finite diagonal")
}

/// Generator `b_k = √(1 − λ_k²)` whose orbit under [`aldroubi_operator`]
/// is a frame.
pub fn aldroubi_generator(dim: usize) -> Vector {
    numkit::real_vector(
        &(1..=dim)
            .map(|k| {
                let l = 1.0 - 0.5f64.powi(k as i32);
                (1.0 - l * l).sqrt()
            })
            .collect::<Vec<_>>(),
    )
}

/// Outcome of the iterated frame operator experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IteratedVerdict {
    /// Prefix upper bounds converge: `{Sⁿg}` behaves like a Bessel family.
    Stabilizes,
    /// Geometric growth with `A ≥ 1`: `{Sⁿg}` cannot be a frame.
    CannotBeFrame,
    /// Unbounded growth without the geometric signature.
    NotBessel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IteratedFrameReport {
    pub lower_bound_a: f64,
    /// `B_opt` of `{S^k g : k < n, g ∈ 𝒢}` for `n = 1..=horizon`.
    pub prefix_b_growth: Vec<f64>,
    /// `B(N)/B(⌊3N/4⌋)`
    pub growth_ratio: f64,
    /// Per-step geometric rate of the prefix increments over the last quartile.
    pub increment_rate: f64,
    pub verdict: IteratedVerdict,
}

/// Builds `{Sⁿg}` from the frame operator `S` of `sys` and classifies the
/// growth of its prefix Bessel bounds.
pub fn iterated_frame_operator_check(
    sys: &VectorSystem,
    generators: &[Vector],
    horizon: usize,
) -> Result<IteratedFrameReport> {
    if horizon < 4 {
        return Err(Error::InvalidInput("horizon must be at least 4".into()));
    }
    if generators.is_empty() || generators.iter().any(|g| g.len() != sys.dim()) {
        return Err(Error::InvalidInput("generators must be vectors of the system's space".into()));
    }
    let bounds = frames::frame_bounds(sys, true, None)?;
    if !bounds.spans_ambient || bounds.a_opt <= bounds.tol {
        return Err(Error::NotAFrame {
            lower_bound: bounds.a_opt,
            tol: bounds.tol,
        });
    }
    let s = frames::frame_operator(sys);
    let d = sys.dim();
    let mut current: Vec<Vector> = generators.to_vec();
    let mut acc = Matrix::zeros(d, d);
    let mut growth = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        for v in &current {
            acc += v * v.adjoint();
        }
        growth.push(numkit::eig_hermitian(&numkit::hermitian_part(&acc))?.max());
        current = current.iter().map(|v| &s * v).collect();
    }
    let last = horizon - 1;
    let q = (3 * horizon / 4).max(1) - 1;
    let growth_ratio = growth[last] / growth[q];
    let increment = |k: usize| if k == 0 { growth[0] } else { growth[k] - growth[k - 1] };
    let (inc_last, inc_q) = (increment(last), increment(q));
    let increment_rate = if inc_q <= 0.0 || last == q {
        0.0
    } else {
        (inc_last.max(0.0) / inc_q).powf(1.0 / (last - q) as f64)
    };
    let verdict = if increment_rate < 1.0 - 1e-3 {
        IteratedVerdict::Stabilizes
    } else if bounds.a_opt >= 1.0 && growth_ratio >= 1.5 {
        IteratedVerdict::CannotBeFrame
    } else {
        IteratedVerdict::NotBessel
    };
    Ok(IteratedFrameReport {
        lower_bound_a: bounds.a_opt,
        prefix_b_growth: growth,
        growth_ratio,
        increment_rate,
        verdict,
    })
}

/// Ambient `B_opt` of `{Tⁿφ}_{n<N}` for each requested horizon `N`, for
/// unitary `T`.
pub fn unitary_nogo_proxy(t: &Operator, phi: &Vector, horizons: &[usize]) -> Result<Vec<f64>> {
    if !t.is_unitary(1e-10) {
        return Err(Error::InvalidInput("operator is not unitary".into()));
    }
    if phi.len() != t.dim() {
        return Err(Error::InvalidInput("generator dimension mismatch".into()));
    }
    let max_n = horizons.iter().copied().max().unwrap_or(0);
    let d = t.dim();
    let mut acc = Matrix::zeros(d, d);
    let mut v = phi.clone();
    let mut at = vec![0.0; max_n + 1];
    for n in 1..=max_n {
        acc += &v * v.adjoint();
        v = t.apply(&v);
        if horizons.contains(&n) {
            at[n] = numkit::eig_hermitian(&numkit::hermitian_part(&acc))?.max();
        }
    }
    Ok(horizons.iter().map(|&n| at[n]).collect())
}

/// Worst margins in `√(A/B)‖f‖ ≤ ‖Tⁿf‖, ‖T*ⁿf‖ ≤ √(B/A)‖f‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichMargins {
    pub lower: f64,
    pub upper: f64,
}

/// One-period model of a `ℤ`-orbit.
#[derive(Clone, Debug)]
pub struct PeriodicModel {
    pub period: usize,
    pub s: Matrix,
    /// Ambient bounds of the one-period orbit.
    pub bounds: BoundsReport,
    /// Bounds on the span (the frame-sequence branch).
    pub span_bounds: BoundsReport,
    /// `‖TST* − S‖_F`
    pub tst_residual: f64,
    /// `‖U*U − I‖_F` for `U = S^{-1/2}TS^{1/2}`, when the orbit spans.
    pub unitarity_residual: Option<f64>,
    pub sandwich: Option<SandwichMargins>,
    /// Bounds of `{Uⁿ S^{-1/2}φ}` over one period.
    pub transformed_bounds: Option<(f64, f64)>,
    /// `min(A_U − A/B, B/A − B_U)`
    pub transformed_margin: Option<f64>,
}

impl PeriodicModel {
    pub fn spans(&self) -> bool {
        self.bounds.spans_ambient
    }
}

fn period_frame_operator(t: &Operator, phi: &Vector, period: usize) -> Matrix {
    let d = t.dim();
    let mut s = Matrix::zeros(d, d);
    let mut v = phi.clone();
    for _ in 0..period {
        s += &v * v.adjoint();
        v = t.apply(&v);
    }
    numkit::hermitian_part(&s)
}

/// Builds the one-period model of `{Tⁿφ}_{n∈ℤ}` for `T^p = I` and checks
/// `TST* = S`, unitarity of `S^{-1/2}TS^{1/2}`, the norm sandwich on 20
/// seeded random vectors for `|n| ≤ p`, and the bounds of the transformed
/// orbit.
pub fn periodic_orbit_model(t: &Operator, phi: &Vector, period: usize, seed: u64) -> Result<PeriodicModel> {
    check_periodic(t, period)?;
    if phi.len() != t.dim() {
        return Err(Error::InvalidInput("generator dimension mismatch".into()));
    }
    let d = t.dim();
    let sys = orbit(&OrbitSpec::new(t.clone(), phi.clone(), period).periodic(period))?;
    let s = period_frame_operator(t, phi, period);
    let bounds = frames::frame_bounds(&sys, true, None)?;
    let span_bounds = frames::frame_bounds(&sys, false, None)?;
    let tst_residual = (t.matrix() * &s * t.matrix().adjoint() - &s).norm();

    let mut model = PeriodicModel {
        period,
        s: s.clone(),
        bounds,
        span_bounds,
        tst_residual,
        unitarity_residual: None,
        sandwich: None,
        transformed_bounds: None,
        transformed_margin: None,
    };
    if !bounds.spans_ambient {
        return Ok(model);
    }

    let (a, b) = (bounds.a_opt, bounds.b_opt);
    let s_half = numkit::sqrt_psd(&s)?;
    let s_inv_half = numkit::inv_sqrt_pd(&s, 0.0)?;
    let u = &s_inv_half * t.matrix() * &s_half;
    model.unitarity_residual = Some((u.adjoint() * &u - Matrix::identity(d, d)).norm());

    let u_op = Operator::new(u)?;
    let psi = &s_inv_half * phi;
    let transformed = orbit(&OrbitSpec::new(u_op, psi, period))?;
    let tb = frames::frame_bounds(&transformed, true, None)?;
    model.transformed_bounds = Some((tb.a_opt, tb.b_opt));
    model.transformed_margin = Some((tb.a_opt - a / b).min(b / a - tb.b_opt));

    let lo = (a / b).sqrt();
    let hi = (b / a).sqrt();
    let mut rng = sampling::substream(seed, 0);
    let powers: Vec<Matrix> = (0..period).map(|k| t.pow(k).into_matrix()).collect();
    let mut margins = SandwichMargins {
        lower: f64::INFINITY,
        upper: f64::INFINITY,
    };
    for _ in 0..20 {
        let f = sampling::gaussian_vector(&mut rng, d);
        let nf = f.norm();
        for n in -(period as i64)..=(period as i64) {
            let k = n.rem_euclid(period as i64) as usize;
            let tn = &powers[k];
            for image in [tn * &f, tn.adjoint() * &f] {
                let ni = image.norm();
                margins.lower = margins.lower.min(ni - lo * nf);
                margins.upper = margins.upper.min(hi * nf - ni);
            }
        }
    }
    model.sandwich = Some(margins);
    Ok(model)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutantTransport {
    /// `‖S̃ − VSV*‖_F`
    pub frame_operator_residual: f64,
    /// `max_{n∈{1,2,3}} ‖S̃ⁿ − VSⁿV*‖_F`
    pub power_residual: f64,
}

/// For unitary `V` commuting with `T`, compares the frame operator `S̃`
/// of the orbit of `Vφ` with `VSV*` (one-period model).
pub fn commutant_transport(
    t: &Operator,
    v: &Operator,
    phi: &Vector,
    period: usize,
    tol: f64,
) -> Result<CommutantTransport> {
    check_periodic(t, period)?;
    if v.dim() != t.dim() || phi.len() != t.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    if !v.is_unitary(1e-10) {
        return Err(Error::InvalidInput("V is not unitary".into()));
    }
    let commutator = (v.matrix() * t.matrix() - t.matrix() * v.matrix()).norm();
    if commutator > tol {
        return Err(Error::InvalidInput(format!(
            "V does not commute with T (‖VT − TV‖_F = {commutator:e})"
        )));
    }
    let s = period_frame_operator(t, phi, period);
    let s_tilde = period_frame_operator(t, &v.apply(phi), period);
    let vm = v.matrix();
    let frame_operator_residual = (&s_tilde - vm * &s * vm.adjoint()).norm();
    let mut power_residual = 0.0_f64;
    let (mut sp, mut stp) = (s.clone(), s_tilde.clone());
    for _ in 1..=3 {
        power_residual = power_residual.max((&stp - vm * &sp * vm.adjoint()).norm());
        sp = &sp * &s;
        stp = &stp * &s_tilde;
    }
    Ok(CommutantTransport {
        frame_operator_residual,
        power_residual,
    })
}

/// Truncated weighted right shift
/// `(c₀, c₁, …) ↦ (0, (a₀/a₁)c₀, (a₁/a₂)c₁, …)`; the last input
/// coefficient falls off the end.
pub fn shift_weighted(a: &[C64], c: &[C64]) -> Result<Vec<C64>> {
    if a.len() != c.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} coefficients",
            a.len(),
            c.len()
        )));
    }
    if let Some(k) = a.iter().position(|x| !(x.norm() > 0.0)) {
        return Err(Error::InvalidInput(format!("weight a_{k} is zero")));
    }
    let n = c.len();
    let mut out = vec![numkit::real(0.0); n];
    for k in 1..n {
        out[k] = a[k - 1] / a[k] * c[k - 1];
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelInvariance {
    pub invariant: bool,
    /// `max_c ‖(I − P_𝒩) 𝒯_ω c‖` over an orthonormal kernel basis.
    pub defect: f64,
    pub kernel_dim: usize,
    /// The shift drops the last coefficient.
    pub truncated: bool,
}

/// Measures how far the synthesis kernel is from invariance under the
/// weighted shift.
pub fn kernel_invariance_check(sys: &VectorSystem, tol: f64) -> Result<KernelInvariance> {
    let n = sys.len();
    let a: Vec<C64> = (0..n).map(|k| sys.weight(k)).collect();
    let kernel = frames::kernel_synthesis(sys, frames::DEFAULT_REL_TOL)?;
    let k = kernel.as_matrix(n);
    let mut defect = 0.0_f64;
    for c in &kernel.basis {
        let shifted = Vector::from_vec(shift_weighted(&a, c.as_slice())?);
        let proj = &k * (k.adjoint() * &shifted);
        defect = defect.max((shifted - proj).norm());
    }
    Ok(KernelInvariance {
        invariant: defect <= tol,
        defect,
        kernel_dim: kernel.dim(),
        truncated: true,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioBound {
    pub sup_ratio: f64,
    /// `√(B_opt/A_opt)·‖T‖`
    pub bound: f64,
    pub margin: f64,
}

/// Compares `sup |aₙ/aₙ₊₁|` with `√(B/A)‖T‖` for a weighted orbit frame.
pub fn ratio_bound_check(sys: &VectorSystem) -> Result<RatioBound> {
    let prov = sys
        .provenance()
        .ok_or_else(|| Error::InvalidInput("ratio check needs an orbit system".into()))?;
    let bounds = frames::frame_bounds(sys, true, None)?;
    if !bounds.spans_ambient || bounds.a_opt <= bounds.tol {
        return Err(Error::HypothesisViolated(format!(
            "weighted orbit is not a frame (A_opt = {:e})",
            bounds.a_opt
        )));
    }
    let n = prov.horizon;
    let mut sup_ratio = 0.0_f64;
    for run in 0..sys.len() / n {
        for k in 0..n.saturating_sub(1) {
            let i = run * n + k;
            sup_ratio = sup_ratio.max((sys.weight(i) / sys.weight(i + 1)).norm());
        }
    }
    let bound = (bounds.b_opt / bounds.a_opt).sqrt() * prov.operator.norm();
    Ok(RatioBound {
        sup_ratio,
        bound,
        margin: bound - sup_ratio,
    })
}

/// Residual of the finite-truncation representation
/// `f_{j+1} = (a_{j+1}/a_j) Σ_k ⟨f_j, g_k⟩ (a_k/a_{k+1}) f_{k+1}`
/// (zero-based, `j, k ≤ N − 2`), maximized over `j`. `f` are the
/// (weighted) members of `f_sys`, `g` a dual of them.
pub fn representation_residual(f_sys: &VectorSystem, g_sys: &VectorSystem, a: &[C64]) -> Result<f64> {
    let n = f_sys.len();
    if g_sys.len() != n || g_sys.dim() != f_sys.dim() || a.len() != n {
        return Err(Error::InvalidInput("F, G and a must have matching lengths".into()));
    }
    if let Some(k) = a.iter().position(|x| !(x.norm() > 0.0)) {
        return Err(Error::InvalidInput(format!("weight a_{k} is zero")));
    }
    let uf = frames::synthesis(f_sys);
    let ug = frames::synthesis(g_sys);
    let d = f_sys.dim();
    let dual_defect = (&uf * ug.adjoint() - Matrix::identity(d, d)).norm();
    if dual_defect > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "G is not a dual of F (‖U_F U_G* − I‖_F = {dual_defect:e})"
        )));
    }
    let f: Vec<Vector> = uf.column_iter().map(|c| c.into_owned()).collect();
    let g: Vec<Vector> = ug.column_iter().map(|c| c.into_owned()).collect();
    let mut worst = 0.0_f64;
    for j in 0..n.saturating_sub(1) {
        let mut sum = Vector::zeros(d);
        for k in 0..n - 1 {
            sum += &f[k + 1] * (inner(&f[j], &g[k]) * (a[k] / a[k + 1]));
        }
        let r = (&f[j + 1] - sum * (a[j + 1] / a[j])).norm();
        worst = worst.max(r);
    }
    Ok(worst)
}
