//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::Command;
use std::time::Instant;

use dynsamp_cli::report::ExperimentReport;
use dynsamp_core::dynsamp::{self, OrbitSpec, WeightSpec};
use dynsamp_core::frames::{self, VectorSystem};
use dynsamp_core::numkit::{self, basis_vector, c64, real, Matrix, Operator, Vector};
use dynsamp_core::perturb::{self, CertificateName};
use dynsamp_core::sampling::{self, substream};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Frobenius distance from the brute-force sum `Σ_{n<N} Tⁿφφ*T*ⁿ`.
fn brute_frame_operator(t: &Matrix, phi: &Vector, n: usize) -> Matrix {
    let d = t.nrows();
    let mut s = Matrix::zeros(d, d);
    let mut v = phi.clone();
    for _ in 0..n {
        s += &v * v.adjoint();
        v = t * v;
    }
    s
}

fn c1_aldroubi() -> Outcome {
    let start = Instant::now();
    let d = 16;
    let t = dynsamp::aldroubi_operator(d);
    let basis = VectorSystem::new((0..d).map(|k| basis_vector(d, k)).collect()).map_err(|e| e.to_string())?;
    let sys = dynsamp::frame_from_positive_operator(&t, &basis, 1e-14).map_err(|e| e.to_string())?;
    for (k, v) in sys.vectors().iter().enumerate() {
        let want = (1.0 - 0.5f64.powi(k as i32 + 1)).sqrt();
        ensure((v[k] - real(want)).norm() <= 1e-13, || format!("vector {k} is not √(1−2^-k)δ_k"))?;
    }
    let s = frames::frame_operator(&sys);
    let mut err = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { 1.0 - 0.5f64.powi(i as i32 + 1) } else { 0.0 };
            err = err.max((s[(i, j)] - real(want)).norm());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(err <= 1e-12, || format!("max entry error {err:e}"))?;
    ensure(elapsed < 1.0, || format!("took {elapsed:.3}s"))?;
    Ok(format!("max entry error {err:.1e}, {elapsed:.3}s"))
}

/// Tail bound from `q = ‖T^m‖ < 1`: `Σ_{n≥N} ‖Tⁿφ‖² ≤ ‖φ‖² C² m q^{2⌊N/m⌋}/(1−q²)`
/// with `C = max_{r<m} ‖T^r‖`. Returns the smallest `N` pushing it below `eps`.
fn horizon_from_tail_bound(t: &Matrix, phi: &Vector, eps: f64) -> Option<usize> {
    let d = t.nrows();
    let mut p = Matrix::identity(d, d);
    let mut c = 1.0_f64;
    for m in 1..=400 {
        p = &p * t;
        let q = numkit::operator_norm(&p);
        if q < 1.0 {
            let factor = phi.norm_squared() * c * c * m as f64 / (1.0 - q * q);
            let mut blocks = 0usize;
            while factor * q.powi(2 * blocks as i32) > eps {
                blocks += 1;
            }
            return Some(blocks * m);
        }
        c = c.max(q);
    }
    None
}

fn c2_stein_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut max_n = 0;
    for trial in 0..50u64 {
        let mut rng = substream(2024, trial);
        let d = rng.random_range(1..=8);
        let rho_target = rng.random_range(0.05..0.9);
        let g = sampling::gaussian_matrix(&mut rng, d, d);
        let rho = numkit::spectral_radius(&g).map_err(|e| e.to_string())?;
        let t = g.scale(rho_target / rho);
        let phi = sampling::gaussian_vector(&mut rng, d);
        let op = Operator::new(t.clone()).map_err(|e| e.to_string())?;
        let sol = dynsamp::orbit_frame_operator_exact(&op, &phi).map_err(|e| format!("trial {trial}: {e}"))?;
        let n = horizon_from_tail_bound(&t, &phi, 1e-13).ok_or("no contracting power found")?;
        max_n = max_n.max(n);
        let brute = brute_frame_operator(&t, &phi, n);
        let diff = (&sol.s - brute).norm();
        worst = worst.max(diff);
        ensure(diff <= 1e-10, || format!("trial {trial} (d = {d}): difference {diff:e}"))?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 10.0, || format!("took {elapsed:.2}s"))?;
    Ok(format!("worst ‖S − brute‖_F = {worst:.1e}, N ≤ {max_n}, {elapsed:.2}s"))
}

fn c3_surjectivity() -> Outcome {
    let tol = 1e-8;
    let mut worst_iv = 0.0_f64;
    for d in 2..=8 {
        let t = Operator::nilpotent_shift(d);
        let phi = basis_vector(d, 0);
        let s = dynsamp::orbit_frame_operator_exact(&t, &phi).map_err(|e| e.to_string())?;
        let r = dynsamp::surjectivity_report(&t, &phi, &s.s, 4 * d, tol).map_err(|e| e.to_string())?;
        ensure(r.verdicts == [false; 4], || format!("shift d = {d}: verdicts {:?}", r.verdicts))?;
        ensure(!r.ground_truth_surjective && r.consistent, || format!("shift d = {d}: inconsistent"))?;
        ensure(r.criterion_iv <= 1e-10, || format!("shift d = {d}: criterion (iv) = {:e}", r.criterion_iv))?;
        worst_iv = worst_iv.max(r.criterion_iv);
    }
    let mut cases = 0;
    let mut inconsistent = 0;
    let mut trial = 0u64;
    while cases < 50 {
        let mut rng = substream(33, trial);
        trial += 1;
        let d = rng.random_range(2..=4);
        let mut eigs: Vec<numkit::C64> = Vec::new();
        while eigs.len() < d {
            let r = rng.random_range(0.2..0.85);
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            let z = c64(r * th.cos(), r * th.sin());
            if eigs.iter().all(|w| (w - z).norm() >= 0.25) {
                eigs.push(z);
            }
        }
        let t = Operator::diagonal(&eigs).map_err(|e| e.to_string())?;
        let phi = sampling::gaussian_vector(&mut rng, d);
        if phi.iter().any(|x| x.norm() < 0.2) {
            continue;
        }
        let s = dynsamp::orbit_frame_operator_exact(&t, &phi).map_err(|e| e.to_string())?;
        let r = dynsamp::surjectivity_report(&t, &phi, &s.s, 4 * d, tol).map_err(|e| format!("case {cases}: {e}"))?;
        cases += 1;
        if !(r.ground_truth_surjective && r.verdicts == [true; 4]) {
            inconsistent += 1;
            eprintln!("  case {cases}: verdicts {:?}, (iv) = {:e}", r.verdicts, r.criterion_iv);
        }
    }
    ensure(inconsistent == 0, || format!("{inconsistent} inconsistent diagonal cases"))?;
    Ok(format!("shift d=2..8 all 'not surjective' (max (iv) {worst_iv:.1e}); 50 diagonal cases all 'surjective'"))
}

fn c4_z_model() -> Outcome {
    let mut worst = [0.0_f64; 2];
    let mut min_margin = f64::INFINITY;
    for p in 2..=12usize {
        let t = Operator::circulant_shift(p);
        for k in 0..20u64 {
            let phi = sampling::gaussian_vector(&mut substream(400 + p as u64, k), p);
            let m = dynsamp::periodic_orbit_model(&t, &phi, p, 1000 * p as u64 + k).map_err(|e| e.to_string())?;
            let tst = m.tst_residual / m.s.norm();
            let u = m.unitarity_residual.ok_or_else(|| format!("p = {p}: orbit does not span"))?;
            let sw = m.sandwich.ok_or("no sandwich")?;
            worst[0] = worst[0].max(tst);
            worst[1] = worst[1].max(u);
            min_margin = min_margin.min(sw.lower.min(sw.upper));
            ensure(tst <= 1e-10, || format!("p = {p}: relative TST* residual {tst:e}"))?;
            ensure(u <= 1e-10, || format!("p = {p}: ‖U*U − I‖_F = {u:e}"))?;
            ensure(sw.lower >= -1e-10 && sw.upper >= -1e-10, || format!("p = {p}: sandwich {sw:?}"))?;
        }
    }
    Ok(format!(
        "max rel TST* residual {:.1e}, max ‖U*U − I‖_F {:.1e}, min sandwich margin {min_margin:.2e}",
        worst[0], worst[1]
    ))
}

fn c5_nogo() -> Outcome {
    let mut min_excess = f64::INFINITY;
    for d in 1..=6usize {
        let mut rng = substream(55, d as u64);
        let unitaries = [
            Operator::circulant_shift(d),
            Operator::new(sampling::random_unitary(&mut rng, d)).map_err(|e| e.to_string())?,
        ];
        for t in &unitaries {
            for _ in 0..5 {
                let phi = sampling::gaussian_vector(&mut rng, d);
                let horizons = [d, 4 * d, 16 * d];
                let b = dynsamp::unitary_nogo_proxy(t, &phi, &horizons).map_err(|e| e.to_string())?;
                for (n, bn) in horizons.iter().zip(&b) {
                    let floor = *n as f64 * phi.norm_squared() / d as f64;
                    min_excess = min_excess.min(bn - floor);
                    ensure(*bn >= floor - 1e-10, || format!("d = {d}, N = {n}: B = {bn} < {floor}"))?;
                }
            }
        }
    }
    Ok(format!("B_opt(N) ≥ N‖φ‖²/d everywhere (min excess {min_excess:.2e})"))
}

fn c6_ratio_bound() -> Outcome {
    let mut min_margin = f64::INFINITY;
    let mut cases = 0;
    let mut trial = 0u64;
    while cases < 50 {
        let mut rng = substream(66, trial);
        trial += 1;
        let d = rng.random_range(2..=6);
        let t = Operator::new(sampling::gaussian_matrix(&mut rng, d, d).scale(rng.random_range(0.2..1.5)))
            .map_err(|e| e.to_string())?;
        let phi = sampling::gaussian_vector(&mut rng, d);
        let a: Vec<numkit::C64> = (0..d)
            .map(|_| {
                let r = 10f64.powf(rng.random_range(-0.7..0.7));
                let th = rng.random_range(0.0..std::f64::consts::TAU);
                c64(r * th.cos(), r * th.sin())
            })
            .collect();
        let sys = dynsamp::orbit(&OrbitSpec::new(t.clone(), phi, d).weighted(WeightSpec::Explicit(a.clone())))
            .map_err(|e| e.to_string())?;
        let Ok(r) = dynsamp::ratio_bound_check(&sys) else { continue };
        // Independent evaluation from the synthesis SVD.
        let sv = numkit::singular_values(&frames::synthesis(&sys)).map_err(|e| e.to_string())?;
        let bound = sv[0] / sv[d - 1] * t.norm();
        let sup = (0..d - 1).map(|n| (a[n] / a[n + 1]).norm()).fold(0.0, f64::max);
        ensure((bound - r.bound).abs() <= 1e-8 * bound, || format!("case {cases}: bound mismatch"))?;
        ensure(sup <= bound + 1e-10, || format!("case {cases}: sup {sup} > bound {bound}"))?;
        min_margin = min_margin.min(bound - sup);
        cases += 1;
    }
    Ok(format!("50 weighted orbit frames (horizon N = d), min margin {min_margin:.3e}"))
}

fn c7_riesz_decay() -> Outcome {
    let shift = dynsamp::orbit(&OrbitSpec::new(Operator::nilpotent_shift(3), basis_vector(3, 0), 3))
        .map_err(|e| e.to_string())?;
    let mut vecs = shift.vectors().to_vec();
    vecs.push(basis_vector(3, 0) + basis_vector(3, 1));
    let families = [
        ("shift orbit + dependent vector", VectorSystem::new(vecs).map_err(|e| e.to_string())?),
        (
            "near-parallel",
            VectorSystem::new(vec![
                numkit::real_vector(&[1.0, 0.0]),
                numkit::real_vector(&[1.0, 0.1]),
            ])
            .map_err(|e| e.to_string())?,
        ),
    ];
    let mut notes = Vec::new();
    for (name, sys) in &families {
        let p = frames::lower_riesz_profile(sys).map_err(|e| e.to_string())?;
        ensure(p.windows(2).all(|w| w[1] <= w[0] + 1e-14), || format!("{name}: profile increases {p:?}"))?;
        let ratio = p[p.len() - 1] / p[0];
        ensure(ratio <= 0.1, || format!("{name}: final/initial = {ratio}"))?;
        notes.push(format!("{name} {ratio:.2e}"));
    }
    Ok(format!("non-increasing, final/initial: {}", notes.join(", ")))
}

fn c8_perturbation() -> Outcome {
    let gallery = perturb::gallery().map_err(|e| e.to_string())?;
    let mut positive = 0;
    for g in &gallery {
        let c = &g.certificate;
        if !c.verdict {
            continue;
        }
        positive += 1;
        let b = c.conclusion_check.ok_or_else(|| format!("{}: no conclusion", g.label))?;
        match c.name {
            CertificateName::RieszOrbitPerturbation => {
                let sum = c.value("proof_sum").ok_or("missing proof sum")?;
                let a = c.value("lower_riesz_bound").ok_or("missing A")?;
                ensure(sum < 1.0, || format!("{}: proof sum {sum}", g.label))?;
                ensure(b.a_opt >= a * (1.0 - sum).powi(2) - 1e-8, || {
                    format!("{}: lower bound {} < {}", g.label, b.a_opt, a * (1.0 - sum).powi(2))
                })?;
            }
            n if !n.concludes_riesz() => {
                let d2 = g.doubled.as_ref().and_then(|d| d.conclusion_check).ok_or("no doubled horizon")?;
                ensure(b.a_opt > 0.0, || format!("{}: A_opt = {}", g.label, b.a_opt))?;
                ensure((d2.a_opt - b.a_opt).abs() <= 0.1 * b.a_opt, || {
                    format!("{}: A_opt {} at N vs {} at 2N", g.label, b.a_opt, d2.a_opt)
                })?;
            }
            _ => ensure(c.conclusion_holds() == Some(true), || format!("{}: conclusion fails", g.label))?,
        }
    }
    // Scalar instance T = 1/2, W = 1/4, φ = 1.
    let whole = Matrix::identity(1, 1);
    let cd_t = perturb::contraction_data(&Operator::real_diagonal(&[0.5]).unwrap(), &whole, 1e-12)
        .map_err(|e| e.to_string())?;
    let cd_w = perturb::contraction_data(&Operator::real_diagonal(&[0.25]).unwrap(), &whole, 1e-12)
        .map_err(|e| e.to_string())?;
    let (_, sum) = perturb::two_operator_certificates(&cd_t, &cd_w, &basis_vector(1, 0), 60).map_err(|e| e.to_string())?;
    let expected = 4.0 / 3.0 - 16.0 / 7.0 + 16.0 / 15.0;
    let got = sum.value("difference_sum").ok_or("missing sum")?;
    ensure((got - expected).abs() <= 1e-12, || format!("sum {got} vs {expected}"))?;
    ensure(sum.verdict, || "operative certificate not satisfied".into())?;
    let a_w = sum.conclusion_check.ok_or("no conclusion")?.a_opt;
    ensure((a_w - 16.0 / 15.0).abs() <= 1e-12, || format!("A_W = {a_w}"))?;
    Ok(format!(
        "{positive}/{} gallery instances certified; scalar sum {got:.12}, A_W {a_w:.12}",
        gallery.len()
    ))
}

fn c9_vacuity() -> Outcome {
    let seed = 9;
    let mut notes = Vec::new();
    for (name, expect_empty) in [
        (CertificateName::MultiGeneratorRiesz, true),
        (CertificateName::TwoOperatorFrame, true),
        (CertificateName::RieszOrbitPerturbation, false),
    ] {
        let r = perturb::satisfiability_search(name, 1000, seed).map_err(|e| e.to_string())?;
        let again = perturb::satisfiability_search(name, 1000, seed).map_err(|e| e.to_string())?;
        ensure(r == again, || format!("{name}: search is not deterministic"))?;
        let found = r.satisfying_instances.len();
        if expect_empty {
            ensure(found == 0, || format!("{name}: {found} satisfying instances"))?;
        } else {
            ensure(found >= 1, || format!("{name}: no satisfying instance"))?;
        }
        notes.push(format!("{name} {found}/1000"));
    }
    Ok(notes.join(", "))
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut hashes = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_dynsamp"))
            .args(["repro", "aldroubi-diagonal", "--seed", "7", "--out"])
            .arg(&out)
            .env_remove("DYNSAMP_CACHE")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || format!("run {k} exited with {}", status.status))?;
        let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
        let report = ExperimentReport::from_json(&text).map_err(|e| e.to_string())?;
        report.validate().map_err(|e| e.to_string())?;
        hashes.push(report.payload_hash());
    }
    ensure(hashes[0] == hashes[1], || format!("hashes differ: {} vs {}", hashes[0], hashes[1]))?;
    Ok(format!("payload sha256 {}…", &hashes[0][..16]))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Example frame operator reproduction (d = 16)", c1_aldroubi),
        ("Stein oracle equivalence", c2_stein_oracle),
        ("Surjectivity quadruple", c3_surjectivity),
        ("Z-model identities", c4_z_model),
        ("Unitary no-go proxy", c5_nogo),
        ("Ratio bound", c6_ratio_bound),
        ("Lower-Riesz decay", c7_riesz_decay),
        ("Perturbation certificates", c8_perturbation),
        ("Vacuity evidence", c9_vacuity),
        ("Determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
