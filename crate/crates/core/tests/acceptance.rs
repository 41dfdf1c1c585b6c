//! Acceptance suite: one PASS/FAIL line per criterion, then a rerun of
//! criteria 1-9 compared byte for byte.

mod common;

use beltrami_core::conformal::slit_prime_end_angles;
use beltrami_core::criteria::{
    check_calibrated_integral, check_divergence_integral, check_growth, check_mean_oscillation, check_orlicz, criteria_profile,
    CriteriaOptions, CriterionResult, GrowthMode, OrliczPhi, OrliczSpec, OscillationMode, TestFunctionFamily, Verdict,
};
use beltrami_core::field::{sample_mu, MuProfile, ProfileSource};
use beltrami_core::geometry::{catalog_domain, DomainSpec};
use beltrami_core::pipeline::{
    approach_end, composite_residual, loop_report, monodromy_period, solve_multivalent, solve_regular, verify_boundary,
    verify_extension, DirichletProblem, ExtensionVerdict, PhiSpec,
};
use beltrami_core::solver::{principal_solution, SolverOptions};
use beltrami_core::transforms::{beurling, beurling_free, l2_norm, SpectralGrid};
use beltrami_core::{Result, C64};
use common::{at, beurling_disk_oracle, power_log_oracle, probes, unit_disk_indicator};
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
    /// Serialized numerical output, compared across runs.
    output: Value,
}

fn cos_phi() -> PhiSpec {
    PhiSpec::Fourier { coeffs: vec![0.0, 1.0, 0.0] }
}

fn sunflower(count: usize, radius: f64) -> impl Iterator<Item = C64> {
    (0..count).map(move |k| C64::from_polar(radius * ((k as f64 + 0.5) / count as f64).sqrt(), 2.399963 * k as f64))
}

fn harmonic_reduction() -> Result<Outcome> {
    let clock = Instant::now();
    let p = DirichletProblem::catalog("disk", &[], &MuProfile::Zero, 512, 0.0, cos_phi(), 256)?;
    let s = solve_regular(&p)?;
    let mut worst: f64 = 0.0;
    let ring = (0..256).map(|k| C64::from_polar(0.9, 2.0 * PI * k as f64 / 256.0));
    for z in sunflower(2000, 0.9).chain(ring) {
        worst = worst.max((s.re(z)? - z.re).abs());
    }
    let secs = clock.elapsed().as_secs_f64();
    Ok(Outcome {
        pass: worst < 1e-6 && secs < 30.0,
        detail: format!("sup |Re f - Re z| = {worst:.2e} (< 1e-6), {secs:.1} s (< 30 s)"),
        output: json!({ "sup": worst, "transported": s.transported.outer }),
    })
}

fn constant_end_to_end() -> Result<Outcome> {
    let clock = Instant::now();
    let p = DirichletProblem::catalog("disk", &[], &MuProfile::Constant { k: C64::new(0.3, 0.0) }, 1024, 0.0, cos_phi(), 256)?;
    let s = solve_regular(&p)?;
    let boundary = verify_boundary(&|z| s.re(z), &p.chart, &p.phi, 64, 1e-2)?;
    let comp = composite_residual(&s, &p, 8)?;
    let secs = clock.elapsed().as_secs_f64();
    Ok(Outcome {
        pass: boundary.ends.len() == 64 && boundary.p95 < 1e-2 && comp.residual < 5e-2 && secs < 300.0,
        detail: format!(
            "p95 tail residual {:.2e} over {} ends (< 1e-2), composite {:.2e} (< 5e-2), {secs:.1} s (< 300 s)",
            boundary.p95,
            boundary.ends.len(),
            comp.residual
        ),
        output: json!({ "boundary": boundary, "composite": comp, "solver": s.solver }),
    })
}

fn solver_oracle() -> Result<Outcome> {
    let mu = sample_mu(&MuProfile::Constant { k: C64::new(0.3, 0.0) }, &DomainSpec::disk(), 1024, 0.0)?;
    let map = principal_solution(&mu, SolverOptions::default())?;
    let lat = map.lattice().clone();
    let mut worst: f64 = 0.0;
    for (k, z) in lat.points().enumerate() {
        if z.norm() <= 0.8 {
            worst = worst.max((map.w[k] - (z + 0.3 * z.conj())).norm());
        }
    }
    let ratios = map.contraction();
    let top = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(Outcome {
        pass: map.converged && !ratios.is_empty() && worst < 1e-2 && top <= 0.35,
        detail: format!("sup error {worst:.2e} on |z| <= 0.8 (< 1e-2), contraction {top:.3} (<= 0.35)"),
        output: json!({ "sup": worst, "increments": map.increments, "w": map.w }),
    })
}

fn transform_oracles() -> Result<Outcome> {
    let g = SpectralGrid::new(1024, C64::new(0.0, 0.0), 4.4)?;
    let chi = unit_disk_indicator(&g);
    let s = beurling_free(&g, &chi);
    let interior = probes(&[0.2, 0.45, 0.7, 0.9], 5).into_iter().map(|z| at(&g, &s.values, z).norm()).fold(0.0, f64::max);
    let exterior = probes(&[1.15, 1.3, 1.5, 1.8], 5)
        .into_iter()
        .map(|z| {
            let o = beurling_disk_oracle(z);
            (at(&g, &s.values, z) - o).norm() / o.norm()
        })
        .fold(0.0, f64::max);
    let small = SpectralGrid::new(256, C64::new(0.0, 0.0), 4.4)?;
    let f: Vec<C64> = (0..small.n * small.n)
        .map(|k| {
            let z = small.point(k % small.n, k / small.n);
            C64::new(1.0, 0.5) * (-(z - C64::new(0.2, 0.1)).norm_sqr() / 0.09).exp()
        })
        .collect();
    let mean = f.iter().sum::<C64>() / f.len() as f64;
    let centred: Vec<C64> = f.iter().map(|v| v - mean).collect();
    let norm = l2_norm(&small, &centred);
    let isometry = (l2_norm(&small, &beurling(&small, &f).values) - norm).abs() / norm;
    Ok(Outcome {
        pass: interior < 3e-2 && exterior < 3e-2 && isometry < 1e-10,
        detail: format!(
            "interior max {interior:.2e} (< 3e-2), exterior rel {exterior:.2e} at 20 probes (< 3e-2), isometry {isometry:.1e} (< 1e-10)"
        ),
        output: json!([interior, exterior, isometry]),
    })
}

fn prime_end_showcase() -> Result<Outcome> {
    let jump = PhiSpec::SlitJump { hi: 1.0, lo: -1.0, ramp: 0.05 };
    let p = DirichletProblem::catalog("slit-disk", &[], &MuProfile::Zero, 64, 0.0, jump, 1024)?;
    let s = solve_regular(&p)?;
    let control = PhiSpec::PlaneLinear { a: 0.0, b: 1.0, c: 0.0 };
    let q = DirichletProblem { phi: control.clone(), ..p.clone() };
    let c = solve_regular(&q)?;
    let (mut tail, mut diff, mut gap): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut ends = vec![];
    for x in [0.25, 0.5, 0.75] {
        let (up, down) = slit_prime_end_angles(x);
        let a = approach_end(&|z| s.re(z), &p.chart, &p.phi, 0, up)?;
        let b = approach_end(&|z| s.re(z), &p.chart, &p.phi, 0, down)?;
        let ca = approach_end(&|z| c.re(z), &q.chart, &control, 0, up)?;
        let cb = approach_end(&|z| c.re(z), &q.chart, &control, 0, down)?;
        let last = |e: &beltrami_core::pipeline::EndReport| *e.extrapolated.last().unwrap();
        tail = tail.max((last(&a) - 1.0).abs()).max((last(&b) + 1.0).abs());
        diff = diff.max((last(&a) - last(&b) - 2.0).abs());
        gap = gap.max((last(&ca) - last(&cb)).abs());
        ends.push(json!([a, b, ca, cb]));
    }
    Ok(Outcome {
        pass: tail < 5e-3 && diff < 1e-2 && gap < 1e-2,
        detail: format!("tails within {tail:.2e} of +-1 (< 5e-3), jump 2 +- {diff:.2e} (< 1e-2), control gap {gap:.2e}"),
        output: json!(ends),
    })
}

fn power_log_results(source: &ProfileSource, z0: C64, opts: &CriteriaOptions) -> Result<Vec<CriterionResult>> {
    let profile = criteria_profile(source, z0, opts)?;
    let mut out = vec![
        check_divergence_integral(&profile, opts.eps0),
        check_growth(&profile, GrowthMode::Log),
        check_mean_oscillation(source, z0, OscillationMode::Fmo, opts),
        check_mean_oscillation(source, z0, OscillationMode::LimsupMean, opts),
    ];
    for family in [TestFunctionFamily::InverseT, TestFunctionFamily::InverseTLog] {
        out.push(check_calibrated_integral(source, z0, &family, opts)?);
    }
    for phi in [OrliczPhi::Exp { alpha: 1.0 }, OrliczPhi::Power { p: 2.0 }] {
        out.push(check_orlicz(source, &OrliczSpec::new(phi))?);
    }
    Ok(out)
}

fn criteria_matrix() -> Result<Outcome> {
    let opts = CriteriaOptions::default();
    let z0 = C64::new(0.0, 0.0);
    let (mut checked, mut mismatches) = (0, vec![]);
    let mut output = vec![];
    for p in [-1, 0, 1] {
        for q in [0, 1, 2] {
            let source = ProfileSource::on_domain(MuProfile::PowerLog { center: z0, p, q }, DomainSpec::disk());
            for r in power_log_results(&source, z0, &opts)? {
                checked += 1;
                if r.verdict != power_log_oracle(&r.criterion, p, q) {
                    mismatches.push(format!("({p},{q}) {}", r.criterion));
                }
                output.push(r);
            }
        }
    }
    Ok(Outcome {
        pass: checked == 72 && mismatches.is_empty(),
        detail: format!("{checked} verdicts, {} mismatches {mismatches:?}", mismatches.len()),
        output: json!(output),
    })
}

fn orlicz_calibration() -> Result<Outcome> {
    let z0 = C64::new(0.0, 0.0);
    let source = ProfileSource::on_domain(MuProfile::PowerLog { center: z0, p: 1, q: 1 }, DomainSpec::disk());
    let cases = [(OrliczPhi::Exp { alpha: 1.0 }, Verdict::Pass), (OrliczPhi::Power { p: 2.0 }, Verdict::Fail), (OrliczPhi::Power { p: 1.0 }, Verdict::Fail)];
    let mut pass = true;
    let mut words = vec![];
    let mut output = vec![];
    for (phi, want) in cases {
        let r = check_orlicz(&source, &OrliczSpec::new(phi.clone()))?;
        pass &= r.verdict == want && r.numeric == want;
        words.push(format!("{} {:?}", phi.label(), r.verdict));
        output.push(r);
    }
    Ok(Outcome { pass, detail: words.join(", "), output: json!(output) })
}

fn multivalent_annulus() -> Result<Outcome> {
    let p = DirichletProblem::catalog("annulus", &[0.5], &MuProfile::Zero, 256, 0.0, PhiSpec::Annulus { inner: 0.0, outer: 1.0 }, 256)?;
    let s = solve_multivalent(&p)?;
    let period_err = (s.period.abs() - 2.0 * PI / 2f64.ln()).abs();
    let loops = loop_report(&s, 100, 0)?;
    let disk = DirichletProblem::catalog("disk", &[], &MuProfile::Zero, 256, 0.0, cos_phi(), 256)?;
    let mono = monodromy_period(&solve_regular(&disk)?, 100, 0)?;
    Ok(Outcome {
        pass: period_err < 1e-6 && loops.loops == 100 && loops.re_jump < 1e-8 && mono < 1e-8,
        detail: format!(
            "period {:.9} off by {period_err:.1e} (< 1e-6), Re jump {:.1e} over {} loops (< 1e-8), disk monodromy {mono:.1e} (< 1e-8)",
            s.period, loops.re_jump, loops.loops
        ),
        output: json!({ "period": s.period, "loops": loops, "monodromy": mono }),
    })
}

fn extension_property() -> Result<Outcome> {
    let profile = MuProfile::from_id("boundary-log", &[])?;
    let (domain, chart) = catalog_domain("disk", &[])?;
    let z0 = C64::new(1.0, 0.0);
    let fmo = check_mean_oscillation(&ProfileSource::on_domain(profile.clone(), domain.clone()), z0, OscillationMode::Fmo, &CriteriaOptions::default());
    let mut pass = fmo.verdict == Verdict::Pass;
    let mut finals: Vec<Vec<f64>> = vec![];
    let mut worst: f64 = 0.0;
    let mut reports = vec![];
    for trunc in [0.1, 0.01, 0.001] {
        let mu = sample_mu(&profile, &domain, 512, trunc)?;
        let f = principal_solution(&mu, SolverOptions { trunc, ..Default::default() })?;
        let r = verify_extension(&f, &chart, 16, 1e-2)?;
        pass &= r.verdict == ExtensionVerdict::ConsistentWithExtension;
        for e in &r.ends {
            let decreasing = e.forward.windows(2).all(|w| w[1] <= w[0]) && e.inverse.windows(2).all(|w| w[1] <= w[0]);
            let last = *e.forward.last().unwrap();
            pass &= decreasing && last < 1e-2 && *e.inverse.last().unwrap() < 1e-2;
            worst = worst.max(last);
        }
        finals.push(r.ends.iter().map(|e| *e.forward.last().unwrap()).collect());
        reports.push(r);
    }
    let spread = finals
        .windows(2)
        .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    pass &= spread < 1e-2;
    Ok(Outcome {
        pass,
        detail: format!(
            "fmo {:?}, 16 ends x 3 truncations decreasing, worst k=12 diameter {worst:.2e} (< 1e-2), level spread {spread:.1e} (< 1e-2)",
            fmo.verdict
        ),
        output: json!({ "fmo": fmo, "reports": reports }),
    })
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

const CRITERIA: [Criterion; 9] = [
    ("harmonic reduction", harmonic_reduction),
    ("constant coefficient end to end", constant_end_to_end),
    ("solver oracle", solver_oracle),
    ("transform oracles", transform_oracles),
    ("prime-end showcase", prime_end_showcase),
    ("criteria matrix", criteria_matrix),
    ("orlicz calibration", orlicz_calibration),
    ("multivalent annulus", multivalent_annulus),
    ("extension property", extension_property),
];

fn serialize(o: &Result<Outcome>) -> String {
    match o {
        Ok(o) => serde_json::to_string(&o.output).unwrap_or_default(),
        Err(e) => format!("error: {e}"),
    }
}

fn main() -> ExitCode {
    let mut all = true;
    let mut first = Vec::with_capacity(CRITERIA.len());
    for (k, (name, f)) in CRITERIA.iter().enumerate() {
        let o = f();
        let (pass, detail) = match &o {
            Ok(o) => (o.pass, o.detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, k + 1);
        first.push(serialize(&o));
    }
    let mut differing = vec![];
    for (k, (_, f)) in CRITERIA.iter().enumerate() {
        if serialize(&f()) != first[k] {
            differing.push(k + 1);
        }
    }
    let bytes: usize = first.iter().map(|s| s.len()).sum();
    let pass = differing.is_empty();
    all &= pass;
    println!(
        "{} 10 determinism: rerun of 1-9 compared over {bytes} serialized bytes, differing {differing:?}",
        if pass { "PASS" } else { "FAIL" }
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
