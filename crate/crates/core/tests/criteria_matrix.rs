//! Numeric verdicts on `K = r^(p-1) log^q(1/r)` against closed-form answers.

mod common;

use beltrami_core::criteria::{
    check_calibrated_integral, check_divergence_integral, check_growth, check_mean_oscillation, check_orlicz, criteria_profile,
    CriteriaOptions, GrowthMode, OrliczPhi, OrliczSpec, OscillationMode, TestFunctionFamily, Verdict,
};
use beltrami_core::field::{MuProfile, ProfileSource};
use beltrami_core::geometry::DomainSpec;
use beltrami_core::C64;

#[test]
fn power_log_verdict_matrix() {
    let opts = CriteriaOptions::default();
    let z0 = C64::new(0.0, 0.0);
    let mut mismatches = vec![];
    let mut checked = 0;
    for p in [-1, 0, 1] {
        for q in [0, 1, 2] {
            let source = ProfileSource::on_domain(MuProfile::PowerLog { center: z0, p, q }, DomainSpec::disk());
            let profile = criteria_profile(&source, z0, &opts).unwrap();
            let mut results = vec![
                check_divergence_integral(&profile, opts.eps0),
                check_growth(&profile, GrowthMode::Log),
                check_growth(&profile, GrowthMode::Loglog),
                check_mean_oscillation(&source, z0, OscillationMode::Fmo, &opts),
                check_mean_oscillation(&source, z0, OscillationMode::BmoLocal, &opts),
                check_mean_oscillation(&source, z0, OscillationMode::LimsupMean, &opts),
            ];
            for family in [TestFunctionFamily::InverseT, TestFunctionFamily::InverseTLog] {
                results.push(check_calibrated_integral(&source, z0, &family, &opts).unwrap());
            }
            for phi in [OrliczPhi::Exp { alpha: 1.0 }, OrliczPhi::Power { p: 2.0 }] {
                results.push(check_orlicz(&source, &OrliczSpec::new(phi)).unwrap());
            }
            for r in results {
                checked += 1;
                let want = common::power_log_oracle(&r.criterion, p, q);
                println!("p={p:>2} q={q} {:<26} numeric={:?} expected={:?}", r.criterion, r.numeric, want);
                if r.numeric != want || r.verdict != want {
                    mismatches.push(format!("({p},{q}) {}: {:?} {:?}", r.criterion, r.numeric, r.fitted));
                }
            }
        }
    }
    assert_eq!(checked, 90);
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}

#[test]
fn grid_sources_report_limited_resolution() {
    let domain = DomainSpec::disk();
    let field = beltrami_core::field::sample_mu(&MuProfile::Constant { k: C64::new(0.2, 0.0) }, &domain, 64, 0.0).unwrap();
    let k = field.dilatation_field();
    let opts = CriteriaOptions::default();
    // eps0 / h = 0.25 / 0.034: too few dyadic levels above 2h.
    let r = check_mean_oscillation(&k, C64::new(0.0, 0.0), OscillationMode::Fmo, &opts);
    assert_eq!(r.verdict, Verdict::Inconclusive);
    let fine = beltrami_core::field::sample_mu(&MuProfile::Constant { k: C64::new(0.2, 0.0) }, &domain, 1024, 0.0).unwrap();
    let k = fine.dilatation_field();
    let r = check_mean_oscillation(&k, C64::new(0.0, 0.0), OscillationMode::Fmo, &opts);
    assert_eq!(r.verdict, Verdict::Pass, "{:?}", r);
}
