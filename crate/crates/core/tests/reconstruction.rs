use std::sync::Arc;
use std::time::Instant;

use deconv_core::kernel::build_kernel;
use deconv_core::reconstruction::*;
use deconv_core::zero_set::build_sequence;
use deconv_core::ErrorModel;

/// Sup of `|a - b|` relative to the sup of `|a|`.
fn rel_sup_diff(a: &BaseFunction, b: &BaseFunction) -> f64 {
    let lo = a.support().0.min(b.support().0) - 0.05;
    let hi = a.support().1.max(b.support().1) + 0.05;
    let (mut diff, mut size) = (0.0f64, 0.0f64);
    for i in 0..=20000 {
        let t = lo + (hi - lo) * i as f64 / 20000.0;
        diff = diff.max((a.eval(t) - b.eval(t)).abs());
        size = size.max(a.eval(t).abs());
    }
    diff / size
}

#[test]
fn fft_matches_closed_forms() {
    let k = build_kernel(3).unwrap();
    for model in [
        ErrorModel::uniform(1.0).unwrap(),
        ErrorModel::binomial(1).unwrap(),
        ErrorModel::binomial(2).unwrap(),
        ErrorModel::uniform_convolution(&[1.0], &[2]).unwrap(),
        ErrorModel::uniform_convolution(&[0.5, 1.0], &[1, 1]).unwrap(),
    ] {
        let t = Instant::now();
        let c = base_closed_form(&model, &k, 0.1).unwrap();
        let f = base_fft(&model, &k, 0.1).unwrap();
        let d = rel_sup_diff(&c, &f);
        println!(
            "{}: sup diff {d:e}, imag {:e}, {:?}",
            model.tag(),
            f.imag_residual,
            t.elapsed()
        );
        assert!(d < 1e-8, "{}: {d:e}", model.tag());
    }
}

/// `(8/(3π))(1 + x²)^{-3}`.
fn f0_r3(x: f64) -> f64 {
    8.0 / (3.0 * std::f64::consts::PI) * (1.0 + x * x).powi(-3)
}

fn bias_gap(model: &ErrorModel, h: f64, n_cap: u32, side: Side, x0: f64) -> f64 {
    let k = build_kernel(3).unwrap();
    let seq = Arc::new(build_sequence(model, n_cap).unwrap());
    let base = Arc::new(base_function(model, &k, h).unwrap());
    let l = build_l(seq, base, side);
    let fy = |y: f64| observation_density(model, &f0_r3, y).unwrap();
    let lhs = expected_kernel_value(&l, &fy, x0);
    let rhs = smoothed_density(&k, h, &f0_r3, x0) + truncation_term(model, &k, h, n_cap, side, &f0_r3, x0).unwrap();
    println!("{} {side:?} x0={x0}: {lhs:.12} vs {rhs:.12}", model.tag());
    (lhs - rhs).abs()
}

#[test]
fn bias_identity_uniform() {
    let u = ErrorModel::uniform(1.0).unwrap();
    for x0 in [0.0, 0.5, 2.0] {
        assert!(bias_gap(&u, 0.1, 100, Side::Plus, x0) < 1e-6);
    }
    assert!(bias_gap(&u, 0.1, 20, Side::Minus, -1.0) < 1e-6);
}

#[test]
fn bias_identity_with_multiplicity() {
    // m = 2 needs the exact remainder of the truncated series
    let u2 = ErrorModel::uniform_convolution(&[1.0], &[2]).unwrap();
    assert!(bias_gap(&u2, 0.2, 8, Side::Plus, 0.5) < 1e-6);
    assert!(bias_gap(&u2, 0.2, 8, Side::Minus, -0.5) < 1e-6);
    let b = ErrorModel::binomial(2).unwrap();
    assert!(bias_gap(&b, 0.2, 6, Side::Plus, 0.3) < 1e-6);
    assert!(bias_gap(&b, 0.2, 6, Side::Minus, -0.3) < 1e-6);
}

#[test]
fn truncated_series_vanishes_far_from_its_side() {
    let k = build_kernel(3).unwrap();
    let u = ErrorModel::uniform(1.0).unwrap();
    let seq = Arc::new(build_sequence(&u, 10).unwrap());
    let base = Arc::new(base_function(&u, &k, 0.1).unwrap());
    let plus = build_l(seq.clone(), base.clone(), Side::Plus);
    let minus = build_l(seq, base, Side::Minus);
    assert!(plus.support().0 >= 0.0);
    assert!(minus.support().1 <= 0.0);
    for t in [-3.0, -0.5, -0.05] {
        assert_eq!(plus.eval(t), 0.0);
        assert_eq!(minus.eval(-t), 0.0);
    }
}

#[test]
fn line_integral_matches_series() {
    let k = build_kernel(3).unwrap();
    let h = 0.2;
    for model in [
        ErrorModel::uniform(1.0).unwrap(),
        ErrorModel::uniform_gamma(1.0, 1.0, 2.0).unwrap(),
    ] {
        let seq = Arc::new(build_sequence(&model, 50).unwrap());
        let base = Arc::new(base_function(&model, &k, h).unwrap());
        let plus = build_l(seq.clone(), base.clone(), Side::Plus);
        let minus = build_l(seq, base, Side::Minus);
        for t in [0.3, 1.0, 2.7, 5.1] {
            let (li_p, li_m) = (
                l_via_line_integral(&model, &k, h, 0.5, t).unwrap(),
                l_via_line_integral(&model, &k, h, -0.5, -t).unwrap(),
            );
            let (sp, sm) = (plus.eval(t), minus.eval(-t));
            println!("{} t={t}: {} / {sp}, {} / {sm}", model.tag(), li_p.value, li_m.value);
            let scale = sp.abs().max(sm.abs()).max(1.0);
            let (dp, dm) = ((li_p.value - sp).abs(), (li_m.value - sm).abs());
            assert!(dp.min((li_p.value - sm).abs()) < 1e-4 * scale);
            assert!(dm.min((li_m.value - sp).abs()) < 1e-4 * scale);
        }
    }
}
