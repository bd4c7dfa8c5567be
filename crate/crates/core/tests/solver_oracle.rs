mod common;

use common::{crop, gaussian_image, max_abs_diff};
use hodw::solver::{x_update, XMethod, XUpdate};
use hodw::{recover, recover_oracle, ColorImage, FilterKind, MeasurementSet, RecoveryConfig, SensingOperator};
use nalgebra::{DMatrix, DVector};

/// Materialized Phi_C, one column per pixel, built by sensing unit images.
fn dense_channel(op: &SensingOperator, c: usize) -> DMatrix<f64> {
    let hw = op.height() * op.width();
    let mut phi = DMatrix::zeros(op.m(), hw);
    for j in 0..hw {
        let mut e = ColorImage::zeros(op.height(), op.width());
        e.channel_mut(c)[j] = 1.0;
        let y = op.sense(&e).unwrap();
        for i in 0..op.m() {
            phi[(i, j)] = y.y[c][i];
        }
    }
    phi
}

/// Solves (Phi^T Phi + mu I) x = Phi^T y + mu v channel by channel.
fn normal_equations(op: &SensingOperator, y: &MeasurementSet, v: &ColorImage, mu: f64) -> ColorImage {
    let hw = op.height() * op.width();
    let mut out = ColorImage::zeros(op.height(), op.width());
    for c in 0..3 {
        let phi = dense_channel(op, c);
        let a = phi.transpose() * &phi + DMatrix::identity(hw, hw) * mu;
        let rhs = phi.transpose() * DVector::from_column_slice(&y.y[c]) + DVector::from_column_slice(v.channel(c)) * mu;
        let x = a.lu().solve(&rhs).unwrap();
        out.channel_mut(c).copy_from_slice(x.as_slice());
    }
    out
}

fn rel_err(a: &ColorImage, b: &ColorImage) -> f64 {
    (a.sub(b).norm_sq() / b.norm_sq()).sqrt()
}

#[test]
fn gradient_descent_matches_normal_equations() {
    let op = SensingOperator::build(8, 8, 0.5, 3).unwrap();
    let truth = gaussian_image(8, 8, 1).scale(50.0).map(|v| v + 120.0);
    let y = op.sense(&truth).unwrap();
    let target = gaussian_image(8, 8, 2).scale(30.0).map(|v| v + 100.0);
    let b = gaussian_image(8, 8, 3);
    let mu = 0.75;
    let want = normal_equations(&op, &y, &target.add(&b), mu);
    let gd = XUpdate { method: XMethod::Gradient, mu, eta: 1.0 / (op.gain() + mu), iters: 500, tol: 0.0 };
    let got = x_update(&y, &op, &target, &b, None, &gd).unwrap();
    assert!(rel_err(&got, &want) < 1e-6, "{}", rel_err(&got, &want));
}

#[test]
fn conjugate_gradient_matches_normal_equations() {
    // 7x9 pads to 64, so Phi^T Phi has a spread spectrum
    let op = SensingOperator::build(7, 9, 0.3, 8).unwrap();
    let y = op.sense(&gaussian_image(7, 9, 5).scale(40.0)).unwrap();
    let target = gaussian_image(7, 9, 6).scale(20.0);
    let b = ColorImage::zeros(7, 9);
    let mu = 0.0025;
    let want = normal_equations(&op, &y, &target, mu);
    let cg = XUpdate { method: XMethod::Conjugate, mu, eta: 0.0, iters: 200, tol: 1e-12 };
    let got = x_update(&y, &op, &target, &b, None, &cg).unwrap();
    assert!(rel_err(&got, &want) < 1e-8, "{}", rel_err(&got, &want));
}

#[test]
fn large_penalty_returns_target() {
    let op = SensingOperator::build(8, 8, 0.4, 1).unwrap();
    let target = gaussian_image(8, 8, 9).scale(20.0).map(|v| v + 128.0);
    let y = op.sense(&target).unwrap();
    let zero = ColorImage::zeros(8, 8);
    let mu = 1e6;
    for method in [XMethod::Gradient, XMethod::Conjugate] {
        let s = XUpdate { method, mu, eta: 1.0 / (op.gain() + mu), iters: 200, tol: 1e-12 };
        let x = x_update(&y, &op, &target, &zero, None, &s).unwrap();
        assert!(max_abs_diff(x.as_slice(), target.as_slice()) < 1e-3);
    }
}

#[test]
fn zero_data_recovers_zero() {
    let op = SensingOperator::build(24, 24, 0.3, 2).unwrap();
    let y = MeasurementSet::zeros(&op);
    let cfg = RecoveryConfig {
        patch: 6,
        group_size: 10,
        stride: 3,
        window: 11,
        outer_loops: Some(5),
        sigma_star: Some(10.0),
        ..Default::default()
    };
    let rec = recover(&y, &op, &cfg, None).unwrap();
    let mean = rec.image.as_slice().iter().map(|v| v.abs()).sum::<f64>() / rec.image.as_slice().len() as f64;
    assert!(mean < 1.0);
}

#[test]
fn full_rate_sanity() {
    let truth = crop("chelsea", 32);
    let op = SensingOperator::build(32, 32, 1.0, 4).unwrap();
    let y = op.sense(&truth).unwrap();
    let cfg = RecoveryConfig { outer_loops: Some(10), sigma_star: Some(1.0), ..Default::default() };
    let rec = recover(&y, &op, &cfg, Some(&truth)).unwrap();
    let p = rec.trace.final_psnr().unwrap();
    assert!(p > 40.0, "PSNR {p}");
}

#[test]
fn early_fidelity_decrease_and_oracle_noise_trend() {
    let truth = crop("astronaut", 32);
    let op = SensingOperator::build(32, 32, 0.3, 7).unwrap();
    let y = op.sense(&truth).unwrap();
    let cfg = RecoveryConfig {
        filter: FilterKind::Hard,
        sigma_star: Some(10.0),
        outer_loops: Some(30),
        ..Default::default()
    };
    let rec = recover(&y, &op, &cfg, Some(&truth)).unwrap();
    let fid: Vec<f64> = rec.trace.rows.iter().map(|r| r.data_fidelity).collect();
    assert!(fid[9] < fid[0], "fidelity {:?}", &fid[..10]);

    let oracle = recover_oracle(&y, &op, &cfg, &truth).unwrap();
    let sig: Vec<f64> = oracle.trace.rows.iter().map(|r| r.sigma_t.unwrap()).collect();
    assert!(sig.iter().all(|s| s.is_finite()));
    let tail = &sig[9..];
    let down = tail.windows(2).filter(|w| w[1] <= w[0]).count();
    assert!(down as f64 >= 0.8 * (tail.len() - 1) as f64, "sigma_t {sig:?}");
}
