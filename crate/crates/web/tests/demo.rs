use shiftbt_web::Demo;

#[test]
fn rejects_bad_orders() {
    assert!(Demo::new(1, 1).is_err());
    assert!(Demo::new(1, 61).is_err());
    let demo = Demo::new(1, 10).unwrap();
    assert!(demo.alpha_sweep(0, 1.0, -2, 2, 5).is_err());
    assert!(demo.error_curves(11, 1.0, 1.0, 1.0, 1.0).is_err());
}

#[test]
fn sweep_is_interleaved_and_optimum_is_no_worse() {
    let demo = Demo::new(3, 12).unwrap();
    let sweep = demo.alpha_sweep(4, 1.0, -3, 3, 61).unwrap();
    assert_eq!(sweep.len(), 122);
    assert!((sweep[0] - 1e-3).abs() < 1e-15 && (sweep[120] - 1e3).abs() < 1e-9);
    let best = sweep.chunks(2).map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let choice = demo.choose_alpha(4, 1.0).unwrap();
    assert!(choice.c_u <= best * (1.0 + 1e-9), "{} > {best}", choice.c_u);
    assert!(choice.alpha > 0.0 && choice.heuristic_fro > 0.0 && choice.heuristic_spectral > 0.0);
}

#[test]
fn shifted_values_dominate_hankel_values() {
    // appending columns to the controllability factor cannot shrink singular values
    let demo = Demo::new(5, 10).unwrap();
    let sigma = demo.sigma();
    let eta = demo.eta(0.7, 2.0).unwrap();
    assert_eq!(sigma.len(), 10);
    for (i, s) in sigma.iter().enumerate() {
        assert!(eta.get(i).copied().unwrap_or(0.0) >= s * (1.0 - 1e-9) - 1e-14, "index {i}");
    }
}

#[test]
fn error_curves_stay_below_bounds() {
    let demo = Demo::new(7, 14).unwrap();
    let c = demo.error_curves(5, 0.9, 1.0, 2.0, 3.0).unwrap();
    assert_eq!(c.times.len(), c.bt.len());
    assert_eq!(c.times.len(), c.jshift.len());
    assert!(c.times.iter().any(|&t| (t - 3.0).abs() < 1e-12));
    assert!(c.jshift_l2 <= c.jshift_bound * (1.0 + 1e-6));
    assert!(c.bt_l2 <= c.bt_bound * (1.0 + 1e-6));

    let small = Demo::new(7, 4).unwrap();
    let full = small.error_curves(4, 0.9, 1.0, 2.0, 0.0).unwrap();
    assert!(full.jshift.iter().all(|&e| e <= 1e-7), "lossless reduction");
}
