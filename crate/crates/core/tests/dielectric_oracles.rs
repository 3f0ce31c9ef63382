use casimir_core::materials::{
    drude_dispersion, drude_eps, kk_to_imaginary_axis, DielectricModel, DrudeParams, OpticalRow, OpticalTable,
};

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn table_from(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> OpticalTable {
    let rows = log_grid(lo, hi, n)
        .into_iter()
        .map(|e| OpticalRow { energy_ev: e, eps2: f(e) })
        .collect();
    OpticalTable::new(rows, "synthetic").unwrap()
}

#[test]
fn single_lorentzian_matches_closed_form() {
    let (w0, g, f) = (5.0_f64, 0.5_f64, 50.0_f64);
    let eps2 = |w: f64| f * g * w / ((w0 * w0 - w * w).powi(2) + g * g * w * w);
    let table = table_from(eps2, 1e-3, 1e4, 6000);
    // negligible free-carrier part below the first row
    let drude = DrudeParams::new(1e-6, 1e-3).unwrap();
    for xi in [0.05, 0.5, 2.0, 5.0, 20.0, 100.0] {
        let got = kk_to_imaginary_axis(&table, &drude, xi).unwrap();
        let want = 1.0 + f / (w0 * w0 + xi * xi + g * xi);
        assert!((got / want - 1.0).abs() < 1e-3, "xi={xi}: {got} vs {want}");
    }
}

#[test]
fn drude_table_reproduces_drude_permittivity() {
    let d = DrudeParams::GOLD_DEFAULT;
    let table = table_from(|w| d.eps2_real_axis(w), 0.5, 1e4, 4000);
    let model = DielectricModel::tabulated(table, d, None).unwrap();
    for xi in log_grid(0.01, 100.0, 13) {
        let got = model.eval(xi).unwrap();
        let want = drude_eps(xi, &d).unwrap();
        assert!((got / want - 1.0).abs() < 1e-3, "xi={xi}: {got} vs {want}");
    }
    let (below, above) = model.splice_absorption().unwrap();
    assert!((below - above).abs() / above < 1e-2);
}

#[test]
fn numerical_drude_dispersion_matches_closed_form() {
    for d in [DrudeParams::GOLD_DEFAULT, DrudeParams::COPPER_DEFAULT] {
        for xi in log_grid(0.01, 100.0, 21) {
            let num = drude_dispersion(&d, xi).unwrap();
            let exact = drude_eps(xi, &d).unwrap();
            assert!((num / exact - 1.0).abs() < 1e-3, "xi={xi}");
        }
    }
}

#[test]
fn moving_the_splice_keeps_permittivity_continuous() {
    let d = DrudeParams::COPPER_DEFAULT;
    let table = table_from(|w| d.eps2_real_axis(w), 0.2, 1e4, 4000);
    let a = DielectricModel::tabulated(table.clone(), d, Some(0.5)).unwrap();
    let b = DielectricModel::tabulated(table, d, Some(0.52)).unwrap();
    for xi in [0.1, 0.5, 1.0, 10.0] {
        let (ea, eb) = (a.eval(xi).unwrap(), b.eval(xi).unwrap());
        assert!((ea - eb).abs() / ea < 1e-2, "xi={xi}");
    }
}
