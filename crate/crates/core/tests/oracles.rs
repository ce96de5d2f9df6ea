mod common;

use common::Family;
use forest_renewal::simulate::tail_integral_profile;
use forest_renewal::{BetaFunction, BetaTable, GrowthFunction, History, Model, ModelParams, TailMode};
use num_complex::Complex64;

fn nicholson(alpha: f64, p: f64) -> Model {
    Model::new(ModelParams::nicholson(alpha, p).unwrap())
}

#[test]
fn r_matches_marched_heights() {
    for &(alpha, p) in &[(6.0, 5.0), (6.0, 1.0), (3.0, 2.5)] {
        let model = nicholson(alpha, p);
        let fam = Family { alpha, p };
        for &b in &[0.0, 0.05, 0.47, 1.0, 3.2, 10.0] {
            let got = model.reproduction_r(b).unwrap();
            let want = common::reproduction_r(&fam, b);
            assert!((got - want).abs() < 1e-8, "α={alpha} p={p} b={b}: {got} vs {want}");
        }
    }
}

#[test]
fn r_at_zero_closed_form() {
    for &(alpha, p) in &[(6.0, 1.0), (6.0, 5.0), (2.0, 0.3)] {
        let r0 = nicholson(alpha, p).reproduction_r(0.0).unwrap();
        let exact = alpha * p / (1.0 + p) * (1.0 / (1.0 + p));
        assert!((r0 - exact).abs() < 1e-8, "{r0} vs {exact}");
    }
}

#[test]
fn r_decays_for_large_birth_rates() {
    assert!(nicholson(6.0, 5.0).reproduction_r(100.0).unwrap() < 0.05);
}

#[test]
fn change_of_variables_agrees() {
    let model = nicholson(6.0, 5.0);
    for &b in &[0.05, 0.2, 0.47, 1.0, 3.2, 7.0, 10.0] {
        let f = model.map_f(b).unwrap();
        let cov = model.map_f_change_of_variables(b).unwrap();
        assert!(((f - cov) / f).abs() < 1e-6, "b={b}: {f} vs {cov}");
    }
    assert!(model.map_f_change_of_variables(0.0).is_err());
    assert_eq!(model.map_f(0.0).unwrap(), 0.0);
}

#[test]
fn height_matches_direct_quadrature() {
    let params = ModelParams::nicholson(6.0, 5.0).unwrap();
    let fam = Family { alpha: 6.0, p: 5.0 };
    let x = params.height_at_age(1.0, 1.0).unwrap();
    assert!((x - common::height(&fam, 1.0, 1.0)).abs() < 1e-8);
    for &(b, a) in &[(0.3, 0.2), (2.0, 4.0), (9.0, 12.0), (0.01, 30.0)] {
        let got = params.height_at_age(b, a).unwrap();
        assert!((got - common::height(&fam, b, a)).abs() < 1e-8, "b={b} a={a}");
    }
    assert_eq!(params.height_at_age(0.0, 2.0).unwrap(), 10.0);
}

#[test]
fn height_kernel_matches_tau_integral() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let params = ModelParams::nicholson(6.0, 5.0).unwrap();
    for _ in 0..30 {
        let a: f64 = rng.gen_range(0.0..20.0);
        let i_a: f64 = rng.gen_range(0.0..2.0) * (-a).exp();
        // x_m + ∫_0^a g(e^{-μ(τ-a)} I_a) dτ
        let n = 20_000;
        let h = a / n as f64;
        let f = |tau: f64| 5.0 * (-((a - tau).exp() * i_a)).exp();
        let mut s = f(0.0) + f(a);
        for k in 1..n {
            s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let want = s * h / 3.0;
        let got = params.height_kernel(a, i_a).unwrap();
        assert!((got - want).abs() < 1e-8, "a={a} I={i_a}: {got} vs {want}");
    }
}

#[test]
fn tabulated_exponential_growth_matches_closed_form() {
    let samples: Vec<(f64, f64)> = (0..=200).map(|k| (0.1 * k as f64, 5.0 * (-0.1 * k as f64).exp())).collect();
    let table = GrowthFunction::Table(forest_renewal::GrowthTable::new(&samples).unwrap());
    let exact = GrowthFunction::ExpDecay { p: 5.0 };
    for &(lo, hi) in &[(0.01, 0.5), (0.3, 4.0), (1.0, 50.0)] {
        let a = table.antiderivative(lo, hi).unwrap();
        let b = exact.antiderivative(lo, hi).unwrap();
        assert!((a - b).abs() < 1e-4, "[{lo}, {hi}]: {a} vs {b}");
    }
}

fn central_difference(f: impl Fn(f64) -> f64, b: f64) -> f64 {
    let h = 1e-4 * b;
    (f(b + h) - f(b - h)) / (2.0 * h)
}

#[test]
fn derivatives_match_finite_differences() {
    for &(alpha, p) in &[(6.0, 5.0), (6.0, 1.0)] {
        let model = nicholson(alpha, p);
        for &b in &[0.2, 1.0, 3.0] {
            let fd = central_difference(|x| model.reproduction_r(x).unwrap(), b);
            let rp = model.r_prime(b).unwrap();
            assert!((rp - fd).abs() <= 1e-5 * fd.abs().max(1.0), "R′({b}): {rp} vs {fd}");
            let fd = central_difference(|x| model.map_f(x).unwrap(), b);
            let fp = model.f_prime(b).unwrap();
            assert!((fp - fd).abs() <= 1e-5 * fd.abs().max(1.0), "F′({b}): {fp} vs {fd}");
        }
    }
    let model = nicholson(6.0, 5.0);
    assert!((model.f_prime(0.0).unwrap() - 5.0 / 6.0).abs() < 1e-8);
    assert!(model.r_prime(0.0).is_err());
}

#[test]
fn characteristic_functions_match_marched_oracle() {
    let fam = Family { alpha: 6.0, p: 5.0 };
    let model = nicholson(6.0, 5.0);
    for &b in &[0.0, 0.4783, 1.0, 3.19] {
        let chf = model.characteristic(b).unwrap();
        for &(re, im) in &[(0.0, 0.0), (-0.5, 0.0), (1.0, 0.0), (2.0, 3.0), (-0.3, 7.5), (0.2, 40.0)] {
            let l = Complex64::new(re, im);
            let (c, x) = (chf.chi(l).unwrap(), chf.xi(l).unwrap());
            let (co, xo) = (common::chi(&fam, b, l), common::xi(&fam, b, l));
            // The oracle's fixed step resolves e^{-iωa} only to ~1e-7 at ω = 40.
            let tol = if im > 10.0 { 1e-6 } else { 1e-8 };
            assert!((c - co).norm() < tol, "χ b={b} λ={l}: {c} vs {co}");
            assert!((x - xo).norm() < tol, "ξ b={b} λ={l}: {x} vs {xo}");
        }
    }
}

#[test]
fn characteristic_identities_at_reference_points() {
    let model = nicholson(6.0, 5.0);
    let scan = model.find_equilibria(10.0, 400).unwrap();
    for rec in &scan.records {
        let chf = model.characteristic(rec.b).unwrap();
        for l in [
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 3.0),
        ] {
            let lhs = (1.0 + l) * chf.xi(l).unwrap() - model.params.beta_at_xm();
            assert!((lhs - chf.chi(l).unwrap()).norm() < 1e-8);
        }
        let zero = Complex64::new(0.0, 0.0);
        assert!((chf.xi(zero).unwrap().re - rec.f_prime).abs() < 1e-6);
        assert!((chf.chi(zero).unwrap().re - (rec.f_prime - model.params.beta_at_xm())).abs() < 1e-6);
        assert!(chf.xi(Complex64::new(50.0, 0.0)).unwrap().re < 0.05);
    }
}

#[test]
fn dominant_roots_are_pinned_and_cross_checked() {
    let model = nicholson(6.0, 5.0);
    let fam = Family { alpha: 6.0, p: 5.0 };
    let scan = model.find_equilibria(10.0, 400).unwrap();
    let b2 = scan.records[1].b;
    let b3 = scan.records[2].b;
    let l2 = model.characteristic(b2).unwrap().dominant_real_root().unwrap();
    let l3 = model.characteristic(b3).unwrap().dominant_real_root().unwrap();
    assert!((l2 - 0.223_445_805_68).abs() < 1e-8, "{l2}");
    assert!((l3 + 0.443_261_742_87).abs() < 1e-8, "{l3}");
    let o2 = common::bisect(|l| common::xi_midpoint(&fam, b2, l) - 1.0, 0.0, 2.0);
    let o3 = common::bisect(|l| common::xi_midpoint(&fam, b3, l) - 1.0, -0.99, 0.0);
    assert!((l2 - o2).abs() < 1e-6, "{l2} vs {o2}");
    assert!((l3 - o3).abs() < 1e-6, "{l3} vs {o3}");
}

#[test]
fn manufactured_critical_equilibrium_has_zero_root() {
    // Tabulated Nicholson shape, rescaled so that R peaks exactly at 1: there
    // R(b*) = 1 and R′(b*) = 0, hence F′(b*) = 1.
    let shape: Vec<(f64, f64)> = (0..=800).map(|k| {
        let x = 0.05 * k as f64;
        (x, 6.0 * x * (-x).exp())
    }).collect();
    let build = |scale: f64| {
        let pts: Vec<(f64, f64)> = shape.iter().map(|&(x, y)| (x, scale * y)).collect();
        let beta = BetaFunction::Table(BetaTable::new(&pts).unwrap());
        Model::new(ModelParams::new(1.0, 0.0, beta, GrowthFunction::ExpDecay { p: 5.0 }).unwrap())
    };
    let base = build(1.0);
    let b_star = common::bisect(|b| base.r_prime(b).unwrap(), 0.6, 3.0);
    let scale = 1.0 / base.reproduction_r(b_star).unwrap();
    let model = build(scale);
    assert!((model.reproduction_r(b_star).unwrap() - 1.0).abs() < 1e-12);
    assert!((model.f_prime(b_star).unwrap() - 1.0).abs() < 1e-9);
    let l0 = model.characteristic(b_star).unwrap().dominant_real_root().unwrap();
    assert!(l0.abs() < 1e-8, "λ₀ = {l0}");
}

#[test]
fn constant_history_reproduces_f() {
    let params = ModelParams::nicholson(6.0, 5.0).unwrap();
    let model = Model::new(params.clone());
    let functional = |c: f64, h: f64| {
        let n = (30.0 / h).round() as usize;
        let hist = History::from_fn(h, n, TailMode::ConstantLast, |_| c).unwrap();
        params.apply_functional(&hist).unwrap()
    };
    for &c in &[0.1, 0.47, 1.0, 3.2] {
        let f = model.map_f(c).unwrap();
        let h = 0.02;
        let coarse = functional(c, h);
        assert!((coarse - f).abs() <= (5.0 * h * h).max(1e-6), "c={c}: {coarse} vs {f}");
        // The trapezoid error expands in h²; one Richardson step removes it.
        let extrapolated = (4.0 * functional(c, 0.5 * h) - coarse) / 3.0;
        assert!((extrapolated - f).abs() < 1e-6, "c={c}: {extrapolated} vs {f}");
    }
    let zero = History::from_fn(0.05, 600, TailMode::Zero, |_| 0.0).unwrap();
    assert_eq!(params.apply_functional(&zero).unwrap(), 0.0);
}

#[test]
fn tail_profile_matches_closed_form() {
    // b(t - s) = sin²(s) + 1 = 3/2 - cos(2s)/2
    let h = 1e-3;
    let n = 30_000;
    let samples: Vec<f64> = (0..=n).map(|k| (k as f64 * h).sin().powi(2) + 1.0).collect();
    let exact = |a: f64| {
        let e = (-a).exp();
        1.5 * e - 0.5 * e * ((2.0 * a).cos() - 2.0 * (2.0 * a).sin()) / 5.0
    };
    let profile = tail_integral_profile(1.0, h, &samples, exact(30.0));
    for k in (0..=n).step_by(997) {
        let a = k as f64 * h;
        assert!((profile[k] - exact(a)).abs() < 1e-6, "a={a}");
    }
    assert!(profile.windows(2).all(|w| w[0] >= w[1]));
}
