use levyfield::field::GridField;
use levyfield::levy::{
    area_increment, bubble_variance, decompose, divergence_fit, mc_area_variance, quadrature_scan,
    resummation_integral, resummed_bubble_variance, signed_area, singular_part, singular_parts,
    windowed_bubble_variance, AreaConfig, AreaPart, McRow,
};
use levyfield::partition::{PartitionOfUnity, Window};
use levyfield::sampler::{sample_phi_stationary, SamplerConfig};
use proptest::prelude::*;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// `π ∫_0^∞ ξ^{-4α} χ^{→ρ}(ξ)² dξ` after the substitution `u = ξ^{1-4α}`, which removes the
/// singularity at the origin. For a cumulative window the one-bubble amplitude at zero
/// momentum collapses to `ξ χ^{→ρ}(ξ)² / 2`, so this is the bubble variance.
fn bubble_oracle(alpha: f64, rho: i32, m: f64) -> f64 {
    let p = PartitionOfUnity::smooth(m);
    let s = 1.0 - 4.0 * alpha;
    let flat = m.powi(rho).powf(s);
    let top = m.powi(rho + 1).powf(s);
    let g = |u: f64| p.weight(u.powf(1.0 / s), Window::UpTo(rho)).powi(2);
    std::f64::consts::PI * (flat + simpson(g, flat, top, 20_000)) / s
}

/// `∫_ℝ 2(1-cos η)/η² g(η) dη` with `g = |η|^s / (|η|^s + c)`: Simpson on `[0, L]` plus the
/// non-oscillating tail `∫_L^∞ 2g/η²` (the cosine part is `O(1/L²)`).
fn resummation_oracle(alpha: f64, rho: i32, lambda: f64, m: f64) -> f64 {
    let s = 1.0 - 4.0 * alpha;
    let c = lambda * lambda * m.powf(rho as f64 * s);
    let g = |e: f64| {
        let p = e.powf(s);
        p / (p + c)
    };
    let body = |e: f64| if e == 0.0 { 0.0 } else { 2.0 * (1.0 - e.cos()) / (e * e) * g(e) };
    // Near 0 the integrand behaves like η^s; substitute η = v^{1/s} on [0, 1].
    let near = simpson(|v: f64| if v == 0.0 { 0.0 } else { body(v.powf(1.0 / s)) * v.powf(1.0 / s - 1.0) / s }, 0.0, 1.0, 20_000);
    let l = 2.0 * std::f64::consts::PI * 4000.0;
    let mid = simpson(body, 1.0, l, 4_000_000);
    let tail = simpson(|v: f64| if v == 0.0 { 0.0 } else { 2.0 * g(1.0 / v) }, 0.0, 1.0 / l, 2_000);
    2.0 * (near + mid + tail)
}

fn field(seed: u64, rho: i32) -> GridField<f64> {
    sample_phi_stationary(&SamplerConfig::new(512, 16.0, -1, rho, seed), 0.2, 0).unwrap()
}

#[test]
fn vanishing_second_field() {
    let p = PartitionOfUnity::smooth(2.0);
    let f = field(1, 3);
    let a = decompose(&f, -1, 3, &p).unwrap();
    let b = decompose(&f.zeros_like(), -1, 3, &p).unwrap();
    let pair = singular_parts(&a, &b).unwrap();
    assert!(pair.plus.values.iter().all(|v| *v == 0.0));
    assert!(pair.minus.values.iter().all(|v| *v == 0.0));
}

#[test]
fn single_scale_is_half_the_diagonal() {
    let p = PartitionOfUnity::smooth(2.0);
    let (f, g) = (field(2, 3), field(3, 3));
    let a = decompose(&f, 2, 2, &p).unwrap();
    let b = decompose(&g, 2, 2, &p).unwrap();
    let plus = singular_part(&a, &b, AreaPart::Plus).unwrap();
    for i in 0..f.len() {
        assert_eq!(plus.values[i], 0.5 * a.derivatives[0].values[i] * b.components[0].values[i]);
    }
}

#[test]
fn swap_maps_plus_mixed_sum_to_minus() {
    let p = PartitionOfUnity::smooth(2.0);
    let (f, g) = (field(4, 4), field(5, 4));
    let a = decompose(&f, 0, 4, &p).unwrap();
    let b = decompose(&g, 0, 4, &p).unwrap();
    let plus = singular_part(&a, &b, AreaPart::Plus).unwrap();
    let minus_swapped = singular_part(&b, &a, AreaPart::Minus).unwrap();
    let n = f.len();
    let scales = a.components.len();
    for i in 0..n {
        let mut mixed = 0.0;
        for j in 0..scales {
            for k in j + 1..scales {
                mixed += a.derivatives[j].values[i] * b.components[k].values[i];
            }
        }
        let diag_ab: f64 = (0..scales).map(|j| 0.5 * a.derivatives[j].values[i] * b.components[j].values[i]).sum();
        let diag_ba: f64 = (0..scales).map(|j| 0.5 * b.derivatives[j].values[i] * a.components[j].values[i]).sum();
        let tol = 1e-10 * (1.0 + mixed.abs());
        assert!((plus.values[i] - diag_ab - mixed).abs() < tol);
        assert!((minus_swapped.values[i] - diag_ba - mixed).abs() < tol);
    }
}

#[test]
fn mismatched_decompositions_rejected() {
    let p = PartitionOfUnity::smooth(2.0);
    let f = field(6, 3);
    let a = decompose(&f, 0, 3, &p).unwrap();
    let b = decompose(&f, 1, 3, &p).unwrap();
    assert!(singular_parts(&a, &b).is_err());
    assert!(decompose(&f, 3, 1, &p).is_err());
}

#[test]
fn linear_paths_have_half_area() {
    let t: GridField<f64> = GridField::from_fn(-1.0, 1.0 / 64.0, 256, |x| x).unwrap();
    assert!((area_increment(&t, &t, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
    assert!(signed_area(&t, &t, 0.0, 1.0).unwrap().abs() < 1e-15);
    assert!(area_increment(&t, &t, 1.0, 0.0).is_err());
    assert!(area_increment(&t, &t, 0.0, 1.0 / 3.0).is_err());
}

#[test]
fn sin_cos_area_is_second_order() {
    // ∫_0^1 cos t1 ∫_0^{t1} (-sin t2) dt2 dt1 = 1/2 + sin 2 / 4 - sin 1.
    let exact = 0.5 + 2f64.sin() / 4.0 - 1f64.sin();
    let err = |k: i32| {
        let h = 0.5f64.powi(k);
        let n = (4.0 / h) as usize;
        let s = GridField::from_fn(-2.0, h, n, f64::sin).unwrap();
        let c = GridField::from_fn(-2.0, h, n, f64::cos).unwrap();
        (area_increment(&s, &c, 0.0, 1.0).unwrap() - exact).abs()
    };
    let (e1, e2) = (err(6), err(7));
    assert!(e1 < 1e-3);
    let order = (e1 / e2).log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}");
}

#[test]
fn chen_relation() {
    let (f, g) = (field(7, 3), field(8, 3));
    let (s, t, u) = (-2.0, 0.5, 3.0);
    let whole = area_increment(&f, &g, s, u).unwrap();
    let split = area_increment(&f, &g, s, t).unwrap() + area_increment(&f, &g, t, u).unwrap();
    let inc = |h: &GridField<f64>, a: f64, b: f64| h.values[h.index_of(b).unwrap()] - h.values[h.index_of(a).unwrap()];
    let cross = inc(&f, t, u) * inc(&g, s, t);
    assert!((whole - split - cross).abs() < 1e-12 * (1.0 + whole.abs()));
}

#[test]
fn bubble_matches_closed_oracle() {
    for (alpha, rho, m) in [(0.2, 4, 2.0), (0.2, 7, 2.0), (0.15, 5, 2.0), (0.2, 3, 3.0)] {
        let q = bubble_variance(alpha, rho, m).unwrap();
        let o = bubble_oracle(alpha, rho, m);
        assert!((q / o - 1.0).abs() < 1e-8, "alpha {alpha} rho {rho}: {q} vs {o}");
    }
    assert!(bubble_variance(0.3f64, 4, 2.0).is_err());
}

#[test]
fn divergence_slope() {
    for alpha in [0.15, 0.2] {
        let rows = quadrature_scan(alpha, 0.0, 2.0, &(4..=10).collect::<Vec<_>>()).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].variance > w[0].variance);
        }
        let fit = divergence_fit(&rows).unwrap();
        let expected = (1.0 - 4.0 * alpha) * 2f64.ln();
        assert!((fit.slope / expected - 1.0).abs() < 0.05, "slope {} vs {expected}", fit.slope);
    }
}

#[test]
fn above_quarter_band_variance_converges() {
    // With a finite infrared edge the α = 0.3 bubble stays bounded in ρ: successive
    // increments shrink geometrically by M^{1-4α}.
    let p = PartitionOfUnity::smooth(2.0);
    let v: Vec<f64> = (2..=10)
        .map(|rho| windowed_bubble_variance(0.3, Window::Band { lo: 0, hi: rho }, p, AreaPart::Plus).unwrap())
        .collect();
    let ratio = 2f64.powf(1.0 - 4.0 * 0.3);
    let steps: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    for w in steps[2..].windows(2) {
        assert!(w[1] > 0.0 && (w[1] / w[0] / ratio - 1.0).abs() < 0.02, "{w:?}");
    }
    let limit = v[v.len() - 1] + steps[steps.len() - 1] * ratio / (1.0 - ratio);
    assert!(limit < 1.5 * v[v.len() - 1]);
}

#[test]
fn resummation_small_coupling_limit() {
    for rho in [4, 8] {
        let b: f64 = bubble_variance(0.2, rho, 2.0).unwrap();
        let r = resummed_bubble_variance(0.2, rho, 1e-8, 2.0).unwrap();
        assert!((r / b - 1.0).abs() < 1e-6);
    }
    let zero: f64 = resummation_integral(0.2, 6, 0.0, 2.0).unwrap();
    assert!((zero / (2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-9);
    assert!(resummed_bubble_variance(0.2, 6, -0.1, 2.0).is_err());
}

#[test]
fn resummation_matches_oracle() {
    for (rho, lambda) in [(6, 0.1), (12, 0.1), (8, 0.5)] {
        let q: f64 = resummation_integral(0.2, rho, lambda, 2.0).unwrap();
        let o = resummation_oracle(0.2, rho, lambda, 2.0);
        assert!((q / o - 1.0).abs() < 1e-6, "rho {rho} lambda {lambda}: {q} vs {o}");
    }
}

#[test]
fn resummed_growth_between_six_and_twelve() {
    // At λ = 0.1 the suppression λ²M^{ρ(1-4α)} is still below 0.06 at ρ = 12, so the
    // ratio is close to the free value 2^{6·0.2} ≈ 2.297.
    let r6 = resummed_bubble_variance(0.2, 6, 0.1, 2.0).unwrap();
    let r12 = resummed_bubble_variance(0.2, 12, 0.1, 2.0).unwrap();
    let oracle = bubble_oracle(0.2, 12, 2.0) * resummation_oracle(0.2, 12, 0.1, 2.0)
        / (bubble_oracle(0.2, 6, 2.0) * resummation_oracle(0.2, 6, 0.1, 2.0));
    assert!((r12 / r6 / oracle - 1.0).abs() < 1e-6);
    assert!((r12 / r6 - 2.235_5).abs() < 1e-3, "{}", r12 / r6);
    assert!(r12 / r6 < 2f64.powf(1.2));
}

#[test]
fn resummed_decreases_in_coupling() {
    let lambdas = [0.0, 0.05, 0.1, 0.3, 1.0, 3.0];
    let v: Vec<f64> = lambdas.iter().map(|&l| resummed_bubble_variance(0.2, 8, l, 2.0).unwrap()).collect();
    for w in v.windows(2) {
        assert!(w[1] < w[0]);
    }
}

fn mc(rho_min: i32, rho_max: i32, part: AreaPart, seed: u64) -> Vec<McRow> {
    let cfg = AreaConfig {
        alpha: 0.2,
        lambda: 0.0,
        rho_min,
        rho_max,
        replicas: 2000,
        lag: 1.0,
        windows_per_path: 8,
        part,
        sampler: SamplerConfig::new(2048, 32.0, 0, rho_max, seed),
    };
    mc_area_variance(&cfg).unwrap()
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let a = mc(2, 2, AreaPart::Plus, 5);
    let b = mc(2, 2, AreaPart::Plus, 11);
    for r in a.iter().chain(&b) {
        assert!((r.variance - r.oracle).abs() < 3.0 * r.stderr, "{r:?}");
    }
    let (x, y) = (&a[0], &b[0]);
    assert!((x.variance - y.variance).abs() < 3.0 * x.stderr.hypot(y.stderr));
    let single = &mc(0, 0, AreaPart::Minus, 3)[0];
    assert!((single.variance - single.oracle).abs() < 3.0 * single.stderr, "{single:?}");
}

#[test]
fn monte_carlo_preconditions() {
    let mut cfg = AreaConfig {
        alpha: 0.2,
        lambda: 0.0,
        rho_min: 1,
        rho_max: 1,
        replicas: 999,
        lag: 1.0,
        windows_per_path: 4,
        part: AreaPart::Plus,
        sampler: SamplerConfig::new(1024, 16.0, 0, 1, 1),
    };
    assert!(mc_area_variance(&cfg).is_err());
    cfg.replicas = 1000;
    cfg.lambda = 0.1;
    assert!(mc_area_variance(&cfg).is_err());
    cfg.lambda = 0.0;
    cfg.rho_min = -1;
    assert!(mc_area_variance(&cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bilinear_in_each_field(c in -3.0f64..3.0, s1 in 0u64..1000, s2 in 0u64..1000, s3 in 0u64..1000) {
        let p = PartitionOfUnity::smooth(2.0);
        let (f, g, h) = (field(s1, 3), field(s2 + 1000, 3), field(s3 + 2000, 3));
        let mix = g.add(&h.scale(c)).unwrap();
        let d = |x: &GridField<f64>| decompose(x, -1, 3, &p).unwrap();
        let (df, dg, dh, dm) = (d(&f), d(&g), d(&h), d(&mix));
        for part in [AreaPart::Plus, AreaPart::Minus] {
            let lhs = singular_part(&df, &dm, part).unwrap();
            let r1 = singular_part(&df, &dg, part).unwrap();
            let r2 = singular_part(&df, &dh, part).unwrap();
            for i in 0..f.len() {
                let rhs = r1.values[i] + c * r2.values[i];
                prop_assert!((lhs.values[i] - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
            }
        }
    }

    #[test]
    fn signed_area_antisymmetric(s1 in 0u64..1000, s2 in 0u64..1000, a in 0usize..200, len in 1usize..300) {
        let (f, g) = (field(s1, 3), field(s2 + 5000, 3));
        let (s, t) = (f.time(a), f.time(a + len));
        let x = signed_area(&f, &g, s, t).unwrap();
        let y = signed_area(&g, &f, s, t).unwrap();
        prop_assert!((x + y).abs() < 1e-12 * (1.0 + x.abs()));
        prop_assert_eq!(signed_area(&f, &f, s, t).unwrap(), 0.0);
    }
}
