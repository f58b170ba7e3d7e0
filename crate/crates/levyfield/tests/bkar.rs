use levyfield::bkar::{
    bkar1_verify, bkar2_verify, enumerate_forests, forest_sum, pair_count, pair_index, ClusterToy, VertexType,
};
use levyfield::poly::Polynomial;
use levyfield::wick::GaussianVector;
use num_rational::Rational64;
use proptest::prelude::*;

// Brute force over all edge subsets of K_n, keeping the acyclic ones.
fn acyclic_subsets(n: usize, roots: &[bool]) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let mut comp: Vec<usize> = (0..n).collect();
        let mut ok = true;
        let chosen: Vec<(usize, usize)> =
            pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| *p).collect();
        for &(a, b) in &chosen {
            let (ca, cb) = (comp[a], comp[b]);
            if ca == cb {
                ok = false;
                break;
            }
            for c in comp.iter_mut() {
                if *c == ca {
                    *c = cb;
                }
            }
        }
        if ok {
            let fine = (0..n).all(|c| (0..n).filter(|&v| comp[v] == c && roots[v]).count() <= 1);
            if fine {
                out.push(chosen);
            }
        }
    }
    out
}

// Exact forest sum: split the weight cube by edge orderings and integrate monomials on the
// ordered simplex with ∫ Π u_k^{a_k} = Π_k 1/Σ_{i<=k}(a_i+1).
fn rational_forest_sum(z: &Polynomial<Rational64>, n: usize, roots: &[bool]) -> Rational64 {
    let merged = |v: usize| if roots[v] { roots.iter().position(|&r| r).unwrap() } else { v };
    let mut total = Rational64::from_integer(0);
    for edges in acyclic_subsets(n, roots) {
        let mut d = z.clone();
        for &(a, b) in &edges {
            d = d.derivative(pair_index(n, a, b));
        }
        if d.is_zero() {
            continue;
        }
        // For each pair: None = disconnected, Some(vec![]) = frozen, Some(path edges).
        let path_of = |a: usize, b: usize| -> Option<Vec<usize>> {
            let (s, t) = (merged(a), merged(b));
            if s == t {
                return Some(vec![]);
            }
            let mut best: Option<Vec<usize>> = None;
            let mut stack = vec![(s, vec![], usize::MAX)];
            while let Some((v, path, from)) = stack.pop() {
                if v == t {
                    best = Some(path);
                    break;
                }
                for (k, &(x, y)) in edges.iter().enumerate() {
                    let (x, y) = (merged(x), merged(y));
                    if k == from {
                        continue;
                    }
                    let next = if x == v { y } else if y == v { x } else { continue };
                    let mut p = path.clone();
                    p.push(k);
                    stack.push((next, p, k));
                }
            }
            best
        };
        let m = edges.len();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut perms = Vec::new();
        permute(&mut perm, 0, &mut perms);
        for order in perms {
            // rank[e] = position of edge e in increasing weight order
            let mut rank = vec![0; m];
            for (pos, &e) in order.iter().enumerate() {
                rank[e] = pos;
            }
            for (exps, c) in d.terms() {
                let mut a = vec![0u32; m];
                let mut zero = false;
                for (p, &k) in exps.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    let (x, y) = levyfield::bkar::pair_at(n, p);
                    match path_of(x, y) {
                        None => zero = true,
                        Some(path) if path.is_empty() => {}
                        Some(path) => a[path.iter().map(|&e| rank[e]).min().unwrap()] += k,
                    }
                }
                if zero {
                    continue;
                }
                let mut val = *c;
                let mut acc = 0i64;
                for &ak in &a {
                    acc += ak as i64 + 1;
                    val /= Rational64::from_integer(acc);
                }
                total += val;
            }
        }
    }
    total
}

fn permute(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, out);
        v.swap(k, i);
    }
}

fn to_f64(p: &Polynomial<Rational64>) -> Polynomial<f64> {
    p.map_coeffs(|c| *c.numer() as f64 / *c.denom() as f64)
}

fn r(x: i64) -> Rational64 {
    Rational64::from_integer(x)
}

#[test]
fn forest_counts_match_brute_force() {
    for n in 0..=6 {
        let plain = vec![false; n];
        assert_eq!(enumerate_forests(n, None).unwrap().len(), acyclic_subsets(n, &plain).len(), "n = {n}");
    }
    assert_eq!(enumerate_forests(3, None).unwrap().len(), 7);
    assert_eq!(enumerate_forests(4, None).unwrap().len(), 38);
    assert!(enumerate_forests(8, None).is_err());
}

#[test]
fn typed_forest_counts_match_brute_force() {
    use VertexType::*;
    let types = [Plain, Root, Plain, Root, Plain];
    let roots: Vec<bool> = types.iter().map(|t| *t == Root).collect();
    let f = enumerate_forests(5, Some(&types)).unwrap();
    assert_eq!(f.len(), acyclic_subsets(5, &roots).len());
}

#[test]
fn weakening_is_path_minimum() {
    let f = enumerate_forests(3, None).unwrap().into_iter().find(|f| f.edges == vec![(0, 1), (1, 2)]).unwrap();
    assert_eq!(f.z_of_w(0, 2, &[0.3, 0.7]).unwrap(), 0.3);
    assert_eq!(f.z_of_w(0, 1, &[0.3, 0.7]).unwrap(), 0.3);
    assert_eq!(f.z_of_w(1, 2, &[0.3, 0.7]).unwrap(), 0.7);
    let g = enumerate_forests(3, None).unwrap().into_iter().find(|f| f.edges == vec![(0, 1)]).unwrap();
    assert_eq!(g.z_of_w(0, 2, &[0.5]).unwrap(), 0.0);
}

#[test]
fn one_edge_taylor() {
    let z = Polynomial::<f64>::variable(1, 0);
    let rep = bkar1_verify(&z, 2, None).unwrap();
    assert_eq!(rep.forest_count, 2);
    assert!((rep.rhs - 1.0).abs() < 1e-14 && rep.passed);
}

#[test]
fn constant_functional_only_empty_forest() {
    let z = Polynomial::<f64>::constant(3, 2.5);
    let rep = bkar1_verify(&z, 3, None).unwrap();
    assert!((rep.rhs - 2.5).abs() < 1e-14);
}

#[test]
fn chain_product_matches_rational_oracle() {
    let n = 3;
    let z = Polynomial::monomial(3, &[(pair_index(n, 0, 1), 1), (pair_index(n, 1, 2), 1)], r(1));
    let exact = rational_forest_sum(&z, n, &[false; 3]);
    assert_eq!(exact, r(1));
    let rep = bkar1_verify(&to_f64(&z), n, None).unwrap();
    assert!(rep.abs_err < 1e-12, "{rep:?}");
}

#[test]
fn quadrature_order_too_low_is_rejected() {
    let z = Polynomial::<f64>::monomial(1, &[(0, 5)], 1.0);
    assert!(bkar1_verify(&z, 2, Some(2)).is_err());
    assert!(bkar1_verify(&z, 2, Some(6)).unwrap().passed);
}

#[test]
fn all_roots_leave_only_the_empty_forest() {
    let z = Polynomial::<f64>::monomial(3, &[(0, 2), (2, 1)], 3.0);
    let rep = bkar2_verify(&z, &[VertexType::Root; 3], None).unwrap();
    assert_eq!(rep.forest_count, 1);
    assert!((rep.lhs - 3.0).abs() < 1e-14 && rep.passed);
}

#[test]
fn rooted_single_edge() {
    let z = Polynomial::<f64>::variable(1, 0);
    let rep = bkar2_verify(&z, &[VertexType::Plain, VertexType::Root], None).unwrap();
    assert_eq!(rep.forest_count, 2);
    assert!((rep.rhs - 1.0).abs() < 1e-14);
}

#[test]
fn two_plain_one_root_matches_rational_oracle() {
    use VertexType::*;
    let n = 3;
    let types = [Plain, Plain, Root];
    let mut z = Polynomial::monomial(3, &[(0, 2), (1, 1)], r(3));
    z = &z + &Polynomial::monomial(3, &[(1, 1), (2, 2)], r(-2));
    z = &z + &Polynomial::monomial(3, &[(0, 1), (1, 1), (2, 1)], r(5));
    let exact = rational_forest_sum(&z, n, &[false, false, true]);
    let (rhs, _) = forest_sum(&to_f64(&z), &types, None).unwrap();
    let e = *exact.numer() as f64 / *exact.denom() as f64;
    assert!((rhs - e).abs() < 1e-12, "{rhs} vs {e}");
    assert!(bkar2_verify(&to_f64(&z), &types, None).unwrap().passed);
}

fn random_poly(n: usize, terms: &[(Vec<u32>, i64)]) -> Polynomial<Rational64> {
    let vars = pair_count(n);
    let mut p = Polynomial::zero(vars);
    for (e, c) in terms {
        let mut ex = vec![0u32; vars];
        let mut budget = 6u32;
        for (i, &k) in e.iter().enumerate().take(vars) {
            let k = k.min(budget);
            ex[i] = k;
            budget -= k;
        }
        p.add_term(ex, r(*c));
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forest_identity_on_random_polynomials(
        n in 2usize..=4,
        terms in prop::collection::vec((prop::collection::vec(0u32..3, 6), -5i64..=5), 1..5),
    ) {
        let z = random_poly(n, &terms);
        let rep = bkar1_verify(&to_f64(&z), n, None).unwrap();
        prop_assert!(rep.abs_err <= 1e-10, "{:?}", rep);
        let exact = rational_forest_sum(&z, n, &vec![false; n]);
        prop_assert_eq!(exact, z.eval(&vec![r(1); pair_count(n)]));
    }

    #[test]
    fn rooted_identity_on_random_polynomials(
        roots in prop::collection::vec(any::<bool>(), 4),
        terms in prop::collection::vec((prop::collection::vec(0u32..3, 6), -5i64..=5), 1..5),
    ) {
        prop_assume!(roots.iter().any(|&b| b));
        let types: Vec<VertexType> = roots.iter().map(|&b| if b { VertexType::Root } else { VertexType::Plain }).collect();
        let z = random_poly(4, &terms);
        let rep = bkar2_verify(&to_f64(&z), &types, None).unwrap();
        prop_assert!(rep.abs_err <= 1e-10, "{:?}", rep);
    }
}

#[test]
fn five_objects_degree_six() {
    let n = 5;
    let vars = pair_count(n);
    let mut z = Polynomial::<f64>::zero(vars);
    for (i, c) in [(0usize, 1.5), (4, -0.5), (9, 2.0), (7, 1.0)] {
        let mut e = vec![0; vars];
        e[i] = 2;
        e[(i + 3) % vars] += 2;
        e[(i + 5) % vars] += 2;
        z.add_term(e, c);
    }
    assert_eq!(z.degree(), 6);
    let rep = bkar1_verify(&z, n, None).unwrap();
    assert_eq!(rep.forest_count, 291);
    assert!(rep.abs_err <= 1e-10, "{rep:?}");
}

fn two_interval_toy(coupling: f64) -> ClusterToy<f64> {
    let g = GaussianVector::from_rows(&[
        vec![1.0, 0.3, 0.4 * coupling, 0.1 * coupling],
        vec![0.3, 1.2, 0.2 * coupling, 0.4 * coupling],
        vec![0.4 * coupling, 0.2 * coupling, 0.9, -0.25],
        vec![0.1 * coupling, 0.4 * coupling, -0.25, 1.1],
    ])
    .unwrap();
    let d = 4;
    let quartic = |a: usize, b: usize| {
        &Polynomial::monomial(d, &[(a, 4)], 0.25) + &Polynomial::monomial(d, &[(a, 2), (b, 2)], 0.5)
    };
    ClusterToy::new(g, vec![0, 0, 1, 1], vec![quartic(0, 1), quartic(2, 3)]).unwrap()
}

#[test]
fn cluster_zeroth_order_is_one() {
    let rep = two_interval_toy(1.0).verify(0).unwrap();
    assert_eq!(rep.lhs, vec![1.0]);
    assert!((rep.rhs[0] - 1.0).abs() < 1e-14);
}

#[test]
fn cluster_first_order_is_minus_mean_interaction() {
    let toy = two_interval_toy(1.0);
    let rep = toy.verify(1).unwrap();
    // -E[x0^4/4 + x0^2 x1^2/2 + …] by hand
    let (c00, c11, c01) = (1.0, 1.2, 0.3);
    let (c22, c33, c23) = (0.9, 1.1, -0.25);
    let m = |a: f64, b: f64, ab: f64| 0.25 * 3.0 * a * a + 0.5 * (a * b + 2.0 * ab * ab);
    let expected = -(m(c00, c11, c01) + m(c22, c33, c23));
    assert!((rep.lhs[1] - expected).abs() < 1e-12);
    assert!(rep.abs_err[1] < 1e-9, "{rep:?}");
}

#[test]
fn cluster_third_order_identity() {
    let rep = two_interval_toy(1.0).verify(3).unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn independent_blocks_factorise() {
    let toy = two_interval_toy(0.0);
    let rep = toy.verify(2).unwrap();
    assert!(rep.passed);
    // Z = Z_0 Z_1: second-order coefficient is a_2 + b_2 + a_1 b_1.
    let single = |c: f64, dd: f64, ab: f64| {
        let g = GaussianVector::from_rows(&[vec![c, ab], vec![ab, dd]]).unwrap();
        let p = &Polynomial::monomial(2, &[(0, 4)], 0.25) + &Polynomial::monomial(2, &[(0, 2), (1, 2)], 0.5);
        let t = ClusterToy::new(g, vec![0, 0], vec![p]).unwrap();
        t.direct_coefficients(2)
    };
    let za = single(1.0, 1.2, 0.3);
    let zb = single(0.9, 1.1, -0.25);
    let expected = za[2] + zb[2] + za[1] * zb[1];
    assert!((rep.rhs[2] - expected).abs() < 1e-10);
}

#[test]
fn four_intervals_cubic_and_quartic() {
    let rows = vec![
        vec![1.0, 0.2, 0.3, 0.1, 0.0, 0.05],
        vec![0.2, 1.0, 0.1, 0.2, 0.1, 0.0],
        vec![0.3, 0.1, 1.0, 0.25, 0.1, 0.1],
        vec![0.1, 0.2, 0.25, 1.0, 0.3, 0.1],
        vec![0.0, 0.1, 0.1, 0.3, 1.0, 0.2],
        vec![0.05, 0.0, 0.1, 0.1, 0.2, 1.0],
    ];
    let g = GaussianVector::from_rows(&rows).unwrap();
    let d = 6;
    let inter = vec![
        &Polynomial::monomial(d, &[(0, 4)], 0.1) + &Polynomial::monomial(d, &[(0, 1), (1, 2)], 0.3),
        Polynomial::monomial(d, &[(2, 2)], 0.7),
        &Polynomial::monomial(d, &[(3, 3)], -0.2) + &Polynomial::monomial(d, &[(3, 1)], 0.5),
        Polynomial::monomial(d, &[(4, 2), (5, 2)], 0.4),
    ];
    let toy = ClusterToy::new(g, vec![0, 0, 1, 2, 3, 3], inter).unwrap();
    let rep = toy.verify(3).unwrap();
    assert_eq!(rep.forest_count, 38);
    assert!(rep.passed, "{rep:?}");
    let pos = toy.positivity_check(100, 7).unwrap();
    assert!(pos.passed, "{pos:?}");
}

#[test]
fn toy_limits() {
    let g = GaussianVector::from_rows(&[vec![1.0]]).unwrap();
    assert!(ClusterToy::new(g.clone(), vec![0], vec![Polynomial::monomial(1, &[(0, 5)], 1.0)]).is_err());
    let toy = ClusterToy::new(g, vec![0], vec![Polynomial::monomial(1, &[(0, 2)], 1.0)]).unwrap();
    assert!(toy.verify(4).is_err());
}
