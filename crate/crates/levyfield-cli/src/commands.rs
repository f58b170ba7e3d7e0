use std::path::PathBuf;

use clap::{Args, ValueEnum};
use levyfield::bkar::{bkar1_verify, bkar2_verify, pair_count, ClusterToy, VertexType};
use levyfield::levy::{divergence_fit, mc_area_variance, quadrature_scan, AreaConfig, AreaPart, AreaRow, Method};
use levyfield::partition::{partition_check, PartitionOfUnity, Profile};
use levyfield::poly::Polynomial;
use levyfield::power::{n_ext_max, ModelSpec};
use levyfield::renorm::{b_j_leading, constant_k, finite_volume_k, mixed_constant};
use levyfield::rng::path_rng;
use levyfield::sampler::SamplerConfig;
use levyfield::stats::LinearFit;
use levyfield::wick::GaussianVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::Failure;

/// What a command produced, before anything touches the filesystem.
pub struct Report {
    pub output: Vec<u8>,
    pub passed: bool,
    pub seed: Option<u64>,
    pub summary: serde_json::Value,
    /// Human-readable lines for stdout.
    pub lines: Vec<String>,
}

fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    levyfield::io::write_csv(&mut buf, rows)?;
    Ok(buf)
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct PartitionCheckArgs {
    /// Base M of the dyadic decomposition.
    #[arg(long = "M", default_value_t = 2.0)]
    pub base: f64,
    #[arg(long, default_value = "smooth")]
    pub profile: Profile,
    #[arg(long, default_value_t = -10, allow_hyphen_values = true)]
    pub jmin: i32,
    #[arg(long, default_value_t = 20, allow_hyphen_values = true)]
    pub jmax: i32,
    #[arg(long, default_value_t = 200)]
    pub samples_per_decade: usize,
    /// Largest tolerated deviation of the summed pieces from 1.
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn partition(a: &PartitionCheckArgs) -> Result<Report, Failure> {
    if a.jmax < a.jmin {
        return Err(Failure::Usage(format!("--jmax {} is below --jmin {}", a.jmax, a.jmin)));
    }
    let p = PartitionOfUnity::new(a.base, a.profile)?;
    let rep = partition_check(&p, a.jmin, a.jmax, a.samples_per_decade)?;
    let passed = rep.max_deviation <= a.tolerance && rep.range_ok && rep.support_ok;
    Ok(Report {
        output: csv_bytes(&rep.rows)?,
        passed,
        seed: None,
        summary: json!({
            "max_deviation": rep.max_deviation,
            "range_ok": rep.range_ok,
            "support_ok": rep.support_ok,
        }),
        lines: vec![format!(
            "max deviation {:.3e} (tolerance {:.1e}), range {}, support {}",
            rep.max_deviation,
            a.tolerance,
            if rep.range_ok { "ok" } else { "violated" },
            if rep.support_ok { "ok" } else { "violated" }
        )],
    })
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ScanMethod {
    Quadrature,
    Mc,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PartArg {
    Plus,
    Minus,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct LevyScanArgs {
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    /// Coupling of the resummed variance; 0 gives the free bubble.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 4)]
    pub rho_min: i32,
    #[arg(long, default_value_t = 10)]
    pub rho_max: i32,
    #[arg(long = "M", default_value_t = 2.0)]
    pub base: f64,
    /// Monte Carlo replicas; required for `mc` and `both`.
    #[arg(long, default_value_t = 0)]
    pub replicas: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ScanMethod::Quadrature)]
    pub method: ScanMethod,
    /// Grid points of the sampled paths.
    #[arg(long, default_value_t = 2048)]
    pub grid: usize,
    /// Half-width of the periodic cell.
    #[arg(long, default_value_t = 32.0)]
    pub horizon: f64,
    /// Length of each area increment.
    #[arg(long, default_value_t = 1.0)]
    pub lag: f64,
    #[arg(long, default_value_t = 8)]
    pub windows: usize,
    #[arg(long, value_enum, default_value_t = PartArg::Plus)]
    pub part: PartArg,
    /// Relative tolerance of the fitted free-bubble slope against (1-4α)ln M.
    #[arg(long, default_value_t = 0.05)]
    pub slope_tol: f64,
    /// Resummed series counts as bounded when max/min stays below this.
    #[arg(long, default_value_t = 2.0)]
    pub bound_ratio: f64,
    /// Standard errors allowed between Monte Carlo and quadrature.
    #[arg(long, default_value_t = 3.0)]
    pub z: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn fit_json(fit: &LinearFit) -> serde_json::Value {
    let (lo, hi) = fit.slope_interval(1.96);
    json!({ "slope": fit.slope, "intercept": fit.intercept, "slope_stderr": fit.slope_stderr, "slope_ci95": [lo, hi] })
}

pub fn levy_scan(a: &LevyScanArgs) -> Result<Report, Failure> {
    if a.rho_max < a.rho_min {
        return Err(Failure::Usage("--rho-max is below --rho-min".into()));
    }
    let want_mc = a.method != ScanMethod::Quadrature;
    if want_mc && a.replicas == 0 {
        return Err(Failure::Usage("--replicas must be positive for the mc method".into()));
    }
    let rhos: Vec<i32> = (a.rho_min..=a.rho_max).collect();
    let mut rows: Vec<AreaRow> = Vec::new();
    let mut summary = serde_json::Map::new();
    let mut lines = Vec::new();
    let mut passed = true;
    if a.method != ScanMethod::Mc {
        let q = quadrature_scan(a.alpha, a.lambda, a.base, &rhos)?;
        let ratio = {
            let v = q.iter().map(|r| r.variance);
            v.clone().fold(0.0, f64::max) / v.fold(f64::INFINITY, f64::min)
        };
        if q.len() >= 2 {
            let fit = divergence_fit(&q)?;
            let expected = (1.0 - 4.0 * a.alpha) * a.base.ln();
            let rel = fit.slope / expected - 1.0;
            summary.insert("fit".into(), fit_json(&fit));
            summary.insert("expected_free_slope".into(), json!(expected));
            lines.push(format!("fitted slope {:.6} (free-field rate {expected:.6})", fit.slope));
            if a.lambda == 0.0 {
                summary.insert("slope_rel_err".into(), json!(rel));
                passed &= rel.abs() <= a.slope_tol;
            }
        }
        if a.lambda > 0.0 {
            let bounded = ratio <= a.bound_ratio;
            summary.insert("max_over_min".into(), json!(ratio));
            summary.insert("bounded".into(), json!(bounded));
            lines.push(format!("resummed max/min {ratio:.4}, bounded: {bounded}"));
        }
        rows.extend(q);
    }
    if want_mc {
        let mut sampler = SamplerConfig::new(a.grid, a.horizon, 0, a.rho_max, a.seed);
        sampler.partition = PartitionOfUnity::smooth(a.base);
        let cfg = AreaConfig {
            alpha: a.alpha,
            lambda: a.lambda,
            rho_min: a.rho_min,
            rho_max: a.rho_max,
            replicas: a.replicas,
            lag: a.lag,
            windows_per_path: a.windows,
            part: match a.part {
                PartArg::Plus => AreaPart::Plus,
                PartArg::Minus => AreaPart::Minus,
            },
            sampler,
        };
        let mc = mc_area_variance(&cfg)?;
        let z: Vec<f64> = mc.iter().map(|r| (r.variance - r.oracle) / r.stderr).collect();
        let worst = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        passed &= worst <= a.z;
        summary.insert("mc_oracle".into(), json!(mc.iter().map(|r| r.oracle).collect::<Vec<_>>()));
        summary.insert("mc_worst_z".into(), json!(worst));
        lines.push(format!("Monte Carlo vs quadrature: worst |z| {worst:.2} (limit {})", a.z));
        rows.extend(mc.iter().map(|r| AreaRow {
            alpha: a.alpha,
            lambda: a.lambda,
            rho: r.rho,
            variance: r.variance,
            stderr: r.stderr,
            method: Method::Mc,
        }));
    }
    Ok(Report {
        output: csv_bytes(&rows)?,
        passed,
        seed: want_mc.then_some(a.seed),
        summary: summary.into(),
        lines,
    })
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Bkar1,
    Bkar2,
    Cluster,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct BkarVerifyArgs {
    /// Vertices of the forest identity, or intervals of the cluster toy.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Total degree of the random polynomials (interaction degree for `cluster`).
    #[arg(long, default_value_t = 4)]
    pub degree: u32,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Variant::Bkar1)]
    pub variant: Variant,
    /// Coupling order of the cluster identity.
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Defaults to 1e-10 for the forest identities and 1e-9 for the cluster toy.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn random_polynomial(rng: &mut impl Rng, vars: usize, degree: u32) -> Polynomial<f64> {
    let mut p = Polynomial::zero(vars);
    for _ in 0..rng.random_range(1..=4) {
        let mut e = vec![0u32; vars];
        for _ in 0..rng.random_range(0..=degree) {
            e[rng.random_range(0..vars)] += 1;
        }
        p.add_term(e, rng.random_range(-2.0..2.0));
    }
    p
}

fn cluster_toy(rng: &mut impl Rng, intervals: usize, degree: u32) -> Result<ClusterToy<f64>, Failure> {
    // One field per interval plus a second field on the first two.
    let interval_of: Vec<usize> = (0..intervals).chain(0..intervals.min(2)).collect();
    let dim = interval_of.len();
    let a: Vec<Vec<f64>> = (0..dim).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let cov: Vec<Vec<f64>> =
        (0..dim).map(|i| (0..dim).map(|j| 0.4 * (0..dim).map(|k| a[i][k] * a[j][k]).sum::<f64>()).collect()).collect();
    let g = GaussianVector::from_rows(&cov)?;
    let mut interaction = Vec::new();
    for d in 0..intervals {
        let own: Vec<usize> = (0..dim).filter(|&v| interval_of[v] == d).collect();
        let mut p = Polynomial::monomial(dim, &[(own[0], degree)], rng.random_range(0.05..0.5));
        if own.len() > 1 && degree >= 2 {
            p = &p + &Polynomial::monomial(dim, &[(own[0], degree - 2), (own[1], 2)], rng.random_range(0.05..0.5));
        }
        interaction.push(p);
    }
    Ok(ClusterToy::new(g, interval_of, interaction)?)
}

pub fn bkar(a: &BkarVerifyArgs) -> Result<Report, Failure> {
    if a.trials == 0 {
        return Err(Failure::Usage("--trials must be positive".into()));
    }
    let tol = a.tolerance.unwrap_or(if a.variant == Variant::Cluster { 1e-9 } else { 1e-10 });
    let mut rng = path_rng(a.seed, 0, 0);
    let mut reports = Vec::new();
    let mut worst = 0.0f64;
    for _ in 0..a.trials {
        let (err, value) = match a.variant {
            Variant::Bkar1 => {
                let z = random_polynomial(&mut rng, pair_count(a.n), a.degree);
                let r = bkar1_verify(&z, a.n, None)?;
                (r.abs_err, serde_json::to_value(&r)?)
            }
            Variant::Bkar2 => {
                let mut types: Vec<VertexType> =
                    (0..a.n).map(|_| if rng.random_bool(0.4) { VertexType::Root } else { VertexType::Plain }).collect();
                if let Some(t) = types.first_mut() {
                    *t = VertexType::Root;
                }
                let z = random_polynomial(&mut rng, pair_count(a.n), a.degree);
                let r = bkar2_verify(&z, &types, None)?;
                (r.abs_err, serde_json::to_value(&r)?)
            }
            Variant::Cluster => {
                let r = cluster_toy(&mut rng, a.n, a.degree)?.verify(a.order)?;
                (r.max_abs_err, serde_json::to_value(&r)?)
            }
        };
        worst = worst.max(err);
        reports.push(value);
    }
    let passed = worst <= tol;
    let body = json!({ "max_abs_err": worst, "passed": passed, "tolerance": tol, "trials": reports });
    Ok(Report {
        output: crate::manifest::to_sorted_json(&body)?.into_bytes(),
        passed,
        seed: Some(a.seed),
        summary: json!({ "max_abs_err": worst, "tolerance": tol }),
        lines: vec![format!("{} trials, worst discrepancy {worst:.2e} (tolerance {tol:.0e})", a.trials)],
    })
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct PowerCountArgs {
    /// Model description (JSON). Defaults to the built-in phi-dphi-sigma model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    #[arg(long, default_value_t = 6)]
    pub max_legs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct LegCsvRow {
    legs: String,
    omega: f64,
    divergent: bool,
    divergent_in_range: bool,
    local_part_vanishes: bool,
    target: bool,
}

pub fn power(a: &PowerCountArgs) -> Result<Report, Failure> {
    let model = match &a.model {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            ModelSpec::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => ModelSpec::phi_dphi_sigma(),
    };
    let c = n_ext_max(&model, a.alpha, a.max_legs)?;
    let rows: Vec<LegCsvRow> = c
        .rows
        .iter()
        .map(|r| LegCsvRow {
            legs: r.legs.join(" "),
            omega: r.omega,
            divergent: r.divergent,
            divergent_in_range: r.divergent_in_range,
            local_part_vanishes: r.local_part_vanishes,
            target: r.target,
        })
        .collect();
    let mut lines = vec![
        format!("model {}: N_ext,max = {} (at alpha {}: {})", model.name, c.n_ext_max, a.alpha, c.n_ext_max_at_alpha),
        format!("{:<28} {:>9}  divergent  target", "legs", "omega"),
    ];
    lines.extend(rows.iter().filter(|r| r.divergent_in_range).map(|r| {
        format!("{:<28} {:>9.4}  {:<9}  {}", r.legs, r.omega, r.divergent, r.target)
    }));
    Ok(Report {
        output: csv_bytes(&rows)?,
        passed: true,
        seed: None,
        summary: json!({
            "model": model.name,
            "n_ext_max": c.n_ext_max,
            "n_ext_max_at_alpha": c.n_ext_max_at_alpha,
            "targets": c.targets,
        }),
        lines,
    })
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct CountertermArgs {
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    #[arg(long = "M", default_value_t = 2.0)]
    pub base: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    pub j_list: Vec<i32>,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    /// Finite volumes of the convergence ladder; the last one is used in the table.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
    pub volumes: Vec<f64>,
    /// Relative spread allowed in the rescaled counterterm across scales.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CountertermRow {
    alpha: f64,
    #[serde(rename = "M")]
    base: f64,
    j: i32,
    lambda: f64,
    #[serde(rename = "K")]
    k: f64,
    #[serde(rename = "K_mix")]
    k_mixed: f64,
    volume: f64,
    #[serde(rename = "K_V")]
    k_volume: f64,
    b_diag: f64,
    b_offdiag: f64,
    b_scaled_diag: f64,
    b_scaled_offdiag: f64,
}

pub fn counterterm(a: &CountertermArgs) -> Result<Report, Failure> {
    if a.j_list.is_empty() || a.volumes.is_empty() {
        return Err(Failure::Usage("--j-list and --volumes need at least one entry".into()));
    }
    let p = PartitionOfUnity::smooth(a.base);
    let volume = *a.volumes.last().expect("non-empty");
    let mut rows = Vec::new();
    for &j in &a.j_list {
        let r = b_j_leading(j, a.lambda, a.alpha, &p, volume)?;
        rows.push(CountertermRow {
            alpha: a.alpha,
            base: a.base,
            j,
            lambda: a.lambda,
            k: r.k,
            k_mixed: r.k_mixed,
            volume,
            k_volume: r.k_volume,
            b_diag: r.b[0][0],
            b_offdiag: r.b[0][1],
            b_scaled_diag: r.b_scaled[0][0],
            b_scaled_offdiag: r.b_scaled[0][1],
        });
    }
    let spread = |f: fn(&CountertermRow) -> f64| {
        let first = f(&rows[0]);
        rows.iter().map(|r| if first == 0.0 { f(r).abs() } else { (f(r) / first - 1.0).abs() }).fold(0.0, f64::max)
    };
    let worst = spread(|r| r.b_scaled_diag).max(spread(|r| r.b_scaled_offdiag));
    let k = constant_k(a.alpha, &p)?;
    let ladder = a
        .volumes
        .iter()
        .map(|&v| Ok(json!({ "volume": v, "K_V": finite_volume_k(a.alpha, &p, v)? })))
        .collect::<Result<Vec<_>, Failure>>()?;
    let passed = worst <= a.tolerance;
    Ok(Report {
        output: csv_bytes(&rows)?,
        passed,
        seed: None,
        summary: json!({
            "K": k,
            "K_mix": mixed_constant(a.alpha, &p)?,
            "exponent": 1.0 - 4.0 * a.alpha,
            "ladder": ladder,
            "rescaled_spread": worst,
        }),
        lines: vec![format!(
            "K = {k:.12}, rescaled counterterm spread over j {:?}: {worst:.2e} (tolerance {:.0e})",
            a.j_list, a.tolerance
        )],
    })
}
