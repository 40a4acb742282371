use pss::bench::{run_benchmark, BenchConfig, BenchFamily, EstimatorKind};
use pss::dataset::Dataset;
use pss::estimator::{entropy, mutual_information, total_correlation, PssConfig};
use pss::modelsel::{class_conditional_mi, cv_select_ell, DiscreteLabels};
use pss::synthetic::{equicorrelation, oracle_entropy, sample, DistributionSpec, Seed};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "gauss2d" => gauss2d(),
        "mi" => mi(),
        "tc" => tc(),
        "signmi" => signmi(),
        "c1" => c1(),
        "cv" => cv(),
        "cv2" => cv2(),
        "c2" => c2(),
        "c3" => c3(),
        "c4" => c4(),
        "c2grid" => c2grid(),
        _ => println!("unknown probe"),
    }
}

fn gauss2d() {
    let spec = DistributionSpec::normal(equicorrelation(2, 0.0).unwrap());
    let oracle = oracle_entropy(&spec);
    println!("oracle = {oracle}");
    let data = sample(&spec, 20_000, Seed::new(123, 0)).unwrap();
    for ell in [1usize, 2, 4, 6, 8, 10, 12, 16, 20, 24, 30, 40] {
        let est = entropy(&data, &PssConfig::with_ell(ell)).unwrap();
        println!(
            "ell={ell:2}  H={:.5} (err {:+.4})  skipped={}",
            est.value,
            est.value - oracle,
            est.skipped_rows
        );
    }
    // uniform [0,1]^2
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let vals: Vec<f64> = (0..40_000).map(|_| rand::Rng::random(&mut rng)).collect();
    let unif = Dataset::new(vals, 20_000, 2).unwrap();
    for ell in [1usize, 2, 4, 8, 12, 16] {
        let est = entropy(&unif, &PssConfig::with_ell(ell)).unwrap();
        println!("uniform ell={ell:2}  H={:+.5}  skipped={}", est.value, est.skipped_rows);
    }
}

fn mi() {
    let indep = DistributionSpec::normal(equicorrelation(2, 0.0).unwrap());
    let dep = DistributionSpec::normal(equicorrelation(2, 0.8).unwrap());
    let truth = -0.5 * (1.0 - 0.64f64).ln();
    println!("true MI(rho=0.8) = {truth}");
    for (name, spec) in [("indep", &indep), ("rho0.8", &dep)] {
        let data = sample(spec, 20_000, Seed::new(7, 0)).unwrap();
        let x = data.select_columns(&[0]).unwrap();
        let y = data.select_columns(&[1]).unwrap();
        for ell in [2usize, 3, 4, 5, 6, 7, 8] {
            let mi = mutual_information(&x, &y, &PssConfig::with_ell(ell)).unwrap();
            println!("{name} ell={ell:2}  I={mi:+.5}");
        }
    }
}

fn tc() {
    let spec3 = DistributionSpec::normal(equicorrelation(3, 0.0).unwrap());
    let data3 = sample(&spec3, 20_000, Seed::new(17, 0)).unwrap();
    let dep = DistributionSpec::normal(equicorrelation(2, 0.8).unwrap());
    let data2 = sample(&dep, 20_000, Seed::new(18, 0)).unwrap();
    for ell in [2usize, 3, 4, 5, 6, 7, 8] {
        let t3 = total_correlation(&data3, &PssConfig::with_ell(ell)).unwrap();
        let t2 = total_correlation(&data2, &PssConfig::with_ell(ell)).unwrap();
        println!("ell={ell:2}  TC3(indep)={t3:+.5}  TC2(rho.8)={t2:+.5}");
    }
}

fn signmi() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let n = 20_000;
    let xs: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let labels = DiscreteLabels::from_values(
        &xs.iter().map(|&x| f64::from(x > 0.0)).collect::<Vec<_>>(),
    )
    .unwrap();
    let features = Dataset::from_column(xs).unwrap();
    println!("ln 2 = {}", std::f64::consts::LN_2);
    for ell in [1usize, 2, 4, 8, 12, 16, 20, 30] {
        let mi = class_conditional_mi(&features, &labels, ell).unwrap();
        println!("ell={ell:2}  I={mi:+.5}  (err {:+.4})", mi - std::f64::consts::LN_2);
    }
}

fn c1() {
    let started = std::time::Instant::now();
    let mut cfg = BenchConfig::new(BenchFamily::Normal);
    cfg.dims = vec![1];
    cfg.ns = vec![4096];
    cfg.trials = 100;
    cfg.seed = 1001;
    cfg.parallel = false;
    cfg.estimators = vec![EstimatorKind::Pss];
    let report = run_benchmark(&cfg).unwrap();
    let row = &report.rows[0];
    println!(
        "c1: ell*={} rmse={:.4} bias={:+.4} |mean err| = {:.4}  ({:.2?})",
        row.param,
        row.rmse,
        row.bias,
        row.bias.abs(),
        started.elapsed()
    );
}

fn cv() {
    let spec = DistributionSpec::normal(equicorrelation(2, 0.8).unwrap());
    let data = sample(&spec, 5000, Seed::new(5, 0)).unwrap();
    let grid: Vec<usize> = (1..=12).collect();
    let started = std::time::Instant::now();
    let result = cv_select_ell(&data, &grid, 3, 99).unwrap();
    println!("selected ell = {} ({:.2?})", result.selected_ell, started.elapsed());
    for c in &result.candidates {
        println!(
            "  ell={:2} loss={:?} excluded={:.3}",
            c.ell, c.loss, c.excluded_fraction
        );
    }
    let oracle = oracle_entropy(&spec);
    for ell in &grid {
        let est = entropy(&data, &PssConfig::with_ell(*ell)).unwrap();
        println!("  ell={ell:2}  err={:+.4}", est.value - oracle);
    }
}

// Candidate CV-loss repairs, evaluated side by side.
fn cv2() {
    use pss::estimator::{fit, LogDensity};
    use rand::seq::SliceRandom;
    let spec = DistributionSpec::normal(equicorrelation(2, 0.8).unwrap());
    for trial in 0..3u64 {
        let data = sample(&spec, 5000, Seed::new(5, trial)).unwrap();
        let grid: Vec<usize> = (1..=12).collect();
        let folds = 3usize;
        let mut order: Vec<usize> = (0..data.rows()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(99 + trial));
        let block = data.rows() / folds;

        // per candidate, per fold: Vec<Option<f64>> of -log f per validation point
        let mut nlls: Vec<Vec<Vec<Option<f64>>>> = Vec::new();
        for &ell in &grid {
            let mut per_fold = Vec::new();
            for k in 0..folds {
                let val: Vec<usize> = order[k * block..(k + 1) * block].to_vec();
                let train: Vec<usize> = order
                    .iter()
                    .copied()
                    .filter(|r| !(k * block..(k + 1) * block).contains(&order.iter().position(|x| x == r).unwrap()))
                    .collect();
                let _ = &train;
                let train: Vec<usize> = order[..k * block]
                    .iter()
                    .chain(order[(k + 1) * block..].iter())
                    .copied()
                    .collect();
                let model = fit(&data.select_rows(&train).unwrap(), &PssConfig::with_ell(ell)).unwrap();
                let fold_nll: Vec<Option<f64>> = val
                    .iter()
                    .map(|&r| match model.log_density(data.row(r)) {
                        LogDensity::Defined(l) => Some(-l),
                        _ => None,
                    })
                    .collect();
                per_fold.push(fold_nll);
            }
            nlls.push(per_fold);
        }

        let oracle = oracle_entropy(&spec);
        println!("--- trial {trial} (oracle {oracle:.4})");
        let mut best: Vec<(String, usize)> = Vec::new();
        // A: exclusion average (current)
        let score_a: Vec<f64> = nlls.iter().map(|pf| {
            let fl: Vec<f64> = pf.iter().map(|f| {
                let v: Vec<f64> = f.iter().flatten().copied().collect();
                v.iter().sum::<f64>() / v.len() as f64
            }).collect();
            fl.iter().sum::<f64>() / fl.len() as f64
        }).collect();
        // B: common defined subset across candidates (per fold)
        let score_b: Vec<f64> = (0..grid.len()).map(|ci| {
            let mut fold_means = Vec::new();
            for k in 0..folds {
                let len = nlls[ci][k].len();
                let common: Vec<usize> = (0..len)
                    .filter(|&i| nlls.iter().all(|pf| pf[k][i].is_some()))
                    .collect();
                let v: Vec<f64> = common.iter().map(|&i| nlls[ci][k][i].unwrap()).collect();
                fold_means.push(v.iter().sum::<f64>() / v.len() as f64);
            }
            fold_means.iter().sum::<f64>() / folds as f64
        }).collect();
        // C: fill undefined with the fold's max defined NLL
        let score_c: Vec<f64> = nlls.iter().map(|pf| {
            let fl: Vec<f64> = pf.iter().map(|f| {
                let max = f.iter().flatten().fold(f64::MIN, |a, &b| a.max(b));
                let v: Vec<f64> = f.iter().map(|o| o.unwrap_or(max)).collect();
                v.iter().sum::<f64>() / v.len() as f64
            }).collect();
            fl.iter().sum::<f64>() / fl.len() as f64
        }).collect();
        for (name, score) in [("A-exclude", &score_a), ("B-common", &score_b), ("C-fill", &score_c)] {
            let mut bi = 0;
            for i in 0..score.len() { if score[i] < score[bi] { bi = i; } }
            let ell = grid[bi];
            let err = entropy(&data, &PssConfig::with_ell(ell)).unwrap().value - oracle;
            println!("{name}: ell*={ell:2}  entropy err at pick {err:+.4}");
            best.push((name.to_string(), ell));
            print!("   losses:");
            for s in score { print!(" {s:.3}"); }
            println!();
        }
        // oracle err per ell
        print!("   entropy err:");
        for &ell in &grid {
            let err = entropy(&data, &PssConfig::with_ell(ell)).unwrap().value - oracle;
            print!(" {err:+.3}");
        }
        println!();
    }
}

fn c2() {
    // Normal d=10 N=3000: PSS vs KL vs KSG, oracle tuned (reduced trials).
    let started = std::time::Instant::now();
    let mut cfg = BenchConfig::new(BenchFamily::Normal);
    cfg.dims = vec![10];
    cfg.ns = vec![3000];
    cfg.trials = 20;
    cfg.seed = 1002;
    cfg.estimators = vec![EstimatorKind::Pss, EstimatorKind::Kl, EstimatorKind::Ksg];
    cfg.pss_grid = Some(vec![1, 2, 3]);
    let report = run_benchmark(&cfg).unwrap();
    for row in &report.rows {
        println!(
            "{}: param={} rmse={:.4} bias={:+.4} mean_rt={:.3}s",
            row.estimator, row.param, row.rmse, row.bias, row.mean_runtime_s
        );
    }
    println!("elapsed {:.1?}", started.elapsed());
}

fn c3() {
    let started = std::time::Instant::now();
    let mut cfg = BenchConfig::new(BenchFamily::Gamma { shape: 0.4, scale: 0.3 });
    cfg.dims = vec![5];
    cfg.ns = vec![2000, 10_000];
    cfg.trials = 10;
    cfg.seed = 1003;
    cfg.estimators = vec![EstimatorKind::Pss, EstimatorKind::Kl];
    cfg.pss_grid = Some(vec![1, 2, 3, 4, 6, 8, 10, 12]);
    let report = run_benchmark(&cfg).unwrap();
    for row in &report.rows {
        println!(
            "{} n={}: param={} rmse={:.4} bias={:+.4}",
            row.estimator, row.n, row.param, row.rmse, row.bias
        );
    }
    println!("elapsed {:.1?}", started.elapsed());
}

fn c4() {
    let started = std::time::Instant::now();
    let mut cfg = BenchConfig::new(BenchFamily::Normal);
    cfg.dims = vec![5];
    cfg.ns = vec![20_000];
    cfg.rhos = vec![0.0, 0.8];
    cfg.trials = 8;
    cfg.seed = 1004;
    cfg.estimators = vec![EstimatorKind::Pss, EstimatorKind::Kl];
    cfg.pss_grid = Some(vec![1, 2, 3, 4, 6, 8, 10, 12, 14, 16]);
    let report = run_benchmark(&cfg).unwrap();
    for row in &report.rows {
        println!(
            "{} rho={}: param={} rmse={:.4} bias={:+.4}",
            row.estimator, row.rho, row.param, row.rmse, row.bias
        );
    }
    println!("elapsed {:.1?}", started.elapsed());
}

fn c2grid() {
    use pss::knn::{kl_entropy_sweep, SearchMethod};
    let spec = DistributionSpec::normal(equicorrelation(10, 0.0).unwrap());
    let oracle = oracle_entropy(&spec);
    let trials = 40;
    let ks = vec![1usize, 2, 3, 4, 6, 8, 12, 16];
    let mut kl_err: Vec<Vec<f64>> = vec![Vec::new(); ks.len()];
    let mut pss_err: Vec<f64> = Vec::new();
    let mut vas_err: Vec<f64> = Vec::new();
    for t in 0..trials {
        let data = sample(&spec, 3000, Seed::new(1002, t)).unwrap();
        let kl = kl_entropy_sweep(&data, &ks, SearchMethod::KdTree).unwrap();
        for (i, e) in kl.iter().enumerate() {
            kl_err[i].push(e - oracle);
        }
        let est = entropy(&data, &PssConfig::with_ell(1)).unwrap();
        pss_err.push(est.value - oracle);
        // Sum of univariate Vasicek entropies for reference.
        let mut hv = 0.0;
        for j in 0..10 {
            let s = pss::spacing::SortedSample::new(data.column(j)).unwrap();
            let m = pss::spacing::default_m(3000).unwrap();
            hv += pss::spacing::vasicek_entropy(&s, m).unwrap();
        }
        vas_err.push(hv - oracle);
    }
    let stats = |errs: &[f64]| {
        let n = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / n;
        let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        (mean, rmse)
    };
    for (i, &k) in ks.iter().enumerate() {
        let (b, r) = stats(&kl_err[i]);
        println!("KL  k={k:2}: bias {b:+.4} rmse {r:.4}");
    }
    let (b, r) = stats(&pss_err);
    println!("PSS ell=1: bias {b:+.4} rmse {r:.4}");
    let (b, r) = stats(&vas_err);
    println!("Vasicek-sum: bias {b:+.4} rmse {r:.4}");
}
