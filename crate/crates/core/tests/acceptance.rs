//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Base seed fixed before the first run and never tuned.

use std::time::Instant;

use l2boost::boosting::{boost_fit, BoostConfig};
use l2boost::classification::{cv_misclassification, CvScheme, LinearProbabilityModel, ResponseCoding};
use l2boost::data::{standardize, Dataset};
use l2boost::greedy::{verify_bound, weak_greedy, FiniteDictionary, Selector};
use l2boost::model_selection::{HatBackend, HatState};
use l2boost::simulation::{run_benchmark, solve_kappa, BenchmarkOptions, BenchmarkReport, Method, Setting};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const BASE_SEED: u64 = 20_240_601;
const REPS: usize = 50;

struct Gate {
    failed: Vec<String>,
}

impl Gate {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(name.to_string());
        }
    }
}

fn settings(labels: &[&str]) -> Vec<Setting> {
    labels.iter().map(|l| Setting::parse(l).expect("valid label")).collect()
}

fn cell(r: &BenchmarkReport, setting: &str, m: Method) -> (f64, f64) {
    let c = r.cell(setting, m).expect("cell present");
    (c.mean, c.se)
}

/// `|ours − reference| ≤ 3 √(se² + se_ref²)`.
fn within(ours: (f64, f64), reference: (f64, f64)) -> bool {
    (ours.0 - reference.0).abs() <= 3.0 * (ours.1.powi(2) + reference.1.powi(2)).sqrt()
}

fn fmt(ours: (f64, f64), reference: (f64, f64)) -> String {
    format!("{:.3} ({:.3}) vs {:.3} ({:.3})", ours.0, ours.1, reference.0, reference.1)
}

fn random_design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    let x = Array2::from_shape_simple_fn((n, p), || rng.sample(StandardNormal));
    let y: Array1<f64> = (0..n).map(|i| 2.0 * x[[i, 0]] + rng.sample::<f64, _>(StandardNormal)).collect();
    Dataset::new(x, y).unwrap()
}

fn main() {
    let mut gate = Gate { failed: Vec::new() };
    let opts = BenchmarkOptions::default();
    let n20 = ["iid-p3", "iid-p10", "iid-p100", "block-p3", "block-p10", "block-p100"];

    // Sparse model, independent predictors, n = 20: AICc boosting and OLS.
    let t0 = Instant::now();
    let run1 = run_benchmark(&settings(&n20[..3]), &[Method::L2Boost, Method::Ols], REPS, BASE_SEED, &opts).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    {
        let mut ok = true;
        let mut detail = Vec::new();
        for (s, reference) in n20[..3].iter().zip([(1.658, 0.192), (2.318, 0.238), (8.792, 0.640)]) {
            let label = format!("{s}-n20");
            let ours = cell(&run1, &label, Method::L2Boost);
            ok &= within(ours, reference);
            detail.push(format!("L2Boost {label} {}", fmt(ours, reference)));
        }
        for (s, reference) in n20[..2].iter().zip([(1.103, 0.127), (5.674, 0.556)]) {
            let label = format!("{s}-n20");
            let ours = cell(&run1, &label, Method::Ols);
            ok &= within(ours, reference);
            detail.push(format!("OLS {label} {}", fmt(ours, reference)));
        }
        let missing = run1.cell("iid-p100-n20", Method::Ols).unwrap().missing;
        ok &= missing;
        ok &= secs < 60.0;
        detail.push(format!("OLS iid-p100 missing={missing}; {secs:.1}s"));
        gate.check("sparse model AICc boosting and OLS at n=20", ok, detail.join("; "));
    }

    // Oracle-tuned boosting and Lasso, both covariances, n = 20; CV Lasso for ordering.
    let run2 = run_benchmark(
        &settings(&n20),
        &[Method::L2Boost, Method::L2BoostOracle, Method::Lasso, Method::LassoOracle, Method::Ols],
        REPS,
        BASE_SEED,
        &opts,
    )
    .unwrap();
    {
        let reference = [
            ("iid-p3-n20", (1.103, 0.127), (1.103, 0.127)),
            ("block-p3-n20", (0.891, 0.100), (1.075, 0.117)),
            ("iid-p10-n20", (2.193, 0.230), (2.208, 0.262)),
            ("block-p10-n20", (1.404, 0.114), (1.378, 0.116)),
            ("iid-p100-n20", (7.583, 0.593), (7.116, 0.603)),
            ("block-p100-n20", (2.995, 0.208), (2.730, 0.234)),
        ];
        let mut ok = true;
        let mut detail = Vec::new();
        for (label, pb, pl) in reference {
            let b = cell(&run2, label, Method::L2BoostOracle);
            let l = cell(&run2, label, Method::LassoOracle);
            ok &= within(b, pb) && within(l, pl);
            detail.push(format!("{label} L2Boost* {} Lasso* {}", fmt(b, pb), fmt(l, pl)));
        }
        let b = cell(&run2, "iid-p3-n20", Method::L2BoostOracle).0;
        let o = cell(&run2, "iid-p3-n20", Method::Ols).0;
        let rel = (b - o).abs() / o;
        ok &= rel <= 0.01;
        let m_star = run2.records_for("iid-p3-n20", Method::L2BoostOracle).next().and_then(|r| r.tuning).unwrap();
        detail.push(format!("L2Boost* vs OLS iid-p3 rel diff {rel:.4} (common oracle m = {m_star})"));
        gate.check("oracle-tuned boosting and Lasso at n=20", ok, detail.join("; "));
    }

    // Growth in (n, p).
    let growth = ["iid-p3-n20", "iid-p30-n40", "iid-p300-n60"];
    let run3 = run_benchmark(&settings(&growth), &[Method::L2Boost, Method::Lasso], REPS, BASE_SEED, &opts).unwrap();
    {
        let reference = [(1.658, 0.192), (2.090, 0.199), (3.652, 0.186)];
        let mut ok = true;
        let mut detail = Vec::new();
        let mut means = Vec::new();
        for (label, p) in growth.iter().zip(reference) {
            let ours = cell(&run3, label, Method::L2Boost);
            ok &= within(ours, p);
            means.push(ours.0);
            detail.push(format!("{label} {}", fmt(ours, p)));
        }
        let monotone = means.windows(2).all(|w| w[0] < w[1]);
        ok &= monotone;
        detail.push(format!("increasing={monotone}"));
        gate.check("AICc boosting MSE growth over (n, p)", ok, detail.join("; "));
    }

    // Dense equal-coefficient model.
    let run4 = run_benchmark(
        &settings(&["dense-n20"]),
        &[Method::RidgeCv, Method::L2Boost, Method::Lasso],
        REPS,
        BASE_SEED,
        &opts,
    )
    .unwrap();
    {
        let label = "dense-p100-n20";
        let boost_big = run4.records_for(label, Method::L2Boost).filter(|r| r.active > 20).count();
        let lasso_max = run4.records_for(label, Method::Lasso).map(|r| r.active).max().unwrap_or(usize::MAX);
        let lasso_reps = run4.records_for(label, Method::Lasso).count();
        let r = cell(&run4, label, Method::RidgeCv);
        let b = cell(&run4, label, Method::L2Boost);
        let l = cell(&run4, label, Method::Lasso);
        let gap = |a: (f64, f64), c: (f64, f64)| (c.0 - a.0) / (a.1.powi(2) + c.1.powi(2)).sqrt();
        let (g1, g2) = (gap(r, b), gap(b, l));
        let ok = 2 * boost_big > REPS && lasso_max <= 20 && lasso_reps == REPS && g1 > 2.0 && g2 > 2.0;
        gate.check(
            "dense model: boosting keeps many variables, ridge < boosting < Lasso",
            ok,
            format!(
                "boosting >20 active in {boost_big}/{REPS}; Lasso max active {lasso_max}; ridge {:.3} ({:.3}), \
                 L2Boost {:.3} ({:.3}), Lasso {:.3} ({:.3}); gaps {g1:.2}, {g2:.2} SE",
                r.0, r.1, b.0, b.1, l.0, l.1
            ),
        );
    }

    // Fixed point for the decaying-coefficient model.
    {
        let sol = solve_kappa(100, 1.0).unwrap();
        let ok = (sol.kappa - 0.199).abs() <= 0.001 && sol.p == 23;
        gate.check("decaying-coefficient fixed point at n=100", ok, format!("kappa={:.5}, p={}", sol.kappa, sol.p));
    }

    // Property suite.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(BASE_SEED);
        let mut hat_err: f64 = 0.0;
        let mut rss_err: f64 = 0.0;
        for _ in 0..100 {
            let n = rng.random_range(10..=40);
            let p = rng.random_range(2..=60);
            let nu = rng.random_range(0.05..=1.0);
            let g = standardize(&random_design(&mut rng, n, p)).unwrap();
            let path = boost_fit(&g, &BoostConfig { nu, m_max: 60, ..Default::default() }).unwrap();
            let mut hat = HatState::new(n);
            let mut prev = path.rss0;
            for (m, s) in path.steps.iter().enumerate() {
                hat.update(g.column(s.index), nu).unwrap();
                let theta = path.theta_at(m + 1).unwrap();
                let fitted = g.fitted_standardized(&theta);
                let by = hat.apply(g.y_centered());
                for (a, b) in fitted.iter().zip(&by) {
                    hat_err = hat_err.max((a - g.transform().y_center - b).abs());
                }
                let predicted = prev - nu * (2.0 - nu) * n as f64 * s.coefficient * s.coefficient;
                rss_err = rss_err.max((predicted - s.rss).abs() / prev.max(f64::MIN_POSITIVE));
                prev = s.rss;
            }
        }

        let mut prod_err: f64 = 0.0;
        for _ in 0..10 {
            let n = rng.random_range(5..=25);
            let p = rng.random_range(2..=15);
            let nu = rng.random_range(0.05..=1.0);
            let g = standardize(&random_design(&mut rng, n, p)).unwrap();
            let path = boost_fit(&g, &BoostConfig { nu, m_max: 30, ..Default::default() }).unwrap();
            let mut hat = HatState::new(n);
            let mut prod = Array2::<f64>::eye(n);
            for s in &path.steps {
                hat.update(g.column(s.index), nu).unwrap();
                let x = Array1::from(g.column(s.index).to_vec());
                let h = outer(&x, &x) / x.dot(&x);
                prod = (Array2::<f64>::eye(n) - h * nu).dot(&prod);
                let explicit: Array2<f64> = Array2::eye(n) - &prod;
                prod_err = prod_err.max((&hat.b - &explicit).iter().fold(0.0, |a: f64, v| a.max(v.abs())));
            }
        }

        let mut violations = 0;
        let mut bound_runs = 0;
        for b in [0.5, 1.0] {
            for nu in [0.1, 1.0] {
                for i in 0..100u64 {
                    let mut r = ChaCha8Rng::seed_from_u64(BASE_SEED + i);
                    let dim = r.random_range(2..=40);
                    let p = r.random_range(2..=60);
                    let d = FiniteDictionary::random(dim, p, BASE_SEED + i).unwrap();
                    let sel = if b < 1.0 { Selector::BWeakRandom { seed: i } } else { Selector::ExactMax };
                    bound_runs += 1;
                    if verify_bound(&d, b, nu, 200, sel).is_err() {
                        violations += 1;
                    }
                }
            }
        }

        let mut bridge_ok = 0;
        for _ in 0..20 {
            let n = rng.random_range(10..=50);
            let p = rng.random_range(2..=80);
            let nu = rng.random_range(0.05..=1.0);
            let g = standardize(&random_design(&mut rng, n, p)).unwrap();
            let path = boost_fit(&g, &BoostConfig { nu, m_max: 300, ..Default::default() }).unwrap();
            let d = FiniteDictionary::from_design(&g).unwrap();
            let trace = weak_greedy(&d, 1.0, nu, path.len(), Selector::ExactMax).unwrap();
            let same = path
                .steps
                .iter()
                .zip(&trace.steps)
                .all(|(s, t)| s.index == t.index && s.increment == nu * t.inner);
            bridge_ok += usize::from(same && trace.steps.len() == path.len());
        }

        let ok = hat_err < 1e-8 && rss_err < 1e-8 && prod_err < 1e-10 && violations == 0 && bridge_ok == 20;
        gate.check(
            "hat matrix, RSS recursion, remainder bound and greedy bridge properties",
            ok,
            format!(
                "hat fit max err {hat_err:.2e}; rss recursion rel err {rss_err:.2e}; product form err {prod_err:.2e}; \
                 bound violations {violations}/{bound_runs}; bridge {bridge_ok}/20"
            ),
        );
    }

    // Excess misclassification risk on linear-probability data. Each test
    // prediction is scored by its conditional error probability given x,
    // which has the same expectation as the 0/1 test error minus the Bayes
    // risk but without the label noise; the raw rates are reported too.
    {
        let model = LinearProbabilityModel::new(vec![0.25, 0.15, -0.1, 0.0, 0.0]).unwrap();
        let bayes = model.bayes_risk(1_000_000, BASE_SEED);
        let cfg = BoostConfig { m_max: 1000, ..Default::default() };
        let mut excess = Vec::new();
        let mut raw = Vec::new();
        for n in [50usize, 200, 800] {
            let (mut total, mut total_raw) = (0.0, 0.0);
            for rep in 0..20u64 {
                let seed = BASE_SEED + 1000 * n as u64 + rep;
                let d = model.draw(n, seed).unwrap();
                let scheme = CvScheme { seed, ..Default::default() };
                let cv = cv_misclassification(&d, &scheme, &cfg, ResponseCoding::ZeroOne, HatBackend::Subspace).unwrap();
                let mut per_repeat = 0.0;
                for pred in &cv.predictions {
                    let loss: f64 = pred
                        .iter()
                        .map(|&(i, c)| {
                            let f = model.probability(d.x().row(i).as_slice().unwrap());
                            let bayes_class = u8::from(f > 0.5);
                            if c == bayes_class { 0.0 } else { (2.0 * f - 1.0).abs() }
                        })
                        .sum();
                    per_repeat += loss / pred.len() as f64;
                }
                total += per_repeat / cv.predictions.len() as f64;
                total_raw += cv.rate - bayes;
            }
            excess.push(total / 20.0);
            raw.push(total_raw / 20.0);
        }
        let ok = excess.windows(2).all(|w| w[0] > w[1]);
        gate.check(
            "excess misclassification risk decreases with n",
            ok,
            format!(
                "Bayes risk {bayes:.4}; excess at n=50,200,800: {:.4}, {:.4}, {:.4}; raw CV rate minus Bayes: {:.4}, {:.4}, {:.4}",
                excess[0], excess[1], excess[2], raw[0], raw[1], raw[2]
            ),
        );
    }

    // Lasso-CV versus AICc boosting ordering.
    {
        // true: Lasso below boosting.
        let expected = [
            (&run2, "iid-p3-n20", true),
            (&run2, "iid-p10-n20", false),
            (&run2, "iid-p100-n20", true),
            (&run2, "block-p3-n20", false),
            (&run2, "block-p10-n20", false),
            (&run2, "block-p100-n20", true),
            (&run3, "iid-p30-n40", false),
            (&run3, "iid-p300-n60", true),
        ];
        let mut ok = true;
        let mut detail = Vec::new();
        for (r, label, lasso_better) in expected {
            let b = cell(r, label, Method::L2Boost).0;
            let l = cell(r, label, Method::Lasso).0;
            let agree = (l < b) == lasso_better;
            ok &= agree;
            detail.push(format!("{label} Lasso {l:.3} L2Boost {b:.3}{}", if agree { "" } else { " (order flipped)" }));
        }
        gate.check("Lasso-CV versus AICc boosting ordering", ok, detail.join("; "));
    }

    if gate.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} criteria failed: {}", gate.failed.len(), gate.failed.join(", "));
        std::process::exit(1);
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}
