//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any criterion fails.

use std::time::Instant;

use glskit::bounds::{lml_bound, wz_error_bound};
use glskit::coupling::Categorical;
use glskit::montecarlo::{gls_counts, pair_seed, random_pair, run_toy_sweep, GlsCounts, ToySweepConfig};
use glskit::rng::SeedContext;
use glskit::specdec::{
    draft_generate, episode_races, exact_sequence_law, generate, invariance_check, run_decode_episode,
    DecodeConfig, DecodeMode, InvarianceVerdict, LabeledDrafts, TabularLM, Verifier,
};
use glskit::stats::{binomial_stderr, par_trials, RunningStat};
use glskit::wz::{discrete_mismatches, run_rd_sweep, DiscreteWzModel, RdSweepConfig, Scheme, WzCode};

const SEED: u64 = 20_241_017;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

const PAIRS: usize = 20;
const N: usize = 10;
const K_LIST: [usize; 4] = [1, 2, 4, 8];
const GRID_TRIALS: usize = 1_000_000;

struct Grid {
    pairs: Vec<(Categorical, Categorical, Vec<GlsCounts>)>,
}

fn grid() -> Grid {
    let master = SeedContext::new(SEED).tag(1);
    let pairs = (0..PAIRS)
        .map(|i| {
            let (p, q) = random_pair(pair_seed(master, i), N);
            let counts = gls_counts(&p, &q, &K_LIST, GRID_TRIALS, master.tag(2).tag(i as u64)).unwrap();
            (p, q, counts)
        })
        .collect();
    Grid { pairs }
}

fn criterion_marginals(grid: &Grid) -> Outcome {
    let mut worst_y: f64 = 0.0;
    let mut worst_x: f64 = 0.0;
    for (p, q, counts) in &grid.pairs {
        for c in counts {
            worst_y = worst_y.max(c.y_tv(q));
            worst_x = worst_x.max(c.max_x_tv(p));
        }
    }
    outcome(
        worst_y <= 0.005 && worst_x <= 0.005,
        format!("max TV(y, q) = {worst_y:.5}, max TV(x, p) = {worst_x:.5} (limit 0.005)"),
    )
}

fn criterion_lml(grid: &Grid) -> Outcome {
    let mut failures = Vec::new();
    let mut min_margin = f64::INFINITY;
    for (i, (p, q, counts)) in grid.pairs.iter().enumerate() {
        for c in counts {
            let bound = lml_bound(p, q, c.k).unwrap();
            let sigma = c.accept_stderr().max(binomial_stderr(bound, GRID_TRIALS));
            let margin = (c.accept_rate() - bound) / sigma;
            min_margin = min_margin.min(margin);
            if margin < -3.0 {
                failures.push(format!("pair {i} K={} below bound", c.k));
            }
            if c.k == 1 && margin.abs() > 3.0 {
                failures.push(format!("pair {i} K=1 not tight ({margin:.2} sigma)"));
            }
        }
    }
    // exact cases: p = q and degenerate proposal
    let master = SeedContext::new(SEED).tag(3);
    for i in 0..5 {
        let (_, q) = random_pair(pair_seed(master, i), N);
        for c in gls_counts(&q, &q, &K_LIST, GRID_TRIALS, master.tag(4).tag(i as u64)).unwrap() {
            if c.accepts != c.trials {
                failures.push(format!("p = q pair {i} K={} rejected a trial", c.k));
            }
        }
        let point = Categorical::point_mass(N, 0);
        for c in gls_counts(&point, &q, &K_LIST, GRID_TRIALS, master.tag(5).tag(i as u64)).unwrap() {
            let bound = lml_bound(&point, &q, c.k).unwrap();
            let sigma = binomial_stderr(q.prob(0), GRID_TRIALS);
            if (bound - q.prob(0)).abs() > 1e-12 || (c.accept_rate() - q.prob(0)).abs() > 3.0 * sigma {
                failures.push(format!("degenerate pair {i} K={}", c.k));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "min (empirical - bound)/sigma = {min_margin:.2}; exact cases checked; failures: {failures:?}"
        ),
    )
}

fn criterion_toy_sweep() -> Outcome {
    let cfg = ToySweepConfig {
        pairs: 100,
        n: 10,
        k_max: 20,
        trials: 20_000,
    };
    let rows = run_toy_sweep(&cfg, SeedContext::new(SEED).tag(6)).unwrap();
    let mut failures = Vec::new();
    let mut gls_mean = vec![0.0; cfg.k_max];
    let mut ind_mean = vec![0.0; cfg.k_max];
    for r in &rows {
        gls_mean[r.k - 1] += r.gls / cfg.pairs as f64;
        ind_mean[r.k - 1] += r.independent / cfg.pairs as f64;
        if r.k > 1 && r.gls_step < -3.0 * r.gls_step_stderr {
            failures.push(format!("pair {} decreases at K={}", r.pair, r.k));
        }
        if r.k > 1 {
            let sigma = (r.gls_stderr.powi(2) + r.independent_stderr.powi(2)).sqrt();
            if r.gls < r.independent - 3.0 * sigma {
                failures.push(format!("pair {} below independent at K={}", r.pair, r.k));
            }
        }
        if r.k == 1 && (r.gls < r.weak - 3.0 * r.gls_stderr || r.gls > r.maximal + 3.0 * r.gls_stderr) {
            failures.push(format!("pair {} K=1 outside [weak, maximal]", r.pair));
        }
    }
    for k in 2..=cfg.k_max {
        if gls_mean[k - 1] <= ind_mean[k - 1] {
            failures.push(format!("mean curve: GLS not above independent at K={k}"));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "mean GLS K=1/2/20: {:.4}/{:.4}/{:.4}, independent {:.4}/{:.4}/{:.4}; failures: {failures:?}",
            gls_mean[0], gls_mean[1], gls_mean[19], ind_mean[0], ind_mean[1], ind_mean[19]
        ),
    )
}

fn tabular(tag: u64, sharpness: f64) -> TabularLM {
    TabularLM::random(SeedContext::new(SEED).tag(7).tag(tag), 3, 3, sharpness).unwrap()
}

fn criterion_sequence_law() -> Outcome {
    let target = tabular(0, 1.0);
    let drafter = tabular(1, 1.0);
    let context = [2usize];
    let length = 3;
    let law = exact_sequence_law(&target, &context, length).unwrap();
    let trials = 1_000_000;
    let mut worst: f64 = 0.0;
    let mut first_worst: f64 = 0.0;
    for k in [1usize, 2, 4] {
        let cfg = DecodeConfig::new(k, 2, DecodeMode::Conditional);
        let seed = SeedContext::new(SEED).tag(8).tag(k as u64);
        let counts = par_trials(
            trials,
            || vec![0u64; 27],
            |acc, t| {
                let g = generate(&cfg, &target, &[drafter.clone()], &context, length, seed.tag(t as u64))
                    .unwrap();
                acc[g.tokens.iter().fold(0, |a, &x| 3 * a + x)] += 1;
            },
            |a, b| a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
        );
        let mut first = [0.0f64; 3];
        for (seq, p) in &law {
            let idx = seq.iter().fold(0, |a, &x| 3 * a + x);
            let f = counts[idx] as f64 / trials as f64;
            worst = worst.max((f - p).abs());
            first[seq[0]] += f - p;
        }
        first_worst = first.iter().fold(first_worst, |m, d| m.max(d.abs()));
    }
    outcome(
        worst <= 0.005,
        format!("max |empirical - exact| over 27 length-3 prefixes = {worst:.5}, first token {first_worst:.5} (limit 0.005)"),
    )
}

fn criterion_invariance() -> Outcome {
    let target = tabular(10, 1.0);
    let da = vec![tabular(11, 1.0)];
    let db = vec![tabular(12, 3.0)];
    let context = [0usize, 1];
    let (k, l) = (3, 3);
    let episodes = 10_000;
    let mut conditional_violations = 0;
    let mut rejection_violations = 0;
    let mut strong_violations = 0;
    let mut diff = RunningStat::default();
    for e in 0..episodes {
        let seed = SeedContext::new(SEED).tag(9).tag(e);
        let races = episode_races(seed, l, k, 3);
        let tokens_a = draft_generate(&da, k, &context, l, &races).unwrap();
        let tokens_b = draft_generate(&db, k, &context, l, &races).unwrap();
        let a = LabeledDrafts { tokens: &tokens_a, drafters: &da };
        let a_as_b = LabeledDrafts { tokens: &tokens_a, drafters: &db };
        let b = LabeledDrafts { tokens: &tokens_b, drafters: &db };
        let check = |x, y, mode, v| invariance_check(&target, &context, seed, x, y, mode, v).unwrap();
        if check(a, a_as_b, DecodeMode::Conditional, Verifier::Gls) != InvarianceVerdict::Holds {
            conditional_violations += 1;
        }
        if check(a, a_as_b, DecodeMode::Conditional, Verifier::RecursiveRejection) == InvarianceVerdict::Violated {
            rejection_violations += 1;
        }
        if check(a, b, DecodeMode::Strong, Verifier::Gls) != InvarianceVerdict::Holds {
            strong_violations += 1;
        }
        let run = |mode| {
            run_decode_episode(&DecodeConfig::new(k, l, mode), &target, &da, &context, seed)
                .unwrap()
                .tau as f64
        };
        diff.push(run(DecodeMode::Strong) - run(DecodeMode::Conditional));
    }
    let s = diff.summary();
    let pass = conditional_violations == 0 && strong_violations == 0 && s.mean <= 3.0 * s.stderr;
    outcome(
        pass,
        format!(
            "(a) {conditional_violations} conditional violations, (b) {strong_violations} strong violations \
             in {episodes} episodes; (c) strong - conditional block efficiency = {:.4} +- {:.4}; \
             recursive rejection under relabeling: {rejection_violations} violations",
            s.mean, s.stderr
        ),
    )
}

fn cat(v: &[f64]) -> Categorical {
    Categorical::new(v.to_vec()).unwrap()
}

fn wz_models() -> Vec<(&'static str, DiscreteWzModel)> {
    let binary = DiscreteWzModel::new(
        cat(&[0.5, 0.5]),
        vec![cat(&[0.9, 0.1]), cat(&[0.1, 0.9])],
        vec![cat(&[0.8, 0.2]), cat(&[0.2, 0.8])],
    )
    .unwrap();
    // four source symbols, side information over 4, representation over 8
    let side = (0..4)
        .map(|a| cat(&(0..4).map(|t| if t == a { 0.7 } else { 0.1 }).collect::<Vec<_>>()))
        .collect();
    let repr = (0..4)
        .map(|a| {
            cat(&(0..8)
                .map(|w| match (w as i32 - 2 * a as i32).rem_euclid(8) {
                    0 => 0.5,
                    1 | 7 => 0.2,
                    _ => 0.1 / 5.0,
                })
                .collect::<Vec<_>>())
        })
        .collect();
    let quaternary = DiscreteWzModel::new(cat(&[0.4, 0.3, 0.2, 0.1]), side, repr).unwrap();
    let independent = DiscreteWzModel::new(
        cat(&[0.3, 0.7]),
        vec![cat(&[0.6, 0.4]), cat(&[0.2, 0.8])],
        vec![Categorical::uniform(8), Categorical::uniform(8)],
    )
    .unwrap();
    vec![("binary", binary), ("quaternary", quaternary), ("independent", independent)]
}

fn criterion_wz_bound() -> Outcome {
    let trials = 100_000;
    let mut failures = Vec::new();
    let mut min_margin = f64::INFINITY;
    for (mi, (name, model)) in wz_models().into_iter().enumerate() {
        for k in [1usize, 2, 4] {
            for l in [1usize, 2, 4] {
                let bound = wz_error_bound(&model, k, l).unwrap();
                if name == "independent" && (bound - 1.0 / (1.0 + (k * l) as f64)).abs() > 1e-12 {
                    failures.push(format!("{name} K={k} L={l}: bound {bound} != 1/(1+KL)"));
                }
                let seed = SeedContext::new(SEED).tag(10).tags(&[mi as u64, k as u64, l as u64]);
                let code = WzCode::new(k, l).unwrap();
                let miss = discrete_mismatches(&model, code, Scheme::Gls, trials, seed).unwrap();
                let rate = miss as f64 / trials as f64;
                let sigma = binomial_stderr(bound, trials).max(binomial_stderr(rate, trials));
                min_margin = min_margin.min((bound - rate) / sigma);
                if rate > bound + 3.0 * sigma {
                    failures.push(format!("{name} K={k} L={l}: mismatch {rate:.4} > bound {bound:.4}"));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("min (bound - mismatch)/sigma = {min_margin:.2} over 27 cells; failures: {failures:?}"),
    )
}

fn criterion_gaussian_rd() -> Outcome {
    let cfg = RdSweepConfig {
        var_t_given_a: 0.5,
        samples: 1 << 15,
        l_max_list: vec![2, 4, 8, 16, 32, 64],
        decoders_list: vec![1, 2, 3, 4],
        var_w_candidates: vec![0.01, 0.008, 0.006, 0.005, 0.003, 0.002, 0.001],
        schemes: vec![Scheme::Gls, Scheme::SharedRow],
        selection_trials: 10_000,
        eval_trials: 10_000,
    };
    let result = run_rd_sweep(&cfg, SeedContext::new(SEED).tag(11)).unwrap();
    let d = |s, k, l| result.cell(s, k, l).unwrap().distortion_db;
    let mut failures = Vec::new();
    let mut report = Vec::new();
    for (label, k, l, expect, tol) in [("a", 1, 2, -9.70, 0.5), ("b", 2, 64, -31.47, 0.7), ("c", 4, 4, -23.94, 0.7)] {
        let got = d(Scheme::Gls, k, l).mean;
        report.push(format!("({label}) K={k} L={l}: {got:.2} dB (target {expect})"));
        if (got - expect).abs() > tol {
            failures.push(format!("({label}) off target"));
        }
    }
    let gap = d(Scheme::SharedRow, 4, 4).mean - d(Scheme::Gls, 4, 4).mean;
    report.push(format!("(d) baseline - GLS at K=4 L=4: {gap:.2} dB"));
    if gap < 1.0 {
        failures.push("(d) gap below 1 dB".into());
    }
    for &l in &cfg.l_max_list {
        for k in 1..4 {
            let (a, b) = (d(Scheme::Gls, k, l), d(Scheme::Gls, k + 1, l));
            if b.mean > a.mean + 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt() {
                failures.push(format!("(e) L={l}: K={} worse than K={k}", k + 1));
            }
        }
    }
    outcome(failures.is_empty(), format!("{}; failures: {failures:?}", report.join(", ")))
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |id: &str| filters.is_empty() || filters.iter().any(|f| id.contains(f.as_str()));
    let mut all_pass = true;
    let mut report = |id: &str, run: &dyn Fn() -> Outcome| {
        if !selected(id) {
            return;
        }
        let start = Instant::now();
        let o = run();
        all_pass &= o.pass;
        println!(
            "{} {id} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    };
    let grid_cell = std::cell::OnceCell::new();
    let shared = || grid_cell.get_or_init(grid);
    report("criterion_1_marginal_laws", &|| criterion_marginals(shared()));
    report("criterion_2_lml_dominance", &|| criterion_lml(shared()));
    report("criterion_3_toy_sweep", &criterion_toy_sweep);
    report("criterion_4_sequence_law", &criterion_sequence_law);
    report("criterion_5_drafter_invariance", &criterion_invariance);
    report("criterion_6_wz_error_bound", &criterion_wz_bound);
    report("criterion_7_gaussian_rd", &criterion_gaussian_rd);
    if !all_pass {
        std::process::exit(1);
    }
}
