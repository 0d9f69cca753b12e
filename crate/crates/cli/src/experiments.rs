//! Subcommand implementations. Each writes its records in grid order and
//! includes the master seed plus the tags that locate every measurement.

use serde::Serialize;

use glskit::bounds::{lml_bound, maximal_coupling_prob, pair_bounds, weak_coupling_bound, wz_error_bound};
use glskit::coupling::Categorical;
use glskit::montecarlo::{accept_profiles, gls_counts, independent_exact_accept, run_toy_sweep, ToySweepConfig};
use glskit::specdec::{
    draft_generate, episode_races, invariance_check, run_decode_episode, DecodeConfig, DecodeMode,
    DecodeTrace, InvarianceVerdict, LabeledDrafts, TabularLM, Verifier,
};
use glskit::stats::{binomial_stderr, RunningStat};
use glskit::wz::{discrete_mismatches, run_rd_sweep, DiscreteWzModel, RdSweepConfig, Scheme, WzCode};
use glskit::SeedContext;

use crate::config::{require, require_count, require_counts, require_list, ExperimentConfig};
use crate::error::CliError;
use crate::output::OutputDir;

fn master(cfg: &ExperimentConfig) -> (u64, SeedContext) {
    let seed = cfg.seed.unwrap_or_default();
    (seed, SeedContext::new(seed))
}

fn categorical(raw: &Option<Vec<f64>>, key: &str) -> Result<Categorical, CliError> {
    Categorical::new(require(raw, key)?)
        .map_err(|e| CliError::InvalidConfig(format!("`{key}`: {e}")))
}

fn categorical_rows(raw: &Option<Vec<Vec<f64>>>, key: &str) -> Result<Vec<Categorical>, CliError> {
    require_list(raw, key)?
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            Categorical::new(row).map_err(|e| CliError::InvalidConfig(format!("`{key}` row {i}: {e}")))
        })
        .collect()
}

fn pair(cfg: &ExperimentConfig) -> Result<(Categorical, Categorical), CliError> {
    let p = categorical(&cfg.p, "p")?;
    let q = categorical(&cfg.q, "q")?;
    if p.len() != q.len() {
        return Err(CliError::InvalidConfig(format!(
            "`p` has {} entries but `q` has {}",
            p.len(),
            q.len()
        )));
    }
    Ok((p, q))
}

fn parse_scheme(s: &str) -> Result<Scheme, CliError> {
    match s {
        "gls" => Ok(Scheme::Gls),
        "shared_row" => Ok(Scheme::SharedRow),
        other => Err(CliError::InvalidConfig(format!(
            "unknown scheme `{other}` (expected gls or shared_row)"
        ))),
    }
}

fn parse_mode(s: &str) -> Result<DecodeMode, CliError> {
    match s {
        "conditional" => Ok(DecodeMode::Conditional),
        "strong" => Ok(DecodeMode::Strong),
        other => Err(CliError::InvalidConfig(format!(
            "unknown mode `{other}` (expected conditional or strong)"
        ))),
    }
}

fn mode_name(m: DecodeMode) -> &'static str {
    match m {
        DecodeMode::Conditional => "conditional",
        DecodeMode::Strong => "strong",
    }
}

#[derive(Serialize)]
struct BoundRecord {
    seed: u64,
    k: usize,
    bound: &'static str,
    value: f64,
}

pub fn bound(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (seed, _) = master(cfg);
    let (p, q) = pair(cfg)?;
    let mut records = Vec::new();
    for k in require_counts(&cfg.k_list, "k_list")? {
        for b in pair_bounds(&p, &q, k)? {
            records.push(BoundRecord {
                seed,
                k,
                bound: b.kind.name(),
                value: b.value,
            });
        }
        records.push(BoundRecord {
            seed,
            k,
            bound: "independent_exact",
            value: independent_exact_accept(&p, &q, k),
        });
    }
    out.write_records("bounds", &records)
}

#[derive(Serialize)]
struct CoupleRecord {
    seed: u64,
    /// Trial `t` of this row replays from `seed.tag(stream).tag(t)`.
    stream: u64,
    k: usize,
    method: &'static str,
    trials: u64,
    accept: f64,
    stderr: f64,
    lml_bound: f64,
    maximal_coupling: f64,
    weak_coupling: f64,
    y_tv: Option<f64>,
    x_tv: Option<f64>,
}

pub fn couple(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (seed, ctx) = master(cfg);
    let (p, q) = pair(cfg)?;
    let k_list = require_counts(&cfg.k_list, "k_list")?;
    let trials = require_count(&cfg.trials, "trials", 2)?;
    let k_max = *k_list.iter().max().unwrap_or(&1);
    let gls = gls_counts(&p, &q, &k_list, trials, ctx.tag(0))?;
    let prof = accept_profiles(&p, &q, k_max, trials, ctx.tag(1))?;
    let maximal = maximal_coupling_prob(&p, &q)?;
    let weak = weak_coupling_bound(&p, &q)?;
    let mut records = Vec::new();
    for (c, &k) in gls.iter().zip(&k_list) {
        let lml = lml_bound(&p, &q, k)?;
        let row = |stream, method, accept: f64, y_tv, x_tv| CoupleRecord {
            seed,
            stream,
            k,
            method,
            trials: trials as u64,
            accept,
            stderr: binomial_stderr(accept, trials),
            lml_bound: lml,
            maximal_coupling: maximal,
            weak_coupling: weak,
            y_tv,
            x_tv,
        };
        records.push(row(0, "gls", c.accept_rate(), Some(c.y_tv(&q)), Some(c.max_x_tv(&p))));
        records.push(row(1, "independent", prof.rate(&prof.independent, k), None, None));
        records.push(row(1, "recursive_rejection", prof.rate(&prof.rejection, k), None, None));
    }
    out.write_records("couple", &records)
}

#[derive(Serialize)]
struct ToyRecord {
    seed: u64,
    pair: usize,
    k: usize,
    trials: u64,
    gls: f64,
    gls_stderr: f64,
    gls_step: f64,
    gls_step_stderr: f64,
    independent: f64,
    independent_stderr: f64,
    recursive_rejection: f64,
    recursive_rejection_stderr: f64,
    lml_bound: f64,
    independent_exact: f64,
    maximal_coupling: f64,
    weak_coupling: f64,
}

pub fn toy_sweep(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (seed, ctx) = master(cfg);
    let sweep = ToySweepConfig {
        pairs: require_count(&cfg.pairs, "pairs", 1)?,
        n: require_count(&cfg.n, "n", 1)?,
        k_max: require_count(&cfg.k_max, "k_max", 1)?,
        trials: require_count(&cfg.trials, "trials", 2)?,
    };
    let records: Vec<ToyRecord> = run_toy_sweep(&sweep, ctx)?
        .into_iter()
        .map(|r| ToyRecord {
            seed,
            pair: r.pair,
            k: r.k,
            trials: r.trials,
            gls: r.gls,
            gls_stderr: r.gls_stderr,
            gls_step: r.gls_step,
            gls_step_stderr: r.gls_step_stderr,
            independent: r.independent,
            independent_stderr: r.independent_stderr,
            recursive_rejection: r.rejection,
            recursive_rejection_stderr: r.rejection_stderr,
            lml_bound: r.lml,
            independent_exact: r.independent_exact,
            maximal_coupling: r.maximal,
            weak_coupling: r.weak,
        })
        .collect();
    out.write_records("toy_sweep", &records)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|t| t.to_string()).collect::<Vec<_>>().join(sep)
}

#[derive(Serialize)]
struct TraceRecord {
    seed: u64,
    k: usize,
    verifier: &'static str,
    mode: &'static str,
    /// Replays from `seed.tag(2).tag(k).tag(episode)`.
    episode: usize,
    tau: usize,
    accepted: String,
    output: String,
    drafts: String,
}

#[derive(Serialize)]
struct SpecdecRecord {
    seed: u64,
    k: usize,
    draft_len: usize,
    verifier: &'static str,
    mode: &'static str,
    episodes: usize,
    block_efficiency: f64,
    block_efficiency_stderr: f64,
    first_step_accept: f64,
    first_step_lml_bound: f64,
    invariance_checked: usize,
    invariance_violations: usize,
}

pub fn specdec(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (seed, ctx) = master(cfg);
    let n = require_count(&cfg.alphabet, "alphabet", 1)?;
    let c = require(&cfg.context_len, "context_len")?;
    let l = require_count(&cfg.draft_len, "draft_len", 1)?;
    let k_list = require_counts(&cfg.k_list, "k_list")?;
    let episodes = require_count(&cfg.episodes, "episodes", 2)?;
    let context = cfg.context.clone().unwrap_or_default();
    if context.iter().any(|&t| t >= n) {
        return Err(CliError::InvalidConfig("`context` tokens must be < alphabet".into()));
    }
    let modes = match &cfg.modes {
        Some(m) => m.iter().map(|s| parse_mode(s)).collect::<Result<Vec<_>, _>>()?,
        None => vec![DecodeMode::Conditional],
    };
    let target = TabularLM::random(ctx.tag(0), n, c, cfg.target_sharpness.unwrap_or(1.0))?;
    let drafter = vec![TabularLM::random(ctx.tag(1), n, c, cfg.drafter_sharpness.unwrap_or(1.0))?];
    let alternate = vec![TabularLM::random(ctx.tag(3), n, c, 1.0)?];
    let q0 = target.conditional(&context)?;
    let p0 = drafter[0].conditional(&context)?;

    let mut variants: Vec<(Verifier, DecodeMode)> = modes.iter().map(|&m| (Verifier::Gls, m)).collect();
    if cfg.rejection_baseline.unwrap_or(false) {
        variants.push((Verifier::RecursiveRejection, DecodeMode::Conditional));
    }

    let mut traces = Vec::new();
    let mut summary = Vec::new();
    for &k in &k_list {
        for &(verifier, mode) in &variants {
            let dc = DecodeConfig { k, l, mode, verifier };
            let vname = match verifier {
                Verifier::Gls => "gls",
                Verifier::RecursiveRejection => "recursive_rejection",
            };
            let mut tau = RunningStat::default();
            let mut first_accepts = 0;
            let mut violations = 0;
            for e in 0..episodes {
                let es = ctx.tag(2).tag(k as u64).tag(e as u64);
                let tr: DecodeTrace = run_decode_episode(&dc, &target, &drafter, &context, es)?;
                tau.push(tr.tau as f64);
                first_accepts += tr.accepted[0] as usize;
                // relabeled drafts (conditional) or drafts from another model (strong)
                let races = episode_races(es, l, k, n);
                let a = LabeledDrafts {
                    tokens: &tr.drafts,
                    drafters: &drafter,
                };
                let other_tokens = match mode {
                    DecodeMode::Conditional => tr.drafts.clone(),
                    DecodeMode::Strong => draft_generate(&alternate, k, &context, l, &races)?,
                };
                let b = LabeledDrafts {
                    tokens: &other_tokens,
                    drafters: &alternate,
                };
                if invariance_check(&target, &context, es, a, b, mode, verifier)? == InvarianceVerdict::Violated {
                    violations += 1;
                }
                traces.push(TraceRecord {
                    seed,
                    k,
                    verifier: vname,
                    mode: mode_name(mode),
                    episode: e,
                    tau: tr.tau,
                    accepted: join(tr.accepted.iter().map(|&a| a as u8), " "),
                    output: join(&tr.output, " "),
                    drafts: join(tr.drafts.iter().map(|d| join(d, " ")), "|"),
                });
            }
            let s = tau.summary();
            summary.push(SpecdecRecord {
                seed,
                k,
                draft_len: l,
                verifier: vname,
                mode: mode_name(mode),
                episodes,
                block_efficiency: s.mean,
                block_efficiency_stderr: s.stderr,
                first_step_accept: first_accepts as f64 / episodes as f64,
                first_step_lml_bound: lml_bound(p0, q0, k)?,
                invariance_checked: episodes,
                invariance_violations: violations,
            });
        }
    }
    out.write_records("specdec", &summary)?;
    out.write_records("traces", &traces)
}

#[derive(Serialize)]
struct WzRecord {
    seed: u64,
    scheme: &'static str,
    k: usize,
    l_max: usize,
    rate_bits: f64,
    /// Trial `t` replays from `seed.tag(k).tag(l_max).tag(scheme_index).tag(t)`.
    scheme_index: usize,
    trials: usize,
    mismatches: u64,
    mismatch_rate: f64,
    stderr: f64,
    error_bound: f64,
}

pub fn wz_discrete(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (seed, ctx) = master(cfg);
    let model = DiscreteWzModel::new(
        categorical(&cfg.p_a, "p_a")?,
        categorical_rows(&cfg.t_given_a, "t_given_a")?,
        categorical_rows(&cfg.w_given_a, "w_given_a")?,
    )
    .map_err(|e| CliError::InvalidConfig(format!("model: {e}")))?;
    let k_list = require_counts(&cfg.k_list, "k_list")?;
    let l_list = require_counts(&cfg.l_max_list, "l_max_list")?;
    let trials = require_count(&cfg.trials, "trials", 2)?;
    let schemes = match &cfg.schemes {
        Some(s) => s.iter().map(|x| parse_scheme(x)).collect::<Result<Vec<_>, _>>()?,
        None => vec![Scheme::Gls],
    };
    let mut records = Vec::new();
    for &k in &k_list {
        for &l in &l_list {
            let bound = wz_error_bound(&model, k, l)?;
            for (si, &scheme) in schemes.iter().enumerate() {
                let code = WzCode::new(k, l)?;
                let s = ctx.tag(k as u64).tag(l as u64).tag(si as u64);
                let miss = discrete_mismatches(&model, code, scheme, trials, s)?;
                let rate = miss as f64 / trials as f64;
                records.push(WzRecord {
                    seed,
                    scheme: scheme.name(),
                    k,
                    l_max: l,
                    rate_bits: code.rate_bits(),
                    scheme_index: si,
                    trials,
                    mismatches: miss,
                    mismatch_rate: rate,
                    stderr: binomial_stderr(rate, trials),
                    error_bound: bound,
                });
            }
        }
    }
    out.write_records("wz_discrete", &records)
}

#[derive(Serialize)]
struct RdRecord {
    seed: u64,
    scheme: &'static str,
    k: usize,
    l_max: usize,
    rate_bits: f64,
    var_w_given_a: f64,
    distortion_db: f64,
    distortion_db_stderr: f64,
    mse: f64,
    mse_stderr: f64,
    mse_db: f64,
    match_rate: f64,
    trials: usize,
}

pub fn gaussian_rd(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (seed, ctx) = master(cfg);
    let schemes = match &cfg.schemes {
        Some(s) => s.iter().map(|x| parse_scheme(x)).collect::<Result<Vec<_>, _>>()?,
        None => vec![Scheme::Gls, Scheme::SharedRow],
    };
    let sweep = RdSweepConfig {
        var_t_given_a: require(&cfg.var_t_given_a, "var_t_given_a")?,
        samples: require_count(&cfg.samples, "samples", 1)?,
        l_max_list: require_counts(&cfg.l_max_list, "l_max_list")?,
        decoders_list: require_counts(&cfg.k_list, "k_list")?,
        var_w_candidates: require_list(&cfg.var_w_list, "var_w_list")?,
        schemes,
        selection_trials: require_count(&cfg.selection_trials, "selection_trials", 2)?,
        eval_trials: require_count(&cfg.eval_trials, "eval_trials", 2)?,
    };
    sweep
        .validate()
        .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    let records: Vec<RdRecord> = run_rd_sweep(&sweep, ctx)?
        .cells
        .into_iter()
        .map(|c| RdRecord {
            seed,
            scheme: c.scheme.name(),
            k: c.decoders,
            l_max: c.l_max,
            rate_bits: c.rate_bits,
            var_w_given_a: c.var_w_given_a,
            distortion_db: c.distortion_db.mean,
            distortion_db_stderr: c.distortion_db.stderr,
            mse: c.mse.mean,
            mse_stderr: c.mse.stderr,
            mse_db: c.mse_db,
            match_rate: c.match_rate,
            trials: c.trials,
        })
        .collect();
    out.write_records("gaussian_rd", &records)
}
