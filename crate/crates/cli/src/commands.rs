//! Subcommand handlers. Each one writes its tables into the output directory
//! and reports the paths plus a few human-readable notes.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use dicke_core::asymptotics::{
    beta_moment_factor, bessel_comparison, contraction_sum, contraction_window, log_moment_factor,
    stationary_phase_comparison, INTERIOR_WINDOW,
};
use dicke_core::cavity::{
    bernoulli_fisher_fd, estimator_trials, mean_variance, min_resolvable_coupling, probe_transmission,
};
use dicke_core::chain::{build_chain_scoped, expected_steps, Scope};
use dicke_core::geometry::{discretized_pdf, geometric_transition_pdf, pdf_moment, ring_model_tv};
use dicke_core::{
    beta_moment, config_to_json, crb_variance, d_column, fisher_information, geometric_angle, husimi_q_dicke,
    monte_carlo_summary, optimal_angles, outcome_distribution, overlap_probability, parse_config, policy_angles,
    required_photons, resolvable, resonant_peak_gap, ring_radius, AnglePolicy, Angle, CavityParams, ConfigFile,
    ProtocolConfig, ResetPolicy, SpinSpec,
};

use crate::cli::*;
use crate::error::{CliError, CliResult};
use crate::figure::{run_figure_job, FigureJob};
use crate::output::{num, write_csv, write_json, OutputSettings, Table};

/// Files written by a command, plus short notes for the terminal.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

/// Reads and validates a JSON protocol config.
pub fn load_config(path: &Path) -> CliResult<ProtocolConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_config(&text)?)
}

/// Resolves the protocol flags (or config file) into a validated config.
/// `--seed` overrides a seed from the file.
pub fn protocol_config(args: &ProtocolArgs, seed: Option<u64>) -> CliResult<ProtocolConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => {
            let two_j = args.two_j.ok_or_else(|| CliError::Usage("either --config or --two-j is required".into()))?;
            let reset = match (args.reset, args.reset_threshold) {
                (_, Some(t)) => Some(ResetPolicy::Custom(t)),
                (Some(ResetArg::None), None) => Some(ResetPolicy::None),
                (Some(ResetArg::SqrtJ), None) => Some(ResetPolicy::SqrtJ),
                (None, None) => None,
            };
            ConfigFile {
                two_j: two_j as i64,
                target_two_mt: args.two_mt.map(i64::from),
                angle_policy: args.policy.map(AnglePolicy::from),
                reset_policy: reset,
                max_iterations: args.max_iterations.map(i64::from),
                seed: None,
            }
            .into_config()?
        }
    };
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    Ok(cfg)
}

/// Parses, configures the thread pool and dispatches.
pub fn run(cli: Cli) -> CliResult<Outcome> {
    match cli.global.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| dispatch(&cli)),
        None => dispatch(&cli),
    }
}

fn config_value<T: Serialize>(args: &T, seed: Option<u64>) -> CliResult<Value> {
    Ok(json!({ "args": serde_json::to_value(args)?, "seed": seed }))
}

fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    let g = &cli.global;
    let out = OutputSettings::new(&g.out_dir, !g.no_timestamp);
    match &cli.command {
        Command::Dmatrix(a) => dmatrix(a, &out),
        Command::Angles(a) => angles(a, &out),
        Command::Chain(a) => chain(a, g.seed, &out),
        Command::Simulate(a) => simulate(a, g.seed, &out),
        Command::Asymptotics(a) => asymptotics(a, &out),
        Command::Husimi(a) => husimi(a, &out),
        Command::Geometry(a) => geometry(a, &out),
        Command::Cavity(a) => cavity(a, g.seed.unwrap_or(0), &out),
        Command::Figure(a) => {
            let job = FigureJob::new(a.id, a.two_j.clone(), &g.out_dir)?;
            Ok(Outcome { files: run_figure_job(&job, !g.no_timestamp)?, notes: Vec::new() })
        }
    }
}

fn dmatrix(a: &DmatrixArgs, out: &OutputSettings) -> CliResult<Outcome> {
    let angle = Angle::new(a.theta)?;
    let backend = a.backend.resolve(a.two_j);
    let columns: Vec<i32> = match a.two_m {
        Some(m) => vec![m],
        None => (-(a.two_j as i32)..=a.two_j as i32).step_by(2).collect(),
    };
    let mut t = Table::new(["two_m_prime", "two_m", "d"]);
    for m in columns {
        let col = d_column(SpinSpec::new(a.two_j, m)?, angle, backend)?;
        for (mp, d) in col.iter() {
            t.push(vec![mp.to_string(), m.to_string(), num(d)]);
        }
    }
    let file = write_csv(out, "dmatrix.csv", "dmatrix", &config_value(a, None)?, &t)?;
    Ok(Outcome { files: vec![file], notes: vec![format!("backend: {backend:?}")] })
}

fn angles(a: &AnglesArgs, out: &OutputSettings) -> CliResult<Outcome> {
    let tj = a.two_j;
    let mt = a.two_mt.unwrap_or((tj % 2) as i32);
    dicke_core::validate_spin(tj as i64, mt as i64)?;
    let ms: Vec<i32> = (-(tj as i32)..=tj as i32).step_by(2).filter(|&m| m != mt).collect();
    let mut t = Table::new(["two_m", "angle", "overlap_probability", "fallback"]);
    let policy = AnglePolicy::from(a.policy);
    if policy == AnglePolicy::NumericOptimal {
        for (m, r) in ms.iter().zip(optimal_angles(tj, mt, &ms)?) {
            t.push(vec![m.to_string(), num(r.angle.radians()), num(r.overlap_probability), r.fallback.to_string()]);
        }
    } else {
        for (&m, angle) in ms.iter().zip(policy_angles(policy, tj, mt, &ms)?) {
            t.push(vec![m.to_string(), num(angle.radians()), num(overlap_probability(tj, mt, m, angle)?), "false".into()]);
        }
    }
    let cfg = json!({ "args": serde_json::to_value(a)?, "two_mt": mt });
    Ok(Outcome { files: vec![write_csv(out, "angles.csv", "angles", &cfg, &t)?], notes: Vec::new() })
}

fn protocol_value(cfg: &ProtocolConfig, extra: Value) -> CliResult<Value> {
    let protocol: Value = serde_json::from_str(&config_to_json(cfg))?;
    Ok(json!({ "protocol": protocol, "options": extra }))
}

fn chain(a: &ChainArgs, seed: Option<u64>, out: &OutputSettings) -> CliResult<Outcome> {
    let cfg = protocol_config(&a.protocol, seed)?;
    let scope = match a.scope {
        ScopeArg::Full => Scope::Full,
        ScopeArg::Reachable => Scope::Reachable,
    };
    let chain = build_chain_scoped(cfg, scope)?;
    let report = expected_steps(&chain)?;
    let meta = protocol_value(&cfg, json!({ "scope": a.scope }))?;

    let n = chain.states.len();
    let mut matrix = Table::new(std::iter::once("two_m".to_string()).chain(chain.states.iter().map(|m| format!("to_{m}"))));
    for (i, &m) in chain.states.iter().enumerate() {
        matrix.push(std::iter::once(m.to_string()).chain((0..n).map(|b| num(chain.matrix[(i, b)]))).collect());
    }
    let mut steps = Table::new(["two_m", "expected_steps"]);
    for (m, v) in report.states.iter().zip(&report.expected_steps_from) {
        steps.push(vec![m.to_string(), v.map(num).unwrap_or_default()]);
    }
    let files = vec![
        write_csv(out, "chain_matrix.csv", "chain", &meta, &matrix)?,
        write_csv(out, "chain_steps.csv", "chain", &meta, &steps)?,
    ];
    Ok(Outcome { files, notes: vec![format!("expected steps from m = j: {}", report.start_state_value)] })
}

fn simulate(a: &SimulateArgs, seed: Option<u64>, out: &OutputSettings) -> CliResult<Outcome> {
    let cfg = protocol_config(&a.protocol, seed)?;
    let summary = monte_carlo_summary(&[cfg], a.runs, a.engine.into())?.remove(0);
    let meta = protocol_value(&cfg, json!({ "runs": a.runs, "engine": a.engine }))?;
    let last = summary.histogram.iter().rposition(|&c| c > 0).unwrap_or(0);
    let mut hist = Table::new(["iterations", "count"]);
    for (k, c) in summary.histogram[..=last].iter().enumerate() {
        hist.push(vec![k.to_string(), c.to_string()]);
    }
    let files = vec![
        write_json(out, "simulate_summary.json", "simulate", &meta, &summary)?,
        write_csv(out, "simulate_histogram.csv", "simulate", &meta, &hist)?,
    ];
    let note = format!("mean {} +- {} over {} runs, success rate {}", summary.mean, summary.std_error, summary.n_runs, summary.success_rate);
    Ok(Outcome { files, notes: vec![note] })
}

fn need_two_m(a: &AsymptoticsArgs) -> CliResult<i32> {
    a.two_m.ok_or_else(|| CliError::Usage("this mode needs --two-m".into()))
}

fn asymptotics(a: &AsymptoticsArgs, out: &OutputSettings) -> CliResult<Outcome> {
    let meta = config_value(a, None)?;
    let mut notes = Vec::new();
    let comparison_table = |rows: &[dicke_core::AsymptoticComparison]| {
        let mut t = Table::new(["two_j", "two_m", "two_m_prime", "exact", "approx", "abs_error", "predicted_error_scale"]);
        for r in rows {
            t.push(vec![
                r.two_j.to_string(),
                r.two_m.to_string(),
                r.two_m_prime.to_string(),
                num(r.exact),
                num(r.approx),
                num(r.abs_error),
                num(r.predicted_error_scale),
            ]);
        }
        t
    };
    let (name, table) = match a.mode {
        AsymptoticsMode::StationaryPhase => {
            let rows = stationary_phase_comparison(a.two_j, need_two_m(a)?, INTERIOR_WINDOW)?;
            let worst = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
            notes.push(format!("max interior error: {worst}"));
            ("asymptotics_stationary_phase.csv", comparison_table(&rows))
        }
        AsymptoticsMode::Bessel => {
            let rows = bessel_comparison(a.two_j, need_two_m(a)?, a.reach)?;
            ("asymptotics_bessel.csv", comparison_table(&rows))
        }
        AsymptoticsMode::Contraction => {
            let policy = AnglePolicy::from(a.policy);
            let sums = match a.two_m {
                Some(m) => vec![(m, contraction_sum(a.two_j, a.alpha, m, policy)?)],
                None => contraction_window(a.two_j, a.alpha, policy)?,
            };
            let c_hat = sums.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
            notes.push(format!("empirical contraction constant: {c_hat}"));
            let mut t = Table::new(["two_m", "contraction_sum"]);
            for (m, s) in sums {
                t.push(vec![m.to_string(), num(s)]);
            }
            ("asymptotics_contraction.csv", t)
        }
        AsymptoticsMode::Moments => {
            let m = need_two_m(a)?;
            let mut t = Table::new(["alpha", "beta_moment", "quadrature", "factor", "log_factor"]);
            for k in 1..=20 {
                let alpha = k as f64 / 20.0;
                t.push(vec![
                    num(alpha),
                    num(beta_moment(alpha, a.two_j, m, a.two_mt)?),
                    num(pdf_moment(alpha, a.two_j, m, a.two_mt)?),
                    num(beta_moment_factor(alpha)),
                    num(log_moment_factor(alpha)),
                ]);
            }
            ("asymptotics_moments.csv", t)
        }
    };
    Ok(Outcome { files: vec![write_csv(out, name, "asymptotics", &meta, &table)?], notes })
}

fn husimi(a: &HusimiArgs, out: &OutputSettings) -> CliResult<Outcome> {
    if a.grid < 2 {
        return Err(CliError::Usage("--grid needs at least 2 points".into()));
    }
    let spec = SpinSpec::new(a.two_j, a.two_m)?;
    let mut t = Table::new(["theta", "q_value"]);
    for k in 0..a.grid {
        let theta = PI * k as f64 / (a.grid - 1) as f64;
        t.push(vec![num(theta), num(husimi_q_dicke(spec, theta, 0.0))]);
    }
    Ok(Outcome { files: vec![write_csv(out, "husimi.csv", "husimi", &config_value(a, None)?, &t)?], notes: Vec::new() })
}

fn geometry(a: &GeometryArgs, out: &OutputSettings) -> CliResult<Outcome> {
    let (tj, tm, tmt) = (a.two_j, a.two_m, a.two_mt);
    let meta = config_value(a, None)?;
    let theta = geometric_angle(tj, tmt, tm)?;
    let r = ring_radius(SpinSpec::new(tj, tm)?);
    let tv = ring_model_tv(tj, tm, tmt)?;
    let mut ring = Table::new(["two_j", "two_m", "two_mt", "ring_radius", "theta_geometric", "half_chord", "total_variation"]);
    ring.push(vec![
        tj.to_string(),
        tm.to_string(),
        tmt.to_string(),
        num(r),
        num(theta.radians()),
        num(r * theta.radians().sin().abs()),
        num(tv),
    ]);
    let mut files = vec![write_csv(out, "geometry_ring.csv", "geometry", &meta, &ring)?];
    if a.pdf {
        let exact = outcome_distribution(SpinSpec::new(tj, tm)?, theta)?;
        let binned = discretized_pdf(tj, tm, tmt)?;
        let mut t = Table::new(["two_m_prime", "exact", "ring_binned", "ring_density"]);
        for (i, (e, b)) in exact.iter().zip(&binned).enumerate() {
            let tmp = 2 * i as i32 - tj as i32;
            t.push(vec![tmp.to_string(), num(*e), num(*b), num(geometric_transition_pdf(tj, tm, tmt, 0.5 * tmp as f64)?)]);
        }
        files.push(write_csv(out, "geometry_pdf.csv", "geometry", &meta, &t)?);
    }
    Ok(Outcome { files, notes: vec![format!("total variation distance: {tv}")] })
}

/// Transmission versus probe detuning for every weight `0..=n`.
pub fn spectrum_table(params: &CavityParams, n_atoms: u32) -> Table {
    let kappa = params.kappa;
    let mut t = Table::new(["probe_detuning", "weight", "transmission"]);
    for k in 0..=200 {
        let probe = kappa * (-5.0 + 0.05 * k as f64);
        let p = CavityParams { probe_detuning: probe, ..*params };
        for w in 0..=n_atoms {
            t.push(vec![num(probe), w.to_string(), num(probe_transmission(&p, params.chi * w as f64))]);
        }
    }
    t
}

#[derive(Serialize)]
struct EstimateSummary {
    n_atoms: u32,
    true_weight: u32,
    photons: u64,
    reps: u64,
    mean_raw_estimate: f64,
    variance_raw_estimate: f64,
    cramer_rao_variance: f64,
    rounded_error_rate: f64,
    photons_for_unit_variance: u64,
}

fn cavity(a: &CavityArgs, seed: u64, out: &OutputSettings) -> CliResult<Outcome> {
    let params = CavityParams::new(a.kappa, a.chi)?.with_coupling(a.g);
    let meta = json!({ "args": serde_json::to_value(a)?, "seed": seed, "regime_margin": dicke_core::cavity::REGIME_MARGIN });
    let mut notes = Vec::new();
    let mut files = Vec::new();
    match a.mode {
        CavityMode::Spectrum => {
            files.push(write_csv(out, "cavity_spectrum.csv", "cavity", &meta, &spectrum_table(&params, a.n_atoms))?);
        }
        CavityMode::Fisher => {
            let mut t = Table::new(["delta_a", "closed_form", "finite_difference", "crb_variance"]);
            let side = CavityParams { probe_detuning: params.kappa, ..params };
            for k in 0..=40 {
                let d = params.kappa * k as f64 / 20.0;
                t.push(vec![
                    num(d),
                    num(fisher_information(&side, d)),
                    num(bernoulli_fisher_fd(&side, d, 1e-3 * params.kappa)),
                    num(crb_variance(&side, d)),
                ]);
            }
            files.push(write_csv(out, "cavity_fisher.csv", "cavity", &meta, &t)?);
        }
        CavityMode::Estimate => {
            let trials = estimator_trials(&params, a.n_atoms, a.weight, a.photons, a.reps, seed)?;
            let raw: Vec<f64> = trials.iter().map(|t| t.raw_estimate).collect();
            let (mean, var) = mean_variance(&raw);
            let wrong = trials.iter().filter(|t| t.estimate != a.weight as f64).count();
            let summary = EstimateSummary {
                n_atoms: a.n_atoms,
                true_weight: a.weight,
                photons: a.photons,
                reps: a.reps,
                mean_raw_estimate: mean,
                variance_raw_estimate: var,
                cramer_rao_variance: trials.first().map_or(f64::NAN, |t| t.variance),
                rounded_error_rate: wrong as f64 / a.reps.max(1) as f64,
                photons_for_unit_variance: required_photons(&params, a.n_atoms, 1.0)?,
            };
            notes.push(format!("weight estimate {mean} (variance {var}, bound {})", summary.cramer_rao_variance));
            let mut t = Table::new(["rep", "raw_estimate", "estimate"]);
            for (i, r) in trials.iter().enumerate() {
                t.push(vec![i.to_string(), num(r.raw_estimate), num(r.estimate)]);
            }
            files.push(write_csv(out, "cavity_estimate.csv", "cavity", &meta, &t)?);
            files.push(write_json(out, "cavity_estimate.json", "cavity", &meta, &summary)?);
        }
        CavityMode::Resolvability => {
            let mut t = Table::new(["n", "gap", "resolvable", "min_coupling", "min_coupling_over_2sqrt_n"]);
            for e in 0..=12 {
                let n = 10f64.powf(e as f64 / 2.0).round() as u32;
                let g_min = min_resolvable_coupling(n, params.kappa)?;
                t.push(vec![
                    n.to_string(),
                    num(resonant_peak_gap(params.g, n)?),
                    resolvable(params.g, n, params.kappa)?.to_string(),
                    num(g_min),
                    num(g_min / (2.0 * params.kappa * (n as f64).sqrt())),
                ]);
            }
            files.push(write_csv(out, "cavity_resolvability.csv", "cavity", &meta, &t)?);
        }
    }
    Ok(Outcome { files, notes })
}
