//! Figure-reproduction jobs: deterministic CSV tables behind each panel.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;

use dicke_core::cavity::CavityParams;
use dicke_core::chain::{build_chain_scoped, expected_steps, mt_sweep, naive_expected_steps, Scope};
use dicke_core::geometry::{discretized_pdf, geometric_transition_pdf, ring_model_tv};
use dicke_core::{
    approx_angle_mt0, geometric_angle, optimal_angles, outcome_distribution, overlap_probability, AnglePolicy,
    ProtocolConfig, ResetPolicy, SpinSpec,
};

use crate::commands::spectrum_table;
use crate::error::{CliError, CliResult};
use crate::output::{num, write_csv, OutputSettings, Table};

/// Row sums and the mirror symmetry of the no-reset matrix are checked to this.
const MATRIX_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FigureId {
    /// Optimal versus geometric angles.
    Fig2a,
    /// No-reset transition matrix and its slice into the target.
    Fig2b,
    /// Expected steps versus j for three algorithms.
    Fig2c,
    /// Expected steps versus target m_t.
    Fig2d,
    /// Ring-model pdf versus exact transition rows.
    PdfComparison,
    /// Side-of-fringe transmission for every Hamming weight.
    CavitySpectrum,
}

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
            FigureId::Fig2c => "fig2c",
            FigureId::Fig2d => "fig2d",
            FigureId::PdfComparison => "pdf-comparison",
            FigureId::CavitySpectrum => "cavity-spectrum",
        }
    }

    /// Spin sizes (`two_j`, or the qubit count for the cavity) used when none
    /// are given.
    pub fn default_two_js(self) -> Vec<u32> {
        match self {
            FigureId::Fig2a | FigureId::Fig2b => vec![100],
            // j = 16, 32, ..., 4096
            FigureId::Fig2c => (4..=12).map(|k| 2u32 << k).collect(),
            FigureId::Fig2d => vec![40, 100, 200],
            FigureId::PdfComparison => vec![200, 800, 3200],
            FigureId::CavitySpectrum => vec![8],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FigureJob {
    pub figure_id: FigureId,
    pub two_js: Vec<u32>,
    /// Output directory.
    #[serde(skip)]
    pub output: PathBuf,
}

impl FigureJob {
    pub fn new(figure_id: FigureId, two_js: Option<Vec<u32>>, output: impl Into<PathBuf>) -> CliResult<Self> {
        let two_js = two_js.unwrap_or_else(|| figure_id.default_two_js());
        if two_js.is_empty() {
            return Err(CliError::Usage(format!("{}: empty spin list", figure_id.name())));
        }
        let needs_integer_j = matches!(figure_id, FigureId::Fig2a | FigureId::Fig2b | FigureId::Fig2c | FigureId::PdfComparison);
        if needs_integer_j {
            if let Some(bad) = two_js.iter().find(|&&t| t % 2 != 0 || t == 0) {
                return Err(CliError::Usage(format!("{} targets m_t = 0 and needs even two_j > 0, got {bad}", figure_id.name())));
            }
        }
        Ok(FigureJob { figure_id, two_js, output: output.into() })
    }
}

/// Runs a job and returns the files written.
pub fn run_figure_job(job: &FigureJob, timestamp: bool) -> CliResult<Vec<PathBuf>> {
    let settings = OutputSettings::new(&job.output, timestamp);
    let config = serde_json::to_value(job)?;
    let name = job.figure_id.name();
    let mut written = Vec::new();
    let mut emit = |file: String, table: Table| -> CliResult<()> {
        written.push(write_csv(&settings, &file, name, &config, &table)?);
        Ok(())
    };
    match job.figure_id {
        FigureId::Fig2a => {
            for &tj in &job.two_js {
                emit(format!("fig2a_j{}.csv", tj / 2), fig2a(tj)?)?;
            }
        }
        FigureId::Fig2b => {
            for &tj in &job.two_js {
                let (matrix, slice) = fig2b(tj)?;
                emit(format!("fig2b_j{}.csv", tj / 2), matrix)?;
                emit(format!("fig2b_j{}_slice.csv", tj / 2), slice)?;
            }
        }
        FigureId::Fig2c => emit("fig2c.csv".into(), fig2c(&job.two_js)?)?,
        FigureId::Fig2d => emit("fig2d.csv".into(), fig2d(&job.two_js)?)?,
        FigureId::PdfComparison => {
            let (rows, tv) = pdf_comparison(&job.two_js)?;
            emit("pdf_comparison.csv".into(), rows)?;
            emit("pdf_comparison_tv.csv".into(), tv)?;
        }
        FigureId::CavitySpectrum => {
            for &n in &job.two_js {
                emit(format!("cavity_spectrum_n{n}.csv"), cavity_spectrum(n)?)?;
            }
        }
    }
    Ok(written)
}

fn fig2a(two_j: u32) -> CliResult<Table> {
    let ms: Vec<i32> = (-(two_j as i32)..=two_j as i32).step_by(2).filter(|&m| m != 0).collect();
    let opt = optimal_angles(two_j, 0, &ms)?;
    let mut t = Table::new(["two_m", "theta_geometric", "p_geometric", "theta_optimal", "p_optimal", "optimal_fallback"]);
    for (&m, o) in ms.iter().zip(&opt) {
        let g = approx_angle_mt0(two_j, m)?;
        t.push(vec![
            m.to_string(),
            num(g.radians()),
            num(overlap_probability(two_j, 0, m, g)?),
            num(o.angle.radians()),
            num(o.overlap_probability),
            o.fallback.to_string(),
        ]);
    }
    Ok(t)
}

fn fig2b(two_j: u32) -> CliResult<(Table, Table)> {
    let cfg = ProtocolConfig::new(two_j, 0)?.with_angle_policy(AnglePolicy::ApproxMt0)?;
    let chain = build_chain_scoped(cfg, Scope::Full)?;
    let dev = chain.max_row_sum_deviation();
    if dev > MATRIX_TOL {
        return Err(CliError::Invariant(format!("fig2b row sums deviate from 1 by {dev}")));
    }
    let n = chain.states.len();
    for a in 0..n {
        for b in 0..n {
            let mirror = chain.matrix[(n - 1 - a, n - 1 - b)];
            if (chain.matrix[(a, b)] - mirror).abs() > MATRIX_TOL {
                return Err(CliError::Invariant(format!("fig2b matrix not mirror symmetric at ({a}, {b})")));
            }
        }
    }
    let mut matrix = Table::new(std::iter::once("two_m".to_string()).chain(chain.states.iter().map(|m| format!("to_{m}"))));
    let mut slice = Table::new(["two_m", "p_to_target"]);
    for (a, &m) in chain.states.iter().enumerate() {
        matrix.push(std::iter::once(m.to_string()).chain((0..n).map(|b| num(chain.matrix[(a, b)]))).collect());
        slice.push(vec![m.to_string(), num(chain.matrix[(a, chain.absorbing_index)])]);
    }
    Ok((matrix, slice))
}

/// Expected steps from `m = j` under a policy with the square-root reset.
pub fn expected_steps_mt0(two_j: u32, policy: AnglePolicy) -> CliResult<f64> {
    let cfg = ProtocolConfig::new(two_j, 0)?.with_angle_policy(policy)?.with_reset_policy(ResetPolicy::SqrtJ);
    Ok(expected_steps(&build_chain_scoped(cfg, Scope::Reachable)?)?.start_state_value)
}

fn fig2c(two_js: &[u32]) -> CliResult<Table> {
    let mut t = Table::new(["j", "geometric", "optimal", "naive"]);
    for &tj in two_js {
        let geo = expected_steps_mt0(tj, AnglePolicy::ApproxMt0)?;
        let opt = expected_steps_mt0(tj, AnglePolicy::NumericOptimal)?;
        let naive = naive_expected_steps(tj)?;
        for v in [geo, opt, naive] {
            if !(v.is_finite() && v >= 1.0) {
                return Err(CliError::Invariant(format!("fig2c expected steps {v} at two_j = {tj}")));
            }
        }
        t.push(vec![(tj / 2).to_string(), num(geo), num(opt), num(naive)]);
    }
    Ok(t)
}

fn fig2d(two_js: &[u32]) -> CliResult<Table> {
    let mut t = Table::new(["two_j", "two_mt", "expected_steps"]);
    for &tj in two_js {
        for (mt, steps) in mt_sweep(tj, AnglePolicy::Geometric, ResetPolicy::None)? {
            t.push(vec![tj.to_string(), mt.to_string(), num(steps)]);
        }
    }
    Ok(t)
}

/// `floor(sqrt(j) / 2)` as `two_m`; the ring-model comparison point.
pub fn pdf_comparison_two_m(two_j: u32) -> i32 {
    2 * ((two_j as f64 / 2.0).sqrt() / 2.0).floor().max(1.0) as i32
}

fn pdf_comparison(two_js: &[u32]) -> CliResult<(Table, Table)> {
    let mut rows = Table::new(["two_j", "two_m", "two_m_prime", "exact", "ring_binned", "ring_density"]);
    let mut tv = Table::new(["two_j", "two_m", "total_variation"]);
    for &tj in two_js {
        let tm = pdf_comparison_two_m(tj);
        let exact = outcome_distribution(SpinSpec::new(tj, tm)?, geometric_angle(tj, 0, tm)?)?;
        let binned = discretized_pdf(tj, tm, 0)?;
        for (i, (e, b)) in exact.iter().zip(&binned).enumerate() {
            let tmp = 2 * i as i32 - tj as i32;
            // skip the far tails where both distributions vanish
            if *b == 0.0 && *e < 1e-12 {
                continue;
            }
            let density = geometric_transition_pdf(tj, tm, 0, 0.5 * tmp as f64)?;
            rows.push(vec![tj.to_string(), tm.to_string(), tmp.to_string(), num(*e), num(*b), num(density)]);
        }
        tv.push(vec![tj.to_string(), tm.to_string(), num(ring_model_tv(tj, tm, 0)?)]);
    }
    Ok((rows, tv))
}

fn cavity_spectrum(n_atoms: u32) -> CliResult<Table> {
    // kappa = 1 and chi n = kappa / 5, the edge of the dispersive regime
    let params = CavityParams::new(1.0, 1.0 / (5.0 * n_atoms.max(1) as f64))?;
    Ok(spectrum_table(&params, n_atoms))
}
