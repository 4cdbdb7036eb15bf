use std::fs;
use std::path::PathBuf;

use aoi_core::analytic::system_aoi;
use aoi_core::dynamic::{expected_aoi_monte_carlo, Scheme};
use aoi_core::seeding::derive_seed;
use aoi_core::selector::{
    alpha_threshold, alpha_threshold_limits, beta_threshold, expected_aoi_broadcast, expected_aoi_unicast,
};
use aoi_core::sim::{simulate, trace_replication, SimRun};
use aoi_core::{AoiError, StrategyKind};
use rayon::prelude::*;

use crate::config::{ExperimentSpec, Mode, SweepParam};
use crate::table::{write_csv, Row};

/// Fixed per-strategy stream ids, so seeds do not depend on list order.
const STRATEGY_IDS: [StrategyKind; 7] = [
    StrategyKind::Brnp,
    StrategyKind::Brps,
    StrategyKind::Dnp,
    StrategyKind::Dpb,
    StrategyKind::Dps,
    StrategyKind::DnpZeroWait,
    StrategyKind::DpbZeroWait,
];

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory receiving one event trace per simulated row.
    pub trace_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub rows: Vec<Row>,
    pub with_pass: bool,
}

impl Report {
    /// Some row carries an `error:` flag.
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.failed)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        write_csv(out, &self.rows, self.with_pass)
    }
}

type Point = Option<(SweepParam, f64)>;

fn blank_row(point: Point, label: &str) -> Row {
    Row {
        param: point.map_or("none", |(p, _)| p.label()).to_string(),
        value: point.map(|(_, v)| v),
        strategy: label.to_string(),
        ..Row::default()
    }
}

/// Evaluates every grid point of `spec`. Rows come back in grid order, then
/// strategy order, whatever order the work finishes in.
pub fn run(spec: &ExperimentSpec, opts: &RunOptions) -> Report {
    let grid = spec.grid();
    let mut rows: Vec<Row> = match spec.mode {
        Mode::Analytic | Mode::Simulate | Mode::Compare => {
            let jobs: Vec<(usize, Point, StrategyKind)> = grid
                .iter()
                .enumerate()
                .flat_map(|(i, &p)| spec.strategies.iter().map(move |&s| (i, p, s)))
                .collect();
            jobs.into_par_iter()
                .map(|(i, p, s)| system_row(spec, opts, i, p, s))
                .collect()
        }
        Mode::AlphaThreshold => grid.par_iter().flat_map_iter(|&p| alpha_rows(spec, p)).collect(),
        Mode::BetaThreshold => grid.par_iter().flat_map_iter(|&p| beta_rows(spec, p)).collect(),
        Mode::Dynamic => {
            let jobs: Vec<(usize, Point, Scheme)> = grid
                .iter()
                .enumerate()
                .flat_map(|(i, &p)| [Scheme::Broadcast, Scheme::Unicast].map(|s| (i, p, s)))
                .collect();
            jobs.into_par_iter()
                .map(|(i, p, s)| dynamic_row(spec, i, p, s))
                .collect()
        }
    };
    for r in &mut rows {
        r.sanitize();
    }
    Report {
        rows,
        with_pass: spec.mode == Mode::Compare,
    }
}

fn strategy_id(s: StrategyKind) -> u64 {
    STRATEGY_IDS.iter().position(|&k| k == s).expect("every strategy has an id") as u64
}

fn system_row(spec: &ExperimentSpec, opts: &RunOptions, index: usize, point: Point, strategy: StrategyKind) -> Row {
    let mut row = blank_row(point, strategy.label());
    let cfg = match spec.system_at(point) {
        Ok(c) => c,
        Err(e) => {
            row.fail(e.message);
            return row;
        }
    };
    match cfg.error_rates(strategy) {
        Ok(rates) => {
            row.block_error_rate = rates.iter().map(|r| r.epsilon).reduce(f64::max);
            if rates.iter().any(|r| r.short_block) {
                row.flag("short_block");
            }
        }
        Err(e) => {
            row.fail(e);
            return row;
        }
    }
    match system_aoi(&cfg, strategy) {
        Ok(v) => row.analytic = Some(v),
        Err(e) => {
            if matches!(e, AoiError::DivergentAoi { .. }) {
                row.flag("divergent");
            }
            row.fail(e);
        }
    }
    if spec.mode == Mode::Analytic {
        return row;
    }
    if strategy.is_zero_wait() {
        row.fail(AoiError::UnsupportedStrategy(strategy));
        return row;
    }
    let run = SimRun::new(cfg, strategy)
        .horizon(spec.sim.horizon)
        .warmup_fraction(spec.sim.warmup_fraction)
        .replications(spec.sim.replications)
        .seed(derive_seed(spec.seed, index as u64, strategy_id(strategy)));
    match simulate(&run) {
        Ok(est) => {
            row.simulated = Some(est.mean);
            row.ci_half_width = Some(est.ci_half_width);
            if spec.mode == Mode::Compare {
                row.pass = row.analytic.map(|a| est.interval().contains(a));
            }
        }
        Err(e) => row.fail(e),
    }
    if let Some(dir) = &opts.trace_dir {
        let path = dir.join(format!("{index:03}_{}.tsv", strategy.label()));
        let written = trace_replication(&run, 0)
            .map_err(|e| e.to_string())
            .and_then(|t| {
                let mut buf = Vec::new();
                t.write_lines(&mut buf).map_err(|e| e.to_string())?;
                fs::write(&path, buf).map_err(|e| format!("{}: {e}", path.display()))
            });
        if let Err(e) = written {
            row.fail(format!("trace: {e}"));
        }
    }
    row
}

fn alpha_rows(spec: &ExperimentSpec, point: Point) -> Vec<Row> {
    let mut th_row = blank_row(point, "alpha_th");
    let sc = match spec.remote_at(point) {
        Ok(sc) => sc,
        Err(e) => {
            th_row.fail(e.message);
            return vec![th_row];
        }
    };
    match alpha_threshold(&sc) {
        Ok(th) => {
            th_row.analytic = Some(th.alpha);
            if th.broadcast_always {
                th_row.flag("broadcast_always");
            }
            if th.multiple_roots() {
                let roots: Vec<String> = th.roots.iter().map(|r| r.to_string()).collect();
                th_row.flag(format!("multiple_roots: {}", roots.join(" ")));
            }
        }
        Err(AoiError::NoThreshold(msg)) => th_row.flag(format!("no_threshold: {msg}")),
        Err(e) => th_row.fail(e),
    }
    let mut zw = blank_row(point, "alpha_zero_waiting");
    let mut sp = blank_row(point, "alpha_sporadic");
    match alpha_threshold_limits(&sc) {
        Ok(lim) => {
            zw.analytic = Some(lim.zero_waiting);
            sp.analytic = Some(lim.sporadic);
            if lim.zero_waiting_saturates() {
                zw.flag("saturates");
            }
            if lim.sporadic_saturates() {
                sp.flag("saturates");
            }
        }
        Err(e) => {
            zw.fail(&e);
            sp.fail(e);
        }
    }
    vec![th_row, zw, sp]
}

fn beta_rows(spec: &ExperimentSpec, point: Point) -> Vec<Row> {
    let mut th_row = blank_row(point, "beta_th");
    let mut approx = blank_row(point, "beta_th_large_population");
    let cfg = match spec.dynamic_at(point) {
        Ok(c) => c,
        Err(e) => {
            th_row.fail(e.message);
            return vec![th_row];
        }
    };
    match beta_threshold(&cfg) {
        Ok(th) => {
            th_row.analytic = Some(th.value);
            approx.analytic = Some(th.large_population);
            if th.unicast_always() {
                th_row.flag("unicast_always");
            }
        }
        Err(AoiError::NoThreshold(msg)) => th_row.flag(format!("no_threshold: {msg}")),
        Err(e) => th_row.fail(e),
    }
    vec![th_row, approx]
}

fn dynamic_row(spec: &ExperimentSpec, index: usize, point: Point, scheme: Scheme) -> Row {
    let label = match scheme {
        Scheme::Broadcast => "broadcast",
        Scheme::Unicast => "unicast",
    };
    let mut row = blank_row(point, label);
    let cfg = match spec.dynamic_at(point) {
        Ok(c) => c,
        Err(e) => {
            row.fail(e.message);
            return row;
        }
    };
    let closed = match scheme {
        Scheme::Broadcast => expected_aoi_broadcast(&cfg),
        Scheme::Unicast => expected_aoi_unicast(&cfg),
    };
    match closed {
        Ok(v) => row.analytic = Some(v),
        Err(e) => row.fail(e),
    }
    let realizations = spec.dynamic.as_ref().map_or(0, |d| d.realizations);
    let seed = derive_seed(spec.seed, index as u64, scheme as u64);
    match expected_aoi_monte_carlo(&cfg, scheme, realizations, seed) {
        Ok(est) => {
            row.simulated = Some(est.mean);
            row.ci_half_width = Some(est.ci_half_width);
        }
        Err(e) => row.fail(e),
    }
    row
}
