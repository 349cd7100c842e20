use std::time::Instant;

use swipt_core::{Problem, Solution, SolverConfig};

use crate::args::{oop_problem, rdp_problem, SweepArgs, SweepKind};
use crate::csv::{self, Row};
use crate::{Exit, Failure};

use super::{emit, solve::solve};

fn row(value: f64, res: &Result<Solution, Failure>, runtime: Option<f64>) -> Row {
    match res {
        Ok(s) => Row {
            swept_value: value,
            mi_nats: Some(s.mi_nats),
            m: s.distribution.len(),
            multipliers: Some((s.kkt.multipliers.power, s.kkt.multipliers.floor)),
            kkt_passed: s.kkt.passed,
            max_grid_violation: Some(s.kkt.max_grid_violation),
            runtime_s: runtime,
            note: (!s.kkt.passed).then(|| "certificate not verified".to_string()),
        },
        Err(f) => Row {
            swept_value: value,
            mi_nats: None,
            m: 0,
            multipliers: None,
            kkt_passed: false,
            max_grid_violation: None,
            runtime_s: runtime,
            note: Some(f.to_string()),
        },
    }
}

/// Solves every point of a sweep. Sequential sweeps warm-start each point
/// from the last verified solution; parallel sweeps solve points
/// independently with seed `seed + index`.
pub fn sweep<F>(make: F, values: &[f64], config: &SolverConfig, parallel: bool, timing: bool) -> Vec<(Row, Option<Solution>)>
where
    F: Fn(f64) -> swipt_core::Result<Problem> + Sync,
{
    let point = |k: usize, value: f64, warm: Option<&Solution>| {
        let start = Instant::now();
        let cfg = if parallel { SolverConfig { seed: config.seed.wrapping_add(k as u64), ..config.clone() } } else { config.clone() };
        let res = make(value).map_err(Failure::from).and_then(|p| solve(&p, &cfg, warm.map(|s| &s.distribution)));
        let t = timing.then(|| start.elapsed().as_secs_f64());
        (row(value, &res, t), res.ok())
    };
    if !parallel {
        let mut out: Vec<(Row, Option<Solution>)> = Vec::with_capacity(values.len());
        let mut warm: Option<Solution> = None;
        for (k, &v) in values.iter().enumerate() {
            let (r, s) = point(k, v, warm.as_ref());
            if let Some(sol) = s.as_ref().filter(|s| s.kkt.passed) {
                warm = Some(sol.clone());
            }
            out.push((r, s));
        }
        return out;
    }
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(values.len().max(1));
    let mut slots: Vec<Option<(Row, Option<Solution>)>> = vec![None; values.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let point = &point;
                scope.spawn(move || {
                    (t..values.len())
                        .step_by(threads)
                        .map(|k| (k, point(k, values[k], None)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (k, r) in h.join().expect("sweep worker panicked") {
                slots[k] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every point solved")).collect()
}

pub fn run(args: SweepArgs) -> Result<Exit, Failure> {
    let (results, common) = match args.kind {
        SweepKind::Rdp { rdp, range, common } => {
            let values = range.values()?;
            (sweep(|v| rdp_problem(&rdp, v), &values, &common.config(), range.parallel, common.timing), common)
        }
        SweepKind::Oop { oop, range, common } => {
            let values = range.values()?;
            (sweep(|v| oop_problem(&oop, v), &values, &common.config(), range.parallel, common.timing), common)
        }
    };
    let rows: Vec<Row> = results.into_iter().map(|(r, _)| r).collect();
    for r in rows.iter().filter(|r| !r.kkt_passed) {
        eprintln!(
            "warning: swept value {} has kkt_passed=false: {}",
            csv::num(r.swept_value),
            r.note.as_deref().unwrap_or("certificate not verified")
        );
    }
    emit(common.out.as_deref(), &csv::render(&rows))?;
    Ok(if rows.iter().all(|r| r.kkt_passed) { Exit::Ok } else { Exit::Unverified })
}
