//! Batches of independent runs, used to check symbolic counters against
//! exact executions over a range of input sizes.
//!
//! Each run owns its own [`Context`](crate::runtime::Context), so runs are
//! embarrassingly parallel. With the `parallel` feature they are spread over
//! the rayon pool; without it, or with [`Strategy::Sequential`], they run in
//! order on the calling thread. Both strategies return results in input order.

use num_bigint::BigInt;

use crate::frontend::Analyzed;
use crate::interp::{run, ExecError, Mode, RunOptions};
use crate::runtime::{CommKind, ProfileResult};
use crate::term::{assignment, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Sequential,
    #[default]
    Parallel,
}

impl Strategy {
    /// Whether this build can honour [`Strategy::Parallel`].
    pub const PARALLEL_AVAILABLE: bool = cfg!(feature = "parallel");
}

/// Maps `f` over `items` with the chosen strategy, preserving order.
pub fn map_runs<T, R, F>(items: &[T], strategy: Strategy, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match strategy {
        #[cfg(feature = "parallel")]
        Strategy::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Exact counters of one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPoint {
    pub inputs: Vec<(String, i64)>,
    pub flops: BigInt,
    pub comm_calls: BigInt,
    pub comm_bytes: BigInt,
    pub alloc_bytes: BigInt,
    pub peak_bytes: i64,
}

fn constant(t: &Term) -> BigInt {
    t.as_integer().expect("exact-mode counters are integer constants")
}

impl ExactPoint {
    fn from_result(inputs: Vec<(String, i64)>, r: &ProfileResult) -> ExactPoint {
        ExactPoint {
            inputs,
            flops: constant(&r.flops()),
            comm_calls: constant(&r.total_comm_calls()),
            comm_bytes: constant(&r.total_comm_bytes()),
            alloc_bytes: constant(&r.alloc_bytes_total()),
            peak_bytes: r.peak_large,
        }
    }
}

/// Runs the program exactly once per configuration.
pub fn run_exact_many(
    analyzed: &Analyzed,
    configs: &[Vec<(String, i64)>],
    strategy: Strategy,
) -> Result<Vec<ExactPoint>, ExecError> {
    map_runs(configs, strategy, |cfg| {
        let opts = RunOptions {
            mode: Mode::Exact,
            inputs: cfg.iter().map(|(n, v)| (n.clone(), *v, *v)).collect(),
            ..RunOptions::new(Mode::Exact, &[])
        };
        run(analyzed, &opts).map(|r| ExactPoint::from_result(cfg.clone(), &r))
    })
    .into_iter()
    .collect()
}

/// Exact runs varying `input` over `sizes` with the other inputs held at `fixed`.
pub fn run_exact_series(
    analyzed: &Analyzed,
    input: &str,
    sizes: &[i64],
    fixed: &[(&str, i64)],
    strategy: Strategy,
) -> Result<Vec<ExactPoint>, ExecError> {
    let configs: Vec<Vec<(String, i64)>> = sizes
        .iter()
        .map(|&s| {
            let mut cfg: Vec<(String, i64)> = fixed.iter().map(|&(n, v)| (n.to_string(), v)).collect();
            cfg.push((input.to_string(), s));
            cfg
        })
        .collect();
    run_exact_many(analyzed, &configs, strategy)
}

/// A counter whose symbolic value disagrees with an exact run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub inputs: Vec<(String, i64)>,
    pub counter: &'static str,
    pub predicted: String,
    pub measured: BigInt,
}

/// Evaluates the profiled terms at each configuration and compares them
/// with exact execution. An empty vector means full agreement.
pub fn check_against_exact(
    analyzed: &Analyzed,
    profile: &ProfileResult,
    configs: &[Vec<(String, i64)>],
    strategy: Strategy,
) -> Result<Vec<Mismatch>, ExecError> {
    let points = run_exact_many(analyzed, configs, strategy)?;
    let counters: [(&'static str, Term); 4] = [
        ("flops", profile.flops()),
        ("comm calls", profile.total_comm_calls()),
        ("comm bytes", profile.total_comm_bytes()),
        ("alloc bytes", profile.alloc_bytes_total()),
    ];
    let mut mismatches = Vec::new();
    for p in points {
        let pairs: Vec<(&str, i64)> = p.inputs.iter().map(|(n, v)| (n.as_str(), *v)).collect();
        let sigma = assignment(pairs);
        let measured = [&p.flops, &p.comm_calls, &p.comm_bytes, &p.alloc_bytes];
        for ((name, term), exact) in counters.iter().zip(measured) {
            let ok = term
                .eval(&sigma)
                .map(|v| v == num_rational::BigRational::from_integer(exact.clone()))
                .unwrap_or(false);
            if !ok {
                mismatches.push(Mismatch {
                    inputs: p.inputs.clone(),
                    counter: name,
                    predicted: term.to_string(),
                    measured: exact.clone(),
                });
            }
        }
    }
    Ok(mismatches)
}

/// Per-kind communication totals, handy for reports on exact series.
pub fn comm_breakdown(r: &ProfileResult) -> Vec<(&'static str, Term, Term)> {
    CommKind::ALL
        .iter()
        .map(|&k| (k.name(), r.comm_calls(k), r.comm_bytes(k)))
        .collect()
}
