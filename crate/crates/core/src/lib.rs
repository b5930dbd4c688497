//! Symbolic complexity profiling for PerfC, a small C-like language.
//!
//! A program runs once at a small input size while every value derived from
//! an input carries a symbolic term and a value at a large reference size.
//! Loops execute at most a couple of iterations and are extrapolated, so one
//! cheap run yields FLOP counts, peak memory and communication volume as
//! closed-form functions of the inputs.
//!
//! ```
//! use perfscope::{frontend::Analyzed, interp::{run, RunOptions}};
//! let a = Analyzed::from_source(
//!     "int main(int n) { double s = 0; for (int i = 0; i < n; i++) s = s + 1.0; return 0; }",
//! ).unwrap();
//! let r = run(&a, &RunOptions::profile(&[("n", 8, 1024)])).unwrap();
//! assert_eq!(r.flops().to_string(), "n");
//! ```

pub mod frontend;
pub mod interp;
pub mod report;
pub mod runtime;
pub mod sweep;
pub mod term;
pub mod values;

pub use frontend::{Analyzed, Diagnostic};
pub use interp::{run, ExecError, Mode, RunOptions};
pub use report::{to_dot, to_text};
pub use runtime::ProfileResult;
pub use sweep::Strategy;
pub use term::Term;
