//! End-to-end acceptance checks. Each test covers one criterion and writes a
//! single `criterion N ... PASS|FAIL` line to stdout, bypassing the test
//! harness's output capture so the summary is visible in every run.
//!
//! Golden files live in `tests/golden`; run with `PERFSCOPE_BLESS=1` to
//! regenerate them after an intentional output change.

use std::io::Write;
use std::path::PathBuf;

use num_rational::BigRational;
use perfscope::frontend::{propagation_pass, Analyzed, Marker};
use perfscope::interp::{run, RunOptions};
use perfscope::report::to_dot;
use perfscope::runtime::{CommKind, Context, ProfileResult, ReturnValue, WarningKind};
use perfscope::sweep::{check_against_exact, run_exact_series, Strategy as Execution};
use perfscope::term::{assignment, rational, Term};
use perfscope::values::Num;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

struct Criterion(&'static str);

impl Drop for Criterion {
    fn drop(&mut self) {
        let verdict = if std::thread::panicking() { "FAIL" } else { "PASS" };
        let line = format!("{} ... {verdict}\n", self.0);
        let _ = std::io::stdout().lock().write_all(line.as_bytes());
    }
}

fn dir(sub: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(sub)
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(dir("fixtures").join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn analyzed(name: &str) -> Analyzed {
    Analyzed::from_source(&fixture(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

fn profile(name: &str, inputs: &[(&str, i64, i64)]) -> ProfileResult {
    run(&analyzed(name), &RunOptions::profile(inputs)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn var(n: &str) -> Term {
    Term::var(n).unwrap()
}

fn golden(name: &str, actual: &str) {
    let path = dir("golden").join(name);
    if std::env::var_os("PERFSCOPE_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with PERFSCOPE_BLESS=1 to create)", path.display()));
    assert_eq!(actual, expected, "output differs from golden file {name}");
}

/// Structural check of the DOT subset we emit: `digraph ID { stmt* }` with
/// node statements `ID [label="..."];` and edges `ID -> ID;`.
fn check_dot(text: &str) -> Result<(usize, usize), String> {
    #[derive(Debug, PartialEq)]
    enum T {
        Id(String),
        Str,
        Sym(char),
        Arrow,
    }
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            c if c.is_whitespace() => {}
            '"' => {
                loop {
                    match chars.next() {
                        Some('\\') => {
                            chars.next().ok_or("dangling escape")?;
                        }
                        Some('"') => break,
                        Some('\n') => return Err("raw newline inside a string".into()),
                        Some(_) => {}
                        None => return Err("unterminated string".into()),
                    }
                }
                toks.push(T::Str);
            }
            '-' if chars.peek() == Some(&'>') => {
                chars.next();
                toks.push(T::Arrow);
            }
            '{' | '}' | '[' | ']' | '=' | ';' => toks.push(T::Sym(c)),
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut id = c.to_string();
                while let Some(&d) = chars.peek().filter(|d| d.is_ascii_alphanumeric() || **d == '_') {
                    id.push(d);
                    chars.next();
                }
                toks.push(T::Id(id));
            }
            c => return Err(format!("unexpected character {c:?}")),
        }
    }
    let mut it = toks.into_iter().peekable();
    let expect = |want: T, it: &mut std::iter::Peekable<std::vec::IntoIter<T>>| match it.next() {
        Some(t) if t == want => Ok(()),
        other => Err(format!("expected {want:?}, found {other:?}")),
    };
    let ident = |it: &mut std::iter::Peekable<std::vec::IntoIter<T>>| match it.next() {
        Some(T::Id(s)) => Ok(s),
        other => Err(format!("expected identifier, found {other:?}")),
    };
    if ident(&mut it)? != "digraph" {
        return Err("missing digraph keyword".into());
    }
    ident(&mut it)?;
    expect(T::Sym('{'), &mut it)?;
    let mut nodes = std::collections::BTreeSet::new();
    let mut edges = Vec::new();
    loop {
        if it.peek() == Some(&T::Sym('}')) {
            it.next();
            break;
        }
        let a = ident(&mut it)?;
        match it.next() {
            Some(T::Sym('[')) => {
                if ident(&mut it)? != "label" {
                    return Err("only label attributes are emitted".into());
                }
                expect(T::Sym('='), &mut it)?;
                expect(T::Str, &mut it)?;
                expect(T::Sym(']'), &mut it)?;
                if !nodes.insert(a.clone()) {
                    return Err(format!("node {a} declared twice"));
                }
            }
            Some(T::Arrow) => edges.push((a, ident(&mut it)?)),
            other => return Err(format!("bad statement after {a}: {other:?}")),
        }
        expect(T::Sym(';'), &mut it)?;
    }
    if it.next().is_some() {
        return Err("trailing tokens after graph".into());
    }
    for (a, b) in &edges {
        if !nodes.contains(a) || !nodes.contains(b) {
            return Err(format!("edge {a} -> {b} references an undeclared node"));
        }
    }
    Ok((nodes.len(), edges.len()))
}

#[test]
fn criterion_1_worked_example() {
    let _c = Criterion("criterion 1: n*m triple (32, n*m, 32768)");
    let a = Analyzed::from_source("int main(int n, int m) {\n  int nm = n * m;\n  return nm;\n}\n").unwrap();
    let r = run(&a, &RunOptions::profile(&[("n", 8, 256), ("m", 4, 128)])).unwrap();
    let Some(ReturnValue::Num(nm)) = r.return_value else {
        panic!("main returned {:?}", r.return_value)
    };
    assert_eq!(nm.small, 32);
    assert_eq!(nm.term.to_string(), "n*m");
    assert_eq!(nm.large, 32768);
}

#[test]
fn criterion_2_fig1() {
    let _c = Criterion("criterion 2: fig1 fixture end-to-end with exact oracle");
    let r = profile("fig1.pc", &[("n", 8, 256)]);
    assert_eq!(r.flops(), var("n"));
    assert_eq!(r.flops().big_o().to_string(), "O(n)");
    assert_eq!(r.peak_term, &Term::int(8) * &var("n"));
    assert_eq!(r.peak_large, 2048);
    assert_eq!(r.comm_calls(CommKind::Allreduce), Term::one());
    assert_eq!(r.comm_bytes(CommKind::Allreduce), Term::int(8));
    // the call only happens because the branch followed the large value
    let w: Vec<_> = r.warnings_of(WarningKind::BranchDivergence).collect();
    assert_eq!(w.len(), 1, "{w:?}");

    let a = analyzed("fig1.pc");
    let series = run_exact_series(&a, "n", &[8, 16, 32], &[], Execution::default()).unwrap();
    for p in series {
        let n = p.inputs[0].1;
        let predicted = r.flops().eval(&assignment([("n", n)])).unwrap();
        assert_eq!(predicted, BigRational::from_integer(p.flops.clone()), "n = {n}");
    }
}

/// Fixture, profile inputs, and configurations checked against exact runs.
type OracleCase = (&'static str, &'static [(&'static str, i64, i64)], &'static [&'static [(&'static str, i64)]]);

const ORACLE: &[OracleCase] = &[
    ("straight_line.pc", &[("n", 8, 256)], &[&[("n", 8)], &[("n", 100)], &[("n", 1000)]]),
    ("single_loop.pc", &[("n", 8, 256)], &[&[("n", 8)], &[("n", 37)], &[("n", 300)]]),
    (
        "two_loops.pc",
        &[("n", 8, 256), ("m", 5, 100)],
        &[&[("n", 8), ("m", 5)], &[("n", 50), ("m", 3)], &[("n", 1), ("m", 90)]],
    ),
    (
        "nest2.pc",
        &[("n", 4, 128), ("m", 3, 64)],
        &[&[("n", 4), ("m", 3)], &[("n", 20), ("m", 11)], &[("n", 7), ("m", 40)]],
    ),
    (
        "nest3.pc",
        &[("n", 3, 64), ("m", 4, 64), ("p", 5, 64)],
        &[
            &[("n", 3), ("m", 4), ("p", 5)],
            &[("n", 9), ("m", 2), ("p", 13)],
            &[("n", 12), ("m", 12), ("p", 12)],
        ],
    ),
    (
        "alloc_loop.pc",
        &[("n", 4, 100), ("m", 3, 50)],
        &[&[("n", 4), ("m", 3)], &[("n", 30), ("m", 8)], &[("n", 2), ("m", 60)]],
    ),
    (
        "comm_loop.pc",
        &[("n", 4, 100), ("m", 3, 50)],
        &[&[("n", 4), ("m", 3)], &[("n", 25), ("m", 17)], &[("n", 60), ("m", 1)]],
    ),
    (
        "call_in_loop.pc",
        &[("n", 4, 100), ("m", 3, 50)],
        &[&[("n", 4), ("m", 3)], &[("n", 19), ("m", 23)], &[("n", 3), ("m", 200)]],
    ),
    ("while_annotated.pc", &[("n", 8, 256)], &[&[("n", 8)], &[("n", 64)], &[("n", 500)]]),
    // the profile follows the large-value branch, so compare where exact runs take it too
    ("fig1.pc", &[("n", 8, 256)], &[&[("n", 129)], &[("n", 256)], &[("n", 1000)]]),
];

#[test]
fn criterion_3_oracle_equivalence() {
    let _c = Criterion("criterion 3: profiled terms equal exact counts on 10 fixtures");
    let mut failures = Vec::new();
    for (name, inputs, configs) in ORACLE {
        let a = analyzed(name);
        let r = run(&a, &RunOptions::profile(inputs)).unwrap();
        let configs: Vec<Vec<(String, i64)>> = configs
            .iter()
            .map(|c| c.iter().map(|(n, v)| (n.to_string(), *v)).collect())
            .collect();
        for m in check_against_exact(&a, &r, &configs, Execution::default()).unwrap() {
            failures.push(format!("{name}: {} predicted {} measured {} at {:?}", m.counter, m.predicted, m.measured, m.inputs));
        }
    }
    // the fixtures exercise more than trivially constant counters
    let r = profile("nest3.pc", &[("n", 3, 64), ("m", 4, 64), ("p", 5, 64)]);
    let nmp = &(&var("n") * &var("m")) * &var("p");
    assert_eq!(r.flops(), &Term::int(2) * &nmp);
    assert_eq!(r.flops().big_o(), nmp.big_o());
    let r = profile("comm_loop.pc", &[("n", 4, 100), ("m", 3, 50)]);
    assert_eq!(r.total_comm_calls(), &Term::int(3) * &var("n"));
    assert!(failures.is_empty(), "{failures:#?}");
}

fn body_runs(n: i64, large: i64) -> (i64, ProfileResult) {
    let r = profile("loop_protocol.pc", &[("n", n, large)]);
    let ran = match &r.return_value {
        Some(ReturnValue::Int(v)) => *v,
        Some(ReturnValue::Num(v)) => v.small,
        other => panic!("unexpected return {other:?}"),
    };
    (ran, r)
}

#[test]
fn criterion_4_loop_protocol() {
    let _c = Criterion("criterion 4: bodies run min(trip, 2) times; zero trips restore the snapshot");
    assert_eq!(body_runs(8, 256).0, 2);
    assert_eq!(body_runs(1, 256).0, 1);
    let (ran, r) = body_runs(0, 0);
    assert_eq!(ran, 0);
    assert_eq!(r.warnings_of(WarningKind::ZeroIterations).count(), 1);

    let mut ctx = Context::new(&[("n".into(), 0, 10)], 2).unwrap();
    ctx.charge_flops(5);
    let before = ctx.counter(&perfscope::runtime::CounterKey::Flops);
    let token = ctx.loop_enter(&Num::input("n", 0, 10).unwrap(), None).unwrap();
    assert!(!ctx.loop_iteration(token).unwrap());
    ctx.loop_exit(token).unwrap();
    assert_eq!(ctx.counter(&perfscope::runtime::CounterKey::Flops), before);
    assert_eq!(ctx.warnings().len(), 1);
    assert_eq!(ctx.warnings()[0].kind, WarningKind::ZeroIterations);

    let mut ctx = Context::new(&[], 2).unwrap();
    let token = ctx.loop_enter(&Num::literal(8), None).unwrap();
    let mut runs = 0;
    while ctx.loop_iteration(token).unwrap() {
        ctx.charge_flops(3);
        runs += 1;
    }
    ctx.loop_exit(token).unwrap();
    assert_eq!(runs, 2);
    assert_eq!(ctx.counter(&perfscope::runtime::CounterKey::Flops), Term::int(24));
}

fn small_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (-5i64..=5).prop_map(Term::int),
        prop_oneof![Just("n"), Just("m")].prop_map(var),
    ];
    let poly = leaf.prop_recursive(3, 12, 2, |inner| {
        (inner.clone(), inner, 0u8..3).prop_map(|(a, b, op)| match op {
            0 => &a + &b,
            1 => &a - &b,
            _ => &a * &b,
        })
    });
    (poly.clone(), poly, any::<bool>())
        .prop_map(|(a, b, q)| if q && !b.is_zero() { a.checked_div(&b).unwrap() } else { a })
}

#[test]
fn criterion_5_term_algebra() {
    let _c = Criterion("criterion 5: 1000 randomized term algebra cases");
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        ..Config::default()
    });
    let strategy = (small_term(), small_term(), small_term(), -15i64..=15, -15i64..=15, 1i64..=7);
    runner
        .run(&strategy, |(a, b, c, n, m, k)| {
            let s = assignment([("n", n), ("m", m)]);
            if let (Ok(x), Ok(y)) = (a.eval(&s), b.eval(&s)) {
                if let Ok(v) = (&a + &b).eval(&s) {
                    prop_assert_eq!(v, &x + &y);
                }
                if let Ok(v) = (&a * &b).eval(&s) {
                    prop_assert_eq!(v, &x * &y);
                }
                if let Ok(v) = (&a - &b).eval(&s) {
                    prop_assert_eq!(v, &x - &y);
                }
            }
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!((&Term::int(k) * &a).big_o(), a.big_o());
            prop_assert_eq!((&Term::int(-k) * &a).big_o(), a.big_o());
            Ok(())
        })
        .unwrap();
    // exact rational arithmetic, not floating point
    let third = Term::one().checked_div(&Term::int(3)).unwrap();
    assert_eq!((&(&third + &third) + &third).as_constant(), Some(rational(1)));
}

#[test]
fn criterion_6_trackedness() {
    let _c = Criterion("criterion 6: trackedness fixpoint on fig1, idempotent on all fixtures");
    let a = analyzed("fig1.pc");
    let m = &a.trackedness;
    let p = &a.program;
    assert_eq!(m.lookup(p, "execute", "n"), Some(Marker::TrackedInt));
    assert_eq!(m.lookup(p, "main", "n"), Some(Marker::TrackedInt));
    assert_eq!(m.lookup(p, "execute", "field"), Some(Marker::TrackedBlock));
    assert_eq!(m.lookup(p, "execute", "localSum"), Some(Marker::TrackedFloat));
    assert_eq!(m.lookup(p, "execute", "globalSum"), Some(Marker::TrackedFloat));
    assert_eq!(m.lookup(p, "execute", "i"), Some(Marker::Plain));

    let mut names: Vec<_> = std::fs::read_dir(dir("fixtures"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".pc"))
        .collect();
    names.sort();
    assert!(names.len() >= 10);
    for name in names {
        let a = analyzed(&name);
        let mut again = a.trackedness.clone();
        assert!(!propagation_pass(&a.program, &mut again), "{name}: fixpoint not stable");
        assert_eq!(again, a.trackedness, "{name}");
    }
}

#[test]
fn criterion_7_emit_golden() {
    let _c = Criterion("criterion 7: instrumented fig1 matches its golden file");
    let out = analyzed("fig1.pc").emit();
    golden("fig1.emit.txt", &out);
    let mut at = 0;
    for marker in ["ENTERFUNCTION", "DynamicMem", "perf_malloc", "Double", "LOOP(n)", "ITERATION", "EXITFUNCTION"] {
        let found = out[at..].find(marker).unwrap_or_else(|| panic!("{marker} missing after byte {at}:\n{out}"));
        at += found + marker.len();
    }
    assert!(out.contains("Num n"));
    assert_eq!(analyzed("fig1.pc").emit(), out);
}

type Inputs = &'static [(&'static str, i64, i64)];

const DOT_CASES: &[(&str, Inputs)] = &[
    ("fig1.pc", &[("n", 8, 256)]),
    ("two_level.pc", &[("n", 8, 256)]),
    ("call_in_loop.pc", &[("n", 4, 100), ("m", 3, 50)]),
    ("nest2.pc", &[("n", 4, 128), ("m", 3, 64)]),
    ("comm_loop.pc", &[("n", 4, 100), ("m", 3, 50)]),
    ("peak.pc", &[("n", 8, 256), ("m", 4, 128)]),
];

#[test]
fn criterion_8_dot_validity() {
    let _c = Criterion("criterion 8: DOT output parses and matches golden files byte-for-byte");
    for (name, inputs) in DOT_CASES {
        let r = profile(name, inputs);
        let dot = to_dot(&r);
        let (nodes, edges) = check_dot(&dot).unwrap_or_else(|e| panic!("{name}: {e}\n{dot}"));
        assert_eq!(nodes, r.nodes.len(), "{name}");
        assert_eq!(edges, r.nodes.len() - 1, "{name}");
        for _ in 0..3 {
            assert_eq!(to_dot(&profile(name, inputs)), dot, "{name}: not deterministic");
        }
        golden(&format!("{}.dot", name.trim_end_matches(".pc")), &dot);
    }
    let empty = Context::new(&[], 2).unwrap().finalize().unwrap();
    let dot = to_dot(&empty);
    assert_eq!(dot, "digraph calltree { n0 [label=\"<program>\\npeak: 0 B (large: 0)\"]; }\n");
    assert_eq!(check_dot(&dot), Ok((1, 0)));
    let fig = to_dot(&profile("fig1.pc", &[("n", 8, 256)]));
    assert!(fig.contains("calls: 1\\nflops: n = O(n)"));
    assert!(fig.contains("comm: 1 calls, 8 B"));
    assert!(check_dot("digraph g { n0 -> n1; }").is_err());
    assert!(check_dot("digraph g { n0 [label=\"x\"] }").is_err());
}

#[test]
fn criterion_9_peak_rule() {
    let _c = Criterion("criterion 9: peak n+m / 384 over two allocations, unchanged by frees");
    let r = profile("peak.pc", &[("n", 8, 256), ("m", 4, 128)]);
    assert_eq!(r.peak_term, &var("n") + &var("m"));
    assert_eq!(r.peak_large, 384);
    assert!(r.live_bytes().is_zero());

    let mut ctx = Context::new(&[("n".into(), 8, 256), ("m".into(), 4, 128)], 2).unwrap();
    let a = ctx.mem_alloc(&Num::input("n", 8, 256).unwrap()).unwrap();
    let b = ctx.mem_alloc(&Num::input("m", 4, 128).unwrap()).unwrap();
    let peak = (ctx.peak().0.clone(), ctx.peak().1);
    assert_eq!(peak.1, 384);
    ctx.mem_free(a).unwrap();
    ctx.mem_free(b).unwrap();
    assert_eq!((ctx.peak().0.clone(), ctx.peak().1), peak);
    assert_eq!(ctx.live_large(), 0);
}
