use std::hash::Hasher;
use std::time::Duration;

use super::*;
use crate::cfront::parse_function;
use crate::cfront::types::TypeDesc;
use crate::code_db::{DatabaseManifest, FunctionEntry};
use crate::profiler::{admit_function, profile_function, validate_and_profile, InputValue, InputVector, ProfilerConfig};
use crate::toolchain::{compile_c, default_compiler, run_limited, CompilerSpec, Limits};
use splicefuzz_testkit::fixtures;

fn cc() -> CompilerSpec {
    default_compiler().expect("a C compiler")
}

fn ints(vs: &[i128]) -> InputVector {
    InputVector(
        vs.iter()
            .map(|v| InputValue::Scalar { ty: TypeDesc::int(IntType::I32), value: v.to_string(), bits: None })
            .collect(),
    )
}

fn profiled(src: &str, input: &[i128]) -> FunctionEntry {
    let unit = parse_function(src).unwrap();
    let p = profile_function(&unit, &ints(input), &cc(), &Limits::run_default()).unwrap();
    admit_function("test", &unit, vec![p]).unwrap()
}

fn validated(src: &str) -> FunctionEntry {
    let unit = parse_function(src).unwrap();
    let v = validate_and_profile(&unit, &ProfilerConfig::new(cc())).unwrap();
    admit_function("test", &unit, v.profiles).unwrap_or_else(|r| panic!("{src}: {}", r.reason))
}

fn database(entries: Vec<FunctionEntry>) -> Database {
    let manifest =
        DatabaseManifest { version: 1, entry_count: entries.len(), created_at: 0, builder_config_digest: String::new() };
    Database::from_entries(manifest, entries)
}

/// FNV-1a 64 over the little-endian words, via the `fnv` crate.
fn fnv_oracle(words: &[u64]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    for w in words {
        h.write(&w.to_le_bytes());
    }
    h.finish()
}

fn run_checksum(text: &str, opt: &str) -> Option<u64> {
    let dir = tempfile::tempdir().unwrap();
    let (out, bin) = compile_c(&cc(), text, dir.path(), "p", &[opt, "-std=gnu11", "-w"], &Limits::compile_default()).unwrap();
    assert!(out.exit.success(), "compile failed: {}\n{text}", out.stderr_str());
    let run = run_limited(&mut std::process::Command::new(bin), &Limits::run_default()).unwrap();
    driver::parse_checksum(&run.stdout_str())
}

fn var(name: &str, value: i128) -> Var {
    Var { name: name.into(), ty: IntType::I32, value }
}

fn pick_label(labels: &[String], want: &str) -> Option<i128> {
    labels.iter().position(|l| l == want || l.ends_with(&format!("_{want}"))).map(|i| i as i128)
}

#[test]
fn exact_variable_is_preferred() {
    let mut ch = RngChooser::new(1);
    let e = synthesize_expression(&[var("d", 1), var("e", 2)], 1, IntType::I32, &mut ch).unwrap();
    assert_eq!(e.text, "d");
}

#[test]
fn forced_variable_and_operator() {
    let mut ch = ScriptedChooser::new(1, |a: Ask<'_>| match a {
        Ask::Pick(Choice::Variable, l) => pick_label(l, "e"),
        Ask::Pick(Choice::Operator, l) => pick_label(l, "-"),
        _ => None,
    });
    let e = synthesize_expression(&[var("d", 1), var("e", 2)], 0, IntType::I32, &mut ch).unwrap();
    assert_eq!(e.text, "e - 2");
    assert_eq!(e.value, 0);
}

#[test]
fn literal_when_no_variable_fits() {
    let mut ch = RngChooser::new(1);
    let e = synthesize_expression(&[], 7, IntType::I32, &mut ch).unwrap();
    assert_eq!(e.text, "7");
    let u = Var { name: "u".into(), ty: IntType::U32, value: 3 };
    let e = synthesize_expression(&[u], -5, IntType::I32, &mut ch).unwrap();
    assert_eq!(e.text, "(-5)");
}

#[test]
fn unrepresentable_target_is_an_error() {
    let mut ch = RngChooser::new(1);
    let err = synthesize_expression(&[], 300, IntType::I8, &mut ch).unwrap_err();
    assert_eq!(err, RewriteError::Unrepresentable { value: 300, ty: IntType::I8 });
}

#[test]
fn narrow_massage_without_fitting_operator_is_empty() {
    // no `r + k` or `r - k` reaches 127 from -100 with k an int8_t
    assert!(massage(-100, 127, IntType::I8, &['+', '-']).is_empty());
    assert_eq!(massage(2, 1, IntType::I32, &['+', '-', '^']), vec![('+', -1), ('-', 1), ('^', 3)]);
}

fn site(text: &str, ty: IntType, values: Vec<i128>, vars: Vec<Var>) -> MatchedExpr {
    MatchedExpr { owner: "f".into(), text: text.into(), line: 1, start: 0, end: text.len(), ty, hits: values.len() as u64, values, vars, write_at: None }
}

#[test]
fn unstable_call_rewrite_adds_zero() {
    let callee = CallTarget { name: "k", params: vec![], inputs: vec![], ret: IntType::I32, output: 5 };
    let m = site("x", IntType::I32, vec![1, 2], vec![]);
    let rw = syn_func_call(&m, &callee, &mut RngChooser::new(0)).unwrap();
    assert_eq!(rewrite::render(&rw.code), "x + (int32_t)(k() - 5)");
    assert_eq!(rw.predicted, Predicted::Unchanged);
}

#[test]
fn stable_call_into_narrow_expression_is_cast_back() {
    let callee = CallTarget { name: "k", params: vec![IntType::U8], inputs: vec![200], ret: IntType::I64, output: 10 };
    let m = site("c", IntType::I8, vec![-3], vec![]);
    let mut ch = ScriptedChooser::new(0, |a: Ask<'_>| match a {
        Ask::Pick(Choice::Operator, l) => pick_label(l, "+"),
        _ => None,
    });
    let rw = syn_func_call(&m, &callee, &mut ch).unwrap();
    assert_eq!(rewrite::render(&rw.code), "(int32_t)(k(200) + (-13ll))");
    assert_eq!(rw.predicted, Predicted::Value(-3));
}

#[test]
fn unsigned_callee_cannot_produce_negative_value() {
    let callee = CallTarget { name: "k", params: vec![], inputs: vec![], ret: IntType::U32, output: 4 };
    let m = site("x", IntType::I32, vec![-1], vec![]);
    assert!(matches!(syn_func_call(&m, &callee, &mut RngChooser::new(0)), Err(RewriteError::SkipRewrite(_))));
}

#[test]
fn global_rewrites() {
    let g = GlobalVar { name: "g0".into(), ty: IntType::I32, init: 4 };
    let mut read = ScriptedChooser::new(0, |a: Ask<'_>| match a {
        Ask::Pick(Choice::Operator, l) => pick_label(l, "-"),
        _ => None,
    });
    let m = site("e", IntType::I32, vec![2], vec![]);
    let rw = syn_global(&m, &g, &mut read).unwrap();
    assert_eq!(rewrite::render(&rw.code), "g0 - 2");

    let mut w = site("a", IntType::I32, vec![1], vec![]);
    w.write_at = Some(10);
    let mut write = ScriptedChooser::new(0, |a: Ask<'_>| match a {
        Ask::Flip(Choice::WriteGlobal, ..) => Some(1),
        _ => None,
    });
    let rw = syn_global(&w, &g, &mut write).unwrap();
    assert_eq!(rw.kind, RewriteKind::GlobalWrite);
    assert_eq!(rewrite::render(&rw.code), "g0 = g0 + (a - 1);");

    let u = site("y", IntType::I32, vec![1, 5], vec![]);
    let rw = syn_global(&u, &g, &mut RngChooser::new(0)).unwrap();
    assert_eq!(rewrite::render(&rw.code), "y + (g0 - 4)");

    let wide = GlobalVar { name: "g1".into(), ty: IntType::U64, init: 9 };
    let rw = syn_global(&u, &wide, &mut RngChooser::new(0)).unwrap();
    assert_eq!(rewrite::render(&rw.code), "y + ((int32_t)(g1 - 9ull))");
}

#[test]
fn global_count_and_names() {
    let mut ch = RngChooser::new(3);
    for _ in 0..50 {
        let gs = generate_global_vars(&mut ch, (1, 8));
        assert!((1..=8).contains(&gs.len()));
        for (i, g) in gs.iter().enumerate() {
            assert_eq!(g.name, format!("g{i}"));
            assert!(g.ty.contains(g.init));
        }
    }
}

#[test]
fn config_validation() {
    assert!(SynthesisConfig::default().validate().is_ok());
    let bad = SynthesisConfig { p_synth: 1.5, ..Default::default() };
    assert!(matches!(bad.validate(), Err(SynthError::InvalidConfig(_))));
    let bad = SynthesisConfig { global_count: (3, 2), ..Default::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn matched_expressions_of_seed() {
    let db = database(vec![profiled(fixtures::FUNC2, &[1, 2])]);
    let mut s = Synthesizer::new(&db);
    let m = s.get_matched_exprs(0, 0);
    let got: Vec<(u32, &str, Option<i128>)> = m.iter().map(|m| (m.line, m.text.as_str(), m.stable())).collect();
    assert_eq!(
        got,
        [
            (fixtures::FUNC2_D_LINE, "d", Some(1)),
            (fixtures::FUNC2_E_LINE, "e", Some(2)),
            (fixtures::FUNC2_SC_LINE, "s.c", Some(1)),
            (fixtures::FUNC2_SC_LINE, "r", Some(2)),
        ]
    );
    let names: Vec<&str> = m[0].vars.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(names, ["d", "e"]);
}

#[test]
fn loop_counters_are_not_known_values() {
    let src = "int f(int n) {\n    int s = 0;\n    for (int i = 0; i < n; i++) {\n        s += i + n;\n    }\n    return s;\n}\n";
    let db = database(vec![profiled(src, &[3])]);
    let m = Synthesizer::new(&db).get_matched_exprs(0, 0);
    let body = m.iter().find(|m| m.line == 4 && m.text == "n").unwrap();
    let names: Vec<&str> = body.vars.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(names, ["n"]);
    let i = m.iter().find(|m| m.line == 4 && m.text == "i").unwrap();
    assert_eq!(i.values, [0, 1, 2]);
    assert_eq!(i.stable(), None);
}

/// The walk-through: a call to `func1` replaces `d`, `e` reads `g0`, and
/// `func1` writes `g0` back after its first statement.
fn walkthrough() -> (Database, SynthesizedProgram) {
    let db = database(vec![profiled(fixtures::FUNC1, &[1, 0]), profiled(fixtures::FUNC2, &[1, 2])]);
    let config = SynthesisConfig { iterations: 2, ..Default::default() };
    let mut iteration = 0;
    let mut ch = ScriptedChooser::new(0, move |a: Ask<'_>| match a {
        Ask::Pick(Choice::GlobalCount, l) => pick_label(l, "1"),
        Ask::Pick(Choice::GlobalType, l) => pick_label(l, "int32_t"),
        Ask::Value(_) => Some(4),
        Ask::Pick(Choice::Seed, l) => pick_label(l, "func2"),
        Ask::Pick(Choice::Target, l) => {
            iteration += 1;
            pick_label(l, if iteration == 1 { "func2" } else { "func1" })
        }
        Ask::Flip(Choice::Rewrite, _, s) => Some(s.ends_with("func2:4:d") as i128
            + s.ends_with("func2:6:e") as i128
            + s.ends_with("func1:2:a") as i128),
        Ask::Flip(Choice::UseCall, _, s) => Some(s.ends_with("func2:4:d") as i128),
        Ask::Flip(Choice::WriteGlobal, _, s) => Some((s == "a") as i128),
        Ask::Pick(Choice::Callee, l) => pick_label(l, "func1"),
        Ask::Pick(Choice::Variable, l) if l.len() > 1 => pick_label(l, "e"),
        Ask::Pick(Choice::Operator, l) => pick_label(l, "-"),
        _ => None,
    });
    let p = Synthesizer::new(&db).synthesize_with(&config, &mut ch, None).unwrap();
    (db, p)
}

#[test]
fn walkthrough_program_shape() {
    let (_, p) = walkthrough();
    assert!(p.text.contains("func1(d, e - 2) - 1"), "{}", p.text);
    assert!(p.text.contains("(g0 - 2)"), "{}", p.text);
    assert!(p.text.contains("g0 = g0 + (a - 1);"), "{}", p.text);
    assert!(p.text.contains("int32_t g0 = 4;"));
    assert_eq!(p.replacement_log.len(), 3);
    let func1_def = p.text.find("_func1(int a").unwrap();
    let func2_def = p.text.find("_func2(int d").unwrap();
    assert!(func1_def < func2_def, "callee defined first");
    assert!(p.log_text().lines().next().unwrap().starts_with("R\t"));
}

#[test]
fn walkthrough_checksum_matches_independent_fold() {
    let (_, p) = walkthrough();
    // seed returns 1 + 2, func1(1, 0) returns 2, g0 starts at 4
    let g0 = ((4u64 * 31 + 3) * 31 + 2) as i32 as u64;
    assert_eq!(p.predicted_checksum, fnv_oracle(&[3, 2, g0]));
    for opt in ["-O0", "-O2"] {
        assert_eq!(run_checksum(&p.text, opt), Some(p.predicted_checksum), "{opt}");
    }
}

#[test]
fn walkthrough_audits_clean() {
    let (_, p) = walkthrough();
    let r = audit(&p, &cc(), Duration::from_secs(20)).unwrap();
    assert!(r.clean(), "{r:#?}\n{}", p.audit_text);
    assert!(r.checks >= 5);
}

#[test]
fn audit_catches_a_wrong_prediction() {
    let (_, mut p) = walkthrough();
    p.audit_text = p.audit_text.replacen("__LF_CHECK(0, ", "1 + __LF_CHECK(0, ", 1);
    p.predicted_checksum ^= 1;
    let r = audit(&p, &cc(), Duration::from_secs(20)).unwrap();
    assert!(!r.clean());
    assert_ne!(r.checksum, Some(r.predicted));
}

const POOL: &[&str] = &[
    fixtures::FUNC1,
    fixtures::FUNC2,
    "int tri(int n) {\n    int s = 0;\n    for (int i = 0; i < (n & 7); i++) {\n        s += i;\n    }\n    return s;\n}\n",
    "unsigned int mix(unsigned int a, unsigned int b) {\n    unsigned int h = a * 2654435761u;\n    h ^= b >> 3;\n    return h + (a & 15u);\n}\n",
    "int clampc(char c, short k) {\n    int v = c;\n    if (v > k) {\n        v = k;\n    }\n    return v;\n}\n",
    "long long wide(long long x, int y) {\n    long long acc = x & 1023;\n    while (y > 0 && y < 6) {\n        acc = acc * 3 + y;\n        y--;\n    }\n    return acc;\n}\n",
    "int sumbuf(int *p) {\n    return p[0] + 1;\n}\n",
    "static int table[4] = {3, 1, 4, 1};\nint lookup(int i) {\n    int k = i & 3;\n    int t = table[k];\n    return t * 2 + k;\n}\n",
];

fn pool_db() -> Database {
    database(POOL.iter().map(|s| validated(s)).collect())
}

#[test]
fn same_seed_same_program() {
    let db = pool_db();
    let config = SynthesisConfig { iterations: 30, rng_seed: 11, ..Default::default() };
    let a = synthesize(&db, &config).unwrap();
    let b = synthesize(&db, &config).unwrap();
    assert_eq!(a.text, b.text);
    assert_eq!(a.predicted_checksum, b.predicted_checksum);
    let c = synthesize(&db, &SynthesisConfig { rng_seed: 12, ..config }).unwrap();
    assert!(a.text != c.text || a.predicted_checksum != c.predicted_checksum);
}

#[test]
fn random_programs_audit_clean_and_agree_across_levels() {
    let db = pool_db();
    let mut synth = Synthesizer::new(&db);
    for seed in 0..6 {
        let config = SynthesisConfig { iterations: 25, rng_seed: seed, p_synth: 0.5, ..Default::default() };
        let p = synth.synthesize(&config).unwrap();
        let r = audit(&p, &cc(), Duration::from_secs(30)).unwrap();
        assert!(r.clean(), "seed {seed}: {r:#?}\n{}", p.text);
        for opt in ["-O0", "-O3"] {
            assert_eq!(run_checksum(&p.text, opt), Some(p.predicted_checksum), "seed {seed} {opt}");
        }
    }
}

#[test]
fn cost_budget_limits_call_insertion() {
    let db = pool_db();
    let tight = SynthesisConfig { iterations: 40, rng_seed: 5, p_synth: 1.0, p_call: 1.0, cost_budget: 1, ..Default::default() };
    let p = synthesize(&db, &tight).unwrap();
    assert_eq!(p.functions.len(), 1);
    assert!(p.replacement_log.iter().all(|r| r.kind != RewriteKind::Call));
}

#[test]
fn empty_database_has_no_seed() {
    let db = database(vec![]);
    assert!(matches!(synthesize(&db, &SynthesisConfig::default()), Err(SynthError::Db(DbError::EmptySelection(_)))));
}
