use super::*;
use crate::cfront::parse_function;
use crate::toolchain::default_compiler;
use splicefuzz_testkit::fixtures;

fn unit(t: &str) -> SourceUnit {
    parse_function(t).unwrap_or_else(|e| panic!("{e}\n{t}"))
}

fn cc() -> CompilerSpec {
    default_compiler().expect("a C compiler")
}

fn i32_scalar(v: i64) -> InputValue {
    InputValue::Scalar { ty: TypeDesc::int(IntType::I32), value: v.to_string(), bits: None }
}

fn ints(vs: &[i64]) -> InputVector {
    InputVector(vs.iter().map(|&v| i32_scalar(v)).collect())
}

fn values(p: &Profile, line: u32, text: &str, phase: Phase) -> Vec<String> {
    p.observation(line, text, phase).unwrap_or_else(|| panic!("no {phase:?} {text}@{line} in {:#?}", p.observations)).values.clone()
}

fn strs(vs: &[i64]) -> Vec<String> {
    vs.iter().map(|v| v.to_string()).collect()
}

#[test]
fn truncated_function_fails_syntax() {
    let r = validate_source(fixtures::FOO1_TRUNCATED, &cc()).unwrap();
    assert_eq!(r.stage, Stage::Syntax);
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(!r.detail.is_empty());
}

#[test]
fn identity_passes_syntax() {
    assert!(validate_syntax(&unit("int id(int x){return x;}"), &cc()).unwrap().passed());
}

#[test]
fn disallowed_header_is_named() {
    let r = validate_source("#include <stdio.h>\nint f(int x) { return x; }\n", &cc()).unwrap();
    assert!(!r.passed());
    assert!(r.detail.contains("stdio.h"), "{}", r.detail);
}

#[test]
fn maybe_uninitialized_rejected() {
    let t = "int f(int x) { int r; int i; for (i = 0; i < x; i++) { r = i; } return r; }";
    let r = validate_syntax(&unit(t), &cc()).unwrap();
    assert!(!r.passed(), "{r:?}");
    if CompilerSpec::probe("clang").is_ok() {
        let t = "int f(int x) { int r; if (x > 3) { r = 1; } return r; }";
        assert!(!validate_syntax(&unit(t), &cc()).unwrap().passed());
    }
}

#[test]
fn missing_compiler_reported() {
    let bogus = CompilerSpec { name: "nope".into(), path: "/nonexistent/cc".into(), extra_flags: vec![], version: String::new() };
    assert!(matches!(validate_syntax(&unit("int f(int x) { return x; }"), &bogus), Err(ToolError::ToolchainMissing(_))));
}

#[test]
fn inputs_replay_and_vary() {
    let sig = unit("int f(int a) { return a; }").signature();
    assert_eq!(generate_input(&sig, 42, 3), generate_input(&sig, 42, 3));
    let draws: Vec<_> = (2..12).map(|k| generate_input(&sig, 42, k)).collect();
    assert!(draws.windows(2).any(|w| w[0] != w[1]));
    assert_eq!(generate_input(&sig, 42, 0), ints(&[0]));
    assert_eq!(generate_input(&sig, 42, 1), ints(&[1]));
    let empty = unit("int f(void) { return 3; }").signature();
    assert_eq!(generate_input(&empty, 1, 0), InputVector(vec![]));
}

#[test]
fn buffer_lengths_in_range() {
    let sig = unit("int f(int *p, int n) { return p[0] + n; }").signature();
    let mut seen = std::collections::BTreeSet::new();
    for k in 0..1000 {
        let v = generate_input(&sig, 7, k);
        match &v.0[..] {
            [InputValue::Buffer { values, .. }, InputValue::Scalar { .. }] => {
                assert!((1..=8).contains(&values.len()));
                seen.insert(values.len());
            }
            other => panic!("{other:?}"),
        }
    }
    assert_eq!(seen.len(), 8);
}

#[test]
fn scalar_draws_stay_in_type() {
    let sig = unit("int f(unsigned char a, short b, long long c) { return a + b + (int)c; }").signature();
    for k in 0..300 {
        let v = generate_input(&sig, 5, k);
        for (x, t) in v.0.iter().zip(&sig.params) {
            let n = x.as_int().unwrap();
            assert!(t.as_int().unwrap().contains(n), "{n} not in {t}");
        }
    }
}

#[test]
fn overflow_prone_function_inputs() {
    let u = unit(fixtures::FOO2);
    let tools = [Sanitizer::Address, Sanitizer::Undefined];
    let bad = run_sanitized(&u, &ints(&[1]), &tools, &cc(), &Limits::run_default()).unwrap();
    assert_eq!(bad.verdict, Verdict::Fail);
    // the bounds check in the undefined-behavior set fires before ASan
    assert!(bad.detail.contains("index 1 out of bounds"), "{}", bad.detail);
    let asan = run_sanitized(&u, &ints(&[1]), &[Sanitizer::Address], &cc(), &Limits::run_default()).unwrap();
    assert!(asan.detail.contains("global-buffer-overflow"), "{}", asan.detail);
    let good = run_sanitized(&u, &ints(&[0]), &tools, &cc(), &Limits::run_default()).unwrap();
    assert!(good.passed(), "{}", good.detail);
}

#[test]
fn caller_buffer_bounds() {
    let u = unit(fixtures::FASTSOCKET_LIKE);
    let input = |d| {
        InputVector(vec![
            InputValue::Buffer { elem: TypeDesc::int(IntType::I32), values: strs(&[4, 5]), bits: vec![] },
            i32_scalar(d),
        ])
    };
    let tools = [Sanitizer::Address, Sanitizer::Undefined];
    assert!(run_sanitized(&u, &input(1), &tools, &cc(), &Limits::run_default()).unwrap().passed());
    assert!(!run_sanitized(&u, &input(3), &tools, &cc(), &Limits::run_default()).unwrap().passed());
}

#[test]
fn signed_overflow_caught() {
    let u = unit("int f(int x) { return x + 1; }");
    let tools = [Sanitizer::Undefined];
    let r = run_sanitized(&u, &ints(&[i32::MAX as i64]), &tools, &cc(), &Limits::run_default()).unwrap();
    assert!(!r.passed());
    assert!(r.detail.contains("runtime error"), "{}", r.detail);
}

#[test]
fn profile_overflow_prone_function() {
    let u = unit(fixtures::FOO2);
    let p = profile_function(&u, &ints(&[0]), &cc(), &Limits::run_default()).unwrap();
    assert_eq!(p.output, "1");
    assert!(p.idempotent);
    let l5 = fixtures::FOO2_ASSIGN_LINE;
    let l6 = fixtures::FOO2_RETURN_LINE;
    assert_eq!(values(&p, l5, "g[a]", Phase::Pre), strs(&[1]));
    assert_eq!(values(&p, l5, "a", Phase::Pre), strs(&[0, 0]));
    assert_eq!(values(&p, l5, "b", Phase::Post), strs(&[1]));
    assert_eq!(values(&p, l6, "b", Phase::Pre), strs(&[1]));
    assert_eq!(values(&p, 4, "b", Phase::Post), strs(&[0]));
}

#[test]
fn profile_straight_line() {
    let u = unit("int f(int x) { return x; }");
    let p = profile_function(&u, &ints(&[7]), &cc(), &Limits::run_default()).unwrap();
    assert_eq!(p.output, "7");
    assert_eq!(
        p.observations,
        vec![LineObservation { line: 2, expr_text: "x".into(), phase: Phase::Pre, values: strs(&[7]), bits: vec![] }]
    );
    assert!(p.observations[0].is_stable());
}

#[test]
fn loop_counter_is_unstable() {
    let t = "int f(int n) {\n    int s = 0;\n    int i;\n    for (i = 0; i < 3; i++) {\n        s = s + i;\n    }\n    return s + n;\n}\n";
    let u = unit(t);
    let p = profile_function(&u, &ints(&[0]), &cc(), &Limits::run_default()).unwrap();
    assert_eq!(p.output, "3");
    // hand trace: the body sees i = 0, 1, 2; the condition also sees the final 3
    let body = p.observation(5, "i", Phase::Pre).unwrap();
    assert_eq!(body.values, strs(&[0, 1, 2]));
    assert!(!body.is_stable());
    assert_eq!(values(&p, 4, "i", Phase::Pre), strs(&[0, 1, 2, 3]));
    assert_eq!(values(&p, 5, "s", Phase::Post), strs(&[0, 1, 3]));
}

#[test]
fn float_values_keep_bits() {
    let u = unit("double f(double x) { double y = x * 2.0; return y; }");
    let input = InputVector(vec![InputValue::Scalar {
        ty: TypeDesc::Float64,
        value: "1.5e0".into(),
        bits: Some(format!("0x{:016x}", 1.5f64.to_bits())),
    }]);
    let p = profile_function(&u, &input, &cc(), &Limits::run_default()).unwrap();
    assert_eq!(p.output_bits.as_deref(), Some(format!("0x{:016x}", 3.0f64.to_bits()).as_str()));
    let y = p.observation(3, "y", Phase::Pre).unwrap();
    assert_eq!(y.bits, vec![format!("0x{:016x}", 3.0f64.to_bits())]);
    assert_eq!(y.values, vec!["3e0".to_string()]);
}

#[test]
fn static_state_is_not_idempotent() {
    let u = unit("int f(int x) { static int c = 0; c = c + 1; return c + x; }");
    let r = profile_function(&u, &ints(&[0]), &cc(), &Limits::run_default());
    assert!(matches!(r, Err(ProfileError::NotIdempotent)), "{r:?}");
}

#[test]
fn address_dependent_values_are_nondeterministic() {
    let u = unit("int f(int x) { int y = x; long p = (long)&y; long q = p >> 4; return (int)(q & 4095) + y; }");
    let r = profile_function(&u, &ints(&[0]), &cc(), &Limits::run_default());
    assert!(matches!(r, Err(ProfileError::NondeterministicRun)), "{r:?}");
}

#[test]
fn runaway_logging_is_capped() {
    let u = unit("int f(int n) { int s = 0; int i; for (i = 0; i < 100000; i++) { s = s ^ i; } return s + n; }");
    let r = profile_function(&u, &ints(&[0]), &cc(), &Limits::run_default());
    assert!(matches!(r, Err(ProfileError::RecordLimit)), "{r:?}");
}

#[test]
fn validation_retries_then_admits() {
    let u = unit(fixtures::FOO2);
    let v = validate_and_profile(&u, &ProfilerConfig::new(cc())).unwrap();
    assert!(v.syntax.passed());
    let tried: Vec<String> = v.attempts.iter().map(|a| a.input.to_string()).collect();
    assert_eq!(&tried[..2], ["(0)", "(1)"]);
    assert!(v.attempts[0].report.passed());
    assert_eq!(v.attempts[1].report.stage, Stage::Sanitize);
    assert!(!v.attempts[1].report.passed());
    assert_eq!(v.profiles.len(), 1);
    assert_eq!(v.profiles[0].input, ints(&[0]));

    let e = admit_function("snip", &u, v.profiles).unwrap();
    let prefix = format!("lf{}", &e.id[..10]);
    assert!(e.unit.original_text.contains(&format!("{prefix}_g[a]")));
    assert_eq!(e.unit.name(), format!("{prefix}_foo2"));
    assert_eq!(e.profiles.len(), 1);
    let p = &e.profiles[0];
    assert_eq!(values(p, fixtures::FOO2_ASSIGN_LINE, &format!("{prefix}_g[a]"), Phase::Pre), strs(&[1]));
    assert!(p.observation(fixtures::FOO2_ASSIGN_LINE, "g[a]", Phase::Pre).is_none());
}

#[test]
fn three_surviving_inputs_give_three_profiles() {
    let u = unit("int f(int a, int b) { return (a & 255) - (b & 15); }");
    let v = validate_and_profile(&u, &ProfilerConfig::new(cc())).unwrap();
    assert_eq!(v.profiles.len(), 3);
    assert_eq!(v.attempts.len(), 3);
    assert_eq!(admit_function("s", &u, v.profiles).unwrap().profiles.len(), 3);
}

#[test]
fn all_inputs_failing_is_rejected() {
    let u = unit("int f(int a) { int z[2] = {0, 0}; return z[a + 2]; }");
    let v = validate_and_profile(&u, &ProfilerConfig::new(cc())).unwrap();
    assert!(v.profiles.is_empty());
    assert_eq!(v.attempts.len(), 5);
    assert!(admit_function("s", &u, v.profiles).is_err());
}

#[test]
fn pointer_params_profile_with_fresh_buffers() {
    let u = unit("int f(int *p, int n) { p[0] = p[0] + n; return p[0]; }");
    let input = InputVector(vec![
        InputValue::Buffer { elem: TypeDesc::int(IntType::I32), values: strs(&[3, 9]), bits: vec![] },
        i32_scalar(2),
    ]);
    let p = profile_function(&u, &input, &cc(), &Limits::run_default()).unwrap();
    assert_eq!(p.output, "5");
}
