//! C text for the programs that compile, run and profile a single function.

use std::fmt::Write;

use super::{InputValue, InputVector};
use crate::cfront::types::TypeDesc;
use crate::cfront::SourceUnit;

/// Headers every harness includes ahead of the unit.
const PRELUDE: &str = "#include <stdio.h>\n#include <stdlib.h>\n#include <string.h>\n#include <stdint.h>\n";

/// A C literal for one logged or generated value.
pub(crate) fn c_literal(ty: &TypeDesc, value: &str, bits: Option<&str>) -> String {
    match ty {
        TypeDesc::Int { int } => int.literal(value.parse().expect("decimal input")),
        TypeDesc::Float32 => {
            let b = bits.and_then(|b| u32::from_str_radix(b.trim_start_matches("0x"), 16).ok());
            let v = b.map(f32::from_bits).unwrap_or_else(|| value.parse().expect("float input"));
            format!("{v:e}f")
        }
        TypeDesc::Float64 => {
            let b = bits.and_then(|b| u64::from_str_radix(b.trim_start_matches("0x"), 16).ok());
            let v = b.map(f64::from_bits).unwrap_or_else(|| value.parse().expect("float input"));
            format!("{v:e}")
        }
        other => panic!("no literal for {other}"),
    }
}

/// Declarations materializing pointer arguments, and the call expression.
/// Buffers are named `<prefix><param index>`.
pub(crate) fn call_parts(unit: &SourceUnit, input: &InputVector, prefix: &str) -> (Vec<String>, String) {
    let mut decls = Vec::new();
    let mut args = Vec::new();
    for (i, v) in input.0.iter().enumerate() {
        match v {
            InputValue::Scalar { ty, value, bits } => args.push(c_literal(ty, value, bits.as_deref())),
            InputValue::Buffer { elem, values, bits } => {
                let elem_text = unit.param_pointee_text(i).expect("pointer parameter");
                let items: Vec<String> = values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| c_literal(elem, v, bits.get(k).map(|s| s.as_str())))
                    .collect();
                let name = format!("{prefix}{i}");
                decls.push(format!("{elem_text} {name}[{}] = {{{}}};", values.len(), items.join(", ")));
                args.push(name);
            }
        }
    }
    (decls, format!("{}({})", unit.name(), args.join(", ")))
}

pub(crate) fn syntax_harness(unit: &SourceUnit) -> String {
    format!("{PRELUDE}\n{}\nint main(void) {{\n    return 0;\n}}\n", unit.original_text)
}

fn output_fn(ret: &TypeDesc) -> &'static str {
    match ret {
        TypeDesc::Int { int } if int.signed => "__lf_oi",
        TypeDesc::Int { .. } => "__lf_ou",
        TypeDesc::Float32 => "__lf_of",
        _ => "__lf_od",
    }
}

const OUTPUT_FNS: &str = r#"static void __lf_oi(long long v) { __lf_emit("O\t%lld\n", v); }
static void __lf_ou(unsigned long long v) { __lf_emit("O\t%llu\n", v); }
static void __lf_of(float v) { unsigned int b; memcpy(&b, &v, sizeof b); __lf_emit("O\t0x%08x\n", b); }
static void __lf_od(double v) { unsigned long long b; memcpy(&b, &v, sizeof b); __lf_emit("O\t0x%016llx\n", b); }
"#;

fn switch_cases(out: &mut String, unit: &SourceUnit, inputs: &[InputVector], depth: usize) {
    let pad = "    ".repeat(depth);
    let out_fn = output_fn(&unit.function.ret_ty);
    for (k, input) in inputs.iter().enumerate() {
        let (decls, call) = call_parts(unit, input, "__lf_b");
        writeln!(out, "{pad}case {k}: {{").unwrap();
        for d in decls {
            writeln!(out, "{pad}    {d}").unwrap();
        }
        writeln!(out, "{pad}    {out_fn}({call});").unwrap();
        writeln!(out, "{pad}    break;").unwrap();
        writeln!(out, "{pad}}}").unwrap();
    }
}

/// Calls the function once on the input selected by `argv[1]` and prints the
/// result to stdout.
pub(crate) fn call_harness(unit: &SourceUnit, inputs: &[InputVector]) -> String {
    let mut s = String::from(PRELUDE);
    s.push_str("\n#define __lf_emit printf\n");
    s.push_str(OUTPUT_FNS);
    s.push_str("#undef __lf_emit\n\n");
    s.push_str(&unit.original_text);
    s.push_str("\nint main(int argc, char **argv) {\n    switch (argc > 1 ? atoi(argv[1]) : 0) {\n");
    switch_cases(&mut s, unit, inputs, 1);
    s.push_str("    }\n    return 0;\n}\n");
    s
}

const PROBE_RUNTIME: &str = r#"static FILE *__lf_out;
static long __lf_count;
#define __lf_emit(...) fprintf(__lf_out, __VA_ARGS__)
static void __lf_tick(void) {
    if (++__lf_count > __LF_CAP) {
        fputs("X\n", __lf_out);
        fflush(__lf_out);
        exit(3);
    }
}
static void __lf_pi(int k, int line, unsigned long long h, int s, long long v) { __lf_tick(); __lf_emit("%c\t%d\t%016llx\t%d\t%lld\n", k, line, h, s, v); }
static void __lf_pu(int k, int line, unsigned long long h, int s, unsigned long long v) { __lf_tick(); __lf_emit("%c\t%d\t%016llx\t%d\t%llu\n", k, line, h, s, v); }
static void __lf_pf(int k, int line, unsigned long long h, int s, float v) { unsigned int b; memcpy(&b, &v, sizeof b); __lf_tick(); __lf_emit("%c\t%d\t%016llx\t%d\t0x%08x\n", k, line, h, s, b); }
static void __lf_pd(int k, int line, unsigned long long h, int s, double v) { unsigned long long b; memcpy(&b, &v, sizeof b); __lf_tick(); __lf_emit("%c\t%d\t%016llx\t%d\t0x%016llx\n", k, line, h, s, b); }
"#;

/// Runs the instrumented function twice in-process on the input selected by
/// `argv[1]`, logging to `$LF_PROBE_FILE`.
pub(crate) fn probe_harness(unit: &SourceUnit, instrumented: &str, inputs: &[InputVector]) -> String {
    let mut s = String::from(PRELUDE);
    writeln!(s, "#define __LF_CAP {}", super::RECORD_CAP).unwrap();
    s.push_str(PROBE_RUNTIME);
    s.push_str(OUTPUT_FNS);
    s.push('\n');
    s.push_str(instrumented);
    s.push_str(
        "\nint main(int argc, char **argv) {\n    int __lf_which = argc > 1 ? atoi(argv[1]) : 0;\n    \
         const char *__lf_path = getenv(\"LF_PROBE_FILE\");\n    \
         __lf_out = fopen(__lf_path ? __lf_path : \"/dev/null\", \"w\");\n    \
         if (!__lf_out) {\n        return 2;\n    }\n    \
         for (int __lf_k = 1; __lf_k <= 2; __lf_k++) {\n        __lf_count = 0;\n        \
         __lf_emit(\"M\\t%d\\n\", __lf_k);\n        switch (__lf_which) {\n",
    );
    switch_cases(&mut s, unit, inputs, 2);
    s.push_str("        }\n    }\n    fclose(__lf_out);\n    return 0;\n}\n");
    s
}
