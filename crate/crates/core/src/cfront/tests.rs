use super::*;
use splicefuzz_testkit::fixtures;

fn parse(t: &str) -> SourceUnit {
    parse_function(t).unwrap_or_else(|e| panic!("{e}\n{t}"))
}

fn basic(unit: &SourceUnit) -> Vec<(String, u32, ExprContext)> {
    enumerate_basic_exprs(unit)
        .into_iter()
        .map(|(e, c)| (unit.text_of(e.span).to_string(), e.span.line, c))
        .collect()
}

#[test]
fn minimal_function() {
    let u = parse("int id(int x){return x;}");
    assert_eq!(u.function.name, "id");
    assert_eq!(u.function.param_tys, vec![TypeDesc::int(IntType::I32)]);
    assert_eq!(u.function.ret_ty, TypeDesc::int(IntType::I32));
    assert_eq!(u.original_text, "int id(int x) {\n    return x;\n}\n");
}

#[test]
fn truncated_body_is_syntax_error() {
    match parse_function(fixtures::FOO1_TRUNCATED) {
        Err(ParseError::Syntax { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn record_defined_inside_body() {
    let u = parse(fixtures::BUF_WRITE_TRANSFORMED);
    assert_eq!(u.function.name, "buf_write");
    assert!(u.sema.records.contains_key("Buffer"));
    assert!(u.sema.file_tags.is_empty());
    assert!(matches!(u.function.body.items[0].kind, StmtKind::Decl(_)));
}

#[test]
fn unsupported_constructs() {
    let cases = [
        ("int f(int n, ...) { return n; }", "variadic"),
        ("int f(int x) { asm(\"nop\"); return x; }", "asm"),
        ("int f(int x) { l: x++; goto l; }", "label"),
        ("#define N 3\nint f(int x) { return x; }", "#define"),
        ("union U { int a; };\nint f(int x) { return x; }", "union"),
        ("int f(int n) { int a[n]; a[0] = 1; return a[0]; }", "variable-length"),
        ("int g(int);\nint f(int x) { return x; }", "prototype"),
    ];
    for (src, what) in cases {
        match parse_function(src) {
            Err(ParseError::Unsupported { construct, .. }) => {
                assert!(construct.contains(what), "{src}: {construct}")
            }
            other => panic!("{src}: {other:?}"),
        }
    }
}

#[test]
fn function_count_is_checked() {
    let two = "int f(int x) { return x; }\nint g(int y) { return y; }";
    assert_eq!(parse_function(two).unwrap_err(), ParseError::NotSingleFunction { count: 2 });
    assert_eq!(parse_function("int x;").unwrap_err(), ParseError::NotSingleFunction { count: 0 });
}

#[test]
fn undeclared_identifier_rejected() {
    assert!(matches!(
        parse_function("int f(int x) { return y; }"),
        Err(ParseError::Syntax { .. })
    ));
    assert!(matches!(
        parse_function("int f(int x) { return printf(\"%d\", x); }"),
        Err(ParseError::Syntax { .. })
    ));
}

#[test]
fn print_is_idempotent_on_fixtures() {
    for src in [
        fixtures::FOO2,
        fixtures::FUNC1,
        fixtures::FUNC2,
        fixtures::FASTSOCKET_LIKE,
        fixtures::BUF_WRITE_TRANSFORMED,
        "int f(unsigned char *p, long n) { int s = 0; do { s ^= p[n - 1] << 2; } while (--n > 0); \
         switch (s & 3) { case 0: s++; break; default: s = -s; } return s ? s : - -n; }",
    ] {
        let a = parse(src);
        let once = print_unit(&a);
        assert_eq!(once, a.original_text);
        let b = parse(&once);
        assert_eq!(print_unit(&b), once);
    }
}

#[test]
fn empty_body_layout() {
    let u = parse("void f(void){}");
    assert_eq!(u.original_text, "void f(void) {\n}\n");
}

#[test]
fn else_if_chain_and_bracing() {
    let u = parse("int f(int x){ if (x) x = 1; else if (x > 2) x = 2; else x = 3; return x; }");
    let want = "int f(int x) {\n    if (x) {\n        x = 1;\n    } else if (x > 2) {\n        x = 2;\n    } else {\n        x = 3;\n    }\n    return x;\n}\n";
    assert_eq!(u.original_text, want);
}

#[test]
fn spans_match_printed_exprs() {
    for src in [fixtures::FUNC2, fixtures::BUF_WRITE_TRANSFORMED, fixtures::FASTSOCKET_LIKE] {
        let u = parse(src);
        let lines: Vec<&str> = u.original_text.lines().collect();
        u.function.body.visit(&mut |s| {
            for e in s.own_exprs() {
                e.visit(&mut |x| {
                    assert_eq!(u.text_of(x.span), printer::print_expr(x));
                    assert!(lines[x.span.line as usize - 1].contains(u.text_of(x.span)));
                });
            }
        });
    }
}

#[test]
fn func2_matched_candidates() {
    let u = parse(fixtures::FUNC2);
    let got = basic(&u);
    assert!(got.contains(&("d".into(), fixtures::FUNC2_D_LINE, ExprContext::Rvalue)));
    assert!(got.contains(&("e".into(), fixtures::FUNC2_E_LINE, ExprContext::Rvalue)));
    assert!(got.contains(&("s.c".into(), fixtures::FUNC2_SC_LINE, ExprContext::Rvalue)));
    assert!(got.contains(&("s".into(), fixtures::FUNC2_SC_LINE, ExprContext::Designator)));
    assert!(got.contains(&("r".into(), fixtures::FUNC2_E_LINE, ExprContext::LvalueTarget)));
}

#[test]
fn contexts() {
    let u = parse("int f(int *p, int *a, int i) { int x; x = 1; return *p + a[i] + (int)sizeof(x) + *&x; }");
    let got = basic(&u);
    let want: Vec<(String, u32, ExprContext)> = [
        ("x", 3, ExprContext::LvalueTarget),
        ("*p", 4, ExprContext::Rvalue),
        ("p", 4, ExprContext::Rvalue),
        ("a[i]", 4, ExprContext::Rvalue),
        ("a", 4, ExprContext::Rvalue),
        ("i", 4, ExprContext::Rvalue),
        ("x", 4, ExprContext::SizeofOperand),
        ("*&x", 4, ExprContext::Rvalue),
        ("x", 4, ExprContext::AddressOfOperand),
    ]
    .into_iter()
    .map(|(a, b, c)| (a.to_string(), b, c))
    .collect();
    assert_eq!(got, want);
}

#[test]
fn library_constants_are_not_variables() {
    let u = parse("#include <stdint.h>\nint f(int x) { return x < INT32_MAX ? x : 0; }");
    let names: Vec<String> = basic(&u).into_iter().map(|b| b.0).collect();
    assert_eq!(names, ["x", "x"]);
}

#[test]
fn rename_foo2() {
    let u = parse(fixtures::FOO2);
    let r = rename_globals(&u, "fn7");
    assert_eq!(r.function.name, "fn7_foo2");
    let globals: Vec<&str> = r
        .sema
        .symbols
        .iter()
        .filter(|s| s.kind == SymKind::Global)
        .map(|s| s.name.as_str())
        .collect();
    assert_eq!(globals, ["fn7_g"]);
    assert!(r.original_text.contains("b = fn7_g[a] + a;"));
    // renaming keeps the layout and therefore node ids and lines
    assert_eq!(r.line_count(), u.line_count());
    assert_eq!(r.function.next_id, u.function.next_id);
}

#[test]
fn rename_only_function() {
    let u = parse("int id(int x){return x;}");
    let r = rename_globals(&u, "p");
    assert_eq!(r.original_text, "int p_id(int x) {\n    return x;\n}\n");
}

#[test]
fn rename_types_and_recursion_keep_locals() {
    let src = "#include <stdlib.h>\ntypedef int T;\nstruct N { struct N *next; T v; };\nT n = 3;\n\
               int f(int k) { struct N a; T n = k; a.v = n; a.next = NULL; \
               if (k > 0) { return f(k - 1) + a.v + (int)sizeof(struct N); } return abs(n); }";
    let r = rename_globals(&parse(src), "q");
    let t = &r.original_text;
    assert!(t.contains("typedef int q_T;"), "{t}");
    assert!(t.contains("struct q_N {\n    struct q_N *next;\n    q_T v;\n};"), "{t}");
    assert!(t.contains("q_T q_n = 3;"), "{t}");
    assert!(t.contains("q_T n = k;"), "{t}");
    assert!(t.contains("return q_f(k - 1) + a.v + (int)sizeof(struct q_N);"), "{t}");
    assert!(t.contains("return abs(n);"), "{t}");
    assert!(t.contains("a.next = NULL;"), "{t}");
}

#[test]
fn literal_types() {
    use typeck::int_literal_type as t;
    assert_eq!(t("1", 1), Some(IntType::I32));
    assert_eq!(t("2147483648", 2147483648), Some(IntType::I64));
    assert_eq!(t("0x80000000", 0x8000_0000), Some(IntType::U32));
    assert_eq!(t("1u", 1), Some(IntType::U32));
    assert_eq!(t("1ull", 1), Some(IntType::U64));
    assert_eq!(t("18446744073709551615", u64::MAX as u128), None);
}

#[test]
fn expression_types() {
    let u = parse(
        "int f(unsigned char c, long l, unsigned u) { return (c + c) + (int)(l + u) + (int)(u + 1) + (c << 1); }",
    );
    let mut tys = vec![];
    u.function.body.visit(&mut |s| {
        for e in s.own_exprs() {
            e.visit(&mut |x| {
                if let ExprKind::Binary { .. } = x.kind {
                    tys.push((u.text_of(x.span).to_string(), x.ty.clone()));
                }
            });
        }
    });
    let find = |s: &str| tys.iter().find(|(t, _)| t == s).unwrap().1.clone();
    assert_eq!(find("c + c"), TypeDesc::int(IntType::I32));
    assert_eq!(find("l + u"), TypeDesc::int(IntType::I64));
    assert_eq!(find("u + 1"), TypeDesc::int(IntType::U32));
    assert_eq!(find("c << 1"), TypeDesc::int(IntType::I32));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn arb_expr() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            Just("a".to_string()),
            Just("b".to_string()),
            Just("p[1]".to_string()),
            (0u32..1000).prop_map(|v| v.to_string()),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), prop::sample::select(vec!["+", "-", "*", "^", "<<", "&&", "<", "=="]), inner.clone())
                    .prop_map(|(l, o, r)| format!("{l} {o} {r}")),
                inner.clone().prop_map(|e| format!("({e})")),
                inner.clone().prop_map(|e| format!("-{e}")),
                inner.clone().prop_map(|e| format!("~{e}")),
                (inner.clone(), inner.clone(), inner).prop_map(|(c, t, e)| format!("{c} ? {t} : {e}")),
            ]
        })
    }

    proptest! {
        #[test]
        fn round_trip_fixed_point(e in arb_expr(), f in arb_expr()) {
            let src = format!("int f(int a, int b, int *p) {{ int x = {e}; if ({f}) {{ x += {e}; }} return x; }}");
            let u = parse_function(&src).unwrap();
            let printed = print_unit(&u);
            prop_assert_eq!(&printed, &u.original_text);
            let again = parse_function(&printed).unwrap();
            prop_assert_eq!(print_unit(&again), printed);
        }
    }
}
