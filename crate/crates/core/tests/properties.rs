mod common;

use std::hash::Hasher;
use std::process::Command;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splicefuzz::cfront::types::IntType;
use splicefuzz::synth::fnv1a_words;
use splicefuzz::synth::rewrite::{massage, solve, OPS};

/// `x op k` computed in the native Rust type matching `w`, or `None` on
/// overflow. Independent of the i128 arithmetic under test.
fn native(op: char, x: i128, k: i128, w: IntType) -> Option<i128> {
    macro_rules! eval {
        ($t:ty) => {{
            let (x, k) = (<$t>::try_from(x).ok()?, <$t>::try_from(k).ok()?);
            match op {
                '+' => x.checked_add(k).map(i128::from),
                '-' => x.checked_sub(k).map(i128::from),
                '^' => Some(i128::from(x ^ k)),
                _ => None,
            }
        }};
    }
    match (w.signed, w.bits) {
        (true, 8) => eval!(i8),
        (true, 16) => eval!(i16),
        (true, 32) => eval!(i32),
        (true, 64) => eval!(i64),
        (false, 8) => eval!(u8),
        (false, 16) => eval!(u16),
        (false, 32) => eval!(u32),
        (false, 64) => eval!(u64),
        _ => unreachable!(),
    }
}

fn in_type() -> impl Strategy<Value = (IntType, i128, i128)> {
    (0..IntType::ALL.len(), any::<u64>(), any::<u64>(), 0u8..3).prop_map(|(i, a, b, mode)| {
        let w = IntType::ALL[i];
        let pick = |r: u64| match mode {
            // values near the edges of the range are the interesting ones
            0 => w.min() + (r % 64) as i128,
            1 => w.max() - (r % 64) as i128,
            _ => w.wrap(r as i128),
        };
        (w, w.wrap(pick(a)), w.wrap(pick(b)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn massage_forms_evaluate_exactly((w, x, target) in in_type()) {
        for (op, k) in massage(x, target, w, &OPS) {
            prop_assert_eq!(native(op, x, k, w), Some(target), "{} {} {} in {}", x, op, k, w);
        }
    }

    #[test]
    fn solve_finds_every_native_solution((w, x, target) in in_type()) {
        for op in OPS {
            let k = match op { '+' => target - x, '-' => x - target, _ => x ^ target };
            let exists = native(op, x, k, w) == Some(target);
            prop_assert_eq!(solve(op, x, target, w).is_some(), exists, "{} {} -> {} in {}", x, op, target, w);
        }
        // xor never leaves the range of its operands' type
        prop_assert!(solve('^', x, target, w).is_some());
    }

    #[test]
    fn checksum_hash_is_fnv1a(words in proptest::collection::vec(any::<u64>(), 0..20)) {
        let mut h = fnv::FnvHasher::default();
        for w in &words {
            h.write(&w.to_le_bytes());
        }
        prop_assert_eq!(fnv1a_words(&words), h.finish());
    }

    #[test]
    fn wrap_matches_native_cast(v in any::<i64>(), i in 0..IntType::ALL.len()) {
        let w = IntType::ALL[i];
        let expect = match (w.signed, w.bits) {
            (true, 8) => v as i8 as i128,
            (true, 16) => v as i16 as i128,
            (true, 32) => v as i32 as i128,
            (true, 64) => v as i128,
            (false, 8) => v as u8 as i128,
            (false, 16) => v as u16 as i128,
            (false, 32) => v as u32 as i128,
            _ => v as u64 as i128,
        };
        prop_assert_eq!(w.wrap(v as i128), expect);
    }
}

/// Literals must have exactly the promoted width, signedness and value; the
/// C compiler decides all three. `long` and `long long` are both the 64-bit
/// type here, so either spelling is accepted.
#[test]
fn literals_have_the_promoted_type_and_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checks = String::new();
    let mut expected = Vec::new();
    for w in IntType::ALL {
        let t = w.promote();
        let mut values = vec![t.min(), t.max(), 0, -1, 1];
        values.extend((0..30).map(|_| t.wrap(rng.random::<i64>() as i128)));
        for v in values.into_iter().filter(|&v| t.contains(v)) {
            let lit = w.literal(v);
            let types = match (t.signed, t.bits) {
                (true, 32) => "int: 1",
                (false, 32) => "unsigned int: 1",
                (true, _) => "long: 1, long long: 1",
                (false, _) => "unsigned long: 1, unsigned long long: 1",
            };
            let fmt = if t.signed { "%lld" } else { "%llu" };
            let cast = if t.signed { "long long" } else { "unsigned long long" };
            checks.push_str(&format!(
                "    _Static_assert(_Generic(({lit}), {types}, default: 0), \"type of {lit}\");\n    printf(\"{fmt}\\n\", ({cast})({lit}));\n"
            ));
            expected.push(v.to_string());
        }
    }
    let src = format!("#include <stdio.h>\nint main(void) {{\n{checks}    return 0;\n}}\n");
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("lit.c"), src).unwrap();
    let built = common::cc().command().args(["-std=c11", "-Werror", "lit.c", "-o", "lit"]).current_dir(dir.path()).output().unwrap();
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));
    let ran = Command::new(dir.path().join("lit")).output().unwrap();
    assert!(ran.status.success());
    let printed: Vec<String> = String::from_utf8(ran.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(printed, expected);
    assert!(expected.len() > 200);
}
