//! Shell-script compilers that wrap the real `cc` and misbehave on cue.

use std::path::{Path, PathBuf};

const HEAD: &str = r#"#!/bin/sh
if [ "$1" = "--version" ]; then echo "fakecc 1.0 (wraps cc)"; exit 0; fi
out=a.out
prev=
for a in "$@"; do
    if [ "$prev" = "-o" ]; then out=$a; fi
    prev=$a
done
ARGS="$*"
has() { case " $ARGS " in *" $1 "*) return 0;; esac; return 1; }
"#;

fn write_script(dir: &Path, name: &str, body: &str) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join(name);
    std::fs::write(&path, format!("{HEAD}{body}")).expect("write fake compiler");
    let mut p = std::fs::metadata(&path).expect("stat fake compiler").permissions();
    p.set_mode(0o755);
    std::fs::set_permissions(&path, p).expect("chmod fake compiler");
    path
}

/// Compiles correctly, except that at `level` (e.g. `-O3`) the binary's
/// checksum line comes out with its last hex digit changed.
pub fn checksum_flipper(dir: &Path, level: &str) -> PathBuf {
    let body = r#"cc "$@" || exit $?
if has LEVEL; then
    mv "$out" "$out.real"
    cat > "$out" <<WRAP
#!/bin/sh
"$out.real" | awk '{ if (\$1 == "checksum") { c = substr(\$3, 16, 1); \$3 = substr(\$3, 1, 15) (c == "0" ? "1" : "0") } print }'
WRAP
    chmod +x "$out"
fi
"#;
    write_script(dir, "flipcc", &body.replace("LEVEL", level))
}

/// Reports an internal compiler error and fails at `level`; otherwise a
/// working compiler.
pub fn ice_at(dir: &Path, level: &str) -> PathBuf {
    let body = r#"if has LEVEL; then
    for a in "$@"; do case $a in *.c) src=$a;; esac; done
    echo "$src: In function 'main':" >&2
    echo "$src:12:1: internal compiler error: in expand_expr_real_1, at expr.c:10234" >&2
    echo "Please submit a full bug report," >&2
    exit 4
fi
exec cc "$@"
"#;
    write_script(dir, "icecc", &body.replace("LEVEL", level))
}

/// Produces binaries that never finish at `level`.
pub fn hang_at(dir: &Path, level: &str) -> PathBuf {
    let body = r#"cc "$@" || exit $?
if has LEVEL; then
    printf '#!/bin/sh\nexec sleep 1000\n' > "$out"
    chmod +x "$out"
fi
"#;
    write_script(dir, "hangcc", &body.replace("LEVEL", level))
}

/// Rejects every program with an ordinary diagnostic.
pub fn rejecting(dir: &Path) -> PathBuf {
    write_script(dir, "rejectcc", "echo \"prog.c:1:1: error: expected ';' before '}' token\" >&2\nexit 1\n")
}
