//! Hand-written C fixtures mirroring the worked examples used throughout the tests.

/// A function cut off mid-body, as produced by a token-limited model response.
pub const FOO1_TRUNCATED: &str = "\
int foo1(int x) {
    int y = x * 2;
    if (y > 10) {
        y = y - 3;
";

/// Reads a one-element global array at an input-controlled index.
pub const FOO2: &str = "\
int g[1] = {1};

int foo2(int a) {
    int b = 0;
    b = g[a] + a;
    return b;
}
";

/// Line of `b = g[a] + a;` and `return b;` in the canonical form of [`FOO2`].
pub const FOO2_ASSIGN_LINE: u32 = 5;
pub const FOO2_RETURN_LINE: u32 = 6;

/// Callee of the synthesis walk-through; `func1(1, 0) == 2`.
pub const FUNC1: &str = "\
int func1(int a, int b) {
    int r = a + 1;
    if (b != 0) {
        r = r * b;
    }
    return r;
}
";

/// Seed of the synthesis walk-through, profiled with input `(1, 2)`.
pub const FUNC2: &str = "\
int func2(int d, int e) {
    struct S {
        int c;
    } s = {d};
    int r;
    r = e;
    return s.c + r;
}
";

/// Lines of the matched expressions in [`FUNC2`]: `d`, `e` and `s.c`.
pub const FUNC2_D_LINE: u32 = 4;
pub const FUNC2_E_LINE: u32 = 6;
pub const FUNC2_SC_LINE: u32 = 7;

/// Indexes a caller-provided buffer; in bounds only when `d < len(c)`.
pub const FASTSOCKET_LIKE: &str = "\
int fs_lookup(int *c, int d) {
    int i;
    int sum = 0;
    for (i = 0; i < d; i++) {
        sum += c[i];
    }
    return sum + c[d];
}
";

/// A real-world style snippet with a record parameter and a helper prototype.
pub const BUF_WRITE_ORIGINAL: &str = "\
typedef struct {
    char *body;
    int nalloc;
    int len;
} Buffer;

static void realloc_body(Buffer *b);

void buf_write(Buffer *b, char c) {
    if (b->nalloc == (b->len + 1))
        realloc_body(b);
    b->body[b->len++] = c;
}
";

/// The numeric, single-function rewrite of [`BUF_WRITE_ORIGINAL`].
pub const BUF_WRITE_TRANSFORMED: &str = "\
#include <stdlib.h>

int buf_write(char c, int len, int nalloc) {
    struct Buffer {
        char *body;
        int nalloc;
        int len;
    };
    struct Buffer b;
    b.body = (char *)malloc(nalloc);
    b.nalloc = nalloc;
    b.len = len;
    if (b.nalloc == (b.len + 1)) {
        int newsize = b.nalloc * 2;
        char *body = (char *)realloc(b.body, newsize);
        b.body = body;
        b.nalloc = newsize;
    }
    b.body[b.len++] = c;
    int result = b.len + b.body[b.len - 1];
    free(b.body);
    return result;
}
";

/// A model response wrapping [`BUF_WRITE_TRANSFORMED`] in one fenced block.
pub fn buf_write_response() -> String {
    format!(
        "The struct is moved into the body and the record parameter is replaced by its numeric fields.\n\n```c\n{BUF_WRITE_TRANSFORMED}```\n"
    )
}
