#![no_main]

use libfuzzer_sys::fuzz_target;
use zmc::expr::Expr;

// Parsing arbitrary text may fail, but must never panic, hang, or
// overflow the stack; whatever parses must print, re-parse, evaluate,
// and differentiate without panicking.
fuzz_target!(|input: &str| {
    let Ok(expr) = Expr::parse(input, &["u", "v", "s", "t"]) else {
        return;
    };
    let printed = expr.to_string();
    let reparsed = Expr::parse(&printed, &["u", "v", "s", "t"]).expect("printed form re-parses");
    let point = [0.3, -0.7, 1.1, 0.5];
    let a = expr.eval(&point);
    let b = reparsed.eval(&point);
    if let (Ok(a), Ok(b)) = (a, b) {
        assert!(
            (a - b).abs() <= 1e-9 * a.abs().max(1.0),
            "print/parse changed value: {a} vs {b} for `{printed}`"
        );
    }
    let _ = expr.differentiate("u").eval(&point);
});
