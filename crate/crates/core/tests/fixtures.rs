//! Fixture corpus: round-trip and pinned outputs. Set `MOMENTS_BLESS=1` to
//! rewrite the pins.

mod support;

use moments_core::scenario::ParseErrorKind;

#[test]
fn corpus_matches_pins() {
    let bless = std::env::var_os("MOMENTS_BLESS").is_some();
    let files = support::fixtures();
    assert!(files.len() >= 12);
    let failures: Vec<String> = files
        .iter()
        .filter_map(|p| support::check(p, bless).err().map(|e| format!("{}: {e}", p.display())))
        .collect();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn corpus_covers_every_directive_and_error_class() {
    let mut text = String::new();
    let mut errors = String::new();
    for p in support::fixtures() {
        match std::fs::read_to_string(p.with_extension("err")) {
            Ok(e) => errors.push_str(&e),
            Err(_) => text.push_str(&std::fs::read_to_string(&p).unwrap()),
        }
    }
    for d in ["system", "prepare", "link", "collapse", "partial", "measure", "meter-diff", "postselect", "bellpost"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(d)), "no fixture uses `{d}`");
    }
    use ParseErrorKind::*;
    for k in [UnknownDirective, UndeclaredSystem, NonUnitary, NonHermitian, Unnormalized, TimeOrdering, Syntax, Invalid] {
        assert!(errors.contains(&format!(" {}\n", k.as_str())), "no fixture raises {k}");
    }
}
