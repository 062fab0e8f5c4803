//! Fixture corpus checks shared by integration tests.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use moments_core::scenario::{parse_scenario, report, run_scenario, Format};
use moments_core::Mode;

/// Sampled pins use this many accepted samples and this seed.
pub const PIN_SAMPLES: usize = 2000;
pub const PIN_SEED: u64 = 11;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// All `.scn` files in the corpus, sorted by name.
pub fn fixtures() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(fixture_dir())
        .expect("fixture directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "scn"))
        .collect();
    files.sort();
    files
}

/// Pinned outputs of one scenario file: `(extension, contents)` pairs.
/// Parse failures pin `line:column kind`; valid files pin the exact JSON
/// report and a sampled JSON report.
pub fn outputs(path: &Path) -> Result<Vec<(&'static str, String)>, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => return Ok(vec![("err", format!("{}:{} {}\n", e.line, e.column, e.kind))]),
    };
    let rendered = scenario.render();
    let again = parse_scenario(&rendered).map_err(|e| format!("rendered text does not reparse: {e}\n{rendered}"))?;
    if again != scenario {
        return Err(format!("round-trip changed the scenario:\n{rendered}"));
    }
    if again.render() != rendered {
        return Err("rendering is not stable".into());
    }
    let exact = run_scenario(&scenario, &Mode::Exact).map_err(|e| e.to_string())?;
    let sampled =
        run_scenario(&scenario, &Mode::Sampled { samples: PIN_SAMPLES, seed: PIN_SEED }).map_err(|e| e.to_string())?;
    Ok(vec![
        ("json", report(&exact, Format::Json).map_err(|e| e.to_string())?),
        ("sampled.json", report(&sampled, Format::Json).map_err(|e| e.to_string())?),
    ])
}

/// Compares one file against its pins, or rewrites the pins when `bless`.
pub fn check(path: &Path, bless: bool) -> Result<(), String> {
    let outs = outputs(path)?;
    for (ext, actual) in outs {
        let pin = path.with_extension(ext);
        if bless {
            fs::write(&pin, &actual).map_err(|e| e.to_string())?;
            continue;
        }
        let expected = fs::read_to_string(&pin).map_err(|e| format!("{}: {e}", pin.display()))?;
        if expected != actual {
            return Err(format!("{} differs:\n--- pinned\n{expected}--- actual\n{actual}", pin.display()));
        }
    }
    Ok(())
}
