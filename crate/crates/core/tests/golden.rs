//! Golden files. Regenerate with `BLESS=1 cargo test --test golden`.

use std::path::PathBuf;

use openbook_core::moves::{conjugate, cyclic_rotate, stabilize, OpenBookDesc, Power};
use openbook_core::scenario::{run_suite, Samples, ScenarioConfig};

fn path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(rel)
}

fn check_golden(rel: &str, actual: &str) {
    let p = path(rel);
    if std::env::var_os("BLESS").is_some() {
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(&p, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    assert_eq!(actual, expected, "golden mismatch in {rel}");
}

#[test]
fn moves_text_output_is_stable() {
    let text = std::fs::read_to_string(path("data/page.obk")).unwrap();
    let d: OpenBookDesc = text.parse().unwrap();
    let s = stabilize(&d, "d0").unwrap();
    let c = conjugate(&s, "b", Power::NEG).unwrap();
    let r = cyclic_rotate(&c);
    let out = format!("{s}---\n{c}---\n{r}");
    check_golden("golden/moves.obk", &out);
}

#[test]
fn small_moves_report_is_stable() {
    let config = ScenarioConfig {
        suite: "moves".into(),
        seed: 11,
        samples: Samples {
            move_chains: 20,
            non_connected: 10,
            ..Samples::default()
        },
        ..ScenarioConfig::default()
    };
    let out = run_suite(&config).unwrap();
    check_golden("golden/moves_report.json", &out.report.to_json());
}

#[test]
fn shipped_config_matches_defaults() {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    assert_eq!(ScenarioConfig::load(&p).unwrap(), ScenarioConfig::default());
}
