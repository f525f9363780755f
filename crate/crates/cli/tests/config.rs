use lcflow::flow::{FlowMode, StopCriterion};
use lcflow::steady::SteadyStateParams;
use lcflow_cli::config::{Check, InitialKind};
use lcflow_cli::{parse_config, ConfigError, RunConfig};
use num_rational::Ratio;
use proptest::prelude::*;

#[test]
fn minimal_config_fills_defaults() {
    let cfg = parse_config("grid.L = 32\ninitial.kind = round\ninitial.c = 1.0").unwrap();
    assert_eq!(cfg.grid.l, 32);
    assert_eq!(cfg.initial.kind, InitialKind::Round);
    let d = RunConfig::default();
    assert_eq!(cfg.flow, d.flow);
    assert_eq!(cfg.verify, d.verify);
    assert_eq!(cfg.grid.oversample, Ratio::from_integer(2));
}

#[test]
fn small_bandlimit_is_rejected() {
    let err = parse_config("grid.L = 2").unwrap_err();
    assert_eq!(err.to_string(), "grid.L must be ≥ 4");
}

#[test]
fn mobius_parameters() {
    let cfg = parse_config("initial.kind = mobius\ninitial.c = 1\ninitial.a = 0,0,0.3").unwrap();
    assert_eq!(cfg.initial.kind, InitialKind::Mobius);
    let p = SteadyStateParams::new(cfg.initial.c, cfg.initial.a).unwrap();
    assert_eq!(p, SteadyStateParams::new(1.0, [0.0, 0.0, 0.3]).unwrap());
}

#[test]
fn every_section_parses() {
    let text = "\
# a full example
grid.L = 24
grid.oversample = 3/2
initial.kind = random
initial.amplitude = 0.05   # small
initial.l0 = 6
flow.mode = normalized
flow.stop = t_final
flow.t_final = 2.5
flow.sigmas = 0, 0.25, 1
flow.record_stride = 4
verify.checks = codazzi, monotonicity
verify.probe = 3, -2
verify.simons = 1e-4
output.directory = runs/a
output.csv = false
output.deterministic = true
seed = 17
";
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.grid.oversample, Ratio::new(3, 2));
    assert_eq!(cfg.initial.l0, 6);
    assert_eq!(cfg.flow.mode, FlowMode::Normalized);
    assert_eq!(cfg.flow.stop, StopCriterion::TFinal);
    assert_eq!(cfg.flow.sigmas, vec![0.0, 0.25, 1.0]);
    assert_eq!(cfg.flow.record_stride, 4);
    assert_eq!(cfg.verify.checks, vec![Check::Codazzi, Check::Monotonicity]);
    assert_eq!(cfg.verify.probe, (3, -2));
    assert_eq!(cfg.verify.tolerances.simons, 1e-4);
    assert_eq!(cfg.output.directory.to_str(), Some("runs/a"));
    assert!(!cfg.output.csv && cfg.output.deterministic);
    assert_eq!(cfg.seed, Some(17));
}

#[test]
fn errors_carry_line_numbers() {
    assert_eq!(
        parse_config("grid.L = 8\n\nfoo.bar = 1").unwrap_err(),
        ConfigError::UnknownKey {
            line: 3,
            key: "foo.bar".into()
        }
    );
    let e = parse_config("grid.L = 8\ngrid.L 9").unwrap_err();
    assert!(matches!(e, ConfigError::Syntax { line: 2, .. }), "{e}");
    let e = parse_config("grid.L = eight").unwrap_err();
    assert!(matches!(e, ConfigError::Syntax { line: 1, .. }), "{e}");
    let e = parse_config("grid.L = 8\ngrid.L = 9").unwrap_err();
    assert_eq!(e.to_string(), "line 2: grid.L already set on line 1");
    let e = parse_config("flow.mode = sideways").unwrap_err();
    assert!(e.to_string().contains("normalized"), "{e}");
    let e = parse_config("initial.a = 1, 2").unwrap_err();
    assert!(matches!(e, ConfigError::Syntax { line: 1, .. }));
    let e = parse_config("verify.checks = codazzi, bogus").unwrap_err();
    assert!(e.to_string().contains("bogus"));
}

#[test]
fn domain_errors_name_the_key() {
    let cases = [
        ("initial.c = -1", "initial.c"),
        ("verify.codazzi = 0", "verify.codazzi"),
        ("output.snapshot_stride = 0", "output.snapshot_stride"),
        ("initial.kind = file", "initial.file"),
        ("initial.kind = file\ninitial.file = /no/such/snapshot.f64", "initial.file"),
        ("flow.rk_tolerance = -1", "flow"),
        ("grid.oversample = 1/2", "grid.oversample"),
        ("verify.probe = 2, 3", "verify.probe"),
    ];
    for (text, key) in cases {
        match parse_config(text) {
            Err(ConfigError::Invalid { key: k, .. }) => assert_eq!(k, key, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

proptest! {
    #[test]
    fn bandlimit_threshold(l in 0usize..200) {
        let r = parse_config(&format!("grid.L = {l}"));
        prop_assert_eq!(r.is_ok(), l >= 4);
    }

    #[test]
    fn comments_and_whitespace_are_ignored(pad in "[ \t]{0,4}", note in "[a-z ]{0,10}") {
        let text = format!("{pad}grid.L{pad}={pad}12{pad}# {note}\n{pad}\n# only a comment\n");
        prop_assert_eq!(parse_config(&text).unwrap().grid.l, 12);
    }
}
