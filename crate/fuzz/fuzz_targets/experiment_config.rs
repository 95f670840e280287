#![no_main]

use libfuzzer_sys::fuzz_target;
use sake_pks_cli::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = toml::from_str::<ExperimentConfig>(text) else { return };
    // Anything that deserializes must survive the derived accessors without
    // panicking; semantic problems come back as ordinary errors. Mask specs
    // are built but not generated, so hostile dims cost validation only.
    let _ = cfg.validate();
    let _ = cfg.target();
    let _ = cfg.build_phantom_spec();
    let _ = cfg.solver.build(4);
    for m in &cfg.masks {
        let _ = m.build(64, 64, 0);
    }
    for v in &cfg.variants {
        let _ = v.label();
        let _ = v.auxiliaries();
    }
});
