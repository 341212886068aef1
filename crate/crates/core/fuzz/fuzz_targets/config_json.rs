#![no_main]

use libfuzzer_sys::fuzz_target;
use makespan_game::EpsilonConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = EpsilonConfig::from_json(text) {
        assert!(cfg.omega >= 1 && cfg.r_len() > 0);
        let again = EpsilonConfig::from_spec(&cfg.spec()).expect("spec of a config is valid");
        assert_eq!(again.spec(), cfg.spec());
    }
});
