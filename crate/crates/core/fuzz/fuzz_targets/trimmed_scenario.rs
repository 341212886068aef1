#![no_main]

use libfuzzer_sys::fuzz_target;
use makespan_game::scenario::TrimmedScenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(phi) = serde_json::from_str::<TrimmedScenario>(text) {
        let json = serde_json::to_string(&phi).unwrap();
        assert_eq!(serde_json::from_str::<TrimmedScenario>(&json).unwrap(), phi);
    }
    if let Ok(phi) = text.parse::<TrimmedScenario>() {
        assert_eq!(phi.to_string().parse::<TrimmedScenario>().unwrap(), phi);
    }
});
