#![no_main]

use libfuzzer_sys::fuzz_target;
use makespan_game::cache::CacheFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = CacheFile::parse(text) {
        let json = file.to_json().unwrap();
        assert_eq!(CacheFile::parse(&json).unwrap(), file);
    }
});
