#![no_main]

use libfuzzer_sys::fuzz_target;
use makespan_game::protocol::{read_message, Message};

fuzz_target!(|data: &[u8]| {
    let mut cursor = std::io::Cursor::new(data);
    while let Ok(Some(msg)) = read_message(&mut cursor) {
        assert_eq!(Message::parse_line(&msg.to_line()).unwrap(), msg);
    }
});
