#![no_main]

use libfuzzer_sys::fuzz_target;
use sidewalk_core::trace::{parse_json, to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(record) = parse_json(text) {
        let again = parse_json(&to_json(&record)).expect("written record reparses");
        assert_eq!(again, record);
    }
});
