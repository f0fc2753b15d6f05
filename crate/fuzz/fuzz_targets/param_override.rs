#![no_main]

use libfuzzer_sys::fuzz_target;
use sidewalk_core::ModelParams;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let mut p = ModelParams::default();
    if p.apply_override(text).is_ok() {
        p.validate().expect("accepted override leaves valid parameters");
    }
});
