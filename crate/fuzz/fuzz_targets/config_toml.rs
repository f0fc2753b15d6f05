#![no_main]

use libfuzzer_sys::fuzz_target;
use sidewalk_core::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::parse(text) {
        // anything accepted must survive the effective-config round trip
        let eff = cfg.effective().expect("accepted config resolves");
        let again = RunConfig::parse(&eff.to_toml().expect("serializes")).expect("reparses");
        assert_eq!(again, eff);
    }
});
