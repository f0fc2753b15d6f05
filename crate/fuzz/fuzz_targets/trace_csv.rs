#![no_main]

use libfuzzer_sys::fuzz_target;
use sidewalk_core::trace::{parse_csv, replay_metrics, to_csv_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_csv(text) {
        let again = parse_csv(&to_csv_string(&rows)).expect("written trace reparses");
        assert_eq!(again, rows);
        let full = replay_metrics(&rows, None, 0.2);
        let half = replay_metrics(&rows, Some(rows.len() / 2), 0.2);
        if full.passing_step.is_none() {
            assert!(half.switch_counts[0] <= full.switch_counts[0]);
            assert!(half.switch_counts[1] <= full.switch_counts[1]);
        }
    }
});
