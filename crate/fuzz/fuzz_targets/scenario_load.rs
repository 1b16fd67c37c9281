#![no_main]

use hfe::{scenario, Tolerances};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(sc) = scenario::parse(text) {
        // Sampling sizes are bounded so a single input stays fast.
        if sc.n <= 4 && sc.nerve.points.len() <= 256 {
            let _ = scenario::load(sc, Tolerances::default());
        }
    }
});
