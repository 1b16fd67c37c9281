#![no_main]

use hfe::Tolerances;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = std::str::from_utf8(data) else {
        return;
    };
    let mut t = Tolerances::default();
    if t.apply_override(spec).is_ok() {
        assert!(t.rel > 0.0 && t.abs > 0.0 && t.singular > 0.0 && t.track > 0.0);
    }
});
