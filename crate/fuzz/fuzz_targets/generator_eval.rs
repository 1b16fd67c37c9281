#![no_main]

use hfe::scenario::{FrameGenerator, Generator};
use hfe::Tolerances;
use libfuzzer_sys::fuzz_target;

// First byte: dimension; the rest: a generator or frame in JSON.
fuzz_target!(|data: &[u8]| {
    let Some((&d, json)) = data.split_first() else {
        return;
    };
    let dim = 1 + (d as usize) % 4;
    let tol = Tolerances::default();
    let x = [0.3, -1.2];
    if let Ok(g) = serde_json::from_slice::<Generator>(json) {
        let _ = g.eval(dim, &x, &tol);
    }
    if let Ok(f) = serde_json::from_slice::<FrameGenerator>(json) {
        let _ = f.eval(dim, &x, &tol);
    }
});
