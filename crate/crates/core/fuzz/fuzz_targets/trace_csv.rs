#![no_main]

use libfuzzer_sys::fuzz_target;
use orbitsplit::traffic::parse_trace;

fuzz_target!(|data: &[u8]| {
    if let Ok(trace) = parse_trace(data) {
        for s in &trace {
            assert!(s.lambda_ru_mbps.is_finite() && s.lambda_ru_mbps >= 0.0);
        }
        assert!(trace.windows(2).all(|w| w[0].step < w[1].step));
    }
});
