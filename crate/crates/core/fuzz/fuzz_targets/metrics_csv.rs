#![no_main]

use libfuzzer_sys::fuzz_target;
use orbitsplit::report::parse_episode_csv;

fuzz_target!(|data: &[u8]| {
    let _ = parse_episode_csv(data);
});
