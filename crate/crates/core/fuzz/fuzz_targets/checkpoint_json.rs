#![no_main]

use libfuzzer_sys::fuzz_target;
use orbitsplit::agent::Checkpoint;

fuzz_target!(|data: &[u8]| {
    if let Ok(net) = Checkpoint::decode(data) {
        let arch = net.architecture();
        let q = net.forward(&vec![0.0; arch.input_dim]).expect("decoded network runs");
        assert_eq!(q.len(), arch.output_dim);
    }
});
