use dispeq_core::channel::{add_awgn, apply_cd, FiberParams, NoiseParams};
use dispeq_core::equalize::{lms_run, EqualizerConfig, EqualizerMode};
use dispeq_core::siggen::{prbs_generate, qpsk_map, upsample_shape, PrbsConfig, PulseShape};

fn main() {
    let params = FiberParams::new(16.0, 1550.0, 60.0).unwrap();
    let n_bits = 131072;
    let bits = prbs_generate(&PrbsConfig::prbs15(0x33), n_bits).unwrap();
    let syms = qpsk_map(&bits).unwrap();
    let tx = upsample_shape(&syms, 2, 28e9, &PulseShape::Nrz).unwrap();
    for &osnr in &[18.0, 30.0] {
        let rx = add_awgn(&apply_cd(&tx, &params), &NoiseParams::new(osnr, 5), 28e9).unwrap();
        let mut cfg = EqualizerConfig::lms(37, 0.1);
        cfg.mode = EqualizerMode::TrainThenDecide { training_symbols: 5000 };
        let trace = lms_run(&rx, &syms, &cfg).unwrap();
        println!("--- osnr {osnr} ---");
        for (i, w) in trace.centered_taps() {
            println!("{i:>4}  |w| {:.5}  re {:+.5}  im {:+.5}", w.norm(), w.re, w.im);
        }
        
        
    }
}
