//! Extractor throughput at 1, 2 and 4 workers on 256 MiB of input, and
//! the 256-bit key rate it supports.

use vacuum_qrng::pipeline::{run_bench, RunConfig};

fn main() -> vacuum_qrng::Result<()> {
    let mut cfg = RunConfig::with_seed(1);
    cfg.out_dir = std::env::temp_dir().join("vqrng-bench");
    cfg.bench.input_bytes = 256 << 20;
    let b = run_bench(&cfg)?;
    println!("kernel {}, n = {}, m = {}, {} cores", b.kernel, b.n, b.m, b.available_parallelism);
    for (r, s) in b.runs.iter().zip(&b.scaling) {
        println!(
            "{} worker(s): {:.2} Gb/s in, {:.2} Gb/s out, {:.3e} keys/s (×{s:.2})",
            r.workers, r.throughput_gbps, r.output_rate_gbps, r.aes256_keys_per_second
        );
    }
    println!("{:.0} Gb/s -> {:.6e} keys/s", b.reference_rate_bps / 1e9, b.reference_keys_per_second);
    Ok(())
}
