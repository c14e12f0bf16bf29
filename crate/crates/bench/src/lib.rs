// Benchmarks live in benches/; see `cargo bench -p esmm-bench`.
