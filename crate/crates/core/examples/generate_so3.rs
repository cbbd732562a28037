//! Generates a synthetic SO(3) instance and writes it in the binary problem format.
//!
//! `cargo run --example generate_so3 -- 100 0.02 5 /tmp/so3.bin`

use bm_admm::io::binary::{read_problem, write_problem};
use bm_admm::io::so3::generate_so3;
use std::path::PathBuf;

fn main() -> bm_admm::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let q = args.first().and_then(|s| s.parse().ok()).unwrap_or(100);
    let s = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.02);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5);
    let out = args.get(3).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("so3.bin"));

    let inst = generate_so3(q, s, seed)?;
    write_problem(&out, &inst.cost, 3)?;
    let (back, d) = read_problem(&out)?;
    println!("wrote {} (n={}, d={d}, nnz={}, populated pairs={})", out.display(), back.n(), back.nnz(), inst.populated_pairs);
    println!("round trip identical: {}", back == inst.cost);
    Ok(())
}
