//! Run individual acceptance criteria by 1-based index:
//! `cargo run --release --example criterion -- 6 7 8`.
//! With no arguments the full suite runs in order.

use tdse_core::acceptance;

fn main() {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("criterion index 1..=13"))
        .collect();
    let list: Vec<usize> = if args.is_empty() { (1..=13).collect() } else { args };
    let mut all = true;
    for i in list {
        let start = std::time::Instant::now();
        let o = acceptance::run_criterion(i);
        all &= o.passed;
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "[{status}] {:>2} {:<28} ({:.1} s)",
            o.index,
            o.name,
            start.elapsed().as_secs_f64()
        );
        for (k, v) in &o.metrics {
            println!("         {k} = {v:.6e}");
        }
        if !o.notes.is_empty() {
            println!("         note: {}", o.notes);
        }
    }
    std::process::exit(if all { 0 } else { 1 });
}
